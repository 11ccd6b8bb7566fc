// Canvas panorama viewer: drag to look around, wheel to zoom, all
// reprojection done client-side on the tone-mapped PNG.

import { PixelSource, renderViewport, ViewParams } from "./gnomonic.js";
import { SessionState } from "./state.js";

export class PanoramaViewer {
  private source: PixelSource | null = null;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;
  private needsRender = false;

  constructor(
    private canvas: HTMLCanvasElement,
    private state: SessionState,
    private onViewChanged: (view: ViewParams) => void = () => {},
  ) {
    canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const degPerPx = this.state.view.fovDeg / canvas.width;
      this.state.setView({
        yawDeg: this.state.view.yawDeg - (e.clientX - this.lastX) * degPerPx,
        pitchDeg: this.state.view.pitchDeg + (e.clientY - this.lastY) * degPerPx,
      });
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      this.scheduleRender();
    });
    canvas.addEventListener("pointerup", () => {
      if (!this.dragging) return;
      this.dragging = false;
      this.onViewChanged(this.state.view);
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.state.setView({ fovDeg: this.state.view.fovDeg * (e.deltaY > 0 ? 1.1 : 0.9) });
      this.scheduleRender();
      this.onViewChanged(this.state.view);
    });
  }

  async load(url: string): Promise<void> {
    const img = new Image();
    img.decoding = "async";
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error(`failed to load ${url}`));
      img.src = url;
    });
    const off = document.createElement("canvas");
    off.width = img.naturalWidth;
    off.height = img.naturalHeight;
    const ctx = off.getContext("2d")!;
    ctx.drawImage(img, 0, 0);
    const data = ctx.getImageData(0, 0, off.width, off.height);
    this.source = { width: data.width, height: data.height, data: data.data };
    this.render();
  }

  private scheduleRender(): void {
    if (this.needsRender) return;
    this.needsRender = true;
    requestAnimationFrame(() => {
      this.needsRender = false;
      this.render();
    });
  }

  render(): void {
    if (!this.source) return;
    const ctx = this.canvas.getContext("2d")!;
    const buf = renderViewport(this.source, this.state.view, this.canvas.width, this.canvas.height);
    const imageData = ctx.createImageData(this.canvas.width, this.canvas.height);
    imageData.data.set(buf);
    ctx.putImageData(imageData, 0, 0);
  }
}
