// Top-down plan view. Rectangles are derived purely from the server's plan
// payload (offsets, transforms) and the layout polygon; the UI adds no
// geometry of its own, so what is displayed always equals the payload.

import type { Plan, PlanEntry, SceneInfo } from "./api.js";

export interface OverlayRect {
  label: string;
  corners: [number, number][]; // world meters, CCW
  offset: number;              // echoed straight from the payload
  widthScale: number;
}

export function footprintOf(entry: PlanEntry, widthM: number, depthM: number): [number, number][] {
  const w = (widthM * entry.width_scale) / 2;
  const local: [number, number][] = [
    [-w, 0],
    [w, 0],
    [w, depthM],
    [-w, depthM],
  ];
  const c = Math.cos(entry.theta_z_rad);
  const s = Math.sin(entry.theta_z_rad);
  return local.map(([x, y]) => [
    c * x - s * y + entry.t_x_m,
    s * x + c * y + entry.t_y_m,
  ]);
}

export function overlayRects(plan: Plan, scene: SceneInfo): OverlayRect[] {
  return plan.entries.map((entry) => {
    const info = scene.components[entry.component];
    return {
      label: entry.component,
      corners: footprintOf(entry, info.width_m, info.depth_m),
      offset: entry.offset_m,
      widthScale: entry.width_scale,
    };
  });
}

export interface OverlayTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit the floor polygon into a canvas, y up. */
export function fitTransform(
  corners: [number, number][],
  canvasW: number,
  canvasH: number,
  margin = 20,
): OverlayTransform {
  const xs = corners.map((c) => c[0]);
  const ys = corners.map((c) => c[1]);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const scale = Math.min(
    (canvasW - 2 * margin) / Math.max(1e-9, maxX - minX),
    (canvasH - 2 * margin) / Math.max(1e-9, maxY - minY),
  );
  return { scale, offsetX: margin - minX * scale, offsetY: margin - minY * scale };
}

export function toCanvas(p: [number, number], t: OverlayTransform, canvasH: number): [number, number] {
  return [p[0] * t.scale + t.offsetX, canvasH - (p[1] * t.scale + t.offsetY)];
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  scene: SceneInfo,
  plan: Plan | null,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const corners = scene.layout.corners_m;
  const t = fitTransform(corners, width, height);

  ctx.strokeStyle = "#888";
  ctx.lineWidth = 2;
  ctx.beginPath();
  corners.forEach((c, i) => {
    const [x, y] = toCanvas(c, t, height);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.closePath();
  ctx.stroke();

  ctx.strokeStyle = "#d33";
  ctx.lineWidth = 4;
  for (const wi of scene.layout.kitchen_walls) {
    const a = toCanvas(corners[wi], t, height);
    const b = toCanvas(corners[(wi + 1) % corners.length], t, height);
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }

  if (!plan) return;
  ctx.font = "11px system-ui, sans-serif";
  for (const rect of overlayRects(plan, scene)) {
    ctx.fillStyle = "rgba(70, 130, 200, 0.5)";
    ctx.strokeStyle = "#246";
    ctx.lineWidth = 1;
    ctx.beginPath();
    rect.corners.forEach((c, i) => {
      const [x, y] = toCanvas(c, t, height);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
    const center = toCanvas(
      [
        rect.corners.reduce((s, c) => s + c[0], 0) / 4,
        rect.corners.reduce((s, c) => s + c[1], 0) / 4,
      ],
      t,
      height,
    );
    ctx.fillStyle = "#123";
    ctx.fillText(`${rect.label} @${rect.offset.toFixed(2)}m`, center[0] - 20, center[1]);
  }
}
