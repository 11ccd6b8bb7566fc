// Client-side gnomonic reprojection of an equirectangular panorama.
//
// The math mirrors the server exactly: rows span zenith angle (top row looks
// straight up), columns span azimuth with the image center on the front
// axis; the viewport center ray is the (yaw, pitch) direction. The server
// remains the single source of truth for anything photometric; this module
// only moves already-tone-mapped display pixels.

export interface ViewParams {
  yawDeg: number;
  pitchDeg: number;
  fovDeg: number; // horizontal field of view, (0, 180)
}

export interface PixelSource {
  width: number;
  height: number;
  data: Uint8ClampedArray; // RGBA rows, top to bottom
}

export const FOV_MIN = 20;
export const FOV_MAX = 140;

export function clampFov(fovDeg: number): number {
  return Math.min(FOV_MAX, Math.max(FOV_MIN, fovDeg));
}

export function wrapYaw(yawDeg: number): number {
  const y = yawDeg % 360;
  return y < 0 ? y + 360 : y;
}

export function clampPitch(pitchDeg: number): number {
  return Math.min(90, Math.max(-90, pitchDeg));
}

const DEG = Math.PI / 180;

/** Continuous equirect coords of a direction; (w/2, h/2) is the front horizon. */
export function dirToPixel(theta: number, phi: number, w: number, h: number): [number, number] {
  const twoPi = 2 * Math.PI;
  let x = (w / 2 + (phi / twoPi) * w) % w;
  if (x < 0) x += w;
  const y = (theta / Math.PI) * h;
  return [x, y];
}

export function pixelToDir(x: number, y: number, w: number, h: number): [number, number] {
  const twoPi = 2 * Math.PI;
  const theta = (y / h) * Math.PI;
  let phi = (((x - w / 2) / w) * twoPi) % twoPi;
  if (phi < 0) phi += twoPi;
  return [theta, phi];
}

interface Basis {
  forward: [number, number, number];
  right: [number, number, number];
  up: [number, number, number];
}

function viewBasis(view: ViewParams): Basis {
  const phiC = view.yawDeg * DEG;
  const thetaC = Math.PI / 2 - view.pitchDeg * DEG;
  const st = Math.sin(thetaC);
  const ct = Math.cos(thetaC);
  const cp = Math.cos(phiC);
  const sp = Math.sin(phiC);
  return {
    forward: [st * cp, st * sp, ct],
    right: [-sp, cp, 0],
    up: [-ct * cp, -ct * sp, st],
  };
}

/**
 * Source-panorama pixel sampled by the exact viewport center ray. The center
 * ray is (yaw, pitch) by construction, so this is dirToPixel of that
 * direction; exposed for the cross-implementation parity check against the
 * server's perspective extraction.
 */
export function centerSourcePixel(view: ViewParams, panoW: number, panoH: number): [number, number] {
  const theta = Math.PI / 2 - view.pitchDeg * DEG;
  let phi = (view.yawDeg * DEG) % (2 * Math.PI);
  if (phi < 0) phi += 2 * Math.PI;
  return dirToPixel(theta, phi, panoW, panoH);
}

/** Bilinear sample with azimuthal wraparound; returns RGBA. */
function sampleWrapped(src: PixelSource, x: number, y: number, out: Uint8ClampedArray, o: number): void {
  const w = src.width;
  const h = src.height;
  const u = x - 0.5;
  let v = y - 0.5;
  if (v < 0) v = 0;
  if (v > h - 1) v = h - 1;
  const u0 = Math.floor(u);
  const v0 = Math.floor(v);
  const fu = u - u0;
  const fv = v - v0;
  const u0m = ((u0 % w) + w) % w;
  const u1m = (u0m + 1) % w;
  const v1m = Math.min(v0 + 1, h - 1);
  const i00 = (v0 * w + u0m) * 4;
  const i01 = (v0 * w + u1m) * 4;
  const i10 = (v1m * w + u0m) * 4;
  const i11 = (v1m * w + u1m) * 4;
  const d = src.data;
  for (let c = 0; c < 3; c++) {
    const top = d[i00 + c] * (1 - fu) + d[i01 + c] * fu;
    const bot = d[i10 + c] * (1 - fu) + d[i11 + c] * fu;
    out[o + c] = top * (1 - fv) + bot * fv;
  }
  out[o + 3] = 255;
}

/**
 * Render the viewport into an RGBA buffer (row-major, top to bottom). Pure
 * function of the source pixels and view, so it is testable off-DOM; the
 * viewer wraps it in ImageData for the canvas.
 */
export function renderViewport(
  src: PixelSource,
  view: ViewParams,
  outW: number,
  outH: number,
): Uint8ClampedArray {
  const out = new Uint8ClampedArray(outW * outH * 4);
  const { forward, right, up } = viewBasis(view);
  const f = outW / 2 / Math.tan((view.fovDeg * DEG) / 2);
  for (let i = 0; i < outH; i++) {
    const b = (outH / 2 - (i + 0.5)) / f;
    for (let j = 0; j < outW; j++) {
      const a = (j + 0.5 - outW / 2) / f;
      const dx = forward[0] + a * right[0] + b * up[0];
      const dy = forward[1] + a * right[1] + b * up[1];
      const dz = forward[2] + a * right[2] + b * up[2];
      const norm = Math.sqrt(dx * dx + dy * dy + dz * dz);
      const theta = Math.acos(Math.min(1, Math.max(-1, dz / norm)));
      const phi = Math.atan2(dy, dx);
      const [x, y] = dirToPixel(theta, phi, src.width, src.height);
      sampleWrapped(src, x, y, out, (i * outW + j) * 4);
    }
  }
  return out;
}
