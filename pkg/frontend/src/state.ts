// Session state: the sequence being edited, corner policy, material picks,
// and the current view. Invariants enforced here, before anything is POSTed:
// the sequence only draws from loaded components, and albedos sit in [0, 1].

import { clampFov, clampPitch, wrapYaw, ViewParams } from "./gnomonic.js";

export type Albedo = [number, number, number];

export interface SessionSnapshot {
  sequence: string[];
  policy: string;
  materials: Record<string, Albedo>;
  view: ViewParams;
  revision: number;
}

export function validAlbedo(value: unknown): value is Albedo {
  return (
    Array.isArray(value) &&
    value.length === 3 &&
    value.every((c) => typeof c === "number" && Number.isFinite(c) && c >= 0 && c <= 1)
  );
}

/** #rrggbb -> linear-ish [0,1] triple (display picks are sRGB bytes). */
export function hexToAlbedo(hex: string): Albedo | null {
  const m = /^#?([0-9a-fA-F]{6})$/.exec(hex);
  if (!m) return null;
  const n = parseInt(m[1], 16);
  return [((n >> 16) & 255) / 255, ((n >> 8) & 255) / 255, (n & 255) / 255];
}

export function reorder<T>(items: readonly T[], from: number, to: number): T[] {
  const out = items.slice();
  if (from < 0 || from >= out.length || to < 0 || to >= out.length) return out;
  const [moved] = out.splice(from, 1);
  out.splice(to, 0, moved);
  return out;
}

export class SessionState {
  sequence: string[] = [];
  policy = "scale-last";
  materials: Record<string, Albedo> = {};
  view: ViewParams = { yawDeg: 0, pitchDeg: 0, fovDeg: 90 };
  revision = 0;
  lastPreviewId: string | null = null;

  constructor(private loadedComponents: ReadonlySet<string>) {}

  static fromComponents(names: Iterable<string>): SessionState {
    return new SessionState(new Set(names));
  }

  /** Replace the sequence; every name must be a loaded component. */
  setSequence(names: string[]): void {
    const unknown = names.filter((n) => !this.loadedComponents.has(n));
    if (unknown.length) {
      throw new Error(`unknown components in sequence: ${unknown.join(", ")}`);
    }
    this.sequence = names.slice();
    this.revision++;
  }

  moveItem(from: number, to: number): void {
    this.sequence = reorder(this.sequence, from, to);
    this.revision++;
  }

  setPolicy(policy: string): void {
    this.policy = policy;
    this.revision++;
  }

  /** Validates client-side; invalid albedos never reach the network. */
  setMaterial(slot: string, albedo: Albedo): boolean {
    if (!validAlbedo(albedo)) return false;
    const prev = this.materials[slot];
    if (prev && prev[0] === albedo[0] && prev[1] === albedo[1] && prev[2] === albedo[2]) {
      return true; // identity change: state (and any replayed POST) unchanged
    }
    this.materials[slot] = albedo;
    this.revision++;
    return true;
  }

  setView(view: Partial<ViewParams>): void {
    this.view = {
      yawDeg: wrapYaw(view.yawDeg ?? this.view.yawDeg),
      pitchDeg: clampPitch(view.pitchDeg ?? this.view.pitchDeg),
      fovDeg: clampFov(view.fovDeg ?? this.view.fovDeg),
    };
  }

  snapshot(): SessionSnapshot {
    return {
      sequence: this.sequence.slice(),
      policy: this.policy,
      materials: { ...this.materials },
      view: { ...this.view },
      revision: this.revision,
    };
  }
}
