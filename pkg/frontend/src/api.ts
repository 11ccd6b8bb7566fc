// Typed client for the staging service's /v1 JSON API. Every number the UI
// displays is echoed from these payloads; nothing photometric is computed
// client-side.

export interface ComponentInfo {
  category: string;
  width_m: number;
  depth_m: number;
  height_m: number;
  material_slots: string[];
}

export interface SceneInfo {
  revision: number;
  layout: {
    corners_m: [number, number][];
    height_m: number;
    kitchen_walls: number[];
  };
  components: Record<string, ComponentInfo>;
  sequence: string[];
  policy: string;
  material_keys: string[];
  panoramas: string[];
  orientation_deg: number;
}

export interface PlanEntry {
  component: string;
  wall: number;
  offset_m: number;
  theta_z_rad: number;
  t_x_m: number;
  t_y_m: number;
  width_scale: number;
}

export interface Plan {
  policy: string;
  entries: PlanEntry[];
}

export interface PreviewRequest {
  yaw: number;
  pitch: number;
  fov: number;
  width: number;
  height: number;
  spp: number;
  seed: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `${resp.status}`;
  try {
    const doc = await resp.json();
    if (doc && typeof doc.error === "string") message = doc.error;
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(resp.status, message);
}

export class StagingApi {
  constructor(private base: string = "/v1") {}

  panoUrl(id: string): string {
    return `${this.base}/pano/${encodeURIComponent(id)}`;
  }

  async getScene(): Promise<SceneInfo> {
    const resp = await fetch(`${this.base}/scene`);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as SceneInfo;
  }

  /** Returns both the parsed plan and the raw bytes (for parity checks). */
  async postPlan(sequence: string[], policy: string): Promise<{ plan: Plan; raw: string }> {
    const resp = await fetch(`${this.base}/plan`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ sequence, policy }),
    });
    if (!resp.ok) throw await parseError(resp);
    const raw = await resp.text();
    return { plan: JSON.parse(raw) as Plan, raw };
  }

  async postMaterial(
    slot: string,
    albedo: [number, number, number] | null,
    texture?: string,
    specular?: number,
  ): Promise<number> {
    const body: Record<string, unknown> = { slot };
    if (albedo) body.albedo = albedo;
    if (texture !== undefined) body.texture = texture;
    if (specular !== undefined) body.specular = specular;
    const resp = await fetch(`${this.base}/material`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await parseError(resp);
    const doc = await resp.json();
    return doc.revision as number;
  }

  /** Resolves to a PNG blob; 202 responses are polled until the job lands. */
  async postPreview(req: PreviewRequest, signal?: AbortSignal): Promise<Blob> {
    const resp = await fetch(`${this.base}/preview`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
    if (resp.status === 202) {
      const { job_id } = await resp.json();
      return this.pollJob(job_id as string, signal);
    }
    if (!resp.ok) throw await parseError(resp);
    return resp.blob();
  }

  private async pollJob(jobId: string, signal?: AbortSignal): Promise<Blob> {
    for (;;) {
      const resp = await fetch(`${this.base}/job/${jobId}`, { signal });
      if (resp.status === 200) return resp.blob();
      if (resp.status !== 202) throw await parseError(resp);
      await new Promise((r) => setTimeout(r, 250));
      signal?.throwIfAborted();
    }
  }
}
