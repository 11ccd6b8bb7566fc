// Wires the staging UI: panorama viewport, sequence editor with top-down
// plan overlay, material picker, and before/after preview panes.

import { StagingApi, ApiError, Plan, SceneInfo } from "./api.js";
import { SingleFlight } from "./inflight.js";
import { drawOverlay } from "./planOverlay.js";
import { SessionState, hexToAlbedo } from "./state.js";
import { PanoramaViewer } from "./viewer.js";

const api = new StagingApi("/v1");
const previewFlight = new SingleFlight();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showError(message: string | null): void {
  const banner = el<HTMLDivElement>("errorBanner");
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

async function requestPreview(state: SessionState): Promise<void> {
  const img = el<HTMLImageElement>("previewAfter");
  const spinner = el<HTMLSpanElement>("previewStatus");
  spinner.textContent = "rendering…";
  const blob = await previewFlight.run((signal) =>
    api.postPreview(
      {
        yaw: state.view.yawDeg,
        pitch: state.view.pitchDeg,
        fov: state.view.fovDeg,
        width: 320,
        height: 200,
        spp: 8,
        seed: 0,
      },
      signal,
    ),
  );
  if (blob === null) return; // superseded by a newer request
  const before = el<HTMLImageElement>("previewBefore");
  if (img.src) {
    before.src = img.src; // previous render becomes the "before" pane
  }
  const old = img.src;
  img.src = URL.createObjectURL(blob);
  if (old.startsWith("blob:") && before.src !== old) URL.revokeObjectURL(old);
  state.lastPreviewId = img.src;
  spinner.textContent = "";
}

async function refreshPlan(
  state: SessionState,
  scene: SceneInfo,
  overlay: HTMLCanvasElement,
): Promise<Plan | null> {
  if (!state.sequence.length) {
    drawOverlay(overlay.getContext("2d")!, scene, null);
    return null;
  }
  try {
    const { plan } = await api.postPlan(state.sequence, state.policy);
    showError(null);
    drawOverlay(overlay.getContext("2d")!, scene, plan);
    const table = el<HTMLTableSectionElement>("planRows");
    table.textContent = "";
    for (const entry of plan.entries) {
      const row = table.insertRow();
      // displayed value is the payload value, verbatim
      row.insertCell().textContent = entry.component;
      row.insertCell().textContent = String(entry.wall);
      row.insertCell().textContent = entry.offset_m.toFixed(3);
      row.insertCell().textContent = entry.width_scale.toFixed(3);
    }
    return plan;
  } catch (err) {
    if (err instanceof ApiError) {
      showError(err.message); // e.g. an overflow plan
      return null;
    }
    throw err;
  }
}

async function boot(): Promise<void> {
  const scene = await api.getScene();
  const state = SessionState.fromComponents(Object.keys(scene.components));
  state.setSequence(scene.sequence.length ? scene.sequence : Object.keys(scene.components));
  state.setPolicy(scene.policy);

  // panorama viewport
  const viewer = new PanoramaViewer(
    el<HTMLCanvasElement>("viewport"),
    state,
    () => void requestPreview(state),
  );
  const panoSelect = el<HTMLSelectElement>("panoSelect");
  for (const id of scene.panoramas) {
    const opt = document.createElement("option");
    opt.value = id;
    opt.textContent = id;
    panoSelect.appendChild(opt);
  }
  panoSelect.addEventListener("change", () => void viewer.load(api.panoUrl(panoSelect.value)));
  if (scene.panoramas.length) {
    panoSelect.value = scene.panoramas[0];
    await viewer.load(api.panoUrl(panoSelect.value));
  }

  // sequence editing
  const overlay = el<HTMLCanvasElement>("planCanvas");
  const { SequenceEditor } = await import("./sequence.js");
  const editor = new SequenceEditor(el<HTMLUListElement>("sequenceList"), (seq) => {
    state.setSequence(seq);
    void refreshPlan(state, scene, overlay).then(() => requestPreview(state));
  });
  editor.setItems(state.sequence);
  el<HTMLSelectElement>("policySelect").addEventListener("change", (e) => {
    state.setPolicy((e.target as HTMLSelectElement).value);
    void refreshPlan(state, scene, overlay).then(() => requestPreview(state));
  });
  await refreshPlan(state, scene, overlay);

  // materials
  const slotSelect = el<HTMLSelectElement>("slotSelect");
  for (const key of scene.material_keys) {
    const opt = document.createElement("option");
    opt.value = key;
    opt.textContent = key;
    slotSelect.appendChild(opt);
  }
  el<HTMLInputElement>("albedoPicker").addEventListener("change", async (e) => {
    const albedo = hexToAlbedo((e.target as HTMLInputElement).value);
    if (!albedo || !state.setMaterial(slotSelect.value, albedo)) {
      showError("albedo must be three channels in [0, 1]");
      return; // rejected client-side; nothing is POSTed
    }
    showError(null);
    await api.postMaterial(slotSelect.value, albedo);
    await requestPreview(state);
  });
  el<HTMLInputElement>("textureName").addEventListener("change", async (e) => {
    const texture = (e.target as HTMLInputElement).value.trim();
    if (!texture) return;
    showError(null);
    await api.postMaterial(slotSelect.value, null, texture);
    await requestPreview(state);
  });

  await requestPreview(state);
}

boot().catch((err) => showError(String(err)));
