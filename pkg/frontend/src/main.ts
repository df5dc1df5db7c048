/** Page wiring: sketch canvas + mesh viewer + session panel. */

import { ApiClient, CameraParams } from "./api.js";
import { SketchCanvas } from "./canvas.js";
import { parseObj } from "./objparse.js";
import { SessionPanel, tracePolyline } from "./session.js";
import { MeshViewer } from "./viewer.js";

const RESOLUTION = 256;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function currentCamera(viewer: MeshViewer): CameraParams {
  const { azimuthDeg, elevationDeg } = viewer.orbit.state;
  return {
    azimuth_deg: azimuthDeg,
    elevation_deg: elevationDeg,
    distance: 3.0,
    focal_px: 1.2 * RESOLUTION,
    width: RESOLUTION,
    height: RESOLUTION,
  };
}

async function boot() {
  const api = new ApiClient("");
  const panel = new SessionPanel(api);
  const sketch = new SketchCanvas(el<HTMLCanvasElement>("sketch"), RESOLUTION, RESOLUTION);
  const viewer = new MeshViewer(el<HTMLCanvasElement>("viewer"));
  const status = el<HTMLDivElement>("status");
  const lossCanvas = el<HTMLCanvasElement>("loss");
  const azLabel = el<HTMLSpanElement>("azel");

  viewer.setOrbitListener((s) => {
    azLabel.textContent = `az ${s.azimuthDeg.toFixed(1)}  el ${s.elevationDeg.toFixed(1)}`;
  });

  const { templates } = await api.listTemplates();
  const select = el<HTMLSelectElement>("template");
  for (const t of templates) {
    const option = document.createElement("option");
    option.value = t;
    option.textContent = t;
    select.appendChild(option);
  }

  async function refreshMesh() {
    const snap = panel.snapshot();
    if (!snap.sessionId) return;
    const obj = await api.fetchMeshObj(snap.sessionId);
    viewer.setMesh(parseObj(obj));
  }

  panel.subscribe((snap) => {
    const running = snap.phase === "running";
    el<HTMLButtonElement>("reconstruct").disabled = running || snap.phase === "no-session";
    el<HTMLButtonElement>("edit").disabled = running || snap.phase === "no-session";
    el<HTMLButtonElement>("undo").disabled = running || snap.historyDepth === 0;
    status.textContent = snap.lastError
      ? `error: ${snap.lastError}`
      : running
        ? `optimizing... step ${snap.trace.length ? snap.trace[snap.trace.length - 1].step : 0}`
        : snap.sessionId
          ? `session ${snap.sessionId} (history ${snap.historyDepth})`
          : "create a session to begin";
    if (snap.lastLocality !== null) {
      status.textContent += `  | far-region |dN| ${snap.lastLocality.toFixed(4)}`;
    }
    const ctx = lossCanvas.getContext("2d")!;
    ctx.clearRect(0, 0, lossCanvas.width, lossCanvas.height);
    ctx.strokeStyle = "#7fb2d9";
    ctx.beginPath();
    for (const [x, y] of tracePolyline(snap.trace)) {
      ctx.lineTo(x * lossCanvas.width, y * lossCanvas.height);
    }
    ctx.stroke();
  });

  el<HTMLButtonElement>("create").addEventListener("click", async () => {
    await panel.createSession(select.value, currentCamera(viewer));
    await refreshMesh(); // empty session shows the template shape
  });

  el<HTMLButtonElement>("reconstruct").addEventListener("click", async () => {
    if (sketch.raster.isEmpty()) return;
    const objective = el<HTMLSelectElement>("objective").value as "chamfer" | "silhouette";
    await panel.reconstruct({ sketch_png: sketch.exportPngBase64(), objective });
    await refreshMesh();
  });

  el<HTMLButtonElement>("edit").addEventListener("click", async () => {
    if (sketch.raster.isEmpty()) return;
    // the stroke always travels with the camera it was drawn over
    await panel.edit({ stroke_png: sketch.exportPngBase64(), camera: currentCamera(viewer) });
    await refreshMesh();
  });

  el<HTMLButtonElement>("undo").addEventListener("click", async () => {
    await panel.undo();
    await refreshMesh();
  });
  el<HTMLButtonElement>("stroke-undo").addEventListener("click", () => sketch.undo());
  el<HTMLButtonElement>("stroke-clear").addEventListener("click", () => sketch.clear());
  el<HTMLInputElement>("pen").addEventListener("input", (e) => {
    sketch.penSize = Number((e.target as HTMLInputElement).value);
  });

  el<HTMLButtonElement>("ghost").addEventListener("click", async () => {
    // overlay the current projected silhouette so the gap being optimized
    // is visible while drawing
    const snap = panel.snapshot();
    if (!snap.sessionId) return;
    const { azimuthDeg, elevationDeg } = viewer.orbit.state;
    const url = api.renderUrl(snap.sessionId, azimuthDeg, elevationDeg, "mask");
    const img = new Image();
    img.onload = () => {
      const off = document.createElement("canvas");
      off.width = RESOLUTION;
      off.height = RESOLUTION;
      const ctx = off.getContext("2d")!;
      ctx.drawImage(img, 0, 0);
      const data = ctx.getImageData(0, 0, RESOLUTION, RESOLUTION).data;
      const overlay = new Uint8Array(RESOLUTION * RESOLUTION).fill(1);
      for (let i = 0; i < overlay.length; i++) {
        if (data[i * 4] >= 128) overlay[i] = 0;
      }
      sketch.setOverlay(overlay);
    };
    img.src = url;
  });
}

boot().catch((e) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to boot: ${e}`;
});
