/**
 * Editor wiring: canvas annotation (polygon / brush regions, guide lines),
 * saliency-based auto proposals, the ratio slider, job submission, and the
 * result / density / mesh overlay view. All server interaction goes through
 * api.ts; all mask geometry through mask.ts so uploads are pixel-exact.
 */

import { FetchJobApi, fetchSaliency } from "./api.js";
import { JobController, type ControllerState, type JobStatusBody } from "./jobs.js";
import {
  createMask,
  fillPolygon,
  strokeBrush,
  stampBrush,
  maskArea,
  type MaskGrid,
  type Point,
} from "./mask.js";
import { encodeGrayPng } from "./png.js";
import { thresholdRois } from "./threshold.js";
import {
  buildSpec,
  clampRatio,
  polylinesDocument,
  validateAnnotations,
  type Polyline,
} from "./validate.js";

type Tool = "polygon" | "brush" | "line";
type Overlay = "result" | "density" | "mesh";

interface EditorState {
  imageBytes: Uint8Array | null;
  image: HTMLImageElement | null;
  width: number;
  height: number;
  masks: MaskGrid[];
  activeBrush: MaskGrid | null;
  polygonDraft: Point[];
  lineDraft: Point[];
  polylines: Polyline[];
  tool: Tool;
  brushRadius: number;
  ratio: number;
  fraction: number;
  serverAuto: boolean;
  overlay: Overlay;
}

const state: EditorState = {
  imageBytes: null,
  image: null,
  width: 0,
  height: 0,
  masks: [],
  activeBrush: null,
  polygonDraft: [],
  lineDraft: [],
  polylines: [],
  tool: "polygon",
  brushRadius: 12,
  ratio: 1.0,
  fraction: 0.25,
  serverAuto: false,
  overlay: "result",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const sourceCanvas = el<HTMLCanvasElement>("source-canvas");
const overlayCanvas = el<HTMLCanvasElement>("overlay-canvas");
const colorbarCanvas = el<HTMLCanvasElement>("colorbar");
const saliencyImg = el<HTMLImageElement>("saliency-preview");
const statusLine = el<HTMLElement>("status-line");
const errorBanner = el<HTMLElement>("error-banner");
const errorText = el<HTMLElement>("error-text");
const validationBox = el<HTMLElement>("validation");
const diagnosticsBox = el<HTMLElement>("diagnostics");
const historyBody = el<HTMLTableSectionElement>("history-body");
const runButton = el<HTMLButtonElement>("run");
const retryButton = el<HTMLButtonElement>("retry");
const ratioSlider = el<HTMLInputElement>("ratio");
const ratioValue = el<HTMLElement>("ratio-value");

const api = new FetchJobApi();
const controller = new JobController(api, onJobUpdate);

// last completed job body, kept for overlay re-rendering on mode switch
let lastDone: JobStatusBody | null = null;
const overlayImages: { result: HTMLImageElement | null; density: HTMLImageElement | null } = {
  result: null,
  density: null,
};

// ---------------------------------------------------------------- image load

el<HTMLInputElement>("file").addEventListener("change", async (ev) => {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  const bytes = new Uint8Array(await file.arrayBuffer());
  const img = new Image();
  img.onload = () => {
    state.imageBytes = bytes;
    state.image = img;
    state.width = img.naturalWidth;
    state.height = img.naturalHeight;
    state.masks = [];
    state.polylines = [];
    state.activeBrush = null;
    state.polygonDraft = [];
    state.lineDraft = [];
    lastDone = null;
    sourceCanvas.width = state.width;
    sourceCanvas.height = state.height;
    saliencyImg.removeAttribute("src");
    redrawSource();
    refreshValidation();
    setStatus(`loaded ${state.width}x${state.height}`);
  };
  img.onerror = () => setStatus("could not decode that file as an image");
  img.src = URL.createObjectURL(file);
});

// ---------------------------------------------------------------- annotation

function canvasPoint(ev: MouseEvent): Point {
  const rect = sourceCanvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * state.width;
  const y = ((ev.clientY - rect.top) / rect.height) * state.height;
  return [Math.max(0, Math.min(state.width, x)), Math.max(0, Math.min(state.height, y))];
}

let dragging = false;
let lastDrag: Point | null = null;

sourceCanvas.addEventListener("mousedown", (ev) => {
  if (!state.image) return;
  const p = canvasPoint(ev);
  if (state.tool === "brush") {
    dragging = true;
    if (!state.activeBrush) state.activeBrush = createMask(state.width, state.height);
    stampBrush(state.activeBrush, p[0], p[1], state.brushRadius);
    lastDrag = p;
    redrawSource();
  }
});

sourceCanvas.addEventListener("mousemove", (ev) => {
  if (state.tool === "brush" && dragging && state.activeBrush && lastDrag) {
    const p = canvasPoint(ev);
    strokeBrush(state.activeBrush, lastDrag[0], lastDrag[1], p[0], p[1], state.brushRadius);
    lastDrag = p;
    redrawSource();
  }
});

window.addEventListener("mouseup", () => {
  dragging = false;
  lastDrag = null;
});

sourceCanvas.addEventListener("click", (ev) => {
  if (!state.image || state.tool === "brush") return;
  const p = canvasPoint(ev);
  if (state.tool === "polygon") state.polygonDraft.push(p);
  else state.lineDraft.push(p);
  redrawSource();
});

sourceCanvas.addEventListener("dblclick", (ev) => {
  ev.preventDefault();
  finishShape();
});

window.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") finishShape();
  if (ev.key === "Escape") {
    state.polygonDraft = [];
    state.lineDraft = [];
    redrawSource();
  }
});

function finishShape(): void {
  if (state.tool === "polygon" && state.polygonDraft.length >= 3) {
    const mask = createMask(state.width, state.height);
    fillPolygon(mask, state.polygonDraft);
    if (maskArea(mask) > 0) state.masks.push(mask);
    state.polygonDraft = [];
  } else if (state.tool === "line" && state.lineDraft.length >= 2) {
    state.polylines.push({ points: state.lineDraft.map((p) => [p[0], p[1]] as Point) });
    state.lineDraft = [];
  } else if (state.tool === "brush" && state.activeBrush && maskArea(state.activeBrush) > 0) {
    state.masks.push(state.activeBrush);
    state.activeBrush = null;
  }
  redrawSource();
  refreshValidation();
}

el<HTMLButtonElement>("finish-shape").addEventListener("click", finishShape);

el<HTMLButtonElement>("clear-annotations").addEventListener("click", () => {
  state.masks = [];
  state.polylines = [];
  state.activeBrush = null;
  state.polygonDraft = [];
  state.lineDraft = [];
  redrawSource();
  refreshValidation();
});

for (const tool of ["polygon", "brush", "line"] as Tool[]) {
  el<HTMLInputElement>(`tool-${tool}`).addEventListener("change", () => {
    state.tool = tool;
  });
}

el<HTMLInputElement>("brush-radius").addEventListener("input", (ev) => {
  state.brushRadius = Number((ev.target as HTMLInputElement).value);
});

// ------------------------------------------------------------- auto proposal

el<HTMLButtonElement>("auto-detect").addEventListener("click", async () => {
  if (!state.imageBytes) return;
  setStatus("computing saliency...");
  try {
    const png = await fetchSaliency(state.imageBytes);
    const url = URL.createObjectURL(new Blob([new Uint8Array(png)], { type: "image/png" }));
    const scores = await scoresFromPng(url);
    saliencyImg.src = url;
    const proposals = thresholdRois(scores, state.width, state.height, state.fraction);
    state.masks = proposals.map((flat) => {
      const mask = createMask(state.width, state.height);
      for (let i = 0; i < flat.length; i++) mask.data[i] = flat[i] ? 255 : 0;
      return mask;
    });
    redrawSource();
    refreshValidation();
    setStatus(
      proposals.length
        ? `proposed ${proposals.length} region${proposals.length > 1 ? "s" : ""}`
        : "no region stood out; draw one or lower the fraction",
    );
  } catch (err) {
    setStatus(String(err));
  }
});

function scoresFromPng(url: string): Promise<Uint8Array> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => {
      const work = document.createElement("canvas");
      work.width = img.naturalWidth;
      work.height = img.naturalHeight;
      const ctx = work.getContext("2d")!;
      ctx.drawImage(img, 0, 0);
      const data = ctx.getImageData(0, 0, work.width, work.height).data;
      const scores = new Uint8Array(work.width * work.height);
      for (let i = 0; i < scores.length; i++) scores[i] = data[i * 4]; // grayscale: r = g = b
      resolve(scores);
    };
    img.onerror = () => reject(new Error("could not decode the saliency image"));
    img.src = url;
  });
}

el<HTMLInputElement>("fraction").addEventListener("change", (ev) => {
  const v = Number((ev.target as HTMLInputElement).value);
  if (v > 0 && v < 1) state.fraction = v;
});

el<HTMLInputElement>("server-auto").addEventListener("change", (ev) => {
  state.serverAuto = (ev.target as HTMLInputElement).checked;
  refreshValidation();
});

// ------------------------------------------------------------------- drawing

function redrawSource(): void {
  const ctx = sourceCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, sourceCanvas.width, sourceCanvas.height);
  if (!state.image) return;
  ctx.drawImage(state.image, 0, 0);

  const paintMask = (mask: MaskGrid, rgba: [number, number, number, number]) => {
    const im = ctx.getImageData(0, 0, state.width, state.height);
    const px = im.data;
    const [r, g, b, a] = rgba;
    for (let i = 0; i < mask.data.length; i++) {
      if (mask.data[i] >= 128) {
        const o = i * 4;
        px[o] = (px[o] * (255 - a) + r * a) / 255;
        px[o + 1] = (px[o + 1] * (255 - a) + g * a) / 255;
        px[o + 2] = (px[o + 2] * (255 - a) + b * a) / 255;
      }
    }
    ctx.putImageData(im, 0, 0);
  };
  for (const mask of state.masks) paintMask(mask, [230, 60, 60, 110]);
  if (state.activeBrush) paintMask(state.activeBrush, [250, 150, 40, 110]);

  const strokePath = (pts: Point[], color: string, close: boolean) => {
    if (pts.length === 0) return;
    ctx.strokeStyle = color;
    ctx.lineWidth = Math.max(1.5, state.width / 400);
    ctx.beginPath();
    ctx.moveTo(pts[0][0], pts[0][1]);
    for (const [x, y] of pts.slice(1)) ctx.lineTo(x, y);
    if (close) ctx.closePath();
    ctx.stroke();
    ctx.fillStyle = color;
    for (const [x, y] of pts) {
      ctx.beginPath();
      ctx.arc(x, y, Math.max(2, state.width / 300), 0, 2 * Math.PI);
      ctx.fill();
    }
  };
  for (const line of state.polylines) strokePath(line.points, "#3b6ef6", false);
  strokePath(state.lineDraft, "#7ea0ff", false);
  strokePath(state.polygonDraft, "#ff9c3b", false);
}

function drawOverlay(): void {
  const body = lastDone;
  const ctx = overlayCanvas.getContext("2d")!;
  if (!body || !body.diagnostics) {
    ctx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
    return;
  }
  const w = body.diagnostics.output_width;
  const h = body.diagnostics.output_height;
  overlayCanvas.width = w;
  overlayCanvas.height = h;
  ctx.clearRect(0, 0, w, h);
  const base = state.overlay === "density" ? overlayImages.density : overlayImages.result;
  if (base) ctx.drawImage(base, 0, 0);
  if (state.overlay === "mesh" && body.mesh) {
    const { positions, triangles, roles } = body.mesh;
    ctx.strokeStyle = "rgba(40, 220, 140, 0.85)";
    ctx.lineWidth = 1;
    for (const [i, j, k] of triangles) {
      ctx.beginPath();
      ctx.moveTo(positions[i][0], positions[i][1]);
      ctx.lineTo(positions[j][0], positions[j][1]);
      ctx.lineTo(positions[k][0], positions[k][1]);
      ctx.closePath();
      ctx.stroke();
    }
    const roleColor: Record<number, string> = { 1: "#999999", 2: "#e33939", 3: "#3b6ef6" };
    positions.forEach(([x, y], idx) => {
      const color = roleColor[roles[idx]];
      if (!color) return;
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(x, y, 2.2, 0, 2 * Math.PI);
      ctx.fill();
    });
  }
  drawColorbar(body);
}

// compact viridis ramp for the density legend; endpoints labeled with the
// actual density range so result and density views share one scale
const VIRIDIS: Array<[number, number, number]> = [
  [68, 1, 84],
  [71, 44, 122],
  [59, 81, 139],
  [44, 113, 142],
  [33, 144, 141],
  [39, 173, 129],
  [92, 200, 99],
  [170, 220, 50],
  [253, 231, 37],
];

function drawColorbar(body: JobStatusBody): void {
  const ctx = colorbarCanvas.getContext("2d")!;
  const { width, height } = colorbarCanvas;
  ctx.clearRect(0, 0, width, height);
  if (state.overlay !== "density") return;
  const densities = (body.diagnostics?.per_triangle_density as number[] | undefined) ?? [];
  const top = densities.length ? Math.max(...densities) : 0;
  const grad = ctx.createLinearGradient(0, height - 18, width, height - 18);
  VIRIDIS.forEach(([r, g, b], i) => {
    grad.addColorStop(i / (VIRIDIS.length - 1), `rgb(${r},${g},${b})`);
  });
  ctx.fillStyle = grad;
  ctx.fillRect(0, 4, width, 14);
  ctx.fillStyle = "#ccc";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText("0", 0, 30);
  ctx.textAlign = "right";
  ctx.fillText(top.toPrecision(3), width, 30);
}

// ------------------------------------------------------------------ job flow

function refreshValidation(): boolean {
  if (!state.image) {
    validationBox.textContent = "load an image to begin";
    runButton.disabled = true;
    return false;
  }
  const masks = state.serverAuto ? [] : state.masks;
  const check = validateAnnotations(masks, state.polylines, state.width, state.height);
  validationBox.textContent = check.ok ? "" : check.errors.join("; ");
  validationBox.classList.toggle("problem", !check.ok);
  runButton.disabled = !check.ok;
  return check.ok;
}

function submitCurrent(): void {
  if (!state.imageBytes || !refreshValidation()) return;
  const spec = buildSpec({
    ratio: state.ratio,
    auto: state.serverAuto,
    fraction: state.serverAuto ? state.fraction : undefined,
  });
  const masks = state.serverAuto
    ? []
    : state.masks.map((m) => encodeGrayPng(m.width, m.height, m.data));
  void controller.run({
    image: state.imageBytes,
    spec,
    masks,
    lines: state.polylines.length ? polylinesDocument(state.polylines) : undefined,
  });
}

runButton.addEventListener("click", submitCurrent);
retryButton.addEventListener("click", () => void controller.retry());

ratioSlider.addEventListener("input", () => {
  state.ratio = clampRatio(Number(ratioSlider.value));
  ratioValue.textContent = state.ratio.toFixed(2);
});

// one job per committed slider change
ratioSlider.addEventListener("change", () => {
  state.ratio = clampRatio(Number(ratioSlider.value));
  ratioValue.textContent = state.ratio.toFixed(2);
  if (state.image) submitCurrent();
});

for (const mode of ["result", "density", "mesh"] as Overlay[]) {
  el<HTMLInputElement>(`overlay-${mode}`).addEventListener("change", () => {
    state.overlay = mode;
    drawOverlay();
  });
}

function loadImageElement(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`could not load ${url}`));
    img.src = url;
  });
}

function onJobUpdate(cs: ControllerState): void {
  errorBanner.classList.toggle("hidden", cs.phase !== "failed");
  if (cs.phase === "failed") {
    errorText.textContent = cs.error ?? "job failed";
  }
  switch (cs.phase) {
    case "submitting":
      setStatus("submitting job...");
      break;
    case "polling":
      setStatus(`job ${cs.jobId} running...`);
      break;
    case "failed":
      setStatus("job failed");
      break;
    case "done": {
      const body = cs.result!;
      lastDone = body;
      setStatus(`job ${cs.jobId} done`);
      renderDiagnostics(body);
      renderHistory(cs);
      void (async () => {
        overlayImages.result = body.output_url ? await loadImageElement(body.output_url) : null;
        overlayImages.density = body.density_url ? await loadImageElement(body.density_url) : null;
        drawOverlay();
      })();
      break;
    }
    case "idle":
      break;
  }
}

function renderDiagnostics(body: JobStatusBody): void {
  const d = body.diagnostics;
  if (!d) return;
  diagnosticsBox.innerHTML = "";
  const rows: Array<[string, string]> = [
    ["distortion energy", d.conformal_energy.toFixed(3)],
    ["repair iterations", String(d.correction_iterations)],
    ["initially flipped", String(d.flipped_initial)],
    ["output", `${d.output_width} x ${d.output_height}`],
  ];
  for (const [k, v] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = k;
    const dd = document.createElement("dd");
    dd.textContent = v;
    diagnosticsBox.append(dt, dd);
  }
}

function renderHistory(cs: ControllerState): void {
  historyBody.innerHTML = "";
  for (const rec of [...cs.history].reverse()) {
    const tr = document.createElement("tr");
    for (const cell of [
      rec.ratio.toFixed(2),
      rec.energy.toFixed(3),
      String(rec.iterations),
      rec.jobId.slice(0, 8),
    ]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    historyBody.appendChild(tr);
  }
}

function setStatus(text: string): void {
  statusLine.textContent = text;
}

refreshValidation();
setStatus("load an image to begin");
