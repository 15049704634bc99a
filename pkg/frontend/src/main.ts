/**
 * DOM wiring for the threshold explorer.
 *
 * Everything runs from local files: pick the files of an exported bundle
 * directory, drag thresholds, switch views, and download the chosen
 * thresholds as JSON for the command-line segmenter.
 */

import { BundleLoadError, loadBundle, type FileMap } from "./bundle.js";
import { ExplorerSession, type ViewKind } from "./session.js";
import { fieldToRgba, labelsToRgba, paintBoundaries } from "./render.js";

const fileInput = document.querySelector<HTMLInputElement>("#bundle-files")!;
const statusEl = document.querySelector<HTMLElement>("#status")!;
const controlsEl = document.querySelector<HTMLElement>("#controls")!;
const slidersEl = document.querySelector<HTMLElement>("#sliders")!;
const historyEl = document.querySelector<HTMLOListElement>("#history")!;
const canvas = document.querySelector<HTMLCanvasElement>("#view-canvas")!;
const phaseCountEl = document.querySelector<HTMLSelectElement>("#phase-count")!;
const exportBtn = document.querySelector<HTMLButtonElement>("#export-btn")!;
const bundleInfoEl = document.querySelector<HTMLElement>("#bundle-info")!;

let session: ExplorerSession | null = null;
let sourceRgba: Uint8ClampedArray<ArrayBuffer> | null = null;

function setStatus(message: string, isError = false): void {
  statusEl.textContent = message;
  statusEl.classList.toggle("error", isError);
}

async function readFiles(list: FileList): Promise<FileMap> {
  const map = new Map<string, ArrayBuffer>();
  for (const file of Array.from(list)) {
    map.set(file.name, await file.arrayBuffer());
  }
  return map;
}

async function decodeSourcePng(
  bytes: Uint8Array<ArrayBuffer>,
  w: number,
  h: number,
): Promise<Uint8ClampedArray<ArrayBuffer> | null> {
  try {
    const bitmap = await createImageBitmap(new Blob([bytes], { type: "image/png" }));
    const scratch = document.createElement("canvas");
    scratch.width = w;
    scratch.height = h;
    const ctx = scratch.getContext("2d")!;
    ctx.drawImage(bitmap, 0, 0, w, h);
    return ctx.getImageData(0, 0, w, h).data;
  } catch {
    return null;
  }
}

function currentView(): ViewKind {
  const checked = document.querySelector<HTMLInputElement>("input[name=view]:checked");
  return (checked?.value ?? "labels") as ViewKind;
}

function render(): void {
  if (!session) return;
  const { width: w, height: h, reflectance, illumination } = session.bundle;
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d")!;
  const started = performance.now();

  let rgba: Uint8ClampedArray<ArrayBuffer>;
  switch (session.view) {
    case "reflectance":
      rgba = fieldToRgba(reflectance, h, w, false);
      break;
    case "illumination":
      rgba = fieldToRgba(illumination, h, w, true);
      break;
    case "original":
      rgba = sourceRgba ?? fieldToRgba(reflectance, h, w, false);
      break;
    case "overlay": {
      const base = sourceRgba
        ? new Uint8ClampedArray(sourceRgba)
        : fieldToRgba(reflectance, h, w, false);
      rgba = paintBoundaries(base, session.labels(), h, w);
      break;
    }
    default:
      rgba = labelsToRgba(session.labels(), session.K, h, w);
  }
  ctx.putImageData(new ImageData(rgba, w, h), 0, 0);
  setStatus(
    `${session.K} phases at [${session.interior.map((t) => t.toFixed(3)).join(", ")}] ` +
      `rendered in ${(performance.now() - started).toFixed(1)} ms`,
  );
}

function refreshHistory(): void {
  if (!session) return;
  historyEl.replaceChildren(
    ...session.history
      .slice()
      .reverse()
      .slice(0, 12)
      .map((set) => {
        const li = document.createElement("li");
        li.textContent = `K=${set.length + 1}: [${set.map((t) => t.toFixed(3)).join(", ")}]`;
        return li;
      }),
  );
}

function rebuildSliders(): void {
  if (!session) return;
  slidersEl.replaceChildren();
  session.interior.forEach((value, index) => {
    const row = document.createElement("div");
    row.className = "slider-row";
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.001";
    slider.value = String(value);
    const label = document.createElement("span");
    label.textContent = value.toFixed(3);
    slider.addEventListener("input", () => {
      if (!session) return;
      const clamped = session.moveThreshold(index, Number(slider.value));
      slider.value = String(clamped);
      label.textContent = clamped.toFixed(3);
      refreshHistory();
      render();
    });
    row.append(slider, label);
    slidersEl.append(row);
  });
}

fileInput.addEventListener("change", async () => {
  if (!fileInput.files?.length) return;
  try {
    const files = await readFiles(fileInput.files);
    const bundle = loadBundle(files);
    session = ExplorerSession.fromBundle(bundle);
    sourceRgba = bundle.sourcePng
      ? await decodeSourcePng(bundle.sourcePng, bundle.width, bundle.height)
      : null;
    bundleInfoEl.textContent =
      `bundle ${bundle.manifest.bundle_id} | ${bundle.width} x ${bundle.height}`;
    controlsEl.hidden = false;
    phaseCountEl.value = "2";
    rebuildSliders();
    refreshHistory();
    render();
  } catch (err) {
    session = null;
    controlsEl.hidden = true;
    const message = err instanceof BundleLoadError ? err.message : `failed to load bundle: ${String(err)}`;
    setStatus(message, true);
  }
});

phaseCountEl.addEventListener("change", () => {
  if (!session) return;
  session.setPhaseCount(Number(phaseCountEl.value));
  rebuildSliders();
  refreshHistory();
  render();
});

for (const radio of document.querySelectorAll<HTMLInputElement>("input[name=view]")) {
  radio.addEventListener("change", () => {
    if (!session) return;
    session.view = currentView();
    render();
  });
}

exportBtn.addEventListener("click", () => {
  if (!session) return;
  const payload = JSON.stringify(session.exportChoice(), null, 2);
  const url = URL.createObjectURL(new Blob([payload], { type: "application/json" }));
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = "thresholds.json";
  anchor.click();
  URL.revokeObjectURL(url);
});
