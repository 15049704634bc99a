/**
 * Conversion from column-major fields/labels to RGBA pixel buffers for
 * canvas display.  Gray levels for phase maps match the CLI's label PNG
 * convention; the boundary palette matches its overlay colors.
 */

import { boundaryMask } from "./labeling.js";

export const PALETTE: ReadonlyArray<readonly [number, number, number]> = [
  [255, 0, 0],
  [0, 255, 0],
  [0, 102, 255],
  [255, 204, 0],
  [255, 0, 255],
  [0, 255, 255],
];

export function grayLevels(k: number): number[] {
  if (k === 1) return [255];
  return Array.from({ length: k }, (_, i) => Math.round((255 * i) / (k - 1)));
}

function rowMajorIndex(i: number, j: number, width: number): number {
  return i * width + j;
}

/** Grayscale RGBA from a column-major field, optionally min-max scaled. */
export function fieldToRgba(
  values: Float32Array,
  height: number,
  width: number,
  normalize: boolean,
): Uint8ClampedArray<ArrayBuffer> {
  let lo = 0;
  let scale = 255;
  if (normalize) {
    let min = Infinity;
    let max = -Infinity;
    for (let i = 0; i < values.length; i++) {
      const v = values[i]!;
      if (v < min) min = v;
      if (v > max) max = v;
    }
    lo = min;
    scale = max > min ? 255 / (max - min) : 0;
  }
  const rgba = new Uint8ClampedArray(4 * height * width);
  for (let j = 0; j < width; j++) {
    for (let i = 0; i < height; i++) {
      const v = values[j * height + i]!;
      const g = normalize ? (v - lo) * scale + (scale === 0 ? 127.5 : 0) : v * 255;
      const at = 4 * rowMajorIndex(i, j, width);
      rgba[at] = rgba[at + 1] = rgba[at + 2] = g;
      rgba[at + 3] = 255;
    }
  }
  return rgba;
}

/** Phase map as evenly spaced grays (the CLI label PNG convention). */
export function labelsToRgba(
  labels: Uint8Array,
  k: number,
  height: number,
  width: number,
): Uint8ClampedArray<ArrayBuffer> {
  const levels = grayLevels(k);
  const rgba = new Uint8ClampedArray(4 * height * width);
  for (let j = 0; j < width; j++) {
    for (let i = 0; i < height; i++) {
      const g = levels[labels[j * height + i]! - 1] ?? 0;
      const at = 4 * rowMajorIndex(i, j, width);
      rgba[at] = rgba[at + 1] = rgba[at + 2] = g;
      rgba[at + 3] = 255;
    }
  }
  return rgba;
}

/** Paint phase boundaries over a base RGBA buffer (modified in place). */
export function paintBoundaries(
  base: Uint8ClampedArray<ArrayBuffer>,
  labels: Uint8Array,
  height: number,
  width: number,
): Uint8ClampedArray<ArrayBuffer> {
  const mask = boundaryMask(labels, height, width);
  for (let j = 0; j < width; j++) {
    for (let i = 0; i < height; i++) {
      const idx = j * height + i;
      if (!mask[idx]) continue;
      const color = PALETTE[(labels[idx]! - 1) % PALETTE.length]!;
      const at = 4 * rowMajorIndex(i, j, width);
      base[at] = color[0];
      base[at + 1] = color[1];
      base[at + 2] = color[2];
      base[at + 3] = 255;
    }
  }
  return base;
}
