/**
 * Threshold labeling with semantics identical to the CLI segmenter.
 *
 * Phase i (1-based) collects pixels with rho_{i-1} <= R < rho_i, where
 * rho_0 = 0 and rho_K = 1 are pinned; R = 1 belongs to the top phase K.
 * Fields are flat Float32Array/Uint8Array in column-major order
 * (linear index = col * height + row), matching the bundle encoding.
 */

export const MIN_THRESHOLD_GAP = 1e-3;

/** Throws unless the interior thresholds are strictly increasing in (0, 1). */
export function validateInterior(interior: readonly number[]): void {
  for (let k = 0; k < interior.length; k++) {
    const t = interior[k]!;
    if (!Number.isFinite(t) || t <= 0 || t >= 1) {
      throw new Error(`threshold ${t} outside the open interval (0, 1)`);
    }
    if (k > 0 && t <= interior[k - 1]!) {
      throw new Error("thresholds must be strictly increasing");
    }
  }
}

/**
 * Per-pixel phase indices in 1..K for a reflectance field in [0, 1].
 *
 * A pixel's label is 1 + (number of interior thresholds <= its value),
 * which reproduces the half-open membership rule including the
 * R-equals-threshold and R = 1 conventions.
 */
export function thresholdLabels(
  reflectance: Float32Array,
  interior: readonly number[],
): Uint8Array {
  validateInterior(interior);
  const labels = new Uint8Array(reflectance.length);
  for (let idx = 0; idx < reflectance.length; idx++) {
    const value = reflectance[idx]!;
    if (!(value >= 0 && value <= 1)) {
      throw new Error(`reflectance value ${value} outside [0, 1]`);
    }
    let label = 1;
    for (let k = 0; k < interior.length; k++) {
      if (value >= interior[k]!) label++;
      else break;
    }
    labels[idx] = label;
  }
  return labels;
}

/** Pixels whose 4-neighborhood contains a different label (column-major). */
export function boundaryMask(
  labels: Uint8Array,
  height: number,
  width: number,
): Uint8Array {
  const mask = new Uint8Array(labels.length);
  for (let j = 0; j < width; j++) {
    for (let i = 0; i < height; i++) {
      const idx = j * height + i;
      const here = labels[idx]!;
      if (
        (i + 1 < height && labels[idx + 1] !== here) ||
        (i > 0 && labels[idx - 1] !== here) ||
        (j + 1 < width && labels[idx + height] !== here) ||
        (j > 0 && labels[idx - height] !== here)
      ) {
        mask[idx] = 1;
      }
    }
  }
  return mask;
}

/** Evenly spaced interior thresholds for a given phase count. */
export function evenInterior(phaseCount: number): number[] {
  if (!Number.isInteger(phaseCount) || phaseCount < 1) {
    throw new Error(`invalid phase count ${phaseCount}`);
  }
  return Array.from({ length: phaseCount - 1 }, (_, i) => (i + 1) / phaseCount);
}

/**
 * Clamp a dragged threshold between its neighbors (sliders cannot cross)
 * and inside (0, 1), preserving strict order with a fixed minimum gap.
 */
export function clampThreshold(
  interior: readonly number[],
  index: number,
  value: number,
): number {
  const lo = (index > 0 ? interior[index - 1]! : 0) + MIN_THRESHOLD_GAP;
  const hi = (index + 1 < interior.length ? interior[index + 1]! : 1) - MIN_THRESHOLD_GAP;
  return Math.min(Math.max(value, lo), hi);
}
