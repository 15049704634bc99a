/**
 * Explorer session state: the loaded bundle, the current thresholds and
 * view, and the history of threshold sets tried.  Re-labeling reads only
 * the in-memory reflectance; nothing here can trigger solver work.
 */

import type { BundleData } from "./bundle.js";
import {
  clampThreshold,
  evenInterior,
  thresholdLabels,
  validateInterior,
} from "./labeling.js";

export type ViewKind = "original" | "reflectance" | "illumination" | "labels" | "overlay";

export interface ThresholdChoice {
  thresholds: number[];
  K: number;
  bundle_id: string;
}

export class ExplorerSession {
  readonly bundle: BundleData;
  view: ViewKind = "labels";
  readonly history: number[][] = [];

  private interiorThresholds: number[];
  private cachedLabels: Uint8Array | null = null;

  private constructor(bundle: BundleData, interior: number[]) {
    this.bundle = bundle;
    this.interiorThresholds = interior;
  }

  /** New session over a loaded bundle: two phases, one threshold at 0.5. */
  static fromBundle(bundle: BundleData): ExplorerSession {
    return new ExplorerSession(bundle, [0.5]);
  }

  get K(): number {
    return this.interiorThresholds.length + 1;
  }

  get interior(): readonly number[] {
    return this.interiorThresholds;
  }

  /** Full threshold vector with the pinned endpoints 0 and 1. */
  get rho(): number[] {
    return [0, ...this.interiorThresholds, 1];
  }

  /** Replace the interior thresholds (must be strictly increasing in (0,1)). */
  setInteriorThresholds(interior: readonly number[]): void {
    validateInterior(interior);
    this.interiorThresholds = [...interior];
    this.cachedLabels = null;
    this.history.push([...interior]);
  }

  /** Switch to k phases with evenly spaced interior thresholds. */
  setPhaseCount(k: number): void {
    this.setInteriorThresholds(evenInterior(k));
  }

  /** Drag one threshold; it clamps against its neighbors (no crossing). */
  moveThreshold(index: number, value: number): number {
    if (index < 0 || index >= this.interiorThresholds.length) {
      throw new Error(`no threshold at index ${index}`);
    }
    const clamped = clampThreshold(this.interiorThresholds, index, value);
    const next = [...this.interiorThresholds];
    next[index] = clamped;
    this.setInteriorThresholds(next);
    return clamped;
  }

  /** Current phase map (column-major labels in 1..K), cached per threshold set. */
  labels(): Uint8Array {
    if (this.cachedLabels === null) {
      this.cachedLabels = thresholdLabels(this.bundle.reflectance, this.interiorThresholds);
    }
    return this.cachedLabels;
  }

  /** The JSON payload accepted by the CLI's --thresholds-file option. */
  exportChoice(): ThresholdChoice {
    return {
      thresholds: [...this.interiorThresholds],
      K: this.K,
      bundle_id: this.bundle.manifest.bundle_id,
    };
  }
}
