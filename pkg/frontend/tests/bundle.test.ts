import { describe, expect, it } from "vitest";

import { BundleLoadError, loadBundle } from "../src/bundle.js";
import { readBundleFiles } from "./helpers.js";

describe("bundle loading", () => {
  it("loads a valid fixture bundle", async () => {
    const bundle = loadBundle(await readBundleFiles("bundle_a"));
    expect(bundle.width).toBe(24);
    expect(bundle.height).toBe(24);
    expect(bundle.reflectance.length).toBe(24 * 24);
    expect(bundle.illumination.length).toBe(24 * 24);
    expect(bundle.manifest.bundle_id).toMatch(/^[0-9a-f]{16}$/);
    expect(bundle.sourcePng).not.toBeNull();
    let min = Infinity;
    let max = -Infinity;
    for (const v of bundle.reflectance) {
      min = Math.min(min, v);
      max = Math.max(max, v);
    }
    expect(min).toBeGreaterThanOrEqual(0);
    expect(max).toBeLessThanOrEqual(1);
  });

  it("refuses a version mismatch with a clear message", async () => {
    const files = await readBundleFiles("bundle_a");
    const manifest = JSON.parse(new TextDecoder().decode(files.get("manifest.json")!));
    manifest.format_version = 999;
    files.set("manifest.json", new TextEncoder().encode(JSON.stringify(manifest)).buffer);
    expect(() => loadBundle(files)).toThrow(/unsupported bundle version/);
  });

  it("refuses to load without the reflectance field", async () => {
    const files = await readBundleFiles("bundle_a");
    files.delete("reflectance.f32");
    expect(() => loadBundle(files)).toThrow(/missing reflectance\.f32/);
  });

  it("refuses a truncated field", async () => {
    const files = await readBundleFiles("bundle_a");
    const raw = files.get("reflectance.f32")!;
    files.set("reflectance.f32", raw.slice(0, raw.byteLength - 8));
    expect(() => loadBundle(files)).toThrow(BundleLoadError);
  });

  it("refuses a missing manifest", async () => {
    const files = await readBundleFiles("bundle_a");
    files.delete("manifest.json");
    expect(() => loadBundle(files)).toThrow(/missing manifest/);
  });

  it("decodes the little-endian column-major layout", async () => {
    // 2x2 synthetic bundle built by hand: values [r0c0, r1c0, r0c1, r1c1].
    const manifest = {
      format_version: 1,
      bundle_id: "00000000deadbeef",
      width: 2,
      height: 2,
      fields: {
        reflectance: { raw: "reflectance.f32", sidecar: "reflectance.json", preview: "reflectance.png" },
        illumination: { raw: "illumination.f32", sidecar: "illumination.json", preview: "illumination.png" },
      },
      source: { preview: "source.png" },
    };
    const sidecar = { width: 2, height: 2, dtype: "f32le", order: "col" };
    const enc = new TextEncoder();
    const field = new Float32Array([0.0, 0.25, 0.5, 1.0]);
    const files = new Map<string, ArrayBuffer>([
      ["manifest.json", enc.encode(JSON.stringify(manifest)).buffer],
      ["reflectance.json", enc.encode(JSON.stringify(sidecar)).buffer],
      ["illumination.json", enc.encode(JSON.stringify(sidecar)).buffer],
      ["reflectance.f32", field.buffer.slice(0)],
      ["illumination.f32", field.buffer.slice(0)],
    ]);
    const bundle = loadBundle(files);
    // (row 1, col 0) -> index 1; (row 0, col 1) -> index 2.
    expect(bundle.reflectance[1]).toBeCloseTo(0.25, 7);
    expect(bundle.reflectance[2]).toBeCloseTo(0.5, 7);
    expect(bundle.sourcePng).toBeNull();
  });
});
