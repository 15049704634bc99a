/**
 * Loading and validation of exploration bundles from local files.
 *
 * The loader works on a map from file name to bytes, so the browser UI
 * (FileList) and the node test harness (fs) share the same code path.
 * Labels are always computed from the raw float32 reflectance, never
 * from the 8-bit preview PNG.
 */

export const SUPPORTED_FORMAT_VERSION = 1;

export class BundleLoadError extends Error {}

export interface FieldEntry {
  raw: string;
  sidecar: string;
  preview: string;
}

export interface Manifest {
  format_version: number;
  bundle_id: string;
  width: number;
  height: number;
  fields: { reflectance: FieldEntry; illumination: FieldEntry };
  source: { preview: string };
  created?: string;
  solver?: unknown;
}

export interface BundleData {
  manifest: Manifest;
  width: number;
  height: number;
  /** Column-major, in [0, 1]. */
  reflectance: Float32Array;
  /** Column-major, positive. */
  illumination: Float32Array;
  /** Raw PNG bytes of the source preview, for display only. */
  sourcePng: Uint8Array<ArrayBuffer> | null;
}

export type FileMap = ReadonlyMap<string, ArrayBuffer>;

function need(files: FileMap, name: string): ArrayBuffer {
  const buf = files.get(name);
  if (buf === undefined) {
    throw new BundleLoadError(`bundle is missing ${name}; load refused`);
  }
  return buf;
}

function decodeField(
  files: FileMap,
  entry: FieldEntry,
  width: number,
  height: number,
): Float32Array {
  const sidecar = JSON.parse(new TextDecoder().decode(need(files, entry.sidecar)));
  if (sidecar.dtype !== "f32le" || sidecar.order !== "col") {
    throw new BundleLoadError(
      `unsupported field encoding ${JSON.stringify(sidecar)} for ${entry.raw}`,
    );
  }
  if (sidecar.width !== width || sidecar.height !== height) {
    throw new BundleLoadError(`field ${entry.raw} dimensions disagree with manifest`);
  }
  const raw = need(files, entry.raw);
  const n = width * height;
  if (raw.byteLength !== 4 * n) {
    throw new BundleLoadError(`field ${entry.raw} has ${raw.byteLength} bytes, expected ${4 * n}`);
  }
  const view = new DataView(raw);
  const values = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    values[i] = view.getFloat32(4 * i, true);
  }
  return values;
}

/** Parse and validate a bundle from its directory's files (by base name). */
export function loadBundle(files: FileMap): BundleData {
  let manifest: Manifest;
  try {
    manifest = JSON.parse(new TextDecoder().decode(need(files, "manifest.json")));
  } catch (err) {
    if (err instanceof BundleLoadError) throw err;
    throw new BundleLoadError(`unreadable manifest.json: ${String(err)}`);
  }
  if (manifest.format_version !== SUPPORTED_FORMAT_VERSION) {
    throw new BundleLoadError(
      `unsupported bundle version ${manifest.format_version} ` +
        `(this explorer reads version ${SUPPORTED_FORMAT_VERSION})`,
    );
  }
  const { width, height } = manifest;
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new BundleLoadError(`bad bundle dimensions ${width}x${height}`);
  }

  const reflectance = decodeField(files, manifest.fields.reflectance, width, height);
  for (let i = 0; i < reflectance.length; i++) {
    const v = reflectance[i]!;
    if (!(v >= 0 && v <= 1)) {
      throw new BundleLoadError(`corrupt reflectance: value ${v} outside [0, 1]`);
    }
  }
  const illumination = decodeField(files, manifest.fields.illumination, width, height);

  const sourceBuf = files.get(manifest.source?.preview ?? "source.png");
  return {
    manifest,
    width,
    height,
    reflectance,
    illumination,
    sourcePng: sourceBuf ? new Uint8Array(sourceBuf) : null,
  };
}
