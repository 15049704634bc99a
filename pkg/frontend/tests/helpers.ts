import { readdir, readFile } from "node:fs/promises";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FileMap } from "../src/bundle.js";

export const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export interface FixtureCase {
  name: string;
  choice: string;
  labels: string;
}

export interface FixtureIndex {
  bundles: { dir: string; bundle_id: string; cases: FixtureCase[] }[];
}

export async function readIndex(): Promise<FixtureIndex> {
  return JSON.parse(await readFile(join(FIXTURES, "index.json"), "utf8"));
}

/** Load a fixture bundle directory into the FileMap the loader expects. */
export async function readBundleFiles(dir: string): Promise<Map<string, ArrayBuffer>> {
  const root = join(FIXTURES, dir);
  const files = new Map<string, ArrayBuffer>();
  for (const name of await readdir(root)) {
    const bytes = await readFile(join(root, name));
    files.set(
      name,
      bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength),
    );
  }
  return files;
}

export async function readBytes(relative: string): Promise<Uint8Array> {
  return new Uint8Array(await readFile(join(FIXTURES, relative)));
}

export async function readJson(relative: string): Promise<any> {
  return JSON.parse(await readFile(join(FIXTURES, relative), "utf8"));
}

export type { FileMap };
