/**
 * Artifact writers for the simulator's binary container formats.
 *
 * Codebook ("NOSC"): magic, u16 version, u16 V, u32 M, u32 D, then float32
 * real parts of the (V, D/2, M) tensor in C order, then imaginary parts.
 *
 * Weights ("NOSW"): magic, u16 version, u32 header length, UTF-8 JSON
 * header, then a float32 blob holding every layer's parameters in section
 * order (enc 0..V-1, res, dec 0..V-1).  Exported decoders gain a trailing
 * softmax layer so inference-side probability vectors are normalised.
 */

import * as fs from "node:fs";

import { BN_EPS, LayerExport } from "./layers.js";
import { NosModel } from "./model.js";

function f32Bytes(arrs: Float64Array[]): Buffer {
  const total = arrs.reduce((n, a) => n + a.length, 0);
  const buf = Buffer.alloc(4 * total);
  let off = 0;
  for (const a of arrs) {
    for (let i = 0; i < a.length; i++) {
      buf.writeFloatLE(Math.fround(a[i]), off);
      off += 4;
    }
  }
  return buf;
}

export function writeCodebook(model: NosModel, path: string): void {
  const { v, m, d } = model.cfg;
  const { re, im } = model.enumerateCodebook();
  const header = Buffer.alloc(16);
  header.write("NOSC", 0, "ascii");
  header.writeUInt16LE(1, 4);
  header.writeUInt16LE(v, 6);
  header.writeUInt32LE(m, 8);
  header.writeUInt32LE(d, 12);
  fs.writeFileSync(path, Buffer.concat([header, f32Bytes([re]), f32Bytes([im])]));
}

interface LayerJson {
  kind: string;
  in: number;
  out: number;
  energy?: number;
}

function layerJson(e: LayerExport): LayerJson {
  const out: LayerJson = { kind: e.kind, in: e.in, out: e.out };
  if (e.energy !== undefined) out.energy = e.energy;
  return out;
}

export function writeWeights(model: NosModel, path: string): void {
  const cfg = model.cfg;
  const encEx = model.enc.map((layers) => layers.map((l) => l.describe()));
  const resEx = model.res.map((l) => l.describe());
  const decEx = model.dec.map((layers) => {
    const ex = layers.map((l) => l.describe());
    ex.push({ kind: "softmax", in: cfg.m, out: cfg.m, blobs: [] });
    return ex;
  });
  const header = {
    dims: { v: cfg.v, d: cfg.d, m: cfg.m, n_t: cfg.ntL, n_r: cfg.nrL,
            m_c: cfg.d / 2 / cfg.ntL, h1: cfg.h1, h2: cfg.h2 },
    bn_eps: BN_EPS,
    enc: encEx.map((layers) => layers.map(layerJson)),
    res: resEx.map(layerJson),
    dec: decEx.map((layers) => layers.map(layerJson)),
  };
  const blobs: Float64Array[] = [];
  for (const section of [...encEx, resEx, ...decEx]) {
    for (const layer of section) blobs.push(...layer.blobs);
  }
  const json = Buffer.from(JSON.stringify(header), "utf-8");
  const head = Buffer.alloc(10);
  head.write("NOSW", 0, "ascii");
  head.writeUInt16LE(1, 4);
  head.writeUInt32LE(json.length, 6);
  fs.writeFileSync(path, Buffer.concat([head, json, f32Bytes(blobs)]));
}

export interface EpochRecord {
  epoch: number;
  loss: number;
  symbol_accuracy: number;
  lr: number;
}

export interface TrainReport {
  config: Record<string, number>;
  epochs: EpochRecord[];
  final_loss: number;
  final_symbol_accuracy: number;
  max_inter_db: number;
  wall_s: number;
  exported: { codebook: string; weights: string };
}

export function writeReport(report: TrainReport, path: string): void {
  fs.writeFileSync(path, JSON.stringify(report, null, 2) + "\n");
}
