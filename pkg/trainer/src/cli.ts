/**
 * Command line entry: `train --config <file> --out-dir <dir>`.
 *
 * Config files are flat `key = value` lines (# comments).  Keys: v, m, d,
 * nt, nr, h1, h2, train_snr_db, batch, epochs, samples_per_epoch, lr_init,
 * lr_final, seed, name, target_accuracy, target_max_inter_db.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { defaultsFor, TrainConfig } from "./model.js";
import { train } from "./train.js";

function parseConfig(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.split("#")[0].trim();
    if (!line) continue;
    const eq = line.indexOf("=");
    if (eq < 0) throw new Error(`bad config line: ${raw}`);
    out.set(line.slice(0, eq).trim().toLowerCase(), line.slice(eq + 1).trim());
  }
  return out;
}

function num(map: Map<string, string>, key: string): number | undefined {
  const v = map.get(key);
  return v === undefined ? undefined : Number(v);
}

export function main(argv: string[]): number {
  if (argv[0] !== "train") {
    console.error("usage: cli.js train --config <file> --out-dir <dir>");
    return 2;
  }
  let configPath = "";
  let outDir = ".";
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === "--config") configPath = argv[++i];
    else if (argv[i] === "--out-dir") outDir = argv[++i];
    else {
      console.error(`unknown argument ${argv[i]}`);
      return 2;
    }
  }
  if (!configPath) {
    console.error("missing --config");
    return 2;
  }
  const map = parseConfig(fs.readFileSync(configPath, "utf-8"));
  const cfg: TrainConfig = defaultsFor({
    v: num(map, "v"), m: num(map, "m"), d: num(map, "d"),
    ntL: num(map, "nt"), nrL: num(map, "nr"),
    h1: num(map, "h1"), h2: num(map, "h2"),
    trainSnrDb: num(map, "train_snr_db"),
    batch: num(map, "batch"), epochs: num(map, "epochs"),
    samplesPerEpoch: num(map, "samples_per_epoch"),
    lrInit: num(map, "lr_init"), lrFinal: num(map, "lr_final"),
    seed: num(map, "seed"),
  });
  const name = map.get("name") ??
    `nos_v${cfg.v}_m${cfg.m}_d${cfg.d}_nt${cfg.ntL}`;
  fs.mkdirSync(outDir, { recursive: true });
  const outCodebook = path.join(outDir, `${name}.nosc`);
  const outWeights = path.join(outDir, `${name}.nosw`);
  const outReport = path.join(outDir, `train_report_${name.replace(/^nos_/, "")}.json`);

  const targetAcc = num(map, "target_accuracy");
  const targetInter = num(map, "target_max_inter_db");
  const { report } = train(cfg, {
    outCodebook, outWeights, outReport,
    targetAccuracy: targetAcc,
    targetMaxInterDb: targetInter,
    checkEvery: num(map, "check_every") ?? 10,
    log: (line) => console.log(line),
  });
  console.log(`final accuracy ${report.final_symbol_accuracy.toFixed(4)}, ` +
              `max inter ${report.max_inter_db.toFixed(2)} dB, ` +
              `${report.wall_s.toFixed(0)} s`);
  console.log(`wrote ${outCodebook}`);
  console.log(`wrote ${outWeights}`);
  console.log(`wrote ${outReport}`);
  return 0;
}

main(process.argv.slice(2));
