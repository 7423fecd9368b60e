/** Training loop: fresh random packets every batch, Adam with a linear
 * learning-rate ramp, per-epoch metrics, artifact export. */

import { Adam } from "./adam.js";
import { EpochRecord, TrainReport, writeCodebook, writeReport, writeWeights } from "./export.js";
import { generateBatch, NosModel, TrainConfig } from "./model.js";
import { Rng } from "./rng.js";

export interface TrainResult {
  model: NosModel;
  report: TrainReport;
}

export interface TrainOptions {
  outCodebook?: string;
  outWeights?: string;
  outReport?: string;
  log?: (line: string) => void;
  /** stop early once accuracy and inter-correlation targets hold */
  targetAccuracy?: number;
  targetMaxInterDb?: number;
  checkEvery?: number;
}

export function train(cfg: TrainConfig, opts: TrainOptions = {}): TrainResult {
  const log = opts.log ?? (() => undefined);
  const rng = new Rng(cfg.seed);
  const model = new NosModel(cfg, rng);
  const stepsPerEpoch = Math.max(1, Math.round(cfg.samplesPerEpoch / cfg.batch));
  const adam = new Adam(cfg.lrInit, cfg.lrFinal, cfg.epochs * stepsPerEpoch);
  const params = model.allLayers().flatMap((l) => l.params());

  // held-out packets for inference-mode (running statistics) accuracy
  const evalBatch = generateBatch(new Rng(cfg.seed + 0x5eed), cfg,
                                  Math.min(4096, 4 * cfg.batch));

  const epochs: EpochRecord[] = [];
  const t0 = Date.now();
  let stop = false;
  for (let epoch = 0; epoch < cfg.epochs && !stop; epoch++) {
    let lossSum = 0;
    let accSum = 0;
    for (let step = 0; step < stepsPerEpoch; step++) {
      const batch = generateBatch(rng, cfg, cfg.batch);
      model.zeroGrads();
      const { loss, accuracy } = model.lossAndGrad(batch);
      if (!Number.isFinite(loss)) {
        throw new Error(`training diverged at epoch ${epoch}: loss = ${loss}`);
      }
      adam.step(params);
      lossSum += loss;
      accSum += accuracy;
    }
    const rec: EpochRecord = {
      epoch,
      loss: lossSum / stepsPerEpoch,
      symbol_accuracy: accSum / stepsPerEpoch,
      lr: adam.currentLr(),
    };
    epochs.push(rec);
    const every = opts.checkEvery ?? 10;
    if (epoch % every === every - 1 || epoch === cfg.epochs - 1) {
      const interDb = model.maxInterCorrelationDb();
      const evalAcc = model.evalAccuracy(evalBatch);
      log(`epoch ${epoch}: loss ${rec.loss.toFixed(4)} acc ` +
          `${rec.symbol_accuracy.toFixed(4)} eval ${evalAcc.toFixed(4)} lr ` +
          `${rec.lr.toExponential(2)} maxInter ${interDb.toFixed(2)} dB`);
      if (opts.targetAccuracy !== undefined &&
          opts.targetMaxInterDb !== undefined &&
          evalAcc >= opts.targetAccuracy &&
          interDb <= opts.targetMaxInterDb) {
        log(`targets reached at epoch ${epoch}, stopping early`);
        stop = true;
      }
    } else {
      log(`epoch ${epoch}: loss ${rec.loss.toFixed(4)} acc ` +
          `${rec.symbol_accuracy.toFixed(4)}`);
    }
  }

  const finalAcc = model.evalAccuracy(evalBatch);
  const report: TrainReport = {
    config: { v: cfg.v, m: cfg.m, d: cfg.d, nt_l: cfg.ntL, nr_l: cfg.nrL,
              h1: cfg.h1, h2: cfg.h2, train_snr_db: cfg.trainSnrDb,
              batch: cfg.batch, epochs: epochs.length,
              samples_per_epoch: stepsPerEpoch * cfg.batch, seed: cfg.seed },
    epochs,
    final_loss: epochs[epochs.length - 1].loss,
    final_symbol_accuracy: finalAcc,
    max_inter_db: model.maxInterCorrelationDb(),
    wall_s: (Date.now() - t0) / 1000,
    exported: { codebook: opts.outCodebook ?? "", weights: opts.outWeights ?? "" },
  };
  if (opts.outCodebook) writeCodebook(model, opts.outCodebook);
  if (opts.outWeights) writeWeights(model, opts.outWeights);
  if (opts.outReport) writeReport(report, opts.outReport);
  return { model, report };
}
