/**
 * End-to-end superposition-coding model: V one-hot encoders whose outputs
 * are power-normalised, complex-packed, superimposed and sent through a
 * per-sample MIMO channel; the receiver is MMSE equalisation plus a
 * residual network, followed by V softmax decoders.
 *
 * The channel and MMSE steps are linear maps with sample-constant
 * coefficients (the channel is never trained), so their backward passes
 * are plain transposes; everything else backpropagates through the layer
 * objects.  All arithmetic is float64 so gradients can be checked against
 * central finite differences tightly.
 */

import { Affine, BatchNorm, Layer, PowerNorm, ReLU } from "./layers.js";
import { CMat, cmat, mmseOperator } from "./linalg.js";
import { Mat } from "./mat.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  v: number;
  m: number;
  d: number;
  ntL: number; // antennas during training
  nrL: number;
  h1: number;
  h2: number;
  trainSnrDb: number;
  batch: number;
  epochs: number;
  samplesPerEpoch: number;
  lrInit: number;
  lrFinal: number;
  seed: number;
}

export function defaultsFor(cfg: Partial<TrainConfig>): TrainConfig {
  const d = cfg.d ?? 16;
  return {
    v: cfg.v ?? 2,
    m: cfg.m ?? 16,
    d,
    ntL: cfg.ntL ?? 2,
    nrL: cfg.nrL ?? 2,
    h1: cfg.h1 ?? 4 * d,
    h2: cfg.h2 ?? 128,
    trainSnrDb: cfg.trainSnrDb ?? 10,
    batch: cfg.batch ?? 1024,
    epochs: cfg.epochs ?? 50,
    samplesPerEpoch: cfg.samplesPerEpoch ?? 10_000,
    // desk-scale ramp; the full-scale schedule (2e-4 -> 2e-6 over 5e3
    // epochs) is far too slow for runs a thousand times shorter
    lrInit: cfg.lrInit ?? 3e-3,
    lrFinal: cfg.lrFinal ?? 5e-5,
    seed: cfg.seed ?? 1,
  };
}

export interface Batch {
  size: number;
  idx: Int32Array[]; // per encoder
  channels: CMat[]; // per sample H (nr x nt)
  equalizers: CMat[]; // per sample MMSE operator (nt x nr)
  noiseRe: Float64Array; // (B, mc*nr)
  noiseIm: Float64Array;
}

export function generateBatch(rng: Rng, cfg: TrainConfig, size: number): Batch {
  const { v, m, ntL, nrL } = cfg;
  const mc = cfg.d / 2 / ntL;
  const sigma2 = Math.pow(10, -cfg.trainSnrDb / 10);
  const idx: Int32Array[] = [];
  for (let i = 0; i < v; i++) {
    const a = new Int32Array(size);
    for (let b = 0; b < size; b++) a[b] = rng.int(m);
    idx.push(a);
  }
  const channels: CMat[] = [];
  const equalizers: CMat[] = [];
  for (let b = 0; b < size; b++) {
    const H = cmat(nrL, ntL);
    const s = Math.sqrt(0.5);
    for (let i = 0; i < H.re.length; i++) {
      H.re[i] = rng.gaussian() * s;
      H.im[i] = rng.gaussian() * s;
    }
    channels.push(H);
    equalizers.push(mmseOperator(H, sigma2)); // P = 1
  }
  const noiseRe = new Float64Array(size * mc * nrL);
  const noiseIm = new Float64Array(size * mc * nrL);
  const ns = Math.sqrt(sigma2 / 2);
  for (let i = 0; i < noiseRe.length; i++) {
    noiseRe[i] = rng.gaussian() * ns;
    noiseIm[i] = rng.gaussian() * ns;
  }
  return { size, idx, channels, equalizers, noiseRe, noiseIm };
}

export interface StepMetrics {
  loss: number;
  accuracy: number; // per-segment hard-decision accuracy
}

export class NosModel {
  readonly cfg: TrainConfig;
  readonly mc: number;
  readonly g: number;
  enc: Layer[][] = [];
  res: Layer[] = [];
  dec: Layer[][] = [];

  constructor(cfg: TrainConfig, rng: Rng) {
    this.cfg = cfg;
    if ((cfg.d / 2) % cfg.ntL) throw new Error("ntL must divide D/2");
    this.mc = cfg.d / 2 / cfg.ntL;
    this.g = 2 * cfg.nrL * (cfg.ntL + 1);
    const energy = cfg.d / (2 * cfg.v);
    for (let i = 0; i < cfg.v; i++) {
      this.enc.push([
        new Affine(cfg.m, cfg.h1, rng),
        new BatchNorm(cfg.h1),
        new ReLU(cfg.h1),
        new Affine(cfg.h1, cfg.d, rng),
        new PowerNorm(cfg.d, energy),
      ]);
      this.dec.push([
        new Affine(cfg.d, cfg.h1, rng),
        new BatchNorm(cfg.h1),
        new ReLU(cfg.h1),
        new Affine(cfg.h1, cfg.m, rng),
      ]);
    }
    // zero-initialised last layer: the initial receiver is exactly MMSE
    this.res = [
      new Affine(this.g, cfg.h2, rng),
      new BatchNorm(cfg.h2),
      new ReLU(cfg.h2),
      new Affine(cfg.h2, 2 * cfg.ntL, null, true),
    ];
  }

  allLayers(): Layer[] {
    return [...this.enc.flat(), ...this.res, ...this.dec.flat()];
  }

  zeroGrads(): void {
    for (const layer of this.allLayers()) {
      for (const p of layer.params()) p.grad.fill(0);
    }
  }

  private encodersForward(batch: Batch, training: boolean):
      { sRe: Mat; sIm: Mat } {
    const { d } = this.cfg;
    const half = d / 2;
    const B = batch.size;
    const sRe = new Mat(B, half);
    const sIm = new Mat(B, half);
    for (let v = 0; v < this.cfg.v; v++) {
      let h = (this.enc[v][0] as Affine).forwardOneHot(batch.idx[v]);
      for (let li = 1; li < this.enc[v].length; li++) {
        h = this.enc[v][li].forward(h, training);
      }
      for (let b = 0; b < B; b++) {
        const hb = b * d, ob = b * half;
        for (let j = 0; j < half; j++) {
          sRe.data[ob + j] += h.data[hb + j];
          sIm.data[ob + j] += h.data[hb + half + j];
        }
      }
    }
    return { sRe, sIm };
  }

  /** Receiver front end: channel, MMSE, residual net; returns x_equ (B, D). */
  private receiverForward(batch: Batch, sRe: Mat, sIm: Mat, training: boolean):
      { xe: Mat; yRe: Mat; yIm: Mat } {
    const { ntL, nrL, d } = this.cfg;
    const mc = this.mc, half = d / 2, B = batch.size;
    const yRe = new Mat(B, mc * nrL);
    const yIm = new Mat(B, mc * nrL);
    for (let b = 0; b < B; b++) {
      const H = batch.channels[b];
      const sb = b * half, yb = b * mc * nrL;
      for (let t = 0; t < mc; t++) {
        for (let r = 0; r < nrL; r++) {
          let re = 0, im = 0;
          for (let a = 0; a < ntL; a++) {
            const hre = H.re[r * ntL + a], him = H.im[r * ntL + a];
            const xre = sRe.data[sb + t * ntL + a];
            const xim = sIm.data[sb + t * ntL + a];
            re += hre * xre - him * xim;
            im += hre * xim + him * xre;
          }
          const q = yb + t * nrL + r;
          yRe.data[q] = re + batch.noiseRe[q];
          yIm.data[q] = im + batch.noiseIm[q];
        }
      }
    }

    const xmRe = new Mat(B, mc * ntL);
    const xmIm = new Mat(B, mc * ntL);
    for (let b = 0; b < B; b++) {
      const A = batch.equalizers[b];
      const yb = b * mc * nrL, xb = b * mc * ntL;
      for (let t = 0; t < mc; t++) {
        for (let a = 0; a < ntL; a++) {
          let re = 0, im = 0;
          for (let r = 0; r < nrL; r++) {
            const are = A.re[a * nrL + r], aim = A.im[a * nrL + r];
            const q = yb + t * nrL + r;
            re += are * yRe.data[q] - aim * yIm.data[q];
            im += are * yIm.data[q] + aim * yRe.data[q];
          }
          xmRe.data[xb + t * ntL + a] = re;
          xmIm.data[xb + t * ntL + a] = im;
        }
      }
    }

    const cat = new Mat(B * mc, this.g);
    for (let b = 0; b < B; b++) {
      const H = batch.channels[b];
      const yb = b * mc * nrL;
      for (let t = 0; t < mc; t++) {
        const row = (b * mc + t) * this.g;
        for (let r = 0; r < nrL; r++) {
          cat.data[row + r] = yRe.data[yb + t * nrL + r];
          cat.data[row + nrL + r] = yIm.data[yb + t * nrL + r];
        }
        // vectorised CSI, column-major (a * nr + r), real then imaginary
        const base = row + 2 * nrL;
        for (let a = 0; a < ntL; a++) {
          for (let r = 0; r < nrL; r++) {
            cat.data[base + a * nrL + r] = H.re[r * ntL + a];
            cat.data[base + ntL * nrL + a * nrL + r] = H.im[r * ntL + a];
          }
        }
      }
    }
    let resOut = cat;
    for (const layer of this.res) resOut = layer.forward(resOut, training);

    const xe = new Mat(B, d);
    for (let b = 0; b < B; b++) {
      const xb = b * mc * ntL;
      for (let t = 0; t < mc; t++) {
        const rr = (b * mc + t) * 2 * ntL;
        for (let a = 0; a < ntL; a++) {
          const j = t * ntL + a;
          xe.data[b * d + j] = xmRe.data[xb + j] + resOut.data[rr + a];
          xe.data[b * d + half + j] = xmIm.data[xb + j] + resOut.data[rr + ntL + a];
        }
      }
    }
    return { xe, yRe, yIm };
  }

  /** Training-mode forward; returns per-decoder logits and shared caches. */
  private fullForward(batch: Batch, training: boolean):
      { logits: Mat[]; xe: Mat } {
    const { sRe, sIm } = this.encodersForward(batch, training);
    const { xe } = this.receiverForward(batch, sRe, sIm, training);
    const logits: Mat[] = [];
    for (let v = 0; v < this.cfg.v; v++) {
      let h: Mat = xe;
      for (const layer of this.dec[v]) h = layer.forward(h, training);
      logits.push(h);
    }
    return { logits, xe };
  }

  private lossFromLogits(batch: Batch, logits: Mat[],
                         gradsOut: Mat[] | null): StepMetrics {
    const { m, v } = this.cfg;
    const B = batch.size;
    let loss = 0;
    let correct = 0;
    for (let vi = 0; vi < v; vi++) {
      const L = logits[vi];
      const dL = gradsOut ? new Mat(B, m) : null;
      for (let b = 0; b < B; b++) {
        const lb = b * m;
        let mx = -Infinity;
        let arg = 0;
        for (let j = 0; j < m; j++) {
          if (L.data[lb + j] > mx) {
            mx = L.data[lb + j];
            arg = j;
          }
        }
        let z = 0;
        for (let j = 0; j < m; j++) z += Math.exp(L.data[lb + j] - mx);
        const target = batch.idx[vi][b];
        loss += -(L.data[lb + target] - mx - Math.log(z));
        if (arg === target) correct++;
        if (dL) {
          for (let j = 0; j < m; j++) {
            dL.data[lb + j] = Math.exp(L.data[lb + j] - mx) / z / B;
          }
          dL.data[lb + target] -= 1.0 / B;
        }
      }
      if (dL && gradsOut) gradsOut.push(dL);
    }
    return { loss: loss / B, accuracy: correct / (B * v) };
  }

  /** Training loss without gradients (finite-difference reference path). */
  lossOnly(batch: Batch): number {
    const { logits } = this.fullForward(batch, true);
    return this.lossFromLogits(batch, logits, null).loss;
  }

  /** Forward + backward; gradients accumulate into the layers. */
  lossAndGrad(batch: Batch): StepMetrics {
    const { v, d, ntL, nrL } = this.cfg;
    const mc = this.mc, half = d / 2, B = batch.size;
    const { logits, xe } = this.fullForward(batch, true);
    const dLogits: Mat[] = [];
    const metrics = this.lossFromLogits(batch, logits, dLogits);

    const dXe = new Mat(B, d);
    for (let vi = 0; vi < v; vi++) {
      let g: Mat = dLogits[vi];
      for (let li = this.dec[vi].length - 1; li >= 0; li--) {
        g = this.dec[vi][li].backward(g);
      }
      for (let i = 0; i < dXe.data.length; i++) dXe.data[i] += g.data[i];
    }

    // split into MMSE-path and residual-path gradients
    const dRes = new Mat(B * mc, 2 * ntL);
    for (let b = 0; b < B; b++) {
      for (let t = 0; t < mc; t++) {
        const rr = (b * mc + t) * 2 * ntL;
        for (let a = 0; a < ntL; a++) {
          const j = t * ntL + a;
          dRes.data[rr + a] = dXe.data[b * d + j];
          dRes.data[rr + ntL + a] = dXe.data[b * d + half + j];
        }
      }
    }
    let gRes: Mat = dRes;
    for (let li = this.res.length - 1; li >= 0; li--) {
      gRes = this.res[li].backward(gRes);
    }

    // received-signal gradient: residual-net input plus MMSE transpose
    const dYRe = new Mat(B, mc * nrL);
    const dYIm = new Mat(B, mc * nrL);
    for (let b = 0; b < B; b++) {
      const A = batch.equalizers[b];
      const yb = b * mc * nrL;
      for (let t = 0; t < mc; t++) {
        const row = (b * mc + t) * this.g;
        for (let r = 0; r < nrL; r++) {
          dYRe.data[yb + t * nrL + r] += gRes.data[row + r];
          dYIm.data[yb + t * nrL + r] += gRes.data[row + nrL + r];
        }
        for (let r = 0; r < nrL; r++) {
          let re = 0, im = 0;
          for (let a = 0; a < ntL; a++) {
            const are = A.re[a * nrL + r], aim = A.im[a * nrL + r];
            const dxr = dXe.data[b * d + t * ntL + a];
            const dxi = dXe.data[b * d + half + t * ntL + a];
            re += are * dxr + aim * dxi;
            im += -aim * dxr + are * dxi;
          }
          dYRe.data[yb + t * nrL + r] += re;
          dYIm.data[yb + t * nrL + r] += im;
        }
      }
    }

    // channel transpose down to the superimposed signal
    const dSRe = new Mat(B, half);
    const dSIm = new Mat(B, half);
    for (let b = 0; b < B; b++) {
      const H = batch.channels[b];
      const yb = b * mc * nrL, sb = b * half;
      for (let t = 0; t < mc; t++) {
        for (let a = 0; a < ntL; a++) {
          let re = 0, im = 0;
          for (let r = 0; r < nrL; r++) {
            const hre = H.re[r * ntL + a], him = H.im[r * ntL + a];
            const dyr = dYRe.data[yb + t * nrL + r];
            const dyi = dYIm.data[yb + t * nrL + r];
            re += hre * dyr + him * dyi;
            im += -him * dyr + hre * dyi;
          }
          dSRe.data[sb + t * ntL + a] = re;
          dSIm.data[sb + t * ntL + a] = im;
        }
      }
    }

    // every encoder sees the same superposition gradient
    const dSv = new Mat(B, d);
    for (let b = 0; b < B; b++) {
      for (let j = 0; j < half; j++) {
        dSv.data[b * d + j] = dSRe.data[b * half + j];
        dSv.data[b * d + half + j] = dSIm.data[b * half + j];
      }
    }
    for (let vi = 0; vi < v; vi++) {
      let g: Mat = dSv;
      for (let li = this.enc[vi].length - 1; li >= 0; li--) {
        g = this.enc[vi][li].backward(g);
      }
    }
    return metrics;
  }

  /** Inference-mode accuracy on a fresh batch (running BN statistics). */
  evalAccuracy(batch: Batch): number {
    const { logits } = this.fullForward(batch, false);
    return this.lossFromLogits(batch, logits, null).accuracy;
  }

  /**
   * Inference-mode codeword table: (V, D/2, M) complex, C-order, packed as
   * first-half real / second-half imaginary of each encoder output.
   */
  enumerateCodebook(): { re: Float64Array; im: Float64Array } {
    const { v, m, d } = this.cfg;
    const half = d / 2;
    const re = new Float64Array(v * half * m);
    const im = new Float64Array(v * half * m);
    const idx = new Int32Array(m);
    for (let j = 0; j < m; j++) idx[j] = j;
    for (let vi = 0; vi < v; vi++) {
      let h = (this.enc[vi][0] as Affine).forwardOneHot(idx);
      for (let li = 1; li < this.enc[vi].length; li++) {
        h = this.enc[vi][li].forward(h, false);
      }
      for (let j = 0; j < m; j++) {
        for (let k = 0; k < half; k++) {
          re[(vi * half + k) * m + j] = h.data[j * d + k];
          im[(vi * half + k) * m + j] = h.data[j * d + half + k];
        }
      }
    }
    return { re, im };
  }

  /** Largest |Re<c_i,c_j>|/(D/2V) across encoders, in dB (codebook health). */
  maxInterCorrelationDb(): number {
    const { v, m, d } = this.cfg;
    const half = d / 2;
    const { re, im } = this.enumerateCodebook();
    const norm = d / (2 * v);
    let worst = 0;
    for (let i = 0; i < v; i++) {
      for (let j = i + 1; j < v; j++) {
        for (let ki = 0; ki < m; ki++) {
          for (let kj = 0; kj < m; kj++) {
            let acc = 0;
            for (let k = 0; k < half; k++) {
              const ii = (i * half + k) * m + ki;
              const jj = (j * half + k) * m + kj;
              acc += re[ii] * re[jj] + im[ii] * im[jj];
            }
            const val = Math.abs(acc) / norm;
            if (val > worst) worst = val;
          }
        }
      }
    }
    return worst > 0 ? 10 * Math.log10(worst) : -Infinity;
  }
}
