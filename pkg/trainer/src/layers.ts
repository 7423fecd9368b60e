/**
 * Network layers with explicit forward/backward passes.  Each layer caches
 * whatever its backward pass needs; gradients accumulate into `grads` until
 * the optimiser consumes them.  Export descriptors mirror the simulator's
 * weights-container layer kinds.
 */

import { Mat, matmul, matmulGradInput, matmulGradWeight } from "./mat.js";
import { Rng } from "./rng.js";

export const BN_EPS = 1e-5;
export const BN_MOMENTUM = 0.1;

export interface ParamTensor {
  name: string;
  value: Float64Array;
  grad: Float64Array;
}

export interface LayerExport {
  kind: "affine" | "batch_norm" | "relu" | "power_norm" | "softmax";
  in: number;
  out: number;
  energy?: number;
  /** parameter blobs in container order */
  blobs: Float64Array[];
}

export interface Layer {
  readonly inDim: number;
  readonly outDim: number;
  params(): ParamTensor[];
  forward(x: Mat, training: boolean): Mat;
  backward(dOut: Mat): Mat;
  describe(): LayerExport;
}

export class Affine implements Layer {
  readonly inDim: number;
  readonly outDim: number;
  wt: Mat; // (in, out)
  bias: Float64Array;
  private wtGrad: Mat;
  private biasGrad: Float64Array;
  private xCache: Mat | null = null;

  constructor(inDim: number, outDim: number, rng: Rng | null, zero = false) {
    this.inDim = inDim;
    this.outDim = outDim;
    this.wt = new Mat(inDim, outDim);
    this.bias = new Float64Array(outDim);
    this.wtGrad = new Mat(inDim, outDim);
    this.biasGrad = new Float64Array(outDim);
    if (!zero && rng) {
      const scale = Math.sqrt(2.0 / (inDim + outDim));
      rng.fillGaussian(this.wt.data, scale);
    }
  }

  params(): ParamTensor[] {
    return [
      { name: "wt", value: this.wt.data, grad: this.wtGrad.data },
      { name: "bias", value: this.bias, grad: this.biasGrad },
    ];
  }

  forward(x: Mat, _training: boolean): Mat {
    this.xCache = x;
    const out = new Mat(x.rows, this.outDim);
    matmul(x, this.wt, out);
    const od = out.data, bd = this.bias, O = this.outDim;
    for (let b = 0; b < x.rows; b++) {
      const ob = b * O;
      for (let o = 0; o < O; o++) od[ob + o] += bd[o];
    }
    return out;
  }

  /** forward for one-hot rows given by index; cheap gather instead of matmul */
  forwardOneHot(idx: Int32Array): Mat {
    this.xCache = null;
    this.idxCache = idx;
    const B = idx.length, O = this.outDim;
    const out = new Mat(B, O);
    const od = out.data, wd = this.wt.data, bd = this.bias;
    for (let b = 0; b < B; b++) {
      const wk = idx[b] * O, ob = b * O;
      for (let o = 0; o < O; o++) od[ob + o] = wd[wk + o] + bd[o];
    }
    return out;
  }

  private idxCache: Int32Array | null = null;

  backward(dOut: Mat): Mat {
    const O = this.outDim, gd = dOut.data, bg = this.biasGrad;
    for (let b = 0; b < dOut.rows; b++) {
      const ob = b * O;
      for (let o = 0; o < O; o++) bg[o] += gd[ob + o];
    }
    if (this.idxCache) {
      const wd = this.wtGrad.data, idx = this.idxCache;
      for (let b = 0; b < dOut.rows; b++) {
        const wk = idx[b] * O, ob = b * O;
        for (let o = 0; o < O; o++) wd[wk + o] += gd[ob + o];
      }
      this.idxCache = null;
      return new Mat(dOut.rows, this.inDim); // one-hot input needs no gradient
    }
    const x = this.xCache;
    if (!x) throw new Error("backward before forward");
    matmulGradWeight(x, dOut, this.wtGrad);
    const dx = new Mat(dOut.rows, this.inDim);
    matmulGradInput(dOut, this.wt, dx);
    return dx;
  }

  describe(): LayerExport {
    // container stores W as (out, in) row-major
    const w = new Float64Array(this.outDim * this.inDim);
    for (let k = 0; k < this.inDim; k++) {
      for (let o = 0; o < this.outDim; o++) {
        w[o * this.inDim + k] = this.wt.data[k * this.outDim + o];
      }
    }
    return { kind: "affine", in: this.inDim, out: this.outDim,
             blobs: [w, this.bias.slice()] };
  }
}

export class BatchNorm implements Layer {
  readonly inDim: number;
  readonly outDim: number;
  gamma: Float64Array;
  beta: Float64Array;
  runningMean: Float64Array;
  runningVar: Float64Array;
  private gammaGrad: Float64Array;
  private betaGrad: Float64Array;
  private xhat: Mat | null = null;
  private invStd: Float64Array;

  constructor(dim: number) {
    this.inDim = dim;
    this.outDim = dim;
    this.gamma = new Float64Array(dim).fill(1);
    this.beta = new Float64Array(dim);
    this.runningMean = new Float64Array(dim);
    this.runningVar = new Float64Array(dim).fill(1);
    this.gammaGrad = new Float64Array(dim);
    this.betaGrad = new Float64Array(dim);
    this.invStd = new Float64Array(dim);
  }

  params(): ParamTensor[] {
    return [
      { name: "gamma", value: this.gamma, grad: this.gammaGrad },
      { name: "beta", value: this.beta, grad: this.betaGrad },
    ];
  }

  forward(x: Mat, training: boolean): Mat {
    const B = x.rows, D = this.inDim, xd = x.data;
    const out = new Mat(B, D);
    const od = out.data;
    if (!training) {
      for (let j = 0; j < D; j++) {
        const inv = 1.0 / Math.sqrt(this.runningVar[j] + BN_EPS);
        const g = this.gamma[j], m = this.runningMean[j], bt = this.beta[j];
        for (let b = 0; b < B; b++) od[b * D + j] = (xd[b * D + j] - m) * inv * g + bt;
      }
      this.xhat = null;
      return out;
    }
    const mean = new Float64Array(D);
    const varr = new Float64Array(D);
    for (let b = 0; b < B; b++) {
      const xb = b * D;
      for (let j = 0; j < D; j++) mean[j] += xd[xb + j];
    }
    for (let j = 0; j < D; j++) mean[j] /= B;
    for (let b = 0; b < B; b++) {
      const xb = b * D;
      for (let j = 0; j < D; j++) {
        const d = xd[xb + j] - mean[j];
        varr[j] += d * d;
      }
    }
    for (let j = 0; j < D; j++) varr[j] /= B;

    this.xhat = new Mat(B, D);
    const hd = this.xhat.data;
    for (let j = 0; j < D; j++) {
      const inv = 1.0 / Math.sqrt(varr[j] + BN_EPS);
      this.invStd[j] = inv;
      const g = this.gamma[j], m = mean[j], bt = this.beta[j];
      for (let b = 0; b < B; b++) {
        const h = (xd[b * D + j] - m) * inv;
        hd[b * D + j] = h;
        od[b * D + j] = g * h + bt;
      }
      this.runningMean[j] = (1 - BN_MOMENTUM) * this.runningMean[j] + BN_MOMENTUM * m;
      this.runningVar[j] = (1 - BN_MOMENTUM) * this.runningVar[j] + BN_MOMENTUM * varr[j];
    }
    return out;
  }

  backward(dOut: Mat): Mat {
    const xhat = this.xhat;
    if (!xhat) throw new Error("backward without a training forward");
    const B = dOut.rows, D = this.inDim;
    const gd = dOut.data, hd = xhat.data;
    const dx = new Mat(B, D);
    const xd = dx.data;
    for (let j = 0; j < D; j++) {
      let sumDy = 0;
      let sumDyH = 0;
      for (let b = 0; b < B; b++) {
        const g = gd[b * D + j];
        sumDy += g;
        sumDyH += g * hd[b * D + j];
      }
      this.betaGrad[j] += sumDy;
      this.gammaGrad[j] += sumDyH;
      const scale = this.gamma[j] * this.invStd[j];
      const mDy = sumDy / B, mDyH = sumDyH / B;
      for (let b = 0; b < B; b++) {
        xd[b * D + j] = scale * (gd[b * D + j] - mDy - hd[b * D + j] * mDyH);
      }
    }
    return dx;
  }

  describe(): LayerExport {
    return { kind: "batch_norm", in: this.inDim, out: this.outDim,
             blobs: [this.gamma.slice(), this.beta.slice(),
                     this.runningMean.slice(), this.runningVar.slice()] };
  }
}

export class ReLU implements Layer {
  readonly inDim: number;
  readonly outDim: number;
  private mask: Uint8Array | null = null;

  constructor(dim: number) {
    this.inDim = dim;
    this.outDim = dim;
  }

  params(): ParamTensor[] {
    return [];
  }

  forward(x: Mat, _training: boolean): Mat {
    const out = new Mat(x.rows, x.cols);
    const n = x.data.length;
    this.mask = new Uint8Array(n);
    for (let i = 0; i < n; i++) {
      const v = x.data[i];
      if (v > 0) {
        out.data[i] = v;
        this.mask[i] = 1;
      }
    }
    return out;
  }

  backward(dOut: Mat): Mat {
    const mask = this.mask;
    if (!mask) throw new Error("backward before forward");
    const dx = new Mat(dOut.rows, dOut.cols);
    for (let i = 0; i < dOut.data.length; i++) {
      if (mask[i]) dx.data[i] = dOut.data[i];
    }
    return dx;
  }

  describe(): LayerExport {
    return { kind: "relu", in: this.inDim, out: this.outDim, blobs: [] };
  }
}

/** Rescales every row to squared norm `energy` (exact constraint). */
export class PowerNorm implements Layer {
  readonly inDim: number;
  readonly outDim: number;
  readonly energy: number;
  private xCache: Mat | null = null;
  private norms: Float64Array | null = null;

  constructor(dim: number, energy: number) {
    this.inDim = dim;
    this.outDim = dim;
    this.energy = energy;
  }

  params(): ParamTensor[] {
    return [];
  }

  forward(x: Mat, _training: boolean): Mat {
    const B = x.rows, D = x.cols, xd = x.data;
    const out = new Mat(B, D);
    const target = Math.sqrt(this.energy);
    this.xCache = x;
    this.norms = new Float64Array(B);
    for (let b = 0; b < B; b++) {
      const xb = b * D;
      let s = 0;
      for (let j = 0; j < D; j++) s += xd[xb + j] * xd[xb + j];
      const norm = Math.sqrt(s);
      this.norms[b] = norm;
      const c = target / norm;
      for (let j = 0; j < D; j++) out.data[xb + j] = c * xd[xb + j];
    }
    return out;
  }

  backward(dOut: Mat): Mat {
    const x = this.xCache, norms = this.norms;
    if (!x || !norms) throw new Error("backward before forward");
    const B = x.rows, D = x.cols, xd = x.data, gd = dOut.data;
    const dx = new Mat(B, D);
    const target = Math.sqrt(this.energy);
    for (let b = 0; b < B; b++) {
      const xb = b * D;
      const norm = norms[b];
      let dot = 0;
      for (let j = 0; j < D; j++) dot += gd[xb + j] * xd[xb + j];
      dot /= norm * norm;
      const c = target / norm;
      for (let j = 0; j < D; j++) {
        dx.data[xb + j] = c * (gd[xb + j] - xd[xb + j] * dot);
      }
    }
    return dx;
  }

  describe(): LayerExport {
    return { kind: "power_norm", in: this.inDim, out: this.outDim,
             energy: this.energy, blobs: [] };
  }
}
