/**
 * Row-major float64 matrices and the handful of dense kernels the trainer
 * needs.  Weights of affine layers are stored transposed (in x out) so that
 * forward, input-gradient and weight-gradient loops all stream contiguous
 * rows.
 */

export class Mat {
  readonly rows: number;
  readonly cols: number;
  readonly data: Float64Array;

  constructor(rows: number, cols: number, data?: Float64Array) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    if (this.data.length !== rows * cols) {
      throw new Error(`data length ${this.data.length} != ${rows}x${cols}`);
    }
  }

  static zerosLike(m: Mat): Mat {
    return new Mat(m.rows, m.cols);
  }

  fill(v: number): void {
    this.data.fill(v);
  }

  copy(): Mat {
    return new Mat(this.rows, this.cols, this.data.slice());
  }
}

/** out(B,O) = x(B,K) @ wt(K,O); out is overwritten. */
export function matmul(x: Mat, wt: Mat, out: Mat): void {
  const B = x.rows, K = x.cols, O = wt.cols;
  if (wt.rows !== K || out.rows !== B || out.cols !== O) {
    throw new Error("matmul shape mismatch");
  }
  const xd = x.data, wd = wt.data, od = out.data;
  od.fill(0);
  for (let b = 0; b < B; b++) {
    const xb = b * K, ob = b * O;
    for (let k = 0; k < K; k++) {
      const a = xd[xb + k];
      if (a === 0) continue;
      const wk = k * O;
      for (let o = 0; o < O; o++) od[ob + o] += a * wd[wk + o];
    }
  }
}

/** dx(B,K) = dOut(B,O) @ wt(K,O)^T; dx is overwritten. */
export function matmulGradInput(dOut: Mat, wt: Mat, dx: Mat): void {
  const B = dOut.rows, O = dOut.cols, K = wt.rows;
  if (wt.cols !== O || dx.rows !== B || dx.cols !== K) {
    throw new Error("matmulGradInput shape mismatch");
  }
  const gd = dOut.data, wd = wt.data, xd = dx.data;
  for (let b = 0; b < B; b++) {
    const gb = b * O, xb = b * K;
    for (let k = 0; k < K; k++) {
      const wk = k * O;
      let s = 0;
      for (let o = 0; o < O; o++) s += gd[gb + o] * wd[wk + o];
      xd[xb + k] = s;
    }
  }
}

/** dWt(K,O) += x(B,K)^T @ dOut(B,O). */
export function matmulGradWeight(x: Mat, dOut: Mat, dWt: Mat): void {
  const B = x.rows, K = x.cols, O = dOut.cols;
  if (dOut.rows !== B || dWt.rows !== K || dWt.cols !== O) {
    throw new Error("matmulGradWeight shape mismatch");
  }
  const xd = x.data, gd = dOut.data, wd = dWt.data;
  for (let b = 0; b < B; b++) {
    const xb = b * K, gb = b * O;
    for (let k = 0; k < K; k++) {
      const a = xd[xb + k];
      if (a === 0) continue;
      const wk = k * O;
      for (let o = 0; o < O; o++) wd[wk + o] += a * gd[gb + o];
    }
  }
}
