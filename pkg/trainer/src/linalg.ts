/**
 * Small complex linear algebra for per-sample channel work: the MMSE
 * operator A = (H'H + s^2 I)^-1 H' via Gaussian elimination.  Complex
 * matrices are split (re, im) Float64Array pairs, row-major.
 */

export interface CMat {
  rows: number;
  cols: number;
  re: Float64Array;
  im: Float64Array;
}

export function cmat(rows: number, cols: number): CMat {
  return { rows, cols, re: new Float64Array(rows * cols),
           im: new Float64Array(rows * cols) };
}

/** A = (H'H + sigma2 I)^(-1) H', shape (nt, nr).  sigma2 > 0. */
export function mmseOperator(H: CMat, sigma2: number): CMat {
  const nr = H.rows, nt = H.cols;
  // gram = H'H + sigma2 I  (nt x nt), rhs = H' (nt x nr)
  const g = cmat(nt, nt);
  const rhs = cmat(nt, nr);
  for (let a = 0; a < nt; a++) {
    for (let b = 0; b < nt; b++) {
      let sre = 0, sim = 0;
      for (let r = 0; r < nr; r++) {
        const hra = r * nt + a, hrb = r * nt + b;
        // conj(H[r,a]) * H[r,b]
        sre += H.re[hra] * H.re[hrb] + H.im[hra] * H.im[hrb];
        sim += H.re[hra] * H.im[hrb] - H.im[hra] * H.re[hrb];
      }
      g.re[a * nt + b] = sre + (a === b ? sigma2 : 0);
      g.im[a * nt + b] = sim;
    }
    for (let r = 0; r < nr; r++) {
      const hra = r * nt + a;
      rhs.re[a * nr + r] = H.re[hra];
      rhs.im[a * nr + r] = -H.im[hra];
    }
  }
  solveInPlace(g, rhs);
  return rhs;
}

/** Solve g X = rhs in place (rhs becomes X); partial pivoting. */
function solveInPlace(g: CMat, rhs: CMat): void {
  const n = g.rows, m = rhs.cols;
  for (let col = 0; col < n; col++) {
    let pivot = col;
    let best = g.re[col * n + col] ** 2 + g.im[col * n + col] ** 2;
    for (let r = col + 1; r < n; r++) {
      const mag = g.re[r * n + col] ** 2 + g.im[r * n + col] ** 2;
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best === 0) throw new Error("singular MMSE system");
    if (pivot !== col) {
      swapRows(g, col, pivot);
      swapRows(rhs, col, pivot);
    }
    const pre = g.re[col * n + col], pim = g.im[col * n + col];
    const inv = 1.0 / (pre * pre + pim * pim);
    for (let r = 0; r < n; r++) {
      if (r === col) continue;
      const are = g.re[r * n + col], aim = g.im[r * n + col];
      if (are === 0 && aim === 0) continue;
      // factor = g[r,col] / pivot
      const fre = (are * pre + aim * pim) * inv;
      const fim = (aim * pre - are * pim) * inv;
      for (let c = col; c < n; c++) {
        const pr = g.re[col * n + c], pi = g.im[col * n + c];
        g.re[r * n + c] -= fre * pr - fim * pi;
        g.im[r * n + c] -= fre * pi + fim * pr;
      }
      for (let c = 0; c < m; c++) {
        const pr = rhs.re[col * m + c], pi = rhs.im[col * m + c];
        rhs.re[r * m + c] -= fre * pr - fim * pi;
        rhs.im[r * m + c] -= fre * pi + fim * pr;
      }
    }
  }
  for (let r = 0; r < n; r++) {
    const pre = g.re[r * n + r], pim = g.im[r * n + r];
    const inv = 1.0 / (pre * pre + pim * pim);
    for (let c = 0; c < m; c++) {
      const xre = rhs.re[r * m + c], xim = rhs.im[r * m + c];
      rhs.re[r * m + c] = (xre * pre + xim * pim) * inv;
      rhs.im[r * m + c] = (xim * pre - xre * pim) * inv;
    }
  }
}

function swapRows(mat: CMat, a: number, b: number): void {
  const n = mat.cols;
  for (let c = 0; c < n; c++) {
    let t = mat.re[a * n + c];
    mat.re[a * n + c] = mat.re[b * n + c];
    mat.re[b * n + c] = t;
    t = mat.im[a * n + c];
    mat.im[a * n + c] = mat.im[b * n + c];
    mat.im[b * n + c] = t;
  }
}
