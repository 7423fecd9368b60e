/** Adam optimiser with a linear learning-rate ramp across all steps. */

import { ParamTensor } from "./layers.js";

export class Adam {
  private readonly beta1 = 0.9;
  private readonly beta2 = 0.999;
  private readonly eps = 1e-8;
  private m = new Map<ParamTensor, Float64Array>();
  private v = new Map<ParamTensor, Float64Array>();
  private t = 0;

  constructor(private readonly lrInit: number,
              private readonly lrFinal: number,
              private readonly totalSteps: number) {}

  currentLr(): number {
    const frac = this.totalSteps <= 1 ? 1 : Math.min(this.t / (this.totalSteps - 1), 1);
    return this.lrInit + (this.lrFinal - this.lrInit) * frac;
  }

  step(params: ParamTensor[]): void {
    const lr = this.currentLr();
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (const p of params) {
      let m = this.m.get(p);
      let v = this.v.get(p);
      if (!m) {
        m = new Float64Array(p.value.length);
        v = new Float64Array(p.value.length);
        this.m.set(p, m);
        this.v.set(p, v!);
      }
      const g = p.grad, x = p.value, vv = v!;
      for (let i = 0; i < x.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        vv[i] = this.beta2 * vv[i] + (1 - this.beta2) * g[i] * g[i];
        x[i] -= lr * (m[i] / c1) / (Math.sqrt(vv[i] / c2) + this.eps);
      }
    }
  }
}
