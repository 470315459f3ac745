// Time-windowed history for the gauge strips: keeps (t, value) pairs from
// the last `windowSeconds` of sim time.

export class TimedRingBuffer {
  private ts: number[] = [];
  private vs: number[] = [];

  constructor(readonly windowSeconds: number) {}

  push(t: number, value: number): void {
    // a sim reset rewinds time; drop stale future samples
    while (this.ts.length > 0 && this.ts[this.ts.length - 1] >= t) {
      this.ts.pop();
      this.vs.pop();
    }
    this.ts.push(t);
    this.vs.push(value);
    const cutoff = t - this.windowSeconds;
    let drop = 0;
    while (drop < this.ts.length && this.ts[drop] < cutoff) drop++;
    if (drop > 0) {
      this.ts.splice(0, drop);
      this.vs.splice(0, drop);
    }
  }

  get length(): number {
    return this.ts.length;
  }

  times(): readonly number[] {
    return this.ts;
  }

  values(): readonly number[] {
    return this.vs;
  }

  span(): [number, number] {
    if (this.vs.length === 0) return [0, 1];
    let lo = this.vs[0];
    let hi = this.vs[0];
    for (const v of this.vs) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    return [lo, hi];
  }
}
