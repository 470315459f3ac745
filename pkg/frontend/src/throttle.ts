// Message-rate limiter for pointer-driven traffic (at most maxPerSecond
// sends in any trailing one-second window).

export class RateLimiter {
  private stamps: number[] = [];

  constructor(
    readonly maxPerSecond: number,
    private readonly now: () => number = () => performance.now() / 1000,
  ) {}

  tryAcquire(): boolean {
    const t = this.now();
    const cutoff = t - 1.0;
    while (this.stamps.length > 0 && this.stamps[0] <= cutoff) this.stamps.shift();
    if (this.stamps.length >= this.maxPerSecond) return false;
    this.stamps.push(t);
    return true;
  }
}
