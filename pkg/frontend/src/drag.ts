// Pointer handling: drag the master's end-effector target around the
// workspace.  Targets are clamped to the reachable disk and throttled to
// at most 60 messages per second; releasing the pointer stops the stream,
// which lets the bridge's dead-man rule disengage the spring.

import { RateLimiter } from "./throttle.js";
import { clampToReach } from "./workspace.js";

export type TargetSink = (x: number, y: number) => void;

export class DragController {
  private dragging = false;
  private pendingTarget: [number, number] | null = null;
  lastSent: [number, number] | null = null;

  constructor(
    private readonly sink: TargetSink,
    private readonly reach: () => number,
    private readonly limiter = new RateLimiter(60),
  ) {}

  pointerDown(wx: number, wy: number): void {
    this.dragging = true;
    this.pointerMove(wx, wy);
  }

  pointerMove(wx: number, wy: number): void {
    if (!this.dragging) return;
    const [x, y] = clampToReach(wx, wy, this.reach());
    this.pendingTarget = [x, y];
    this.flush();
  }

  pointerUp(): void {
    // flush the final position, then go quiet so the dead-man rule fires
    this.flush();
    this.dragging = false;
    this.pendingTarget = null;
  }

  isDragging(): boolean {
    return this.dragging;
  }

  /** Send the most recent pending target if the rate budget allows. */
  flush(): void {
    if (!this.pendingTarget) return;
    if (!this.limiter.tryAcquire()) return;
    const [x, y] = this.pendingTarget;
    this.sink(x, y);
    this.lastSent = [x, y];
    this.pendingTarget = null;
  }
}
