import { describe, expect, it } from "vitest";

import { forwardKinematics } from "../src/fk.js";
import { TimedRingBuffer } from "../src/ringbuffer.js";
import { RateLimiter } from "../src/throttle.js";
import { ViewState } from "../src/view.js";
import { clampToReach, WorkspaceTransform } from "../src/workspace.js";
import { DragController } from "../src/drag.js";
import { StateMsg } from "../src/protocol.js";

describe("forwardKinematics", () => {
  it("matches the simulator's canonical arm", () => {
    const stretched = forwardKinematics(0.5, 0.4, [0, 0]);
    expect(stretched.ee[0]).toBeCloseTo(0.9, 12);
    expect(stretched.ee[1]).toBeCloseTo(0.0, 12);
    const bent = forwardKinematics(0.5, 0.4, [0, Math.PI / 2]);
    expect(bent.ee[0]).toBeCloseTo(0.5, 12);
    expect(bent.ee[1]).toBeCloseTo(0.4, 12);
  });
});

describe("TimedRingBuffer", () => {
  it("keeps only the trailing window", () => {
    const buf = new TimedRingBuffer(30);
    for (let t = 0; t <= 100; t += 0.5) buf.push(t, t);
    expect(buf.times()[0]).toBeGreaterThanOrEqual(70);
    expect(buf.values()[buf.length - 1]).toBe(100);
  });

  it("handles a sim reset (time rewind)", () => {
    const buf = new TimedRingBuffer(30);
    buf.push(5, 1);
    buf.push(6, 2);
    buf.push(0.5, 3);
    expect(buf.times()).toEqual([0.5]);
  });
});

describe("workspace", () => {
  it("clamps targets to the reachable disk", () => {
    const [x, y] = clampToReach(3.0, 4.0, 0.9);
    expect(Math.hypot(x, y)).toBeCloseTo(0.9, 12);
    expect(clampToReach(0.1, 0.2, 0.9)).toEqual([0.1, 0.2]);
  });

  it("screen transform round-trips", () => {
    const tf = new WorkspaceTransform(520, 520, 0.9);
    const [px, py] = tf.toScreen(0.3, -0.2);
    const [x, y] = tf.toWorld(px, py);
    expect(x).toBeCloseTo(0.3, 10);
    expect(y).toBeCloseTo(-0.2, 10);
  });
});

describe("RateLimiter", () => {
  it("caps the rate in any one-second window", () => {
    let now = 0;
    const limiter = new RateLimiter(60, () => now);
    let sent = 0;
    for (let i = 0; i < 1000; i++) {
      now = i * 0.001; // 1 kHz attempts
      if (limiter.tryAcquire()) sent++;
    }
    expect(sent).toBeLessThanOrEqual(60);
    expect(sent).toBeGreaterThanOrEqual(59);
  });
});

function stateAt(t: number): StateMsg {
  return {
    type: "state", t, q1: [0, 0], q2: [0, 0], qc2: [0, 0],
    ee1: [0.9, 0], ee2: [0.9, 0], tau1_star: [0, 0], tau2_star: [0, 0],
    T1: 0.4, T2: 0.5, sync_error: 0.25, reflected: [0, 0],
  };
}

describe("ViewState", () => {
  it("renders only received data (no client-side physics)", () => {
    const view = new ViewState();
    expect(view.lastState).toBeNull();
    view.applyHello({
      type: "hello", m: 2, controller_mode: "kinematic",
      master_links: [0.5, 0.4], slave_links: [0.5, 0.4], rate: 1, paused: false,
    });
    expect(view.lastState).toBeNull(); // hello alone moves nothing
    view.applyState(stateAt(0.1));
    expect(view.lastState?.t).toBe(0.1);
    expect(view.syncError.length).toBe(1);
    expect(view.reach()).toBeCloseTo(0.9, 12);
  });
});

describe("DragController", () => {
  it("clamps, throttles, and stops on release", () => {
    let now = 0;
    const sent: Array<[number, number]> = [];
    const drag = new DragController(
      (x, y) => sent.push([x, y]),
      () => 0.9,
      new RateLimiter(60, () => now),
    );
    drag.pointerDown(0.2, 0.1);
    for (let i = 0; i < 500; i++) {
      now = i * 0.002; // 500 Hz pointer moves for one second
      drag.pointerMove(2.0, 2.0); // far outside the workspace
      drag.flush();
    }
    drag.pointerUp();
    const countAtRelease = sent.length;
    expect(countAtRelease).toBeLessThanOrEqual(61);
    for (const [x, y] of sent.slice(1)) {
      expect(Math.hypot(x, y)).toBeLessThanOrEqual(0.9 + 1e-12);
    }
    // no further messages after release
    now += 1;
    drag.pointerMove(0.5, 0.5);
    drag.flush();
    expect(sent.length).toBe(countAtRelease);
  });

  it("a click without drag sends a single target", () => {
    const sent: Array<[number, number]> = [];
    const drag = new DragController((x, y) => sent.push([x, y]), () => 0.9);
    drag.pointerDown(0.25, 0.3);
    drag.pointerUp();
    expect(sent).toEqual([[0.25, 0.3]]);
  });
});
