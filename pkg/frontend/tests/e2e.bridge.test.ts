// End-to-end session against a live bridge: sustained telemetry rate,
// steering through drag messages, and the dead-man rule, all through the
// same client/drag/view code the browser runs.

import { spawn, ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CockpitClient, WebSocketLike } from "../src/client.js";
import { DragController } from "../src/drag.js";
import { StateMsg } from "../src/protocol.js";
import { ViewState } from "../src/view.js";

const FIXTURE = join(dirname(fileURLToPath(import.meta.url)), "fixtures", "e2e.json");

let bridge: ChildProcess;
let port = 0;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

beforeAll(async () => {
  bridge = spawn("python3", ["-m", "telesim.cli", "serve", FIXTURE, "--port", "0"], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("bridge did not start")), 15000);
    bridge.stdout!.on("data", (chunk: Buffer) => {
      const match = /ws:\/\/[^:]+:(\d+)\/ws/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    bridge.stderr!.on("data", (chunk: Buffer) => process.stderr.write(chunk));
    bridge.on("exit", (code) => reject(new Error(`bridge exited early (${code})`)));
  });
}, 20000);

afterAll(() => {
  bridge?.kill();
});

describe("cockpit against a live bridge", () => {
  it(
    "streams >= 20 state msgs/s for 60 s, steers the consensus, and drops torque on release",
    async () => {
      const view = new ViewState();
      const states: StateMsg[] = [];
      let status = "connecting";
      const client = new CockpitClient(`ws://127.0.0.1:${port}/ws`, {
        wsFactory: (url) => new WebSocket(url) as unknown as WebSocketLike,
        onMessage: (msg) => {
          if (msg.type === "hello") view.applyHello(msg);
          if (msg.type === "state") {
            view.applyState(msg);
            states.push(msg);
          }
        },
        onStatus: (s) => {
          status = s;
        },
      });
      client.connect();
      const tStart = Date.now();
      while (status !== "open") {
        if (Date.now() - tStart > 10000) throw new Error("connect timeout");
        await sleep(20);
      }
      while (!view.hello) await sleep(20);
      expect(view.hello.master_links[0]).toBeCloseTo(0.5, 9);
      expect(view.hello.master_links[1]).toBeCloseTo(0.4, 9);

      const drag = new DragController(
        (x, y) => client.send({ type: "set_target", x, y }),
        () => view.reach(),
      );

      // phase A: free motion stream
      await sleep(20000);
      expect(view.lastState).not.toBeNull();
      const target: [number, number] = [0.38, 0.6];
      const eeBefore = view.lastState!.ee2;
      const distBefore = Math.hypot(eeBefore[0] - target[0], eeBefore[1] - target[1]);

      // phase B: hold a drag toward the target for 20 s (pointer stream)
      drag.pointerDown(target[0], target[1]);
      const holdEnd = Date.now() + 20000;
      while (Date.now() < holdEnd) {
        drag.pointerMove(target[0], target[1]);
        drag.flush();
        await sleep(33);
      }
      const eeHeld = view.lastState!.ee2;
      const distHeld = Math.hypot(eeHeld[0] - target[0], eeHeld[1] - target[1]);
      expect(distHeld).toBeLessThan(distBefore * 0.5);
      expect(distHeld).toBeLessThan(0.05);
      const sawTorque = states.some((s) => s.tau1_star.some((v) => v !== 0));
      expect(sawTorque).toBe(true);

      // phase C: release; the spring must disengage within 0.6 s
      drag.pointerUp();
      const releaseWall = Date.now();
      const releaseCount = states.length;
      let zeroAt: number | null = null;
      while (Date.now() - releaseWall < 3000) {
        const fresh = states.slice(releaseCount);
        const zero = fresh.find((s) => s.tau1_star.every((v) => v === 0));
        if (zero) {
          zeroAt = Date.now();
          break;
        }
        await sleep(20);
      }
      expect(zeroAt).not.toBeNull();
      expect((zeroAt! - releaseWall) / 1000).toBeLessThanOrEqual(0.6);

      // keep streaming to the 60 s mark, then check the sustained rate
      const remaining = 60000 - (Date.now() - tStart);
      if (remaining > 0) await sleep(remaining);
      const elapsed = (Date.now() - tStart) / 1000;
      const rate = states.length / elapsed;
      expect(rate).toBeGreaterThanOrEqual(20);

      client.close();
    },
    90000,
  );
});
