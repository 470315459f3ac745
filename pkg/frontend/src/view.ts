// Client-side session model.  Everything rendered comes from bridge
// messages; the arms never move without one.

import { HelloMsg, StateMsg } from "./protocol.js";
import { TimedRingBuffer } from "./ringbuffer.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

const GAUGE_WINDOW_S = 30;

export class ViewState {
  connection: ConnectionStatus = "connecting";
  hello: HelloMsg | null = null;
  lastState: StateMsg | null = null;
  dragTarget: [number, number] | null = null;
  messagesSeen = 0;

  readonly syncError = new TimedRingBuffer(GAUGE_WINDOW_S);
  readonly delayT1 = new TimedRingBuffer(GAUGE_WINDOW_S);
  readonly delayT2 = new TimedRingBuffer(GAUGE_WINDOW_S);
  readonly tau1: TimedRingBuffer[] = [];
  readonly reflected: TimedRingBuffer[] = [];

  applyHello(msg: HelloMsg): void {
    this.hello = msg;
    this.tau1.length = 0;
    this.reflected.length = 0;
    for (let j = 0; j < msg.m; j++) {
      this.tau1.push(new TimedRingBuffer(GAUGE_WINDOW_S));
      this.reflected.push(new TimedRingBuffer(GAUGE_WINDOW_S));
    }
  }

  applyState(msg: StateMsg): void {
    this.lastState = msg;
    this.messagesSeen += 1;
    this.syncError.push(msg.t, msg.sync_error);
    this.delayT1.push(msg.t, msg.T1);
    this.delayT2.push(msg.t, msg.T2);
    for (let j = 0; j < this.tau1.length; j++) {
      this.tau1[j].push(msg.t, msg.tau1_star[j] ?? 0);
      this.reflected[j].push(msg.t, msg.reflected[j] ?? 0);
    }
  }

  reach(): number {
    if (!this.hello) return 1.0;
    const [a, b] = this.hello.master_links;
    return a + b;
  }
}
