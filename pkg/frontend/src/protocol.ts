// Wire protocol spoken with the bridge websocket endpoint /ws.
// Every number is a finite double; joint arrays have length m.

export interface HelloMsg {
  type: "hello";
  m: number;
  controller_mode: string;
  master_links: [number, number];
  slave_links: [number, number];
  rate: number;
  paused: boolean;
}

export interface StateMsg {
  type: "state";
  t: number;
  q1: number[];
  q2: number[];
  qc2: number[];
  ee1: [number, number];
  ee2: [number, number];
  tau1_star: number[];
  tau2_star: number[];
  T1: number;
  T2: number;
  sync_error: number;
  reflected: number[];
}

export interface AckMsg {
  type: "ack";
  what: string;
  [key: string]: unknown;
}

export interface ErrorMsg {
  type: "error";
  detail: string;
}

export type ServerMsg = HelloMsg | StateMsg | AckMsg | ErrorMsg;

export type ClientMsg =
  | { type: "set_target"; x: number; y: number }
  | { type: "set_torque"; values: number[] }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" }
  | { type: "set_rate"; value: number };

export class ProtocolError extends Error {}

function finiteNumber(v: unknown, name: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolError(`${name} must be a finite number, got ${String(v)}`);
  }
  return v;
}

function numberArray(v: unknown, name: string): number[] {
  if (!Array.isArray(v) || v.some((x) => typeof x !== "number" || !Number.isFinite(x))) {
    throw new ProtocolError(`${name} must be an array of finite numbers`);
  }
  return v as number[];
}

function pair(v: unknown, name: string): [number, number] {
  const a = numberArray(v, name);
  if (a.length !== 2) throw new ProtocolError(`${name} must have length 2`);
  return [a[0], a[1]];
}

export function parseServerMessage(raw: string): ServerMsg {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new ProtocolError(`not valid JSON: ${String(err)}`);
  }
  if (typeof doc !== "object" || doc === null) {
    throw new ProtocolError("message must be a JSON object");
  }
  const msg = doc as Record<string, unknown>;
  switch (msg.type) {
    case "hello":
      return {
        type: "hello",
        m: finiteNumber(msg.m, "m"),
        controller_mode: String(msg.controller_mode),
        master_links: pair(msg.master_links, "master_links"),
        slave_links: pair(msg.slave_links, "slave_links"),
        rate: finiteNumber(msg.rate, "rate"),
        paused: Boolean(msg.paused),
      };
    case "state":
      return {
        type: "state",
        t: finiteNumber(msg.t, "t"),
        q1: numberArray(msg.q1, "q1"),
        q2: numberArray(msg.q2, "q2"),
        qc2: numberArray(msg.qc2, "qc2"),
        ee1: pair(msg.ee1, "ee1"),
        ee2: pair(msg.ee2, "ee2"),
        tau1_star: numberArray(msg.tau1_star, "tau1_star"),
        tau2_star: numberArray(msg.tau2_star, "tau2_star"),
        T1: finiteNumber(msg.T1, "T1"),
        T2: finiteNumber(msg.T2, "T2"),
        sync_error: finiteNumber(msg.sync_error, "sync_error"),
        reflected: numberArray(msg.reflected, "reflected"),
      };
    case "ack":
      return { ...msg, type: "ack", what: String(msg.what) } as AckMsg;
    case "error":
      return { type: "error", detail: String(msg.detail) };
    default:
      throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
}

export function encodeClientMessage(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
