// Browser bootstrap: wires the websocket client, drag handling, controls
// and the render loop together.  Everything on screen is a function of
// bridge messages; there is no client-side physics.

import { CockpitClient } from "./client.js";
import { DragController } from "./drag.js";
import { drawArms, drawGauges } from "./render.js";
import { ViewState } from "./view.js";
import { WorkspaceTransform } from "./workspace.js";

function wsUrl(): string {
  const params = new URLSearchParams(location.search);
  const override = params.get("ws");
  if (override) return override;
  const host = location.host || "127.0.0.1:8765";
  return `ws://${host}/ws`;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const arena = el<HTMLCanvasElement>("arena");
const gauges = el<HTMLCanvasElement>("gauges");
const banner = el<HTMLDivElement>("banner");
const modeLabel = el<HTMLSpanElement>("mode");
const rateSlider = el<HTMLInputElement>("rate");
const rateLabel = el<HTMLSpanElement>("rate-label");

const view = new ViewState();
let tf = new WorkspaceTransform(arena.width, arena.height, view.reach());

const client = new CockpitClient(wsUrl(), {
  onMessage: (msg) => {
    if (msg.type === "hello") {
      view.applyHello(msg);
      tf = new WorkspaceTransform(arena.width, arena.height, view.reach());
      modeLabel.textContent = msg.controller_mode;
      rateSlider.value = String(msg.rate);
      rateLabel.textContent = `${msg.rate.toFixed(1)}x`;
    } else if (msg.type === "state") {
      view.applyState(msg);
    } else if (msg.type === "ack" && msg.what === "set_rate") {
      const eff = Number(msg.effective);
      rateLabel.textContent = `${eff.toFixed(1)}x`;
    }
  },
  onStatus: (status) => {
    view.connection = status;
    banner.textContent =
      status === "open" ? "" : status === "connecting" ? "connecting..." : "disconnected - retrying";
    banner.style.display = status === "open" ? "none" : "block";
  },
});
client.connect();

const drag = new DragController(
  (x, y) => {
    client.send({ type: "set_target", x, y });
    view.dragTarget = [x, y];
  },
  () => view.reach(),
);

function pointerWorld(ev: PointerEvent): [number, number] {
  const rect = arena.getBoundingClientRect();
  return tf.toWorld(ev.clientX - rect.left, ev.clientY - rect.top);
}

arena.addEventListener("pointerdown", (ev) => {
  arena.setPointerCapture(ev.pointerId);
  const [x, y] = pointerWorld(ev);
  drag.pointerDown(x, y);
});
arena.addEventListener("pointermove", (ev) => {
  const [x, y] = pointerWorld(ev);
  drag.pointerMove(x, y);
});
arena.addEventListener("pointerup", () => {
  drag.pointerUp();
  view.dragTarget = null;
});

el<HTMLButtonElement>("pause").addEventListener("click", () =>
  client.send({ type: "pause" }),
);
el<HTMLButtonElement>("resume").addEventListener("click", () =>
  client.send({ type: "resume" }),
);
el<HTMLButtonElement>("reset").addEventListener("click", () =>
  client.send({ type: "reset" }),
);
rateSlider.addEventListener("change", () =>
  client.send({ type: "set_rate", value: Number(rateSlider.value) }),
);

function frame(): void {
  const actx = arena.getContext("2d");
  const gctx = gauges.getContext("2d");
  if (actx) drawArms(actx, view, tf);
  if (gctx) {
    gctx.clearRect(0, 0, gauges.width, gauges.height);
    drawGauges(gctx, view, gauges.width, gauges.height / 4);
  }
  drag.flush();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
