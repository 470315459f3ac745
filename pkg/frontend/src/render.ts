// Canvas rendering: both planar arms in one workspace panel plus gauge
// strips for delays, sync error, operator torque and the reflected-torque
// display.

import { forwardKinematics } from "./fk.js";
import { TimedRingBuffer } from "./ringbuffer.js";
import { ViewState } from "./view.js";
import { WorkspaceTransform } from "./workspace.js";

const MASTER_COLOR = "#2962ff";
const SLAVE_COLOR = "#d84315";
const TARGET_COLOR = "#00c853";

export function drawArms(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  tf: WorkspaceTransform,
): void {
  ctx.clearRect(0, 0, tf.width, tf.height);
  ctx.save();

  // reachable disk
  ctx.beginPath();
  const [cx, cy] = tf.toScreen(0, 0);
  ctx.arc(cx, cy, view.reach() * tf.scale, 0, 2 * Math.PI);
  ctx.strokeStyle = "#ddd";
  ctx.stroke();

  const st = view.lastState;
  const hello = view.hello;
  if (st && hello) {
    drawArm(ctx, tf, hello.master_links, st.q1, MASTER_COLOR, false);
    drawArm(ctx, tf, hello.slave_links, st.q2, SLAVE_COLOR, true);
  }
  if (view.dragTarget) {
    const [tx, ty] = tf.toScreen(view.dragTarget[0], view.dragTarget[1]);
    ctx.beginPath();
    ctx.arc(tx, ty, 6, 0, 2 * Math.PI);
    ctx.strokeStyle = TARGET_COLOR;
    ctx.lineWidth = 2;
    ctx.stroke();
  }
  ctx.restore();
}

function drawArm(
  ctx: CanvasRenderingContext2D,
  tf: WorkspaceTransform,
  links: [number, number],
  q: number[],
  color: string,
  dashed: boolean,
): void {
  const pose = forwardKinematics(links[0], links[1], q);
  ctx.save();
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 4;
  ctx.setLineDash(dashed ? [6, 4] : []);
  ctx.beginPath();
  const pts = [pose.base, pose.elbow, pose.ee].map(([x, y]) => tf.toScreen(x, y));
  ctx.moveTo(pts[0][0], pts[0][1]);
  ctx.lineTo(pts[1][0], pts[1][1]);
  ctx.lineTo(pts[2][0], pts[2][1]);
  ctx.stroke();
  ctx.setLineDash([]);
  for (const [px, py] of pts) {
    ctx.beginPath();
    ctx.arc(px, py, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.restore();
}

export interface GaugeSpec {
  label: string;
  series: { buffer: TimedRingBuffer; color: string }[];
  fixedRange?: [number, number];
}

export function drawGauge(
  ctx: CanvasRenderingContext2D,
  spec: GaugeSpec,
  x: number,
  y: number,
  w: number,
  h: number,
): void {
  ctx.save();
  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(x, y, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(spec.label, x + 4, y + 12);

  let lo = Infinity;
  let hi = -Infinity;
  if (spec.fixedRange) {
    [lo, hi] = spec.fixedRange;
  } else {
    for (const s of spec.series) {
      const [a, b] = s.buffer.span();
      lo = Math.min(lo, a);
      hi = Math.max(hi, b);
    }
    if (!Number.isFinite(lo)) [lo, hi] = [0, 1];
    if (hi - lo < 1e-9) {
      hi += 0.5;
      lo -= 0.5;
    }
  }
  for (const s of spec.series) {
    const ts = s.buffer.times();
    const vs = s.buffer.values();
    if (ts.length < 2) continue;
    const t0 = ts[0];
    const t1 = ts[ts.length - 1];
    const span = Math.max(t1 - t0, 1e-9);
    ctx.beginPath();
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.2;
    for (let i = 0; i < ts.length; i++) {
      const px = x + ((ts[i] - t0) / span) * w;
      const py = y + h - ((vs[i] - lo) / (hi - lo)) * h;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
  }
  ctx.restore();
}

export function drawGauges(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  width: number,
  rowHeight: number,
): void {
  const specs: GaugeSpec[] = [
    {
      label: "sync error (rad)",
      series: [{ buffer: view.syncError, color: "#6a1b9a" }],
    },
    {
      label: "delays T1, T2 (s)",
      series: [
        { buffer: view.delayT1, color: MASTER_COLOR },
        { buffer: view.delayT2, color: SLAVE_COLOR },
      ],
      fixedRange: [0, 1],
    },
    {
      label: "operator torque (N m)",
      series: view.tau1.map((b, j) => ({ buffer: b, color: j ? "#f9a825" : "#00897b" })),
    },
    {
      label: "reflected torque display",
      series: view.reflected.map((b, j) => ({ buffer: b, color: j ? "#f9a825" : "#00897b" })),
    },
  ];
  specs.forEach((spec, i) => {
    drawGauge(ctx, spec, 0, i * rowHeight, width, rowHeight - 8);
  });
}
