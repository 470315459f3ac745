"""Real-time websocket bridge between the simulator and the operator cockpit.

Paces the simulation against the wall clock (sim-seconds per wall-second is
the session rate), broadcasts a state message every 33 ms of sim time on
/ws, and applies the most recent operator input each plant step.  Operator
input expires 0.5 s (wall clock) after the last message: releasing the
pointer disengages the end-effector spring (dead-man rule).

The first connected client controls; later clients observe.  Every inbound
message produces exactly one reply or one applied effect; malformed
messages get an error reply and leave the session untouched.
"""

from __future__ import annotations

import asyncio
import http
import json
import mimetypes
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from telesim.dynamics import forward_kinematics_and_jacobian
from telesim.sim import Scenario, TeleopSim

BROADCAST_SIM_PERIOD = 0.033
DEADMAN_WALL_S = 0.5
RATE_MIN, RATE_MAX = 0.1, 10.0
MAX_STEPS_PER_WAKE = 400
# task-space spring pulling the master end effector toward the drag target
EE_STIFFNESS = 25.0      # N/m
EE_DAMPING = 4.0         # N*s/m
REFLECTED_SCALE = (3.0, 3.25)


@dataclass
class SessionState:
    sim: TeleopSim
    rate: float = 1.0
    paused: bool = False
    input_kind: str = "none"            # none | ee_target | joint_torque
    ee_target: np.ndarray | None = None
    joint_torque: np.ndarray | None = None
    last_input_wall: float = field(default_factory=time.monotonic)

    def expire_input(self, now: float) -> None:
        if self.input_kind != "none" and now - self.last_input_wall > DEADMAN_WALL_S:
            self.input_kind = "none"
            self.ee_target = None
            self.joint_torque = None


class BridgeSession:
    def __init__(self, sc: Scenario, allow_torque_input: bool = False):
        if sc.operator.kind != "interactive":
            raise ValueError("bridge sessions require an interactive operator model")
        self.sc = sc
        self.state = SessionState(sim=TeleopSim(sc, record=False))
        self.allow_torque_input = allow_torque_input
        self.clients: set = set()
        self.controller_client = None
        self._next_broadcast = 0.0
        self._last_wall = time.monotonic()
        self._sim_debt = 0.0

    # -- operator input -> master torque -----------------------------------

    def _operator_torque(self) -> np.ndarray:
        st = self.state
        sim = st.sim
        if st.input_kind == "joint_torque":
            return st.joint_torque.copy()
        if st.input_kind == "ee_target":
            x, jac = forward_kinematics_and_jacobian(self.sc.master.model,
                                                     sim.master_state.q)
            xd = jac @ sim.master_state.qd
            f = EE_STIFFNESS * (st.ee_target - x) - EE_DAMPING * xd
            return jac.T @ f
        return np.zeros(sim.m)

    # -- pacing -------------------------------------------------------------

    def advance(self, now: float) -> list[dict]:
        """Advance the sim to match the wall clock; return due state messages."""
        st = self.state
        elapsed = now - self._last_wall
        self._last_wall = now
        st.expire_input(now)
        if st.paused:
            self._sim_debt = 0.0
            return []
        self._sim_debt += elapsed * st.rate
        dt = self.sc.plant_dt
        n = int(self._sim_debt / dt)
        if n > MAX_STEPS_PER_WAKE:
            # cannot keep up; drop the backlog instead of spiraling
            self._sim_debt = 0.0
            n = MAX_STEPS_PER_WAKE
        else:
            self._sim_debt -= n * dt
        out = []
        sim = st.sim
        for _ in range(n):
            sim.interactive_tau = self._operator_torque()
            sim.step()
            if sim.t >= self._next_broadcast:
                out.append(self.state_message())
                self._next_broadcast = sim.t + BROADCAST_SIM_PERIOD
        return out

    # -- messages -----------------------------------------------------------

    def hello_message(self) -> dict:
        mm, sm = self.sc.master.model, self.sc.slave.model
        return {"type": "hello", "m": self.state.sim.m,
                "controller_mode": self.sc.controller_mode,
                "master_links": [mm.l1, mm.l2], "slave_links": [sm.l1, sm.l2],
                "rate": self.state.rate, "paused": self.state.paused}

    def state_message(self) -> dict:
        sim = self.state.sim
        ms, ss = sim.master_state, sim.slave_state
        ee1, _ = forward_kinematics_and_jacobian(self.sc.master.model, ms.q)
        ee2, _ = forward_kinematics_and_jacobian(self.sc.slave.model, ss.q)
        scale = np.array(REFLECTED_SCALE[:sim.m])
        reflected = -scale * ss.pid_integral
        return {"type": "state", "t": sim.t,
                "q1": ms.q.tolist(), "q2": ss.q.tolist(),
                "qc2": ss.q_c.tolist(),
                "ee1": ee1.tolist(), "ee2": ee2.tolist(),
                "tau1_star": sim.tau_op.tolist(),
                "tau2_star": sim.tau_env.tolist(),
                "T1": sim.T1, "T2": sim.T2,
                "sync_error": float(np.max(np.abs(ms.q - ss.q))),
                "reflected": reflected.tolist()}

    def handle_client_message(self, msg: dict, is_controller: bool) -> dict:
        """Apply one protocol message; returns the reply document."""
        st = self.state
        if not isinstance(msg, dict) or "type" not in msg:
            return {"type": "error", "detail": "message must be an object with a 'type'"}
        mtype = msg.get("type")
        try:
            if mtype == "pause":
                st.paused = True
                return {"type": "ack", "what": "pause", "paused": True}
            if mtype == "resume":
                st.paused = False
                return {"type": "ack", "what": "resume", "paused": False}
            if mtype == "set_rate":
                value = float(msg["value"])
                if not np.isfinite(value):
                    return {"type": "error", "detail": "set_rate value must be finite"}
                st.rate = min(max(value, RATE_MIN), RATE_MAX)
                return {"type": "ack", "what": "set_rate", "effective": st.rate}
            if mtype == "reset":
                st.sim = TeleopSim(self.sc, record=False)
                st.input_kind = "none"
                self._next_broadcast = 0.0
                self._sim_debt = 0.0
                return {"type": "ack", "what": "reset", "t": 0.0}
            if mtype == "set_target":
                if not is_controller:
                    return {"type": "error", "detail": "observer clients cannot steer"}
                x, y = float(msg["x"]), float(msg["y"])
                if not (np.isfinite(x) and np.isfinite(y)):
                    return {"type": "error", "detail": "set_target needs finite x, y"}
                st.input_kind = "ee_target"
                st.ee_target = np.array([x, y])
                st.last_input_wall = time.monotonic()
                return {"type": "ack", "what": "set_target"}
            if mtype == "set_torque":
                if not is_controller:
                    return {"type": "error", "detail": "observer clients cannot steer"}
                if not self.allow_torque_input:
                    return {"type": "error",
                            "detail": "joint_torque debug input is disabled"}
                values = np.asarray([float(v) for v in msg["values"]])
                if values.shape != (st.sim.m,) or not np.all(np.isfinite(values)):
                    return {"type": "error",
                            "detail": f"set_torque needs {st.sim.m} finite values"}
                st.input_kind = "joint_torque"
                st.joint_torque = values
                st.last_input_wall = time.monotonic()
                return {"type": "ack", "what": "set_torque"}
            return {"type": "error", "detail": f"unknown message type {mtype!r}"}
        except (KeyError, TypeError, ValueError) as exc:
            return {"type": "error", "detail": f"malformed {mtype!r} message: {exc}"}


async def _session_loop(session: BridgeSession, stop: asyncio.Event):
    while not stop.is_set():
        await asyncio.sleep(0.004)
        messages = session.advance(time.monotonic())
        if not messages or not session.clients:
            continue
        payloads = [json.dumps(m) for m in messages]
        for ws in list(session.clients):
            try:
                for p in payloads:
                    await ws.send(p)
            except Exception:
                session.clients.discard(ws)


async def _client_handler(session: BridgeSession, ws):
    session.clients.add(ws)
    if session.controller_client is None:
        session.controller_client = ws
    try:
        await ws.send(json.dumps(session.hello_message()))
        async for raw in ws:
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError as exc:
                await ws.send(json.dumps({"type": "error",
                                          "detail": f"not valid JSON: {exc}"}))
                continue
            reply = session.handle_client_message(
                msg, is_controller=ws is session.controller_client)
            await ws.send(json.dumps(reply))
    finally:
        session.clients.discard(ws)
        if session.controller_client is ws:
            session.controller_client = None
            # steering input dies with its client
            session.state.input_kind = "none"


def _static_responder(static_dir: str):
    root = Path(static_dir).resolve()

    def respond(path: str):
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            return (http.HTTPStatus.NOT_FOUND,
                    [("Content-Type", "text/plain")], b"not found\n")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        return http.HTTPStatus.OK, [("Content-Type", ctype)], target.read_bytes()

    return respond


async def serve_session_async(sc: Scenario, port: int = 8765,
                              host: str = "127.0.0.1",
                              static_dir: str | None = None,
                              allow_torque_input: bool = False,
                              ready: asyncio.Future | None = None):
    """Run the bridge until cancelled.  With port=0 an ephemeral port is
    chosen; the bound port is printed and set on the `ready` future."""
    from websockets.asyncio.server import serve

    session = BridgeSession(sc, allow_torque_input=allow_torque_input)
    stop = asyncio.Event()

    async def handler(ws):
        if ws.request.path not in ("/ws", "/ws/"):
            await ws.close(code=1008, reason="connect to /ws")
            return
        await _client_handler(session, ws)

    def process_request(connection, request):
        from websockets.datastructures import Headers
        from websockets.http11 import Response

        if request.path.startswith("/ws"):
            return None
        if static_dir is None:
            return connection.respond(http.HTTPStatus.NOT_FOUND,
                                      "websocket endpoint is /ws\n")
        status, headers, body = _static_responder(static_dir)(request.path)
        hdrs = Headers(headers + [("Content-Length", str(len(body)))])
        return Response(status.value, status.phrase, hdrs, body)

    async with serve(handler, host, port, process_request=process_request) as server:
        bound = server.sockets[0].getsockname()[1]
        print(f"bridge listening on ws://{host}:{bound}/ws", flush=True)
        if ready is not None and not ready.done():
            ready.set_result(bound)
        looper = asyncio.create_task(_session_loop(session, stop))
        try:
            await asyncio.Future()
        finally:
            stop.set()
            looper.cancel()


def serve_session(sc: Scenario, port: int = 8765, host: str = "127.0.0.1",
                  static_dir: str | None = None,
                  allow_torque_input: bool = False) -> None:
    """Blocking entry point used by the CLI; runs until interrupted."""
    try:
        asyncio.run(serve_session_async(sc, port=port, host=host,
                                        static_dir=static_dir,
                                        allow_torque_input=allow_torque_input))
    except KeyboardInterrupt:
        pass
