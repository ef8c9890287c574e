"""Live teleoperation bridge: websocket server around one running simulation.

Two cooperating loops own everything:

  * a wall-clock-paced simulation thread — sole owner of all sim state,
    fed by a single command mailbox;
  * the asyncio network loop — websocket sessions, each with a bounded
    outbound queue (oldest frames dropped when a client is slow).

The first websocket connection is the operator; later connections are
read-only spectators whose ``cmd`` messages are ignored.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .geometry import Twist2D
from .runner import TICK_DT, SimConfig, Simulation
from .stats import Condition
from .world import Scenario

# operator command is held this long after the last cmd, then decays to zero
COMMAND_HOLD = 0.5
STATE_EVERY_TICKS = 5     # 10 Hz at the 50 Hz tick
COSTMAP_EVERY_TICKS = 25  # 2 Hz
QUEUE_DEPTH = 64


@dataclass
class BridgeSettings:
    mode: str = "bsc"
    delay: float = 0.0
    drift: float = 0.0
    feedback_delay: float = 0.0
    time_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("manual", "bsc"):
            raise ValueError("mode must be 'manual' or 'bsc'")
        if self.time_scale <= 0:
            raise ValueError("time_scale must be > 0")


@dataclass
class _Mailbox:
    """Single-producer (network) single-consumer (sim) command slot."""
    lock: threading.Lock = field(default_factory=threading.Lock)
    cmd: Twist2D = Twist2D.zero()
    wall_stamp: float = -math.inf
    mode_request: str | None = None

    def put(self, cmd: Twist2D, mode_request: str | None) -> None:
        with self.lock:
            self.cmd = cmd
            self.wall_stamp = time.monotonic()
            if mode_request is not None:
                self.mode_request = mode_request

    def take(self) -> tuple[Twist2D, str | None]:
        with self.lock:
            cmd = self.cmd if time.monotonic() - self.wall_stamp < COMMAND_HOLD \
                else Twist2D.zero()
            mode, self.mode_request = self.mode_request, None
            return cmd, mode


class Bridge:
    def __init__(self, scenario: Scenario, settings: BridgeSettings):
        self.scenario = scenario
        self.settings = settings
        self.sim = Simulation(scenario, SimConfig(
            condition=Condition(mode=settings.mode, delay=settings.delay,
                                drift=settings.drift, seed=settings.seed),
            tick_log=False,
            always_sense=True,
        ))
        self.mailbox = _Mailbox()
        self._clients: dict[int, asyncio.Queue] = {}
        self._next_client = 0
        self._operator: int | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        # frames withheld until the sim clock passes stamp + feedback_delay
        self._held: list[tuple[float, str]] = []

    # --- lifecycle -------------------------------------------------------

    def start(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop
        self._thread = threading.Thread(target=self._sim_loop, daemon=True,
                                        name="blendnav-sim")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    # --- network side (asyncio loop) --------------------------------------

    def attach(self) -> tuple[int, asyncio.Queue, bool]:
        cid = self._next_client
        self._next_client += 1
        queue: asyncio.Queue = asyncio.Queue(maxsize=QUEUE_DEPTH)
        self._clients[cid] = queue
        is_operator = self._operator is None
        if is_operator:
            self._operator = cid
        queue.put_nowait(json.dumps({
            "type": "config",
            "v_max": self.sim.config.limits.v_max,
            "omega_max": self.sim.config.limits.omega_max,
            "mode": self.sim.config.condition.mode,
            "delay": self.sim.config.condition.delay,
            "drift": self.sim.config.condition.drift,
        }))
        # late joiners still learn that a run is underway
        queue.put_nowait(json.dumps({"type": "run_event", "kind": "start",
                                     "sim_time": self.sim.robot.time}))
        return cid, queue, is_operator

    def detach(self, cid: int) -> None:
        self._clients.pop(cid, None)
        if self._operator == cid:
            self._operator = None
            self.mailbox.put(Twist2D.zero(), None)

    def handle_message(self, cid: int, text: str, last_seq: int) -> int:
        """Parse one client message; returns the updated last-seen seq."""
        try:
            msg = json.loads(text)
        except json.JSONDecodeError:
            return last_seq
        if msg.get("type") != "cmd" or cid != self._operator:
            return last_seq
        try:
            seq = int(msg["seq"])
            vx_norm = float(msg["vx_norm"])
            omega_norm = float(msg["omega_norm"])
        except (KeyError, TypeError, ValueError):
            return last_seq
        if seq <= last_seq:
            return last_seq   # stale or out of order: dropped
        limits = self.sim.config.limits
        cmd = Twist2D(
            vx=max(-1.0, min(1.0, vx_norm)) * limits.v_max,
            omega=max(-1.0, min(1.0, omega_norm)) * limits.omega_max,
        )
        mode_request = msg.get("mode_request")
        if mode_request not in (None, "manual", "bsc"):
            mode_request = None
        self.mailbox.put(cmd, mode_request)
        return seq

    # --- simulation side (worker thread) -----------------------------------

    def _sim_loop(self) -> None:
        period = TICK_DT / self.settings.time_scale
        next_tick = time.monotonic()
        self._post(json.dumps({"type": "run_event", "kind": "start",
                               "sim_time": self.sim.robot.time}))
        prev_collisions = 0
        beats = 0   # keeps broadcasting cadence alive after a terminal status
        while not self._stop.is_set():
            now = time.monotonic()
            if now < next_tick:
                time.sleep(min(next_tick - now, 0.005))
                continue
            next_tick = max(next_tick + period, now - 5 * period)
            beats += 1

            if self.sim.status == "running":
                cmd, mode_request = self.mailbox.take()
                if mode_request is not None and \
                        mode_request != self.sim.config.condition.mode:
                    self.sim.config.condition = replace(
                        self.sim.config.condition, mode=mode_request)
                result = self.sim.tick(live_user_cmd=cmd)
                if self.sim.collision_count > prev_collisions:
                    prev_collisions = self.sim.collision_count
                    self._post(json.dumps({
                        "type": "run_event", "kind": "collision",
                        "sim_time": self.sim.robot.time}))
                if result.status in ("goal", "timeout"):
                    self._post(json.dumps({
                        "type": "run_event", "kind": result.status,
                        "sim_time": self.sim.robot.time}))

            if beats % STATE_EVERY_TICKS == 0:
                self._hold(self.sim.robot.time, self._state_json())
            if beats % COSTMAP_EVERY_TICKS == 0 and self.sim.last_costmap is not None:
                self._hold(self.sim.robot.time, self._costmap_json())
            self._release_held()

    def _state_json(self) -> str:
        sim = self.sim
        pose = sim.robot.odom_pose
        blend = sim.last_blend
        def twist(t: Twist2D | None) -> dict:
            t = t or Twist2D.zero()
            return {"vx": t.vx, "omega": t.omega}
        return json.dumps({
            "type": "state",
            "tick": sim.tick_count,
            "sim_time": sim.robot.time,
            "pose": {"x": pose.x, "y": pose.y, "theta": pose.theta},
            "goal": {"x": sim.scenario.goal.x, "y": sim.scenario.goal.y},
            "alpha": blend.alpha if blend else 1.0,
            "d": blend.d if blend else 0.0,
            "delta": blend.delta if blend else 0.0,
            "user_cmd": twist(blend.user_cmd if blend else None),
            "agent_cmd": twist(blend.agent_cmd if blend else None),
            "blended_cmd": twist(blend.blended_cmd if blend else None),
            "status": sim.status,
        })

    def _costmap_json(self) -> str:
        payload = self.sim.costmap.serialize()
        payload["type"] = "costmap"
        return json.dumps(payload)

    def _hold(self, sim_time: float, text: str) -> None:
        if self.settings.feedback_delay <= 0:
            self._post(text)
        else:
            self._held.append((sim_time + self.settings.feedback_delay, text))

    def _release_held(self) -> None:
        now = self.sim.robot.time
        while self._held and self._held[0][0] <= now:
            self._post(self._held.pop(0)[1])

    def _post(self, text: str) -> None:
        """Fan a message out to every client queue without ever blocking."""
        loop = self._loop
        if loop is None or loop.is_closed():
            return
        loop.call_soon_threadsafe(self._fanout, text)

    def _fanout(self, text: str) -> None:
        for queue in self._clients.values():
            if queue.full():
                try:
                    queue.get_nowait()   # drop oldest, keep the sim unblocked
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(text)


def create_app(scenario: Scenario, settings: BridgeSettings | None = None
               ) -> FastAPI:
    settings = settings or BridgeSettings()
    bridge = Bridge(scenario, settings)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        bridge.start(asyncio.get_running_loop())
        try:
            yield
        finally:
            bridge.stop()

    app = FastAPI(title="blendnav teleop bridge", lifespan=lifespan)
    app.state.bridge = bridge

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        cid, queue, _is_operator = bridge.attach()
        last_seq = -1

        async def sender():
            while True:
                await ws.send_text(await queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                last_seq = bridge.handle_message(cid, text, last_seq)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            bridge.detach(cid)

    static_dir = Path(__file__).parent / "static"
    if static_dir.is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="console")
    return app
