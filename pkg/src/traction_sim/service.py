"""Live session service: one traction run exposed over a websocket.

The simulation loop and the connection handler run as separate sequential
agents on one event loop, joined by two ordered queues: commands in,
frames out. The state machine is touched only by the simulation agent.
Telemetry streams at the sensor rate (scaled by time_scale); backpressure
decimates telemetry but never acks or phase changes. One client at a time:
a second connection is refused, and while no client is connected and the
flow is waiting on the operator, the simulation holds (safe pause) and
resumes on reconnect.
"""

import asyncio
import contextlib
import json
import pathlib

from .metrics import TraceRecord, write_trace
from .runner import TractionRun, command_from_payload
from .scenario import Scenario
from .session import PHASE_AWAIT_CUT, PHASE_DONE, PHASE_OPERATOR_CHECK
from . import wire

OUT_QUEUE_BOUND = 256


def _round6(value: float) -> float:
    # Telemetry carries the same 6-significant-digit values the trace file
    # stores, so wire and file stay a single source of truth.
    return float(f"{value:.6g}")


def telemetry_payload(record: TraceRecord) -> dict:
    return {
        "t": _round6(record.t),
        "Fg_target": _round6(record.Fg_target),
        "Fg_est": _round6(record.Fg_est),
        "Fg_true": _round6(record.Fg_true),
        "Fp_target": _round6(record.Fp_target),
        "Fp_est": _round6(record.Fp_est),
        "Fp_true": _round6(record.Fp_true),
        "Fd": _round6(record.Fd),
        "Fs": _round6(record.Fs),
        "d_p": _round6(record.d_p),
        "d_s": _round6(record.d_s),
        "d_l": _round6(record.d_l),
        "d_u": _round6(record.d_u),
        "phase": record.phase,
        "events": list(record.events),
    }


class SessionService:
    def __init__(
        self,
        scenario: Scenario,
        script: list[tuple[float, dict]] | None = None,
        host: str = "127.0.0.1",
        port: int | None = None,
        time_scale: float | None = None,
        out_dir=None,
    ):
        self.scenario = scenario
        self.run = TractionRun(scenario, script=script)
        self.host = host
        self.port = port if port is not None else scenario.serve.port
        self.time_scale = time_scale if time_scale is not None else scenario.serve.time_scale
        self.decimation = scenario.serve.telemetry_decimation
        self.out_dir = out_dir

        self._client: wire.WsConnection | None = None
        self._client_present = asyncio.Event()
        # (client seq, owning connection): acks for a connection that has
        # since dropped are consumed silently instead of confusing the next
        # operator's seq correlation.
        self._commands: asyncio.Queue = asyncio.Queue()
        self._frames: asyncio.Queue = asyncio.Queue()
        self._pending: list[tuple[int, wire.WsConnection]] = []
        self._out_seq = 0
        self._server: asyncio.base_events.Server | None = None
        self._writer_task: asyncio.Task | None = None
        self.bound_port: int | None = None

    # ------------------------------------------------------------------
    # Frame plumbing
    # ------------------------------------------------------------------

    def _enqueue(self, msg_type: str, payload: dict, droppable: bool = False):
        if self._client is None:
            return
        if droppable and self._frames.qsize() >= OUT_QUEUE_BOUND:
            return
        frame = {"type": msg_type, "seq": self._out_seq, "payload": payload}
        self._out_seq += 1
        self._frames.put_nowait(frame)

    async def _writer_loop(self):
        while True:
            frame = await self._frames.get()
            client = self._client
            if client is None:
                continue
            try:
                await client.send_json(frame)
            except (wire.WireClosed, ConnectionError):
                self._drop_client()

    def _drop_client(self):
        self._client = None
        self._client_present.clear()
        # Unsent frames and unsubmitted commands are stale for the next
        # client: its stream restarts from a fresh hello.
        while not self._frames.empty():
            self._frames.get_nowait()
        while not self._commands.empty():
            self._commands.get_nowait()

    # ------------------------------------------------------------------
    # Connection handling
    # ------------------------------------------------------------------

    async def _handle_connection(self, reader, writer):
        try:
            conn = await wire.server_handshake(reader, writer)
        except (
            ValueError,
            asyncio.TimeoutError,
            ConnectionError,
            asyncio.IncompleteReadError,
            asyncio.LimitOverrunError,
        ):
            writer.close()
            return
        if self._client is not None:
            await conn.send_json(
                {
                    "type": wire.MSG_ERROR,
                    "seq": 0,
                    "payload": {"message": "session already has an operator"},
                }
            )
            await conn.close()
            return

        self._client = conn
        self._out_seq = 0
        self._enqueue(wire.MSG_HELLO, self._hello_payload())
        self._client_present.set()

        expected_seq = 0
        while self._client is conn:
            try:
                raw = await conn.recv_text()
            except (wire.WireClosed, ConnectionError, ValueError):
                break
            try:
                frame = json.loads(raw)
                if not isinstance(frame, dict):
                    raise ValueError("frame must be an object")
                seq = frame.get("seq")
                if seq != expected_seq:
                    raise ValueError(f"expected seq {expected_seq}, got {seq}")
                expected_seq += 1
                if frame.get("type") != wire.MSG_COMMAND:
                    raise ValueError(f"unexpected frame type {frame.get('type')!r}")
                command = command_from_payload(frame.get("payload"))
            except (ValueError, TypeError) as exc:
                self._enqueue(wire.MSG_ERROR, {"message": str(exc)})
                continue
            self._commands.put_nowait((seq, conn, command))
        if self._client is conn:
            self._drop_client()

    def _hello_payload(self) -> dict:
        params = self.run.session.params
        return {
            "schema": wire.SCHEMA_VERSION,
            "name": self.scenario.name,
            "phase": self.run.phase,
            "t": _round6(self.run.t),
            "dt_sensor": self.scenario.simulation.dt_sensor,
            "time_scale": self.time_scale,
            "decimation": self.decimation,
            "params": {
                "Fp_touch": params.Fp_touch,
                "Fg_target": params.Fg_target,
                "Fp_initial": params.Fp_initial,
                "rho": params.rho,
                "d_incr_limit": params.d_incr_limit,
                "d_total_limit": params.d_total_limit,
                "Fp_cutoff": params.Fp_cutoff,
                "decouple_during_pull": params.decouple_during_pull,
            },
        }

    # ------------------------------------------------------------------
    # Simulation agent
    # ------------------------------------------------------------------

    def _needs_operator(self) -> bool:
        return self.run.phase in (PHASE_AWAIT_CUT, PHASE_OPERATOR_CHECK)

    async def _sim_loop(self):
        loop = asyncio.get_running_loop()
        interval = self.run.dt / self.time_scale
        next_tick = loop.time()
        tick_count = 0
        previous_phase = self.run.phase
        while not self.run.done:
            if self._client is None and self._needs_operator():
                await self._client_present.wait()
                next_tick = loop.time()
                continue

            now = loop.time()
            if next_tick > now:
                await asyncio.sleep(next_tick - now)
            elif now - next_tick > 5 * interval:
                next_tick = now  # fell behind; resync rather than spiral
            next_tick += interval

            while not self._commands.empty():
                seq, conn, command = self._commands.get_nowait()
                self._pending.append((seq, conn))
                self.run.submit_command(command)

            record, directive = self.run.tick()
            tick_count += 1

            for command, accepted, reason in directive.acks:
                command_seq, owner = self._pending.pop(0) if self._pending else (-1, None)
                if owner is not self._client:
                    continue  # the commanding operator is gone
                self._enqueue(
                    wire.MSG_COMMAND_ACK,
                    {
                        "command_seq": command_seq,
                        "command": command.kind,
                        "accepted": accepted,
                        "reason": reason,
                    },
                )
            if directive.phase_changed:
                self._enqueue(
                    wire.MSG_PHASE_CHANGE,
                    {
                        "t": _round6(record.t),
                        "from": previous_phase,
                        "to": directive.phase,
                        "cut_index": self.run.session.cut_index,
                        "fp_target": _round6(directive.fp_target),
                    },
                )
                previous_phase = directive.phase
            for event in directive.events:
                if not event.startswith("command_") and not event.startswith("phase:"):
                    self._enqueue(
                        wire.MSG_EVENT, {"t": _round6(record.t), "kind": event}
                    )
            if tick_count % self.decimation == 0:
                self._enqueue(
                    wire.MSG_TELEMETRY, telemetry_payload(record), droppable=True
                )

        self._enqueue(
            wire.MSG_EVENT,
            {
                "t": _round6(self.run.t),
                "kind": "session_end",
                "result": self.run.phase,
                "summary": self.run.summary(),
            },
        )
        # Let the writer flush what it can before teardown.
        while self._client is not None and not self._frames.empty():
            await asyncio.sleep(0.01)

    # ------------------------------------------------------------------

    async def start(self):
        """Bind the listening socket (bound_port is then known)."""
        self._server = await asyncio.start_server(
            self._handle_connection, self.host, self.port
        )
        self.bound_port = self._server.sockets[0].getsockname()[1]
        self._writer_task = asyncio.create_task(self._writer_loop())

    async def serve(self, announce=None) -> int:
        """Run the session to completion; returns 0 iff the flow reached Done."""
        if self._server is None:
            await self.start()
        if announce is not None:
            announce(f"session service listening on ws://{self.host}:{self.bound_port}/")
        try:
            await self._sim_loop()
        finally:
            self._writer_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._writer_task
            if self._client is not None:
                with contextlib.suppress(Exception):
                    await self._client.close()
            self._server.close()
            await self._server.wait_closed()
            if self.out_dir is not None:
                self._write_outputs()
        return 0 if self.run.phase == PHASE_DONE else 1

    def _write_outputs(self):
        out = pathlib.Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trace(out / "trace.csv", self.run.records)
        with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.run.summary(), fh, indent=2)
            fh.write("\n")


def _announce(message: str):
    # Stays visible through pipes: console launchers parse the bound port.
    print(message, flush=True)


def run_serve(
    scenario: Scenario,
    script: list[tuple[float, dict]] | None = None,
    port: int | None = None,
    time_scale: float | None = None,
    out_dir=None,
    announce=_announce,
) -> int:
    async def main():
        service = SessionService(
            scenario, script=script, port=port, time_scale=time_scale, out_dir=out_dir
        )
        return await service.serve(announce=announce)

    return asyncio.run(main())
