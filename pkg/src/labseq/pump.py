"""Syringe pump model and its TCP line protocol.

A stepper motor drives a lead screw that pushes the syringe plunger. One
microliter corresponds to a fixed number of microsteps::

    microsteps/uL = (360 / step_angle) * microstep_divisor / lead_pitch
                    * stroke_length / capacity

With the defaults (0.9 deg, 1/16, 2 mm pitch, 60 mm stroke, 100 uL) that is
1920 microsteps/uL, and at 19200 microsteps/s drawing 10 uL takes 1 s.

Volumes are handled as :class:`decimal.Decimal` so that commanded volumes
parsed off the wire accumulate without rounding error.

Wire protocol (UTF-8, one ``\\n``-terminated line each way)::

    DRAW <uL> | PUSH <uL> | FLUSH <count> | HOME | STATUS | RATE <usteps/s>
    OK <CMD> [<args>] [<duration_s 3dp>]
    OK STATUS <plunger_uL 1dp> <capacity_uL 1dp> <idle|busy>
    ERR <OVERFLOW|UNDERFLOW|BUSY|PARSE> <message>
"""
from __future__ import annotations

import logging
import math
import socket
import socketserver
import threading
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from typing import Optional, Union

logger = logging.getLogger(__name__)

Number = Union[int, float, Decimal, str]

MICROSTEP_DIVISORS = (1, 2, 4, 8, 16, 32)


def _dec(value: Number) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


@dataclass(frozen=True)
class PumpConfig:
    step_angle: float = 0.9          # deg per full step
    microstep_divisor: int = 16
    lead_pitch: float = 2.0          # mm per revolution
    stroke_length: float = 60.0      # mm for a full syringe
    capacity: float = 100.0          # uL
    step_rate: float = 19_200.0      # microsteps per second

    def __post_init__(self):
        if not self.step_angle > 0:
            raise ValueError("step_angle must be positive")
        steps = 360.0 / self.step_angle
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"360 deg is not a whole number of {self.step_angle} deg steps")
        if self.microstep_divisor not in MICROSTEP_DIVISORS:
            raise ValueError(f"microstep_divisor must be one of {MICROSTEP_DIVISORS}")
        for name in ("lead_pitch", "stroke_length", "capacity", "step_rate"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def steps_per_rev(self) -> int:
        return round(360.0 / self.step_angle)

    @property
    def microsteps_per_ul(self) -> Decimal:
        return (
            Decimal(self.steps_per_rev * self.microstep_divisor)
            / _dec(self.lead_pitch)
            * _dec(self.stroke_length)
            / _dec(self.capacity)
        )

    @property
    def capacity_ul(self) -> Decimal:
        return _dec(self.capacity)

    def as_dict(self) -> dict:
        return {
            "step_angle": self.step_angle,
            "microstep_divisor": self.microstep_divisor,
            "lead_pitch": self.lead_pitch,
            "stroke_length": self.stroke_length,
            "capacity": self.capacity,
            "step_rate": self.step_rate,
        }


class PumpError(Exception):
    """Device-level rejection; ``code`` is the protocol error token."""

    code = "ERR"

    def reply(self) -> str:
        return f"ERR {self.code} {self}"


class VolumeOverflowError(PumpError):
    code = "OVERFLOW"


class VolumeUnderflowError(PumpError):
    code = "UNDERFLOW"


class BusyError(PumpError):
    code = "BUSY"


class ParseError(PumpError):
    code = "PARSE"


def volume_to_microsteps(cfg: PumpConfig, volume: Number) -> int:
    v = _dec(volume)
    if v < 0:
        raise ValueError(f"volume must be non-negative, got {v}")
    if v > cfg.capacity_ul:
        raise VolumeOverflowError(f"{v} uL exceeds syringe capacity {cfg.capacity_ul} uL")
    return int((v * cfg.microsteps_per_ul).to_integral_value(rounding=ROUND_HALF_EVEN))


def microsteps_to_volume(cfg: PumpConfig, microsteps: int) -> Decimal:
    return Decimal(microsteps) / cfg.microsteps_per_ul


def transfer_duration(cfg: PumpConfig, volume: Number) -> float:
    return volume_to_microsteps(cfg, volume) / cfg.step_rate


@dataclass(frozen=True)
class PumpState:
    plunger_volume: Decimal = Decimal(0)
    status: str = "idle"


@dataclass(frozen=True)
class PumpCommand:
    op: str
    arg: Optional[Decimal] = None

    def line(self) -> str:
        if self.arg is None:
            return self.op
        if self.op in ("DRAW", "PUSH"):
            return f"{self.op} {format_volume(self.arg)}"
        return f"{self.op} {self.arg.normalize():f}"


@dataclass(frozen=True)
class Reply:
    op: str
    args: tuple[str, ...] = ()
    duration: Optional[float] = None

    @property
    def text(self) -> str:
        parts = ["OK", self.op, *self.args]
        if self.duration is not None:
            parts.append(f"{self.duration:.3f}")
        return " ".join(parts)


def format_volume(volume: Number) -> str:
    """Wire form of a volume: at least one decimal place, otherwise as
    precise as the input."""
    v = _dec(volume)
    if v.as_tuple().exponent >= -1:
        return f"{v:.1f}"
    return f"{v.normalize():f}"


_ARG_OPS = {"DRAW", "PUSH", "FLUSH", "RATE"}
_BARE_OPS = {"HOME", "STATUS"}


def parse_command(line: str) -> PumpCommand:
    """Parse one request line (without or with its trailing newline)."""
    parts = line.rstrip("\r\n").split()
    if not parts:
        raise ParseError("empty command")
    op, rest = parts[0], parts[1:]
    if op in _BARE_OPS:
        if rest:
            raise ParseError(f"{op} takes no arguments")
        return PumpCommand(op)
    if op not in _ARG_OPS:
        raise ParseError(f"unknown command {op}")
    if len(rest) != 1:
        raise ParseError(f"{op} takes exactly one argument")
    try:
        arg = Decimal(rest[0])
    except InvalidOperation:
        raise ParseError(f"bad number {rest[0]}") from None
    if not arg.is_finite() or arg < 0:
        raise ParseError(f"bad number {rest[0]}")
    if op == "FLUSH":
        if arg != arg.to_integral_value() or "." in rest[0] or "e" in rest[0].lower():
            raise ParseError(f"FLUSH count must be an integer, got {rest[0]}")
        arg = Decimal(int(arg))
    if op == "RATE" and arg == 0:
        raise ParseError("RATE must be positive")
    return PumpCommand(op, arg)


def apply_command(state: PumpState, cfg: PumpConfig, cmd: PumpCommand) -> tuple[PumpState, Reply]:
    """Pure state transition for one command.

    Raises a :class:`PumpError` (state left untouched) when the command is
    rejected. ``RATE`` only echoes here; the device owning the configuration
    applies the new rate.
    """
    if state.status == "busy" and cmd.op != "STATUS":
        raise BusyError(f"pump busy, {cmd.op} rejected")
    vol = state.plunger_volume
    cap = cfg.capacity_ul
    per_s = cfg.step_rate

    if cmd.op == "STATUS":
        return state, Reply("STATUS", (f"{vol:.1f}", f"{cap:.1f}", state.status))
    if cmd.op == "DRAW":
        if vol + cmd.arg > cap:
            raise VolumeOverflowError(f"draw {format_volume(cmd.arg)} exceeds capacity (plunger {vol:.1f}, capacity {cap:.1f})")
        steps = volume_to_microsteps(cfg, cmd.arg)
        return replace(state, plunger_volume=vol + cmd.arg), Reply("DRAW", (format_volume(cmd.arg),), steps / per_s)
    if cmd.op == "PUSH":
        if cmd.arg > vol:
            raise VolumeUnderflowError(f"push {format_volume(cmd.arg)} exceeds plunger contents {vol:.1f}")
        steps = volume_to_microsteps(cfg, cmd.arg)
        return replace(state, plunger_volume=vol - cmd.arg), Reply("PUSH", (format_volume(cmd.arg),), steps / per_s)
    if cmd.op == "FLUSH":
        n = int(cmd.arg)
        # expel what is in the barrel, then n full draw/push cycles
        steps = volume_to_microsteps(cfg, vol) + 2 * n * volume_to_microsteps(cfg, cap)
        return replace(state, plunger_volume=Decimal(0)), Reply("FLUSH", (str(n),), steps / per_s)
    if cmd.op == "HOME":
        steps = volume_to_microsteps(cfg, vol)
        return replace(state, plunger_volume=Decimal(0)), Reply("HOME", (), steps / per_s)
    if cmd.op == "RATE":
        return state, Reply("RATE", (f"{cmd.arg.normalize():f}",))
    raise ParseError(f"unknown command {cmd.op}")


class SimulatedPump:
    """A pump that owns its configuration and state and answers protocol lines."""

    def __init__(self, cfg: Optional[PumpConfig] = None, state: Optional[PumpState] = None):
        self.cfg = cfg or PumpConfig()
        self.state = state or PumpState()
        self._lock = threading.Lock()

    def handle_line(self, line: str) -> str:
        with self._lock:
            try:
                cmd = parse_command(line)
                self.state, reply = apply_command(self.state, self.cfg, cmd)
            except PumpError as exc:
                return exc.reply()
            if cmd.op == "RATE":
                self.cfg = replace(self.cfg, step_rate=float(cmd.arg))
            return reply.text

    def release(self) -> None:
        with self._lock:
            self.state = replace(self.state, status="idle")


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        pump: SimulatedPump = self.server.pump
        logger.info("pump client connected from %s", self.client_address)
        try:
            for raw in self.rfile:
                try:
                    line = raw.decode("utf-8")
                except UnicodeDecodeError:
                    reply = "ERR PARSE line is not valid UTF-8"
                else:
                    reply = pump.handle_line(line)
                self.wfile.write((reply + "\n").encode("utf-8"))
                self.wfile.flush()
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            pump.release()
            logger.info("pump client %s disconnected", self.client_address)


class PumpServer(socketserver.TCPServer):
    """Single-client TCP front end; later clients wait in the listen backlog."""

    allow_reuse_address = True

    def __init__(self, pump: SimulatedPump, address: tuple[str, int]):
        self.pump = pump
        super().__init__(address, _Handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server_address[:2]
        return host, port

    @property
    def endpoint(self) -> str:
        host, port = self.address
        return f"{host}:{port}"

    def start(self) -> "PumpServer":
        self._thread = threading.Thread(target=self.serve_forever, name="pump-sim", daemon=True)
        self._thread.start()
        return self

    def close(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
    return host, int(port)


def serve(cfg: Optional[PumpConfig] = None, endpoint: str = "127.0.0.1:0") -> PumpServer:
    """Start a simulated pump on ``endpoint`` in a background thread."""
    return PumpServer(SimulatedPump(cfg), parse_endpoint(endpoint)).start()


class TransportError(ConnectionError):
    pass


class PumpClient:
    """Blocking request/reply client: one line out, one line back."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        host, port = parse_endpoint(endpoint)
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot reach pump at {endpoint}: {exc}") from exc
        self._file = self._sock.makefile("rwb")

    def request(self, line: str) -> str:
        try:
            self._file.write((line.rstrip("\n") + "\n").encode("utf-8"))
            self._file.flush()
            reply = self._file.readline()
        except OSError as exc:
            raise TransportError(f"pump connection failed: {exc}") from exc
        if not reply:
            raise TransportError("pump closed the connection")
        return reply.decode("utf-8").rstrip("\n")

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
