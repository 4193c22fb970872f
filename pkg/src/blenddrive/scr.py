"""UDP text-protocol bridge compatible with the Simulated Car Racing
message format: `(name v1 v2 ...)` groups, one sensor datagram paired with
one actuator datagram per control step."""
from __future__ import annotations

import math
import socket
from dataclasses import dataclass, field
from enum import Enum

from .command import Command
from .sensors import N_RAYS, N_SECTORS, sensor_frame
from .track import (DEFAULT_PHYSICS, PhysicsConfig, TrackGeometry, WorldState,
                    pose_at, step)

SHUTDOWN = "***shutdown***"
RESTART = "***restart***"
IDENTIFIED = "***identified***"

# groups this artifact consumes; everything else passes through unchecked
KNOWN_ARITIES = {
    "angle": 1,
    "trackPos": 1,
    "speedX": 1,
    "wheelSpinVel": 4,
    "rpm": 1,
    "track": N_RAYS,
    "opponents": N_SECTORS,
}


class ProtocolError(ValueError):
    pass


@dataclass
class SensorMessage:
    angle: float | None = None
    track_pos: float | None = None
    speed_x: float | None = None
    wheel_spin_vel: tuple[float, ...] | None = None
    rpm: float | None = None
    track: tuple[float, ...] | None = None
    opponents: tuple[float, ...] | None = None
    extras: dict[str, tuple[float, ...]] = field(default_factory=dict)


_FIELD_FOR_GROUP = {
    "angle": "angle", "trackPos": "track_pos", "speedX": "speed_x",
    "wheelSpinVel": "wheel_spin_vel", "rpm": "rpm", "track": "track",
    "opponents": "opponents",
}


def _tokenize_groups(text: str) -> list[tuple[str, list[float]]]:
    groups = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch != "(":
            raise ProtocolError(f"expected '(' at position {i}")
        close = text.find(")", i)
        if close < 0:
            raise ProtocolError("unbalanced parentheses")
        body = text[i + 1:close].split()
        if not body:
            raise ProtocolError("empty group")
        name, raw_values = body[0], body[1:]
        if not raw_values:
            raise ProtocolError(f"group {name!r} has no values")
        try:
            values = [float(v) for v in raw_values]
        except ValueError as exc:
            raise ProtocolError(f"non-numeric token in group {name!r}") from exc
        for v in values:
            if not math.isfinite(v):
                raise ProtocolError(f"non-finite value in group {name!r}")
        groups.append((name, values))
        i = close + 1
    return groups


def parse_sensor_string(text: str) -> SensorMessage:
    msg = SensorMessage()
    for name, values in _tokenize_groups(text):
        arity = KNOWN_ARITIES.get(name)
        if arity is not None:
            if len(values) != arity:
                raise ProtocolError(
                    f"arity: {name} expects {arity}, got {len(values)}")
            value = values[0] if arity == 1 else tuple(values)
            setattr(msg, _FIELD_FOR_GROUP[name], value)
        else:
            msg.extras[name] = tuple(values)
    return msg


@dataclass(frozen=True)
class ActuatorMessage:
    accel: float
    brake: float
    steer: float
    gear: int = 1

    @classmethod
    def from_command(cls, cmd: Command) -> "ActuatorMessage":
        cmd = cmd.clamped()
        return cls(max(cmd.accel, 0.0), max(-cmd.accel, 0.0), cmd.steer, 1)

    def to_command(self) -> Command:
        return Command(self.steer, self.accel - self.brake)


def _fmt(v: float) -> str:
    return str(int(v)) if v == int(v) else repr(float(v))


def format_action_string(a: ActuatorMessage) -> str:
    if not 0.0 <= a.accel <= 1.0:
        raise ProtocolError(f"accel out of range: {a.accel}")
    if not 0.0 <= a.brake <= 1.0:
        raise ProtocolError(f"brake out of range: {a.brake}")
    if not -1.0 <= a.steer <= 1.0:
        raise ProtocolError(f"steer out of range: {a.steer}")
    return (f"(accel {_fmt(a.accel)})(brake {_fmt(a.brake)})"
            f"(gear {a.gear})(steer {_fmt(a.steer)})")


def parse_action_string(text: str) -> ActuatorMessage:
    fields = dict(_tokenize_groups(text))
    try:
        return ActuatorMessage(fields["accel"][0], fields["brake"][0],
                               fields["steer"][0], int(fields["gear"][0]))
    except KeyError as exc:
        raise ProtocolError(f"missing actuator group {exc}") from exc


def format_sensor_string(frame) -> str:
    parts = [
        f"(angle {_fmt(frame.angle)})",
        f"(trackPos {_fmt(frame.track_pos)})",
        f"(speedX {_fmt(frame.speed)})",
        "(wheelSpinVel " + " ".join(_fmt(v) for v in frame.wheel_speeds) + ")",
        f"(rpm {_fmt(frame.engine_rpm)})",
        "(track " + " ".join(_fmt(v) for v in frame.track_rays) + ")",
        "(opponents " + " ".join(_fmt(v) for v in frame.opponents) + ")",
    ]
    return "".join(parts)


# --------------------------------------------------------------------------
# Sessions
# --------------------------------------------------------------------------

class SessionEnd(Enum):
    SHUTDOWN = "shutdown"
    RESTART = "restart"
    TIMEOUT = "timeout"
    DONE = "done"


@dataclass
class SessionResult:
    steps: int
    end: SessionEnd


def run_client(host: str, port: int, controller, client_id: str = "SCR",
               max_steps: int | None = None,
               timeout: float = 1.0) -> SessionResult:
    """Drive a remote simulator: handshake, then sensor -> Command loop.

    `controller` maps a SensorMessage to a Command.
    """
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.settimeout(timeout)
    addr = (host, port)
    try:
        init_angles = " ".join(str(-90 + 10 * i) for i in range(N_RAYS))
        for _ in range(5):
            sock.sendto(f"{client_id}(init {init_angles})".encode(), addr)
            try:
                data, _ = sock.recvfrom(4096)
                break
            except (socket.timeout, ConnectionRefusedError):
                continue  # refused: loopback peer not bound yet
        else:
            return SessionResult(0, SessionEnd.TIMEOUT)

        steps = 0
        while max_steps is None or steps < max_steps:
            text = data.decode(errors="replace").rstrip("\x00")
            if SHUTDOWN in text:
                return SessionResult(steps, SessionEnd.SHUTDOWN)
            if RESTART in text:
                return SessionResult(steps, SessionEnd.RESTART)
            if IDENTIFIED not in text:
                try:
                    cmd = controller(parse_sensor_string(text))
                    reply = format_action_string(
                        ActuatorMessage.from_command(cmd))
                    sock.sendto(reply.encode(), addr)
                    steps += 1
                except ProtocolError:
                    pass  # malformed datagram: skip this step
            try:
                data, _ = sock.recvfrom(4096)
            except socket.timeout:
                return SessionResult(steps, SessionEnd.TIMEOUT)
        return SessionResult(steps, SessionEnd.DONE)
    finally:
        sock.close()


def run_server(port: int, geom: TrackGeometry,
               phys: PhysicsConfig = DEFAULT_PHYSICS,
               initial_state: WorldState | None = None,
               max_steps: int = 1000, timeout: float = 1.0,
               host: str = "127.0.0.1", ready=None) -> SessionResult:
    """Serve the built-in simulator to one SCR client over UDP.

    `ready`, when given, is a threading.Event set once the socket is bound.
    """
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.settimeout(timeout)
    sock.bind((host, port))
    if ready is not None:
        ready.set()
    state = initial_state or WorldState(pose_at(geom, 0.0, speed=10.0))
    try:
        # wait for identification
        while True:
            try:
                data, client = sock.recvfrom(4096)
            except socket.timeout:
                return SessionResult(0, SessionEnd.TIMEOUT)
            if b"(init" in data:
                sock.sendto(IDENTIFIED.encode(), client)
                break

        steps = 0
        while steps < max_steps:
            frame = sensor_frame(state, geom)
            sock.sendto(format_sensor_string(frame).encode(), client)
            try:
                data, client = sock.recvfrom(4096)
            except socket.timeout:
                return SessionResult(steps, SessionEnd.TIMEOUT)
            text = data.decode(errors="replace")
            if SHUTDOWN in text:
                return SessionResult(steps, SessionEnd.SHUTDOWN)
            if RESTART in text:
                return SessionResult(steps, SessionEnd.RESTART)
            try:
                act = parse_action_string(text)
            except ProtocolError:
                continue  # malformed: resend current frame next loop
            state = step(state, act.to_command(), geom, phys.dt, phys)
            steps += 1
        sock.sendto(SHUTDOWN.encode(), client)
        return SessionResult(steps, SessionEnd.DONE)
    finally:
        sock.close()
