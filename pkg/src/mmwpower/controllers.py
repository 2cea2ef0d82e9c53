"""Discrete PID, pure-integral, and fuzzy-integral attenuation controllers.

The step functions return the raw command ``u`` (dB); the step attenuator
quantization is applied separately by :func:`quantize_command`. Integration
is frozen while the previous raw command sits at an actuator bound and the
error pushes further past it (conditional anti-windup).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .fuzzy import FuzzyEngine

KINDS = ("pid", "i", "fi")


class ControllerFault(ArithmeticError):
    """Non-finite controller input or state."""


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    ts: float = 0.01

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "ts"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.ts <= 0:
            raise ValueError("sampling period must be > 0")


@dataclass(frozen=True)
class ActuatorModel:
    """6-bit step attenuator: 0..31.5 dB in 0.5 dB steps by default.

    ``step_db=None`` models an ideal continuous attenuator.
    """

    min_db: float = 0.0
    max_db: float = 31.5
    step_db: float | None = 0.5
    slew_db: float | None = None

    def __post_init__(self):
        if not self.min_db <= self.max_db:
            raise ValueError("actuator min must not exceed max")
        if self.step_db is not None and not self.step_db > 0:
            raise ValueError("actuator step must be > 0")
        if self.slew_db is not None and not self.slew_db > 0:
            raise ValueError("slew limit must be > 0")

    def on_grid(self, u: float, tol: float = 1e-9) -> bool:
        if not self.min_db - tol <= u <= self.max_db + tol:
            return False
        if self.step_db is None:
            return True
        n = (u - self.min_db) / self.step_db
        return abs(n - round(n)) <= tol


@dataclass
class ControllerState:
    integral: float = 0.0
    prev_error: float = 0.0
    prev_command: float = 0.0
    k: int = 0


def quantize_command(u_raw: float, act: ActuatorModel, u_prev: float | None = None) -> float:
    """Clamp, snap to the attenuator grid (ties toward less attenuation), slew-limit."""
    u = min(max(u_raw, act.min_db), act.max_db)
    if act.step_db is not None:
        n = math.ceil((u - act.min_db) / act.step_db - 0.5)
        u = min(act.min_db + n * act.step_db, act.max_db)
    if act.slew_db is not None and u_prev is not None and abs(u - u_prev) > act.slew_db:
        room = act.slew_db
        if act.step_db is not None:
            room = math.floor(act.slew_db / act.step_db + 1e-9) * act.step_db
        u = u_prev + math.copysign(room, u - u_prev)
    return u


def _check(e: float) -> None:
    if not math.isfinite(e):
        raise ControllerFault(f"non-finite error input {e}")


def _winding_up(state: ControllerState, push: float, act: ActuatorModel | None) -> bool:
    if act is None or push == 0.0:
        return False
    return (state.prev_command >= act.max_db and push > 0) or (
        state.prev_command <= act.min_db and push < 0
    )


def _derivative(state: ControllerState, e: float, ts: float) -> float:
    return 0.0 if state.k == 0 else (e - state.prev_error) / ts


def pid_step(state: ControllerState, gains: PidGains, e: float, act: ActuatorModel | None = None) -> float:
    """``Kp*e + Ki*sum(e*Ts) + Kd*(e - e_prev)/Ts``; the derivative is zero on the first sample."""
    _check(e)
    d = _derivative(state, e, gains.ts)
    if not _winding_up(state, e, act):
        state.integral += gains.ki * e * gains.ts
    u = gains.kp * e + state.integral + gains.kd * d
    if not math.isfinite(u):
        raise ControllerFault("PID output is not finite")
    state.prev_error = e
    state.prev_command = u
    state.k += 1
    return u


def integral_step(
    state: ControllerState, ki: float, ts: float, e: float, act: ActuatorModel | None = None
) -> float:
    """``u[k] = u[k-1] + Ki*e*Ts``."""
    _check(e)
    u = state.prev_command
    if not _winding_up(state, e, act):
        u = u + ki * e * ts
    state.integral = u
    state.prev_error = e
    state.prev_command = u
    state.k += 1
    return u


def fi_step(
    state: ControllerState,
    engine: FuzzyEngine,
    ts: float,
    e: float,
    act: ActuatorModel | None = None,
    ki: float = 1.0,
) -> float:
    """``u[k] = u[k-1] + Ki*du*Ts`` with ``du`` inferred from ``(e, de/dt)``."""
    _check(e)
    de = _derivative(state, e, ts)
    du = engine.step(e, de)
    u = state.prev_command
    if not _winding_up(state, du, act):
        u = u + ki * du * ts
    state.integral = u
    state.prev_error = e
    state.prev_command = u
    state.k += 1
    return u


def analytic_time_constant(alpha: float, ki: float) -> float:
    """Closed-loop time constant ``1/(alpha*Ki)`` of integral control on a static gain."""
    if not (alpha > 0 and ki > 0):
        raise ValueError(f"alpha and Ki must be > 0, got alpha={alpha}, Ki={ki}")
    return 1.0 / (alpha * ki)


@dataclass(frozen=True)
class ControllerSpec:
    kind: str = "fi"
    kp: float = 0.0
    ki: float = 2.0
    kd: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"controller kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @property
    def label(self) -> str:
        if self.kind == "pid":
            return f"pid(kp={self.kp:g},ki={self.ki:g},kd={self.kd:g})"
        return f"{self.kind}(ki={self.ki:g})"


@dataclass
class Controller:
    """A controller instance: spec, actuator, and its own mutable state."""

    spec: ControllerSpec
    ts: float
    actuator: ActuatorModel = field(default_factory=ActuatorModel)
    engine: FuzzyEngine | None = None
    state: ControllerState = field(default_factory=ControllerState)

    def __post_init__(self):
        if self.spec.kind == "fi" and self.engine is None:
            self.engine = FuzzyEngine()
        self._gains = PidGains(self.spec.kp, self.spec.ki, self.spec.kd, self.ts)

    def reset(self, u0: float) -> None:
        """Start at equilibrium with the raw command at ``u0``."""
        self.state = ControllerState(integral=u0, prev_command=u0)

    def step(self, e: float) -> float:
        kind = self.spec.kind
        if kind == "pid":
            return pid_step(self.state, self._gains, e, self.actuator)
        if kind == "i":
            return integral_step(self.state, self.spec.ki, self.ts, e, self.actuator)
        return fi_step(self.state, self.engine, self.ts, e, self.actuator, self.spec.ki)
