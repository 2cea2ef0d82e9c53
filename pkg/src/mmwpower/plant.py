"""Simulated RF transmit chain.

IF drive, fixed stage gains, the step attenuator (DSA) and the link
attenuation set the PA input level; a Rapp AM/AM model compresses it and a
first-order lag smooths the result. Powers are in dBm and gains in dB
everywhere except inside :func:`pa_amam`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

LINK_STEP = "link_step"
TEMP_RAMP = "temp_ramp"


def rf_frequencies(f_lo: float, f_if: float) -> tuple[float, float]:
    """Upper and lower mixing products ``2*f_lo +/- f_if`` of a sub-harmonic mixer (GHz)."""
    if not (f_lo > 0 and f_if >= 0):
        raise ValueError(f"frequencies must be positive, got f_lo={f_lo}, f_if={f_if}")
    return 2.0 * f_lo + f_if, 2.0 * f_lo - f_if


@dataclass(frozen=True)
class PaParams:
    gain_db: float = 20.0
    psat_dbm: float = -22.5
    smoothness: float = 2.0

    @property
    def gain(self) -> float:
        return 10.0 ** (self.gain_db / 20.0)

    @property
    def vsat(self) -> float:
        return 10.0 ** (self.psat_dbm / 20.0)


def pa_amam(v_in, pa: PaParams):
    """Rapp AM/AM curve ``G*v / (1 + (G*v/vsat)^(2p))^(1/(2p))``.

    Amplitudes are in sqrt(mW), so ``20*log10(v)`` is power in dBm.
    """
    v = np.asarray(v_in, dtype=float)
    if np.any(v < 0):
        raise ValueError("input amplitude must be non-negative")
    two_p = 2.0 * pa.smoothness
    lin = pa.gain * v
    out = lin / (1.0 + (lin / pa.vsat) ** two_p) ** (1.0 / two_p)
    return out if out.ndim else float(out)


def pa_output_dbm(p_in_dbm: float, pa: PaParams, compression: bool = True) -> float:
    if not compression:
        return p_in_dbm + pa.gain_db
    # work relative to saturation to stay finite for very low drive
    r = 10.0 ** ((p_in_dbm + pa.gain_db - pa.psat_dbm) / 20.0)
    two_p = 2.0 * pa.smoothness
    return pa.psat_dbm + 20.0 * math.log10(r) - 10.0 / pa.smoothness * math.log10(1.0 + r**two_p)


def pa_input_for_output(p_out_dbm: float, pa: PaParams, compression: bool = True) -> float:
    """Inverse of :func:`pa_output_dbm`; the target must be below saturation."""
    if not compression:
        return p_out_dbm - pa.gain_db
    if p_out_dbm >= pa.psat_dbm:
        raise ValueError(f"{p_out_dbm} dBm is at or beyond PA saturation ({pa.psat_dbm} dBm)")
    two_p = 2.0 * pa.smoothness
    y = 10.0 ** ((p_out_dbm - pa.psat_dbm) / 20.0)
    r = (y**two_p / (1.0 - y**two_p)) ** (1.0 / two_p)
    return pa.psat_dbm + 20.0 * math.log10(r) - pa.gain_db


def compression_point(pa: PaParams, db: float = 1.0) -> tuple[float, float]:
    """Input and output power (dBm) where the gain has dropped by ``db``."""
    lo, hi = pa.psat_dbm - pa.gain_db - 60.0, pa.psat_dbm - pa.gain_db + 60.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid + pa.gain_db - pa_output_dbm(mid, pa) < db:
            lo = mid
        else:
            hi = mid
    p_in = 0.5 * (lo + hi)
    return p_in, pa_output_dbm(p_in, pa)


@dataclass(frozen=True)
class Disturbance:
    """``link_step``: link attenuation changes by ``magnitude`` dB at ``time``.
    ``temp_ramp``: thermal gain offset drifts at ``magnitude`` dB/s for ``duration`` s."""

    time: float
    kind: str
    magnitude: float
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in (LINK_STEP, TEMP_RAMP):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if not all(math.isfinite(v) for v in (self.time, self.magnitude, self.duration)):
            raise ValueError("disturbance fields must be finite")
        if self.duration < 0:
            raise ValueError("ramp duration must be >= 0")


@dataclass(frozen=True)
class DisturbanceSchedule:
    events: tuple[Disturbance, ...] = ()

    def __post_init__(self):
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        times = [ev.time for ev in events]
        if times != sorted(times):
            raise ValueError("disturbance times must be non-decreasing")

    @classmethod
    def link_step(cls, time: float, delta_db: float) -> "DisturbanceSchedule":
        return cls((Disturbance(time, LINK_STEP, delta_db),))

    def link_offset(self, t: float) -> float:
        return sum(ev.magnitude for ev in self.events if ev.kind == LINK_STEP and ev.time <= t)

    def thermal_offset(self, t: float) -> float:
        total = 0.0
        for ev in self.events:
            if ev.kind == TEMP_RAMP and t > ev.time:
                total += ev.magnitude * min(t - ev.time, ev.duration)
        return total


# chain defaults are synthetic; the operating point is trimmed so that the
# nominal DSA setting lands exactly on the reference power
NOMINAL_OUTPUT_DBM = -30.0
NOMINAL_ATTEN_DB = 15.0
NOMINAL_LINK_DB = 10.0


@dataclass(frozen=True)
class PlantConfig:
    if_drive_dbm: float | None = None
    stage_gains_db: tuple[float, ...] = (15.0, -7.0)
    pa: PaParams = field(default_factory=PaParams)
    alpha: float = 1.0
    lag_s: float = 1e-3
    f_lo_ghz: float = 9.6
    f_if_ghz: float = 5.0
    link_atten_db: float = NOMINAL_LINK_DB
    compression: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stage_gains_db", tuple(float(g) for g in self.stage_gains_db))
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.pa.smoothness < 1:
            raise ValueError("PA smoothness p must be >= 1")
        if self.lag_s < 0:
            raise ValueError("lag time constant must be >= 0")
        if self.pa.psat_dbm <= NOMINAL_OUTPUT_DBM:
            raise ValueError("PA saturated output must exceed the -30 dBm target")
        if self.if_drive_dbm is None:
            object.__setattr__(self, "if_drive_dbm", self.trimmed_drive())

    def trimmed_drive(
        self,
        p_out_dbm: float = NOMINAL_OUTPUT_DBM,
        atten_db: float = NOMINAL_ATTEN_DB,
        link_db: float | None = None,
    ) -> float:
        """IF drive that puts the output at ``p_out_dbm`` with the DSA at ``atten_db``."""
        link = self.link_atten_db if link_db is None else link_db
        p_in = pa_input_for_output(p_out_dbm, self.pa, self.compression)
        return p_in - sum(self.stage_gains_db) + self.alpha * atten_db + link

    @property
    def frequencies(self) -> tuple[float, float]:
        return rf_frequencies(self.f_lo_ghz, self.f_if_ghz)

    def pa_input_dbm(self, u_db: float, link_db: float, thermal_db: float = 0.0) -> float:
        return self.if_drive_dbm + sum(self.stage_gains_db) - self.alpha * u_db - link_db + thermal_db

    def static_output(self, u_db: float, link_db: float | None = None, thermal_db: float = 0.0) -> float:
        link = self.link_atten_db if link_db is None else link_db
        return pa_output_dbm(self.pa_input_dbm(u_db, link, thermal_db), self.pa, self.compression)

    def attenuation_for(self, p_out_dbm: float, link_db: float | None = None) -> float:
        """DSA setting (unquantized) that yields ``p_out_dbm`` at steady state."""
        link = self.link_atten_db if link_db is None else link_db
        p_in = pa_input_for_output(p_out_dbm, self.pa, self.compression)
        return (self.if_drive_dbm + sum(self.stage_gains_db) - link - p_in) / self.alpha


@dataclass
class PlantState:
    link_atten_db: float
    thermal_db: float = 0.0
    p_lag_dbm: float = math.nan
    t: float = 0.0

    @classmethod
    def initial(cls, config: PlantConfig, u_db: float, schedule: DisturbanceSchedule | None = None):
        schedule = schedule or DisturbanceSchedule()
        link = config.link_atten_db + schedule.link_offset(0.0)
        st = cls(link_atten_db=link, thermal_db=schedule.thermal_offset(0.0))
        st.p_lag_dbm = config.static_output(u_db, link, st.thermal_db)
        return st


def plant_step(
    state: PlantState,
    config: PlantConfig,
    u_applied: float,
    dt: float,
    schedule: DisturbanceSchedule | None = None,
) -> float:
    """Advance the chain by ``dt`` with the DSA held at ``u_applied``; returns P_RF (dBm)."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    t = state.t + dt
    if schedule is not None:
        state.link_atten_db = config.link_atten_db + schedule.link_offset(t)
        state.thermal_db = schedule.thermal_offset(t)
    target = config.static_output(u_applied, state.link_atten_db, state.thermal_db)
    if config.lag_s > 0 and math.isfinite(state.p_lag_dbm):
        state.p_lag_dbm = target + (state.p_lag_dbm - target) * math.exp(-dt / config.lag_s)
    else:
        state.p_lag_dbm = target
    state.t = t
    return state.p_lag_dbm


def linearize(config: PlantConfig, u_db: float = NOMINAL_ATTEN_DB, delta_db: float = 0.01) -> float:
    """Small-signal slope dP_out/d(-u) at a DSA setting, by central difference."""
    p_plus = config.static_output(u_db - delta_db)
    p_minus = config.static_output(u_db + delta_db)
    slope = (p_plus - p_minus) / (2.0 * delta_db)
    if config.compression and slope < 0.1 * config.alpha:
        warnings.warn(
            f"operating point u={u_db} dB is in PA saturation (slope {slope:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return slope

