"""Closed-loop scenarios, transient metrics, and controller comparisons."""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .controllers import ActuatorModel, Controller, ControllerFault, ControllerSpec, quantize_command
from .fuzzy import FuzzyEngine, InferenceError
from .plant import LINK_STEP, DisturbanceSchedule, PlantConfig, PlantState, linearize, plant_step
from .sensing import AdcModel, DetectorModel, measure_power

TRACE_COLUMNS = ("t_s", "p_rf_dbm", "p_est_dbm", "e_db", "u_raw_db", "u_applied_db", "link_atten_db")

DEFAULT_ONSET_S = 2.0
DEFAULT_STEP_DB = -5.0

# default grids for the unstable-PID search
KP_GRID = tuple(round(0.25 * k, 2) for k in range(21))
KD_GRID = tuple(round(0.05 * k, 2) for k in range(21))


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Scenario:
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    plant: PlantConfig = field(default_factory=PlantConfig)
    detector: DetectorModel = field(default_factory=DetectorModel)
    adc: AdcModel | None = field(default_factory=AdcModel)
    actuator: ActuatorModel = field(default_factory=ActuatorModel)
    engine: FuzzyEngine = field(default_factory=FuzzyEngine)
    schedule: DisturbanceSchedule = field(
        default_factory=lambda: DisturbanceSchedule.link_step(DEFAULT_ONSET_S, DEFAULT_STEP_DB)
    )
    p_ref_dbm: float = -30.0
    duration_s: float = 8.0
    ts_s: float = 0.01
    seed: int = 0
    u_init_db: float | None = None

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("duration must be > 0")
        if not self.ts_s > 0:
            raise ValueError("Ts must be > 0")
        n = self.duration_s / self.ts_s
        if abs(n - round(n)) > 1e-6:
            raise ValueError("duration must be a whole number of sampling periods")
        d = self.detector
        if not d.range_min_dbm <= self.p_ref_dbm <= d.range_max_dbm:
            raise ValueError(f"P_ref {self.p_ref_dbm} dBm outside the detector range")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s / self.ts_s)) + 1

    def initial_command(self) -> float:
        if self.u_init_db is not None:
            return quantize_command(self.u_init_db, self.actuator)
        link0 = self.plant.link_atten_db + self.schedule.link_offset(0.0)
        return quantize_command(self.plant.attenuation_for(self.p_ref_dbm, link0), self.actuator)

    def power_ripple_db(self) -> float:
        """Output power step caused by one attenuator LSB plus one ADC LSB."""
        ripple = 0.0
        if self.actuator.step_db is not None:
            slope = abs(linearize(self.plant, self.initial_command()))
            ripple += self.actuator.step_db * slope
        if self.adc is not None:
            ripple += self.adc.lsb_v / abs(self.detector.slope_v_per_db)
        return ripple


def reversed_disturbance(sc: Scenario) -> Scenario:
    """Same plant and drive, starting from the post-disturbance link and stepping back."""
    end = sc.plant.link_atten_db + sc.schedule.link_offset(math.inf)
    events = tuple(
        replace(ev, magnitude=-ev.magnitude) if ev.kind == LINK_STEP else ev for ev in sc.schedule.events
    )
    return replace(sc, plant=replace(sc.plant, link_atten_db=end), schedule=DisturbanceSchedule(events))


@dataclass
class SimTrace:
    t: np.ndarray
    p_rf: np.ndarray
    p_est: np.ndarray
    e: np.ndarray
    u_raw: np.ndarray
    u_applied: np.ndarray
    link_atten: np.ndarray
    saturated: np.ndarray
    ts: float
    error: str | None = None

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_series(cls, t, p_rf, ts: float | None = None, link_atten=None) -> "SimTrace":
        """Trace holding only a power series; used for synthetic metric checks."""
        t = np.asarray(t, dtype=float)
        p = np.asarray(p_rf, dtype=float)
        zeros = np.zeros_like(p)
        link = zeros if link_atten is None else np.asarray(link_atten, dtype=float)
        ts = float(t[1] - t[0]) if ts is None else ts
        return cls(t, p, p.copy(), zeros, zeros, zeros, link, np.zeros(len(p), bool), ts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(TRACE_COLUMNS) + "\n")
        cols = (self.t, self.p_rf, self.p_est, self.e, self.u_raw, self.u_applied, self.link_atten)
        for row in zip(*cols):
            buf.write(",".join(f"{v:.9g}" for v in row) + "\n")
        return buf.getvalue()


def run_scenario(sc: Scenario) -> SimTrace:
    """Fixed-step loop: plant -> detector/ADC -> error -> controller -> attenuator."""
    n = sc.n_samples
    ts = sc.ts_s
    rng = np.random.default_rng(sc.seed)
    noisy = sc.detector.noise_v > 0 or (sc.adc is not None and sc.adc.noise_codes > 0)
    meas_rng = rng if noisy else None

    u_applied = sc.initial_command()
    ctrl = Controller(sc.controller, ts, sc.actuator, sc.engine)
    ctrl.reset(u_applied)
    pstate = PlantState.initial(sc.plant, u_applied, sc.schedule)

    cols = np.full((7, n), np.nan)
    sat = np.zeros(n, dtype=bool)
    error = None
    for k in range(n):
        if k:
            p_rf = plant_step(pstate, sc.plant, u_applied, ts, sc.schedule)
        else:
            p_rf = pstate.p_lag_dbm
        p_est, saturated = measure_power(p_rf, sc.detector, sc.adc, rng=meas_rng)
        e = sc.p_ref_dbm - p_est
        try:
            # more attenuation lowers the output, so the loop is reverse-acting
            u_raw = ctrl.step(-e)
        except (ControllerFault, InferenceError) as exc:
            error = f"t={k * ts:.6g}s: {exc}"
            break
        u_applied = quantize_command(u_raw, sc.actuator, u_applied)
        cols[:, k] = (k * ts, p_rf, p_est, e, u_raw, u_applied, pstate.link_atten_db)
        sat[k] = saturated
        if not math.isfinite(p_rf):
            error = f"t={k * ts:.6g}s: non-finite plant output"
            break
    m = n if error is None else k
    return SimTrace(*(c[:m] for c in cols), saturated=sat[:m], ts=ts, error=error)


@dataclass(frozen=True)
class TransientMetrics:
    settling_time_s: float | None
    overshoot_db: float
    e_ss_db: float
    limit_cycle: bool
    lc_amplitude_db: float
    lc_period_s: float

    @property
    def settled(self) -> bool:
        return self.settling_time_s is not None

    def as_dict(self) -> dict:
        return {
            "settled": self.settled,
            "settling_time_s": self.settling_time_s,
            "overshoot_db": self.overshoot_db,
            "e_ss_db": self.e_ss_db,
            "limit_cycle": self.limit_cycle,
            "lc_amplitude_db": self.lc_amplitude_db,
            "lc_period_s": self.lc_period_s,
        }


def detect_limit_cycle(y: Sequence[float], ts: float, ripple_db: float = 0.0) -> tuple[bool, float, float]:
    """Flag a sustained oscillation in the final half of ``y``.

    Returns ``(flag, amplitude_db, period_s)``. The detrended window must
    swing more than four times ``ripple_db`` peak to peak, and its
    autocorrelation needs a local maximum of at least 0.5 at a lag of two
    samples or more.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 50:
        raise ValueError("limit-cycle detection needs at least 50 samples")
    w = y[len(y) // 2:]
    idx = np.arange(len(w))
    x = w - np.polyval(np.polyfit(idx, w, 1), idx)
    pp = float(x.max() - x.min())
    amplitude = 0.5 * pp
    if pp <= max(4.0 * ripple_db, 1e-9):
        return False, amplitude, 0.0
    acf = np.correlate(x, x, mode="full")[len(x) - 1:]
    acf = acf / acf[0]
    for lag in range(2, len(acf) - 1):
        if acf[lag] >= 0.5 and acf[lag] >= acf[lag - 1] and acf[lag] >= acf[lag + 1]:
            return True, amplitude, lag * ts
    return False, amplitude, 0.0


def compute_metrics(
    trace: SimTrace,
    p_ref: float,
    band_pct: float = 2.0,
    onset_s: float | None = None,
    magnitude_db: float | None = None,
    ripple_db: float = 0.0,
) -> TransientMetrics:
    """Settling time (from disturbance onset), overshoot, steady-state error, limit cycle.

    The band is ``band_pct`` percent of the disturbance magnitude, taken from
    the link attenuation change unless given. A response that re-enters the
    band only within the final steady-state window counts as not settled.
    """
    y = trace.p_rf
    t = trace.t
    n = len(y)
    nw = max(1, math.ceil(0.1 * n))
    if n < 10:
        raise ValueError("trace is shorter than the steady-state window")
    steady = float(y[-nw:].mean())
    e_ss = float(p_ref - steady)

    link = trace.link_atten
    if onset_s is None:
        moved = np.flatnonzero(np.abs(np.diff(link)) > 0)
        onset_s = float(t[moved[0] + 1]) if len(moved) else float(t[0])
    i0 = int(np.searchsorted(t, onset_s - 1e-9 * trace.ts))
    dev = y[i0:] - steady
    if magnitude_db is None:
        magnitude_db = float(abs(link[-1] - link[0]))
        if magnitude_db == 0.0:
            magnitude_db = float(np.abs(dev).max()) if len(dev) else 0.0
    band = band_pct / 100.0 * magnitude_db

    outside = np.flatnonzero(np.abs(dev) > band)
    if len(outside) == 0:
        settling = 0.0
    elif len(dev) - outside[-1] - 1 < nw:
        # must stay in band for at least the steady-state window
        settling = None
    else:
        settling = float(t[i0 + outside[-1] + 1] - t[i0])

    overshoot = 0.0
    if len(dev):
        s = math.copysign(1.0, dev[int(np.argmax(np.abs(dev)))])
        overshoot = max(0.0, float(np.max(-s * dev)))

    if n >= 50:
        flag, amp, period = detect_limit_cycle(y, trace.ts, ripple_db)
    else:
        flag, amp, period = False, 0.0, 0.0
    return TransientMetrics(settling, overshoot, e_ss, flag, amp, period)


def scenario_metrics(sc: Scenario, trace: SimTrace, band_pct: float = 2.0) -> TransientMetrics:
    magnitude = sum(abs(ev.magnitude) for ev in sc.schedule.events if ev.kind == LINK_STEP)
    onsets = [ev.time for ev in sc.schedule.events]
    return compute_metrics(
        trace,
        sc.p_ref_dbm,
        band_pct,
        onset_s=onsets[0] if onsets else None,
        magnitude_db=magnitude or None,
        ripple_db=sc.power_ripple_db(),
    )


@dataclass
class ComparisonEntry:
    spec: ControllerSpec
    trace: SimTrace
    metrics: TransientMetrics
    settling_ratio: float


def _ratio(a: float | None, b: float | None) -> float:
    if a is None or b is None:
        return math.nan
    if b == 0.0:
        return 1.0 if a == 0.0 else math.inf
    return a / b


def compare_controllers(
    base: Scenario, controllers: Sequence[ControllerSpec], band_pct: float = 2.0
) -> list[ComparisonEntry]:
    """Run every controller on the same scenario; settling ratios are relative to the first."""
    if len(controllers) < 2:
        raise ValueError("need at least two controllers to compare")
    runs = []
    for spec in controllers:
        sc = replace(base, controller=spec)
        tr = run_scenario(sc)
        if tr.error:
            raise SimulationError(f"{spec.label}: {tr.error}")
        runs.append((spec, tr, scenario_metrics(sc, tr, band_pct)))
    ref = runs[0][2].settling_time_s
    return [ComparisonEntry(s, tr, m, _ratio(m.settling_time_s, ref)) for s, tr, m in runs]


def _limit_cycles(sc: Scenario) -> bool:
    tr = run_scenario(sc)
    if tr.error:
        return True
    return scenario_metrics(sc, tr).limit_cycle


@dataclass
class GainSearchResult:
    ki: float
    kp_grid: tuple[float, ...]
    kd_grid: tuple[float, ...]
    flags: dict[tuple[float, float], bool]
    # (stable (kp, kd), limit-cycling (kp, kd)) pairs that differ by one grid step below 1
    transitions: list[tuple[tuple[float, float], tuple[float, float]]]


def find_unstable_pid(
    base: Scenario,
    ki: float = 2.0,
    kp_grid: Sequence[float] = KP_GRID,
    kd_grid: Sequence[float] = KD_GRID,
    jobs: int = 1,
) -> GainSearchResult:
    """Grid-search (Kp, Kd) for limit cycles next to a stable neighbour."""
    pairs = [(kp, kd) for kp in kp_grid for kd in kd_grid]
    scs = [replace(base, controller=ControllerSpec("pid", kp, ki, kd)) for kp, kd in pairs]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            flags = list(pool.map(_limit_cycles, scs, chunksize=8))
    else:
        flags = [_limit_cycles(sc) for sc in scs]
    grid = dict(zip(pairs, flags))
    transitions = []
    for i, kp in enumerate(kp_grid):
        for j, kd in enumerate(kd_grid):
            if grid[(kp, kd)]:
                continue
            for di, dj in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < len(kp_grid) and 0 <= jj < len(kd_grid):
                    nb = (kp_grid[ii], kd_grid[jj])
                    if grid[nb] and abs(nb[0] - kp) < 1 and abs(nb[1] - kd) < 1:
                        transitions.append(((kp, kd), nb))
    return GainSearchResult(ki, tuple(kp_grid), tuple(kd_grid), grid, transitions)
