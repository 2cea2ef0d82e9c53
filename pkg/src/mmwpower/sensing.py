"""RMS power detector, ADC, and detector calibration.

The detector is log-linear, ``V = S * (P - P0)``; the loop inverts the
ADC code through a calibrated ``(S, P0)`` pair to estimate output power.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorModel:
    slope_v_per_db: float = 0.025
    intercept_dbm: float = -45.0
    range_min_dbm: float = -40.0
    range_max_dbm: float = 0.0
    noise_v: float = 0.0

    def __post_init__(self):
        if self.slope_v_per_db == 0 or not math.isfinite(self.slope_v_per_db):
            raise ValueError("detector slope must be finite and non-zero")
        if not self.range_min_dbm < self.range_max_dbm:
            raise ValueError("detector range min must be below max")
        if self.noise_v < 0:
            raise ValueError("noise sigma must be >= 0")

    @property
    def clamp_v(self) -> tuple[float, float]:
        """Output voltage limits, the response at the ends of the valid range."""
        v1 = self.slope_v_per_db * (self.range_min_dbm - self.intercept_dbm)
        v2 = self.slope_v_per_db * (self.range_max_dbm - self.intercept_dbm)
        return min(v1, v2), max(v1, v2)


@dataclass(frozen=True)
class AdcModel:
    bits: int = 12
    full_scale_v: float = 4.096
    noise_codes: float = 0.0

    def __post_init__(self):
        if not 8 <= self.bits <= 16:
            raise ValueError("ADC resolution must be 8..16 bits")
        if not self.full_scale_v > 0:
            raise ValueError("ADC full scale must be > 0")

    @property
    def lsb_v(self) -> float:
        return self.full_scale_v / (1 << self.bits)

    def convert(self, v: float, rng: np.random.Generator | None = None) -> tuple[int, bool]:
        x = v / self.lsb_v
        if self.noise_codes > 0 and rng is not None:
            x += rng.normal(0.0, self.noise_codes)
        code = math.floor(x + 0.5)
        top = (1 << self.bits) - 1
        if code < 0:
            return 0, True
        if code > top:
            return top, True
        return code, False


@dataclass(frozen=True)
class CalibrationResult:
    slope_v_per_db: float
    intercept_dbm: float
    r2: float

    def power(self, v: float) -> float:
        return v / self.slope_v_per_db + self.intercept_dbm


class Measurement(NamedTuple):
    p_est_dbm: float
    saturated: bool


def detector_voltage(
    p_rf_dbm: float,
    det: DetectorModel,
    rng: np.random.Generator | None = None,
    clamp: bool = True,
) -> float:
    """``S * (P - P0)``, clamped; noise is added only when ``rng`` is given."""
    v = det.slope_v_per_db * (p_rf_dbm - det.intercept_dbm)
    if rng is not None and det.noise_v > 0:
        v += rng.normal(0.0, det.noise_v)
    if clamp:
        lo, hi = det.clamp_v
        v = min(max(v, lo), hi)
    return v


def measure_power(
    p_rf_dbm: float,
    det: DetectorModel,
    adc: AdcModel | None = None,
    calibration: CalibrationResult | None = None,
    rng: np.random.Generator | None = None,
) -> Measurement:
    """Detector -> ADC -> inverse affine map. ``adc=None`` is an ideal converter."""
    if calibration is None:
        calibration = CalibrationResult(det.slope_v_per_db, det.intercept_dbm, 1.0)
    saturated = not det.range_min_dbm <= p_rf_dbm <= det.range_max_dbm
    v = detector_voltage(p_rf_dbm, det, rng)
    if adc is not None:
        code, clipped = adc.convert(v, rng)
        v = code * adc.lsb_v
        saturated = saturated or clipped
    return Measurement(calibration.power(v), saturated)


def quantization_bound_db(det: DetectorModel, adc: AdcModel) -> float:
    """Worst-case power error of an ideal ADC: half an LSB through the slope."""
    return adc.lsb_v / (2.0 * abs(det.slope_v_per_db))


def calibrate(sweep: Iterable[tuple[float, float]]) -> CalibrationResult:
    """Least-squares fit of detector voltage against input power."""
    pts = np.asarray(list(sweep), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise CalibrationError("need at least 3 (power, voltage) points")
    p, v = pts[:, 0], pts[:, 1]
    if len(np.unique(p)) < 3:
        raise CalibrationError("need at least 3 distinct power levels")
    pc = p - p.mean()
    sxx = float(pc @ pc)
    if sxx == 0.0:
        raise CalibrationError("zero variance in power")
    slope = float(pc @ (v - v.mean())) / sxx
    if slope == 0.0:
        raise CalibrationError("fitted slope is zero")
    icpt = float(v.mean() - slope * p.mean())
    resid = v - (slope * p + icpt)
    ss_tot = float(((v - v.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return CalibrationResult(slope, -icpt / slope, min(max(r2, 0.0), 1.0))


def generate_sweep(
    det: DetectorModel,
    powers_dbm: Sequence[float],
    noise_v: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[tuple[float, float]]:
    """Synthetic characterization sweep ``(p_in_dbm, v_out_volts)``."""
    if noise_v > 0 and rng is None:
        raise ValueError("noisy sweep needs an rng")
    out = []
    for p in powers_dbm:
        v = det.slope_v_per_db * (p - det.intercept_dbm)
        if noise_v > 0:
            v += rng.normal(0.0, noise_v)
        out.append((float(p), float(v)))
    return out


def write_sweep_csv(path: str | Path, sweep: Iterable[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p_in_dbm", "v_out_volts"])
        for p, v in sweep:
            w.writerow([f"{p:.9g}", f"{v:.9g}"])


def read_sweep_csv(path: str | Path) -> list[tuple[float, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["p_in_dbm", "v_out_volts"]:
        raise CalibrationError(f"{path}: expected header p_in_dbm,v_out_volts")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            p, v = (float(c) for c in row)
        except ValueError:
            raise CalibrationError(f"{path}:{lineno}: expected two numbers") from None
        out.append((p, v))
    return out
