"""Power-versus-EVM analysis of the transmit chain.

Square-QAM symbols are scaled to a mean PA input power, passed through the
AM/AM curve, and compared against the reference after a least-squares
complex gain fit, so only nonlinear distortion counts toward EVM.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .plant import PaParams, PlantConfig, pa_amam

SUPPORTED_ORDERS = (16, 64, 256)


@dataclass(frozen=True, eq=False)
class ConstellationBatch:
    order: int
    symbols: np.ndarray

    @property
    def n(self) -> int:
        return len(self.symbols)


def _levels(order: int) -> np.ndarray:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; use one of {SUPPORTED_ORDERS}")
    m = math.isqrt(order)
    return np.arange(-(m - 1), m, 2, dtype=float)


def qam_alphabet(order: int) -> np.ndarray:
    """All constellation points, scaled to unit mean power."""
    lv = _levels(order)
    pts = (lv[:, None] + 1j * lv[None, :]).ravel()
    return pts / math.sqrt(2.0 * (order - 1) / 3.0)


def generate_qam(order: int, n: int, seed: int = 0) -> ConstellationBatch:
    """Uniform random symbols, normalized so the batch mean power is exactly 1."""
    lv = _levels(order)
    if n < 1:
        raise ValueError("need at least one symbol")
    rng = np.random.default_rng(seed)
    s = rng.choice(lv, n) + 1j * rng.choice(lv, n)
    s = s / math.sqrt(float(np.mean(np.abs(s) ** 2)))
    return ConstellationBatch(order, s)


def _as_array(x) -> np.ndarray:
    return np.asarray(x.symbols if isinstance(x, ConstellationBatch) else x, dtype=complex)


def compute_evm_rms(reference, measured) -> float:
    """RMS EVM in percent after fitting ``measured ~ g * reference``."""
    r = _as_array(reference)
    m = _as_array(measured)
    if r.shape != m.shape:
        raise ValueError(f"length mismatch: {r.shape} vs {m.shape}")
    rr = float(np.vdot(r, r).real)
    if rr == 0.0:
        raise ValueError("reference has zero power")
    g = np.vdot(r, m) / rr
    ref_pow = abs(g) ** 2 * rr
    if ref_pow == 0.0:
        return math.inf
    err = m - g * r
    return 100.0 * math.sqrt(float(np.vdot(err, err).real) / ref_pow)


def amplify(symbols: np.ndarray, p_in_dbm: float, pa: PaParams, compression: bool = True) -> np.ndarray:
    """Scale unit-power symbols to ``p_in_dbm`` mean and apply AM/AM (phase preserved)."""
    x = symbols * 10.0 ** (p_in_dbm / 20.0)
    if not compression:
        return x * pa.gain
    mag = np.abs(x)
    return pa_amam(mag, pa) * np.exp(1j * np.angle(x))


@dataclass(frozen=True)
class EvmSweepConfig:
    order: int = 64
    n_symbols: int = 4096
    attenuations_db: tuple[float, ...] = (10.0, 15.0, 20.0)
    drive_start_dbm: float = -50.0
    drive_stop_dbm: float = -20.0
    drive_step_dbm: float = 0.5
    knee_target_dbm: float = -30.0
    evm_limit_pct: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "attenuations_db", tuple(float(a) for a in self.attenuations_db))
        _levels(self.order)
        if not 1 <= self.n_symbols <= 1_000_000:
            raise ValueError("n_symbols must be in 1..1000000")
        if not self.attenuations_db:
            raise ValueError("need at least one attenuation setting")
        if not (self.drive_step_dbm > 0 and self.drive_stop_dbm > self.drive_start_dbm):
            raise ValueError("drive sweep must increase with a positive step")
        if (self.drive_stop_dbm - self.drive_start_dbm) / self.drive_step_dbm > 10_000:
            raise ValueError("drive sweep has too many points")

    @property
    def drives_dbm(self) -> np.ndarray:
        k = int(math.floor((self.drive_stop_dbm - self.drive_start_dbm) / self.drive_step_dbm + 1e-9))
        return self.drive_start_dbm + self.drive_step_dbm * np.arange(k + 1)


@dataclass(frozen=True, eq=False)
class EvmCurve:
    atten_db: float
    p_out_dbm: np.ndarray
    evm_pct: np.ndarray

    def knee(self, limit_pct: float = 1.5) -> float | None:
        """Output power where EVM first exceeds ``limit_pct`` (linear interpolation)."""
        above = np.flatnonzero(self.evm_pct > limit_pct)
        if len(above) == 0:
            return None
        i = int(above[0])
        if i == 0:
            return float(self.p_out_dbm[0])
        x0, x1 = self.p_out_dbm[i - 1], self.p_out_dbm[i]
        y0, y1 = self.evm_pct[i - 1], self.evm_pct[i]
        return float(x0 + (limit_pct - y0) * (x1 - x0) / (y1 - y0))


def evm_vs_power_sweep(
    config: PlantConfig,
    attenuations_db: Sequence[float],
    drives_dbm: Sequence[float],
    order: int = 64,
    n_symbols: int = 4096,
    seed: int = 0,
) -> list[EvmCurve]:
    """One curve per DSA setting; each point is (mean output power, EVM) at one drive level."""
    batch = generate_qam(order, n_symbols, seed)
    ref = batch.symbols
    gains = sum(config.stage_gains_db)
    curves = []
    for att in attenuations_db:
        p_out, evm = [], []
        for drive in drives_dbm:
            p_in = drive + gains - config.alpha * att - config.link_atten_db
            y = amplify(ref, p_in, config.pa, config.compression)
            p_out.append(10.0 * math.log10(float(np.mean(np.abs(y) ** 2))))
            evm.append(compute_evm_rms(ref, y))
        curves.append(EvmCurve(float(att), np.array(p_out), np.array(evm)))
    return curves


def write_curves_csv(path: str | Path, curves: Iterable[EvmCurve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["atten_db", "p_out_dbm", "evm_pct"])
        for c in curves:
            for p, e in zip(c.p_out_dbm, c.evm_pct):
                w.writerow([f"{c.atten_db:.9g}", f"{p:.9g}", f"{e:.9g}"])
