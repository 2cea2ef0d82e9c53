"""Mamdani fuzzy inference for the fuzzy-integral power controller.

Two inputs (power error ``e`` in dB and its rate ``de`` in dB/s) are
fuzzified over seven triangular terms, combined through a 7x7 rule table
with min for AND and max for aggregation, and the clipped output set is
defuzzified by its exact centroid to give the attenuation increment ``du``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import kernel

LABELS = ("NB", "NM", "NS", "Z", "PS", "PM", "PB")
MIRROR = dict(zip(LABELS, reversed(LABELS)))

# rows: e term, columns: de term, cell: du term
RULE_BASE = (
    ("NB", "NB", "NB", "NB", "NM", "NS", "Z"),
    ("NB", "NB", "NB", "NM", "NS", "Z", "PS"),
    ("NB", "NB", "NM", "NS", "Z", "PS", "PM"),
    ("NB", "NM", "NS", "Z", "PS", "PM", "PB"),
    ("NM", "NS", "Z", "PS", "PM", "PB", "PB"),
    ("NS", "Z", "PS", "PM", "PB", "PB", "PB"),
    ("Z", "PS", "PM", "PB", "PB", "PB", "PB"),
)

# default universes: e in dB, de in dB/s, du in dB/s (integrated by the controller)
E_UNIVERSE = (-3.0, 3.0)
DE_UNIVERSE = (-600.0, 600.0)
DU_UNIVERSE = (-15.0, 15.0)


class FuzzyConfigError(ValueError):
    """Malformed term set or rule table."""


class InferenceError(RuntimeError):
    """No rule fired, so the output set is empty."""


@dataclass(frozen=True)
class Term:
    label: str
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.c)):
            raise FuzzyConfigError(f"term {self.label}: non-finite vertex")
        if not self.a <= self.b <= self.c:
            raise FuzzyConfigError(
                f"term {self.label}: need a <= b <= c, got ({self.a}, {self.b}, {self.c})"
            )


@dataclass(frozen=True)
class LinguisticTermSet:
    """Seven ordered triangular terms over a closed universe.

    ``NB`` is shouldered toward ``lo`` and ``PB`` toward ``hi``: their
    membership stays at 1 between the universe edge and the peak.
    """

    terms: tuple[Term, ...]
    lo: float
    hi: float
    units: str = ""
    _packed: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if len(terms) != len(LABELS):
            raise FuzzyConfigError(f"expected {len(LABELS)} terms, got {len(terms)}")
        if tuple(t.label for t in terms) != LABELS:
            raise FuzzyConfigError(f"terms must be ordered {','.join(LABELS)}")
        if not self.lo < self.hi:
            raise FuzzyConfigError(f"empty universe [{self.lo}, {self.hi}]")
        peaks = [t.b for t in terms]
        if any(p1 >= p2 for p1, p2 in zip(peaks, peaks[1:])):
            raise FuzzyConfigError("term peaks must be strictly increasing")
        if not (self.lo <= peaks[0] and peaks[-1] <= self.hi):
            raise FuzzyConfigError("extreme peaks must lie inside the universe")
        tol = 1e-9 * (self.hi - self.lo)
        for k in range(3):
            if abs(peaks[k] + peaks[-1 - k]) > tol:
                raise FuzzyConfigError(
                    f"peaks of {LABELS[k]} and {LABELS[-1 - k]} are not symmetric about 0"
                )
        if abs(peaks[3]) > tol:
            raise FuzzyConfigError("peak of Z must be 0")
        # coverage: neighbouring supports must overlap so no interior gap exists
        for left, right in zip(terms, terms[1:]):
            if right.a >= left.c:
                raise FuzzyConfigError(f"gap in coverage between {left.label} and {right.label}")
        object.__setattr__(
            self, "_packed", kernel.pack_terms([v for t in terms for v in (t.a, t.b, t.c)])
        )

    @classmethod
    def uniform(cls, lo: float, hi: float, units: str = "") -> "LinguisticTermSet":
        """Evenly spaced peaks from ``lo`` to ``hi``; neighbours cross at 0.5."""
        if not lo < hi:
            raise FuzzyConfigError(f"empty universe [{lo}, {hi}]")
        n = len(LABELS)
        half = (hi - lo) / (n - 1)
        if abs(lo + hi) <= 1e-12 * (hi - lo):
            peaks = [(k - n // 2) * half for k in range(n)]
        else:
            peaks = [lo + k * half for k in range(n)]
        terms = []
        for k, (label, p) in enumerate(zip(LABELS, peaks)):
            a = p if k == 0 else p - half
            c = p if k == n - 1 else p + half
            terms.append(Term(label, a, p, c))
        return cls(tuple(terms), lo, hi, units)

    @property
    def peaks(self) -> tuple[float, ...]:
        return tuple(t.b for t in self.terms)

    def index(self, label: str) -> int:
        return LABELS.index(label)


@dataclass(frozen=True)
class RuleTable:
    """7x7 mapping from (e term, de term) to an output term."""

    cells: tuple[tuple[str, ...], ...] = RULE_BASE
    _packed: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cells = tuple(tuple(row) for row in self.cells)
        object.__setattr__(self, "cells", cells)
        if len(cells) != 7 or any(len(row) != 7 for row in cells):
            raise FuzzyConfigError("rule table must be 7x7")
        for i, row in enumerate(cells):
            for j, lab in enumerate(row):
                if lab not in LABELS:
                    raise FuzzyConfigError(f"rule ({LABELS[i]}, {LABELS[j]}): unknown label {lab!r}")
        flat = [LABELS.index(lab) for row in cells for lab in row]
        object.__setattr__(self, "_packed", kernel.pack_rules(flat))

    def __getitem__(self, key: tuple[str, str]) -> str:
        e_lab, de_lab = key
        return self.cells[LABELS.index(e_lab)][LABELS.index(de_lab)]

    def is_antisymmetric(self) -> bool:
        return all(
            self.cells[6 - i][6 - j] == MIRROR[self.cells[i][j]]
            for i in range(7)
            for j in range(7)
        )


@dataclass(frozen=True)
class FuzzyOutputSet:
    """Aggregated output set as one clip level per output term."""

    levels: tuple[float, ...]
    terms: LinguisticTermSet

    @property
    def is_empty(self) -> bool:
        return not any(lv > 0.0 for lv in self.levels)

    def membership(self, x):
        """Envelope ``max_k min(level_k, mu_k(x))``; accepts arrays."""
        x = np.asarray(x, dtype=float)
        y = np.zeros_like(x)
        n = len(self.levels)
        for k, (lv, t) in enumerate(zip(self.levels, self.terms.terms)):
            if lv <= 0.0:
                continue
            mu = np.vectorize(kernel.membership, otypes=[float])(
                x, t.a, t.b, t.c, k == 0, k == n - 1
            )
            y = np.maximum(y, np.minimum(mu, lv))
        return y


def triangular_membership(
    x: float, term, left_shoulder: bool = False, right_shoulder: bool = False
) -> float:
    """Membership degree of ``x`` in a triangle ``(a, b, c)`` or a :class:`Term`."""
    if isinstance(term, Term):
        a, b, c = term.a, term.b, term.c
    else:
        a, b, c = term
        if not a <= b <= c:
            raise FuzzyConfigError(f"need a <= b <= c, got ({a}, {b}, {c})")
    return kernel.membership(float(x), float(a), float(b), float(c), left_shoulder, right_shoulder)


def fuzzify(value: float, term_set: LinguisticTermSet) -> np.ndarray:
    """Degrees of ``value`` in each term; out-of-universe inputs are clamped."""
    return np.asarray(kernel.fuzzify(float(value), term_set._packed, term_set.lo, term_set.hi))


def evaluate_rules(
    e_deg: Sequence[float],
    de_deg: Sequence[float],
    rules: RuleTable,
    out_terms: LinguisticTermSet,
) -> FuzzyOutputSet:
    """Fire every rule at ``min(e_deg[i], de_deg[j])`` and max-aggregate per output term."""
    for deg in (e_deg, de_deg):
        if len(deg) != 7 or any(not 0.0 <= d <= 1.0 for d in deg):
            raise ValueError("degree vectors need 7 entries in [0, 1]")
    levels = tuple(kernel.fire_rules([float(d) for d in e_deg], [float(d) for d in de_deg], rules._packed))
    out = FuzzyOutputSet(levels, out_terms)
    if out.is_empty:
        raise InferenceError("no rule fired; inputs have zero membership everywhere")
    return out


def defuzzify_centroid(out: FuzzyOutputSet) -> float:
    """Centroid of the clipped, max-aggregated output set, integrated exactly."""
    if out.is_empty:
        raise InferenceError("cannot defuzzify an empty output set")
    t = out.terms
    return kernel.centroid(list(out.levels), t._packed, t.lo, t.hi)


@dataclass(frozen=True)
class FuzzyEngine:
    e_set: LinguisticTermSet = field(
        default_factory=lambda: LinguisticTermSet.uniform(*E_UNIVERSE, units="dB")
    )
    de_set: LinguisticTermSet = field(
        default_factory=lambda: LinguisticTermSet.uniform(*DE_UNIVERSE, units="dB/s")
    )
    du_set: LinguisticTermSet = field(
        default_factory=lambda: LinguisticTermSet.uniform(*DU_UNIVERSE, units="dB/s")
    )
    rules: RuleTable = field(default_factory=RuleTable)

    def step(self, e: float, de: float) -> float:
        """Crisp output ``du`` for an input pair."""
        es, ds, us = self.e_set, self.de_set, self.du_set
        du = kernel.infer(
            float(e), float(de),
            es._packed, es.lo, es.hi,
            ds._packed, ds.lo, ds.hi,
            us._packed, us.lo, us.hi,
            self.rules._packed,
        )
        if math.isnan(du):
            raise InferenceError(f"no rule fired for e={e}, de={de}")
        return du

    __call__ = step


_DEFAULT_ENGINE: FuzzyEngine | None = None


def fuzzy_step(e: float, de: float, engine: FuzzyEngine | None = None) -> float:
    """``fuzzify -> evaluate_rules -> defuzzify_centroid`` for one input pair."""
    global _DEFAULT_ENGINE
    if engine is None:
        if _DEFAULT_ENGINE is None:
            _DEFAULT_ENGINE = FuzzyEngine()
        engine = _DEFAULT_ENGINE
    return engine.step(e, de)
