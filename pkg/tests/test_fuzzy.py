import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import grid_centroid
from mmwpower.fuzzy import (
    LABELS,
    RULE_BASE,
    FuzzyConfigError,
    FuzzyEngine,
    FuzzyOutputSet,
    InferenceError,
    LinguisticTermSet,
    RuleTable,
    Term,
    defuzzify_centroid,
    evaluate_rules,
    fuzzify,
    fuzzy_step,
    triangular_membership,
)

# transcribed cell by cell: rows are e terms, columns are de terms
TABLE = """
NB: NB NB NB NB NM NS Z
NM: NB NB NB NM NS Z  PS
NS: NB NB NM NS Z  PS PM
Z:  NB NM NS Z  PS PM PB
PS: NM NS Z  PS PM PB PB
PM: NS Z  PS PM PB PB PB
PB: Z  PS PM PB PB PB PB
"""


def _table():
    out = {}
    for line in TABLE.strip().splitlines():
        row, cells = line.split(":")
        for col, cell in zip(LABELS, cells.split()):
            out[(row.strip(), col)] = cell
    return out


ENGINE = FuzzyEngine()
SPEC_ENGINE = FuzzyEngine(
    LinguisticTermSet.uniform(-10, 10, "dB"),
    LinguisticTermSet.uniform(-50, 50, "dB/s"),
    LinguisticTermSet.uniform(-5, 5, "dB/s"),
)


def onehot(label, level=1.0):
    v = np.zeros(7)
    v[LABELS.index(label)] = level
    return v


class TestRuleTable:
    @pytest.mark.parametrize("cell", sorted(_table().items()))
    def test_cell_matches_transcription(self, cell):
        (row, col), expected = cell
        assert RuleTable()[(row, col)] == expected

    def test_all_49_cells(self):
        assert len(_table()) == 49
        assert all(RuleTable()[k] == v for k, v in _table().items())

    def test_antisymmetric(self):
        assert RuleTable().is_antisymmetric()

    def test_named_corners(self):
        rt = RuleTable()
        assert rt[("NB", "PB")] == "Z"
        assert rt[("Z", "Z")] == "Z"

    def test_rejects_bad_shape_and_labels(self):
        with pytest.raises(FuzzyConfigError):
            RuleTable(RULE_BASE[:6])
        bad = [list(r) for r in RULE_BASE]
        bad[0][0] = "XX"
        with pytest.raises(FuzzyConfigError):
            RuleTable(bad)


class TestTermSet:
    def test_uniform_peaks_and_overlap(self):
        ts = LinguisticTermSet.uniform(-10, 10)
        assert ts.peaks[3] == 0.0
        assert ts.peaks[0] == -10.0 and ts.peaks[-1] == 10.0
        assert all(ts.peaks[k] == -ts.peaks[6 - k] for k in range(7))

    def test_rejects_order_symmetry_gap(self):
        good = LinguisticTermSet.uniform(-3, 3).terms
        with pytest.raises(FuzzyConfigError):
            LinguisticTermSet(good[::-1], -3, 3)
        with pytest.raises(FuzzyConfigError):
            LinguisticTermSet(good[:6], -3, 3)
        shifted = list(good)
        shifted[4] = Term("PS", 0.0, 1.2, 2.0)
        with pytest.raises(FuzzyConfigError):
            LinguisticTermSet(tuple(shifted), -3, 3)
        gappy = [Term(t.label, t.b - 0.4, t.b, t.b + 0.4) for t in good]
        with pytest.raises(FuzzyConfigError):
            LinguisticTermSet(tuple(gappy), -3, 3)

    def test_term_validation(self):
        with pytest.raises(FuzzyConfigError):
            Term("Z", 1.0, 0.0, 2.0)
        with pytest.raises(FuzzyConfigError):
            Term("Z", 0.0, math.nan, 2.0)


class TestMembership:
    def test_examples(self):
        assert triangular_membership(1.0, (0.0, 1.0, 3.0)) == 1.0
        assert triangular_membership(0.0, (0.0, 1.0, 3.0)) == 0.0
        assert triangular_membership(0.5, (0.0, 1.0, 3.0)) == 0.5

    def test_shoulders(self):
        assert triangular_membership(-20.0, (-10, -10, -5), left_shoulder=True) == 1.0
        assert triangular_membership(20.0, (5, 10, 10), right_shoulder=True) == 1.0

    def test_malformed(self):
        with pytest.raises(FuzzyConfigError):
            triangular_membership(0.0, (1.0, 0.0, 2.0))

    @given(st.floats(-50, 50), st.floats(-5, 0), st.floats(0, 5), st.floats(0, 5))
    def test_range(self, x, a, db, dc):
        mu = triangular_membership(x, (a, a + db, a + db + dc))
        assert 0.0 <= mu <= 1.0


class TestFuzzify:
    def test_zero_is_z(self):
        d = fuzzify(0.0, ENGINE.e_set)
        assert d[3] == 1.0 and d.sum() == 1.0

    def test_universe_max_is_pb(self):
        assert fuzzify(ENGINE.e_set.hi, ENGINE.e_set)[6] == 1.0
        assert fuzzify(1e6, ENGINE.e_set)[6] == 1.0

    def test_midpoint_between_ps_pm(self):
        ts = ENGINE.e_set
        mid = 0.5 * (ts.peaks[4] + ts.peaks[5])
        d = fuzzify(mid, ts)
        assert d[4] == pytest.approx(0.5, abs=1e-12)
        assert d[5] == pytest.approx(0.5, abs=1e-12)

    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_coverage_and_partition(self, x):
        d = fuzzify(x, SPEC_ENGINE.e_set)
        assert d.max() > 0
        assert d.sum() == pytest.approx(1.0, abs=1e-12)


class TestRules:
    def test_nb_pb_fires_z_only(self):
        out = evaluate_rules(onehot("NB"), onehot("PB"), RuleTable(), ENGINE.du_set)
        assert out.levels == (0, 0, 0, 1.0, 0, 0, 0)

    def test_two_rules(self):
        e = onehot("NS", 0.4) + onehot("Z", 0.6)
        out = evaluate_rules(e, onehot("Z"), RuleTable(), ENGINE.du_set)
        assert out.levels[LABELS.index("NS")] == pytest.approx(0.4)
        assert out.levels[LABELS.index("Z")] == pytest.approx(0.6)
        assert sum(out.levels) == pytest.approx(1.0)

    def test_empty_is_inference_error(self):
        with pytest.raises(InferenceError):
            evaluate_rules(np.zeros(7), np.zeros(7), RuleTable(), ENGINE.du_set)

    def test_bad_degrees(self):
        with pytest.raises(ValueError):
            evaluate_rules(np.full(7, 1.5), onehot("Z"), RuleTable(), ENGINE.du_set)


class TestCentroid:
    du = ENGINE.du_set

    def out(self, **levels):
        return FuzzyOutputSet(tuple(levels.get(lab, 0.0) for lab in LABELS), self.du)

    @pytest.mark.parametrize("level", [0.1, 0.5, 1.0])
    def test_z_alone_is_zero(self, level):
        assert defuzzify_centroid(self.out(Z=level)) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_pair(self):
        assert defuzzify_centroid(self.out(PS=0.7, NS=0.7)) == pytest.approx(0.0, abs=1e-12)

    def test_ps_alone_is_peak(self):
        c = defuzzify_centroid(self.out(PS=1.0))
        assert c == pytest.approx(self.du.peaks[4], abs=1e-12)
        assert c == pytest.approx(grid_centroid([0, 0, 0, 0, 1, 0, 0], self.du), abs=1e-6)

    def test_shoulder_alone(self):
        # right half-triangle from hi-half to hi: centroid at hi - half/3
        half = (self.du.hi - self.du.lo) / 6
        assert defuzzify_centroid(self.out(PB=1.0)) == pytest.approx(self.du.hi - half / 3, abs=1e-12)

    def test_empty(self):
        with pytest.raises(InferenceError):
            defuzzify_centroid(self.out())

    def test_grid_oracle_1000_patterns(self, rng):
        span = self.du.hi - self.du.lo
        worst = 0.0
        for _ in range(1000):
            lv = rng.uniform(0, 1, 7) * (rng.uniform(size=7) < 0.6)
            if not lv.any():
                lv[rng.integers(7)] = rng.uniform(0.05, 1)
            c = defuzzify_centroid(FuzzyOutputSet(tuple(lv), self.du))
            worst = max(worst, abs(c - grid_centroid(lv, self.du)) / span)
        assert worst < 1e-6

    @given(st.lists(st.floats(0, 1), min_size=7, max_size=7).filter(lambda v: max(v) > 1e-3))
    def test_within_universe(self, lv):
        c = defuzzify_centroid(FuzzyOutputSet(tuple(lv), self.du))
        assert self.du.lo <= c <= self.du.hi


def _lipschitz(engine, axis):
    """Bound on |d du / d input| from term slopes.

    Levels move at most 1/half per unit input; a level change moves the
    area by at most ``span`` and the moment by ``span*max|x|``; the smallest
    reachable area is a shouldered term clipped at 0.5 (some rule always
    fires at >= 0.5 because neighbouring degrees sum to 1).
    """
    du = engine.du_set
    span = du.hi - du.lo
    h_u = span / 6
    a_min = 0.375 * h_u
    xmax = max(abs(du.lo), abs(du.hi))
    ts = engine.e_set if axis == 0 else engine.de_set
    h_in = (ts.hi - ts.lo) / 6
    return 2 * span * xmax / (a_min * h_in)


class TestFuzzyStep:
    def test_origin(self):
        assert fuzzy_step(0.0, 0.0) == 0.0

    def test_corner_is_pb_shoulder_centroid(self):
        du = ENGINE.du_set
        half = (du.hi - du.lo) / 6
        assert fuzzy_step(ENGINE.e_set.hi, ENGINE.de_set.hi) == pytest.approx(du.hi - half / 3, abs=1e-12)
        assert fuzzy_step(ENGINE.e_set.lo, ENGINE.de_set.lo) == pytest.approx(du.lo + half / 3, abs=1e-12)

    @pytest.mark.parametrize("engine", [ENGINE, SPEC_ENGINE], ids=["default", "wide"])
    def test_oddness_21x21(self, engine):
        E = np.linspace(engine.e_set.lo, engine.e_set.hi, 21)
        D = np.linspace(engine.de_set.lo, engine.de_set.hi, 21)
        for e in E:
            for d in D:
                assert abs(engine.step(e, d) + engine.step(-e, -d)) < 1e-9

    @given(st.floats(-20, 20), st.floats(-2000, 2000))
    def test_odd_and_bounded(self, e, d):
        du = ENGINE.du_set
        half = (du.hi - du.lo) / 6
        v = ENGINE.step(e, d)
        assert abs(v + ENGINE.step(-e, -d)) < 1e-9
        assert du.lo + half / 3 - 1e-9 <= v <= du.hi - half / 3 + 1e-9

    def test_continuity(self, rng):
        eps = 1e-6
        for axis in (0, 1):
            L = _lipschitz(ENGINE, axis)
            for _ in range(2000):
                e = rng.uniform(ENGINE.e_set.lo, ENGINE.e_set.hi)
                d = rng.uniform(ENGINE.de_set.lo, ENGINE.de_set.hi)
                e2, d2 = (e + eps, d) if axis == 0 else (e, d + eps)
                assert abs(ENGINE.step(e2, d2) - ENGINE.step(e, d)) <= L * eps + 1e-12

    def test_monotone_along_table_axes(self):
        # along the Z row/column a single rule pair is active at a time
        E = np.linspace(ENGINE.e_set.lo, ENGINE.e_set.hi, 201)
        assert np.all(np.diff([ENGINE.step(e, 0.0) for e in E]) >= -1e-12)
        D = np.linspace(ENGINE.de_set.lo, ENGINE.de_set.hi, 201)
        assert np.all(np.diff([ENGINE.step(0.0, d) for d in D]) >= -1e-12)

    def test_max_min_dip_counterexample(self):
        # Several neighbouring cells share the PB consequent. Under max
        # aggregation its clip level follows max(mu_i, mu_j), which sags to 0.5
        # between peaks while the lower consequents keep rising, so the output
        # dips. This is a property of max-min Mamdani with this table.
        es, ds = ENGINE.e_set, ENGINE.de_set
        d = ds.peaks[4] + 0.8 * (ds.peaks[5] - ds.peaks[4])
        at_ps = ENGINE.step(es.peaks[4], d)
        midway = ENGINE.step(0.5 * (es.peaks[4] + es.peaks[5]), d)
        assert midway < at_ps - 0.1

    def test_positive_error_positive_output(self):
        for e in np.linspace(0.01, 3, 20):
            assert ENGINE.step(e, 0.0) > 0
