"""Pure-Python inference kernels.

Reference implementation of the hot paths; ``_ckernel`` mirrors these
functions one to one. Term sets are passed as flat sequences of
``(a, b, c)`` triples; the first term is left-shouldered and the last is
right-shouldered. Rule tables are flat, row-major sequences of output term
indices.
"""

from __future__ import annotations

import math

BACKEND = "python"


def membership(x, a, b, c, left_shoulder=False, right_shoulder=False):
    if x < b:
        if left_shoulder:
            return 1.0
        if x <= a:
            return 0.0
        return (x - a) / (b - a)
    if x > b:
        if right_shoulder:
            return 1.0
        if x >= c:
            return 0.0
        return (c - x) / (c - b)
    return 1.0


def fuzzify(x, terms, lo, hi):
    if x < lo:
        x = lo
    elif x > hi:
        x = hi
    n = len(terms) // 3
    out = [0.0] * n
    for j in range(n):
        out[j] = membership(
            x, terms[3 * j], terms[3 * j + 1], terms[3 * j + 2], j == 0, j == n - 1
        )
    return out


def fire_rules(e_deg, de_deg, rules):
    n = len(e_deg)
    levels = [0.0] * n
    for i in range(n):
        ei = e_deg[i]
        if ei <= 0.0:
            continue
        for j in range(n):
            w = de_deg[j]
            if w <= 0.0:
                continue
            if ei < w:
                w = ei
            k = rules[i * n + j]
            if w > levels[k]:
                levels[k] = w
    return levels


def _lines(a, b, c, level, left, right):
    # (slope, intercept) of every linear piece of a clipped term
    out = [(0.0, level)]
    if b > a and not left:
        out.append((1.0 / (b - a), -a / (b - a)))
    if c > b and not right:
        out.append((-1.0 / (c - b), c / (c - b)))
    return out


def _envelope(x, act):
    y = 0.0
    for a, b, c, level, left, right in act:
        m = membership(x, a, b, c, left, right)
        if m > level:
            m = level
        if m > y:
            y = m
    return y


def centroid(levels, terms, lo, hi):
    """Exact centroid of the max-aggregated clipped output set.

    Returns ``nan`` when no term is active.
    """
    n = len(levels)
    act = []
    for j in range(n):
        lv = levels[j]
        if lv > 0.0:
            act.append(
                (terms[3 * j], terms[3 * j + 1], terms[3 * j + 2], lv, j == 0, j == n - 1)
            )
    if not act:
        return math.nan

    xs = [lo, hi]
    for a, b, c, lv, left, right in act:
        xs.append(a)
        xs.append(b)
        xs.append(c)
        if b > a and not left:
            xs.append(a + lv * (b - a))
        if c > b and not right:
            xs.append(c - lv * (c - b))
    for p in range(len(act)):
        lp = _lines(*act[p])
        for q in range(p + 1, len(act)):
            for m1, q1 in lp:
                for m2, q2 in _lines(*act[q]):
                    if m1 != m2:
                        xs.append((q2 - q1) / (m1 - m2))

    pts = sorted({x for x in xs if lo <= x <= hi})
    area = 0.0
    moment = 0.0
    x0 = pts[0]
    y0 = _envelope(x0, act)
    for x1 in pts[1:]:
        y1 = _envelope(x1, act)
        h = x1 - x0
        area += 0.5 * h * (y0 + y1)
        moment += h * (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1)) / 6.0
        x0 = x1
        y0 = y1
    if area <= 0.0:
        return math.nan
    return moment / area


def infer(e, de, e_terms, e_lo, e_hi, de_terms, de_lo, de_hi, du_terms, du_lo, du_hi, rules):
    levels = fire_rules(
        fuzzify(e, e_terms, e_lo, e_hi), fuzzify(de, de_terms, de_lo, de_hi), rules
    )
    return centroid(levels, du_terms, du_lo, du_hi)


def pack_terms(seq):
    return tuple(float(v) for v in seq)


def pack_rules(seq):
    return tuple(int(v) for v in seq)
