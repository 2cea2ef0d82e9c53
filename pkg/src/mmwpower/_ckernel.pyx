# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inference kernels; same contract as ``_pykernel``."""

from libc.math cimport NAN

import numpy as np

BACKEND = "cython"

cdef enum:
    MAXT = 16
    MAXX = 2048


cdef inline double _mu(double x, double a, double b, double c, bint left, bint right) nogil:
    if x < b:
        if left:
            return 1.0
        if x <= a:
            return 0.0
        return (x - a) / (b - a)
    if x > b:
        if right:
            return 1.0
        if x >= c:
            return 0.0
        return (c - x) / (c - b)
    return 1.0


def membership(double x, double a, double b, double c, bint left_shoulder=False,
               bint right_shoulder=False):
    return _mu(x, a, b, c, left_shoulder, right_shoulder)


cdef void _fuzzify(double x, const double[:] terms, double lo, double hi,
                   double* out, int n) nogil:
    cdef int j
    if x < lo:
        x = lo
    elif x > hi:
        x = hi
    for j in range(n):
        out[j] = _mu(x, terms[3 * j], terms[3 * j + 1], terms[3 * j + 2],
                     j == 0, j == n - 1)


def fuzzify(double x, const double[:] terms, double lo, double hi):
    cdef int n = terms.shape[0] // 3
    cdef double buf[MAXT]
    if n > MAXT:
        raise ValueError("too many terms")
    _fuzzify(x, terms, lo, hi, buf, n)
    return [buf[j] for j in range(n)]


cdef void _fire(const double* e_deg, const double* de_deg, const long[:] rules,
                double* levels, int n) nogil:
    cdef int i, j
    cdef long k
    cdef double ei, w
    for j in range(n):
        levels[j] = 0.0
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


def fire_rules(e_deg, de_deg, const long[:] rules):
    cdef int n = len(e_deg)
    cdef double ebuf[MAXT]
    cdef double dbuf[MAXT]
    cdef double lv[MAXT]
    cdef int j
    if n > MAXT:
        raise ValueError("too many terms")
    for j in range(n):
        ebuf[j] = e_deg[j]
        dbuf[j] = de_deg[j]
    _fire(ebuf, dbuf, rules, lv, n)
    return [lv[j] for j in range(n)]


cdef int _lines(double a, double b, double c, double level, bint left, bint right,
                double* m, double* q) nogil:
    cdef int k = 1
    m[0] = 0.0
    q[0] = level
    if b > a and not left:
        m[k] = 1.0 / (b - a)
        q[k] = -a / (b - a)
        k += 1
    if c > b and not right:
        m[k] = -1.0 / (c - b)
        q[k] = c / (c - b)
        k += 1
    return k


cdef double _envelope(double x, int na, const double* A, const double* B, const double* C,
                      const double* L, const bint* LS, const bint* RS) nogil:
    cdef double y = 0.0, v
    cdef int p
    for p in range(na):
        v = _mu(x, A[p], B[p], C[p], LS[p], RS[p])
        if v > L[p]:
            v = L[p]
        if v > y:
            y = v
    return y


cdef void _sort(double* xs, int n) nogil:
    # insertion sort; n is small
    cdef int i, j
    cdef double t
    for i in range(1, n):
        t = xs[i]
        j = i - 1
        while j >= 0 and xs[j] > t:
            xs[j + 1] = xs[j]
            j -= 1
        xs[j + 1] = t


cdef double _centroid(const double* levels, const double[:] terms, double lo, double hi,
                      int n) nogil:
    cdef double A[MAXT]
    cdef double B[MAXT]
    cdef double C[MAXT]
    cdef double L[MAXT]
    cdef bint LS[MAXT]
    cdef bint RS[MAXT]
    cdef double xs[MAXX]
    cdef double m1[3]
    cdef double q1[3]
    cdef double m2[3]
    cdef double q2[3]
    cdef int na = 0, nx = 0, j, p, r, s, n1, n2, npts
    cdef double a, b, c, lv, x, x0, x1, y0, y1, h, area = 0.0, moment = 0.0

    for j in range(n):
        lv = levels[j]
        if lv > 0.0:
            A[na] = terms[3 * j]
            B[na] = terms[3 * j + 1]
            C[na] = terms[3 * j + 2]
            L[na] = lv
            LS[na] = j == 0
            RS[na] = j == n - 1
            na += 1
    if na == 0:
        return NAN

    xs[nx] = lo
    xs[nx + 1] = hi
    nx += 2
    for p in range(na):
        a = A[p]
        b = B[p]
        c = C[p]
        xs[nx] = a
        xs[nx + 1] = b
        xs[nx + 2] = c
        nx += 3
        if b > a and not LS[p]:
            xs[nx] = a + L[p] * (b - a)
            nx += 1
        if c > b and not RS[p]:
            xs[nx] = c - L[p] * (c - b)
            nx += 1
    for p in range(na):
        n1 = _lines(A[p], B[p], C[p], L[p], LS[p], RS[p], m1, q1)
        for r in range(p + 1, na):
            n2 = _lines(A[r], B[r], C[r], L[r], LS[r], RS[r], m2, q2)
            for s in range(n1):
                for j in range(n2):
                    if m1[s] != m2[j]:
                        xs[nx] = (q2[j] - q1[s]) / (m1[s] - m2[j])
                        nx += 1

    npts = 0
    for j in range(nx):
        x = xs[j]
        if lo <= x <= hi:
            xs[npts] = x
            npts += 1
    _sort(xs, npts)

    x0 = xs[0]
    y0 = _envelope(x0, na, A, B, C, L, LS, RS)
    for j in range(1, npts):
        x1 = xs[j]
        if x1 == x0:
            continue
        y1 = _envelope(x1, na, A, B, C, L, LS, RS)
        h = x1 - x0
        area += 0.5 * h * (y0 + y1)
        moment += h * (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1)) / 6.0
        x0 = x1
        y0 = y1
    if area <= 0.0:
        return NAN
    return moment / area


def centroid(levels, const double[:] terms, double lo, double hi):
    cdef int n = len(levels)
    cdef double lv[MAXT]
    cdef int j
    if n > MAXT:
        raise ValueError("too many terms")
    for j in range(n):
        lv[j] = levels[j]
    return _centroid(lv, terms, lo, hi, n)


def infer(double e, double de,
          const double[:] e_terms, double e_lo, double e_hi,
          const double[:] de_terms, double de_lo, double de_hi,
          const double[:] du_terms, double du_lo, double du_hi,
          const long[:] rules):
    cdef int n = e_terms.shape[0] // 3
    cdef double ed[MAXT]
    cdef double dd[MAXT]
    cdef double lv[MAXT]
    cdef double du
    if n > MAXT:
        raise ValueError("too many terms")
    with nogil:
        _fuzzify(e, e_terms, e_lo, e_hi, ed, n)
        _fuzzify(de, de_terms, de_lo, de_hi, dd, n)
        _fire(ed, dd, rules, lv, n)
        du = _centroid(lv, du_terms, du_lo, du_hi, n)
    return du


def pack_terms(seq):
    return np.ascontiguousarray(seq, dtype=np.float64)


def pack_rules(seq):
    return np.ascontiguousarray(seq, dtype=np.int_)
