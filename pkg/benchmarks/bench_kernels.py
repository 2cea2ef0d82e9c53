"""Compiled versus pure-Python inference kernels.

Usage: python benchmarks/bench_kernels.py [--calls N] [--runs N]

Times ``infer`` directly on both modules, checks they agree, then times a
full default closed-loop scenario under each backend in a subprocess (the
backend is fixed at import time).
"""

from __future__ import annotations

import argparse
import itertools
import os
import subprocess
import sys
import timeit

import numpy as np

from mmwpower import _pykernel
from mmwpower.fuzzy import LABELS, FuzzyEngine

try:
    from mmwpower import _ckernel
except ImportError:
    _ckernel = None

SCENARIO_SNIPPET = (
    "import timeit; from mmwpower.sim import Scenario, run_scenario; sc = Scenario(); "
    "run_scenario(sc); print(min(timeit.repeat(lambda: run_scenario(sc), number=1, repeat={runs})))"
)


def _args(mod, eng: FuzzyEngine):
    sets = (eng.e_set, eng.de_set, eng.du_set)
    packed = []
    for s in sets:
        packed += [mod.pack_terms([v for t in s.terms for v in (t.a, t.b, t.c)]), s.lo, s.hi]
    flat = [LABELS.index(c) for row in eng.rules.cells for c in row]
    return packed, mod.pack_rules(flat)


def bench_infer(mod, calls: int, inputs) -> tuple[float, np.ndarray]:
    eng = FuzzyEngine()
    packed, rules = _args(mod, eng)
    out = np.array([mod.infer(e, de, *packed, rules) for e, de in inputs])
    it = itertools.cycle(inputs)

    def one():
        e, de = next(it)
        mod.infer(e, de, *packed, rules)

    t = min(timeit.repeat(one, number=calls, repeat=3)) / calls
    return t, out


def bench_scenario(pure: bool, runs: int) -> float:
    env = dict(os.environ, MMWPOWER_PURE_PYTHON="1" if pure else "0")
    res = subprocess.run(
        [sys.executable, "-c", SCENARIO_SNIPPET.format(runs=runs)],
        env=env, capture_output=True, text=True, check=True,
    )
    return float(res.stdout.strip())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--calls", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    inputs = [(float(e), float(de)) for e, de in zip(rng.uniform(-4, 4, 500), rng.uniform(-800, 800, 500))]

    t_py, out_py = bench_infer(_pykernel, args.calls, inputs)
    print(f"infer  python  {t_py * 1e6:9.2f} us/call")
    if _ckernel is None:
        print("compiled kernel not built; skipping comparison")
        return 0
    t_c, out_c = bench_infer(_ckernel, args.calls, inputs)
    print(f"infer  cython  {t_c * 1e6:9.2f} us/call   speedup {t_py / t_c:6.1f}x")
    print(f"max |cython - python| over {len(inputs)} inputs: {np.max(np.abs(out_c - out_py)):.3g}")

    s_py = bench_scenario(True, args.runs)
    s_c = bench_scenario(False, args.runs)
    print(f"scenario python {s_py * 1e3:8.1f} ms/run (801 samples, FI)")
    print(f"scenario cython {s_c * 1e3:8.1f} ms/run   speedup {s_py / s_c:6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
