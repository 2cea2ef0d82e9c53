"""``mmwpower`` command-line front end.

Exit codes: 0 success, 2 bad input (scenario, CSV, arguments),
3 simulation fault, 4 file-system error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import BACKEND, __version__
from .controllers import ControllerSpec
from .evm import evm_vs_power_sweep, write_curves_csv
from .scenario import ScenarioDoc, ScenarioError, load_scenario, serialize_scenario
from .sensing import CalibrationError, DetectorModel, calibrate, generate_sweep, read_sweep_csv, write_sweep_csv
from .sim import (
    SimulationError,
    compare_controllers,
    find_unstable_pid,
    reversed_disturbance,
    run_scenario,
    scenario_metrics,
)
from .svg import line_plot

EXIT_OK, EXIT_INPUT, EXIT_SIM, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _kv_block(pairs) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in pairs)


class Run:
    """Artifact writer for one invocation; records file hashes for the manifest."""

    def __init__(self, args, doc: ScenarioDoc | None):
        self.out = Path(args.out)
        self.quiet = args.quiet
        self.plots = not args.no_plots
        self.doc = doc
        self.files: dict[str, str] = {}
        self.out.mkdir(parents=True, exist_ok=True)

    def say(self, text: str) -> None:
        if not self.quiet:
            print(text)

    def write(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        (self.out / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def plot(self, name: str, svg: str) -> None:
        if self.plots:
            self.write(name, svg)

    def finish(self, command: str) -> None:
        manifest = {"tool": "mmwpower", "version": __version__, "command": command, "backend": BACKEND}
        if self.doc is not None:
            text = serialize_scenario(self.doc)
            self.write("scenario.ini", text)
            manifest["scenario_sha256"] = hashlib.sha256(text.encode("utf-8")).hexdigest()
        manifest["files"] = dict(sorted(self.files.items()))
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load(args) -> ScenarioDoc:
    doc = load_scenario(args.scenario) if args.scenario else ScenarioDoc()
    sc = doc.scenario
    try:
        if args.seed is not None:
            sc = replace(sc, seed=args.seed)
        if args.ts is not None:
            sc = replace(sc, ts_s=args.ts)
    except ValueError as exc:
        raise CliError(f"invalid override: {exc}", EXIT_INPUT) from None
    return replace(doc, scenario=sc)


def _specs(text: str, ki: float) -> list[ControllerSpec]:
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    try:
        return [ControllerSpec(k, ki=ki) for k in kinds]
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


def _trace_plots(run: Run, entries, prefix: str, p_ref: float) -> None:
    power = [(label, tr.t, tr.p_rf) for label, tr in entries]
    atten = [(label, tr.t, tr.u_applied) for label, tr in entries]
    run.plot(f"{prefix}power.svg", line_plot(
        power, "RF output power", "time (s)", "P_RF (dBm)", hlines=[("P_ref", p_ref)]
    ))
    run.plot(f"{prefix}attenuation.svg", line_plot(atten, "DSA setting", "time (s)", "attenuation (dB)"))


def cmd_run(args) -> int:
    doc = _load(args)
    run = Run(args, doc)
    sc = doc.scenario
    if args.compare:
        return _compare(run, doc, _specs(args.compare, sc.controller.ki), reverse=False, command="run")
    trace = run_scenario(sc)
    run.write("trace.csv", trace.to_csv())
    if trace.error:
        run.finish("run")
        raise CliError(f"simulation aborted at {trace.error}", EXIT_SIM)
    m = scenario_metrics(sc, trace, doc.band_pct)
    run.write("metrics.txt", _kv_block([("controller", sc.controller.label), *m.as_dict().items()]))
    _trace_plots(run, [(sc.controller.label, trace)], "", sc.p_ref_dbm)
    run.finish("run")
    run.say(_kv_block([("controller", sc.controller.label), *m.as_dict().items()]).rstrip())
    return EXIT_OK


def _compare(run: Run, doc: ScenarioDoc, specs, reverse: bool, command: str) -> int:
    cases = [("", doc.scenario)]
    if reverse:
        cases.append(("reverse_", reversed_disturbance(doc.scenario)))
    rows = []
    for tag, sc in cases:
        entries = compare_controllers(sc, specs, doc.band_pct)
        for i, en in enumerate(entries):
            run.write(f"{tag}trace_{i}_{en.spec.kind}.csv", en.trace.to_csv())
            rows.append((tag.rstrip("_") or "forward", en))
        _trace_plots(run, [(en.spec.label, en.trace) for en in entries], f"{tag}compare_", sc.p_ref_dbm)
    lines = []
    for direction, en in rows:
        key = f"{direction}.{en.spec.kind}"
        lines += [(f"{key}.label", en.spec.label)]
        lines += [(f"{key}.{k}", v) for k, v in en.metrics.as_dict().items()]
        lines += [(f"{key}.settling_ratio", en.settling_ratio)]
    run.write("metrics.txt", _kv_block(lines))
    run.finish(command)
    run.say(f"{'direction':<9} {'controller':<28} {'settle_s':>9} {'overshoot':>9} {'e_ss':>9} {'ratio':>7}")
    for direction, en in rows:
        m = en.metrics
        ts = "n/s" if m.settling_time_s is None else f"{m.settling_time_s:.3f}"
        run.say(
            f"{direction:<9} {en.spec.label:<28} {ts:>9} {m.overshoot_db:>9.3f} "
            f"{m.e_ss_db:>9.3f} {en.settling_ratio:>7.3f}"
        )
    return EXIT_OK


def cmd_compare(args) -> int:
    doc = _load(args)
    run = Run(args, doc)
    return _compare(run, doc, _specs(args.controllers, doc.scenario.controller.ki), args.both, "compare")


def cmd_sweep_evm(args) -> int:
    doc = _load(args)
    if args.no_compression:
        sc = doc.scenario
        doc = replace(doc, scenario=replace(sc, plant=replace(sc.plant, compression=False)))
    run = Run(args, doc)
    cfg = doc.evm
    curves = evm_vs_power_sweep(
        doc.scenario.plant, cfg.attenuations_db, cfg.drives_dbm, cfg.order, cfg.n_symbols, doc.scenario.seed
    )
    buf = Path(run.out) / "evm_curves.csv"
    write_curves_csv(buf, curves)
    run.files["evm_curves.csv"] = hashlib.sha256(buf.read_bytes()).hexdigest()
    knees = [c.knee(cfg.evm_limit_pct) for c in curves]
    found = [k for k in knees if k is not None]
    lines = [(f"knee_dbm.atten_{c.atten_db:g}", k) for c, k in zip(curves, knees)]
    lines += [("evm_limit_pct", cfg.evm_limit_pct), ("knee_target_dbm", cfg.knee_target_dbm)]
    run.write("metrics.txt", _kv_block(lines))
    series = [(f"DSA {c.atten_db:g} dB", c.p_out_dbm, c.evm_pct) for c in curves]
    vlines = [(f"knee {found[0]:.1f} dBm", found[0])] if found else []
    run.plot("evm.svg", line_plot(
        series, f"{cfg.order}-QAM EVM vs output power", "mean output power (dBm)", "EVM (%)",
        vlines=vlines, hlines=[(f"{cfg.evm_limit_pct:g}%", cfg.evm_limit_pct)],
    ))
    run.finish("sweep-evm")
    run.say(_kv_block(lines).rstrip())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.synthetic == (args.csv is not None):
        raise CliError("give either a sweep CSV or --synthetic", EXIT_INPUT)
    run = Run(args, None)
    if args.synthetic:
        det = DetectorModel()
        powers = np.linspace(det.range_min_dbm, det.range_max_dbm, args.points)
        rng = np.random.default_rng(0 if args.seed is None else args.seed)
        sweep = generate_sweep(det, powers, args.noise_mv * 1e-3, rng)
        write_sweep_csv(run.out / "sweep.csv", sweep)
        run.files["sweep.csv"] = hashlib.sha256((run.out / "sweep.csv").read_bytes()).hexdigest()
    else:
        sweep = read_sweep_csv(args.csv)
    cal = calibrate(sweep)
    lines = [("slope_v_per_db", cal.slope_v_per_db), ("intercept_dbm", cal.intercept_dbm), ("r2", cal.r2)]
    run.write("calibration.txt", _kv_block(lines))
    p = [s[0] for s in sweep]
    fit = [cal.slope_v_per_db * (x - cal.intercept_dbm) for x in (min(p), max(p))]
    run.plot("calibration.svg", line_plot(
        [(f"fit R2={cal.r2:.4f}", [min(p), max(p)], fit)],
        "Detector calibration", "input power (dBm)", "output voltage (V)",
        points=[("measured", p, [s[1] for s in sweep])],
    ))
    run.finish("calibrate")
    run.say(f"S = {cal.slope_v_per_db:.6g} V/dB\nP0 = {cal.intercept_dbm:.6g} dBm\nR2 = {cal.r2:.6f}")
    return EXIT_OK


def cmd_find_unstable_pid(args) -> int:
    doc = _load(args)
    run = Run(args, doc)
    ki = doc.scenario.controller.ki if args.ki is None else args.ki
    res = find_unstable_pid(doc.scenario, ki=ki, jobs=args.jobs)
    rows = ["kp,kd,limit_cycle\n"] + [f"{kp:.9g},{kd:.9g},{int(f)}\n" for (kp, kd), f in res.flags.items()]
    run.write("pid_search.csv", "".join(rows))
    lines = [("ki", ki), ("unstable_pairs", sum(res.flags.values())), ("transitions", len(res.transitions))]
    lines += [(f"transition.{i}", f"{a[0]:g},{a[1]:g} -> {b[0]:g},{b[1]:g}") for i, (a, b) in enumerate(res.transitions)]
    run.write("metrics.txt", _kv_block(lines))
    if res.transitions:
        (kp0, kd0), (kp1, kd1) = res.transitions[0]
        traces = []
        for kp, kd in ((kp0, kd0), (kp1, kd1)):
            spec = ControllerSpec("pid", kp, ki, kd)
            tr = run_scenario(replace(doc.scenario, controller=spec))
            traces.append((spec.label, tr))
        _trace_plots(run, traces, "pid_", doc.scenario.p_ref_dbm)
    run.finish("find-unstable-pid")
    run.say(_kv_block(lines).rstrip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--ts", type=float, default=None, help="override the sampling period (s)")
    common.add_argument("--no-plots", action="store_true", help="skip SVG output")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    parser = argparse.ArgumentParser(prog="mmwpower", description="mmWave transmit power control simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernel)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate one scenario")
    p.add_argument("scenario", nargs="?", help="scenario file (default: built-in)")
    p.add_argument("--compare", metavar="KINDS", help="comma list of controller kinds, e.g. i,fi")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common], help="compare controllers on one scenario")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--controllers", default="i,fi", help="comma list of kinds (default: i,fi)")
    p.add_argument("--both", action="store_true", help="also run the reversed disturbance")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-evm", parents=[common], help="EVM versus output power")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--no-compression", action="store_true", help="linear PA")
    p.set_defaults(func=cmd_sweep_evm)

    p = sub.add_parser("calibrate", parents=[common], help="fit detector slope and intercept")
    p.add_argument("csv", nargs="?", help="sweep CSV with header p_in_dbm,v_out_volts")
    p.add_argument("--synthetic", action="store_true", help="generate the sweep instead")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--noise-mv", type=float, default=2.0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("find-unstable-pid", parents=[common], help="grid search for PID limit cycles")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--ki", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_find_unstable_pid)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.ts is not None and not (math.isfinite(args.ts) and args.ts > 0):
        print("mmwpower: error: --ts must be a positive number", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "points", 3) < 3:
        print("mmwpower: error: --points must be >= 3", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ScenarioError, CalibrationError) as exc:
        print(f"mmwpower: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CliError as exc:
        print(f"mmwpower: error: {exc}", file=sys.stderr)
        return exc.code
    except SimulationError as exc:
        print(f"mmwpower: simulation fault: {exc}", file=sys.stderr)
        return EXIT_SIM
    except OSError as exc:
        print(f"mmwpower: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
