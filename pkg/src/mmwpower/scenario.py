"""Scenario files: flat, sectioned ``key = value`` text.

Sections are ``[run]``, ``[controller]``, ``[plant]``, ``[detector]``,
``[fuzzy]``, ``[disturbances]`` and ``[evm]``; every section and key is
optional and unknown ones are rejected with their line number. Lines
starting with ``#`` or ``;`` are comments. Each ``[disturbances]`` entry is
``<name> = link_step <time_s> <delta_db>`` or
``<name> = temp_ramp <time_s> <rate_db_per_s> <duration_s>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .controllers import KINDS, ActuatorModel, ControllerSpec
from .evm import EvmSweepConfig
from .fuzzy import LABELS, RULE_BASE, FuzzyEngine, LinguisticTermSet, RuleTable, Term
from .plant import LINK_STEP, TEMP_RAMP, Disturbance, DisturbanceSchedule, PaParams, PlantConfig
from .sensing import AdcModel, DetectorModel
from .sim import Scenario


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        self.line = line
        self.source = source
        loc = f"{source}:{line}" if line is not None else source
        super().__init__(f"{loc}: {message}")


@dataclass(frozen=True)
class ScenarioDoc:
    scenario: Scenario = field(default_factory=Scenario)
    band_pct: float = 2.0
    evm: EvmSweepConfig = field(default_factory=EvmSweepConfig)


# value converters -----------------------------------------------------------

def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"{s!r} is not a finite number")
    return v


def _opt_float(s: str) -> float | None:
    return None if s.lower() in ("none", "auto") else _float(s)


def _int(s: str) -> int:
    return int(s)


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _floats(s: str) -> tuple[float, ...]:
    parts = [p for p in s.replace(",", " ").split()]
    if not parts:
        raise ValueError("empty list")
    return tuple(_float(p) for p in parts)


def _kind(s: str) -> str:
    if s not in KINDS:
        raise ValueError(f"{s!r} is not one of {', '.join(KINDS)}")
    return s


def _terms(s: str) -> tuple[tuple[float, float, float], ...]:
    groups = [g.split() for g in s.split(",")]
    if len(groups) != len(LABELS) or any(len(g) != 3 for g in groups):
        raise ValueError("expected 7 comma-separated 'a b c' triples")
    return tuple(tuple(_float(v) for v in g) for g in groups)


def _rules(s: str) -> tuple[tuple[str, ...], ...]:
    labels = s.replace("/", " ").split()
    if len(labels) != 49:
        raise ValueError(f"expected 49 labels, got {len(labels)}")
    bad = [lab for lab in labels if lab not in LABELS]
    if bad:
        raise ValueError(f"unknown label {bad[0]!r}")
    return tuple(tuple(labels[7 * i:7 * i + 7]) for i in range(7))


def _disturbance(s: str) -> Disturbance:
    parts = s.split()
    if not parts:
        raise ValueError("empty disturbance")
    kind = parts[0]
    if kind == LINK_STEP and len(parts) == 3:
        return Disturbance(_float(parts[1]), LINK_STEP, _float(parts[2]))
    if kind == TEMP_RAMP and len(parts) == 4:
        return Disturbance(_float(parts[1]), TEMP_RAMP, _float(parts[2]), _float(parts[3]))
    raise ValueError(
        "expected 'link_step <t> <delta_db>' or 'temp_ramp <t> <rate> <duration>'"
    )


SCHEMA: dict[str, dict[str, Callable[[str], object]]] = {
    "run": {
        "p_ref_dbm": _float,
        "duration_s": _float,
        "ts_s": _float,
        "seed": _int,
        "band_pct": _float,
        "u_init_db": _opt_float,
    },
    "controller": {
        "kind": _kind,
        "kp": _float,
        "ki": _float,
        "kd": _float,
        "u_min_db": _float,
        "u_max_db": _float,
        "u_step_db": _opt_float,
        "slew_db": _opt_float,
    },
    "plant": {
        "if_drive_dbm": _opt_float,
        "stage_gains_db": _floats,
        "pa_gain_db": _float,
        "pa_psat_dbm": _float,
        "pa_smoothness": _float,
        "alpha": _float,
        "lag_s": _float,
        "f_lo_ghz": _float,
        "f_if_ghz": _float,
        "link_atten_db": _float,
        "compression": _bool,
    },
    "detector": {
        "slope_v_per_db": _float,
        "intercept_dbm": _float,
        "range_min_dbm": _float,
        "range_max_dbm": _float,
        "noise_v": _float,
        "adc": _bool,
        "adc_bits": _int,
        "adc_full_scale_v": _float,
        "adc_noise_codes": _float,
    },
    "fuzzy": {
        "e_min": _float,
        "e_max": _float,
        "de_min": _float,
        "de_max": _float,
        "du_min": _float,
        "du_max": _float,
        "e_terms": _terms,
        "de_terms": _terms,
        "du_terms": _terms,
        "rules": _rules,
    },
    "disturbances": {},
    "evm": {
        "order": _int,
        "n_symbols": _int,
        "attenuations_db": _floats,
        "drive_start_dbm": _float,
        "drive_stop_dbm": _float,
        "drive_step_dbm": _float,
        "knee_target_dbm": _float,
        "evm_limit_pct": _float,
    },
}


def _tokenize(text: str, source: str):
    sections: dict[str, dict[str, tuple[object, int]]] = {}
    header_line: dict[str, int] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError("unterminated section header", lineno, source)
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ScenarioError(f"unknown section [{name}]", lineno, source)
            if name in sections:
                raise ScenarioError(f"duplicate section [{name}]", lineno, source)
            sections[name] = {}
            header_line[name] = lineno
            current = name
            continue
        if current is None:
            raise ScenarioError("key outside of any section", lineno, source)
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ScenarioError("expected 'key = value'", lineno, source)
        if current == "disturbances":
            conv = _disturbance
        elif key in SCHEMA[current]:
            conv = SCHEMA[current][key]
        else:
            raise ScenarioError(f"unknown key {key!r} in [{current}]", lineno, source)
        if key in sections[current]:
            raise ScenarioError(f"duplicate key {key!r} in [{current}]", lineno, source)
        try:
            parsed = conv(value)
        except (ValueError, TypeError, OverflowError) as exc:
            raise ScenarioError(f"[{current}] {key}: {exc}", lineno, source) from None
        sections[current][key] = (parsed, lineno)
    return sections, header_line


def _term_set(sec, prefix: str, default: LinguisticTermSet, units: str) -> LinguisticTermSet:
    lo = sec.get(f"{prefix}_min", (default.lo,))[0]
    hi = sec.get(f"{prefix}_max", (default.hi,))[0]
    if f"{prefix}_terms" in sec:
        triples = sec[f"{prefix}_terms"][0]
        return LinguisticTermSet(tuple(Term(lab, *abc) for lab, abc in zip(LABELS, triples)), lo, hi, units)
    if f"{prefix}_min" in sec or f"{prefix}_max" in sec:
        return LinguisticTermSet.uniform(lo, hi, units)
    return default


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioDoc:
    """Parse a scenario document; every rejection is a :class:`ScenarioError` with a location."""
    sections, header_line = _tokenize(text, source)

    def get(name):
        return {k: v for k, (v, _) in sections.get(name, {}).items()}

    def build(name, fn):
        try:
            return fn()
        except (ValueError, TypeError, ArithmeticError) as exc:
            lines = [ln for _, ln in sections.get(name, {}).values()]
            line = header_line.get(name, min(lines) if lines else None)
            raise ScenarioError(f"[{name}]: {exc}", line, source) from None

    c = get("controller")
    dflt = ScenarioDoc()
    sc0 = dflt.scenario
    a0 = sc0.actuator
    controller = build("controller", lambda: ControllerSpec(
        c.get("kind", sc0.controller.kind),
        c.get("kp", sc0.controller.kp),
        c.get("ki", sc0.controller.ki),
        c.get("kd", sc0.controller.kd),
    ))
    actuator = build("controller", lambda: ActuatorModel(
        c.get("u_min_db", a0.min_db),
        c.get("u_max_db", a0.max_db),
        c.get("u_step_db", a0.step_db),
        c.get("slew_db", a0.slew_db),
    ))

    p = get("plant")
    p0 = PlantConfig()

    def make_plant():
        cfg = PlantConfig(
            if_drive_dbm=p.get("if_drive_dbm"),
            stage_gains_db=p.get("stage_gains_db", p0.stage_gains_db),
            pa=PaParams(
                p.get("pa_gain_db", p0.pa.gain_db),
                p.get("pa_psat_dbm", p0.pa.psat_dbm),
                p.get("pa_smoothness", p0.pa.smoothness),
            ),
            alpha=p.get("alpha", p0.alpha),
            lag_s=p.get("lag_s", p0.lag_s),
            f_lo_ghz=p.get("f_lo_ghz", p0.f_lo_ghz),
            f_if_ghz=p.get("f_if_ghz", p0.f_if_ghz),
            link_atten_db=p.get("link_atten_db", p0.link_atten_db),
            compression=p.get("compression", p0.compression),
        )
        cfg.frequencies  # validates the frequency plan
        if not math.isfinite(cfg.if_drive_dbm):
            raise ValueError("IF drive is not finite")
        return cfg

    plant = build("plant", make_plant)

    d = get("detector")
    d0, adc0 = DetectorModel(), AdcModel()
    detector = build("detector", lambda: DetectorModel(
        d.get("slope_v_per_db", d0.slope_v_per_db),
        d.get("intercept_dbm", d0.intercept_dbm),
        d.get("range_min_dbm", d0.range_min_dbm),
        d.get("range_max_dbm", d0.range_max_dbm),
        d.get("noise_v", d0.noise_v),
    ))
    adc = None
    if d.get("adc", True):
        adc = build("detector", lambda: AdcModel(
            d.get("adc_bits", adc0.bits),
            d.get("adc_full_scale_v", adc0.full_scale_v),
            d.get("adc_noise_codes", adc0.noise_codes),
        ))

    fz = sections.get("fuzzy", {})
    e0 = sc0.engine
    engine = build("fuzzy", lambda: FuzzyEngine(
        _term_set(fz, "e", e0.e_set, "dB"),
        _term_set(fz, "de", e0.de_set, "dB/s"),
        _term_set(fz, "du", e0.du_set, "dB/s"),
        RuleTable(fz["rules"][0]) if "rules" in fz else e0.rules,
    ))

    if "disturbances" in sections:
        events = sorted(get("disturbances").values(), key=lambda ev: ev.time)
        schedule = build("disturbances", lambda: DisturbanceSchedule(tuple(events)))
    else:
        schedule = sc0.schedule

    r = get("run")
    scenario = build("run", lambda: Scenario(
        controller=controller,
        plant=plant,
        detector=detector,
        adc=adc,
        actuator=actuator,
        engine=engine,
        schedule=schedule,
        p_ref_dbm=r.get("p_ref_dbm", sc0.p_ref_dbm),
        duration_s=r.get("duration_s", sc0.duration_s),
        ts_s=r.get("ts_s", sc0.ts_s),
        seed=r.get("seed", sc0.seed),
        u_init_db=r.get("u_init_db", sc0.u_init_db),
    ))
    band_pct = r.get("band_pct", dflt.band_pct)
    if not band_pct > 0:
        raise ScenarioError("[run] band_pct must be > 0", sections["run"]["band_pct"][1], source)
    if not 0 < scenario.n_samples <= 10_000_000:
        raise ScenarioError("[run] too many samples", header_line.get("run"), source)

    ev = get("evm")
    ev0 = dflt.evm
    evm = build("evm", lambda: EvmSweepConfig(
        ev.get("order", ev0.order),
        ev.get("n_symbols", ev0.n_symbols),
        ev.get("attenuations_db", ev0.attenuations_db),
        ev.get("drive_start_dbm", ev0.drive_start_dbm),
        ev.get("drive_stop_dbm", ev0.drive_stop_dbm),
        ev.get("drive_step_dbm", ev0.drive_step_dbm),
        ev.get("knee_target_dbm", ev0.knee_target_dbm),
        ev.get("evm_limit_pct", ev0.evm_limit_pct),
    ))
    return ScenarioDoc(scenario, band_pct, evm)


def load_scenario(path) -> ScenarioDoc:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), str(path))


def _num(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(float(v))


def _nums(vs) -> str:
    return ", ".join(_num(float(v)) for v in vs)


def _terms_text(ts: LinguisticTermSet) -> str:
    return ", ".join(" ".join(_num(float(v)) for v in (t.a, t.b, t.c)) for t in ts.terms)


def _drive_text(pl: PlantConfig) -> str:
    # a trimmed drive is written as "auto" so edited plant keys re-trim it
    return "auto" if pl.if_drive_dbm == pl.trimmed_drive() else _num(pl.if_drive_dbm)


def serialize_scenario(doc: ScenarioDoc) -> str:
    """Canonical text form; ``parse_scenario(serialize_scenario(d)) == d``."""
    sc = doc.scenario
    ctl, act, pl, det = sc.controller, sc.actuator, sc.plant, sc.detector
    lines = [
        "[run]",
        f"p_ref_dbm = {_num(sc.p_ref_dbm)}",
        f"duration_s = {_num(sc.duration_s)}",
        f"ts_s = {_num(sc.ts_s)}",
        f"seed = {sc.seed}",
        f"band_pct = {_num(doc.band_pct)}",
        f"u_init_db = {_num(sc.u_init_db)}",
        "",
        "[controller]",
        f"kind = {ctl.kind}",
        f"kp = {_num(ctl.kp)}",
        f"ki = {_num(ctl.ki)}",
        f"kd = {_num(ctl.kd)}",
        f"u_min_db = {_num(act.min_db)}",
        f"u_max_db = {_num(act.max_db)}",
        f"u_step_db = {_num(act.step_db)}",
        f"slew_db = {_num(act.slew_db)}",
        "",
        "[plant]",
        f"if_drive_dbm = {_drive_text(pl)}",
        f"stage_gains_db = {_nums(pl.stage_gains_db)}",
        f"pa_gain_db = {_num(pl.pa.gain_db)}",
        f"pa_psat_dbm = {_num(pl.pa.psat_dbm)}",
        f"pa_smoothness = {_num(pl.pa.smoothness)}",
        f"alpha = {_num(pl.alpha)}",
        f"lag_s = {_num(pl.lag_s)}",
        f"f_lo_ghz = {_num(pl.f_lo_ghz)}",
        f"f_if_ghz = {_num(pl.f_if_ghz)}",
        f"link_atten_db = {_num(pl.link_atten_db)}",
        f"compression = {_num(pl.compression)}",
        "",
        "[detector]",
        f"slope_v_per_db = {_num(det.slope_v_per_db)}",
        f"intercept_dbm = {_num(det.intercept_dbm)}",
        f"range_min_dbm = {_num(det.range_min_dbm)}",
        f"range_max_dbm = {_num(det.range_max_dbm)}",
        f"noise_v = {_num(det.noise_v)}",
        f"adc = {_num(sc.adc is not None)}",
    ]
    if sc.adc is not None:
        lines += [
            f"adc_bits = {sc.adc.bits}",
            f"adc_full_scale_v = {_num(sc.adc.full_scale_v)}",
            f"adc_noise_codes = {_num(sc.adc.noise_codes)}",
        ]
    lines += ["", "[fuzzy]"]
    eng = sc.engine
    for prefix, ts in (("e", eng.e_set), ("de", eng.de_set), ("du", eng.du_set)):
        lines.append(f"{prefix}_min = {_num(ts.lo)}")
        lines.append(f"{prefix}_max = {_num(ts.hi)}")
        if ts.terms != LinguisticTermSet.uniform(ts.lo, ts.hi).terms:
            lines.append(f"{prefix}_terms = {_terms_text(ts)}")
    if eng.rules.cells != RULE_BASE:
        lines.append("rules = " + " / ".join(" ".join(row) for row in eng.rules.cells))
    lines += ["", "[disturbances]"]
    for k, ev in enumerate(sc.schedule.events, start=1):
        if ev.kind == LINK_STEP:
            lines.append(f"d{k} = {LINK_STEP} {_num(ev.time)} {_num(ev.magnitude)}")
        else:
            lines.append(f"d{k} = {TEMP_RAMP} {_num(ev.time)} {_num(ev.magnitude)} {_num(ev.duration)}")
    ev = doc.evm
    lines += [
        "",
        "[evm]",
        f"order = {ev.order}",
        f"n_symbols = {ev.n_symbols}",
        f"attenuations_db = {_nums(ev.attenuations_db)}",
        f"drive_start_dbm = {_num(ev.drive_start_dbm)}",
        f"drive_stop_dbm = {_num(ev.drive_stop_dbm)}",
        f"drive_step_dbm = {_num(ev.drive_step_dbm)}",
        f"knee_target_dbm = {_num(ev.knee_target_dbm)}",
        f"evm_limit_pct = {_num(ev.evm_limit_pct)}",
    ]
    return "\n".join(lines) + "\n"
