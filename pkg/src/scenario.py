# src/scenario.py
# Розбір файлів сценаріїв (.scn, JSON-сумісний формат) та виконання конвеєрів verify | represent | envelope | lsc | dual

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from compactify import TestBattery, default_battery, make_battery, ring_function, weight_function
from config import settings
from families import PiecewiseFamily, builtin, family_from_dict
from limits import ScheduleError, default_schedule, empirical_triple_check, limit_extrapolate
from lsc import NOT_LSC, NO_VERDICT, LSC, lsc_gap, plessn_condition, verdict
from measures import DMTriple, validate_triple
from metrics import ROWS_TOTAL, SCENARIO_SECONDS
from quasiconvex import envelope_oracle, full_growth_function, qc_envelope_upper
from represent import (Integrand, dual_triple, integrand_extrapolate, integrate_dual, represent_limit,
                       resolve_integrand)
from runtime_config import Tolerances, effective_tolerances, parse_overrides
from triples import generate_triple, resolve_triple
from utils import parallel_map

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

PIPELINE_COLUMNS: Dict[str, Tuple[str, ...]] = {
    "verify": ("scenario", "g", "f0", "psi0", "k", "I_k", "limit", "error_bar", "predicted", "pass"),
    "represent": ("scenario", "integrand", "oscillation", "concentration", "total", "empirical", "pass"),
    "envelope": ("scenario", "s0", "N", "M", "value", "oracle", "pass"),
    "lsc": ("scenario", "integrand", "gap", "condition_value", "verdict", "pass"),
    "dual": ("scenario", "g", "f0", "limit", "error_bar", "predicted", "pass"),
}

PIPELINES = tuple(PIPELINE_COLUMNS)

DEFAULT_DUAL_BATTERY = (("one", "one"), ("x", "clamp"), ("one", "bump"), ("x2", "signed_frac"))

# envelope value may undercut the oracle only by grid round-off
_ORACLE_SLACK = 1e-9


class ScenarioError(ValueError):
    """Malformed scenario file; `path` names the offending field, e.g. scenarios[0].family."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class RunOptions:
    schedule: Tuple[int, ...]
    order: int
    jobs: int = 1
    seed: int = 0x5EED


@dataclass(frozen=True)
class Scenario:
    name: str
    pipeline: str
    tol: Tolerances
    params: Mapping[str, Any]


@dataclass(frozen=True)
class ScenarioFile:
    path: str
    pipeline: str
    scenarios: Tuple[Scenario, ...]

    @property
    def columns(self) -> Tuple[str, ...]:
        return PIPELINE_COLUMNS[self.pipeline]


@dataclass
class ScenarioResult:
    name: str
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if not r[-1])


# --- parsing ---

_MISSING = object()


def _get(raw: Mapping, key: str, path: str, default: Any = _MISSING) -> Any:
    if key in raw:
        return raw[key]
    if default is _MISSING:
        raise ScenarioError(f"{path}.{key}" if path else key, "required field is missing")
    return default


def _resolving(path: str, fn: Callable[[], Any]) -> Any:
    """Run a catalog lookup and re-raise its failure against the field path."""
    try:
        return fn()
    except ScenarioError:
        raise
    except (ValueError, TypeError, KeyError) as e:
        raise ScenarioError(path, str(e))


def _family(raw: Mapping, path: str) -> PiecewiseFamily:
    spec = _get(raw, "family", path)
    where = f"{path}.family"
    if isinstance(spec, str):
        return _resolving(where, lambda: builtin(spec))
    if isinstance(spec, Mapping):
        return _resolving(where, lambda: family_from_dict(spec))
    raise ScenarioError(where, "expected a catalog name or a family record")


def _triple(raw: Mapping, path: str, family: PiecewiseFamily, required: bool = True) -> DMTriple:
    spec = _get(raw, "triple", path, _MISSING if required else "generated")
    where = f"{path}.triple"
    if spec == "generated":
        return _resolving(where, lambda: generate_triple(family))
    if isinstance(spec, (str, Mapping)):
        return _resolving(where, lambda: resolve_triple(spec))
    raise ScenarioError(where, "expected a catalog name, \"generated\" or a triple record")


def _battery(raw: Mapping, path: str, tol: Tolerances) -> TestBattery:
    spec = raw.get("battery", "default")
    where = f"{path}.battery"
    if spec == "default":
        return _resolving(where, lambda: default_battery(tol.clamp_radius))
    if isinstance(spec, list) and spec:
        return _resolving(where, lambda: make_battery([tuple(m) for m in spec], "custom", tol.clamp_radius))
    raise ScenarioError(where, "expected \"default\" or a non-empty list of [g, f0, psi0]")


def _integrands(raw: Mapping, path: str) -> Tuple[Integrand, ...]:
    spec = _get(raw, "integrands", path)
    if isinstance(spec, (str, Mapping)):
        spec = [spec]
    if not isinstance(spec, list) or not spec:
        raise ScenarioError(f"{path}.integrands", "expected a non-empty list")
    return tuple(_resolving(f"{path}.integrands[{i}]", lambda s=s: resolve_integrand(s)) for i, s in enumerate(spec))


def _number(raw: Mapping, key: str, path: str, default: Any, conv: Callable = float) -> Any:
    value = raw.get(key, default)
    if value is None:
        return None
    try:
        return conv(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{path}.{key}", f"expected a number, got {value!r}")


def _s0_list(raw: Mapping, path: str) -> List[Any]:
    spec = _get(raw, "s0", path)
    where = f"{path}.s0"
    if isinstance(spec, Mapping):
        grid = spec.get("grid")
        if not isinstance(grid, list) or len(grid) != 3:
            raise ScenarioError(f"{where}.grid", "expected [a, b, n]")
        a, b, n = grid
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    items = spec if isinstance(spec, list) else [spec]
    out: List[Any] = []
    for i, item in enumerate(items):
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            out.append(float(item))
        elif isinstance(item, list):
            m = np.asarray(item, dtype=float)
            if m.ndim != 2:
                raise ScenarioError(f"{where}[{i}]", "matrix s0 must be a list of rows")
            out.append(m)
        else:
            raise ScenarioError(f"{where}[{i}]", f"expected a number or a matrix, got {item!r}")
    if not out:
        raise ScenarioError(where, "empty")
    return out


def _prepare(pipeline: str, raw: Mapping, path: str, tol: Tolerances) -> Dict[str, Any]:
    if pipeline == "verify":
        family = _family(raw, path)
        return {
            "family": family,
            "triple": _triple(raw, path, family),
            "battery": _battery(raw, path, tol),
            "p": _number(raw, "p", path, None),
        }
    if pipeline == "represent":
        family = _family(raw, path)
        return {"family": family, "triple": _triple(raw, path, family, required=False),
                "integrands": _integrands(raw, path)}
    if pipeline == "lsc":
        family = _family(raw, path)
        expect = raw.get("expect")
        if expect is not None and expect not in (LSC, NOT_LSC, NO_VERDICT):
            raise ScenarioError(f"{path}.expect", f"expected one of {LSC}, {NOT_LSC}, {NO_VERDICT}")
        return {"family": family, "triple": _triple(raw, path, family, required=False),
                "integrands": _integrands(raw, path), "expect": expect}
    if pipeline == "envelope":
        psi_name = _get(raw, "psi", path)
        ns = raw.get("N", 64)
        ns = ns if isinstance(ns, list) else [ns]
        try:
            ns = [int(n) for n in ns]
        except (TypeError, ValueError):
            raise ScenarioError(f"{path}.N", f"expected integers, got {raw.get('N')!r}")
        return {
            "psi_name": str(psi_name),
            "psi": _resolving(f"{path}.psi", lambda: full_growth_function(str(psi_name))),
            "s0": _s0_list(raw, path),
            "N": ns,
            "M": _number(raw, "M", path, 16, int),
            "seed": _number(raw, "seed", path, None, lambda v: int(str(v), 0)),
        }
    if pipeline == "dual":
        family = _family(raw, path)
        spec = raw.get("battery", [list(m) for m in DEFAULT_DUAL_BATTERY])
        if not isinstance(spec, list) or not spec:
            raise ScenarioError(f"{path}.battery", "expected a non-empty list of [g, f0]")
        members = []
        for i, m in enumerate(spec):
            where = f"{path}.battery[{i}]"
            if not isinstance(m, list) or len(m) != 2:
                raise ScenarioError(where, "expected [g, f0]")
            members.append(_resolving(where, lambda m=m: (weight_function(m[0]), ring_function(m[1], tol.clamp_radius))))
        psi0 = str(raw.get("psi0", "one"))
        return {
            "family": family,
            "q": _number(raw, "q", path, family.q),
            "p": _number(raw, "p", path, family.p),
            "psi0": _resolving(f"{path}.psi0", lambda: ring_function(psi0, tol.clamp_radius)),
            "members": tuple(members),
        }
    raise ScenarioError("pipeline", f"unknown pipeline {pipeline!r}")


def parse_scenarios(text: str, source: str = "<string>") -> ScenarioFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"line {e.lineno}, column {e.colno}", e.msg)
    if not isinstance(doc, Mapping):
        raise ScenarioError("", "top level must be a key-value record")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ScenarioError("schema", f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}")
    pipeline = _get(doc, "pipeline", "")
    if pipeline not in PIPELINE_COLUMNS:
        raise ScenarioError("pipeline", f"unknown pipeline {pipeline!r}; expected one of {', '.join(PIPELINES)}")
    try:
        base = parse_overrides(doc.get("tolerances"))
    except ValueError as e:
        raise ScenarioError("tolerances", str(e))
    defaults = doc.get("defaults", {})
    if not isinstance(defaults, Mapping):
        raise ScenarioError("defaults", "expected a key-value record")
    entries = _get(doc, "scenarios", "")
    if not isinstance(entries, list) or not entries:
        raise ScenarioError("scenarios", "expected a non-empty list")

    scenarios = []
    names = set()
    for i, entry in enumerate(entries):
        path = f"scenarios[{i}]"
        if not isinstance(entry, Mapping):
            raise ScenarioError(path, "expected a key-value record")
        raw = {**defaults, **entry}
        try:
            overrides = {**base, **parse_overrides(entry.get("tolerances"))}
        except ValueError as e:
            raise ScenarioError(f"{path}.tolerances", str(e))
        tol = effective_tolerances(overrides)
        name = str(raw.get("name", f"{pipeline}_{i}"))
        if name in names:
            raise ScenarioError(f"{path}.name", f"duplicate scenario name {name!r}")
        names.add(name)
        scenarios.append(Scenario(name, pipeline, tol, _prepare(pipeline, raw, path, tol)))
    logger.info(f"{source}: {len(scenarios)} {pipeline} scenario(s)")
    return ScenarioFile(source, pipeline, tuple(scenarios))


def load_scenarios(path: str) -> ScenarioFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ScenarioError("", f"cannot read {path}: {e.strerror}")
    return parse_scenarios(text, path)


def run_options(k_max_exp: Optional[int] = None, quad_order: Optional[int] = None,
                jobs: Optional[int] = None, seed: Optional[int] = None) -> RunOptions:
    try:
        schedule = default_schedule(k_max_exp)
    except ScheduleError as e:
        raise ScenarioError("--k-max", str(e))
    order = settings.QUAD_ORDER if quad_order is None else int(quad_order)
    if order < 1:
        raise ScenarioError("--quad-order", "must be positive")
    return RunOptions(schedule, order, max(1, int(jobs or settings.JOBS)), settings.SEED if seed is None else int(seed))


# --- pipelines ---

def _run_verify(sc: Scenario, opts: RunOptions) -> List[Tuple[Any, ...]]:
    prm = sc.params
    triple: DMTriple = prm["triple"]
    report = validate_triple(triple, sc.tol)
    if not report.passed:
        failed = ", ".join(report.failed())
        logger.warning(f"{sc.name}: triple {triple.name} fails validation ({failed}); every row is marked failed")
    check = empirical_triple_check(prm["family"], triple, prm["battery"], p=prm["p"], schedule=opts.schedule,
                                   jobs=opts.jobs, tol=sc.tol, order=opts.order)
    return [(sc.name, r.g, r.f0, r.psi0, r.k, r.value_k, r.limit, r.error_bar, r.predicted,
             r.passed and report.passed) for r in check.rows]


def _run_represent(sc: Scenario, opts: RunOptions) -> List[Tuple[Any, ...]]:
    prm = sc.params
    rows = []
    for integrand in prm["integrands"]:
        rep = represent_limit(prm["family"], prm["triple"], integrand)
        est = integrand_extrapolate(prm["family"], integrand, opts.schedule, opts.jobs, sc.tol, order=opts.order)
        ok = abs(rep.total - est.value) <= sc.tol.pass_threshold(est.error_bar)
        rows.append((sc.name, integrand.name, rep.oscillation, rep.concentration, rep.total, est.value, ok))
    return rows


def _s0_label(s0: Any) -> Any:
    if isinstance(s0, np.ndarray):
        return json.dumps(s0.tolist(), separators=(",", ":"))
    return s0


def _run_envelope(sc: Scenario, opts: RunOptions) -> List[Tuple[Any, ...]]:
    prm = sc.params
    psi = prm["psi"]
    seed = opts.seed if prm["seed"] is None else prm["seed"]
    rows = []
    for s0 in prm["s0"]:
        scalar = not isinstance(s0, np.ndarray)
        oracle = float(envelope_oracle(psi, s0)) if scalar else None
        for n in prm["N"]:
            value = qc_envelope_upper(psi, s0, N=n, M=prm["M"], seed=seed, jobs=opts.jobs)
            if oracle is None:
                # no oracle for matrices: the upper bound can at least not exceed ψ(s₀)
                ok = value <= float(np.asarray(psi(s0), dtype=float)) + _ORACLE_SLACK
            else:
                ok = oracle - _ORACLE_SLACK <= value <= oracle + sc.tol.envelope
            rows.append((sc.name, _s0_label(s0), n, prm["M"], value, oracle, ok))
    return rows


def _run_lsc(sc: Scenario, opts: RunOptions) -> List[Tuple[Any, ...]]:
    prm = sc.params
    rows = []
    for integrand in prm["integrands"]:
        gap = lsc_gap(prm["family"], integrand, opts.schedule, opts.jobs, sc.tol)
        condition = plessn_condition(prm["triple"], integrand)
        v = verdict(gap, condition, sc.tol)
        ok = v == prm["expect"] if prm["expect"] else v != NOT_LSC
        rows.append((sc.name, integrand.name, gap.gap, condition, v, ok))
    return rows


def _run_dual(sc: Scenario, opts: RunOptions) -> List[Tuple[Any, ...]]:
    prm = sc.params
    family = prm["family"]
    dual = dual_triple(family, prm["q"], prm["p"], schedule=opts.schedule)

    def row(member):
        g, f0 = member
        est = limit_extrapolate(family, g, f0, prm["psi0"], schedule=opts.schedule, order=opts.order,
                                jobs=1, tol=sc.tol, swap=True, q=prm["q"])
        predicted = integrate_dual(dual, g, f0, prm["psi0"])
        ok = abs(est.value - predicted) <= sc.tol.pass_threshold(est.error_bar)
        return sc.name, g.name, f0.name, est.value, est.error_bar, predicted, ok

    return parallel_map(row, prm["members"], opts.jobs)


_RUNNERS: Dict[str, Callable[[Scenario, RunOptions], List[Tuple[Any, ...]]]] = {
    "verify": _run_verify,
    "represent": _run_represent,
    "envelope": _run_envelope,
    "lsc": _run_lsc,
    "dual": _run_dual,
}


def run_scenario(sc: Scenario, opts: RunOptions) -> ScenarioResult:
    started = time.perf_counter()
    rows = _RUNNERS[sc.pipeline](sc, opts)
    seconds = time.perf_counter() - started
    SCENARIO_SECONDS.labels(pipeline=sc.pipeline).observe(seconds)
    for r in rows:
        ROWS_TOTAL.labels(pipeline=sc.pipeline, verdict="pass" if r[-1] else "fail").inc()
    result = ScenarioResult(sc.name, rows, seconds)
    logger.info(f"{sc.name}: {len(rows) - result.failures}/{len(rows)} rows pass")
    return result


def run_file(scn: ScenarioFile, opts: RunOptions) -> List[ScenarioResult]:
    """Scenarios fan out over opts.jobs workers; results keep declaration order."""
    if len(scn.scenarios) > 1 and opts.jobs > 1:
        inner = replace(opts, jobs=1)
        return parallel_map(lambda sc: run_scenario(sc, inner), scn.scenarios, opts.jobs)
    return [run_scenario(sc, opts) for sc in scn.scenarios]
