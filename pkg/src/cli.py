# src/cli.py
# Точка входу: команди dmlab run | envelope | lsc | pqscb | catalog

import datetime
import json
import logging
from typing import List, Optional, Sequence, Tuple

import click

from compactify import RING_NAMES, WEIGHT_NAMES
from config import settings
from database import init_db, record_run
from families import FAMILY_NAMES
from metrics import LAST_EXIT_CODE, dump_metrics
from quasiconvex import FULL_GROWTH_NAMES, full_growth_function, pqscb_test, qc_witness_search
from represent import INTEGRAND_NAMES
from scenario import (PIPELINES, ScenarioError, ScenarioFile, ScenarioResult, load_scenarios, parse_scenarios,
                      run_file, run_options)
from sysmon import clear_warnings, format_elapsed, get_recent_warnings, install_log_capture, set_run_start
from triples import TRIPLE_NAMES
from utils import CatalogError, fmt_num, write_csv_report
from version import RELEASE_NOTES, VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'


def _setup_logging(level: Optional[str]) -> None:
    name = (level or settings.LOG_LEVEL).upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        raise click.BadParameter(f"unknown log level {level!r}", param_hint="--log-level")
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger().setLevel(numeric)
    install_log_capture()


def _fail_config(ctx: click.Context, message: str) -> None:
    click.echo(f"Помилка конфігурації: {message}", err=True)
    LAST_EXIT_CODE.set(EXIT_CONFIG)
    ctx.exit(EXIT_CONFIG)


def _summary(scn: ScenarioFile, results: Sequence[ScenarioResult], out: str) -> List[str]:
    total = sum(len(r.rows) for r in results)
    failed = sum(r.failures for r in results)
    lines = [f"dmlab {VERSION} | {scn.pipeline} | {scn.path}"]
    for r in results:
        status = "PASS" if r.failures == 0 else "FAIL"
        lines.append(f"  {status} {r.name}: {len(r.rows) - r.failures}/{len(r.rows)} rows ({r.seconds:.2f}s)")
    radii = sorted({sc.tol.clamp_radius for sc in scn.scenarios})
    lines.append(f"clamp radius: {', '.join(fmt_num(float(x)) for x in radii)}")
    warnings = get_recent_warnings()
    if warnings:
        lines.append("warnings:")
        lines.extend(f"  {w['level']} {w['name']}: {w['msg']}" for w in warnings)
    lines.append(f"{total - failed}/{total} rows pass, {failed} failing; report: {out}; elapsed {format_elapsed()}")
    return lines


def _record(ledger: Optional[str], scn: ScenarioFile, rows, code: int, started: datetime.datetime,
            k_max: int, seed: int) -> None:
    url = ledger or settings.DATABASE_URL
    if not url:
        return
    try:
        init_db(url)
    except Exception as e:
        logger.error(f"Журнал недоступний ({url}): {e}")
        return
    radii = {sc.tol.clamp_radius for sc in scn.scenarios}
    run_id = record_run(scn.path, scn.pipeline, scn.columns, rows, code, VERSION, started,
                        clamp_radius=radii.pop() if len(radii) == 1 else None, k_max_exp=k_max, seed=seed,
                        release_notes=RELEASE_NOTES)
    if run_id is not None:
        logger.info(f"Запуск записано в журнал під номером {run_id}")


def _execute(ctx: click.Context, scn: ScenarioFile, out: str, k_max: Optional[int], quad_order: Optional[int],
             jobs: Optional[int], metrics_file: Optional[str], ledger: Optional[str]) -> None:
    started = datetime.datetime.now(datetime.timezone.utc)
    try:
        opts = run_options(k_max, quad_order, jobs)
    except ScenarioError as e:
        _fail_config(ctx, str(e))
        return
    try:
        results = run_file(scn, opts)
    except ValueError as e:
        # hypotheses the scenario asked for do not hold (boundedness, subcriticality, ...)
        _fail_config(ctx, str(e))
        return
    rows = [row for r in results for row in r.rows]
    text = write_csv_report(out, scn.columns, rows)
    to_stdout = out == "-"
    if to_stdout:
        click.echo(text, nl=False)
    code = EXIT_OK if all(r.failures == 0 for r in results) else EXIT_FAIL
    for line in _summary(scn, results, out):
        click.echo(line, err=to_stdout)
    LAST_EXIT_CODE.set(code)
    metrics_path = metrics_file or settings.METRICS_FILE
    if metrics_path:
        try:
            dump_metrics(metrics_path)
        except OSError as e:
            logger.error(f"Не вдалося записати метрики у {metrics_path}: {e}")
    _record(ledger, scn, rows, code, started, opts.schedule[-1].bit_length() - 1, opts.seed)
    ctx.exit(code)


def _run_options(fn):
    fn = click.option("--out", default="-", show_default=True, help="CSV report path ('-' for stdout).")(fn)
    fn = click.option("--k-max", "k_max", type=int, default=None, help="Largest schedule exponent (k = 2^EXP).")(fn)
    fn = click.option("--quad-order", type=int, default=None, help="Gauss-Legendre nodes per subinterval.")(fn)
    fn = click.option("--jobs", type=int, default=None, help="Worker threads.")(fn)
    fn = click.option("--metrics-file", default=None, help="Write Prometheus metrics here at the end.")(fn)
    fn = click.option("--ledger", default=None, help="SQLAlchemy URL of the run ledger.")(fn)
    return fn


@click.group(name="dmlab")
@click.version_option(VERSION, prog_name="dmlab", message="%(prog)s %(version)s\n\n" + RELEASE_NOTES)
@click.option("--log-level", default=None, help="DEBUG | INFO | WARNING | ERROR (default LAB_LOG_LEVEL).")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]) -> None:
    """Numerical laboratory for DiPerna-Majda measures generated by gradients."""
    _setup_logging(log_level)
    clear_warnings()
    set_run_start()


@cli.command("run")
@click.option("--scenario", "scenario_path", required=True, help="Scenario file (.scn).")
@_run_options
@click.pass_context
def run_cmd(ctx, scenario_path, out, k_max, quad_order, jobs, metrics_file, ledger):
    """Run every scenario of a file and write the CSV report."""
    try:
        scn = load_scenarios(scenario_path)
    except ScenarioError as e:
        _fail_config(ctx, f"{scenario_path}: {e}")
        return
    _execute(ctx, scn, out, k_max, quad_order, jobs, metrics_file, ledger)


def _parse_s0(raw: str):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        raise click.BadParameter(f"{raw!r} is neither a number nor a matrix", param_hint="--s0")
    return value


@cli.command("envelope")
@click.option("--psi", required=True, help=f"Full-growth function: {', '.join(FULL_GROWTH_NAMES)}.")
@click.option("--s0", "s0", multiple=True, required=True, help="Point (number or JSON matrix); repeatable.")
@click.option("--n", "grid", type=int, multiple=True, default=(64,), show_default=True, help="Grid cells; repeatable.")
@click.option("--m", "starts", type=int, default=16, show_default=True, help="Multistarts.")
@click.option("--seed", type=str, default=None, help="Multistart seed (default LAB_SEED).")
@click.option("--witness", is_flag=True, help="Also search a laminate witness of non-quasiconvexity.")
@_run_options
@click.pass_context
def envelope_cmd(ctx, psi, s0, grid, starts, seed, witness, out, k_max, quad_order, jobs, metrics_file, ledger):
    """Upper bound of the quasiconvex envelope against the convex-envelope oracle."""
    entry = {"name": "envelope", "psi": psi, "s0": [_parse_s0(v) for v in s0], "N": list(grid), "M": starts}
    if seed is not None:
        entry["seed"] = seed
    try:
        scn = parse_scenarios(json.dumps({"pipeline": "envelope", "scenarios": [entry]}), "<envelope>")
    except ScenarioError as e:
        _fail_config(ctx, str(e))
        return
    if witness:
        fn = scn.scenarios[0].params["psi"]
        for point in scn.scenarios[0].params["s0"]:
            w = qc_witness_search(fn, point)
            label = json.dumps(point.tolist()) if hasattr(point, "tolist") else fmt_num(point)
            if w is None:
                click.echo(f"s0={label}: no witness found", err=True)
            else:
                click.echo(f"s0={label}: witness {fmt_num(w.value)} < psi(s0) = {fmt_num(w.baseline)}", err=True)
    _execute(ctx, scn, out, k_max, quad_order, jobs, metrics_file, ledger)


@cli.command("lsc")
@click.option("--family", required=True, help="Catalog family.")
@click.option("--integrand", "integrands", multiple=True, required=True, help="Catalog integrand; repeatable.")
@click.option("--triple", default="generated", show_default=True, help="Catalog triple or 'generated'.")
@click.option("--expect", type=click.Choice(["lsc", "not_lsc", "none"]), default=None)
@_run_options
@click.pass_context
def lsc_cmd(ctx, family, integrands, triple, expect, out, k_max, quad_order, jobs, metrics_file, ledger):
    """Gap lim ∫h(u_k) - ∫h(u) with the boundary condition and a verdict."""
    entry = {"name": family, "family": family, "triple": triple, "integrands": list(integrands)}
    if expect:
        entry["expect"] = expect
    try:
        scn = parse_scenarios(json.dumps({"pipeline": "lsc", "scenarios": [entry]}), "<lsc>")
    except ScenarioError as e:
        _fail_config(ctx, str(e))
        return
    _execute(ctx, scn, out, k_max, quad_order, jobs, metrics_file, ledger)


@cli.command("pqscb")
@click.option("--psi", required=True, help="Full-growth function h̃.")
@click.option("--p", "p", type=float, required=True, help="Growth exponent p > 1.")
@click.option("--eps", "eps", type=float, multiple=True, default=(0.5, 0.1, 0.01), show_default=True)
@click.pass_context
def pqscb_cmd(ctx, psi, p, eps):
    """Boundary growth from below: blow-up of the constant C(ε)."""
    try:
        fn = full_growth_function(psi)
        rows = pqscb_test(fn, p, eps)
    except (CatalogError, ValueError) as e:
        _fail_config(ctx, str(e))
        return
    click.echo("eps,constant,exponent,violated")
    for r in rows:
        click.echo(",".join(fmt_num(v) for v in (r.eps, r.constant, r.exponent, r.violated)))
    ctx.exit(EXIT_FAIL if any(r.violated for r in rows) else EXIT_OK)


_CATALOGS: Tuple[Tuple[str, Sequence[str]], ...] = (
    ("families", FAMILY_NAMES),
    ("triples", TRIPLE_NAMES),
    ("rings", RING_NAMES),
    ("weights", WEIGHT_NAMES),
    ("integrands", INTEGRAND_NAMES),
    ("psi", FULL_GROWTH_NAMES),
    ("pipelines", PIPELINES),
)


@cli.command("catalog")
@click.argument("kind", required=False, type=click.Choice([k for k, _ in _CATALOGS]))
def catalog_cmd(kind):
    """List catalog names."""
    for name, items in _CATALOGS:
        if kind is None or kind == name:
            click.echo(f"{name}: {', '.join(items)}")


if __name__ == "__main__":
    cli()
