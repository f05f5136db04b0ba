"""Command-line interface.

Commands: ``ml``, ``deriv``, ``compare``, ``integrate``, ``solve``, ``verify``.
Every command accepts ``--format json|csv|table``, ``--out FILE``,
``--jobs N`` and ``--config FILE`` (``key = value`` lines that supply
defaults for the command's options; flags on the command line win).

Exit codes: 0 success, 2 usage or input error, 3 numerical failure
(including unconverged derivatives and failed verification cases).
"""

from __future__ import annotations

import functools
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Sequence

import click

from localfrac import diffops, integrals, odes, specfun, verify
from localfrac._errors import InputError, NumericalError, UnsupportedFormError
from localfrac.expr import parse
from localfrac.kernels import REGISTRY, builtin_kernels, get_kernel

__all__ = ["cli", "main", "EXIT_OK", "EXIT_INPUT", "EXIT_NUMERIC"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

FORMATS = ("json", "csv", "table")
# batches smaller than this run in-process even when --jobs > 1
PARALLEL_MIN = 32


# ---------------------------------------------------------------------------
# Formatting


def _csv_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def _table_cell(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.6g}"
    if x is None:
        return "-"
    return str(x)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_csv_quote(_csv_cell(c)) for c in row) + "\n")
    return buf.getvalue()


def _csv_quote(cell: str) -> str:
    if any(ch in cell for ch in ',"\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def render_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    cells = [list(header)] + [[_table_cell(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def render_json(record: dict) -> str:
    return json.dumps(record, indent=2, allow_nan=False) + "\n"


def _elapsed_ms(start: float) -> float:
    return round((time.perf_counter() - start) * 1000.0, 3)


# ---------------------------------------------------------------------------
# Shared options


def _read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise click.BadParameter(f"cannot read '{path}': {exc.strerror}", param_hint="--config")
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise click.BadParameter(f"line {n}: expected key = value, got '{raw}'", param_hint="--config")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _config_callback(ctx: click.Context, param: click.Parameter, value: Optional[str]):
    if value is None:
        return None
    raw = _read_config(value)
    params = {p.name: p for p in ctx.command.params if p.name not in ("config",)}
    unknown = sorted(set(raw) - set(params))
    if unknown:
        raise click.BadParameter(
            f"unknown keys for '{ctx.command.name}': {', '.join(unknown)}", param_hint="--config"
        )
    defaults = dict(ctx.default_map or {})
    for key, text in raw.items():
        defaults[key] = [s.strip() for s in text.split(",")] if params[key].multiple else text
    ctx.default_map = defaults
    return value


def common_options(fn):
    fn = click.option(
        "--config",
        type=click.Path(dir_okay=False),
        is_eager=True,
        expose_value=False,
        callback=_config_callback,
        help="File of key = value defaults for this command's options.",
    )(fn)
    fn = click.option(
        "--jobs",
        type=click.IntRange(min=1),
        default=lambda: os.cpu_count() or 1,
        show_default="number of processors",
        help="Worker processes for grids and suites.",
    )(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False, writable=True), help="Write output here instead of stdout.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Output format.")(fn)
    return fn


def handle_errors(fn):
    """Map library errors onto the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(EXIT_INPUT) from None
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            raise SystemExit(EXIT_NUMERIC) from None

    return wrapper


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map, fanned out over processes for large batches."""
    if jobs > 1 and len(items) >= PARALLEL_MIN:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(x) for x in items]


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"--grid expects start:stop:n, got '{text}'")
    try:
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"--grid expects numbers start:stop:n, got '{text}'") from None
    if n < 2:
        raise InputError("--grid needs n >= 2 points")
    pts = [start + (stop - start) * k / (n - 1) for k in range(n)]
    pts[-1] = stop
    return pts


# ---------------------------------------------------------------------------
# Commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact", prog_name="localfrac")
def cli():
    """Local fractional derivatives: evaluation, comparison, integrals, ODEs and checks."""


@cli.command("ml")
@click.option("--a", type=float, required=True, help="First parameter, a > 0.")
@click.option("--b", type=float, default=1.0, show_default=True, help="Second parameter.")
@click.option("--z", type=float, required=True, help="Argument.")
@click.option("--tol", type=float, default=specfun.DEFAULT_SERIES.tol, show_default=True)
@click.option("--max-terms", type=int, default=specfun.DEFAULT_SERIES.max_terms, show_default=True)
@common_options
@handle_errors
def cmd_ml(a, b, z, tol, max_terms, fmt, out, jobs):
    """Evaluate the Mittag-Leffler function E_{a,b}(z)."""
    start = time.perf_counter()
    value = specfun.mittag_leffler(a, b, z, specfun.SeriesConfig(tol, max_terms))
    inputs = {"a": a, "b": b, "z": z, "tol": tol, "max_terms": max_terms}
    fmt = fmt or "json"
    if fmt == "json":
        record = {"command": "ml", "inputs": inputs, "value": value, "converged": True,
                  "elapsed_ms": _elapsed_ms(start)}
        emit(render_json(record), out)
    elif fmt == "csv":
        emit(render_csv(("a", "b", "z", "value"), [(a, b, z, value)]), out)
    else:
        emit(render_table(("a", "b", "z", "E_ab(z)"), [(a, b, z, value)]), out)


def _operator_options(fn):
    fn = click.option("--side", type=click.Choice(["left", "right"]), default="right", show_default=True,
                      help="Side of the Yang quotient.")(fn)
    fn = click.option("--p", "pmap", default=None, help="Map p(t, h, a) for --op p, e.g. 't + h*t^(1-a)'.")(fn)
    fn = click.option("--r", type=float, default=1.0, show_default=True, help="Exponent of dh:power.")(fn)
    fn = click.option("--beta", type=float, default=None, help="DH weight; default 1 - alpha.")(fn)
    return fn


def _eval_options(fn):
    fn = click.option("--levels", type=click.IntRange(2, 12), default=diffops.DEFAULT_EVAL.levels, show_default=True)(fn)
    fn = click.option("--rel-tol", type=float, default=diffops.DEFAULT_EVAL.rel_tol, show_default=True)(fn)
    fn = click.option("--step", type=float, default=None, help="Base increment; default 2^-10 max(1, |t|).")(fn)
    fn = click.option("--direction", type=click.Choice(["plus", "minus", "symmetric"]), default="plus",
                      show_default=True)(fn)
    return fn


KERNEL_OPERATORS = ("n", "g", "dh:linear", "dh:power", "dh:exp")


def _build_operator(op, kernel, alpha, beta, r, pmap, side):
    if op in KERNEL_OPERATORS and kernel is None:
        raise InputError(f"operator '{op}' needs --kernel")
    return diffops.parse_operator(op, kernel or "classical", alpha, beta, r, pmap, side)


def _closed_form(spec, expr):
    try:
        return diffops.closed_form(spec, expr)
    except UnsupportedFormError:
        return None


def _derive_at(task):
    """(t, value, error estimate, converged) for one point; t = 0 uses the one-sided limit."""
    spec, f, t, cfg = task
    if t == 0.0:
        r = diffops.eval_at_zero(spec, f, cfg)
    else:
        r = diffops.eval_operator(spec, f, t, cfg)
    return t, r.value, r.error_estimate, r.converged


@cli.command("deriv")
@click.option("--op", type=click.Choice(diffops.OPERATOR_NAMES), default="n", show_default=True)
@click.option("--kernel", default=None, help="Kernel, e.g. conformable or mellin_ross:a=2.")
@click.option("--alpha", type=float, required=True)
@_operator_options
@click.option("--expr", required=True, help="Function of t, e.g. 't^2*sin(t)'.")
@click.option("--at", "at", type=float, default=None, help="Evaluation point.")
@click.option("--grid", default=None, help="start:stop:n evenly spaced points.")
@_eval_options
@click.option("--allow-unconverged", is_flag=True, help="Exit 0 even when a limit did not converge.")
@common_options
@handle_errors
def cmd_deriv(op, kernel, alpha, beta, r, pmap, side, expr, at, grid, direction, step, rel_tol, levels,
              allow_unconverged, fmt, out, jobs):
    """Evaluate a local fractional derivative at a point or over a grid."""
    start = time.perf_counter()
    if (at is None) == (grid is None):
        raise click.UsageError("give exactly one of --at and --grid")
    spec = _build_operator(op, kernel, alpha, beta, r, pmap, side)
    f = parse(expr)
    cfg = diffops.EvalConfig(step, levels, rel_tol, direction)
    points = [at] if grid is None else _parse_grid(grid)
    rows = parallel_map(_derive_at, [(spec, f, t, cfg) for t in points], jobs)
    inputs = {"op": op, "kernel": kernel, "alpha": alpha, "expr": expr, "direction": direction}
    if op.startswith("dh:"):
        inputs.update(beta=spec.beta, r=r)
    if op == "p":
        inputs["p"] = pmap
    if op == "yang":
        inputs["side"] = side
    fmt = fmt or ("json" if grid is None else "csv")
    header = ("t", "value", "err", "converged")

    if fmt == "json":
        if grid is None:
            t, value, err, ok = rows[0]
            cf = _closed_form(spec, f)
            cf_value = None
            if cf is not None and t != 0.0:
                try:
                    cf_value = cf(t)
                except (InputError, NumericalError):
                    cf_value = None
            record = {
                "command": "deriv",
                "inputs": {**inputs, "at": at},
                "value": _json_float(value),
                "error_estimate": _json_float(err),
                "converged": ok,
                "closed_form": cf.render() if cf is not None else None,
                "closed_form_value": _json_float(cf_value),
                "elapsed_ms": _elapsed_ms(start),
            }
        else:
            record = {
                "command": "deriv",
                "inputs": {**inputs, "grid": grid},
                "points": [row[0] for row in rows],
                "values": [row[1] for row in rows],
                "error_estimates": [row[2] for row in rows],
                "converged": [row[3] for row in rows],
                "elapsed_ms": _elapsed_ms(start),
            }
        emit(render_json(record), out)
    elif fmt == "csv":
        emit(render_csv(header, rows), out)
    else:
        emit(render_table(header, rows), out)

    bad = [row[0] for row in rows if not row[3]]
    if bad and not allow_unconverged:
        click.echo(
            f"numerical failure: limit did not converge at t = {', '.join(repr(t) for t in bad[:5])}"
            + (" ..." if len(bad) > 5 else ""),
            err=True,
        )
        raise SystemExit(EXIT_NUMERIC)


DEFAULT_DEFINITIONS = tuple(k.name for k in builtin_kernels()) + ("mult",)


def parse_definition(text: str, alpha: float, beta, r, pmap, side):
    """``op@kernel``, a bare kernel (the N operator) or a bare kernel-free operator."""
    text = text.strip()
    if "@" in text:
        op, _, kernel = text.partition("@")
        if op not in diffops.OPERATOR_NAMES:
            raise InputError(f"unknown operator '{op}' in '{text}'")
        return _build_operator(op, kernel, alpha, beta, r, pmap, side)
    if text in diffops.OPERATOR_NAMES:
        return _build_operator(text, None, alpha, beta, r, pmap, side)
    return diffops.AdditiveN(REGISTRY.get(text), alpha)


def _compare_row(task):
    label, spec, f, t, cfg = task
    cf = _closed_form(spec, f)
    try:
        res = diffops.eval_operator(spec, f, t, cfg)
        cf_value = cf(t) if cf is not None else None
    except (InputError, NumericalError) as exc:
        return {"definition": label, "value": None, "error_estimate": None, "converged": False,
                "closed_form": None, "error": str(exc)}
    return {"definition": label, "value": _json_float(res.value),
            "error_estimate": _json_float(res.error_estimate), "converged": res.converged,
            "closed_form": _json_float(cf_value)}


@cli.command("compare")
@click.argument("definitions", nargs=-1)
@click.option("--def", "defs", multiple=True, help="Definition to include (repeatable); same syntax as arguments.")
@click.option("--expr", required=True)
@click.option("--at", "at", type=float, required=True)
@click.option("--alpha", type=float, required=True)
@_operator_options
@_eval_options
@common_options
@handle_errors
def cmd_compare(definitions, defs, expr, at, alpha, beta, r, pmap, side, direction, step, rel_tol, levels,
                fmt, out, jobs):
    """Tabulate one function's derivative under several definitions.

    A definition is op@kernel (e.g. g@conformable), a kernel name (the
    N operator with that kernel) or a kernel-free operator (mult,
    point-quotient, yang, p). Default: every built-in kernel plus mult.
    """
    start = time.perf_counter()
    labels = list(definitions) + list(defs) or list(DEFAULT_DEFINITIONS)
    specs = [parse_definition(d, alpha, beta, r, pmap, side) for d in labels]
    f = parse(expr)
    cfg = diffops.EvalConfig(step, levels, rel_tol, direction)
    rows = parallel_map(_compare_row, [(lab, s, f, at, cfg) for lab, s in zip(labels, specs)], jobs)
    fmt = fmt or "csv"
    header = ("definition", "value", "err", "converged", "closed_form")
    flat = [(row["definition"], row["value"], row["error_estimate"], row["converged"], row["closed_form"])
            for row in rows]
    if fmt == "json":
        record = {"command": "compare", "inputs": {"expr": expr, "at": at, "alpha": alpha,
                                                    "definitions": labels},
                  "rows": rows, "converged": all(row["converged"] for row in rows),
                  "elapsed_ms": _elapsed_ms(start)}
        emit(render_json(record), out)
    elif fmt == "csv":
        emit(render_csv(header, flat), out)
    else:
        emit(render_table(header, flat), out)
    failed = [row for row in rows if "error" in row]
    for row in failed:
        click.echo(f"numerical failure: {row['definition']}: {row['error']}", err=True)
    if failed:
        raise SystemExit(EXIT_NUMERIC)


@cli.command("integrate")
@click.option("--kernel", required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--expr", required=True)
@click.option("--from", "t0", type=float, required=True, help="Lower limit t0.")
@click.option("--to", "t1", type=float, required=True, help="Upper limit t.")
@click.option("--abs-tol", type=float, default=integrals.DEFAULT_QUAD.abs_tol, show_default=True)
@click.option("--rel-tol", type=float, default=integrals.DEFAULT_QUAD.rel_tol, show_default=True)
@click.option("--max-subdivisions", type=int, default=integrals.DEFAULT_QUAD.max_subdivisions, show_default=True)
@common_options
@handle_errors
def cmd_integrate(kernel, alpha, expr, t0, t1, abs_tol, rel_tol, max_subdivisions, fmt, out, jobs):
    """Integrate f / F(s, alpha) from t0 to t."""
    start = time.perf_counter()
    cfg = integrals.QuadConfig(abs_tol, rel_tol, max_subdivisions)
    res = integrals.j_integral(get_kernel(kernel), alpha, parse(expr), t0, t1, cfg)
    fmt = fmt or "json"
    header = ("t0", "t", "value", "err", "subdivisions")
    row = (t0, t1, res.value, res.error_estimate, res.subdivisions_used)
    if fmt == "json":
        record = {"command": "integrate",
                  "inputs": {"kernel": kernel, "alpha": alpha, "expr": expr, "from": t0, "to": t1,
                             "abs_tol": abs_tol, "rel_tol": rel_tol, "max_subdivisions": max_subdivisions},
                  "value": res.value, "error_estimate": res.error_estimate,
                  "subdivisions_used": res.subdivisions_used, "converged": True,
                  "elapsed_ms": _elapsed_ms(start)}
        emit(render_json(record), out)
    elif fmt == "csv":
        emit(render_csv(header, [row]), out)
    else:
        emit(render_table(header, [row]), out)


@cli.command("solve")
@click.option("--kernel", required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--rhs", required=True, help="g(t, x) in N x = g(t, x).")
@click.option("--t0", type=float, required=True)
@click.option("--x0", type=float, required=True)
@click.option("--t-end", type=float, required=True)
@click.option("--rel-tol", type=float, default=odes.DEFAULT_STEP.rel_tol, show_default=True)
@click.option("--abs-tol", type=float, default=odes.DEFAULT_STEP.abs_tol, show_default=True)
@click.option("--fixed-step", type=float, default=None, help="Constant step; disables step control.")
@click.option("--samples", type=click.IntRange(min=0), default=0,
              help="Evenly spaced dense-output rows; 0 prints the solver's own points.")
@click.option("--picard-check", is_flag=True, help="Add the integral-form residual at every row.")
@common_options
@handle_errors
def cmd_solve(kernel, alpha, rhs, t0, x0, t_end, rel_tol, abs_tol, fixed_step, samples, picard_check,
              fmt, out, jobs):
    """Solve N x = g(t, x), x(t0) = x0 on [t0, t_end]."""
    start = time.perf_counter()
    if samples == 1:
        raise InputError("--samples must be 0 or at least 2")
    problem = odes.IVProblem(get_kernel(kernel), alpha, parse(rhs, odes.STATE_VARIABLES), t0, x0, t_end)
    traj = odes.solve_ivp(problem, odes.StepConfig(rel_tol, abs_tol, fixed_step=fixed_step))
    rows = traj.sample(samples) if samples else list(zip(traj.t, traj.x))
    residuals = odes.picard_residuals(problem, traj, [t for t, _ in rows]) if picard_check else None
    fmt = fmt or "csv"
    header = ("t", "x") + (("picard_residual",) if picard_check else ())
    table = [row + ((res,) if picard_check else ()) for row, res in zip(rows, residuals or [None] * len(rows))]
    if fmt == "json":
        record = {"command": "solve",
                  "inputs": {"kernel": kernel, "alpha": alpha, "rhs": rhs, "t0": t0, "x0": x0, "t_end": t_end,
                             "rel_tol": rel_tol, "abs_tol": abs_tol, "fixed_step": fixed_step,
                             "samples": samples},
                  "points": [t for t, _ in rows], "values": [x for _, x in rows], "value": traj.final,
                  "error_estimate": traj.max_local_error_estimate, "converged": True,
                  "accepted_steps": traj.accepted_steps, "rejected_steps": traj.rejected_steps,
                  "elapsed_ms": _elapsed_ms(start)}
        if picard_check:
            record["picard_residuals"] = residuals
            record["picard_residual"] = max(residuals)
        emit(render_json(record), out)
    elif fmt == "csv":
        emit(render_csv(header, table), out)
    else:
        emit(render_table(header, table), out)


@cli.command("verify")
@click.option("--suite", default="default", show_default=True, help="'default' or a JSON suite file.")
@click.option("--seed", type=int, default=None, help="Point-sampling seed (overrides $LOCALFRAC_SEED).")
@common_options
@handle_errors
def cmd_verify(suite, seed, fmt, out, jobs):
    """Run the property suite and report pass/fail per case."""
    if suite == "default":
        seed = verify.resolve_seed(seed)
        grid = verify.default_grid(seed)
    else:
        grid, seed = verify.load_suite(suite, seed)
    report = verify.run_suite(grid, seed, jobs, suite="default" if suite == "default" else os.path.basename(suite))
    fmt = fmt or "json"
    if fmt == "json":
        emit(report.to_json(), out)
    elif fmt == "csv":
        header = ("property", "item", "operator", "alpha", "functions", "points", "status", "residual")
        rows = [(r.case.property, r.case.item, r.case.operator, r.case.alpha, ";".join(r.case.functions),
                 ";".join(repr(p) for p in r.case.points), r.status, r.residual) for r in report.results]
        emit(render_csv(header, rows), out)
    else:
        emit(report.to_table(), out)
    if not report.ok:
        click.echo(f"verification failed: {report.totals['fail']} case(s)", err=True)
        raise SystemExit(EXIT_NUMERIC)


def main(argv: Optional[Sequence[str]] = None) -> None:
    cli.main(args=list(argv) if argv is not None else None, prog_name="localfrac")


if __name__ == "__main__":
    main()
