import json
import logging
from fractions import Fraction

import click

from config import (
    DEFAULT_DEPTH_CAP,
    DEFAULT_J_CAP,
    DEFAULT_KMAX,
    DEFAULT_TOL,
    LOG_LEVEL,
    NUMERIC_PRECISION,
    ORBIT_HORIZON,
    PRECISION_CAP,
    REPORTS_DIR,
    START_PRECISION,
)
from render_utils import format_record, format_reports, format_run_report, render_fan, report_rows
from utils.errors import CertificateFailure, FanlabError, SpecError
from utils.itinerary import t_star, witness_sequence
from utils.report_storage import dumps_report, load_saved_reports, save_report
from utils.sigma_model import in_basis, in_En, in_Kn, l2_norm, least_stratum
from utils.spec_parser import (
    load_json_arg,
    load_seq_spec,
    parse_basis,
    parse_sigma_point,
    parse_tower,
    seq_to_spec,
)
from utils.tower_arith import compare, precision_audit
from verifiers.counterexample import verify_claim9
from verifiers.dynamics import InJVerdict, endpoint_record, in_J, t_min_enclosure
from verifiers.strata import Verdict, claim8_chain, prop7_check, stratum_index, xn_member
from verifiers.suite_runner import SUITES, parse_int_list, run_suite

logger = logging.getLogger(__name__)


class FanlabGroup(click.Group):
    """Maps fanlab errors to exit codes: 2 for bad input, 1 for everything else."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except SpecError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(2)
        except CertificateFailure as e:
            click.echo(f"certificate failure: {e}", err=True)
            if e.record:
                click.echo(dumps_report(e.record), err=True, nl=False)
            ctx.exit(1)
        except FanlabError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(1)


def output_options(f):
    f = click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Also write the JSON report here.")(f)
    return f


def precision_options(f):
    f = click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Enclosure width target.")(f)
    f = click.option("--precision", type=click.IntRange(min=START_PRECISION, max=PRECISION_CAP),
                     default=NUMERIC_PRECISION, show_default=True, help="Binary digits for interval work.")(f)
    return f


def seq_option(required=True):
    return click.option("--seq", "seq_text", required=required,
                        help="zero, canonical:<n>:<c>, const:<v>, JSON text or a JSON file.")


def emit(title, data, status=0):
    """Write one result as JSON or text, save it if --out was given, and exit with ``status``."""
    ctx = click.get_current_context()
    params = {k: v for k, v in ctx.params.items() if k not in ("fmt", "out")}
    report = {"command": ctx.info_name, "params": params, **data}
    if ctx.params.get("out"):
        save_report(report, ctx.params["out"])
    if ctx.params.get("fmt") == "text":
        click.echo(format_record(title, data))
    else:
        click.echo(dumps_report(report), nl=False)
    if status:
        ctx.exit(status)


def _parse_height(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise SpecError("--t", f"expected a rational height such as 1, 0.5 or 3/2, got {text!r}")


def _json_arg(value, where):
    try:
        return load_json_arg(value)
    except json.JSONDecodeError as e:
        raise SpecError(where, f"column {e.colno}: {e.msg}")


@click.group(cls=FanlabGroup, name="fanlab")
@click.option("--verbose", is_flag=True, help="Log at debug level.")
def cli(verbose):
    """Certified computations for the exponential fan model."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@seq_option()
@click.option("--n", type=click.IntRange(min=0), default=0, show_default=True, help="Shift applied first.")
@output_options
def tstar(seq_text, n, out, fmt):
    """Certified t* of sigma^n(s) and the index attaining it."""
    s = load_seq_spec(seq_text)
    cert = t_star(s, n)
    emit("t*", {"seq": seq_to_spec(s), "n": n, **cert.as_dict()})


@cli.command()
@seq_option()
@click.option("--depth", type=click.IntRange(min=1), default=None, help="Fixed depth instead of a depth search.")
@click.option("--depth-cap", type=click.IntRange(min=1), default=DEFAULT_DEPTH_CAP, show_default=True)
@precision_options
@output_options
def tmin(seq_text, depth, depth_cap, precision, tol, out, fmt):
    """Enclosure of the minimal escape height t_s."""
    s = load_seq_spec(seq_text)
    if depth is not None:
        record = t_min_enclosure(s, depth, precision, tol)
    else:
        record = endpoint_record(s, tol, depth_cap, precision)
    emit("t_min", record.as_dict())


@cli.command()
@seq_option()
@click.option("--t", "t_text", required=True, help="Starting height, e.g. 1, 0.5 or 3/2.")
@click.option("--horizon", type=click.IntRange(min=0), default=ORBIT_HORIZON, show_default=True)
@precision_options
@output_options
def inj(seq_text, t_text, horizon, precision, tol, out, fmt):
    """Decide whether <t, s> is in the escape set."""
    s = load_seq_spec(seq_text)
    result = in_J(_parse_height(t_text), s, horizon, precision, tol)
    emit("in J", result.as_dict(), 1 if result.verdict is InJVerdict.UNKNOWN else 0)


@cli.command(name="compare")
@click.argument("left")
@click.argument("right")
@click.option("--numeric", is_flag=True, help="Skip the exact integer path.")
@click.option("--precision", type=click.IntRange(min=START_PRECISION, max=PRECISION_CAP), default=START_PRECISION, show_default=True)
@output_options
def compare_cmd(left, right, numeric, precision, out, fmt):
    """Certified order of two tower expressions."""
    a = parse_tower(left, "left")
    b = parse_tower(right, "right")
    with precision_audit() as audit:
        order = compare(a, b, exact=not numeric, precision=precision)
    emit("compare", {"margin": f"{a} {order.symbol} {b}", "order": order.value, "precision": audit.as_dict()})


@cli.command()
@seq_option()
@click.option("--n", type=click.IntRange(min=0), required=True)
@click.option("--kmax", type=click.IntRange(min=1), default=DEFAULT_KMAX, show_default=True)
@output_options
def xn(seq_text, n, kmax, out, fmt):
    """Membership of s in the stratum X_n."""
    s = load_seq_spec(seq_text)
    verdict = xn_member(s, n, kmax)
    emit(f"X_{n} membership", verdict.as_dict(), 1 if verdict.verdict is Verdict.UNKNOWN else 0)


@cli.command()
@seq_option()
@click.option("--n-max", type=click.IntRange(min=0), default=3, show_default=True)
@click.option("--kmax", type=click.IntRange(min=1), default=DEFAULT_KMAX, show_default=True)
@output_options
def stratum(seq_text, n_max, kmax, out, fmt):
    """Least n <= n-max with s certified in X_n; null when there is none."""
    s = load_seq_spec(seq_text)
    emit("stratum", {"least_n": stratum_index(s, n_max, kmax), "n_max": n_max})


@cli.command()
@seq_option()
@click.option("--k", type=click.IntRange(min=1), required=True)
@click.option("--j", type=click.IntRange(min=1), required=True)
@click.option("--l", "l_", type=click.IntRange(min=1), required=True)
@click.option("--n", type=click.IntRange(min=0), required=True)
@output_options
def prop7(seq_text, k, j, l_, n, out, fmt):
    """Propagate a large entry from index 2k^2 + j to the shift 2l^2."""
    s = load_seq_spec(seq_text)
    result = prop7_check(s, k, j, l_, n)
    emit("Proposition 7", {"k": k, "j": j, "l": l_, "n": n, **result.as_dict()})


@cli.command()
@click.option("--k", "k_text", default="1..6", show_default=True, help="k values: 2, 1..6 or 1,3,5.")
@output_options
def claim8(k_text, out, fmt):
    """F^(k^2)(1) - 1 > F^k(1) for each k, with the k = 1 failure reported."""
    results = [claim8_chain(k).as_dict() for k in parse_int_list(k_text, "--k")]
    fails = [r["k"] for r in results if r["result"] == "Fails"]
    emit("Claim 8", {"results": results, "fails_at": fails})


@cli.command()
@seq_option(required=False)
@click.option("--n", type=click.IntRange(min=0), required=True)
@click.option("--N", "n_grid", default="3..40", show_default=True, help="N values: 3..40 or 3,5,9.")
@click.option("--j-cap", type=click.IntRange(min=1), default=DEFAULT_J_CAP, show_default=True)
@click.option("--kmax", type=click.IntRange(min=1), default=None, help="Window for the X_(n+1) check; K + 1 when absent.")
@output_options
def claim9(seq_text, n, n_grid, j_cap, kmax, out, fmt):
    """Approximate a point of X_n by points of X_(n+1) outside closure(X_n)."""
    s = load_seq_spec(seq_text) if seq_text else witness_sequence(n)
    grid = parse_int_list(n_grid, "--N")
    reports = verify_claim9(s, n, grid, j_cap, kmax)
    emit("Claim 9", {
        "n": n,
        "seq": seq_to_spec(s),
        "K": {str(r.N): r.K for r in reports},
        "reports": [r.as_dict() for r in reports],
        "passed": all(r.passed for r in reports),
    })


@cli.command()
@click.option("--check", type=click.Choice(["kn", "en", "basis", "norm", "stratum"]), required=True)
@click.option("--point", required=True, help="Sigma-point JSON text or file.")
@click.option("--n", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--coord", type=click.IntRange(min=0), default=0, show_default=True,
              help="Coordinate used by the kn and norm checks.")
@click.option("--basis", "basis_text", default=None, help="Basis descriptor JSON text or file.")
@output_options
def sigma(check, point, n, coord, basis_text, out, fmt):
    """Membership checks in the finite-support sigma-product model."""
    q = parse_sigma_point(_json_arg(point, "--point"))
    if check == "kn":
        data = {"result": in_Kn(q.coord(coord), n)}
    elif check == "en":
        data = {"result": in_En(q, n)}
    elif check == "basis":
        if basis_text is None:
            raise SpecError("--basis", "required for --check basis")
        data = {"result": in_basis(q, parse_basis(_json_arg(basis_text, "--basis")))}
    elif check == "norm":
        data = {"norm": str(l2_norm(q.coord(coord)))}
    else:
        data = {"least_n": least_stratum(q)}
    emit(f"sigma {check}", {"check": check, "n": n, **data})


@cli.command()
@click.option("--spines", type=click.IntRange(min=1), default=64, show_default=True)
@click.option("--depth", type=click.IntRange(min=1), default=6, show_default=True)
@click.option("--out", "svg_out", type=click.Path(dir_okay=False), default="fan.svg", show_default=True)
@click.option("--family", default=None, help="JSON list of sequence specs, as text or a file.")
@click.option("--t-max", type=float, default=None)
@precision_options
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
def render(spines, depth, svg_out, family, t_max, precision, tol, fmt):
    """SVG and CSV picture of the spines of a finite sequence family."""
    seqs = None
    if family is not None:
        specs = _json_arg(family, "--family")
        if not isinstance(specs, list):
            raise SpecError("--family", "expected a list of sequence specs")
        seqs = [load_seq_spec(spec if isinstance(spec, str) else json.dumps(spec)) for spec in specs]
    try:
        figure = render_fan(spines, depth, svg_out, seqs, t_max, tol, precision)
    except ValueError as e:
        raise SpecError("render", str(e))
    emit("fan", {
        "svg": figure.svg_path,
        "csv": figure.csv_path,
        "spines": len(figure.table),
        "injective": bool(figure.injective),
    })


@cli.command()
@click.option("--suite", type=click.Choice(SUITES), required=True)
@click.option("--config", "config_text", default=None, help="JSON overrides for the suite defaults.")
@click.option("--save", is_flag=True, help="Also keep a timestamped copy under the reports folder.")
@output_options
def verify(suite, config_text, save, out, fmt):
    """Run an acceptance suite and report every verdict."""
    config = _json_arg(config_text, "--config") if config_text else {}
    if not isinstance(config, dict):
        raise SpecError("--config", "expected a JSON object")
    ctx = click.get_current_context()
    report = run_suite(suite, config, command=[ctx.info_name, "--suite", suite])
    data = report.as_dict()
    if out:
        save_report(data, out)
    if save:
        save_report(data, name=suite)
    if fmt == "text":
        click.echo(format_run_report(report))
    else:
        click.echo(dumps_report(data), nl=False)
    if report.exit_status:
        ctx.exit(report.exit_status)


@cli.command(name="reports")
@click.option("--folder", type=click.Path(file_okay=False), default=REPORTS_DIR, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
def reports_cmd(folder, fmt):
    """List the reports saved in a folder."""
    rows = report_rows(load_saved_reports(folder))
    if fmt == "text":
        click.echo(format_reports(rows))
    else:
        click.echo(dumps_report({"folder": folder, "reports": rows}), nl=False)


if __name__ == "__main__":
    cli()
