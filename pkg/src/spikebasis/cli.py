"""``spikebasis`` command line: sample, cost, search, verify, plotdata, sl-diverge.

Exit codes: 0 ok, 1 input error, 2 undefined cost, 3 provably no minimum,
4 verification failure. Option values resolve as flags, then the JSON
``--config`` file (keyed by command name), then built-in defaults.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__
from .costs import (
    cost_lp_closed,
    cost_lp_monte_carlo,
    cost_marginal_entropy,
    cost_kurtosis,
    marginal_entropy_spacing,
    write_batch_csv,
)
from .errors import SpikeBasisError, VerificationFailed
from .linalg import Basis, DictionaryClass, format_float, read_basis, write_basis_json
from .processes import Process, marginal_model, marginal_pdf, sample
from .search import SearchConfig, search_orthogonal
from .search.oracles import brute_force_2d, rotation2, sl_divergence_demo
from .search.theorems import verify_theorem_suite
from .serialize import write_json

SEED_ENV = "SPIKEBASIS_SEED"
DICTIONARIES = {"on": DictionaryClass.ORTHONORMAL, "slpm": DictionaryClass.VOLUME_PRESERVING,
                "gl": DictionaryClass.GENERAL_LINEAR}
PROCESS = click.Choice(["simple", "generalized"])


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def parse_n_range(text: str) -> list[int]:
    """``"2..6"`` (inclusive) or ``"2,4,5"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise click.BadParameter(f"bad n range {text!r}") from None


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise click.FileError(str(out), hint=str(exc)) from None
    return out


def _manifest(out: Path, command: str, config: dict, seed, outputs) -> None:
    write_json(
        {
            "command": command,
            "config": config,
            "seed": seed,
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "outputs": [str(p) for p in outputs],
        },
        out / f"{command}.manifest.json",
    )


def _load_config(ctx, _param, value):
    if value:
        try:
            data = json.loads(Path(value).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise click.BadParameter(f"cannot read config {value}: {exc}") from None
        if not isinstance(data, dict):
            raise click.BadParameter("config file must hold a JSON object")
        ctx.default_map = data
    return value


seed_option = click.option("--seed", type=int, default=0, envvar=SEED_ENV, show_default=True,
                           help=f"RNG seed (default from ${SEED_ENV}).")
out_option = click.option("--out", "out", type=click.Path(file_okay=False), default="out",
                          show_default=True, help="Output directory.")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config, is_eager=True,
              expose_value=False, help="JSON file of per-command option defaults.")
@click.version_option(__version__, prog_name="spikebasis")
def cli():
    """Best-basis costs, marginal laws and basis search for spike processes."""


@cli.command("sample")
@click.option("--process", type=PROCESS, default="generalized", show_default=True)
@click.option("--n", type=click.IntRange(min=1), required=True)
@click.option("--count", type=click.IntRange(min=0), default=1000, show_default=True)
@seed_option
@out_option
def cmd_sample(process, n, count, seed, out):
    """Draw spike realizations into samples.csv."""
    outdir = _outdir(out)
    batch = sample(process, n, count, seed)
    path = outdir / "samples.csv"
    batch.write_csv(path)
    _manifest(outdir, "sample", {"process": process, "n": n, "count": count}, seed, [path])
    click.echo(f"wrote {count} samples to {path}")


def _single_cost(b: Basis, process, cost, p, method, samples, seed):
    proc = Process.parse(process)
    if method == "exact":
        if cost != "ch" or proc is not Process.SIMPLE:
            raise click.UsageError("--method exact applies to --cost ch with --process simple")
        return cost_marginal_entropy(b, proc)
    if method == "mc":
        batch = sample(proc, b.n, samples, seed)
        if cost == "cp":
            return cost_lp_monte_carlo(b, p, batch)
        if cost == "ch" and proc is Process.GENERALIZED:
            cost_marginal_entropy(b, proc)  # refuses atomic marginals
            return marginal_entropy_spacing(b, batch)
        raise click.UsageError("--method mc supports --cost cp, and --cost ch for the generalized process")
    if cost == "cp":
        return cost_lp_closed(b, p, proc)
    if cost == "ckappa":
        if proc is not Process.GENERALIZED:
            raise click.UsageError("ckappa is defined for the generalized process")
        return cost_kurtosis(b)
    if proc is Process.SIMPLE:
        raise click.UsageError("simple-process ch is exact: use --method exact")
    return cost_marginal_entropy(b, proc)


@cli.command("cost")
@click.argument("basis_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--process", type=PROCESS, default="generalized", show_default=True)
@click.option("--cost", type=click.Choice(["cp", "ch", "ckappa"]), required=True)
@click.option("--p", type=float, default=1.0, show_default=True, help="Exponent for cp.")
@click.option("--method", type=click.Choice(["closed", "mc", "exact"]), default="closed", show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=100_000, show_default=True)
@seed_option
@out_option
def cmd_cost(basis_files, process, cost, p, method, samples, seed, out):
    """Evaluate a cost on one or more basis files (CSV or JSON)."""
    outdir = _outdir(out)
    rows = []
    for f in basis_files:
        b = read_basis(f)
        rep = _single_cost(b, process, cost, p, method, samples, seed)
        rows.append((b.name, rep))
        click.echo(f"{b.name}: {rep.cost_name} = {format_float(rep.value)} ({rep.method.value})")
    outputs = []
    if len(rows) == 1:
        path = outdir / "cost.json"
        write_json(rows[0][1].to_dict() | {"basis_id": rows[0][0]}, path)
        outputs.append(path)
    path = outdir / "cost.csv"
    write_batch_csv(rows, path)
    outputs.append(path)
    cfg = {"basis_files": list(basis_files), "process": process, "cost": cost, "p": p,
           "method": method, "samples": samples}
    _manifest(outdir, "cost", cfg, seed, outputs)


@cli.command("search")
@click.option("--dict", "dictionary", type=click.Choice(sorted(DICTIONARIES)), default="on", show_default=True)
@click.option("--cost", type=click.Choice(["cp", "ch", "ckappa"]), required=True)
@click.option("--p", type=float, default=1.0, show_default=True)
@click.option("--n", type=int, default=4, show_default=True)
@click.option("--process", type=PROCESS, default="generalized", show_default=True)
@click.option("--restarts", type=int, default=20, show_default=True)
@click.option("--max-iters", type=int, default=200, show_default=True)
@click.option("--step-tolerance", type=float, default=1e-10, show_default=True)
@click.option("--backend", type=click.Choice(["numba", "numpy"]), default=None)
@seed_option
@out_option
def cmd_search(dictionary, cost, p, n, process, restarts, max_iters, step_tolerance, backend, seed, out):
    """Multi-restart search for the best basis."""
    cfg = SearchConfig(n=n, cost=cost, p=p, process=process, dictionary=DICTIONARIES[dictionary],
                       restarts=restarts, max_iters=max_iters, step_tolerance=step_tolerance,
                       seed=seed, backend=backend)
    res = search_orthogonal(cfg)
    outdir = _outdir(out)
    paths = [outdir / "search.json", outdir / "search_trace.csv", outdir / "best_basis.json"]
    write_json(res.to_dict(), paths[0])
    res.write_trace_csv(paths[1])
    write_basis_json(res.best_basis, paths[2])
    _manifest(outdir, "search", cfg.to_dict(), seed, paths)
    click.echo(f"best {cost} = {format_float(res.best_cost)}; canonical residual vs {res.reference} = "
               f"{res.canonical_residual:.3g}; {res.restarts_agreeing}/{restarts} restarts agree")


@cli.command("verify")
@click.option("--n", "n_range", default="2..6", show_default=True, help="Range a..b or list a,b,c.")
@click.option("--restarts", type=int, default=20, show_default=True)
@click.option("--ensemble", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--backend", type=click.Choice(["numba", "numpy"]), default=None)
@click.option("--perturb-walsh", is_flag=True, hidden=True, help="Debug: corrupt the n=4 reference.")
@seed_option
@out_option
def cmd_verify(n_range, restarts, ensemble, backend, perturb_walsh, seed, out):
    """Reproduce every theorem numerically; exit 4 if any check fails."""
    ns = parse_n_range(n_range)
    report = verify_theorem_suite(ns, seed=seed, restarts=restarts, ensemble=ensemble,
                                  backend=backend, perturb_walsh=perturb_walsh)
    outdir = _outdir(out)
    path = outdir / "verify.json"
    write_json(report.to_dict(), path)
    cfg = {"n_range": ns, "restarts": restarts, "ensemble": ensemble, "perturb_walsh": perturb_walsh}
    _manifest(outdir, "verify", cfg, seed, [path])
    for e in report.entries:
        where = "" if e.n is None else f" n={e.n}"
        click.echo(f"{'PASS' if e.passed else 'FAIL'} {e.id}{where}: {e.label}")
    if not report.passed:
        raise VerificationFailed(f"{len(report.failures())} theorem check(s) failed")


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if isinstance(v, float) and math.isnan(v) else
                        format_float(v) if isinstance(v, float) else v for v in r])


DEFAULT_THETAS = ",".join(format_float(t) for t in np.linspace(0.088, math.pi / 4, 8))


@cli.command("plotdata")
@click.argument("kind", type=click.Choice(["marginal-curve", "cost-curve", "sl-diverge"]))
@click.option("--theta", default=DEFAULT_THETAS, help="marginal-curve: comma-separated angles.")
@click.option("--coordinate", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--y-max", type=float, default=3.0, show_default=True)
@click.option("--y-points", type=click.IntRange(min=2), default=601, show_default=True)
@click.option("--cost", type=click.Choice(["cp", "ch", "ckappa"]), default="ckappa", show_default=True)
@click.option("--process", type=PROCESS, default="generalized", show_default=True)
@click.option("--p", type=float, default=1.0, show_default=True)
@click.option("--grid-points", type=click.IntRange(min=1000), default=1000, show_default=True)
@click.option("--n", type=click.IntRange(min=2), default=3, show_default=True)
@click.option("--a", "a_values", default="1.5,2,4,8", show_default=True)
@out_option
def cmd_plotdata(kind, theta, coordinate, y_max, y_points, cost, process, p, grid_points, n, a_values, out):
    """CSV series for external plotting."""
    outdir = _outdir(out)
    path = outdir / f"plotdata_{kind.replace('-', '_')}.csv"
    if kind == "marginal-curve":
        ys = np.linspace(-y_max, y_max, y_points)
        rows = []
        for t in _floats(theta):
            dens = marginal_pdf(marginal_model(rotation2(t), coordinate), ys)
            rows += [(t, float(y), float(d)) for y, d in zip(ys, dens)]
        _write_rows(path, ["theta", "y", "density"], rows)
        cfg = {"theta": _floats(theta), "coordinate": coordinate, "y_max": y_max, "y_points": y_points}
    elif kind == "cost-curve":
        g = brute_force_2d(cost, grid_points, process, p)
        _write_rows(path, ["theta", "cost"], [(float(t), float(v)) for t, v in zip(g.thetas, g.values)])
        cfg = {"cost": cost, "process": process, "p": p, "grid_points": grid_points}
        click.echo(f"argmin theta = {format_float(g.theta_star)}, cost = {format_float(g.cost_star)}")
    else:
        demo = sl_divergence_demo(n, _floats(a_values))
        _write_sl_rows(path, demo)
        cfg = {"n": n, "a": _floats(a_values)}
    _manifest(outdir, "plotdata", {"kind": kind} | cfg, None, [path])
    click.echo(f"wrote {path}")


def _write_sl_rows(path, demo):
    _write_rows(path, ["a", "det", "cost", "oracle", "family_form", "scaled_form"],
                [(r.a, r.det, r.cost, r.oracle, r.family_form, r.scaled_form) for r in demo.rows])


@cli.command("sl-diverge")
@click.option("--n", type=click.IntRange(min=2), default=3, show_default=True)
@click.option("--a", "a_values", default="1.5,2,4,8", show_default=True)
@out_option
def cmd_sl_diverge(n, a_values, out):
    """Kurtosis cost along diag(a, 1/a, 1, ..., 1): unbounded below over SL±."""
    demo = sl_divergence_demo(n, _floats(a_values))
    outdir = _outdir(out)
    paths = [outdir / "sl_diverge.csv", outdir / "sl_diverge.json"]
    _write_sl_rows(paths[0], demo)
    write_json(demo.to_dict(), paths[1])
    _manifest(outdir, "sl-diverge", {"n": n, "a": _floats(a_values)}, None, paths)
    click.echo(f"n={n}: C_kappa = -{format_float(demo.scale)} * (a^4 + a^-4 + n - 2)")
    for r in demo.rows:
        click.echo(f"  a={format_float(r.a)}  C_kappa={format_float(r.cost)}  oracle={format_float(r.oracle)}")
    click.echo(f"agrees with oracle: {demo.all_agree}; strictly decreasing: {demo.decreasing}")


def main(argv=None) -> int:
    """Entry point returning the process exit code."""
    try:
        cli.main(args=argv, prog_name="spikebasis", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except SpikeBasisError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
