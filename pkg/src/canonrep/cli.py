"""Command-line entry point.

Subcommands: validate, represent, decouple, transport, bench, skorohod,
gen.  All exact constructions are deterministic; every stochastic
subcommand requires an explicit --seed (there is no wall-clock default),
so outputs are byte-reproducible on one platform.

Exit codes: 0 ok, 1 domain invariant violation, 2 I/O or parse error,
3 statistical gate failure.
"""

from __future__ import annotations

import csv
import functools
import sys

import click
import numpy as np

from . import bench as bench_mod
from . import embedding as emb
from .errors import FormatError, ProcessError
from .generate import random_process
from .jsonio import (
    FORMAT_VERSION,
    dump_json,
    load_json,
    pair_process_from_json,
    pair_process_to_json,
    process_from_json,
    process_to_json,
    representation_from_json,
    representation_to_json,
    transport_to_json,
)
from .martingale import construct_ci_copy, pair_law, represent_mds
from .process import joint_law, validate_process
from .representation import canonical_representation, law_of_representation
from .rng import GENERATOR_ID
from .stats import chi_square_gof
from .transport import build_transport, independent_coupling, verify_measure_preserving

EXIT_INVARIANT = 1
EXIT_FORMAT = 2
EXIT_STATISTICAL = 3

SIGNIFICANCE = 0.01


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FormatError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_FORMAT)
        except ProcessError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_INVARIANT)

    return wrapper


def _common(fn):
    fn = click.option("--quiet", is_flag=True, help="Suppress the summary line.")(fn)
    fn = click.option(
        "--format-version",
        type=int,
        default=FORMAT_VERSION,
        show_default=True,
        help="Expected schema version of the input files.",
    )(fn)
    return fn


def _check_format_version(version: int) -> None:
    if version != FORMAT_VERSION:
        raise FormatError(f"only format_version {FORMAT_VERSION} is supported")


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        click.echo(message)


@click.group()
def main() -> None:
    """Exact process representations, decoupling, transport, and embedding."""


# ---------------------------------------------------------------------------
# validate

@main.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@_common
@_guarded
def validate(in_path: str, quiet: bool, format_version: int) -> None:
    """Check a process file against all structural invariants."""
    _check_format_version(format_version)
    process = process_from_json(load_json(in_path))
    validate_process(process)
    _say(quiet, f"valid: dimension {process.dimension}, depth {process.depth}")


# ---------------------------------------------------------------------------
# represent

@main.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@_common
@_guarded
def represent(in_path: str, out_path: str, quiet: bool, format_version: int) -> None:
    """Build the canonical representation and verify law preservation."""
    _check_format_version(format_version)
    process = process_from_json(load_json(in_path))
    rep = canonical_representation(process)
    source_law = joint_law(process)
    preserved = law_of_representation(rep) == source_law
    dump_json(representation_to_json(rep), out_path)
    _say(quiet, f"law preserved: {str(preserved).lower()} "
                f"({len(source_law)} paths)")
    if not preserved:  # unreachable by construction; guard anyway
        sys.exit(EXIT_INVARIANT)


# ---------------------------------------------------------------------------
# decouple

@main.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@_common
@_guarded
def decouple(in_path: str, out_path: str, quiet: bool, format_version: int) -> None:
    """Emit the exact pair law of the decoupled copy of a representation.

    The direct component's marginal always reproduces the source law; the
    copy's marginal does so exactly when the source has history-independent
    step laws (the hypothesis under which the full law-equality statement
    holds), so it is reported informationally.
    """
    _check_format_version(format_version)
    rep = representation_from_json(load_json(in_path))
    pq = pair_law(construct_ci_copy(rep))
    source_law = law_of_representation(rep)
    marg_first = {}
    marg_second = {}
    d = pq.component_dim
    for path, prob in joint_law(pq.process).items():
        first = tuple(v[:d] for v in path)
        second = tuple(v[d:] for v in path)
        marg_first[first] = marg_first.get(first, 0) + prob
        marg_second[second] = marg_second.get(second, 0) + prob
    direct_ok = marg_first == source_law
    copy_ok = marg_second == source_law
    dump_json(pair_process_to_json(pq), out_path)
    _say(quiet, f"direct marginal preserved: {str(direct_ok).lower()}, "
                f"copy marginal matches source: {str(copy_ok).lower()} "
                f"({len(marg_first)} component paths)")
    if not direct_ok:
        sys.exit(EXIT_INVARIANT)


# ---------------------------------------------------------------------------
# transport

@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(),
              help="Pair-process JSON, or a representation JSON with --in2.")
@click.option("--in2", "in2_path", type=click.Path(), default=None,
              help="Second representation JSON (independent coupling mode).")
@click.option("--out", "out_path", required=True, type=click.Path())
@_common
@_guarded
def transport(
    in_path: str, in2_path: str, out_path: str, quiet: bool, format_version: int
) -> None:
    """Build per-step measure-preserving transports for a tangent pair."""
    _check_format_version(format_version)
    if in2_path is None:
        pq = pair_process_from_json(load_json(in_path))
        validate_process(pq.process)
    else:
        rep_a = representation_from_json(load_json(in_path))
        rep_b = representation_from_json(load_json(in2_path))
        pq = independent_coupling(rep_a, rep_b)
    maps = build_transport(pq)
    ok = all(verify_measure_preserving(tm).ok for tm in maps)
    dump_json(transport_to_json(maps, pq.process.dimension), out_path)
    n_sections = sum(len(tm.sections) for tm in maps)
    _say(quiet, f"measure preserving: {str(ok).lower()} "
                f"({len(maps)} steps, {n_sections} sections)")
    if not ok:
        sys.exit(EXIT_INVARIANT)


# ---------------------------------------------------------------------------
# bench

@main.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--p", "p_norm", type=float, default=2.0, show_default=True)
@click.option("--samples", type=int, default=10**5, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--depth-limit", type=int, default=4, show_default=True,
              help="Largest depth the enumeration oracle runs at.")
@click.option("--exact", is_flag=True,
              help="Force the enumeration oracle regardless of depth.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also write per-path sums of both sides.")
@_common
@_guarded
def bench(
    in_path: str,
    p_norm: float,
    samples: int,
    seed: int,
    depth_limit: int,
    exact: bool,
    out_path: str,
    csv_path: str,
    quiet: bool,
    format_version: int,
) -> None:
    """Estimate the decoupling norm ratio, backed by the exact oracle."""
    _check_format_version(format_version)
    rep = representation_from_json(load_json(in_path))
    report = bench_mod.decoupling_ratio(
        rep, p_norm, samples, seed,
        exact_depth_limit=rep.depth if exact else depth_limit,
    )
    doc = {
        "format_version": FORMAT_VERSION,
        "ratio": report.ratio,
        "stderr": report.stderr,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "p": report.p,
        "M": report.samples,
        "seed": report.seed,
        "oracle": {"exact_ratio": report.exact_ratio},
        "generator": report.generator,
    }
    dump_json(doc, out_path)
    if csv_path is not None:
        batch = bench_mod.sample_paths(construct_ci_copy(rep), samples, seed)
        sums_d = batch.direct.sum(axis=1)
        sums_e = batch.decoupled.sum(axis=1)
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            dim = rep.dimension
            writer.writerow(
                ["path"]
                + [f"sum_direct_{i}" for i in range(dim)]
                + [f"sum_decoupled_{i}" for i in range(dim)]
            )
            for m in range(samples):
                writer.writerow(
                    [m] + [repr(v) for v in sums_d[m]] + [repr(v) for v in sums_e[m]]
                )
    _say(quiet, f"ratio {report.ratio:.6f} +- {report.stderr:.6f} "
                f"(p={p_norm:g}, M={samples}, exact="
                f"{'none' if report.exact_ratio is None else f'{report.exact_ratio:.6f}'})")
    if report.exact_ratio is not None and (
        abs(report.ratio - report.exact_ratio) > bench_mod.CI_SIGMAS * report.stderr
    ):
        click.echo("statistical gate failed: estimate outside 5 SE of oracle",
                   err=True)
        sys.exit(EXIT_STATISTICAL)


# ---------------------------------------------------------------------------
# skorohod

def _parse_grid(grid_arg: str, depth: int) -> np.ndarray:
    if "," in grid_arg:
        times = np.array([float(x) for x in grid_arg.split(",") if x.strip() != ""])
    else:
        per_block = int(grid_arg)
        if per_block < 1:
            raise FormatError("grid must name at least one point per block")
        rel = (np.arange(per_block) + 0.5) / per_block
        times = np.concatenate([n + rel for n in range(depth)])
    return times


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--scheme", type=click.Choice(["exit_sample", "euler"]),
              default="exit_sample", show_default=True)
@click.option("--samples", type=int, default=10**4, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--grid", default="4", show_default=True,
              help="Points per block, or comma-separated absolute times.")
@click.option("--dt", type=float, default=5e-5, show_default=True)
@click.option("--cap", type=float, default=1e4, show_default=True,
              help="Censoring horizon for the time change.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Write (t, F_t) rows for up to 100 paths.")
@click.option("--svg", "svg_path", type=click.Path(), default=None,
              help="Static figure of up to 20 overlaid trajectories.")
@_common
@_guarded
def skorohod(
    in_path: str,
    scheme: str,
    samples: int,
    seed: int,
    grid: str,
    dt: float,
    cap: float,
    out_path: str,
    csv_path: str,
    svg_path: str,
    quiet: bool,
    format_version: int,
) -> None:
    """Embed a zero-mean process in planar Brownian motion and verify it."""
    _check_format_version(format_version)
    process = process_from_json(load_json(in_path))
    rep = represent_mds(process)
    cfg = emb.BrownianConfig(
        dt_base=dt, seed=seed, scheme=scheme, phi_cap=cap
    )
    batch = emb.simulate_increments(rep, samples, cfg)
    chi = increment_chi_square(rep, batch.increments)

    martingale_doc = None
    mart_ok = True
    need_grid = csv_path is not None or svg_path is not None or samples >= 10**4
    values = times = None
    if need_grid:
        times = _parse_grid(grid, rep.depth)
        values, _, _ = emb.simulate_grid_batch(rep, times, min(samples, 10**4), cfg)
        if values.shape[0] >= 10**4:
            report = emb.martingale_check(values, times)
            mart_ok = report.mean_ok() and report.slopes_ok()
            martingale_doc = {
                "checkpoints": [float(t) for t in report.checkpoints],
                "max_mean_over_se": report.max_mean_over_se,
                "slopes": [
                    {
                        "t_from": s.t_from,
                        "t_to": s.t_to,
                        "coordinate": s.coordinate,
                        "slope": s.slope,
                        "stderr": s.stderr,
                        "note": s.note,
                    }
                    for s in report.slopes
                ],
                "mean_ok": report.mean_ok(),
                "slopes_ok": report.slopes_ok(),
            }

    doc = {
        "format_version": FORMAT_VERSION,
        "scheme": scheme,
        "samples": samples,
        "seed": seed,
        "dt": dt,
        "cap": cap,
        "chi_square": {
            "statistic": chi.statistic,
            "dof": chi.dof,
            "p_value": chi.p_value,
            "pooled_categories": chi.pooled,
        },
        "martingale": martingale_doc,
        "restarts": batch.restarts,
        "coarse_blocks": batch.coarse_blocks,
        "generator": GENERATOR_ID,
    }
    dump_json(doc, out_path)

    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "t"] + [f"F_{i}" for i in range(rep.dimension)])
            for m in range(min(values.shape[0], 100)):
                for t, row in zip(times, values[m]):
                    writer.writerow([m, repr(float(t))] + [repr(float(v)) for v in row])
    if svg_path is not None:
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(trajectories_svg(times, values[:20, :, 0]))

    _say(quiet, f"chi-square p={chi.p_value:.4f}, restarts={batch.restarts}, "
                f"coarse_blocks={batch.coarse_blocks}, "
                f"martingale_ok={str(mart_ok).lower()}")
    if chi.p_value < SIGNIFICANCE or not mart_ok:
        click.echo("statistical gate failed", err=True)
        sys.exit(EXIT_STATISTICAL)


def increment_chi_square(rep, increments: np.ndarray):
    """Chi-square of sampled increment paths against the exact path law."""
    law = sorted(law_of_representation(rep).items())
    keys = {}
    probs = []
    for path, prob in law:
        arr = np.array([[float(c) for c in v] for v in path])
        key = arr.tobytes()
        if key in keys:  # distinct rationals rounding to identical floats
            probs[keys[key]] += float(prob)
        else:
            keys[key] = len(probs)
            probs.append(float(prob))
    counts = np.zeros(len(probs))
    for m in range(increments.shape[0]):
        counts[keys[np.ascontiguousarray(increments[m]).tobytes()]] += 1
    return chi_square_gof(counts, np.array(probs))


def trajectories_svg(times: np.ndarray, series: np.ndarray,
                     width: int = 640, height: int = 360) -> str:
    """Hand-rolled static SVG: time against the first coordinate."""
    t0, t1 = float(times.min()), float(times.max())
    lo = float(series.min())
    hi = float(series.max())
    if hi == lo:
        hi = lo + 1.0
    pad = 30.0

    def sx(t: float) -> float:
        return pad + (t - t0) / (t1 - t0 or 1.0) * (width - 2 * pad)

    def sy(v: float) -> float:
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
        f'y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
        f'stroke="black"/>',
    ]
    for row in series:
        points = " ".join(
            f"{sx(float(t)):.2f},{sy(float(v)):.2f}" for t, v in zip(times, row)
        )
        lines.append(
            f'<polyline points="{points}" fill="none" stroke="steelblue" '
            f'stroke-width="0.8" opacity="0.7"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# gen

@main.command()
@click.option("--depth", type=int, required=True)
@click.option("--branching", type=int, required=True)
@click.option("--dimension", type=int, default=1, show_default=True)
@click.option("--mds", is_flag=True, help="Force zero conditional means.")
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@_common
@_guarded
def gen(
    depth: int,
    branching: int,
    dimension: int,
    mds: bool,
    seed: int,
    out_path: str,
    quiet: bool,
    format_version: int,
) -> None:
    """Write a deterministic random process fixture."""
    _check_format_version(format_version)
    process = random_process(depth, branching, dimension, seed, mds=mds)
    dump_json(process_to_json(process), out_path)
    _say(quiet, f"wrote fixture: depth {depth}, branching <= {branching}, "
                f"dimension {dimension}, mds={str(mds).lower()}")


if __name__ == "__main__":
    main()
