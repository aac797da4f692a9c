"""Continuous-time embedding of a zero-mean process in planar Brownian
motion.

Each step of the representation occupies one unit block of time.  Inside
block n, a planar Brownian motion runs from the disk center; its position
is read through the harmonic extension of the node's boundary data, the
block's contribution freezes at the boundary value once the motion exits
the disk, and the time change t -> t/(1-t) squeezes the almost-surely
finite exit into the unit block.  At integer times the accumulated sums
therefore reproduce the discrete sequence in law, because the exit angle
from the center is exactly uniform and the arcs carry the cell law.

Two schemes:

* ``exit_sample``: no paths; exit angles are drawn from the exact exit
  law (uniform from the center), one uniform per block from the path's
  master stream.  O(depth) per path.  Grid values between integer times
  are the start-of-block sums (intra-block dynamics are not simulated).
* ``euler``: discretized Brownian paths on a uniform grid in block
  time, with per-step variance taken from the time change.  Boundary
  crossing is resolved by linear interpolation of the crossing step and
  projection onto the circle.  Blocks that never exit before the time
  change exceeds ``phi_cap`` are censored: they restart with a fresh
  sub-stream and are counted in the report.

Randomness: path m owns the counter-based stream keyed by (seed, m);
the euler scheme carves it into per-block sub-streams, so any path can
be regenerated in isolation and paths may run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NotMartingaleDifference, StepTooCoarse, XOutOfRange
from .harmonic import TAU, Arc, ArcFunction, harmonic_extension
from .martingale import verify_zero_sections
from .representation import CellRepresentation, RepNode
from .rng import GENERATOR_ID, path_stream

_CHUNK = 4096
MIN_STEPS_BEFORE_EXIT = 1000
_MAX_ATTEMPTS = 64


def phi(t: float) -> float:
    """Time change mapping block time [0,1) onto inner time [0,inf)."""
    return t / (1.0 - t)


def phi_inverse(s: float) -> float:
    return s / (1.0 + s)


@dataclass(frozen=True)
class BrownianConfig:
    """Simulation knobs for the Brownian embedding."""

    dt_base: float = 5e-5
    boundary_eps: float = 0.01
    seed: int = 0
    scheme: str = "exit_sample"
    phi_cap: float = 1e4

    def __post_init__(self):
        if self.dt_base <= 0:
            raise ValueError("dt_base must be positive")
        if not (0.0 < self.boundary_eps < 0.1):
            raise ValueError("boundary_eps must lie in (0, 0.1)")
        if self.scheme not in ("exit_sample", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.phi_cap <= 0:
            raise ValueError("phi_cap must be positive")


@dataclass
class EmbeddedPath:
    """One simulated trajectory sampled on a grid.

    ``increments`` holds the exact per-block boundary values (so integer-
    time differences of the trajectory are available without float
    cancellation); ``exit_times`` are absolute times, NaN under
    ``exit_sample`` where no clock is simulated.
    """

    times: np.ndarray
    values: np.ndarray
    increments: np.ndarray
    exit_points: np.ndarray
    exit_times: np.ndarray
    restarts: int
    coarse_blocks: int
    scheme: str
    seed: int
    path_index: int
    generator: str = GENERATOR_ID


@dataclass
class IncrementBatch:
    """Exact per-block increments for many paths (no grid values)."""

    increments: np.ndarray  # (count, depth, dim)
    exit_angles: np.ndarray  # (count, depth)
    restarts: int
    coarse_blocks: int
    total_blocks: int
    seed: int
    scheme: str
    generator: str = GENERATOR_ID


# ---------------------------------------------------------------------------
# compiled node tree with arcs

class _DiskNode:
    __slots__ = ("bounds", "values", "arcs", "children")

    def __init__(self, node: RepNode, dimension: int):
        cums = [float(c) for c in node.cums]
        self.bounds = np.array(cums[1:-1])
        self.values = np.array([[float(c) for c in cell.value] for cell in node.cells])
        self.arcs = ArcFunction(
            tuple(
                Arc(TAU * cums[i], TAU * cums[i + 1], self.values[i])
                for i in range(len(node.cells))
            ),
            dimension,
        )
        self.children = [
            _DiskNode(cell.child, dimension) if cell.child is not None else None
            for cell in node.cells
        ]


def _compile_disk(rep: CellRepresentation) -> _DiskNode:
    return _DiskNode(rep.root, rep.dimension)


def _check_mds(rep: CellRepresentation) -> None:
    report = verify_zero_sections(rep)
    if report.max_abs != 0:
        raise NotMartingaleDifference(
            f"max section deviation {report.max_abs}", max_abs=report.max_abs
        )


def _step_sigmas(cfg: BrownianConfig) -> np.ndarray:
    """Per-step standard deviations induced by the time change."""
    t_cap = phi_inverse(cfg.phi_cap)
    n_steps = max(int(t_cap / cfg.dt_base), 1)
    t = np.arange(n_steps + 1) * cfg.dt_base
    return np.sqrt(np.diff(t / (1.0 - t)))


# ---------------------------------------------------------------------------
# one euler block

@dataclass
class _BlockResult:
    angle: float
    steps: int  # steps taken before the exit was declared
    rel_time: float  # block-relative exit time
    attempts: int
    positions: dict[int, tuple[float, float]] = field(default_factory=dict)


def _euler_block(
    rng_factory, sigmas: np.ndarray, dt: float, wanted: list[int]
) -> _BlockResult:
    """Run euler attempts for one block until the motion exits the disk.

    ``wanted`` are position indices (position m lives at block time m*dt)
    to record from the successful attempt, pre-exit only.
    """
    total_steps = len(sigmas)
    for attempt in range(_MAX_ATTEMPTS):
        rng = rng_factory(attempt)
        px, py = 0.0, 0.0
        positions: dict[int, tuple[float, float]] = {}
        for m in wanted:
            if m == 0:
                positions[0] = (0.0, 0.0)
        j0 = 0
        while j0 < total_steps:
            j1 = min(j0 + _CHUNK, total_steps)
            steps = rng.standard_normal((j1 - j0, 2)) * sigmas[j0:j1, None]
            xs = px + np.cumsum(steps[:, 0])
            ys = py + np.cumsum(steps[:, 1])
            hit = xs * xs + ys * ys >= 1.0
            k = int(np.argmax(hit)) if hit.any() else -1
            limit = k if k >= 0 else j1 - j0
            for m in wanted:
                i = m - 1 - j0
                if 0 <= i < limit:
                    positions[m] = (float(xs[i]), float(ys[i]))
            if k >= 0:
                qx = float(xs[k - 1]) if k > 0 else px
                qy = float(ys[k - 1]) if k > 0 else py
                dx = float(xs[k]) - qx
                dy = float(ys[k]) - qy
                a = dx * dx + dy * dy
                b = 2.0 * (qx * dx + qy * dy)
                c0 = qx * qx + qy * qy - 1.0
                frac = (-b + math.sqrt(b * b - 4.0 * a * c0)) / (2.0 * a)
                ex, ey = qx + frac * dx, qy + frac * dy
                norm = math.hypot(ex, ey)
                angle = math.atan2(ey / norm, ex / norm) % TAU
                steps_taken = j0 + k + 1
                return _BlockResult(
                    angle=angle,
                    steps=steps_taken,
                    rel_time=(j0 + k + frac) * dt,
                    attempts=attempt + 1,
                    positions=positions,
                )
            px, py = float(xs[-1]), float(ys[-1])
            j0 = j1
    raise RuntimeError(
        f"no disk exit in {_MAX_ATTEMPTS} attempts; raise phi_cap or dt_base"
    )


# ---------------------------------------------------------------------------
# full paths

def _grid_by_block(grid: np.ndarray, depth: int) -> list[list[tuple[int, float]]]:
    """Split absolute grid times into (grid index, block-relative time)."""
    per_block: list[list[tuple[int, float]]] = [[] for _ in range(depth)]
    for i, t in enumerate(grid):
        if not (0.0 <= t < depth):
            raise XOutOfRange(f"grid time {t} outside [0, {depth})")
        n = min(int(t), depth - 1)
        per_block[n].append((i, t - n))
    return per_block


def simulate_F(
    rep: CellRepresentation,
    grid,
    cfg: BrownianConfig,
    path_index: int = 0,
    enforce_coarse_guard: bool = True,
) -> EmbeddedPath:
    """Simulate one trajectory of the embedding, sampled on ``grid``.

    Grid times live in [0, depth).  The trajectory value at a grid time
    is the sum of the frozen boundary values of completed blocks plus, in
    the running block, the harmonic extension at the current Brownian
    position (euler) or zero (exit_sample, which starts every block at
    the center where zero-mean boundary data extends to zero).
    """
    _check_mds(rep)
    grid = np.asarray(grid, dtype=float)
    root = _compile_disk(rep)
    depth, dim = rep.depth, rep.dimension
    per_block = _grid_by_block(grid, depth)

    increments = np.zeros((depth, dim))
    exit_points = np.zeros(depth)
    exit_times = np.full(depth, math.nan)
    values = np.zeros((len(grid), dim))
    restarts = 0
    coarse = 0

    node: Optional[_DiskNode] = root
    partial = np.zeros(dim)

    if cfg.scheme == "exit_sample":
        rng = path_stream(cfg.seed, path_index)
        us = rng.random(depth)
        for n in range(depth):
            for gi, _rel in per_block[n]:
                values[gi] = partial
            cell = int(np.searchsorted(node.bounds, us[n], side="right"))
            increments[n] = node.values[cell]
            exit_points[n] = TAU * us[n]
            partial = partial + increments[n]
            node = node.children[cell]
    else:
        sigmas = _step_sigmas(cfg)
        for n in range(depth):
            wanted_rel = per_block[n]
            wanted = sorted(
                {min(int(rel / cfg.dt_base), len(sigmas)) for _gi, rel in wanted_rel}
            )
            res = _euler_block(
                lambda attempt, n=n: path_stream(
                    cfg.seed, path_index, sub=n * _MAX_ATTEMPTS + attempt
                ),
                sigmas,
                cfg.dt_base,
                wanted,
            )
            restarts += res.attempts - 1
            if res.steps < MIN_STEPS_BEFORE_EXIT:
                coarse += 1
            angle = res.angle
            cell = int(np.searchsorted(node.bounds, angle / TAU, side="right"))
            increments[n] = node.values[cell]
            exit_points[n] = angle
            exit_times[n] = n + res.rel_time
            for gi, rel in wanted_rel:
                if rel < res.rel_time:
                    m = min(int(rel / cfg.dt_base), len(sigmas))
                    px, py = res.positions[m]
                    z = complex(px, py)
                    r = abs(z)
                    cap = 1.0 - cfg.boundary_eps
                    if r >= cap:
                        z *= cap * (1.0 - 1e-12) / r
                    values[gi] = partial + harmonic_extension(
                        node.arcs, z, cfg.boundary_eps
                    )
                else:
                    values[gi] = partial + increments[n]
            partial = partial + increments[n]
            node = node.children[cell]
        if enforce_coarse_guard and depth and coarse / depth >= 0.01:
            raise StepTooCoarse(
                f"{coarse} of {depth} blocks exited in fewer than "
                f"{MIN_STEPS_BEFORE_EXIT} steps",
                coarse=coarse,
                total=depth,
            )

    return EmbeddedPath(
        times=grid,
        values=values,
        increments=increments,
        exit_points=exit_points,
        exit_times=exit_times,
        restarts=restarts,
        coarse_blocks=coarse,
        scheme=cfg.scheme,
        seed=cfg.seed,
        path_index=path_index,
    )


def simulate_increments(
    rep: CellRepresentation, count: int, cfg: BrownianConfig
) -> IncrementBatch:
    """Exact per-block increments for ``count`` paths (fast, no grid).

    Raises StepTooCoarse when at least 1% of all simulated euler blocks
    exited in fewer than the minimum number of steps.
    """
    _check_mds(rep)
    root = _compile_disk(rep)
    depth, dim = rep.depth, rep.dimension
    increments = np.empty((count, depth, dim))
    angles = np.empty((count, depth))
    restarts = 0
    coarse = 0

    if cfg.scheme == "exit_sample":
        for m in range(count):
            rng = path_stream(cfg.seed, m)
            us = rng.random(depth)
            node = root
            for n in range(depth):
                cell = int(np.searchsorted(node.bounds, us[n], side="right"))
                increments[m, n] = node.values[cell]
                angles[m, n] = TAU * us[n]
                node = node.children[cell]
    else:
        sigmas = _step_sigmas(cfg)
        for m in range(count):
            node = root
            for n in range(depth):
                res = _euler_block(
                    lambda attempt, m=m, n=n: path_stream(
                        cfg.seed, m, sub=n * _MAX_ATTEMPTS + attempt
                    ),
                    sigmas,
                    cfg.dt_base,
                    [],
                )
                restarts += res.attempts - 1
                if res.steps < MIN_STEPS_BEFORE_EXIT:
                    coarse += 1
                cell = int(np.searchsorted(node.bounds, res.angle / TAU, side="right"))
                increments[m, n] = node.values[cell]
                angles[m, n] = res.angle
                node = node.children[cell]
        total = count * depth
        if total and coarse / total >= 0.01:
            raise StepTooCoarse(
                f"{coarse} of {total} blocks exited in fewer than "
                f"{MIN_STEPS_BEFORE_EXIT} steps",
                coarse=coarse,
                total=total,
            )

    return IncrementBatch(
        increments=increments,
        exit_angles=angles,
        restarts=restarts,
        coarse_blocks=coarse,
        total_blocks=count * depth,
        seed=cfg.seed,
        scheme=cfg.scheme,
    )


def simulate_grid_batch(
    rep: CellRepresentation, grid, count: int, cfg: BrownianConfig
) -> tuple[np.ndarray, np.ndarray, int]:
    """Trajectory values on a common grid for many paths.

    Returns (values (count, len(grid), dim), increments (count, depth,
    dim), restarts).  StepTooCoarse aggregates over all blocks of the
    whole batch.
    """
    _check_mds(rep)
    grid = np.asarray(grid, dtype=float)
    values = np.empty((count, len(grid), rep.dimension))
    increments = np.empty((count, rep.depth, rep.dimension))
    restarts = 0
    coarse = 0
    for m in range(count):
        path = simulate_F(rep, grid, cfg, path_index=m, enforce_coarse_guard=False)
        values[m] = path.values
        increments[m] = path.increments
        restarts += path.restarts
        coarse += path.coarse_blocks
    total = count * rep.depth
    if cfg.scheme == "euler" and total and coarse / total >= 0.01:
        raise StepTooCoarse(
            f"{coarse} coarse blocks out of {total}", coarse=coarse, total=total
        )
    return values, increments, restarts


# ---------------------------------------------------------------------------
# martingale diagnostics

@dataclass
class SlopeFit:
    t_from: float
    t_to: float
    coordinate: int
    slope: Optional[float]
    stderr: Optional[float]
    bins: int
    note: str = ""


@dataclass
class MartingaleReport:
    checkpoints: np.ndarray
    means: np.ndarray  # (checkpoints, dim)
    stderrs: np.ndarray
    max_mean_over_se: float
    slopes: list[SlopeFit]

    def mean_ok(self, sigmas: float = 5.0) -> bool:
        return bool(self.max_mean_over_se <= sigmas)

    def slopes_ok(self, sigmas: float = 5.0, atol: float = 1e-9) -> bool:
        # atol absorbs float rounding when the fit is exact (stderr ~ 0)
        fitted = [s for s in self.slopes if s.slope is not None]
        return all(abs(s.slope - 1.0) <= sigmas * s.stderr + atol for s in fitted)


def martingale_check(
    values: np.ndarray,
    times,
    checkpoints=None,
    min_paths: int = 10**4,
    n_bins: int = 10,
) -> MartingaleReport:
    """Numerical martingale diagnostics for a batch of trajectories.

    ``values`` is (paths, len(times), dim).  Reports the largest
    |mean| / SE over checkpoints, and for each consecutive checkpoint
    pair the binned conditional-mean regression slope of the later value
    on the earlier one (a martingale has slope one).
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.ndim != 3 or values.shape[1] != len(times):
        raise ValueError("values must be (paths, len(times), dim)")
    if values.shape[0] < min_paths:
        raise ValueError(
            f"need at least {min_paths} paths, got {values.shape[0]}"
        )
    if checkpoints is None:
        checkpoints = times
    checkpoints = np.asarray(checkpoints, dtype=float)
    idx = []
    for t in checkpoints:
        matches = np.nonzero(np.isclose(times, t))[0]
        if len(matches) == 0:
            raise ValueError(f"checkpoint {t} is not a grid time")
        idx.append(int(matches[0]))

    n_paths = values.shape[0]
    sub = values[:, idx, :]
    means = sub.mean(axis=0)
    stderrs = sub.std(axis=0, ddof=1) / math.sqrt(n_paths)
    ratio = 0.0
    for mean, se in zip(means.ravel(), stderrs.ravel()):
        if se > 0:
            ratio = max(ratio, float(abs(mean) / se))
        elif mean != 0.0:
            ratio = math.inf
    slopes: list[SlopeFit] = []
    for a, b in zip(range(len(idx) - 1), range(1, len(idx))):
        for coord in range(values.shape[2]):
            x = sub[:, a, coord]
            y = sub[:, b, coord]
            slopes.append(
                _binned_slope(x, y, checkpoints[a], checkpoints[b], coord, n_bins)
            )
    return MartingaleReport(checkpoints, means, stderrs, ratio, slopes)


def _binned_slope(
    x: np.ndarray, y: np.ndarray, t_from: float, t_to: float, coord: int, n_bins: int
) -> SlopeFit:
    uniq = np.unique(x)
    if len(uniq) == 1:
        return SlopeFit(t_from, t_to, coord, None, None, 0, "constant conditioning value")
    edges = np.unique(np.quantile(x, np.linspace(0, 1, n_bins + 1)))
    if len(uniq) <= max(n_bins, 256) or len(edges) < 3:
        # frozen or lattice-valued conditioning: one bin per distinct value
        which = np.searchsorted(uniq, x)
        n_total = len(uniq)
    else:
        which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(edges) - 2)
        n_total = len(edges) - 1
    counts = np.bincount(which, minlength=n_total).astype(float)
    keep = counts > 0
    xbar = np.bincount(which, weights=x, minlength=n_total)[keep] / counts[keep]
    ybar = np.bincount(which, weights=y, minlength=n_total)[keep] / counts[keep]
    w = counts[keep]
    xw = float((w * xbar).sum() / w.sum())
    yw = float((w * ybar).sum() / w.sum())
    sxx = float((w * (xbar - xw) ** 2).sum())
    if sxx == 0.0:
        return SlopeFit(t_from, t_to, coord, None, None, int(keep.sum()), "no spread")
    slope = float((w * (xbar - xw) * (ybar - yw)).sum() / sxx)
    intercept = yw - slope * xw
    resid = y - (intercept + slope * x)
    dof = max(len(x) - 2, 1)
    stderr = math.sqrt(float((resid**2).sum()) / dof / float(((x - x.mean()) ** 2).sum()))
    return SlopeFit(t_from, t_to, coord, slope, stderr, int(keep.sum()))
