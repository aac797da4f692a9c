"""Zero-mean-section representations and decoupled tangent copies.

A martingale-difference process (zero conditional mean at every prefix)
is represented so that every node partition integrates to the zero
vector: sum over cells of length times value is exactly zero.

The decoupled copy lives on the product square [0,1]^N x [0,1]^N: the
direct sequence reads its own coordinates, the copy re-reads the same
history but feeds a fresh coordinate into the last slot of each step.
The copy is tangent to the direct sequence and is conditionally
independent given the first coordinate block, which is the canonical way
to decouple.  The copy is a lazy view over the base tree; only
``pair_law`` materializes the exact joint law, by enumerating history
cell chains and, per chain, an independent cell per step for the copy.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import NotMartingaleDifference, XOutOfRange
from .process import (
    ZERO,
    Branch,
    CheckResult,
    FiniteProcess,
    Node,
    PairProcess,
    Value,
    ValuePath,
    _class_children,
    _class_law,
    _prefix_class,
    fmt_prefix,
    is_mds,
)
from .representation import (
    CellRepresentation,
    RepNode,
    canonical_representation,
)


@dataclass(frozen=True)
class ZeroSectionReport:
    """Per-node section integrals of a representation.

    ``max_abs`` is the largest coordinate-wise absolute deviation from
    zero across all nodes (an exact rational); it is zero exactly when
    the representation has zero-mean sections everywhere.
    """

    max_abs: Fraction
    sections: tuple[tuple[ValuePath, Value], ...]  # (prefix, section integral)


def verify_zero_sections(r: CellRepresentation) -> ZeroSectionReport:
    """Integrate every node partition exactly and report the deviations."""
    sections: list[tuple[ValuePath, Value]] = []
    worst = ZERO

    def walk(node: RepNode, prefix: ValuePath) -> None:
        nonlocal worst
        mean = [ZERO] * r.dimension
        for cell in node.cells:
            ln = cell.interval.length
            for i, c in enumerate(cell.value):
                mean[i] += ln * c
        sections.append((prefix, tuple(mean)))
        worst = max(worst, max((abs(c) for c in mean), default=ZERO))
        for cell in node.cells:
            if cell.child is not None:
                walk(cell.child, prefix + (cell.value,))

    walk(r.root, ())
    return ZeroSectionReport(worst, tuple(sections))


def represent_mds(p: FiniteProcess) -> CellRepresentation:
    """Canonical representation of a martingale-difference process.

    Rejects inputs with a nonzero conditional mean anywhere, and verifies
    on the way out that every section integral of the result is exactly
    zero.
    """
    check = is_mds(p)
    if not check.ok:
        raise NotMartingaleDifference(
            f"nonzero conditional mean at {fmt_prefix(check.witness['prefix'])}",
            **check.witness,
        )
    r = canonical_representation(p)
    report = verify_zero_sections(r)
    assert report.max_abs == 0  # guaranteed by the exact mean check above
    return r


@dataclass(frozen=True)
class DecoupledRepresentation:
    """Lazy decoupled view of a representation on the product square.

    ``evaluate_pair((x_1..x_N), (y_1..y_N))`` walks the history with the
    x coordinates; at step n the direct sequence reads the cell at x_n
    and the copy reads the cell at y_n of the same node.
    """

    base: CellRepresentation

    def evaluate_pair(self, xs, ys) -> tuple[ValuePath, ValuePath]:
        xs = [Fraction(x) for x in xs]
        ys = [Fraction(y) for y in ys]
        depth = self.base.depth
        if len(xs) != depth or len(ys) != depth:
            raise XOutOfRange(
                f"expected {depth} coordinates in each block, got "
                f"{len(xs)} and {len(ys)}"
            )
        for k, t in enumerate(xs + ys):
            if not (0 < t < 1):
                raise XOutOfRange(f"coordinate {k + 1} = {t} outside (0,1)")
        node = self.base.root
        direct, copy = [], []
        for x, y in zip(xs, ys):
            xcell = node.cells[bisect_right(node.cums, x) - 1]
            ycell = node.cells[bisect_right(node.cums, y) - 1]
            direct.append(xcell.value)
            copy.append(ycell.value)
            node = xcell.child
        return tuple(direct), tuple(copy)


def construct_ci_copy(r: CellRepresentation) -> DecoupledRepresentation:
    """Wrap a representation as its canonical decoupled tangent copy."""
    return DecoupledRepresentation(r)


def pair_law(d: DecoupledRepresentation) -> PairProcess:
    """Exact joint law of (direct, copy) as a 2d-valued pair process.

    The tree is adapted to the pair filtration: at each node the branch
    over (direct value, copy value) has probability length(x cell) times
    length(y cell), and the child continues along the x cell (the copy's
    history is driven by the direct coordinates).
    """
    dim = d.base.dimension

    def build(node: RepNode) -> Node:
        branches = []
        for xcell in node.cells:
            child = build(xcell.child) if xcell.child is not None else None
            for ycell in node.cells:
                branches.append(
                    Branch(
                        xcell.value + ycell.value,
                        xcell.interval.length * ycell.interval.length,
                        child,
                    )
                )
        return Node(tuple(branches))

    process = FiniteProcess(2 * dim, d.base.depth, build(d.base.root))
    return PairProcess(process, dim)


def component_conditional_means(pq: PairProcess, which: int) -> CheckResult:
    """Exact zero-mean check for one component under the pair filtration."""
    d = pq.component_dim
    zero = (ZERO,) * d
    stack = [((), _prefix_class(pq.process, ()))]
    while stack:
        prefix, cls = stack.pop()
        mean = list(zero)
        for v, q in _class_law(cls).items():
            part = v[:d] if which == 0 else v[d:]
            for i, c in enumerate(part):
                mean[i] += q * c
        if tuple(mean) != zero:
            return CheckResult(False, {"prefix": prefix, "mean": tuple(mean)})
        if len(prefix) + 1 < pq.process.depth:
            for v, sub in _class_children(cls).items():
                stack.append((prefix + (v,), sub))
    return CheckResult(True, None)
