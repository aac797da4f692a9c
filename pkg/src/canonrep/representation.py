"""Canonical representation of a finite process on the unit cube.

Each step of a finite process becomes a piecewise-constant function of one
coordinate of [0,1]^N: the node's conditional law is laid out as a
partition of [0,1) into half-open cells whose lengths are the conditional
probabilities, with values in strictly ascending canonical order (the
increasing rearrangement of the conditional law).  Laying cells out this
way is exactly what preserves the joint law.

Boundary convention: cells are half-open on the right, so a coordinate
sitting exactly on a cell boundary belongs to the cell on its right.
The sup-style quantile would assign boundary points to the left atom
instead; boundaries carry no mass, so no law is affected.

Everything here is exact rational arithmetic.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import UnreachablePath, UnreachablePrefix, XOutOfRange
from .process import (
    ONE,
    ZERO,
    FiniteProcess,
    Node,
    PathLaw,
    Value,
    ValuePath,
    conditional_law,
    fmt_prefix,
    fmt_value,
    validate_process,
)


@dataclass(frozen=True)
class Interval:
    """Half-open interval [lo, hi) inside [0, 1]."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not (0 <= self.lo < self.hi <= 1):
            raise XOutOfRange(f"not a subinterval of [0,1): [{self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x < self.hi

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class Cell:
    interval: Interval
    value: Value
    child: Optional["RepNode"]


@dataclass(frozen=True)
class RepNode:
    cells: tuple[Cell, ...]
    cums: tuple[Fraction, ...]  # cumulative left endpoints, 0 .. 1


@dataclass(frozen=True)
class CellRepresentation:
    """Nested interval partitions of [0,1) realizing an adapted sequence."""

    dimension: int
    depth: int
    root: RepNode


def _make_rep_node(cells: list[Cell]) -> RepNode:
    cums = [c.interval.lo for c in cells] + [cells[-1].interval.hi]
    return RepNode(tuple(cells), tuple(cums))


# ---------------------------------------------------------------------------
# conditional cdf / quantile on the source process

def conditional_cdf(p: FiniteProcess, prefix: ValuePath, t: Value) -> Fraction:
    """Pr(next value < t | prefix) under strict lexicographic order."""
    law = conditional_law(p, prefix)
    total = ZERO
    for v, q in law:
        if v < tuple(t):
            total += q
    return total


def quantile_function(p: FiniteProcess, prefix: ValuePath, x) -> Value:
    """Conditional quantile at level x in (0, 1).

    Returns the atom whose cumulative cell [cdf(v), cdf(next)) contains x;
    a level exactly on a boundary takes the atom on the right.  This
    equals evaluating the node's cell partition at x.
    """
    x = Fraction(x)
    if not (0 < x < 1):
        raise XOutOfRange(f"quantile level {x} outside (0,1)")
    law = conditional_law(p, prefix)
    cum = ZERO
    for v, q in law:
        cum += q
        if x < cum:
            return v
    return law[-1][0]  # x in [last boundary, 1)


# ---------------------------------------------------------------------------
# construction

def canonical_representation(p: FiniteProcess) -> CellRepresentation:
    """Build the nested-partition representation whose law equals ``p``'s.

    Sibling branches with equal values are aggregated (their probabilities
    summed and their subtrees merged as a mixture) before sorting, so each
    node of the result carries strictly ascending values.
    """
    validate_process(p)
    root = _build_node([(p.root, ONE)], p.depth)
    return CellRepresentation(p.dimension, p.depth, root)


def _build_node(mixture: list[tuple[Node, Fraction]], steps_left: int) -> RepNode:
    groups: dict[Value, Fraction] = {}
    children: dict[Value, list[tuple[Node, Fraction]]] = {}
    for node, w in mixture:
        for br in node.branches:
            groups[br.value] = groups.get(br.value, ZERO) + w * br.prob
            if br.child is not None:
                children.setdefault(br.value, []).append((br.child, w * br.prob))
    cells: list[Cell] = []
    lo = ZERO
    for v in sorted(groups):
        total = groups[v]
        hi = lo + total
        child = None
        if steps_left > 1:
            sub = [(n, sw / total) for n, sw in children[v]]
            child = _build_node(sub, steps_left - 1)
        cells.append(Cell(Interval(lo, hi), v, child))
        lo = hi
    assert lo == ONE
    return _make_rep_node(cells)


# ---------------------------------------------------------------------------
# evaluation and law extraction

def _locate_cell(node: RepNode, x) -> Cell:
    return node.cells[bisect_right(node.cums, x) - 1]


def evaluate(r: CellRepresentation, xs) -> ValuePath:
    """Value path at a point of the open unit cube.

    Walks the nested partitions: at step k the cell containing the k-th
    coordinate emits its value and selects the sub-partition.
    """
    xs = [Fraction(x) for x in xs]
    if len(xs) != r.depth:
        raise XOutOfRange(f"expected {r.depth} coordinates, got {len(xs)}")
    for k, x in enumerate(xs):
        if not (0 < x < 1):
            raise XOutOfRange(f"coordinate {k + 1} = {x} outside (0,1)")
    node: Optional[RepNode] = r.root
    out = []
    for x in xs:
        cell = _locate_cell(node, x)
        out.append(cell.value)
        node = cell.child
    return tuple(out)


def law_of_representation(r: CellRepresentation) -> PathLaw:
    """Exact pushforward of Lebesgue measure under the representation."""
    law: PathLaw = {}

    def walk(node: RepNode, path: ValuePath, prob: Fraction) -> None:
        for cell in node.cells:
            q = prob * cell.interval.length
            full = path + (cell.value,)
            if cell.child is None:
                law[full] = law.get(full, ZERO) + q
            else:
                walk(cell.child, full, q)

    walk(r.root, (), ONE)
    return law


def coordinate_recovery(r: CellRepresentation, path: ValuePath) -> tuple[Interval, ...]:
    """Chain of cells whose values spell ``path``.

    Evaluating the representation at any point of the returned cells
    reproduces the path.
    """
    node: Optional[RepNode] = r.root
    out = []
    for k, v in enumerate(path):
        if node is None:
            raise UnreachablePath(
                f"path longer than representation depth {r.depth}", path=path
            )
        hit = None
        for cell in node.cells:
            if cell.value == v:
                hit = cell
                break
        if hit is None:
            raise UnreachablePath(
                f"value {fmt_value(v)} not present at step {k + 1} after "
                f"{fmt_prefix(tuple(path[:k]))}",
                path=path,
                step=k + 1,
            )
        out.append(hit.interval)
        node = hit.child
    return tuple(out)


def locate_node(r: CellRepresentation, prefix: ValuePath) -> RepNode:
    """Sub-partition reached by a realizable value prefix."""
    node: Optional[RepNode] = r.root
    for k, v in enumerate(prefix):
        if node is None:
            raise UnreachablePrefix(
                f"prefix of length {len(prefix)} exceeds depth {r.depth}",
                prefix=prefix,
            )
        hit = None
        for cell in node.cells:
            if cell.value == v:
                hit = cell
                break
        if hit is None:
            raise UnreachablePrefix(
                f"value {fmt_value(v)} not present at step {k + 1}",
                prefix=prefix,
                step=k + 1,
            )
        node = hit.child
    if node is None:
        raise UnreachablePrefix(
            f"prefix of length {len(prefix)} reaches past the last step",
            prefix=prefix,
        )
    return node


# ---------------------------------------------------------------------------
# augmentation (tie-break coordinates)

@dataclass(frozen=True)
class AffineMap:
    """Exact increasing affine map x -> scale*x + shift."""

    scale: Fraction
    shift: Fraction

    def apply(self, x) -> Fraction:
        return self.scale * Fraction(x) + self.shift

    def invert(self, y) -> Fraction:
        return (Fraction(y) - self.shift) / self.scale


def tie_break_map(iv: Interval) -> AffineMap:
    """The increasing affine bijection from [lo, hi) onto [0, 1)."""
    scale = 1 / iv.length
    return AffineMap(scale, -iv.lo * scale)


@dataclass(frozen=True)
class AugNode:
    maps: tuple[AffineMap, ...]
    children: tuple[Optional["AugNode"], ...]


@dataclass(frozen=True)
class AugmentedRepresentation:
    """A representation plus per-cell affine tie-break maps onto [0, 1).

    The pair (cell value, tie-break coordinate) is strictly increasing in
    the underlying coordinate within every node, which restores
    invertibility that piecewise-constant steps cannot have on their own.
    """

    base: CellRepresentation
    root: AugNode


def augment(r: CellRepresentation) -> AugmentedRepresentation:
    def build(node: RepNode) -> AugNode:
        maps = tuple(tie_break_map(c.interval) for c in node.cells)
        kids = tuple(build(c.child) if c.child is not None else None for c in node.cells)
        return AugNode(maps, kids)

    return AugmentedRepresentation(r, build(r.root))


def evaluate_augmented(a: AugmentedRepresentation, xs) -> tuple[tuple[Value, Fraction], ...]:
    """Per step, the cell value plus the exact tie-break coordinate."""
    xs = [Fraction(x) for x in xs]
    if len(xs) != a.base.depth:
        raise XOutOfRange(f"expected {a.base.depth} coordinates, got {len(xs)}")
    for k, x in enumerate(xs):
        if not (0 < x < 1):
            raise XOutOfRange(f"coordinate {k + 1} = {x} outside (0,1)")
    node, anode = a.base.root, a.root
    out = []
    for x in xs:
        idx = bisect_right(node.cums, x) - 1
        cell = node.cells[idx]
        out.append((cell.value, anode.maps[idx].apply(x)))
        node, anode = cell.child, anode.children[idx]
    return tuple(out)


def locate_aug_node(a: AugmentedRepresentation, prefix: ValuePath) -> tuple[RepNode, AugNode]:
    """Base node and its mirror of tie-break maps at a value prefix."""
    node, anode = a.base.root, a.root
    for k, v in enumerate(prefix):
        if node is None:
            raise UnreachablePrefix(
                f"prefix of length {len(prefix)} exceeds depth {a.base.depth}",
                prefix=prefix,
            )
        idx = None
        for i, cell in enumerate(node.cells):
            if cell.value == v:
                idx = i
                break
        if idx is None:
            raise UnreachablePrefix(
                f"value {fmt_value(v)} not present at step {k + 1}", prefix=prefix
            )
        node, anode = node.cells[idx].child, anode.children[idx]
    if node is None or anode is None:
        raise UnreachablePrefix(
            f"prefix of length {len(prefix)} reaches past the last step",
            prefix=prefix,
        )
    return node, anode
