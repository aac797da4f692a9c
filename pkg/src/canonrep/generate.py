"""Deterministic random fixtures: finite processes with exact rational laws.

The generator is seeded and platform-stable (random.Random), so a fixture
is reproducible byte for byte.  The zero-mean variant solves the last
atom of every node from the others, keeping conditional means exactly
zero in rational arithmetic.  The dyadic variant builds symmetric nodes
(value pairs v, -v with equal dyadic probabilities), which keeps every
value and probability exactly representable in binary floats.
"""

from __future__ import annotations

from fractions import Fraction
from random import Random

from .errors import SizeGuard
from .process import Branch, FiniteProcess, Node, PairProcess, Value

MAX_DEPTH = 8
MAX_BRANCHING = 8


def _guard(depth: int, branching: int) -> None:
    if not (1 <= depth <= MAX_DEPTH):
        raise SizeGuard(f"depth {depth} outside 1..{MAX_DEPTH}")
    if not (1 <= branching <= MAX_BRANCHING):
        raise SizeGuard(f"branching {branching} outside 1..{MAX_BRANCHING}")


def _random_probs(rng: Random, k: int) -> list[Fraction]:
    if k == 1:
        return [Fraction(1)]
    total = k * rng.randint(2, 8) + rng.randint(0, 5)
    cuts = sorted(rng.sample(range(1, total), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    return [Fraction(p, total) for p in parts]


def _random_value(rng: Random, dimension: int) -> Value:
    return tuple(
        Fraction(rng.randint(-6, 6), rng.randint(1, 6)) for _ in range(dimension)
    )


def random_process(
    depth: int,
    branching: int,
    dimension: int,
    seed: int,
    mds: bool = False,
) -> FiniteProcess:
    """Random fixture; with ``mds`` every conditional mean is exactly zero."""
    _guard(depth, branching)
    if dimension < 1:
        raise SizeGuard(f"dimension {dimension} must be at least 1")
    rng = Random(seed)

    def build(level: int) -> Node:
        k = rng.randint(1, branching)
        if mds and k == 1:
            values: list[Value] = [(Fraction(0),) * dimension]
        else:
            values = []
            while len(values) < k:
                v = _random_value(rng, dimension)
                if v not in values:
                    values.append(v)
        probs = _random_probs(rng, k)
        if mds and k > 1:
            # solve the last atom coordinatewise so the mean vanishes
            rest = [
                -sum((p * v[i] for p, v in zip(probs, values[:-1])), Fraction(0))
                / probs[-1]
                for i in range(dimension)
            ]
            values[-1] = tuple(rest)
        last = level + 1 == depth
        return Node(
            tuple(
                Branch(v, p, None if last else build(level + 1))
                for v, p in zip(values, probs)
            )
        )

    return FiniteProcess(dimension, depth, build(0))


def random_independent_process(
    depth: int,
    branching: int,
    dimension: int,
    seed: int,
    mds: bool = False,
) -> FiniteProcess:
    """Random fixture with one conditional law per level, shared by all
    histories (independent steps).

    This is the finite class whose decoupled copy has the same joint law
    as the source, so these fixtures exercise the full law-equality
    statement about decoupled copies.
    """
    _guard(depth, branching)
    if dimension < 1:
        raise SizeGuard(f"dimension {dimension} must be at least 1")
    rng = Random(seed)
    levels = []
    for _ in range(depth):
        k = rng.randint(1, branching)
        if mds and k == 1:
            values: list[Value] = [(Fraction(0),) * dimension]
        else:
            values = []
            while len(values) < k:
                v = _random_value(rng, dimension)
                if v not in values:
                    values.append(v)
        probs = _random_probs(rng, k)
        if mds and k > 1:
            rest = [
                -sum((p * v[i] for p, v in zip(probs, values[:-1])), Fraction(0))
                / probs[-1]
                for i in range(dimension)
            ]
            values[-1] = tuple(rest)
        levels.append(list(zip(values, probs)))

    def build(level: int) -> Node:
        last = level + 1 == depth
        return Node(
            tuple(
                Branch(v, p, None if last else build(level + 1))
                for v, p in levels[level]
            )
        )

    return FiniteProcess(dimension, depth, build(0))


def random_tangent_pair(
    depth: int,
    branching: int,
    dimension: int,
    seed: int,
) -> PairProcess:
    """Random tangent pair built from probability-preserving permutations.

    Every node draws equal-probability atoms and couples the second
    component as a random permutation of the first, so the two components
    share each conditional law exactly while being pathwise dependent
    (the negated coin is the two-atom case).
    """
    _guard(depth, branching)
    if dimension < 1:
        raise SizeGuard(f"dimension {dimension} must be at least 1")
    rng = Random(seed)

    def build(level: int) -> Node:
        k = rng.randint(1, branching)
        values: list[Value] = []
        while len(values) < k:
            v = _random_value(rng, dimension)
            if v not in values:
                values.append(v)
        order = list(range(k))
        rng.shuffle(order)
        prob = Fraction(1, k)
        last = level + 1 == depth
        return Node(
            tuple(
                Branch(
                    values[i] + values[order[i]],
                    prob,
                    None if last else build(level + 1),
                )
                for i in range(k)
            )
        )

    return PairProcess(FiniteProcess(2 * dimension, depth, build(0)), dimension)


def random_dyadic_mds(
    depth: int,
    pair_count: int,
    dimension: int,
    seed: int,
) -> FiniteProcess:
    """Zero-mean fixture whose values and probabilities are all dyadic.

    Each node holds ``pair_count`` symmetric value pairs (v, -v) with
    equal probabilities 1 / (2 * pair_count); pair_count must be a power
    of two so the probabilities stay dyadic.
    """
    _guard(depth, 2 * pair_count)
    if pair_count & (pair_count - 1):
        raise SizeGuard(f"pair_count {pair_count} must be a power of two")
    rng = Random(seed)
    prob = Fraction(1, 2 * pair_count)

    def dyadic_vec() -> Value:
        return tuple(
            Fraction(rng.randint(1, 8), 1 << rng.randint(0, 3))
            for _ in range(dimension)
        )

    def build(level: int) -> Node:
        values: list[Value] = []
        while len(values) < 2 * pair_count:
            v = dyadic_vec()
            neg = tuple(-c for c in v)
            if v not in values and neg not in values:
                values.extend([v, neg])
        values.sort()
        last = level + 1 == depth
        return Node(
            tuple(
                Branch(v, prob, None if last else build(level + 1))
                for v in values
            )
        )

    return FiniteProcess(dimension, depth, build(0))
