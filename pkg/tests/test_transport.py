from fractions import Fraction as F
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canonrep import (
    Branch,
    FiniteProcess,
    Node,
    NotAnAtom,
    NotTangent,
    PairProcess,
    XOutOfRange,
    augment,
    build_transport,
    canonical_representation,
    construct_ci_copy,
    deinterleave,
    evaluate_augmented,
    generalized_inverse,
    independent_coupling,
    interleave,
    pair_from_identical,
    pair_law,
    random_process,
    verify_measure_preserving,
    verify_transport_consistency,
)
from canonrep.representation import Interval
from canonrep.transport import (
    IntervalPair,
    InterleavingMap,
    SectionTransport,
    TransportMap,
)



# ---------------------------------------------------------------------------
# generalized inverse

def test_generalized_inverse_fair_coin(fair_coin):
    a = augment(canonical_representation(fair_coin))
    x = generalized_inverse(a, (), (F(-1),), F(1, 2))
    assert x == F(1, 4)  # midpoint of [0, 1/2)


def test_generalized_inverse_skew(skew_mds):
    a = augment(canonical_representation(skew_mds))
    # cell [1/3, 1) carries value +1; tie 0 maps to the left endpoint
    assert generalized_inverse(a, (), (F(1),), F(0)) == F(1, 3)


def test_generalized_inverse_not_an_atom(fair_coin):
    a = augment(canonical_representation(fair_coin))
    with pytest.raises(NotAnAtom):
        generalized_inverse(a, (), (F(0),), F(1, 2))


def test_generalized_inverse_round_trip():
    p = random_process(3, 4, 1, seed=21)
    a = augment(canonical_representation(p))
    rng = Random(4)
    for _ in range(50):
        xs = [F(rng.randrange(1, 997), 997) for _ in range(3)]
        steps = evaluate_augmented(a, xs)
        prefix = ()
        for k, (value, tie) in enumerate(steps):
            x = generalized_inverse(a, prefix, value, tie)
            assert x == xs[k]
            prefix = prefix + (value,)


# ---------------------------------------------------------------------------
# transport construction

def test_transport_identity_for_pathwise_pair(sign_flip):
    pq = pair_from_identical(sign_flip)
    maps = build_transport(pq)
    for tm in maps:
        for section in tm.sections:
            for pair in section.pairs:
                assert pair.source == pair.target


def test_transport_swaps_halves_for_negated_coin():
    # first component fair coin, second its negation
    root = Node(
        (
            Branch((F(-1), F(1)), F(1, 2), None),
            Branch((F(1), F(-1)), F(1, 2), None),
        )
    )
    pq = PairProcess(FiniteProcess(2, 1, root), 1)
    (tm,) = build_transport(pq)
    (section,) = tm.sections
    mapped = {
        (p.source.lo, p.source.hi): (p.target.lo, p.target.hi)
        for p in section.pairs
    }
    assert mapped == {
        (F(0), F(1, 2)): (F(1, 2), F(1)),
        (F(1, 2), F(1)): (F(0), F(1, 2)),
    }


def test_transport_rejects_non_tangent():
    root = Node(
        (
            Branch((F(-1), F(0)), F(1, 2), None),
            Branch((F(1), F(0)), F(1, 2), None),
        )
    )
    pq = PairProcess(FiniteProcess(2, 1, root), 1)
    with pytest.raises(NotTangent):
        build_transport(pq)


def test_transport_consistency_on_decoupled_pairs():
    rng = Random(17)
    for _ in range(6):
        p = random_process(rng.randint(1, 3), rng.randint(1, 3), 1,
                           seed=rng.randrange(10**9))
        pq = pair_law(construct_ci_copy(canonical_representation(p)))
        base = canonical_representation(pq.process)
        maps = build_transport(pq, base)
        assert all(verify_measure_preserving(tm).ok for tm in maps)
        res = verify_transport_consistency(base, maps, pq.component_dim,
                                           points_per_section=200, seed=5)
        assert res.ok, res.witness


def test_transport_consistency_on_permutation_pairs():
    from canonrep import random_tangent_pair

    rng = Random(23)
    for _ in range(6):
        pq = random_tangent_pair(rng.randint(1, 3), rng.randint(2, 4), 1,
                                 seed=rng.randrange(10**9))
        from canonrep import are_tangent

        assert are_tangent(pq).ok
        base = canonical_representation(pq.process)
        maps = build_transport(pq, base)
        assert all(verify_measure_preserving(tm).ok for tm in maps)
        res = verify_transport_consistency(base, maps, pq.component_dim,
                                           points_per_section=200, seed=9)
        assert res.ok, res.witness


def test_independent_coupling_tangent_same_process(sign_flip):
    r = canonical_representation(sign_flip)
    pq = independent_coupling(r, r)
    maps = build_transport(pq)
    assert all(verify_measure_preserving(tm).ok for tm in maps)


def test_transport_agrees_with_generalized_inverse_route():
    # cross-validation of the construction: the transported point can also
    # be computed as the generalized inverse of the first component's
    # augmented step partition, fed with the second component's value at u
    # and u's relative rank within the mass carrying that value
    from canonrep import random_tangent_pair
    from canonrep.representation import Cell, CellRepresentation, _make_rep_node
    from canonrep.transport import _locate

    rng = Random(29)
    for _ in range(5):
        pq = random_tangent_pair(2, 3, 1, seed=rng.randrange(10**9))
        base = canonical_representation(pq.process)
        maps = build_transport(pq, base)
        d = pq.component_dim
        for tm in maps:
            for section in tm.sections:
                node = _locate(base, section.history)
                # depth-1 representation of the first component's step
                groups: dict = {}
                for cell in node.cells:
                    first = cell.value[:d]
                    if first in groups:
                        groups[first][1] = cell.interval.hi
                    else:
                        groups[first] = [cell.interval.lo, cell.interval.hi]
                f_cells = [
                    Cell(Interval(lo, hi), v, None)
                    for v, (lo, hi) in sorted(groups.items())
                ]
                f_aug = augment(
                    CellRepresentation(d, 1, _make_rep_node(f_cells))
                )
                for _trial in range(20):
                    u = F(rng.randrange(997), 997)
                    holder = next(
                        c for c in node.cells if c.interval.contains(u)
                    )
                    second = holder.value[d:]
                    before = sum(
                        (
                            c.interval.length
                            for c in node.cells
                            if c.value[d:] == second
                            and c.interval.hi <= holder.interval.lo
                        ),
                        F(0),
                    ) + (u - holder.interval.lo)
                    total = sum(
                        (
                            c.interval.length
                            for c in node.cells
                            if c.value[d:] == second
                        ),
                        F(0),
                    )
                    x = generalized_inverse(f_aug, (), second, before / total)
                    assert section.apply(u) == x


# ---------------------------------------------------------------------------
# measure preservation checker

def test_identity_map_passes():
    section = SectionTransport(
        (), (IntervalPair(Interval(F(0), F(1)), Interval(F(0), F(1))),)
    )
    assert verify_measure_preserving(TransportMap(1, (section,))).ok


def test_half_swap_passes():
    section = SectionTransport(
        (),
        (
            IntervalPair(Interval(F(0), F(1, 2)), Interval(F(1, 2), F(1))),
            IntervalPair(Interval(F(1, 2), F(1)), Interval(F(0), F(1, 2))),
        ),
    )
    assert verify_measure_preserving(section).ok


def test_unequal_lengths_fail_with_witness():
    section = SectionTransport(
        (),
        (
            IntervalPair(Interval(F(0), F(1, 2)), Interval(F(1, 2), F(3, 4))),
            IntervalPair(Interval(F(1, 2), F(1)), Interval(F(0), F(1, 2))),
        ),
    )
    res = verify_measure_preserving(section)
    assert not res.ok
    assert res.witness["reason"] == "length mismatch"
    assert res.witness["source_length"] == F(1, 2)
    assert res.witness["target_length"] == F(1, 4)


def test_source_gap_fails():
    section = SectionTransport(
        (),
        (
            IntervalPair(Interval(F(0), F(1, 4)), Interval(F(0), F(1, 4))),
            IntervalPair(Interval(F(1, 2), F(1)), Interval(F(1, 2), F(1))),
        ),
    )
    res = verify_measure_preserving(section)
    assert not res.ok
    assert res.witness["reason"] == "source gap"


def test_section_apply_is_translation():
    section = SectionTransport(
        (),
        (
            IntervalPair(Interval(F(0), F(1, 2)), Interval(F(1, 2), F(1))),
            IntervalPair(Interval(F(1, 2), F(1)), Interval(F(0), F(1, 2))),
        ),
    )
    assert section.apply(F(1, 4)) == F(3, 4)
    assert section.apply(F(3, 4)) == F(1, 4)
    with pytest.raises(XOutOfRange):
        section.apply(F(3, 2))


# ---------------------------------------------------------------------------
# interleaving

def test_interleave_quarter():
    res = interleave(F(1, 4), 1)  # binary 0.01
    assert (res.first, res.second) == (F(0), F(1, 2))
    assert not res.truncated


def test_interleave_13_16():
    res = interleave(F(13, 16), 2)  # binary 0.1101
    assert (res.first, res.second) == (F(1, 2), F(3, 4))


def test_interleave_truncation_reported():
    res = interleave(F(1, 3), 2)
    assert res.truncated


@given(st.integers(min_value=0, max_value=2**8 - 1), st.integers(1, 4))
def test_interleave_round_trip(num, bits):
    x = F(num % (1 << (2 * bits)), 1 << (2 * bits))
    res = interleave(x, bits)
    assert deinterleave(res.first, res.second, bits) == x
    assert not res.truncated


@settings(max_examples=30)
@given(st.integers(1, 3), st.integers(1, 3))
def test_interleave_preimage_measure_of_dyadic_rectangles(bits, j):
    # preimage of [0, 2^-j) x [0, 2^-j): count dyadic cells of size 2^-2k
    j = min(j, bits)
    m = InterleavingMap(bits)
    n = 1 << (2 * bits)
    count = 0
    for i in range(n):
        res = m.split(F(i, n))
        if res.first < F(1, 1 << j) and res.second < F(1, 1 << j):
            count += 1
    assert F(count, n) == F(1, 1 << (2 * j))


def test_preimage_quarter_rectangle_exact():
    # measure of preimage of [0,1/2) x [0,1/2) is exactly 1/4 at any precision
    for bits in (1, 2, 3, 4):
        n = 1 << (2 * bits)
        count = sum(
            1
            for i in range(n)
            if interleave(F(i, n), bits).first < F(1, 2)
            and interleave(F(i, n), bits).second < F(1, 2)
        )
        assert F(count, n) == F(1, 4)
