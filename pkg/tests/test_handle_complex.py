import dataclasses
from collections import Counter
from math import pi

import pytest
from hypothesis import given, strategies as st

from fibretool.errors import InvalidMultiplicity
from fibretool.handle_complex import (
    ROUND_1, ROUND_2, TRIVIAL_SOLID_TORUS, TRIVIAL_T2XD2, PieceComplex, RegionFiber,
    build_exceptional_21, build_exceptional_p1, build_multiple_fiber, charts_partition_circle,
    movie_slices, replay_regions, transition_results, validate_complex,
)


def oracle_replay(dimension, p):
    """Replay the handle ledger on bare (genus, multiplicity) multisets.

    Always acts on the component of largest multiplicity.  Returns the list of
    region multisets and the kinds of circle crossed.
    """
    g0 = None if dimension == 3 else 1
    state = Counter({(g0, p): 1})
    regions, kinds = [Counter(state)], []
    m = p
    while m > 1:
        if dimension == 3:
            state[(None, m)] -= 1
            state[(None, 1)] += 1
            state[(None, m - 1)] += 1
            kinds.append(ROUND_1)
        else:
            state[(1, m)] -= 1
            state[(2, m)] += 1
            regions.append(+state)
            kinds.append(ROUND_1)
            state[(2, m)] -= 1
            state[(1, 1)] += 1
            state[(1, m - 1)] += 1
            kinds.append(ROUND_2)
        regions.append(+state)
        m -= 1
    return regions, kinds


def as_counter(region):
    return Counter((c.genus, c.multiplicity) for c in region.components)


def euler(counter):
    return sum((0 if g is None else 2 - 2 * g) * n for (g, _), n in counter.items())


@pytest.mark.parametrize("p", range(1, 51))
def test_exceptional_against_oracle(p):
    c = build_exceptional_p1(p)
    assert validate_complex(c).ok
    regions, kinds = oracle_replay(3, p)
    assert [as_counter(r) for r in c.region_fibers] == regions
    assert [fc.kind for fc in c.base_diagram] == kinds
    assert c.fold_circle_count == p - 1
    assert c.innermost.count == p
    assert c.count(TRIVIAL_SOLID_TORUS) == p
    # stage ledger: after i handles, i circles of multiplicity 1 and one of p - i
    for i, r in enumerate(c.region_fibers):
        assert as_counter(r) == Counter([(None, 1)] * i + [(None, p - i)])


@pytest.mark.parametrize("p", range(1, 51))
def test_multiple_fiber_against_oracle(p):
    c = build_multiple_fiber(p)
    assert validate_complex(c).ok
    regions, kinds = oracle_replay(4, p)
    assert [as_counter(r) for r in c.region_fibers] == regions
    assert [fc.kind for fc in c.base_diagram] == kinds
    assert c.fold_circle_count == 2 * (p - 1)
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    assert as_counter(c.innermost) == Counter({(1, 1): p})
    assert c.euler == 0
    # tori between handle pairs, one genus-2 surface inside each pair
    assert all(euler(r) == 0 for r in regions[::2])
    assert all(euler(r) == -2 for r in regions[1::2])
    assert c.count(TRIVIAL_T2XD2) == p
    assert replay_regions(4, p, kinds) == list(c.region_fibers)


def test_exceptional_21_case():
    c = build_exceptional_21()
    assert validate_complex(c).ok
    assert c.fold_circle_count == 1
    assert c.innermost.count == 2
    assert c.base_diagram[0].kind == ROUND_1


def test_slopes():
    c = build_multiple_fiber(4)
    first = c.gluings[0]
    assert first.slope == (4, 1) and first.slope_verified
    assert not any(g.slope_verified for g in c.gluings[1:])
    c2 = build_exceptional_p1(2)
    assert all(g.slope_verified for g in c2.gluings)


def test_round_trip():
    for c in (build_exceptional_p1(5), build_multiple_fiber(4)):
        assert PieceComplex.from_dict(c.to_dict()) == c


def test_validation_catches_corruption():
    c = build_multiple_fiber(3)
    missing = dataclasses.replace(c, gluings=c.gluings[:-1])
    rep = validate_complex(missing)
    assert not rep.ok and "all_boundaries_glued" in rep.first_violation
    wrong = dataclasses.replace(c, region_fibers=c.region_fibers[:-1] + (RegionFiber.of((1, 3)),))
    assert not validate_complex(wrong).ok
    swapped = dataclasses.replace(c, base_diagram=tuple(reversed(c.base_diagram)))
    assert not validate_complex(swapped).ok
    dropped = dataclasses.replace(c, pieces=c.pieces[:-1])
    rep = validate_complex(dropped)
    assert not rep.ok
    assert any(r == "gluing_pieces_exist" and not ok for r, ok, _ in rep.checks)
    assert any(r == "filling_count" and not ok for r, ok, _ in rep.checks)


def test_invalid_multiplicity():
    with pytest.raises(InvalidMultiplicity):
        build_multiple_fiber(0)
    with pytest.raises(InvalidMultiplicity):
        build_exceptional_p1(-2)
    with pytest.raises(InvalidMultiplicity):
        movie_slices(1, 0.0)


def test_transition_rules():
    assert transition_results(RegionFiber.of((1, 1)), ROUND_1, 4) == []
    assert transition_results(RegionFiber.of((1, 3)), ROUND_2, 4) == []
    assert transition_results(RegionFiber.of((2, 3)), ROUND_2, 4) == [RegionFiber.of((1, 1), (1, 2))]


@given(st.lists(st.integers(1, 9), min_size=1, max_size=4), st.data())
def test_handle_pair_keeps_euler_and_adds_one_component(mults, data):
    region = RegionFiber.of(*[(1, m) for m in mults])
    choices = transition_results(region, ROUND_1, 4)
    if not choices:
        assert all(m == 1 for m in mults)
        return
    mid = data.draw(st.sampled_from(choices))
    after = data.draw(st.sampled_from(transition_results(mid, ROUND_2, 4)))
    assert after.euler == region.euler == 0
    assert after.count == region.count + 1
    # total genus grows by one across a pair
    assert sum(c.genus for c in after.components) == sum(c.genus for c in region.components) + 1
    assert sum(c.multiplicity for c in after.components) == sum(mults)


@given(st.lists(st.integers(1, 9), min_size=1, max_size=4), st.data())
def test_3d_round_handle_adds_one_component(mults, data):
    region = RegionFiber.of(*[(None, m) for m in mults])
    choices = transition_results(region, ROUND_1, 3)
    if not choices:
        return
    after = data.draw(st.sampled_from(choices))
    assert after.count == region.count + 1
    assert sum(c.multiplicity for c in after.components) == sum(mults)


@given(st.integers(2, 20), st.floats(-100, 100))
def test_movie_charts_cover_the_circle(p, phi):
    charts = movie_slices(p, phi)
    assert len(charts) == 2 * (p - 1)
    for g1, g2 in zip(charts[::2], charts[1::2]):
        assert (g1.role, g2.role) == ("G1", "G2")
        assert charts_partition_circle(g1, g2)
        assert g1.contains(g1.singular_theta) and g2.contains(g2.singular_theta)
        assert g1.length == pytest.approx(pi / 2)
