import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reaim.spectrum import (SlotMap, SpectrumAllocation, SpectrumConflict, admissible, allocate,
                            feasible_starts, first_fit, path_congestion, path_free_intervals,
                            release, slots_needed, violations)
from reaim.topology import Graph


@pytest.fixture
def two_hop():
    g = Graph.from_edges([(1, 2), (2, 3)])
    return g, g.path((1, 2, 3))


def busy(sm, link_id, slots, owner):
    # raw bits for fixtures; owner recorded through a one-link path
    for s in slots:
        sm.occupancy[link_id] |= 1 << s


@pytest.mark.parametrize("bw, cap, want", [(15, 12.5, 2), (12.5, 12.5, 1), (0, 12.5, 0),
                                           (25.0, 12.5, 2), (25.0001, 12.5, 3)])
def test_slots_needed(bw, cap, want):
    assert slots_needed(bw, cap) == want


def test_slots_needed_float_noise():
    assert slots_needed(0.1 + 0.2 + 12.2, 12.5) == 1


def test_free_intervals_empty(two_hop):
    g, p = two_hop
    assert path_free_intervals(SlotMap(2, 300), p) == [(0, 300)]


def test_free_intervals_union(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 8)
    busy(sm, 0, [0, 1], "a")
    busy(sm, 1, [5], "b")
    # by hand: union {0,1,5}; complement in 0..7 is {2,3,4} and {6,7}
    union = {0, 1, 5}
    free = [s for s in range(8) if s not in union]
    assert free == [2, 3, 4, 6, 7]
    assert path_free_intervals(sm, p) == [(2, 3), (6, 2)]
    assert first_fit(sm, p, 2) == 2
    assert first_fit(sm, p, 3) == 2
    assert first_fit(sm, p, 4) is None
    assert path_congestion(sm, p) == pytest.approx(3 / 8)
    assert feasible_starts(sm, p, 2) == [2, 3, 6]


def test_fully_occupied(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 8)
    allocate(sm, SpectrumAllocation(p, 0, 8, "x"))
    assert path_free_intervals(sm, p) == []
    assert first_fit(sm, p, 1) is None
    assert path_congestion(sm, p) == 1.0


def test_first_fit_empty(two_hop):
    assert first_fit(SlotMap(2, 300), two_hop[1], 4) == 0


def test_first_fit_no_room(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 4)
    busy(sm, 0, [0, 1, 3], "a")
    assert path_free_intervals(sm, p) == [(2, 1)]
    assert first_fit(sm, p, 2) is None


def test_allocate_and_release(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 10)
    before = list(sm.occupancy)
    allocate(sm, SpectrumAllocation(p, 3, 2, "r1"))
    assert path_free_intervals(sm, p) == [(0, 3), (5, 5)]
    with pytest.raises(SpectrumConflict):
        allocate(sm, SpectrumAllocation(p, 4, 2, "r2"))
    with pytest.raises(SpectrumConflict):
        allocate(sm, SpectrumAllocation(p, 9, 2, "r3"))
    release(sm, "r1")
    assert sm.occupancy == before
    with pytest.raises(KeyError):
        release(sm, "r1")


def test_release_keeps_other_owner(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 10)
    allocate(sm, SpectrumAllocation(p, 0, 2, "a"))
    allocate(sm, SpectrumAllocation(g.path((2, 3)), 2, 3, "b"))
    release(sm, "a")
    assert sm.occupancy == [0, 0b11100]
    assert violations(sm) == []


def test_congestion_arithmetic(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 300)
    busy(sm, 0, range(20), "a")
    busy(sm, 1, range(10, 30), "b")
    assert path_congestion(sm, p) == pytest.approx(0.1)


def test_admissible(two_hop):
    g, p = two_hop
    assert admissible(SlotMap(2, 300), p, 2, 1.0)
    sm = SlotMap(2, 300)
    busy(sm, 0, range(297), "a")  # 0.99 congestion
    assert admissible(sm, p, 3, 1.0)
    assert not admissible(sm, p, 4, 1.0)
    half = SlotMap(2, 300)
    busy(half, 0, range(150), "a")
    assert not admissible(half, p, 1, 0.5)
    assert admissible(half, p, 1, 0.51)
    with pytest.raises(ValueError):
        admissible(half, p, 1, 0.0)


def test_csv_round_trip(two_hop):
    g, p = two_hop
    sm = SlotMap(2, 8)
    allocate(sm, SpectrumAllocation(p, 2, 3, "x"))
    text = sm.to_csv()
    assert text.splitlines()[0] == "link_id,slot_index"
    assert len(text.splitlines()) == 1 + 6
    assert SlotMap.from_csv(text, 2, 8).occupancy == sm.occupancy


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 16), st.lists(st.integers(0, 2**16 - 1), min_size=1, max_size=4),
       st.integers(1, 16))
def test_first_fit_matches_scan(capacity, masks, width):
    edges = [(i, i + 1) for i in range(1, len(masks) + 1)]
    g = Graph.from_edges(edges)
    p = g.path(range(1, len(masks) + 2))
    sm = SlotMap(len(masks), capacity)
    sm.occupancy = [m & ((1 << capacity) - 1) for m in masks]
    free = [all(not (m >> s & 1) for m in sm.occupancy) for s in range(capacity)]
    want = next((f for f in range(capacity - width + 1) if all(free[f:f + width])), None)
    got = first_fit(sm, p, width)
    assert got == want
    if got is not None:
        assert admissible(sm, p, width, 1.0)
