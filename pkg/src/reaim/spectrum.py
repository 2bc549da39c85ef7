"""Per-link spectrum-slot occupancy with continuity and non-overlap enforcement.

Each link's occupancy is a Python ``int`` used as a bitmap: bit ``i`` set means
slot ``i`` is busy. A lightpath must use the same contiguous interval on every
link of its route, so most queries work on the OR of the route's bitmaps.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .topology import Path


class SpectrumConflict(RuntimeError):
    """An allocation would break capacity, continuity or non-overlap."""


def slots_needed(total_bandwidth: float, slot_capacity: float) -> int:
    """Slots required to carry ``total_bandwidth`` Gb/s; VMs of one group share slots."""
    if slot_capacity <= 0:
        raise ValueError("slot capacity must be positive")
    if total_bandwidth < 0:
        raise ValueError("bandwidth must be non-negative")
    # guard against 25.000000000000004 / 12.5 rounding up to 3
    return math.ceil(round(total_bandwidth / slot_capacity, 9))


@dataclass(frozen=True)
class SpectrumAllocation:
    path: Path
    start: int
    width: int
    owner: Hashable

    @property
    def mask(self) -> int:
        return ((1 << self.width) - 1) << self.start


@dataclass
class SlotMap:
    """Occupancy of ``n_links`` links with ``capacity`` slots each."""

    n_links: int
    capacity: int
    occupancy: list[int] = field(default=None)
    allocations: dict[Hashable, list[SpectrumAllocation]] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("link capacity must be >= 1 slot")
        if self.occupancy is None:
            self.occupancy = [0] * self.n_links
        elif len(self.occupancy) != self.n_links:
            raise ValueError("occupancy length must equal link count")

    @classmethod
    def for_graph(cls, graph, capacity: int) -> "SlotMap":
        return cls(len(graph.links), capacity)

    @property
    def full_mask(self) -> int:
        return (1 << self.capacity) - 1

    def copy(self) -> "SlotMap":
        return SlotMap(self.n_links, self.capacity, list(self.occupancy),
                       {k: list(v) for k, v in self.allocations.items()})

    def busy_slots(self, link_id: int) -> list[int]:
        bits = self.occupancy[link_id]
        return [i for i in range(self.capacity) if bits >> i & 1]

    def path_union(self, p: Path) -> int:
        occ = self.occupancy
        union = 0
        for link in p.links:
            union |= occ[link.id]
        return union

    def occupied_fraction(self) -> float:
        total = sum(bits.bit_count() for bits in self.occupancy)
        return total / (self.n_links * self.capacity) if self.n_links else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["link_id", "slot_index"])
        for link_id in range(self.n_links):
            for slot in self.busy_slots(link_id):
                writer.writerow([link_id, slot])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n_links: int, capacity: int) -> "SlotMap":
        """Rebuild raw occupancy from a dump; the bits carry no owner."""
        sm = cls(n_links, capacity)
        for row in csv.DictReader(io.StringIO(text)):
            link_id, slot = int(row["link_id"]), int(row["slot_index"])
            if not (0 <= link_id < n_links and 0 <= slot < capacity):
                raise ValueError(f"occupancy entry out of range: {row}")
            sm.occupancy[link_id] |= 1 << slot
        return sm


def _runs(free: int, capacity: int) -> list[tuple[int, int]]:
    out = []
    i = 0
    while i < capacity:
        if free >> i & 1:
            j = i
            while j < capacity and free >> j & 1:
                j += 1
            out.append((i, j - i))
            i = j
        else:
            i += 1
    return out


def path_free_intervals(sm: SlotMap, p: Path) -> list[tuple[int, int]]:
    """Maximal ``(start, length)`` runs free on every link of ``p``."""
    free = sm.full_mask & ~sm.path_union(p)
    return _runs(free, sm.capacity)


def _first_fit_mask(free: int, width: int) -> int | None:
    # bit j survives iff slots j..j+width-1 are all free
    fits = free
    for shift in range(1, width):
        fits &= free >> shift
        if not fits:
            return None
    if not fits:
        return None
    return (fits & -fits).bit_length() - 1


def first_fit(sm: SlotMap, p: Path, width: int) -> int | None:
    """Lowest start slot of a ``width``-slot interval free along ``p``, else None."""
    if width < 1:
        raise ValueError("width must be >= 1")
    if width > sm.capacity:
        return None
    return _first_fit_mask(sm.full_mask & ~sm.path_union(p), width)


def feasible_starts(sm: SlotMap, p: Path, width: int) -> list[int]:
    """Every start slot whose ``width``-slot interval is free along ``p``, ascending."""
    if width < 1:
        raise ValueError("width must be >= 1")
    free = sm.full_mask & ~sm.path_union(p)
    fits = free
    for shift in range(1, width):
        fits &= free >> shift
    out = []
    while fits:
        low = fits & -fits
        out.append(low.bit_length() - 1)
        fits ^= low
    return out


def allocate(sm: SlotMap, a: SpectrumAllocation) -> SlotMap:
    if a.width < 1 or a.start < 0:
        raise SpectrumConflict(f"invalid interval start={a.start} width={a.width}")
    if a.start + a.width > sm.capacity:
        raise SpectrumConflict(
            f"interval [{a.start}, {a.start + a.width}) exceeds link capacity {sm.capacity}")
    mask = a.mask
    for link in a.path.links:
        if sm.occupancy[link.id] & mask:
            raise SpectrumConflict(
                f"slots [{a.start}, {a.start + a.width}) already busy on link {link.id}")
    for link in a.path.links:
        sm.occupancy[link.id] |= mask
    sm.allocations.setdefault(a.owner, []).append(a)
    return sm


def release(sm: SlotMap, owner: Hashable) -> SlotMap:
    try:
        allocs = sm.allocations.pop(owner)
    except KeyError:
        raise KeyError(f"no allocation registered for owner {owner!r}") from None
    for a in allocs:
        clear = ~a.mask
        for link in a.path.links:
            sm.occupancy[link.id] &= clear
    return sm


def path_congestion(sm: SlotMap, p: Path) -> float:
    """Fraction of slot indices unusable on ``p`` (busy on at least one of its links)."""
    return sm.path_union(p).bit_count() / sm.capacity


def admissible(sm: SlotMap, p: Path, width: int, max_congestion: float) -> bool:
    """Congestion cap check (non-strict) plus availability of a contiguous interval."""
    if not 0 < max_congestion <= 1:
        raise ValueError("max_congestion must lie in (0, 1]")
    union = sm.path_union(p)
    # integer form of  busy/c_e + width/c_e <= w_B
    if union.bit_count() + width > max_congestion * sm.capacity + 1e-9:
        return False
    if width > sm.capacity:
        return False
    return _first_fit_mask(sm.full_mask & ~union, width) is not None


def live_allocations(sm: SlotMap) -> Iterable[SpectrumAllocation]:
    for allocs in sm.allocations.values():
        yield from allocs


def violations(sm: SlotMap) -> list[str]:
    """Cross-check registered allocations against the raw bitmaps.

    Reports overlapping allocations, out-of-range intervals and any bit that
    does not belong to exactly one allocation. Empty list means consistent.
    """
    problems = []
    rebuilt = [0] * sm.n_links
    for a in live_allocations(sm):
        if a.start < 0 or a.start + a.width > sm.capacity:
            problems.append(f"capacity: owner {a.owner!r} interval out of range")
        for link in a.path.links:
            if rebuilt[link.id] & a.mask:
                problems.append(f"non-overlap: link {link.id} slots shared by owner {a.owner!r}")
            rebuilt[link.id] |= a.mask
    for link_id, (want, have) in enumerate(zip(rebuilt, sm.occupancy)):
        if want != have:
            problems.append(f"continuity: link {link_id} bitmap disagrees with allocations")
    return problems
