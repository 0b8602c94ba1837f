"""Game state for Tetravale's procurement rounds.

Owns group allocation, the tender schedule, the three-factor cost model,
sealed-bid intake, awarding, and raw point tallies for the two bidding parts.
All money amounts are integer cents (see money.py).
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field

from .errors import (
    AllocationError,
    ClosedTenderError,
    DuplicateBidError,
    StalenessError,
    UnknownEnumError,
    ValidationError,
)
from .money import to_cents

VILLAGES = ("North", "East", "South", "West")
SITUATIONS = ("A", "B", "C", "D")
CONTRACT_TYPES = ("road", "railway", "bus", "civil")
SEATS = (1, 2, 3, 4)

# Percentage surcharges by seat (column = firm seat 1..4, seat k based in VILLAGES[k-1]).
# Rows: where the project is located / the round's capacity situation / what is built.
DISTANCE_PCT = {
    "North": (0, 5, 15, 10),
    "East": (5, 0, 10, 15),
    "South": (15, 10, 0, 5),
    "West": (10, 15, 5, 0),
}
CAPACITY_PCT = {
    "A": (0, 1, 2, 3),
    "B": (3, 0, 1, 2),
    "C": (2, 3, 0, 1),
    "D": (1, 2, 3, 0),
}
CONTRACT_PCT = {
    "road": (0, 2, 4, 6),
    "railway": (2, 0, 6, 4),
    "bus": (4, 6, 0, 2),
    "civil": (6, 4, 2, 0),
}

PARTS = (1, 2)
YEARS = (1, 2, 3, 4)
ROUNDS = (1, 2, 3, 4)
FIXED_COST_RANGE = (50, 100)
MAX_RECOMMENDED_CLASS = 32


@dataclass(frozen=True)
class GroupAllocation:
    class_size: int
    groups: tuple[int, ...]  # each 3 or 4, as many 4s as possible


def allocate_groups(class_size: int) -> GroupAllocation:
    """Partition a class into groups of 4 and 3, maximizing the number of 4s.

    Sizes below 3 and exactly 5 admit no such partition and raise
    AllocationError; sizes above 32 allocate but warn that two separate
    sessions handle better.
    """
    if class_size < 3:
        raise AllocationError(f"cannot form any group of 3 or 4 from {class_size} participants")
    for fours in range(class_size // 4, -1, -1):
        remainder = class_size - 4 * fours
        if remainder % 3 == 0:
            if class_size > MAX_RECOMMENDED_CLASS:
                warnings.warn(
                    f"class size {class_size} exceeds {MAX_RECOMMENDED_CLASS}; "
                    "consider splitting into two sessions",
                    stacklevel=2,
                )
            groups = (4,) * fours + (3,) * (remainder // 3)
            return GroupAllocation(class_size=class_size, groups=groups)
    raise AllocationError(f"no partition of {class_size} participants into groups of 3 and 4")


@dataclass(frozen=True)
class Tender:
    tender_id: str
    group_id: str
    part: int
    year: int
    round: int
    location: str
    contract_type: str
    situation: str
    fixed_cost: int  # cents


@dataclass(frozen=True)
class BidRecord:
    tender_id: str
    seat: int
    cost: int  # cents, engine-computed
    bid: int  # cents
    submitted_at: int  # logical clock: event sequence number


@dataclass(frozen=True)
class AwardResult:
    tender_id: str
    winner_seat: int | None  # None when no bids arrived
    margin: int | None  # cents, winner bid - winner cost
    tie_break: tuple[int, ...] | None = None  # tied seats when the RNG decided


def seat_village(seat: int) -> str:
    if seat not in SEATS:
        raise UnknownEnumError(f"unknown seat: {seat!r}")
    return VILLAGES[seat - 1]


def cost_pct(seat: int, location: str, situation: str, contract_type: str) -> int:
    """Total percentage surcharge for a seat under the three cost factors."""
    if seat not in SEATS:
        raise UnknownEnumError(f"unknown seat: {seat!r}")
    try:
        distance = DISTANCE_PCT[location]
    except KeyError:
        raise UnknownEnumError(f"unknown location: {location!r}") from None
    try:
        capacity = CAPACITY_PCT[situation]
    except KeyError:
        raise UnknownEnumError(f"unknown capacity situation: {situation!r}") from None
    try:
        contract = CONTRACT_PCT[contract_type]
    except KeyError:
        raise UnknownEnumError(f"unknown contract type: {contract_type!r}") from None
    return distance[seat - 1] + capacity[seat - 1] + contract[seat - 1]


def compute_cost(fixed_cost: int, seat: int, location: str, situation: str, contract_type: str) -> int:
    """Cost in cents: fixed cost scaled by 1 + the summed percentage surcharges.

    Exact for whole-unit fixed costs (the schedule only draws those);
    otherwise rounded half up to the cent.
    """
    pct = cost_pct(seat, location, situation, contract_type)
    scaled = fixed_cost * (100 + pct)
    quotient, remainder = divmod(scaled, 100)
    return quotient + (1 if remainder >= 50 else 0)


def generate_schedule(
    allocation: GroupAllocation, seed: int, group_ids: list[str] | None = None
) -> list[Tender]:
    """All tenders for every group: 2 parts x 4 years x 4 rounds each.

    Within each (part, year) block the four locations are a random
    permutation, while capacity situations and contract types each follow an
    independent random cyclic rotation over the rounds, so every location,
    situation, and contract type occurs exactly once per block and each
    seat's total surcharge over a block is identical. Fixed costs are uniform
    whole amounts from 50..100. Identical seed, identical schedule.
    """
    if group_ids is None:
        group_ids = [f"G{i + 1}" for i in range(len(allocation.groups))]
    if len(group_ids) != len(allocation.groups):
        raise ValidationError("one group id per group required")
    rng = random.Random(seed)
    tenders: list[Tender] = []
    for group_id in group_ids:
        for part in PARTS:
            for year in YEARS:
                locations = rng.sample(VILLAGES, 4)
                situation_offset = rng.randrange(4)
                contract_offset = rng.randrange(4)
                for rnd in ROUNDS:
                    tenders.append(
                        Tender(
                            tender_id=f"{group_id}-P{part}-Y{year}-R{rnd}",
                            group_id=group_id,
                            part=part,
                            year=year,
                            round=rnd,
                            location=locations[rnd - 1],
                            contract_type=CONTRACT_TYPES[(contract_offset + rnd - 1) % 4],
                            situation=SITUATIONS[(situation_offset + rnd - 1) % 4],
                            fixed_cost=rng.randint(*FIXED_COST_RANGE) * 100,
                        )
                    )
    return tenders


class GameEngine:
    """Mutable bidding state over a generated schedule.

    All mutations arrive through a single serialized command stream; the
    engine itself performs no locking. Tie-breaks draw from the supplied
    session RNG so replaying the same command order reproduces the same
    awards.
    """

    def __init__(self, allocation: GroupAllocation, seed: int, group_ids: list[str] | None = None):
        self.allocation = allocation
        self.schedule = generate_schedule(allocation, seed, group_ids)
        self.tenders: dict[str, Tender] = {t.tender_id: t for t in self.schedule}
        self.group_ids: list[str] = list(dict.fromkeys(t.group_id for t in self.schedule))
        sizes = dict(zip(self.group_ids, allocation.groups))
        self.group_seats: dict[str, tuple[int, ...]] = {
            gid: SEATS[: sizes[gid]] for gid in self.group_ids
        }
        self.bids: dict[str, dict[int, BidRecord]] = {t.tender_id: {} for t in self.schedule}
        self.awards: dict[str, AwardResult] = {}
        self.open_tenders: set[str] = set()
        self._tie_rng = random.Random(f"{seed}:ties")

    def tender(self, tender_id: str) -> Tender:
        try:
            return self.tenders[tender_id]
        except KeyError:
            raise ValidationError(f"unknown tender: {tender_id!r}") from None

    def cost_for(self, tender_id: str, seat: int) -> int:
        t = self.tender(tender_id)
        if seat not in self.group_seats[t.group_id]:
            raise UnknownEnumError(f"seat {seat} is not part of group {t.group_id}")
        return compute_cost(t.fixed_cost, seat, t.location, t.situation, t.contract_type)

    def open_tender(self, tender_id: str) -> Tender:
        t = self.tender(tender_id)
        if tender_id in self.awards:
            raise ClosedTenderError(f"{tender_id} is already awarded")
        if tender_id in self.open_tenders:
            raise ValidationError(f"{tender_id} is already open")
        self.open_tenders.add(tender_id)
        return t

    def submit_bid(self, tender_id: str, seat: int, bid, submitted_at: int) -> BidRecord:
        t = self.tender(tender_id)
        if tender_id not in self.open_tenders:
            raise ClosedTenderError(f"{tender_id} is not open for bidding")
        if seat not in self.group_seats[t.group_id]:
            raise UnknownEnumError(f"seat {seat} is not part of group {t.group_id}")
        if seat in self.bids[tender_id]:
            raise DuplicateBidError(f"seat {seat} already bid on {tender_id}")
        bid_cents = to_cents(bid)
        if bid_cents < 0:
            raise ValidationError(f"bid must be >= 0, got {bid!r}")
        record = BidRecord(
            tender_id=tender_id,
            seat=seat,
            cost=self.cost_for(tender_id, seat),
            bid=bid_cents,
            submitted_at=submitted_at,
        )
        self.bids[tender_id][seat] = record
        return record

    def award_tender(self, tender_id: str) -> AwardResult:
        """Close bidding and award to the lowest bid; ties drawn uniformly.

        Idempotent: a second close returns the stored result unchanged.
        A tender with zero bids resolves to a no-award result.
        """
        self.tender(tender_id)
        if tender_id in self.awards:
            return self.awards[tender_id]
        self.open_tenders.discard(tender_id)
        records = self.bids[tender_id]
        if not records:
            award = AwardResult(tender_id=tender_id, winner_seat=None, margin=None)
        else:
            lowest = min(r.bid for r in records.values())
            tied = sorted(seat for seat, r in records.items() if r.bid == lowest)
            if len(tied) == 1:
                winner, tie_break = tied[0], None
            else:
                winner = tied[self._tie_rng.randrange(len(tied))]
                tie_break = tuple(tied)
            margin = records[winner].bid - records[winner].cost
            award = AwardResult(
                tender_id=tender_id, winner_seat=winner, margin=margin, tie_break=tie_break
            )
        self.awards[tender_id] = award
        return award

    def is_awarded(self, tender_id: str) -> bool:
        return tender_id in self.awards

    def part_tenders(self, group_id: str, part: int) -> list[Tender]:
        return [t for t in self.schedule if t.group_id == group_id and t.part == part]

    def tally_part_points(self, group_id: str, part: int) -> dict[int, int]:
        """Sum of margins (cents) per seat over that part's awarded tenders."""
        if group_id not in self.group_seats:
            raise ValidationError(f"unknown group: {group_id!r}")
        if part not in PARTS:
            raise ValidationError(f"unknown part: {part!r}")
        totals = {seat: 0 for seat in self.group_seats[group_id]}
        for t in self.part_tenders(group_id, part):
            award = self.awards.get(t.tender_id)
            if award is None:
                raise StalenessError(f"{t.tender_id} has not been awarded yet")
            if award.winner_seat is not None:
                totals[award.winner_seat] += award.margin
        return totals
