"""Behavioral screens over a tender's bid distribution and Part-3 dataset prep.

Every screen is a ratio of same-degree bid statistics, so all of them are
invariant under uniform positive scaling and under permutation of the input
order. Standard deviations are sample deviations (n-1 divisor). A screen
whose denominator degenerates is recorded as missing (None), never faked.
"""

from __future__ import annotations

import csv
import io
import math
import random
import statistics
from dataclasses import dataclass

from .errors import StalenessError, ValidationError
from .money import fmt, to_float

DATASET_HEADER = ["ID", "SPD", "CV", "RD", "RDNORM", "DIFFP", "Bid_1", "Bid_2", "Bid_3", "Bid_4"]
SCREEN_NAMES = ("SPD", "CV", "RD", "RDNORM", "DIFFP")


class BidVector:
    """Bids of one tender, sorted ascending; requires at least two finite, positive values."""

    def __init__(self, bids, tender_id: str | None = None):
        values = [float(b) for b in bids]
        if len(values) < 2:
            raise ValidationError("a bid vector needs at least two bids")
        if any(not math.isfinite(v) or v <= 0 for v in values):
            raise ValidationError("bids must be finite and > 0")
        self.bids = sorted(values)
        self.tender_id = tender_id

    def __len__(self) -> int:
        return len(self.bids)


def cv(bids: BidVector) -> float:
    """Coefficient of variation: sample sd over mean."""
    return statistics.stdev(bids.bids) / statistics.mean(bids.bids)


def spd(bids: BidVector) -> float:
    """Spread: range of bids relative to the lowest."""
    b = bids.bids
    return (b[-1] - b[0]) / b[0]


def diffp(bids: BidVector) -> float:
    """Relative gap between the two lowest bids."""
    b = bids.bids
    return (b[1] - b[0]) / b[0]


def rd(bids: BidVector) -> float | None:
    """Gap between the two lowest bids over the sample sd of the losing bids.

    Missing (None) with fewer than three bids or when the losing bids are
    all equal: either way the denominator does not exist.
    """
    b = bids.bids
    if len(b) < 3:
        return None
    sd_losing = statistics.stdev(b[1:])
    if sd_losing == 0:
        return None
    return (b[1] - b[0]) / sd_losing


def rdnorm(bids: BidVector) -> float | None:
    """Gap between the two lowest bids over the mean adjacent-bid gap.

    The adjacent gaps telescope, so this equals
    (b2 - b1) * (n - 1) / (bmax - b1); missing when all bids are equal.
    """
    b = bids.bids
    n = len(b)
    if b[-1] == b[0]:
        return None
    mean_gap = sum(b[i + 1] - b[i] for i in range(n - 1)) / (n - 1)
    return (b[1] - b[0]) / mean_gap


@dataclass(frozen=True)
class ScreenRow:
    id: int  # anonymized, 1..N in shuffled order
    spd: float
    cv: float
    rd: float | None
    rdnorm: float | None
    diffp: float
    bids: tuple[float, ...]  # ranked ascending, 2..4 values

    def feature(self, name: str) -> float | None:
        return {
            "SPD": self.spd,
            "CV": self.cv,
            "RD": self.rd,
            "RDNORM": self.rdnorm,
            "DIFFP": self.diffp,
        }[name]


@dataclass(frozen=True)
class SealedTruth:
    """Lecturer-only mapping from anonymized IDs back to their origin."""

    origins: dict[int, tuple[str, int]]  # id -> (tender_id, part)

    def part_of(self, row_id: int) -> int:
        return self.origins[row_id][1]

    def suspicious(self, row_id: int) -> bool:
        # Part 1 ran without communication, Part 2 with it.
        return self.part_of(row_id) == 2


def screen_tender(bids) -> dict[str, float | None]:
    vec = bids if isinstance(bids, BidVector) else BidVector(bids)
    return {
        "SPD": spd(vec),
        "CV": cv(vec),
        "RD": rd(vec),
        "RDNORM": rdnorm(vec),
        "DIFFP": diffp(vec),
    }


def prepare_part3_dataset(
    tender_bids: list[tuple[str, int, list[int]]], anonymization_seed
) -> tuple[list[ScreenRow], SealedTruth]:
    """Build the anonymized Part-3 dataset from awarded tenders.

    `tender_bids` holds (tender_id, part, bid cents) per tender; every tender
    must already be awarded (the caller's book-keeping) and carry at least two
    bids. Rows are shuffled by the seed and re-identified 1..N so participants
    cannot recognize their own tenders; the returned truth map stays sealed on
    the lecturer's side.
    """
    for tender_id, _, bid_cents in tender_bids:
        if len(bid_cents) < 2:
            raise StalenessError(
                f"{tender_id} has {len(bid_cents)} bids; screens need at least two"
            )
    order = list(range(len(tender_bids)))
    random.Random(anonymization_seed).shuffle(order)
    rows: list[ScreenRow] = []
    origins: dict[int, tuple[str, int]] = {}
    for new_id, source_index in enumerate(order, start=1):
        tender_id, part, bid_cents = tender_bids[source_index]
        vec = BidVector([to_float(b) for b in bid_cents], tender_id=tender_id)
        rows.append(
            ScreenRow(
                id=new_id,
                spd=spd(vec),
                cv=cv(vec),
                rd=rd(vec),
                rdnorm=rdnorm(vec),
                diffp=diffp(vec),
                bids=tuple(vec.bids),
            )
        )
        origins[new_id] = (tender_id, part)
    return rows, SealedTruth(origins=origins)


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(value)


def dataset_to_csv(rows: list[ScreenRow]) -> str:
    """Serialize screen rows in the fixed column layout; missing cells stay empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DATASET_HEADER)
    for row in sorted(rows, key=lambda r: r.id):
        bids = [fmt(round(b * 100)) for b in row.bids[:4]]
        bids += [""] * (4 - len(bids))
        writer.writerow(
            [row.id, _cell(row.spd), _cell(row.cv), _cell(row.rd), _cell(row.rdnorm), _cell(row.diffp), *bids]
        )
    return buf.getvalue()


def dataset_from_csv(text: str) -> list[ScreenRow]:
    """Parse a prepared dataset back into rows (delimiter ',' or ';')."""
    delimiter = ";" if text.splitlines()[0].count(";") > text.splitlines()[0].count(",") else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:6]] != DATASET_HEADER[:6]:
        raise ValidationError(
            f"expected header starting {','.join(DATASET_HEADER[:6])}, got {reader.fieldnames}"
        )
    rows = []
    for record in reader:
        bids = []
        for col in ("Bid_1", "Bid_2", "Bid_3", "Bid_4"):
            raw = (record.get(col) or "").strip()
            if raw:
                bids.append(float(raw))
        rows.append(
            ScreenRow(
                id=int(record["ID"]),
                spd=_parse_cell(record["SPD"], "SPD"),
                cv=_parse_cell(record["CV"], "CV"),
                rd=_parse_optional(record.get("RD")),
                rdnorm=_parse_optional(record.get("RDNORM")),
                diffp=_parse_cell(record["DIFFP"], "DIFFP"),
                bids=tuple(bids),
            )
        )
    return rows


def _parse_cell(raw: str | None, name: str) -> float:
    value = _parse_optional(raw)
    if value is None:
        raise ValidationError(f"column {name} must not be empty")
    return value


def _parse_optional(raw: str | None) -> float | None:
    text = (raw or "").strip()
    if text in ("", "NA", "NaN", "nan"):
        return None
    return float(text)
