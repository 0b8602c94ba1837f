"""Part 3: staff classifications, consensus revocation, and the final scoring.

The scoring pipeline is a pure function of (award history, sealed truth,
submissions): revocations first, then the false-positive penalty as a single
multiplicative factor, then the median eligibility filter. Correct rates and
penalty factors are exact fractions so the inclusive comparisons never hinge
on float noise; money stays in integer cents.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from statistics import median

from .errors import ValidationError
from .money import fmt, scale

SUSPICIOUS = "suspicious"
NON_SUSPICIOUS = "non-suspicious"
LABELS = (SUSPICIOUS, NON_SUSPICIOUS)

# Appendix-style submission files use these response words.
CSV_RESPONSE = {SUSPICIOUS: "collude", NON_SUSPICIOUS: "compete"}
CSV_LABEL = {v: k for k, v in CSV_RESPONSE.items()}

CONSENSUS_NUM, CONSENSUS_DEN = 3, 4  # unequivocal at >= 75% of submissions
PENALTY_PER_FP = Fraction(5, 100)


@dataclass(frozen=True)
class StaffSubmission:
    participant_id: str
    labels: dict[int, str]  # dataset ID -> suspicious / non-suspicious


def validate_submission(labels: dict[int, str], dataset_ids: set[int]) -> None:
    """A submission must label exactly the pooled dataset, nothing else."""
    unknown = sorted(set(labels) - dataset_ids)
    if unknown:
        raise ValidationError(f"unknown dataset IDs: {unknown}")
    missing = sorted(dataset_ids - set(labels))
    if missing:
        raise ValidationError(f"submission is missing IDs: {missing}")
    bad = sorted({v for v in labels.values() if v not in LABELS})
    if bad:
        raise ValidationError(f"labels must be one of {LABELS}, got {bad}")


@dataclass(frozen=True)
class ConsensusReport:
    votes: dict[int, int]  # suspicious votes per ID
    n_submissions: int

    def fraction(self, row_id: int) -> Fraction:
        return Fraction(self.votes.get(row_id, 0), self.n_submissions)

    @property
    def unequivocal(self) -> set[int]:
        return {
            row_id
            for row_id, v in self.votes.items()
            if v * CONSENSUS_DEN >= CONSENSUS_NUM * self.n_submissions
        }


def compute_consensus(submissions: dict[str, dict[int, str]]) -> ConsensusReport:
    if not submissions:
        raise ValidationError("consensus needs at least one submission")
    votes: dict[int, int] = {}
    for labels in submissions.values():
        for row_id, label in labels.items():
            votes.setdefault(row_id, 0)
            if label == SUSPICIOUS:
                votes[row_id] += 1
    return ConsensusReport(votes=votes, n_submissions=len(submissions))


def apply_revocations(
    unequivocal: set[int],
    truth_part: dict[int, int],
    winners: dict[int, tuple[str | None, int]],
) -> dict[str, int]:
    """Cents revoked per participant.

    Only unequivocal IDs that truly originated in the collusion part strip
    their winner of that tender's provisional margin. Negative margins are
    not refunded by a revocation, so revoking can never raise a score.
    """
    revoked: dict[str, int] = {}
    for row_id in unequivocal:
        if truth_part.get(row_id) != 2:
            continue
        winner, margin = winners.get(row_id, (None, 0))
        if winner is None:
            continue
        revoked[winner] = revoked.get(winner, 0) + max(0, margin)
    return revoked


@dataclass(frozen=True)
class ScoreRow:
    participant_id: str
    part1_points: int  # cents
    part2_provisional: int  # cents
    part2_revoked: int  # cents
    correct_rate: Fraction | None  # None for non-submitters
    fp_count: int
    penalty_factor: Fraction
    eligible: bool
    final_points: int  # cents

    def as_dict(self) -> dict:
        return {
            "participant": self.participant_id,
            "part1_points": fmt(self.part1_points),
            "part2_provisional": fmt(self.part2_provisional),
            "part2_revoked": fmt(self.part2_revoked),
            "correct_rate": "" if self.correct_rate is None else str(float(self.correct_rate)),
            "fp_count": self.fp_count,
            "penalty_factor": str(float(self.penalty_factor)),
            "eligible": "yes" if self.eligible else "no",
            "final_points": fmt(self.final_points),
        }


def grade_submission(labels: dict[int, str], truth_part: dict[int, int]) -> tuple[Fraction, int]:
    """(correct rate, false-positive count) against the sealed truth.

    Truth: Part-1 tenders are non-suspicious, Part-2 tenders suspicious. A
    false positive is a suspicious label on a Part-1 tender.
    """
    total = len(truth_part)
    correct = 0
    fp = 0
    for row_id, part in truth_part.items():
        label = labels[row_id]
        truthful = SUSPICIOUS if part == 2 else NON_SUSPICIOUS
        if label == truthful:
            correct += 1
        elif label == SUSPICIOUS:
            fp += 1
    return Fraction(correct, total), fp


def penalty_factor(fp_count: int) -> Fraction:
    return max(Fraction(0), 1 - PENALTY_PER_FP * fp_count)


def score_participants(
    part_points: dict[str, tuple[int, int]],
    submissions: dict[str, dict[int, str]],
    truth_part: dict[int, int],
    winners: dict[int, tuple[str | None, int]],
) -> list[ScoreRow]:
    """Scoreboard rows for every participant, submitters or not.

    Non-submitters keep their (possibly revoked) points at factor 1 but can
    never win; eligibility compares each submitter's correct rate against the
    median rate over submitters, inclusive.
    """
    consensus = compute_consensus(submissions) if submissions else None
    revoked = (
        apply_revocations(consensus.unequivocal, truth_part, winners) if consensus else {}
    )
    grades = {
        pid: grade_submission(labels, truth_part) for pid, labels in submissions.items()
    }
    rates = [rate for rate, _ in grades.values()]
    cutoff = median(rates) if rates else None
    rows = []
    for pid, (part1, part2) in sorted(part_points.items()):
        if pid in grades:
            rate, fp = grades[pid]
            factor = penalty_factor(fp)
            eligible = rate >= cutoff
        else:
            rate, fp, factor, eligible = None, 0, Fraction(1), False
        lost = revoked.get(pid, 0)
        final = max(0, scale(part1 + part2 - lost, factor))
        rows.append(
            ScoreRow(
                participant_id=pid,
                part1_points=part1,
                part2_provisional=part2,
                part2_revoked=lost,
                correct_rate=rate,
                fp_count=fp,
                penalty_factor=factor,
                eligible=eligible,
                final_points=final,
            )
        )
    return rows


def final_leaderboard(rows: list[ScoreRow]) -> tuple[list[ScoreRow], set[str]]:
    """Eligible rows by points descending, then the marked ineligible tail.

    Ties at the top are co-winners.
    """
    eligible = sorted(
        (r for r in rows if r.eligible), key=lambda r: (-r.final_points, r.participant_id)
    )
    ineligible = sorted(
        (r for r in rows if not r.eligible), key=lambda r: (-r.final_points, r.participant_id)
    )
    winners: set[str] = set()
    if eligible:
        top = eligible[0].final_points
        winners = {r.participant_id for r in eligible if r.final_points == top}
    return eligible + ineligible, winners


def submission_from_csv(text: str) -> dict[int, str]:
    """Parse an ID,predicted.response CSV with collude/compete responses."""
    delimiter = ";" if text.splitlines() and text.splitlines()[0].count(";") > text.splitlines()[0].count(",") else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    fields = [f.strip().strip('"') for f in reader.fieldnames or []]
    if "ID" not in fields or "predicted.response" not in fields:
        raise ValidationError("submission CSV needs columns ID and predicted.response")
    labels: dict[int, str] = {}
    for line_no, record in enumerate(reader, start=2):
        raw_id = (record.get("ID") or "").strip()
        response = (record.get("predicted.response") or "").strip().strip('"')
        if not raw_id.lstrip("-").isdigit():
            raise ValidationError(f"row {line_no}: ID is not an integer: {raw_id!r}")
        if response not in CSV_LABEL:
            raise ValidationError(
                f"row {line_no}: response must be collude or compete, got {response!r}"
            )
        row_id = int(raw_id)
        if row_id in labels:
            raise ValidationError(f"row {line_no}: duplicate ID {row_id}")
        labels[row_id] = CSV_LABEL[response]
    return labels


def submission_to_csv(labels: dict[int, str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ID", "predicted.response"])
    for row_id in sorted(labels):
        writer.writerow([row_id, CSV_RESPONSE[labels[row_id]]])
    return buf.getvalue()


def leaderboard_to_csv(rows: list[ScoreRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [
        "participant",
        "part1_points",
        "part2_provisional",
        "part2_revoked",
        "correct_rate",
        "fp_count",
        "penalty_factor",
        "eligible",
        "final_points",
    ]
    writer.writerow(header)
    for row in rows:
        record = row.as_dict()
        writer.writerow([record[k] for k in header])
    return buf.getvalue()
