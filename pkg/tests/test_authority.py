"""Consensus revocation, penalties, eligibility, and the leaderboard."""

from fractions import Fraction

import pytest

from tetravale import authority
from tetravale.authority import (
    NON_SUSPICIOUS,
    SUSPICIOUS,
    apply_revocations,
    compute_consensus,
    final_leaderboard,
    grade_submission,
    leaderboard_to_csv,
    penalty_factor,
    score_participants,
    submission_from_csv,
    submission_to_csv,
    validate_submission,
)
from tetravale.errors import ValidationError


def labels_for(ids, suspicious_ids):
    return {i: SUSPICIOUS if i in suspicious_ids else NON_SUSPICIOUS for i in ids}


class TestConsensus:
    def test_three_of_four_is_unequivocal(self):
        submissions = {
            f"P{k}": labels_for(range(1, 4), {1} if k < 3 else {1, 2}) for k in range(4)
        }
        report = compute_consensus(submissions)
        assert report.votes[1] == 4 and report.votes[2] == 1
        assert report.fraction(1) == 1
        assert 1 in report.unequivocal and 2 not in report.unequivocal

    def test_exact_boundary_counts(self):
        ids = range(1, 3)
        # ID 1: 3 of 4 flag it; ID 2: 2 of 4
        submissions = {
            "A": labels_for(ids, {1, 2}),
            "B": labels_for(ids, {1, 2}),
            "C": labels_for(ids, {1}),
            "D": labels_for(ids, set()),
        }
        report = compute_consensus(submissions)
        assert report.fraction(1) == Fraction(3, 4)
        assert report.fraction(2) == Fraction(2, 4)
        assert report.unequivocal == {1}

    def test_nine_of_twelve_is_unequivocal(self):
        submissions = {
            f"P{k}": labels_for([1], {1} if k < 9 else set()) for k in range(12)
        }
        assert compute_consensus(submissions).unequivocal == {1}
        # one vote fewer falls short
        submissions["P8"] = labels_for([1], set())
        assert compute_consensus(submissions).unequivocal == set()

    def test_no_submissions_is_an_error(self):
        with pytest.raises(ValidationError):
            compute_consensus({})


class TestSubmissionValidation:
    def test_must_cover_the_dataset_exactly(self):
        ids = {1, 2, 3}
        validate_submission(labels_for(ids, {2}), ids)
        with pytest.raises(ValidationError, match=r"missing IDs: \[3\]"):
            validate_submission(labels_for({1, 2}, set()), ids)
        with pytest.raises(ValidationError, match=r"unknown dataset IDs: \[9\]"):
            validate_submission(labels_for({1, 2, 3, 9}, set()), ids)
        with pytest.raises(ValidationError, match="labels must be"):
            validate_submission({1: "sus", 2: NON_SUSPICIOUS, 3: NON_SUSPICIOUS}, ids)


class TestGrading:
    TRUTH = {1: 1, 2: 1, 3: 2, 4: 2}  # two rows from each part

    def test_perfect_submission(self):
        rate, fp = grade_submission(labels_for(self.TRUTH, {3, 4}), self.TRUTH)
        assert rate == 1 and fp == 0

    def test_false_positives_are_part_one_flags(self):
        rate, fp = grade_submission(labels_for(self.TRUTH, {1, 3, 4}), self.TRUTH)
        assert rate == Fraction(3, 4) and fp == 1

    def test_misses_cost_accuracy_but_no_penalty(self):
        rate, fp = grade_submission(labels_for(self.TRUTH, set()), self.TRUTH)
        assert rate == Fraction(2, 4) and fp == 0

    def test_penalty_factor_floors_at_zero(self):
        assert penalty_factor(0) == 1
        assert penalty_factor(8) == Fraction(3, 5)
        assert penalty_factor(20) == 0
        assert penalty_factor(25) == 0


class TestRevocations:
    def test_only_collusive_part_awards_are_revoked(self):
        truth_part = {1: 1, 2: 2, 3: 2}
        winners = {1: ("A", 900), 2: ("A", 700), 3: ("B", 300)}
        revoked = apply_revocations({1, 2, 3}, truth_part, winners)
        assert revoked == {"A": 700, "B": 300}

    def test_non_flagged_rows_keep_their_margins(self):
        revoked = apply_revocations({2}, {1: 1, 2: 2, 3: 2}, {2: ("A", 700), 3: ("B", 300)})
        assert revoked == {"A": 700}

    def test_negative_margins_are_clamped(self):
        revoked = apply_revocations({1}, {1: 2}, {1: ("A", -250)})
        assert revoked == {"A": 0}

    def test_unawarded_rows_are_skipped(self):
        assert apply_revocations({1}, {1: 2}, {1: (None, 0)}) == {}


class TestScoring:
    def test_penalized_winner_golden(self):
        # one participant: 23.50 from part 1, 60.00 provisional from part 2,
        # 40.00 of it revoked, 8 false positives -> factor 3/5, final 26.10
        truth_part = {i: (2 if i <= 8 else 1) for i in range(1, 25)}
        # flags every collusive row plus 8 competitive ones
        labels = labels_for(truth_part, set(range(1, 17)))
        winners = {i: ("X", 500) for i in range(1, 9)}  # 8 x 5.00 = 40.00 revoked
        rows = score_participants(
            part_points={"X": (2350, 6000)},
            submissions={"X": labels},
            truth_part=truth_part,
            winners=winners,
        )
        (row,) = rows
        assert row.part2_revoked == 4000
        assert row.fp_count == 8
        assert row.penalty_factor == Fraction(3, 5)
        assert row.final_points == 2610
        assert row.as_dict()["final_points"] == "26.1"
        assert row.eligible  # sole submitter sits exactly on the median

    def test_final_points_never_negative(self):
        truth_part = {1: 2}
        labels = labels_for(truth_part, {1})
        rows = score_participants(
            part_points={"X": (0, 300)},
            submissions={"X": labels},
            truth_part=truth_part,
            winners={1: ("X", 900)},  # revokes more than part 2 paid out
        )
        assert rows[0].final_points == 0

    def test_median_eligibility_is_inclusive(self):
        truth_part = {i: (2 if i <= 2 else 1) for i in range(1, 5)}
        flag_sets = {
            "A": {1, 2},  # 4/4
            "B": {1, 2, 3},  # 3/4
            "C": {1},  # 3/4
            "D": {3, 4},  # 0/4
        }
        rows = score_participants(
            part_points={pid: (0, 0) for pid in flag_sets},
            submissions={pid: labels_for(truth_part, s) for pid, s in flag_sets.items()},
            truth_part=truth_part,
            winners={},
        )
        eligible = {r.participant_id for r in rows if r.eligible}
        # median rate is 3/4: B and C sit exactly on it and stay in
        assert eligible == {"A", "B", "C"}

    def test_non_submitters_keep_points_but_cannot_win(self):
        truth_part = {1: 2}
        rows = score_participants(
            part_points={"A": (1000, 500), "B": (5000, 2000)},
            submissions={"A": labels_for(truth_part, {1})},
            truth_part=truth_part,
            winners={1: ("B", 700)},
        )
        by_id = {r.participant_id: r for r in rows}
        assert by_id["B"].correct_rate is None
        assert by_id["B"].penalty_factor == 1
        assert by_id["B"].part2_revoked == 700
        assert by_id["B"].final_points == 6300
        assert not by_id["B"].eligible
        ordered, winners = final_leaderboard(rows)
        assert winners == {"A"}
        assert [r.participant_id for r in ordered] == ["A", "B"]

    def test_tied_top_scores_co_win(self):
        truth_part = {1: 1}
        submissions = {
            "A": labels_for(truth_part, set()),
            "B": labels_for(truth_part, set()),
        }
        rows = score_participants(
            part_points={"A": (1500, 0), "B": (1000, 500)},
            submissions=submissions,
            truth_part=truth_part,
            winners={},
        )
        _ordered, winners = final_leaderboard(rows)
        assert winners == {"A", "B"}


class TestSubmissionCsv:
    def test_round_trip(self):
        labels = {1: SUSPICIOUS, 2: NON_SUSPICIOUS, 10: SUSPICIOUS}
        text = submission_to_csv(labels)
        assert text.splitlines()[0] == "ID,predicted.response"
        assert submission_from_csv(text) == labels

    def test_quoted_stats_export_flavor(self):
        text = '"ID","predicted.response"\n"1","collude"\n"2","compete"\n'
        assert submission_from_csv(text) == {1: SUSPICIOUS, 2: NON_SUSPICIOUS}

    def test_semicolon_flavor(self):
        text = "ID;predicted.response\n1;collude\n2;compete\n"
        assert submission_from_csv(text) == {1: SUSPICIOUS, 2: NON_SUSPICIOUS}

    @pytest.mark.parametrize(
        "text, message",
        [
            ("ID,answer\n1,collude\n", "needs columns"),
            ("ID,predicted.response\n1,collude\n1,compete\n", "row 3: duplicate ID 1"),
            ("ID,predicted.response\nx,collude\n", "row 2"),
            ("ID,predicted.response\n1,maybe\n", "collude or compete"),
        ],
    )
    def test_malformed_files_name_the_row(self, text, message):
        with pytest.raises(ValidationError, match=message):
            submission_from_csv(text)


class TestLeaderboardCsv:
    def test_columns_and_formatting(self):
        truth_part = {1: 2}
        rows = score_participants(
            part_points={"A": (2350, 6000)},
            submissions={"A": labels_for(truth_part, {1})},
            truth_part=truth_part,
            winners={1: ("A", 4000)},
        )
        ordered, _ = final_leaderboard(rows)
        text = leaderboard_to_csv(ordered)
        header, line = text.splitlines()
        assert header == (
            "participant,part1_points,part2_provisional,part2_revoked,"
            "correct_rate,fp_count,penalty_factor,eligible,final_points"
        )
        assert line == "A,23.5,60,40,1.0,0,1.0,yes,43.5"

    def test_consensus_report_is_behind_the_csv(self):
        # one honest submitter is enough to strip a collusive award
        report = compute_consensus({"A": {1: SUSPICIOUS}})
        assert report.unequivocal == {1}
        assert authority.CSV_RESPONSE[SUSPICIOUS] == "collude"
