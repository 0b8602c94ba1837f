"""One classroom session: event-sourced orchestration over the game engine.

Every mutation is a command applied through :meth:`Session.apply`; commands
that validate are appended to the event log, so replaying the log from
genesis rebuilds the identical session, byte for byte in every export. All
randomness (join codes, seating, tie-breaks, dataset anonymization) derives
from the session seed plus the command order, never from wall clocks.
"""

from __future__ import annotations

import random

from . import authority, forest, screens
from .engine import (
    ROUNDS,
    SEATS,
    YEARS,
    GameEngine,
    allocate_groups,
    seat_village,
)
from .errors import (
    ForbiddenError,
    NotFoundError,
    PhaseError,
    ValidationError,
)
from .money import fmt

PHASES = ("lobby", "part1", "part2", "part3", "debrief")
BIDDING_PHASES = {"part1": 1, "part2": 2}

# No I/L/O/0/1: codes get read out loud in a classroom.
CODE_ALPHABET = "ABCDEFGHJKMNPQRSTUVWXYZ23456789"
CODE_LENGTH = 6
TOKEN_LENGTH = 16
MAX_CHAT_LENGTH = 500
DEFAULT_ROUND_SECONDS = 300


def _draw_code(rng: random.Random, length: int) -> str:
    return "".join(rng.choice(CODE_ALPHABET) for _ in range(length))


class Session:
    """Aggregate root for one running game; mutate only through apply()."""

    # -- construction ----------------------------------------------------

    def __init__(self):
        raise TypeError("use Session.create(...) or Session.replay(...)")

    @classmethod
    def _blank(cls) -> "Session":
        session = cls.__new__(cls)
        session.events = []
        session.feed = []
        session._created = False
        return session

    @classmethod
    def create(
        cls,
        session_id: str,
        class_size: int,
        seed: int,
        round_seconds: int = DEFAULT_ROUND_SECONDS,
    ) -> "Session":
        session = cls._blank()
        session.apply(
            "create",
            {
                "session_id": str(session_id),
                "class_size": int(class_size),
                "seed": int(seed),
                "round_seconds": int(round_seconds),
            },
        )
        return session

    @classmethod
    def replay(cls, events: list[dict]) -> "Session":
        """Rebuild a session by re-applying a recorded command log."""
        session = cls._blank()
        for record in events:
            expected = len(session.events)
            if record.get("seq") != expected:
                raise ValidationError(
                    f"event log out of order: expected seq {expected}, got {record.get('seq')}"
                )
            session.apply(record["kind"], record["args"])
        return session

    # -- command entry point ---------------------------------------------

    def apply(self, kind: str, args: dict) -> dict:
        """Validate and execute one command; log it only if it succeeds."""
        handler = getattr(self, f"_cmd_{kind}", None)
        if handler is None or kind.startswith("_"):
            raise ValidationError(f"unknown command: {kind!r}")
        if kind != "create" and not self._created:
            raise ValidationError("session has no create event yet")
        seq = len(self.events)
        result = handler(seq, args)
        self.events.append({"seq": seq, "kind": kind, "args": args})
        return result

    def _publish(self, kind: str, data: dict, group: str | None = None) -> None:
        self.feed.append({"index": len(self.feed), "kind": kind, "group": group, "data": data})

    # -- commands ---------------------------------------------------------

    def _cmd_create(self, seq: int, args: dict) -> dict:
        if self._created:
            raise ValidationError("session already created")
        self.session_id = str(args["session_id"])
        self.seed = int(args["seed"])
        self.class_size = int(args["class_size"])
        self.round_seconds = int(args.get("round_seconds", DEFAULT_ROUND_SECONDS))
        if self.round_seconds <= 0:
            raise ValidationError("round_seconds must be positive")
        self.allocation = allocate_groups(self.class_size)
        self.engine = GameEngine(self.allocation, self.seed)
        code_rng = random.Random(f"{self.seed}:codes")
        self.lecturer_token = _draw_code(code_rng, TOKEN_LENGTH)
        codes: list[str] = []
        while len(codes) < self.class_size:
            code = _draw_code(code_rng, CODE_LENGTH)
            if code not in codes:
                codes.append(code)
        self.codes = tuple(codes)
        self.code_group: dict[str, str] = {}
        cursor = 0
        for gid, size in zip(self.engine.group_ids, self.allocation.groups):
            for code in codes[cursor : cursor + size]:
                self.code_group[code] = gid
            cursor += size
        self.phase = "lobby"
        self.participants: dict[str, dict] = {}  # code -> {name, group_id, seat}
        self.chat_log: list[dict] = []
        self.training_csv: str | None = None
        self.dataset_rows: list[screens.ScreenRow] | None = None
        self.sealed_truth: screens.SealedTruth | None = None
        self.submissions: dict[str, dict[int, str]] = {}
        self.scoreboard: list[authority.ScoreRow] | None = None
        self.winner_codes: set[str] = set()
        self._round_context: dict[str, tuple[int, int, int]] = {}
        self._created = True
        self._publish("created", {"session_id": self.session_id, "groups": len(self.allocation.groups)})
        return {
            "session_id": self.session_id,
            "lecturer_token": self.lecturer_token,
            "join_codes": list(self.codes),
            "groups": {gid: [c for c in self.codes if self.code_group[c] == gid] for gid in self.engine.group_ids},
        }

    def _cmd_join(self, seq: int, args: dict) -> dict:
        if self.phase != "lobby":
            raise PhaseError("joining is only possible in the lobby")
        code = str(args.get("code", "")).strip().upper()
        name = str(args.get("name", "")).strip()
        if code not in self.code_group:
            raise NotFoundError(f"unknown join code: {code!r}")
        if code in self.participants:
            raise ValidationError(f"code {code} already joined")
        if not name:
            raise ValidationError("a display name is required")
        if len(name) > 60:
            raise ValidationError("display name is limited to 60 characters")
        group_id = self.code_group[code]
        self.participants[code] = {"name": name, "group_id": group_id, "seat": None}
        self._publish("joined", {"name": name, "group": group_id})
        return {"participant_id": code, "group_id": group_id}

    def _cmd_advance(self, seq: int, args: dict) -> dict:
        if self.phase == "debrief":
            raise PhaseError("the session is already in the debrief")
        target = PHASES[PHASES.index(self.phase) + 1]
        blockers = self._advance_blockers()
        if blockers:
            raise PhaseError(f"cannot advance to {target}", blockers=blockers)
        if target == "part1":
            self._assign_seats()
        elif target == "part3":
            self._build_part3_dataset()
        elif target == "debrief":
            self._finalize_scores()
        self.phase = target
        self._publish("phase", {"phase": target})
        return {"phase": target}

    def _advance_blockers(self) -> list[str]:
        blockers: list[str] = []
        if self.phase == "lobby":
            missing = [c for c in self.codes if c not in self.participants]
            if missing:
                blockers.append(f"{len(missing)} join codes unused: {', '.join(missing)}")
        elif self.phase in BIDDING_PHASES:
            part = BIDDING_PHASES[self.phase]
            pending = [
                t.tender_id
                for t in self.engine.schedule
                if t.part == part and not self.engine.is_awarded(t.tender_id)
            ]
            if pending:
                blockers.append(f"{len(pending)} tenders not yet awarded: {', '.join(pending[:8])}")
        elif self.phase == "part3":
            if not self.submissions:
                blockers.append("no classification submissions yet")
        return blockers

    def _assign_seats(self) -> None:
        rng = random.Random(f"{self.seed}:seating")
        for gid, size in zip(self.engine.group_ids, self.allocation.groups):
            members = [c for c in self.codes if self.code_group[c] == gid]
            for seat, code in zip(SEATS[:size], rng.sample(members, len(members))):
                self.participants[code]["seat"] = seat

    def _build_part3_dataset(self) -> None:
        tender_bids = [
            (t.tender_id, t.part, [r.bid for r in self.engine.bids[t.tender_id].values()])
            for t in self.engine.schedule
        ]
        self.dataset_rows, self.sealed_truth = screens.prepare_part3_dataset(
            tender_bids, f"{self.seed}:anon"
        )

    def _finalize_scores(self) -> None:
        part_points = {
            code: (
                self.engine.tally_part_points(info["group_id"], 1)[info["seat"]],
                self.engine.tally_part_points(info["group_id"], 2)[info["seat"]],
            )
            for code, info in self.participants.items()
        }
        seat_owner = {
            (info["group_id"], info["seat"]): code for code, info in self.participants.items()
        }
        winners: dict[int, tuple[str | None, int]] = {}
        for row_id, (tender_id, _part) in self.sealed_truth.origins.items():
            award = self.engine.awards[tender_id]
            if award.winner_seat is None:
                winners[row_id] = (None, 0)
            else:
                gid = self.engine.tender(tender_id).group_id
                winners[row_id] = (seat_owner[(gid, award.winner_seat)], award.margin)
        truth_part = {row_id: part for row_id, (_tid, part) in self.sealed_truth.origins.items()}
        rows = authority.score_participants(part_points, self.submissions, truth_part, winners)
        self.scoreboard, self.winner_codes = authority.final_leaderboard(rows)

    def _round_targets(self, args: dict) -> tuple[int, int, list[tuple[str, int, str]]]:
        """Resolve (year, round, [(group, round, tender_id) ...]) for a round command."""
        if self.phase not in BIDDING_PHASES:
            raise PhaseError("rounds only exist during the bidding parts")
        part = BIDDING_PHASES[self.phase]
        year = args.get("year")
        rnd = args.get("round")
        if year not in YEARS:
            raise ValidationError(f"year must be one of {list(YEARS)}, got {year!r}")
        rounds = list(ROUNDS) if rnd is None else [rnd]
        for r in rounds:
            if r not in ROUNDS:
                raise ValidationError(f"round must be one of {list(ROUNDS)}, got {rnd!r}")
        group = args.get("group_id")
        if group is not None and group not in self.engine.group_ids:
            raise NotFoundError(f"unknown group: {group!r}")
        groups = [group] if group is not None else list(self.engine.group_ids)
        targets = [
            (g, r, f"{g}-P{part}-Y{year}-R{r}") for g in groups for r in rounds
        ]
        return year, part, targets

    def _cmd_open_round(self, seq: int, args: dict) -> dict:
        year, part, targets = self._round_targets(args)
        for _g, _r, tid in targets:
            if self.engine.is_awarded(tid):
                raise ValidationError(f"{tid} is already awarded")
            if tid in self.engine.open_tenders:
                raise ValidationError(f"{tid} is already open")
        opened = []
        for group, rnd, tid in targets:
            self.engine.open_tender(tid)
            self._round_context[group] = (part, year, rnd)
            opened.append(tid)
            self._publish(
                "round_open",
                {
                    "part": part,
                    "year": year,
                    "round": rnd,
                    "tender_id": tid,
                    "deadline_seconds": self.round_seconds,
                },
                group=group,
            )
        return {"opened": opened}

    def _cmd_close_round(self, seq: int, args: dict) -> dict:
        year, part, targets = self._round_targets(args)
        for _g, _r, tid in targets:
            if not self.engine.is_awarded(tid) and tid not in self.engine.open_tenders:
                raise ValidationError(f"{tid} was never opened")
        closed = []
        for group, rnd, tid in targets:
            if self.engine.is_awarded(tid):
                continue  # double-close stays a logged no-op
            award = self.engine.award_tender(tid)
            closed.append(tid)
            if award.winner_seat is None:
                data = {"part": part, "year": year, "round": rnd, "tender_id": tid, "winner": None}
            else:
                winner = next(
                    code
                    for code, info in self.participants.items()
                    if info["group_id"] == group and info["seat"] == award.winner_seat
                )
                # Winner identity is public inside the group; amounts stay private.
                data = {
                    "part": part,
                    "year": year,
                    "round": rnd,
                    "tender_id": tid,
                    "winner": {
                        "seat": award.winner_seat,
                        "name": self.participants[winner]["name"],
                        "village": seat_village(award.winner_seat),
                    },
                    "tie_break": award.tie_break is not None,
                }
            self._publish("round_closed", data, group=group)
        return {"awarded": closed}

    def _participant(self, code: str) -> dict:
        info = self.participants.get(str(code).strip().upper())
        if info is None:
            raise NotFoundError(f"unknown participant: {code!r}")
        return info

    def group_of(self, code: str) -> str:
        return self._participant(code)["group_id"]

    def _cmd_bid(self, seq: int, args: dict) -> dict:
        if self.phase not in BIDDING_PHASES:
            raise PhaseError("bids are only accepted during the bidding parts")
        code = str(args.get("code", "")).strip().upper()
        info = self._participant(code)
        tender_id = str(args.get("tender_id", ""))
        tender = self.engine.tender(tender_id)
        if tender.group_id != info["group_id"]:
            raise ForbiddenError(f"{tender_id} belongs to another group")
        amount = args.get("amount")
        record = self.engine.submit_bid(tender_id, info["seat"], amount, submitted_at=seq)
        return {
            "tender_id": tender_id,
            "seat": record.seat,
            "amount": fmt(record.bid),
            "below_cost": record.bid < record.cost,
        }

    def _cmd_chat(self, seq: int, args: dict) -> dict:
        if self.phase != "part2":
            raise PhaseError("the chat is open during part 2 only")
        code = str(args.get("code", "")).strip().upper()
        info = self._participant(code)
        text = str(args.get("text", "")).strip()
        if not text:
            raise ValidationError("empty chat message")
        if len(text) > MAX_CHAT_LENGTH:
            raise ValidationError(f"chat messages are limited to {MAX_CHAT_LENGTH} characters")
        group = info["group_id"]
        context = self._round_context.get(group)
        message = {
            "seq": seq,
            "group_id": group,
            "participant_id": code,
            "name": info["name"],
            "seat": info["seat"],
            "text": text,
            "part": context[0] if context else None,
            "year": context[1] if context else None,
            "round": context[2] if context else None,
        }
        self.chat_log.append(message)
        self._publish(
            "chat",
            {"name": info["name"], "seat": info["seat"], "text": text},
            group=group,
        )
        return {"seq": seq}

    def _cmd_ingest_training(self, seq: int, args: dict) -> dict:
        text = args.get("csv")
        if not isinstance(text, str) or not text.strip():
            raise ValidationError("training CSV text is required")
        data = forest.load_training_csv(text)
        self.training_csv = text
        return {"rows": len(data), "columns": list(data.feature_names)}

    def _cmd_classify(self, seq: int, args: dict) -> dict:
        if self.phase != "part3":
            raise PhaseError("classification submissions are open during part 3 only")
        code = str(args.get("code", "")).strip().upper()
        self._participant(code)
        raw = args.get("labels")
        if not isinstance(raw, dict):
            raise ValidationError("labels must map dataset IDs to suspicious/non-suspicious")
        labels: dict[int, str] = {}
        for key, value in raw.items():
            try:
                row_id = int(key)
            except (TypeError, ValueError):
                raise ValidationError(f"dataset IDs are integers, got {key!r}") from None
            if row_id in labels:
                raise ValidationError(f"duplicate dataset ID {row_id}")
            labels[row_id] = value
        authority.validate_submission(labels, set(self.sealed_truth.origins))
        replaced = code in self.submissions
        self.submissions[code] = labels
        return {"rows": len(labels), "replaced": replaced}

    # -- queries ----------------------------------------------------------

    def events_since(self, after: int, group_id: str | None = None) -> list[dict]:
        """Public feed slice: global entries plus the given group's entries."""
        return [
            e
            for e in self.feed
            if e["index"] > after and (e["group"] is None or e["group"] == group_id)
        ]

    def open_tenders_for(self, group_id: str) -> list[dict]:
        entries = []
        for tid in sorted(self.engine.open_tenders):
            t = self.engine.tender(tid)
            if t.group_id == group_id:
                entries.append(t)
        entries.sort(key=lambda t: (t.part, t.year, t.round))
        return entries

    def participant_view(self, code: str) -> dict:
        code = str(code).strip().upper()
        info = self._participant(code)
        gid = info["group_id"]
        seat = info["seat"]
        view = {
            "session_id": self.session_id,
            "phase": self.phase,
            "participant_id": code,
            "name": info["name"],
            "group_id": gid,
            "seat": seat,
            "village": seat_village(seat) if seat else None,
            "group_members": [
                {"name": p["name"], "seat": p["seat"]}
                for c, p in sorted(self.participants.items())
                if p["group_id"] == gid
            ],
        }
        if self.phase in BIDDING_PHASES and seat:
            open_rows = []
            for t in self.open_tenders_for(gid):
                mine = self.engine.bids[t.tender_id].get(seat)
                open_rows.append(
                    {
                        "tender_id": t.tender_id,
                        "part": t.part,
                        "year": t.year,
                        "round": t.round,
                        "location": t.location,
                        "contract_type": t.contract_type,
                        "situation": t.situation,
                        "your_cost": fmt(self.engine.cost_for(t.tender_id, seat)),
                        "your_bid": fmt(mine.bid) if mine else None,
                        "deadline_seconds": self.round_seconds,
                    }
                )
            view["open_tenders"] = open_rows
            view["results"] = self._own_results(gid, seat)
        if self.phase in ("part3", "debrief"):
            view["results"] = self._own_results(gid, seat)
            view["dataset_rows"] = len(self.dataset_rows)
            view["submitted"] = code in self.submissions
            view["training_data_available"] = self.training_csv is not None
        if self.phase == "debrief":
            view["leaderboard"] = [row.as_dict() for row in self.scoreboard]
            view["winners"] = sorted(
                self.participants[c]["name"] for c in self.winner_codes
            )
        return view

    def _own_results(self, gid: str, seat: int | None) -> list[dict]:
        """Awarded tenders of the own group: winner identity plus own margin."""
        rows = []
        for t in sorted(
            self.engine.part_tenders(gid, 1) + self.engine.part_tenders(gid, 2),
            key=lambda t: (t.part, t.year, t.round),
        ):
            award = self.engine.awards.get(t.tender_id)
            if award is None:
                continue
            won = award.winner_seat == seat
            mine = self.engine.bids[t.tender_id].get(seat) if seat else None
            rows.append(
                {
                    "tender_id": t.tender_id,
                    "part": t.part,
                    "year": t.year,
                    "round": t.round,
                    "winner_seat": award.winner_seat,
                    "you_won": won,
                    "your_bid": fmt(mine.bid) if mine else None,
                    "your_margin": fmt(award.margin) if won else None,
                }
            )
        return rows

    def lecturer_view(self) -> dict:
        joined = [
            {"code": c, "name": p["name"], "group_id": p["group_id"], "seat": p["seat"]}
            for c, p in sorted(self.participants.items())
        ]
        view = {
            "session_id": self.session_id,
            "phase": self.phase,
            "class_size": self.class_size,
            "groups": {
                gid: {
                    "codes": [c for c in self.codes if self.code_group[c] == gid],
                    "size": size,
                }
                for gid, size in zip(self.engine.group_ids, self.allocation.groups)
            },
            "participants": joined,
            "missing_codes": [c for c in self.codes if c not in self.participants],
            "advance_blockers": self._advance_blockers() if self.phase != "debrief" else [],
            "round_seconds": self.round_seconds,
        }
        if self.phase in BIDDING_PHASES:
            part = BIDDING_PHASES[self.phase]
            view["open_tenders"] = sorted(self.engine.open_tenders)
            view["bids_in"] = {
                tid: len(self.engine.bids[tid]) for tid in sorted(self.engine.open_tenders)
            }
            view["awarded"] = sum(
                1 for t in self.engine.schedule if t.part == part and self.engine.is_awarded(t.tender_id)
            )
            view["tenders_in_part"] = sum(1 for t in self.engine.schedule if t.part == part)
        if self.phase in ("part3", "debrief"):
            view["submission_count"] = len(self.submissions)
            view["submitted_codes"] = sorted(self.submissions)
        view["chat_messages"] = len(self.chat_log)
        if self.phase == "debrief":
            view["leaderboard"] = [row.as_dict() for row in self.scoreboard]
            view["winners"] = sorted(self.winner_codes)
            view["truth"] = {
                str(row_id): {"tender_id": tid, "part": part}
                for row_id, (tid, part) in sorted(self.sealed_truth.origins.items())
            }
            view["bid_history"] = self._full_bid_history()
        return view

    def _full_bid_history(self) -> list[dict]:
        rows = []
        for t in self.engine.schedule:
            award = self.engine.awards.get(t.tender_id)
            for seat, record in sorted(self.engine.bids[t.tender_id].items()):
                rows.append(
                    {
                        "tender_id": t.tender_id,
                        "seat": seat,
                        "bid": fmt(record.bid),
                        "cost": fmt(record.cost),
                        "below_cost": record.bid < record.cost,
                        "won": award is not None and award.winner_seat == seat,
                    }
                )
        return rows

    # -- exports ----------------------------------------------------------

    def export(self, artifact: str) -> str:
        exporters = {
            "schedule": self.schedule_csv,
            "part3_dataset": self.part3_dataset_csv,
            "submissions": self.submissions_csv,
            "leaderboard": self.leaderboard_csv,
            "chatlog": self.chatlog_csv,
        }
        if artifact not in exporters:
            raise NotFoundError(f"unknown artifact: {artifact!r}; pick one of {sorted(exporters)}")
        return exporters[artifact]()

    def schedule_csv(self) -> str:
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["group_id", "part", "year", "round", "location", "contract_type", "situation", "fixed_cost"]
        )
        for t in self.engine.schedule:
            writer.writerow(
                [t.group_id, t.part, t.year, t.round, t.location, t.contract_type, t.situation, fmt(t.fixed_cost)]
            )
        return buf.getvalue()

    def part3_dataset_csv(self) -> str:
        if self.dataset_rows is None:
            raise PhaseError("the anonymized dataset is published when part 3 opens")
        return screens.dataset_to_csv(self.dataset_rows)

    def submissions_csv(self) -> str:
        if self.phase not in ("part3", "debrief"):
            raise PhaseError("submissions exist from part 3 on")
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(["participant", "ID", "response"])
        for code in sorted(self.submissions):
            labels = self.submissions[code]
            for row_id in sorted(labels):
                writer.writerow([code, row_id, authority.CSV_RESPONSE[labels[row_id]]])
        return buf.getvalue()

    def leaderboard_csv(self) -> str:
        if self.phase != "debrief":
            raise PhaseError("the leaderboard is sealed until the debrief")
        return authority.leaderboard_to_csv(self.scoreboard)

    def chatlog_csv(self) -> str:
        if self.phase != "debrief":
            raise PhaseError("the chat log with identities stays sealed until the debrief")
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(["seq", "group_id", "participant_id", "name", "seat", "part", "year", "round", "text"])
        for m in self.chat_log:
            writer.writerow(
                [m["seq"], m["group_id"], m["participant_id"], m["name"], m["seat"], m["part"], m["year"], m["round"], m["text"]]
            )
        return buf.getvalue()

    # -- snapshots ---------------------------------------------------------

    def snapshot(self) -> dict:
        """Observability dump; the authoritative load path is full replay."""
        return {
            "session_id": self.session_id,
            "phase": self.phase,
            "events": len(self.events),
            "participants": {c: dict(p) for c, p in self.participants.items()},
            "awards": {
                tid: {
                    "winner_seat": a.winner_seat,
                    "margin": None if a.margin is None else fmt(a.margin),
                }
                for tid, a in sorted(self.engine.awards.items())
            },
            "submissions": sorted(self.submissions),
            "feed_length": len(self.feed),
        }
