"""Scripted bots that play a session from the lobby to the debrief.

One script, three transports: the same command sequence can drive a Session
object directly, a SessionStore, or the HTTP API, so replay and end-to-end
tests compare like with like.
"""

from __future__ import annotations

import random

from tetravale import forest, screens
from tetravale.engine import ROUNDS, YEARS
from tetravale.money import to_cents


def bot_bid_units(part: int, seat: int, designated: int, cost_cents: int, rng: random.Random) -> float:
    """Competitive bids add a private markup on own cost; collusive rounds let
    the designated seat bid fat while everyone else covers far above."""
    if part == 1:
        factor = 1 + rng.uniform(0.02, 0.18)
    elif seat == designated:
        factor = 1.7
    else:
        factor = 2.5 + seat * 0.05
    return round(cost_cents * factor / 100, 2)


class Driver:
    """Plays a full game through three callables supplied by the transport."""

    def __init__(self, apply_fn, view_fn, dataset_fn, codes, seed: int = 11):
        self.apply = apply_fn  # (kind, args) -> result dict
        self.view = view_fn  # (code) -> participant view
        self.dataset = dataset_fn  # () -> part-3 CSV text
        self.codes = list(codes)
        self.rng = random.Random(seed)

    def join_all(self) -> None:
        for i, code in enumerate(self.codes):
            self.apply("join", {"code": code, "name": f"Bidder {i + 1:02d}"})

    def play_part(self, part: int) -> None:
        for year in YEARS:
            for rnd in ROUNDS:
                self.apply("open_round", {"year": year, "round": rnd})
                for code in self.codes:
                    view = self.view(code)
                    seats = sorted(m["seat"] for m in view["group_members"])
                    designated = seats[(year + rnd) % len(seats)]
                    for tender in view["open_tenders"]:
                        if tender["your_bid"] is not None:
                            continue
                        cost = to_cents(tender["your_cost"])
                        amount = bot_bid_units(part, view["seat"], designated, cost, self.rng)
                        self.apply(
                            "bid",
                            {"code": code, "tender_id": tender["tender_id"], "amount": amount},
                        )
                if part == 2 and rnd == 1:
                    chatter = self.codes[(year - 1) % len(self.codes)]
                    self.apply(
                        "chat",
                        {"code": chatter, "text": f"year {year}: lowest cost takes it, rest cover"},
                    )
                self.apply("close_round", {"year": year, "round": rnd})

    def classify_all(self, n_trees: int = 40) -> None:
        """Every bot submits forest labels, each with a few private flips so
        correct rates differ across the class."""
        rows = screens.dataset_from_csv(self.dataset())
        training = forest.synthetic_training_data(240, seed=5)
        model = forest.fit(training, forest.ForestParams(n_trees=n_trees), seed=5)
        features = [
            [
                float("nan") if row.feature(name) is None else row.feature(name)
                for name in forest.DEFAULT_FEATURES
            ]
            for row in rows
        ]
        verdicts = forest.classify(
            model, features, threshold=0.5, feature_names=forest.DEFAULT_FEATURES
        )
        for i, code in enumerate(self.codes):
            flips = set(self.rng.sample(range(len(rows)), k=min(i, len(rows))))
            labels = {}
            for j, row in enumerate(rows):
                suspicious = bool(verdicts.labels[j]) ^ (j in flips)
                labels[row.id] = "suspicious" if suspicious else "non-suspicious"
            self.apply("classify", {"code": code, "labels": labels})

    def run(self) -> None:
        self.join_all()
        self.apply("advance", {})  # lobby -> part1
        self.play_part(1)
        self.apply("advance", {})  # part1 -> part2
        self.play_part(2)
        self.apply("advance", {})  # part2 -> part3
        self.classify_all()
        self.apply("advance", {})  # part3 -> debrief


def drive_session(session, bot_seed: int = 11):
    """Play an already-created Session in place; returns it at the debrief."""
    Driver(
        apply_fn=session.apply,
        view_fn=session.participant_view,
        dataset_fn=session.part3_dataset_csv,
        codes=session.codes,
        seed=bot_seed,
    ).run()
    return session


def drive_store(store, sid: str, codes, bot_seed: int = 11):
    """Play a session that lives in a SessionStore, through store.apply."""
    Driver(
        apply_fn=lambda kind, args: store.apply(sid, kind, args),
        view_fn=lambda code: store.get(sid).participant_view(code),
        dataset_fn=lambda: store.get(sid).part3_dataset_csv(),
        codes=codes,
        seed=bot_seed,
    ).run()
    return store.get(sid)


class HttpTransport:
    """Adapts the driver callables onto the HTTP API."""

    _COMMANDS = {
        "join": ("POST", "/sessions/{sid}/join", False),
        "bid": ("POST", "/sessions/{sid}/bids", False),
        "chat": ("POST", "/sessions/{sid}/chat", False),
        "classify": ("POST", "/sessions/{sid}/classifications", False),
        "advance": ("POST", "/sessions/{sid}/advance", True),
        "open_round": ("POST", "/sessions/{sid}/rounds/open", True),
        "close_round": ("POST", "/sessions/{sid}/rounds/close", True),
    }

    def __init__(self, client, sid: str, token: str):
        self.client = client
        self.sid = sid
        self.token = token

    def apply(self, kind: str, args: dict) -> dict:
        method, path, lecturer = self._COMMANDS[kind]
        headers = {"X-Lecturer-Token": self.token} if lecturer else {}
        if kind == "advance":
            response = self.client.post(path.format(sid=self.sid), headers=headers)
        else:
            if kind == "classify":
                args = {**args, "labels": {str(k): v for k, v in args["labels"].items()}}
            response = self.client.request(
                method, path.format(sid=self.sid), json=args, headers=headers
            )
        assert response.status_code == 200, (kind, response.status_code, response.text)
        return response.json()

    def view(self, code: str) -> dict:
        response = self.client.get(f"/sessions/{self.sid}/participants/{code}")
        assert response.status_code == 200, response.text
        return response.json()

    def dataset(self) -> str:
        response = self.client.get(f"/sessions/{self.sid}/part3/dataset.csv")
        assert response.status_code == 200, response.text
        return response.text


def drive_http(client, sid: str, token: str, codes, bot_seed: int = 11) -> None:
    """Play a session end to end over the HTTP API."""
    transport = HttpTransport(client, sid, token)
    Driver(
        apply_fn=transport.apply,
        view_fn=transport.view,
        dataset_fn=transport.dataset,
        codes=codes,
        seed=bot_seed,
    ).run()
