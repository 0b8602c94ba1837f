"""Lecturer command line: session control, exports, and the offline toolkit.

Session commands talk to a running server (--url plus --token) or, when no
server is up, directly to a data directory (--data-dir). Never point
--data-dir at a directory a running server is using; the two processes would
fork the event log.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import authority, forest, report, screens
from .errors import GameError
from .store import SessionStore


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _print_table(csv_text: str) -> None:
    rows = list(csv.reader(io.StringIO(csv_text)))
    if not rows:
        return
    widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())


class _HttpTarget:
    """Lecturer operations against a running server."""

    def __init__(self, url: str, token: str | None):
        import httpx

        self.base = url.rstrip("/")
        self.token = token
        self.client = httpx.Client(timeout=30.0)

    def _headers(self) -> dict:
        return {"X-Lecturer-Token": self.token} if self.token else {}

    def _check(self, response) -> None:
        if response.status_code >= 400:
            try:
                payload = response.json()
            except ValueError:
                raise GameError(response.text.strip() or f"HTTP {response.status_code}")
            detail = payload.get("detail", f"HTTP {response.status_code}")
            blockers = payload.get("blockers") or []
            raise GameError("; ".join([detail, *blockers]))

    def create(self, class_size, seed, round_seconds, session_id):
        response = self.client.post(
            f"{self.base}/sessions",
            json={
                "class_size": class_size,
                "seed": seed,
                "round_seconds": round_seconds,
                "session_id": session_id,
            },
        )
        self._check(response)
        data = response.json()
        # remember the freshly minted token so a follow-up ingest can run
        self.token = self.token or data["lecturer_token"]
        return data

    def apply(self, sid: str, kind: str, args: dict) -> dict:
        if kind == "advance":
            response = self.client.post(f"{self.base}/sessions/{sid}/advance", headers=self._headers())
        elif kind == "open_round":
            response = self.client.post(
                f"{self.base}/sessions/{sid}/rounds/open", json=args, headers=self._headers()
            )
        elif kind == "close_round":
            response = self.client.post(
                f"{self.base}/sessions/{sid}/rounds/close", json=args, headers=self._headers()
            )
        elif kind == "ingest_training":
            response = self.client.put(
                f"{self.base}/sessions/{sid}/training-data",
                content=args["csv"].encode("utf-8"),
                headers=self._headers(),
            )
        else:
            raise GameError(f"unsupported remote command: {kind}")
        self._check(response)
        return response.json()

    def export(self, sid: str, artifact: str) -> str:
        response = self.client.get(
            f"{self.base}/sessions/{sid}/export/{artifact}", headers=self._headers()
        )
        self._check(response)
        return response.text

    def dataset(self, sid: str) -> str:
        response = self.client.get(f"{self.base}/sessions/{sid}/part3/dataset.csv")
        self._check(response)
        return response.text


class _StoreTarget:
    """Lecturer operations straight on the data directory (no server running)."""

    def __init__(self, data_dir: str):
        self.store = SessionStore(data_dir)

    def create(self, class_size, seed, round_seconds, session_id):
        _session, result = self.store.create(
            class_size=class_size, seed=seed, round_seconds=round_seconds, session_id=session_id
        )
        return result

    def apply(self, sid: str, kind: str, args: dict) -> dict:
        return self.store.apply(sid, kind, args)

    def export(self, sid: str, artifact: str) -> str:
        return self.store.get(sid).export(artifact)

    def dataset(self, sid: str) -> str:
        return self.store.get(sid).part3_dataset_csv()


def _target(ns) -> _HttpTarget | _StoreTarget:
    if getattr(ns, "url", None):
        return _HttpTarget(ns.url, getattr(ns, "token", None))
    if getattr(ns, "data_dir", None):
        return _StoreTarget(ns.data_dir)
    raise GameError("pass --url (running server) or --data-dir (offline)")


def _add_target_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--url", help="base URL of a running server")
    parser.add_argument("--token", help="lecturer token for --url mode")
    parser.add_argument("--data-dir", help="data directory for offline mode")


def _load_config(path: str) -> dict:
    import yaml

    payload = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise GameError(f"config file {path} must hold a mapping")
    allowed = {"class_size", "seed", "round_seconds", "session_id", "training_data"}
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise GameError(f"unknown config keys: {', '.join(unknown)}")
    return payload


def cmd_create_session(ns) -> int:
    if ns.config:
        config = _load_config(ns.config)
    else:
        config = {}
    class_size = ns.class_size if ns.class_size is not None else config.get("class_size")
    seed = ns.seed if ns.seed is not None else config.get("seed")
    if class_size is None or seed is None:
        return _fail("class size and seed are required (flags or config file)")
    round_seconds = (
        ns.round_seconds if ns.round_seconds is not None else config.get("round_seconds", 300)
    )
    session_id = ns.session_id or config.get("session_id")
    target = _target(ns)
    result = target.create(int(class_size), int(seed), int(round_seconds), session_id)
    sid = result["session_id"]
    print(f"session: {sid}")
    print(f"lecturer token: {result['lecturer_token']}")
    print("join codes:")
    for gid, codes in result["groups"].items():
        print(f"  {gid}: {' '.join(codes)}")
    training = ns.training_data or config.get("training_data")
    if training:
        text = Path(training).read_text(encoding="utf-8")
        ingested = target.apply(sid, "ingest_training", {"csv": text})
        print(f"training data: {ingested['rows']} rows ingested")
    return 0


def cmd_serve(ns) -> int:
    import uvicorn

    from .api import create_app

    store = SessionStore(ns.data_dir)
    app = create_app(store, static_dir=ns.static)
    uvicorn.run(app, host=ns.host, port=ns.port, log_level="warning")
    return 0


def cmd_advance(ns) -> int:
    result = _target(ns).apply(ns.session, "advance", {})
    print(f"phase: {result['phase']}")
    return 0


def _round_args(ns) -> dict:
    return {"year": ns.year, "round": ns.round, "group_id": ns.group}


def cmd_open_round(ns) -> int:
    result = _target(ns).apply(ns.session, "open_round", _round_args(ns))
    print(f"opened: {' '.join(result['opened'])}")
    return 0


def cmd_close_round(ns) -> int:
    result = _target(ns).apply(ns.session, "close_round", _round_args(ns))
    awarded = result["awarded"]
    print(f"awarded: {' '.join(awarded) if awarded else '(nothing new)'}")
    return 0


def cmd_ingest(ns) -> int:
    text = Path(ns.file).read_text(encoding="utf-8")
    result = _target(ns).apply(ns.session, "ingest_training", {"csv": text})
    print(f"ingested {result['rows']} rows, columns: {', '.join(result['columns'])}")
    return 0


def cmd_export(ns) -> int:
    text = _target(ns).export(ns.session, ns.artifact)
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        print(f"wrote {ns.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_score(ns) -> int:
    text = _target(ns).export(ns.session, "leaderboard")
    _print_table(text)
    return 0


def cmd_report(ns) -> int:
    out = ns.out
    if ns.dataset:
        text = Path(ns.dataset).read_text(encoding="utf-8")
        written = report.render_dataset_report(text, out)
    elif getattr(ns, "data_dir", None) and ns.session:
        store = SessionStore(ns.data_dir)
        written = report.render_report(store.get(ns.session), out)
    elif getattr(ns, "url", None) and ns.session:
        text = _target(ns).dataset(ns.session)
        written = report.render_dataset_report(text, out)
    else:
        return _fail("pass --dataset FILE, or --session with --data-dir/--url")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_train(ns) -> int:
    text = Path(ns.training).read_text(encoding="utf-8")
    data = forest.load_training_csv(text)
    params = forest.ForestParams(n_trees=ns.trees, mtry=ns.mtry)
    if ns.train_fraction >= 1.0:
        train, test = data, None
    else:
        train, test = forest.train_test_split(data, ns.train_fraction, ns.seed)
    model = forest.fit(train, params, seed=ns.seed)
    print(f"trained {model.n_trees} trees on {len(train)} rows (mtry={model.mtry})")
    if test is not None and len(test):
        result = forest.classify(model, test.features, threshold=ns.threshold)
        acc = forest.accuracy(result.labels, test.labels)
        matrix = forest.confusion_matrix(result.labels, test.labels)
        print(f"holdout accuracy: {acc:.3f} on {len(test)} rows")
        print(
            "confusion: "
            f"tp={matrix['tp']} fp={matrix['fp']} fn={matrix['fn']} tn={matrix['tn']}"
        )
    else:
        print("no holdout: model fit on the full file")
    Path(ns.out).write_text(model.to_json(), encoding="utf-8")
    print(f"wrote {ns.out}")
    return 0


def cmd_classify(ns) -> int:
    model = forest.DecisionForest.from_json(Path(ns.model).read_text(encoding="utf-8"))
    rows = sorted(
        screens.dataset_from_csv(Path(ns.dataset).read_text(encoding="utf-8")),
        key=lambda r: r.id,
    )
    features = [
        [float("nan") if row.feature(name) is None else row.feature(name) for name in forest.DEFAULT_FEATURES]
        for row in rows
    ]
    result = forest.classify(
        model, features, threshold=ns.threshold, feature_names=forest.DEFAULT_FEATURES
    )
    labels = {
        row.id: authority.SUSPICIOUS if label else authority.NON_SUSPICIOUS
        for row, label in zip(rows, result.labels)
    }
    text = authority.submission_to_csv(labels)
    if ns.proba:
        # third column so a worksheet can re-threshold without reclassifying
        lines = text.splitlines()
        lines[0] += ",predicted.proba"
        for i, proba in enumerate(result.probabilities, start=1):
            lines[i] += f",{proba:.6g}"
        text = "\n".join(lines) + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        print(f"wrote {ns.out} ({sum(result.labels)} of {len(rows)} flagged collude)")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tetravale", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("create-session", help="allocate groups, schedule, and join codes")
    _add_target_args(p)
    p.add_argument("--config", help="YAML file: class_size, seed, round_seconds, training_data")
    p.add_argument("--class-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--round-seconds", type=int)
    p.add_argument("--session-id")
    p.add_argument("--training-data", help="training CSV to ingest right away")
    p.set_defaults(func=cmd_create_session)

    p = sub.add_parser("serve", help="run the HTTP server")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", help="directory with a built browser client")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("advance", help="move the session to its next phase")
    _add_target_args(p)
    p.add_argument("--session", required=True)
    p.set_defaults(func=cmd_advance)

    for name, func, help_text in (
        ("open-round", cmd_open_round, "open bidding for a year/round"),
        ("close-round", cmd_close_round, "close bidding and award"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_target_args(p)
        p.add_argument("--session", required=True)
        p.add_argument("--year", type=int, required=True)
        p.add_argument("--round", type=int, help="omit to cover all four rounds")
        p.add_argument("--group", help="omit to cover every group")
        p.set_defaults(func=func)

    p = sub.add_parser("ingest", help="store the labeled training CSV")
    _add_target_args(p)
    p.add_argument("--session", required=True)
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("export", help="write a session artifact CSV")
    _add_target_args(p)
    p.add_argument("--session", required=True)
    p.add_argument(
        "--artifact",
        required=True,
        choices=["schedule", "part3_dataset", "submissions", "leaderboard", "chatlog"],
    )
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("score", help="print the final leaderboard")
    _add_target_args(p)
    p.add_argument("--session", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="render figures plus CSVs into a directory")
    _add_target_args(p)
    p.add_argument("--session")
    p.add_argument("--dataset", help="standalone dataset CSV instead of a session")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("train", help="fit a forest on a labeled training CSV")
    p.add_argument("--training", required=True)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--mtry", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="label a dataset CSV with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="submission CSV path (default: stdout)")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument(
        "--proba", action="store_true", help="append the cartel probability as a third column"
    )
    p.set_defaults(func=cmd_classify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except GameError as exc:
        return _fail(str(exc))
    except FileNotFoundError as exc:
        return _fail(f"file not found: {exc.filename}")


if __name__ == "__main__":
    raise SystemExit(main())
