"""Render a session's report: delimited exports plus figures in one directory.

Figures are written headlessly (Agg backend). Before the debrief the plots
stay anonymized; at the debrief the truth map colors each tender and the
leaderboard chart joins the pack.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from . import screens
from .errors import PhaseError

COMPETITIVE_COLOR = "#4878a8"
COLLUSIVE_COLOR = "#c44e52"
NEUTRAL_COLOR = "#666666"


def _spread_figure(rows, truth, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(11, 4.5))
    seen = set()
    for row in sorted(rows, key=lambda r: r.id):
        if truth is None:
            color, label = NEUTRAL_COLOR, None
        elif truth.suspicious(row.id):
            color, label = COLLUSIVE_COLOR, "collusive part"
        else:
            color, label = COMPETITIVE_COLOR, "competitive part"
        if label in seen:
            label = None
        else:
            seen.add(label)
        ax.scatter([row.id] * len(row.bids), row.bids, s=14, color=color, label=label, alpha=0.8)
    ax.set_xlabel("tender ID")
    ax.set_ylabel("bid")
    ax.set_title("Ranked bids per tender")
    if truth is not None:
        ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _screens_figure(rows, truth, path: Path) -> None:
    fig, axes = plt.subplots(2, 3, figsize=(12, 6.5))
    flat = axes.ravel()
    for ax, name in zip(flat, screens.SCREEN_NAMES):
        if truth is None:
            values = [row.feature(name) for row in rows if row.feature(name) is not None]
            ax.hist(values, bins=16, color=NEUTRAL_COLOR)
        else:
            groups = {True: [], False: []}
            for row in rows:
                value = row.feature(name)
                if value is not None:
                    groups[truth.suspicious(row.id)].append(value)
            ax.hist(
                [groups[False], groups[True]],
                bins=16,
                color=[COMPETITIVE_COLOR, COLLUSIVE_COLOR],
                label=["competitive", "collusive"],
                stacked=True,
            )
            ax.legend(fontsize=7)
        ax.set_title(name)
    flat[-1].axis("off")
    fig.suptitle("Screen distributions")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _leaderboard_figure(scoreboard, display_names, path: Path) -> None:
    ordered = list(reversed(scoreboard))  # barh draws bottom-up
    labels = [display_names.get(r.participant_id, r.participant_id) for r in ordered]
    points = [r.final_points / 100 for r in ordered]
    colors = [COMPETITIVE_COLOR if r.eligible else NEUTRAL_COLOR for r in ordered]
    fig, ax = plt.subplots(figsize=(8, 0.5 * max(4, len(ordered)) + 1))
    bars = ax.barh(range(len(ordered)), points, color=colors)
    ax.set_yticks(range(len(ordered)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_xlabel("final points")
    ax.set_title("Final leaderboard (grey = ineligible)")
    for bar, row in zip(bars, ordered):
        if not row.eligible:
            bar.set_hatch("//")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(session, outdir: str | Path) -> list[Path]:
    """Write the dataset CSV and figures; at debrief also the leaderboard."""
    if session.dataset_rows is None:
        raise PhaseError("a report needs the anonymized dataset; advance past part 2 first")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    debrief = session.phase == "debrief"
    truth = session.sealed_truth if debrief else None
    written = []

    dataset_path = out / "part3_dataset.csv"
    dataset_path.write_text(session.part3_dataset_csv(), encoding="utf-8")
    written.append(dataset_path)

    spread_path = out / "bid_spread.png"
    _spread_figure(session.dataset_rows, truth, spread_path)
    written.append(spread_path)

    screens_path = out / "screens.png"
    _screens_figure(session.dataset_rows, truth, screens_path)
    written.append(screens_path)

    if debrief:
        names = {code: info["name"] for code, info in session.participants.items()}
        board_csv = out / "leaderboard.csv"
        board_csv.write_text(session.leaderboard_csv(), encoding="utf-8")
        written.append(board_csv)
        board_png = out / "leaderboard.png"
        _leaderboard_figure(session.scoreboard, names, board_png)
        written.append(board_png)
        chat_path = out / "chatlog.csv"
        chat_path.write_text(session.chatlog_csv(), encoding="utf-8")
        written.append(chat_path)
    return written


def render_dataset_report(csv_text: str, outdir: str | Path) -> list[Path]:
    """Figures for a standalone dataset CSV, no session required."""
    rows = screens.dataset_from_csv(csv_text)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    dataset_path = out / "part3_dataset.csv"
    dataset_path.write_text(csv_text, encoding="utf-8")
    written.append(dataset_path)
    spread_path = out / "bid_spread.png"
    _spread_figure(rows, None, spread_path)
    written.append(spread_path)
    screens_path = out / "screens.png"
    _screens_figure(rows, None, screens_path)
    written.append(screens_path)
    return written
