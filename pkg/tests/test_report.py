"""Report rendering: file sets per phase, verbatim CSVs, and refusals."""

import pytest

from tetravale import report
from tetravale.errors import PhaseError, ValidationError
from tetravale.session import Session

PNG_MAGIC = b"\x89PNG"

TWO_ROW_DATASET = (
    "ID,SPD,CV,RD,RDNORM,DIFFP,Bid_1,Bid_2,Bid_3,Bid_4\n"
    "1,0.25,0.118,,,0.25,100,125,,\n"
    "2,0.2,0.084,0.222,0.3,0.02,100,102,110,120\n"
)


def at_part3(played) -> Session:
    cut = next(i for i, e in enumerate(played.events) if e["kind"] == "classify")
    return Session.replay(played.events[:cut])


class TestRenderReport:
    def test_part3_report_writes_dataset_and_figures(self, played, tmp_path):
        session = at_part3(played)
        written = report.render_report(session, tmp_path / "out")
        assert [p.name for p in written] == ["part3_dataset.csv", "bid_spread.png", "screens.png"]
        for path in written:
            assert path.exists() and path.stat().st_size > 0
        assert written[0].read_text(encoding="utf-8") == session.part3_dataset_csv()
        assert written[1].read_bytes()[:4] == PNG_MAGIC
        assert written[2].read_bytes()[:4] == PNG_MAGIC

    def test_debrief_report_adds_the_scoring_files(self, played, tmp_path):
        written = report.render_report(played, tmp_path / "out")
        assert [p.name for p in written] == [
            "part3_dataset.csv", "bid_spread.png", "screens.png",
            "leaderboard.csv", "leaderboard.png", "chatlog.csv",
        ]
        by_name = {p.name: p for p in written}
        assert by_name["leaderboard.csv"].read_text(encoding="utf-8") == played.export("leaderboard")
        assert by_name["chatlog.csv"].read_text(encoding="utf-8") == played.export("chatlog")
        assert by_name["leaderboard.png"].read_bytes()[:4] == PNG_MAGIC

    def test_refuses_before_the_dataset_exists(self, tmp_path):
        session = Session.create("rep", class_size=6, seed=4)
        with pytest.raises(PhaseError, match="advance past part 2"):
            report.render_report(session, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_creates_nested_output_directories(self, played, tmp_path):
        deep = tmp_path / "a" / "b" / "c"
        written = report.render_report(played, deep)
        assert all(p.parent == deep for p in written)

    def test_rerender_overwrites_cleanly(self, played, tmp_path):
        out = tmp_path / "out"
        first = report.render_report(played, out)
        second = report.render_report(played, out)
        assert first == second
        assert all(p.stat().st_size > 0 for p in second)


class TestDatasetReport:
    def test_standalone_copy_is_verbatim(self, played, tmp_path):
        text = played.part3_dataset_csv()
        written = report.render_dataset_report(text, tmp_path / "out")
        assert [p.name for p in written] == ["part3_dataset.csv", "bid_spread.png", "screens.png"]
        assert written[0].read_text(encoding="utf-8") == text
        assert written[1].read_bytes()[:4] == PNG_MAGIC

    def test_missing_screen_cells_still_render(self, tmp_path):
        written = report.render_dataset_report(TWO_ROW_DATASET, tmp_path / "out")
        assert len(written) == 3
        assert all(p.stat().st_size > 0 for p in written)

    def test_garbage_text_is_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            report.render_dataset_report("not,a,dataset\n1,2,3\n", tmp_path / "out")
