"""Tests for formatters, figure builders and the regression store."""

import json

import pandas as pd
import plotly.graph_objects as go

from src.data.regression_store import load_constants, record_constants
from src.models.series import NormInterval
from src.visualization import charts
from src.visualization.formatters import (
    format_complex,
    format_float17,
    format_interval,
    format_verdict,
    write_csv,
)


class TestFormatters:
    def test_float17(self):
        """17 significant digits expose the binary value."""
        assert format_float17(0.1) == "0.10000000000000001"
        assert float(format_float17(1 / 3)) == 1 / 3

    def test_interval(self):
        """Brackets print as [lower, upper]."""
        assert format_interval(NormInterval(0.5, 0.75), decimals=2) == "[0.50, 0.75]"

    def test_verdict_and_complex(self):
        """PASS/FAIL and a + bi with an explicit sign."""
        assert format_verdict(True) == "PASS"
        assert format_verdict(False) == "FAIL"
        assert format_complex(1 - 2j, decimals=3) == "1 - 2i"

    def test_csv_float_format(self, tmp_path):
        """Floats are written at full precision."""
        path = write_csv(pd.DataFrame({"v": [0.1]}), tmp_path / "sub" / "t.csv")
        assert path.read_text().splitlines() == ["v", "0.10000000000000001"]


class TestCharts:
    def test_builders(self):
        """Each builder returns a titled figure with data."""
        train = pd.DataFrame({"t": [0.5, 1.5], "amplitude": [0.5, -0.25]})
        decay = pd.DataFrame({"t": [0.1, 0.2], "ratio": [0.2, 0.25]})
        table = pd.DataFrame({
            "x": [0.5, 0.5], "r": [1, 1], "n": [1, 2], "f_lower": [0.46, 0.49],
            "upper": [0.46, float("inf")], "target_tan_r_x": [0.546, 0.546],
        })
        figures = [
            charts.impulse_train_chart(train, probe=1.0),
            charts.decay_ratio_chart(decay, limit=0.28),
            charts.f_table_chart(table),
            charts.medium_profile_chart([1.0, 0.5], [0.0]),
        ]
        for fig in figures:
            assert isinstance(fig, go.Figure)
            assert fig.data
            assert fig.layout.title.text
        assert list(figures[2].data[1].y) == [0.46]

    def test_html_fallback(self, tmp_path, monkeypatch):
        """Without a static export engine the figure is saved as HTML."""
        def no_engine(self, *args, **kwargs):
            raise ValueError("no export engine")

        monkeypatch.setattr(go.Figure, "write_image", no_engine)
        saved = charts.save_figure(charts.medium_profile_chart([1.0], []), tmp_path / "medium")
        assert saved.suffix == ".html"
        assert saved.exists()


class TestRegressionStore:
    def test_missing_file(self, tmp_path):
        """No file means nothing recorded yet."""
        assert load_constants(tmp_path / "constants.json") == {}

    def test_never_overwrites(self, tmp_path):
        """Recorded keys keep their first value."""
        path = tmp_path / "constants.json"
        record_constants({"f_table_n_star": 12}, path)
        constants = record_constants({"f_table_n_star": 99, "other": 0.5}, path)
        assert constants == {"f_table_n_star": 12, "other": 0.5}
        assert json.loads(path.read_text()) == constants
