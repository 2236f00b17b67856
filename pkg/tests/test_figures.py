"""Figure rendering: files written alongside the data outputs."""

import numpy as np

from texdesc.dpselect import SubsetSearchResult
from texdesc.evaluation import cross_validate, emit_report
from texdesc.figures import (
    render_report_figures,
    selection_curve_figure,
    sigma_sweep_figure,
)

from test_pipeline import fast_config, toy_dataset

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _small_report():
    ds = toy_dataset(n_normal=6, n_benign=5, n_malignant=5, seed=8)
    return cross_validate(ds, "all", fast_config(), repeats=1, seeds=(0,))


class TestReportFigures:
    def test_roc_png_per_ok_cell_plus_summary(self, tmp_path):
        rep = _small_report()
        written = render_report_figures(rep, tmp_path)
        names = sorted(p.name for p in written)
        assert "accuracy_summary.png" in names
        assert "roc_all_stage1.png" in names
        assert "roc_all_stage2.png" in names
        for p in written:
            assert p.read_bytes()[:8] == PNG_MAGIC

    def test_absent_cells_render_no_roc(self, tmp_path):
        ds = toy_dataset(n_normal=6, n_benign=6, n_malignant=0, seed=9)
        rep = cross_validate(ds, "all", fast_config(), repeats=1, seeds=(0,))
        written = render_report_figures(rep, tmp_path)
        names = {p.name for p in written}
        assert "roc_all_stage2.png" not in names

    def test_emit_report_includes_figures_by_default(self, tmp_path):
        rep = _small_report()
        written = emit_report(rep, tmp_path)
        names = {p.name for p in written}
        assert "report.txt" in names
        assert "accuracy_summary.png" in names


class TestStandaloneFigures:
    def test_selection_curve(self, tmp_path):
        res = SubsetSearchResult(
            sizes=np.arange(5, 11),
            accuracies=np.array([60.0, 70, 80, 85, 85, 84]),
            chosen_size=8,
            selected_indices=np.arange(8),
        )
        p = selection_curve_figure(res, tmp_path / "curve.png")
        assert p.read_bytes()[:8] == PNG_MAGIC

    def test_sigma_sweep_handles_missing_entries(self, tmp_path):
        p = sigma_sweep_figure({1.0: 90.0, 2.0: None, 3.0: 95.5}, tmp_path / "sweep.png")
        assert p.read_bytes()[:8] == PNG_MAGIC
