"""Release gate: ten numbered criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.  Each
criterion is a separate test so the pytest verdict doubles as the per-criterion
status; every oracle here is implemented independently of the library code it
checks.  Runtime budgets are enforced inside each criterion.
"""

import time
from contextlib import contextmanager

import numpy as np
import scipy.stats

from texdesc.dpselect import dp_scores
from texdesc.evaluation import (
    DENSITY_CELLS,
    auc,
    cross_validate,
    emit_report,
    evaluate_grid,
    render_report_text,
)
from texdesc.gabor import gabor_response
from texdesc.hox import HistogramConfig, descriptor_length, extract_hog, extract_hot
from texdesc.patchio import ImagePatch
from texdesc.pbdct import dct2, idct2
from texdesc.pipeline import (
    DescriptorConfig,
    classify,
    load_bundle,
    save_bundle,
    train_pipeline,
)
from texdesc.synth import (
    make_benign_malignant,
    make_grid_dataset,
    make_noise_labels,
    make_normal_abnormal,
)


@contextmanager
def criterion(num: int, budget_s: float | None, detail: str):
    t0 = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"criterion {num:2d}: FAIL ({detail})")
        raise
    elapsed = time.perf_counter() - t0
    budget = "-" if budget_s is None else f"{budget_s:.0f}s"
    in_budget = budget_s is None or elapsed < budget_s
    print(
        f"criterion {num:2d}: {'PASS' if in_budget else 'FAIL'} "
        f"{elapsed:.1f}s/{budget} {detail}"
    )
    if budget_s is not None:
        assert elapsed < budget_s, f"criterion {num} over budget: {elapsed:.1f}s"


# --- independent oracles -----------------------------------------------------


def dct2_oracle(img: np.ndarray) -> np.ndarray:
    """Scaled orthonormal 2-D DCT-II via the literal double sum."""
    m, n = img.shape
    x = np.arange(m)
    y = np.arange(n)
    out = np.empty((m, n))
    for u in range(m):
        au = np.sqrt((1.0 if u == 0 else 2.0) / m)
        cu = np.cos(np.pi * (2 * x + 1) * u / (2 * m))
        for v in range(n):
            av = np.sqrt((1.0 if v == 0 else 2.0) / n)
            cv = np.cos(np.pi * (2 * y + 1) * v / (2 * n))
            out[u, v] = 0.5 * au * av * np.sum(img * np.outer(cu, cv))
    return out


def conv_clip_oracle(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Replicate-pad convolution via clipped indexing, taps in raster order."""
    kh, kw = kernel.shape
    rh, rw = kh // 2, kw // 2
    m, n = img.shape
    rows = np.arange(m)[:, None]
    cols = np.arange(n)[None, :]
    acc = np.zeros((m, n))
    for a in range(kh):
        for b in range(kw):
            src = img[np.clip(rows + a - rh, 0, m - 1), np.clip(cols + b - rw, 0, n - 1)]
            acc += kernel[a, b] * src
    return acc


def gabor_bank_oracle(sigma: float) -> list[np.ndarray]:
    """The eight even-symmetric kernels rebuilt from the closed form."""
    mu = 1.0 / np.sqrt(2.0 * sigma)
    r = max(int(round(3.0 * sigma)), 2)
    offsets = np.arange(-r, r + 1, dtype=np.float64)
    x = offsets[:, None]
    y = offsets[None, :]
    bank = []
    for t in range(8):
        theta = t * np.pi / 8.0
        envelope = np.exp(-(x * x + y * y) / (2.0 * sigma**2)) / (2.0 * np.pi * sigma**2)
        carrier = np.cos(2.0 * np.pi * mu * (x * np.cos(theta) + y * np.sin(theta)))
        bank.append(envelope * carrier)
    return bank


def pairwise_concordance(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels > 0]
    neg = scores[labels < 0]
    wins = sum(1.0 if p > q else (0.5 if p == q else 0.0) for p in pos for q in neg)
    return 100.0 * wins / (len(pos) * len(neg))


# --- criteria ----------------------------------------------------------------


def test_criterion_01_descriptor_length():
    with criterion(1, 5.0, "descriptor length 7200 and l^2 (c-l+1)^2 B sweep"):
        rng = np.random.default_rng(101)
        p = ImagePatch(rng.uniform(size=(128, 128)))
        assert len(extract_hot(p, 1.0)) == 7200
        assert len(extract_hog(p)) == 7200
        combos = [
            (4, 1, 4), (4, 2, 4), (8, 1, 8), (8, 2, 8), (8, 4, 4),
            (16, 1, 4), (16, 2, 8), (16, 4, 8), (16, 8, 8),
        ]
        assert len(combos) == 9
        for c, l, b in combos:
            cfg = HistogramConfig(cells_per_side=c, block_side=l, bins=b)
            expected = l * l * (c - l + 1) ** 2 * b
            assert descriptor_length(cfg) == expected
            assert len(extract_hog(p, cfg)) == expected


def test_criterion_02_dct_oracle():
    with criterion(2, 10.0, "dct2 double-sum oracle, round trip, energy identity"):
        rng = np.random.default_rng(202)
        for size in (8, 16):
            for _ in range(50):
                img = rng.uniform(-1.0, 1.0, size=(size, size))
                coeffs = dct2(img)
                assert np.allclose(coeffs.coeffs, dct2_oracle(img), atol=1e-9, rtol=0.0)
                assert np.allclose(idct2(coeffs), img, atol=1e-9, rtol=0.0)
                energy = np.sum(img * img)
                assert abs(4.0 * np.sum(coeffs.coeffs**2) - energy) <= 1e-9 * energy


def test_criterion_03_gabor_oracle():
    with criterion(3, 30.0, "gabor response vs 8-way brute-force convolution"):
        rng = np.random.default_rng(303)
        thetas = np.arange(8) * np.pi / 8.0
        patches = [rng.uniform(size=(32, 32)) for _ in range(20)]
        patches.append(np.zeros((32, 32)))  # exact 8-way tie at every pixel
        for sigma in (1.0, 3.0, 5.0):
            bank = gabor_bank_oracle(sigma)
            for pixels in patches:
                stack = np.stack([conv_clip_oracle(pixels, k) for k in bank])
                pick = np.argmin(stack, axis=0)  # ties -> smallest index
                field = gabor_response(ImagePatch(pixels), sigma)
                assert np.array_equal(field.magnitude, np.min(stack, axis=0))
                assert np.array_equal(field.orientation, thetas[pick])


def test_criterion_04_dp_ordering_oracle():
    with criterion(4, 5.0, "DP ranking equals |Welch-t| ordering, 100 matrices"):
        rng = np.random.default_rng(404)
        for _ in range(100):
            x = rng.normal(size=(50, 20))
            labels = np.array([-1] * 25 + [1] * 25)
            rng.shuffle(labels)
            t_stat = scipy.stats.ttest_ind(
                x[labels < 0], x[labels > 0], axis=0, equal_var=False
            ).statistic
            oracle_order = np.argsort(-np.abs(t_stat), kind="stable")
            assert np.array_equal(dp_scores(x, labels).order, oracle_order)


def test_criterion_05_auc_oracle():
    with criterion(5, 5.0, "AUC equals Mann-Whitney concordance, 100 score sets"):
        rng = np.random.default_rng(505)
        for _ in range(100):
            n = int(rng.integers(10, 40))
            scores = rng.permutation(np.linspace(0.0, 1.0, n)) + rng.uniform(0, 1e-6, n)
            labels = np.where(rng.uniform(size=n) < 0.5, -1, 1)
            labels[:2] = (-1, 1)  # both classes present
            assert abs(auc(scores, labels) - pairwise_concordance(scores, labels)) <= 1e-9
        ordered = np.arange(20, dtype=np.float64)
        split = np.array([-1] * 10 + [1] * 10)
        assert auc(ordered, split) == 100.0
        assert auc(ordered[::-1].copy(), split) == 0.0


def test_criterion_06_normal_abnormal_gate():
    with criterion(6, 120.0, "smooth vs grating: HOT >= 95, PB-DCT >= 90"):
        ds = make_normal_abnormal(200, seed=42)
        hot_cfg = DescriptorConfig(descriptor="hot", sigma=1.0, select_cap=20)
        hot_mean = cross_validate(ds, "all", hot_cfg, seeds=range(10)).cells[
            ("all", 1)
        ].summary["accuracy"][0]
        pb_cfg = DescriptorConfig(descriptor="pbdct", keep_fraction=0.5, select_cap=10)
        pb_mean = cross_validate(ds, "all", pb_cfg, seeds=range(10)).cells[
            ("all", 1)
        ].summary["accuracy"][0]
        assert hot_mean >= 95.0, f"HOT mean accuracy {hot_mean:.2f} < 95"
        assert pb_mean >= 90.0, f"PB-DCT mean accuracy {pb_mean:.2f} < 90"


def test_criterion_07_benign_malignant_gate():
    with criterion(7, 120.0, "blob vs spiculated star: PB-DCT stage 2 >= 90"):
        ds = make_benign_malignant(150, seed=21)
        cfg = DescriptorConfig(descriptor="pbdct", select_cap=10)
        mean = cross_validate(ds, "all", cfg, seeds=range(10)).cells[
            ("all", 2)
        ].summary["accuracy"][0]
        assert mean >= 90.0, f"stage-2 mean accuracy {mean:.2f} < 90"


def test_criterion_08_leakage_sentinel():
    with criterion(8, 120.0, "random labels stay at chance (50 +- 7)"):
        ds = make_noise_labels(200, seed=7)
        cfg = DescriptorConfig(descriptor="pbdct", select_cap=10)
        mean = cross_validate(ds, "all", cfg, seeds=range(10)).cells[
            ("all", 1)
        ].summary["accuracy"][0]
        assert abs(mean - 50.0) <= 7.0, f"mean accuracy {mean:.2f} outside 50 +- 7"


def test_criterion_09_determinism(tmp_path):
    with criterion(9, 60.0, "byte-identical reruns; bundle survives save/load"):
        ds = make_grid_dataset(seed=0)
        cfg = DescriptorConfig(descriptor="pbdct", select_cap=10)
        written = {}
        for name in ("run_a", "run_b"):
            report = evaluate_grid(ds, cfg, densities=DENSITY_CELLS, repeats=10,
                                   seeds=range(10))
            paths = emit_report(report, tmp_path / name, figures=False)
            written[name] = {p.name: p.read_bytes() for p in paths}
        assert written["run_a"].keys() == written["run_b"].keys()
        for fname, blob in written["run_a"].items():
            assert blob == written["run_b"][fname], f"{fname} differs between runs"

        bundle = train_pipeline(ds, "all", cfg, seed=0)
        save_bundle(bundle, tmp_path / "model.txpb")
        reloaded = load_bundle(tmp_path / "model.txpb")
        for rec in ds.records:
            first = classify(bundle, rec.patch)
            second = classify(reloaded, rec.patch)
            assert first.label == second.label
            assert first.stage1.raw == second.stage1.raw
            assert (first.stage2 is None) == (second.stage2 is None)
            if first.stage2 is not None:
                assert first.stage2.raw == second.stage2.raw


def test_criterion_10_protocol_structure():
    with criterion(10, None, "10x2 folds per cell over the full density grid"):
        ds = make_grid_dataset(seed=0)
        cfg = DescriptorConfig(descriptor="pbdct", select_cap=10)
        report = evaluate_grid(ds, cfg, densities=DENSITY_CELLS, repeats=10,
                               seeds=range(10))
        expected_cells = {(d, s) for d in ("d", "e", "f", "g", "all") for s in (1, 2)}
        assert set(report.cells) == expected_cells
        expected_folds = {(r, f) for r in range(10) for f in (0, 1)}
        for key, cell in report.cells.items():
            if cell.status == "ok":
                assert {(f.repeat, f.fold) for f in cell.folds} == expected_folds
                assert len(cell.folds) == 20
                assert len(cell.per_repeat["accuracy"]) == 10
            else:
                assert cell.status == "absent", f"{key}: {cell.status} ({cell.reason})"
                assert cell.reason.startswith("untrainable")
                assert not cell.folds
        assert report.cells[("e", 2)].status == "absent"
        assert "untrainable" in render_report_text(report)
