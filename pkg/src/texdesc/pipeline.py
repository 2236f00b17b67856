"""Two-stage classification pipeline and its trained-bundle container.

Stage 1 separates normal (-1) from abnormal (+1) patches; stage 2 separates
benign (-1) from malignant (+1) among the abnormal ones.  Each stage is the
same chain: descriptor extraction on enhanced patches, discrimination-
potentiality ranking, incremental subset search scored by seeded
cross-validation on the training data only, then an SMO-trained SVM on the
chosen feature subset.  When a training slice has fewer than two benign or
two malignant records, stage 2 is omitted and classification of an abnormal
patch stops at the sentinel label ``abnormal``.

Bundles serialize to a small container: magic ``TXPB``, a u16 format version,
a length-prefixed JSON header (configuration, selected indices, search curve,
scalars) and a little-endian f64 payload holding the model arrays.  Floats in
the header are written via repr, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dpselect import SubsetSearchResult, dp_scores, incremental_select
from .enhance import ts_clahe
from .errors import (
    BundleFormatError,
    BundleVersionError,
    ConfigError,
    TrainingError,
)
from .hox import FeatureVector, HistogramConfig, extract_hog, extract_hot, params_digest
from .patchio import Dataset, ImagePatch, density_slice
from .pbdct import band_mask, extract_pbdct
from .svm import DecisionScore, KernelSpec, SvmModel, decision, decision_values, train_svm

BUNDLE_MAGIC = b"TXPB"
BUNDLE_VERSION = 1
DESCRIPTORS = ("hog", "hot", "pbdct")
STAGE1 = "normal_abnormal"
STAGE2 = "benign_malignant"
ABNORMAL_SENTINEL = "abnormal"


@dataclass(frozen=True)
class DescriptorConfig:
    descriptor: str = "hot"
    sigma: float = 1.0
    keep_fraction: float = 0.5
    cells_per_side: int = 16
    block_side: int = 2
    bins: int = 8
    epsilon: float = 1e-5
    response_rule: str = "min_real"
    enhance: bool = True
    kernel: str = "linear"
    C: float = 1.0
    tol: float = 1e-3
    gamma: float | None = None
    max_iter: int = 10_000
    select_cap: int = 5200
    inner_repeats: int = 3

    def __post_init__(self):
        if self.descriptor not in DESCRIPTORS:
            raise ConfigError(f"unknown descriptor {self.descriptor!r}")
        if self.inner_repeats < 1:
            raise ConfigError("inner_repeats must be >= 1")
        KernelSpec(self.kernel, self.gamma)  # validates kernel fields

    def hist(self) -> HistogramConfig:
        return HistogramConfig(
            cells_per_side=self.cells_per_side,
            block_side=self.block_side,
            bins=self.bins,
            epsilon=self.epsilon,
        )

    def digest(self) -> str:
        f = dataclasses.asdict(self)
        return params_digest(*(f[k] for k in sorted(f)))


@dataclass(frozen=True)
class StageModel:
    name: str
    digest: str
    selected_indices: np.ndarray
    svm: SvmModel
    search: SubsetSearchResult


@dataclass(frozen=True)
class PipelineBundle:
    config: DescriptorConfig
    density: str
    stage1: StageModel
    stage2: StageModel | None
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClassificationResult:
    label: str
    stage1: DecisionScore
    stage2: DecisionScore | None


def worker_count() -> int:
    raw = os.environ.get("TEXDESC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"TEXDESC_THREADS must be an integer, got {raw!r}") from None


def extract_features(config: DescriptorConfig, patch: ImagePatch, _mask=None) -> FeatureVector:
    """Enhance one patch per the config and run its descriptor.

    Min-max normalization always runs; the two-stage CLAHE pass is skipped
    when ``config.enhance`` is false.  The returned digest identifies the full
    configuration, enhancement included.
    """
    from .enhance import minmax_normalize

    p = minmax_normalize(patch)
    if config.enhance:
        p = ts_clahe(p)
    if config.descriptor == "hog":
        fv = extract_hog(p, config.hist())
    elif config.descriptor == "hot":
        fv = extract_hot(p, config.sigma, config.hist(), config.response_rule)
    else:
        mask = _mask if _mask is not None else band_mask(p.shape, config.keep_fraction)
        fv = extract_pbdct(p, config.keep_fraction, mask)
    return FeatureVector(fv.values, fv.descriptor_tag, config.digest())


def extract_matrix(config: DescriptorConfig, records, workers: int | None = None):
    """Feature rows for a record sequence; returns (ids, matrix)."""
    records = list(records)
    if not records:
        raise TrainingError("no records to extract")
    mask = None
    if config.descriptor == "pbdct":
        shape = records[0].patch.shape
        mask = band_mask(shape, config.keep_fraction)
    if workers is None:
        workers = worker_count()
    if workers > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda r: extract_features(config, r.patch, mask).values, records)
            )
    else:
        rows = [extract_features(config, r.patch, mask).values for r in records]
    ids = [r.id for r in records]
    return ids, np.vstack(rows)


def stratified_halves(labels, rng) -> tuple[np.ndarray, np.ndarray]:
    """Random near-equal halves preserving class proportions."""
    labels = np.asarray(labels)
    first, second = [], []
    for cls in np.unique(labels):
        perm = rng.permutation(np.flatnonzero(labels == cls))
        half = (len(perm) + 1) // 2
        first.extend(perm[:half])
        second.extend(perm[half:])
    return (
        np.sort(np.asarray(first, dtype=np.intp)),
        np.sort(np.asarray(second, dtype=np.intp)),
    )


def make_inner_evaluator(x: np.ndarray, y: np.ndarray, config: DescriptorConfig, seed_key):
    """Accuracy evaluator for subset search: stratified 2-fold CV, 3 repeats.

    Folds are drawn once up front from ``seed_key`` so every candidate subset
    is scored on identical splits.
    """
    folds = []
    for rep in range(config.inner_repeats):
        rng = np.random.default_rng(tuple(seed_key) + (rep,))
        a, b = stratified_halves(y, rng)
        folds.append((a, b))
        folds.append((b, a))

    def evaluator(indices) -> float:
        indices = np.asarray(indices, dtype=np.intp)
        accs = []
        for tr, te in folds:
            model = train_svm(
                x[np.ix_(tr, indices)],
                y[tr],
                kernel=config.kernel,
                C=config.C,
                tol=config.tol,
                gamma=config.gamma,
                max_iter=config.max_iter,
            )
            raw = decision_values(model, x[np.ix_(te, indices)])
            pred = np.where(raw >= 0.0, 1.0, -1.0)
            accs.append(float(np.mean(pred == y[te])))
        return 100.0 * float(np.mean(accs))

    return evaluator


def fit_stage(
    x: np.ndarray,
    y: np.ndarray,
    config: DescriptorConfig,
    seed,
    stage_name: str,
) -> StageModel:
    """Ranking, subset search and SVM training on one stage's labels.

    ``seed`` may be an int or a tuple of ints; it keys the inner-evaluator
    fold draws.
    """
    stage_no = 1 if stage_name == STAGE1 else 2
    seed_key = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    ranking = dp_scores(x, y)
    evaluator = make_inner_evaluator(x, y, config, seed_key + (stage_no,))
    cap = min(config.select_cap, x.shape[1])
    search = incremental_select(x, y, ranking, evaluator, cap=cap)
    model = train_svm(
        x[:, search.selected_indices],
        y,
        kernel=config.kernel,
        C=config.C,
        tol=config.tol,
        gamma=config.gamma,
        max_iter=config.max_iter,
    )
    return StageModel(
        name=stage_name,
        digest=config.digest(),
        selected_indices=np.asarray(search.selected_indices, dtype=np.intp),
        svm=model,
        search=search,
    )


def stage1_labels(records) -> np.ndarray:
    return np.asarray([-1.0 if r.label == "normal" else 1.0 for r in records])


def stage2_labels(records) -> np.ndarray:
    return np.asarray([-1.0 if r.label == "benign" else 1.0 for r in records])


def train_pipeline(
    ds: Dataset,
    density: str = "all",
    config: DescriptorConfig = DescriptorConfig(),
    seed: int = 0,
    workers: int | None = None,
) -> PipelineBundle:
    """Train both stages on one density slice of a dataset."""
    sl = density_slice(ds, density)
    if not len(sl):
        raise TrainingError(f"density slice {density!r} is empty")
    counts = sl.label_counts()
    n_normal = counts["normal"]
    n_abnormal = counts["benign"] + counts["malignant"]
    if n_normal < 2 or n_abnormal < 2:
        raise TrainingError(
            f"stage 1 needs >= 2 normal and >= 2 abnormal records, "
            f"got {n_normal} and {n_abnormal}"
        )

    _, x = extract_matrix(config, sl.records, workers=workers)
    stage1 = fit_stage(x, stage1_labels(sl.records), config, seed, STAGE1)

    abn_rows = [i for i, r in enumerate(sl.records) if r.label != "normal"]
    abn_records = [sl.records[i] for i in abn_rows]
    warnings = []
    stage2 = None
    if counts["benign"] >= 2 and counts["malignant"] >= 2:
        stage2 = fit_stage(
            x[abn_rows], stage2_labels(abn_records), config, seed, STAGE2
        )
    else:
        warnings.append(
            "stage2 absent: abnormal slice has "
            f"{counts['benign']} benign / {counts['malignant']} malignant "
            "records (need >= 2 of each)"
        )
    return PipelineBundle(
        config=config,
        density=density,
        stage1=stage1,
        stage2=stage2,
        warnings=tuple(warnings),
    )


def classify(bundle: PipelineBundle, patch: ImagePatch) -> ClassificationResult:
    """Run the staged decision for one patch."""
    fv = extract_features(bundle.config, patch)
    expected = bundle.config.digest()
    for stage in (bundle.stage1, bundle.stage2):
        if stage is not None and stage.digest != expected:
            raise ConfigError(
                f"stage {stage.name!r} digest {stage.digest} does not match "
                f"configuration digest {expected}"
            )
    s1 = decision(bundle.stage1.svm, fv.values[bundle.stage1.selected_indices])
    if s1.label < 0:
        return ClassificationResult(label="normal", stage1=s1, stage2=None)
    if bundle.stage2 is None:
        return ClassificationResult(label=ABNORMAL_SENTINEL, stage1=s1, stage2=None)
    s2 = decision(bundle.stage2.svm, fv.values[bundle.stage2.selected_indices])
    label = "malignant" if s2.label > 0 else "benign"
    return ClassificationResult(label=label, stage1=s1, stage2=s2)


# --- bundle container ------------------------------------------------------


def _stage_header(stage: StageModel, arrays: list[np.ndarray], cursor: int):
    entries = {}
    for key, arr in (
        ("support_vectors", stage.svm.support_vectors),
        ("dual_coeffs", stage.svm.dual_coeffs),
        ("mean", stage.svm.mean),
        ("std", stage.svm.std),
    ):
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        entries[key] = {"shape": list(arr.shape), "offset": cursor}
        arrays.append(arr)
        cursor += arr.size
    header = {
        "name": stage.name,
        "digest": stage.digest,
        "selected_indices": [int(i) for i in stage.selected_indices],
        "svm": {
            "kernel": stage.svm.kernel.name,
            "gamma": stage.svm.gamma,
            "C": stage.svm.C,
            "tol": stage.svm.tol,
            "bias": stage.svm.bias,
            "kkt_residual": stage.svm.kkt_residual,
            "n_iter": stage.svm.n_iter,
        },
        "search": {
            "sizes": [int(s) for s in stage.search.sizes],
            "accuracies": [float(a) for a in stage.search.accuracies],
            "chosen_size": stage.search.chosen_size,
        },
        "arrays": entries,
    }
    return header, cursor


def save_bundle(bundle: PipelineBundle, path) -> None:
    arrays: list[np.ndarray] = []
    cursor = 0
    stages = []
    for stage in (bundle.stage1, bundle.stage2):
        if stage is None:
            stages.append(None)
        else:
            header, cursor = _stage_header(stage, arrays, cursor)
            stages.append(header)
    doc = {
        "density": bundle.density,
        "warnings": list(bundle.warnings),
        "config": dataclasses.asdict(bundle.config),
        "stages": stages,
        "payload_count": cursor,
    }
    header_bytes = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(BUNDLE_MAGIC)
        fh.write(struct.pack("<HI", BUNDLE_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for arr in arrays:
            fh.write(arr.astype("<f8").tobytes())


def _read_stage(header, payload: np.ndarray, config: DescriptorConfig) -> StageModel:
    def arr(key):
        meta = header["arrays"][key]
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = meta["offset"]
        return payload[start : start + count].reshape(shape).copy()

    svm_h = header["svm"]
    model = SvmModel(
        kernel=KernelSpec(svm_h["kernel"], svm_h["gamma"]),
        gamma=svm_h["gamma"],
        C=svm_h["C"],
        tol=svm_h["tol"],
        support_vectors=arr("support_vectors"),
        dual_coeffs=arr("dual_coeffs"),
        bias=svm_h["bias"],
        mean=arr("mean"),
        std=arr("std"),
        kkt_residual=svm_h["kkt_residual"],
        n_iter=svm_h["n_iter"],
    )
    search_h = header["search"]
    indices = np.asarray(header["selected_indices"], dtype=np.intp)
    search = SubsetSearchResult(
        sizes=np.asarray(search_h["sizes"], dtype=np.intp),
        accuracies=np.asarray(search_h["accuracies"], dtype=np.float64),
        chosen_size=search_h["chosen_size"],
        selected_indices=indices.copy(),
    )
    stage = StageModel(
        name=header["name"],
        digest=header["digest"],
        selected_indices=indices,
        svm=model,
        search=search,
    )
    if stage.digest != config.digest():
        raise ConfigError(
            f"stage {stage.name!r} digest does not match bundle configuration"
        )
    return stage


def load_bundle(path) -> PipelineBundle:
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != BUNDLE_MAGIC:
        raise BundleFormatError(f"{path}: bad magic", offset=0)
    if len(blob) < 10:
        raise BundleFormatError(f"{path}: truncated fixed header", offset=len(blob))
    version, header_len = struct.unpack("<HI", blob[4:10])
    if version > BUNDLE_VERSION:
        raise BundleVersionError(
            f"{path}: format version {version} is newer than supported {BUNDLE_VERSION}"
        )
    if len(blob) < 10 + header_len:
        raise BundleFormatError(f"{path}: truncated header", offset=len(blob))
    try:
        doc = json.loads(blob[10 : 10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleFormatError(f"{path}: malformed header: {exc}", offset=10) from None
    expected = 10 + header_len + doc["payload_count"] * 8
    if len(blob) != expected:
        raise BundleFormatError(
            f"{path}: payload size mismatch (want {expected} bytes, have {len(blob)})",
            offset=min(len(blob), expected),
        )
    payload = np.frombuffer(blob, dtype="<f8", offset=10 + header_len).astype(np.float64)

    cfg_fields = dict(doc["config"])
    config = DescriptorConfig(**cfg_fields)
    stage_headers = doc["stages"]
    stage1 = _read_stage(stage_headers[0], payload, config)
    stage2 = (
        _read_stage(stage_headers[1], payload, config)
        if stage_headers[1] is not None
        else None
    )
    return PipelineBundle(
        config=config,
        density=doc["density"],
        stage1=stage1,
        stage2=stage2,
        warnings=tuple(doc["warnings"]),
    )
