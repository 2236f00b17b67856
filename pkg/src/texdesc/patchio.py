"""Patch dataset ingestion.

A dataset is described by a CSV manifest with header ``path,density,label``.
Paths are resolved relative to the manifest's directory, densities follow the
four BIRADS categories ``d``/``e``/``f``/``g`` and labels are one of
``normal``/``benign``/``malignant``.  Images must decode as 8-bit grayscale
(PNG or PGM); anything not already at the working size is resized with
bilinear interpolation, and intensities are scaled to [0, 1] by dividing by
255.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, ImageDecodeError, ManifestError

DENSITIES = ("d", "e", "f", "g")
LABELS = ("normal", "benign", "malignant")
ABNORMAL_LABELS = ("benign", "malignant")
WORKING_SIZE = 128

MANIFEST_HEADER = ["path", "density", "label"]


@dataclass(frozen=True)
class ImagePatch:
    """A single grayscale patch with intensities in [0, 1].

    ``pixels[x, y]`` indexes row ``x`` (height M) and column ``y`` (width N);
    every orientation convention downstream (gradients, Gabor kernels, DCT
    axes) uses this same layout.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64))
        if arr.ndim != 2:
            raise ConfigError(f"patch must be 2-D, got shape {arr.shape}")
        if min(arr.shape) < 3:
            raise ConfigError(f"patch sides must be >= 3, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("patch contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ConfigError("patch intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PatchRecord:
    id: str
    patch: ImagePatch
    density: str
    label: str

    def __post_init__(self):
        if self.density not in DENSITIES:
            raise ConfigError(f"unknown density {self.density!r}")
        if self.label not in LABELS:
            raise ConfigError(f"unknown label {self.label!r}")


@dataclass
class Dataset:
    records: list[PatchRecord] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise ConfigError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def label_counts(self) -> dict[str, int]:
        counts = {lab: 0 for lab in LABELS}
        for rec in self.records:
            counts[rec.label] += 1
        return counts


def _decode_image(path: Path, working_size: int) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise ImageDecodeError(f"image not found: {path}") from None
    except Exception as exc:
        raise ImageDecodeError(f"cannot decode {path}: {exc}") from None
    if img.mode != "L":
        raise ImageDecodeError(
            f"{path}: expected 8-bit grayscale, got mode {img.mode!r}"
        )
    if img.size != (working_size, working_size):
        img = img.resize((working_size, working_size), Image.BILINEAR)
    return np.asarray(img, dtype=np.float64) / 255.0


def load_manifest(manifest_path, working_size: int = WORKING_SIZE) -> Dataset:
    """Read a ``path,density,label`` manifest and decode every referenced image."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {manifest_path}: {exc}") from None

    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise ManifestError(f"{manifest_path}: empty manifest")
    header = [cell.strip() for cell in rows[0]]
    if header != MANIFEST_HEADER:
        raise ManifestError(
            f"{manifest_path}: row 1: expected header "
            f"{','.join(MANIFEST_HEADER)!r}, got {','.join(header)!r}"
        )

    records = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ManifestError(
                f"{manifest_path}: row {lineno}: expected 3 fields, got {len(row)}"
            )
        rel, density, label = (cell.strip() for cell in row)
        if density not in DENSITIES:
            raise ManifestError(
                f"{manifest_path}: row {lineno}: unknown density token {density!r}"
            )
        if label not in LABELS:
            raise ManifestError(
                f"{manifest_path}: row {lineno}: unknown label token {label!r}"
            )
        if rel in seen:
            raise ManifestError(
                f"{manifest_path}: row {lineno}: duplicate path {rel!r}"
            )
        seen.add(rel)
        pixels = _decode_image(base / rel, working_size)
        records.append(
            PatchRecord(id=rel, patch=ImagePatch(pixels), density=density, label=label)
        )
    return Dataset(records)


def save_dataset(ds: Dataset, out_dir) -> Path:
    """Write every record as an 8-bit PNG plus a manifest; returns the manifest path.

    Record ids become the relative image paths (``.png`` appended when the id
    has no image extension), so a load/save/load round trip preserves ids,
    densities and labels.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [",".join(MANIFEST_HEADER)]
    for rec in ds.records:
        rel = rec.id
        if not rel.lower().endswith((".png", ".pgm")):
            rel = rel + ".png"
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        quantized = np.clip(np.rint(rec.patch.pixels * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(quantized, mode="L").save(target)
        lines.append(f"{rel},{rec.density},{rec.label}")
    manifest = out_dir / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def density_slice(ds: Dataset, sel: str) -> Dataset:
    """Return the records of one density category, or all of them for ``all``."""
    if sel == "all":
        return Dataset(list(ds.records))
    if sel not in DENSITIES:
        raise ConfigError(f"unknown density selector {sel!r}")
    return Dataset([rec for rec in ds.records if rec.density == sel])
