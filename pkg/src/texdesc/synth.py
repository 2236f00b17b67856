"""Seeded synthetic patch generators for demos and self-checks.

Three families, all 128x128 in [0, 1] and deterministic for a given seed:

* smooth low-frequency backgrounds (stand-ins for normal tissue),
* oriented sinusoidal gratings (textured, stand-ins for abnormal tissue),
* centered blobs, either round (benign-like) or spiculated with radial
  arms (malignant-like).

These drive the end-to-end gates: descriptors must separate smooth from
grating and round from spiculated, and must hover at chance when labels are
randomized.
"""

from __future__ import annotations

import numpy as np

from .patchio import Dataset, ImagePatch, PatchRecord, WORKING_SIZE

DENSITY_CYCLE = ("d", "e", "f", "g")


def _clip(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


def smooth_patch(rng, size: int = WORKING_SIZE, noise: float = 0.05) -> ImagePatch:
    """Low-frequency random field: a coarse grid upsampled bilinearly."""
    coarse = rng.uniform(0.25, 0.75, size=(5, 5))
    xs = np.linspace(0, 4, size)
    i0 = np.minimum(xs.astype(np.intp), 3)
    w = xs - i0
    rows = coarse[i0] * (1 - w)[:, None] + coarse[i0 + 1] * w[:, None]
    field = rows[:, i0] * (1 - w)[None, :] + rows[:, i0 + 1] * w[None, :]
    field = field + rng.normal(0.0, noise, size=(size, size))
    return ImagePatch(_clip(field))


def grating_patch(
    rng,
    angle_deg: float,
    size: int = WORKING_SIZE,
    period: float = 8.0,
    noise: float = 0.05,
) -> ImagePatch:
    """Cosine grating at a fixed orientation.

    Phase jitters only slightly and amplitude varies per patch, so patches
    differ while the dominant spectral coefficients keep a consistent sign
    across the class (mean-difference statistics can latch onto them).
    """
    theta = np.deg2rad(angle_deg)
    x = np.arange(size)[:, None]
    y = np.arange(size)[None, :]
    phase = rng.uniform(-0.3, 0.3)
    amplitude = rng.uniform(0.35, 0.45)
    wave = np.cos(2.0 * np.pi * (x * np.cos(theta) + y * np.sin(theta)) / period + phase)
    img = 0.5 + amplitude * wave + rng.normal(0.0, noise, size=(size, size))
    return ImagePatch(_clip(img))


def _radial_grid(rng, size: int):
    cx = size / 2.0 + rng.uniform(-4.0, 4.0)
    cy = size / 2.0 + rng.uniform(-4.0, 4.0)
    x = np.arange(size)[:, None] - cx
    y = np.arange(size)[None, :] - cy
    return np.hypot(x, y), np.arctan2(y, x)


def blob_patch(rng, size: int = WORKING_SIZE, noise: float = 0.05) -> ImagePatch:
    """Round bright mass on a dim background."""
    r, _ = _radial_grid(rng, size)
    radius = rng.uniform(18.0, 26.0)
    img = 0.2 + 0.6 * np.exp(-((r / radius) ** 2))
    img = img + rng.normal(0.0, noise, size=(size, size))
    return ImagePatch(_clip(img))


def star_patch(
    rng,
    size: int = WORKING_SIZE,
    arms: int = 9,
    noise: float = 0.05,
) -> ImagePatch:
    """Spiculated mass: a blob whose radius is modulated by radial arms."""
    r, phi = _radial_grid(rng, size)
    radius = rng.uniform(14.0, 20.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    modulation = 1.0 + 0.9 * np.cos(arms * phi + phase) ** 2
    img = 0.2 + 0.6 * np.exp(-((r / (radius * modulation)) ** 2))
    img = img + rng.normal(0.0, noise, size=(size, size))
    return ImagePatch(_clip(img))


def _record(patch: ImagePatch, index: int, label: str, density: str) -> PatchRecord:
    return PatchRecord(
        id=f"{label}_{index:04d}.png", patch=patch, density=density, label=label
    )


def make_normal_abnormal(
    n_per_class: int,
    seed: int = 0,
    noise: float = 0.05,
    angles=(0.0, 45.0),
) -> Dataset:
    """Smooth backgrounds labeled normal against gratings labeled benign.

    Grating orientations alternate through ``angles``.  Densities cycle
    d,e,f,g so every slice is populated.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_per_class):
        records.append(
            _record(smooth_patch(rng, noise=noise), i, "normal", DENSITY_CYCLE[i % 4])
        )
    for i in range(n_per_class):
        angle = angles[i % len(angles)]
        records.append(
            _record(
                grating_patch(rng, angle, noise=noise), i, "benign", DENSITY_CYCLE[i % 4]
            )
        )
    return Dataset(records)


def make_benign_malignant(n_per_class: int, seed: int = 0, noise: float = 0.05) -> Dataset:
    """Round blobs labeled benign against spiculated stars labeled malignant."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_per_class):
        records.append(
            _record(blob_patch(rng, noise=noise), i, "benign", DENSITY_CYCLE[i % 4])
        )
    for i in range(n_per_class):
        records.append(
            _record(star_patch(rng, noise=noise), i, "malignant", DENSITY_CYCLE[i % 4])
        )
    return Dataset(records)


def make_noise_labels(n_patches: int, seed: int = 0) -> Dataset:
    """Indistinguishable smooth patches with coin-flip normal/benign labels."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_patches):
        label = "normal" if rng.integers(2) == 0 else "benign"
        records.append(
            _record(smooth_patch(rng), i, label, DENSITY_CYCLE[i % 4])
        )
    return Dataset(records)


def make_grid_dataset(seed: int = 0) -> Dataset:
    """A small full-grid dataset: three trainable densities plus an all-benign one.

    Densities d, f and g get 12 normal / 8 benign / 8 malignant records;
    density e gets 12 normal / 8 benign and no malignant ones, so its stage-2
    cell is untrainable by construction.
    """
    rng = np.random.default_rng(seed)
    records = []
    idx = 0
    for density in ("d", "e", "f", "g"):
        for _ in range(12):
            records.append(_record(smooth_patch(rng), idx, "normal", density))
            idx += 1
        for _ in range(8):
            records.append(_record(blob_patch(rng), idx, "benign", density))
            idx += 1
        if density != "e":
            for _ in range(8):
                records.append(_record(star_patch(rng), idx, "malignant", density))
                idx += 1
    return Dataset(records)
