"""Gabor filter bank and the response fields feeding the oriented histograms.

The bank holds the real parts of eight Gabor kernels sharing one scale
``sigma``:

    G(x, y) = 1/(2 pi sigma^2) * exp(-(x^2+y^2)/(2 sigma^2))
              * cos(2 pi mu (x cos theta + y sin theta))

with spatial frequency ``mu = 1/sqrt(2 sigma)`` and orientations
``theta_t = pi (t-1)/8`` for ``t = 1..8``.  Kernels are sampled on a square
grid of radius ``round(3 sigma)`` (at least 2).  The texture response at a
pixel is the minimum over the eight filtered values and the orientation of
that minimizing kernel; the gradient response used by plain HOG lives here
too since both produce the same (magnitude, orientation) field shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .patchio import ImagePatch

N_ORIENTATIONS = 8


@dataclass(frozen=True)
class GaborParams:
    sigma: float
    n_orientations: int = N_ORIENTATIONS
    mu: float = field(init=False)
    kernel_radius: int = field(init=False)

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma!r}")
        if self.n_orientations < 1:
            raise ConfigError("need at least one orientation")
        object.__setattr__(self, "mu", 1.0 / np.sqrt(2.0 * self.sigma))
        object.__setattr__(self, "kernel_radius", max(int(round(3.0 * self.sigma)), 2))

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.n_orientations) * np.pi / self.n_orientations


@dataclass(frozen=True)
class ResponseField:
    """Per-pixel (magnitude, orientation) pair; orientations lie in [0, pi)."""

    magnitude: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        if self.magnitude.shape != self.orientation.shape:
            raise ConfigError("magnitude and orientation shapes differ")


def gabor_kernel(params: GaborParams, theta: float) -> np.ndarray:
    r = params.kernel_radius
    offsets = np.arange(-r, r + 1, dtype=np.float64)
    x = offsets[:, None]  # row offset
    y = offsets[None, :]  # column offset
    envelope = np.exp(-(x * x + y * y) / (2.0 * params.sigma**2)) / (
        2.0 * np.pi * params.sigma**2
    )
    carrier = np.cos(2.0 * np.pi * params.mu * (x * np.cos(theta) + y * np.sin(theta)))
    return envelope * carrier


def build_bank(sigma: float, n_orientations: int = N_ORIENTATIONS) -> list[np.ndarray]:
    """The eight real Gabor kernels for one scale, ordered by orientation index."""
    params = GaborParams(sigma, n_orientations)
    return [gabor_kernel(params, th) for th in params.thetas]


def convolve_replicate(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Same-size convolution with replicate padding.

    The kernels used here are even-symmetric (k(-x,-y) = k(x,y)), so plain
    tap-by-tap correlation equals convolution.  Taps accumulate in kernel
    raster order, which keeps per-pixel summation order deterministic.
    """
    kh, kw = kernel.shape
    rh, rw = kh // 2, kw // 2
    m, n = img.shape
    padded = np.pad(img, ((rh, rh), (rw, rw)), mode="edge")
    acc = np.zeros((m, n))
    for a in range(kh):
        for b in range(kw):
            acc += kernel[a, b] * padded[a : a + m, b : b + n]
    return acc


def gabor_response(p: ImagePatch, sigma: float, rule: str = "min_real") -> ResponseField:
    """Minimum-response magnitude and argmin orientation over the bank.

    ``rule`` selects how the eight filtered values collapse per pixel:
    ``min_real`` (the default) keeps the signed minimum, ``max_abs`` keeps the
    value of largest absolute response.  Ties resolve to the smallest
    orientation index either way.
    """
    params = GaborParams(sigma)
    responses = np.stack(
        [convolve_replicate(p.pixels, gabor_kernel(params, th)) for th in params.thetas]
    )
    if rule == "min_real":
        pick = np.argmin(responses, axis=0)  # first minimum -> smallest t
    elif rule == "max_abs":
        pick = np.argmax(np.abs(responses), axis=0)
    else:
        raise ConfigError(f"unknown response rule {rule!r}")
    magnitude = np.take_along_axis(responses, pick[None], axis=0)[0]
    orientation = params.thetas[pick]
    return ResponseField(magnitude=magnitude, orientation=orientation)


def gradient_response(p: ImagePatch) -> ResponseField:
    """Central-difference gradient magnitude and orientation folded to [0, pi).

    Borders replicate the edge pixel, so the one-sided differences there span
    a single pixel step.  A zero gradient maps to orientation 0; a vertical
    one (dx = 0, dy != 0) to pi/2.
    """
    img = p.pixels
    dx = np.empty_like(img)
    dx[1:-1, :] = img[2:, :] - img[:-2, :]
    dx[0, :] = img[1, :] - img[0, :]
    dx[-1, :] = img[-1, :] - img[-2, :]
    dy = np.empty_like(img)
    dy[:, 1:-1] = img[:, 2:] - img[:, :-2]
    dy[:, 0] = img[:, 1] - img[:, 0]
    dy[:, -1] = img[:, -1] - img[:, -2]

    magnitude = np.sqrt(dx * dx + dy * dy)
    orientation = np.mod(np.arctan2(dy, dx), np.pi)
    # mod can round a tiny negative angle up to pi itself; fold it back.
    orientation[orientation >= np.pi] = 0.0
    return ResponseField(magnitude=magnitude, orientation=orientation)
