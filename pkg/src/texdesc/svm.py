"""Soft-margin binary SVM trained with sequential minimal optimization.

Training standardizes columns with the training statistics (zero-variance
columns pass through unscaled), precomputes the Gram matrix, and repeatedly
updates the pair (i, j) where i is the worst KKT violator and j maximizes
|E_i - E_j|, ties resolving to the lowest index, until the largest violation
drops to ``tol`` or the pair-update cap is reached.  The update, clipping and
bias rules are the standard two-variable analytic solution.  Everything is
deterministic: no sampling, no randomized scans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TrainingError

ALPHA_EPS = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    name: str = "linear"
    gamma: float | None = None  # rbf only; defaults to 1/feature_count

    def __post_init__(self):
        if self.name not in ("linear", "rbf"):
            raise ConfigError(f"unknown kernel {self.name!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("gamma must be positive")


@dataclass(frozen=True)
class DecisionScore:
    raw: float
    label: int  # +1 when raw >= 0


@dataclass(frozen=True)
class SvmModel:
    kernel: KernelSpec
    gamma: float | None
    C: float
    tol: float
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    mean: np.ndarray
    std: np.ndarray
    kkt_residual: float
    n_iter: int


def _kernel_matrix(spec: KernelSpec, gamma, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if spec.name == "linear":
        return a @ b.T
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _standardize_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return mean, std


def train_svm(
    features,
    labels,
    kernel: str | KernelSpec = "linear",
    C: float = 1.0,
    tol: float = 1e-3,
    gamma: float | None = None,
    max_iter: int = 10_000,
) -> SvmModel:
    """Fit the dual problem by SMO; see the module docstring for the scheme."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ConfigError("features must be 2-D with one label per row")
    if not np.all(np.isfinite(x)):
        raise ConfigError("features contain non-finite values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise TrainingError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise TrainingError("training set holds a single class")
    if C <= 0 or tol <= 0:
        raise ConfigError("C and tol must be positive")

    spec = kernel if isinstance(kernel, KernelSpec) else KernelSpec(kernel, gamma)
    if spec.gamma is not None:
        gamma = spec.gamma
    if spec.name == "rbf" and gamma is None:
        gamma = 1.0 / x.shape[1]

    mean, std = _standardize_stats(x)
    z = (x - mean) / std
    n = z.shape[0]
    k = _kernel_matrix(spec, gamma, z, z)

    alpha = np.zeros(n)
    bias = 0.0
    f = np.zeros(n)  # sum_j alpha_j y_j K_ij, bias excluded
    blocked = np.zeros(n, dtype=bool)
    iters = 0

    def violations(e):
        ye = y * e
        up = np.where(alpha < C - ALPHA_EPS, -ye, 0.0)
        dn = np.where(alpha > ALPHA_EPS, ye, 0.0)
        return np.maximum(np.maximum(up, dn), 0.0)

    def try_step(i: int, j: int, e) -> bool:
        nonlocal bias
        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if yi != yj:
            lo, hi = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
        else:
            lo, hi = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
        if hi - lo < ALPHA_EPS:
            return False
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if eta < ALPHA_EPS:
            return False
        aj = aj_old + yj * (e[i] - e[j]) / eta
        aj = min(max(aj, lo), hi)
        if abs(aj - aj_old) < ALPHA_EPS:
            return False
        ai = ai_old + yi * yj * (aj_old - aj)
        ai = min(max(ai, 0.0), C)
        b1 = bias - e[i] - yi * (ai - ai_old) * k[i, i] - yj * (aj - aj_old) * k[i, j]
        b2 = bias - e[j] - yi * (ai - ai_old) * k[i, j] - yj * (aj - aj_old) * k[j, j]
        if ALPHA_EPS < ai < C - ALPHA_EPS:
            new_bias = b1
        elif ALPHA_EPS < aj < C - ALPHA_EPS:
            new_bias = b2
        else:
            new_bias = 0.5 * (b1 + b2)
        f[:] = f + yi * (ai - ai_old) * k[:, i] + yj * (aj - aj_old) * k[:, j]
        alpha[i], alpha[j] = ai, aj
        bias = new_bias
        return True

    while iters < max_iter:
        e = f + bias - y
        viol = violations(e)
        masked = np.where(blocked, -np.inf, viol)
        i = int(np.argmax(masked))  # ties -> lowest index
        if masked[i] <= tol:
            break
        abs_de = np.abs(e - e[i])
        abs_de[i] = -1.0
        progressed = False
        j_first = int(np.argmax(abs_de))  # ties -> lowest index
        if try_step(i, j_first, e):
            progressed = True
        else:
            # rare: scan the remaining candidates in the same order a full
            # stable sort would visit them
            for j in np.argsort(-abs_de, kind="stable"):
                j = int(j)
                if j in (i, j_first):
                    continue
                if try_step(i, j, e):
                    progressed = True
                    break
        if progressed:
            blocked[:] = False
            iters += 1
        else:
            # worst violator cannot move along any direction; set it aside
            # until some alpha changes.
            blocked[i] = True

    residual = float(violations(f + bias - y).max())
    sv_mask = alpha > ALPHA_EPS
    return SvmModel(
        kernel=spec,
        gamma=gamma,
        C=C,
        tol=tol,
        support_vectors=z[sv_mask].copy(),
        dual_coeffs=(alpha * y)[sv_mask].copy(),
        bias=float(bias),
        mean=mean,
        std=std,
        kkt_residual=residual,
        n_iter=iters,
    )


def decision_values(model: SvmModel, features) -> np.ndarray:
    """Raw decision values for a batch of unstandardized feature rows."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.mean.shape[0]:
        raise ConfigError(
            f"expected {model.mean.shape[0]} features, got {x.shape[1]}"
        )
    z = (x - model.mean) / model.std
    if len(model.dual_coeffs):
        kv = _kernel_matrix(model.kernel, model.gamma, z, model.support_vectors)
        raw = kv @ model.dual_coeffs + model.bias
    else:
        raw = np.full(z.shape[0], model.bias)
    return raw[0] if single else raw


def decision(model: SvmModel, x) -> DecisionScore:
    """Score one sample; raw >= 0 maps to the positive class."""
    raw = float(decision_values(model, x))
    return DecisionScore(raw=raw, label=1 if raw >= 0 else -1)
