"""Numerical core: ridge/ordinary least squares and coordinate-descent Lasso.

Both fitters return an :class:`AffineMap` with predictions ``X @ W + b``.
The Lasso objective uses the 1/(2N) convention,

    (1/2N) ||y - X w - b||^2 + alpha * ||w||_1,

so ``alpha`` is comparable to the values common ML libraries report. The
intercept is never penalized.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import NotConvergedWarning, ShapeMismatch, SingularDesign


@dataclass(frozen=True)
class AffineMap:
    """Affine map x -> x @ weights + bias."""

    weights: np.ndarray          # D_in x D_out
    bias: np.ndarray             # D_out
    source: str = ""
    training_meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
            raise ShapeMismatch(
                f"weights {w.shape} incompatible with bias {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ShapeMismatch("affine map entries must be finite")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def d_in(self) -> int:
        return self.weights.shape[0]

    @property
    def d_out(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(weights=np.eye(d), bias=np.zeros(d))

    def to_json(self) -> dict:
        return {
            "d_in": self.d_in,
            "d_out": self.d_out,
            "weights": [float(v) for v in self.weights.ravel()],
            "bias": [float(v) for v in self.bias],
            "source": self.source,
            "training_meta": self.training_meta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AffineMap":
        w = np.array(obj["weights"], dtype=np.float64).reshape(obj["d_in"], obj["d_out"])
        return cls(weights=w, bias=np.array(obj["bias"], dtype=np.float64),
                   source=obj.get("source", ""),
                   training_meta=obj.get("training_meta", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "AffineMap":
        return cls.from_json(json.loads(Path(path).read_text()))


def apply(map_: AffineMap, x: np.ndarray) -> np.ndarray:
    """Apply an affine map to rows of x (N x D_in -> N x D_out)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != map_.d_in:
        raise ShapeMismatch(
            f"input has shape {x.shape}, map expects N x {map_.d_in}")
    return x @ map_.weights + map_.bias


def compose(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """Affine map equivalent to applying ``inner`` first, then ``outer``."""
    if inner.d_out != outer.d_in:
        raise ShapeMismatch(
            f"cannot compose: inner d_out {inner.d_out} != outer d_in {outer.d_in}")
    return AffineMap(weights=inner.weights @ outer.weights,
                     bias=inner.bias @ outer.weights + outer.bias)


@dataclass(frozen=True)
class LassoConfig:
    alpha: float = 0.01
    max_iter: int = 1000
    tol: float = 1e-6
    fit_intercept: bool = True

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")


def fit_least_squares(x: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> AffineMap:
    """Least squares with an unpenalized intercept.

    Minimizes ``||Y - XW - 1 b^T||_F^2 + ridge * ||W||_F^2`` via centered
    normal equations and a symmetric (Cholesky) solve.

    Raises:
        SingularDesign: ridge is 0 and X^T X is rank-deficient; retry with
            a positive ridge.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    n = x.shape[0]
    if n < 2 or y.shape[0] != n:
        raise ShapeMismatch(f"need N >= 2 matching rows, got X {x.shape}, Y {y.shape}")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    x_mean = x.mean(axis=0)
    y_mean = y.mean(axis=0)
    xc = x - x_mean
    yc = y - y_mean
    gram = xc.T @ xc
    if ridge > 0:
        gram = gram + ridge * np.eye(x.shape[1])
    xty = xc.T @ yc
    try:
        cho = scipy.linalg.cho_factor(gram, check_finite=False)
        w = scipy.linalg.cho_solve(cho, xty, check_finite=False)
    except scipy.linalg.LinAlgError:
        raise SingularDesign(
            "X^T X is not positive definite; design is rank-deficient "
            "(retry with ridge > 0)") from None
    pivots = np.abs(np.diag(cho[0]))
    if ridge == 0.0 and pivots.size and pivots.min() ** 2 <= 1e-12 * pivots.max() ** 2:
        raise SingularDesign(
            "X^T X is numerically rank-deficient (Cholesky pivot underflow); "
            "retry with ridge > 0")
    grad = gram @ w - xty
    if not np.all(np.isfinite(w)) or (
            ridge == 0.0
            and np.linalg.norm(grad) > 1e-6 * (1.0 + np.linalg.norm(y))):
        raise SingularDesign(
            "normal equations solved inaccurately; design is near rank-deficient "
            "(retry with ridge > 0)")
    bias = y_mean - x_mean @ w
    return AffineMap(weights=w, bias=bias,
                     training_meta={"method": "least_squares", "ridge": float(ridge)})


def _lasso_objective(xc, yc, w, alpha):
    n = xc.shape[0]
    r = yc - xc @ w
    return float(0.5 / n * np.sum(r * r) + alpha * np.abs(w).sum())


def fit_lasso(x: np.ndarray, y: np.ndarray, cfg: LassoConfig = LassoConfig()
              ) -> AffineMap:
    """L1-regularized least squares by cyclic coordinate descent.

    Each output column is an independent problem solved with exact
    soft-threshold updates on an incrementally maintained residual. A sweep
    terminates the column when the largest coefficient change falls below
    ``cfg.tol`` and the KKT residual is within ``10 * cfg.tol``; hitting
    ``max_iter`` first leaves a ``converged: False`` flag in
    ``training_meta`` and emits :class:`NotConvergedWarning`.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    n, d = x.shape
    if n < 2 or y.shape[0] != n:
        raise ShapeMismatch(f"need N >= 2 matching rows, got X {x.shape}, Y {y.shape}")
    col_sq = (x * x).sum(axis=0) / n
    if np.any(col_sq == 0.0):
        raise ShapeMismatch("X has an all-zero column; drop it before fitting")

    if cfg.fit_intercept:
        x_mean = x.mean(axis=0)
        y_mean = y.mean(axis=0)
        xc = x - x_mean
        yc = y - y_mean
        col_sq = (xc * xc).sum(axis=0) / n
        if np.any(col_sq == 0.0):
            raise ShapeMismatch("X has a constant column; drop it when fitting an intercept")
    else:
        x_mean = np.zeros(d)
        y_mean = np.zeros(y.shape[1])
        xc, yc = x, y

    k = y.shape[1]
    w = np.zeros((d, k))
    alpha = cfg.alpha
    kkt_tol = 10.0 * cfg.tol
    converged = np.zeros(k, dtype=bool)
    sweeps = np.zeros(k, dtype=int)
    objectives: list[list[float]] = []

    for col in range(k):
        yk = yc[:, col]
        wk = w[:, col]
        r = yk.copy()                      # residual y - X w, w starts at 0
        history = [_lasso_objective(xc, yk[:, None], wk[:, None], alpha)]
        for sweep in range(cfg.max_iter):
            max_delta = 0.0
            for j in range(d):
                wj = wk[j]
                if wj != 0.0:
                    r += wj * xc[:, j]
                rho = xc[:, j] @ r / n
                wk[j] = np.sign(rho) * max(abs(rho) - alpha, 0.0) / col_sq[j]
                if wk[j] != 0.0:
                    r -= wk[j] * xc[:, j]
                max_delta = max(max_delta, abs(wk[j] - wj))
            history.append(_lasso_objective(xc, yk[:, None], wk[:, None], alpha))
            sweeps[col] = sweep + 1
            if max_delta < cfg.tol:
                grad = xc.T @ r / n
                active = wk != 0.0
                ok_zero = np.all(np.abs(grad[~active]) <= alpha + kkt_tol)
                ok_active = np.all(
                    np.abs(grad[active] - alpha * np.sign(wk[active])) <= kkt_tol)
                if ok_zero and ok_active:
                    converged[col] = True
                    break
        objectives.append(history)
        w[:, col] = wk

    if not np.all(converged):
        warnings.warn(
            f"lasso: {int(np.sum(~converged))} of {k} output columns hit "
            f"max_iter={cfg.max_iter} before meeting the KKT tolerance",
            NotConvergedWarning, stacklevel=2)
    bias = y_mean - x_mean @ w
    meta = {
        "method": "lasso_cd",
        "alpha": float(alpha),
        "converged": bool(np.all(converged)),
        "columns_converged": [bool(v) for v in converged],
        "sweeps": [int(v) for v in sweeps],
        "objective_history": objectives,
    }
    return AffineMap(weights=w, bias=bias, training_meta=meta)
