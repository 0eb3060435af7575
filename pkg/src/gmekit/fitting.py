"""Maximum-likelihood fitting of the supported families.

Gaussian models are fitted by least squares, binomial and Poisson models by
iteratively reweighted least squares.  The returned covariance is the inverse
information matrix; for gaussian models it is ``sigma^2 (X'X)^-1`` padded
with a zero row and column for the error variance, which is appended to the
parameter vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit, xlogy

from .errors import ConvergenceError, DataError, SeparationError
from .model import ParametricModel

MAX_ITER = 50
DEVIANCE_TOL = 1e-10
SEPARATION_ETA = 30.0


@dataclass(frozen=True, eq=False)
class FitResult:
    model: ParametricModel
    theta: np.ndarray
    cov: np.ndarray
    iterations: int
    deviance: float
    converged: bool = True


def _design(model: ParametricModel, X: np.ndarray) -> np.ndarray:
    """Columns per coefficient (terms sharing a coefficient are summed)."""
    T = model.term_values(X)
    M = np.zeros((X.shape[0], model.n_beta))
    for i, t in enumerate(model.terms):
        M[:, t.coef] += T[:, i]
    return M


def _deviance(family: str, y: np.ndarray, mu: np.ndarray, trials: np.ndarray) -> float:
    if family == "binomial-logit":
        p = np.clip(mu, 1e-300, 1 - 1e-16)
        s = y * trials
        return float(2.0 * np.sum(xlogy(s, s / (trials * p)) + xlogy(trials - s, (trials - s) / (trials * (1 - p)))))
    mu = np.maximum(mu, 1e-300)
    return float(2.0 * np.sum(xlogy(y, y / mu) - (y - mu)))


def fit(model: ParametricModel, X: Any, y: Any, trials: Any = None, offset: Any = None) -> FitResult:
    """Fit ``model`` to encoded regressors ``X`` and outcomes ``y``.

    Parameters
    ----------
    trials : array_like, optional
        Binomial only.  When given, ``y`` holds success counts out of
        ``trials``; otherwise ``y`` is binary.
    offset : array_like, optional
        Per-record offset added to the linear predictor; defaults to the
        model's constant offset.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] != model.p:
        raise DataError(f"design must have {model.p} columns")
    if len(y) != len(X):
        raise DataError("X and y differ in length")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("data contain non-finite values")
    M = _design(model, X)
    if np.linalg.matrix_rank(M) < M.shape[1]:
        raise DataError("design matrix is rank deficient")
    off = np.full(len(y), model.offset) if offset is None else np.broadcast_to(np.asarray(offset, dtype=float), y.shape)
    fam = model.family

    if fam == "gaussian-identity":
        beta, *_ = np.linalg.lstsq(M, y - off, rcond=None)
        resid = y - off - M @ beta
        dof = len(y) - M.shape[1]
        sigma2 = float(resid @ resid / dof) if dof > 0 else 0.0
        cov_b = sigma2 * np.linalg.inv(M.T @ M)
        k = model.k
        theta = np.zeros(k)
        theta[: model.n_beta] = beta
        cov = np.zeros((k, k))
        cov[: model.n_beta, : model.n_beta] = cov_b
        if model.n_aux:
            theta[model.n_beta] = sigma2
        return FitResult(model, theta, cov, 1, float(resid @ resid))

    if fam == "binomial-logit":
        n_tr = np.ones_like(y) if trials is None else np.broadcast_to(np.asarray(trials, dtype=float), y.shape)
        if np.any(n_tr <= 0):
            raise DataError("trials must be positive")
        frac = y / n_tr
        if np.any((frac < 0) | (frac > 1)):
            raise DataError("binomial outcomes must lie between 0 and the number of trials")
        mu = (n_tr * frac + 0.5) / (n_tr + 1.0)
        eta = np.log(mu / (1 - mu)) - off
        target = frac
    else:
        if np.any(y < 0):
            raise DataError("poisson outcomes must be nonnegative")
        n_tr = np.ones_like(y)
        mu = y + 0.1
        eta = np.log(mu) - off
        target = y

    dev_old = np.inf
    beta = np.zeros(model.n_beta)
    for it in range(1, MAX_ITER + 1):
        lin = eta + off
        if fam == "binomial-logit":
            mu = expit(lin)
            var = n_tr * mu * (1 - mu)
            z = eta + (target - mu) / np.maximum(mu * (1 - mu), 1e-300)
        else:
            mu = np.exp(lin)
            var = mu
            z = eta + (target - mu) / np.maximum(mu, 1e-300)
        w = np.maximum(var, 1e-300)
        sw = np.sqrt(w)
        beta, *_ = np.linalg.lstsq(M * sw[:, None], z * sw, rcond=None)
        eta = M @ beta
        lin = eta + off
        mu = expit(lin) if fam == "binomial-logit" else np.exp(np.clip(lin, -700, 700))
        dev = _deviance(fam, target, mu, n_tr)
        if fam == "binomial-logit" and np.max(np.abs(lin)) > SEPARATION_ETA:
            raise SeparationError(
                f"fitted linear predictor reached {np.max(np.abs(lin)):.1f} after {it} iterations; "
                "the data appear (quasi-)separated"
            )
        if abs(dev - dev_old) <= DEVIANCE_TOL * (abs(dev) + 0.1):
            break
        dev_old = dev
    else:
        raise ConvergenceError(f"IRLS did not converge in {MAX_ITER} iterations (deviance {dev:.6g})")
    var = n_tr * mu * (1 - mu) if fam == "binomial-logit" else mu
    info = M.T @ (M * var[:, None])
    cov_b = np.linalg.inv(info)
    k = model.k
    theta = np.zeros(k)
    theta[: model.n_beta] = beta
    cov = np.zeros((k, k))
    cov[: model.n_beta, : model.n_beta] = cov_b
    return FitResult(model, theta, cov, it, dev)
