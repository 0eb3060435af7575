"""Individualized predictive distributions.

The outcome family's density (or probability function) is evaluated with its
mean set to an individualized expectation ``e(theta)``; averaging over
parameter draws gives the curve ``E_theta[p(y | e(theta))]`` together with
per-``y`` uncertainty regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ConfigError, DomainError
from .uncertainty import DEFAULT_ALPHA, QuantityResult, ThetaEnsemble, region

FAMILIES = ("gaussian", "poisson", "binomial")


@dataclass(frozen=True)
class PredictiveFamily:
    """Outcome family with mean parametrization.

    Parameters
    ----------
    family : {"gaussian", "poisson", "binomial"}
    variance_index : int, optional
        Gaussian only: position of the error variance within ``theta``.
    variance : float, optional
        Gaussian only: fixed error variance used when ``variance_index`` is
        not given.
    trials : int
        Binomial only: number of trials; the expectation is read as the
        success probability.
    """

    family: str
    variance_index: int | None = None
    variance: float | None = None
    trials: int = 1

    def __post_init__(self) -> None:
        fam = self.family.split("-")[0].lower()
        if fam not in FAMILIES:
            raise ConfigError(f"unknown predictive family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if fam == "gaussian" and self.variance_index is None and self.variance is None:
            raise ConfigError("gaussian family needs variance_index or variance")
        if fam == "binomial" and int(self.trials) < 1:
            raise ConfigError("binomial family needs trials >= 1")

    def sigma2(self, theta: np.ndarray) -> np.ndarray:
        """Error variance per draw (``theta`` is ``(D, k)``)."""
        if self.variance_index is not None:
            s2 = theta[:, self.variance_index]
        else:
            s2 = np.full(theta.shape[0], float(self.variance))
        if np.any(s2 <= 0):
            bad = int(np.argmax(s2 <= 0))
            raise DomainError(f"non-positive error variance at draw {bad}")
        return s2

    def support(self, upper: int | None = None) -> np.ndarray:
        """Integer support for discrete families (Poisson truncated at
        ``upper``)."""
        if self.family == "binomial":
            return np.arange(self.trials + 1, dtype=float)
        if self.family == "poisson":
            if upper is None:
                raise ConfigError("poisson support needs an upper bound")
            return np.arange(upper + 1, dtype=float)
        raise ConfigError("gaussian family has continuous support")


def _density(y: np.ndarray, e: np.ndarray, theta: np.ndarray, fam: PredictiveFamily) -> np.ndarray:
    """``(len(y), D)`` matrix of densities."""
    y = y[:, None]
    e = e[None, :]
    if fam.family == "gaussian":
        s2 = fam.sigma2(theta)[None, :]
        return np.exp(-0.5 * (y - e) ** 2 / s2) / np.sqrt(2.0 * np.pi * s2)
    if fam.family == "poisson":
        if np.any(e <= 0):
            raise DomainError(f"poisson mean must be positive (draw {int(np.argmax(e.ravel() <= 0))})")
        is_int = (y == np.floor(y)) & (y >= 0)
        logp = np.where(is_int, y * np.log(e) - e - gammaln(np.maximum(y, 0) + 1.0), -np.inf)
        return np.exp(logp)
    n = fam.trials
    if np.any((e < 0) | (e > 1)):
        raise DomainError(f"binomial mean must lie in [0, 1] (draw {int(np.argmax(((e < 0) | (e > 1)).ravel()))})")
    is_int = (y == np.floor(y)) & (y >= 0) & (y <= n)
    yy = np.clip(y, 0, n)
    logc = gammaln(n + 1.0) - gammaln(yy + 1.0) - gammaln(n - yy + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = logc + np.where(yy > 0, yy * np.log(e), 0.0) + np.where(n - yy > 0, (n - yy) * np.log1p(-e), 0.0)
    return np.where(is_int, np.exp(logp), 0.0)


def ippd_density(y: Any, theta: Any, e_value: Any, fam: PredictiveFamily):
    """Density or probability of ``y`` with mean ``e_value``.

    ``theta`` and ``e_value`` may carry a draws axis (``theta`` of shape
    ``(D, k)``, ``e_value`` of shape ``(D,)``); ``y`` may be an array.  The
    result has shape ``y.shape + (D,)`` with singleton axes dropped.
    """
    th = np.asarray(theta, dtype=float)
    single = th.ndim == 1
    th2 = th[None, :] if single else th
    e = np.broadcast_to(np.atleast_1d(np.asarray(e_value, dtype=float)), (th2.shape[0],))
    y_arr = np.asarray(y, dtype=float)
    dens = _density(y_arr.ravel(), e, th2, fam).reshape(y_arr.shape + (th2.shape[0],))
    if single:
        dens = dens[..., 0]
    return float(dens) if np.ndim(dens) == 0 else dens


def predictive_mean(theta: Any, e_value: Any, fam: PredictiveFamily) -> np.ndarray:
    """First moment of the predictive family (analytic)."""
    e = np.asarray(e_value, dtype=float)
    if fam.family == "binomial":
        return fam.trials * e
    return e


def marginal_predictive_curve(y_grid: Sequence[float], ensemble: ThetaEnsemble, e_fn: Callable[[np.ndarray], Any],
                              fam: PredictiveFamily, alpha: float = DEFAULT_ALPHA, kind: str = "hdr") -> QuantityResult:
    """Mean over draws of ``p(y | e(theta))`` at each ``y`` with regions from
    the per-draw values.

    ``e_fn`` maps the draw matrix to one individualized expectation per draw.
    """
    y = np.asarray(y_grid, dtype=float).ravel()
    if len(y) == 0:
        raise ConfigError("empty y grid")
    th = ensemble.draws
    e = np.broadcast_to(np.asarray(e_fn(th), dtype=float), (th.shape[0],))
    dens = _density(y, e, th, fam)
    point = dens.mean(axis=1)
    rows = tuple((float(yy), float(pt), region(dens[i], alpha, kind)) for i, (yy, pt) in enumerate(zip(y, point)))
    return QuantityResult(point, (), None, rows, None,
                          {"n_draws": ensemble.n_draws, "alpha": alpha, "kind": kind, "family": fam.family,
                           "e_mean": float(np.mean(e))})
