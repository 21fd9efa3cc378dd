"""Beta and Gaussian density algebra.

Closed-form moments, conjugate multiplications by a and (1-a), moment-based
prediction, mixture moment matching, and the Hellinger divergence used as the
merge criterion. Everything here is a pure function of immutable values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

log = logging.getLogger(__name__)

__all__ = [
    "BetaParams",
    "GaussianComponent",
    "BetaGaussianComponent",
    "InvalidMomentsError",
    "beta_pdf",
    "beta_mean",
    "beta_variance",
    "beta_from_moments",
    "beta_predict",
    "beta_times_a",
    "beta_times_one_minus_a",
    "gaussian_predict",
    "gaussian_update",
    "gaussian_logpdf",
    "moment_match_bg_mixture",
    "hellinger_distance",
]


class InvalidMomentsError(ValueError):
    """Raised when (mean, variance) cannot come from any Beta distribution."""


@dataclass(frozen=True)
class BetaParams:
    """Shape pair of a Beta density over the detection probability."""

    s: float
    t: float

    def __post_init__(self):
        if not (self.s > 0 and self.t > 0):
            raise ValueError(f"Beta shapes must be positive, got ({self.s}, {self.t})")


@dataclass(frozen=True)
class GaussianComponent:
    """Mean/covariance pair for the kinematic state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        self.mean.setflags(write=False)
        self.cov.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class BetaGaussianComponent:
    """Weighted product term beta(a) * N(x); beta is None in fixed-pd mode."""

    weight: float
    beta: BetaParams | None
    gaussian: GaussianComponent

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"component weight must be >= 0, got {self.weight}")


def beta_pdf(a: float, b: BetaParams) -> float:
    if not (0.0 <= a <= 1.0):
        raise ValueError(f"beta_pdf argument must lie in [0,1], got {a}")
    if a in (0.0, 1.0):
        # endpoint densities: finite only when the corresponding shape >= 1
        if (a == 0.0 and b.s < 1.0) or (a == 1.0 and b.t < 1.0):
            raise ValueError("endpoint excluded for shape < 1")
        if (a == 0.0 and b.s > 1.0) or (a == 1.0 and b.t > 1.0):
            return 0.0
        # shape == 1 at the endpoint: continuous limit
        return math.exp(-betaln(b.s, b.t))
    return math.exp((b.s - 1) * math.log(a) + (b.t - 1) * math.log1p(-a) - betaln(b.s, b.t))


def beta_mean(b: BetaParams) -> float:
    return b.s / (b.s + b.t)


def beta_variance(b: BetaParams) -> float:
    n = b.s + b.t
    return b.s * b.t / (n * n * (n + 1.0))


def beta_from_moments(mean: float, variance: float) -> BetaParams:
    if not (0.0 < mean < 1.0):
        raise InvalidMomentsError(f"mean must lie in (0,1), got {mean}")
    ratio = mean * (1.0 - mean) / variance - 1.0
    if ratio <= 0.0:
        raise InvalidMomentsError(
            f"variance {variance} >= mean(1-mean) = {mean * (1 - mean)}"
        )
    return BetaParams(ratio * mean, ratio * (1.0 - mean))


def beta_predict(b: BetaParams, k_beta: float) -> BetaParams:
    """Variance-inflating prediction: mean kept, variance scaled by k_beta."""
    if k_beta < 1.0:
        raise ValueError(f"k_beta must be >= 1, got {k_beta}")
    return beta_from_moments(beta_mean(b), k_beta * beta_variance(b))


def beta_times_a(b: BetaParams) -> tuple[float, BetaParams]:
    """a * beta(a; s, t) = scale * beta(a; s+1, t), scale = s/(s+t)."""
    return b.s / (b.s + b.t), BetaParams(b.s + 1.0, b.t)


def beta_times_one_minus_a(b: BetaParams) -> tuple[float, BetaParams]:
    """(1-a) * beta(a; s, t) = scale * beta(a; s, t+1), scale = t/(s+t)."""
    return b.t / (b.s + b.t), BetaParams(b.s, b.t + 1.0)


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def gaussian_predict(g: GaussianComponent, F: np.ndarray, Q: np.ndarray) -> GaussianComponent:
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if F.shape[1] != g.dim:
        raise ValueError(f"F has {F.shape[1]} columns, state dim is {g.dim}")
    return GaussianComponent(F @ g.mean, _symmetrize(F @ g.cov @ F.T + Q))


def gaussian_logpdf(z: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    d = z - mean
    L = np.linalg.cholesky(cov)
    w = np.linalg.solve(L, d)
    return float(
        -0.5 * w @ w - np.log(np.diag(L)).sum() - 0.5 * len(d) * math.log(2.0 * math.pi)
    )


def gaussian_update(
    g: GaussianComponent, H: np.ndarray, R: np.ndarray, z: np.ndarray
) -> tuple[GaussianComponent, float]:
    """Kalman update; returns the posterior and the predictive likelihood q(z)."""
    posterior, loglik = gaussian_update_log(g, H, R, z)
    return posterior, math.exp(loglik)


def gaussian_update_log(
    g: GaussianComponent, H: np.ndarray, R: np.ndarray, z: np.ndarray
) -> tuple[GaussianComponent, float]:
    H = np.asarray(H, dtype=float)
    R = np.asarray(R, dtype=float)
    z = np.asarray(z, dtype=float)
    z_pred = H @ g.mean
    S = _symmetrize(H @ g.cov @ H.T + R)
    try:
        loglik = gaussian_logpdf(z, z_pred, S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular innovation covariance") from exc
    K = np.linalg.solve(S, H @ g.cov).T
    mean = g.mean + K @ (z - z_pred)
    cov = _symmetrize((np.eye(g.dim) - K @ H) @ g.cov)
    return GaussianComponent(mean, cov), loglik


def moment_match_bg_mixture(
    components: list[BetaGaussianComponent],
) -> BetaGaussianComponent:
    """Collapse a weighted Beta-Gaussian mixture to one component.

    The Gaussian part matches the mixture's first two moments exactly
    (including the spread-of-means term). The Beta part is recovered from the
    mixture mean and variance of the detection probability; when that variance
    is infeasible it is clamped to 0.999*mu*(1-mu) and a diagnostic is logged.
    """
    if not components:
        raise ValueError("moment matching needs at least one component")
    w = np.array([c.weight for c in components], dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("total mixture weight must be positive")
    wn = w / total

    means = np.stack([c.gaussian.mean for c in components])
    mean = wn @ means
    cov = np.zeros((means.shape[1], means.shape[1]))
    for wi, c in zip(wn, components):
        d = c.gaussian.mean - mean
        cov += wi * (c.gaussian.cov + np.outer(d, d))
    gaussian = GaussianComponent(mean, _symmetrize(cov))

    if components[0].beta is None:
        return BetaGaussianComponent(float(total), None, gaussian)

    mu_i = np.array([beta_mean(c.beta) for c in components])
    var_i = np.array([beta_variance(c.beta) for c in components])
    mu = float(wn @ mu_i)
    var = float(wn @ (var_i + mu_i**2) - mu**2)
    try:
        beta = beta_from_moments(mu, var)
    except InvalidMomentsError:
        clamped = 0.999 * mu * (1.0 - mu)
        log.warning(
            "beta mixture variance %.3g infeasible for mean %.3g; clamped to %.3g",
            var, mu, clamped,
        )
        beta = beta_from_moments(mu, clamped)
    return BetaGaussianComponent(float(total), beta, gaussian)


def _gaussian_bhattacharyya(g1: GaussianComponent, g2: GaussianComponent) -> float:
    if g1.dim != g2.dim:
        raise ValueError("dimension mismatch")
    P = 0.5 * (g1.cov + g2.cov)
    d = g1.mean - g2.mean
    sign, logdet_p = np.linalg.slogdet(P)
    _, logdet_1 = np.linalg.slogdet(g1.cov)
    _, logdet_2 = np.linalg.slogdet(g2.cov)
    log_bc = (
        -0.125 * d @ np.linalg.solve(P, d)
        - 0.5 * logdet_p
        + 0.25 * (logdet_1 + logdet_2)
    )
    return math.exp(min(log_bc, 0.0))


def _beta_bhattacharyya(b1: BetaParams, b2: BetaParams) -> float:
    log_bc = betaln(0.5 * (b1.s + b2.s), 0.5 * (b1.t + b2.t)) - 0.5 * (
        betaln(b1.s, b1.t) + betaln(b2.s, b2.t)
    )
    return math.exp(min(float(log_bc), 0.0))


def hellinger_distance(c1: BetaGaussianComponent, c2: BetaGaussianComponent) -> float:
    """Squared Hellinger distance of two Beta-Gaussian product densities."""
    bc = _gaussian_bhattacharyya(c1.gaussian, c2.gaussian)
    if c1.beta is not None and c2.beta is not None:
        bc *= _beta_bhattacharyya(c1.beta, c2.beta)
    return min(max(1.0 - bc, 0.0), 1.0)
