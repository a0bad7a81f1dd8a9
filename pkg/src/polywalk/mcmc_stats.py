"""Initial-positive-sequence variance estimation and confidence intervals for MCMC integration.

The estimator truncates the summed autocovariances at the last index N for
which the pair sums Gamma_k = gamma_{2k} + gamma_{2k+1} remain strictly
positive; for a reversible chain the true pair sums are positive and
decreasing, so everything past the first nonpositive estimate is noise.
The plain estimator is implemented, not the monotone/convex refinements.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np


@dataclass(frozen=True)
class IpsSummary:
    mean: float
    gamma0: float
    gamma1: float
    Gammas: tuple[float, ...]
    N: int
    sigma_sq: float
    half_width: float
    m: int
    clamped: bool

    @property
    def sigma(self) -> float:
        return sqrt(self.sigma_sq)

    def to_json_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sigma": self.sigma,
            "half_width_95": self.half_width,
            "N": self.N,
            "m": self.m,
            "clamped": self.clamped,
        }


def autocovariance(ts, k: int) -> float:
    """Lagged autocovariance with the 1/m normalization (deliberately not 1/(m-k))."""
    x = np.asarray(ts, dtype=float)
    m = x.size
    if not 0 <= k < m:
        raise ValueError(f"lag must satisfy 0 <= k < {m}")
    dev = x - x.mean()
    return float(dev[: m - k] @ dev[k:]) / m


def ips_variance(ts) -> IpsSummary:
    """Initial-positive-sequence estimate of the asymptotic variance of the sample mean.

    Autocovariances past the series length count as zero, and the pair-sum
    index is capped at m/2.  A negative estimate (possible on short or
    anticorrelated input) is clamped to zero and flagged.
    """
    x = np.asarray(ts, dtype=float)
    m = x.size
    if m < 4:
        raise ValueError("need a series of length >= 4")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    mean = float(x.mean())
    dev = x - mean

    def gamma(k: int) -> float:
        if k >= m:
            return 0.0
        return float(dev[: m - k] @ dev[k:]) / m

    g0 = gamma(0)
    g1 = gamma(1)
    Gammas: list[float] = []
    k = 1
    while k <= m // 2:
        G = gamma(2 * k) + gamma(2 * k + 1)
        if G <= 0.0:
            break
        Gammas.append(G)
        k += 1
    sigma_sq = g0 + 2.0 * g1 + 2.0 * sum(Gammas)
    clamped = sigma_sq < 0.0
    if clamped:
        sigma_sq = 0.0
    return IpsSummary(
        mean=mean,
        gamma0=g0,
        gamma1=g1,
        Gammas=tuple(Gammas),
        N=len(Gammas),
        sigma_sq=sigma_sq,
        half_width=1.96 * sqrt(sigma_sq / m),
        m=m,
        clamped=clamped,
    )


def confidence_interval(summary: IpsSummary) -> tuple[float, float]:
    """Approximate 95% interval: mean +/- 1.96 sigma / sqrt(m)."""
    return summary.mean - summary.half_width, summary.mean + summary.half_width
