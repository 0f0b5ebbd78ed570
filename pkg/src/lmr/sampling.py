"""Random initialization on the low-rank manifold.

Provides uniform Stiefel sampling (Gaussian matrix times inverse square
root of its Gram matrix), the general random low-rank distribution with
uniform singular values, and rank-1 Gaussian outer products.  Every
sampler takes an explicit ``numpy.random.Generator``; batches of runs get
independent child streams from one seed so results do not depend on
scheduling order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .manifold import FactoredPoint
from .validation import ConfigError, check_rank

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RandomSpec:
    """Parameters of the general random low-rank distribution."""

    n: int
    r: int
    sigma_low: float = 0.5
    sigma_high: float = 1.5
    seed: int = 0
    spsd: bool = False

    def __post_init__(self):
        check_rank(self.n, self.n, self.r)
        if not (self.sigma_high > self.sigma_low >= 0.0):
            raise ConfigError(
                f"need sigma_high > sigma_low >= 0, got "
                f"[{self.sigma_low}, {self.sigma_high}]")


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child streams; reproducible regardless of scheduling."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(c) for c in children]


def sample_stiefel(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform n x r orthonormal frame: ``G (G^T G)^{-1/2}`` for Gaussian G.

    Computed through the orthogonal polar factor (SVD), which equals the
    Gram-root formula.  The singular Gram case has probability zero; we
    resample and log if it ever occurs.
    """
    check_rank(n, n, r)
    while True:
        g = rng.standard_normal((n, r)) / np.sqrt(n)
        u, s, vt = np.linalg.svd(g, full_matrices=False)
        if s[-1] > n * np.finfo(float).eps * s[0]:
            return u @ vt
        log.warning("degenerate Gaussian draw in sample_stiefel; resampling")


def sample_grd(spec: RandomSpec,
               rng: np.random.Generator | None = None) -> FactoredPoint:
    """General random point: Stiefel factors, uniform singular values.

    Singular values are i.i.d. uniform on ``[sigma_low, sigma_high]`` and
    returned in descending order.  With ``spsd`` set, the right factor is
    the left factor, giving a symmetric positive semi-definite point.
    Without an explicit generator, a fresh stream from ``spec.seed`` is
    used.
    """
    if rng is None:
        rng = rng_from_seed(spec.seed)
    v1 = sample_stiefel(spec.n, spec.r, rng)
    v2 = v1 if spec.spsd else sample_stiefel(spec.n, spec.r, rng)
    sigma = rng.uniform(spec.sigma_low, spec.sigma_high, size=spec.r)
    order = np.argsort(sigma)[::-1]
    return FactoredPoint(v1[:, order], np.diag(sigma[order]), v2[:, order])


def sample_rank1_gaussian(n: int, c: float,
                          rng: np.random.Generator) -> FactoredPoint:
    """Rank-1 SPSD point ``c * u u^T`` with ``u ~ N(0, I_n)/sqrt(n)``.

    The Frobenius norm is ``c * ||u||^2``, a scaled chi-square with mean c.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if not c > 0:
        raise ConfigError(f"scale must be positive, got {c}")
    u = rng.standard_normal(n) / np.sqrt(n)
    nrm = np.linalg.norm(u)
    direction = (u / nrm).reshape(n, 1)
    return FactoredPoint(direction, np.array([[c * nrm ** 2]]), direction)
