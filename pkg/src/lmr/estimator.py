"""Scikit-learn style front end for the manifold solver.

``LowRankRecovery`` wraps the projected-gradient iteration behind the
familiar ``fit`` / ``predict`` / ``get_params`` surface so the solver can
sit inside pipelines, grid searches and ``clone`` without adapters.  The
geometry primitives stay available as plain functions for callers who need
them directly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .losses import LossSpec, MeasurementEnsemble, loss_value
from .manifold import FactoredPoint, GroundTruth
from .optimizer import PgdConfig, run_pgd
from .sampling import RandomSpec, rng_from_seed, sample_grd, sample_rank1_gaussian
from .validation import ConfigError, as_matrix


class LowRankRecovery(BaseEstimator):
    """Recover a rank-``rank`` matrix by projected gradient descent.

    Two fitting modes share one estimator:

    * measurement mode -- ``fit(ensemble, y)`` with a
      :class:`MeasurementEnsemble` and the observed vector ``y`` minimizes
      the empirical least squares ``1/2 ||T(Z) - y||^2``; stopping is on
      the projected-gradient norm since the target is unknown.
    * population mode -- ``fit(X)`` with a dense target matrix minimizes
      the distance loss (``loss="f1"``) or its weak-isometry variant
      (``loss="f2"``); stopping is on the relative error to the target.

    After fitting, ``estimate_`` holds the factored solution, ``n_iter_``
    the iteration count and ``trajectory_`` the full diagnostic record.
    """

    def __init__(self, rank=1, loss="empirical", alpha=0.3, max_iter=1000,
                 tol=1e-6, theta=1.0, init="grd", sigma_low=0.5,
                 sigma_high=1.5, record_every=1, random_state=0):
        self.rank = rank
        self.loss = loss
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol
        self.theta = theta
        self.init = init
        self.sigma_low = sigma_low
        self.sigma_high = sigma_high
        self.record_every = record_every
        self.random_state = random_state

    # -- fitting -------------------------------------------------------------

    def _initial_point(self, n1: int, n2: int,
                       rng: np.random.Generator) -> FactoredPoint:
        if self.init == "grd":
            if n1 != n2:
                raise ConfigError("grd initialization requires square shape; "
                                  "pass init='rank1' or a square problem")
            spec = RandomSpec(n=n1, r=self.rank, sigma_low=self.sigma_low,
                              sigma_high=self.sigma_high)
            return sample_grd(spec, rng)
        if self.init == "rank1":
            if self.rank != 1:
                raise ConfigError("init='rank1' only makes sense for rank=1")
            return sample_rank1_gaussian(n1, 1.0, rng)
        raise ConfigError(f"unknown init {self.init!r}")

    def _build_spec(self, X, y) -> tuple[LossSpec, tuple[int, int]]:
        if self.loss == "empirical":
            if not isinstance(X, MeasurementEnsemble):
                raise ConfigError("empirical loss expects a "
                                  "MeasurementEnsemble as X")
            y = np.asarray(y, dtype=float).ravel()
            if y.shape != (X.m,):
                raise ConfigError(f"y must have {X.m} entries, got {y.shape}")
            return LossSpec("empirical", ensemble=X, measurements=y), X.shape
        if self.loss in ("f1", "f2"):
            target = as_matrix(X, "target matrix")
            truth = GroundTruth.from_dense(target, self.rank)
            return (LossSpec(self.loss, ground_truth=truth, theta=self.theta),
                    target.shape)
        raise ConfigError(f"unknown loss {self.loss!r}")

    def fit(self, X, y=None):
        spec, shape = self._build_spec(X, y)
        rng = rng_from_seed(self.random_state)
        z0 = self._initial_point(shape[0], shape[1], rng)
        if spec.ground_truth is not None:
            cfg = PgdConfig(alpha=self.alpha, max_iter=self.max_iter,
                            tol_rel=self.tol, record_every=self.record_every)
        else:
            cfg = PgdConfig(alpha=self.alpha, max_iter=self.max_iter,
                            tol_grad=self.tol, record_every=self.record_every)
        record, final = run_pgd(spec, z0, cfg, rank=self.rank)
        self.estimate_ = final
        self.trajectory_ = record
        self.n_iter_ = int(record.k[-1])
        self.converged_ = record.stop_reason != "max_iter"
        self.final_loss_ = float(record.loss[-1])
        self._spec = spec
        return self

    # -- inference -------------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "estimate_"):
            raise ConfigError("estimator is not fitted")

    def predict(self, indices=None) -> np.ndarray:
        """Dense reconstruction, or the entries at ``(i, j)`` index pairs."""
        self._check_fitted()
        dense = self.estimate_.reconstruct()
        if indices is None:
            return dense
        idx = np.asarray(indices)
        return dense[idx[:, 0], idx[:, 1]]

    def score(self, X, y=None) -> float:
        """Negative objective value of the fitted estimate (higher is better)."""
        self._check_fitted()
        spec, _ = self._build_spec(X, y)
        return -loss_value(spec, self.estimate_)
