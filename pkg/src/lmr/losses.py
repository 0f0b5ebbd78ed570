"""Objective functions and their Euclidean gradients.

Three loss kinds share one interface:

* ``f1``        -- 1/2 ||Z - X||_F^2, the plain least squares distance;
* ``f2``        -- theta/2 (||Z||_F - ||X||_F)^2 + ||Z - X||_F^2, the weak
  isometry objective (the population loss of phase retrieval has this form);
* ``empirical`` -- 1/2 ||T(Z) - y||_2^2 for a linear measurement operator
  ``T(Z)_j = <A_j, Z> / sqrt(m)``.

Gradients are returned as provider objects exposing dense assembly plus the
two matrix actions the tangent projection needs, so the structured losses
never materialize an ambient matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .manifold import FactoredPoint, GroundTruth
from .validation import ConfigError, as_matrix, check_positive

ENSEMBLE_KINDS = ("gaussian_sensing", "completion", "phase_retrieval")


class GradientSingularityError(RuntimeError):
    """The gradient is undefined at the queried point (e.g. f2 at zero)."""


# ---------------------------------------------------------------------------
# Measurement ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementEnsemble:
    """The linear operator ``T(Z)_j = <A_j, Z> * scale``.

    ``payload`` depends on ``kind``: an ``(m, n1*n2)`` row-major stack of
    flattened sensing matrices, an ``(m, 2)`` integer index array for
    completion, or an ``(m, n)`` array of measurement vectors ``a_j`` for
    phase retrieval (``A_j = a_j a_j^T``).  ``scale`` defaults to
    ``1/sqrt(m)`` so the squared norm of ``T`` averages the measurements.
    """

    kind: str
    payload: np.ndarray
    shape: tuple[int, int]
    scale: float

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "completion":
            idx = self.payload
            if (idx.ndim != 2 or idx.shape[1] != 2 or idx.min() < 0
                    or idx[:, 0].max() >= self.shape[0]
                    or idx[:, 1].max() >= self.shape[1]):
                raise ConfigError("completion indices out of range")
        elif self.kind == "phase_retrieval":
            if self.shape[0] != self.shape[1] or \
                    self.payload.shape[1] != self.shape[0]:
                raise ConfigError("phase-retrieval vectors must have the "
                                  "ambient (square) dimension")

    @property
    def m(self) -> int:
        return self.payload.shape[0]

    # -- forward map --------------------------------------------------------

    def apply_dense(self, z: np.ndarray) -> np.ndarray:
        z = as_matrix(z, "ensemble input")
        if z.shape != self.shape:
            raise ConfigError(f"input shape {z.shape} != ensemble shape {self.shape}")
        if self.kind == "gaussian_sensing":
            return self.scale * (self.payload @ z.ravel())
        if self.kind == "completion":
            return self.scale * z[self.payload[:, 0], self.payload[:, 1]]
        au = self.payload @ z  # (m, n)
        return self.scale * np.einsum("ij,ij->i", au, self.payload)

    def apply(self, z) -> np.ndarray:
        """Apply ``T`` to a dense matrix or a :class:`FactoredPoint`."""
        if isinstance(z, FactoredPoint):
            if self.kind == "phase_retrieval" and z.width > 0:
                al = self.payload @ z.left
                ar = self.payload @ z.right
                return self.scale * np.einsum("ij,jk,ik->i", al, z.core, ar)
            if self.kind == "completion" and z.width > 0:
                rows = z.left[self.payload[:, 0], :]
                cols = z.right[self.payload[:, 1], :]
                return self.scale * np.einsum("ij,jk,ik->i", rows, z.core, cols)
            return self.apply_dense(z.reconstruct())
        return self.apply_dense(z)

    # -- adjoint --------------------------------------------------------------

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        """Dense ``T^*(v) = scale * sum_j v_j A_j``."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.m,):
            raise ConfigError(f"adjoint input must have shape ({self.m},)")
        if self.kind == "gaussian_sensing":
            return self.scale * (self.payload.T @ v).reshape(self.shape)
        if self.kind == "completion":
            out = sparse.coo_matrix(
                (self.scale * v, (self.payload[:, 0], self.payload[:, 1])),
                shape=self.shape)
            return np.asarray(out.todense())
        return self.scale * (self.payload.T * v) @ self.payload

    def adjoint_mult_right(self, v: np.ndarray, mat: np.ndarray) -> np.ndarray:
        """``T^*(v) @ mat`` without densifying (phase retrieval, completion)."""
        if self.kind == "phase_retrieval":
            am = self.payload @ mat
            return self.scale * self.payload.T @ (v[:, None] * am)
        if self.kind == "completion":
            coo = sparse.csr_matrix(
                (self.scale * v, (self.payload[:, 0], self.payload[:, 1])),
                shape=self.shape)
            return coo @ mat
        return self.adjoint(v) @ mat


def make_ensemble(kind: str, n1: int, n2: int, m: int,
                  rng: np.random.Generator) -> MeasurementEnsemble:
    """Draw a random measurement ensemble of the stated law.

    Gaussian sensing uses i.i.d. standard normal entries; completion draws
    indices uniformly with replacement (duplicates allowed and counted in
    ``m``); phase retrieval draws vectors from ``N(0, I_n)`` and requires a
    square shape.
    """
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    scale = 1.0 / np.sqrt(m)
    if kind == "gaussian_sensing":
        payload = rng.standard_normal((m, n1 * n2))
    elif kind == "completion":
        rows = rng.integers(0, n1, size=m)
        cols = rng.integers(0, n2, size=m)
        payload = np.stack([rows, cols], axis=1)
    elif kind == "phase_retrieval":
        if n1 != n2:
            raise ConfigError("phase retrieval requires a square shape")
        payload = rng.standard_normal((m, n1))
    else:
        raise ConfigError(f"unknown ensemble kind {kind!r}")
    return MeasurementEnsemble(kind, payload, (n1, n2), scale)


def full_completion(n1: int, n2: int, normalized: bool = True) -> MeasurementEnsemble:
    """Deterministic mask observing every entry exactly once.

    With ``normalized=True`` the operator is the exact isometry ``vec``
    (scale 1); otherwise the usual ``1/sqrt(m)`` scaling applies.
    """
    rows, cols = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    payload = np.stack([rows.ravel(), cols.ravel()], axis=1)
    m = n1 * n2
    scale = 1.0 if normalized else 1.0 / np.sqrt(m)
    return MeasurementEnsemble("completion", payload, (n1, n2), scale)


# ---------------------------------------------------------------------------
# Loss specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossSpec:
    """Which objective to minimize, and against what."""

    kind: str  # "f1" | "f2" | "empirical"
    ground_truth: GroundTruth | None = None
    theta: float = 1.0
    ensemble: MeasurementEnsemble | None = None
    measurements: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("f1", "f2", "empirical"):
            raise ConfigError(f"unknown loss kind {self.kind!r}")
        if self.kind in ("f1", "f2") and self.ground_truth is None:
            raise ConfigError(f"{self.kind} requires a ground truth")
        if self.kind == "f2":
            check_positive(self.theta, "theta")
        if self.kind == "empirical":
            if self.ensemble is None:
                raise ConfigError("empirical loss requires an ensemble")
            if self.measurements is None and self.ground_truth is None:
                raise ConfigError("empirical loss needs measurements or a "
                                  "ground truth to synthesize them")

    def target_measurements(self) -> np.ndarray:
        if self.measurements is not None:
            return self.measurements
        return self.ensemble.apply(self.ground_truth.point)

    def with_measurements(self) -> "LossSpec":
        """Freeze ``y = T(X)`` so repeated evaluations skip the forward map."""
        if self.kind != "empirical" or self.measurements is not None:
            return self
        return LossSpec(self.kind, self.ground_truth, self.theta,
                        self.ensemble, self.target_measurements())


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

def _dist2(z: FactoredPoint, x: FactoredPoint) -> float:
    return z.dist(x) ** 2


def loss_value(spec: LossSpec, z: FactoredPoint) -> float:
    """Objective value at ``z``; factored losses use r x r contractions only."""
    if spec.kind == "f1":
        return 0.5 * _dist2(z, spec.ground_truth.point)
    if spec.kind == "f2":
        x = spec.ground_truth.point
        gap = z.norm() - x.norm()
        return 0.5 * spec.theta * gap ** 2 + _dist2(z, x)
    residual = spec.ensemble.apply(z) - spec.target_measurements()
    return 0.5 * float(residual @ residual)


def population_pr_loss(z: FactoredPoint, x: FactoredPoint,
                       theta: float = 1.0, c: float = 1.0) -> float:
    """Closed-form population loss of Gaussian phase retrieval.

    ``theta/2 (||Z|| - ||X||)^2 + c ||Z - X||^2`` with ``theta = 1`` and
    ``c = 1`` for real measurements (``c = 1/2`` for complex ones).
    """
    gap = z.norm() - x.norm()
    return 0.5 * theta * gap ** 2 + c * _dist2(z, x)


# ---------------------------------------------------------------------------
# Gradient providers
# ---------------------------------------------------------------------------

class FactoredCombination:
    """Linear combination ``a*Z + b*X`` exposed through gradient actions,
    never densified unless asked."""

    def __init__(self, a: float, z: FactoredPoint, b: float, x: FactoredPoint):
        self.a, self.z, self.b, self.x = a, z, b, x
        self.shape = z.shape if z.width else x.shape

    def mult_right(self, mat: np.ndarray) -> np.ndarray:
        return self.a * self.z.mult_right(mat) + self.b * self.x.mult_right(mat)

    def mult_left_t(self, mat: np.ndarray) -> np.ndarray:
        return self.a * self.z.mult_left_t(mat) + self.b * self.x.mult_left_t(mat)

    def dense(self) -> np.ndarray:
        return self.a * self.z.reconstruct() + self.b * self.x.reconstruct()


def difference_provider(z: FactoredPoint, x: FactoredPoint) -> FactoredCombination:
    """The displacement ``Z - X`` as a gradient provider (it is the ambient
    gradient of the plain distance loss)."""
    return FactoredCombination(1.0, z, -1.0, x)


class _EmpiricalGradient:
    """``T^*(T(Z) - y)``; dense assembly cached, factored actions when cheap."""

    def __init__(self, ensemble: MeasurementEnsemble, residual: np.ndarray):
        self.ensemble = ensemble
        self.residual = residual
        self.shape = ensemble.shape
        self._dense = None

    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.ensemble.adjoint(self.residual)
        return self._dense

    def mult_right(self, mat: np.ndarray) -> np.ndarray:
        if self.ensemble.kind in ("phase_retrieval", "completion"):
            return self.ensemble.adjoint_mult_right(self.residual, mat)
        return self.dense() @ mat

    def mult_left_t(self, mat: np.ndarray) -> np.ndarray:
        if self.ensemble.kind == "phase_retrieval":
            am = self.ensemble.payload @ mat
            return self.ensemble.scale * self.ensemble.payload.T @ (
                self.residual[:, None] * am)
        if self.ensemble.kind == "completion":
            coo = sparse.csr_matrix(
                (self.ensemble.scale * self.residual,
                 (self.ensemble.payload[:, 1], self.ensemble.payload[:, 0])),
                shape=(self.shape[1], self.shape[0]))
            return coo @ mat
        return self.dense().T @ mat


def euclid_grad(spec: LossSpec, z: FactoredPoint):
    """Euclidean (ambient) gradient of ``loss_value`` at ``z``.

    Returns a provider with ``dense()``, ``mult_right`` and ``mult_left_t``.
    For ``f2`` the gradient is ``theta (||Z|| - ||X||) Z / ||Z|| + 2 (Z - X)``,
    which is undefined at ``Z = 0``.
    """
    if spec.kind == "f1":
        return difference_provider(z, spec.ground_truth.point)
    if spec.kind == "f2":
        h = z.norm()
        if h == 0.0:
            raise GradientSingularityError("f2 gradient undefined at Z = 0")
        x = spec.ground_truth.point
        a = 2.0 + spec.theta * (h - x.norm()) / h
        return FactoredCombination(a, z, -2.0, x)
    residual = spec.ensemble.apply(z) - spec.target_measurements()
    return _EmpiricalGradient(spec.ensemble, residual)


# ---------------------------------------------------------------------------
# Isometry constant estimation
# ---------------------------------------------------------------------------

def estimate_isometry_constants(ensemble: MeasurementEnsemble,
                                sample_pairs) -> tuple[float, float]:
    """Extremes of ``||T(Z') - T(Z)|| / ||Z' - Z||_F`` over sample pairs.

    Estimates how far the operator is from preserving distances between
    low-rank matrices; equal constants mean an exact isometry on the pairs.
    """
    ratios = []
    for z, zp in sample_pairs:
        tz = ensemble.apply(z)
        tzp = ensemble.apply(zp)
        dz = (z.dist(zp) if isinstance(z, FactoredPoint)
              else float(np.linalg.norm(np.asarray(zp) - np.asarray(z))))
        if dz == 0.0:
            continue
        ratios.append(float(np.linalg.norm(tzp - tz)) / dz)
    if not ratios:
        raise ConfigError("no usable sample pairs (all coincident or empty)")
    return (min(ratios), max(ratios))
