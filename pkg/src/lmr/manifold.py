"""Geometry of the fixed-rank matrix manifold.

A rank-k matrix is stored as ``left @ core @ right.T`` with orthonormal
side factors (:class:`FactoredPoint`).  The module provides the tangent
space and tangent cone projections, the metric-projection retraction via
the small-SVD path (an SVD of a ``2k x 2k`` core instead of the ambient
matrix), and a single projected-gradient step built from those pieces.

All operations are pure: inputs are never mutated and every function
returns fresh arrays, so values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import (
    ORTHO_TOL,
    RANK_TOL,
    ConfigError,
    as_matrix,
    check_orthonormal,
    check_positive,
    check_rank,
    orthonormality_defect,
)

#: Orthonormality drift above which retraction re-orthonormalizes factors.
REORTH_TOL = ORTHO_TOL / 10.0


class RankCollapseError(RuntimeError):
    """Raised when an operation requires more rank than a point carries."""


@dataclass(frozen=True)
class FactoredPoint:
    """A rank-``k`` matrix ``left @ core @ right.T`` with orthonormal sides.

    ``left`` is ``n1 x k``, ``core`` is ``k x k`` (diagonal with descending
    nonnegative entries once normalized), ``right`` is ``n2 x k``.  ``k`` may
    be smaller than the target rank of a computation; such points are
    rank-deficient and are handled through the tangent cone.
    """

    left: np.ndarray
    core: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        if self.left.ndim != 2 or self.right.ndim != 2 or self.core.ndim != 2:
            raise ConfigError("FactoredPoint fields must be 2-d arrays")
        k = self.core.shape[0]
        if self.core.shape != (k, k):
            raise ConfigError(f"core must be square, got {self.core.shape}")
        if self.left.shape[1] != k or self.right.shape[1] != k:
            raise ConfigError("factor widths do not match the core")

    # -- basic descriptors -------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left.shape[0], self.right.shape[0])

    @property
    def width(self) -> int:
        """Number of stored factor columns (an upper bound on the rank)."""
        return self.core.shape[0]

    def singular_values(self) -> np.ndarray:
        """Descending singular values of the represented matrix."""
        if self.width == 0:
            return np.zeros(0)
        return np.linalg.svd(self.core, compute_uv=False)

    def rank(self, rel_tol: float = RANK_TOL) -> int:
        s = self.singular_values()
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s > rel_tol * s[0]))

    def norm(self) -> float:
        return float(np.linalg.norm(self.core))

    # -- algebra (factored, never densifies) --------------------------------

    def reconstruct(self) -> np.ndarray:
        n1, n2 = self.shape
        if self.width == 0:
            return np.zeros((n1, n2))
        return self.left @ self.core @ self.right.T

    def inner(self, other: "FactoredPoint") -> float:
        """Frobenius inner product, via r x r contractions."""
        if self.width == 0 or other.width == 0:
            return 0.0
        cross_l = self.left.T @ other.left
        cross_r = other.right.T @ self.right
        return float(np.trace(self.core.T @ cross_l @ other.core @ cross_r))

    def dist(self, other: "FactoredPoint") -> float:
        """``||self - other||_F`` via a stacked-QR reduction.

        The difference is formed entrywise in a joint ``(k1+k2)``-dimensional
        basis, so the result stays accurate near coincident points (the
        inner-product formula loses half the digits there).
        """
        if self.width == 0:
            return other.norm()
        if other.width == 0:
            return self.norm()
        ra = np.linalg.qr(np.hstack([self.left, other.left]), mode="r")
        rb = np.linalg.qr(np.hstack([self.right, other.right]), mode="r")
        k1, k2 = self.width, other.width
        mid = np.zeros((k1 + k2, k1 + k2))
        mid[:k1, :k1] = self.core
        mid[k1:, k1:] = -other.core
        return float(np.linalg.norm(ra @ mid @ rb.T))

    def mult_right(self, mat: np.ndarray) -> np.ndarray:
        """``Z @ mat`` without forming the dense matrix."""
        if self.width == 0:
            return np.zeros((self.shape[0], mat.shape[1]))
        return self.left @ (self.core @ (self.right.T @ mat))

    def mult_left_t(self, mat: np.ndarray) -> np.ndarray:
        """``Z.T @ mat`` without forming the dense matrix."""
        if self.width == 0:
            return np.zeros((self.shape[1], mat.shape[1]))
        return self.right @ (self.core.T @ (self.left.T @ mat))

    def scaled(self, a: float) -> "FactoredPoint":
        return FactoredPoint(self.left, a * self.core, self.right)

    # -- normal form ---------------------------------------------------------

    def is_normalized(self, tol: float = 1e-13) -> bool:
        if self.width == 0:
            return True
        d = np.diag(self.core)
        if np.any(d < 0) or np.any(np.diff(d) > 0):
            return False
        off = self.core - np.diag(d)
        return float(np.linalg.norm(off)) <= tol * max(1.0, float(d[0]) if d.size else 1.0)

    def normalize(self) -> "FactoredPoint":
        """Rotate factors so the core is diagonal, nonnegative, descending."""
        if self.width == 0:
            return self
        u, s, vt = np.linalg.svd(self.core)
        return FactoredPoint(self.left @ u, np.diag(s), self.right @ vt.T)

    def trim(self, rel_tol: float = RANK_TOL) -> "FactoredPoint":
        """Drop factor columns whose singular values are numerically zero."""
        p = self if self.is_normalized() else self.normalize()
        s = np.diag(p.core)
        if s.size == 0 or s[0] == 0.0:
            return FactoredPoint.zero(*self.shape)
        k = int(np.sum(s > rel_tol * s[0]))
        if k == p.width:
            return p
        return FactoredPoint(p.left[:, :k], np.diag(s[:k]), p.right[:, :k])

    def validate(self, tol: float = ORTHO_TOL) -> None:
        check_orthonormal(self.left, "left factor", tol)
        check_orthonormal(self.right, "right factor", tol)

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(n1: int, n2: int) -> "FactoredPoint":
        return FactoredPoint(np.zeros((n1, 0)), np.zeros((0, 0)), np.zeros((n2, 0)))

    @staticmethod
    def from_dense(dense: np.ndarray, r: int,
                   rel_tol: float = RANK_TOL) -> "FactoredPoint":
        """Best rank-``r`` Frobenius approximation of a dense matrix."""
        dense = as_matrix(dense, "dense input")
        check_rank(dense.shape[0], dense.shape[1], r)
        u, s, vt = np.linalg.svd(dense, full_matrices=False)
        if s[0] == 0.0:
            return FactoredPoint.zero(*dense.shape)
        k = min(r, int(np.sum(s > rel_tol * s[0])))
        return FactoredPoint(u[:, :k], np.diag(s[:k]), vt[:k, :].T)


@dataclass(frozen=True)
class GroundTruth:
    """The target matrix ``X = U D V^T`` with positive singular values.

    ``point`` is a normalized :class:`FactoredPoint` (diagonal core,
    descending).  ``spsd`` records whether the left and right factors
    coincide (symmetric positive semi-definite targets).
    """

    point: FactoredPoint
    spsd: bool = False

    def __post_init__(self):
        if not self.point.is_normalized():
            raise ConfigError("GroundTruth requires a normalized point")
        d = self.singular_values
        if d.size == 0 or np.any(d <= 0):
            raise ConfigError("ground-truth singular values must be positive")

    @property
    def singular_values(self) -> np.ndarray:
        return np.diag(self.point.core)

    @property
    def r(self) -> int:
        return self.point.width

    @property
    def d_min(self) -> float:
        """Smallest singular value; radius scale of the local basin."""
        return float(self.singular_values[-1])

    def norm(self) -> float:
        return self.point.norm()

    def has_distinct_values(self, rel_tol: float = 1e-12) -> bool:
        d = self.singular_values
        if d.size < 2:
            return True
        return bool(np.min(d[:-1] - d[1:]) > rel_tol * d[0])

    def reconstruct(self) -> np.ndarray:
        return self.point.reconstruct()

    @staticmethod
    def from_dense(dense: np.ndarray, r: int) -> "GroundTruth":
        dense = as_matrix(dense, "ground truth")
        point = FactoredPoint.from_dense(dense, r)
        if point.width < r:
            raise ConfigError(f"matrix has rank {point.width} < requested {r}")
        spsd = bool(
            dense.shape[0] == dense.shape[1]
            and np.allclose(dense, dense.T)
            and np.all(np.diag(point.core) >= 0)
            and np.allclose(point.left @ point.core @ point.left.T, dense))
        return GroundTruth(point, spsd=spsd)

    @staticmethod
    def from_singular_values(d, rng: "np.random.Generator | None" = None,
                             n: int | None = None, spsd: bool = False,
                             left: np.ndarray | None = None,
                             right: np.ndarray | None = None) -> "GroundTruth":
        """Build a target with prescribed spectrum and random (or given) frames."""
        d = np.asarray(d, dtype=float)
        if np.any(np.diff(d) > 0):
            d = np.sort(d)[::-1]
        r = d.size
        if left is None:
            from .sampling import sample_stiefel
            if rng is None or n is None:
                raise ConfigError("need rng and n to draw random frames")
            left = sample_stiefel(n, r, rng)
        if right is None:
            if spsd:
                right = left
            else:
                from .sampling import sample_stiefel
                right = sample_stiefel(left.shape[0], r, rng)
        return GroundTruth(FactoredPoint(left, np.diag(d), right), spsd=spsd)


@dataclass(frozen=True)
class TangentVector:
    """Element of the tangent space (or cone) at ``base``.

    Dense form:
    ``base.left @ core_part @ base.right.T + left_complement @ base.right.T
    + base.left @ right_complement.T  (+ cone_part)``
    with ``base.left.T @ left_complement = 0`` and
    ``base.right.T @ right_complement = 0``.  ``cone_part`` is only present
    at rank-deficient base points and lies in the orthogonal complement of
    both factor column spaces.
    """

    base: FactoredPoint
    core_part: np.ndarray
    left_complement: np.ndarray
    right_complement: np.ndarray
    cone_part: FactoredPoint | None = None

    def dense(self) -> np.ndarray:
        n1, n2 = self.base.shape
        out = np.zeros((n1, n2))
        if self.base.width > 0:
            out += self.base.left @ self.core_part @ self.base.right.T
            out += self.left_complement @ self.base.right.T
            out += self.base.left @ self.right_complement.T
        if self.cone_part is not None:
            out += self.cone_part.reconstruct()
        return out

    def norm(self) -> float:
        # The three structured parts and the cone part are mutually
        # orthogonal, so the norm splits.
        n2 = (np.linalg.norm(self.core_part) ** 2
              + np.linalg.norm(self.left_complement) ** 2
              + np.linalg.norm(self.right_complement) ** 2)
        if self.cone_part is not None:
            n2 += self.cone_part.norm() ** 2
        return float(np.sqrt(n2))

    def scaled(self, a: float) -> "TangentVector":
        cone = None if self.cone_part is None else self.cone_part.scaled(a)
        return TangentVector(self.base, a * self.core_part,
                             a * self.left_complement,
                             a * self.right_complement, cone)

    def __neg__(self) -> "TangentVector":
        return self.scaled(-1.0)


# -- gradient providers ------------------------------------------------------

def _right_action(w, mat: np.ndarray) -> np.ndarray:
    """``W @ mat`` for a dense array or a provider object."""
    if isinstance(w, np.ndarray):
        return w @ mat
    return w.mult_right(mat)


def _left_t_action(w, mat: np.ndarray) -> np.ndarray:
    """``W.T @ mat`` for a dense array or a provider object."""
    if isinstance(w, np.ndarray):
        return w.T @ mat
    return w.mult_left_t(mat)


def _dense_of(w) -> np.ndarray:
    return w if isinstance(w, np.ndarray) else w.dense()


# -- projections ---------------------------------------------------------------

def tangent_project(z: FactoredPoint, w, validate: bool = True) -> TangentVector:
    """Project an ambient matrix onto the tangent space at full-rank ``z``.

    ``w`` may be a dense array or any object exposing ``mult_right`` /
    ``mult_left_t`` actions; the projection touches ``w`` only through the
    products ``w @ right`` and ``w.T @ left``.  Dense form of the result is
    ``P_U w + w P_V - P_U w P_V``.
    """
    if validate:
        z.validate()
    if isinstance(w, np.ndarray):
        w = as_matrix(w, "ambient matrix")
        if w.shape != z.shape:
            raise ConfigError(f"matrix shape {w.shape} does not match point {z.shape}")
    if z.width == 0:
        raise RankCollapseError("tangent space undefined at the zero point; "
                                "use tangent_cone_project")
    wv = _right_action(w, z.right)
    wtu = _left_t_action(w, z.left)
    core = z.left.T @ wv
    left_comp = wv - z.left @ core
    right_comp = wtu - z.right @ core.T
    return TangentVector(z, core, left_comp, right_comp)


def tangent_cone_project(z: FactoredPoint, w, r: int,
                         validate: bool = True) -> TangentVector:
    """Project onto the tangent cone at a rank-deficient point.

    ``z`` has rank ``s < r``.  The result is the tangent-space projection at
    ``z`` (rank ``s`` manifold) plus the best rank-``(r - s)`` approximation
    of the residual, which lies in the complement of both column spaces.  If
    that residual has rank below ``r - s`` the lower-rank term is returned
    as-is (its width records the degeneracy).
    """
    s = z.width
    if s >= r:
        raise ConfigError(f"tangent cone requires rank(z)={s} < target rank {r}")
    w_dense = _dense_of(w)
    if w_dense.shape != z.shape:
        raise ConfigError(f"matrix shape {w_dense.shape} does not match point {z.shape}")
    if s == 0:
        cone = FactoredPoint.from_dense(w_dense, r)
        return TangentVector(z, np.zeros((0, 0)), np.zeros((z.shape[0], 0)),
                             np.zeros((z.shape[1], 0)), cone_part=cone)
    if validate:
        z.validate()
    tangent = tangent_project(z, w_dense, validate=False)
    residual = w_dense - tangent.dense()
    cone = FactoredPoint.from_dense(residual, r - s)
    if cone.width == 0:
        cone = None
    return TangentVector(z, tangent.core_part, tangent.left_complement,
                         tangent.right_complement, cone_part=cone)


# -- retraction ----------------------------------------------------------------

def truncated_svd(dense: np.ndarray, r: int) -> FactoredPoint:
    """Best rank-``r`` approximation by a full dense SVD (oracle path)."""
    return FactoredPoint.from_dense(dense, r)


def _maybe_reorthonormalize(p: FactoredPoint) -> FactoredPoint:
    """Repair factor drift accumulated over long runs, if above threshold."""
    drift = max(orthonormality_defect(p.left), orthonormality_defect(p.right))
    if drift <= REORTH_TOL:
        return p
    ql, rl = np.linalg.qr(p.left)
    qr_, rr = np.linalg.qr(p.right)
    return FactoredPoint(ql, rl @ p.core @ rr.T, qr_).normalize()


def retract(z: FactoredPoint, xi, alpha: float, r: int | None = None,
            rel_tol: float = RANK_TOL) -> FactoredPoint:
    """Metric-projection retraction: best rank-``r`` approximation of ``z + alpha*xi``.

    For a structured :class:`TangentVector` this never materializes an
    ambient matrix: the complements are QR-factorized and a small core
    ``[[S + a*C, a*R1^T], [a*R2, 0]]`` is SVD'd and truncated.  A dense
    ``xi`` falls back to the full SVD (used for oracles and generality).

    If the target rank cannot be met (tail singular values numerically
    zero), the returned point is rank-deficient; callers detect this via
    ``point.width < r`` and switch to the tangent-cone branch.
    """
    check_positive(alpha, "alpha")
    if r is None:
        r = max(z.width, 1)
    if isinstance(xi, np.ndarray):
        return truncated_svd(z.reconstruct() + alpha * xi, r)

    k = z.width
    if k == 0:
        if xi.cone_part is None:
            return FactoredPoint.zero(*z.shape)
        return xi.cone_part.scaled(alpha).normalize().trim(rel_tol)

    q2, r2 = np.linalg.qr(xi.left_complement)
    q1, r1 = np.linalg.qr(xi.right_complement)
    top = np.hstack([z.core + alpha * xi.core_part, alpha * r1.T])
    bot = np.hstack([alpha * r2, np.zeros((k, k))])
    small = np.vstack([top, bot])
    left_basis = np.hstack([z.left, q2])
    right_basis = np.hstack([z.right, q1])

    if xi.cone_part is not None:
        # Cone factors are orthogonal to z's factors but not to q1/q2:
        # stack everything and re-orthonormalize the enlarged bases.
        c = xi.cone_part
        cw = c.width
        left_basis = np.hstack([left_basis, c.left])
        right_basis = np.hstack([right_basis, c.right])
        small = np.block([
            [small, np.zeros((2 * k, cw))],
            [np.zeros((cw, 2 * k)), alpha * c.core],
        ])
        left_basis, rl = np.linalg.qr(left_basis)
        right_basis, rr = np.linalg.qr(right_basis)
        small = rl @ small @ rr.T

    u, s, vt = np.linalg.svd(small)
    if s[0] == 0.0:
        return FactoredPoint.zero(*z.shape)
    keep = min(r, int(np.sum(s > rel_tol * s[0])))
    point = FactoredPoint(left_basis @ u[:, :keep], np.diag(s[:keep]),
                          right_basis @ vt[:keep, :].T)
    return _maybe_reorthonormalize(point)


def pgd_step(z: FactoredPoint, grad, alpha: float, r: int,
             validate: bool = True) -> FactoredPoint:
    """One projected-gradient iterate ``R(z - alpha * P_T(grad))``.

    ``grad`` is the ambient (Euclidean) gradient: a dense array, a provider
    object, or a callable ``z -> array``.  At rank-deficient points the
    tangent-cone projection is used so the iteration can regain rank.
    """
    check_positive(alpha, "alpha")
    w = grad(z) if callable(grad) else grad
    if z.rank() < r or z.width < r:
        xi = tangent_cone_project(z.trim(), w, r, validate=validate)
    else:
        xi = tangent_project(z, w, validate=validate)
    return retract(xi.base, -xi, alpha, r)

