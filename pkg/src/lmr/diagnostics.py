"""Trajectory and landscape diagnostics for the least-squares objective.

The plain distance loss on the rank-r manifold has, besides the ground
truth, a finite family of spurious critical points: the subset truncations
of the target.  This module enumerates them, tests membership in their
surrounding slow regions, measures column-space alignment (the angle
spectrum), evaluates the projected-to-full gradient ratio with its
spectral lower bound, extracts trajectory-wide alignment constants, and
labels each recorded iterate by the region it sits in.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .losses import difference_provider
from .manifold import FactoredPoint, GroundTruth, tangent_project
from .optimizer import TrajectoryRecord
from .validation import ConfigError


# ---------------------------------------------------------------------------
# Spurious critical points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpuriousMember:
    mask: tuple[int, ...]
    point: FactoredPoint

    @property
    def rank(self) -> int:
        return sum(self.mask)


@dataclass(frozen=True)
class SpuriousSet:
    """All subset truncations of the target except the target itself."""

    members: tuple[SpuriousMember, ...]
    degenerate: bool  # repeated singular values: members are representatives

    def __len__(self) -> int:
        return len(self.members)

    def nearest(self, z: FactoredPoint) -> tuple[SpuriousMember, float]:
        best, best_d = None, np.inf
        for member in self.members:
            d = z.dist(member.point)
            if d < best_d:
                best, best_d = member, d
        return best, float(best_d)


def enumerate_spurious(truth: GroundTruth) -> SpuriousSet:
    """All ``2^r - 1`` masked truncations of the target.

    Each member keeps a subset of the target's singular triplets and is a
    projected-gradient zero at its own rank.  With repeated singular values
    the truncations are representatives of whole submanifolds of critical
    points; a warning records the degeneracy.
    """
    x = truth.point
    r = truth.r
    degenerate = not truth.has_distinct_values()
    if degenerate:
        warnings.warn(
            "ground truth has repeated singular values: the spurious set "
            "contains submanifolds; returning one representative per mask",
            RuntimeWarning, stacklevel=2)
    members = []
    for mask in itertools.product((0, 1), repeat=r):
        if all(mask):
            continue
        idx = [i for i, b in enumerate(mask) if b]
        if idx:
            point = FactoredPoint(x.left[:, idx],
                                  np.diag(truth.singular_values[idx]),
                                  x.right[:, idx])
        else:
            point = FactoredPoint.zero(*x.shape)
        members.append(SpuriousMember(mask=mask, point=point))
    members.sort(key=lambda mb: (mb.rank, mb.mask), reverse=True)
    return SpuriousSet(members=tuple(members), degenerate=degenerate)


def projected_residual_norm(z: FactoredPoint, truth: GroundTruth) -> float:
    """``||P_{T_z}(Z - X)||_F`` at the point's own rank (0 at the zero point)."""
    z = z.trim()
    if z.width == 0:
        return 0.0
    diff = difference_provider(z, truth.point)
    return tangent_project(z, diff, validate=False).norm()


# ---------------------------------------------------------------------------
# Region membership and stage labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionTest:
    is_member: bool
    nearest_mask: tuple[int, ...]
    nearest_distance: float
    projected_norm: float
    full_distance: float


def spurious_region_test(z: FactoredPoint, truth: GroundTruth, delta: float,
                         spurious: SpuriousSet | None = None) -> RegionTest:
    """Membership in the slow region around the spurious critical points.

    A rank-r point belongs when its projected residual ``||P_{T_z}(Z-X)||``
    is at most ``delta`` while the full distance ``||Z-X||`` still exceeds
    half the smallest target singular value.  ``delta`` below that radius
    keeps the balls around distinct members disjoint.
    """
    if not (0.0 < delta < truth.d_min / 2.0):
        raise ConfigError(
            f"delta must lie in (0, d_min/2) = (0, {truth.d_min / 2.0}), "
            f"got {delta}")
    if spurious is None:
        spurious = enumerate_spurious(truth)
    proj = projected_residual_norm(z, truth)
    dist = z.dist(truth.point)
    member = (proj <= delta) and (dist > truth.d_min / 2.0)
    nearest, nearest_d = spurious.nearest(z)
    return RegionTest(is_member=member, nearest_mask=nearest.mask,
                      nearest_distance=nearest_d, projected_norm=proj,
                      full_distance=dist)


@dataclass(frozen=True)
class StageLabel:
    """Which region an iterate occupies: the target basin, a spurious ball
    (identified by its mask), or the bulk of the manifold."""

    kind: str  # "near_ground_truth" | "spurious_ball" | "bulk"
    mask: tuple[int, ...] | None
    delta: float

    def token(self) -> str:
        if self.kind == "spurious_ball":
            bits = "".join(str(b) for b in self.mask)
            return f"spurious_ball:{bits}"
        return self.kind


@dataclass(frozen=True)
class StageSummary:
    labels: tuple[StageLabel, ...]
    dwell_iters: dict
    transitions: tuple[tuple[int, str], ...]
    total_spurious_iters: int
    converged: bool


def stage_classify(rec: TrajectoryRecord, truth: GroundTruth, delta: float,
                   spurious: SpuriousSet | None = None) -> StageSummary:
    """Label every recorded row and summarize time spent per region.

    Requires recorded point snapshots.  Dwell counts are in iterations
    (recorded rows times the thinning factor); the per-mask dwell is the
    escape-time statistic of the staged trajectory analysis.
    """
    if not rec.points:
        raise ConfigError("stage classification needs recorded points "
                          "(keep_points=True)")
    if spurious is None:
        spurious = enumerate_spurious(truth)
    half = truth.d_min / 2.0
    labels = []
    for z in rec.points:
        err = z.dist(truth.point)
        if err <= half:
            labels.append(StageLabel("near_ground_truth", None, delta))
            continue
        proj = projected_residual_norm(z, truth)
        if proj <= delta:
            nearest, _ = spurious.nearest(z)
            labels.append(StageLabel("spurious_ball", nearest.mask, delta))
        else:
            labels.append(StageLabel("bulk", None, delta))

    dwell: dict = {}
    transitions = []
    prev_token = None
    for k, label in zip(rec.k, labels):
        token = label.token()
        dwell[token] = dwell.get(token, 0) + rec.record_every
        if token != prev_token:
            transitions.append((int(k), token))
            prev_token = token
    total_sp = sum(v for t, v in dwell.items() if t.startswith("spurious_ball"))
    converged = labels[-1].kind == "near_ground_truth" if labels else False
    return StageSummary(labels=tuple(labels), dwell_iters=dwell,
                        transitions=tuple(transitions),
                        total_spurious_iters=total_sp, converged=converged)


# ---------------------------------------------------------------------------
# Scalar observables
# ---------------------------------------------------------------------------

def h_rho(z: FactoredPoint, x: FactoredPoint | GroundTruth) -> tuple[float, float]:
    """Frobenius norm and normalized alignment ``<X,Z>/(||X|| ||Z||)``."""
    if isinstance(x, GroundTruth):
        x = x.point
    h = z.norm()
    if h == 0.0:
        raise ConfigError("h and rho are undefined at Z = 0")
    return h, float(z.inner(x) / (h * x.norm()))


def angle_spectrum(z: FactoredPoint, x: FactoredPoint | GroundTruth,
                   side: str = "left") -> tuple[np.ndarray, np.ndarray]:
    """Column-space alignment spectrum between an iterate and the target.

    Returns the descending eigenvalues of ``R R^T`` with ``R`` the product
    of the chosen factor frames, together with ``R`` itself.  Values lie in
    [0, 1]: all ones for identical column spans, all zeros for orthogonal
    ones.  For symmetric points the two sides coincide; for general ones
    pick ``side="left"`` or ``"right"``.
    """
    if isinstance(x, GroundTruth):
        x = x.point
    if side == "left":
        r_mat = z.left.T @ x.left
    elif side == "right":
        r_mat = z.right.T @ x.right
    else:
        raise ConfigError(f"side must be 'left' or 'right', got {side!r}")
    vals = np.sort(np.linalg.eigvalsh(r_mat @ r_mat.T))[::-1]
    return np.clip(vals, 0.0, None), r_mat


def lojasiewicz_ratio(z: FactoredPoint, truth: GroundTruth,
                      check: bool = True) -> float:
    """``||P_{T_z}(Z - X)||_F / ||Z - X||_F`` with its spectral lower bound.

    The squared ratio always lies in
    ``[sigma_r^2 / (sigma_r^2 + ||X||_F^2), 1]`` where ``sigma_r`` is the
    smallest singular value of ``Z``; with ``check`` a violation beyond
    rounding slack raises (it would indicate a projection bug).
    """
    dist = z.dist(truth.point)
    scale = max(z.norm(), truth.norm())
    if dist <= 1e-14 * scale:
        raise ConfigError("ratio undefined at Z = X")
    ratio = projected_residual_norm(z, truth) / dist
    if check:
        s = z.singular_values()
        sr = float(s[-1]) if s.size else 0.0
        lower = sr ** 2 / (sr ** 2 + truth.norm() ** 2)
        if ratio ** 2 < lower - 1e-10 or ratio > 1.0 + 1e-10:
            raise AssertionError(
                f"projected/full ratio {ratio:.6e} violates "
                f"[{np.sqrt(lower):.6e}, 1] bounds")
    return float(ratio)


# ---------------------------------------------------------------------------
# Trajectory-wide constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionConstants:
    c_g_min: float      # nan when rank 1
    L_max: float
    Cu_max: float
    crossing_count: int


def assumption_constants(rec: TrajectoryRecord) -> AssumptionConstants:
    """Trajectory extremes of the gap and alignment statistics.

    ``crossing_count`` counts recorded steps on which the descending order
    of the continuity-paired singular values changed (crossings are
    monitored, never fatal).  Meaningful per-step when the record is not
    thinned.
    """
    gap = rec.column("gap_stat")
    lst = rec.column("L_stat")
    cu = rec.column("Cu_stat")

    def _extreme(col, fn):
        finite = col[np.isfinite(col)]
        return float(fn(finite)) if finite.size else np.nan

    crossings = 0
    paired = rec.column("sigma_paired")
    if paired.ndim == 2 and paired.shape[1] >= 2:
        prev_order = None
        for row in paired:
            if np.any(np.isnan(row)):
                prev_order = None
                continue
            order = tuple(np.argsort(-row))
            if prev_order is not None and order != prev_order:
                crossings += 1
            prev_order = order
    return AssumptionConstants(
        c_g_min=_extreme(gap, np.min),
        L_max=_extreme(lst, np.max),
        Cu_max=_extreme(cu, np.max),
        crossing_count=crossings,
    )


def stepsize_threshold_estimate(consts: AssumptionConstants,
                                truth: GroundTruth, rank: int) -> float:
    """Step-size bound implied by the estimated trajectory constants.

    Evaluates ``2 sigma* / (3 (d_j + c2 + c1 sigma*))`` at the least
    favorable target value, with ``sigma* = min(d_j / (2 r L^2 Cu),
    d_j^3 / (9 c2^2 Cu), d_j / (6 (1 + c1)))``, ``c1 = sqrt(r) C_M L``,
    ``c2 = r L^2 sum_{l != j} d_l`` and ``C_M = d_1 Cu / (d_r c_g)``.
    Returns nan when any needed constant is unavailable (e.g. rank 1 runs).
    """
    L, cu, cg = consts.L_max, consts.Cu_max, consts.c_g_min
    if not all(np.isfinite([L, cu, cg])) or cg <= 0:
        return np.nan
    d = truth.singular_values
    c_m = d[0] * cu / (d[-1] * cg)
    best = np.inf
    for j in range(rank):
        dj = d[j]
        c1 = np.sqrt(rank) * c_m * L
        c2 = rank * L ** 2 * (d.sum() - dj)
        sigma_star = min(dj / (2 * rank * L ** 2 * cu),
                         dj ** 3 / (9 * max(c2, 1e-300) ** 2 * cu),
                         dj / (6 * (1 + c1)))
        best = min(best, 2 * sigma_star / (3 * (dj + c2 + c1 * sigma_star)))
    return float(best)


# ---------------------------------------------------------------------------
# Block structure near a spurious point (descriptive)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RBlockReport:
    mask: tuple[int, ...]
    e1_norm: float  # top-left block minus identity
    e2_norm: float
    e3_norm: float
    e4_norm: float


def r_block_report(z: FactoredPoint, truth: GroundTruth,
                   mask: tuple[int, ...]) -> RBlockReport:
    """Block norms of the alignment matrix relative to a masked truncation.

    Splits ``R = V_z^T U`` by the mask (captured columns first).  Near the
    corresponding spurious point the top-left block is close to the
    identity and the remaining blocks are small; the report is descriptive
    (the smallness scales are not quantified).
    """
    idx_in = [i for i, b in enumerate(mask) if b]
    idx_out = [i for i, b in enumerate(mask) if not b]
    u = truth.point.left
    r_mat = z.left.T @ u[:, idx_in + idx_out]
    s = len(idx_in)
    top, bottom = r_mat[:s, :], r_mat[s:, :]
    e1 = top[:, :s] - np.eye(s)
    return RBlockReport(
        mask=tuple(mask),
        e1_norm=float(np.linalg.norm(e1)),
        e2_norm=float(np.linalg.norm(top[:, s:])),
        e3_norm=float(np.linalg.norm(bottom[:, :s])),
        e4_norm=float(np.linalg.norm(bottom[:, s:])),
    )
