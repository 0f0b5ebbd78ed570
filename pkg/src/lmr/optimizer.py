"""The projected-gradient driver: iteration loop, stopping rules, recording.

``run_pgd`` executes the vanilla constant-stepsize iteration
``Z_{k+1} = R(Z_k - alpha * P_T(grad f(Z_k)))`` and records a per-iteration
diagnostic row: error, projected-gradient norm, loss, singular values (both
descending and continuity-paired), angle spectrum against the ground truth,
the scalar observables (h, rho), singular-gap and alignment statistics.
Instrumentation is pull-based; nothing steers the iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .losses import (
    GradientSingularityError,
    LossSpec,
    difference_provider,
    euclid_grad,
    loss_value,
)
from .manifold import (
    FactoredPoint,
    GroundTruth,
    retract,
    tangent_cone_project,
    tangent_project,
)
from .validation import ConfigError, check_positive


@dataclass(frozen=True)
class PgdConfig:
    """Constant-stepsize iteration parameters.

    Exactly one stopping rule is active per run: ``tol_rel`` stops when
    ``||Z - X||_F <= tol_rel * ||X||_F`` (requires a known ground truth),
    ``tol_grad`` stops on the projected-gradient norm (used when the target
    is unknown).  ``record_every`` thins the recorded rows; the first and
    final iterates are always recorded.
    """

    alpha: float = 0.3
    max_iter: int = 1000
    tol_rel: float | None = None
    tol_grad: float | None = None
    record_every: int = 1
    keep_points: bool = True

    def __post_init__(self):
        check_positive(self.alpha, "alpha")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if (self.tol_rel is None) == (self.tol_grad is None):
            raise ConfigError("exactly one of tol_rel / tol_grad must be set")


@dataclass
class TrajectoryRecord:
    """Columnar per-iteration diagnostics of one PGD run."""

    rank: int
    alpha: float
    record_every: int
    d_min: float | None = None  # smallest ground-truth singular value
    k: list = field(default_factory=list)
    err_fro: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    h: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    sigma: list = field(default_factory=list)          # descending
    sigma_paired: list = field(default_factory=list)   # continuity-paired
    r_spectrum: list = field(default_factory=list)
    pt_err_norm: list = field(default_factory=list)
    gap_stat: list = field(default_factory=list)
    L_stat: list = field(default_factory=list)
    Cu_stat: list = field(default_factory=list)
    rank_deficient: list = field(default_factory=list)
    step_fro: list = field(default_factory=list)
    points: list = field(default_factory=list)
    stop_reason: str = "max_iter"
    rank_collapse_events: int = 0

    def __len__(self) -> int:
        return len(self.k)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))

    @property
    def final_point(self) -> FactoredPoint | None:
        return self.points[-1] if self.points else None


def _pad(values: np.ndarray, r: int) -> np.ndarray:
    if values.size >= r:
        return values[:r]
    return np.concatenate([values, np.full(r - values.size, np.nan)])


def _pair_columns(prev_left: np.ndarray | None,
                  left: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Match factor columns to the previous step by max |inner product|.

    Keeps diagonal alignment statistics continuous across singular-value
    crossings; signs are fixed so paired inner products are nonnegative.
    Returns the reordered factor and the column permutation used.
    """
    identity = np.arange(left.shape[1])
    if prev_left is None or prev_left.shape != left.shape or left.shape[1] == 0:
        return left, identity
    overlap = prev_left.T @ left
    _, cols = linear_sum_assignment(-np.abs(overlap))
    signs = np.sign(overlap[np.arange(len(cols)), cols])
    signs[signs == 0] = 1.0
    return left[:, cols] * signs, cols


def _assumption_stats(r_mat: np.ndarray, d: np.ndarray,
                      sigma: np.ndarray) -> tuple[float, float]:
    """Alignment-bound statistics from ``R = V_z^T U``.

    Rows (iterate directions) are permuted so the |diagonal| is the best
    assignment against the target directions; with that convention the
    returned values are the smallest L with
    ``|R(i,j)| <= L min(|R(i,i)|, |R(j,j)|)`` off the diagonal and the
    largest ratio ``(R D R^T)(i,i) / sigma_i``.
    """
    q = min(r_mat.shape)
    if q == 0:
        return np.nan, np.nan
    rows, cols = linear_sum_assignment(-np.abs(r_mat))
    perm = np.empty_like(rows)
    perm[cols] = rows
    rp = r_mat[perm, :]
    sig_p = sigma[perm]
    rdrt = (rp * d[None, :]) @ rp.T
    cu = float(np.max(np.diag(rdrt)[:q] / np.maximum(sig_p[:q], 1e-300)))
    if q < 2:
        return np.nan, cu
    diag = np.abs(np.diag(rp))
    denom = np.minimum(diag[:, None], diag[None, :])
    ratios = np.abs(rp[:q, :q]) / np.maximum(denom[:q, :q], 1e-300)
    np.fill_diagonal(ratios, 0.0)
    return float(ratios.max()), cu


def _row_stats(z: FactoredPoint, truth: GroundTruth | None,
               prev_left: np.ndarray | None, rank: int) -> dict:
    sigma = z.singular_values()
    out = {
        "h": z.norm(),
        "sigma": _pad(sigma, rank),
        "rank_deficient": z.rank() < rank,
    }
    paired_left, perm = _pair_columns(prev_left, z.left)
    sigma_paired = sigma[perm] if sigma.size else sigma
    out["sigma_paired"] = _pad(sigma_paired, rank)
    out["paired_left"] = paired_left

    if sigma.size >= 2 and sigma[0] > 0:
        diffs = np.abs(sigma[:, None] - sigma[None, :])
        np.fill_diagonal(diffs, np.inf)
        out["gap_stat"] = float(diffs.min() / sigma[0])
    else:
        out["gap_stat"] = np.nan

    if truth is None:
        out.update(err_fro=np.nan, rho=np.nan,
                   r_spectrum=np.full(rank, np.nan),
                   pt_err_norm=np.nan, L_stat=np.nan, Cu_stat=np.nan)
        return out

    x = truth.point
    out["err_fro"] = z.dist(x)
    hz = out["h"]
    out["rho"] = (z.inner(x) / (hz * x.norm())) if hz > 0 else np.nan

    if z.width > 0:
        r_mat = z.left.T @ x.left
        gram = r_mat @ r_mat.T
        vals = np.sort(np.linalg.eigvalsh(gram))[::-1]
        out["r_spectrum"] = _pad(np.clip(vals, 0.0, None), rank)
        out["L_stat"], out["Cu_stat"] = _assumption_stats(
            r_mat, truth.singular_values, sigma)
        err_grad = tangent_project(z, difference_provider(z, x),
                                   validate=False)
        out["pt_err_norm"] = err_grad.norm()
    else:
        out["r_spectrum"] = _pad(np.zeros(0), rank)
        out["pt_err_norm"] = 0.0
        out["L_stat"] = np.nan
        out["Cu_stat"] = np.nan
    return out


def run_pgd(spec: LossSpec, z0: FactoredPoint, cfg: PgdConfig,
            rank: int | None = None) -> tuple[TrajectoryRecord, FactoredPoint]:
    """Run the PGD to a stopping rule, recording diagnostics along the way.

    ``rank`` defaults to the ground-truth rank (when known) or the width of
    ``z0``.  Rank-deficient iterates are driven through the tangent cone and
    logged, not treated as failures.
    """
    spec = spec.with_measurements()
    truth = spec.ground_truth
    if rank is None:
        rank = truth.r if truth is not None else max(z0.width, 1)
    if cfg.tol_rel is not None and truth is None:
        raise ConfigError("tol_rel stopping requires a known ground truth")

    rec = TrajectoryRecord(rank=rank, alpha=cfg.alpha,
                           record_every=cfg.record_every,
                           d_min=truth.d_min if truth is not None else None)
    z = z0.normalize().trim()
    prev_left = None
    x_norm = truth.norm() if truth is not None else None
    recorded_last = -1

    def record_row(k: int, stats: dict, gnorm: float, fval: float):
        rec.k.append(k)
        rec.err_fro.append(stats["err_fro"])
        rec.grad_norm.append(gnorm)
        rec.loss.append(fval)
        rec.h.append(stats["h"])
        rec.rho.append(stats["rho"])
        rec.sigma.append(stats["sigma"])
        rec.sigma_paired.append(stats["sigma_paired"])
        rec.r_spectrum.append(stats["r_spectrum"])
        rec.pt_err_norm.append(stats["pt_err_norm"])
        rec.gap_stat.append(stats["gap_stat"])
        rec.L_stat.append(stats["L_stat"])
        rec.Cu_stat.append(stats["Cu_stat"])
        rec.rank_deficient.append(stats["rank_deficient"])
        rec.step_fro.append(np.nan)
        if cfg.keep_points:
            rec.points.append(z)

    k = 0
    while True:
        try:
            grad = euclid_grad(spec, z)
        except GradientSingularityError as exc:
            raise GradientSingularityError(
                f"{exc} (iteration {k}, ||Z||={z.norm():.3e})") from exc
        deficient = z.rank() < rank or z.width < rank
        if deficient:
            xi = tangent_cone_project(z.trim(), grad, rank, validate=False)
            rec.rank_collapse_events += 1
        else:
            xi = tangent_project(z, grad, validate=False)
        gnorm = xi.norm()
        residual = getattr(grad, "residual", None)
        if residual is not None:
            fval = 0.5 * float(residual @ residual)
        else:
            fval = loss_value(spec, z)
        stats = _row_stats(z, truth, prev_left, rank)
        prev_left = stats.pop("paired_left")

        stop = None
        if cfg.tol_rel is not None and stats["err_fro"] <= cfg.tol_rel * x_norm:
            stop = "tol_rel"
        elif cfg.tol_grad is not None and gnorm <= cfg.tol_grad:
            stop = "tol_grad"
        elif k >= cfg.max_iter:
            stop = "max_iter"

        if stop or k % cfg.record_every == 0:
            record_row(k, stats, gnorm, fval)
            recorded_last = k
        if stop:
            rec.stop_reason = stop
            break

        z_next = retract(xi.base, -xi, cfg.alpha, rank)
        if recorded_last == k:
            rec.step_fro[-1] = z_next.dist(z)
        z = z_next
        k += 1

    return rec, z


# ---------------------------------------------------------------------------
# Descent-inequality audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    """Per-step descent-inequality constants and flagged violations.

    ``c_d[i]`` estimates the constant in
    ``f_k - f_{k+1} >= c_d * ||P_T grad|| * ||Z_{k+1} - Z_k||`` between
    consecutive recorded rows.  A violation is a step on which the loss
    failed to decrease while the iterate moved.
    """

    c_d: np.ndarray
    loss_decrease: np.ndarray
    violations: np.ndarray
    k_gap: int

    @property
    def min_c_d(self) -> float:
        finite = self.c_d[np.isfinite(self.c_d)]
        return float(finite.min()) if finite.size else np.nan

    @property
    def n_violations(self) -> int:
        return int(self.violations.size)


def monotonicity_check(rec: TrajectoryRecord) -> MonotonicityReport:
    if len(rec) < 2:
        raise ConfigError("need at least two recorded rows")
    loss = rec.column("loss")
    gnorm = rec.column("grad_norm")[:-1]
    step = rec.column("step_fro")[:-1]
    decrease = loss[:-1] - loss[1:]
    denom = gnorm * step
    with np.errstate(divide="ignore", invalid="ignore"):
        c_d = np.where(denom > 0, decrease / denom, np.nan)
    moved = step > 0
    violations = np.flatnonzero(moved & (decrease <= 0))
    return MonotonicityReport(c_d=c_d, loss_decrease=decrease,
                              violations=violations, k_gap=rec.record_every)
