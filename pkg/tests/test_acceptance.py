"""Acceptance suite: one test per criterion, each printing a PASS line.

Every expected value is pinned against an independent oracle computed in
the test body (dense Kronecker projectors, full SVDs, finite differences,
closed forms, Monte Carlo) at the stated tolerance.  Run with ``-s`` to
see the per-criterion report lines.
"""

import time

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment  # noqa: F401  (env probe)

from lmr import (
    FactoredPoint,
    GroundTruth,
    LossSpec,
    OdeSystem,
    PgdConfig,
    RandomSpec,
    ScalarState,
    assumption_constants,
    discrete_map,
    enumerate_spurious,
    euclid_grad,
    integrate,
    loss_value,
    make_ensemble,
    population_pr_loss,
    retract,
    run_pgd,
    sample_grd,
    sample_rank1_gaussian,
    sample_stiefel,
    tangent_project,
    truncated_svd,
)
from lmr.diagnostics import projected_residual_norm
from lmr.sampling import rng_from_seed, spawn_rngs


def _report(num: int, detail: str) -> None:
    print(f"\n[acceptance] criterion {num:02d}: PASS  ({detail})")


def _fit_log(ns, values):
    logs = np.log(np.asarray(ns, dtype=float))
    vals = np.asarray(values, dtype=float)
    coeffs = np.polyfit(logs, vals, 1)
    pred = np.polyval(coeffs, logs)
    ss_res = float(np.sum((vals - pred) ** 2))
    ss_tot = float(np.sum((vals - vals.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coeffs[0], coeffs[1], r2


# ---------------------------------------------------------------------------
# 1. Closed-form trajectory
# ---------------------------------------------------------------------------

def test_c01_closed_form_trajectory():
    t0 = time.time()
    x = GroundTruth.from_dense(np.diag([1.0, 1.0, 0.0]), 2)
    z0 = FactoredPoint.from_dense(np.diag([1.0, 0.0, 1.0]), 2)
    rec, _ = run_pgd(LossSpec("f1", ground_truth=x), z0,
                     PgdConfig(alpha=0.1, max_iter=50, tol_rel=1e-300))
    devs = [np.linalg.norm(pt.reconstruct() - np.diag([1.0, 0.0, 0.9 ** k]))
            for k, pt in zip(rec.k, rec.points)]
    assert len(rec) == 51
    assert max(devs) <= 1e-10
    _report(1, f"max deviation {max(devs):.2e} over 50 steps, "
               f"{time.time() - t0:.2f}s")


# ---------------------------------------------------------------------------
# 2. Projector oracle equivalence
# ---------------------------------------------------------------------------

def test_c02_projector_matches_kronecker_oracle():
    t0 = time.time()
    rng = rng_from_seed(1002)
    worst = 0.0
    for _ in range(200):
        n1 = int(rng.integers(2, 9))
        n2 = int(rng.integers(2, 9))
        r = int(rng.integers(1, min(n1, n2, 3) + 1))
        z = FactoredPoint.from_dense(rng.standard_normal((n1, n2)), r)
        w = rng.standard_normal((n1, n2))
        structured = tangent_project(z, w).dense()
        pu = z.left @ z.left.T
        pv = z.right @ z.right.T
        proj = (np.kron(np.eye(n2), pu) + np.kron(pv, np.eye(n1))
                - np.kron(pv, pu))
        oracle = (proj @ w.ravel(order="F")).reshape((n1, n2), order="F")
        worst = max(worst, float(np.linalg.norm(structured - oracle)))
    assert worst <= 1e-10
    _report(2, f"200 instances, max deviation {worst:.2e}, "
               f"{time.time() - t0:.2f}s")


# ---------------------------------------------------------------------------
# 3. Retraction fast path
# ---------------------------------------------------------------------------

def test_c03_retraction_fast_path_equals_dense_svd():
    t0 = time.time()
    rng = rng_from_seed(1003)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(4, 65))
        r = int(rng.integers(1, min(5, n // 2) + 1))
        z = sample_grd(RandomSpec(n=n, r=r), rng)
        xi = tangent_project(z, rng.standard_normal((n, n)))
        fast = retract(z, xi, 0.01, r).reconstruct()
        oracle = truncated_svd(z.reconstruct() + 0.01 * xi.dense(),
                               r).reconstruct()
        worst = max(worst, float(np.linalg.norm(fast - oracle)))
    assert worst <= 1e-10
    _report(3, f"200 instances up to n=64, max deviation {worst:.2e}, "
               f"{time.time() - t0:.2f}s")


# ---------------------------------------------------------------------------
# 4. Projected-to-full gradient ratio bounds
# ---------------------------------------------------------------------------

def test_c04_projection_ratio_spectral_bounds():
    t0 = time.time()
    rng = rng_from_seed(1004)
    violations = 0
    for _ in range(10000):
        n = int(rng.integers(2, 33))
        r = int(rng.integers(1, min(4, n) + 1))
        d = np.sort(rng.uniform(0.3, 2.0, r))[::-1]
        x = GroundTruth.from_singular_values(d, rng=rng, n=n)
        z = sample_grd(RandomSpec(n=n, r=r, sigma_low=0.2, sigma_high=2.0),
                       rng)
        proj2 = projected_residual_norm(z, x) ** 2
        dist2 = z.dist(x.point) ** 2
        sr = z.singular_values()[-1]
        lower = sr ** 2 / (sr ** 2 + x.norm() ** 2) * dist2
        if not (lower - 1e-10 <= proj2 <= dist2 + 1e-10):
            violations += 1
    assert violations == 0
    _report(4, f"10000 pairs, zero violations, {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 5. Uniform-frame alignment moment
# ---------------------------------------------------------------------------

def test_c05_stiefel_alignment_moment():
    t0 = time.time()
    rng = rng_from_seed(1005)
    n, r, samples = 128, 5, 3000
    u0 = np.zeros(n)
    u0[0] = 1.0
    vals = np.array([float(np.sum((u0 @ sample_stiefel(n, r, rng)) ** 2))
                     for _ in range(samples)])
    se = vals.std(ddof=1) / np.sqrt(samples)
    gap = abs(vals.mean() - r / n)
    assert gap <= 3 * se
    _report(5, f"|mean - {r}/{n}| = {gap:.2e} <= 3 SE = {3 * se:.2e}, "
               f"{time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 6. Phase-retrieval population loss
# ---------------------------------------------------------------------------

def test_c06_phase_retrieval_population_loss():
    t0 = time.time()
    rng = rng_from_seed(1006)
    n, m = 20, 10 ** 6
    ens = make_ensemble("phase_retrieval", n, n, m, rng)
    worst_rel = 0.0
    for _ in range(10):
        z = sample_rank1_gaussian(n, float(rng.uniform(0.5, 1.5)), rng)
        x = sample_rank1_gaussian(n, float(rng.uniform(0.5, 1.5)), rng)
        spec = LossSpec("empirical",
                        ground_truth=GroundTruth(x.normalize(), spsd=True),
                        ensemble=ens)
        mc = loss_value(spec, z)
        closed = population_pr_loss(z, x, theta=1.0, c=1.0)
        worst_rel = max(worst_rel, abs(mc - closed) / closed)
        d2 = z.dist(x) ** 2
        assert d2 - 1e-12 <= closed <= 1.5 * d2 + 1e-12
    assert worst_rel <= 0.01
    _report(6, f"worst Monte Carlo relative error {worst_rel:.4f} <= 1%, "
               f"sandwich bounds held, {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 7. Discrete scalar-map consistency
# ---------------------------------------------------------------------------

def test_c07_scalar_map_consistency():
    t0 = time.time()
    systems = {"f1": OdeSystem("rank1"),
               "f2": OdeSystem("phase_retrieval", theta=1.0)}
    details = []
    for kind, system in systems.items():
        consts = []
        for alpha in (0.3, 0.15, 0.075):
            per_run = []
            for rng in spawn_rngs(1007, 10):
                x = GroundTruth.from_singular_values([1.0], rng=rng, n=64,
                                                     spsd=True)
                z0 = sample_grd(RandomSpec(n=64, r=1, spsd=True), rng)
                rec, _ = run_pgd(LossSpec(kind, ground_truth=x, theta=1.0),
                                 z0, PgdConfig(alpha=alpha, max_iter=600,
                                               tol_rel=1e-10))
                h, rho = rec.column("h"), rec.column("rho")
                dev = 0.0
                for i in range(len(h) - 1):
                    pred = discrete_map(
                        system, ScalarState(h[i], min(max(rho[i], 0.0), 1.0)),
                        alpha)
                    dev = max(dev, abs(pred.h - h[i + 1]),
                              abs(pred.rho - rho[i + 1]))
                per_run.append(dev / alpha ** 2)
            consts.append(float(np.median(per_run)))
        spread = max(consts) / min(consts)
        assert spread <= 2.0, f"{kind}: C(alpha) spread {spread:.2f}"
        details.append(f"{kind}: C in [{min(consts):.2f}, {max(consts):.2f}]")
    _report(7, "; ".join(details) + f", {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 8. Linear-rate reproduction on the two batch setups
# ---------------------------------------------------------------------------

def _decadence_cv(err_rel):
    start_hits = np.flatnonzero(err_rel <= 1e-1)
    end_hits = np.flatnonzero(err_rel <= 1e-6)
    if not start_hits.size or not end_hits.size:
        return None
    start, end = start_hits[0], end_hits[0]
    if end - start < 5:
        return None
    dec = -np.diff(np.log(err_rel[start:end + 1]))
    return float(dec.std(ddof=1) / dec.mean())


def _batch_linear_rate(label, seed, make_spec, n, r, repeats=100):
    reached = 0
    cvs = []
    for rng in spawn_rngs(seed, repeats):
        d = np.sort(rng.uniform(0.5, 1.5, r))[::-1]
        x = GroundTruth.from_singular_values(d, rng=rng, n=n, spsd=True)
        spec = make_spec(x, rng)
        z0 = sample_grd(RandomSpec(n=n, r=r, spsd=True), rng)
        rec, _ = run_pgd(spec, z0,
                         PgdConfig(alpha=0.3, max_iter=800, tol_rel=1e-6,
                                   keep_points=False))
        if rec.stop_reason == "tol_rel":
            reached += 1
            cv = _decadence_cv(rec.column("err_fro") / x.norm())
            if cv is not None:
                cvs.append(cv)
    assert reached >= 99, f"{label}: only {reached}/100 reached 1e-6"
    assert max(cvs) <= 0.5, f"{label}: worst decrement CV {max(cvs):.3f}"
    return reached, max(cvs)


def test_c08_linear_rate_batches():
    t0 = time.time()
    r1, cv1 = _batch_linear_rate(
        "plain distance loss", 1008,
        lambda x, rng: LossSpec("f1", ground_truth=x), n=200, r=10)
    r2, cv2 = _batch_linear_rate(
        "gaussian sensing", 10088,
        lambda x, rng: LossSpec(
            "empirical", ground_truth=x,
            ensemble=make_ensemble("gaussian_sensing", 100, 100, 2500, rng)),
        n=100, r=5)
    _report(8, f"distance loss {r1}/100 (worst CV {cv1:.3f}); "
               f"sensing {r2}/100 (worst CV {cv2:.3f}); "
               f"{time.time() - t0:.0f}s")


# ---------------------------------------------------------------------------
# 9. Dimension scaling of the alignment escape
# ---------------------------------------------------------------------------

def _fractional_crossing(rho, level=0.99):
    hits = np.flatnonzero(rho >= level)
    if not hits.size:
        return np.nan
    k = hits[0]
    if k == 0:
        return 0.0
    return k - 1 + (level - rho[k - 1]) / (rho[k] - rho[k - 1])


def _paired_grd_run(n, q, sigma0, rng, alpha=0.3):
    """One rank-1 run with the initial alignment drawn by inverse CDF.

    The alignment (v^T e1)^2 of a uniform unit vector follows a
    Beta(1/2, (n-1)/2) law; drawing it at a shared quantile q pairs the
    repeats across dimensions (variance reduction) while each run remains
    an exact draw from the general random initialization.
    """
    e1 = np.zeros((n, 1))
    e1[0, 0] = 1.0
    x = GroundTruth(FactoredPoint(e1, np.array([[1.0]]), e1), spsd=True)
    b = float(stats.beta.ppf(q, 0.5, (n - 1) / 2))
    g = rng.standard_normal(n)
    g[0] = 0.0
    w = g / np.linalg.norm(g)
    v = (np.sqrt(b) * e1.ravel() + np.sqrt(1.0 - b) * w).reshape(n, 1)
    z0 = FactoredPoint(v, np.array([[sigma0]]), v)
    rec, _ = run_pgd(LossSpec("f1", ground_truth=x), z0,
                     PgdConfig(alpha=alpha, max_iter=400, tol_rel=1e-8,
                               keep_points=False))
    return _fractional_crossing(rec.column("rho"))


def test_c09_log_n_escape_scaling():
    t0 = time.time()
    ns = [64, 128, 256, 512, 1024]
    seed = 1009
    master = rng_from_seed(seed)
    qs = master.uniform(size=50)
    sigmas = master.uniform(0.5, 1.5, size=50)
    medians = []
    for n in ns:
        rngs = spawn_rngs(seed, 50)
        vals = [_paired_grd_run(n, qs[j], sigmas[j], rngs[j])
                for j in range(50)]
        medians.append(float(np.median(vals)))
    slope, intercept, r2 = _fit_log(ns, medians)
    assert r2 >= 0.95, f"PGD fit R^2 = {r2:.3f}"
    assert slope > 0

    ode_times = []
    for n in ns:
        traj = integrate(OdeSystem("rank1"), ScalarState(1.0, 1.0 / n),
                         1e-3, 30.0)
        ode_times.append(traj.time_to_rho(0.99))
    oslope, _, or2 = _fit_log(ns, ode_times)
    assert or2 >= 0.99, f"ODE fit R^2 = {or2:.3f}"
    assert oslope > 0
    _report(9, f"PGD medians {np.round(medians, 2).tolist()}, "
               f"fit {intercept:.2f} + {slope:.2f} log n (R^2={r2:.3f}); "
               f"ODE slope {oslope:.3f} (R^2={or2:.3f}); "
               f"{time.time() - t0:.0f}s")


# ---------------------------------------------------------------------------
# 10. Gradient finite-difference suite
# ---------------------------------------------------------------------------

def test_c10_gradient_finite_differences():
    t0 = time.time()
    rng = rng_from_seed(1010)
    n, r = 8, 2
    d = np.sort(rng.uniform(0.5, 2.0, r))[::-1]
    x = GroundTruth.from_singular_values(d, rng=rng, n=n, spsd=True)
    specs = {
        "f1": LossSpec("f1", ground_truth=x),
        "f2": LossSpec("f2", ground_truth=x, theta=1.0),
        "sensing": LossSpec("empirical", ground_truth=x,
                            ensemble=make_ensemble("gaussian_sensing",
                                                   n, n, 60, rng)),
        "completion": LossSpec("empirical", ground_truth=x,
                               ensemble=make_ensemble("completion",
                                                      n, n, 40, rng)),
        "phase_retrieval": LossSpec("empirical", ground_truth=x,
                                    ensemble=make_ensemble("phase_retrieval",
                                                           n, n, 80, rng)),
    }
    z = sample_grd(RandomSpec(n=n, r=r), rng)
    zd = z.reconstruct()
    eps = 1e-6
    worst = 0.0
    for name, spec in specs.items():
        g = euclid_grad(spec, z).dense()
        for _ in range(20):
            h = rng.standard_normal((n, n))
            h /= np.linalg.norm(h)
            fp = loss_value(spec, FactoredPoint.from_dense(zd + eps * h, n))
            fm = loss_value(spec, FactoredPoint.from_dense(zd - eps * h, n))
            fd = (fp - fm) / (2 * eps)
            rel = abs(fd - np.vdot(g, h)) / max(abs(fd), 1e-12)
            worst = max(worst, rel)
            assert rel <= 1e-5, f"{name}: relative FD error {rel:.2e}"
    _report(10, f"5 loss configurations x 20 directions, worst relative "
                f"error {worst:.2e}, {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 11. Spurious set soundness
# ---------------------------------------------------------------------------

def test_c11_spurious_set_soundness():
    t0 = time.time()
    rng = rng_from_seed(1011)
    worst = 0.0
    for r in (1, 2, 3, 4):
        d = np.sort(rng.uniform(0.5, 2.0, r))[::-1]
        x = GroundTruth.from_singular_values(d, rng=rng, n=10)
        sset = enumerate_spurious(x)
        assert len(sset) == 2 ** r - 1
        assert not sset.degenerate
        for member in sset.members:
            worst = max(worst, projected_residual_norm(member.point, x))
    assert worst <= 1e-10
    _report(11, f"cardinalities 2^r - 1 for r=1..4, max projected gradient "
                f"{worst:.2e}, {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 12. Alignment-constant bands across dimensions
# ---------------------------------------------------------------------------

def test_c12_assumption_constant_bands():
    t0 = time.time()
    quantiles = {}
    for n in (128, 512):
        l_vals, cu_vals = [], []
        for rng in spawn_rngs(1012 + n, 500):
            d = np.sort(rng.uniform(0.5, 1.5, 5))[::-1]
            x = GroundTruth.from_singular_values(d, rng=rng, n=n, spsd=True)
            z0 = sample_grd(RandomSpec(n=n, r=5, spsd=True), rng)
            rec, _ = run_pgd(LossSpec("f1", ground_truth=x), z0,
                             PgdConfig(alpha=0.3, max_iter=400, tol_rel=1e-6,
                                       keep_points=False))
            consts = assumption_constants(rec)
            l_vals.append(consts.L_max)
            cu_vals.append(consts.Cu_max)
        quantiles[n] = (float(np.percentile(l_vals, 95)),
                        float(np.percentile(cu_vals, 95)))
        assert np.isfinite(quantiles[n]).all()
    l_ratio = max(quantiles[128][0], quantiles[512][0]) / \
        min(quantiles[128][0], quantiles[512][0])
    cu_ratio = max(quantiles[128][1], quantiles[512][1]) / \
        min(quantiles[128][1], quantiles[512][1])
    assert l_ratio <= 4.0, f"L 95th-percentile ratio {l_ratio:.2f}"
    assert cu_ratio <= 4.0, f"Cu 95th-percentile ratio {cu_ratio:.2f}"
    _report(12, f"95th percentiles L: {quantiles[128][0]:.1f} vs "
                f"{quantiles[512][0]:.1f} (ratio {l_ratio:.2f}); "
                f"Cu: {quantiles[128][1]:.2f} vs {quantiles[512][1]:.2f} "
                f"(ratio {cu_ratio:.2f}); {time.time() - t0:.0f}s")


# ---------------------------------------------------------------------------
# 13. Monotone angle sum
# ---------------------------------------------------------------------------

def test_c13_monotone_angle_sum():
    t0 = time.time()
    alpha = 0.01
    tol = 10 * alpha ** 2
    worst = np.inf
    for rng in spawn_rngs(1013, 5):
        d = np.sort(rng.uniform(1.0, 2.0, 3))[::-1]
        x = GroundTruth.from_singular_values(d, rng=rng, n=32, spsd=True)
        z0 = sample_grd(RandomSpec(n=32, r=3, spsd=True), rng)
        rec, _ = run_pgd(LossSpec("f1", ground_truth=x), z0,
                         PgdConfig(alpha=alpha, max_iter=3000, tol_rel=1e-5,
                                   keep_points=False))
        angle_sum = rec.column("r_spectrum").sum(axis=1)
        worst = min(worst, float(np.diff(angle_sum).min()))
        assert np.all(np.diff(angle_sum) >= -tol)
    _report(13, f"5 runs, smallest per-step change {worst:.2e} "
                f">= -{tol:.0e}, {time.time() - t0:.1f}s")
