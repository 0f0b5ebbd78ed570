"""Self-contained invariant suite behind the ``check`` CLI verb.

Each check re-verifies one structural property of the library against an
independent computation (dense oracles, finite differences, closed forms).
The suite is a quick smoke screen, not the full test suite.
"""

from __future__ import annotations

import numpy as np

from .diagnostics import enumerate_spurious, lojasiewicz_ratio, projected_residual_norm
from .losses import LossSpec, euclid_grad, loss_value, make_ensemble
from .manifold import FactoredPoint, GroundTruth, retract, tangent_project, truncated_svd
from .ode import OdeSystem, ScalarState, integrate, ode_rhs
from .sampling import RandomSpec, sample_grd, sample_stiefel


def _random_problem(rng, n=8, r=2):
    x = GroundTruth.from_singular_values(
        np.sort(rng.uniform(0.5, 2.0, r))[::-1], rng=rng, n=n)
    z = sample_grd(RandomSpec(n=n, r=r), rng)
    return x, z


def check_projector(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        z = sample_grd(RandomSpec(n=8, r=2), rng)
        w1 = rng.standard_normal((8, 8))
        w2 = rng.standard_normal((8, 8))
        p1 = tangent_project(z, w1)
        # idempotence
        worst = max(worst, np.linalg.norm(
            tangent_project(z, p1.dense()).dense() - p1.dense()))
        # self-adjointness and contraction
        p2 = tangent_project(z, w2)
        sym_gap = abs(np.vdot(p1.dense(), w2) - np.vdot(w1, p2.dense()))
        worst = max(worst, sym_gap)
        if p1.norm() > np.linalg.norm(w1) + 1e-12:
            return False, "projector expanded a vector"
    return worst < 1e-10, f"max deviation {worst:.2e}"


def check_retraction(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        z = sample_grd(RandomSpec(n=16, r=3), rng)
        xi = tangent_project(z, rng.standard_normal((16, 16)))
        fast = retract(z, xi, 0.01, 3).reconstruct()
        oracle = truncated_svd(z.reconstruct() + 0.01 * xi.dense(), 3).reconstruct()
        worst = max(worst, np.linalg.norm(fast - oracle))
    return worst < 1e-10, f"max fast-path deviation {worst:.2e}"


def check_first_order_retraction(rng) -> tuple[bool, str]:
    z = sample_grd(RandomSpec(n=12, r=2), rng)
    xi = tangent_project(z, rng.standard_normal((12, 12)))
    ratios = []
    for alpha in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
        moved = retract(z, xi, alpha, 2).reconstruct()
        ratios.append(np.linalg.norm(
            moved - (z.reconstruct() + alpha * xi.dense())) / alpha)
    ok = all(b <= a * 1.001 for a, b in zip(ratios, ratios[1:]))
    return ok, f"deviation/alpha decayed {ratios[0]:.2e} -> {ratios[-1]:.2e}"


def check_hoffman_wielandt(rng) -> tuple[bool, str]:
    worst = -np.inf
    for _ in range(50):
        a = rng.standard_normal((7, 7))
        b = rng.standard_normal((7, 7))
        sa = np.linalg.svd(a, compute_uv=False)
        sb = np.linalg.svd(b, compute_uv=False)
        slack = np.linalg.norm(b - a) - np.linalg.norm(sb - sa)
        worst = max(worst, -slack)
    return worst < 1e-12, f"worst slack violation {worst:.2e}"


def check_lojasiewicz(rng) -> tuple[bool, str]:
    for _ in range(200):
        x, z = _random_problem(rng, n=10, r=2)
        lojasiewicz_ratio(z, x, check=True)  # raises on violation
    return True, "bounds held on 200 random pairs"


def check_gradients(rng) -> tuple[bool, str]:
    x, z = _random_problem(rng, n=6, r=2)
    ens = make_ensemble("gaussian_sensing", 6, 6, 40, rng)
    specs = [LossSpec("f1", ground_truth=x),
             LossSpec("f2", ground_truth=x, theta=1.0),
             LossSpec("empirical", ground_truth=x, ensemble=ens)]
    eps, worst = 1e-6, 0.0
    zd = z.reconstruct()
    for spec in specs:
        g = euclid_grad(spec, z).dense()
        for _ in range(5):
            h = rng.standard_normal(zd.shape)
            h /= np.linalg.norm(h)
            fp = loss_value(spec, FactoredPoint.from_dense(zd + eps * h, 6))
            fm = loss_value(spec, FactoredPoint.from_dense(zd - eps * h, 6))
            fd = (fp - fm) / (2 * eps)
            worst = max(worst, abs(fd - np.vdot(g, h)) / max(abs(fd), 1e-12))
    return worst < 1e-5, f"max relative FD error {worst:.2e}"


def check_spurious(rng) -> tuple[bool, str]:
    worst = 0.0
    for r in (1, 2, 3):
        x = GroundTruth.from_singular_values(
            np.linspace(2.0, 1.0, r), rng=rng, n=8)
        sset = enumerate_spurious(x)
        if len(sset) != 2 ** r - 1:
            return False, f"wrong cardinality at r={r}"
        for member in sset.members:
            worst = max(worst, projected_residual_norm(member.point, x))
    return worst < 1e-10, f"max projected gradient at members {worst:.2e}"


def check_ode(rng) -> tuple[bool, str]:
    for system in (OdeSystem("rank1"), OdeSystem("phase_retrieval", theta=1.0)):
        dh, drho = ode_rhs(system, ScalarState(1.0, 1.0))
        if abs(dh) > 1e-14 or abs(drho) > 1e-14:
            return False, f"(1,1) is not a fixed point of {system.kind}"
        traj = integrate(system, ScalarState(1.0, 0.01), 1e-3, 12.0)
        if not (traj.rho[-1] > 0.99 and abs(traj.h[-1] - 1.0) < 1e-2):
            return False, f"{system.kind} did not settle at (1,1)"
        if np.any(np.diff(traj.rho) < -1e-12):
            return False, f"rho not monotone along {system.kind}"
    return True, "fixed points, attraction and rho-monotonicity verified"


def check_stiefel(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        w = sample_stiefel(24, 4, rng)
        worst = max(worst, np.linalg.norm(w.T @ w - np.eye(4)))
    return worst < 1e-10, f"max orthonormality defect {worst:.2e}"


ALL_CHECKS = [
    ("projector", check_projector),
    ("retraction_fast_path", check_retraction),
    ("first_order_retraction", check_first_order_retraction),
    ("hoffman_wielandt", check_hoffman_wielandt),
    ("lojasiewicz_bounds", check_lojasiewicz),
    ("gradient_finite_differences", check_gradients),
    ("spurious_set", check_spurious),
    ("ode_systems", check_ode),
    ("stiefel_sampling", check_stiefel),
]


def run_all(seed: int = 0) -> list[tuple[str, bool, str]]:
    import zlib

    results = []
    for name, fn in ALL_CHECKS:
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, zlib.crc32(name.encode())]))
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a failed invariant, not a crash of the suite
            ok, detail = False, f"raised {exc!r}"
        results.append((name, ok, detail))
    return results
