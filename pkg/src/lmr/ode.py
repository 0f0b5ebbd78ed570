"""Scalar population dynamics of the norm/alignment observables.

Two planar systems in ``(h, rho)`` with ``h = ||Z||_F`` and
``rho = <X, Z> / (||X|| ||Z||)``:

* ``rank1``:            dh/dt = -h + rho,              drho/dt = 2 (rho/h)(1 - rho)
* ``phase_retrieval``:  dh/dt = theta - (2+theta) h + 2 rho,
                        drho/dt = (4 rho / h)(1 - rho)

Both flows have their attracting fixed point with positive alignment at
``(1, 1)``.  A fixed-step RK4 integrator serves as the reference; the
matching forward-Euler map mirrors one gradient-descent step.  Also here:
the factored derivative formulas used to validate flows on the manifold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import FactoredPoint, tangent_project
from .validation import ConfigError, check_positive


@dataclass(frozen=True)
class ScalarState:
    h: float
    rho: float
    t: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if not (-1e-9 <= self.rho <= 1.0 + 1e-9):
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")


@dataclass(frozen=True)
class OdeSystem:
    kind: str  # "rank1" | "phase_retrieval"
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rank1", "phase_retrieval"):
            raise ConfigError(f"unknown system {self.kind!r}")
        if self.kind == "phase_retrieval":
            check_positive(self.theta, "theta")


class OdeFailure(RuntimeError):
    """Integration left the admissible half-plane (h <= 0)."""


def _rhs(system: OdeSystem, h: float, rho: float, t: float) -> tuple[float, float]:
    if h <= 0:
        raise OdeFailure(f"rhs undefined at h={h:.6g} (t={t:.6g}, rho={rho:.6g})")
    if system.kind == "rank1":
        return (-h + rho, 2.0 * (rho / h) * (1.0 - rho))
    th = system.theta
    return (th - (2.0 + th) * h + 2.0 * rho, (4.0 * rho / h) * (1.0 - rho))


def ode_rhs(system: OdeSystem, state: ScalarState) -> tuple[float, float]:
    return _rhs(system, state.h, state.rho, state.t)


@dataclass
class OdeTrajectory:
    t: np.ndarray
    h: np.ndarray
    rho: np.ndarray
    clip_events: int = 0

    def time_to_rho(self, level: float) -> float | None:
        hits = np.flatnonzero(self.rho >= level)
        return float(self.t[hits[0]]) if hits.size else None

    @property
    def final(self) -> ScalarState:
        return ScalarState(float(self.h[-1]), float(min(self.rho[-1], 1.0)),
                           float(self.t[-1]))


def _rk4_step(system: OdeSystem, h: float, rho: float, t: float,
              dt: float) -> tuple[float, float]:
    def f(hh, rr):
        return _rhs(system, hh, min(max(rr, 0.0), 1.0), t)

    k1 = f(h, rho)
    k2 = f(h + 0.5 * dt * k1[0], rho + 0.5 * dt * k1[1])
    k3 = f(h + 0.5 * dt * k2[0], rho + 0.5 * dt * k2[1])
    k4 = f(h + dt * k3[0], rho + dt * k3[1])
    return (h + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            rho + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def integrate(system: OdeSystem, state0: ScalarState, dt: float,
              t_max: float) -> OdeTrajectory:
    """Fixed-step RK4 from ``state0`` to ``t_max``.

    ``rho`` is clipped to [0, 1] after each step (rounding can push it just
    past 1, flipping the sign of ``1 - rho``); clips are counted.  ``h``
    crossing zero aborts with the offending state in the message.
    """
    check_positive(dt, "dt")
    check_positive(t_max, "t_max")
    n_steps = int(np.ceil(t_max / dt))
    t = np.empty(n_steps + 1)
    hs = np.empty(n_steps + 1)
    rhos = np.empty(n_steps + 1)
    t[0], hs[0], rhos[0] = state0.t, state0.h, min(max(state0.rho, 0.0), 1.0)
    clips = 0
    for i in range(n_steps):
        h_new, rho_new = _rk4_step(system, hs[i], rhos[i], t[i], dt)
        if h_new <= 0.0:
            raise OdeFailure(
                f"h crossed zero at t={t[i] + dt:.6g}: "
                f"state was (h={hs[i]:.6g}, rho={rhos[i]:.6g})")
        if rho_new < 0.0 or rho_new > 1.0:
            clips += 1
            rho_new = min(max(rho_new, 0.0), 1.0)
        t[i + 1] = t[i] + dt
        hs[i + 1] = h_new
        rhos[i + 1] = rho_new
    return OdeTrajectory(t=t, h=hs, rho=rhos, clip_events=clips)


def discrete_map(system: OdeSystem, state: ScalarState,
                 alpha: float) -> ScalarState:
    """One forward-Euler step of the system: the leading-order model of a
    single gradient-descent iteration with stepsize ``alpha``."""
    check_positive(alpha, "alpha")
    dh, drho = ode_rhs(system, state)
    return ScalarState(state.h + alpha * dh,
                       min(max(state.rho + alpha * drho, 0.0), 1.0),
                       state.t + alpha)


# ---------------------------------------------------------------------------
# Factored derivatives of a flow on the manifold
# ---------------------------------------------------------------------------

def factored_flow_derivative(z: FactoredPoint, m: np.ndarray
                             ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor derivatives ``(dU, dS, dV)`` of the flow ``dZ/dt = P_{T_Z}(M)``.

    For ``Z = U S V^T``:
    ``dS = U^T M V``, ``dU = (I - U U^T) M V S^{-1}``,
    ``dV = (I - V V^T) M^T U S^{-T}``; assembling
    ``dU S V^T + U dS V^T + U S dV^T`` recovers the tangent projection of
    ``M``.  Requires an invertible core.
    """
    if z.width == 0:
        raise ConfigError("flow derivative undefined at the zero point")
    s_vals = z.singular_values()
    if s_vals[-1] <= 1e-12 * s_vals[0]:
        raise ConfigError("core is numerically singular; the factor "
                          "derivatives blow up")
    xi = tangent_project(z, m)
    s_inv = np.linalg.inv(z.core)
    ds = xi.core_part
    du = xi.left_complement @ s_inv
    dv = xi.right_complement @ s_inv.T
    return du, ds, dv


def assemble_flow_derivative(z: FactoredPoint, du: np.ndarray, ds: np.ndarray,
                             dv: np.ndarray) -> np.ndarray:
    """Dense ``d(U S V^T)/dt`` from the factor derivatives."""
    return (du @ z.core @ z.right.T + z.left @ ds @ z.right.T
            + z.left @ z.core @ dv.T)
