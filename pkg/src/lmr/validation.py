"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numpy as np

#: Frobenius tolerance for declaring a factor matrix orthonormal.
ORTHO_TOL = 1e-10

#: Relative threshold below which a singular value counts as zero.
RANK_TOL = 1e-12


class ConfigError(ValueError):
    """Raised when a user-supplied parameter or config entry is invalid."""


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float64 array, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ConfigError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def check_rank(n1: int, n2: int, r: int) -> None:
    if r < 1:
        raise ConfigError(f"rank must be >= 1, got {r}")
    if r > min(n1, n2):
        raise ConfigError(f"rank {r} exceeds min dimension {min(n1, n2)}")


def orthonormality_defect(factor: np.ndarray) -> float:
    """Frobenius distance of ``factor^T factor`` from the identity."""
    k = factor.shape[1]
    if k == 0:
        return 0.0
    gram = factor.T @ factor
    return float(np.linalg.norm(gram - np.eye(k)))


def check_orthonormal(factor: np.ndarray, name: str = "factor",
                      tol: float = ORTHO_TOL) -> None:
    defect = orthonormality_defect(factor)
    if defect > tol:
        raise ConfigError(
            f"{name} columns are not orthonormal (defect {defect:.3e} > {tol:.1e})")


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ConfigError(f"{what} have mismatched shapes {a.shape} vs {b.shape}")
