"""Newton solver for the single implicit stage ``Y - coeff * g(Y) = r``."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "JacobianMode",
    "SolverConfig",
    "SolverStats",
    "StageSolverError",
    "NonConvergenceError",
    "SingularJacobianError",
    "solve_stage",
    "fd_jacobian",
]


class StageSolverError(RuntimeError):
    pass


class NonConvergenceError(StageSolverError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class SingularJacobianError(StageSolverError):
    pass


class JacobianMode(str, enum.Enum):
    USER = "user"
    FD = "fd"


@dataclass(frozen=True)
class SolverConfig:
    """Newton settings.

    Convergence means ``||F(Y)||_inf <= tol * max(1, ||r||_inf)``; the scale
    keeps the test meaningful once states grow far beyond unit size.
    """

    tol: float = 1e-10
    max_iter: int = 50
    jacobian: JacobianMode = JacobianMode.USER

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        object.__setattr__(self, "jacobian", JacobianMode(self.jacobian))


@dataclass
class SolverStats:
    solves: int = 0
    iterations: int = 0
    last_iterations: int = 0
    residuals: list = field(default_factory=list)

    def record(self, iterations: int, residual: float):
        self.solves += 1
        self.iterations += iterations
        self.last_iterations = iterations
        self.residuals.append(residual)


def fd_jacobian(func, y: np.ndarray) -> np.ndarray:
    """Forward-difference Jacobian with step ``sqrt(eps) * (1 + |y_k|)``."""
    y = np.asarray(y, dtype=float)
    f0 = func(y)
    jac = np.empty((f0.size, y.size))
    steps = np.sqrt(np.finfo(float).eps) * (1.0 + np.abs(y))
    for k in range(y.size):
        yp = y.copy()
        yp[k] += steps[k]
        jac[:, k] = (func(yp) - f0) / steps[k]
    return jac


def solve_stage(sys, r, coeff: float, guess=None, cfg: SolverConfig = SolverConfig(),
                stats: SolverStats | None = None) -> np.ndarray:
    """Return ``Y`` with ``Y - coeff * g(Y) = r`` to within ``cfg.tol``.

    Newton's method with a dense LU solve of ``I - coeff * J_g`` per
    iteration. ``guess`` defaults to ``r``.
    """
    r = np.asarray(r, dtype=float)
    if not np.isfinite(coeff):
        raise StageSolverError(f"non-finite stage coefficient {coeff!r}")
    if coeff == 0.0 or not sys.has_g:
        if stats is not None:
            stats.record(0, 0.0)
        return r.copy()

    y = r.copy() if guess is None else np.array(guess, dtype=float)
    tol = cfg.tol * max(1.0, float(np.max(np.abs(r), initial=0.0)))
    eye = np.eye(r.size)

    def residual(v):
        return v - coeff * sys.eval_g(v) - r

    res = residual(y)
    norm = float(np.max(np.abs(res), initial=0.0))
    it = 0
    while not norm <= tol:
        if it == cfg.max_iter or not np.isfinite(norm):
            raise NonConvergenceError(
                f"stage solve failed after {it} iterations, residual {norm:.3e}", norm)
        if cfg.jacobian is JacobianMode.USER and sys.has_jacobian:
            jac = sys.jacobian_g(y)
        else:
            jac = fd_jacobian(sys.eval_g, y)
        try:
            y = y - np.linalg.solve(eye - coeff * jac, res)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(f"singular Newton matrix: {exc}") from exc
        it += 1
        res = residual(y)
        norm = float(np.max(np.abs(res), initial=0.0))

    if stats is not None:
        stats.record(it, norm)
    return y
