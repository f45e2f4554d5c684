"""Fixed-step driver for multirate explicit schemes with one implicit stage.

Stage ``i`` of a step is

    Y_i = y_n + dt * sum_{j<i} (aF_ij fF(Y_j) + aS_ij fS(Y_j) + at_ij g(Y_j))
              + dt * at_ii g(Y_i)

where ``fF``/``fS`` are ``f`` restricted to the fast/slow components. Only
the last diagonal entry of the implicit matrix is nonzero, so each step does
exactly one stage solve. The step completes with the shared weights,
``y_{n+1} = y_n + dt * sum_i b_i (f(Y_i) + g(Y_i))``.
"""

from __future__ import annotations

import csv
import enum
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .stage_solver import SolverConfig, SolverStats, StageSolverError, solve_stage
from .system import PartitionMap, SplitSystem
from .tableau import MultirateScheme

__all__ = [
    "StepFailure",
    "StepperState",
    "Verdict",
    "RunReport",
    "step",
    "integrate",
    "total_variation",
    "DIVERGENCE_FACTOR",
    "OSCILLATION_FACTOR",
]

DIVERGENCE_FACTOR = 1e6
OSCILLATION_FACTOR = 3.0


class StepFailure(RuntimeError):
    """The implicit stage could not be solved; carries the time and step index."""

    def __init__(self, message, t, step_count):
        super().__init__(message)
        self.t = t
        self.step_count = step_count


@dataclass
class StepperState:
    t: float
    y: np.ndarray
    step_count: int = 0
    stats: SolverStats = field(default_factory=SolverStats)
    diverged: bool = False


def step(scheme: MultirateScheme, sys: SplitSystem, pmap: PartitionMap,
         state: StepperState, dt: float, cfg: SolverConfig = SolverConfig()) -> StepperState:
    """Advance ``state`` by one step of size ``dt``.

    Returns a new state. If a stage or the result is not finite, the returned
    state keeps the previous ``t`` and ``y`` with ``diverged`` set.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if pmap.n != sys.n or state.y.shape != (sys.n,):
        raise ValueError(f"dimension mismatch: system {sys.n}, partition {pmap.n}, "
                         f"state {state.y.shape}")
    s = scheme.s
    aF, aS, b = scheme.fast.a, scheme.slow.a, scheme.b
    at = None if scheme.implicit is None else scheme.implicit.a_tilde
    stiff = at is not None and sys.has_g
    fmask, smask = pmap.fast_mask, pmap.slow_mask
    any_fast, any_slow = fmask.any(), smask.any()

    y = state.y
    n = y.size
    zeros = np.zeros(n)
    kf = np.empty((s, n))
    ks = np.empty((s, n))
    kg = np.zeros((s, n))
    for i in range(s):
        yi = y + dt * (aF[i, :i] @ kf[:i] + aS[i, :i] @ ks[:i])
        if stiff:
            yi = yi + dt * (at[i, :i] @ kg[:i])
            if at[i, i] != 0.0:
                try:
                    yi = solve_stage(sys, yi, dt * at[i, i], cfg=cfg, stats=state.stats)
                except StageSolverError as exc:
                    raise StepFailure(f"stage {i + 1}: {exc}", state.t, state.step_count) from exc
        if not np.all(np.isfinite(yi)):
            return replace(state, diverged=True)
        kf[i] = sys.eval_f(yi, fmask) if any_fast else zeros
        ks[i] = sys.eval_f(yi, smask) if any_slow else zeros
        if stiff:
            kg[i] = sys.eval_g(yi)

    y_new = y + dt * (b @ (kf + ks + kg))
    if not np.all(np.isfinite(y_new)):
        return replace(state, diverged=True)
    return StepperState(t=state.t + dt, y=y_new, step_count=state.step_count + 1,
                        stats=state.stats)


def total_variation(y: np.ndarray, periodic: bool = True) -> float:
    d = np.diff(y)
    tv = float(np.abs(d).sum())
    if periodic and y.size > 1:
        tv += abs(float(y[0] - y[-1]))
    return tv


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    OSCILLATORY = "Oscillatory"
    DIVERGED = "Diverged"


def _fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class RunReport:
    """History of a fixed-step run.

    ``mass`` is ``mass_weight * sum(y)`` per recorded step (step 0 included).
    """

    steps: list
    times: list
    mass: list
    max_norm: list
    snapshots: dict
    y_final: np.ndarray
    verdict: Verdict
    solves: int = 0
    newton_iterations: int = 0
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def mass_loss(self) -> float:
        return abs(self.mass[0] - self.mass[-1])

    @property
    def final_time(self) -> float:
        return self.times[-1]

    @property
    def growth(self) -> float:
        """Final max-norm relative to the initial one."""
        return self.max_norm[-1] / self.max_norm[0] if self.max_norm[0] else math.inf

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "t", "mass", "max_norm"])
            for row in zip(self.steps, self.times, self.mass, self.max_norm):
                w.writerow([row[0], *map(_fmt, row[1:])])
        return path

    def write_snapshots(self, directory, x) -> list:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = []
        for k, u in sorted(self.snapshots.items()):
            p = directory / f"u_{k}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "u"])
                w.writerows([_fmt(a), _fmt(v)] for a, v in zip(x, u))
            out.append(p)
        return out


def _classify(y0, y, max_norm, finite, periodic) -> Verdict:
    if not finite or max_norm > DIVERGENCE_FACTOR * float(np.max(np.abs(y0))):
        return Verdict.DIVERGED
    if total_variation(y, periodic) > OSCILLATION_FACTOR * total_variation(y0, periodic):
        return Verdict.OSCILLATORY
    return Verdict.STABLE


def integrate(scheme: MultirateScheme, sys: SplitSystem, pmap: PartitionMap, y0,
              t0: float, tF: float, dt: float, *, mass_weight: float = 1.0,
              snapshot_every: Optional[int] = None, cfg: SolverConfig = SolverConfig(),
              periodic: bool = True) -> RunReport:
    """Take ``(tF - t0) / dt`` fixed steps and classify the outcome.

    Verdict: Diverged if a value becomes non-finite or the max-norm exceeds
    ``1e6`` times its initial value; Oscillatory if the final total variation
    exceeds three times the initial one; Stable otherwise. A stage-solver
    failure ends the run early with ``error`` set.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if tF < t0:
        raise ValueError("tF must not precede t0")
    span = tF - t0
    nsteps = round(span / dt)
    if abs(nsteps * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"interval {span} is not a whole number of steps of {dt}")

    y0 = np.array(y0, dtype=float)
    state = StepperState(t=t0, y=y0.copy())
    steps, times = [0], [t0]
    mass = [mass_weight * float(y0.sum())]
    norms = [float(np.max(np.abs(y0)))]
    snapshots = {0: y0.copy()}
    error = None
    clock = time.perf_counter()
    for k in range(1, nsteps + 1):
        try:
            new = step(scheme, sys, pmap, state, dt, cfg)
        except StepFailure as exc:
            error = str(exc)
            break
        if new.diverged:
            state = new
            break
        # t from the step index, no accumulated drift
        state = replace(new, t=tF if k == nsteps else t0 + k * dt)
        steps.append(k)
        times.append(state.t)
        mass.append(mass_weight * float(state.y.sum()))
        norms.append(float(np.max(np.abs(state.y))))
        if snapshot_every and k % snapshot_every == 0:
            snapshots[k] = state.y.copy()
    snapshots.setdefault(steps[-1], state.y.copy())

    verdict = _classify(y0, state.y, norms[-1], not state.diverged, periodic)
    return RunReport(
        steps=steps, times=times, mass=mass, max_norm=norms, snapshots=snapshots,
        y_final=state.y, verdict=verdict, solves=state.stats.solves,
        newton_iterations=state.stats.iterations,
        wall_time=time.perf_counter() - clock, error=error,
    )
