"""Periodic 1D advection-diffusion ``u_t + (omega(x) u)_x = delta u_xx``.

Advection uses a conservative third-order upwind-biased flux (``omega > 0``)
and goes to the explicit multirate part; diffusion uses the second-order
central difference and goes to the implicit part. The domain is ``[0, 1)``
with ``M`` cells and ``dx = 1 / M``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .system import PartitionMap, Region, SplitSystem
from .tableau import MultirateScheme, Variant, augment_implicit, heun, make_scheme

__all__ = [
    "STENCIL_REACH",
    "ConfigError",
    "SchemeKind",
    "Grid1D",
    "SpeedProfile",
    "BenchmarkConfig",
    "advective_rhs",
    "diffusive_rhs",
    "diffusion_matrix",
    "build_partition",
    "discrete_mass",
    "mass_loss",
    "initial_condition",
    "make_system",
    "make_scheme_for",
    "parse_config",
    "load_config",
]

STENCIL_REACH = 2


class ConfigError(ValueError):
    pass


class SchemeKind(str, enum.Enum):
    EXPLICIT_MPRK = "explicit_mprk"
    SINGLE_RATE_IMEX = "single_rate_imex"
    MULTIRATE_ASTABLE = "multirate_astable"
    MULTIRATE_LSTABLE = "multirate_lstable"


@dataclass(frozen=True)
class Grid1D:
    M: int
    length: float = 1.0

    def __post_init__(self):
        if self.M < 5:
            raise ConfigError("need at least 5 cells for the advection stencil")
        if not self.length > 0:
            raise ConfigError("domain length must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.M

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.dx


@dataclass(frozen=True)
class SpeedProfile:
    """``omega_slow`` outside ``fast_interval``, ``ratio * omega_slow`` inside.

    The two levels are joined by half-cosine ramps ``ramp_cells`` wide,
    centred on the interval edges.
    """

    omega_slow: float
    ratio: float = 2.0
    fast_interval: tuple = (1 / 3, 2 / 3)
    ramp_cells: float = 4.0

    def __post_init__(self):
        if not self.omega_slow > 0:
            raise ConfigError("omega_slow must be positive")
        if not self.ratio >= 1:
            raise ConfigError("ratio must be >= 1")
        lo, hi = self.fast_interval
        if not 0 <= lo < hi <= 1:
            raise ConfigError(f"bad fast_interval {self.fast_interval}")
        if self.ramp_cells < 0:
            raise ConfigError("ramp_cells must be nonnegative")

    def weight(self, x: np.ndarray, dx: float) -> np.ndarray:
        """Fraction of the fast speed at ``x``: 0 in the slow zone, 1 in the fast zone."""
        lo, hi = self.fast_interval
        x = np.asarray(x, dtype=float)
        w = ((x >= lo) & (x < hi)).astype(float)
        half = 0.5 * self.ramp_cells * dx
        if half > 0:
            for edge, rising in ((lo, True), (hi, False)):
                d = x - edge
                inside = np.abs(d) < half
                ramp = 0.5 * (1.0 + np.sin(0.5 * np.pi * d[inside] / half))
                w[inside] = ramp if rising else 1.0 - ramp
        return w

    def omega(self, x: np.ndarray, dx: float) -> np.ndarray:
        return self.omega_slow * (1.0 + (self.ratio - 1.0) * self.weight(x, dx))


def advective_rhs(u: np.ndarray, grid: Grid1D, profile: SpeedProfile) -> np.ndarray:
    """``-(F_{k+1/2} - F_{k-1/2}) / dx`` with ``F_{k+1/2} = (2 q_{k+1} + 5 q_k - q_{k-1}) / 6``."""
    q = profile.omega(grid.x, grid.dx) * u
    flux = (2.0 * np.roll(q, -1) + 5.0 * q - np.roll(q, 1)) / 6.0
    return -(flux - np.roll(flux, 1)) / grid.dx


def diffusive_rhs(u: np.ndarray, grid: Grid1D, delta: float) -> np.ndarray:
    # flux form keeps the periodic sum exactly telescoping
    grad = (np.roll(u, -1) - u) / grid.dx
    return delta * (grad - np.roll(grad, 1)) / grid.dx


def diffusion_matrix(grid: Grid1D, delta: float) -> np.ndarray:
    """Dense circulant matrix of :func:`diffusive_rhs`."""
    M = grid.M
    D = -2.0 * np.eye(M) + np.eye(M, k=1) + np.eye(M, k=-1)
    D[0, -1] = D[-1, 0] = 1.0
    return (delta / grid.dx**2) * D


def build_partition(grid: Grid1D, profile: SpeedProfile, dt: float,
                    fast_cfl: float = 1.25, reach: int = STENCIL_REACH) -> PartitionMap:
    """Fast where the local CFL ``omega dt / dx`` exceeds ``fast_cfl``.

    Cells within ``reach`` of a fast cell (periodically) become Buffer.
    """
    cfl = profile.omega(grid.x, grid.dx) * dt / grid.dx
    fast = cfl > fast_cfl
    labels = np.full(grid.M, int(Region.SLOW))
    near = np.zeros(grid.M, dtype=bool)
    for shift in range(1, reach + 1):
        near |= np.roll(fast, shift) | np.roll(fast, -shift)
    labels[near] = int(Region.BUFFER)
    labels[fast] = int(Region.FAST)
    return PartitionMap(labels)


def discrete_mass(u: np.ndarray, dx: float) -> float:
    return dx * float(np.sum(u))


def mass_loss(u0: np.ndarray, u1: np.ndarray, dx: float) -> float:
    return dx * abs(float(np.sum(u0)) - float(np.sum(u1)))


def initial_condition(spec: str, x: np.ndarray) -> np.ndarray:
    """``gaussian[:center[:width]]``, ``sine[:k]`` or ``tophat[:lo:hi]``."""
    name, *args = spec.split(":")
    try:
        args = [float(a) for a in args]
    except ValueError:
        raise ConfigError(f"bad initial condition {spec!r}") from None
    if name == "gaussian":
        c, w = (args + [0.5, 0.1][len(args):])[:2]
        return np.exp(-(((x - c) / w) ** 2))
    if name == "sine":
        k = args[0] if args else 1.0
        return 1.0 + 0.5 * np.sin(2 * np.pi * k * x)
    if name == "tophat":
        lo, hi = (args + [0.4, 0.6][len(args):])[:2]
        return ((x >= lo) & (x < hi)).astype(float)
    raise ConfigError(f"unknown initial condition {spec!r}")


@dataclass(frozen=True)
class BenchmarkConfig:
    """One benchmark run.

    ``cfl_slow`` sets ``omega_slow = cfl_slow * dx / dt``; ``omega_ratio``
    defaults to ``1.92 / 1.01`` for ``m = 2`` and ``m`` otherwise.
    """

    scheme: SchemeKind = SchemeKind.MULTIRATE_ASTABLE
    M: int = 81
    dt: float = 0.0125
    t_final: float = 0.3
    delta: float = 0.05
    m: int = 2
    levels: int = 1
    cfl_slow: float = 1.01
    omega_ratio: float | None = None
    fast_interval: tuple = (1 / 3, 2 / 3)
    ramp_cells: float = 4.0
    fast_cfl: float = 1.25
    ic: str = "gaussian"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        for key in ("dt", "t_final", "cfl_slow"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if int(self.m) != self.m or self.m < 1 or int(self.levels) != self.levels or self.levels < 1:
            raise ConfigError("m and levels must be positive integers")
        if self.omega_ratio is not None and self.omega_ratio < 1:
            raise ConfigError("omega_ratio must be >= 1")
        Grid1D(self.M)
        self.profile()

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.M)

    @property
    def ratio(self) -> float:
        if self.omega_ratio is not None:
            return self.omega_ratio
        return 1.92 / 1.01 if (self.m, self.levels) == (2, 1) else float(self.m) ** self.levels

    def profile(self) -> SpeedProfile:
        dx = 1.0 / self.M
        return SpeedProfile(omega_slow=self.cfl_slow * dx / self.dt, ratio=self.ratio,
                            fast_interval=tuple(self.fast_interval), ramp_cells=self.ramp_cells)

    def with_(self, **kw) -> "BenchmarkConfig":
        return replace(self, **kw)


def make_system(config: BenchmarkConfig) -> SplitSystem:
    """Advection in ``f`` and diffusion in ``g``.

    For the purely explicit scheme diffusion is moved into ``f`` and stepped
    with the multirate explicit method as well.
    """
    grid, profile, delta = config.grid, config.profile(), config.delta
    if config.scheme is SchemeKind.EXPLICIT_MPRK:
        return SplitSystem(
            grid.M,
            lambda u: advective_rhs(u, grid, profile) + diffusive_rhs(u, grid, delta),
            description=f"advection+diffusion explicit, delta={delta}",
        )
    f = lambda u: advective_rhs(u, grid, profile)  # noqa: E731
    if delta == 0:
        return SplitSystem(grid.M, f, description="pure advection")
    D = diffusion_matrix(grid, delta)
    D.setflags(write=False)
    return SplitSystem(
        grid.M, f,
        g=lambda u: diffusive_rhs(u, grid, delta),
        jacobian_g=lambda u: D,
        description=f"advection explicit, diffusion implicit, delta={delta}",
    )


def make_scheme_for(config: BenchmarkConfig) -> MultirateScheme:
    kind = config.scheme
    if kind is SchemeKind.EXPLICIT_MPRK:
        return make_scheme(heun(), config.m, config.levels)
    if kind is SchemeKind.SINGLE_RATE_IMEX:
        return augment_implicit(make_scheme(heun(), 1), Variant.ASTABLE2)
    variant = Variant.ASTABLE2 if kind is SchemeKind.MULTIRATE_ASTABLE else Variant.LSTABLE1
    return augment_implicit(make_scheme(heun(), config.m, config.levels), variant)


def partition_for(config: BenchmarkConfig) -> PartitionMap:
    if config.scheme is SchemeKind.SINGLE_RATE_IMEX:
        return PartitionMap.uniform(config.M, Region.SLOW)
    return build_partition(config.grid, config.profile(), config.dt, config.fast_cfl)


_KEY_TYPES = {f.name: f.type for f in fields(BenchmarkConfig)}


def parse_config(text: str) -> BenchmarkConfig:
    """Parse ``key = value`` lines (``#`` starts a comment).

    ``fast_interval`` is written as two numbers, e.g. ``0.33 0.67``.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = (p.strip() for p in line.partition("="))
        if not sep or not val:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _KEY_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "fast_interval":
                lo, hi = (float(v) for v in val.replace(",", " ").split())
                values[key] = (lo, hi)
            elif key in ("M", "m", "levels"):
                values[key] = int(val)
            elif key in ("scheme", "ic", "name"):
                values[key] = val
            else:
                values[key] = float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r}") from None
    try:
        return BenchmarkConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> BenchmarkConfig:
    path = Path(path)
    cfg = parse_config(path.read_text())
    return cfg if cfg.name else cfg.with_(name=path.stem)
