"""Butcher tableaux for conservative multirate partitioned Runge-Kutta schemes.

A multirate scheme is generated from a single-rate *base* method:

* the *slow* method repeats the base ``m`` times with the full step, every
  block restarting from ``y_n`` (block-diagonal ``A``);
* the *fast* method applies the base ``m`` times in succession with step
  ``dt / m`` (block lower-triangular ``A``).

Both have ``m * s`` stages and the same weights, which is what makes the
partitioned scheme conserve linear invariants. Telescoping uses the fast
method as the base of the next level.

An implicit augmentation adds one stiff stage: the implicit coefficient
matrix is zero except for the last row, which is constant (``1/2`` for the
A-stable second-order variant and ``1`` for the L-stable first-order one).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "TableauError",
    "Tableau",
    "ValidationReport",
    "Variant",
    "ImplicitAugmentation",
    "MultirateScheme",
    "OrderReport",
    "heun",
    "forward_euler",
    "validate_tableau",
    "build_slow",
    "build_fast",
    "make_scheme",
    "telescope",
    "augment_implicit",
    "check_order_conditions",
    "format_tableau",
    "parse_tableau",
]


class TableauError(ValueError):
    """Structural problem with a tableau or scheme (shapes, mismatched weights)."""


def _frozen(x, ndim: int) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise TableauError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Tableau:
    """Coefficients ``(A, b, c)`` of one Runge-Kutta method.

    ``c`` defaults to the row sums of ``A``. Arrays are stored read-only.
    """

    a: np.ndarray
    b: np.ndarray
    c: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        a = _frozen(self.a, 2)
        b = _frozen(self.b, 1)
        s = b.size
        if a.shape != (s, s):
            raise TableauError(f"A has shape {a.shape}, expected ({s}, {s})")
        c = a.sum(axis=1) if self.c is None else self.c
        c = _frozen(c, 1)
        if c.shape != (s,):
            raise TableauError(f"c has shape {c.shape}, expected ({s},)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return self.b.size

    def is_explicit(self) -> bool:
        return not np.any(np.triu(self.a))

    def same_coefficients(self, other: "Tableau") -> bool:
        """Exact elementwise equality of ``A``, ``b`` and ``c``."""
        return (
            self.s == other.s
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.c, other.c)
        )

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Tableau{label} s={self.s}>"


def heun() -> Tableau:
    """Explicit trapezoidal rule (Heun), the 2-stage second-order base method."""
    return Tableau(a=[[0.0, 0.0], [1.0, 0.0]], b=[0.5, 0.5], name="heun")


def forward_euler() -> Tableau:
    return Tableau(a=[[0.0]], b=[1.0], name="euler")


@dataclass
class ValidationReport:
    row_sum_residuals: np.ndarray
    sum_b_residual: float
    explicit: bool
    tol: float = 1e-14

    @property
    def max_row_sum_residual(self) -> float:
        return float(np.max(self.row_sum_residuals, initial=0.0))

    @property
    def valid(self) -> bool:
        return self.max_row_sum_residual <= self.tol and self.sum_b_residual <= self.tol

    @property
    def problems(self) -> list[str]:
        out = []
        for i, r in enumerate(self.row_sum_residuals):
            if r > self.tol:
                out.append(f"row {i}: |c_i - sum_j a_ij| = {r:.3g}")
        if self.sum_b_residual > self.tol:
            out.append(f"|sum(b) - 1| = {self.sum_b_residual:.3g}")
        return out


def validate_tableau(t: Tableau, tol: float = 1e-14) -> ValidationReport:
    """Check row-sum consistency, ``sum(b) == 1`` and explicitness of ``t``."""
    s = t.b.size
    if t.a.shape != (s, s) or t.c.shape != (s,):
        raise TableauError("inconsistent tableau dimensions")
    return ValidationReport(
        row_sum_residuals=np.abs(t.c - t.a.sum(axis=1)),
        sum_b_residual=abs(float(t.b.sum()) - 1.0),
        explicit=t.is_explicit(),
        tol=tol,
    )


def _check_ratio(m) -> int:
    if int(m) != m or m < 1:
        raise ValueError(f"multirate ratio must be a positive integer, got {m!r}")
    return int(m)


def build_slow(base: Tableau, m: int) -> Tableau:
    """Replicate ``base`` ``m`` times with the full step.

    Every block restarts from ``y_n``, so on its own the slow method
    reproduces one base step; only the weights are divided by ``m``.
    """
    m = _check_ratio(m)
    if m == 1:
        return base
    return Tableau(
        a=np.kron(np.eye(m), base.a),
        b=np.tile(base.b, m) / m,
        c=np.tile(base.c, m),
        name=f"slow({base.name},{m})" if base.name else "",
    )


def build_fast(base: Tableau, m: int) -> Tableau:
    """Compose ``base`` with itself ``m`` times at step ``dt / m``.

    Block ``(k, l)`` of ``A`` is ``A_base / m`` on the diagonal and
    ``1 b_base^T / m`` below it: sub-step ``k`` starts from the result of the
    sub-steps before it.
    """
    m = _check_ratio(m)
    if m == 1:
        return base
    s = base.s
    lower = np.tril(np.ones((m, m)), -1)
    a = np.kron(np.eye(m), base.a) + np.kron(lower, np.outer(np.ones(s), base.b))
    c = np.concatenate([base.c + k for k in range(m)])
    return Tableau(
        a=a / m,
        b=np.tile(base.b, m) / m,
        c=c / m,
        name=f"fast({base.name},{m})" if base.name else "",
    )


class Variant(str, enum.Enum):
    ASTABLE2 = "astable2"
    LSTABLE1 = "lstable1"

    @property
    def gamma(self) -> float:
        return 0.5 if self is Variant.ASTABLE2 else 1.0


@dataclass(frozen=True, eq=False)
class ImplicitAugmentation:
    """Single implicit stage: the last row of the implicit matrix equals ``gamma``."""

    variant: Variant
    gamma: float
    a_tilde: np.ndarray
    c_tilde: np.ndarray

    @classmethod
    def for_stages(cls, s: int, variant) -> "ImplicitAugmentation":
        variant = Variant(variant)
        a_tilde = np.zeros((s, s))
        a_tilde[-1, :] = variant.gamma
        c_tilde = a_tilde.sum(axis=1)
        a_tilde.setflags(write=False)
        c_tilde.setflags(write=False)
        return cls(variant=variant, gamma=variant.gamma, a_tilde=a_tilde, c_tilde=c_tilde)

    @property
    def s(self) -> int:
        return self.a_tilde.shape[0]


@dataclass(frozen=True, eq=False)
class MultirateScheme:
    """Matched slow/fast tableaux with shared weights, plus optional implicit stage.

    ``slow`` is the coarsest-level method (base replicated ``m**levels``
    times). ``level_tableaux`` lists one tableau per refinement level, coarse
    to fine; for a single level it is ``(slow, fast)``.
    """

    base: Tableau
    slow: Tableau
    fast: Tableau
    m: int
    levels: int = 1
    implicit: Optional[ImplicitAugmentation] = None
    implicit_base: Optional[ImplicitAugmentation] = None
    level_tableaux: tuple = field(default=())

    def __post_init__(self):
        if self.slow.s != self.fast.s:
            raise TableauError(
                f"slow and fast stage counts differ ({self.slow.s} vs {self.fast.s})"
            )
        if not self.level_tableaux:
            object.__setattr__(self, "level_tableaux", (self.slow, self.fast))

    @property
    def s(self) -> int:
        return self.fast.s

    @property
    def b(self) -> np.ndarray:
        return self.fast.b

    @property
    def variant(self) -> Optional[Variant]:
        return None if self.implicit is None else self.implicit.variant

    def shares_b(self) -> bool:
        return all(np.array_equal(t.b, self.fast.b) for t in self.level_tableaux)

    def single_rate(self) -> "MultirateScheme":
        """The base method run globally, keeping the implicit variant if any."""
        scheme = make_scheme(self.base, 1)
        if self.implicit is not None:
            scheme = augment_implicit(scheme, self.implicit.variant)
        return scheme


def _levels(base: Tableau, m: int, levels: int) -> tuple:
    # level k (coarse -> fine) uses the k-times-subcycled base, replicated to
    # a common stage count; stage order follows the recursive block order
    fast = [base]
    for _ in range(levels):
        fast.append(build_fast(fast[-1], m))
    return tuple(build_slow(fast[k], m ** (levels - k)) for k in range(levels + 1))


def make_scheme(base: Tableau, m: int, levels: int = 1) -> MultirateScheme:
    """Build the slow/fast pair (optionally telescoped ``levels`` deep) from ``base``."""
    m = _check_ratio(m)
    if int(levels) != levels or levels < 1:
        raise ValueError(f"levels must be a positive integer, got {levels!r}")
    report = validate_tableau(base)
    if not report.explicit:
        raise TableauError("base method must be explicit")
    tabs = _levels(base, m, int(levels))
    return MultirateScheme(
        base=base, slow=tabs[0], fast=tabs[-1], m=m, levels=int(levels), level_tableaux=tabs
    )


def telescope(scheme: MultirateScheme, extra_levels: int) -> MultirateScheme:
    """Nest ``extra_levels`` more refinement levels, keeping ratio and variant."""
    if int(extra_levels) != extra_levels or extra_levels < 1:
        raise ValueError(f"extra_levels must be >= 1, got {extra_levels!r}")
    out = make_scheme(scheme.base, scheme.m, scheme.levels + int(extra_levels))
    if scheme.implicit is not None:
        out = augment_implicit(out, scheme.implicit.variant)
    return out


def augment_implicit(scheme: MultirateScheme, variant) -> MultirateScheme:
    """Attach the one-implicit-stage extension; explicit coefficients are untouched."""
    if not scheme.shares_b():
        raise TableauError("fast and slow tableaux must share the same b vector")
    variant = Variant(variant)
    return MultirateScheme(
        base=scheme.base,
        slow=scheme.slow,
        fast=scheme.fast,
        m=scheme.m,
        levels=scheme.levels,
        implicit=ImplicitAugmentation.for_stages(scheme.s, variant),
        implicit_base=ImplicitAugmentation.for_stages(scheme.base.s, variant),
        level_tableaux=scheme.level_tableaux,
    )


@dataclass
class OrderReport:
    """Order-condition values, residuals and the order they certify.

    ``values`` holds the raw quantities (``sum_b``, ``b_dot_c_*``) so that an
    unexpected value such as ``b . c_tilde = 1`` is visible, not just flagged.
    """

    values: dict
    residuals: dict
    achieved_order_explicit: int
    achieved_order_implicit: Optional[int]

    def __str__(self):
        lines = [f"{k:>16s} = {self.values[k]:<12.10g} residual {self.residuals[k]:.3g}"
                 for k in self.values]
        lines.append(f"explicit order: {self.achieved_order_explicit}")
        if self.achieved_order_implicit is not None:
            lines.append(f"implicit order: {self.achieved_order_implicit}")
        return "\n".join(lines)


def check_order_conditions(scheme: MultirateScheme, tol: float = 1e-14) -> OrderReport:
    """Evaluate first- and second-order conditions of each part of ``scheme``.

    Explicit order 2 needs ``sum(b) = 1`` and ``b . c = 1/2`` for every
    explicit tableau; the implicit part is order 2 when ``b . c_tilde = 1/2``
    and order 1 otherwise (given ``sum(b) = 1``).
    """
    b = scheme.b
    values = {
        "sum_b": float(b.sum()),
        "b_dot_c_fast": float(b @ scheme.fast.c),
        "b_dot_c_slow": float(b @ scheme.slow.c),
    }
    targets = {"sum_b": 1.0, "b_dot_c_fast": 0.5, "b_dot_c_slow": 0.5}
    if scheme.implicit is not None:
        values["b_dot_c_tilde"] = float(b @ scheme.implicit.c_tilde)
        targets["b_dot_c_tilde"] = 0.5
    residuals = {k: abs(values[k] - targets[k]) for k in values}

    first = residuals["sum_b"] <= tol
    second = first and residuals["b_dot_c_fast"] <= tol and residuals["b_dot_c_slow"] <= tol
    order_explicit = 2 if second else (1 if first else 0)
    order_implicit = None
    if scheme.implicit is not None:
        if first and residuals["b_dot_c_tilde"] <= tol:
            order_implicit = 2
        else:
            order_implicit = 1 if first else 0
    return OrderReport(values, residuals, order_explicit, order_implicit)


def format_tableau(t: Tableau) -> str:
    """Plain-text form: ``s=<n>`` header, ``s`` rows ``c_i a_i1 .. a_is``, then ``b``."""
    fmt = lambda x: format(float(x), ".17g")  # noqa: E731
    lines = [f"s={t.s}"]
    for i in range(t.s):
        lines.append(" ".join(fmt(v) for v in (t.c[i], *t.a[i])))
    lines.append(" ".join(fmt(v) for v in t.b))
    return "\n".join(lines) + "\n"


def parse_tableau(text: str, name: str = "") -> Tableau:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0][0].startswith("s="):
        raise TableauError("missing 's=<n>' header")
    s = int(lines[0][0][2:])
    rows = lines[1:]
    if len(rows) != s + 1 or any(len(r) != s + 1 for r in rows[:s]) or len(rows[s]) != s:
        raise TableauError(f"malformed tableau text for s={s}")
    body = np.array(rows[:s], dtype=float)
    return Tableau(a=body[:, 1:], b=np.array(rows[s], dtype=float), c=body[:, 0], name=name)
