"""Stability functions on the scalar model ``y' = (lf + ls + lstiff) y``.

Each rate is stepped with its own integrator (fast, slow, implicit) while
the three share the weights ``b``; ``z_* = lambda_* dt``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tableau import MultirateScheme, Variant

__all__ = [
    "StabilityDomainError",
    "ScalarModel",
    "StabilityScan",
    "r_implicit_closed_form",
    "r_numeric",
    "scan_region",
]


class StabilityDomainError(ValueError):
    """Evaluation at a pole of the stability function."""


@dataclass(frozen=True)
class ScalarModel:
    lambda_fast: complex = 0j
    lambda_slow: complex = 0j
    lambda_stiff: complex = 0j

    def z(self, dt: float) -> tuple:
        return (self.lambda_fast * dt, self.lambda_slow * dt, self.lambda_stiff * dt)


def r_implicit_closed_form(variant, z: complex) -> complex:
    variant = Variant(variant)
    z = complex(z)
    if variant is Variant.ASTABLE2:
        if z == 2:
            raise StabilityDomainError("pole at z = 2")
        return (2 + z) / (2 - z)
    if z == 1:
        raise StabilityDomainError("pole at z = 1")
    return 1 / (1 - z)


def r_numeric(scheme: MultirateScheme, z_f: complex, z_s: complex, z_i: complex = 0) -> complex:
    """One step of ``scheme`` applied to ``y0 = 1``; forward substitution over stages."""
    z_f, z_s, z_i = complex(z_f), complex(z_s), complex(z_i)
    if z_i != 0 and scheme.implicit is None:
        raise ValueError("scheme has no implicit part but z_i != 0")
    at = scheme.implicit.a_tilde if scheme.implicit is not None else np.zeros((scheme.s,) * 2)
    # per-stage rational coefficients, combined once
    coef = z_f * scheme.fast.a + z_s * scheme.slow.a + z_i * at
    s = scheme.s
    Y = np.zeros(s, dtype=complex)
    for i in range(s):
        denom = 1.0 - coef[i, i]
        if denom == 0:
            raise StabilityDomainError(f"singular implicit stage {i + 1}")
        Y[i] = (1.0 + coef[i, :i] @ Y[:i]) / denom
    return complex(1.0 + (z_f + z_s + z_i) * (scheme.b @ Y))


_PARTS = ("implicit", "explicit", "fast", "slow")


@dataclass
class StabilityScan:
    re: np.ndarray
    im: np.ndarray
    abs_r: np.ndarray  # shape (len(im), len(re)); NaN at poles

    @property
    def z(self) -> np.ndarray:
        return self.re[None, :] + 1j * self.im[:, None]

    @property
    def stable(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return self.abs_r <= 1.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_z", "im_z", "abs_R"])
        for j, y in enumerate(self.im):
            for i, x in enumerate(self.re):
                w.writerow([format(float(x), ".17g"), format(float(y), ".17g"),
                            format(float(self.abs_r[j, i]), ".17g")])
        return buf.getvalue()


def _axis(spec) -> np.ndarray:
    lo, hi, n = spec
    if int(n) < 2:
        raise ValueError("resolution must be at least 2 per scanned axis")
    return np.linspace(float(lo), float(hi), int(n))


def scan_region(scheme: MultirateScheme, re_range, im_range=None, part: str = "implicit",
                fixed: Optional[dict] = None) -> StabilityScan:
    """Evaluate ``|R|`` over a grid of ``z`` values.

    ``part`` says which rate the grid drives: ``implicit``, ``fast``,
    ``slow`` or ``explicit`` (fast and slow together). ``fixed`` gives
    constant values for the other rates (keys ``z_f``, ``z_s``, ``z_i``).
    ``im_range=None`` scans the real axis only. Poles yield NaN.
    """
    if part not in _PARTS:
        raise ValueError(f"part must be one of {_PARTS}")
    re = _axis(re_range)
    im = np.zeros(1) if im_range is None else _axis(im_range)
    base = {"z_f": 0j, "z_s": 0j, "z_i": 0j}
    base.update(fixed or {})
    keys = {"implicit": ("z_i",), "fast": ("z_f",), "slow": ("z_s",),
            "explicit": ("z_f", "z_s")}[part]
    out = np.empty((im.size, re.size))
    for j, y in enumerate(im):
        for i, x in enumerate(re):
            args = dict(base)
            for k in keys:
                args[k] = complex(x, y)
            try:
                out[j, i] = abs(r_numeric(scheme, **args))
            except StabilityDomainError:
                out[j, i] = np.nan
    return StabilityScan(re=re, im=im, abs_r=out)
