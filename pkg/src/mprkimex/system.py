"""Split right-hand sides ``y' = f(y) + g(y)`` and fast/slow component partitions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["Region", "PartitionMap", "PartitionReport", "SplitSystem", "validate_partition"]


class Region(enum.IntEnum):
    SLOW = 0
    BUFFER = 1
    FAST = 2


class PartitionMap:
    """Per-component region labels.

    Buffer components are integrated with the slow method, so
    ``slow_mask`` covers both Buffer and Slow labels.
    """

    def __init__(self, labels):
        labels = np.asarray(labels)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if not np.isin(labels, [r.value for r in Region]).all():
            raise ValueError("labels must be Region values")
        self.labels = labels.astype(np.int8)
        self.labels.setflags(write=False)

    @classmethod
    def uniform(cls, n: int, region: Region = Region.SLOW) -> "PartitionMap":
        return cls(np.full(n, int(region)))

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def fast_mask(self) -> np.ndarray:
        return self.labels == Region.FAST

    @property
    def slow_mask(self) -> np.ndarray:
        return self.labels != Region.FAST

    def count(self, region: Region) -> int:
        return int(np.count_nonzero(self.labels == region))

    def __repr__(self):
        return (f"PartitionMap(n={self.n}, fast={self.count(Region.FAST)}, "
                f"buffer={self.count(Region.BUFFER)}, slow={self.count(Region.SLOW)})")


@dataclass
class PartitionReport:
    valid: bool
    violations: list = field(default_factory=list)


def validate_partition(pmap: PartitionMap, stencil_reach: int, periodic: bool = True) -> PartitionReport:
    """Check that every Slow component is more than ``stencil_reach`` cells from any Fast one.

    Equivalently, each Fast/Slow boundary is separated by at least
    ``stencil_reach`` Buffer cells. Report-only; nothing is raised.
    """
    labels = pmap.labels
    n = labels.size
    fast_idx = np.flatnonzero(labels == Region.FAST)
    violations = []
    for k in np.flatnonzero(labels == Region.SLOW):
        d = np.abs(fast_idx - k)
        if periodic:
            d = np.minimum(d, n - d)
        if d.size and d.min() <= stencil_reach:
            j = int(fast_idx[np.argmin(d)])
            violations.append(
                f"slow cell {k} is {int(d.min())} cell(s) from fast cell {j} (reach {stencil_reach})"
            )
    return PartitionReport(valid=not violations, violations=violations)


class SplitSystem:
    """Nonstiff ``f`` evaluated per region plus stiff ``g`` evaluated globally.

    Parameters
    ----------
    n : int
        State dimension.
    f : callable
        ``f(y)`` returning the full nonstiff right-hand side. Region-restricted
        evaluations mask this output unless ``f_masked`` is given.
    g : callable, optional
        Stiff term ``g(y)``. ``None`` means ``g == 0``.
    jacobian_g : callable, optional
        ``jacobian_g(y)`` returning the dense ``n x n`` Jacobian of ``g``.
    f_masked : callable, optional
        ``f_masked(y, mask)`` computing only the masked components (zeros
        elsewhere), for systems where that is cheaper than a full evaluation.
    """

    def __init__(
        self,
        n: int,
        f: Callable[[np.ndarray], np.ndarray],
        g: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        jacobian_g: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        f_masked: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
        description: str = "",
    ):
        self.n = int(n)
        self._f = f
        self._g = g
        self._jacobian_g = jacobian_g
        self._f_masked = f_masked
        self.description = description

    @property
    def has_g(self) -> bool:
        return self._g is not None

    @property
    def has_jacobian(self) -> bool:
        return self._jacobian_g is not None

    def eval_f(self, y: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        if mask is None:
            return np.asarray(self._f(y), dtype=float)
        if self._f_masked is not None:
            return np.asarray(self._f_masked(y, mask), dtype=float)
        return np.where(mask, self._f(y), 0.0)

    def eval_g(self, y: np.ndarray) -> np.ndarray:
        if self._g is None:
            return np.zeros(self.n)
        return np.asarray(self._g(y), dtype=float)

    def jacobian_g(self, y: np.ndarray) -> np.ndarray:
        if self._g is None:
            return np.zeros((self.n, self.n))
        if self._jacobian_g is None:
            raise NotImplementedError("system provides no Jacobian of g")
        return np.asarray(self._jacobian_g(y), dtype=float)

    @classmethod
    def linear(cls, L, G=None, description: str = "linear") -> "SplitSystem":
        """``f(y) = L y`` and ``g(y) = G y``."""
        L = np.asarray(L, dtype=float)
        if G is None:
            return cls(L.shape[0], lambda y: L @ y, description=description)
        G = np.asarray(G, dtype=float)
        return cls(L.shape[0], lambda y: L @ y, lambda y: G @ y, lambda y: G, description=description)

    def __repr__(self):
        return f"SplitSystem(n={self.n}, stiff={self.has_g}, {self.description!r})"
