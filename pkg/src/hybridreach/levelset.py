"""Sign-encoding functions for the initial and admissible sets, the
``(x, q, p)`` product grid, and the interpolation used to read values off it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from hybridreach.errors import ConfigurationError, ValidationError
from hybridreach.model import MODES, EnergyState

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class BoxSet:
    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self) -> None:
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ValidationError(f"box bounds must satisfy lo < hi, got {self.lo} / {self.hi}")

    def signed_distance(self, soc: ArrayLike, fuel: ArrayLike) -> ArrayLike:
        """Max-norm signed distance: negative inside, 0 on the faces."""
        # face-wise form: same values as max(|x - c| - h), but the sign is exact at the faces
        return np.maximum(
            np.maximum(self.lo[0] - soc, soc - self.hi[0]),
            np.maximum(self.lo[1] - fuel, fuel - self.hi[1]),
        )

    def contains(self, soc: ArrayLike, fuel: ArrayLike) -> ArrayLike:
        return (
            (self.lo[0] <= soc) & (soc <= self.hi[0]) & (self.lo[1] <= fuel) & (fuel <= self.hi[1])
        )


UNIT_BOX = BoxSet((0.0, 0.0), (1.0, 1.0))


@dataclass(frozen=True)
class BallSet:
    center: tuple[float, float]
    radius: float

    def __post_init__(self) -> None:
        if not self.radius >= 0:
            raise ValidationError(f"ball radius must be non-negative, got {self.radius}")

    def signed_distance(self, soc: ArrayLike, fuel: ArrayLike) -> ArrayLike:
        return np.hypot(soc - self.center[0], fuel - self.center[1]) - self.radius

    def contains(self, soc: ArrayLike, fuel: ArrayLike) -> ArrayLike:
        return np.hypot(soc - self.center[0], fuel - self.center[1]) <= self.radius


def phi_initial(ball: BallSet, x: EnergyState) -> float:
    """Euclidean signed distance to the initial ball."""
    return float(ball.signed_distance(x.soc, x.fuel))


def phi_obstacle(box: BoxSet, x: EnergyState) -> float:
    """Max-norm signed distance to the admissible box."""
    return float(box.signed_distance(x.soc, x.fuel))


def lock_nodes(lag: float, dp: float, horizon: Optional[float] = None) -> np.ndarray:
    """Lock grid ``{0, dp, 2 dp, ...}`` up to ``min(horizon, lag + 2 dp)``.

    The top node is never below ``lag``, so the switch operator always has
    a node to land on.
    """
    if not (lag > 0 and dp > 0):
        raise ConfigurationError("lag and lock step must be positive")
    top = lag + 2 * dp
    if horizon is not None:
        top = max(lag, min(horizon, top))
    n = math.ceil(top / dp - 1e-9)
    return dp * np.arange(n + 1, dtype=float)


@dataclass(frozen=True)
class StateGrid:
    """Uniform ``(soc, fuel)`` grid times the two modes times the lock grid.

    Nodes along each energy axis sit at ``x_lo + i * dx``; the upper end is
    pushed out to the first node at or beyond ``x_hi``.
    """

    x_lo: tuple[float, float]
    x_hi: tuple[float, float]
    dx: float
    p_nodes: tuple[float, ...]
    modes: tuple[int, ...] = MODES

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_nodes", tuple(float(p) for p in self.p_nodes))
        if not self.dx > 0:
            raise ValidationError("dx must be positive")
        for lo, hi in zip(self.x_lo, self.x_hi):
            if not lo < hi:
                raise ValidationError("domain bounds must satisfy lo < hi")
            if self.dx > hi - lo:
                raise ValidationError(f"dx={self.dx} exceeds the domain width {hi - lo}")
        p = self.p_nodes
        if not p or p[0] != 0.0:
            raise ValidationError("lock grid must start at 0")
        if any(b <= a for a, b in zip(p, p[1:])):
            raise ValidationError("lock grid must be strictly increasing")

    @classmethod
    def build(
        cls,
        dx: float,
        lag: float,
        dp: Optional[float] = None,
        domain_lo: Sequence[float] = (-0.2, -0.2),
        domain_hi: Sequence[float] = (1.2, 1.2),
        horizon: Optional[float] = None,
    ) -> StateGrid:
        dp = lag / 2 if dp is None else dp
        return cls(tuple(domain_lo), tuple(domain_hi), dx, tuple(lock_nodes(lag, dp, horizon)))

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(math.ceil((hi - lo) / self.dx - 1e-9) + 1 for lo, hi in zip(self.x_lo, self.x_hi))

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        n0, n1 = self.shape
        return (
            self.x_lo[0] + self.dx * np.arange(n0, dtype=float),
            self.x_lo[1] + self.dx * np.arange(n1, dtype=float),
        )

    @property
    def upper(self) -> tuple[float, float]:
        a0, a1 = self.axes
        return (float(a0[-1]), float(a1[-1]))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        a0, a1 = self.axes
        return np.meshgrid(a0, a1, indexing="ij")

    @property
    def p_array(self) -> np.ndarray:
        return np.asarray(self.p_nodes)

    def switch_nodes(self, lag: float) -> np.ndarray:
        """Indices of lock nodes at or beyond ``lag``."""
        return np.flatnonzero(self.p_array >= lag)

    def project(self, soc: ArrayLike, fuel: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
        """Clip points onto the computational box (what clamped interpolation sees)."""
        hi = self.upper
        return np.clip(soc, self.x_lo[0], hi[0]), np.clip(fuel, self.x_lo[1], hi[1])

    def dims(self) -> tuple[int, int, int, int]:
        n0, n1 = self.shape
        return (len(MODES), len(self.p_nodes), n0, n1)


def _axis_weights(values: np.ndarray, lo: float, h: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    t = (np.asarray(values, dtype=float) - lo) / h
    # snap round-off so that lookups at grid nodes return the stored value exactly
    near = np.rint(t)
    t = np.where(np.abs(t - near) < 1e-9, near, t)
    i0 = np.clip(np.floor(t), 0, n - 2).astype(np.intp)
    w = np.clip(t - i0, 0.0, 1.0)
    return i0, w


class Bilinear:
    """Precomputed clamped bilinear weights for a fixed set of query points.

    Build once per query set, then apply to any number of layers.
    """

    def __init__(self, grid: StateGrid, soc: ArrayLike, fuel: ArrayLike) -> None:
        n0, n1 = grid.shape
        self.i, self.wi = _axis_weights(soc, grid.x_lo[0], grid.dx, n0)
        self.j, self.wj = _axis_weights(fuel, grid.x_lo[1], grid.dx, n1)

    def __call__(self, layer: np.ndarray) -> np.ndarray:
        i, j, wi, wj = self.i, self.j, self.wi, self.wj
        top = (1 - wi) * layer[i, j] + wi * layer[i + 1, j]
        bot = (1 - wi) * layer[i, j + 1] + wi * layer[i + 1, j + 1]
        return (1 - wj) * top + wj * bot


def lock_weights(p_nodes: Sequence[float], p: float) -> tuple[int, int, float]:
    """Linear interpolation bracket for lock value ``p``, clamped to the grid."""
    nodes = np.asarray(p_nodes, dtype=float)
    if p <= nodes[0]:
        return 0, 0, 0.0
    if p >= nodes[-1]:
        last = len(nodes) - 1
        return last, last, 0.0
    i1 = int(np.searchsorted(nodes, p, side="right"))
    i0 = i1 - 1
    w = (p - nodes[i0]) / (nodes[i1] - nodes[i0])
    if w == 0.0:
        return i0, i0, 0.0
    return i0, i1, float(w)
