"""Hybrid REEV models: energy-state dynamics, engine on/off switching and
admissible control sets.

State is ``(soc, fuel)``, both normalised so a full reservoir is 1. Mode ``q``
is 1 when the range extender runs. The models here have piecewise-constant
rates, so a step over ``dt`` seconds is ``y + dt * rate(k, u, q)``; the
dynamic-programming layer uses the inverse map :meth:`predecessor` to look
backwards from a stage-``k`` state to the stage ``k - 1`` state that leads
to it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from hybridreach.errors import ConfigurationError, ControlDomainError
from hybridreach.profile import DrivingProfile

MODES = (0, 1)


@dataclass(frozen=True)
class EnergyState:
    soc: float
    fuel: float

    def as_array(self) -> np.ndarray:
        return np.array([self.soc, self.fuel], dtype=float)

    def __sub__(self, other: EnergyState) -> tuple[float, float]:
        return (self.soc - other.soc, self.fuel - other.fuel)


class HybridSystemModel(Protocol):
    """What the solver needs from a hybrid system.

    ``modes`` lists the discrete states the system may occupy; solvers fill
    the layers of any other mode with an infeasible value.
    """

    modes: tuple[int, ...]
    lag: float

    def rate(self, k: int, u: float, q: int) -> tuple[float, float]: ...

    def step(self, k: int, y: EnergyState, u: float, q: int, dt_s: float) -> EnergyState: ...

    def predecessor(
        self, k: int, soc: np.ndarray, fuel: np.ndarray, u: float, q: int, dt_s: float
    ) -> tuple[np.ndarray, np.ndarray]: ...

    def switch(self, q: int, w: int) -> int: ...

    def switch_set(self, q: int) -> tuple[int, ...]: ...

    def control_set(self, q: int) -> np.ndarray: ...

    def admits_control(self, q: int, u: float) -> bool: ...

    def check_profile(self, profile: DrivingProfile) -> None: ...


class _RateModel:
    """Shared machinery for models whose rate is constant over each link."""

    modes: tuple[int, ...] = MODES
    u_max: float
    n_u: int
    lag: float

    def rate(self, k: int, u: float, q: int) -> tuple[float, float]:
        raise NotImplementedError

    def _check(self, u: float, q: int) -> None:
        if q not in MODES:
            raise ControlDomainError(f"mode must be 0 or 1, got {q}")
        if not self.admits_control(q, u):
            raise ControlDomainError(f"control {u} not admissible in mode {q}")

    def step(self, k: int, y: EnergyState, u: float, q: int, dt_s: float) -> EnergyState:
        """Advance ``y`` across link ``k`` for ``dt_s`` seconds in mode ``q``."""
        self._check(u, q)
        if not dt_s > 0:
            raise ControlDomainError(f"step duration must be positive, got {dt_s}")
        r_soc, r_fuel = self.rate(k, u, q)
        return EnergyState(y.soc + dt_s * r_soc, y.fuel + dt_s * r_fuel)

    def predecessor(
        self, k: int, soc: np.ndarray, fuel: np.ndarray, u: float, q: int, dt_s: float
    ) -> tuple[np.ndarray, np.ndarray]:
        r_soc, r_fuel = self.rate(k, u, q)
        return soc - dt_s * r_soc, fuel - dt_s * r_fuel

    def switch(self, q: int, w: int) -> int:
        if w not in self.switch_set(q):
            raise ControlDomainError(f"switch command {w} not available in mode {q}")
        return w

    def switch_set(self, q: int) -> tuple[int, ...]:
        return (1 - q,)

    def control_set(self, q: int) -> np.ndarray:
        if q == 0 or self.u_max == 0:
            return np.zeros(1)
        return np.linspace(0.0, self.u_max, self.n_u)

    def admits_control(self, q: int, u: float) -> bool:
        if q == 0:
            return u == 0
        return 0.0 <= u <= self.u_max

    def check_profile(self, profile: DrivingProfile) -> None:
        pass


@dataclass(frozen=True)
class ToyModelParams:
    """Constant-rate REEV.

    ``a_x`` is the battery depletion rate, ``a_y`` the idle fuel burn while
    the engine runs, ``u_max`` the engine's maximum output, all per second
    in normalised units. ``delta_s`` is the switching lag.
    """

    a_x: float
    a_y: float
    u_max: float
    delta_s: float
    n_u: int = 8

    def __post_init__(self) -> None:
        for name in ("a_x", "a_y", "u_max", "delta_s"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.a_x <= 0 or self.a_y <= 0:
            raise ConfigurationError("a_x and a_y must be positive")
        if self.u_max < 0:
            raise ConfigurationError("u_max must be non-negative")
        if self.delta_s <= 0:
            raise ConfigurationError("delta_s must be positive")
        if self.n_u < 1:
            raise ConfigurationError("n_u must be >= 1")
        if self.a_x <= self.u_max:
            warnings.warn(
                f"a_x={self.a_x} <= u_max={self.u_max}: the battery need not drain, range may be unbounded",
                stacklevel=3,
            )


class ToyModel(_RateModel):
    """``rate(u, q) = (-a_x + q u, -q (a_y + u))``."""

    def __init__(self, params: ToyModelParams) -> None:
        self.params = params
        self.u_max = params.u_max
        self.n_u = params.n_u
        self.lag = params.delta_s

    def rate(self, k: int, u: float, q: int) -> tuple[float, float]:
        p = self.params
        return (-p.a_x + q * u, -q * (p.a_y + u))

    def __repr__(self) -> str:
        return f"ToyModel({self.params})"


@dataclass(frozen=True)
class ParametricParams:
    """Parameters of the per-link REEV model.

    Args:
        demand: Electric power demand per route link, keyed by the 1-based
            link index, in normalised units per second.
        a_y: Idle fuel burn of a running engine.
        u_max: Maximum engine output.
        delta_s: Switching lag in seconds.
        n_u: Number of control samples in ``[0, u_max]``.
        soc_per_power: Conversion of power to SOC rate.
        fuel_per_power: Conversion of power to fuel rate.
        tank_capacity_l: Fuel tank volume in liters.
    """

    demand: Mapping[int, float]
    a_y: float
    u_max: float
    delta_s: float
    n_u: int = 8
    soc_per_power: float = 1.0
    fuel_per_power: float = 1.0
    tank_capacity_l: float = 6.0

    def __post_init__(self) -> None:
        values = [self.a_y, self.u_max, self.delta_s, self.soc_per_power, self.fuel_per_power, self.tank_capacity_l]
        if not all(math.isfinite(v) for v in values) or not all(math.isfinite(v) for v in self.demand.values()):
            raise ConfigurationError("parametric coefficients must be finite")
        if self.tank_capacity_l <= 0:
            raise ConfigurationError("tank capacity must be positive")
        if self.delta_s <= 0 or self.u_max < 0 or self.a_y < 0 or self.n_u < 1:
            raise ConfigurationError("invalid lag, u_max, a_y or n_u")


class ParametricVehicle(_RateModel):
    """``rate_k(u, q) = (-c_soc (P_k - q u), -q c_fuel (a_y + u))``.

    ``P_k`` is the power demand on route link ``k``; with a constant demand
    equal to ``a_x`` and unit conversions this is exactly :class:`ToyModel`.
    """

    def __init__(self, params: ParametricParams) -> None:
        self.params = params
        self.u_max = params.u_max
        self.n_u = params.n_u
        self.lag = params.delta_s

    def rate(self, k: int, u: float, q: int) -> tuple[float, float]:
        p = self.params
        try:
            demand = p.demand[k]
        except KeyError:
            raise ConfigurationError(f"no power demand for link {k}") from None
        return (-p.soc_per_power * (demand - q * u), -q * p.fuel_per_power * (p.a_y + u))

    def check_profile(self, profile: DrivingProfile) -> None:
        missing = sorted({link.source_index for link in profile.links} - set(self.params.demand))
        if missing:
            raise ConfigurationError(f"power demand table lacks links {missing}")

    def __repr__(self) -> str:
        return f"ParametricVehicle(links={len(self.params.demand)}, u_max={self.u_max}, delta={self.lag})"


def parametric_vehicle(
    params: ParametricParams, profile: DrivingProfile | None = None
) -> ParametricVehicle:
    """Build a :class:`ParametricVehicle`, checking demand coverage of ``profile``."""
    model = ParametricVehicle(params)
    if profile is not None:
        model.check_profile(profile)
    return model


def demand_table(values: Sequence[float]) -> dict[int, float]:
    """Key a demand sequence by 1-based link index."""
    return {k: float(v) for k, v in enumerate(values, start=1)}


@dataclass
class EVOnly:
    """Freeze ``base`` in mode 0 with no switching: the pure-electric baseline."""

    base: HybridSystemModel
    modes: tuple[int, ...] = field(default=(0,), init=False)

    @property
    def lag(self) -> float:
        return self.base.lag

    def rate(self, k: int, u: float, q: int) -> tuple[float, float]:
        return self.base.rate(k, u, q)

    def step(self, k: int, y: EnergyState, u: float, q: int, dt_s: float) -> EnergyState:
        if q != 0:
            raise ControlDomainError("EV-only model cannot run the engine")
        return self.base.step(k, y, u, q, dt_s)

    def predecessor(self, k, soc, fuel, u, q, dt_s):
        return self.base.predecessor(k, soc, fuel, u, q, dt_s)

    def switch(self, q: int, w: int) -> int:
        raise ControlDomainError("EV-only model has no switch commands")

    def switch_set(self, q: int) -> tuple[int, ...]:
        return ()

    def control_set(self, q: int) -> np.ndarray:
        return self.base.control_set(0)

    def admits_control(self, q: int, u: float) -> bool:
        return q == 0 and self.base.admits_control(0, u)

    def check_profile(self, profile: DrivingProfile) -> None:
        self.base.check_profile(profile)
