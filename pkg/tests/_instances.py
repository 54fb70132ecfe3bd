"""Instance builders shared by the test modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hybridreach import BallSet, DrivingProfile, ProfileLink, StateGrid, ToyModel, ToyModelParams, constant_profile, solve
from hybridreach.model import ParametricParams, ParametricVehicle, demand_table

TOY = ToyModelParams(a_x=0.10, a_y=0.15, u_max=0.07, delta_s=1.0)
TOY_CENTER = (0.5, 0.5)
TOY_DT = 0.4
TOY_DP = 0.5
TOY_ANALYTIC = 6.590909090909091

H = 0.125  # dyadic step: every micro-instance value below is exact in binary


@dataclass(frozen=True)
class Micro:
    model: ParametricVehicle
    profile: DrivingProfile
    grid: StateGrid
    ball: BallSet


def micro_instance(seed: int) -> Micro:
    """Random instance whose dynamics map grid nodes onto grid nodes.

    Rates are multiples of the grid step, link times are 1 or 2, the lag and
    the lock nodes are integers, so both the solver and the enumerator work
    with exact arithmetic.
    """
    rng = np.random.default_rng(seed)
    count = int(rng.integers(1, 7))
    n_u = int(rng.integers(1, 4))
    times = rng.choice([1.0, 2.0], size=count) if rng.random() < 0.5 else np.ones(count)
    profile = DrivingProfile(tuple(ProfileLink(i + 1, float(t), 1.0) for i, t in enumerate(times)))
    u_max = H * int(rng.integers(0, 3)) * max(n_u - 1, 1)
    params = ParametricParams(
        demand_table([H * int(rng.integers(0, 3)) for _ in range(count)]),
        a_y=H * int(rng.integers(0, 2)),
        u_max=u_max,
        delta_s=float(rng.choice([1.0, 2.0])),
        n_u=n_u,
    )
    grid = StateGrid((-0.25, -0.25), (1.25, 1.25), H, (0.0, 1.0, 2.0))
    ball = BallSet((H * int(rng.integers(2, 7)), H * int(rng.integers(2, 7))), H * int(rng.integers(1, 3)))
    return Micro(ParametricVehicle(params), profile, grid, ball)


def toy_profile(count: int = 25) -> DrivingProfile:
    return constant_profile(count, TOY_DT, 1.0)


@lru_cache(maxsize=None)
def toy_solve(dx: float, u_max: float = 0.07):
    params = ToyModelParams(0.10, 0.15, u_max, 1.0)
    model = ToyModel(params)
    grid = StateGrid.build(dx, params.delta_s, TOY_DP)
    field, report = solve(model, toy_profile(), grid, BallSet(TOY_CENTER, math.sqrt(2) * dx))
    return model, field, report
