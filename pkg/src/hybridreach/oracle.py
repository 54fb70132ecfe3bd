"""Ground truth for testing: closed-form autonomy of the constant-rate model
and exhaustive enumeration of admissible hybrid controls on tiny instances.

The enumerator shares nothing with the dynamic-programming code except the
model, the admissibility check and the grid geometry. It builds every
trajectory explicitly by running the dynamics backwards from each grid node.
Points that leave the computational box are clipped onto it, matching what
a clamped grid lookup sees. The lock at stage 0 is unconstrained, so a
trajectory that never switches satisfies any required final lock.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from hybridreach.admissibility import HybridControlSeq, SwitchDecision, is_admissible, lock_trajectory
from hybridreach.errors import ConfigurationError, HybridReachError
from hybridreach.levelset import UNIT_BOX, BallSet, BoxSet, StateGrid
from hybridreach.model import EnergyState, HybridSystemModel, ToyModelParams
from hybridreach.profile import DrivingProfile

BATTERY_LIMITED = "battery-limited"
FUEL_EXHAUSTING = "fuel-exhausting"

DEFAULT_BUDGET = 10**6


class BudgetExceededError(HybridReachError):
    """The enumeration would exceed its sequence budget."""


@dataclass(frozen=True)
class ToyAutonomyResult:
    regime: str
    t_star_s: float
    autonomy_s: float


def toy_autonomy(params: ToyModelParams, x0: float, y0: float) -> ToyAutonomyResult:
    """Closed-form maximal driving time of the constant-rate model.

    Running the engine flat out empties the tank after ``t* = y0 / (a_y + u_max)``.
    If the battery runs dry first even so, autonomy is ``x0 / (a_x - u_max)``;
    otherwise it is ``(x0 + u_max t*) / a_x``.

    Raises:
        ConfigurationError: ``a_x <= u_max``, where the battery need not drain.
    """
    a_x, a_y, u = params.a_x, params.a_y, params.u_max
    if a_x <= u:
        raise ConfigurationError(f"autonomy regime undefined for a_x={a_x} <= u_max={u}")
    t_star = y0 / (a_y + u)
    if x0 * (a_y + u) <= y0 * (a_x - u):
        return ToyAutonomyResult(BATTERY_LIMITED, t_star, x0 / (a_x - u))
    return ToyAutonomyResult(FUEL_EXHAUSTING, t_star, (x0 + u * t_star) / a_x)


def _schedules(count: int) -> Iterator[tuple[int, ...]]:
    nodes = range(1, count + 1)
    for r in range(count + 1):
        yield from itertools.combinations(nodes, r)


def _link_modes(schedule: tuple[int, ...], final_mode: int, count: int, model: HybridSystemModel) -> Optional[list[int]]:
    """Mode on each link given the final mode and the switch nodes, or
    ``None`` when some switch is not an available command."""
    modes = [0] * count
    q = final_mode
    switch_at = set(schedule)
    # walk backwards: crossing a switch node flips to the mode whose command led to q
    for k in range(count, 0, -1):
        if k in switch_at:
            prior = [r for r in model.modes if q in model.switch_set(r) and model.switch(r, q) == q]
            if len(prior) != 1:
                return None
            q = prior[0]
        modes[k - 1] = q
    return modes


def count_sequences(model: HybridSystemModel, profile: DrivingProfile, k: int) -> int:
    """Number of (schedule, final mode, control sequence) triples the enumeration visits at stage ``k``."""
    sizes = {q: len(model.control_set(q)) for q in model.modes}
    total = 0
    for schedule in _schedules(k):
        for q in model.modes:
            modes = _link_modes(schedule, q, k, model)
            if modes is not None:
                total += math.prod(sizes[m] for m in modes)
    return total


def enumerate_layer(
    model: HybridSystemModel,
    profile: DrivingProfile,
    grid: StateGrid,
    initial: BallSet,
    k: int,
    constraint: BoxSet = UNIT_BOX,
    *,
    filtered: bool = False,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """Brute-force value at every ``(q, p, x)`` node of stage ``k``.

    Returns an array shaped like one solver layer. With ``filtered=False``
    each trajectory scores ``max(phi(y_0), max_t phi_obs(y_t))``. With
    ``filtered=True`` trajectories that leave the constraint box are
    discarded and the rest score ``phi(y_0)``. Nodes without any admissible
    trajectory get ``inf``.

    Raises:
        BudgetExceededError: More than ``budget`` sequences would be visited.
    """
    profile = profile.truncated(k)
    if k and count_sequences(model, profile, k) > budget:
        raise BudgetExceededError(f"stage {k} needs more than {budget} control sequences")
    n_q, n_p, n0, n1 = grid.dims()
    out = np.full((n_q, n_p, n0, n1), np.inf)
    soc_end, fuel_end = grid.mesh()
    p_nodes = np.asarray(grid.p_nodes)
    phi_obs, phi = constraint.signed_distance, initial.signed_distance

    if k == 0:
        score = np.where(phi_obs(soc_end, fuel_end) <= 0, phi(soc_end, fuel_end), np.inf) if filtered else np.maximum(
            phi(soc_end, fuel_end), phi_obs(soc_end, fuel_end)
        )
        for q in model.modes:
            out[q] = score
        return out

    for schedule in _schedules(k):
        if schedule:
            final_lock = lock_trajectory(profile, [SwitchDecision(0, s) for s in schedule], model.lag)[k]
            lock_ok = p_nodes <= final_lock
        else:
            lock_ok = np.ones(len(p_nodes), dtype=bool)
        for q_final in model.modes:
            modes = _link_modes(schedule, q_final, k, model)
            if modes is None:
                continue
            switches = []
            for s in schedule:
                switches.append(SwitchDecision(modes[s] if s < k else q_final, s))
            probe = HybridControlSeq(
                tuple(float(model.control_set(m)[0]) for m in modes), tuple(switches), initial_mode=modes[0]
            )
            if not is_admissible(profile, probe, model):
                continue
            choices = [model.control_set(m) for m in modes]
            best = np.full((n0, n1), np.inf)
            for controls in itertools.product(*choices):
                soc, fuel = soc_end, fuel_end
                worst = phi_obs(soc, fuel)
                for i in range(k, 0, -1):
                    link = profile.links[i - 1]
                    soc, fuel = model.predecessor(link.source_index, soc, fuel, float(controls[i - 1]), modes[i - 1], link.time_s)
                    soc, fuel = grid.project(soc, fuel)
                    worst = np.maximum(worst, phi_obs(soc, fuel))
                if filtered:
                    score = np.where(worst <= 0, phi(soc, fuel), np.inf)
                else:
                    score = np.maximum(worst, phi(soc, fuel))
                best = np.minimum(best, score)
            for j in np.flatnonzero(lock_ok):
                out[q_final, j] = np.minimum(out[q_final, j], best)
    return out


def enumerate_value(
    model: HybridSystemModel,
    profile: DrivingProfile,
    grid: StateGrid,
    initial: BallSet,
    x: EnergyState,
    q: int,
    p: float,
    k: int,
    constraint: BoxSet = UNIT_BOX,
    *,
    filtered: bool = False,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Brute-force value at one augmented node; ``x`` and ``p`` must be grid nodes."""
    a0, a1 = grid.axes
    ia = np.flatnonzero(np.isclose(a0, x.soc, rtol=0, atol=1e-12))
    ib = np.flatnonzero(np.isclose(a1, x.fuel, rtol=0, atol=1e-12))
    if ia.size != 1 or ib.size != 1 or p not in grid.p_nodes:
        raise ConfigurationError(f"({x}, p={p}) is not a grid node")
    layer = enumerate_layer(model, profile, grid, initial, k, constraint, filtered=filtered, budget=budget)
    return float(layer[q, grid.p_nodes.index(p), ia[0], ib[0]])
