"""Controller reconstruction from a solved value field and forward replay."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from hybridreach.admissibility import HybridControlSeq, SwitchDecision, is_admissible, lock_trajectory
from hybridreach.dp import ValueField
from hybridreach.errors import InadmissibleControlError, NotReachableError, ReconstructionError, ValidationError
from hybridreach.levelset import UNIT_BOX, BoxSet
from hybridreach.model import EnergyState, HybridSystemModel
from hybridreach.profile import DrivingProfile
from hybridreach.reach import autonomy


_TIE = 1e-9


@dataclass(frozen=True)
class HybridPoint:
    """Augmented state ``(x, q, p)`` at route node ``stage``."""

    stage: int
    state: EnergyState
    q: int
    p: float


@dataclass(frozen=True)
class HybridTrajectory:
    """A forward trajectory over nodes ``0..K``.

    ``modes[k]`` is the mode in force when leaving node ``k`` (after any
    switch there; for the last node, the final mode). ``locks`` is the
    lock trace of the switch schedule and ``controls[k]`` the control on
    link ``k + 1``.
    """

    profile: DrivingProfile
    states: tuple[EnergyState, ...]
    modes: tuple[int, ...]
    locks: tuple[float, ...]
    controls: tuple[float, ...]
    switches: tuple[SwitchDecision, ...]
    in_constraint: tuple[bool, ...]

    @property
    def stages(self) -> int:
        return len(self.states) - 1

    def times(self) -> list[float]:
        return [self.profile.cumulative_time(k) for k in range(len(self.states))]

    def fuel_trace(self) -> list[float]:
        return [s.fuel for s in self.states]

    def to_csv(self, target: Union[str, Path, io.TextIOBase, None] = None) -> str:
        """``stage,time_s,soc,fuel,q,p,u,switched``; ``u`` is blank on the last row."""
        switched = {s.node for s in self.switches}
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("stage", "time_s", "soc", "fuel", "q", "p", "u", "switched"))
        for k, (t, y) in enumerate(zip(self.times(), self.states)):
            u = repr(self.controls[k]) if k < len(self.controls) else ""
            writer.writerow((k, repr(t), repr(y.soc), repr(y.fuel), self.modes[k], repr(self.locks[k]), u, int(k in switched)))
        text = buf.getvalue()
        if isinstance(target, (str, Path)):
            Path(target).write_text(text, encoding="utf-8")
        elif target is not None:
            target.write(text)
        return text


def _node_modes(seq: HybridControlSeq) -> tuple[int, ...]:
    link_modes = seq.modes()
    last = link_modes[-1] if link_modes else seq.initial_mode
    final = {s.node: s.command for s in seq.switches}.get(len(seq.u), last)
    return tuple(link_modes) + (final,)


def forward_simulate(
    controller: HybridControlSeq,
    model: HybridSystemModel,
    profile: DrivingProfile,
    x0: EnergyState,
    q0: Optional[int] = None,
    constraint: BoxSet = UNIT_BOX,
) -> HybridTrajectory:
    """Replay ``controller`` over the first ``len(controller.u)`` links of ``profile``.

    Raises:
        InadmissibleControlError: The controller fails :func:`is_admissible`.
        ValidationError: ``q0`` contradicts the controller's initial mode.
    """
    if q0 is not None and q0 != controller.initial_mode:
        raise ValidationError(f"initial mode {q0} differs from the controller's {controller.initial_mode}")
    profile = profile.truncated(len(controller.u))
    report = is_admissible(profile, controller, model)
    if not report:
        raise InadmissibleControlError(report)
    modes = _node_modes(controller)
    states = [x0]
    for link, u, q in zip(profile.links, controller.u, modes):
        states.append(model.step(link.source_index, states[-1], u, q, link.time_s))
    locks = lock_trajectory(profile, controller.switches, model.lag, controller.initial_lock)
    flags = tuple(bool(constraint.contains(y.soc, y.fuel)) for y in states)
    return HybridTrajectory(profile, tuple(states), modes, tuple(locks), controller.u, controller.switches, flags)


def default_target(field: ValueField) -> HybridPoint:
    """Node of smallest value on the last stage whose reachable slice is non-empty.

    Among nodes within round-off of the minimum, the one with the most fuel
    left wins; remaining ties go to the first node in array order.

    Raises:
        NotReachableError: Even stage 0 is empty.
    """
    aut = autonomy(field)
    stage = field.stages if aut.stage is None else aut.stage - 1
    if stage < 0:
        raise NotReachableError("no grid node is reachable, not even at stage 0")
    layer = field.layer(stage)
    # near-ties are common on the box faces; keep the one that burned the least fuel
    ties = np.argwhere(layer <= min(layer.min() + _TIE, 0.0))
    q, j, a, b = min(ties.tolist(), key=lambda idx: -idx[3])
    a0, a1 = field.grid.axes
    return HybridPoint(stage, EnergyState(float(a0[a]), float(a1[b])), int(q), field.grid.p_nodes[j])


def synthesize(
    field: ValueField,
    model: HybridSystemModel,
    target: Optional[HybridPoint] = None,
    *,
    tol: Optional[float] = None,
) -> tuple[HybridControlSeq, HybridTrajectory]:
    """Walk the value field backwards from ``target`` to stage 0.

    At each stage the walk keeps the lock it still owes: the trajectory
    must have driven at least that long since its last switch. Only when
    nothing is owed may it switch, landing on a lock node at or above the
    lag; otherwise it picks the control minimising the one-step value (ties
    go to the smallest control).

    Args:
        field: Solved value field.
        model: The model the field was solved with.
        target: End point; defaults to :func:`default_target`.
        tol: Largest value a chosen successor may have before the walk is
            declared lost to interpolation drift. Defaults to one grid step.

    Raises:
        NotReachableError: ``v`` at the target is positive.
        ReconstructionError: Every successor at some stage exceeds ``tol``.
    """
    target = default_target(field) if target is None else target
    grid = field.grid
    tol = grid.dx if tol is None else tol
    if not 0 <= target.stage <= field.stages:
        raise NotReachableError(f"target stage {target.stage} outside 0..{field.stages}")
    soc, fuel, q = target.state.soc, target.state.fuel, target.q
    if q not in model.modes or not float(field.lookup(target.stage, q, soc, fuel, target.p)) <= 0:
        raise NotReachableError(f"target {target} is not reachable")

    obstacle = field.constraint.signed_distance
    switch_locks = [grid.p_nodes[j] for j in grid.switch_nodes(model.lag)]
    owed, since = target.p, []
    controls: list[float] = []
    switches: list[SwitchDecision] = []
    k = target.stage
    while k > 0:
        link = field.profile.links[k - 1]
        dt = link.time_s
        floor = float(obstacle(soc, fuel))
        remaining = max(owed - math.fsum(since + [dt]), 0.0)
        best, choice = math.inf, None
        for u in model.control_set(q):
            ps, pf = model.predecessor(link.source_index, soc, fuel, float(u), q, dt)
            val = max(float(field.lookup(k - 1, q, ps, pf, remaining)), floor)
            if val < best:
                best, choice = val, ("u", float(u), float(ps), float(pf))
        if max(owed - math.fsum(since), 0.0) == 0.0:
            for w in model.switch_set(q):
                q_prev = model.switch(q, w)
                if q_prev not in model.modes:
                    continue
                for p_sw in switch_locks:
                    val = float(field.lookup(k, q_prev, soc, fuel, p_sw))
                    if val < best:
                        best, choice = val, ("w", q_prev, p_sw)
        if choice is None or best > tol:
            raise ReconstructionError(k, best)
        if choice[0] == "w":
            switches.append(SwitchDecision(q, k))
            q, owed, since = choice[1], choice[2], []
            continue
        controls.append(choice[1])
        soc, fuel = choice[2], choice[3]
        since.append(dt)
        k -= 1

    controller = HybridControlSeq(tuple(reversed(controls)), tuple(reversed(switches)), initial_mode=q)
    x0 = EnergyState(soc, fuel)
    trajectory = forward_simulate(controller, model, field.profile, x0, q, field.constraint)
    drift = abs(trajectory.states[-1].soc - target.state.soc) + abs(trajectory.states[-1].fuel - target.state.fuel)
    if drift > tol:
        raise ReconstructionError(target.stage, drift)
    return controller, trajectory
