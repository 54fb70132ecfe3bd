"""Switch-lock trajectories and admissibility of hybrid control sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from hybridreach.errors import ControlDomainError
from hybridreach.model import HybridSystemModel
from hybridreach.profile import DrivingProfile


@dataclass(frozen=True)
class SwitchDecision:
    """Adopt mode ``command`` at route node ``node``."""

    command: int
    node: int


@dataclass(frozen=True)
class HybridControlSeq:
    """Continuous controls plus a switch schedule, in forward physical order.

    ``u[i]`` is applied on link ``i + 1`` (from node ``i`` to node ``i + 1``).
    A switch at node ``s`` changes the mode used from link ``s + 1`` on.
    ``initial_lock`` is the lock value at node 0; ``None`` means the lag
    itself, i.e. the first switch is never blocked.
    """

    u: tuple[float, ...]
    switches: tuple[SwitchDecision, ...] = ()
    initial_mode: int = 0
    initial_lock: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", tuple(float(v) for v in self.u))
        object.__setattr__(self, "switches", tuple(self.switches))

    def modes(self) -> list[int]:
        """Mode in force on each link, ``modes()[i]`` for link ``i + 1``."""
        by_node = {s.node: s.command for s in self.switches}
        q = self.initial_mode
        out = []
        for i in range(len(self.u)):
            if i in by_node:
                q = by_node[i]
            out.append(q)
        return out


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    clause: Optional[str] = None
    node: Optional[int] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _check_nodes(nodes: Sequence[int], count: int) -> None:
    for s in nodes:
        if not 1 <= s <= count:
            raise ControlDomainError(f"switch node {s} outside 1..{count}")


def lock_trajectory(
    profile: DrivingProfile,
    switches: Sequence[SwitchDecision],
    lag: float,
    initial: Optional[float] = None,
) -> list[float]:
    """Elapsed time since the last switch at every node ``0..K``.

    Before the first switch the lock equals ``initial`` (default ``lag``)
    plus the driven time; at a switch node it is 0; afterwards it is the
    time driven since the most recent switch node.

    Raises:
        ControlDomainError: A switch node lies outside ``1..K``.
    """
    times = profile.times()
    nodes = [s.node for s in switches]
    _check_nodes(nodes, len(times))
    switch_nodes = set(nodes)
    start = lag if initial is None else initial
    last: Optional[int] = None
    out = []
    for k in range(len(times) + 1):
        if k in switch_nodes:
            last = k
        if last is None:
            value = math.fsum([start, *times[:k]])
        else:
            value = math.fsum(times[last:k])
        out.append(value)
    return out


def is_admissible(
    profile: DrivingProfile, seq: HybridControlSeq, model: HybridSystemModel
) -> AdmissibilityReport:
    """Check a control sequence against control sets, switch sets and the lag.

    The lag clause requires the time driven between consecutive switch
    nodes (links ``s_j + 1 .. s_{j+1}``) to be at least the model lag; the
    first switch must find ``initial_lock`` plus the driven time at least at
    the lag. Comparisons are exact.
    """
    count = len(profile)
    if len(seq.u) != count:
        return AdmissibilityReport(False, "length", None, f"expected {count} controls, got {len(seq.u)}")
    nodes = [s.node for s in seq.switches]
    for j, s in enumerate(nodes):
        if not 1 <= s <= count:
            return AdmissibilityReport(False, "range", s, f"switch node {s} outside 1..{count}")
        if j and s <= nodes[j - 1]:
            return AdmissibilityReport(False, "order", s, f"switch nodes not strictly increasing at {s}")
    if seq.initial_mode not in model.modes:
        return AdmissibilityReport(False, "mode", 0, f"initial mode {seq.initial_mode} not available")

    times = profile.times()
    by_node = {s.node: s for s in seq.switches}
    q = seq.initial_mode
    last_switch: Optional[int] = None
    start = model.lag if seq.initial_lock is None else seq.initial_lock
    for k in range(count + 1):
        if k in by_node:
            w = by_node[k].command
            if w not in model.switch_set(q):
                return AdmissibilityReport(False, "switch", k, f"command {w} not in W({q}) at node {k}")
            if last_switch is None:
                elapsed = math.fsum([start, *times[:k]])
            else:
                elapsed = math.fsum(times[last_switch:k])
            if not elapsed >= model.lag:
                return AdmissibilityReport(
                    False, "lag", k, f"only {elapsed} s since the previous switch at node {k}, lag is {model.lag}"
                )
            q = w
            last_switch = k
        if k < count:
            u = seq.u[k]
            if not model.admits_control(q, u):
                return AdmissibilityReport(False, "control", k, f"control {u} not in U({q}) at stage {k}")
    return AdmissibilityReport(True)
