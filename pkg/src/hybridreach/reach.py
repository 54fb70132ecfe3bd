"""Reading reachable sets, autonomy and minimum-time functions off a solved
value field, plus the range and operating-cost report."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from hybridreach.dp import ValueField
from hybridreach.model import EnergyState


@dataclass(frozen=True)
class ReachableSlice:
    stage: int
    mask: np.ndarray

    @property
    def empty(self) -> bool:
        return not bool(self.mask.any())


def reachable_slice(field: ValueField, k: int) -> ReachableSlice:
    """Energy nodes where some ``(q, p)`` has ``v_k <= 0``.

    Raises:
        IndexError: ``k`` is not a computed stage.
    """
    layer = field.layer(k)
    return ReachableSlice(k, layer.min(axis=(0, 1)) <= 0)


@dataclass(frozen=True)
class Autonomy:
    """First stage with an empty slice, or ``stage=None`` if the route is completed."""

    stage: Optional[int]
    time_s: float
    distance_m: float

    @property
    def route_completed(self) -> bool:
        return self.stage is None


def autonomy(field: ValueField) -> Autonomy:
    profile = field.profile
    for k in range(field.stages + 1):
        if reachable_slice(field, k).empty:
            return Autonomy(k, profile.cumulative_time(k), profile.cumulative_distance(k))
    return Autonomy(None, profile.total_time_s, profile.total_distance_m)


@dataclass(frozen=True)
class MinTimeField:
    """``T[a, b]`` per energy node and ``T_ext[q, j, a, b]`` per augmented node.

    Unreached nodes hold ``inf``.
    """

    T: np.ndarray
    T_ext: np.ndarray


def min_time(field: ValueField) -> MinTimeField:
    reached = field.values <= 0
    stages = np.arange(field.values.shape[0], dtype=float).reshape(-1, 1, 1, 1, 1)
    t_ext = np.where(reached, stages, np.inf).min(axis=0)
    return MinTimeField(t_ext.min(axis=(0, 1)), t_ext)


@dataclass(frozen=True)
class RangeReport:
    autonomy_stage: Optional[int]
    autonomy_distance_m: float
    ev_stage: Optional[int]
    ev_range_m: float
    fuel_used_l: float
    relative_increase: Optional[float]
    re_cost_eur_per_100km: Optional[float]
    initial_soc: Optional[float] = None
    initial_fuel: Optional[float] = None

    def as_text(self) -> str:
        def stage(s):
            return "route_completed" if s is None else str(s)

        def opt(v, fmt):
            return "undefined" if v is None else fmt.format(v)

        rows = [
            ("initial_soc", opt(self.initial_soc, "{:.4f}")),
            ("initial_fuel", opt(self.initial_fuel, "{:.4f}")),
            ("autonomy_stage", stage(self.autonomy_stage)),
            ("max_range_km", f"{self.autonomy_distance_m / 1000:.3f}"),
            ("ev_stage", stage(self.ev_stage)),
            ("ev_range_km", f"{self.ev_range_m / 1000:.3f}"),
            ("relative_range_increase_pct", opt(None if self.relative_increase is None else 100 * self.relative_increase, "{:.2f}")),
            ("fuel_used_l", f"{self.fuel_used_l:.4f}"),
            ("re_cost_eur_per_100km", opt(self.re_cost_eur_per_100km, "{:.2f}")),
        ]
        return "".join(f"{key} = {value}\n" for key, value in rows)


def range_metrics(
    max_range_m: float, ev_range_m: float, fuel_used_l: float, fuel_price: float
) -> tuple[Optional[float], Optional[float]]:
    """Relative range increase and range-extender cost per 100 km of added range.

    Returns ``(relative_increase, cost)``. The increase is ``None`` when the
    EV range is zero. The cost is 0 when no fuel was burned and ``None``
    when fuel was burned without adding range.
    """
    extra_m = max_range_m - ev_range_m
    relative = extra_m / ev_range_m if ev_range_m > 0 else None
    if fuel_used_l <= 0:
        cost: Optional[float] = 0.0
    elif extra_m > 0:
        cost = fuel_price * fuel_used_l / (extra_m / 1000.0) * 100.0
    else:
        cost = None
    return relative, cost


def range_report(
    field: ValueField,
    ev_field: ValueField,
    fuel_trace,
    tank_capacity_l: float,
    fuel_price: float,
    initial: Optional[EnergyState] = None,
) -> RangeReport:
    """Assemble the range report.

    Args:
        field: Solve with the range extender available.
        ev_field: Solve of the same instance with the engine frozen off.
        fuel_trace: Normalised fuel level along the synthesised trajectory,
            in forward order; consumption is its first minus last entry.
        tank_capacity_l: Liters in a full tank.
        fuel_price: Currency per liter.
        initial: Initial energy state, echoed in the report.
    """
    full = autonomy(field)
    ev = autonomy(ev_field)
    fuel = list(fuel_trace)
    used = max(fuel[0] - fuel[-1], 0.0) * tank_capacity_l if fuel else 0.0
    relative, cost = range_metrics(full.distance_m, ev.distance_m, used, fuel_price)
    return RangeReport(
        autonomy_stage=full.stage,
        autonomy_distance_m=full.distance_m,
        ev_stage=ev.stage,
        ev_range_m=ev.distance_m,
        fuel_used_l=used,
        relative_increase=relative,
        re_cost_eur_per_100km=cost,
        initial_soc=None if initial is None else initial.soc,
        initial_fuel=None if initial is None else initial.fuel,
    )


def _write(text: str, target) -> str:
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    elif target is not None:
        target.write(text)
    return text


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else repr(float(v))


def min_time_csv(field: ValueField, target: Union[str, Path, io.TextIOBase, None] = None) -> str:
    """``x1,x2,T`` per energy node, ``inf`` where never reached."""
    T = min_time(field).T
    a0, a1 = field.grid.axes
    rows = [(_fmt(a0[i]), _fmt(a1[j]), "inf" if math.isinf(T[i, j]) else int(T[i, j])) for i in range(len(a0)) for j in range(len(a1))]
    return _write(_rows_csv(("x1", "x2", "T"), rows), target)


def reachable_csv(field: ValueField, k: int, target: Union[str, Path, io.TextIOBase, None] = None) -> str:
    """``x1,x2,reachable`` for stage ``k`` (reachable is 0 or 1)."""
    mask = reachable_slice(field, k).mask
    a0, a1 = field.grid.axes
    rows = [(_fmt(a0[i]), _fmt(a1[j]), int(mask[i, j])) for i in range(len(a0)) for j in range(len(a1))]
    return _write(_rows_csv(("x1", "x2", "reachable"), rows), target)
