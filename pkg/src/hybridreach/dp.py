"""Backward dynamic programming for the penalised reachability value.

Layer ``k`` of the value field holds ``v_k(x, q, p)``: the best achievable
``max(phi(y_0), max_t phi_obs(y_t))`` over admissible trajectories that end
at energy state ``x`` in mode ``q`` after ``k`` links, having driven at
least ``p`` seconds since their last switch. A node is reachable from the
initial set without leaving the admissible box iff its value is ``<= 0``.

Recursion, per stage ``k`` with link duration ``dt``:

* no switch at node ``k``:
  ``v_k(x, q, p) = min_u max(v_{k-1}(pred(x, u, q), q, max(p - dt, 0)), phi_obs(x))``
* ``p = 0`` additionally admits a switch at node ``k``:
  ``v_k(x, q, 0) = min(above, (M v_k)(x, q))`` with
  ``(M v_k)(x, q) = min_{w in W(q), p' >= lag} v_k(x, g(w, q), p')``

Values are interpolated bilinearly in ``x`` and linearly in ``p``. Because
``v`` is non-decreasing in ``p``, lock interpolation stays between two valid
bounds even when the lock step and the link durations are incommensurate.
"""

from __future__ import annotations

import csv
import io
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from hybridreach.errors import ConfigurationError
from hybridreach.levelset import Bilinear, BallSet, BoxSet, StateGrid, UNIT_BOX, lock_weights
from hybridreach.model import MODES, HybridSystemModel
from hybridreach.profile import DrivingProfile

# finite stand-in for an empty infimum (no admissible switch, frozen mode)
INFEASIBLE = 1.0e6

SignFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

_MAGIC = b"HRVF"


@dataclass
class SolveReport:
    stages_computed: int
    wall_time_s: float
    grid_dims: tuple[int, ...]
    first_empty_stage: Optional[int] = None

    def as_text(self) -> str:
        lines = [
            f"stages_computed = {self.stages_computed}",
            f"grid_dims = {'x'.join(str(d) for d in self.grid_dims)}",
            f"first_empty_stage = {'none' if self.first_empty_stage is None else self.first_empty_stage}",
            f"wall_time_s = {self.wall_time_s:.3f}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class ValueField:
    """Solved value function, one layer per stage.

    ``values[k, q, j, a, b]`` is ``v_k`` at mode ``q``, lock node ``j`` and
    energy node ``(a, b)``.
    """

    values: np.ndarray
    grid: StateGrid
    profile: DrivingProfile
    lag: float
    modes: tuple[int, ...] = MODES
    obstacle: np.ndarray = field(default=None, repr=False)
    constraint: BoxSet = UNIT_BOX
    initial: Optional[BallSet] = None

    @property
    def stages(self) -> int:
        return self.values.shape[0] - 1

    def layer(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.stages:
            raise IndexError(f"stage {k} outside 0..{self.stages}")
        return self.values[k]

    def lookup(self, k: int, q: int, soc, fuel, p: float) -> np.ndarray:
        """Interpolate ``v_k(., q, p)`` at arbitrary energy states."""
        i0, i1, w = lock_weights(self.grid.p_nodes, p)
        layer = self.values[k, q]
        plane = layer[i0] if w == 0.0 else (1 - w) * layer[i0] + w * layer[i1]
        return Bilinear(self.grid, np.asarray(soc, dtype=float), np.asarray(fuel, dtype=float))(plane)

    def dump(self, path: Union[str, Path]) -> None:
        """Binary dump: magic, ndim, dims (uint64), then little-endian float64 data."""
        arr = np.ascontiguousarray(self.values, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def layer_csv(field_: ValueField, k: int, target: Union[str, Path, None] = None) -> str:
    """Stage ``k`` as ``x1,x2,q,p,v`` rows (modes outer, then lock, then energy nodes)."""
    layer = field_.layer(k)
    a0, a1 = field_.grid.axes
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("x1", "x2", "q", "p", "v"))
    for q in range(layer.shape[0]):
        for j, p in enumerate(field_.grid.p_nodes):
            for a, x1 in enumerate(a0):
                for b, x2 in enumerate(a1):
                    writer.writerow((repr(float(x1)), repr(float(x2)), q, repr(p), repr(float(layer[q, j, a, b]))))
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text, encoding="utf-8")
    return text


def load_values(path: Union[str, Path]) -> np.ndarray:
    """Read the array written by :meth:`ValueField.dump`."""
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ConfigurationError(f"{path}: not a value-field dump")
    (ndim,) = struct.unpack_from("<I", data, 4)
    shape = struct.unpack_from(f"<{ndim}Q", data, 8)
    offset = 8 + 8 * ndim
    return np.frombuffer(data, dtype="<f8", offset=offset).reshape(shape).copy()


def init_layer(grid: StateGrid, phi: SignFunction, phi_obs: SignFunction, modes=MODES) -> np.ndarray:
    """Layer 0: ``max(phi, phi_obs)`` at every node, the same for all ``q`` and ``p``.

    Modes the model cannot occupy get :data:`INFEASIBLE`.
    """
    soc, fuel = grid.mesh()
    base = np.maximum(phi(soc, fuel), phi_obs(soc, fuel))
    n_q, n_p, n0, n1 = grid.dims()
    layer = np.full((n_q, n_p, n0, n1), INFEASIBLE)
    for q in modes:
        layer[q] = base
    return layer


def switch_operator(layer: np.ndarray, model: HybridSystemModel, grid: StateGrid, q: int) -> np.ndarray:
    """``min_{w in W(q), p' >= lag} v(x, g(w, q), p')`` over the whole energy grid."""
    targets = grid.switch_nodes(model.lag)
    if targets.size == 0:
        raise ConfigurationError(f"lock grid {grid.p_nodes} has no node >= lag {model.lag}")
    best = np.full(layer.shape[2:], INFEASIBLE)
    for w in model.switch_set(q):
        q_new = model.switch(q, w)
        if q_new not in model.modes:
            continue
        best = np.minimum(best, layer[q_new, targets].min(axis=0))
    return best


def _control_candidate(prev, model, grid, soc, fuel, k_model, u, q, dt, lookups):
    pred_soc, pred_fuel = model.predecessor(k_model, soc, fuel, u, q, dt)
    interp = Bilinear(grid, pred_soc, pred_fuel)
    return [interp(prev[q, i0] if w == 0.0 else (1 - w) * prev[q, i0] + w * prev[q, i1]) for i0, i1, w in lookups]


def backward_step(
    prev: np.ndarray,
    k_model: int,
    dt: float,
    model: HybridSystemModel,
    grid: StateGrid,
    obstacle: np.ndarray,
    executor: Optional[ThreadPoolExecutor] = None,
) -> np.ndarray:
    """Compute layer ``k`` from layer ``k - 1``.

    ``k_model`` is the route link index handed to the model's dynamics;
    ``obstacle`` is ``phi_obs`` sampled on the energy grid.
    """
    soc, fuel = grid.mesh()
    lookups = [lock_weights(grid.p_nodes, max(p - dt, 0.0)) for p in grid.p_nodes]
    new = np.full_like(prev, INFEASIBLE)
    for q in model.modes:
        controls = [float(u) for u in model.control_set(q)]

        def run(u, q=q):
            return _control_candidate(prev, model, grid, soc, fuel, k_model, u, q, dt, lookups)

        results = executor.map(run, controls) if executor is not None else map(run, controls)
        best = None
        for cand in results:
            best = cand if best is None else [np.minimum(a, b) for a, b in zip(best, cand)]
        for j, vals in enumerate(best):
            new[q, j] = np.maximum(vals, obstacle)
    # switching reads the p >= lag rows of this same layer, which never depend on p = 0
    for q in model.modes:
        new[q, 0] = np.minimum(new[q, 0], switch_operator(new, model, grid, q))
    return new


def solve(
    model: HybridSystemModel,
    profile: DrivingProfile,
    grid: StateGrid,
    initial: BallSet,
    constraint: BoxSet = UNIT_BOX,
    *,
    stages: Optional[int] = None,
    threads: int = 1,
) -> tuple[ValueField, SolveReport]:
    """Compute layers ``0..K`` for the profile's links.

    Args:
        model: Hybrid dynamics.
        profile: Links whose durations set the stage time steps.
        grid: Product grid over energy state, mode and lock.
        initial: Initial set, encoded by its signed distance.
        constraint: Admissible box.
        stages: Compute only the first ``stages`` links.
        threads: Worker threads used across control samples.
    """
    if grid.switch_nodes(model.lag).size == 0:
        raise ConfigurationError(f"lock grid {grid.p_nodes} has no node >= lag {model.lag}")
    model.check_profile(profile)
    if stages is not None:
        profile = profile.truncated(stages)
    start = time.perf_counter()
    soc, fuel = grid.mesh()
    obstacle = constraint.signed_distance(soc, fuel)
    layers = [init_layer(grid, initial.signed_distance, constraint.signed_distance, model.modes)]
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for link in profile.links:
            layers.append(backward_step(layers[-1], link.source_index, link.time_s, model, grid, obstacle, executor))
    finally:
        if executor is not None:
            executor.shutdown()
    values = np.stack(layers)
    field_ = ValueField(values, grid, profile, model.lag, tuple(model.modes), obstacle, constraint, initial)
    empty = [k for k in range(values.shape[0]) if not (values[k] <= 0).any()]
    report = SolveReport(
        stages_computed=len(profile),
        wall_time_s=time.perf_counter() - start,
        grid_dims=values.shape,
        first_empty_stage=empty[0] if empty else None,
    )
    return field_, report
