"""Time integration from ``t = 0`` to ``t_end`` with diagnostics at a fixed cadence."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .scheme import Discretization, FlowState, PositivityError, stable_dt, step


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: List[FlowState] = field(default_factory=list)
    final: Optional[FlowState] = None
    steps: int = 0
    truncated: bool = False
    wall_seconds: float = 0.0
    observers: Sequence[Any] = ()
    failure: Optional[Exception] = None

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def run(disc: Discretization, state0: FlowState, t_end: float, record_interval: Optional[float] = None,
        observers: Sequence[Any] = (), max_wall_seconds: Optional[float] = None,
        snapshot_interval: Optional[float] = None, max_steps: Optional[int] = None) -> Trajectory:
    """Integrate and record.

    Steps are shortened so that every record time ``k * record_interval`` is
    hit exactly. Observers may define ``on_step(info, disc)`` and
    ``on_record(state, disc)``. A positivity failure is re-raised with the
    partial trajectory attached as ``exc.trajectory``.
    """
    from ..diagnostics import make_record

    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    if record_interval is None:
        record_interval = t_end / 200.0 if t_end > 0 else 1.0
    if not record_interval > 0:
        raise ValueError("record_interval must be positive")
    n_rec = int(round(t_end / record_interval)) if t_end > 0 else 0
    if t_end > 0 and abs(n_rec * record_interval - t_end) > 1e-9 * t_end:
        n_rec = int(np.ceil(t_end / record_interval - 1e-9))
    record_times = [min(k * record_interval, t_end) for k in range(1, n_rec + 1)]
    if record_times:
        record_times[-1] = t_end

    snap_times: List[float] = []
    if snapshot_interval:
        k = 1
        while k * snapshot_interval < t_end * (1 - 1e-12):
            snap_times.append(k * snapshot_interval)
            k += 1
    traj = Trajectory(observers=observers)
    t0 = time.perf_counter()
    state = state0.copy()
    cum_in = cum_out = 0.0
    last_dt = 0.0

    def emit(s):
        traj.records.append(make_record(s, disc, last_dt, cum_in, cum_out))
        for ob in observers:
            if hasattr(ob, "on_record"):
                ob.on_record(s, disc)

    emit(state)
    if snapshot_interval:
        traj.snapshots.append(state.copy())
    si = 0
    try:
        for t_target in record_times:
            while state.t < t_target * (1 - 1e-14) and t_target - state.t > 1e-14:
                dt = stable_dt(state, disc)
                remaining = t_target - state.t
                if dt >= remaining:
                    dt = remaining
                elif dt > 0.5 * remaining:
                    # split the remainder evenly instead of leaving a sliver step
                    dt = 0.5 * remaining
                state, info = step(state, disc, dt)
                cum_in += info.flux_in
                cum_out += info.flux_out
                last_dt = dt
                traj.steps += 1
                for ob in observers:
                    if hasattr(ob, "on_step"):
                        ob.on_step(info, disc)
                if si < len(snap_times) and state.t >= snap_times[si] - 1e-12:
                    traj.snapshots.append(state.copy())
                    si += 1
                if max_wall_seconds is not None and time.perf_counter() - t0 > max_wall_seconds:
                    traj.truncated = True
                    break
                if max_steps is not None and traj.steps >= max_steps:
                    traj.truncated = True
                    break
            if traj.truncated:
                break
            state.t = t_target
            emit(state)
    except PositivityError as exc:
        traj.final = state
        traj.failure = exc
        traj.wall_seconds = time.perf_counter() - t0
        exc.trajectory = traj
        raise
    traj.final = state
    if snapshot_interval and (not traj.snapshots or traj.snapshots[-1].t < state.t):
        traj.snapshots.append(state.copy())
    traj.wall_seconds = time.perf_counter() - t0
    return traj


def run_steps(disc: Discretization, state0: FlowState, n_steps: int, dt: Optional[float] = None):
    """Advance a fixed number of steps; returns the state and the summed boundary fluxes."""
    state = state0.copy()
    cum_in = cum_out = 0.0
    for _ in range(n_steps):
        h = stable_dt(state, disc) if dt is None else dt
        state, info = step(state, disc, h)
        cum_in += info.flux_in
        cum_out += info.flux_out
    return state, cum_in, cum_out
