"""Greedy per-instance placement under arrivals and departures.

Each arriving instance is routed by a single-instance shortest-path DP
over the remainder of the window, with every other column frozen; the
control loop processes slots in order, re-presents carried-over instances
as arrivals at each window start, and zeroes columns on departure without
re-optimizing survivors.

Two equivalent DP implementations: a generic one that works for any cost
model (and carries the lexicographic tie-break used in exactness tests),
and a vectorized one for the capacity/backend family, whose migration
cost is linear in the migration loads so per-candidate deltas reduce to
row/column corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationMatrix, ServiceInstance, Window
from .costs import (CostModel, DistanceContext, MmcBackendCostModel,
                    PerturbedCostModel, WindowCostEvaluator)


@dataclass
class PlacementOutcome:
    matrix: ConfigurationMatrix
    predicted_cost: float      # full window cost after the placement
    relaxations: int
    saturated: bool            # True when every route carried infinite cost


def _place_generic(instance, t, t_e, matrix, instances, model, ev, j, K):
    """Reference DP: per-candidate full-state cost evaluation."""

    def joint(t_abs: int, k: int) -> tuple[int, ...]:
        state = list(matrix.slot_state(t_abs))
        state[j] = k
        return tuple(state)

    window = matrix.window
    relax = 0
    best: dict[int, tuple] = {}
    for s in range(t, t_e + 1):
        nxt: dict[int, tuple] = {}
        for k in range(1, K + 1):
            state = joint(s, k)
            local = ev.local(s, state)
            if s == t:
                # frozen columns' state at t-1 is the migration baseline for
                # a mid-window arrival; at the window start it comes from
                # prev_config (None sentinel)
                prior = None if s == window.t0 else matrix.slot_state(s - 1)
                relax += 1
                nxt[k] = (local + ev.transition(s, prior, state), (k,))
            else:
                cur = None
                for kp, (pcost, ppath) in best.items():
                    relax += 1
                    cand = (pcost + local + ev.transition(s, joint(s - 1, kp), state),
                            ppath + (k,))
                    if cur is None or cand < cur:
                        cur = cand
                nxt[k] = cur
        best = nxt
    if t_e + 1 <= window.end:
        # frozen migrations over the next boundary still feel the load we
        # leave behind at t_e
        tail_state = matrix.slot_state(t_e + 1)
        best = {k: (c + ev.transition(t_e + 1, joint(t_e, k), tail_state), p)
                for k, (c, p) in best.items()}
    _cost, path = min(best.values())
    saturated = not math.isfinite(min(v[0] for v in best.values()))
    return path, relax, saturated


def _fast_base(model):
    """The capacity/backend model behind `model`, if that is its family."""
    if isinstance(model, MmcBackendCostModel):
        return model
    if isinstance(model, PerturbedCostModel) and isinstance(
            model.base, MmcBackendCostModel):
        return model.base
    return None


def _place_fast(instance, t, t_e, matrix, instances, model, base, ev,
                prev_config, distance, j, K):
    """Vectorized DP, exact for the capacity/backend cost family.

    Works on cost deltas relative to the frozen columns: adding load a to
    cloud l shifts u there; a k->l hop adds its own migration cost plus,
    since w is linear in the migration load, a congestion correction for
    every frozen MMC-to-MMC migration leaving k or entering l.
    """
    a = instance.local_demand
    b = instance.migration_demand
    Y = base.capacity
    b0 = base.backend

    def R_vec(y):
        out = np.empty(K + 1)
        with np.errstate(divide="ignore"):
            yy = y[1:]
            out[1:] = np.where(
                yy < Y, 1.0 / (1.0 - np.minimum(yy, Y * (1 - 1e-15)) / Y),
                np.inf)
        out[0] = 0.0
        return out

    window = matrix.window
    # base joint states (instance j's column is all zero before placement)
    states = {s: matrix.slot_state(s) for s in range(t - 1, t_e + 2)
              if window.t0 <= s <= window.end}
    loads = {s: ev.state_loads(s, st) for s, st in states.items()}
    y_at = {s: loads[s].y for s in loads}
    if t == window.t0:
        y_at[t - 1] = ev._y_before

    def frozen_z(s):
        """Frozen columns' migration loads over the boundary into slot s."""
        prev_state = None if s == window.t0 else states[s - 1]
        ld = loads[s]
        ev.transition_loads(s, prev_state, ld, states[s])
        return ld.z

    def frozen_row_col(zb):
        row = np.zeros(K + 1)
        col = np.zeros(K + 1)
        for (k, l), zv in zb.items():
            if k != b0 and l != b0:
                row[k] += zv
                col[l] += zv
        return row, col

    def shift(R_plus, R_base, weight):
        """weight * (R_plus - R_base), with inf only where it matters."""
        out = np.zeros(K + 1)
        hot = weight > 0
        diff = np.where(np.isfinite(R_plus), R_plus - R_base, np.inf)
        out[hot] = diff[hot] * weight[hot]
        return out

    # distance of each MMC to the instance's user, per slot
    def user_dist(s):
        d = np.zeros(K + 1)
        if distance is not None:
            cell = distance.user_cell_of(instance.id, s)
            if cell is not None:
                for k in range(1, K + 1):
                    if k != b0:
                        d[k] = distance.cloud_cell_distance(k, cell)
        return d

    pairD = np.zeros((K + 1, K + 1))
    if distance is not None:
        for k in range(1, K + 1):
            if k == b0:
                continue
            for l in range(1, K + 1):
                if l != b0 and l != k:
                    pairD[k, l] = distance.cloud_pair_distance(k, l)

    def local_delta(s):
        y = y_at[s]
        r = loads[s].r
        d = user_dist(s)
        out = np.empty(K + 1)
        out[0] = np.inf
        for l in range(1, K + 1):
            out[l] = (model.u(l, s, float(y[l]) + a, float(r[l] + d[l]))
                      - (model.u(l, s, float(y[l]), float(r[l]))
                         if y[l] > 0 else 0.0))
        return out

    def entry_corrections(s):
        """Frozen-migration cost shift from our landing at each cloud l."""
        zb = frozen_z(s)
        if not zb:
            return np.zeros(K + 1)
        _row, col = frozen_row_col(zb)
        return shift(R_vec(y_at[s] + a), R_vec(y_at[s]), col)

    def hop_matrix(s):
        """Added migration cost of our k->l hop over the boundary into s."""
        R1 = R_vec(y_at[s - 1] + a)       # our load sat at k during s-1
        R2 = R_vec(y_at[s] + a)           # and lands at l during s
        M = np.empty((K + 1, K + 1))
        M[0, :] = np.inf
        M[:, 0] = np.inf
        M[1:, 1:] = b * (R1[1:, None] + R2[None, 1:]) + base.h * pairD[1:, 1:]
        M[b0, 1:] = base.h_backend * b
        M[1:, b0] = base.h_backend * b
        np.fill_diagonal(M[1:, 1:], 0.0)
        zb = frozen_z(s)
        if zb:
            row, col = frozen_row_col(zb)
            out_corr = shift(R1, R_vec(y_at[s - 1]), row)
            in_corr = shift(R2, R_vec(y_at[s]), col)
            M[1:, 1:] += out_corr[1:, None] + in_corr[None, 1:]
        return M

    relax = 0
    INF = np.inf
    nu = None
    back: list[np.ndarray] = []
    for s in range(t, t_e + 1):
        ld = local_delta(s)
        if s == t:
            nu = ld.copy()
            if s > 1:
                nu[1:] += entry_corrections(s)[1:]
                k_prev = prev_config.get(instance.id, 0) if s == window.t0 else 0
                if k_prev:
                    # carried instance: its load already sits in the
                    # pre-window profile at k_prev, so no +a on that side
                    Rp = (base.R(float(y_at[s - 1][k_prev]))
                          if k_prev != b0 else 0.0)
                    R2 = R_vec(y_at[s] + a)
                    hop = np.empty(K + 1)
                    hop[0] = INF
                    for l in range(1, K + 1):
                        if l == k_prev:
                            hop[l] = 0.0
                        elif k_prev == b0 or l == b0:
                            hop[l] = base.h_backend * b
                        else:
                            hop[l] = (b * (Rp + R2[l])
                                      + base.h * pairD[k_prev, l])
                    nu[1:] += hop[1:]
            nu[0] = INF
            relax += K
        else:
            M = hop_matrix(s)
            cand = nu[:, None] + M
            choice = np.argmin(cand[1:, 1:], axis=0) + 1
            nu2 = cand[choice, np.arange(1, K + 1)] + ld[1:]
            nu = np.concatenate(([INF], nu2))
            back.append(choice)
            relax += K * K
    # leaving a congested cloud after the column ends still shifts frozen
    # migrations over the next boundary
    if t_e + 1 <= window.end and t_e + 1 > 1:
        s = t_e + 1
        zb = frozen_z(s)
        if zb:
            row, _col = frozen_row_col(zb)
            nu = nu + shift(R_vec(y_at[s - 1] + a), R_vec(y_at[s - 1]), row)

    end = int(np.argmin(nu[1:])) + 1
    path = [end]
    for choice in reversed(back):
        path.append(int(choice[path[-1] - 1]))
    path.reverse()
    saturated = not math.isfinite(float(nu[end]))
    return tuple(path), relax, saturated


def place_on_arrival(instance: ServiceInstance, t: int,
                     matrix: ConfigurationMatrix,
                     instances: list[ServiceInstance],
                     model: CostModel,
                     prev_config: dict[int, int] | None = None,
                     distance: DistanceContext | None = None,
                     want_cost: bool = True) -> PlacementOutcome:
    """Fill one instance's column over [t, t_e] optimally, others frozen.

    t_e = min(t + lifetime - 1, window end). The DP state per slot is the
    instance's cloud id; transition costs are evaluated on the full joint
    state (frozen columns included), so congestion effects are exact.
    Ties resolve to the smallest cloud-id path.
    """
    window = matrix.window
    if not (window.t0 <= t <= window.end):
        raise ValueError("arrival slot outside window")
    instances = sorted(instances, key=lambda i: i.id)
    if instance.id not in matrix._col:
        raise ValueError("matrix has no column for the arriving instance")
    t_e = int(min(t + instance.max_lifetime - 1, window.end))
    K = model.K
    prev_config = dict(prev_config or {})
    ev = WindowCostEvaluator(window, instances, model, prev_config, distance)
    j = next(idx for idx, i in enumerate(instances) if i.id == instance.id)

    base = _fast_base(model)
    if base is not None:
        path, relax, saturated = _place_fast(
            instance, t, t_e, matrix, instances, model, base, ev,
            prev_config, distance, j, K)
    else:
        path, relax, saturated = _place_generic(
            instance, t, t_e, matrix, instances, model, ev, j, K)

    out = matrix.copy()
    for q, s in enumerate(range(t, t_e + 1)):
        out.set(instance.id, s, path[q])
    total = math.nan
    if want_cost:
        states = [out.slot_state(s) for s in window.slots]
        total = ev.path_cost(states)
    return PlacementOutcome(matrix=out, predicted_cost=total,
                            relaxations=relax, saturated=saturated)


def handle_departure(instance_id: int, t: int,
                     matrix: ConfigurationMatrix) -> ConfigurationMatrix:
    """Zero an instance's column strictly after slot t (departure at end of t)."""
    out = matrix.copy()
    if instance_id not in out._col:
        import logging
        logging.getLogger(__name__).warning(
            "departure for unknown instance %d ignored", instance_id)
        return out
    out.zero_after(instance_id, t)
    return out


@dataclass
class OnlineRun:
    actual_by_slot: dict[int, float]
    placements: dict[int, dict[int, int]]   # slot -> {instance id -> cloud}
    migrations_by_slot: dict[int, int]
    relaxations_per_arrival: list[int]
    saturated_events: int = 0

    @property
    def total_cost(self) -> float:
        return sum(self.actual_by_slot.values())


def run_online(horizon: int, window_size: int,
               instances: list[ServiceInstance], oracle,
               distance: DistanceContext | None = None,
               lifetime_override=None) -> OnlineRun:
    """Full-horizon online control loop.

    instances carry their true arrival/departure slots; the loop only
    reveals them at those slots. Carried-over instances re-enter as
    arrivals at each window start (keeping their prior placement as the
    migration baseline). lifetime_override, when given, maps (instance, t)
    to the lifetime the planner should assume (policy D passes the true
    remaining stay; the default uses the declared lifetime's remainder).
    """
    arrivals_at: dict[int, list[ServiceInstance]] = {}
    for inst in sorted(instances, key=lambda i: i.id):
        arrivals_at.setdefault(inst.arrival_slot, []).append(inst)

    run = OnlineRun({}, {}, {}, [])
    prev_config: dict[int, int] = {}
    running: dict[int, ServiceInstance] = {}
    t0 = 1
    while t0 <= horizon:
        window = Window(t0, min(window_size, horizon - t0 + 1))
        model = oracle.predicted_model(t0, window)
        # everything that may appear in this window gets a column up front
        pending = [i for ts in range(t0, window.end + 1)
                   for i in arrivals_at.get(ts, [])]
        window_instances = sorted(list(running.values()) + pending,
                                  key=lambda i: i.id)
        matrix = ConfigurationMatrix(window, [i.id for i in window_instances])
        actual_ev = WindowCostEvaluator(window, window_instances, oracle.actual,
                                        prev_config, distance)
        prev_state = None
        for t in window.slots:
            todo = []
            if t == t0:
                todo.extend(running.values())       # carried-over re-arrivals
            todo.extend(arrivals_at.get(t, []))
            for inst in sorted(todo, key=lambda i: i.id):
                if lifetime_override is not None:
                    life = lifetime_override(inst, t)
                elif math.isfinite(inst.max_lifetime):
                    life = max(1, int(inst.planned_end) - t + 1)
                else:
                    life = math.inf
                planner_view = ServiceInstance(
                    id=inst.id, arrival_slot=t,
                    local_demand=inst.local_demand,
                    migration_demand=inst.migration_demand,
                    max_lifetime=life, user_id=inst.user_id)
                outcome = place_on_arrival(planner_view, t, matrix,
                                           window_instances, model,
                                           prev_config, distance,
                                           want_cost=False)
                matrix = outcome.matrix
                run.relaxations_per_arrival.append(outcome.relaxations)
                if outcome.saturated:
                    run.saturated_events += 1
                running[inst.id] = inst

            state = matrix.slot_state(t)
            run.actual_by_slot[t] = (actual_ev.local(t, state)
                                     + actual_ev.transition(t, prev_state, state))
            placed = {i.id: matrix.get(i.id, t) for i in window_instances
                      if matrix.get(i.id, t) != 0}
            run.placements[t] = placed
            before = prev_config if prev_state is None else run.placements.get(t - 1, {})
            run.migrations_by_slot[t] = sum(
                1 for iid, k in placed.items()
                if before.get(iid, 0) not in (0, k))
            prev_state = state

            # departures take effect at the end of the slot; a declared
            # lifetime running out departs the instance just the same
            for iid in [iid for iid, inst in running.items()
                        if inst.actual_departure_slot == t
                        or inst.planned_end == t]:
                matrix = handle_departure(iid, t, matrix)
                del running[iid]

        last = window.end
        prev_config = {iid: matrix.get(iid, last) for iid in running
                       if matrix.get(iid, last) != 0}
        t0 += window.T
    return run
