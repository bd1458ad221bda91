"""The cash-flow iteration: init, push steps, estimator, and run loop.

Each node carries signed cash; at every step the scheduled nodes push
their entire cash along their out-edges proportionally to the transition
probabilities.  The history vector accumulates everything each node has
ever moved, and its normalization estimates the stationary distribution.
Total cash stays zero and the total absolute cash never increases, which
the engine tracks and the test suite asserts on every run.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateHistoryError, NoConvergenceError, ZeroTotalHistoryError
from .matrix import check_distribution

GUARD_UNIT = 1e-12
MAX_GUARD_RETRIES = 3


@dataclass
class SolverState:
    """Mutable per-run state of the cash-flow iteration."""

    C: np.ndarray
    H: np.ndarray
    t: int
    cum_cost: float
    scan_cost: float
    total_history: float
    initial_mass: float
    cash_l1: float
    updates: int = 0
    max_l1_increase: float = 0.0

    @property
    def n(self):
        return self.C.size

    def guard_threshold(self):
        return GUARD_UNIT * self.t * self.initial_mass


@dataclass
class RunTrace:
    """Sampled (step, cumulative updates, costs, residual, error) records."""

    columns = ("step", "updates", "cum_cost", "scan_cost", "cash_l1", "err_l1")
    rows: list = field(default_factory=list)

    def record(self, state, err=None):
        self.rows.append(
            (state.t, state.updates, state.cum_cost, state.scan_cost, state.cash_l1, err)
        )

    def column(self, name):
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows if r[j] is not None])

    def to_csv(self, fh):
        close = False
        if isinstance(fh, str):
            fh = open(fh, "w")
            close = True
        try:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                cells = [f"{v:.17g}" if v is not None else "" for v in row]
                fh.write(",".join(cells) + "\n")
        finally:
            if close:
                fh.close()

    def to_csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


@dataclass
class RunResult:
    pi_hat: np.ndarray
    state: SolverState
    trace: RunTrace
    converged: bool
    restarts: int = 0
    guard_events: list = field(default_factory=list)


def init(P, M0=None):
    """Start a run: every node pushes its share of the seed distribution.

    Leaves the state at step 1 with C = M0 P - M0 and H = M0.  The step
    is charged the volume of M0's support.
    """
    n = P.n
    if M0 is None:
        M0 = np.full(n, 1.0 / n)
    M0 = check_distribution(M0)
    if M0.size != n:
        raise ValueError(f"M0 has length {M0.size}, chain has {n} states")
    C = P.mul_left(M0) - M0
    support = M0 > 0
    return SolverState(
        C=C,
        H=M0.copy(),
        t=1,
        cum_cost=float(P.out_degree[support].sum()),
        scan_cost=0.0,
        total_history=float(M0.sum()),
        initial_mass=float(np.abs(M0).sum()),
        cash_l1=float(np.abs(C).sum()),
        updates=int(support.sum()),
    )


def step(state, G, P):
    """Push the full cash of every node in G; no-op entries are free."""
    G = np.asarray(G, dtype=np.int64)
    old_l1 = state.cash_l1
    if G.size == state.n:
        # Full sweep: C - M + M P collapses to one vector-matrix product.
        moved = state.C
        movers = int(np.count_nonzero(moved))
        state.H += moved
        state.total_history += float(moved.sum())
        state.C = P.mul_left(moved)
        state.cum_cost += float(P.out_degree[moved != 0].sum())
        state.updates += movers
    elif G.size:
        amounts = state.C[G]
        live = amounts != 0.0
        movers_idx = G[live]
        amounts = amounts[live]
        if movers_idx.size:
            state.H[movers_idx] += amounts
            state.total_history += float(amounts.sum())
            state.C[movers_idx] = 0.0
            P.scatter_add(state.C, movers_idx, amounts)
            state.cum_cost += float(P.out_degree[movers_idx].sum())
            state.updates += int(movers_idx.size)
    state.t += 1
    state.cash_l1 = float(np.abs(state.C).sum())
    state.max_l1_increase = max(state.max_l1_increase, state.cash_l1 - old_l1)
    return state


def estimate(state, guard=None):
    """Normalized history H / (H 1); raises when the total history vanishes."""
    total = float(state.H.sum())
    threshold = state.guard_threshold() if guard is None else guard
    if abs(total) <= threshold:
        raise ZeroTotalHistoryError(f"|H 1| = {abs(total)!r} at step {state.t}")
    return state.H / total


GUARD_CONTINUE = "continue"
GUARD_RESTART = "restart"
GUARD_PERTURB = "perturb"


def guard_total_history(state, schedule):
    """Decide how to react to a (near-)zero total history.

    Stochastic schedules restart with the next seed; deterministic ones
    rotate their node order by one and restart.  Healthy states continue.
    """
    if abs(state.total_history) > state.guard_threshold():
        return GUARD_CONTINUE
    return GUARD_RESTART if schedule.stochastic else GUARD_PERTURB


def run(
    P,
    schedule,
    M0=None,
    *,
    eps=1e-10,
    criterion="cash",
    max_steps=1_000_000,
    trace_stride=None,
    oracle=None,
    max_retries=MAX_GUARD_RETRIES,
):
    """Iterate until the stopping criterion, guarding degenerate histories.

    criterion "cash" stops at ||C_t||_1 < eps (the default: the residual
    is monotone); "pihat" stops at ||pi_t - pi_(t-1)||_1 < eps, compared
    only across steps that moved cash (a skipped or zero-cash step cannot
    change the estimate, so it must not trigger the stop), or when the
    cash vanishes exactly.  A trace row is recorded every
    ``trace_stride`` node updates (default: one sweep-equivalent, n
    updates).

    Raises NoConvergenceError at max_steps and DegenerateHistoryError when
    the total-history guard exhausts its retries; both carry the partial
    result as ``.result``.
    """
    if criterion not in ("cash", "pihat"):
        raise ValueError(f"unknown criterion {criterion!r}")
    n = P.n
    stride = n if trace_stride is None else int(trace_stride)
    schedule.bind(P)
    schedule.restart()

    restarts = 0
    guard_events = []
    while True:
        state = init(P, M0)
        trace = RunTrace()
        last_recorded = 0

        def record(force=False):
            nonlocal last_recorded
            if force or state.updates - last_recorded >= stride:
                err = None
                if oracle is not None:
                    try:
                        err = float(np.abs(estimate(state) - oracle).sum())
                    except ZeroTotalHistoryError:
                        err = None
                trace.record(state, err)
                last_recorded = state.updates

        record(force=True)
        prev_pi = None
        degenerate = False
        while True:
            action = guard_total_history(state, schedule)
            if action != GUARD_CONTINUE:
                guard_events.append((state.t, action))
                degenerate = True
                break
            if criterion == "cash":
                if state.cash_l1 < eps:
                    record(force=True)
                    return RunResult(estimate(state), state, trace, True, restarts, guard_events)
            else:
                if state.cash_l1 == 0.0:
                    record(force=True)
                    return RunResult(estimate(state), state, trace, True, restarts, guard_events)
                pi = estimate(state)
                if prev_pi is not None and float(np.abs(pi - prev_pi).sum()) < eps:
                    record(force=True)
                    return RunResult(pi, state, trace, True, restarts, guard_events)
                prev_pi = pi
            if state.t >= max_steps:
                record(force=True)
                result = RunResult(None, state, trace, False, restarts, guard_events)
                raise NoConvergenceError(f"no convergence in {max_steps} steps", result)
            moved_before = state.updates
            G = schedule.next_nodes(state.C)
            step(state, G, P)
            state.scan_cost = float(getattr(schedule, "scan_cost", 0.0))
            if criterion == "pihat" and state.updates == moved_before and state.cash_l1 > 0.0:
                prev_pi = None  # no cash moved: skip the next comparison
            record()

        assert degenerate
        if restarts >= max_retries:
            result = RunResult(None, state, trace, False, restarts, guard_events)
            err = DegenerateHistoryError(f"total history degenerate after {restarts} retries")
            err.result = result
            raise err
        restarts += 1
        if schedule.stochastic:
            schedule.reseed()
        else:
            schedule.perturb()
        schedule.restart()
