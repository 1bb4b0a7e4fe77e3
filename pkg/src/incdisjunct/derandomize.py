"""Deterministic construction by the method of conditional expectations.

The randomized construction succeeds because the expected number of violated
sets stays below the budget sigma * n. Here the matrix entries are fixed one
at a time (row-major), and instead of the intractable conditional expectation
we track an efficiently computable upper bound on it: the sum, over every
admissible (A, B) pair, of the probability that the pair ends up violating a
threshold given the entries fixed so far. Binomial tail sums make each pair's
term a constant-time lookup.

At each entry the bound conditioned on writing 0 is summed directly; the
1-branch follows from the total-probability identity
bound = (1-p) * bound(0) + p * bound(1), so the smaller branch never exceeds
the running bound and the final matrix has fewer violated sets than the
budget. Deleting one column per violated set then yields the target matrix.

Index convention: tail tables are addressed by the number of rows already
accounted for. Mid-row that includes the current row (its contribution rides
on omega/psi), so entry steps in row i use table column i+1, while between
rows the bound reads at column i with no split term.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._kernels import (
    UNDETERMINED,
    _apply_completed_row,
    _bound_sum,
    _membership_probs,
    _pair_bound,
    fill_greedy,
)
from .errors import ConstructionFail, InputError, InternalConsistencyError
from .matrix import (
    PoolingMatrix,
    delete_violated_columns,
    find_violated_sets,
    verify_disjunct,
    verify_inclusive,
)
from .planning import EXPLICIT, ConstructionPlan


# ---------------------------------------------------------------------------
# binomial tail tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailTables:
    """Precomputed binomial tail sums for the pessimistic estimator.

    tail_z[k, i] = P[Binomial(t - i, q1) <= z - k] for k = 0..z, i = 0..t,
    and likewise tail_y with (q2, y). Lookups above row z (or y) are zero by
    convention; row accessors below implement that.
    """

    t: int
    z: int
    y: int
    q1: float
    q2: float
    tail_z: np.ndarray
    tail_y: np.ndarray

    def s1(self, z0: int, i: int) -> float:
        return float(self.tail_z[z0, i]) if z0 <= self.z else 0.0

    def s2(self, y0: int, i: int) -> float:
        return float(self.tail_y[y0, i]) if y0 <= self.y else 0.0


def _cumulative_tail_grid(t, kmax, q):
    """grid[k, i] = P[Binomial(t - i, q) <= kmax - k].

    Terms are generated in the log domain (exact log-binomial via integer
    comb) and accumulated with Kahan compensation in fixed order.
    """
    logq = math.log(q)
    log1mq = math.log1p(-q)
    out = np.zeros((kmax + 1, t + 1), dtype=np.float64)
    for i in range(t + 1):
        remaining = t - i
        lim = min(kmax, remaining)
        cums = np.empty(lim + 1, dtype=np.float64)
        total = 0.0
        comp = 0.0
        for l in range(lim + 1):
            log_term = math.log(math.comb(remaining, l)) + l * logq + (remaining - l) * log1mq
            term = math.exp(log_term)
            dv = term - comp
            tv = total + dv
            comp = (tv - total) - dv
            total = tv
            cums[l] = total
        for k in range(kmax + 1):
            out[k, i] = cums[min(kmax - k, lim)]
    return out


def build_tail_tables(plan: ConstructionPlan) -> TailTables:
    """Tail tables for a plan; polynomial in t and built once per run."""
    for name, q in (("q1", plan.q1), ("q2", plan.q2)):
        if not 0.0 < q < 1.0:
            raise InputError(f"{name} must lie in (0, 1), got {q}")
    return TailTables(
        t=plan.t,
        z=plan.z,
        y=plan.y,
        q1=plan.q1,
        q2=plan.q2,
        tail_z=_cumulative_tail_grid(plan.t, plan.z, plan.q1),
        tail_y=_cumulative_tail_grid(plan.t, plan.y, plan.q2),
    )


# ---------------------------------------------------------------------------
# pair enumeration and the single-step estimator surface
# ---------------------------------------------------------------------------


def pair_arrays(m, D, r):
    """All (B, A) pairs: B an r-set (outer, ascending lex), A a D-set from
    the remaining columns (inner, ascending lex). Shared by the estimator
    and the determinism contract."""
    bs, as_ = [], []
    for b in itertools.combinations(range(m), r):
        bset = set(b)
        rest = [c for c in range(m) if c not in bset]
        for a in itertools.combinations(rest, D):
            bs.append(b)
            as_.append(a)
    return (
        np.array(bs, dtype=np.int64).reshape(len(bs), r),
        np.array(as_, dtype=np.int64).reshape(len(as_), D),
    )


def initial_bound(plan: ConstructionPlan, tables: TailTables) -> float:
    """Estimator value before any entry is fixed."""
    return plan.pair_count * (tables.s1(1, 0) + 1.0 - tables.s2(0, 0))


def row_membership_probs(row_state, a_cols, b_cols, p, zero_at=None):
    """(omega, psi) for one pair under a partial row.

    row_state holds 0, 1, or -1 (undetermined) per column. zero_at, when
    given, evaluates with that column hypothetically fixed to 0.
    """
    state = np.asarray(row_state, dtype=np.int8)
    if zero_at is not None:
        state = state.copy()
        state[zero_at] = 0
    a = np.asarray(a_cols, dtype=np.int64)
    b = np.asarray(b_cols, dtype=np.int64)
    return _membership_probs(state, b, a, p)


def estimate_pair_bound(tables: TailTables, z_cnt, y_cnt, i, omega, psi) -> float:
    """One pair's violation bound at table column i (rows accounted for)."""
    if not 0 <= i <= tables.t:
        raise InputError(f"table column {i} outside 0..{tables.t}")
    return _pair_bound(
        tables.tail_z, tables.tail_y, tables.z, tables.y, z_cnt, y_cnt, i, omega, psi
    )


@dataclass
class EstimatorState:
    """Mutable state of a stepwise greedy run (reference path for tests)."""

    plan: ConstructionPlan
    tables: TailTables
    pairs_b: np.ndarray
    pairs_a: np.ndarray
    bound: float
    z_cnt: np.ndarray
    y_cnt: np.ndarray
    row_state: np.ndarray
    row: int = 0
    col: int = 0
    cells: np.ndarray = field(default=None, repr=False)

    @classmethod
    def fresh(cls, plan, tables):
        pairs_b, pairs_a = pair_arrays(plan.m, plan.D, plan.r)
        return cls(
            plan=plan,
            tables=tables,
            pairs_b=pairs_b,
            pairs_a=pairs_a,
            bound=initial_bound(plan, tables),
            z_cnt=np.zeros(pairs_b.shape[0], dtype=np.int64),
            y_cnt=np.zeros(pairs_b.shape[0], dtype=np.int64),
            row_state=np.full(plan.m, UNDETERMINED, dtype=np.int8),
            cells=np.zeros((plan.t, plan.m), dtype=np.uint8),
        )

    def branch_bounds(self):
        """(bound(0), bound(1)) at the current position; bound(1) descends
        from the total-probability identity."""
        plan = self.plan
        self.row_state[self.col] = 0
        b0 = _bound_sum(
            self.row_state,
            self.pairs_b,
            self.pairs_a,
            self.z_cnt,
            self.y_cnt,
            self.tables.tail_z,
            self.tables.tail_y,
            plan.z,
            plan.y,
            plan.p,
            self.row + 1,
        )
        self.row_state[self.col] = UNDETERMINED
        return b0, (self.bound - (1.0 - plan.p) * b0) / plan.p


def greedy_fix_entry(state: EstimatorState) -> int:
    """Fix the current entry to the branch that keeps the bound from rising.

    Ties go to 0. Advances the position; the caller (or update_counters)
    handles the end of a row. Returns the chosen bit.
    """
    b0, b1 = state.branch_bounds()
    scale = max(1.0, state.bound)
    if b1 < -1e-9 * scale:
        raise InternalConsistencyError(
            f"one-branch bound went negative ({b1}) at row {state.row}, col {state.col}"
        )
    if b0 <= state.bound:
        bit, state.bound = 0, b0
    else:
        bit, state.bound = 1, b1
    state.row_state[state.col] = bit
    state.cells[state.row, state.col] = bit
    state.col += 1
    return bit


def update_counters(state: EstimatorState):
    """Fold the completed row into the per-pair counters and reset the row.

    A pair's private count rises when the row is all-ones on B and all-zeros
    on A; its shared count rises when all-ones on B with a 1 somewhere in A.
    """
    if state.col != state.plan.m:
        raise InputError("row is not fully determined")
    _apply_completed_row(state.row_state, state.pairs_b, state.pairs_a, state.z_cnt, state.y_cnt)
    state.row_state[:] = UNDETERMINED
    state.row += 1
    state.col = 0


# ---------------------------------------------------------------------------
# whole-run construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DerandRun:
    """Construction output plus the per-step traces the invariants live on."""

    matrix: PoolingMatrix
    pre_deletion: PoolingMatrix
    bound_trace: np.ndarray
    zero_trace: np.ndarray
    one_trace: np.ndarray
    violated: list
    initial_bound: float
    debug: bool


def _admit(plan, tables):
    start = initial_bound(plan, tables)
    if not Fraction(start) < plan.sigma_n:
        raise InputError(
            f"initial estimator {start} is not below the budget sigma*n = {float(plan.sigma_n)}; "
            "widen the thresholds, raise the budget, or shrink m"
        )
    return start


def derandomize_with_trace(plan: ConstructionPlan, debug: bool = False, check_exact: bool = False) -> DerandRun:
    """Run the full greedy construction and keep the evidence.

    debug recomputes the 1-branch bound directly instead of via the identity
    (for the cross-check tests). check_exact replays the run against the
    exhaustive-enumeration oracle and is restricted to small instances.
    """
    if check_exact and plan.t * plan.m > 36:
        raise InputError("check_exact is for small instances (t*m <= 36)")
    tables = build_tail_tables(plan)
    pairs_b, pairs_a = pair_arrays(plan.m, plan.D, plan.r)
    start = _admit(plan, tables)
    cells, bound_trace, zero_trace, one_trace, _, _, status = fill_greedy(
        plan.t,
        plan.m,
        plan.p,
        plan.z,
        plan.y,
        tables.tail_z,
        tables.tail_y,
        pairs_b,
        pairs_a,
        start,
        debug,
    )
    if status != 0:
        raise InternalConsistencyError(
            "one-branch bound went materially negative during the greedy fill"
        )
    pre = PoolingMatrix(cells)
    if check_exact:
        _replay_exact_checks(pre, plan, bound_trace)
    violated = find_violated_sets(pre, plan.D, plan.r, plan.z, plan.y)
    if not Fraction(len(violated)) < plan.sigma_n:
        raise InternalConsistencyError(
            f"{len(violated)} violated sets at the end, budget was {float(plan.sigma_n)}"
        )
    result = delete_violated_columns(pre, violated)
    if result.n < plan.D + plan.r:
        raise ConstructionFail(
            f"only {result.n} columns survive deletion, below D + r = {plan.D + plan.r}",
            violated_count=len(violated),
            threshold=float(plan.sigma_n),
            witnesses=violated[:10],
        )
    if plan.mode != EXPLICIT and result.n <= plan.n:
        raise InternalConsistencyError(
            f"theorem-mode run kept {result.n} columns, needed more than {plan.n}"
        )
    if verify_disjunct(result, plan.D, plan.r, plan.z) is not None:
        raise InternalConsistencyError("post-deletion matrix failed the disjunct check")
    if verify_inclusive(result, plan.D, plan.r, plan.y) is not None:
        raise InternalConsistencyError("post-deletion matrix failed the inclusive check")
    return DerandRun(
        matrix=result,
        pre_deletion=pre,
        bound_trace=bound_trace,
        zero_trace=zero_trace,
        one_trace=one_trace,
        violated=violated,
        initial_bound=start,
        debug=debug,
    )


def derandomized_construct(plan: ConstructionPlan, check_exact: bool = False) -> PoolingMatrix:
    """Deterministic construction; same plan, same matrix, every time."""
    return derandomize_with_trace(plan, check_exact=check_exact).matrix


def _replay_exact_checks(pre, plan, bound_trace):
    cells = pre.entries
    t, m = cells.shape
    for step in range(t * m + 1):
        partial = np.full((t, m), UNDETERMINED, dtype=np.int8)
        flat = partial.reshape(-1)
        flat[:step] = cells.reshape(-1)[:step]
        if t * m - step > 20:
            continue
        expected = exact_estimator_oracle(partial, plan)
        if abs(expected - bound_trace[step]) > 1e-9:
            raise InternalConsistencyError(
                f"estimator {bound_trace[step]} disagrees with the exact oracle "
                f"{expected} after {step} fixed entries"
            )


# ---------------------------------------------------------------------------
# estimator oracles for partial matrices
# ---------------------------------------------------------------------------


def _prefix_shape(partial):
    flat = np.asarray(partial).reshape(-1)
    if not np.isin(flat, (0, 1, UNDETERMINED)).all():
        raise InputError("partial entries must be 0, 1, or -1 (undetermined)")
    undet_idx = np.flatnonzero(flat == UNDETERMINED)
    if undet_idx.size == 0:
        return flat.size
    first = int(undet_idx[0])
    if undet_idx.size != flat.size - first:
        raise InputError("partial matrix must be a row-major prefix of fixed entries")
    return first


def pessimistic_estimate(partial, plan: ConstructionPlan, tables: TailTables | None = None) -> float:
    """Table-based estimator for a row-major-prefix partial matrix.

    Entries are 0, 1, or -1 for undetermined; all fixed entries must precede
    all undetermined ones in row-major order, matching the states the greedy
    run walks through.
    """
    partial = np.asarray(partial, dtype=np.int8)
    if partial.ndim != 2:
        raise InputError("partial matrix must be 2-dimensional")
    t, m = partial.shape
    if (t, m) != (plan.t, plan.m):
        raise InputError(f"partial matrix shape {(t, m)} does not match plan ({plan.t}, {plan.m})")
    fixed_count = _prefix_shape(partial)
    if tables is None:
        tables = build_tail_tables(plan)
    pairs_b, pairs_a = pair_arrays(m, plan.D, plan.r)
    full_rows, g = divmod(fixed_count, m)
    z_cnt = np.zeros(pairs_b.shape[0], dtype=np.int64)
    y_cnt = np.zeros(pairs_b.shape[0], dtype=np.int64)
    for i in range(full_rows):
        from ._kernels import _apply_completed_row

        _apply_completed_row(partial[i], pairs_b, pairs_a, z_cnt, y_cnt)
    if g == 0:
        # Row boundary: no split row, table column = determined rows.
        total = 0.0
        comp = 0.0
        for k in range(pairs_b.shape[0]):
            val = (
                tables.s1(int(z_cnt[k]) + 1, full_rows)
                + 1.0
                - tables.s2(int(y_cnt[k]), full_rows)
            )
            dv = val - comp
            tv = total + dv
            comp = (tv - total) - dv
            total = tv
        return total
    row_state = partial[full_rows].copy()
    return _bound_sum(
        row_state,
        pairs_b,
        pairs_a,
        z_cnt,
        y_cnt,
        tables.tail_z,
        tables.tail_y,
        plan.z,
        plan.y,
        plan.p,
        full_rows + 1,
    )


def exact_estimator_oracle(partial, plan: ConstructionPlan) -> float:
    """Exhaustive-enumeration value of the estimator on a partial matrix.

    For each pair, every completion of the undetermined entries in the
    columns of A and B is enumerated and weighted by p per 1 and 1-p per 0.
    Refuses matrices with more than 20 undetermined entries.
    """
    partial = np.asarray(partial, dtype=np.int8)
    t, m = partial.shape
    undet_total = int((partial == UNDETERMINED).sum())
    if undet_total > 20:
        raise InputError(f"{undet_total} undetermined entries; the oracle allows at most 20")
    pairs_b, pairs_a = pair_arrays(m, plan.D, plan.r)
    p = plan.p
    total = 0.0
    for k in range(pairs_b.shape[0]):
        cols = list(pairs_b[k]) + list(pairs_a[k])
        sub = partial[:, cols].copy()
        holes = np.argwhere(sub == UNDETERMINED)
        r = pairs_b.shape[1]
        prob_z = 0.0
        prob_y = 0.0
        for bits in itertools.product((0, 1), repeat=len(holes)):
            weight = 1.0
            for bit in bits:
                weight *= p if bit else 1.0 - p
            filled = sub.copy()
            for (ri, ci), bit in zip(holes, bits):
                filled[ri, ci] = bit
            b_all = (filled[:, :r] == 1).all(axis=1)
            a_any = (filled[:, r:] == 1).any(axis=1)
            z_val = int((b_all & ~a_any).sum())
            y_val = int((b_all & a_any).sum())
            if z_val <= plan.z - 1:
                prob_z += weight
            if y_val >= plan.y + 1:
                prob_y += weight
        total += prob_z + prob_y
    return total
