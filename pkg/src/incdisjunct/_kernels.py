"""Hot-loop kernels with numba and pure numpy/Python implementations.

The greedy derandomization fill is one shared source function: the numba
backend compiles it with @njit, the numpy backend runs the same bytecode
uncompiled. Identical operation order makes the two paths bit-identical.

The violated-set scans have a scalar kernel (compiled under numba) and a
vectorized numpy variant; both produce exact integer counts and identical
witnesses, so backend choice cannot change results there either.
"""

import numpy as np

from . import _backend
from ._bitops import _POP8, popcount

if _backend.HAVE_NUMBA:
    from numba import njit
    from numba.extending import register_jitable
else:  # identity decorators keep the shared-source functions importable

    def njit(*args, **kwargs):
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap

    def register_jitable(*args, **kwargs):
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# shared-source helpers (run as plain Python or inside njit code)
# ---------------------------------------------------------------------------

UNDETERMINED = -1  # row-state marker; 0 and 1 are fixed entries


@register_jitable
def _membership_probs(row_state, cols_b, cols_a, p):
    """(omega, psi) for one pair given the partial current row.

    Per-column factors: 1 when the entry is fixed to the required value,
    0 when fixed to the opposite, p (toward 1) or 1-p (toward 0) when
    undetermined. omega multiplies the all-B-ones and all-A-zeros factors;
    psi is the all-B-ones mass minus omega.
    """
    prob_b = 1.0
    for u in range(cols_b.shape[0]):
        st = row_state[cols_b[u]]
        if st == 0:
            return 0.0, 0.0
        if st == UNDETERMINED:
            prob_b *= p
    prob_a0 = 1.0
    for u in range(cols_a.shape[0]):
        st = row_state[cols_a[u]]
        if st == 1:
            prob_a0 = 0.0
            break
        if st == UNDETERMINED:
            prob_a0 *= 1.0 - p
    omega = prob_b * prob_a0
    return omega, prob_b - omega


@register_jitable
def _pair_bound(tail_z, tail_y, z, y, z_cnt, y_cnt, i, omega, psi):
    """Violation-probability bound for one pair at table column i.

    tail_z[k, i] = P[Binomial(t-i, q1) <= z-k]; rows above z (or y) read as
    zero by convention. i counts the rows already accounted for, including
    the row split out through omega/psi.
    """
    a = tail_z[z_cnt + 2, i] if z_cnt + 2 <= z else 0.0
    b = tail_z[z_cnt + 1, i] if z_cnt + 1 <= z else 0.0
    c = tail_y[y_cnt + 1, i] if y_cnt + 1 <= y else 0.0
    d = tail_y[y_cnt, i] if y_cnt <= y else 0.0
    return omega * a + (1.0 - omega) * b + 1.0 - psi * c - (1.0 - psi) * d


@register_jitable
def _bound_sum(row_state, pairs_b, pairs_a, z_cnt, y_cnt, tail_z, tail_y, z, y, p, i):
    """Kahan-compensated sum of pair bounds in fixed pair order."""
    total = 0.0
    comp = 0.0
    for k in range(pairs_b.shape[0]):
        omega, psi = _membership_probs(row_state, pairs_b[k], pairs_a[k], p)
        val = _pair_bound(tail_z, tail_y, z, y, z_cnt[k], y_cnt[k], i, omega, psi)
        dv = val - comp
        tv = total + dv
        comp = (tv - total) - dv
        total = tv
    return total


@register_jitable
def _apply_completed_row(row_state, pairs_b, pairs_a, z_cnt, y_cnt):
    """Bump the per-pair counters for a fully determined row."""
    for k in range(pairs_b.shape[0]):
        all_b = True
        for u in range(pairs_b.shape[1]):
            if row_state[pairs_b[k, u]] != 1:
                all_b = False
                break
        if not all_b:
            continue
        any_a = False
        for u in range(pairs_a.shape[1]):
            if row_state[pairs_a[k, u]] == 1:
                any_a = True
                break
        if any_a:
            y_cnt[k] += 1
        else:
            z_cnt[k] += 1


def _fill_greedy(t, m, p, z, y, tail_z, tail_y, pairs_b, pairs_a, bound_init, debug):
    """Fix all t*m entries greedily, keeping the violation bound non-increasing.

    Returns (cells, bound_trace, zero_trace, one_trace, z_cnt, y_cnt, status).
    bound_trace has t*m+1 entries (value before any step first). one_trace
    holds the identity-derived one-branch bound, or the directly recomputed
    one when debug is true. status 1 flags a materially negative one-branch
    bound (numeric drift).
    """
    n_pairs = pairs_b.shape[0]
    cells = np.zeros((t, m), dtype=np.uint8)
    z_cnt = np.zeros(n_pairs, dtype=np.int64)
    y_cnt = np.zeros(n_pairs, dtype=np.int64)
    row_state = np.full(m, UNDETERMINED, dtype=np.int8)
    steps = t * m
    bound_trace = np.empty(steps + 1, dtype=np.float64)
    zero_trace = np.empty(steps, dtype=np.float64)
    one_trace = np.empty(steps, dtype=np.float64)
    bound = bound_init
    bound_trace[0] = bound
    status = 0
    one_minus_p = 1.0 - p
    step = 0
    for i in range(t):
        tcol = i + 1  # current row is split out via omega/psi
        for j in range(m):
            row_state[j] = 0
            b0 = _bound_sum(
                row_state, pairs_b, pairs_a, z_cnt, y_cnt, tail_z, tail_y, z, y, p, tcol
            )
            b1 = (bound - one_minus_p * b0) / p
            if debug:
                row_state[j] = 1
                one_trace[step] = _bound_sum(
                    row_state, pairs_b, pairs_a, z_cnt, y_cnt, tail_z, tail_y, z, y, p, tcol
                )
                row_state[j] = 0
            else:
                one_trace[step] = b1
            zero_trace[step] = b0
            scale = bound if bound > 1.0 else 1.0
            if b1 < -1e-9 * scale:
                status = 1
            if b0 <= bound:
                cells[i, j] = 0
                row_state[j] = 0
                bound = b0
            else:
                cells[i, j] = 1
                row_state[j] = 1
                bound = b1
            step += 1
            bound_trace[step] = bound
        _apply_completed_row(row_state, pairs_b, pairs_a, z_cnt, y_cnt)
        for j in range(m):
            row_state[j] = UNDETERMINED
    return cells, bound_trace, zero_trace, one_trace, z_cnt, y_cnt, status


_fill_greedy_nb = njit(cache=True)(_fill_greedy) if _backend.HAVE_NUMBA else None


def fill_greedy(*args):
    if _backend.active_backend() == "numba":
        return _fill_greedy_nb(*args)
    return _fill_greedy(*args)


# ---------------------------------------------------------------------------
# violated-set scans over packed column supports
# ---------------------------------------------------------------------------

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@register_jitable
def _popcnt64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


def _scan_scalar(col_blocks, full_mask, combs_b, combs_a, z, y, check_z, check_y, collect):
    """Scan pairs (B outer lex, A inner lex) for threshold violations.

    With collect false, stops at the first violation overall; with collect
    true, records the first witness per violated B. Kind 0 is a disjunct
    deficit (private-row count <= z-1, checked first at each A); kind 1 is
    an inclusive excess (shared-row count >= y+1).

    Returns (count, b_ranks, a_ranks, kinds, values).
    """
    nb = combs_b.shape[0]
    na = combs_a.shape[0]
    r = combs_b.shape[1]
    D = combs_a.shape[1]
    nblk = col_blocks.shape[1]
    inter = np.empty(nblk, dtype=np.uint64)
    out_b = np.empty(nb, dtype=np.int64)
    out_a = np.empty(nb, dtype=np.int64)
    out_kind = np.empty(nb, dtype=np.int64)
    out_val = np.empty(nb, dtype=np.int64)
    found = 0
    for bi in range(nb):
        for k in range(nblk):
            inter[k] = full_mask[k]
        for u in range(r):
            col = combs_b[bi, u]
            for k in range(nblk):
                inter[k] = inter[k] & col_blocks[col, k]
        for ai in range(na):
            disjoint = True
            for u in range(D):
                av = combs_a[ai, u]
                for v in range(r):
                    if combs_b[bi, v] == av:
                        disjoint = False
                        break
                if not disjoint:
                    break
            if not disjoint:
                continue
            zc = 0
            yc = 0
            for k in range(nblk):
                union = np.uint64(0)
                for u in range(D):
                    union = union | col_blocks[combs_a[ai, u], k]
                zc += int(_popcnt64(inter[k] & ~union))
                yc += int(_popcnt64(inter[k] & union))
            hit = False
            if check_z and zc <= z - 1:
                out_b[found] = bi
                out_a[found] = ai
                out_kind[found] = 0
                out_val[found] = zc
                hit = True
            elif check_y and yc >= y + 1:
                out_b[found] = bi
                out_a[found] = ai
                out_kind[found] = 1
                out_val[found] = yc
                hit = True
            if hit:
                found += 1
                if not collect:
                    return found, out_b, out_a, out_kind, out_val
                break  # early exit per B
    return found, out_b, out_a, out_kind, out_val


_scan_scalar_nb = (
    njit(cache=True, nogil=True)(_scan_scalar) if _backend.HAVE_NUMBA else None
)


def _scan_vectorized(col_blocks, full_mask, combs_b, combs_a, z, y, check_z, check_y, collect):
    """Numpy variant of _scan_scalar; per-B vectorization over A."""
    nb = combs_b.shape[0]
    D = combs_a.shape[1]
    a_unions = col_blocks[combs_a[:, 0]].copy()
    for u in range(1, D):
        a_unions |= col_blocks[combs_a[:, u]]
    out_b, out_a, out_kind, out_val = [], [], [], []
    for bi in range(nb):
        brow = combs_b[bi]
        inter = full_mask.copy()
        for u in range(brow.shape[0]):
            inter &= col_blocks[brow[u]]
        valid = ~np.isin(combs_a, brow).any(axis=1)
        zc = popcount(inter[None, :] & ~a_unions)
        yc = popcount(inter[None, :] & a_unions)
        viol = np.zeros(len(valid), dtype=bool)
        if check_z:
            viol |= zc <= z - 1
        if check_y:
            viol |= yc >= y + 1
        viol &= valid
        idx = np.flatnonzero(viol)
        if idx.size:
            ai = int(idx[0])
            if check_z and zc[ai] <= z - 1:
                kind, value = 0, int(zc[ai])
            else:
                kind, value = 1, int(yc[ai])
            out_b.append(bi)
            out_a.append(ai)
            out_kind.append(kind)
            out_val.append(value)
            if not collect:
                break
    found = len(out_b)
    return (
        found,
        np.array(out_b, dtype=np.int64),
        np.array(out_a, dtype=np.int64),
        np.array(out_kind, dtype=np.int64),
        np.array(out_val, dtype=np.int64),
    )


def scan_pairs(col_blocks, full_mask, combs_b, combs_a, z, y, check_z, check_y, collect):
    if _backend.active_backend() == "numba":
        return _scan_scalar_nb(
            col_blocks, full_mask, combs_b, combs_a, z, y, check_z, check_y, collect
        )
    return _scan_vectorized(
        col_blocks, full_mask, combs_b, combs_a, z, y, check_z, check_y, collect
    )


def warm_up():
    """Trigger JIT compilation of the numba kernels on a toy instance."""
    if not _backend.HAVE_NUMBA:
        return
    tail = np.ones((3, 3), dtype=np.float64)
    pb = np.array([[0]], dtype=np.int64)
    pa = np.array([[1]], dtype=np.int64)
    _fill_greedy_nb(2, 2, 0.5, 1, 1, tail, tail, pb, pa, 1.0, False)
    blocks = np.array([[np.uint64(1)], [np.uint64(2)]], dtype=np.uint64)
    mask = np.array([np.uint64(3)], dtype=np.uint64)
    _scan_scalar_nb(blocks, mask, pb, pa, 1, 0, True, True, True)
