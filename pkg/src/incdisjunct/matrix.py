"""Binary pooling matrices and the combinatorial checks that qualify them.

A pooling design is a t x n binary matrix: rows are pools/tests, columns are
items, and entry (i, j) = 1 means pool i contains item j. For disjoint column
sets A and B, two row counts drive everything here:

  private_rows(T, A, B): rows where every B-column is 1 and every A-column
      is 0 (the B-intersection minus the A-union).
  shared_rows(T, A, B):  rows where every B-column is 1 and at least one
      A-column is 1 (the B-intersection inside the A-union).

A matrix is (d, r; z]-disjunct when every r-set keeps at least z private rows
against every disjoint d-set, and (h, r; y]-inclusive when every r-set shares
at most y rows with every disjoint h-set's union. Column indices are 0-based
throughout.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from ._bitops import pack_columns, popcount, row_mask
from ._kernels import scan_pairs
from .errors import ConstructionFail, InputError

DISJUNCT_DEFICIT = "disjunct-deficit"
INCLUSIVE_EXCESS = "inclusive-excess"
_KIND_NAMES = (DISJUNCT_DEFICIT, INCLUSIVE_EXCESS)


@dataclass(frozen=True)
class ViolationWitness:
    """An r-set B caught violating a threshold, with the offending A-set."""

    b: tuple
    a: tuple
    kind: str
    value: int

    def __str__(self):
        b = ",".join(map(str, self.b))
        a = ",".join(map(str, self.a))
        return f"{self.kind} B={{{b}}} A={{{a}}} value={self.value}"


class PoolingMatrix:
    """Immutable t x n binary matrix with packed per-column row supports."""

    __slots__ = ("entries", "_blocks", "_mask", "_candidate_cache")

    def __init__(self, entries):
        arr = np.ascontiguousarray(entries, dtype=np.uint8)
        if arr.ndim != 2:
            raise InputError("matrix entries must be 2-dimensional")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("matrix needs at least one row and one column")
        if not np.isin(arr, (0, 1)).all():
            raise InputError("matrix entries must be 0 or 1")
        arr = arr.copy()
        arr.flags.writeable = False
        self.entries = arr
        self._blocks = pack_columns(arr)
        self._mask = row_mask(arr.shape[0])
        self._candidate_cache = {}

    @property
    def t(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def support(self, j: int) -> np.ndarray:
        """Row indices where column j is 1."""
        return np.flatnonzero(self.entries[:, j])

    @property
    def column_blocks(self) -> np.ndarray:
        return self._blocks

    @property
    def full_mask(self) -> np.ndarray:
        return self._mask

    def __eq__(self, other):
        return isinstance(other, PoolingMatrix) and np.array_equal(
            self.entries, other.entries
        )

    def __repr__(self):
        return f"PoolingMatrix(t={self.t}, n={self.n})"


def _check_sets(matrix, a_set, b_set):
    a = tuple(sorted(a_set))
    b = tuple(sorted(b_set))
    if not b:
        raise InputError("B must be nonempty")
    for group, name in ((a, "A"), (b, "B")):
        if len(set(group)) != len(group):
            raise InputError(f"{name} contains repeated indices")
        for j in group:
            if not 0 <= int(j) < matrix.n:
                raise InputError(f"{name} index {j} out of range for n={matrix.n}")
    if set(a) & set(b):
        raise InputError("A and B must be disjoint")
    return a, b


def _rows_split(matrix, a, b):
    inter = matrix.full_mask.copy()
    for j in b:
        inter &= matrix.column_blocks[j]
    if not a:
        return int(popcount(inter[None, :])[0]), 0
    union = np.zeros_like(inter)
    for j in a:
        union |= matrix.column_blocks[j]
    z = int(popcount((inter & ~union)[None, :])[0])
    y = int(popcount((inter & union)[None, :])[0])
    return z, y


def private_rows(matrix: PoolingMatrix, a_set, b_set) -> int:
    """Rows where all B-columns are 1 and no A-column is. A may be empty."""
    a, b = _check_sets(matrix, a_set, b_set)
    return _rows_split(matrix, a, b)[0]


def shared_rows(matrix: PoolingMatrix, a_set, b_set) -> int:
    """Rows where all B-columns are 1 and at least one A-column is too."""
    a, b = _check_sets(matrix, a_set, b_set)
    return _rows_split(matrix, a, b)[1]


def _comb_array(n, k):
    combos = list(itertools.combinations(range(n), k))
    return np.array(combos, dtype=np.int64).reshape(len(combos), k), combos


def _run_scan(matrix, set_size_a, r, z, y, check_z, check_y, collect, threads=1):
    combs_b_arr, combs_b = _comb_array(matrix.n, r)
    combs_a_arr, combs_a = _comb_array(matrix.n, set_size_a)
    blocks = matrix.column_blocks
    mask = matrix.full_mask
    zq = z if check_z else 0
    yq = y if check_y else 0

    def to_witnesses(found, b_ranks, a_ranks, kinds, values):
        return [
            ViolationWitness(
                b=combs_b[b_ranks[i]],
                a=combs_a[a_ranks[i]],
                kind=_KIND_NAMES[kinds[i]],
                value=int(values[i]),
            )
            for i in range(found)
        ]

    if threads <= 1 or len(combs_b) < 2 * threads or not collect:
        res = scan_pairs(blocks, mask, combs_b_arr, combs_a_arr, zq, yq, check_z, check_y, collect)
        return to_witnesses(*res)

    # Partition the B-space; chunk order preserves the sequential ordering.
    from concurrent.futures import ThreadPoolExecutor

    bounds = np.linspace(0, len(combs_b), threads + 1, dtype=int)
    chunks = [(int(bounds[i]), int(bounds[i + 1])) for i in range(threads)]

    def work(lo_hi):
        lo, hi = lo_hi
        res = scan_pairs(
            blocks, mask, combs_b_arr[lo:hi], combs_a_arr, zq, yq, check_z, check_y, True
        )
        found, b_ranks, a_ranks, kinds, values = res
        return [
            ViolationWitness(
                b=combs_b[lo + b_ranks[i]],
                a=combs_a[a_ranks[i]],
                kind=_KIND_NAMES[kinds[i]],
                value=int(values[i]),
            )
            for i in range(found)
        ]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(work, chunks))
    return [w for part in parts for w in part]


def verify_disjunct(matrix: PoolingMatrix, d: int, r: int, z: int):
    """None when every (|A|=d, |B|=r) pair keeps >= z private rows, else the
    lexicographically first (B, then A) witness."""
    if d < 1 or r < 1 or z < 1:
        raise InputError("need d >= 1, r >= 1, z >= 1")
    if d + r > matrix.n:
        raise InputError(f"d + r = {d + r} exceeds column count {matrix.n}")
    hits = _run_scan(matrix, d, r, z, 0, True, False, collect=False)
    return hits[0] if hits else None


def verify_inclusive(matrix: PoolingMatrix, h: int, r: int, y: int):
    """None when every (|A|=h, |B|=r) pair shares <= y rows, else the first
    witness. h = 0 passes vacuously."""
    if h < 0 or r < 1 or y < 0:
        raise InputError("need h >= 0, r >= 1, y >= 0")
    if h == 0:
        return None
    if h + r > matrix.n:
        raise InputError(f"h + r = {h + r} exceeds column count {matrix.n}")
    hits = _run_scan(matrix, h, r, 0, y, False, True, collect=False)
    return hits[0] if hits else None


def find_violated_sets(matrix: PoolingMatrix, D: int, r: int, z: int, y: int, threads: int = 1):
    """All r-sets B violated against some disjoint D-set A.

    A set is violated when some A drops its private rows to z-1 or fewer, or
    pushes its shared rows to y+1 or more. Each violated B appears once with
    its lexicographically first witness (disjunct deficit checked first at
    each A); the list is ordered by B.
    """
    if D < 1 or r < 1:
        raise InputError("need D >= 1 and r >= 1")
    if D + r > matrix.n:
        raise InputError(f"D + r = {D + r} exceeds column count {matrix.n}")
    return _run_scan(matrix, D, r, z, y, True, True, collect=True, threads=threads)


def delete_violated_columns(matrix: PoolingMatrix, witnesses) -> PoolingMatrix:
    """Drop the smallest column of each violated set; order of survivors kept."""
    if not witnesses:
        return matrix
    doomed = {min(w.b) for w in witnesses}
    keep = [j for j in range(matrix.n) if j not in doomed]
    if not keep:
        raise ConstructionFail(
            "column deletion removed every column",
            violated_count=len(witnesses),
            witnesses=list(witnesses)[:10],
        )
    return PoolingMatrix(matrix.entries[:, keep])


def rate(matrix: PoolingMatrix) -> float:
    """log2(columns) / rows, the efficiency measure of a pooling design."""
    return float(np.log2(matrix.n) / matrix.t)
