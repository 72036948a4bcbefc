"""Exact combinatorial structure of nonnegative square matrices.

Support testing with Frobenius-Koenig witnesses, irreducibility, full
indecomposability, primitivity, and the two-sided permutation normal form
Q1 * S * Q2^t with fully indecomposable diagonal blocks.  Everything here
is exact: positivity of an entry is tested as ``> 0`` because the block
structure (and hence the invariant computed downstream) depends only on
which entries are structural zeros.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MatrixFormatError, NonConvergenceError, NoSupportError

__all__ = [
    "VarianceProfile",
    "ZeroPattern",
    "Permutation",
    "PositiveDiagonal",
    "ZeroBlock",
    "NormalForm",
    "zero_pattern",
    "has_support",
    "is_irreducible",
    "is_fully_indecomposable",
    "is_primitive",
    "normal_form",
    "spectral_radius",
    "load_variance_profile",
    "variance_profile_from_dict",
]

PROBABILITY_CONSISTENCY_TOL = 1e-12


@dataclass(eq=False)
class VarianceProfile:
    """K x K nonnegative variance matrix, optionally tied to edge probabilities.

    When ``probabilities`` is given, entries must satisfy s = p(1-p) to
    within 1e-12; this is how sampled models and analytic inputs stay in sync.
    """

    entries: np.ndarray
    probabilities: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.entries, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
            raise MatrixFormatError(f"variance profile must be square, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise MatrixFormatError("variance profile has non-finite entries")
        if np.any(s < 0):
            raise MatrixFormatError("variance profile has negative entries")
        self.entries = s
        if self.probabilities is not None:
            p = np.asarray(self.probabilities, dtype=float)
            if p.shape != s.shape:
                raise MatrixFormatError("probability matrix shape does not match variances")
            if np.any((p < 0) | (p > 1)):
                raise MatrixFormatError("probabilities must lie in [0, 1]")
            if np.max(np.abs(s - p * (1 - p))) > PROBABILITY_CONSISTENCY_TOL:
                raise MatrixFormatError("variances are inconsistent with s = p(1-p)")
            self.probabilities = p

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_probabilities(cls, p) -> "VarianceProfile":
        p = np.asarray(p, dtype=float)
        return cls(p * (1 - p), probabilities=p)


@dataclass(eq=False)
class ZeroPattern:
    """Boolean mask of the strictly positive entries of a square matrix."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise MatrixFormatError(f"zero pattern must be square, got shape {m.shape}")
        self.mask = m

    @property
    def K(self) -> int:
        return self.mask.shape[0]


@dataclass(eq=False)
class Permutation:
    """Permutation of {0, ..., K-1} stored as its image array.

    ``image[i]`` is where position ``i`` looks in the source: applying the
    permutation to a vector gives ``vec[image]``, i.e. the matrix form has
    a one at ``(i, image[i])``.
    """

    image: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image, dtype=int)
        k = img.shape[0]
        if img.ndim != 1 or not np.array_equal(np.sort(img), np.arange(k)):
            raise MatrixFormatError("permutation image is not a bijection")
        self.image = img

    @property
    def size(self) -> int:
        return self.image.shape[0]

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.size, self.size))
        m[np.arange(self.size), self.image] = 1.0
        return m

    def inverse(self) -> "Permutation":
        inv = np.empty(self.size, dtype=int)
        inv[self.image] = np.arange(self.size)
        return Permutation(inv)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec)[self.image]


@dataclass(eq=False)
class PositiveDiagonal:
    """Support witness: s[i, permutation.image[i]] > 0 for all i."""

    permutation: Permutation


@dataclass(eq=False)
class ZeroBlock:
    """Frobenius-Koenig witness: an all-zero |rows| x |cols| submatrix
    with |rows| + |cols| = K + 1."""

    rows: tuple
    cols: tuple


@dataclass(eq=False)
class NormalForm:
    """Two-sided permutation normal form: s_tilde = Q1 * S * Q2^t is block
    upper triangular with fully indecomposable, positive-diagonal blocks.

    ``block_of[i]`` is the (0-based) block label of normal-form position i;
    rows and columns share the block partition.
    """

    q1: Permutation
    q2: Permutation
    s_tilde: np.ndarray
    block_sizes: np.ndarray
    block_of: np.ndarray = field(default=None)

    def __post_init__(self):
        sizes = np.asarray(self.block_sizes, dtype=int)
        if sizes.sum() != self.q1.size or np.any(sizes < 1):
            raise MatrixFormatError("block sizes must be positive and sum to K")
        self.block_sizes = sizes
        if self.block_of is None:
            self.block_of = np.repeat(np.arange(len(sizes)), sizes)

    @property
    def K(self) -> int:
        return self.q1.size

    @property
    def L(self) -> int:
        return len(self.block_sizes)

    def block_slice(self, k: int) -> slice:
        offsets = np.concatenate([[0], np.cumsum(self.block_sizes)])
        return slice(int(offsets[k]), int(offsets[k + 1]))

    def tilde_rows(self, vec: np.ndarray) -> np.ndarray:
        """Row-permuted vector Q1 v (aligned with s_tilde rows)."""
        return self.q1.apply(vec)

    def tilde_cols(self, vec: np.ndarray) -> np.ndarray:
        """Column-permuted vector Q2 w (aligned with s_tilde columns)."""
        return self.q2.apply(vec)

    def block_means(self, tilde_vec: np.ndarray) -> np.ndarray:
        """Per-block averages of a vector already in normal-form order."""
        out = np.empty(self.L)
        for k in range(self.L):
            out[k] = tilde_vec[self.block_slice(k)].mean()
        return out

    def reconstruct(self) -> np.ndarray:
        """Invert the two-sided permutation; exact copy of the original S."""
        s = np.empty_like(self.s_tilde)
        s[np.ix_(self.q1.image, self.q2.image)] = self.s_tilde
        return s


def zero_pattern(m: VarianceProfile) -> ZeroPattern:
    """Mask of strictly positive entries (exact zero test)."""
    return ZeroPattern(m.entries > 0)


def _maximum_matching(mask: np.ndarray) -> np.ndarray:
    """Row -> column maximum matching via augmenting paths, rows scanned in
    order so the result is deterministic.  Unmatched rows map to -1."""
    k = mask.shape[0]
    col_owner = np.full(k, -1, dtype=int)

    def augment(row, seen):
        for col in range(k):
            if mask[row, col] and not seen[col]:
                seen[col] = True
                if col_owner[col] < 0 or augment(col_owner[col], seen):
                    col_owner[col] = row
                    return True
        return False

    for row in range(k):
        augment(row, np.zeros(k, dtype=bool))
    row_match = np.full(k, -1, dtype=int)
    for col, row in enumerate(col_owner):
        if row >= 0:
            row_match[row] = col
    return row_match


def has_support(z: ZeroPattern) -> PositiveDiagonal | ZeroBlock:
    """Perfect-matching test on the bipartite row/column graph.

    Returns a positive diagonal when a perfect matching exists; otherwise a
    Koenig vertex cover of a maximum matching yields an all-zero submatrix
    with row + column count equal to K + 1.
    """
    mask = z.mask
    k = z.K
    row_match = _maximum_matching(mask)
    if np.all(row_match >= 0):
        return PositiveDiagonal(Permutation(row_match))

    # Alternating BFS from unmatched rows: reachable rows I and unreachable
    # columns J bound an all-zero block with |I| + |J| = 2K - |matching|.
    col_owner = np.full(k, -1, dtype=int)
    for row, col in enumerate(row_match):
        if col >= 0:
            col_owner[col] = row
    reach_rows = row_match < 0
    reach_cols = np.zeros(k, dtype=bool)
    frontier = list(np.flatnonzero(reach_rows))
    while frontier:
        nxt = []
        for row in frontier:
            for col in np.flatnonzero(mask[row]):
                if not reach_cols[col]:
                    reach_cols[col] = True
                    owner = col_owner[col]
                    if owner >= 0 and not reach_rows[owner]:
                        reach_rows[owner] = True
                        nxt.append(owner)
        frontier = nxt
    rows = np.flatnonzero(reach_rows)
    cols = np.flatnonzero(~reach_cols)
    # |rows| + |cols| = 2K - |matching| >= K + 1; trim to exactly K + 1,
    # keeping all rows and the smallest columns.
    return ZeroBlock(tuple(int(i) for i in rows),
                     tuple(int(j) for j in cols[: k + 1 - len(rows)]))


def _successors(mask: np.ndarray) -> list:
    return [np.flatnonzero(mask[i]) for i in range(mask.shape[0])]


def strongly_connected_components(mask: np.ndarray) -> list:
    """SCCs of the digraph i -> j iff mask[i, j], via iterative Kosaraju.

    Components are returned with vertices sorted ascending; the component
    list itself is in no particular order.
    """
    k = mask.shape[0]
    succ = _successors(mask)
    pred = _successors(mask.T)

    order = []
    visited = np.zeros(k, dtype=bool)
    for start in range(k):
        if visited[start]:
            continue
        stack = [(start, 0)]
        visited[start] = True
        while stack:
            node, idx = stack.pop()
            if idx < len(succ[node]):
                stack.append((node, idx + 1))
                nxt = succ[node][idx]
                if not visited[nxt]:
                    visited[nxt] = True
                    stack.append((nxt, 0))
            else:
                order.append(node)

    comps = []
    assigned = np.zeros(k, dtype=bool)
    for start in reversed(order):
        if assigned[start]:
            continue
        comp = [start]
        assigned[start] = True
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in pred[node]:
                if not assigned[nxt]:
                    assigned[nxt] = True
                    comp.append(nxt)
                    stack.append(nxt)
        comps.append(sorted(comp))
    return comps


def is_irreducible(z: ZeroPattern) -> bool:
    """True iff the digraph of positive entries is strongly connected."""
    return len(strongly_connected_components(z.mask)) == 1


def is_fully_indecomposable(z: ZeroPattern) -> bool:
    """No all-zero submatrix with row + column count >= K.

    Tested as: permute columns onto a positive diagonal (if one exists),
    then check irreducibility of the permuted pattern.  Without support the
    matrix cannot be fully indecomposable.
    """
    witness = has_support(z)
    if isinstance(witness, ZeroBlock):
        return False
    permuted = z.mask[:, witness.permutation.image]
    return is_irreducible(ZeroPattern(permuted))


def is_primitive(z: ZeroPattern) -> bool:
    """Some boolean power of the pattern is all-positive.

    Powers are checked up to the Wielandt bound (K-1)^2 + 1, which is sharp
    for primitive matrices.
    """
    k = z.K
    base = z.mask.astype(np.uint8)
    power = base.copy()
    for _ in range((k - 1) ** 2 + 1):
        if power.all():
            return True
        power = (power @ base > 0).astype(np.uint8)
    return False


def _topological_component_order(comps: list, mask: np.ndarray) -> list:
    """Kahn's algorithm on the condensation, ties broken by the smallest
    original vertex index so the normal form is deterministic."""
    comp_of = np.empty(mask.shape[0], dtype=int)
    for label, comp in enumerate(comps):
        comp_of[comp] = label
    n = len(comps)
    succs = [set() for _ in range(n)]
    indeg = np.zeros(n, dtype=int)
    for i, j in zip(*np.nonzero(mask)):
        a, b = comp_of[i], comp_of[j]
        if a != b and b not in succs[a]:
            succs[a].add(b)
            indeg[b] += 1
    heap = [(comps[c][0], c) for c in range(n) if indeg[c] == 0]
    heapq.heapify(heap)
    ordered = []
    while heap:
        _, c = heapq.heappop(heap)
        ordered.append(c)
        for b in succs[c]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, (comps[b][0], b))
    return ordered


def normal_form(m: VarianceProfile) -> NormalForm:
    """Block upper triangular normal form Q1 * S * Q2^t.

    Construction: column-permute onto a positive diagonal given by a maximum
    matching, take strongly connected components of the resulting digraph,
    and order the components topologically so cross-component blocks sit
    strictly above the diagonal.  Diagonal blocks are irreducible with a
    positive main diagonal, hence fully indecomposable and primitive.

    Raises NoSupportError (with the Frobenius-Koenig witness) when no
    positive diagonal exists.
    """
    zp = zero_pattern(m)
    witness = has_support(zp)
    if isinstance(witness, ZeroBlock):
        raise NoSupportError(witness)
    col_of = witness.permutation.image
    permuted_mask = zp.mask[:, col_of]

    comps = strongly_connected_components(permuted_mask)
    ordered = _topological_component_order(comps, permuted_mask)
    pi = np.concatenate([comps[c] for c in ordered]).astype(int)

    q1 = Permutation(pi)
    q2 = Permutation(col_of[pi])
    s_tilde = m.entries[np.ix_(q1.image, q2.image)]
    block_sizes = np.array([len(comps[c]) for c in ordered], dtype=int)
    return NormalForm(q1=q1, q2=q2, s_tilde=s_tilde, block_sizes=block_sizes)


def spectral_radius(m: VarianceProfile, tol: float = 1e-13,
                    max_iter: int = 500_000) -> tuple[float, np.ndarray]:
    """Perron-Frobenius eigenvalue of S and the positive eigenvector of S^t.

    Power iteration on S^t + I seeded with the all-ones vector; the identity
    shift damps the periodic part of the peripheral spectrum, so convergence
    only needs irreducibility.  Returns (rho, s) with S^t s = rho * s,
    normalized to <s> = 1.
    """
    st = m.entries.T
    x = np.ones(m.K)
    rho = 0.0
    for iteration in range(max_iter):
        y = st @ x
        rho = float((x @ y) / (x @ x))
        residual = np.max(np.abs(y - rho * x))
        if residual <= tol * max(rho, np.finfo(float).tiny) * np.max(np.abs(x)):
            if rho <= 0 or np.any(x <= 0):
                raise NonConvergenceError(
                    "power iteration collapsed to a nonpositive vector",
                    residual=residual, iterations=iteration)
            return rho, x / x.mean()
        x = y + x
        x /= np.max(x)
    raise NonConvergenceError(
        f"spectral radius did not converge in {max_iter} iterations",
        residual=residual, iterations=max_iter)


def variance_profile_from_dict(obj: dict) -> VarianceProfile:
    """Parse the shared matrix input format.

    Either {"K": int, "S": [[...]]} with nonnegative variances or
    {"K": int, "P": [[...]]} with probabilities in [0, 1] (variances derived
    as p(1-p)).  Ragged rows, wrong sizes, and out-of-range values are
    rejected.
    """
    if not isinstance(obj, dict):
        raise MatrixFormatError("matrix input must be a JSON object")
    if ("S" in obj) == ("P" in obj):
        raise MatrixFormatError('matrix input needs exactly one of "S" or "P"')
    key = "S" if "S" in obj else "P"
    rows = obj[key]
    if not isinstance(rows, list) or not rows:
        raise MatrixFormatError(f'"{key}" must be a non-empty list of rows')
    k = len(rows)
    for row in rows:
        if not isinstance(row, list) or len(row) != k:
            raise MatrixFormatError(f'"{key}" has ragged rows (expected {k} columns)')
    declared = obj.get("K")
    if declared is not None and declared != k:
        raise MatrixFormatError(f'"K"={declared} does not match matrix size {k}')
    arr = np.array(rows, dtype=float)
    if key == "S":
        return VarianceProfile(arr)
    return VarianceProfile.from_probabilities(arr)


def load_variance_profile(path) -> VarianceProfile:
    """Load the JSON matrix format from a file path."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"invalid JSON in {path}: {exc}") from exc
    return variance_profile_from_dict(obj)
