"""Edge-labeled block relation graph and the exact cycle invariant.

The normal form induces two relations on block labels: LHD edges from
nonzero off-diagonal blocks of the triangular form, and PREC edges from
nonzero blocks of the permutation Q = Q1 * Q2^t.  The invariant kappa is
the minimum over closed walks of (PREC-only traversals) / (length), an
exact rational computed by Karp's minimum mean cycle algorithm; the planar
Novikov-Shubin invariant of the model is 2 * kappa.

Vertices are 0-based throughout, including serialized output.  An edge
carrying both labels is traversed at cost 0 (as LHD): only traversals that
cannot ride an LHD edge count toward the numerator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np

from .errors import (
    LabelNotPresentError,
    NotIrreducibleError,
    NotStronglyConnectedError,
    TooLargeError,
)
from .structure import (
    NormalForm,
    VarianceProfile,
    is_irreducible,
    normal_form,
    strongly_connected_components,
    zero_pattern,
)

__all__ = [
    "LHD",
    "PREC",
    "BlockRelationGraph",
    "KappaResult",
    "build_block_graph",
    "check_strong_connectivity",
    "traversal_cost",
    "min_cycle_mean",
    "brute_force_kappa",
    "kappa_of",
]

LHD = "LHD"
PREC = "PREC"

_BRUTE_FORCE_MAX_VERTICES = 10


@dataclass(eq=False)
class BlockRelationGraph:
    """Directed graph on block labels with each edge carrying a nonempty
    subset of {LHD, PREC}.  LHD edges always go strictly upward (l < k)."""

    L: int
    edges: dict

    def __post_init__(self):
        for (l, k), labels in self.edges.items():
            if not labels or not labels <= {LHD, PREC}:
                raise ValueError(f"edge ({l},{k}) carries invalid labels {labels}")
            if LHD in labels and l >= k:
                raise ValueError(f"LHD edge ({l},{k}) is not strictly upward")

    def adjacency_mask(self) -> np.ndarray:
        mask = np.zeros((self.L, self.L), dtype=bool)
        for l, k in self.edges:
            mask[l, k] = True
        return mask

    def cost(self, edge: tuple) -> int:
        """Cheapest traversal cost of an existing edge."""
        return 0 if LHD in self.edges[edge] else 1

    def cheapest_label(self, edge: tuple) -> str:
        return LHD if LHD in self.edges[edge] else PREC


@dataclass(eq=False)
class KappaResult:
    """Exact cycle invariant with a witness closed walk.

    kappa = prec_count / length over the witness; c_ns = 2 * kappa.
    The witness is a list of (l, k, label) traversals, 0-based.
    """

    kappa: Fraction
    c_ns: Fraction
    witness_cycle: list
    prec_count: int
    length: int

    def as_dict(self) -> dict:
        return {
            "kappa": str(self.kappa),
            "c_ns": str(self.c_ns),
            "witness": [[l, k, label] for (l, k, label) in self.witness_cycle],
        }


def build_block_graph(nf: NormalForm) -> BlockRelationGraph:
    """LHD edges from nonzero off-diagonal blocks of s_tilde; PREC edges
    from nonzero blocks of Q = Q1 * Q2^t under the same block partition."""
    edges: dict = {}

    def add(l, k, label):
        edges.setdefault((l, k), set()).add(label)

    L = nf.L
    for l in range(L):
        sl = nf.block_slice(l)
        for k in range(L):
            if l == k:
                continue
            if np.any(nf.s_tilde[sl, nf.block_slice(k)] > 0):
                add(l, k, LHD)

    # Q[a, b] = 1 iff q1[a] == q2[b]; walk positions instead of forming Q.
    q2_inv = nf.q2.inverse().image
    for a in range(nf.K):
        b = int(q2_inv[nf.q1.image[a]])
        add(int(nf.block_of[a]), int(nf.block_of[b]), PREC)

    return BlockRelationGraph(L=L, edges={e: frozenset(s) for e, s in edges.items()})


def check_strong_connectivity(g: BlockRelationGraph) -> bool:
    """True iff the union of LHD and PREC edges is strongly connected."""
    return len(strongly_connected_components(g.adjacency_mask())) == 1


def traversal_cost(labels, chosen_label: str) -> int:
    """Cost of traversing an edge under a chosen label: LHD free, PREC one."""
    if chosen_label not in labels:
        raise LabelNotPresentError(f"label {chosen_label!r} not on edge with labels {set(labels)}")
    return 0 if chosen_label == LHD else 1


def min_cycle_mean(g: BlockRelationGraph) -> KappaResult:
    """Karp's minimum mean cycle on the cheapest-label reduction.

    Each edge takes its cheapest label (dual-labeled edges ride LHD at cost
    0), weights are integers in {0, 1}, and the minimum mean is returned as
    an exact Fraction together with a witness cycle recovered from the
    dynamic-programming table.  Requires strong connectivity.
    """
    if not check_strong_connectivity(g):
        raise NotStronglyConnectedError("block relation graph is not strongly connected")
    n = g.L
    preds: list = [[] for _ in range(n)]
    for (l, k), _ in sorted(g.edges.items()):
        preds[k].append((l, g.cost((l, k))))

    INF = n + 1  # walks have weight <= n, so this acts as infinity
    dist = np.full((n + 1, n), INF, dtype=np.int64)
    parent = np.full((n + 1, n), -1, dtype=np.int64)
    dist[0, 0] = 0  # source: vertex 0 (any vertex works in a strongly connected graph)
    for step in range(1, n + 1):
        for k in range(n):
            best, arg = INF, -1
            for l, cost in preds[k]:
                if dist[step - 1, l] < INF and dist[step - 1, l] + cost < best:
                    best, arg = dist[step - 1, l] + cost, l
            dist[step, k] = best
            parent[step, k] = arg

    best_mean = None
    best_vertex = -1
    for k in range(n):
        if dist[n, k] >= INF:
            continue
        worst = None
        for step in range(n):
            if dist[step, k] >= INF:
                continue
            mean = Fraction(int(dist[n, k] - dist[step, k]), n - step)
            if worst is None or mean > worst:
                worst = mean
        if worst is not None and (best_mean is None or worst < best_mean):
            best_mean, best_vertex = worst, k

    # Walk the n-step optimal path backwards; the first repeated vertex
    # closes a cycle whose mean equals the minimum (every cycle in a
    # minimizing walk's decomposition is critical).
    path = [best_vertex]
    node = best_vertex
    for step in range(n, 0, -1):
        node = int(parent[step, node])
        path.append(node)
    path.reverse()
    seen: dict = {}
    cycle_nodes = None
    for idx, node in enumerate(path):
        if node in seen:
            cycle_nodes = path[seen[node]: idx + 1]
            break
        seen[node] = idx

    witness = []
    prec_count = 0
    for l, k in zip(cycle_nodes[:-1], cycle_nodes[1:]):
        label = g.cheapest_label((l, k))
        witness.append((l, k, label))
        prec_count += traversal_cost(g.edges[(l, k)], label)
    length = len(witness)
    kappa = Fraction(prec_count, length)
    if kappa != best_mean:
        raise AssertionError(
            f"witness cycle mean {kappa} disagrees with Karp value {best_mean}")
    return KappaResult(kappa=kappa, c_ns=2 * kappa, witness_cycle=witness,
                       prec_count=prec_count, length=length)


def brute_force_kappa(g: BlockRelationGraph) -> Fraction:
    """Minimum traversal-cost ratio over all simple cycles, by enumeration.

    The minimum mean is attained on a simple cycle, so this is an exact
    oracle for min_cycle_mean on small graphs.
    """
    if g.L > _BRUTE_FORCE_MAX_VERTICES:
        raise TooLargeError(f"brute force limited to {_BRUTE_FORCE_MAX_VERTICES} vertices")
    if not check_strong_connectivity(g):
        raise NotStronglyConnectedError("block relation graph is not strongly connected")
    dg = nx.DiGraph()
    dg.add_nodes_from(range(g.L))
    dg.add_edges_from(g.edges)
    best = None
    for nodes in nx.simple_cycles(dg):
        closed = nodes + [nodes[0]]
        cost = sum(g.cost((l, k)) for l, k in zip(closed[:-1], closed[1:]))
        ratio = Fraction(cost, len(nodes))
        if best is None or ratio < best:
            best = ratio
    if best is None:
        raise NotStronglyConnectedError("graph has no cycles")
    return best


def kappa_of(m: VarianceProfile) -> KappaResult:
    """Exact invariant of a variance profile: normal form, block relation
    graph, minimum mean cycle.  Requires irreducibility and support."""
    if not is_irreducible(zero_pattern(m)):
        raise NotIrreducibleError("variance profile is not irreducible")
    return min_cycle_mean(build_block_graph(normal_form(m)))
