from fractions import Fraction

import numpy as np
import pytest

from dsbm_ns import (
    BlockRelationGraph,
    LHD,
    PREC,
    LabelNotPresentError,
    NotIrreducibleError,
    NotStronglyConnectedError,
    TooLargeError,
    VarianceProfile,
    brute_force_kappa,
    build_block_graph,
    check_strong_connectivity,
    kappa_of,
    min_cycle_mean,
    normal_form,
    traversal_cost,
)
from conftest import random_supported_irreducible


def edges_by_label(graph, label):
    return {e for e, labels in graph.edges.items() if label in labels}


class TestBuildBlockGraph:
    def test_example1_edges(self, example1):
        g = build_block_graph(normal_form(example1))
        assert g.L == 4
        assert edges_by_label(g, LHD) == {(0, 1), (1, 2), (2, 3)}
        assert edges_by_label(g, PREC) == {(0, 3), (1, 0), (2, 1), (3, 2)}

    def test_example2_edges(self, example2):
        g = build_block_graph(normal_form(example2))
        assert edges_by_label(g, LHD) == {(0, 1), (1, 2), (2, 3)}
        assert edges_by_label(g, PREC) == {(0, 2), (2, 0), (1, 3), (3, 1)}

    def test_example3_edges(self, example3):
        g = build_block_graph(normal_form(example3))
        assert edges_by_label(g, LHD) == {(0, 1), (1, 2), (2, 3)}
        assert edges_by_label(g, PREC) == {(0, 3), (3, 0), (1, 2), (2, 1)}

    def test_single_vertex(self, single_block):
        g = build_block_graph(normal_form(single_block))
        assert g.L == 1
        assert g.edges == {(0, 0): frozenset({PREC})}


class TestStrongConnectivity:
    def test_examples_connected(self, example1, example2, example3):
        for m in (example1, example2, example3):
            assert check_strong_connectivity(build_block_graph(normal_form(m)))

    def test_self_loop_connected(self):
        g = BlockRelationGraph(L=1, edges={(0, 0): frozenset({PREC})})
        assert check_strong_connectivity(g)

    def test_one_way_not_connected(self):
        g = BlockRelationGraph(L=2, edges={(0, 1): frozenset({PREC})})
        assert not check_strong_connectivity(g)
        with pytest.raises(NotStronglyConnectedError):
            min_cycle_mean(g)


class TestTraversalCost:
    def test_costs(self):
        assert traversal_cost({LHD, PREC}, LHD) == 0
        assert traversal_cost({PREC}, PREC) == 1
        assert traversal_cost({LHD}, LHD) == 0

    def test_label_not_present(self):
        with pytest.raises(LabelNotPresentError):
            traversal_cost({LHD}, PREC)


class TestMinCycleMean:
    @pytest.mark.parametrize("fixture,expected", [
        ("example1", Fraction(1, 2)),
        ("example2", Fraction(1, 3)),
        ("example3", Fraction(1, 4)),
    ])
    def test_golden_values(self, request, fixture, expected):
        m = request.getfixturevalue(fixture)
        result = min_cycle_mean(build_block_graph(normal_form(m)))
        assert result.kappa == expected
        assert result.c_ns == 2 * expected

    def test_single_vertex_loop(self, single_block):
        result = min_cycle_mean(build_block_graph(normal_form(single_block)))
        assert result.kappa == Fraction(1)

    def test_witness_is_valid_cycle(self, example2):
        g = build_block_graph(normal_form(example2))
        result = min_cycle_mean(g)
        walk = result.witness_cycle
        assert walk[0][0] == walk[-1][1]  # closed
        prec = 0
        for (l, k, label), (l2, _, _) in zip(walk, walk[1:] + walk[:1]):
            assert k == l2
            assert label in g.edges[(l, k)]
            prec += traversal_cost(g.edges[(l, k)], label)
        assert Fraction(prec, len(walk)) == result.kappa
        assert result.prec_count == prec
        assert result.length == len(walk)


def random_labeled_graph(rng):
    """Random strongly connected graph with upward LHD edges and arbitrary
    PREC edges (rejection sampled)."""
    while True:
        L = int(rng.integers(1, 9))
        edges = {}
        for l in range(L):
            for k in range(L):
                labels = set()
                if l < k and rng.random() < 0.35:
                    labels.add(LHD)
                if rng.random() < 0.25:
                    labels.add(PREC)
                if labels:
                    edges[(l, k)] = frozenset(labels)
        g = BlockRelationGraph(L=L, edges=edges)
        if edges and check_strong_connectivity(g):
            return g


class TestBruteForceOracle:
    def test_examples(self, example1, example2, example3):
        for m, expected in ((example1, Fraction(1, 2)), (example2, Fraction(1, 3)),
                            (example3, Fraction(1, 4))):
            g = build_block_graph(normal_form(m))
            assert brute_force_kappa(g) == expected

    def test_too_large(self):
        edges = {(l, (l + 1) % 11): frozenset({PREC}) for l in range(11)}
        with pytest.raises(TooLargeError):
            brute_force_kappa(BlockRelationGraph(L=11, edges=edges))

    def test_karp_matches_enumeration_on_random_graphs(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            g = random_labeled_graph(rng)
            assert min_cycle_mean(g).kappa == brute_force_kappa(g)


class TestKappaOf:
    def test_examples_c_ns(self, example1, example3):
        assert kappa_of(example1).c_ns == Fraction(1)
        assert kappa_of(example3).c_ns == Fraction(1, 2)

    def test_all_positive(self):
        result = kappa_of(VarianceProfile(np.ones((3, 3))))
        assert result.kappa == Fraction(1)
        assert result.c_ns == Fraction(2)

    def test_not_irreducible(self):
        with pytest.raises(NotIrreducibleError):
            kappa_of(VarianceProfile(np.eye(3)))

    def test_kappa_range_and_invariances(self):
        from dsbm_ns import NormalForm, Permutation

        rng = np.random.default_rng(99)
        for _ in range(60):
            m = random_supported_irreducible(rng, max_k=6)
            kappa = kappa_of(m).kappa
            assert 0 < kappa <= 1
            # zero-pattern invariance: random positive rescaling
            scaled = VarianceProfile(m.entries * rng.uniform(0.1, 10.0, m.entries.shape))
            assert kappa_of(scaled).kappa == kappa
            # normal-form choice invariance: decompose a permuted encoding,
            # compose the permutations back into an alternative normal form
            # of the same S, and recompute kappa from it
            k = m.K
            p1, p2 = rng.permutation(k), rng.permutation(k)
            nf_alt = normal_form(VarianceProfile(m.entries[np.ix_(p1, p2)]))
            composed = NormalForm(
                q1=Permutation(p1[nf_alt.q1.image]),
                q2=Permutation(p2[nf_alt.q2.image]),
                s_tilde=nf_alt.s_tilde,
                block_sizes=nf_alt.block_sizes,
            )
            assert np.array_equal(composed.reconstruct(), m.entries)
            assert min_cycle_mean(build_block_graph(composed)).kappa == kappa

    def test_serialization(self, example1):
        d = kappa_of(example1).as_dict()
        assert d["kappa"] == "1/2"
        assert d["c_ns"] == "1"
        for l, k, label in d["witness"]:
            assert label in (LHD, PREC)
