from __future__ import annotations

from collections import Counter

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplicial_reduction.cliques import (clique_counts, clique_number, max_clique_size,
                                          uniform_box_clique)
from simplicial_reduction.geometry import (PointConfiguration, RipsParams, TorusSpec,
                                           binomial_process, neighbor_sets, proximity_pairs,
                                           rips_complex)


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 18))
    p = draw(st.floats(0.1, 0.9))
    seed = draw(st.integers(0, 2**31))
    return nx.gnp_random_graph(n, p, seed=seed)


def adjacency(g):
    return [set(g[v]) for v in range(g.number_of_nodes())]


class TestBranchAndBound:
    @settings(max_examples=200, deadline=None)
    @given(graphs())
    def test_matches_networkx(self, g):
        expected = max((len(c) for c in nx.find_cliques(g)), default=0)
        assert max_clique_size(adjacency(g)) == expected

    def test_complete_graph(self):
        assert max_clique_size(adjacency(nx.complete_graph(40))) == 40


class TestCounts:
    @settings(max_examples=100, deadline=None)
    @given(graphs())
    def test_counts_match_networkx(self, g):
        sizes = Counter(len(c) for c in nx.enumerate_all_cliques(g))
        counts, complete = clique_counts(adjacency(g))
        assert complete
        assert counts == [sizes[k] for k in range(1, len(sizes) + 1)]

    def test_budget_stops_early_but_keeps_last_level(self):
        adj = adjacency(nx.complete_graph(12))
        counts, complete = clique_counts(adj, budget=100)
        assert not complete
        assert counts == [12, 66, 220]

    def test_counts_equal_simplex_counts(self):
        cfg = binomial_process(TorusSpec(2), 40, seed=4)
        cx = rips_complex(cfg, RipsParams(0.2))
        counts, _ = clique_counts(neighbor_sets(40, proximity_pairs(cfg, 0.2)))
        assert tuple(counts) == cx.s_counts


class TestBoxSweep:
    @pytest.mark.parametrize("periodic", [True, False])
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_branch_and_bound(self, seed, periodic):
        rng = np.random.default_rng(seed)
        d = 1 + seed % 3
        cfg = binomial_process(TorusSpec(d, 1.0, periodic=periodic), int(rng.integers(5, 80)), seed)
        eps = float(rng.uniform(0.05, 1 / 3))
        assert clique_number(cfg, eps, "box") == clique_number(cfg, eps, "branch")

    def test_guard_on_large_epsilon(self):
        # three points spread around the circle are pairwise close but fit in no short arc
        cfg = PointConfiguration(TorusSpec(1), [[0.0], [0.34], [0.68]])
        assert clique_number(cfg, 0.35, "branch") == 3
        with pytest.raises(ValueError):
            uniform_box_clique(cfg, 0.35)
        assert clique_number(cfg, 0.35) == 3

    def test_euclidean_rejected(self):
        cfg = binomial_process(TorusSpec(2, metric="euclidean"), 5, seed=0)
        with pytest.raises(ValueError):
            uniform_box_clique(cfg, 0.1)

    def test_empty(self):
        assert clique_number(PointConfiguration(TorusSpec(2), np.zeros((0, 2))), 0.1) == 0
