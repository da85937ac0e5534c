from __future__ import annotations

import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplicial_reduction import experiments as ex
from simplicial_reduction.complex import SimplicialComplex, full_simplex
from simplicial_reduction.errors import NotFoundError, PreconditionError, ValidationError
from simplicial_reduction.geometry import PointConfiguration, TorusSpec
from simplicial_reduction.homology import betti_numbers
from simplicial_reduction.reduction import (CRITICAL, OpCounters,
                                            ReduceOptions, ReductionReport, build_tables,
                                            compute_degrees, compute_indices, degree_of,
                                            full_domain_prefilter, incremental_index_update,
                                            random_critical, reduce, removal_bounds,
                                            verify_dominating, verify_nash)

# Edge (0, 1) lies only in the triangle (0, 1, 2); every edge at 2 lies in a tetrahedron.
LOCALITY_COUNTEREXAMPLE = [(0, 1, 2), (0, 2, 3, 4), (1, 2, 5, 6)]


def degree_oracle(cx, sigma):
    return max(len(t) - 1 for t in cx if set(sigma) <= set(t))


class TestDegrees:
    def test_lone_and_embedded_triangle(self):
        assert degree_of(full_simplex([0, 1, 2]), (0, 1, 2)) == 2
        assert degree_of(full_simplex([0, 1, 2, 3]), (0, 1, 2)) == 3

    def test_k0_must_be_positive(self, loop_complex):
        with pytest.raises(ValidationError):
            compute_degrees(loop_complex, 0)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_superset_oracle(self, seed):
        cx = ex.random_rips_instance(seed, n_range=(8, 14), epsilon_range=(0.25, 0.4)).complex
        for k0 in (1, 2):
            for sigma, d in compute_degrees(cx, k0).items():
                assert d == degree_oracle(cx, sigma)

    def test_traversal_counter(self):
        counters = OpCounters()
        compute_degrees(full_simplex([0, 1, 2, 3]), 2, counters)
        # each triangle sees exactly the tetrahedron above it
        assert counters.degree_traversals == 4


class TestIndices:
    def test_tetrahedron_with_flap(self, flap_complex):
        idx = compute_indices(flap_complex, compute_degrees(flap_complex, 2), 2)
        assert idx.index == {0: 3, 1: 2, 2: 3, 3: 2, 4: 2}
        assert idx.i_max == 3

    def test_isolated_vertex_has_index_zero(self):
        cx = SimplicialComplex([(0, 1), (5,)])
        idx = compute_indices(cx, compute_degrees(cx, 1), 1)
        assert idx[5] == 0 and idx[0] == 1

    def test_critical_flags(self, flap_complex):
        idx = compute_indices(flap_complex, compute_degrees(flap_complex, 2), 2, critical=[0])
        assert idx[0] == -1 and idx.flags[0] == CRITICAL
        with pytest.raises(NotFoundError):
            compute_indices(flap_complex, compute_degrees(flap_complex, 2), 2, critical=[9])


class TestIncrementalUpdate:
    def test_locality_counterexample(self):
        cx = SimplicialComplex(LOCALITY_COUNTEREXAMPLE)
        tables = build_tables(cx, 1)
        assert tables.indices.index == {0: 2, 1: 2, 2: 3, 3: 3, 4: 3, 5: 3, 6: 3}
        i_max = tables.indices.i_max
        assert tuple(betti_numbers(cx, 1, exclude=2)) == (1,)

        removed = cx.remove_vertex(2)
        fresh = build_tables(cx, 1).indices.index
        assert fresh[0] == 1

        # Recomputing only vertices that sat at i_max leaves vertex 0 stale.
        literal = {v: i for v, i in tables.indices.index.items() if v != 2}
        redo = {v for v, i in literal.items() if i == i_max}
        literal.update({v: fresh[v] for v in redo})
        assert literal[0] == 2 != fresh[0]

        incremental_index_update(cx, 2, removed, i_max, tables)
        assert tables.indices.index == fresh
        assert tables.degrees == compute_degrees(cx, 1)

    @pytest.mark.parametrize("seed", range(30))
    def test_random_removal_sequences(self, seed):
        inst = ex.random_rips_instance(seed, n_range=(6, 14), epsilon_range=(0.2, 0.45))
        rng = np.random.default_rng(seed)
        for k0 in (1, 2):
            cx = inst.complex.copy()
            tables = build_tables(cx, k0)
            for v in rng.permutation(cx.vertices)[: cx.count(0) // 2]:
                i_max = tables.indices.i_max
                # only vertices at i_max are ever removed by the loop
                cands = sorted(u for u, i in tables.indices.index.items() if i == i_max)
                w = cands[int(v) % len(cands)]
                removed = cx.remove_vertex(w)
                incremental_index_update(cx, w, removed, i_max, tables)
                fresh = build_tables(cx, k0)
                assert tables.degrees == fresh.degrees
                assert tables.indices.index == fresh.indices.index


class TestBounds:
    def test_two_vertex_histogram(self):
        assert removal_bounds({-1: 2, 3: 2}, 2, 3) == (1, 2)

    def test_all_critical(self):
        assert removal_bounds({-1: 4}, 2, -1) == (0, 0)

    def test_lower_bound_attained(self):
        # k-simplex with n_C = k critical vertices: one removal, one level
        report = reduce(full_simplex(range(4)), [0, 1, 2], 2, seed=0)
        assert report.bounds == (1, 1) and report.M == 1

    def test_upper_bound_attained(self):
        report = reduce(full_simplex(range(5)), [0, 1], 2, seed=3)
        assert report.bounds == (1, 3) and report.M == 3

    def test_upper_bound_excludes_index_k0_vertices(self):
        # a removable leaf has index k0 and is not counted by the stated upper bound
        cx = SimplicialComplex([(0, 1)])
        report = reduce(cx, [0], 1, seed=0)
        assert report.bounds == (0, 0)
        assert report.M == 1


class TestReduce:
    def test_tetrahedron_two_critical(self):
        cx = full_simplex([0, 1, 2, 3])
        report = reduce(cx, [1, 2], 2, seed=0)
        assert sorted(report.removal_order) == [0, 3]
        assert report.e_k_histogram == {-1: 2, 3: 2}
        assert report.initial_i_max == 3
        assert report.final_complex == full_simplex([1, 2])
        assert cx.s_counts == (4, 6, 4, 1)

    def test_loop_keeps_the_hole(self, loop_complex):
        report = reduce(loop_complex, [], 2, seed=0)
        assert betti_numbers(report.final_complex, 2).betti == (1, 1)
        assert verify_nash(report, loop_complex)

    def test_path_graph(self):
        cx = SimplicialComplex([(0, 1), (1, 2), (2, 3)])
        report = reduce(cx, [0, 3], 1, seed=0)
        assert report.M == 0
        assert sorted(report.rejected) == [1, 2]
        assert verify_nash(report, cx)

    def test_all_critical(self, flap_complex):
        report = reduce(flap_complex, range(5), 2, seed=0)
        assert report.M == 0 and report.bounds == (0, 0) and report.draws == []

    def test_unknown_critical(self, flap_complex):
        with pytest.raises(NotFoundError):
            reduce(flap_complex, [7], 2)

    @pytest.mark.parametrize("full_domain", [False, True])
    def test_rejected_vertex_is_kept(self, full_domain):
        # bowtie: the shared vertex has index 2 and disconnects the complex
        cx = SimplicialComplex([(0, 1, 2), (2, 3, 4)])
        report = reduce(cx, [0, 1, 3, 4], 1, ReduceOptions(full_domain=full_domain), seed=0)
        assert report.rejected == [2]
        assert report.draws == [(2, 2, False)]
        assert report.final_indices[2] == -1
        assert report.final_complex == cx

    def test_full_domain_warns_on_index_zero(self, caplog):
        cx = SimplicialComplex([(0, 1, 2), (5,)])
        report = reduce(cx, [0], 2, ReduceOptions(full_domain=True), seed=0)
        assert report.warnings and "index 0" in report.warnings[0]
        assert "index 0" in caplog.text

    def test_deterministic(self):
        inst = ex.random_rips_instance(11)
        a = reduce(inst.complex, inst.critical, 2, seed=5).to_dict()
        b = reduce(inst.complex, inst.critical, 2, seed=5).to_dict()
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_gf2_field(self):
        inst = ex.random_rips_instance(4)
        report = reduce(inst.complex, inst.critical, 2, ReduceOptions(field=2), seed=0)
        assert betti_numbers(report.final_complex, 2, 2).betti == report.initial_betti
        assert verify_nash(report, inst.complex)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([1, 2]), st.booleans())
    def test_betti_preserved_and_nash(self, seed, k0, full_domain):
        inst = ex.random_rips_instance(seed, n_range=(6, 18))
        logging.disable(logging.WARNING)
        try:
            report = reduce(inst.complex, inst.critical, k0,
                            ReduceOptions(full_domain=full_domain, verify_incremental=True), seed=seed)
        finally:
            logging.disable(logging.NOTSET)
        assert all(b == report.initial_betti for b in report.step_betti)
        assert betti_numbers(report.final_complex, k0).betti == report.initial_betti
        assert report.incremental_mismatches == 0
        assert set(report.critical) <= set(report.final_complex.vertices)
        assert verify_nash(report, inst.complex)
        if full_domain:
            assert report.M <= report.bounds[1]

    def test_counters_charge_deletions(self):
        report = reduce(full_simplex(range(4)), [1, 2], 2, seed=0)
        c = report.counters
        assert c.simplex_deletions == 8 + 4
        assert c.charged == c.degree_traversals + c.index_scans + c.simplex_deletions
        assert c.betti_evaluations == 3


class TestReportSerialization:
    def test_round_trip(self):
        inst = ex.random_rips_instance(2)
        report = reduce(inst.complex, inst.critical, 2, ReduceOptions(field=3), seed=1)
        data = json.loads(json.dumps(report.to_dict()))
        back = ReductionReport.from_dict(data)
        assert back.to_dict() == report.to_dict()
        assert back.final_complex == report.final_complex
        assert verify_nash(back, inst.complex)

    def test_rejects_unknown_version(self):
        data = reduce(full_simplex(range(3)), [], 1, seed=0).to_dict()
        data["format_version"] = "other/9"
        with pytest.raises(ValidationError):
            ReductionReport.from_dict(data)


class TestVerification:
    def test_nash_rejects_tampered_final_complex(self):
        cx = full_simplex(range(4))
        report = reduce(cx, [1, 2], 2, seed=0)
        report.final_complex = cx.copy()
        assert not verify_nash(report, cx)

    def test_nash_rejects_incomplete_run(self):
        cx = full_simplex(range(4))
        report = reduce(cx, [1, 2], 2, seed=0)
        first = report.removal_order[0]
        report.removal_order = [first]
        report.final_complex = cx.copy()
        report.final_complex.remove_vertex(first)
        assert not verify_nash(report, cx)

    def test_dominating_precondition(self):
        report = reduce(full_simplex(range(4)), [1, 2], 2, seed=0)
        with pytest.raises(PreconditionError):
            verify_dominating(report, full_simplex(range(4)))

    def test_dominating_detects_gap(self):
        cx = SimplicialComplex([(0, 1), (1, 2), (2, 3)])
        report = reduce(cx, [0, 1, 2, 3], 2, ReduceOptions(full_domain=True), seed=0)
        assert verify_dominating(report, cx)
        report.final_complex = SimplicialComplex([(0,)])
        assert not verify_dominating(report, cx)

    @pytest.mark.parametrize("seed", range(10))
    def test_coverage_runs_dominate(self, seed):
        inst = ex.coverage_instance(seed, lam=3.0)
        logging.disable(logging.WARNING)
        try:
            report = reduce(inst.complex, inst.critical, 2, ReduceOptions(full_domain=True), seed=seed)
        finally:
            logging.disable(logging.NOTSET)
        assert verify_dominating(report, inst.complex)
        assert set(inst.critical) <= set(report.final_complex.vertices)


class TestPrefilter:
    def test_drops_outside_hull(self):
        pts = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [3, 3]]
        cfg = PointConfiguration(TorusSpec(2, 4.0, periodic=False), pts)
        cx = SimplicialComplex([(0, 1, 4), (1, 2, 4), (2, 3, 4), (0, 3, 4), (2, 5)])
        out, dropped = full_domain_prefilter(cx, cfg, [0, 1, 2, 3])
        assert dropped == [5]
        assert 5 not in out.vertices and 4 in out.vertices
        assert cx.has_vertex(5)

    def test_one_dimensional(self):
        cfg = PointConfiguration(TorusSpec(1, 4.0, periodic=False), [[0.0], [2.0], [1.0], [3.0]])
        cx = SimplicialComplex([(0, 2), (2, 1), (1, 3)])
        _, dropped = full_domain_prefilter(cx, cfg, [0, 1])
        assert dropped == [3]

    def test_degenerate_and_high_dimension(self):
        cfg = PointConfiguration(TorusSpec(2, 4.0, periodic=False), [[0, 0], [1, 1], [2, 2]])
        cx = SimplicialComplex([(0, 1, 2)])
        with pytest.raises(PreconditionError):
            full_domain_prefilter(cx, cfg, [0, 1, 2])
        cfg3 = PointConfiguration(TorusSpec(3), np.zeros((3, 3)))
        with pytest.raises(PreconditionError):
            full_domain_prefilter(cx, cfg3, [0])


def test_random_critical_is_seeded():
    a = random_critical(range(50), 0.5, 3)
    assert a == random_critical(range(50), 0.5, 3)
    assert 10 < len(a) < 40
    assert random_critical(range(5), 0.0, 0) == []
