import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_raster
from fieldseg.scoring import (
    FIELD_STRATEGIES,
    InstanceScore,
    SelectionStrategy,
    score_instance,
    select_absolute_fields,
    select_adaptive_fields,
    select_fields,
    select_noncrop,
    site_percentile,
    strategy_from_id,
    summarize_label_set,
)
from fieldseg.segment import instances_from_map
from oracles import sorted_median, sorted_percentile


def scores_from(sem, ins=None, size=None):
    ins = ins if ins is not None else [0.5] * len(sem)
    size = size if size is not None else [600] * len(sem)
    return [
        InstanceScore(i + 1, s, b, n) for i, (s, b, n) in enumerate(zip(sem, ins, size))
    ]


class TestScoreInstance:
    def test_constant_median(self, unit_transform):
        labels = np.zeros((5, 5), dtype=np.int32)
        labels[1:4, 1:4] = 1
        (inst,) = instances_from_map(labels, unit_transform)
        r = make_raster(np.full((5, 5), 0.9), np.full((5, 5), 0.3), unit_transform)
        s = score_instance(inst, r)
        assert s.sem_c == pytest.approx(0.9)
        assert s.size_px == 9

    def test_odd_count_median(self, unit_transform):
        labels = np.zeros((1, 3), dtype=np.int32)
        labels[0, :] = 1
        (inst,) = instances_from_map(labels, unit_transform)
        p_ext = np.array([[0.2, 0.4, 0.9]])
        r = make_raster(p_ext, np.zeros((1, 3)), unit_transform)
        assert score_instance(inst, r).sem_c == pytest.approx(0.4)

    def test_even_count_midpoint(self, unit_transform):
        labels = np.ones((1, 2), dtype=np.int32)
        (inst,) = instances_from_map(labels, unit_transform)
        r = make_raster(np.zeros((1, 2)), np.array([[0.2, 0.8]]), unit_transform)
        # both pixels are boundary pixels
        assert score_instance(inst, r).ins_c == pytest.approx(0.5)

    def test_matches_sort_oracle_on_random_instances(self, unit_transform):
        rng = np.random.default_rng(9)
        for _ in range(200):
            h, w = rng.integers(4, 64, 2)
            p_ext = rng.random((h, w)).astype(np.float32)
            p_bnd = rng.random((h, w)).astype(np.float32)
            r = make_raster(p_ext, p_bnd, unit_transform)
            labels = np.zeros((h, w), dtype=np.int32)
            r0, c0 = rng.integers(0, h - 2), rng.integers(0, w - 2)
            r1 = rng.integers(r0 + 1, h)
            c1 = rng.integers(c0 + 1, w)
            labels[r0:r1, c0:c1] = 1
            (inst,) = instances_from_map(labels, unit_transform)
            s = score_instance(inst, r)
            assert s.sem_c == sorted_median(p_ext[inst.rows, inst.cols])
            assert s.ins_c == sorted_median(p_bnd[inst.boundary_rows, inst.boundary_cols])


class TestPercentile:
    def test_constant(self):
        assert site_percentile([0.8, 0.8, 0.8], 37.2) == pytest.approx(0.8)

    def test_linear_interpolation_decile_grid(self):
        vals = [0.1 * k for k in range(1, 11)]
        assert site_percentile(vals, 50) == pytest.approx(0.55)

    def test_p99_strictly_between_top_two(self):
        vals = sorted(np.random.default_rng(3).random(100))
        p99 = site_percentile(vals, 99)
        assert vals[-2] < p99 < vals[-1]

    def test_matches_rank_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            vals = rng.random(rng.integers(1, 40))
            j = rng.uniform(1, 99)
            assert site_percentile(vals, j) == pytest.approx(
                sorted_percentile(vals, j), abs=1e-12
            )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            site_percentile([], 50)


class TestAbsoluteSelection:
    def test_enumeration(self):
        scores = scores_from([0.92, 0.95, 0.98, 0.995])
        assert select_absolute_fields(scores, 0.975) == [3, 4]

    def test_nothing_above_one(self):
        scores = scores_from([0.92, 0.95])
        assert select_absolute_fields(scores, 1.0) == []

    def test_strict_inequality(self):
        scores = scores_from([0.995, 0.990])
        assert select_absolute_fields(scores, 0.990) == [1]

    @given(
        st.lists(st.floats(0, 1), min_size=1, max_size=50),
        st.floats(0, 1),
        st.floats(0, 1),
    )
    @settings(max_examples=300)
    def test_monotone_in_threshold(self, sem, t1, t2):
        t1, t2 = min(t1, t2), max(t1, t2)
        scores = scores_from(sem)
        assert set(select_absolute_fields(scores, t2)) <= set(
            select_absolute_fields(scores, t1)
        )

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=300)
    def test_noncrop_mirror_monotonicity(self, sem, t1, t2):
        # lower absolute cut selects a subset of the higher cut's selection
        scores = scores_from(sem)
        lo = [s.instance_id for s in scores if s.sem_c < min(t1, t2)]
        hi = [s.instance_id for s in scores if s.sem_c < max(t1, t2)]
        assert set(lo) <= set(hi)


class TestAdaptiveSelection:
    def test_p99_of_100_distinct_selects_one(self):
        rng = np.random.default_rng(0)
        sem = list(rng.permutation(np.linspace(0.1, 0.9, 100)))
        strategy = SelectionStrategy(kind="adaptive_sem", j=99)
        picked = select_adaptive_fields(scores_from(sem), strategy)
        assert len(picked) == 1
        assert sem[picked[0] - 1] == max(sem)

    def test_size_filter_forces_empty(self):
        sem = [0.99, 0.98, 0.97]
        strategy = SelectionStrategy(kind="adaptive_sem_size", j=99, t_size_px=500)
        scores = scores_from(sem, size=[400, 400, 400])
        assert select_adaptive_fields(scores, strategy) == []

    def test_combined_rule_top_rank(self):
        n = 20
        sem = list(np.linspace(0.2, 0.9, n))
        ins = list(np.linspace(0.1, 0.8, n))
        strategy = SelectionStrategy(kind="adaptive_sem_ins")
        picked = select_adaptive_fields(scores_from(sem, ins=ins), strategy)
        assert picked == [n]

    def test_cardinality_bound(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(1, 300))
            sem = list(rng.permutation(np.linspace(0, 1, n + 2)[1:-1]))
            strategy = SelectionStrategy(kind="adaptive_sem", j=99)
            picked = select_adaptive_fields(scores_from(sem), strategy)
            assert len(picked) <= int(np.ceil(0.01 * n)) + 1

    def test_empty_scores(self):
        strategy = SelectionStrategy(kind="adaptive_sem", j=99)
        assert select_adaptive_fields([], strategy) == []


class TestNonCropSelection:
    def test_absolute_strict(self):
        scores = scores_from([0.5, 0.74, 0.76])
        strategy = SelectionStrategy(kind="absolute", t_sem_c=0.99, negative_rule="abs_075")
        assert select_noncrop(scores, strategy) == [1, 2]

    def test_absolute_empty(self):
        scores = scores_from([0.9, 0.9, 0.9])
        strategy = SelectionStrategy(kind="absolute", t_sem_c=0.99, negative_rule="abs_075")
        assert select_noncrop(scores, strategy) == []

    def test_adaptive_p10_selects_lowest_decile(self):
        rng = np.random.default_rng(1)
        sem = list(rng.permutation(np.linspace(0.01, 0.99, 100)))
        strategy = SelectionStrategy(kind="adaptive_sem", j=99, negative_rule="p10_sem")
        picked = select_noncrop(scores_from(sem), strategy)
        assert len(picked) == 10
        assert {round(sem[i - 1], 6) for i in picked} == {
            round(v, 6) for v in sorted(sem)[:10]
        }

    def test_field_noncrop_disjoint_all_strategies(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(1, 80))
            scores = scores_from(
                list(rng.random(n)), ins=list(rng.random(n)), size=list(rng.integers(1, 2000, n))
            )
            for sid in FIELD_STRATEGIES:
                strategy = strategy_from_id(sid)
                fields = set(select_fields(scores, strategy))
                noncrop = set(select_noncrop(scores, strategy))
                assert not fields & noncrop


class TestStrategyIds:
    def test_round_trip_ids(self):
        for sid in FIELD_STRATEGIES:
            assert strategy_from_id(sid).strategy_id == sid

    def test_unknown_id(self):
        with pytest.raises(ValueError, match="p99_sem"):
            strategy_from_id("bogus")


class TestSummarize:
    def test_singleton(self):
        s = summarize_label_set({"site1": [0.1]})
        assert s.total_n_fields == 1
        assert s.mean_n_per_site == 1.0
        assert s.median_ha == pytest.approx(0.1)
        assert s.sd_ha == 0.0

    def test_counts_with_empty_site(self):
        s = summarize_label_set({"a": [0.1, 0.2], "b": []})
        assert s.mean_n_per_site == 1.0
        assert s.n_sites_0 == 1
        assert s.total_n_fields == 2

    def test_permutation_invariant(self):
        rng = np.random.default_rng(8)
        sites = {f"s{i}": list(rng.random(rng.integers(0, 9))) for i in range(20)}
        a = summarize_label_set(sites)
        b = summarize_label_set(dict(reversed(list(sites.items()))))
        assert a == b

    def test_ge5_and_max(self):
        sites = {"a": [0.1] * 5, "b": [0.2] * 24, "c": []}
        s = summarize_label_set(sites)
        assert s.n_sites_ge5 == 2
        assert s.max_n_per_site == 24
