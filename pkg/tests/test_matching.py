import itertools

import numpy as np
import pytest

from partpyr.errors import EmptyIndex, EmptyQuery, SchemeMismatch
from partpyr.features import PyramidFeature
from partpyr.matching import (
    RankedResult,
    distance,
    knn,
    pairwise_distances,
    weighted_distance,
)
from partpyr.regions import build_layout

LAYOUT_2LV = build_layout("2LV", 320)


def random_feature(rng, scheme="2LV", empty=None):
    layout = build_layout(scheme, 320)
    blocks = []
    flags = []
    for i, r in enumerate(layout.regions):
        n = r.grid * r.grid * 6
        if empty and i in empty:
            blocks.append(np.zeros(n))
            flags.append(True)
        else:
            v = rng.random(n)
            blocks.append(v / np.linalg.norm(v))
            flags.append(False)
    rel = rng.uniform(0.5, 1.0, len(layout.regions))
    rel[np.array(flags)] = 1.0
    return PyramidFeature(
        scheme=scheme,
        canvas_side=320.0,
        blocks=tuple(blocks),
        reliability=rel,
        empty_flags=np.array(flags),
    )


class FakeRecord:
    def __init__(self, model_id, view_id, feature):
        self.model_id = model_id
        self.view_id = view_id
        self.category = "c"
        self.feature = feature


class FakeIndex:
    def __init__(self, records):
        self.records = records


class TestWeightedDistance:
    def test_two_region_toy_example(self):
        # m = (1, 9), c = 1, block distances (1.0, 0.5) -> 0.1*1 + 0.9*0.5
        d = weighted_distance(
            np.array([1.0, 9.0]),
            np.ones(2),
            np.ones(2),
            np.array([1.0, 0.5]),
        )
        assert d == pytest.approx(0.55)

    def test_single_included_region_normalizes_to_one(self):
        d = weighted_distance(
            np.array([1.0, 9.0]),
            np.ones(2),
            np.ones(2),
            np.array([0.42, 7.0]),
            include=np.array([True, False]),
        )
        assert d == pytest.approx(0.42)


class TestDistance:
    def test_identity(self, rng):
        x = random_feature(rng)
        assert distance(x, x) == 0.0

    def test_symmetry(self, rng):
        for _ in range(10):
            x, y = random_feature(rng), random_feature(rng)
            assert distance(x, y) == pytest.approx(distance(y, x), abs=1e-9)

    def test_non_negative(self, rng):
        for _ in range(10):
            assert distance(random_feature(rng), random_feature(rng)) >= 0.0

    def test_scheme_mismatch(self, rng):
        x = random_feature(rng, "2LV")
        y = random_feature(rng, "6R_O")
        with pytest.raises(SchemeMismatch):
            distance(x, y)

    def test_incomplete_equals_full_when_no_empty_regions(self, rng):
        x, y = random_feature(rng), random_feature(rng)
        assert distance(x, y, "incomplete") == pytest.approx(distance(x, y, "full"))

    def test_incomplete_skips_query_empty_regions(self, rng):
        x = random_feature(rng, empty={0, 1, 2, 3, 4, 5, 6, 7, 8})
        y = random_feature(rng)
        # only the top region remains; weight normalizes to 1
        expected = float(np.linalg.norm(x.blocks[9] - y.blocks[9]))
        assert distance(x, y, "incomplete") == pytest.approx(expected)

    def test_incomplete_all_empty_raises(self, rng):
        x = random_feature(rng, empty=set(range(10)))
        with pytest.raises(EmptyQuery):
            distance(x, random_feature(rng), "incomplete")


class TestPairwise:
    def test_matches_scalar_distance(self, rng):
        xs = [random_feature(rng) for _ in range(4)]
        ys = [random_feature(rng) for _ in range(5)]
        mat = pairwise_distances(xs, ys)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                assert mat[i, j] == pytest.approx(distance(x, y), abs=1e-9)

    def test_incomplete_mode_matches(self, rng):
        xs = [random_feature(rng, empty={0, 3}) for _ in range(3)]
        ys = [random_feature(rng) for _ in range(3)]
        mat = pairwise_distances(xs, ys, mode="incomplete")
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                assert mat[i, j] == pytest.approx(
                    distance(x, y, "incomplete"), abs=1e-9
                )


def brute_force_rank(query, records, k):
    per_model = {}
    for rec in records:
        d = distance(query, rec.feature)
        cur = per_model.get(rec.model_id)
        if cur is None or d < cur[1] or (d == cur[1] and rec.view_id < cur[0]):
            per_model[rec.model_id] = (rec.view_id, d)
    ranked = sorted(per_model.items(), key=lambda kv: (kv[1][1], kv[0]))
    return [(m, v, d) for m, (v, d) in ranked][:k]


class TestKnn:
    def test_exact_match_ranks_first(self, rng):
        feats = [random_feature(rng) for _ in range(4)]
        records = [FakeRecord(f"m{i}", 0, f) for i, f in enumerate(feats)]
        res = knn(feats[2], FakeIndex(records), k=4)
        assert res[0].model_id == "m2"
        assert res[0].distance == 0.0

    def test_k_larger_than_model_count(self, rng):
        records = [FakeRecord(f"m{i}", 0, random_feature(rng)) for i in range(3)]
        res = knn(random_feature(rng), FakeIndex(records), k=50)
        assert len(res) == 3

    def test_min_over_views_hand_example(self, rng):
        q = random_feature(rng)
        views = {
            ("m1", 0): 0.3,
            ("m1", 1): 0.9,
            ("m2", 0): 0.5,
            ("m2", 1): 0.2,
            ("m3", 0): 0.4,
            ("m3", 1): 0.4,
        }
        # interpolate between q and a far feature to hit target distances
        far = random_feature(rng)
        far = PyramidFeature(
            scheme=q.scheme,
            canvas_side=q.canvas_side,
            blocks=far.blocks,
            reliability=q.reliability,
            empty_flags=far.empty_flags,
        )
        d_far = distance(q, far)
        records = []
        for (m, v), target in views.items():
            t = target / d_far
            blocks = tuple(
                (1 - t) * bq + t * bf for bq, bf in zip(q.blocks, far.blocks)
            )
            # keep q's reliabilities so D(q, .) scales linearly with t
            f = PyramidFeature(
                scheme=q.scheme,
                canvas_side=q.canvas_side,
                blocks=blocks,
                reliability=q.reliability,
                empty_flags=q.empty_flags,
            )
            records.append(FakeRecord(m, v, f))
        res = knn(q, FakeIndex(records), k=3)
        assert [r.model_id for r in res] == ["m2", "m1", "m3"]

    def test_matches_brute_force_on_small_indices(self, rng):
        for trial in range(10):
            n = int(rng.integers(1, 7))
            records = [
                FakeRecord(f"m{int(rng.integers(3))}", i, random_feature(rng))
                for i in range(n)
            ]
            q = random_feature(rng)
            expected = brute_force_rank(q, records, k=6)
            got = knn(q, FakeIndex(records), k=6)
            assert [(r.model_id, r.best_view_id, r.distance) for r in got] == expected

    def test_empty_index(self, rng):
        with pytest.raises(EmptyIndex):
            knn(random_feature(rng), FakeIndex([]), k=1)

    def test_deterministic_tie_break_by_model_id(self, rng):
        f = random_feature(rng)
        records = [FakeRecord(m, 0, f) for m in ("mb", "ma", "mc")]
        res = knn(f, FakeIndex(records), k=3)
        assert [r.model_id for r in res] == ["ma", "mb", "mc"]
