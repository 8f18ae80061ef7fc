import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partpyr.errors import UnknownScheme
from partpyr.geometry import SegmentedSketch
from partpyr.regions import (
    DEFAULT_BETA,
    DEFAULT_SIGMA_FRACTION,
    SCHEMES,
    assign,
    assignment_likelihood,
    build_layout,
    inclusion_weight,
    size_penalty,
)

from conftest import make_part, make_stroke, single_part_sketch

EXPECTED_COUNTS = {"4R_NO": 14, "4R_O": 14, "6R_O": 16, "4LV": 18, "2LV": 10}


class TestBuildLayout:
    @pytest.mark.parametrize("scheme,count", sorted(EXPECTED_COUNTS.items()))
    def test_region_counts(self, scheme, count):
        assert len(build_layout(scheme, 320).regions) == count

    def test_top_region_full_canvas(self):
        for scheme in SCHEMES:
            layout = build_layout(scheme, 320)
            top = layout.regions[layout.top_region_index]
            assert top.rect == (0.0, 0.0, 320.0, 320.0)
            assert top.importance == 9.0
            assert top.grid == 6

    def test_importances_by_area_rule(self):
        by_scheme = {
            s: sorted({r.importance for r in build_layout(s, 320).regions})
            for s in SCHEMES
        }
        assert by_scheme["6R_O"] == [1.0, 4.0, 9.0]
        assert by_scheme["4R_O"] == [1.0, 4.0, 9.0]
        assert by_scheme["2LV"] == [1.0, 9.0]
        assert by_scheme["4R_NO"] == [1.0, 2.25, 9.0]
        assert by_scheme["4LV"] == [1.0, 2.25, 6.0, 9.0]

    def test_2lv_importance_multiset(self):
        ms = sorted(r.importance for r in build_layout("2LV", 320).regions)
        assert ms == [1.0] * 9 + [9.0]

    def test_6ro_level2_longer_side(self):
        layout = build_layout("6R_O", 320)
        lvl2 = [r for r in layout.regions if r.level == 2]
        assert len(lvl2) == 6
        for r in lvl2:
            assert r.longer_side == pytest.approx(213.3333333, abs=1e-4)

    def test_grids_per_level(self):
        layout = build_layout("4LV", 320)
        grids = {r.level: r.grid for r in layout.regions}
        assert grids == {1: 2, 2: 4, 2.5: 5, 3: 6}

    def test_regions_inside_canvas(self):
        for scheme in SCHEMES:
            for r in build_layout(scheme, 320).regions:
                x0, y0, x1, y1 = r.rect
                assert -1e-9 <= x0 < x1 <= 320 + 1e-9
                assert -1e-9 <= y0 < y1 <= 320 + 1e-9

    def test_unknown_scheme(self):
        with pytest.raises(UnknownScheme):
            build_layout("5R_X", 320)


class TestSizePenalty:
    def test_at_knee_both_branches_agree(self):
        knee = 0.85 * 320
        assert size_penalty(knee, 320, 0.85, 96) == 1.0
        # force the falloff branch at the same point
        assert 1.1 * math.exp(0.0) - 0.1 == pytest.approx(1.0, abs=1e-12)

    def test_below_knee_is_one(self):
        assert size_penalty(100, 320, 0.85, 96) == 1.0
        assert size_penalty(0, 320, 0.85, 96) == 1.0

    def test_reference_value(self):
        assert size_penalty(300, 320, 0.85, 96) == pytest.approx(0.9103, abs=1e-4)

    def test_clamped_to_zero(self):
        assert size_penalty(10_000, 320, 0.85, 96) == 0.0

    @given(st.floats(min_value=0, max_value=2000), st.floats(min_value=0, max_value=2000))
    @settings(max_examples=200, deadline=None)
    def test_monotone_nonincreasing(self, s1, s2):
        lo, hi = sorted((s1, s2))
        assert size_penalty(lo, 320, 0.85, 96) >= size_penalty(hi, 320, 0.85, 96)

    def test_continuous_at_knee(self):
        knee = 0.85 * 320
        eps = 1e-7
        below = size_penalty(knee - eps, 320, 0.85, 96)
        above = size_penalty(knee + eps, 320, 0.85, 96)
        assert abs(below - above) < 1e-5

    def test_range(self):
        for s in np.linspace(0, 1000, 101):
            assert 0.0 <= size_penalty(s, 320, 0.85, 96) <= 1.0


class TestInclusionWeight:
    def test_fully_inside(self):
        p = make_part([make_stroke([[10, 10], [50, 50]])])
        assert inclusion_weight(p, (0, 0, 100, 100)) == pytest.approx(1.0)

    def test_fully_outside(self):
        p = make_part([make_stroke([[200, 200], [250, 250]])])
        assert inclusion_weight(p, (0, 0, 100, 100)) == pytest.approx(0.0)

    def test_half_by_strokes(self):
        inside = make_stroke([[10, 10], [10, 60]], 0)
        outside = make_stroke([[200, 10], [200, 60]], 1)
        p = make_part([inside, outside])
        assert inclusion_weight(p, (0, 0, 100, 100)) == pytest.approx(0.5)

    def test_monotone_in_rect(self, rng):
        for _ in range(30):
            p = make_part([make_stroke(rng.uniform(0, 320, size=(6, 2)))])
            small = (80.0, 80.0, 240.0, 240.0)
            big = (40.0, 40.0, 280.0, 280.0)
            assert inclusion_weight(p, big) >= inclusion_weight(p, small) - 1e-12


def naive_likelihood(part, region, beta=DEFAULT_BETA, sig_frac=DEFAULT_SIGMA_FRACTION):
    """Independent reimplementation of p = W_s * W_l for cross-checking."""
    x0, y0, x1, y1 = region.rect
    L = max(x1 - x0, y1 - y0)
    S = part.size
    knee = beta * L
    sigma = sig_frac * L
    ws = 1.0 if S <= knee else max(0.0, 1.1 * math.exp(-((S - knee) ** 2) / sigma**2) - 0.1)
    total = inside = 0.0
    for s in part.strokes:
        pts = s.points
        n = 4000
        seg = np.diff(pts, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        tot = seg_len.sum()
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        t = (np.arange(n) + 0.5) / n * tot
        idx = np.clip(np.searchsorted(cum, t) - 1, 0, len(seg) - 1)
        frac = np.where(seg_len[idx] > 0, (t - cum[idx]) / seg_len[idx], 0)
        samples = pts[idx] + seg[idx] * frac[:, None]
        ok = (
            (samples[:, 0] >= x0)
            & (samples[:, 0] <= x1)
            & (samples[:, 1] >= y0)
            & (samples[:, 1] <= y1)
        )
        total += tot
        inside += ok.mean() * tot
    return ws * (inside / total)


class TestAssign:
    def test_full_canvas_part_lands_on_top_region(self):
        sk = single_part_sketch([[0, 0], [320, 320]])
        layout = build_layout("6R_O", 320)
        pyramid = assign(sk, layout)
        top = layout.top_region_index
        assert pyramid.part_ids(top) == [0]
        a = pyramid.assignments[top][0]
        assert not a.fallback
        assert a.p == pytest.approx(size_penalty(320, 320, 0.85, 96), abs=1e-9)
        assert a.p == pytest.approx(0.7567, abs=1e-3)

    def test_reliability_hand_example(self):
        # lengths 30 and 10, p-values 0.9 and 0.6 -> c = 0.825
        from partpyr.regions import Assignment, _reliability

        p_long = make_part([make_stroke([[0, 0], [30, 0]])], 0)
        p_short = make_part([make_stroke([[0, 0], [10, 0]])], 1)
        c = _reliability(
            [(p_long, Assignment(0, 0.9)), (p_short, Assignment(1, 0.6))]
        )
        assert c == pytest.approx(0.825)

    def test_every_part_covered(self, rng):
        layout = build_layout("6R_O", 320)
        for _ in range(10):
            parts = tuple(
                make_part([make_stroke(rng.uniform(0, 320, size=(5, 2)))], i)
                for i in range(4)
            )
            sk = SegmentedSketch(parts=parts)
            pyramid = assign(sk, layout)
            seen = {a.part_id for group in pyramid.assignments for a in group}
            assert seen == {0, 1, 2, 3}

    def test_stored_p_at_least_threshold_unless_fallback(self, rng):
        layout = build_layout("6R_O", 320)
        parts = tuple(
            make_part([make_stroke(rng.uniform(0, 320, size=(5, 2)))], i)
            for i in range(5)
        )
        pyramid = assign(SegmentedSketch(parts=parts), layout)
        for group in pyramid.assignments:
            for a in group:
                assert a.fallback or a.p >= 0.5

    def test_reliability_bound_threshold_only_regions(self, rng):
        layout = build_layout("6R_O", 320)
        for _ in range(10):
            parts = tuple(
                make_part([make_stroke(rng.uniform(0, 320, size=(5, 2)))], i)
                for i in range(3)
            )
            pyramid = assign(SegmentedSketch(parts=parts), layout)
            for group, c in zip(pyramid.assignments, pyramid.reliability):
                if group and not any(a.fallback for a in group):
                    assert 0.5 - 1e-12 <= c <= 1.0 + 1e-12

    def test_likelihood_matches_naive_reimplementation(self, rng):
        layout = build_layout("6R_O", 320)
        checked = 0
        for _ in range(40):
            part = make_part([make_stroke(rng.uniform(0, 320, size=(6, 2)))])
            region = layout.regions[rng.integers(len(layout.regions))]
            got = assignment_likelihood(part, region)
            want = naive_likelihood(part, region)
            assert got == pytest.approx(want, abs=5e-3)
            assert 0.0 <= got <= 1.0
            checked += 1
        assert checked == 40
