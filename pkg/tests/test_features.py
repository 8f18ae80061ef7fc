import numpy as np
import pytest

from partpyr.features import (
    ExtractionParams,
    extract_full,
    extract_nog,
    extract_pix,
    extract_stk,
    feature_from_dict,
    feature_length,
    feature_to_dict,
)
from partpyr.geometry import (
    RawInput,
    SegmentedSketch,
    normalize,
)
from partpyr.matching import distance
from partpyr.regions import build_layout

from conftest import make_part, make_stroke, single_part_sketch

LAYOUT = build_layout("6R_O", 320)
PARAMS = ExtractionParams()


def two_part_sketch():
    # one part inside the top-left level-1 cell, one spanning the canvas
    small = make_part([make_stroke([[10, 10], [90, 40], [30, 80]])], 0)
    big = make_part([make_stroke([[0, 0], [320, 320]], 0)], 1)
    return SegmentedSketch(parts=(small, big))


class TestExtractFull:
    def test_total_length(self):
        feat = extract_full(normalize(two_part_sketch()), LAYOUT, PARAMS)
        assert feat.total_len == 1008
        assert feature_length("6R_O") == 1008

    def test_block_count_and_lengths_fixed_by_scheme(self):
        feat = extract_full(normalize(two_part_sketch()), LAYOUT, PARAMS)
        assert len(feat.blocks) == 16
        assert [len(b) for b in feat.blocks] == [
            r.grid * r.grid * 6 for r in LAYOUT.regions
        ]

    def test_empty_flags_match_zero_blocks(self):
        feat = extract_full(normalize(two_part_sketch()), LAYOUT, PARAMS)
        for flag, block in zip(feat.empty_flags, feat.blocks):
            assert flag == (not block.any())

    def test_self_distance_zero(self):
        feat = extract_full(normalize(two_part_sketch()), LAYOUT, PARAMS)
        assert distance(feat, feat) == 0.0

    def test_single_cell_part_populates_containing_regions(self):
        sk = single_part_sketch([[10, 10], [90, 40], [30, 80]])
        # skip normalization: the part should stay inside the top-left cell
        feat = extract_full(sk, LAYOUT, PARAMS)
        non_empty = {i for i, f in enumerate(feat.empty_flags) if not f}
        containing = {
            r.id
            for r in LAYOUT.regions
            if r.rect[0] <= 10 and r.rect[1] <= 10 and r.rect[2] >= 90 and r.rect[3] >= 80
        }
        assert non_empty == containing

    def test_reliability_in_unit_interval(self):
        feat = extract_full(normalize(two_part_sketch()), LAYOUT, PARAMS)
        assert (feat.reliability >= 0).all() and (feat.reliability <= 1).all()


class TestExtractNog:
    def test_one_part_sketch_single_region(self):
        sk = normalize(single_part_sketch([[0, 0], [320, 180]]))
        feat = extract_nog(sk, LAYOUT, PARAMS)
        assert int((~feat.empty_flags).sum()) == 1

    def test_part_in_cell_argmax_is_level1(self):
        sk = single_part_sketch([[10, 10], [90, 40], [30, 80]])
        feat = extract_nog(sk, LAYOUT, PARAMS)
        (idx,) = np.nonzero(~feat.empty_flags)
        assert LAYOUT.regions[int(idx[0])].level == 1

    def test_coincides_with_full_when_single_passing_region(self):
        # the full-canvas diagonal only clears the 0.5 threshold at the top
        sk = normalize(single_part_sketch([[0, 0], [320, 320]]))
        full = extract_full(sk, LAYOUT, PARAMS)
        nog = extract_nog(sk, LAYOUT, PARAMS)
        if int((~full.empty_flags).sum()) == 1:
            np.testing.assert_array_equal(full.values, nog.values)


class TestExtractPix:
    def test_partition_invariance(self):
        strokes = [make_stroke([[10, 10], [150, 60]], 0), make_stroke([[200, 200], [300, 280]], 0)]
        one_part = SegmentedSketch(parts=(make_part(strokes, 0),))
        two_parts = SegmentedSketch(
            parts=(make_part([strokes[0]], 0), make_part([strokes[1]], 1))
        )
        a = extract_pix(normalize(one_part), LAYOUT, PARAMS)
        b = extract_pix(normalize(two_parts), LAYOUT, PARAMS)
        np.testing.assert_array_equal(a.values, b.values)

    def test_reliability_all_ones(self):
        feat = extract_pix(normalize(two_part_sketch()), LAYOUT, PARAMS)
        np.testing.assert_array_equal(feat.reliability, np.ones(16))

    def test_differs_from_full_on_overhanging_part(self):
        # a part overhanging the top-left cell: PIX clips it at the cell
        # boundary, FULL either takes it whole or drops it
        sk = normalize(two_part_sketch())
        pix = extract_pix(sk, LAYOUT, PARAMS)
        full = extract_full(sk, LAYOUT, PARAMS)
        assert not np.array_equal(pix.values, full.values)


class TestExtractStk:
    def test_matches_full_on_one_stroke_per_part(self):
        strokes = (
            make_stroke([[10, 10], [100, 60]], 0),
            make_stroke([[200, 200], [310, 310]], 1),
        )
        raw = RawInput(sketch_strokes=strokes)
        stk = extract_stk(raw, LAYOUT, PARAMS)
        manual = SegmentedSketch(
            parts=tuple(make_part([s], i) for i, s in enumerate(strokes))
        )
        full = extract_full(normalize(manual), LAYOUT, PARAMS)
        np.testing.assert_array_equal(stk.values, full.values)

    def test_lengths_fixed(self):
        raw = RawInput(sketch_strokes=(make_stroke([[0, 0], [320, 320]]),))
        feat = extract_stk(raw, LAYOUT, PARAMS)
        assert feat.total_len == 1008


class TestSerialization:
    def test_round_trip(self):
        feat = extract_full(normalize(two_part_sketch()), LAYOUT, PARAMS)
        doc = feature_to_dict(feat, meta={"model_id": "m1", "view_id": 0})
        back = feature_from_dict(doc)
        assert back.scheme == feat.scheme
        assert back.total_len == feat.total_len
        np.testing.assert_allclose(back.values, feat.values, atol=1e-7)
        np.testing.assert_array_equal(back.empty_flags, feat.empty_flags)
        np.testing.assert_allclose(back.reliability, feat.reliability)
