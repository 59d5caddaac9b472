"""Annotation-quality math tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promptlink.errors import ValidationError
from promptlink.qa import Box, filter_by_iou, fleiss_kappa, iou

box_coords = st.tuples(
    st.floats(-100, 100), st.floats(-100, 100),
    st.floats(0.1, 50), st.floats(0.1, 50),
).map(lambda t: Box(t[0], t[1], t[0] + t[2], t[1] + t[3]))


class TestIoU:
    def test_identical(self):
        b = Box(0, 0, 2, 3)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(Box(0, 0, 1, 1), Box(5, 5, 6, 6)) == 0.0

    def test_touching_edges_are_disjoint(self):
        assert iou(Box(0, 0, 1, 1), Box(1, 0, 2, 1)) == 0.0

    def test_hand_case_one_seventh(self):
        # intersection 1x1 = 1, union 4 + 4 - 1 = 7
        got = iou(Box(0, 0, 2, 2), Box(1, 1, 3, 3))
        assert got == pytest.approx(1.0 / 7.0, abs=1e-12)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValidationError):
            Box(0, 0, 0, 1)
        with pytest.raises(ValidationError):
            Box(0, 2, 1, 1)

    @given(box_coords, box_coords)
    @settings(max_examples=100, deadline=None)
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0 + 1e-12

    @given(st.integers(-100, 100), st.integers(-100, 100), st.integers(1, 40),
           st.integers(1, 40), st.integers(-100, 100), st.integers(-100, 100),
           st.integers(1, 40), st.integers(1, 40),
           st.integers(-1000, 1000), st.integers(-1000, 1000))
    @settings(max_examples=100, deadline=None)
    def test_translation_invariant(self, ax, ay, aw, ah, bx, by, bw, bh, dx, dy):
        # integer-valued coordinates keep the shifted arithmetic exact, so
        # invariance holds bit-for-bit (arbitrary floats lose low bits in
        # the shifted subtractions regardless of implementation)
        a = Box(ax, ay, ax + aw, ay + ah)
        b = Box(bx, by, bx + bw, by + bh)
        shifted_a = Box(a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy)
        shifted_b = Box(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy)
        assert iou(a, b) == iou(shifted_a, shifted_b)

    @given(box_coords, box_coords, st.floats(-50, 50), st.floats(-50, 50))
    @settings(max_examples=100, deadline=None)
    def test_translation_nearly_invariant_for_float_boxes(self, a, b, dx, dy):
        shifted_a = Box(a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy)
        shifted_b = Box(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy)
        assert iou(a, b) == pytest.approx(iou(shifted_a, shifted_b), abs=1e-9)


class TestFilter:
    def test_identical_pairs_all_kept(self):
        b = Box(0, 0, 1, 1)
        assert filter_by_iou([(b, b)] * 3) == [0, 1, 2]

    def test_disjoint_pairs_none_kept(self):
        pairs = [(Box(0, 0, 1, 1), Box(9, 9, 10, 10))] * 2
        assert filter_by_iou(pairs) == []

    def test_one_seventh_discarded_at_default_threshold(self):
        pairs = [(Box(0, 0, 2, 2), Box(1, 1, 3, 3))]
        assert filter_by_iou(pairs) == []
        assert filter_by_iou(pairs, threshold=0.1) == [0]

    def test_order_preserved(self):
        good = (Box(0, 0, 2, 2), Box(0, 0, 2, 2))
        bad = (Box(0, 0, 1, 1), Box(5, 5, 6, 6))
        assert filter_by_iou([good, bad, good, good]) == [0, 2, 3]

    def test_bad_threshold(self):
        with pytest.raises(ValidationError):
            filter_by_iou([], threshold=1.5)


def _brute_force_kappa(m):
    """First-principles recomputation with explicit loops."""
    m = np.asarray(m, dtype=float)
    n_items, q = m.shape
    n = int(m[0].sum())
    p_o = 0.0
    for i in range(n_items):
        agree = 0.0
        for j in range(q):
            agree += m[i, j] * (m[i, j] - 1)
        p_o += agree / (n * (n - 1))
    p_o /= n_items
    p_e = 0.0
    for j in range(q):
        share = sum(m[i, j] for i in range(n_items)) / (n_items * n)
        p_e += share * share
    return (p_o - p_e) / (1 - p_e)


class TestFleissKappa:
    def test_perfect_agreement_across_two_categories(self):
        m = [[3, 0], [0, 3], [3, 0]]
        assert fleiss_kappa(m) == pytest.approx(1.0, abs=1e-12)

    def test_hand_case_one_third(self):
        m = [[2, 0], [0, 2], [1, 1]]
        assert fleiss_kappa(m) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n_items = int(rng.integers(2, 10))
            q = int(rng.integers(2, 6))
            n = int(rng.integers(2, 8))
            m = np.zeros((n_items, q), dtype=int)
            for i in range(n_items):
                votes = rng.integers(0, q, size=n)
                for v in votes:
                    m[i, v] += 1
            if np.count_nonzero(m.sum(axis=0)) < 2:
                continue  # degenerate: single category used everywhere
            assert fleiss_kappa(m) == pytest.approx(_brute_force_kappa(m), abs=1e-10)

    def test_degenerate_single_category(self):
        with pytest.raises(ValidationError):
            fleiss_kappa([[2, 0], [2, 0]])

    def test_ragged_rater_counts_rejected(self):
        with pytest.raises(ValidationError):
            fleiss_kappa([[2, 0], [2, 1]])

    def test_single_category_matrix_rejected(self):
        with pytest.raises(ValidationError):
            fleiss_kappa([[2], [2]])

    def test_non_integer_rejected(self):
        with pytest.raises(ValidationError):
            fleiss_kappa([[1.5, 0.5], [1, 1]])
