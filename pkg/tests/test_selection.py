import pytest
from hypothesis import given, settings, strategies as st

from castid import errors
from castid.selection import RankedPrediction, rank_items, select_top_fraction


def preds(confidences):
    return [RankedPrediction(f"t{i}", "x", c) for i, c in enumerate(confidences)]


class TestRankItems:
    def test_descending(self):
        out = rank_items(preds([0.2, 0.9, 0.5]))
        assert [p.confidence for p in out] == [0.9, 0.5, 0.2]

    def test_ties_by_id(self):
        out = rank_items(preds([0.5, 0.5, 0.5]))
        assert [p.item_id for p in out] == ["t0", "t1", "t2"]

    def test_empty(self):
        assert rank_items([]) == []


class TestSelectTopFraction:
    def test_half_of_four(self):
        confident, rest = select_top_fraction(rank_items(preds([1, 2, 3, 4])), 0.5)
        assert len(confident) == 2 and len(rest) == 2

    def test_eighty_percent_of_five(self):
        confident, _ = select_top_fraction(rank_items(preds(range(5))), 0.8)
        assert len(confident) == 4

    def test_single_item_half(self):
        confident, rest = select_top_fraction(preds([0.1]), 0.5)
        assert len(confident) == 1 and rest == []

    def test_bad_fraction(self):
        with pytest.raises(errors.BadFraction):
            select_top_fraction(preds([0.1]), 0.0)
        with pytest.raises(errors.BadFraction):
            select_top_fraction(preds([0.1]), 1.5)

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False,
                              width=32), max_size=30),
           st.floats(min_value=0.01, max_value=1.0))
    @settings(max_examples=100, deadline=None)
    def test_partition_properties(self, confidences, fraction):
        ranked = rank_items(preds(confidences))
        confident, rest = select_top_fraction(ranked, fraction)
        assert confident + rest == ranked  # exact order-preserving partition
        if confident and rest:
            assert confident[-1].confidence >= rest[0].confidence

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False,
                              width=32), min_size=1, max_size=20))
    @settings(max_examples=50, deadline=None)
    def test_fraction_monotonicity(self, confidences):
        ranked = rank_items(preds(confidences))
        sizes = [len(select_top_fraction(ranked, f)[0])
                 for f in (0.2, 0.5, 0.8, 1.0)]
        assert sizes == sorted(sizes)
        assert sizes[-1] == len(ranked)
