import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_graph
from oracles import borda_naive
from oldetect.analysis import (AttitudeSummary, CombineConfig, apply_outlier_filter, attitude_summary,
                               attitudes_to_csv, combine_leaders, combined_to_csv, jaccard, jaccard_to_csv,
                               merge_same_ranker, outlier_mask, persistence_to_csv, temporal_overlap)
from oldetect.errors import ValidationError
from oldetect.graph import AttributeTable
from oldetect.ranking import RankingResult


def ranking(order, method="nlcrank", emb=None):
    """RankingResult whose order is exactly ``order``."""
    n = len(order)
    scores = np.empty(n)
    scores[list(order)] = np.arange(n, 0, -1, dtype=float)
    return RankingResult.from_scores(scores, method, {"embedding": emb})


def test_borda_hand_example():
    a, b, c = 0, 1, 2
    merged = merge_same_ranker([ranking([a, b, c]), ranking([b, a, c]), ranking([b, c, a])])
    assert merged == [b, a, c]


def test_merge_trivial_cases():
    r = ranking([3, 1, 0, 2])
    assert merge_same_ranker([r]) == [3, 1, 0, 2]
    assert merge_same_ranker([r, r, r]) == [3, 1, 0, 2]
    assert merge_same_ranker([r], exclude=[1]) == [3, 0, 2]
    with pytest.raises(ValidationError):
        merge_same_ranker([r, ranking([0, 1])])
    with pytest.raises(ValidationError):
        merge_same_ranker([])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.permutations(range(n)), min_size=1, max_size=4),
    st.sets(st.integers(0, n - 1), max_size=n - 1))), st.randoms())
def test_merge_matches_naive_and_is_order_invariant(case, rnd):
    perms, excluded = case
    lists = [ranking(p) for p in perms]
    merged = merge_same_ranker(lists, exclude=excluded)
    assert merged == borda_naive(perms, excluded)
    shuffled = list(lists)
    rnd.shuffle(shuffled)
    assert merge_same_ranker(shuffled, exclude=excluded) == merged


def test_outlier_rule():
    in_deg = np.array([1] + [5] * 20)
    out_deg = np.array([4] + [10] * 20)
    assert np.percentile(in_deg, 10) == 5 and np.percentile(out_deg, 10) == 10
    mask = outlier_mask(in_deg, out_deg, 10)
    assert mask.tolist() == [True] + [False] * 20
    assert not outlier_mask(in_deg, out_deg, 0).any()
    # low on only one side is kept
    assert not outlier_mask(np.array([1] + [5] * 20), np.array([40] + [10] * 20), 10)[0]
    with pytest.raises(ValidationError):
        outlier_mask(in_deg, out_deg, 100)


def test_apply_outlier_filter_on_graph():
    # hub 0 is followed by everyone and follows everyone; node 9 is isolated
    edges = [(0, i) for i in range(1, 9)] + [(i, 0) for i in range(1, 9)] + [(1, 2), (2, 1)]
    g = make_graph(10, edges)
    assert apply_outlier_filter(range(10), g, 10) == list(range(9))


def test_combine_15_and_3():
    a = list(range(20))
    b = list(range(10, 40))
    res = combine_leaders(a, b, CombineConfig(15, (1, 2)))
    assert len(res.asnerank_part) == 5 and len(res.nlcrank_part) == 10
    assert not set(res.asnerank_part) & set(res.nlcrank_part)
    small = combine_leaders([0, 1, 2], [5, 6, 7], CombineConfig(3, (1, 2)))
    assert small.asnerank_part == (0,) and small.nlcrank_part == (5, 6)


def test_combine_dedup_backfill():
    res = combine_leaders([7, 1, 2], [7, 3, 4, 5], CombineConfig(3, (1, 2)))
    assert res.asnerank_part == (7,) and res.nlcrank_part == (3, 4)


def test_combine_shortfall_and_config():
    with pytest.raises(ValidationError, match="needs 10"):
        combine_leaders(list(range(5)), [0, 1, 2, 3, 4, 5, 6, 7], CombineConfig(15))
    with pytest.raises(ValidationError):
        CombineConfig(2, (1, 2))
    with pytest.raises(ValidationError):
        CombineConfig(15, (0, 2))
    assert CombineConfig(16, (1, 2)).asnerank_quota == 5  # rounding favours the NLCRank side


def test_provenance_and_csv():
    lists_a = [ranking([0, 1, 2, 3], "asnerank", "deepwalk"), ranking([1, 0, 3, 2], "asnerank", "node2vec")]
    lists_n = [ranking([2, 3, 0, 1], "nlcrank", "deepwalk"), ranking([3, 2, 1, 0], "nlcrank", "asne-lite")]
    res = combine_leaders(merge_same_ranker(lists_a), merge_same_ranker(lists_n), CombineConfig(3, (1, 2)),
                          lists_a, lists_n)
    assert res.asnerank_part == (0,) and res.nlcrank_part == (2, 3)
    assert res.provenance[0] == ("deepwalk", "node2vec")
    assert res.provenance[3] == ("deepwalk", "asne-lite")
    text = combined_to_csv(res, ["a", "b", "c", "d"])
    assert text.splitlines() == ["part,rank,external_id,provenance", "asnerank,1,a,deepwalk;node2vec",
                                 "nlcrank,1,c,deepwalk;asne-lite", "nlcrank,2,d,deepwalk;asne-lite"]


def test_attitude_examples():
    t = AttributeTable.from_array(np.zeros((3, 1)), attitude=[[1, 0, 0], [0.7, 0.2, 0.1], [0.3, 0.6, 0.1]])
    assert attitude_summary([0], t).as_tuple() == (1.0, 0.0, 0.0)
    assert attitude_summary([1, 2], t).as_tuple() == pytest.approx((0.5, 0.4, 0.1), abs=1e-15)
    t2 = AttributeTable.from_array(np.zeros((2, 1)), attitude=[[1, 0, 0], [np.nan] * 3])
    with pytest.raises(ValidationError, match=r"\[1\]"):
        attitude_summary([0, 1], t2)
    text = attitudes_to_csv({"combined": AttitudeSummary(0.5, 0.25, 0.25, 2)})
    assert text == "group,support,reject,irrelevant\ncombined,0.5,0.25,0.25\n"


def test_attitude_random_matches_direct_average():
    rng = np.random.default_rng(3)
    att = rng.dirichlet([1, 1, 1], size=200)
    t = AttributeTable.from_array(np.zeros((200, 1)), attitude=att)
    nodes = rng.choice(200, 50, replace=False)
    direct = [sum(att[v][c] for v in nodes) / 50 for c in range(3)]
    got = attitude_summary(nodes, t).as_tuple()
    assert max(abs(a - b) for a, b in zip(got, direct)) < 1e-12
    # partition property and order invariance
    p1, p2 = nodes[:20], nodes[20:]
    s1, s2 = attitude_summary(p1, t), attitude_summary(p2, t)
    whole = [(20 * x + 30 * y) / 50 for x, y in zip(s1.as_tuple(), s2.as_tuple())]
    assert max(abs(a - b) for a, b in zip(whole, got)) < 1e-12
    assert attitude_summary(nodes[::-1], t) == attitude_summary(nodes, t)


@settings(max_examples=60)
@given(st.sets(st.integers(0, 9)), st.sets(st.integers(0, 9)))
def test_jaccard_properties(a, b):
    j = jaccard(a, b)
    assert j == jaccard(b, a) and 0 <= j <= 1
    assert (j == 1) == (a == b)


def test_temporal_overlap():
    ids = ["a", "b", "c", "d"]
    r1 = ranking([0, 1, 2, 3])
    r2 = ranking([1, 2, 3, 0])
    assert jaccard({"a", "b", "c"}, {"b", "c", "d"}) == 0.5
    rep = temporal_overlap([("w1", r1, ids), ("w2", r2, ids)], 3)
    assert rep.adjacent_jaccard == (0.5,)
    assert rep.appearances == {"a": 1, "b": 2, "c": 2, "d": 1}
    assert rep.ranks["a"] == {"w1": 1, "w2": 4}
    same = temporal_overlap([("x", r1, ids), ("y", r1, ids), ("z", r1, ids)], 2)
    assert same.adjacent_jaccard == (1.0, 1.0)
    disjoint = temporal_overlap([("x", r1, ids), ("y", ranking([2, 3, 0, 1]), ids)], 2)
    assert disjoint.adjacent_jaccard == (0.0,)
    # a user missing from a snapshot gets no rank there
    other = temporal_overlap([("x", r1, ids), ("y", ranking([0, 1]), ["a", "e"])], 2)
    assert other.ranks["b"] == {"x": 2, "y": None}
    assert persistence_to_csv(other).splitlines()[0] == "external_id,appearances,rank_x,rank_y"
    assert jaccard_to_csv(rep) == "from,to,jaccard\nw1,w2,0.5\n"
    with pytest.raises(ValidationError):
        temporal_overlap([("x", r1, ids), ("y", ranking([0, 1]), ["a", "e"])], 3)
    with pytest.raises(ValidationError):
        temporal_overlap([("x", r1, ids)], 2)
