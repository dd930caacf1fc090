from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from dcfci.citest import CIError, Evidence
from dcfci.graphs import MixedGraph
from dcfci.scoring import (
    DEPENDENCE,
    INDEPENDENCE,
    ScoringError,
    all_pairwise_hypotheses,
    candidate_hypotheses,
    collider_hypotheses,
    comparable_scores,
    frechet_bounds,
    pairwise_hypothesis_count,
    rank_candidates,
    skeleton_hypotheses,
    straightforward_score,
)

from fixtures import (
    ALL_CIRCLE_PAG,
    FCI_PAG,
    HUB_PAG,
    NONCOLLIDER_PAG,
    R0_PAG,
    TRUE_PAG,
    TableProvider,
)

A, B, X, Y = 0, 1, 2, 3


def test_pairwise_hypothesis_count():
    assert pairwise_hypothesis_count(4, 2) == 24
    assert pairwise_hypothesis_count(5, 3) == 80
    assert pairwise_hypothesis_count(10, 8) == 11520
    assert pairwise_hypothesis_count(20, 18) == 49807360
    assert pairwise_hypothesis_count(4, 99) == 24  # capped at p-2
    with pytest.raises(ValueError):
        pairwise_hypothesis_count(1, 0)


def test_frechet_bounds_examples():
    b = frechet_bounds([0.388, 0.802])
    assert b.as_tuple() == pytest.approx((0.190, 0.388))
    b = frechet_bounds([0.612, 0.198])
    assert b.as_tuple() == pytest.approx((0.0, 0.198))
    assert frechet_bounds([]).as_tuple() == (1.0, 1.0)
    assert frechet_bounds([0.7]).as_tuple() == pytest.approx((0.7, 0.7))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), max_size=8))
def test_frechet_bounds_are_ordered(probs):
    b = frechet_bounds(probs)
    assert 0.0 <= b.lower <= b.upper <= 1.0
    if probs:
        assert b.upper == min(probs)


def test_all_pairwise_hypotheses_cover_every_relation():
    hyps = all_pairwise_hypotheses(TRUE_PAG, 2)
    assert len(hyps) == 24
    as_dict = dict(hyps)
    assert as_dict[(B, X, ())] == INDEPENDENCE
    assert as_dict[(X, Y, (A, B))] == INDEPENDENCE
    assert as_dict[(X, Y, (A,))] == DEPENDENCE
    assert sum(1 for _, kind in hyps if kind == INDEPENDENCE) == 2


def test_straightforward_score_fixtures(table_provider):
    targets = [
        (TRUE_PAG, 0.612),
        (FCI_PAG, 0.0136),
        (NONCOLLIDER_PAG, 0.0366),
        (HUB_PAG, 0.0366),
        (ALL_CIRCLE_PAG, 0.1848),
    ]
    for g, upper in targets:
        bounds = straightforward_score(g, table_provider, r_max=2)
        assert bounds.lower == pytest.approx(0.0, abs=1e-3)
        assert bounds.upper == pytest.approx(upper, abs=1e-3), g.serialize()


def test_straightforward_score_aborts_on_test_failure():
    class Boom:
        def test(self, x, y, z):
            raise CIError("no data")

    with pytest.raises(ScoringError):
        straightforward_score(TRUE_PAG, Boom(), r_max=1)


def test_skeleton_hypotheses_on_the_true_pag():
    hyps = skeleton_hypotheses(TRUE_PAG, 2)
    assert ((X, Y, (A, B)), INDEPENDENCE) in hyps
    assert ((X, Y, (A,)), DEPENDENCE) in hyps
    assert ((X, Y, (B,)), DEPENDENCE) in hyps
    assert ((B, X, ()), INDEPENDENCE) in hyps
    # adjacent pairs assert dependence under every conditioning set
    assert ((A, Y, ()), DEPENDENCE) in hyps
    assert ((A, Y, (B, X)), DEPENDENCE) in hyps


def test_collider_hypotheses():
    assert collider_hypotheses(TRUE_PAG) == {((B, X, (A,)), DEPENDENCE)}
    assert collider_hypotheses(FCI_PAG) == {
        ((B, X, (A,)), DEPENDENCE),
        ((A, Y, (B,)), DEPENDENCE),
    }


def test_candidate_hypotheses_union():
    hyps = candidate_hypotheses(TRUE_PAG, 2)
    assert ((B, X, (A,)), DEPENDENCE) in hyps
    assert ((X, Y, (A, B)), INDEPENDENCE) in hyps


def test_comparable_scores_on_rival_orientations(table_provider):
    res = comparable_scores([(FCI_PAG, None), (NONCOLLIDER_PAG, None)], table_provider, 2)
    (fci_bounds, fci_n), (rival_bounds, rival_n) = res
    assert fci_n == rival_n == 2
    assert fci_bounds.lower == pytest.approx(0.486, abs=1e-3)
    assert fci_bounds.upper == pytest.approx(0.671, abs=1e-3)
    assert rival_bounds.lower == pytest.approx(0.0, abs=1e-3)
    assert rival_bounds.upper == pytest.approx(0.185, abs=1e-3)


def test_comparable_scores_with_no_disagreement(table_provider):
    res = comparable_scores([(TRUE_PAG, None), (TRUE_PAG, None)], table_provider, 2)
    for bounds, n_diff in res:
        assert bounds.as_tuple() == (1.0, 1.0)
        assert n_diff == 0


def test_comparable_scores_neutral_on_error(table_provider):
    class Flaky:
        def test(self, x, y, z):
            if (min(x, y), max(x, y)) == (B, X) and z == ():
                raise CIError("unstable fit")
            return table_provider.test(x, y, z)

    res = comparable_scores([(FCI_PAG, None), (NONCOLLIDER_PAG, None)], Flaky(), 2)
    (fci_bounds, _), (rival_bounds, _) = res
    # the failing marginal relation contributes 0.5 for both candidates
    assert fci_bounds.upper == pytest.approx(0.5, abs=1e-3)
    assert rival_bounds.upper == pytest.approx(0.185, abs=1e-3)
    with pytest.raises(ScoringError):
        comparable_scores(
            [(FCI_PAG, None), (NONCOLLIDER_PAG, None)], Flaky(), 2, neutral_on_error=False
        )


def test_rank_candidates_prefers_upper_then_lower():
    complete = MixedGraph.complete_circle("ABXY")
    provider = TableProvider()
    scored = comparable_scores([(complete, {}), (R0_PAG, {(B, X): ()})], provider, 0)
    order = rank_candidates(
        [(complete, scored[0][0]), (R0_PAG, scored[1][0])]
    )
    assert order == [1, 0]  # the candidate that cuts (B, X) ranks first


def test_rank_candidates_breaks_ties_by_serialization():
    from dcfci.scoring import ScoreBounds

    tie = ScoreBounds(0.4, 0.6)
    order = rank_candidates([(R0_PAG, tie), (TRUE_PAG, tie)])
    first = [R0_PAG, TRUE_PAG][order[0]]
    second = [R0_PAG, TRUE_PAG][order[1]]
    assert first.serialize() < second.serialize()
