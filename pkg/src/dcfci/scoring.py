"""Data-PAG compatibility scores.

A candidate PAG asserts a body of (in)dependence hypotheses about the data
distribution. The straightforward score bounds the joint posterior of the
hypotheses over every pair at every conditioning set up to a size cap. The
comparable score makes a set of candidates commensurable: it pools the
relations any candidate cares about, drops the ones all candidates agree
on, and bounds each candidate's joint posterior over the remaining
disagreements only.

A relation is a (x, y, z) conditioning query; a hypothesis is a relation
plus a kind (independence or dependence). Kinds always come from
m-separation in the candidate under consideration, so a candidate's
hypothesis set is exactly what its graph entails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .bayes import DEPENDENCE, INDEPENDENCE
from .graphs import MixedGraph, m_separated
from .mec import colliders_with_order, corresponding_pairs, minimal_separators

Relation = tuple[int, int, tuple[int, ...]]


class ScoringError(RuntimeError):
    """A score could not be computed; carries the failing relation."""


@dataclass(frozen=True)
class ScoreBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not (-1e-12 <= self.lower <= self.upper + 1e-12 <= 1 + 1e-12):
            raise ValueError("malformed bounds (%r, %r)" % (self.lower, self.upper))

    def as_tuple(self):
        return (self.lower, self.upper)


def pairwise_hypothesis_count(p: int, r_max: int) -> int:
    """Number of pairwise hypotheses at play: every unordered pair crossed
    with every conditioning set of size <= r_max drawn from the other p-2
    variables."""
    if p < 2:
        raise ValueError("need at least two variables")
    r_max = min(r_max, p - 2)
    per_pair = sum(math.comb(p - 2, i) for i in range(r_max + 1))
    return math.comb(p, 2) * per_pair


def relation_kind(g: MixedGraph, rel: Relation) -> str:
    x, y, z = rel
    return INDEPENDENCE if m_separated(g, x, y, z) else DEPENDENCE


def all_pairwise_hypotheses(g: MixedGraph, r_max: int | None = None) -> list[tuple[Relation, str]]:
    """One hypothesis per pair per conditioning set of size <= r_max, the
    kind read off the graph by m-separation."""
    p = g.p
    if r_max is None:
        r_max = p - 2
    r_max = min(r_max, p - 2)
    out = []
    for x, y in combinations(range(p), 2):
        rest = [v for v in range(p) if v != x and v != y]
        for size in range(r_max + 1):
            for z in combinations(rest, size):
                rel = (x, y, z)
                out.append((rel, relation_kind(g, rel)))
    return out


def frechet_bounds(probs) -> ScoreBounds:
    """Bounds on the probability of a conjunction from its marginals:
    lower = max(0, sum - (T-1)), upper = min. Empty input gives (1, 1)."""
    probs = list(probs)
    if not probs:
        return ScoreBounds(1.0, 1.0)
    if any(not (0.0 <= q <= 1.0) for q in probs):
        raise ValueError("probabilities must lie in [0,1]")
    lower = max(0.0, sum(probs) - (len(probs) - 1))
    upper = min(probs)
    return ScoreBounds(lower, min(max(upper, lower), 1.0))


def _posterior_of(provider, rel: Relation, kind: str) -> float:
    x, y, z = rel
    ev = provider.test(x, y, z)
    return ev.p_h0 if kind == INDEPENDENCE else ev.p_h1


def straightforward_score(g: MixedGraph, provider, r_max: int | None = None) -> ScoreBounds:
    """Fréchet bounds over the posteriors of every pairwise hypothesis the
    graph entails. CI failures abort with the offending relation named."""
    probs = []
    for rel, kind in all_pairwise_hypotheses(g, r_max):
        try:
            probs.append(_posterior_of(provider, rel, kind))
        except Exception as err:
            x, y, z = rel
            names = g.names
            raise ScoringError(
                "no posterior for (%s, %s | %s): %s"
                % (names[x], names[y], ",".join(names[v] for v in z) or "-", err)
            ) from err
    return frechet_bounds(probs)


def skeleton_hypotheses(
    g: MixedGraph, r: int, sepmap=None, max_sep_size: int | None = None
) -> set[tuple[Relation, str]]:
    """Hypotheses the skeleton of an r-PAG stands on.

    (a) dependence for every adjacent pair at every conditioning set of
    size <= r; (b) independence of every non-adjacent pair at each of its
    minimal separators; (c) dependence at every drop-one subset of each
    nonempty minimal separator.
    """
    if sepmap:
        for (x, y) in sepmap:
            if g.adjacent(x, y):
                raise ValueError(
                    "separator recorded for adjacent pair %s-%s" % (g.names[x], g.names[y])
                )
    out: set[tuple[Relation, str]] = set()
    p = g.p
    r = min(r, p - 2)
    for x, y in combinations(range(p), 2):
        rest = [v for v in range(p) if v != x and v != y]
        if g.adjacent(x, y):
            for size in range(r + 1):
                for z in combinations(rest, size):
                    out.add(((x, y, z), DEPENDENCE))
        else:
            for sep in minimal_separators(g, x, y, max_size=max_sep_size):
                out.add(((x, y, sep), INDEPENDENCE))
                for i in range(len(sep)):
                    out.add(((x, y, sep[:i] + sep[i + 1 :]), DEPENDENCE))
    return out


def collider_hypotheses(g: MixedGraph, max_sep_size: int | None = None) -> set[tuple[Relation, str]]:
    """Dependence hypotheses carried by colliders with order: conditioning
    on the collision vertex on top of a minimal separator of a
    corresponding pair reopens the dependence."""
    out: set[tuple[Relation, str]] = set()
    for (a, b, c) in sorted(colliders_with_order(g)):
        for (x, y) in corresponding_pairs(g, (a, b, c)):
            if g.adjacent(x, y):
                continue
            for sep in minimal_separators(g, x, y, max_size=max_sep_size):
                if b in sep:
                    continue
                z = tuple(sorted(sep + (b,)))
                out.add(((x, y, z), DEPENDENCE))
    return out


def candidate_hypotheses(g: MixedGraph, r: int, sepmap=None) -> set[tuple[Relation, str]]:
    return skeleton_hypotheses(g, r, sepmap) | collider_hypotheses(g)


def comparable_scores(
    candidates: list[tuple[MixedGraph, dict]], provider, r: int, neutral_on_error: bool = True
) -> list[tuple[ScoreBounds, int]]:
    """Score candidates against each other.

    Pools every relation any candidate's hypothesis set mentions, assigns
    each candidate's kind per relation by m-separation, discards relations
    where all candidates agree, and returns Fréchet bounds plus the
    disagreement count for each candidate. With neutral_on_error, a failing
    CI test contributes probability 0.5 instead of aborting, keeping the
    candidates comparable on the remaining evidence.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    relations: set[Relation] = set()
    for g, sepmap in candidates:
        relations.update(rel for rel, _ in candidate_hypotheses(g, r, sepmap))
    kinds = []
    for g, _ in candidates:
        kinds.append({rel: relation_kind(g, rel) for rel in relations})
    contested = sorted(
        rel for rel in relations if len({k[rel] for k in kinds}) > 1
    )
    out = []
    for (g, _), kind_of in zip(candidates, kinds):
        probs = []
        for rel in contested:
            try:
                probs.append(_posterior_of(provider, rel, kind_of[rel]))
            except Exception as err:
                if not neutral_on_error:
                    x, y, z = rel
                    raise ScoringError(
                        "no posterior for (%s, %s | %s): %s"
                        % (
                            g.names[x],
                            g.names[y],
                            ",".join(g.names[v] for v in z) or "-",
                            err,
                        )
                    ) from err
                probs.append(0.5)
        out.append((frechet_bounds(probs), len(contested)))
    return out


def rank_candidates(scored: list) -> list[int]:
    """Order candidate indices: upper bound descending, then lower bound
    descending, then canonical graph serialization ascending.

    `scored` holds (graph, ScoreBounds) pairs.
    """
    keys = []
    for i, (g, bounds) in enumerate(scored):
        keys.append((-bounds.upper, -bounds.lower, g.serialize(), i))
    return [i for (_, _, _, i) in sorted(keys)]


def score_report(rows) -> str:
    """Plain-text score table: `graph-hash lower upper |H_diff|` per line."""
    lines = []
    for g, bounds, n_diff in rows:
        lines.append("%s %.3f %.3f %d" % (g.digest(), bounds.lower, bounds.upper, n_diff))
    return "\n".join(lines) + ("\n" if lines else "")
