"""Constraint-based PAG discovery.

The classic two-stage skeleton search (adjacency pruning by conditioning
set size, then re-testing against possible-d-sep subsets) followed by
collider orientation and the arrowhead/tail propagation rules, restricted
to the no-selection-bias setting. Orientation always starts from a clean
all-circle skeleton, which keeps the rules conflict-free even when the
recorded separating sets are noisy.

`orient_pag` is reused by the score-guided search, which maintains its own
skeletons and separating sets.
"""

from __future__ import annotations

import warnings
from itertools import combinations
from typing import Sequence

from .citest import CIError, OraclePosteriorProvider
from .graphs import ARROW, CIRCLE, TAIL, GraphBuilder, MixedGraph
from .mec import discriminating_sources, possible_d_sep

SepMap = dict[tuple[int, int], tuple[int, ...]]


def mag_oracle(mag: MixedGraph) -> OraclePosteriorProvider:
    """Exact independence answers read off a MAG by m-separation."""
    return OraclePosteriorProvider(mag)


def pair_key(x: int, y: int) -> tuple[int, int]:
    return (x, y) if x < y else (y, x)


def _is_independent(provider, x: int, y: int, z, alpha: float) -> bool:
    """Decide independence at level alpha; an unusable test counts as
    dependence (the edge is kept) after a warning."""
    try:
        ev = provider.test(x, y, z)
    except CIError as err:
        warnings.warn("ci test failed for (%d, %d | %r): %s" % (x, y, tuple(z), err))
        return False
    return ev.p_value > alpha


def fci_skeleton(
    provider,
    names: Sequence[str],
    alpha: float = 0.05,
    r_max: int | None = None,
) -> tuple[GraphBuilder, SepMap]:
    """Adjacency-pruning stage. Conditioning sets grow one size at a time
    and are drawn from the current adjacency sets of either endpoint, in
    lexicographic order; the first separating set found is recorded."""
    p = len(names)
    if r_max is None:
        r_max = p - 2
    r_max = max(0, min(r_max, p - 2))
    b = GraphBuilder.complete_circle(names)
    sepmap: SepMap = {}
    for size in range(r_max + 1):
        pairs = [(i, j) for i in range(p) for j in range(i + 1, p) if b.adjacent(i, j)]
        for x, y in pairs:
            if not b.adjacent(x, y):
                continue
            tried: set[tuple[int, ...]] = set()
            found = None
            for base in (sorted(b.neighbors(x) - {y}), sorted(b.neighbors(y) - {x})):
                if found is not None or len(base) < size:
                    continue
                for z in combinations(base, size):
                    if z in tried:
                        continue
                    tried.add(z)
                    if _is_independent(provider, x, y, z, alpha):
                        found = z
                        break
            if found is not None:
                b.remove_edge(x, y)
                sepmap[(x, y)] = found
    return b, sepmap


def _pds_prune(b: GraphBuilder, sepmap: SepMap, provider, alpha: float, r_max: int) -> None:
    """Re-test every remaining edge against conditioning sets drawn from
    the possible-d-sep regions of its endpoints."""
    oriented = orient_pag(b.freeze(), sepmap, colliders_only=True)
    pairs = [(i, j) for i in range(b.p) for j in range(i + 1, b.p) if b.adjacent(i, j)]
    for x, y in pairs:
        tried: set[tuple[int, ...]] = set()
        found = None
        for anchor, other in ((x, y), (y, x)):
            if found is not None:
                break
            region = possible_d_sep(oriented, anchor, exclude=other)
            for size in range(min(r_max, len(region)) + 1):
                if found is not None:
                    break
                for z in combinations(region, size):
                    if z in tried:
                        continue
                    tried.add(z)
                    if _is_independent(provider, x, y, z, alpha):
                        found = z
                        break
        if found is not None:
            b.remove_edge(x, y)
            sepmap[(x, y)] = found


def fci(
    provider,
    names: Sequence[str],
    alpha: float = 0.05,
    r_max: int | None = None,
    pds_stage: bool = True,
) -> tuple[MixedGraph, SepMap]:
    """Run the full constraint search and return the oriented PAG along
    with the separating sets that justify its missing edges."""
    p = len(names)
    if r_max is None:
        r_max = p - 2
    r_max = max(0, min(r_max, p - 2))
    b, sepmap = fci_skeleton(provider, names, alpha, r_max)
    if pds_stage:
        _pds_prune(b, sepmap, provider, alpha, r_max)
    return orient_pag(b.freeze(), sepmap), sepmap


# -- orientation ---------------------------------------------------------------


def orient_pag(skeleton: MixedGraph, sepmap: SepMap, colliders_only: bool = False) -> MixedGraph:
    """Orient a skeleton from scratch: every mark reset to a circle,
    unshielded colliders read off the separating sets, then the propagation
    rules applied to a fixed point (arrowhead rules first, tail rules
    joining once those stabilize)."""
    b = skeleton.to_builder()
    b.reset_marks_to_circles()
    _orient_colliders(b, sepmap)
    if not colliders_only:
        _run_rules(b, sepmap, tails=False)
        _run_rules(b, sepmap, tails=True)
    return b.freeze()


def _orient_colliders(b: GraphBuilder, sepmap: SepMap) -> None:
    for v in range(b.p):
        for a, c in combinations(sorted(b.neighbors(v)), 2):
            if b.adjacent(a, c):
                continue
            sep = sepmap.get(pair_key(a, c))
            if sep is None or v in sep:
                continue
            b.set_mark(a, v, ARROW)
            b.set_mark(c, v, ARROW)


def _run_rules(b: GraphBuilder, sepmap: SepMap, tails: bool) -> None:
    rules = [_rule1, _rule2, _rule3, lambda bb: _rule4(bb, sepmap)]
    if tails:
        rules += [_rule8, _rule9, _rule10]
    changed = True
    while changed:
        changed = False
        for rule in rules:
            changed |= rule(b)


def _rule1(b: GraphBuilder) -> bool:
    # a *-> b o-* c with a, c non-adjacent: orient b -> c.
    changed = False
    for v in range(b.p):
        for a in sorted(b.neighbors(v)):
            if b.mark(a, v) is not ARROW:
                continue
            for c in sorted(b.neighbors(v)):
                if c == a or b.adjacent(a, c):
                    continue
                if b.mark(c, v) is CIRCLE:
                    changed |= b.set_mark(c, v, TAIL)
                    changed |= b.set_mark(v, c, ARROW)
    return changed


def _rule2(b: GraphBuilder) -> bool:
    # a -> v *-> c or a *-> v -> c, with a *-o c: orient arrow at c.
    changed = False
    for a in range(b.p):
        for c in sorted(b.neighbors(a)):
            if b.mark(a, c) is not CIRCLE:
                continue
            for v in sorted(b.neighbors(a) & b.neighbors(c)):
                first = b.has_directed_edge(a, v) and b.mark(v, c) is ARROW
                second = b.mark(a, v) is ARROW and b.has_directed_edge(v, c)
                if first or second:
                    changed |= b.set_mark(a, c, ARROW)
                    break
    return changed


def _rule3(b: GraphBuilder) -> bool:
    # a *-> v <-* c, a *-o d o-* c, a, c non-adjacent, d *-o v: arrow at v.
    changed = False
    for v in range(b.p):
        arrow_in = [a for a in sorted(b.neighbors(v)) if b.mark(a, v) is ARROW]
        for a, c in combinations(arrow_in, 2):
            if b.adjacent(a, c):
                continue
            for d in sorted(b.neighbors(v)):
                if d == a or d == c:
                    continue
                if b.mark(d, v) is not CIRCLE:
                    continue
                if not (b.adjacent(a, d) and b.adjacent(c, d)):
                    continue
                if b.mark(a, d) is CIRCLE and b.mark(c, d) is CIRCLE:
                    changed |= b.set_mark(d, v, ARROW)
                    break
    return changed


def _rule4(b: GraphBuilder, sepmap: SepMap) -> bool:
    # Discriminating path <d, ..., a, v, c> for v with a circle at v on the
    # v-c edge: v -> c when v separated d from c, collider at v otherwise.
    changed = False
    for v in range(b.p):
        for c in sorted(b.neighbors(v)):
            if b.mark(c, v) is not CIRCLE:
                continue
            for a in sorted(b.neighbors(v)):
                if a == c or b.mark(c, v) is not CIRCLE:
                    continue
                if b.mark(v, a) is not ARROW or not b.has_directed_edge(a, c):
                    continue
                applied = False
                for d in discriminating_sources(b, a, v, c):
                    sep = sepmap.get(pair_key(d, c))
                    if sep is None:
                        continue
                    if v in sep:
                        changed |= b.set_mark(c, v, TAIL)
                        changed |= b.set_mark(v, c, ARROW)
                    else:
                        changed |= b.set_mark(a, v, ARROW)
                        changed |= b.set_mark(c, v, ARROW)
                        changed |= b.set_mark(v, c, ARROW)
                    applied = True
                    break
                if applied:
                    break
    return changed


def _rule8(b: GraphBuilder) -> bool:
    # a -> v -> c with a o-> c: tail at a on the a-c edge.
    changed = False
    for a in range(b.p):
        for c in sorted(b.neighbors(a)):
            if not (b.mark(c, a) is CIRCLE and b.mark(a, c) is ARROW):
                continue
            for v in sorted(b.neighbors(a) & b.neighbors(c)):
                if b.has_directed_edge(a, v) and b.has_directed_edge(v, c):
                    changed |= b.set_mark(c, a, TAIL)
                    break
    return changed


def _possibly_directed_step(b: GraphBuilder, u: int, w: int) -> bool:
    """Edge u-w traversable in the u -> w direction on a possibly directed
    path: no arrow back at u, no tail at w."""
    return b.mark(w, u) is not ARROW and b.mark(u, w) is not TAIL


def _uncovered_pd_path(b: GraphBuilder, a: int, first: int, target: int) -> bool:
    """Uncovered possibly-directed path <a, first, ..., target>: every
    consecutive triple has non-adjacent ends."""
    if not _possibly_directed_step(b, a, first):
        return False
    if first == target:
        return True
    on_path = {a, first}

    def extend(prev: int, cur: int) -> bool:
        for w in sorted(b.neighbors(cur)):
            if w in on_path or b.adjacent(prev, w):
                continue
            if not _possibly_directed_step(b, cur, w):
                continue
            if w == target:
                return True
            on_path.add(w)
            if extend(cur, w):
                on_path.discard(w)
                return True
            on_path.discard(w)
        return False

    return extend(a, first)


def _rule9(b: GraphBuilder) -> bool:
    # a o-> c with an uncovered possibly-directed path a, v, ..., c where v
    # and c are non-adjacent: tail at a.
    changed = False
    for a in range(b.p):
        for c in sorted(b.neighbors(a)):
            if not (b.mark(c, a) is CIRCLE and b.mark(a, c) is ARROW):
                continue
            for v in sorted(b.neighbors(a)):
                if v == c or b.adjacent(v, c):
                    continue
                if _uncovered_pd_path(b, a, v, c):
                    changed |= b.set_mark(c, a, TAIL)
                    break
    return changed


def _rule10(b: GraphBuilder) -> bool:
    # a o-> c, two directed edges into c from x and y, uncovered possibly
    # directed paths from a towards x and y whose first steps diverge to
    # non-adjacent vertices: tail at a.
    changed = False
    for a in range(b.p):
        for c in sorted(b.neighbors(a)):
            if not (b.mark(c, a) is CIRCLE and b.mark(a, c) is ARROW):
                continue
            par = [v for v in sorted(b.neighbors(c)) if v != a and b.has_directed_edge(v, c)]
            if len(par) < 2:
                continue
            starts = {
                t: [m for m in sorted(b.neighbors(a)) if m != c and _uncovered_pd_path(b, a, m, t)]
                for t in par
            }
            done = False
            for x, y in combinations(par, 2):
                for m in starts[x]:
                    for w in starts[y]:
                        if m != w and not b.adjacent(m, w):
                            changed |= b.set_mark(c, a, TAIL)
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
    return changed
