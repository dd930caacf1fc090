"""Equivalence-class structure of a PAG.

Triple status (definite collider / definite non-collider), the recursive
order assigned to definite triples, discriminating paths, corresponding
pairs for ordered colliders, and minimal-separator enumeration. These are
the graph-side ingredients of the compatibility score.
"""

from __future__ import annotations

from itertools import combinations

from .graphs import ARROW, CIRCLE, TAIL, MixedGraph, m_separated

COLLIDER = "collider"
NONCOLLIDER = "noncollider"


def triple_key(x: int, b: int, y: int) -> tuple[int, int, int]:
    """Canonical form of the triple with middle b: endpoints sorted."""
    a, c = (x, y) if x < y else (y, x)
    return (a, b, c)


def triple_status(g: MixedGraph, a: int, b: int, c: int) -> str | None:
    """Definite status of the path triple a-b-c, or None.

    Collider: both marks at b are arrowheads. Definite non-collider: a tail
    at b on either edge, or circles at b on both edges with a and c
    non-adjacent. Anything else has no definite status.
    """
    ma, mc = g.mark(a, b), g.mark(c, b)
    if ma is ARROW and mc is ARROW:
        return COLLIDER
    if ma is TAIL or mc is TAIL:
        return NONCOLLIDER
    if ma is CIRCLE and mc is CIRCLE and not g.adjacent(a, c):
        return NONCOLLIDER
    return None


def definite_triples(g: MixedGraph) -> dict[tuple[int, int, int], str]:
    """All definite triples in canonical form, shielded or not."""
    out = {}
    for b in range(g.p):
        for a, c in combinations(sorted(g.neighbors(b)), 2):
            st = triple_status(g, a, b, c)
            if st is not None:
                out[(a, b, c)] = st
    return out


def triples_with_order(g: MixedGraph) -> dict[tuple[int, int, int], tuple[str, int]]:
    """Assign orders to definite triples.

    Order 0: definite unshielded triples. Order i >= 1: a definite triple
    <a,b,c> not yet ordered such that for some vertex q, <q,a,b> is a
    collider with order < i and <q,a,c> is a non-collider with order < i
    (or the same with a and c swapped). Each triple keeps the smallest
    order it qualifies for; triples never ordered are absent.
    """
    definite = definite_triples(g)
    ordered: dict[tuple[int, int, int], tuple[str, int]] = {}
    for key, st in definite.items():
        a, _, c = key
        if not g.adjacent(a, c):
            ordered[key] = (st, 0)

    def assigned(x: int, mid: int, y: int, want: str, below: int) -> bool:
        got = ordered.get(triple_key(x, mid, y))
        return got is not None and got[0] == want and got[1] < below

    level = 0
    while True:
        level += 1
        added = []
        for key, st in definite.items():
            if key in ordered:
                continue
            a, b, c = key
            hit = False
            for end, other in ((a, c), (c, a)):
                for q in sorted(g.neighbors(end)):
                    if q == b or q == other:
                        continue
                    if assigned(q, end, b, COLLIDER, level) and assigned(
                        q, end, other, NONCOLLIDER, level
                    ):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                added.append((key, st))
        if not added:
            return ordered
        for key, st in added:
            ordered[key] = (st, level)


def colliders_with_order(g: MixedGraph) -> dict[tuple[int, int, int], int]:
    return {k: lvl for k, (st, lvl) in triples_with_order(g).items() if st == COLLIDER}


def discriminating_sources(g: MixedGraph, a: int, b: int, c: int) -> list[int]:
    """Vertices X starting a discriminating path <X, ..., a, b, c> for b.

    Every vertex strictly between X and b is a collider on the path and a
    parent of c, and X is not adjacent to c. The shortest form is
    <X, a, b, c>.
    """
    if not (g.adjacent(a, b) and g.adjacent(b, c)):
        return []
    if not g.has_directed_edge(a, c):
        return []
    if g.mark(b, a) is not ARROW:
        return []
    sources: set[int] = set()
    on_path = {c, b, a}

    def extend(f: int):
        # f is the current outermost interior vertex; its arrowhead from the
        # b side and parent-of-c status are already established.
        for u in sorted(g.neighbors(f)):
            if u in on_path:
                continue
            if g.mark(u, f) is not ARROW:
                continue
            if not g.adjacent(u, c):
                sources.add(u)
                continue
            if g.has_directed_edge(u, c) and g.mark(f, u) is ARROW:
                on_path.add(u)
                extend(u)
                on_path.discard(u)

    extend(a)
    return sorted(sources)


def corresponding_pairs(g: MixedGraph, triple: tuple[int, int, int]) -> list[tuple[int, int]]:
    """Vertex pairs a collider triple answers for.

    An unshielded triple <a,b,c> answers for (a,c). A shielded one answers
    for (X,c) for every discriminating path <X,...,a,b,c>, in both triple
    directions. Pairs are returned sorted and deduplicated.
    """
    a, b, c = triple
    if not g.adjacent(a, c):
        return [(min(a, c), max(a, c))]
    pairs = set()
    for x in discriminating_sources(g, a, b, c):
        pairs.add((min(x, c), max(x, c)))
    for x in discriminating_sources(g, c, b, a):
        pairs.add((min(x, a), max(x, a)))
    return sorted(pairs)


def possible_d_sep(g: MixedGraph, x: int, exclude: int | None = None) -> list[int]:
    """Vertices v reachable from x along a path whose every interior vertex
    is either a collider on the path or the center of a triangle with its
    path neighbors. This is the candidate region FCI searches for
    separating sets. x itself (and `exclude`, if given) are left out."""
    reached: set[tuple[int, int]] = set()  # traversed (prev, cur) edge states
    frontier = [(x, w) for w in sorted(g.neighbors(x))]
    reached.update(frontier)
    while frontier:
        nxt = []
        for prev, cur in frontier:
            for w in sorted(g.neighbors(cur)):
                if w == prev or (cur, w) in reached:
                    continue
                collider = g.mark(prev, cur) is ARROW and g.mark(w, cur) is ARROW
                if collider or g.adjacent(prev, w):
                    reached.add((cur, w))
                    nxt.append((cur, w))
        frontier = nxt
    out = {v for (_, v) in reached}
    out.discard(x)
    if exclude is not None:
        out.discard(exclude)
    return sorted(out)


def minimal_separators(
    g: MixedGraph, x: int, y: int, max_size: int | None = None
) -> tuple[tuple[int, ...], ...]:
    """All separators of x,y that stop separating when any one vertex is
    removed. Enumerated over subsets of the remaining vertices in size
    order; deterministic output order.

    The search base is the full vertex set rather than possible-d-sep:
    interior vertices of long blocking chains can be minimal separators
    without lying in either endpoint's possible-d-sep region.
    """
    if g.adjacent(x, y):
        raise ValueError(
            "minimal separators are undefined for the adjacent pair %s-%s"
            % (g.names[x], g.names[y])
        )
    rest = [v for v in range(g.p) if v != x and v != y]
    cap = len(rest) if max_size is None else min(max_size, len(rest))
    out = []
    for size in range(cap + 1):
        for zs in combinations(rest, size):
            if not m_separated(g, x, y, zs):
                continue
            if all(not m_separated(g, x, y, zs[:i] + zs[i + 1 :]) for i in range(size)):
                out.append(zs)
    return tuple(out)


def is_minimal_separator(g: MixedGraph, x: int, y: int, zs) -> bool:
    zs = tuple(sorted(zs))
    if not m_separated(g, x, y, zs):
        return False
    return all(not m_separated(g, x, y, zs[:i] + zs[i + 1 :]) for i in range(len(zs)))


def mec_signature(g: MixedGraph):
    """Hashable summary identifying the equivalence class a PAG represents:
    the skeleton plus each collider that carries an order."""
    skeleton = frozenset(g.edge_pairs())
    colliders = frozenset((a, b, c, lvl) for (a, b, c), lvl in colliders_with_order(g).items())
    return (skeleton, colliders)
