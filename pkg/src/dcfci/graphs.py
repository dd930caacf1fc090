"""Mixed graphs with arrow/tail/circle edge marks.

One graph class covers causal diagrams with latent confounding (directed plus
bidirected edges), their ancestral projections, and partial ancestral graphs
(PAGs, which add circle marks). A graph is immutable once built; algorithms
that orient edges work on a GraphBuilder and freeze the result.

Mark convention: ``mark(a, b)`` is the mark sitting at vertex ``b`` on the
edge between ``a`` and ``b``. So ``a --> b`` has mark(a, b) = ARROW and
mark(b, a) = TAIL, and ``a o-> b`` has mark(a, b) = ARROW, mark(b, a) = CIRCLE.
"""

from __future__ import annotations

import hashlib
from enum import IntEnum
from itertools import combinations
from typing import Iterable, Iterator, Sequence


class Mark(IntEnum):
    TAIL = 1
    ARROW = 2
    CIRCLE = 3


TAIL = Mark.TAIL
ARROW = Mark.ARROW
CIRCLE = Mark.CIRCLE

# Serialization characters for the far end (second vertex) and near end
# (first vertex) of an edge line "A <mark><mark> B".
_FAR_CHAR = {TAIL: "-", ARROW: ">", CIRCLE: "o"}
_NEAR_CHAR = {TAIL: "-", ARROW: "<", CIRCLE: "o"}
_FAR_MARK = {v: k for k, v in _FAR_CHAR.items()}
_NEAR_MARK = {v: k for k, v in _NEAR_CHAR.items()}


class GraphFormatError(ValueError):
    """Raised when graph text cannot be parsed."""


class PagStructureError(ValueError):
    """Raised when a graph violates the structural requirements of a PAG/MAG."""


class OrientationConflictError(ValueError):
    """Raised when an orientation rule demands overwriting a definite mark."""

    def __init__(self, msg, edge=None):
        super().__init__(msg)
        self.edge = edge


class MixedGraph:
    """Immutable mixed graph over named vertices.

    Edges are stored as a mark for each ordered endpoint pair. Vertices are
    addressed by index internally; names are kept for IO and display.
    """

    __slots__ = ("names", "_index", "_adj", "_marks", "_hash")

    def __init__(self, names: Sequence[str], marks: dict[tuple[int, int], Mark]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise GraphFormatError("duplicate vertex names: %r" % (names,))
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}
        adj: list[set[int]] = [set() for _ in names]
        clean: dict[tuple[int, int], Mark] = {}
        seen_pairs = set()
        for (a, b), m in marks.items():
            if a == b:
                raise GraphFormatError("self loop at %r" % (names[a],))
            if not (0 <= a < len(names) and 0 <= b < len(names)):
                raise GraphFormatError("endpoint index out of range: (%d, %d)" % (a, b))
            clean[(a, b)] = Mark(m)
            seen_pairs.add((min(a, b), max(a, b)))
        for i, j in seen_pairs:
            if (i, j) not in clean or (j, i) not in clean:
                raise GraphFormatError(
                    "edge %s-%s must carry a mark at both endpoints" % (names[i], names[j])
                )
            adj[i].add(j)
            adj[j].add(i)
        self._adj = tuple(frozenset(s) for s in adj)
        self._marks = clean
        self._hash = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, names: Sequence[str], edges: Iterable[tuple[str, Mark, Mark, str]]):
        """Build from (name_a, mark_at_a, mark_at_b, name_b) tuples."""
        index = {n: i for i, n in enumerate(names)}
        marks: dict[tuple[int, int], Mark] = {}
        for na, ma, mb, nb in edges:
            a, b = index[na], index[nb]
            marks[(a, b)] = mb
            marks[(b, a)] = ma
        return cls(names, marks)

    @classmethod
    def complete_circle(cls, names: Sequence[str]):
        """Complete graph with circle marks everywhere (search start state)."""
        p = len(names)
        marks = {}
        for i, j in combinations(range(p), 2):
            marks[(i, j)] = CIRCLE
            marks[(j, i)] = CIRCLE
        return cls(names, marks)

    # -- basic queries --------------------------------------------------------

    @property
    def p(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self._index[name]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def neighbors(self, a: int) -> frozenset[int]:
        return self._adj[a]

    def mark(self, a: int, b: int) -> Mark:
        """Mark at b's end of the a-b edge. Raises KeyError if not adjacent."""
        return self._marks[(a, b)]

    def edge_pairs(self) -> Iterator[tuple[int, int]]:
        """Unordered adjacent pairs, lower index first, sorted."""
        for i in range(self.p):
            for j in sorted(self._adj[i]):
                if j > i:
                    yield (i, j)

    def n_edges(self) -> int:
        return sum(len(s) for s in self._adj) // 2

    def has_directed_edge(self, a: int, b: int) -> bool:
        """True for a --> b exactly (tail at a, arrow at b)."""
        return (
            b in self._adj[a]
            and self._marks[(a, b)] is ARROW
            and self._marks[(b, a)] is TAIL
        )

    def parents(self, b: int) -> list[int]:
        return [a for a in self._adj[b] if self.has_directed_edge(a, b)]

    # -- ancestry -------------------------------------------------------------

    def ancestors(self, targets: Iterable[int]) -> frozenset[int]:
        """Vertices with a directed path (tail-arrow edges only) into any
        target; targets themselves included."""
        out = set(targets)
        stack = list(out)
        while stack:
            v = stack.pop()
            for u in self._adj[v]:
                if u not in out and self.has_directed_edge(u, v):
                    out.add(u)
                    stack.append(u)
        return frozenset(out)

    def has_directed_cycle(self) -> bool:
        state = [0] * self.p  # 0 unseen, 1 on stack, 2 done

        def visit(v: int) -> bool:
            state[v] = 1
            for w in self._adj[v]:
                if self.has_directed_edge(v, w):
                    if state[w] == 1:
                        return True
                    if state[w] == 0 and visit(w):
                        return True
            state[v] = 2
            return False

        return any(state[v] == 0 and visit(v) for v in range(self.p))

    # -- equality / hashing / serialization -----------------------------------

    def _canonical(self) -> tuple:
        return (self.names, tuple(sorted((a, b, int(m)) for (a, b), m in self._marks.items())))

    def __eq__(self, other):
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._canonical())
        return self._hash

    def serialize(self) -> str:
        """Canonical text form: header line then one edge per line,
        lower-index endpoint first, edges sorted by index pair."""
        lines = ["# vars: " + ",".join(self.names)]
        for i, j in self.edge_pairs():
            near = _NEAR_CHAR[self._marks[(j, i)]]
            far = _FAR_CHAR[self._marks[(i, j)]]
            lines.append("%s %s-%s %s" % (self.names[i], near, far, self.names[j]))
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Short stable identifier used in score reports and manifests."""
        return hashlib.sha256(self.serialize().encode()).hexdigest()[:12]

    def __repr__(self):
        return "MixedGraph(%d vertices, %d edges)" % (self.p, self.n_edges())

    def to_builder(self) -> "GraphBuilder":
        return GraphBuilder(self.names, dict(self._marks))


def parse_graph(text: str) -> MixedGraph:
    """Parse the text format produced by MixedGraph.serialize.

    First non-blank line must be ``# vars: A,B,...``; each following
    non-blank line is ``<name> <near>-<far> <name>`` where the near mark is
    one of ``o - <`` and the far mark one of ``o - >``.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("# vars:"):
        raise GraphFormatError("missing '# vars:' header")
    names = [n.strip() for n in lines[0][len("# vars:"):].split(",") if n.strip()]
    if not names:
        raise GraphFormatError("empty vertex list in header")
    index = {n: i for i, n in enumerate(names)}
    marks: dict[tuple[int, int], Mark] = {}
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise GraphFormatError("bad edge line: %r" % ln)
        na, token, nb = parts
        if na not in index or nb not in index:
            raise GraphFormatError("edge references unknown vertex: %r" % ln)
        if len(token) != 3 or token[1] != "-" or token[0] not in _NEAR_MARK or token[2] not in _FAR_MARK:
            raise GraphFormatError("bad edge token %r in line %r" % (token, ln))
        a, b = index[na], index[nb]
        if (a, b) in marks:
            raise GraphFormatError("duplicate edge %s-%s" % (na, nb))
        marks[(b, a)] = _NEAR_MARK[token[0]]
        marks[(a, b)] = _FAR_MARK[token[2]]
    return MixedGraph(names, marks)


class GraphBuilder:
    """Mutable companion of MixedGraph used by skeleton and orientation code."""

    def __init__(self, names: Sequence[str], marks: dict[tuple[int, int], Mark] | None = None):
        self.names = tuple(names)
        self.marks: dict[tuple[int, int], Mark] = dict(marks or {})
        self.adj: list[set[int]] = [set() for _ in self.names]
        for (a, b) in self.marks:
            self.adj[a].add(b)
            self.adj[b].add(a)

    @classmethod
    def complete_circle(cls, names: Sequence[str]):
        return MixedGraph.complete_circle(names).to_builder()

    @property
    def p(self) -> int:
        return len(self.names)

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.adj[a]

    def mark(self, a: int, b: int) -> Mark:
        return self.marks[(a, b)]

    def neighbors(self, a: int) -> set[int]:
        return self.adj[a]

    def add_edge(self, a: int, b: int, mark_at_a: Mark, mark_at_b: Mark):
        self.marks[(a, b)] = mark_at_b
        self.marks[(b, a)] = mark_at_a
        self.adj[a].add(b)
        self.adj[b].add(a)

    def remove_edge(self, a: int, b: int):
        del self.marks[(a, b)]
        del self.marks[(b, a)]
        self.adj[a].discard(b)
        self.adj[b].discard(a)

    def set_mark(self, a: int, b: int, m: Mark) -> bool:
        """Set the mark at b on the a-b edge.

        Returns True when the mark actually changed. Overwriting a circle is
        always allowed; rewriting tail as arrow or vice versa raises
        OrientationConflictError.
        """
        cur = self.marks[(a, b)]
        if cur is m:
            return False
        if cur is not CIRCLE:
            raise OrientationConflictError(
                "mark at %s on edge %s-%s already %s, wanted %s"
                % (self.names[b], self.names[a], self.names[b], cur.name, m.name),
                edge=(a, b),
            )
        self.marks[(a, b)] = m
        return True

    def reset_marks_to_circles(self):
        for key in self.marks:
            self.marks[key] = CIRCLE

    def has_directed_edge(self, a: int, b: int) -> bool:
        return (
            b in self.adj[a]
            and self.marks[(a, b)] is ARROW
            and self.marks[(b, a)] is TAIL
        )

    def freeze(self) -> MixedGraph:
        return MixedGraph(self.names, self.marks)


# -- separation and path machinery --------------------------------------------


def _noncollider_passes(g, prev: int, v: int, nxt: int, definite: bool) -> bool:
    """Can a path step through non-collider v (marks at v not both arrows)?

    For ancestral graphs every such v may be traversed. With definite=True
    (PAG semantics) v must have definite non-collider status: a tail at v on
    one of the two edges, or circles on both with the path ends non-adjacent.
    """
    if not definite:
        return True
    m_in = g.mark(prev, v)
    m_out = g.mark(nxt, v)
    if m_in is TAIL or m_out is TAIL:
        return True
    return m_in is CIRCLE and m_out is CIRCLE and not g.adjacent(prev, nxt)


def m_connected(g: MixedGraph, x: int, y: int, z: Iterable[int], *, definite: bool | None = None) -> bool:
    """True when x and y are m-connected given conditioning set z.

    A path is connecting when every non-collider on it lies outside z and
    every collider is an ancestor of some member of z. With definite=True
    (the default for graphs containing circle marks) only definite-status
    paths count, which is the PAG reading; graphs without circles get the
    ancestral-graph reading either way.
    """
    if x == y:
        raise ValueError("m-separation query needs distinct endpoints")
    zset = frozenset(z)
    if x in zset or y in zset:
        raise ValueError("conditioning set must not contain the endpoints")
    if definite is None:
        definite = any(m is CIRCLE for m in g._marks.values())
    anc_z = g.ancestors(zset) if zset else frozenset()
    if g.adjacent(x, y):
        return True

    # Depth-first search over simple paths; vertices currently on the path
    # are excluded, which is exact for graphs of the size handled here.
    on_path = [False] * g.p
    on_path[x] = True

    def extend(prev: int, v: int) -> bool:
        # prev-v edge already traversed; try to step v -> w.
        for w in g.neighbors(v):
            if on_path[w] or w == prev:
                continue
            collider = g.mark(prev, v) is ARROW and g.mark(w, v) is ARROW
            if collider:
                if v not in anc_z:
                    continue
            else:
                if v in zset or not _noncollider_passes(g, prev, v, w, definite):
                    continue
            if w == y:
                return True
            on_path[v] = True
            if extend(v, w):
                on_path[v] = False
                return True
            on_path[v] = False
        return False

    # x adjacent to y was handled above, so every neighbor starts a real path.
    return any(extend(x, w) for w in sorted(g.neighbors(x)) if w != y)


def m_separated(g: MixedGraph, x: int, y: int, z: Iterable[int], *, definite: bool | None = None) -> bool:
    return not m_connected(g, x, y, z, definite=definite)


def has_inducing_path(g: MixedGraph, x: int, y: int) -> bool:
    """True when an inducing path joins x and y: every interior vertex is a
    collider on the path and an ancestor of x or y. Adjacent pairs qualify
    trivially (the edge itself)."""
    if x == y:
        raise ValueError("inducing path query needs distinct endpoints")
    if g.adjacent(x, y):
        return True
    anc_xy = g.ancestors((x, y))
    on_path = [False] * g.p
    on_path[x] = True

    def extend(prev: int, v: int) -> bool:
        if v not in anc_xy:
            return False
        for w in g.neighbors(v):
            if on_path[w] or w == prev:
                continue
            if not (g.mark(prev, v) is ARROW and g.mark(w, v) is ARROW):
                continue
            if w == y:
                return True
            on_path[v] = True
            if extend(v, w):
                on_path[v] = False
                return True
            on_path[v] = False
        return False

    for w in g.neighbors(x):
        if w == y:
            return True
        if extend(x, w):
            return True
    return False


# -- ancestral graph validity --------------------------------------------------


def is_ancestral(g: MixedGraph) -> bool:
    """No directed cycles and no almost-directed cycles (a bidirected edge
    between a vertex and one of its ancestors). Circle marks disqualify."""
    if any(m is CIRCLE for m in g._marks.values()):
        return False
    if g.has_directed_cycle():
        return False
    for i, j in g.edge_pairs():
        if g.mark(i, j) is ARROW and g.mark(j, i) is ARROW:
            if i in g.ancestors((j,)) or j in g.ancestors((i,)):
                return False
    return True


def is_maximal(g: MixedGraph) -> bool:
    """Every non-adjacent pair has no inducing path between them."""
    for x, y in combinations(range(g.p), 2):
        if not g.adjacent(x, y) and has_inducing_path(g, x, y):
            return False
    return True


def is_mag(g: MixedGraph) -> bool:
    return is_ancestral(g) and is_maximal(g)


# -- PAG <-> MAG conversion ----------------------------------------------------

_LEGAL_PAG_MARK_PAIRS = {
    (CIRCLE, CIRCLE),
    (CIRCLE, ARROW),
    (ARROW, CIRCLE),
    (ARROW, ARROW),
    (TAIL, ARROW),
    (ARROW, TAIL),
}


def check_pag_marks(g: MixedGraph):
    """Reject edges a PAG cannot carry when selection bias is excluded
    (tail-tail and tail-circle combinations)."""
    for i, j in g.edge_pairs():
        pair = (g.mark(j, i), g.mark(i, j))
        if pair not in _LEGAL_PAG_MARK_PAIRS:
            raise PagStructureError(
                "illegal mark pair %s/%s on edge %s-%s"
                % (pair[0].name, pair[1].name, g.names[i], g.names[j])
            )


def _mcs_perfect_elimination_order(names, vertices: list[int], adj: dict[int, set[int]]) -> list[int]:
    """Maximum cardinality search over an undirected graph; verifies
    chordality and returns a perfect elimination order (first-eliminated
    first). Raises PagStructureError when the graph is not chordal."""
    weight = {v: 0 for v in vertices}
    order: list[int] = []
    remaining = set(vertices)
    while remaining:
        v = max(sorted(remaining), key=lambda u: weight[u])
        order.append(v)
        remaining.discard(v)
        for u in adj[v]:
            if u in remaining:
                weight[u] += 1
    order.reverse()  # elimination order: reverse of MCS visit order
    position = {v: k for k, v in enumerate(order)}
    for v in order:
        later = [u for u in adj[v] if position[u] > position[v]]
        for a, b in combinations(later, 2):
            if b not in adj[a]:
                raise PagStructureError(
                    "circle component is not chordal near %s" % names[v]
                )
    return order


def pag_to_mag(g: MixedGraph) -> MixedGraph:
    """One ancestral-graph member of the equivalence class a PAG describes.

    Circle-arrow edges become directed edges (arrow kept, circle becomes a
    tail); the circle-circle subgraph must be chordal and is oriented along a
    perfect elimination order so no new unshielded colliders appear. The
    result is checked to be a MAG.
    """
    check_pag_marks(g)
    b = g.to_builder()
    circle_vertices = set()
    circle_adj: dict[int, set[int]] = {}
    for i, j in g.edge_pairs():
        mi, mj = g.mark(j, i), g.mark(i, j)
        if mi is CIRCLE and mj is CIRCLE:
            circle_vertices.update((i, j))
            circle_adj.setdefault(i, set()).add(j)
            circle_adj.setdefault(j, set()).add(i)
        else:
            if mi is CIRCLE:
                b.marks[(j, i)] = TAIL
            if mj is CIRCLE:
                b.marks[(i, j)] = TAIL
    if circle_vertices:
        order = _mcs_perfect_elimination_order(g.names, sorted(circle_vertices), circle_adj)
        position = {v: k for k, v in enumerate(order)}
        for i in circle_adj:
            for j in circle_adj[i]:
                if i < j:
                    # orient from the later-eliminated vertex into the earlier
                    src, dst = (i, j) if position[i] > position[j] else (j, i)
                    b.marks[(src, dst)] = ARROW
                    b.marks[(dst, src)] = TAIL
    mag = b.freeze()
    if not is_ancestral(mag):
        raise PagStructureError("completion is not ancestral")
    if not is_maximal(mag):
        raise PagStructureError("completion is not maximal")
    return mag


def mag_to_pag(g: MixedGraph) -> MixedGraph:
    """Partial ancestral graph of the equivalence class containing MAG g,
    computed by running the constraint search against exact m-separation."""
    from .fci import fci, mag_oracle

    if not is_mag(g):
        raise PagStructureError("input graph is not a MAG")
    pag, _ = fci(mag_oracle(g), g.names)
    return pag


def pag_validity_error(g: MixedGraph) -> str | None:
    """None when g is a valid PAG, otherwise a message naming the validity
    stage that failed (mark legality, MAG completion, or the rediscovery
    round trip)."""
    try:
        mag = pag_to_mag(g)
    except (PagStructureError, OrientationConflictError) as err:
        return str(err)
    try:
        if mag_to_pag(mag) != g:
            return "orientation closure of the MAG completion disagrees with the graph"
    except (PagStructureError, OrientationConflictError) as err:
        return "rediscovery from the MAG completion failed: %s" % err
    return None


def is_valid_pag(g: MixedGraph) -> bool:
    """True when g is exactly the canonical PAG of some MAG: legal marks, a
    MAG completion exists, and rediscovering from that completion reproduces
    g mark for mark."""
    return pag_validity_error(g) is None
