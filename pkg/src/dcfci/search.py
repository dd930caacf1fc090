"""Score-guided top-k search over candidate PAGs.

The search grows conditioning-set size one step at a time. At each size r
it collects, per retained candidate, the plausible r-sized separators of
still-adjacent pairs, branches over subsets of those cuts, re-orients each
branch from scratch, discards branches whose recorded separators stop
being minimal m-separators or whose graph is not a valid PAG, then scores
the surviving pool jointly and keeps the top k.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations

from .citest import CIError, DataPosteriorProvider
from .fci import fci, mag_oracle, orient_pag
from .graphs import (
    MixedGraph,
    OrientationConflictError,
    PagStructureError,
    is_valid_pag,
    m_separated,
)
from .mec import possible_d_sep
from .scoring import ScoreBounds, candidate_hypotheses, comparable_scores, rank_candidates

TIE_MODES = ("strict", "equal-upper", "overlap")
SEP_BASES = ("pds", "adjacency")


@dataclass(frozen=True)
class DcfciConfig:
    alpha: float = 0.05
    k: int = 1
    r_max: int | None = None
    n_r_cap: int = 12
    certainty_threshold: float = 0.95
    ties: str = "strict"
    sep_base: str = "pds"
    threads: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.r_max is not None and self.r_max < 0:
            raise ValueError("r_max must be nonnegative")
        if self.n_r_cap < 1:
            raise ValueError("n_r_cap must be at least 1")
        if not (0.0 < self.certainty_threshold <= 1.0):
            raise ValueError("certainty_threshold must lie in (0, 1]")
        if self.ties not in TIE_MODES:
            raise ValueError("ties must be one of %r" % (TIE_MODES,))
        if self.sep_base not in SEP_BASES:
            raise ValueError("sep_base must be one of %r" % (SEP_BASES,))
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class CandidatePag:
    graph: MixedGraph
    sepmap: dict
    score: ScoreBounds | None = None
    n_contested: int = 0
    r: int = -1


@dataclass
class IterationRecord:
    r: int
    n_expanded: int
    n_dropped: int
    retained: list  # (digest, ScoreBounds, n_contested)
    scored: list = field(default_factory=list)  # same triples, all ranked candidates


@dataclass
class RunTrace:
    names: tuple
    config: DcfciConfig
    iterations: list[IterationRecord] = field(default_factory=list)

    def render(self) -> str:
        cfg = self.config
        lines = [
            "# dcfci run",
            "vars: " + ",".join(self.names),
            "config: alpha=%g k=%d r_max=%s n_r_cap=%d certainty_threshold=%g"
            " ties=%s sep_base=%s threads=%d"
            % (
                cfg.alpha,
                cfg.k,
                "auto" if cfg.r_max is None else cfg.r_max,
                cfg.n_r_cap,
                cfg.certainty_threshold,
                cfg.ties,
                cfg.sep_base,
                cfg.threads,
            ),
        ]
        for it in self.iterations:
            lines.append(
                "iteration r=%d: candidates=%d dropped=%d retained=%d"
                % (it.r, it.n_expanded, it.n_dropped, len(it.retained))
            )
            for digest, bounds, n_diff in it.retained:
                lines.append("  %s %.3f %.3f %d" % (digest, bounds.lower, bounds.upper, n_diff))
        return "\n".join(lines) + "\n"


def potential_min_seps(c: CandidatePag, provider, r: int, cfg: DcfciConfig) -> dict:
    """Plausible size-r separators per still-adjacent pair: the test at
    (x, y | S) must leave independence on the table (p-value above alpha,
    or posterior favoring it). Sets are drawn from the possible-d-sep
    region of either endpoint (or plain adjacency, per config)."""
    g = c.graph
    out: dict[tuple[int, int], list[tuple[int, ...]]] = {}
    for x, y in g.edge_pairs():
        if cfg.sep_base == "pds":
            bases = (possible_d_sep(g, x, exclude=y), possible_d_sep(g, y, exclude=x))
        else:
            bases = (sorted(g.neighbors(x) - {y}), sorted(g.neighbors(y) - {x}))
        seen: set[tuple[int, ...]] = set()
        keep = []
        for base in bases:
            if len(base) < r:
                continue
            for s in combinations(base, r):
                if s in seen:
                    continue
                seen.add(s)
                try:
                    ev = provider.test(x, y, s)
                except CIError as err:
                    warnings.warn(
                        "ci test failed for (%s, %s | %s): %s"
                        % (g.names[x], g.names[y], ",".join(g.names[v] for v in s) or "-", err)
                    )
                    continue
                if ev.p_value > cfg.alpha or ev.p_h0 > 0.5:
                    keep.append(s)
        if keep:
            out[(x, y)] = sorted(keep)
    return out


def _gate(graph: MixedGraph, sepmap: dict, validity_cache: dict | None = None) -> bool:
    """A candidate stands only if every recorded separator still m-separates
    its pair minimally (no single vertex can be dropped), no pair is
    non-adjacent without a recorded separator, and the graph is a valid PAG."""
    for i in range(graph.p):
        for j in range(i + 1, graph.p):
            if not graph.adjacent(i, j) and (i, j) not in sepmap:
                return False
    for (x, y), sep in sepmap.items():
        if graph.adjacent(x, y):
            return False
        if not m_separated(graph, x, y, sep):
            return False
        for drop in range(len(sep)):
            if m_separated(graph, x, y, sep[:drop] + sep[drop + 1 :]):
                return False
    key = graph.serialize()
    if validity_cache is not None and key in validity_cache:
        return validity_cache[key]
    ok = is_valid_pag(graph)
    if validity_cache is not None:
        validity_cache[key] = ok
    return ok


def expand_candidates(
    c: CandidatePag,
    potmins: dict,
    r: int,
    cfg: DcfciConfig | None = None,
    provider=None,
    validity_cache: dict | None = None,
) -> tuple[list[CandidatePag], int]:
    """Branch a candidate over subsets of its discovered (pair, separator)
    cuts. The empty subset carries the candidate forward unchanged. Returns
    the surviving branches and the number discarded by the gate."""
    cfg = cfg or DcfciConfig()
    items = [(pair, s) for pair in sorted(potmins) for s in potmins[pair]]
    forced: list = []
    if len(items) > cfg.n_r_cap and provider is not None:
        certain = []
        free = []
        for pair, s in items:
            ev = provider.test(pair[0], pair[1], s)
            (certain if ev.p_h0 >= cfg.certainty_threshold else free).append((pair, s))
        by_pair: dict = {}
        for pair, s in certain:
            by_pair.setdefault(pair, s)  # first sorted separator stands in for the cut
        forced = sorted(by_pair.items())
        items = [(pair, s) for pair, s in free if pair not in by_pair]
    out: list[CandidatePag] = []
    dropped = 0
    if forced:
        # forced cuts appear in every enumerated branch, so the plain
        # carry-over must be kept explicitly or a failing forced branch
        # could empty the candidate pool
        out.append(replace(c, r=r))
    for size in range(len(items) + 1):
        for subset in combinations(items, size):
            chosen = forced + list(subset)
            pairs = [pair for pair, _ in chosen]
            if len(set(pairs)) != len(pairs):
                continue  # two separators for one pair describe no single surgery
            if not chosen:
                out.append(replace(c, r=r))
                continue
            b = c.graph.to_builder()
            sepmap = dict(c.sepmap)
            for (x, y), s in chosen:
                b.remove_edge(x, y)
                sepmap[(x, y)] = s
            try:
                graph = orient_pag(b.freeze(), sepmap)
            except (OrientationConflictError, PagStructureError):
                dropped += 1
                continue
            if _gate(graph, sepmap, validity_cache):
                out.append(CandidatePag(graph=graph, sepmap=sepmap, r=r))
            else:
                dropped += 1
    return out, dropped


def _dedupe(cands: list[CandidatePag]) -> list[CandidatePag]:
    by_key: dict[str, CandidatePag] = {}
    for c in cands:
        key = c.graph.serialize()
        cur = by_key.get(key)
        if cur is None or sorted(c.sepmap.items()) < sorted(cur.sepmap.items()):
            by_key[key] = c
    return [by_key[k] for k in sorted(by_key)]


def _retain(ordered: list[CandidatePag], cfg: DcfciConfig) -> list[CandidatePag]:
    if len(ordered) <= cfg.k:
        return ordered
    kth = ordered[cfg.k - 1].score
    keep = list(ordered[: cfg.k])
    for c in ordered[cfg.k :]:
        if cfg.ties == "equal-upper" and c.score.upper == kth.upper:
            keep.append(c)
        elif cfg.ties == "overlap" and c.score.upper >= kth.lower:
            keep.append(c)
        else:
            break
    return keep


def dcfci_search(provider, names, cfg: DcfciConfig | None = None):
    """Core loop against an arbitrary posterior provider. Returns the final
    retained candidates (ranked) and the run trace."""
    cfg = cfg or DcfciConfig()
    p = len(names)
    if p < 2:
        raise ValueError("need at least two variables")
    r_max = p - 2 if cfg.r_max is None else min(cfg.r_max, p - 2)
    retained = [CandidatePag(graph=MixedGraph.complete_circle(names), sepmap={})]
    trace = RunTrace(names=tuple(names), config=cfg)
    validity_cache: dict = {}
    for r in range(r_max + 1):
        def branch(c: CandidatePag):
            potmins = potential_min_seps(c, provider, r, cfg)
            return expand_candidates(c, potmins, r, cfg, provider, validity_cache)

        if cfg.threads > 1 and len(retained) > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(branch, retained))
        else:
            results = [branch(c) for c in retained]
        pool_cands: list[CandidatePag] = []
        dropped = 0
        for cands, n_drop in results:
            pool_cands.extend(cands)
            dropped += n_drop
        pool_cands = _dedupe(pool_cands)
        scored = comparable_scores([(c.graph, c.sepmap) for c in pool_cands], provider, r)
        for c, (bounds, n_diff) in zip(pool_cands, scored):
            c.score = bounds
            c.n_contested = n_diff
        order = rank_candidates([(c.graph, c.score) for c in pool_cands])
        ranked = [pool_cands[i] for i in order]
        retained = _retain(ranked, cfg)
        trace.iterations.append(
            IterationRecord(
                r=r,
                n_expanded=len(pool_cands),
                n_dropped=dropped,
                retained=[(c.graph.digest(), c.score, c.n_contested) for c in retained],
                scored=[(c.graph.digest(), c.score, c.n_contested) for c in ranked],
            )
        )
    return retained, trace


def dcfci(d, cfg: DcfciConfig | None = None, provider=None):
    """Run the search on a dataset (posteriors computed from the data) or,
    when `provider` is given, against that provider directly."""
    if provider is None:
        provider = DataPosteriorProvider(d)
    names = d.names
    return dcfci_search(provider, names, cfg)


def weak_faithfulness_holds(truth_mag: MixedGraph, provider, r_max: int | None = None) -> bool:
    """True when the data put posterior at least 0.5 on every hypothesis of
    every truth-derived PAG at separator budgets 0..r_max. Under this
    condition the search provably keeps the true PAG on top."""
    p = truth_mag.p
    r_max = p - 2 if r_max is None else min(r_max, p - 2)
    oracle = mag_oracle(truth_mag)
    for r in range(r_max + 1):
        pag_r, sepmap_r = fci(oracle, truth_mag.names, r_max=r)
        for (x, y, z), kind in candidate_hypotheses(pag_r, r, sepmap_r):
            try:
                ev = provider.test(x, y, z)
            except CIError:
                return False
            post = ev.p_h0 if kind == "indep" else ev.p_h1
            if post < 0.5:
                return False
    return True
