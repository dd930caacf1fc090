"""Synthetic ground truth, SEM sampling, metrics, and the benchmark runner.

Ground truth starts as a random acyclic mixed graph (directed edges over a
random vertex order, a fraction swapped to bidirected). Its observational
MAG keeps one edge per inducing-path-connected pair, oriented by ancestry,
and the reference PAG is the constraint-search closure of that MAG.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .citest import DataPosteriorProvider
from .data import CONTINUOUS, Dataset, VarKind, parse_kind
from .fci import fci
from .graphs import (
    ARROW,
    CIRCLE,
    TAIL,
    GraphBuilder,
    MixedGraph,
    has_inducing_path,
    is_valid_pag,
    mag_to_pag,
)
from .mec import mec_signature
from .search import DcfciConfig, dcfci_search

COEF_FLOOR = 0.2


def _generator(seed) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class GroundTruth:
    admg: MixedGraph
    mag: MixedGraph
    pag: MixedGraph
    seed: object = None


@dataclass(frozen=True)
class SemSpec:
    """Linear-SEM parameters tied to an ADMG: one coefficient per directed
    edge keyed (parent, child), one loading pair per bidirected edge for the
    shared latent parent, one noise variance per vertex."""

    coefficients: dict
    latent_loadings: dict
    noise_var: tuple

    def __post_init__(self):
        for key, c in self.coefficients.items():
            if abs(c) < COEF_FLOOR:
                raise ValueError("coefficient %r below floor %g" % (key, COEF_FLOOR))
        for key, (fa, fb) in self.latent_loadings.items():
            if abs(fa) < COEF_FLOOR or abs(fb) < COEF_FLOOR:
                raise ValueError("latent loading %r below floor %g" % (key, COEF_FLOOR))
        for v in self.noise_var:
            if v <= 0:
                raise ValueError("noise variances must be positive")


def admg_to_mag(admg: MixedGraph) -> MixedGraph:
    """Observational MAG: pairs joined by an inducing path become adjacent,
    oriented tail-to-arrow along ancestry, bidirected otherwise."""
    b = GraphBuilder(admg.names)
    anc = [admg.ancestors([v]) for v in range(admg.p)]
    for i in range(admg.p):
        for j in range(i + 1, admg.p):
            if not has_inducing_path(admg, i, j):
                continue
            if i in anc[j]:
                b.add_edge(i, j, TAIL, ARROW)
            elif j in anc[i]:
                b.add_edge(i, j, ARROW, TAIL)
            else:
                b.add_edge(i, j, ARROW, ARROW)
    return b.freeze()


def random_ground_truth(p: int, edge_density: float = 0.4, bidirected_fraction: float = 0.2, seed=0) -> GroundTruth:
    if p < 2:
        raise ValueError("need at least two vertices")
    if not (0.0 <= edge_density <= 1.0 and 0.0 <= bidirected_fraction <= 1.0):
        raise ValueError("edge_density and bidirected_fraction must lie in [0, 1]")
    rng = _generator(seed)
    names = tuple("V%d" % (i + 1) for i in range(p))
    order = [int(v) for v in rng.permutation(p)]
    b = GraphBuilder(names)
    for ii in range(p):
        for jj in range(ii + 1, p):
            if rng.random() >= edge_density:
                continue
            a, c = order[ii], order[jj]
            if rng.random() < bidirected_fraction:
                b.add_edge(a, c, ARROW, ARROW)
            else:
                b.add_edge(a, c, TAIL, ARROW)
    admg = b.freeze()
    mag = admg_to_mag(admg)
    return GroundTruth(admg=admg, mag=mag, pag=mag_to_pag(mag), seed=seed)


def _directed_edges(admg: MixedGraph) -> list[tuple[int, int]]:
    out = []
    for i, j in admg.edge_pairs():
        if admg.has_directed_edge(i, j):
            out.append((i, j))
        elif admg.has_directed_edge(j, i):
            out.append((j, i))
    return sorted(out)


def _bidirected_pairs(admg: MixedGraph) -> list[tuple[int, int]]:
    return [
        (i, j)
        for i, j in admg.edge_pairs()
        if admg.mark(i, j) is ARROW and admg.mark(j, i) is ARROW
    ]


def random_sem(gt: GroundTruth, seed=0, coef_max: float = 0.9) -> SemSpec:
    rng = _generator(seed)

    def draw():
        mag = rng.uniform(COEF_FLOOR, coef_max)
        return mag if rng.random() < 0.5 else -mag

    coefficients = {edge: draw() for edge in _directed_edges(gt.admg)}
    latent_loadings = {pair: (draw(), draw()) for pair in _bidirected_pairs(gt.admg)}
    noise_var = tuple(float(v) for v in rng.uniform(0.5, 1.5, gt.admg.p))
    return SemSpec(coefficients, latent_loadings, noise_var)


def _topological_order(admg: MixedGraph) -> list[int]:
    parents = {v: set() for v in range(admg.p)}
    for a, c in _directed_edges(admg):
        parents[c].add(a)
    out = []
    ready = sorted(v for v in parents if not parents[v])
    while ready:
        v = ready.pop(0)
        out.append(v)
        for w in sorted(parents):
            if v in parents[w]:
                parents[w].discard(v)
                if not parents[w] and w not in out and w not in ready:
                    ready.append(w)
        ready.sort()
    if len(out) != admg.p:
        raise ValueError("directed part of the graph has a cycle")
    return out


def sample_gaussian(gt: GroundTruth, spec: SemSpec, n: int, seed=0) -> Dataset:
    """Draw n rows from the linear Gaussian SEM: each vertex is its noise
    plus coefficient-weighted parents plus loadings on one shared standard
    normal latent per bidirected edge."""
    rng = _generator(seed)
    p = gt.admg.p
    latents = {pair: rng.standard_normal(n) for pair in _bidirected_pairs(gt.admg)}
    noise = [rng.standard_normal(n) * math.sqrt(spec.noise_var[v]) for v in range(p)]
    cols: list = [None] * p
    for v in _topological_order(gt.admg):
        x = noise[v].copy()
        for (a, c), coef in sorted(spec.coefficients.items()):
            if c == v:
                x += coef * cols[a]
        for pair, (fa, fb) in sorted(spec.latent_loadings.items()):
            if pair[0] == v:
                x += fa * latents[pair]
            elif pair[1] == v:
                x += fb * latents[pair]
        cols[v] = x
    kinds = [VarKind(CONTINUOUS)] * p
    return Dataset(gt.admg.names, kinds, cols)


def _as_numeric(col: np.ndarray) -> np.ndarray:
    return col.astype(float)


def sample_mixed(gt: GroundTruth, spec: SemSpec, kinds, n: int, seed=0) -> Dataset:
    """Like sample_gaussian, but discrete vertices are drawn from logistic
    (binary) or baseline-category (multinomial) models whose linear
    predictor reuses the SEM coefficients; level l scales it by a factor of
    magnitude >= 1 with alternating sign, keeping every effect above the
    coefficient floor."""
    rng = _generator(seed)
    p = gt.admg.p
    kinds = list(kinds)
    if len(kinds) != p:
        raise ValueError("kinds length must match vertex count")
    latents = {pair: rng.standard_normal(n) for pair in _bidirected_pairs(gt.admg)}
    cols: list = [None] * p
    for v in _topological_order(gt.admg):
        lin = np.zeros(n)
        for (a, c), coef in sorted(spec.coefficients.items()):
            if c == v:
                lin += coef * _as_numeric(cols[a])
        for pair, (fa, fb) in sorted(spec.latent_loadings.items()):
            if pair[0] == v:
                lin += fa * latents[pair]
            elif pair[1] == v:
                lin += fb * latents[pair]
        kind = kinds[v]
        if kind.kind == CONTINUOUS:
            cols[v] = lin + rng.standard_normal(n) * math.sqrt(spec.noise_var[v])
        elif kind.levels == 2:
            prob = 1.0 / (1.0 + np.exp(-lin))
            cols[v] = (rng.random(n) < prob).astype(np.int64)
        else:
            etas = np.zeros((n, kind.levels))
            for level in range(1, kind.levels):
                scale = (1.0 + 0.5 * (level - 1)) * (1 if level % 2 else -1)
                etas[:, level] = scale * lin
            etas -= etas.max(axis=1, keepdims=True)
            probs = np.exp(etas)
            probs /= probs.sum(axis=1, keepdims=True)
            cum = np.cumsum(probs, axis=1)
            u = rng.random(n)
            cols[v] = (u[:, None] >= cum).sum(axis=1).astype(np.int64)
    return Dataset(gt.admg.names, kinds, cols)


# -- structural metrics --------------------------------------------------------


def _pair_state(g: MixedGraph, i: int, j: int):
    if not g.adjacent(i, j):
        return None
    return (g.mark(j, i), g.mark(i, j))  # (mark at i, mark at j)


def _aligned_indices(a: MixedGraph, b: MixedGraph) -> list[int]:
    if sorted(a.names) != sorted(b.names):
        raise ValueError("graphs are over different variable sets")
    return [b.names.index(nm) for nm in a.names]


def shd(a: MixedGraph, b: MixedGraph) -> int:
    """Endpoint-mark edit distance: two graphs over the same variables,
    counting one edit per differing endpoint mark and two per pair present
    in only one graph."""
    idx = _aligned_indices(a, b)
    total = 0
    for i in range(a.p):
        for j in range(i + 1, a.p):
            sa = _pair_state(a, i, j)
            sb = _pair_state(b, idx[i], idx[j])
            if sa is None and sb is None:
                continue
            if sa is None or sb is None:
                total += 2
            else:
                total += (sa[0] is not sb[0]) + (sa[1] is not sb[1])
    return total


def fdr(inferred: MixedGraph, truth: MixedGraph) -> float:
    """Share of the inferred graph's definite claims (tail marks, arrowheads,
    and asserted missing edges) that contradict the reference. No claims at
    all scores 0."""
    idx = _aligned_indices(inferred, truth)
    claims = wrong = 0
    for i in range(inferred.p):
        for j in range(i + 1, inferred.p):
            si = _pair_state(inferred, i, j)
            st = _pair_state(truth, idx[i], idx[j])
            if si is None:
                claims += 1
                wrong += st is not None
                continue
            for slot in (0, 1):
                if si[slot] is CIRCLE:
                    continue
                claims += 1
                wrong += st is None or st[slot] is not si[slot]
    return wrong / claims if claims else 0.0


def for_rate(inferred: MixedGraph, truth: MixedGraph) -> float:
    """Share of the inferred graph's circle marks sitting where the
    reference commits to something other than a circle."""
    idx = _aligned_indices(inferred, truth)
    slots = wrong = 0
    for i in range(inferred.p):
        for j in range(i + 1, inferred.p):
            si = _pair_state(inferred, i, j)
            if si is None:
                continue
            st = _pair_state(truth, idx[i], idx[j])
            for slot in (0, 1):
                if si[slot] is not CIRCLE:
                    continue
                slots += 1
                wrong += st is None or st[slot] is not CIRCLE
    return wrong / slots if slots else 0.0


def sign_test(xs, ys) -> float:
    """Exact two-sided paired sign test p-value; ties drop out, no nonzero
    differences gives 1."""
    wins = losses = 0
    for x, y in zip(xs, ys):
        if x < y:
            wins += 1
        elif x > y:
            losses += 1
    nn = wins + losses
    if nn == 0:
        return 1.0
    m = min(wins, losses)
    tail = sum(math.comb(nn, i) for i in range(m + 1)) / 2.0**nn
    return min(1.0, 2.0 * tail)


# -- benchmark driver ----------------------------------------------------------

SCENARIO_DEFAULTS = {
    "p": 5,
    "n": 1000,
    "replicates": 10,
    "edge_density": 0.4,
    "bidirected_fraction": 0.2,
    "seed": 0,
    "alpha": 0.05,
    "k": 1,
    "r_max": None,
    "kinds": "gaussian",
    "threads": 1,
    "timing": "off",
    "ties": "strict",
    "sep_base": "pds",
}

_SCENARIO_PARSERS = {
    "p": int,
    "n": int,
    "replicates": int,
    "edge_density": float,
    "bidirected_fraction": float,
    "seed": int,
    "alpha": float,
    "k": int,
    "r_max": lambda s: None if s == "auto" else int(s),
    "kinds": str,
    "threads": int,
    "timing": str,
    "ties": str,
    "sep_base": str,
}


def parse_scenario(text: str) -> dict:
    """key=value lines with # comments; unknown keys are errors, missing
    keys take defaults."""
    out = dict(SCENARIO_DEFAULTS)
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError("bad scenario line %r" % raw)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SCENARIO_PARSERS:
            raise ValueError("unknown scenario key %r" % key)
        out[key] = _SCENARIO_PARSERS[key](value)
    if out["timing"] not in ("off", "wall"):
        raise ValueError("timing must be off or wall")
    return out


def scenario_kinds(scenario: dict) -> list[VarKind]:
    text = scenario["kinds"]
    if text == "gaussian":
        return [VarKind(CONTINUOUS)] * scenario["p"]
    kinds = [parse_kind(tok) for tok in text.split(",")]
    if len(kinds) != scenario["p"]:
        raise ValueError("kinds list length %d does not match p=%d" % (len(kinds), scenario["p"]))
    return kinds


@dataclass
class BenchmarkResult:
    scenario: dict
    rows: list = field(default_factory=list)

    def csv_text(self) -> str:
        timing = self.scenario["timing"]
        lines = ["seed,n,algo,valid,recovered,shd,fdr,for,seconds"]
        for row in self.rows:
            secs = "%.3f" % row["seconds"] if timing == "wall" else "0.000"
            if row.get("error") is not None:
                shd_s = fdr_s = for_s = ""
            else:
                shd_s = "%d" % row["shd"]
                fdr_s = "%.4f" % row["fdr"]
                for_s = "%.4f" % row["forr"]
            lines.append(
                "%d,%d,%s,%d,%d,%s,%s,%s,%s"
                % (
                    row["seed"],
                    self.scenario["n"],
                    row["algo"],
                    int(row["valid"]),
                    int(row["recovered"]),
                    shd_s,
                    fdr_s,
                    for_s,
                    secs,
                )
            )
        return "\n".join(lines) + "\n"

    def summary_text(self) -> str:
        lines = []
        ok = {algo: [r for r in self.rows if r["algo"] == algo and r.get("error") is None] for algo in ("fci", "dcfci")}
        for algo in ("fci", "dcfci"):
            rows = ok[algo]
            failed = sum(1 for r in self.rows if r["algo"] == algo and r.get("error") is not None)
            if not rows:
                lines.append("%s: no successful replicates (%d failed)" % (algo, failed))
                continue
            shds = np.array([r["shd"] for r in rows], dtype=float)
            qs = np.quantile(shds, [0.0, 0.25, 0.5, 0.75, 1.0])
            lines.append(
                "%s: runs=%d failed=%d valid=%.3f recovered=%.3f"
                % (
                    algo,
                    len(rows),
                    failed,
                    sum(r["valid"] for r in rows) / len(rows),
                    sum(r["recovered"] for r in rows) / len(rows),
                )
            )
            lines.append(
                "  shd min=%.1f q1=%.1f median=%.1f mean=%.2f q3=%.1f max=%.1f"
                % (qs[0], qs[1], qs[2], float(shds.mean()), qs[3], qs[4])
            )
        paired = {}
        for r in self.rows:
            if r.get("error") is None:
                paired.setdefault(r["seed"], {})[r["algo"]] = r["shd"]
        both = sorted(k for k, v in paired.items() if len(v) == 2)
        if both:
            dc = [paired[k]["dcfci"] for k in both]
            fc = [paired[k]["fci"] for k in both]
            lines.append(
                "sign test shd dcfci vs fci: pairs=%d wins=%d losses=%d p=%.4f"
                % (
                    len(both),
                    sum(a < b for a, b in zip(dc, fc)),
                    sum(a > b for a, b in zip(dc, fc)),
                    sign_test(dc, fc),
                )
            )
        return "\n".join(lines) + "\n"


def simulate_replicate(scenario: dict, i: int = 0):
    """Ground truth and sampled dataset for replicate i of a scenario."""
    scenario = {**SCENARIO_DEFAULTS, **scenario}
    root = scenario["seed"]
    gt = random_ground_truth(
        scenario["p"],
        scenario["edge_density"],
        scenario["bidirected_fraction"],
        seed=np.random.SeedSequence(root, spawn_key=(i, 0)),
    )
    spec = random_sem(gt, seed=np.random.SeedSequence(root, spawn_key=(i, 1)))
    kinds = scenario_kinds(scenario)
    data_seed = np.random.SeedSequence(root, spawn_key=(i, 2))
    if all(k.kind == CONTINUOUS for k in kinds):
        d = sample_gaussian(gt, spec, scenario["n"], seed=data_seed)
    else:
        d = sample_mixed(gt, spec, kinds, scenario["n"], seed=data_seed)
    return gt, d


def _run_replicate(scenario: dict, i: int) -> list[dict]:
    gt, d = simulate_replicate(scenario, i)
    provider = DataPosteriorProvider(d)
    r_max = scenario["r_max"]
    truth_sig = mec_signature(gt.pag)
    rows = []
    for algo in ("fci", "dcfci"):
        t0 = time.perf_counter()
        row = {"seed": i, "algo": algo, "error": None}
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if algo == "fci":
                    g, _ = fci(provider, d.names, alpha=scenario["alpha"], r_max=r_max)
                else:
                    cfg = DcfciConfig(
                        alpha=scenario["alpha"],
                        k=scenario["k"],
                        r_max=r_max,
                        ties=scenario["ties"],
                        sep_base=scenario["sep_base"],
                    )
                    cands, _ = dcfci_search(provider, d.names, cfg)
                    g = cands[0].graph
            row.update(
                valid=is_valid_pag(g),
                recovered=mec_signature(g) == truth_sig,
                shd=shd(g, gt.pag),
                fdr=fdr(g, gt.pag),
                forr=for_rate(g, gt.pag),
            )
        except Exception as err:  # recorded per replicate, run continues
            row.update(error=str(err), valid=False, recovered=False, shd=None, fdr=None, forr=None)
        row["seconds"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def run_benchmark(scenario: dict) -> BenchmarkResult:
    """Run every replicate of a scenario (in parallel when threads > 1;
    results are keyed and ordered by replicate index, so worker count never
    changes the output)."""
    scenario = {**SCENARIO_DEFAULTS, **scenario}
    n_rep = scenario["replicates"]
    indices = list(range(n_rep))
    if scenario["threads"] > 1 and n_rep > 1:
        with ThreadPoolExecutor(max_workers=scenario["threads"]) as pool:
            per_rep = list(pool.map(lambda i: _run_replicate(scenario, i), indices))
    else:
        per_rep = [_run_replicate(scenario, i) for i in indices]
    result = BenchmarkResult(scenario=scenario)
    for rows in per_rep:
        result.rows.extend(rows)
    return result
