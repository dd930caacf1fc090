"""Shared fixtures: the four-variable example and its p-value table.

The table records a p-value for every pairwise CI test over A, B, X, Y,
chosen to exercise a nearly-unfaithful regime: two true independencies
sit next to several weak dependencies that a naive threshold misreads.
A posterior provider recomputes full-precision posteriors from the
matching chi-square statistics at n = 10000, df = 1.

The graphs cover the true MAG/PAG, every candidate the search walks
through on this table, and rival structures used by the scoring tests.
"""

from __future__ import annotations

from dcfci.bayes import posterior_from_statistic
from dcfci.citest import Evidence, chi_square_isf
from dcfci.graphs import parse_graph

NAMES = ("A", "B", "X", "Y")

TEST_PVALUES = {
    ("A", "B", ()): 2.64e-14,
    ("A", "X", ()): 4.13e-311,
    ("A", "Y", ()): 0.00276,
    ("B", "X", ()): 0.496,
    ("B", "Y", ()): 0.0,
    ("X", "Y", ()): 0.00937,
    ("A", "B", ("X",)): 2.58e-15,
    ("A", "B", ("Y",)): 7.69e-25,
    ("A", "X", ("B",)): 4.46e-312,
    ("A", "X", ("Y",)): 3.49e-310,
    ("A", "Y", ("B",)): 4.59e-14,
    ("A", "Y", ("X",)): 0.0279,
    ("B", "X", ("A",)): 0.0246,
    ("B", "X", ("Y",)): 0.0294,
    ("B", "Y", ("A",)): 0.0,
    ("B", "Y", ("X",)): 0.0,
    ("X", "Y", ("A",)): 0.105,
    ("X", "Y", ("B",)): 0.000895,
    ("A", "B", ("X", "Y")): 2.05e-24,
    ("A", "X", ("B", "Y")): 9.87e-310,
    ("A", "Y", ("B", "X")): 1.04e-11,
    ("B", "X", ("A", "Y")): 0.0936,
    ("B", "Y", ("A", "X")): 0.0,
    ("X", "Y", ("A", "B")): 0.536,
}

# Reference (P(H0), P(H1)) pairs for the same table, reported to three
# significant figures; the posterior reproduction test checks against
# these at 1e-2.
REFERENCE_POSTERIORS = {
    ("A", "B", ()): (1.78e-12, 1.0),
    ("A", "X", ()): (0.0, 1.0),
    ("A", "Y", ()): (0.0366, 0.963),
    ("B", "X", ()): (0.672, 0.328),
    ("B", "Y", ()): (0.0, 1.0),
    ("X", "Y", ()): (0.105, 0.895),
    ("A", "B", ("X",)): (1.87e-13, 1.0),
    ("A", "B", ("Y",)): (0.0, 1.0),
    ("A", "X", ("B",)): (0.0, 1.0),
    ("A", "X", ("Y",)): (0.0, 1.0),
    ("A", "Y", ("B",)): (3.02e-12, 1.0),
    ("A", "Y", ("X",)): (0.198, 0.802),
    ("B", "X", ("A",)): (0.185, 0.815),
    ("B", "X", ("Y",)): (0.204, 0.796),
    ("B", "Y", ("A",)): (0.0, 1.0),
    ("B", "Y", ("X",)): (0.0, 1.0),
    ("X", "Y", ("A",)): (0.388, 0.612),
    ("X", "Y", ("B",)): (0.0136, 0.986),
    ("A", "B", ("X", "Y")): (0.0, 1.0),
    ("A", "X", ("B", "Y")): (0.0, 1.0),
    ("A", "Y", ("B", "X")): (5.57e-10, 1.0),
    ("B", "X", ("A", "Y")): (0.368, 0.632),
    ("B", "Y", ("A", "X")): (0.0, 1.0),
    ("X", "Y", ("A", "B")): (0.683, 0.317),
}


class TableProvider:
    """Posterior provider backed by TEST_PVALUES.

    A p-value of exactly zero short-circuits to posteriors (0, 1); any
    other value is inverted to a chi-square statistic and pushed through
    the Bayes-factor machinery so posteriors keep full precision.
    """

    def __init__(self, n: int = 10000, df: int = 1):
        self.n = n
        self.df = df
        self.names = NAMES
        self._cache: dict = {}

    def test(self, x: int, y: int, z) -> Evidence:
        key = (min(x, y), max(x, y), tuple(sorted(z)))
        if key not in self._cache:
            nx, ny = NAMES[key[0]], NAMES[key[1]]
            nz = tuple(NAMES[v] for v in key[2])
            p = TEST_PVALUES[(nx, ny, nz)]
            if p == 0.0:
                ev = Evidence(p_value=0.0, p_h0=0.0, p_h1=1.0)
            else:
                stat = chi_square_isf(p, self.df)
                h0, h1 = posterior_from_statistic(stat, self.df, self.n)
                ev = Evidence(p_value=p, p_h0=h0, p_h1=h1)
            self._cache[key] = ev
        return self._cache[key]


def graph4(text: str):
    return parse_graph("# vars: A,B,X,Y\n" + text + "\n")


# The data-generating MAG: X into A, A and B confounded, both into Y.
TRUE_MAG = graph4("A <-> B\nA <-- X\nA --> Y\nB --> Y")

# Its PAG: the collider at A survives, the rest of the arrow roots blur.
TRUE_PAG = graph4("A <-o B\nA <-o X\nA --> Y\nB --> Y")

# What the sample-based FCI baseline infers from the table at alpha 0.01:
# a chain skeleton X-A-B-Y with colliders at A and B. (The search's
# double-cut branch at r=1 would land on this same graph; it rejects
# that branch because each separator stops being minimal.)
FCI_PAG = graph4("A <-> B\nA <-o X\nB <-o Y")

# Same skeleton, but the X-A-B triple left uncommitted (no collider at A).
NONCOLLIDER_PAG = graph4("A o-> B\nA o-o X\nB <-o Y")

# True skeleton carrying one unsupported arrow; fails PAG validity.
INVALID_PAG = graph4("A o-o B\nA o-o X\nA o-> Y\nB o-o Y")

# True skeleton with every mark a circle; the closest valid repair of
# INVALID_PAG.
ALL_CIRCLE_PAG = graph4("A o-o B\nA o-o X\nA o-o Y\nB o-o Y")

# Wrong skeleton: B as a hub collecting arrows from A, X, and Y.
HUB_PAG = graph4("A o-> B\nA o-o X\nB <-o X\nB <-o Y")

# Candidates the search walks through on the table at alpha 0.01.
# Cutting (B, X) at r=0 leaves colliders at A and at Y:
R0_PAG = graph4("A <-o B\nA <-o X\nA o-o Y\nB o-> Y\nX o-> Y")
# ...then additionally cutting (X, Y) given {A}:
CUT_XY_PAG = graph4("A <-> B\nA <-o X\nA --> Y\nB <-> Y")
# ...or instead cutting (A, Y) given {X}:
CUT_AY_PAG = graph4("A <-> B\nA <-o X\nB <-> Y\nX o-> Y")
