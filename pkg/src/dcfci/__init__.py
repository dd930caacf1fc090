"""dcFCI: data-compatible causal discovery under latent confounding.

Learns partial ancestral graphs from observational data with mixed variable
types, ranking candidate graphs by a nonparametric compatibility score built
from posterior probabilities of conditional (in)dependence hypotheses.
"""

from .citest import DataPosteriorProvider, OraclePosteriorProvider
from .data import Dataset, VarKind, load_files, parse_kind
from .estimator import DcfciDiscovery
from .fci import fci, mag_oracle
from .graphs import (
    ARROW,
    CIRCLE,
    TAIL,
    GraphBuilder,
    Mark,
    MixedGraph,
    is_valid_pag,
    m_connected,
    m_separated,
    mag_to_pag,
    pag_to_mag,
    pag_validity_error,
    parse_graph,
)
from .scoring import ScoreBounds, comparable_scores, straightforward_score
from .search import CandidatePag, DcfciConfig, dcfci, weak_faithfulness_holds

__version__ = "0.1.0"

__all__ = [
    "ARROW",
    "CIRCLE",
    "TAIL",
    "CandidatePag",
    "Dataset",
    "DataPosteriorProvider",
    "DcfciConfig",
    "DcfciDiscovery",
    "GraphBuilder",
    "Mark",
    "MixedGraph",
    "OraclePosteriorProvider",
    "ScoreBounds",
    "VarKind",
    "comparable_scores",
    "dcfci",
    "fci",
    "is_valid_pag",
    "load_files",
    "m_connected",
    "m_separated",
    "mag_oracle",
    "mag_to_pag",
    "pag_to_mag",
    "pag_validity_error",
    "parse_graph",
    "parse_kind",
    "straightforward_score",
    "weak_faithfulness_holds",
    "__version__",
]
