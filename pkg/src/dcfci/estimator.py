"""Estimator-style facade over the search, for callers who prefer the
fit/params idiom to calling dcfci() directly."""

from __future__ import annotations

import numpy as np

from .data import CONTINUOUS, Dataset, VarKind
from .search import DcfciConfig, dcfci

_PARAM_NAMES = (
    "alpha",
    "k",
    "r_max",
    "n_r_cap",
    "certainty_threshold",
    "ties",
    "sep_base",
    "threads",
)


class DcfciDiscovery:
    """Learns a PAG from data.

    Parameters mirror DcfciConfig. fit() accepts a Dataset, or a 2-D array
    treated as all-continuous columns named X1..Xp. After fitting,
    `pag_` holds the top-ranked graph, `candidates_` the retained list,
    and `trace_` the per-iteration record.
    """

    def __init__(
        self,
        alpha: float = 0.05,
        k: int = 1,
        r_max: int | None = None,
        n_r_cap: int = 12,
        certainty_threshold: float = 0.95,
        ties: str = "strict",
        sep_base: str = "pds",
        threads: int = 1,
    ):
        self.alpha = alpha
        self.k = k
        self.r_max = r_max
        self.n_r_cap = n_r_cap
        self.certainty_threshold = certainty_threshold
        self.ties = ties
        self.sep_base = sep_base
        self.threads = threads

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in _PARAM_NAMES}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in _PARAM_NAMES:
                raise ValueError("unknown parameter %r" % name)
            setattr(self, name, value)
        return self

    def _config(self) -> DcfciConfig:
        return DcfciConfig(**self.get_params())

    def fit(self, X, y=None):
        if isinstance(X, Dataset):
            d = X
        else:
            arr = np.asarray(X, dtype=float)
            if arr.ndim != 2:
                raise ValueError("expected a Dataset or a 2-D array")
            names = ["X%d" % (j + 1) for j in range(arr.shape[1])]
            kinds = [VarKind(CONTINUOUS)] * arr.shape[1]
            d = Dataset(names, kinds, [arr[:, j] for j in range(arr.shape[1])])
        candidates, trace = dcfci(d, self._config())
        self.candidates_ = candidates
        self.trace_ = trace
        self.pag_ = candidates[0].graph if candidates else None
        self.score_ = candidates[0].score if candidates else None
        return self
