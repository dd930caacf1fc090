"""Likelihood-ratio conditional-independence tests for mixed data.

Independence of X and Y given Z is tested by fitting nested regressions in
both response directions (X ~ Y + Z vs X ~ Z, and Y ~ X + Z vs Y ~ Z), each
giving a chi-square LR statistic, and combining the two directional p-values
symmetrically. The model family follows the response type: ordinary least
squares for continuous, logistic for binary, baseline-category logits for
multinomial responses. Results are cached process-wide.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, gammainccinv

from .data import Dataset

RIDGE = 1e-10
IRLS_TOL = 1e-8
IRLS_MAX_ITER = 100
COEF_DIVERGENCE_LIMIT = 1e6


class CIError(Exception):
    """Base class for conditional-independence test failures."""


class DegenerateInputError(CIError):
    """Design matrix unusable: singular, or too few rows for the model."""


class FitFailureError(CIError):
    """Iterative fit did not converge, or the data separate perfectly."""

    def __init__(self, msg, iterations=0, separation=False):
        super().__init__(msg)
        self.iterations = iterations
        self.separation = separation


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution."""
    if x < 0 or df < 1:
        raise ValueError("need x >= 0 and df >= 1")
    return float(gammaincc(df / 2.0, x / 2.0))


def chi_square_isf(p: float, df: int) -> float:
    """Inverse of chi_square_sf: the statistic whose upper tail is p."""
    if not (0.0 <= p <= 1.0) or df < 1:
        raise ValueError("need p in [0,1] and df >= 1")
    if p == 0.0:
        return float("inf")
    return float(2.0 * gammainccinv(df / 2.0, p))


def test_key(x: int, y: int, z) -> tuple[int, int, tuple[int, ...]]:
    """Canonical direction-free key for a CI query."""
    if x == y:
        raise ValueError("test needs two distinct variables")
    zs = tuple(sorted(set(z)))
    if x in zs or y in zs:
        raise ValueError("conditioning set contains a tested variable")
    return (x, y, zs) if x < y else (y, x, zs)


@dataclass(frozen=True)
class CITestResult:
    statistic: float  # combined chi-square equivalent of p_value at df
    df: int
    p_value: float
    p1: float
    p2: float


def _design(d: Dataset, predictors: tuple[int, ...]) -> np.ndarray:
    blocks = [np.ones((d.n, 1))]
    for v in predictors:
        blocks.append(d.encoded(v))
    return np.hstack(blocks)


def fit_linear(d: Dataset, response: int, predictors: tuple[int, ...]) -> tuple[float, int]:
    """OLS fit; returns (Gaussian log-likelihood at the MLE variance,
    parameter count including intercept and variance)."""
    if response in predictors:
        raise ValueError("response cannot be its own predictor")
    if d.kind(response).categorical:
        raise ValueError("fit_linear needs a continuous response")
    X = _design(d, predictors)
    yv = d.column(response)
    xtx = X.T @ X + RIDGE * np.eye(X.shape[1])
    try:
        beta = np.linalg.solve(xtx, X.T @ yv)
    except np.linalg.LinAlgError:
        raise DegenerateInputError("singular design for response %s" % d.names[response]) from None
    resid = yv - X @ beta
    sigma2 = float(resid @ resid) / d.n
    if sigma2 <= 0:
        sigma2 = np.finfo(float).tiny
    ll = -0.5 * d.n * (np.log(2 * np.pi * sigma2) + 1.0)
    return float(ll), X.shape[1] + 1


def fit_logistic(d: Dataset, response: int, predictors: tuple[int, ...]) -> tuple[float, int]:
    """Logistic regression by IRLS; returns (log-likelihood, param count)."""
    if response in predictors:
        raise ValueError("response cannot be its own predictor")
    kind = d.kind(response)
    if kind.kind != "binary":
        raise ValueError("fit_logistic needs a binary response")
    yv = d.column(response).astype(np.float64)
    if yv.min() == yv.max():
        raise DegenerateInputError("single-class binary response %s" % d.names[response])
    X = _design(d, predictors)
    beta = np.zeros(X.shape[1])
    ll_old = -np.inf
    for it in range(1, IRLS_MAX_ITER + 1):
        eta = X @ beta
        mu = 1.0 / (1.0 + np.exp(-np.clip(eta, -700, 700)))
        ll = float(yv @ np.log(np.clip(mu, 1e-300, 1)) + (1 - yv) @ np.log(np.clip(1 - mu, 1e-300, 1)))
        if np.max(np.abs(beta)) > COEF_DIVERGENCE_LIMIT:
            raise FitFailureError(
                "diverging coefficients fitting %s" % d.names[response],
                iterations=it,
                separation=True,
            )
        if abs(ll - ll_old) < IRLS_TOL * (abs(ll_old) + IRLS_TOL):
            return ll, X.shape[1]
        ll_old = ll
        w = np.clip(mu * (1 - mu), 1e-10, None)
        xtwx = (X * w[:, None]).T @ X + RIDGE * np.eye(X.shape[1])
        try:
            beta = beta + np.linalg.solve(xtwx, X.T @ (yv - mu))
        except np.linalg.LinAlgError:
            raise DegenerateInputError(
                "singular weighted design for response %s" % d.names[response]
            ) from None
    raise FitFailureError(
        "logistic fit for %s did not converge" % d.names[response],
        iterations=IRLS_MAX_ITER,
    )


def fit_multinomial(d: Dataset, response: int, predictors: tuple[int, ...]) -> tuple[float, int]:
    """Baseline-category logit fit by Newton's method; level 0 is the
    baseline. Returns (log-likelihood, param count = (levels-1) * design
    width)."""
    if response in predictors:
        raise ValueError("response cannot be its own predictor")
    kind = d.kind(response)
    if kind.kind != "multinomial":
        raise ValueError("fit_multinomial needs a multinomial response")
    codes = d.column(response)
    if len(np.unique(codes)) < kind.levels:
        raise DegenerateInputError("response %s is missing observed levels" % d.names[response])
    X = _design(d, predictors)
    n, w = X.shape
    km1 = kind.levels - 1
    onehot = np.zeros((n, km1))
    for lvl in range(1, kind.levels):
        onehot[:, lvl - 1] = codes == lvl
    B = np.zeros((w, km1))
    ll_old = -np.inf
    for it in range(1, IRLS_MAX_ITER + 1):
        eta = np.clip(X @ B, -700, 700)
        expeta = np.exp(eta)
        denom = 1.0 + expeta.sum(axis=1)
        P = expeta / denom[:, None]  # probabilities of levels 1..K-1
        ll = float(np.sum(eta * onehot) - np.sum(np.log(denom)))
        if np.max(np.abs(B)) > COEF_DIVERGENCE_LIMIT:
            raise FitFailureError(
                "diverging coefficients fitting %s" % d.names[response],
                iterations=it,
                separation=True,
            )
        if abs(ll - ll_old) < IRLS_TOL * (abs(ll_old) + IRLS_TOL):
            return ll, w * km1
        ll_old = ll
        grad = X.T @ (onehot - P)  # (w, km1)
        # Hessian of the negative log-likelihood, blocked over categories.
        H = np.empty((w * km1, w * km1))
        for a in range(km1):
            for b in range(km1):
                wt = P[:, a] * ((1.0 if a == b else 0.0) - P[:, b])
                H[a * w : (a + 1) * w, b * w : (b + 1) * w] = -(X * wt[:, None]).T @ X
        H -= RIDGE * np.eye(w * km1)
        try:
            step = np.linalg.solve(H, -grad.T.reshape(-1))
        except np.linalg.LinAlgError:
            raise DegenerateInputError(
                "singular Hessian for response %s" % d.names[response]
            ) from None
        B = B + step.reshape(km1, w).T
    raise FitFailureError(
        "multinomial fit for %s did not converge" % d.names[response],
        iterations=IRLS_MAX_ITER,
    )


def _fit(d: Dataset, response: int, predictors: tuple[int, ...]) -> tuple[float, int]:
    kind = d.kind(response)
    if kind.kind == "continuous":
        return fit_linear(d, response, predictors)
    if kind.kind == "binary":
        return fit_logistic(d, response, predictors)
    return fit_multinomial(d, response, predictors)


def _out_width(d: Dataset, v: int) -> int:
    """Parameters one predictor column contributes per response equation."""
    kind = d.kind(v)
    return kind.levels - 1 if kind.categorical else 1


def lr_test(d: Dataset, x: int, y: int, z) -> CITestResult:
    """Symmetric nested-model likelihood-ratio CI test of x and y given z."""
    x, y, zs = test_key(x, y, z)
    df = d.kinds[x].width * d.kinds[y].width
    full_params = max(
        _out_width(d, x) * (1 + d.kinds[y].width + sum(d.kinds[v].width for v in zs)),
        _out_width(d, y) * (1 + d.kinds[x].width + sum(d.kinds[v].width for v in zs)),
    )
    if len(zs) > d.n - full_params - 1:
        raise DegenerateInputError(
            "too few rows (%d) for conditioning set of size %d" % (d.n, len(zs))
        )
    stats = []
    for resp, other in ((x, y), (y, x)):
        ll1, k1 = _fit(d, resp, (other,) + zs)
        ll0, k0 = _fit(d, resp, zs)
        stat = 2.0 * (ll1 - ll0)
        if stat < -1e-6:
            raise FitFailureError(
                "negative LR statistic (%.3g) for response %s" % (stat, d.names[resp])
            )
        if k1 - k0 != df:
            raise DegenerateInputError(
                "parameter-count difference %d does not match df %d" % (k1 - k0, df)
            )
        stats.append(max(stat, 0.0))
    p1 = chi_square_sf(stats[0], df)
    p2 = chi_square_sf(stats[1], df)
    p = min(2.0 * min(p1, p2), max(p1, p2))
    p = min(max(p, 0.0), 1.0)
    return CITestResult(statistic=chi_square_isf(p, df), df=df, p_value=p, p1=p1, p2=p2)


class CITestCache:
    """Process-wide cache of CI test results with exactly-once computation.

    Concurrent requests for the same key block until the first computation
    finishes; failures are cached and re-raised so a failing test stays
    deterministic for the whole run.
    """

    def __init__(self, compute):
        self._compute = compute
        self._lock = threading.Lock()
        self._done: dict = {}
        self._pending: dict = {}
        self.computed = 0

    def get(self, x: int, y: int, z) -> CITestResult:
        key = test_key(x, y, z)
        while True:
            with self._lock:
                if key in self._done:
                    value = self._done[key]
                    if isinstance(value, Exception):
                        raise value
                    return value
                event = self._pending.get(key)
                if event is None:
                    event = threading.Event()
                    self._pending[key] = event
                    mine = True
                else:
                    mine = False
            if not mine:
                event.wait()
                continue
            try:
                value = self._compute(*key)
                self.computed += 1
            except CIError as err:
                value = err
            with self._lock:
                self._done[key] = value
                del self._pending[key]
                event.set()
            if isinstance(value, Exception):
                raise value
            return value


@dataclass(frozen=True)
class Evidence:
    """What one CI query contributes: its p-value and the posterior split
    between the independence (p_h0) and dependence (p_h1) hypotheses."""

    p_value: float
    p_h0: float
    p_h1: float


class DataPosteriorProvider:
    """Evidence from a dataset: cached LR tests plus Bayes-factor posteriors."""

    def __init__(self, d: Dataset, prior_h0: float = 0.5, omega_min: float = 0.1):
        from .bayes import posterior_from_statistic

        self._posterior = posterior_from_statistic
        self.dataset = d
        self.names = d.names
        self.prior_h0 = prior_h0
        self.omega_min = omega_min
        self.cache = CITestCache(lambda x, y, z: lr_test(d, x, y, z))

    def test(self, x: int, y: int, z) -> Evidence:
        res = self.cache.get(x, y, z)
        p_h0, p_h1 = self._posterior(
            res.statistic, res.df, self.dataset.n, self.prior_h0, self.omega_min
        )
        return Evidence(p_value=res.p_value, p_h0=p_h0, p_h1=p_h1)


class OraclePosteriorProvider:
    """Evidence from exact m-separation in a known MAG: p-value and
    posteriors collapse to 1/0."""

    def __init__(self, mag):
        from .graphs import m_separated

        self.mag = mag
        self.names = mag.names
        self._sep = m_separated

    def test(self, x: int, y: int, z) -> Evidence:
        if self._sep(self.mag, x, y, z, definite=False):
            return Evidence(p_value=1.0, p_h0=1.0, p_h1=0.0)
        return Evidence(p_value=0.0, p_h0=0.0, p_h1=1.0)
