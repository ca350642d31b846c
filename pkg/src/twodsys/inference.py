"""Posterior odds of oscillatory (``s > 0``) versus overdamped (``s < 0``) dynamics.

The odds are the ratio of the prior-weighted likelihood integrals over the
two halves of parameter space.  Both are estimated by plain Monte Carlo
from the prior, with likelihoods accumulated in the log domain; a
tensor-grid quadrature is available as a deterministic cross-check.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, NumericalFailureError
from .gp import TimeSeries
from .statespace import kalman_log_likelihood

__all__ = [
    "PriorSpec",
    "OddsResult",
    "Classification",
    "default_prior",
    "prior_sample",
    "posterior_odds",
    "grid_odds",
    "classify",
]

Interval = Tuple[float, float]


def _interval(value, name):
    lo, hi = (float(v) for v in value)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigurationError(f"{name} must be a finite interval lo < hi, got {value!r}")
    return lo, hi


def _fixed_or_interval(value, name):
    if value is None:
        return None
    if np.ndim(value) == 0:
        v = float(value)
        if not math.isfinite(v):
            raise ConfigurationError(f"{name} must be finite, got {value!r}")
        return v
    return _interval(value, name)


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform priors on ``h, s, k`` and a prior on ``j``.

    ``j_prior`` is ``"uniform"`` on [-1, 1] or ``"tilted"`` with density
    ``(1 + j) / 2``.  ``mean_prior`` and ``noise_prior`` are either a fixed
    value, an interval (uniform prior, integrated over) or ``None`` (mean
    fixed to the sample mean, noise fixed to 0).
    """

    h_range: Interval
    s_range: Interval = (-4.0, 4.0)
    k_range: Interval = (-2.0, 2.0)
    j_prior: str = "uniform"
    mean_prior: Union[None, float, Interval] = None
    noise_prior: Union[None, float, Interval] = None

    def __post_init__(self):
        for name in ("h_range", "s_range", "k_range"):
            object.__setattr__(self, name, _interval(getattr(self, name), name))
        if self.j_prior not in ("uniform", "tilted"):
            raise ConfigurationError(f"j_prior must be 'uniform' or 'tilted', got {self.j_prior!r}")
        object.__setattr__(self, "mean_prior", _fixed_or_interval(self.mean_prior, "mean_prior"))
        noise = _fixed_or_interval(self.noise_prior, "noise_prior")
        if noise is not None and np.min(noise) < 0:
            raise ConfigurationError("noise_prior must be non-negative")
        object.__setattr__(self, "noise_prior", noise)

    @property
    def mass_oscillatory(self) -> float:
        """Prior probability of ``s > 0``."""
        lo, hi = self.s_range
        return (max(hi, 0.0) - max(lo, 0.0)) / (hi - lo)

    @classmethod
    def from_dict(cls, d) -> "PriorSpec":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "PriorSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def default_prior(data, j_prior: str = "uniform") -> PriorSpec:
    """Data-adaptive prior ranges.

    ``h`` spans rates from one per observation span to two per smallest
    sampling gap, ``s`` is [-4, 4] and ``k`` is the log sample standard
    deviation plus or minus 2.
    """
    data = data if isinstance(data, TimeSeries) else TimeSeries(*data)
    t = data.times
    if t.size < 2:
        span, gap = 1.0, 1.0
    else:
        span, gap = t[-1] - t[0], np.min(np.diff(t))
    sd = float(np.std(data.values))
    logsd = math.log(sd) if sd > 0 else 0.0
    return PriorSpec(h_range=(math.log(1 / span), math.log(2 / gap)),
                     s_range=(-4.0, 4.0), k_range=(logsd - 2, logsd + 2), j_prior=j_prior)


@dataclass(frozen=True)
class OddsResult:
    """Log posterior odds of ``s > 0`` and its Monte-Carlo standard error."""

    log_odds: float
    stderr: float
    n_samples: int
    p_oscillatory: float

    @classmethod
    def from_log_odds(cls, log_odds, stderr, n_samples):
        if log_odds >= 0:
            p = 1.0 / (1.0 + math.exp(-log_odds))
        else:
            e = math.exp(log_odds)
            p = e / (1.0 + e)
        return cls(float(log_odds), float(stderr), int(n_samples), p)

    @property
    def odds(self) -> float:
        return math.exp(self.log_odds) if self.log_odds < 700 else math.inf


@dataclass(frozen=True)
class Classification:
    label: str
    odds: OddsResult
    threshold_odds: float


def prior_sample(prior: PriorSpec, seed, count: int, data_mean: float = 0.0) -> dict:
    """Draw ``count`` parameter sets from the prior.

    Returns a dict of arrays with keys ``h, s, k, p, j, mean, noise_var``.
    ``p`` is the principal-branch angle ``(2/pi) asin(j)``.
    """
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    out = {name: rng.uniform(*getattr(prior, f"{name}_range"), size=count)
           for name in ("h", "s", "k")}
    v = rng.uniform(size=count)
    # tilted: inverse CDF of (1 + j)/2 is 2 sqrt(v) - 1
    j = 2 * v - 1 if prior.j_prior == "uniform" else 2 * np.sqrt(v) - 1
    out["j"] = j
    out["p"] = 2 / np.pi * np.arcsin(np.clip(j, -1, 1))
    for name, default in (("mean", data_mean), ("noise_var", 0.0)):
        spec = getattr(prior, f"{'noise' if name == 'noise_var' else 'mean'}_prior")
        if spec is None:
            out[name] = np.full(count, default)
        elif isinstance(spec, tuple):
            out[name] = rng.uniform(*spec, size=count)
        else:
            out[name] = np.full(count, spec)
    return out


def _log_likelihoods(draws, data):
    return kalman_log_likelihood(draws["h"], draws["s"], draws["k"], draws["p"],
                                 data.times, data.values, draws["mean"], draws["noise_var"])


def _batch_seed(seed, index):
    return np.random.SeedSequence([int(seed), int(index)])


def posterior_odds(data, prior: Optional[PriorSpec] = None, budget: int = 20000,
                   seed: int = 0, n_batches: int = 20) -> OddsResult:
    """Monte-Carlo estimate of the log posterior odds of oscillation.

    ``budget`` prior draws are split into ``n_batches`` batches, each with an
    independent RNG stream derived from ``(seed, batch index)``.  Each half of
    parameter space contributes ``sum(L_i [s_i in half]) / budget``; the
    standard error of the log ratio uses the delta method over batch means.

    Raises
    ------
    NumericalFailureError
        If every likelihood underflows.
    """
    data = data if isinstance(data, TimeSeries) else TimeSeries(*data)
    prior = prior or default_prior(data)
    if budget < 1000:
        raise ConfigurationError(f"budget must be >= 1000, got {budget}")
    if n_batches < 2 or budget < n_batches:
        raise ConfigurationError("need at least 2 batches and one draw per batch")

    sizes = np.full(n_batches, budget // n_batches)
    sizes[: budget % n_batches] += 1
    mean0 = float(np.mean(data.values))
    num = np.empty(n_batches)
    den = np.empty(n_batches)
    for b in range(n_batches):
        draws = prior_sample(prior, _batch_seed(seed, b), int(sizes[b]), mean0)
        ll = _log_likelihoods(draws, data)
        ll = np.where(np.isnan(ll), -np.inf, ll)
        osc = draws["s"] > 0
        over = draws["s"] < 0
        num[b] = logsumexp(np.where(osc, ll, -np.inf)) - math.log(sizes[b])
        den[b] = logsumexp(np.where(over, ll, -np.inf)) - math.log(sizes[b])

    w = sizes / budget
    log_num = logsumexp(num, b=w)
    log_den = logsumexp(den, b=w)
    if not (np.isfinite(log_num) or np.isfinite(log_den)):
        raise NumericalFailureError(
            "all likelihoods underflowed; review the prior ranges against the data")
    log_odds = log_num - log_den
    if not np.isfinite(log_odds):
        return OddsResult.from_log_odds(log_odds, math.inf, budget)

    # batch means relative to the pooled estimate
    rn = np.exp(num - log_num)
    rd = np.exp(den - log_den)
    var = np.var(rn - rd, ddof=1) / n_batches
    return OddsResult.from_log_odds(log_odds, math.sqrt(var), budget)


def grid_odds(data, prior: Optional[PriorSpec] = None, resolution: int = 12) -> OddsResult:
    """Deterministic midpoint-rule quadrature over ``(h, s, k, j)``.

    Mean and noise must be fixed (not intervals).  ``stderr`` is reported as
    NaN since the error is discretisation, not sampling.
    """
    data = data if isinstance(data, TimeSeries) else TimeSeries(*data)
    prior = prior or default_prior(data)
    if isinstance(prior.mean_prior, tuple) or isinstance(prior.noise_prior, tuple):
        raise ConfigurationError("grid quadrature needs fixed mean and noise")
    if resolution < 2:
        raise ConfigurationError("resolution must be >= 2")

    def mids(lo, hi):
        return lo + (np.arange(resolution) + 0.5) * (hi - lo) / resolution

    jj = mids(-1.0, 1.0)
    jw = np.ones_like(jj) if prior.j_prior == "uniform" else (1 + jj)
    H, S, Kk, J = np.meshgrid(mids(*prior.h_range), mids(*prior.s_range),
                              mids(*prior.k_range), jj, indexing="ij")
    W = np.broadcast_to(jw, H.shape)
    mean = float(np.mean(data.values)) if prior.mean_prior is None else prior.mean_prior
    noise = 0.0 if prior.noise_prior is None else prior.noise_prior
    ll = kalman_log_likelihood(H.ravel(), S.ravel(), Kk.ravel(),
                               2 / np.pi * np.arcsin(J.ravel()), data.times, data.values,
                               mean, noise)
    s = S.ravel()
    logw = np.log(W.ravel())
    log_num = logsumexp(np.where(s > 0, ll + logw, -np.inf))
    log_den = logsumexp(np.where(s < 0, ll + logw, -np.inf))
    if not (np.isfinite(log_num) or np.isfinite(log_den)):
        raise NumericalFailureError("all likelihoods underflowed on the grid")
    return OddsResult.from_log_odds(log_num - log_den, math.nan, s.size)


def classify(data, prior: Optional[PriorSpec] = None, threshold_odds: float = 10.0,
             budget: int = 20000, seed: int = 0) -> Classification:
    """Label data ``oscillatory``, ``overdamped`` or ``undecided`` by its odds."""
    if not threshold_odds > 1:
        raise ConfigurationError(f"threshold_odds must be > 1, got {threshold_odds}")
    res = posterior_odds(data, prior, budget, seed)
    return Classification(label_for_odds(res.log_odds, threshold_odds), res, threshold_odds)


def label_for_odds(log_odds: float, threshold_odds: float) -> str:
    t = math.log(threshold_odds)
    if log_odds > t:
        return "oscillatory"
    if log_odds < -t:
        return "overdamped"
    return "undecided"
