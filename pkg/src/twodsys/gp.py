"""Gaussian-process machinery over the 2Dsys kernel.

Dense (Cholesky) Gram-matrix computations: likelihood with gradients,
sampling, prediction and maximum-likelihood fitting.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.linalg.lapack
import scipy.optimize

from . import kernel
from .errors import FitError, InvalidInputError, NumericalConditioningError
from .kernel import HyperParams

__all__ = [
    "TimeSeries",
    "GPModel",
    "FitResult",
    "FitConfig",
    "JITTER_LEVELS",
    "gram",
    "cholesky_with_jitter",
    "log_marginal_likelihood",
    "sample",
    "predict",
    "fit",
]

log = logging.getLogger(__name__)

# relative to the mean diagonal
JITTER_LEVELS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
PARAM_NAMES = ("h", "s", "k", "p", "mean", "noise_var")


@dataclass(frozen=True)
class TimeSeries:
    """Observation times (strictly increasing) and values."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        x = np.asarray(self.values, dtype=float).ravel()
        if t.size == 0 or t.shape != x.shape:
            raise InvalidInputError(
                f"need equally many times and values (got {t.size} and {x.size})")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise InvalidInputError("times and values must be finite")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", x)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class GPModel:
    """Kernel hyperparameters plus constant mean and observation-noise variance."""

    theta: HyperParams
    mean: float = 0.0
    noise_var: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", HyperParams.coerce(self.theta))
        if not (math.isfinite(self.mean) and math.isfinite(self.noise_var)):
            raise InvalidInputError("mean and noise_var must be finite")
        if self.noise_var < 0:
            raise InvalidInputError(f"noise_var must be >= 0, got {self.noise_var}")

    def as_array(self) -> np.ndarray:
        return np.r_[self.theta.as_array(), self.mean, self.noise_var]


@dataclass
class FitResult:
    model: GPModel
    log_marginal_likelihood: float
    converged: bool
    n_restarts_used: int
    optimizer_trace: List[Tuple[int, float]] = field(default_factory=list)
    restart_results: list = field(default_factory=list)


@dataclass(frozen=True)
class FitConfig:
    """Optimiser settings for :func:`fit`.

    ``fit_noise`` makes the observation-noise variance a free parameter
    (optimised on a log scale); otherwise it is held at ``noise_var``.
    """

    method: str = "L-BFGS-B"
    maxiter: int = 200
    gtol: float = 1e-6
    fit_noise: bool = False
    noise_var: float = 0.0


def _times(values, name="times"):
    t = np.asarray(values, dtype=float)
    if t.ndim == 0:
        t = t[None]
    if t.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(t)):
        raise InvalidInputError(f"{name} must be finite")
    return t


def _is_uniform(t):
    d = np.diff(t)
    return d.size > 1 and np.allclose(d, d[0], rtol=1e-10, atol=0)


def _symmetric_kernel(theta, t, grad):
    """Kernel matrix over ``t``; Toeplitz shortcut on regular grids."""
    if _is_uniform(t):
        lag0 = t - t[0]
        if grad:
            col, dcol = kernel.evaluate_grad(theta, lag0)
            dK = np.stack([scipy.linalg.toeplitz(dcol[:, i]) for i in range(4)], axis=-1)
            return scipy.linalg.toeplitz(col), dK
        return scipy.linalg.toeplitz(kernel.evaluate(theta, lag0))
    lags = t[:, None] - t[None, :]
    return kernel.evaluate_grad(theta, lags) if grad else kernel.evaluate(theta, lags)


def gram(theta, times_a, times_b=None) -> np.ndarray:
    """Covariance matrix ``C(a_i - b_j)``; symmetric when ``times_b`` is omitted."""
    a = _times(times_a, "times_a")
    b = a if times_b is None else _times(times_b, "times_b")
    return kernel.evaluate(theta, a[:, None] - b[None, :])


def cholesky_with_jitter(c: np.ndarray):
    """Lower Cholesky factor of ``c``, inflating the diagonal if needed.

    Tries each of :data:`JITTER_LEVELS` (relative to the mean diagonal) in
    turn.  Returns ``(L, jitter)`` with the absolute jitter used.
    """
    scale = float(np.mean(np.diag(c)))
    if not (math.isfinite(scale) and scale > 0):
        raise NumericalConditioningError(f"non-positive mean diagonal {scale}", [])
    tried = []
    for rel in JITTER_LEVELS:
        jitter = rel * scale
        tried.append(jitter)
        try:
            L = np.linalg.cholesky(c + jitter * np.eye(c.shape[0]) if jitter else c)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            if jitter:
                log.debug("cholesky needed jitter %.3g", jitter)
            return L, jitter
    raise NumericalConditioningError(
        f"covariance not positive definite even with jitter {tried[-1]:.3g}", tried)


def _as_series(data):
    return data if isinstance(data, TimeSeries) else TimeSeries(*data)


def log_marginal_likelihood(model: GPModel, data, grad: bool = True):
    """Gaussian log density of the data under ``model``.

    Returns
    -------
    lml : float
    gradient : ndarray, shape (6,)
        With respect to ``(h, s, k, p, mean, noise_var)``; only when
        ``grad`` is true.
    """
    data = _as_series(data)
    t = data.times
    n = t.size
    r = data.values - model.mean
    if grad:
        K, dK = _symmetric_kernel(model.theta, t, True)
    else:
        K = _symmetric_kernel(model.theta, t, False)
    c = K + model.noise_var * np.eye(n)
    L, _ = cholesky_with_jitter(c)
    alpha = scipy.linalg.cho_solve((L, True), r)
    lml = (-0.5 * r @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * math.log(2 * math.pi))
    if not grad:
        return float(lml)

    cinv, info = scipy.linalg.lapack.dpotri(L, lower=1)
    if info:
        raise NumericalConditioningError(f"dpotri failed with info={info}")
    cinv = np.tril(cinv) + np.tril(cinv, -1).T
    W = np.outer(alpha, alpha) - cinv
    g = np.empty(6)
    g[:4] = 0.5 * np.einsum("ij,ijk->k", W, dK)
    g[4] = alpha.sum()
    g[5] = 0.5 * np.trace(W)
    return float(lml), g


def sample(theta, times, seed: int = 0, count: int = 1) -> np.ndarray:
    """Draws from the zero-mean GP at ``times``; shape ``(count, n)``."""
    t = _times(times)
    if count < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    L, _ = cholesky_with_jitter(gram(theta, t))
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, t.size)) @ L.T


def predict(model: GPModel, data, query_times):
    """Posterior mean and variance of the latent process at ``query_times``."""
    data = _as_series(data)
    q = _times(query_times, "query_times")
    c = gram(model.theta, data.times) + model.noise_var * np.eye(len(data))
    L, _ = cholesky_with_jitter(c)
    cross = gram(model.theta, q, data.times)
    alpha = scipy.linalg.cho_solve((L, True), data.values - model.mean)
    mean = model.mean + cross @ alpha
    v = scipy.linalg.solve_triangular(L, cross.T, lower=True)
    var = kernel.evaluate(model.theta, 0.0) - np.sum(v * v, axis=0)
    return mean, np.maximum(var, 0.0)


def _restart_seeds(seed, restarts):
    return np.random.SeedSequence(seed).spawn(restarts)


def _initial_point(rng, data, cfg):
    x0 = [rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
          rng.uniform(-1, 1), float(np.mean(data.values))]
    if cfg.fit_noise:
        x0.append(rng.uniform(-6, 0))
    return np.array(x0)


def _unpack(x, cfg) -> GPModel:
    noise = math.exp(x[5]) if cfg.fit_noise else cfg.noise_var
    return GPModel(HyperParams(*x[:4]), mean=float(x[4]), noise_var=noise)


# Returned instead of +inf so line searches can backtrack.
_PENALTY = 1e25


def _optimise(x0, data, cfg):
    trace = []

    def objective(x):
        if not np.all(np.isfinite(x)) or np.any(np.abs(x[:4]) > 50):
            return _PENALTY, np.zeros_like(x)
        model = _unpack(x, cfg)
        try:
            lml, g = log_marginal_likelihood(model, data)
        except NumericalConditioningError:
            return _PENALTY, np.zeros_like(x)
        if not (math.isfinite(lml) and np.all(np.isfinite(g))):
            return _PENALTY, np.zeros_like(x)
        gx = g[:5].copy()
        if cfg.fit_noise:
            gx = np.r_[gx, g[5] * model.noise_var]
        return -lml, -gx

    def callback(xk, *_):
        trace.append((len(trace) + 1, float(objective(xk)[0])))

    res = scipy.optimize.minimize(
        objective, x0, jac=True, method=cfg.method, callback=callback,
        options={"maxiter": cfg.maxiter, "gtol": cfg.gtol})
    return res, trace


def fit(data, config: Optional[FitConfig] = None, restarts: int = 5, seed: int = 0) -> FitResult:
    """Maximum-likelihood fit of ``(h, s, k, p, mean[, noise_var])``.

    Each restart starts from ``h, s, k ~ U[-2, 2]``, ``p ~ U(-1, 1)``, the
    sample mean and (if fitted) ``log noise_var ~ U[-6, 0]``, drawn from an
    independent stream spawned from ``seed``.  The best optimum is returned
    with ``p`` folded into [-1, 1]; ties keep the earliest restart.

    Raises
    ------
    FitError
        If no restart ends at a finite likelihood.
    """
    data = _as_series(data)
    cfg = config or FitConfig()
    if len(data) < 4:
        raise InvalidInputError(f"need at least 4 points to fit 4 kernel parameters, got {len(data)}")
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")

    results = []
    best = None
    for i, ss in enumerate(_restart_seeds(seed, restarts)):
        rng = np.random.default_rng(ss)
        x0 = _initial_point(rng, data, cfg)
        res, trace = _optimise(x0, data, cfg)
        ok = bool(np.isfinite(res.fun) and res.fun < _PENALTY)
        results.append({"restart": i, "x0": x0.tolist(), "x": res.x.tolist(),
                        "objective": float(res.fun), "success": bool(res.success),
                        "message": str(res.message), "trace": trace})
        log.info("restart %d: lml=%.6g success=%s", i, -res.fun, res.success)
        if ok and (best is None or res.fun < best[0].fun):
            best = (res, trace)

    if best is None:
        raise FitError("no restart reached a finite likelihood", [r["trace"] for r in results])
    res, trace = best
    model = _unpack(res.x, cfg)
    model = replace(model, theta=replace(model.theta, p=kernel.principal_p(model.theta.p)))
    lml = log_marginal_likelihood(model, data, grad=False)
    return FitResult(model=model, log_marginal_likelihood=lml, converged=bool(res.success),
                     n_restarts_used=restarts, optimizer_trace=trace, restart_results=results)
