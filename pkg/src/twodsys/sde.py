"""The 2D linear stochastic system ``dx/dt = M x + xi`` as an independent oracle.

``M = [[-A, B], [C, -D]]`` and ``xi`` is white noise with intensity ``K``.
Everything here is computed from the system matrices alone (Lyapunov
equation, matrix exponential, Euler-Maruyama paths) so it can be checked
against the closed-form kernel in :mod:`twodsys.kernel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import (ConfigurationError, DegenerateSystemError,
                     InsufficientDataError, InvalidParameterError)
from .kernel import NaturalParams, scaled_basis

__all__ = [
    "SystemSpec",
    "SimConfig",
    "Stability",
    "check_stability",
    "impulse_response",
    "stationary_covariance",
    "system_to_kernel",
    "kernel_to_system",
    "psd_sqrt",
    "simulate",
    "empirical_autocov",
    "increment_variance",
    "increment_slope",
]


@dataclass(frozen=True)
class SystemSpec:
    """Drift entries ``A, B, C, D`` and symmetric noise intensity ``K`` (2x2)."""

    A: float
    B: float
    C: float
    D: float
    K: tuple = ((1.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, float(getattr(self, name)))
        K = np.asarray(self.K, dtype=float)
        if K.shape != (2, 2):
            raise InvalidParameterError(f"K must be 2x2, got shape {K.shape}")
        if not np.all(np.isfinite(K)) or not all(
                math.isfinite(v) for v in (self.A, self.B, self.C, self.D)):
            raise InvalidParameterError("system entries must be finite")
        if K[0, 1] != K[1, 0]:
            raise InvalidParameterError("K must be symmetric")
        scale = max(1.0, abs(K[0, 0]) + abs(K[1, 1]))
        if (K[0, 0] < -1e-12 * scale or K[1, 1] < -1e-12 * scale
                or K[0, 0] * K[1, 1] - K[0, 1] ** 2 < -1e-12 * scale ** 2):
            raise InvalidParameterError(f"K is not positive semi-definite: {K.tolist()}")
        object.__setattr__(self, "K", tuple(map(tuple, K.tolist())))

    @property
    def drift(self) -> np.ndarray:
        return np.array([[-self.A, self.B], [self.C, -self.D]], dtype=float)

    @property
    def noise(self) -> np.ndarray:
        return np.array(self.K, dtype=float)

    @property
    def trace(self) -> float:
        """``A + D``, twice the decay rate."""
        return self.A + self.D

    @property
    def det(self) -> float:
        return self.A * self.D - self.B * self.C


@dataclass(frozen=True)
class SimConfig:
    """Euler-Maruyama settings.

    ``x0`` overrides the stationary initial draw; use it to watch
    deterministic relaxation when ``K = 0``.
    """

    dt: float
    total_time: float
    burn_in: float = 0.0
    seed: int = 0
    x0: Optional[tuple] = None


class Stability(NamedTuple):
    stable: bool
    trace: float
    det: float

    def __bool__(self):
        return self.stable


def check_stability(spec: SystemSpec) -> Stability:
    """Stable iff ``A + D > 0`` and ``AD - BC > 0``; both values are returned."""
    return Stability(bool(spec.trace > 0 and spec.det > 0), spec.trace, spec.det)


def _require_stable(spec):
    st = check_stability(spec)
    if not st:
        raise InvalidParameterError(
            f"system is not stable (A+D={st.trace:g}, AD-BC={st.det:g})")


def impulse_response(spec: SystemSpec, t: float) -> np.ndarray:
    """Matrix exponential ``exp(t M)`` for ``t >= 0``.

    Uses ``exp(-sigma t) [cosh(r t) I + sinh(r t)/r (M + sigma I)]`` with
    ``r = sqrt(Delta)``, whose ``Delta -> 0`` limit is the Jordan form
    ``exp(-sigma t) (I + t (M + sigma I))``.
    """
    if t < 0:
        raise InvalidParameterError(f"impulse response needs t >= 0, got {t}")
    M = spec.drift
    sigma = spec.trace / 2
    Delta = (spec.A - spec.D) ** 2 / 4 + spec.B * spec.C
    if sigma <= 0 or Delta >= sigma ** 2:
        return scipy.linalg.expm(t * M)
    ech, esh, _ = scaled_basis(sigma * t, Delta / sigma ** 2)
    return float(ech) * np.eye(2) + t * float(esh) * (M + sigma * np.eye(2))


def stationary_covariance(spec: SystemSpec) -> np.ndarray:
    """Solve ``M S + S M^T = -K`` in closed form.

    For a 2x2 stable ``M`` the solution is
    ``S = (det(M) K + N K N^T) / (-2 tr(M) det(M))`` with ``N = M - tr(M) I``.
    """
    _require_stable(spec)
    M = spec.drift
    K = spec.noise
    tr = np.trace(M)
    det = spec.det
    N = M - tr * np.eye(2)
    S = (det * K + N @ K @ N.T) / (-2.0 * tr * det)
    return 0.5 * (S + S.T)


def system_to_kernel(spec: SystemSpec) -> NaturalParams:
    """Kernel parameters of the first component's autocovariance."""
    _require_stable(spec)
    A, B, D = spec.A, spec.B, spec.D
    K = spec.noise
    det = spec.det
    sigma = (A + D) / 2
    Delta = (A - D) ** 2 / 4 + spec.B * spec.C
    indirect = D * D * K[0, 0] + 2 * B * D * K[0, 1] + B * B * K[1, 1]
    direct = K[0, 0] * det
    # both are >= 0 for psd K; tiny negative values are rounding
    indirect = max(indirect, 0.0)
    direct = max(direct, 0.0)
    if indirect + direct == 0.0:
        raise DegenerateSystemError("S11 = 0: the first component is identically zero")
    S11 = float(stationary_covariance(spec)[0, 0])
    j = float((indirect - direct) / (indirect + direct))
    return NaturalParams(sigma=sigma, Delta=Delta, S11=S11, J=j * S11)


def kernel_to_system(nat: NaturalParams) -> SystemSpec:
    """A system realising the given kernel parameters.

    Fixes ``A = D = sigma``, ``B = 1``, ``C = Delta`` and picks the psd
    noise intensity ``K`` that reproduces ``S11`` and ``J``.  Not unique;
    any realisation has the same first-component covariance.
    """
    nat.validate()
    sigma, S11, J = nat.sigma, nat.S11, nat.J
    det = sigma ** 2 - nat.Delta
    K11 = 2 * sigma * max(S11 - J, 0.0)
    indirect = 2 * sigma * det * max(S11 + J, 0.0)
    K12 = -sigma * K11
    K22 = indirect + sigma ** 2 * K11
    return SystemSpec(sigma, 1.0, nat.Delta, sigma, ((K11, K12), (K12, K22)))


def psd_sqrt(K, rtol: float = 1e-12) -> np.ndarray:
    """Factor ``L`` with ``L L^T = K`` for symmetric psd ``K``.

    Eigenvalues below ``rtol * trace`` in magnitude are clamped to zero, so
    rank-deficient intensities on the psd boundary are accepted.
    """
    K = np.asarray(K, dtype=float)
    w, V = np.linalg.eigh(0.5 * (K + K.T))
    tol = rtol * max(np.trace(K), 0.0)
    if np.any(w < -tol):
        raise InvalidParameterError(f"matrix is not psd (eigenvalues {w})")
    w = np.where(w < tol, 0.0, w)
    return V * np.sqrt(w)


def simulate(spec: SystemSpec, cfg: SimConfig):
    """Euler-Maruyama path of the system.

    Returns
    -------
    times : ndarray, shape (N + 1,)
    path : ndarray, shape (N + 1, 2)
        Starts from a draw of the exact stationary distribution unless
        ``cfg.x0`` is given; ``cfg.burn_in`` time is simulated and dropped.
    """
    _require_stable(spec)
    if not (cfg.dt > 0 and cfg.total_time > 0 and cfg.burn_in >= 0):
        raise ConfigurationError(f"invalid simulation settings {cfg}")
    if cfg.dt * spec.trace >= 0.1:
        raise ConfigurationError(
            f"dt={cfg.dt} too coarse: need dt*(A+D) < 0.1, got {cfg.dt * spec.trace:g}")

    rng = np.random.default_rng(cfg.seed)
    n_burn = int(round(cfg.burn_in / cfg.dt))
    n_keep = int(round(cfg.total_time / cfg.dt))
    n = n_burn + n_keep

    if cfg.x0 is None:
        x0 = psd_sqrt(stationary_covariance(spec)) @ rng.standard_normal(2)
    else:
        x0 = np.asarray(cfg.x0, dtype=float)
    noise = rng.standard_normal((n, 2)) @ (math.sqrt(cfg.dt) * psd_sqrt(spec.noise)).T

    G = np.eye(2) + cfg.dt * spec.drift
    g11, g12, g21, g22 = (float(v) for v in G.ravel())
    n1 = noise[:, 0].tolist()
    n2 = noise[:, 1].tolist()
    x1, x2 = float(x0[0]), float(x0[1])
    out1 = [x1]
    out2 = [x2]
    for i in range(n):
        x1, x2 = g11 * x1 + g12 * x2 + n1[i], g21 * x1 + g22 * x2 + n2[i]
        out1.append(x1)
        out2.append(x2)
    path = np.column_stack([out1, out2])[n_burn:]
    times = cfg.dt * np.arange(path.shape[0])
    return times, path


def _autocov(x, max_k):
    n = x.size
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, size)
    acf = np.fft.irfft(f * np.conj(f), size)[: max_k + 1]
    return acf / n


def empirical_autocov(path, dt: float, max_lag: float, n_batches: int = 20) -> np.ndarray:
    """Biased stationary autocovariance with batch-means standard errors.

    Parameters
    ----------
    path : array_like
        Scalar series sampled every ``dt``.
    max_lag : float
        Largest lag in time units.

    Returns
    -------
    ndarray, shape (m, 3)
        Columns ``lag, estimate, standard error``.
    """
    x = np.asarray(path, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("empirical_autocov expects a 1D path")
    if not x.size * dt > 10 * max_lag:
        raise InsufficientDataError(
            f"path spans {x.size * dt:g} time units, need > {10 * max_lag:g}")
    max_k = int(math.floor(max_lag / dt + 1e-9))
    x = x - x.mean()
    est = _autocov(x, max_k)

    batch_len = x.size // n_batches
    if batch_len <= max_k:
        raise InsufficientDataError("batches shorter than the maximum lag")
    batches = np.array([_autocov(x[b * batch_len:(b + 1) * batch_len], max_k)
                        for b in range(n_batches)])
    se = batches.std(axis=0, ddof=1) / math.sqrt(n_batches)
    lags = dt * np.arange(max_k + 1)
    return np.column_stack([lags, est, se])


def increment_variance(path, steps) -> np.ndarray:
    """Mean squared increment ``mean((x[i+m] - x[i])**2)`` for each step count ``m``."""
    x = np.asarray(path, dtype=float)
    return np.array([np.mean((x[m:] - x[:-m]) ** 2) for m in steps])


def increment_slope(path, dt: float, steps=(1, 2, 4, 8)) -> float:
    """Log-log slope of increment variance against lag.

    About 2 for differentiable paths, about 1 for Brownian-like roughness.
    """
    steps = np.asarray(steps)
    v = increment_variance(path, steps)
    slope, _ = np.polyfit(np.log(steps * dt), np.log(v), 1)
    return float(slope)
