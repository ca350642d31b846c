"""Markov (state-space) form of the 2Dsys process.

Any kernel of the family is the first-component covariance of the system
with ``A = D = sigma``, ``B = 1``, ``C = Delta`` (see
:func:`twodsys.sde.kernel_to_system`).  After rescaling the second state by
``1/sigma`` and both by ``e**-k`` the stationary covariance is
``[[1, j], [j, 1 + e**s]]`` and the one-step transition over a gap ``dt`` is
``[[ch, x sh], [u x sh, ch]] * exp(-x)`` with ``x = sigma dt`` and
``u = 1 - e**s``.  Filtering in this form gives the exact Gaussian
likelihood in O(n) per parameter set, vectorised over many parameter sets
at once, which is what makes Monte-Carlo evidence integrals affordable.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .kernel import HyperParams, scaled_basis

__all__ = ["transition", "kalman_log_likelihood", "sample_markov"]

_LOG_2PI = math.log(2 * math.pi)


def transition(dt, h, s, p):
    """Dimensionless transition and process-noise entries for gap ``dt``.

    All arguments broadcast.  Returns ``(f11, f12, f21, f22, q11, q12, q22)``
    for unit amplitude (``k = 0``).
    """
    h, s, p = (np.asarray(v, dtype=float) for v in (h, s, p))
    x = np.exp(h) * dt
    u = -np.expm1(s)
    j = np.sin(np.pi * p / 2)
    ech, esh, _ = scaled_basis(x, u)
    f11 = f22 = ech
    f12 = x * esh
    f21 = u * x * esh
    s11, s12, s22 = 1.0, j, 1.0 + np.exp(s)
    t11 = f11 * s11 + f12 * s12
    t12 = f11 * s12 + f12 * s22
    t21 = f21 * s11 + f22 * s12
    t22 = f21 * s12 + f22 * s22
    q11 = s11 - (t11 * f11 + t12 * f12)
    q12 = s12 - (t11 * f21 + t12 * f22)
    q22 = s22 - (t21 * f21 + t22 * f22)
    return f11, f12, f21, f22, q11, q12, q22


def kalman_log_likelihood(h, s, k, p, times, values, mean=0.0, noise_var=0.0):
    """Gaussian log likelihood of one series under many parameter sets.

    Parameters
    ----------
    h, s, k, p : array_like, shape (B,)
        Hyperparameters, one entry per parameter set.
    times, values : array_like, shape (n,)
        Strictly increasing times and observations.
    mean, noise_var : float or array_like of shape (B,)
        Constant mean and observation-noise variance.

    Returns
    -------
    ndarray, shape (B,)
        Equal to the dense Cholesky evaluation up to rounding.
    """
    h, s, k, p = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float))
                                       for v in (h, s, k, p)))
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1 or times.size == 0:
        raise InvalidInputError("times and values must be equal-length 1D arrays")
    gaps = np.diff(times)
    if np.any(gaps <= 0):
        raise InvalidInputError("times must be strictly increasing")

    a = np.exp(2 * k)
    j = np.sin(np.pi * p / 2)
    mean = np.broadcast_to(np.asarray(mean, dtype=float), h.shape)
    R = np.broadcast_to(np.asarray(noise_var, dtype=float), h.shape)

    # state moments in data units
    m1 = np.zeros(h.shape)
    m2 = np.zeros(h.shape)
    P11 = a.copy()
    P12 = a * j
    P22 = a * (1.0 + np.exp(s))

    uniform = gaps.size > 0 and np.allclose(gaps, gaps[0], rtol=1e-12, atol=0)
    if uniform:
        step = transition(gaps[0], h, s, p)

    ll = np.zeros(h.shape)
    # degenerate parameter sets give nan/-inf, which callers treat as zero likelihood
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for i in range(times.size):
            if i > 0:
                f11, f12, f21, f22, q11, q12, q22 = step if uniform else transition(gaps[i - 1], h, s, p)
                m1, m2 = f11 * m1 + f12 * m2, f21 * m1 + f22 * m2
                t11 = f11 * P11 + f12 * P12
                t12 = f11 * P12 + f12 * P22
                t21 = f21 * P11 + f22 * P12
                t22 = f21 * P12 + f22 * P22
                P11 = t11 * f11 + t12 * f12 + a * q11
                P12 = t11 * f21 + t12 * f22 + a * q12
                P22 = t21 * f21 + t22 * f22 + a * q22
            F = P11 + R
            v = values[i] - mean - m1
            ll -= 0.5 * (_LOG_2PI + np.log(F) + v * v / F)
            g1 = P11 / F
            g2 = P12 / F
            m1 = m1 + g1 * v
            m2 = m2 + g2 * v
            P22 = P22 - P12 * P12 / F
            P11 = P11 * R / F
            P12 = P12 * R / F
    return ll


def _sqrt2x2(q11, q12, q22):
    Q = np.array([[q11, q12], [q12, q22]])
    w, V = np.linalg.eigh(Q)
    w = np.clip(w, 0.0, None)
    return V * np.sqrt(w)


def sample_markov(theta, times, seed: int = 0, count: int = 1) -> np.ndarray:
    """Exact draws of the process by propagating its 2D Markov state.

    Needs no jitter, so it resolves the small-lag behaviour of smooth
    (``j = 1``) members that dense factorisation cannot.

    Returns
    -------
    ndarray, shape (count, n)
    """
    theta = HyperParams.coerce(theta)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0) or not np.all(np.isfinite(times)):
        raise InvalidInputError("times must be finite and strictly increasing")
    rng = np.random.default_rng(seed)
    amp = math.exp(theta.k)
    S = np.array([[1.0, theta.j], [theta.j, 1.0 + math.exp(theta.s)]])
    L0 = _sqrt2x2(S[0, 0], S[0, 1], S[1, 1])

    out = np.empty((count, times.size))
    state = rng.standard_normal((count, 2)) @ L0.T
    out[:, 0] = state[:, 0]
    cache = {}
    for i in range(1, times.size):
        dt = times[i] - times[i - 1]
        if dt not in cache:
            f11, f12, f21, f22, q11, q12, q22 = (float(v) for v in transition(dt, theta.h, theta.s, theta.p))
            cache[dt] = (np.array([[f11, f12], [f21, f22]]), _sqrt2x2(q11, q12, q22))
        F, L = cache[dt]
        state = state @ F.T + rng.standard_normal((count, 2)) @ L.T
        out[:, i] = state[:, 0]
    return amp * out
