"""Closed-form 2Dsys covariance function and its hyperparameter gradient.

The covariance of the first component of a stable, noise-driven 2D linear
system is

    C(tau) = S11 exp(-sigma |tau|) (cosh(sqrt(D) tau) + sigma j sinh(sqrt(D) |tau|) / sqrt(D))

with ``D = sigma**2 (1 - e**s)``.  Writing ``x = sigma |tau|`` and
``z = (1 - e**s) x**2`` this becomes

    C = S11 exp(-x) (ch(z) + j x sh(z))

where ``ch(z) = cosh(sqrt(z))`` and ``sh(z) = sinh(sqrt(z)) / sqrt(z)`` are
entire functions of ``z``.  For ``z < 0`` they turn into ``cos`` and
``sin(w)/w``; near ``z = 0`` a power series is used, whose leading term
gives the critically damped form ``S11 exp(-x) (1 + j x)``.  Working in
``z`` keeps every branch finite and continuous without special-casing the
sign of the discriminant in callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "HyperParams",
    "NaturalParams",
    "to_natural",
    "from_natural",
    "evaluate",
    "evaluate_grad",
    "right_derivative_at_zero",
    "q_factor",
    "principal_p",
    "scaled_basis",
]

# |z| below this uses the power series; truncation error < 1e-18 there.
SERIES_Z = 1e-2

_CH = (1.0, 1 / 2, 1 / 24, 1 / 720, 1 / 40320, 1 / 3628800)
_SH = (1.0, 1 / 6, 1 / 120, 1 / 5040, 1 / 362880, 1 / 39916800)
# d sh / dz = sum (n + 1) z**n / (2n + 3)!
_DSH = (1 / 6, 1 / 60, 1 / 1680, 1 / 90720, 1 / 7983360, 1 / 1037836800)


@dataclass(frozen=True)
class HyperParams:
    """Unconstrained parameters ``(h, s, k, p)`` of the family.

    ``sigma = e**h`` is the decay rate, ``s`` sets the eigenvalue
    separation (``s > 0`` underdamped, ``s < 0`` overdamped), ``e**(2k)`` is
    the variance and ``j = sin(pi p / 2)`` the asymmetry coefficient.
    """

    h: float
    s: float
    k: float
    p: float

    def __post_init__(self):
        for name in ("h", "s", "k", "p"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def coerce(cls, theta) -> "HyperParams":
        """Accept a HyperParams or any length-4 sequence ``(h, s, k, p)``."""
        if isinstance(theta, cls):
            return theta
        values = np.asarray(theta, dtype=float).ravel()
        if values.shape != (4,):
            raise InvalidParameterError(
                f"expected 4 hyperparameters (h, s, k, p), got {values.size}")
        return cls(*values)

    @property
    def j(self) -> float:
        return math.sin(math.pi * self.p / 2)

    @property
    def sigma(self) -> float:
        return math.exp(self.h)

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.s, self.k, self.p])


@dataclass(frozen=True)
class NaturalParams:
    """Constrained parameters ``(sigma, Delta, S11, J)``."""

    sigma: float
    Delta: float
    S11: float
    J: float

    def validate(self, rtol: float = 1e-12) -> "NaturalParams":
        vals = (self.sigma, self.Delta, self.S11, self.J)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameterError(f"non-finite natural parameters {vals}")
        if self.sigma <= 0:
            raise InvalidParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.Delta >= self.sigma ** 2:
            raise InvalidParameterError(
                f"Delta={self.Delta} must be < sigma**2={self.sigma ** 2}")
        if self.S11 <= 0:
            raise InvalidParameterError(f"S11 must be > 0, got {self.S11}")
        if abs(self.J) > self.S11 * (1 + rtol):
            raise InvalidParameterError(f"|J|={abs(self.J)} exceeds S11={self.S11}")
        return self


def to_natural(theta) -> NaturalParams:
    """Map ``(h, s, k, p)`` to ``(sigma, Delta, S11, J)``."""
    theta = HyperParams.coerce(theta)
    sigma = math.exp(theta.h)
    S11 = math.exp(2 * theta.k)
    return NaturalParams(
        sigma=sigma,
        Delta=-sigma ** 2 * math.expm1(theta.s),
        S11=S11,
        J=S11 * theta.j,
    )


def from_natural(nat: NaturalParams) -> HyperParams:
    """Inverse of :func:`to_natural`, with ``p`` on the principal branch [-1, 1]."""
    nat.validate()
    ratio = min(1.0, max(-1.0, nat.J / nat.S11))
    return HyperParams(
        h=math.log(nat.sigma),
        s=math.log1p(-nat.Delta / nat.sigma ** 2),
        k=0.5 * math.log(nat.S11),
        p=2 / math.pi * math.asin(ratio),
    )


def principal_p(p):
    """Representative of ``p`` in [-1, 1] giving the same ``j = sin(pi p / 2)``."""
    q = np.mod(np.asarray(p, dtype=float) + 1.0, 4.0) - 1.0  # in [-1, 3)
    q = np.where(q > 1.0, 2.0 - q, q)
    return float(q) if q.ndim == 0 else q


def _series(coeffs, z):
    out = np.full_like(z, coeffs[-1])
    for c in coeffs[-2::-1]:
        out = out * z + c
    return out


def scaled_basis(x, u):
    """Return ``exp(-x) * (ch(z), sh(z), dsh(z))`` with ``z = u x**2``.

    ``x >= 0`` and ``u < 1``; arrays broadcast.  ``dsh`` is ``d sh / d z``.
    All three are computed without overflow for any finite ``x``.
    """
    x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
    with np.errstate(over="ignore"):
        z = u * x * x  # may be +-inf for astronomically large lags
    ex = np.exp(-x)
    ech = np.empty_like(z)
    esh = np.empty_like(z)
    edsh = np.empty_like(z)

    small = np.abs(z) < SERIES_Z
    if small.any():
        zs = z[small]
        e = ex[small]
        ech[small] = e * _series(_CH, zs)
        esh[small] = e * _series(_SH, zs)
        edsh[small] = e * _series(_DSH, zs)

    neg = (z < 0) & ~small
    if neg.any():
        w = np.sqrt(-u[neg]) * x[neg]
        e = ex[neg]
        c = np.cos(w)
        sn = np.sin(w) / w
        ech[neg] = e * c
        esh[neg] = e * sn
        edsh[neg] = e * (c - sn) / (2 * z[neg])

    pos = (z > 0) & ~small
    if pos.any():
        zp = z[pos]
        xp = x[pos]
        w = np.sqrt(u[pos]) * xp
        # exp(w - x) <= 1 since w = sqrt(u) x < x
        grow = np.exp(w - xp)
        decay = np.exp(-w - xp)
        c = 0.5 * (grow + decay)
        sn = 0.5 * (grow - decay) / w
        ech[pos] = c
        esh[pos] = sn
        edsh[pos] = (c - sn) / (2 * zp)
    return ech, esh, edsh


def _prepare(theta, tau):
    theta = HyperParams.coerce(theta)
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise InvalidParameterError("time lags must be finite")
    sigma = math.exp(theta.h)
    x = sigma * np.abs(tau)
    u = -math.expm1(theta.s)
    return theta, x, u


def evaluate(theta, tau):
    """Covariance ``C(tau)`` for hyperparameters ``theta``.

    Parameters
    ----------
    theta : HyperParams or sequence of 4 floats
        ``(h, s, k, p)``.
    tau : float or array_like
        Time lags; only ``|tau|`` matters.

    Returns
    -------
    float or ndarray
        Same shape as ``tau``.
    """
    theta, x, u = _prepare(theta, tau)
    ech, esh, _ = scaled_basis(x, u)
    out = math.exp(2 * theta.k) * (ech + theta.j * x * esh)
    return float(out) if out.ndim == 0 else out


def evaluate_grad(theta, tau):
    """Covariance and its partial derivatives with respect to ``(h, s, k, p)``.

    Returns
    -------
    value : float or ndarray
        As :func:`evaluate`.
    grad : ndarray
        Shape ``tau.shape + (4,)``.
    """
    theta, x, u = _prepare(theta, tau)
    a = math.exp(2 * theta.k)
    j = theta.j
    ech, esh, edsh = scaled_basis(x, u)

    value = a * (ech + j * x * esh)
    # d/dz of the bracket, times exp(-x)
    dz = 0.5 * esh + j * x * edsh
    grad = np.empty(x.shape + (4,))
    grad[..., 0] = a * x * (2 * u * x * dz + j * esh) - value * x
    grad[..., 1] = -a * math.exp(theta.s) * x * x * dz
    grad[..., 2] = 2 * value
    grad[..., 3] = a * x * esh * (math.pi / 2) * math.cos(math.pi * theta.p / 2)
    if value.ndim == 0:
        return float(value), grad
    return value, grad


def right_derivative_at_zero(theta) -> float:
    """One-sided slope ``C'(0+) = e**(2k) sigma (j - 1)``; zero iff ``j = 1``."""
    theta = HyperParams.coerce(theta)
    return math.exp(2 * theta.k) * theta.sigma * (theta.j - 1.0)


def q_factor(theta) -> float:
    """Quality factor ``sqrt(det) / trace = e**(s/2) / 2``."""
    theta = HyperParams.coerce(theta)
    return 0.5 * math.exp(theta.s / 2)
