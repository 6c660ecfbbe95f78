"""Bessel functions of the first kind for integer order and real argument.

Orders are evaluated in bulk with Miller's backward recurrence, normalised
with the Parseval sum ``J_0^2 + 2 * sum_k J_k^2 = 1``; the sign of the
normalisation comes from the Neumann sum ``J_0 + 2 * sum_k J_2k = 1``.
Small arguments use the ascending power series instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THETA_ENVELOPE = 20.0
DEFAULT_TAIL_TOL = 1e-16
SERIES_CUTOFF = 0.5

_RESCALE_AT = 1e100


class BesselDomainError(ValueError):
    """Argument outside the supported design envelope."""


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or abs(theta) > THETA_ENVELOPE:
        raise BesselDomainError(
            f"|theta| must be <= {THETA_ENVELOPE} (design envelope), got {theta!r}"
        )
    return theta


def _series(x: float, nmax: int) -> np.ndarray:
    # J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!), x >= 0
    out = np.zeros(nmax + 1)
    half = 0.5 * x
    q = -half * half
    lead = 1.0
    for n in range(nmax + 1):
        if n > 0:
            lead *= half / n
        if lead == 0.0:
            break
        term = lead
        total = term
        k = 1
        while True:
            term *= q / (k * (k + n))
            total += term
            if abs(term) <= 1e-17 * abs(total):
                break
            k += 1
        out[n] = total
    return out


def _miller(x: float, nmax: int) -> np.ndarray:
    # start well above both the requested order and the turning point
    start = max(nmax, int(math.ceil(x))) + 30 + int(math.sqrt(40.0 * max(nmax, x, 1.0)))
    start += start % 2
    f = np.zeros(start + 2)
    f[start] = 1.0
    for ell in range(start, 0, -1):
        f[ell - 1] = (2.0 * ell / x) * f[ell] - f[ell + 1]
        if abs(f[ell - 1]) > _RESCALE_AT:
            f[ell - 1 :] /= _RESCALE_AT
    f /= np.max(np.abs(f))
    power = f[0] ** 2 + 2.0 * np.dot(f[1:], f[1:])
    neumann = f[0] + 2.0 * f[2::2].sum()
    scale = math.copysign(1.0 / math.sqrt(power), neumann)
    return f[: nmax + 1] * scale


def bessel_orders(theta: float, nmax: int) -> np.ndarray:
    """Return ``[J_0(theta), ..., J_nmax(theta)]``."""
    theta = _check_theta(theta)
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    x = abs(theta)
    if x == 0.0:
        out = np.zeros(nmax + 1)
        out[0] = 1.0
        return out
    out = _series(x, nmax) if x < SERIES_CUTOFF else _miller(x, nmax)
    if theta < 0:
        out[1::2] *= -1.0
    return out


def bessel_range(theta: float, kmax: int) -> np.ndarray:
    """Return ``J_l(theta)`` for ``l = -kmax .. kmax`` (length ``2*kmax + 1``)."""
    pos = bessel_orders(theta, kmax)
    neg = pos[:0:-1].copy()
    # J_{-l} = (-1)^l J_l
    neg[(kmax - np.arange(kmax)) % 2 == 1] *= -1.0
    return np.concatenate([neg, pos])


def bessel_j(order: int, theta: float) -> float:
    """Bessel function of the first kind ``J_order(theta)``."""
    order = int(order)
    n = abs(order)
    value = bessel_orders(theta, n)[n]
    if order < 0 and n % 2:
        value = -value
    return float(value)


def truncation_order(theta: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest K with ``1 - sum_{|l|<=K} J_l(theta)^2 < tail_tol``.

    The residual is accumulated directly from the discarded tail so that
    tolerances near machine epsilon remain meaningful.
    """
    if not tail_tol > 0:
        raise ValueError(f"tail_tol must be positive, got {tail_tol!r}")
    theta = _check_theta(theta)
    kmax = int(math.ceil(abs(theta))) + 60
    j = bessel_orders(theta, kmax)
    sq = j * j
    # tails[K] = 2 * sum_{l > K} J_l^2
    tails = 2.0 * np.concatenate([np.cumsum(sq[::-1])[::-1][1:], [0.0]])
    return int(np.argmax(tails < tail_tol))


@dataclass(frozen=True)
class BesselRow:
    """``J_l(theta)`` over the contiguous order range ``[-K, K]``."""

    theta: float
    kmax: int
    values: np.ndarray

    @classmethod
    def compute(cls, theta: float, kmax: int | None = None,
                tail_tol: float = DEFAULT_TAIL_TOL) -> "BesselRow":
        if kmax is None:
            kmax = truncation_order(theta, tail_tol)
        values = bessel_range(theta, kmax)
        values.setflags(write=False)
        return cls(float(theta), int(kmax), values)

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.kmax, self.kmax + 1)

    def __getitem__(self, order: int) -> float:
        if abs(order) > self.kmax:
            raise IndexError(f"order {order} outside [-{self.kmax}, {self.kmax}]")
        return float(self.values[order + self.kmax])

    def power(self) -> float:
        return float(np.dot(self.values, self.values))
