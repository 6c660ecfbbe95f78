"""Gate metrics for a frequency-bin transfer matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TransferMatrix, canonical_transfer, computational_submatrix
from .specfun import DEFAULT_TAIL_TOL, truncation_order

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


class MetricError(ValueError):
    """Metric undefined for the given input."""


@dataclass(frozen=True)
class GateMetrics:
    fidelity: float
    success: float
    modified_success: float
    eta: float
    W: np.ndarray

    def as_dict(self) -> dict:
        return {"F": self.fidelity, "P": self.success, "P_tilde": self.modified_success,
                "eta": self.eta}


@dataclass(frozen=True)
class SplitterRatios:
    R_01: float
    R_10: float
    T_00: float
    T_11: float

    def as_dict(self) -> dict:
        return {"R_01": self.R_01, "R_10": self.R_10, "T_00": self.T_00, "T_11": self.T_11}


def fidelity(W, U=HADAMARD) -> float:
    """``|Tr U^dag W|^2 / (Tr U^dag U * Tr W^dag W)``."""
    W = np.asarray(W, dtype=complex)
    U = np.asarray(U, dtype=complex)
    if W.shape != U.shape:
        raise MetricError(f"shape mismatch: W {W.shape} vs U {U.shape}")
    n = U.shape[0]
    if not np.allclose(U.conj().T @ U, np.eye(n), atol=1e-12, rtol=0):
        raise MetricError("target is not unitary")
    ww = float(np.sum(np.abs(W) ** 2))
    if ww == 0.0:
        raise MetricError("fidelity undefined for a zero matrix")
    uu = float(np.sum(np.abs(U) ** 2))
    overlap = np.vdot(U, W)  # Tr U^dag W
    return float(abs(overlap) ** 2 / (uu * ww))


def success(v: TransferMatrix, W=None) -> tuple[float, float, float]:
    """Return ``(P, P_tilde, eta)``.

    ``P = Tr W^dag W / N``, ``P_tilde = Tr W^dag W / Tr V^dag V`` and
    ``eta = Tr V^dag V / N``.
    """
    if W is None:
        W = computational_submatrix(v)
    n = v.n_inputs
    vv = v.total_power()
    if not vv > 0:
        raise MetricError("Tr V^dag V must be positive")
    ww = float(np.sum(np.abs(W) ** 2))
    return ww / n, ww / vv, vv / n


def gate_metrics(v: TransferMatrix, U=HADAMARD) -> GateMetrics:
    W = computational_submatrix(v)
    p, pt, eta = success(v, W)
    return GateMetrics(fidelity(W, U), p, pt, eta, W)


def splitter_ratios(W) -> SplitterRatios:
    W = np.asarray(W)
    if W.shape != (2, 2):
        raise MetricError(f"splitter ratios need a 2x2 matrix, got {W.shape}")
    a = np.abs(W) ** 2
    return SplitterRatios(R_01=float(a[1, 0]), R_10=float(a[0, 1]),
                          T_00=float(a[0, 0]), T_11=float(a[1, 1]))


def gauge_fix(W) -> np.ndarray:
    """Rephase rows and columns so the first row and column are real and
    non-negative; only the ``[1:, 1:]`` block keeps relative phases."""
    W = np.asarray(W, dtype=complex)
    row = np.exp(-1j * np.angle(W[:, 0]))
    out = W * row[:, None]
    col = np.exp(-1j * np.angle(out[0, :]))
    out = out * col[None, :]
    out[:, 0] = np.abs(out[:, 0])
    out[0, :] = np.abs(out[0, :])
    return out


def phi11(W) -> float:
    """Gauge-invariant phase ``arg W11 + arg W00 - arg W01 - arg W10`` in [0, 2pi)."""
    W = np.asarray(W, dtype=complex)
    return float(np.angle(W[1, 1] * W[0, 0] * np.conj(W[0, 1]) * np.conj(W[1, 0])) % (2 * np.pi))


@dataclass(frozen=True)
class LimitRow:
    B: int
    P: float
    P_tilde: float

    @property
    def gap(self) -> float:
        return self.P_tilde - self.P


def large_B_limit_check(alpha: float, theta: float, B_list,
                        tail_tol: float = DEFAULT_TAIL_TOL) -> list[LimitRow]:
    """``P`` and ``P_tilde`` for each channel count; the gap closes as B grows."""
    B_list = [int(b) for b in B_list]
    if any(b % 2 or b < 2 for b in B_list):
        raise MetricError("channel counts must be even and >= 2")
    if any(b2 <= b1 for b1, b2 in zip(B_list, B_list[1:])):
        raise MetricError("channel counts must be strictly ascending")
    rows = []
    for b in B_list:
        p, pt, _ = success(canonical_transfer(b, alpha, theta, 2, tail_tol))
        rows.append(LimitRow(b, p, pt))
    return rows


def saturation_channels(theta: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Channel count ``2K + 2`` beyond which the shaper captures all sideband power."""
    return 2 * truncation_order(theta, tail_tol) + 2
