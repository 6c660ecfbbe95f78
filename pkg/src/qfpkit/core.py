"""Discrete frequency-bin model of an EOPM - pulse shaper - EOPM processor.

A sinusoidal phase modulator ``exp(i theta sin(w t + psi))`` hops bin
``n`` to bin ``n + l`` with amplitude ``J_l(theta) exp(i l psi)``.  The
shaper is diagonal in frequency.  The full transformation is

    V[m, n] = sum_k d[m - k] * T[k] * c[k - n]

with ``c`` the first and ``d`` the second modulator.  With the first
modulator driven at ``psi = pi`` and the second at ``psi = 0`` (exactly out
of phase) this reduces to ``sum_k J_{m-k} T_k J_{n-k}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import DEFAULT_TAIL_TOL, bessel_orders, truncation_order


class SpecificationError(ValueError):
    """Invalid device description."""


@dataclass(frozen=True)
class ModulatorSpec:
    """Single-tone phase modulator.

    ``sign`` is the drive parity: ``-1`` is a drive shifted by pi relative to
    ``+1``.  ``phase_offset`` adds an arbitrary extra RF phase (used when
    scanning the relative drive phase during alignment).
    """

    theta: float
    sign: int = 1
    phase_offset: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.theta) or self.theta < 0:
            raise SpecificationError(f"modulation index must be >= 0, got {self.theta!r}")
        if self.sign not in (1, -1):
            raise SpecificationError(f"sign must be +1 or -1, got {self.sign!r}")

    @property
    def drive_phase(self) -> float:
        return (math.pi if self.sign < 0 else 0.0) + self.phase_offset

    def coefficients(self, lmax: int) -> np.ndarray:
        """Mode-hopping amplitudes for hops ``l = -lmax .. lmax``."""
        j = bessel_orders(self.theta, lmax)
        ells = np.arange(-lmax, lmax + 1)
        mags = j[np.abs(ells)] * np.where((ells < 0) & (ells % 2 == 1), -1.0, 1.0)
        if self.sign < 0 and self.phase_offset == 0.0:
            # exact parity flip, no rounding from exp(i pi l)
            return (mags * np.where(ells % 2 == 1, -1.0, 1.0)).astype(complex)
        if self.drive_phase == 0.0:
            return mags.astype(complex)
        return mags * np.exp(1j * ells * self.drive_phase)


@dataclass(frozen=True)
class ShaperSpec:
    """Line-by-line pulse shaper with ``B`` channels ``k = -B/2+1 .. B/2``."""

    channel_count: int
    phases: tuple[float, ...]
    amplitudes: tuple[float, ...] | None = None
    bin_spacing_ghz: float = 3.0

    def __post_init__(self):
        b = self.channel_count
        if not isinstance(b, (int, np.integer)) or b < 2 or b % 2:
            raise SpecificationError(f"channel count must be an even integer >= 2, got {b!r}")
        if len(self.phases) != b:
            raise SpecificationError(f"expected {b} channel phases, got {len(self.phases)}")
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if self.amplitudes is None:
            object.__setattr__(self, "amplitudes", (1.0,) * b)
        else:
            if len(self.amplitudes) != b:
                raise SpecificationError(f"expected {b} channel amplitudes, got {len(self.amplitudes)}")
            amps = tuple(float(a) for a in self.amplitudes)
            if any(not 0.0 <= a <= 1.0 for a in amps):
                raise SpecificationError("channel amplitudes must lie in [0, 1]")
            object.__setattr__(self, "amplitudes", amps)
        if not self.bin_spacing_ghz > 0:
            raise SpecificationError("bin spacing must be positive")

    @classmethod
    def step(cls, channel_count: int, alpha: float, bin_spacing_ghz: float = 3.0) -> "ShaperSpec":
        """Canonical pattern: phase 0 for ``k <= 0`` and ``alpha`` for ``k >= 1``."""
        if channel_count % 2 or channel_count < 2:
            raise SpecificationError(
                f"channel count must be an even integer >= 2, got {channel_count!r}")
        half = channel_count // 2
        return cls(channel_count, (0.0,) * half + (float(alpha),) * half,
                   bin_spacing_ghz=bin_spacing_ghz)

    @property
    def k_min(self) -> int:
        return -self.channel_count // 2 + 1

    @property
    def k_max(self) -> int:
        return self.channel_count // 2

    @property
    def channel_indices(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def transmission(self) -> np.ndarray:
        """Complex ``T_k`` for ``k`` in ``channel_indices``."""
        amps = np.asarray(self.amplitudes)
        phases = np.asarray(self.phases)
        t = amps * np.exp(1j * phases)
        # keep exact reals for the 0 / pi patterns
        t[phases == 0.0] = amps[phases == 0.0]
        t[phases == math.pi] = -amps[phases == math.pi]
        return t


def canonical_device(channel_count: int, alpha: float, theta: float,
                     bin_spacing_ghz: float = 3.0):
    """Out-of-phase modulators with a common index around a step-phase shaper."""
    return (ModulatorSpec(theta, sign=-1),
            ShaperSpec.step(channel_count, alpha, bin_spacing_ghz),
            ModulatorSpec(theta, sign=1))


@dataclass(frozen=True)
class TransferMatrix:
    """Output bins ``m_min..m_max`` by computational inputs ``0..N-1``."""

    entries: np.ndarray
    m_min: int
    n_inputs: int
    tail_tol: float
    input_bins: tuple[int, ...] = field(default=())

    def __post_init__(self):
        self.entries.setflags(write=False)
        if not self.input_bins:
            object.__setattr__(self, "input_bins", tuple(range(self.n_inputs)))

    @property
    def m_max(self) -> int:
        return self.m_min + self.entries.shape[0] - 1

    @property
    def output_bins(self) -> np.ndarray:
        return np.arange(self.m_min, self.m_max + 1)

    def row(self, m: int) -> np.ndarray:
        return self.entries[m - self.m_min]

    def column_mass(self) -> np.ndarray:
        return np.sum(np.abs(self.entries) ** 2, axis=0)

    def total_power(self) -> float:
        """``Tr V^dagger V``."""
        return float(np.sum(np.abs(self.entries) ** 2))

    def computational_submatrix(self) -> np.ndarray:
        return computational_submatrix(self)


def _check_tail_tol(tail_tol: float) -> None:
    if not tail_tol > 0:
        raise ValueError(f"tail_tol must be positive, got {tail_tol!r}")


def transfer_columns(mod1: ModulatorSpec, shaper: ShaperSpec, mod2: ModulatorSpec,
                     input_bins, tail_tol: float = DEFAULT_TAIL_TOL) -> TransferMatrix:
    """Transfer matrix for arbitrary input bins (each column one input bin)."""
    _check_tail_tol(tail_tol)
    input_bins = tuple(int(n) for n in input_bins)
    if not input_bins:
        raise ValueError("at least one input bin is required")
    kk = truncation_order(max(mod1.theta, mod2.theta), tail_tol)
    m_min = min(-kk - shaper.channel_count // 2, min(input_bins) - kk)
    m_max = max(kk + shaper.channel_count // 2 + len(input_bins), max(input_bins) + kk)
    outputs = np.arange(m_min, m_max + 1)
    ks = shaper.channel_indices
    t = shaper.transmission()

    span = int(max(np.max(np.abs(outputs[:, None] - ks[None, :])),
                   max(abs(k - n) for k in (ks[0], ks[-1]) for n in input_bins)))
    c = mod1.coefficients(span)
    d = mod2.coefficients(span)
    c_hop = c[(ks[:, None] - np.asarray(input_bins)[None, :]) + span]   # k x n
    d_hop = d[(outputs[:, None] - ks[None, :]) + span]                  # m x k
    entries = d_hop @ (t[:, None] * c_hop)
    return TransferMatrix(entries, int(m_min), len(input_bins), float(tail_tol), input_bins)


def build_transfer(mod1: ModulatorSpec, shaper: ShaperSpec, mod2: ModulatorSpec,
                   n_inputs: int = 2, tail_tol: float = DEFAULT_TAIL_TOL) -> TransferMatrix:
    """Transfer matrix for inputs ``0..n_inputs-1`` over a window holding all
    but ``tail_tol`` of each column's power."""
    if n_inputs < 1:
        raise ValueError("n_inputs must be >= 1")
    return transfer_columns(mod1, shaper, mod2, range(n_inputs), tail_tol)


def canonical_transfer(channel_count: int, alpha: float, theta: float, n_inputs: int = 2,
                       tail_tol: float = DEFAULT_TAIL_TOL) -> TransferMatrix:
    return build_transfer(*canonical_device(channel_count, alpha, theta), n_inputs, tail_tol)


def computational_submatrix(v: TransferMatrix) -> np.ndarray:
    n = v.n_inputs
    if v.m_min > 0 or v.m_max < n - 1:
        raise RuntimeError(
            f"output window [{v.m_min}, {v.m_max}] does not contain bins 0..{n - 1}")
    return np.array(v.entries[-v.m_min : -v.m_min + n])


def closed_form_transfer(channel_count: int, alpha: float, theta: float, n_inputs: int,
                 m: int, n: int) -> complex:
    """Closed-form ``V[m, n]`` for the canonical step-phase processor."""
    if channel_count % 2 or channel_count < 2:
        raise SpecificationError(
            f"channel count must be an even integer >= 2, got {channel_count!r}")
    if not 0 <= n < n_inputs:
        raise ValueError(f"input bin {n} outside 0..{n_inputs - 1}")
    half = channel_count // 2
    top = max(abs(m), abs(n)) + half + 1
    j = bessel_orders(theta, top)

    def jl(ell):
        return j[ell] if ell >= 0 else (j[-ell] if ell % 2 == 0 else -j[-ell])

    upper = sum(jl(m + k - 1) * jl(n + k - 1) for k in range(1, half + 1))
    lower = sum(jl(m - k) * jl(n - k) for k in range(1, half + 1))
    return complex(upper + np.exp(1j * alpha) * lower)
