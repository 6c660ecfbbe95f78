"""Coherent-state characterisation of a 2x2 frequency beamsplitter.

Simulates single-line and dual-line probing of a transfer matrix (loss,
per-spectrum normalisation, replicate noise) and inverts the measurements:
magnitudes from single-line spectra, the input phase offset from the bin-0
dual-line fringe, the gauge-invariant phase ``phi11`` from the bin-1 fringe,
then first-order covariance propagation to ``F`` and ``P_tilde``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import ModulatorSpec, ShaperSpec, TransferMatrix, computational_submatrix, transfer_columns
from .design import golden_section_max
from .metrics import HADAMARD, phi11
from .specfun import DEFAULT_TAIL_TOL

TWO_PI = 2.0 * math.pi

_SINGLE_STREAM = 1
_DUAL_STREAM = 2


class ReconstructionError(RuntimeError):
    """The measured fringes cannot identify the requested phase."""


def default_phase_grid(points: int = 16) -> tuple[float, ...]:
    return tuple(TWO_PI * i / points for i in range(points))


@dataclass(frozen=True)
class ProbeConfig:
    replicates: int = 5
    loss: float = 1.0
    sigma: float = 0.0
    sigma_common: float = 0.0
    phase_grid: tuple[float, ...] = field(default_factory=default_phase_grid)
    phi_i: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("at least two replicates are required")
        if not 0.0 < self.loss <= 1.0:
            raise ValueError("loss prefactor must lie in (0, 1]")
        if self.sigma < 0 or self.sigma_common < 0:
            raise ValueError("noise levels must be non-negative")
        grid = tuple(float(p) for p in self.phase_grid)
        object.__setattr__(self, "phase_grid", grid)
        if len(grid) < 8:
            raise ValueError("phase grid needs at least 8 points")
        wrapped = np.sort(np.mod(grid, TWO_PI))
        gaps = np.diff(np.concatenate([wrapped, [wrapped[0] + TWO_PI]]))
        if gaps.max() > math.pi / 2:
            raise ValueError("phase grid must cover the full 2pi range (max gap pi/2)")


def _rng(seed: int, stream: int, *index: int) -> np.random.Generator:
    # keyed per (stream, measurement, replicate): independent of generation order
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, *map(int, index)]))


def _detect(field_amps: np.ndarray, cfg: ProbeConfig, rng: np.random.Generator) -> np.ndarray:
    power = cfg.loss ** 2 * np.abs(field_amps) ** 2
    if cfg.sigma:
        power = power * (1.0 + cfg.sigma * rng.standard_normal(power.shape))
    if cfg.sigma_common:
        power = power * (1.0 + cfg.sigma_common * rng.standard_normal())
    power = np.clip(power, 0.0, None)
    return power / power.sum()


def _check_two_inputs(v: TransferMatrix) -> None:
    if v.n_inputs != 2 or tuple(v.input_bins) != (0, 1):
        raise ValueError("probing is defined for a 2x2 computational block (inputs 0 and 1)")


def simulate_single_line(v: TransferMatrix, cfg: ProbeConfig) -> dict[int, np.ndarray]:
    """Normalised output spectra for inputs 0 and 1, shape ``(replicates, bins)``."""
    _check_two_inputs(v)
    out = {}
    for n in (0, 1):
        out[n] = np.array([
            _detect(v.entries[:, n], cfg, _rng(cfg.rng_seed, _SINGLE_STREAM, n, r))
            for r in range(cfg.replicates)
        ])
    return out


def simulate_dual_line(v: TransferMatrix, cfg: ProbeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Normalised bin-0 and bin-1 powers ``(rho0, rho1)``, each ``(phases, replicates)``."""
    _check_two_inputs(v)
    i0 = -v.m_min
    rho0 = np.empty((len(cfg.phase_grid), cfg.replicates))
    rho1 = np.empty_like(rho0)
    for s, phi_s in enumerate(cfg.phase_grid):
        amps = (v.entries[:, 0] + v.entries[:, 1] * np.exp(1j * (cfg.phi_i + phi_s))) / math.sqrt(2.0)
        for r in range(cfg.replicates):
            p = _detect(amps, cfg, _rng(cfg.rng_seed, _DUAL_STREAM, s, r))
            rho0[s, r] = p[i0]
            rho1[s, r] = p[i0 + 1]
    return rho0, rho1


@dataclass
class ProbeDataset:
    bins: np.ndarray
    single_line: dict[int, np.ndarray]
    phase_grid: np.ndarray
    rho0: np.ndarray
    rho1: np.ndarray
    truth: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return self.single_line[0].shape[0]

    def to_dict(self) -> dict:
        return {
            "bins": [int(b) for b in self.bins],
            "single_line": {str(n): a.tolist() for n, a in self.single_line.items()},
            "dual_line": {"phase_grid": list(map(float, self.phase_grid)),
                          "rho0": self.rho0.tolist(), "rho1": self.rho1.tolist()},
            "truth": dict(self.truth),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeDataset":
        return cls(np.asarray(d["bins"], int),
                   {int(n): np.asarray(a, float) for n, a in d["single_line"].items()},
                   np.asarray(d["dual_line"]["phase_grid"], float),
                   np.asarray(d["dual_line"]["rho0"], float),
                   np.asarray(d["dual_line"]["rho1"], float),
                   dict(d.get("truth", {})))


def true_gamma(v: TransferMatrix) -> np.ndarray:
    """Normalised magnitudes ``(g00, g01, g10, g11)``, each column scaled by its output power."""
    W = computational_submatrix(v)
    mass = v.column_mass()
    g = np.abs(W) / np.sqrt(mass)[None, :]
    return np.array([g[0, 0], g[0, 1], g[1, 0], g[1, 1]])


def simulate(v: TransferMatrix, cfg: ProbeConfig) -> ProbeDataset:
    single = simulate_single_line(v, cfg)
    rho0, rho1 = simulate_dual_line(v, cfg)
    W = computational_submatrix(v)
    # offset that the input reference plane absorbs
    phi_i_eff = (cfg.phi_i + np.angle(W[0, 1]) - np.angle(W[0, 0])) % TWO_PI
    truth = {"gamma": true_gamma(v).tolist(), "phi_11": phi11(W), "phi_i": float(phi_i_eff)}
    return ProbeDataset(v.output_bins, single, np.asarray(cfg.phase_grid), rho0, rho1, truth)


def measured_matrix(gamma, phi_11: float) -> np.ndarray:
    g00, g01, g10, g11 = gamma
    return np.array([[g00, g01], [g10, g11 * np.exp(1j * phi_11)]])


def fidelity_and_gradient(gamma, phi_11: float, U=HADAMARD):
    """Fidelity of the gauge-fixed reconstruction and its gradient in
    ``(g00, g01, g10, g11, phi11)``."""
    gamma = np.asarray(gamma, float)
    U = np.asarray(U, complex)
    W = measured_matrix(gamma, phi_11)
    cu = np.conj(U)
    c = np.sum(cu * W)
    s = float(np.sum(gamma ** 2))
    nu = float(np.sum(np.abs(U) ** 2))
    f = abs(c) ** 2 / (nu * s)
    e = np.exp(1j * phi_11)
    dc = np.array([cu[0, 0], cu[0, 1], cu[1, 0], cu[1, 1] * e, cu[1, 1] * 1j * gamma[3] * e])
    ds = np.concatenate([2.0 * gamma, [0.0]])
    grad = 2.0 * np.real(np.conj(c) * dc) / (nu * s) - abs(c) ** 2 * ds / (nu * s * s)
    return float(f), grad


@dataclass(frozen=True)
class FringeFit:
    phase: float
    stderr: float
    dof: int


@dataclass(frozen=True)
class Reconstruction:
    gamma: np.ndarray
    phi_11: float
    phi_i_fit: float
    covariance: np.ndarray
    F_meas: float
    dF: float
    P_tilde_meas: float
    dP_tilde: float

    @property
    def W(self) -> np.ndarray:
        return measured_matrix(self.gamma, self.phi_11)

    def as_dict(self) -> dict:
        return {
            "gamma": np.asarray(self.gamma).reshape(2, 2).tolist(),
            "phi_11": self.phi_11,
            "phi_i_fit": self.phi_i_fit,
            "covariance": self.covariance.tolist(),
            "F": self.F_meas, "dF": self.dF,
            "P_tilde": self.P_tilde_meas, "dP_tilde": self.dP_tilde,
        }


def _fit_fringe(x, y, a, b, offset_phase, channel):
    """Fit ``0.5*(a^2 + b^2) + a*b*cos(offset_phase + x + p)`` for ``p``."""
    amp = a * b
    scale = 0.5 * (a * a + b * b)
    if not amp > 1e-9 * max(scale, 1e-300):
        raise ReconstructionError(f"{channel} fringe is flat (zero off-diagonal magnitude); "
                                  f"phase is unidentifiable")
    # linear harmonic regression for the starting phase
    design = np.column_stack([np.ones_like(x), np.cos(x + offset_phase), np.sin(x + offset_phase)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    if math.hypot(coef[1], coef[2]) < 1e-12:
        raise ReconstructionError(f"{channel} data show no interference fringe")
    start = math.atan2(-coef[2], coef[1])

    # least squares in the single phase parameter: Newton on the residual sum
    p = start
    for _ in range(100):
        arg = offset_phase + x + p
        r = y - scale - amp * np.cos(arg)
        g = float(np.sum(r * amp * np.sin(arg)))
        h = float(np.sum(amp * amp * np.sin(arg) ** 2 + r * amp * np.cos(arg)))
        if not h > 0:
            # outside the convex basin: fall back to a Gauss-Newton step
            h = float(np.sum((amp * np.sin(arg)) ** 2))
        dp = -g / h
        p += dp
        if abs(dp) < 1e-15:
            break
    arg = offset_phase + x + p
    r = y - scale - amp * np.cos(arg)
    jac = float(np.sum((amp * np.sin(arg)) ** 2))
    dof = len(x) - 1
    se = math.sqrt(float(r @ r) / dof / jac)
    return FringeFit(float(p) % TWO_PI, se, dof)


def reconstruct(ds: ProbeDataset, U=HADAMARD, confidence: float = 0.95) -> Reconstruction:
    """Recover magnitudes, ``phi11``, ``F`` and ``P_tilde`` with propagated uncertainties."""
    if ds.replicates < 2:
        raise ValueError("reconstruction needs at least two replicates")
    bins = list(ds.bins)
    i0 = bins.index(0)
    s0, s1 = ds.single_line[0], ds.single_line[1]
    samples = np.sqrt(np.column_stack([s0[:, i0], s1[:, i0], s0[:, i0 + 1], s1[:, i0 + 1]]))
    gamma = samples.mean(axis=0)
    cov_g = np.cov(samples, rowvar=False, ddof=1)

    reps = ds.rho0.shape[1]
    x = np.repeat(np.asarray(ds.phase_grid, float), reps)
    g00, g01, g10, g11 = gamma
    fit_i = _fit_fringe(x, ds.rho0.ravel(), g00, g01, 0.0, "rho_0 (bin 0)")
    fit_11 = _fit_fringe(x, ds.rho1.ravel(), g10, g11, fit_i.phase, "rho_1 (bin 1)")

    t = stats.t.ppf(0.5 + confidence / 2.0, fit_11.dof)
    ci_width = 2.0 * t * fit_11.stderr
    var_phi = (ci_width / 4.0) ** 2

    cov = np.zeros((5, 5))
    cov[:4, :4] = cov_g
    cov[4, 4] = var_phi

    f, grad = fidelity_and_gradient(gamma, fit_11.phase, U)
    dF = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    p_tilde = float(np.sum(gamma ** 2) / 2.0)
    dP = math.sqrt(max(float(gamma @ cov_g @ gamma), 0.0))
    return Reconstruction(gamma, fit_11.phase, fit_i.phase, cov, f, dF, p_tilde, dP)


@dataclass(frozen=True)
class AlignmentResult:
    phase: float
    residual: float
    degenerate: bool
    scan_phases: np.ndarray
    scan_residuals: np.ndarray


def sideband_residual(theta: float, relative_phase: float, shaper: ShaperSpec,
                      probe_bin: int = -1, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Output power outside the probed bin when the second modulator's drive
    is offset by ``relative_phase`` from the first."""
    v = transfer_columns(ModulatorSpec(theta), shaper,
                         ModulatorSpec(theta, phase_offset=relative_phase), [probe_bin], tail_tol)
    col = np.abs(v.entries[:, 0]) ** 2
    return float(col.sum() - col[probe_bin - v.m_min])


def align_out_of_phase(theta_small: float, phase2_guess: float = 0.0, shaper: ShaperSpec | None = None,
                       probe_bin: int = -1, scan_points: int = 72,
                       tail_tol: float = DEFAULT_TAIL_TOL) -> AlignmentResult:
    """Second-modulator drive phase minimising residual sideband power.

    Scans a full turn starting at ``phase2_guess`` and refines the best
    point by golden-section search.  A flat scan is flagged degenerate.
    """
    if theta_small > 0.2:
        raise ValueError("alignment assumes a small modulation index (<= 0.2)")
    if shaper is None:
        shaper = ShaperSpec.step(6, math.pi)
    phases = (phase2_guess + TWO_PI * np.arange(scan_points) / scan_points) % TWO_PI
    res = np.array([sideband_residual(theta_small, p, shaper, probe_bin, tail_tol) for p in phases])
    degenerate = float(res.max() - res.min()) < 1e-15
    i = int(np.argmin(res))
    if degenerate:
        return AlignmentResult(float(phases[i]), float(res[i]), True, phases, res)
    step = TWO_PI / scan_points
    x, neg, _ = golden_section_max(
        lambda p: -sideband_residual(theta_small, p, shaper, probe_bin, tail_tol),
        phases[i] - step, phases[i] + step, xtol=1e-10)
    return AlignmentResult(float(x % TWO_PI), -float(neg), False, phases, res)
