"""Aggregate model, unit handling, and the shared superoperator building blocks.

Units and conventions
---------------------
Internally hbar = 1 and all energies are stored as angular frequencies, so a
site energy, a coupling, and a dephasing rate share the same inverse-time
unit.  Two unit systems are supported:

- ``"dimensionless-in-V"``: the nearest-neighbour coupling V is the energy
  unit, hbar/V the time unit.  Values are stored as given.
- ``"wavenumber"``: inputs are quoted in cm^-1 and converted on ingestion via
  :func:`convert_energy`; the resulting time unit is the picosecond.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    AsymmetricCoupling,
    DimensionMismatch,
    NegativeRate,
    NotPositive,
    ValidationError,
)

SPEED_OF_LIGHT_CM_PER_PS = 0.0299792458
#: Multiply an energy in cm^-1 by this to get an angular frequency in rad/ps.
CM1_TO_RAD_PER_PS = 2.0 * np.pi * SPEED_OF_LIGHT_CM_PER_PS

UNIT_SYSTEMS = ("dimensionless-in-V", "wavenumber")

_COUPLING_SYMMETRY_TOL = 1e-12
_HERMITICITY_TOL = 1e-12


def convert_energy(value):
    """Convert an energy in cm^-1 to an angular frequency in rad/ps.

    Works elementwise on arrays.  1 cm^-1 corresponds to
    2*pi*c = 0.18836515673 rad/ps with c in cm/ps.
    """
    out = CM1_TO_RAD_PER_PS * np.asarray(value, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AggregateModel:
    """Molecular aggregate with site energies, couplings, and dephasing rates.

    Attributes
    ----------
    epsilon : (N,) array
        Site transition energies as angular frequencies (hbar = 1).
    coupling : (N, N) array
        Real symmetric excitation-transfer couplings with zero diagonal.
    gamma : (N,) array
        Non-negative pure-dephasing rates.
    units : str
        Unit-system tag, one of ``UNIT_SYSTEMS``.

    Instances are immutable and safe to share across threads.
    """

    epsilon: np.ndarray
    coupling: np.ndarray
    gamma: np.ndarray
    units: str = "dimensionless-in-V"

    @property
    def n_sites(self) -> int:
        return self.epsilon.shape[0]

    @cached_property
    def omega(self) -> np.ndarray:
        """Oscillator frequencies; identical to epsilon since hbar = 1."""
        return self.epsilon

    @cached_property
    def energy_gaps(self) -> np.ndarray:
        """Matrix of pairwise differences epsilon_n - epsilon_m."""
        gaps = self.epsilon[:, None] - self.epsilon[None, :]
        gaps.setflags(write=False)
        return gaps

    @cached_property
    def dephasing_factor(self) -> np.ndarray:
        """Elementwise dephasing multiplier with an exactly zero diagonal.

        Off-diagonal entries are -(gamma_n + gamma_m)/2; the diagonal is set
        to exactly 0 so populations are never touched by rounding.
        """
        fac = -0.5 * (self.gamma[:, None] + self.gamma[None, :])
        np.fill_diagonal(fac, 0.0)
        fac.setflags(write=False)
        return fac

    def with_shifted_energies(self, delta: float) -> "AggregateModel":
        """Return a copy with every site energy shifted by ``delta``."""
        return AggregateModel(
            epsilon=self.epsilon + delta,
            coupling=self.coupling,
            gamma=self.gamma,
            units=self.units,
        )


def build_aggregate(epsilon, coupling, gamma, units: str = "dimensionless-in-V") -> AggregateModel:
    """Validate raw arrays and assemble an :class:`AggregateModel`.

    The coupling matrix is symmetrized by averaging, but only if its
    asymmetry is at rounding level (<= 1e-12 relative to the largest
    magnitude); larger asymmetry is treated as a data error.

    Raises
    ------
    DimensionMismatch, AsymmetricCoupling, NegativeRate, ValidationError
    """
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float)).copy()
    v = np.asarray(coupling, dtype=float).copy()
    gam = np.asarray(gamma, dtype=float)
    if gam.ndim == 0:
        gam = np.full(eps.shape, float(gam))
    gam = gam.copy()

    n = eps.shape[0]
    if n < 1:
        raise DimensionMismatch("model needs at least one site")
    if eps.ndim != 1:
        raise DimensionMismatch(f"epsilon must be a vector, got shape {eps.shape}")
    if v.ndim != 2 or v.shape != (n, n):
        raise DimensionMismatch(f"coupling must be {n}x{n}, got shape {v.shape}")
    if gam.shape != (n,):
        raise DimensionMismatch(f"gamma must have length {n}, got shape {gam.shape}")
    if not np.all(np.isfinite(eps)):
        raise ValidationError("epsilon contains non-finite values")
    if not np.all(np.isfinite(v)):
        raise ValidationError("coupling contains non-finite values")
    if np.any(gam < 0.0):
        raise NegativeRate(f"gamma must be non-negative, got min {gam.min()}")
    if units not in UNIT_SYSTEMS:
        raise ValidationError(f"unknown unit system {units!r}; expected one of {UNIT_SYSTEMS}")

    scale = max(1.0, float(np.abs(v).max()) if v.size else 1.0)
    asym = float(np.abs(v - v.T).max()) if v.size else 0.0
    if asym > _COUPLING_SYMMETRY_TOL * scale:
        raise AsymmetricCoupling(f"coupling asymmetry {asym:.3e} exceeds tolerance")
    diag = float(np.abs(np.diag(v)).max()) if v.size else 0.0
    if diag > _COUPLING_SYMMETRY_TOL * scale:
        raise AsymmetricCoupling(f"coupling diagonal must be zero, max |V_nn| = {diag:.3e}")

    v = 0.5 * (v + v.T)
    np.fill_diagonal(v, 0.0)

    for arr in (eps, v, gam):
        arr.setflags(write=False)
    return AggregateModel(epsilon=eps, coupling=v, gamma=gam, units=units)


class DensityMatrix:
    """N x N complex Hermitian matrix with trace and positivity checks.

    The wrapped array is made read-only.  ``psd_tol`` bounds how negative an
    eigenvalue may be before construction fails; propagators pass a slightly
    looser tolerance than the default to absorb integrator noise.
    """

    __slots__ = ("data",)

    def __init__(self, data, psd_tol: float = 1e-9, check_psd: bool = True):
        a = np.array(data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got shape {a.shape}")
        scale = float(np.abs(a).max()) if a.size else 0.0
        herm = float(np.abs(a - a.conj().T).max())
        if herm > _HERMITICITY_TOL * max(scale, 1e-300):
            raise ValidationError(f"matrix not Hermitian: max |A - A^H| = {herm:.3e}")
        tr = complex(np.trace(a))
        if abs(tr.imag) > _HERMITICITY_TOL * max(1.0, abs(tr)):
            raise ValidationError(f"trace not real: {tr}")
        if check_psd:
            lo = float(np.linalg.eigvalsh(a).min()) if a.size else 0.0
            if lo < -psd_tol * max(1.0, scale):
                raise NotPositive(f"eigenvalue {lo:.3e} below positivity tolerance")
        a.setflags(write=False)
        self.data = a

    @property
    def dimension(self) -> int:
        return self.data.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def populations(self) -> np.ndarray:
        """Diagonal of the matrix as a real vector."""
        return np.diag(self.data).real.copy()

    def coherence(self, n: int, m: int) -> complex:
        return complex(self.data[n, m])

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data).min())

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(dim={self.dimension}, trace={self.trace:.6f})"


def pure_density(amplitudes) -> DensityMatrix:
    """Density matrix |c><c| of a normalized amplitude vector."""
    c = np.asarray(amplitudes, dtype=complex)
    norm = float(np.vdot(c, c).real)
    if norm <= 0.0:
        raise ValidationError("amplitude vector has zero norm")
    c = c / np.sqrt(norm)
    return DensityMatrix(np.outer(c, c.conj()))


def commutator_action(model: AggregateModel, m) -> np.ndarray:
    """Coherent part of the master equation applied to a matrix.

    Returns -i[(eps_n - eps_m) m_nm + sum_l (V_nl m_lm - V_lm m_nl)] with
    hbar = 1.  Maps Hermitian input to a traceless anti-Hermitian-consistent
    derivative contribution.
    """
    a = np.asarray(m, dtype=complex)
    n = model.n_sites
    if a.shape != (n, n):
        raise DimensionMismatch(f"matrix shape {a.shape} does not match model dimension {n}")
    v = model.coupling
    return -1j * (model.energy_gaps * a + v @ a - a @ v)


def dephasing_action(model: AggregateModel, m) -> np.ndarray:
    """Pure-dephasing functional: elementwise damping of off-diagonals.

    Diagonal elements map to exactly 0; off-diagonals are multiplied by
    -(gamma_n + gamma_m)/2.
    """
    a = np.asarray(m, dtype=complex)
    n = model.n_sites
    if a.shape != (n, n):
        raise DimensionMismatch(f"matrix shape {a.shape} does not match model dimension {n}")
    return model.dephasing_factor * a


@dataclass(frozen=True)
class RcaReport:
    """Diagnostic ratios for the realistic coupling approximation.

    All three ratios must be well below 1 for the classical engines to track
    the quantum ones: coupling over transition frequency, site detuning over
    the smallest frequency, and dephasing rate over frequency.
    """

    ratio_v: float
    ratio_detune: float
    ratio_gamma: float
    verdict: str
    threshold: float = 0.1
    fail_threshold: float = 1.0
    reason: str = ""

    def summary(self) -> str:
        lines = [
            f"coupling/frequency   : {self.ratio_v:.6g}",
            f"detuning/frequency   : {self.ratio_detune:.6g}",
            f"dephasing/frequency  : {self.ratio_gamma:.6g}",
            f"verdict              : {self.verdict}",
        ]
        if self.reason:
            lines.append(f"reason               : {self.reason}")
        return "\n".join(lines)


def rca_check(model: AggregateModel, threshold: float = 0.1, fail_threshold: float = 1.0) -> RcaReport:
    """Evaluate the three weak-coupling ratios behind the RCA.

    Verdict is ``"pass"`` when every ratio is below ``threshold``, ``"fail"``
    when any ratio reaches ``fail_threshold`` (or the frequencies are not all
    positive, in which case the ratios are reported as infinite), otherwise
    ``"marginal"``.
    """
    omega = model.omega
    if np.any(omega <= 0.0):
        return RcaReport(
            ratio_v=float("inf"),
            ratio_detune=float("inf"),
            ratio_gamma=float("inf"),
            verdict="fail",
            threshold=threshold,
            fail_threshold=fail_threshold,
            reason="non-positive transition frequency",
        )
    vmax_per_row = np.abs(model.coupling).max(axis=1) if model.n_sites > 1 else np.zeros(1)
    ratio_v = float((vmax_per_row / omega).max())
    spread = float(omega.max() - omega.min())
    ratio_detune = spread / float(omega.min())
    ratio_gamma = float((model.gamma / omega).max())

    ratios = (ratio_v, ratio_detune, ratio_gamma)
    if all(r < threshold for r in ratios):
        verdict = "pass"
    elif any(r >= fail_threshold for r in ratios):
        verdict = "fail"
    else:
        verdict = "marginal"
    return RcaReport(ratio_v, ratio_detune, ratio_gamma, verdict, threshold, fail_threshold)
