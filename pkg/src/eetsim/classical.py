"""Classical oscillator engine: the closed second-moment system.

The classical analogue of the aggregate replaces every transition dipole by a
harmonic oscillator whose frequency carries the same white-noise fluctuations
as the quantum site energy.  The noise-averaged bilinear sigma_nm =
<z_n z*_m> of the complex oscillator amplitudes plays the role of a density
matrix after trace normalization, but its equation of motion is not closed:
it couples to the anomalous moments <z_n z_m>.  Propagating the real
second-moment triple

    R_nm = <x_n x_m>,  S_nm = <p_n p_m>,  T_nm = <x_n p_m>

closes the system exactly, and sigma is assembled per sample as

    sigma_nm = R_nm + S_nm + i (T_mn - T_nm).

The dephasing terms below are the exact Ito covariation of the underlying
stochastic flow: off-diagonals damp at (gamma_n + gamma_m)/2, while on the
diagonal the noise exchanges R_nn with S_nn and damps T_nn at 2 gamma_n.
Under assembly these terms reduce to the same elementwise functional as in
the quantum master equation, but the anomalous sector they govern feeds back
into sigma through the couplings, so the distinction matters whenever both V
and gamma are nonzero.  The ensemble of stochastic oscillator trajectories
(see :mod:`eetsim.stochastic`) converges to this engine by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidInitialState,
    NormCollapse,
    NotPositive,
    ValidationError,
    ZeroState,
)
from .integrate import TimeGrid, linearize_rhs, resolve_step, rk4_propagate
from .model import AggregateModel, DensityMatrix

_SYMMETRY_TOL = 1e-12
_EIGENVALUE_FLOOR = 1e-12
_TRAJECTORY_PSD_TOL = 1e-8


@dataclass(frozen=True)
class RstState:
    """Second-moment triple (R, S, T) of the oscillator ensemble.

    R and S are symmetric (position-position and momentum-momentum moments);
    T (position-momentum) carries no symmetry.  Arrays are read-only.
    """

    r: np.ndarray
    s: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        s = np.asarray(self.s, dtype=float)
        t = np.asarray(self.t, dtype=float)
        n = r.shape[0]
        for name, a in (("r", r), ("s", s), ("t", t)):
            if a.ndim != 2 or a.shape != (n, n):
                raise DimensionMismatch(f"{name} must be {n}x{n}, got {a.shape}")
        for name, a in (("r", r), ("s", s)):
            scale = max(1.0, float(np.abs(a).max()))
            if float(np.abs(a - a.T).max()) > _SYMMETRY_TOL * scale:
                raise ValidationError(f"{name} must be symmetric")
        for a in (r, s, t):
            a.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)

    @property
    def dimension(self) -> int:
        return self.r.shape[0]

    def pack(self) -> np.ndarray:
        return np.concatenate([self.r.ravel(), self.s.ravel(), self.t.ravel()])

    @staticmethod
    def unpack(y: np.ndarray, n: int) -> "RstState":
        n2 = n * n
        return RstState(
            y[:n2].reshape(n, n).copy(),
            y[n2 : 2 * n2].reshape(n, n).copy(),
            y[2 * n2 :].reshape(n, n).copy(),
        )


def initial_rst_pure(c_ini) -> RstState:
    """Second moments of a single deterministic amplitude vector z = c.

    The assembled sigma equals the outer product c c^H exactly.
    """
    c = np.asarray(c_ini, dtype=complex)
    if c.ndim != 1:
        raise DimensionMismatch("amplitude vector must be one-dimensional")
    if float(np.vdot(c, c).real) <= 0.0:
        raise ZeroState("amplitude vector has zero norm")
    x, p = c.real, c.imag
    return RstState(np.outer(x, x), np.outer(p, p), np.outer(x, p))


def initial_rst_mixed(rho0: DensityMatrix) -> RstState:
    """Second moments reproducing a mixed state as a weighted sum of pure ones.

    The density matrix is eigendecomposed, eigenvalues below 1e-12 are
    dropped, and each eigenvector contributes its pure-state moments scaled
    by its weight.  The assembled sigma equals ``rho0`` elementwise.
    """
    w, vecs = np.linalg.eigh(rho0.data)
    if float(w.min()) < -1e-9:
        raise NotPositive(f"initial state has eigenvalue {w.min():.3e}")
    n = rho0.dimension
    r = np.zeros((n, n))
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    for weight, vec in zip(w, vecs.T):
        if weight < _EIGENVALUE_FLOOR:
            continue
        x, p = vec.real, vec.imag
        r += weight * np.outer(x, x)
        s += weight * np.outer(p, p)
        t += weight * np.outer(x, p)
    return RstState(r, s, t)


def assemble_sigma(rst: RstState) -> DensityMatrix:
    """Classical density matrix (unnormalized) from the moment triple."""
    sigma = rst.r + rst.s + 1j * (rst.t.T - rst.t)
    return DensityMatrix(sigma, psd_tol=_TRAJECTORY_PSD_TOL)


def normalize_sigma(sigma) -> tuple[DensityMatrix, float]:
    """Scale a moment matrix to unit trace; returns (sigma / N, N)."""
    data = sigma.data if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=complex)
    norm = float(np.trace(data).real)
    if norm < 1e-12:
        raise NormCollapse(f"trace {norm:.3e} too small to normalize")
    return DensityMatrix(data / norm, psd_tol=_TRAJECTORY_PSD_TOL), norm


@dataclass(frozen=True)
class ClassicalTrajectory:
    """Sampled output of the classical engine.

    ``states`` holds the raw moment triples, ``sigma_normalized`` the
    unit-trace classical density matrices, and ``norm_factor`` the trace that
    was divided out at each sample (it drifts; only the normalized matrices
    are meant for comparison with the quantum engine).
    """

    grid: TimeGrid
    states: list[RstState]
    sigma_normalized: list[DensityMatrix]
    norm_factor: np.ndarray

    def populations(self) -> np.ndarray:
        """Normalized site populations, shape (n_samples, N)."""
        return np.array([dm.populations() for dm in self.sigma_normalized])

    def coherence(self, n: int, m: int) -> np.ndarray:
        """Normalized sigma_nm along the trajectory."""
        return np.array([dm.data[n, m] for dm in self.sigma_normalized])


def _rst_rhs(model: AggregateModel, quantum: bool):
    """Derivative callback for the moment triple, classical or quantum variant.

    Both share the local-frequency rotation and the exact dephasing
    covariation; they differ in how the couplings enter (the classical
    position equation carries no coupling, so the V terms sit asymmetrically).
    """
    n = model.n_sites
    n2 = n * n
    omega_col = model.omega[:, None]
    omega_row = model.omega[None, :]
    v = model.coupling
    gamma = model.gamma
    ghalf = 0.5 * (gamma[:, None] + gamma[None, :])
    idx = np.arange(n)

    def rhs(y: np.ndarray) -> np.ndarray:
        r = y[:n2].reshape(n, n)
        s = y[n2 : 2 * n2].reshape(n, n)
        t = y[2 * n2 :].reshape(n, n)
        tt = t.T

        dr = omega_col * tt + t * omega_row - ghalf * r
        ds = -(omega_col * t + tt * omega_row) - ghalf * s
        dtm = omega_col * s - r * omega_row - ghalf * t
        # Ito covariation of the common noise: diagonal exchange R <-> S and
        # double damping of T_nn.
        dr[idx, idx] += gamma * s[idx, idx]
        ds[idx, idx] += gamma * r[idx, idx]
        dtm[idx, idx] -= gamma * t[idx, idx]

        if quantum:
            dr += v @ tt + t @ v
            ds -= v @ t + tt @ v
            dtm += v @ s - r @ v
        else:
            ds -= 2.0 * (v @ t + tt @ v)
            dtm -= 2.0 * (r @ v)
        return np.concatenate([dr.ravel(), ds.ravel(), dtm.ravel()])

    return rhs


def propagate_classical_rst(model: AggregateModel, rst0: RstState, grid: TimeGrid) -> ClassicalTrajectory:
    """Integrate the closed classical moment system and assemble sigma.

    Parameters
    ----------
    model : AggregateModel
    rst0 : RstState
        Initial moments from :func:`initial_rst_pure` or
        :func:`initial_rst_mixed`.
    grid : TimeGrid

    Returns
    -------
    ClassicalTrajectory
        Raw moments, per-sample normalized sigma, and the norm factors.

    Raises
    ------
    StepTooLarge, InvalidInitialState, NormCollapse
    """
    if rst0.dimension != model.n_sites:
        raise InvalidInitialState(
            f"initial state dimension {rst0.dimension} does not match model {model.n_sites}"
        )
    dt = resolve_step(model, grid)
    y0 = rst0.pack()
    rhs = linearize_rhs(_rst_rhs(model, quantum=False), y0.size)
    raw = rk4_propagate(rhs, y0, grid, dt)
    n = model.n_sites
    states = [RstState.unpack(row, n) for row in raw]
    normalized = []
    norms = np.empty(grid.n_samples)
    for i, st in enumerate(states):
        dm, norm = normalize_sigma(assemble_sigma(st))
        normalized.append(dm)
        norms[i] = norm
    norms.setflags(write=False)
    return ClassicalTrajectory(grid=grid, states=states, sigma_normalized=normalized, norm_factor=norms)
