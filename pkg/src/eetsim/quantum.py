"""Deterministic quantum engines: the master equation and its moment form.

Two independent formulations are provided as mutual oracles: direct
integration of the density matrix under coherent evolution plus pure
dephasing, and integration of the quantum second-moment triple (the
real/imaginary bilinears of the amplitudes) with the density matrix
reassembled per sample via rho_nm = R_nm + S_nm + i (T_mn - T_nm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import RstState, _rst_rhs
from .errors import EetsimError, InvalidInitialState
from .integrate import TimeGrid, linearize_rhs, resolve_step, rk4_propagate
from .model import AggregateModel, DensityMatrix

_TRACE_TOL = 1e-8
_TRAJECTORY_PSD_TOL = 1e-8


@dataclass(frozen=True)
class QuantumTrajectory:
    """Density matrices sampled on a time grid, with trace checked per sample."""

    grid: TimeGrid
    states: list[DensityMatrix]

    def populations(self) -> np.ndarray:
        """Site populations, shape (n_samples, N)."""
        return np.array([dm.populations() for dm in self.states])

    def coherence(self, n: int, m: int) -> np.ndarray:
        """rho_nm along the trajectory."""
        return np.array([dm.data[n, m] for dm in self.states])


def _lindblad_rhs(model: AggregateModel):
    n = model.n_sites
    # Elementwise multiplier: coherent phase from energy gaps plus dephasing.
    factor = -1j * model.energy_gaps + model.dephasing_factor
    v = model.coupling.astype(complex)

    # The flat real state interleaves re/im (a complex matrix viewed as
    # floats), so packing and unpacking are zero-copy views.
    def rhs(y: np.ndarray) -> np.ndarray:
        rho = y.view(complex).reshape(n, n)
        drho = factor * rho - 1j * (v @ rho - rho @ v)
        return drho.view(float).ravel()

    return rhs


def _pack_density(rho: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(rho, dtype=complex).view(float).ravel().copy()


def _unpack_density(row: np.ndarray, n: int) -> np.ndarray:
    return row.view(complex).reshape(n, n)


def _check_initial(model: AggregateModel, rho0: DensityMatrix) -> None:
    if rho0.dimension != model.n_sites:
        raise InvalidInitialState(
            f"initial state dimension {rho0.dimension} does not match model {model.n_sites}"
        )
    if abs(rho0.trace - 1.0) > _TRACE_TOL:
        raise InvalidInitialState(f"initial trace {rho0.trace} is not 1")


def propagate_lindblad(model: AggregateModel, rho0: DensityMatrix, grid: TimeGrid) -> QuantumTrajectory:
    """Integrate the pure-dephasing master equation with fixed-step RK4.

    Parameters
    ----------
    model : AggregateModel
    rho0 : DensityMatrix
        Unit-trace initial state of matching dimension.
    grid : TimeGrid

    Returns
    -------
    QuantumTrajectory

    Raises
    ------
    StepTooLarge
        When the integration step cannot resolve the fastest model rate.
    InvalidInitialState
    """
    _check_initial(model, rho0)
    n = model.n_sites
    dt = resolve_step(model, grid)
    y0 = _pack_density(rho0.data)
    rhs = linearize_rhs(_lindblad_rhs(model), y0.size)
    raw = rk4_propagate(rhs, y0, grid, dt)
    states = []
    for row in raw:
        rho = _unpack_density(row, n)
        dm = DensityMatrix(rho, psd_tol=_TRAJECTORY_PSD_TOL)
        if abs(dm.trace - 1.0) > _TRACE_TOL:
            raise EetsimError(f"trace drifted to {dm.trace}; step too coarse")
        states.append(dm)
    return QuantumTrajectory(grid=grid, states=states)


def propagate_quantum_rst(model: AggregateModel, rst0: RstState, grid: TimeGrid) -> list[DensityMatrix]:
    """Integrate the quantum moment triple and reassemble the density matrix.

    Uses the same initial-state builders as the classical engine.  Agrees
    with :func:`propagate_lindblad` to integrator accuracy; useful as a
    cross-check because the couplings enter the two formulations in
    structurally different ways.
    """
    if rst0.dimension != model.n_sites:
        raise InvalidInitialState(
            f"initial state dimension {rst0.dimension} does not match model {model.n_sites}"
        )
    dt = resolve_step(model, grid)
    y0 = rst0.pack()
    rhs = linearize_rhs(_rst_rhs(model, quantum=True), y0.size)
    raw = rk4_propagate(rhs, y0, grid, dt)
    n = model.n_sites
    n2 = n * n
    states = []
    for row in raw:
        r = row[:n2].reshape(n, n)
        s = row[n2 : 2 * n2].reshape(n, n)
        t = row[2 * n2 :].reshape(n, n)
        rho = r + s + 1j * (t.T - t)
        dm = DensityMatrix(rho, psd_tol=_TRAJECTORY_PSD_TOL)
        if abs(dm.trace - 1.0) > _TRACE_TOL:
            raise EetsimError(f"trace drifted to {dm.trace}; step too coarse")
        states.append(dm)
    return states
