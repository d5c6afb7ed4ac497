"""Scenario builders and model-file ingestion.

Model files are JSON documents with the keys

- ``sites``: array of ``{"label", "energy"}``
- ``couplings``: array of ``{"i", "j", "value"}`` triplets or a full matrix
- ``gamma``: scalar or per-site array (required; there is no implicit default)
- ``units``: ``"V"`` (model units as stored) or ``"cm-1"`` (converted to
  angular frequency in rad/ps on ingestion)
- ``initial_state``: ``{"site": index}``, ``{"amplitudes": [...]}`` with
  entries given as numbers or ``[re, im]`` pairs, or
  ``{"mixture": [{"weight", "amplitudes"}, ...]}``
- optional ``shift``: added to every site energy, in file units, before
  conversion (useful for probing how dynamics depend on the absolute energy
  scale)

The 7-site FMO Hamiltonian ships as a data asset in this format; see
:func:`fmo_model_path`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    IndexOutOfRange,
    NonPositiveFrequency,
    ParseError,
    ValidationError,
)
from .model import AggregateModel, DensityMatrix, build_aggregate, convert_energy, pure_density


@dataclass(frozen=True)
class InitialState:
    """Initial excitation: amplitude vector when pure, density matrix always.

    The stochastic engines need the amplitudes and therefore reject mixed
    initial states; the deterministic engines use the density matrix.
    """

    rho: DensityMatrix
    amplitudes: np.ndarray | None = None

    @property
    def is_pure(self) -> bool:
        return self.amplitudes is not None


def localized_state(n_sites: int, site: int) -> InitialState:
    """Excitation fully localized on one site."""
    if not 0 <= site < n_sites:
        raise IndexOutOfRange(f"site {site} outside 0..{n_sites - 1}")
    c = np.zeros(n_sites, dtype=complex)
    c[site] = 1.0
    return InitialState(rho=pure_density(c), amplitudes=c)


def make_chain(
    n_sites: int,
    v: float,
    epsilon: float,
    gamma: float,
    init_site: int = 0,
) -> tuple[AggregateModel, InitialState]:
    """Homogeneous chain with nearest-neighbour coupling.

    All site energies equal ``epsilon``, all dephasing rates equal ``gamma``,
    and the excitation starts fully localized on ``init_site``.  Energies are
    taken as model units (set ``v = 1`` to work in units of the coupling).
    """
    if n_sites < 1:
        raise ValidationError("chain needs at least one site")
    if not 0 <= init_site < n_sites:
        raise IndexOutOfRange(f"init_site {init_site} outside 0..{n_sites - 1}")
    coupling = np.zeros((n_sites, n_sites))
    for k in range(n_sites - 1):
        coupling[k, k + 1] = coupling[k + 1, k] = v
    model = build_aggregate(
        epsilon=np.full(n_sites, float(epsilon)),
        coupling=coupling,
        gamma=np.full(n_sites, float(gamma)),
        units="dimensionless-in-V",
    )
    return model, localized_state(n_sites, init_site)


def fmo_model_path() -> Path:
    """Path of the shipped 7-site FMO model file."""
    return Path(resources.files("eetsim.data") / "fmo_7site.json")


def _parse_amplitudes(raw, n: int, context: str) -> np.ndarray:
    if not isinstance(raw, (list, tuple)) or len(raw) != n:
        raise ParseError(f"{context}: amplitudes must be a list of {n} entries")
    c = np.zeros(n, dtype=complex)
    for k, entry in enumerate(raw):
        if isinstance(entry, (int, float)):
            c[k] = float(entry)
        elif isinstance(entry, (list, tuple)) and len(entry) == 2:
            c[k] = float(entry[0]) + 1j * float(entry[1])
        else:
            raise ParseError(f"{context}: amplitude {k} must be a number or an [re, im] pair")
    return c


def _parse_initial(doc_initial, n: int) -> InitialState:
    if not isinstance(doc_initial, dict):
        raise ParseError("initial_state: expected an object")
    if "site" in doc_initial:
        site = doc_initial["site"]
        if not isinstance(site, int) or not 0 <= site < n:
            raise ParseError(f"initial_state.site: index {site!r} outside 0..{n - 1}")
        return localized_state(n, site)
    if "amplitudes" in doc_initial:
        c = _parse_amplitudes(doc_initial["amplitudes"], n, "initial_state.amplitudes")
        norm = float(np.vdot(c, c).real)
        if norm <= 0.0:
            raise ParseError("initial_state.amplitudes: zero norm")
        c = c / np.sqrt(norm)
        return InitialState(rho=pure_density(c), amplitudes=c)
    if "mixture" in doc_initial:
        terms = doc_initial["mixture"]
        if not isinstance(terms, list) or not terms:
            raise ParseError("initial_state.mixture: expected a non-empty list")
        weights = []
        rho = np.zeros((n, n), dtype=complex)
        for k, term in enumerate(terms):
            try:
                w = float(term["weight"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"initial_state.mixture[{k}].weight: {exc}") from exc
            if w < 0.0:
                raise ParseError(f"initial_state.mixture[{k}].weight: negative weight")
            c = _parse_amplitudes(term.get("amplitudes"), n, f"initial_state.mixture[{k}].amplitudes")
            norm = float(np.vdot(c, c).real)
            if norm <= 0.0:
                raise ParseError(f"initial_state.mixture[{k}]: zero-norm amplitudes")
            c = c / np.sqrt(norm)
            rho += w * np.outer(c, c.conj())
            weights.append(w)
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValidationError(f"mixture weights sum to {sum(weights)}, expected 1")
        return InitialState(rho=DensityMatrix(rho), amplitudes=None)
    raise ParseError("initial_state: expected one of 'site', 'amplitudes', 'mixture'")


def load_model(source) -> tuple[AggregateModel, InitialState]:
    """Load a model file (path or already-parsed dict).

    Energies, couplings, and rates quoted in cm^-1 are converted to angular
    frequencies in rad/ps; the optional ``shift`` is applied to the site
    energies first.  Validation is delegated to :func:`build_aggregate`.

    Raises
    ------
    ParseError
        Malformed document, with key context.
    ValidationError
        Inconsistent physics (asymmetric couplings, negative rates, ...).
    NonPositiveFrequency
        Non-positive site energy in the wavenumber unit system.
    """
    if isinstance(source, dict):
        doc = source
        origin = "<dict>"
    else:
        origin = str(source)
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{origin}: line {exc.lineno}: {exc.msg}") from exc
        except OSError as exc:
            raise ParseError(f"{origin}: {exc}") from exc

    try:
        sites = doc["sites"]
        couplings_raw = doc["couplings"]
        gamma_raw = doc["gamma"]
        units = doc["units"]
        initial_raw = doc["initial_state"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{origin}: missing key {exc}") from exc

    if units not in ("V", "cm-1"):
        raise ParseError(f"{origin}: units must be 'V' or 'cm-1', got {units!r}")
    if not isinstance(sites, list) or not sites:
        raise ParseError(f"{origin}: sites must be a non-empty list")
    n = len(sites)
    try:
        energies = np.array([float(s["energy"]) for s in sites])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{origin}: sites[*].energy: {exc}") from exc

    shift = float(doc.get("shift", 0.0))
    energies = energies + shift

    if isinstance(couplings_raw, list) and couplings_raw and isinstance(couplings_raw[0], dict):
        coupling = np.zeros((n, n))
        for k, entry in enumerate(couplings_raw):
            try:
                i, j, value = int(entry["i"]), int(entry["j"]), float(entry["value"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{origin}: couplings[{k}]: {exc}") from exc
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ParseError(f"{origin}: couplings[{k}]: bad site pair ({i}, {j})")
            coupling[i, j] = coupling[j, i] = value
    else:
        coupling = np.asarray(couplings_raw, dtype=float)
        if coupling.shape != (n, n):
            raise ParseError(f"{origin}: coupling matrix must be {n}x{n}")

    gamma = np.asarray(gamma_raw, dtype=float)
    if gamma.ndim == 0:
        gamma = np.full(n, float(gamma))

    if units == "cm-1":
        if np.any(energies <= 0.0):
            raise NonPositiveFrequency(
                f"{origin}: site energies must stay positive in cm^-1 (after shift {shift})"
            )
        energies = convert_energy(energies)
        coupling = convert_energy(coupling)
        gamma = convert_energy(gamma)
        model_units = "wavenumber"
    else:
        model_units = "dimensionless-in-V"

    model = build_aggregate(energies, coupling, gamma, units=model_units)
    return model, _parse_initial(initial_raw, n)
