"""Born-Markov comparator: Ficek-Tanas closed forms, transfer matrix and Lindblad integration."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError
from .evolution import Basis, DensityMatrix4, Trajectory
from .master_eq import GeneratorSource, integrate_master
from .propagator import _phi
from .rates import Rates, SystemParams, compute_rates
from .scenarios import ScenarioKind, ScenarioSpec, build_initial, evolve_scenario

OCCUPATION_ORDER = ("I", "+", "-", "O")


class MarkovSource(enum.Enum):
    FICEK_TANAS = "ficek_tanas_closed_form"
    TRANSFER_MATRIX = "transfer_matrix"
    LINDBLAD = "lindblad_integration"


@dataclass(frozen=True)
class MarkovPrediction:
    t: float | np.ndarray
    rho_pp: float | np.ndarray
    rho_mm: float | np.ndarray
    source: MarkovSource


def ficek_tanas_elements(rates: Rates, p: float, t) -> MarkovPrediction:
    """Markovian rho++ and rho-- for the Class A state.

    Written with ``(1 - e^{-x})/x`` so the Gamma_r -> +-Gamma_0 limits are
    continuous; no separate degenerate branch is needed.
    """
    if not (0.0 <= p <= 1.0):
        raise DomainError("p must lie in [0, 1]")
    t = np.asarray(t, dtype=float)
    g0, gr = rates.gamma0, rates.gammaR
    sp, sm = g0 + gr, g0 - gr
    # p (G0+Gr)/(G0-Gr) e^{-2G0t}(e^{-2Grt} - e^{-2G0t}) = p sp e^{-2 sp t} 2t phi(2 sm t)
    rpp = p * sp * np.exp(-2 * sp * t) * 2 * t * _phi(2 * sm * t)
    rmm = p * sm * np.exp(-2 * sm * t) * 2 * t * _phi(2 * sp * t)
    if t.ndim == 0:
        return MarkovPrediction(float(t), float(rpp), float(rmm), MarkovSource.FICEK_TANAS)
    return MarkovPrediction(t, rpp, rmm, MarkovSource.FICEK_TANAS)


def transfer_matrix(rates: Rates) -> np.ndarray:
    """Rate matrix T on occupations ordered (I, +, -, O).

    The feeds w+- = 2(G0 +- Gr) add up to the 4 G0 loss of |I>.
    """
    g0, gr = rates.gamma0, rates.gammaR
    wp, wm = 2 * (g0 + gr), 2 * (g0 - gr)
    return np.array(
        [
            [-4 * g0, 0, 0, 0],
            [wp, -2 * (g0 + gr), 0, 0],
            [wm, 0, -2 * (g0 - gr), 0],
            [0, 2 * (g0 + gr), 2 * (g0 - gr), 0],
        ]
    )


def transfer_matrix_evolve(rates: Rates, p_init, t: float) -> np.ndarray:
    """Occupations (I, +, -, O) at time ``t`` from p' = T p."""
    p0 = np.asarray(p_init, dtype=float)
    if p0.shape != (4,):
        raise DomainError("p_init must have four entries (I, +, -, O)")
    if np.any(p0 < 0):
        raise DomainError("occupations must be non-negative")
    if p0.sum() > 1 + 1e-12:
        raise DomainError("occupations sum to more than 1")
    return expm(transfer_matrix(rates) * t) @ p0


def lindblad_integrate(rho0: DensityMatrix4, params: SystemParams, tgrid, rates: Rates | None = None,
                       **kw) -> Trajectory:
    """Integrate the master equation with F_t = G_t = 0."""
    traj = integrate_master(rho0, params, tgrid, GeneratorSource.LINDBLAD, rates=rates, **kw)
    traj.model = "markov_lindblad"
    return traj


@dataclass
class MarkovComparison:
    """Paired non-Markov and Markov Class A trajectories."""

    gamma0_t: np.ndarray
    nonmarkov_pp: np.ndarray
    nonmarkov_mm: np.ndarray
    markov_pp: np.ndarray
    markov_mm: np.ndarray
    nonmarkov: Trajectory
    markov: Trajectory | None

    @staticmethod
    def _rel(a, b):
        scale = np.maximum(np.abs(a), np.abs(b))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(scale > 0, np.abs(a - b) / scale, 0.0)

    @property
    def ratio_pp(self) -> np.ndarray:
        """Markov rho++ over non-Markov rho++ (nan where both vanish)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.markov_pp / self.nonmarkov_pp

    @property
    def rel_diff_pp(self) -> np.ndarray:
        return self._rel(self.markov_pp, self.nonmarkov_pp)

    @property
    def rel_diff_mm(self) -> np.ndarray:
        return self._rel(self.markov_mm, self.nonmarkov_mm)

    def divergence(self) -> dict:
        """Max over t of the relative difference per element."""
        return {"rho_pp": float(np.max(self.rel_diff_pp)), "rho_mm": float(np.max(self.rel_diff_mm))}


def compare_markov(params: SystemParams, p: float, gamma0_t_max: float = 5.0, n: int = 201,
                   with_lindblad: bool = False) -> MarkovComparison:
    """Class A(p) under the full dynamics and under Ficek-Tanas (optionally Lindblad)."""
    spec = ScenarioSpec.on_gamma0_grid(ScenarioKind.CLASS_A, params, gamma0_t_max, n, p)
    rates = compute_rates(params)
    nm = evolve_scenario(spec).in_basis(Basis.BELL)
    ft = ficek_tanas_elements(rates, p, spec.tgrid)
    lb = lindblad_integrate(build_initial(spec), params, spec.tgrid, rates) if with_lindblad else None
    return MarkovComparison(
        gamma0_t=rates.gamma0 * spec.tgrid,
        nonmarkov_pp=nm.element("+", "+").real,
        nonmarkov_mm=nm.element("-", "-").real,
        markov_pp=np.asarray(ft.rho_pp),
        markov_mm=np.asarray(ft.rho_mm),
        nonmarkov=nm,
        markov=lb,
    )
