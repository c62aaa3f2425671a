"""Canonical initial states, their evolutions and single-qubit decoherence measures.

Qubit 1 is the left factor of a computational ket, so |10> has qubit 1 excited.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DomainError
from .evolution import Basis, DensityMatrix4, Trajectory, kernel_arrays, propagate_grid
from .rates import SystemParams, compute_rates

CROSS_CHECK_TOL = 1e-10


class ScenarioKind(enum.Enum):
    CLASS_A = "class_a"
    BELL_PLUS = "bell_plus"
    BELL_MINUS = "bell_minus"
    FACTORIZED_GROUND = "factorized_ground"
    FACTORIZED_EXCITED = "factorized_excited"


@dataclass(frozen=True)
class ScenarioSpec:
    """An initial state family, its parameter ``p`` and the time grid (raw time units)."""

    kind: ScenarioKind
    params: SystemParams
    tgrid: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    p: float = 0.5

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"p must lie in [0, 1], got {self.p}")
        object.__setattr__(self, "tgrid", np.asarray(self.tgrid, dtype=float))

    @classmethod
    def on_gamma0_grid(cls, kind, params: SystemParams, gamma0_t_max: float, n: int, p: float = 0.5):
        """Grid of ``n`` samples over [0, gamma0_t_max] in units of 1/Gamma_0."""
        g0 = params.lam**2 * params.omega0 / (2 * np.pi)
        return cls(kind, params, np.linspace(0.0, gamma0_t_max / g0, n), p)


def initial_ket(kind: ScenarioKind, p: float) -> np.ndarray:
    s, c = np.sqrt(p), np.sqrt(1 - p)
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.CLASS_A:
        return np.array([c, 0, 0, s], dtype=complex)
    if kind is ScenarioKind.BELL_PLUS:
        return np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
    if kind is ScenarioKind.BELL_MINUS:
        return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    if kind is ScenarioKind.FACTORIZED_GROUND:
        # (sqrt(p)|1> + sqrt(1-p)|0>) x |0>
        return np.array([c, 0, s, 0], dtype=complex)
    # (sqrt(p)|1> + sqrt(1-p)|0>) x |1>
    return np.array([0, c, 0, s], dtype=complex)


def build_initial(spec: ScenarioSpec) -> DensityMatrix4:
    """Pure initial state of the scenario in the computational basis."""
    return DensityMatrix4.from_ket(initial_ket(spec.kind, spec.p))


def closed_form_states(spec: ScenarioSpec) -> np.ndarray:
    """Scenario-specific closed forms written out element by element.

    Independent of :func:`nmpair.evolution.apply_kernel`; used as a
    transcription cross-check. Only the elements fixed by each family's
    formulas are filled, the rest are set from Hermiticity and the trace.
    """
    params = spec.params
    rates = compute_rates(params)
    t = spec.tgrid
    u, vp, vm, k1, k2, m1, m2 = kernel_arrays(params, rates, t)
    p = spec.p
    q = np.sqrt(p * (1 - p))
    n = len(t)
    out = np.zeros((n, 4, 4), dtype=complex)
    g0, gr = rates.gamma0, rates.gammaR
    kind = spec.kind
    P = np.array([0, 1, 1, 0]) / np.sqrt(2)
    M = np.array([0, 1, -1, 0]) / np.sqrt(2)
    proj_p = np.outer(P, P)
    proj_m = np.outer(M, M)
    if kind is ScenarioKind.CLASS_A:
        out[:, 3, 3] = p * np.exp(-4 * g0 * t)
        out[:, 3, 0] = q * u
        out[:, 0, 3] = q * np.conj(u)
        out += (p * (k1 - k2))[:, None, None] * proj_m
        out += (p * (k1 + k2))[:, None, None] * proj_p
        out[:, 0, 0] = 1 - p * np.exp(-4 * g0 * t) - 2 * p * k1
    elif kind is ScenarioKind.BELL_MINUS:
        w = np.exp(-2 * (g0 - gr) * t)
        out += w[:, None, None] * proj_m
        out[:, 0, 0] = 1 - w
    elif kind is ScenarioKind.BELL_PLUS:
        w = np.exp(-2 * (g0 + gr) * t)
        out += w[:, None, None] * proj_p
        out[:, 0, 0] = 1 - w
    elif kind is ScenarioKind.FACTORIZED_GROUND:
        o, a, b = 0, 1, 2
        out[:, b, b] = p * np.abs(vp) ** 2
        out[:, a, a] = p * np.abs(vm) ** 2
        out[:, a, b] = p * vm * np.conj(vp)
        out[:, b, a] = p * vp * np.conj(vm)
        out[:, b, o] = q * vp
        out[:, a, o] = q * vm
        out[:, o, b] = q * np.conj(vp)
        out[:, o, a] = q * np.conj(vm)
        out[:, o, o] = 1 - p * (np.abs(vp) ** 2 + np.abs(vm) ** 2)
    else:
        o, a, b, d = 0, 1, 2, 3
        out[:, d, d] = p * np.exp(-4 * g0 * t)
        out[:, d, a] = q * u * np.conj(vp)
        out[:, d, b] = q * u * np.conj(vm)
        out[:, a, o] = q * m1
        out[:, b, o] = q * m2
        out[:, a, a] = (1 - p) * np.abs(vp) ** 2 + p * k1
        out[:, b, b] = (1 - p) * np.abs(vm) ** 2 + p * k1
        out[:, a, b] = (1 - p) * vp * np.conj(vm) + p * k2
        for i, j in ((d, a), (d, b), (a, o), (b, o), (a, b)):
            out[:, j, i] = np.conj(out[:, i, j])
        out[:, o, o] = 1 - out[:, d, d] - out[:, a, a] - out[:, b, b]
    return out


def evolve_scenario(spec: ScenarioSpec, cross_check: bool = False) -> Trajectory:
    """Evolve the scenario with the generic propagator.

    With ``cross_check`` the result is compared against
    :func:`closed_form_states` and a :class:`ConsistencyError` is raised on a
    mismatch above 1e-10.
    """
    traj = propagate_grid(build_initial(spec), spec.params, spec.tgrid)
    traj.metadata["scenario"] = spec.kind.value
    traj.metadata["p"] = spec.p
    if cross_check:
        ref = closed_form_states(spec)
        err = float(np.max(np.abs(ref - traj.states)))
        traj.metadata["closed_form_error"] = err
        if err > CROSS_CHECK_TOL:
            raise ConsistencyError(f"{spec.kind.value}: propagator and closed form differ by {err:.3e}")
    return traj


@dataclass(frozen=True)
class QubitReduced:
    """Single-qubit reduced state; ``coherence`` is |<0|rho|1>|."""

    matrix: np.ndarray
    which_qubit: int

    @property
    def coherence(self) -> float:
        return float(abs(self.matrix[0, 1]))


def partial_trace(states: np.ndarray, which: int) -> np.ndarray:
    """Reduced 2x2 matrices of qubit ``which`` for an array of 4x4 states."""
    r = np.asarray(states).reshape(np.shape(states)[:-2] + (2, 2, 2, 2))
    if which == 1:
        return np.einsum("...ikjk->...ij", r)
    if which == 2:
        return np.einsum("...kikj->...ij", r)
    raise DomainError("which must be 1 or 2")


def reduce_qubit(rho: DensityMatrix4, which: int) -> QubitReduced:
    """Partial trace over the other qubit."""
    m = rho.to(Basis.COMPUTATIONAL).entries
    return QubitReduced(partial_trace(m, which), which)


@dataclass
class DecoherenceReport:
    """Coherence of both qubits against the isolated-qubit baseline sqrt(p(1-p)) e^{-G0 t}."""

    times: np.ndarray
    gamma0_t: np.ndarray
    coherence_q1: np.ndarray
    coherence_q2: np.ndarray
    baseline: np.ndarray

    @property
    def ratio_q1(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coherence_q1 / self.baseline

    def rows(self):
        for i in range(len(self.times)):
            yield (self.gamma0_t[i], self.coherence_q1[i], self.coherence_q2[i], self.baseline[i],
                   self.ratio_q1[i])


def decoherence_report(spec: ScenarioSpec) -> DecoherenceReport:
    traj = evolve_scenario(spec)
    rates = traj.metadata["rates"]
    r1 = partial_trace(traj.states, 1)
    r2 = partial_trace(traj.states, 2)
    t = traj.times
    base = np.sqrt(spec.p * (1 - spec.p)) * np.exp(-rates.gamma0 * t)
    return DecoherenceReport(t, rates.gamma0 * t, np.abs(r1[:, 0, 1]), np.abs(r2[:, 0, 1]), base)


def late_decay_exponent(report: DecoherenceReport, window=(6.0, 10.0)) -> float:
    """Least-squares slope of -log(coherence_q1) per unit Gamma_0 t over ``window``."""
    sel = (report.gamma0_t >= window[0]) & (report.gamma0_t <= window[1])
    x = report.gamma0_t[sel]
    y = np.log(report.coherence_q1[sel])
    return float(-np.polyfit(x, y, 1)[0])
