"""Two-qubit density matrices, basis changes and the reduced propagator.

Computational basis order is |00>, |01>, |10>, |11> and the Bell basis order
is |O>, |->, |+>, |I> with |+-> = (|01> +- |10>)/sqrt(2), |O> = |00> and
|I> = |11>. Matrix entries follow rho[a, b] = <a|rho|b>.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UsageError
from .propagator import (
    PropagatorKernel,
    eval_kappa_closed,
    eval_mu_nu,
    eval_u_v,
    evaluate_kernel,
    mu_plus_i_nu,
)
from .rates import Rates, SystemParams, compute_rates

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-9

_S2 = 1 / np.sqrt(2)
# columns are |O>, |->, |+>, |I> expressed in the computational basis
BELL_TRANSFORM = np.array(
    [
        [1, 0, 0, 0],
        [0, _S2, _S2, 0],
        [0, -_S2, _S2, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)

BELL_LABELS = ("O", "-", "+", "I")
COMP_LABELS = ("00", "01", "10", "11")


class Basis(enum.Enum):
    COMPUTATIONAL = "computational"
    BELL = "bell"


def bell_index(label: str) -> int:
    return BELL_LABELS.index(label)


@dataclass(frozen=True)
class DensityMatrix4:
    """A 4x4 density matrix tagged with its basis."""

    entries: np.ndarray
    basis: Basis = Basis.COMPUTATIONAL

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise DomainError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("density matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_ket(cls, psi, basis: Basis = Basis.COMPUTATIONAL) -> "DensityMatrix4":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), basis)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.entries) - 1))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def violations(self, positivity_tol: float = POSITIVITY_TOL) -> list[str]:
        """Invariant violations as human readable strings (empty when valid)."""
        out = []
        if self.hermiticity_error() > HERMITIAN_TOL:
            out.append(f"hermiticity error {self.hermiticity_error():.3e}")
        if self.trace_error() > TRACE_TOL:
            out.append(f"trace error {self.trace_error():.3e}")
        lam = self.min_eigenvalue()
        if lam < -positivity_tol:
            out.append(f"negative eigenvalue {lam:.3e}")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def to(self, basis: Basis) -> "DensityMatrix4":
        if basis is self.basis:
            return self
        return to_bell_basis(self) if basis is Basis.BELL else to_computational_basis(self)

    def element(self, a: str, b: str) -> complex:
        """Matrix element by label, e.g. ``('+', '+')`` or ``('01', '00')``."""
        labels = BELL_LABELS if self.basis is Basis.BELL else COMP_LABELS
        return complex(self.entries[labels.index(a), labels.index(b)])


def to_bell_basis(rho: DensityMatrix4) -> DensityMatrix4:
    if rho.basis is not Basis.COMPUTATIONAL:
        raise UsageError("to_bell_basis expects a computational-basis matrix")
    B = BELL_TRANSFORM
    return DensityMatrix4(B.conj().T @ rho.entries @ B, Basis.BELL)


def to_computational_basis(rho: DensityMatrix4) -> DensityMatrix4:
    if rho.basis is not Basis.BELL:
        raise UsageError("to_computational_basis expects a Bell-basis matrix")
    B = BELL_TRANSFORM
    return DensityMatrix4(B @ rho.entries @ B.conj().T, Basis.COMPUTATIONAL)


# --- the propagator map -----------------------------------------------------


def apply_kernel(rho, u, v_plus, v_minus, kappa1, kappa2, mu1, mu2):
    """Apply the reduced propagator to computational-basis matrices.

    The map is complex linear in ``rho`` (Hermiticity is not assumed), so it
    also defines the 16x16 superoperator. Kernel values may be arrays of
    shape ``(n,)``, in which case ``rho`` broadcasts to ``(n, 4, 4)``.

    The single- and double-excitation amplitudes act as rho -> K rho K^dagger
    with K = diag(1, [[v+, v-], [v-, v+]], u); the photon-exchange feeds add
    kappa terms to the single-excitation block and mu terms to the
    coherences with |00>; rho_00,00 closes the trace.
    """
    u, vp, vm = (np.asarray(x, dtype=complex) for x in (u, v_plus, v_minus))
    k1, k2 = (np.asarray(x, dtype=float) for x in (kappa1, kappa2))
    m1, m2 = (np.asarray(x, dtype=complex) for x in (mu1, mu2))
    shape = np.broadcast_shapes(u.shape, np.shape(rho)[:-2])
    rho = np.broadcast_to(np.asarray(rho, dtype=complex), shape + (4, 4))
    K = np.zeros(shape + (4, 4), dtype=complex)
    K[..., 0, 0] = 1.0
    K[..., 1, 1] = vp
    K[..., 2, 2] = vp
    K[..., 1, 2] = vm
    K[..., 2, 1] = vm
    K[..., 3, 3] = u
    out = K @ rho @ np.conj(np.swapaxes(K, -1, -2))
    o, a, b, d = 0, 1, 2, 3
    rII = rho[..., d, d]
    out[..., a, a] += k1 * rII
    out[..., b, b] += k1 * rII
    out[..., a, b] += k2 * rII
    out[..., b, a] += k2 * rII
    out[..., a, o] += m1 * rho[..., d, a] + m2 * rho[..., d, b]
    out[..., b, o] += m1 * rho[..., d, b] + m2 * rho[..., d, a]
    out[..., o, a] += np.conj(m1) * rho[..., a, d] + np.conj(m2) * rho[..., b, d]
    out[..., o, b] += np.conj(m1) * rho[..., b, d] + np.conj(m2) * rho[..., a, d]
    tr = np.trace(rho, axis1=-2, axis2=-1)
    out[..., o, o] = tr - out[..., a, a] - out[..., b, b] - out[..., d, d]
    return out


def _check_kernel(kernel: PropagatorKernel, rates: Rates, omega0: float, t: float):
    if abs(kernel.t - t) > 1e-12 * max(1.0, abs(t)):
        raise UsageError(f"kernel evaluated at t={kernel.t}, propagation requested at t={t}")
    if kernel.rates is not None and kernel.rates != rates:
        raise UsageError("kernel was evaluated for different rates")
    if kernel.omega0 is not None and kernel.omega0 != omega0:
        raise UsageError("kernel was evaluated for a different omega0")


def propagate(rho0: DensityMatrix4, kernel: PropagatorKernel, rates: Rates, omega0: float,
              t: float) -> DensityMatrix4:
    """rho(t) from rho(0); the result is returned in the basis of ``rho0``.

    Raises
    ------
    UsageError
        If ``kernel`` was not evaluated at ``(rates, omega0, t)``.
    """
    _check_kernel(kernel, rates, omega0, t)
    comp = rho0.to(Basis.COMPUTATIONAL).entries
    out = DensityMatrix4(apply_kernel(comp, *kernel.as_tuple()), Basis.COMPUTATIONAL)
    return out.to(rho0.basis)


def kernel_arrays(params: SystemParams, rates: Rates, tgrid):
    """Kernel values on a time grid as a tuple of arrays (u, v+, v-, k1, k2, m1, m2)."""
    t = np.asarray(tgrid, dtype=float)
    u, vp, vm = eval_u_v(rates, params.omega0, t)
    k1, k2 = eval_kappa_closed(rates, t)
    m1, m2 = eval_mu_nu(rates, params, t)
    return tuple(np.atleast_1d(x) for x in (u, vp, vm, k1, k2, m1, m2))


def superoperator(params: SystemParams, rates: Rates, t: float, basis: Basis = Basis.BELL) -> np.ndarray:
    """16x16 matrix M_t acting on column-stacked (Fortran order) density matrices."""
    kern = evaluate_kernel(params, rates, t).as_tuple()
    B = BELL_TRANSFORM
    M = np.empty((16, 16), dtype=complex)
    for col in range(16):
        E = np.zeros((4, 4), dtype=complex)
        E[col % 4, col // 4] = 1.0
        if basis is Basis.BELL:
            out = B.conj().T @ apply_kernel(B @ E @ B.conj().T, *kern) @ B
        else:
            out = apply_kernel(E, *kern)
        M[:, col] = out.reshape(-1, order="F")
    return M


# --- trajectories ------------------------------------------------------------


@dataclass
class Trajectory:
    """Ordered density-matrix samples with provenance.

    ``states`` has shape ``(n, 4, 4)`` in ``basis``. ``metadata`` collects
    invariant violations (``violations``: list of (index, message)) and the
    worst positivity deficit, which are recorded, never clipped.
    """

    model: str
    params: SystemParams
    times: np.ndarray
    states: np.ndarray
    basis: Basis = Basis.COMPUTATIONAL
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.shape != (len(self.times), 4, 4):
            raise UsageError("states must have shape (len(times), 4, 4)")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise UsageError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def sample(self, i: int) -> DensityMatrix4:
        return DensityMatrix4(self.states[i], self.basis)

    def in_basis(self, basis: Basis) -> "Trajectory":
        if basis is self.basis:
            return self
        B = BELL_TRANSFORM
        if basis is Basis.BELL:
            st = B.conj().T @ self.states @ B
        else:
            st = B @ self.states @ B.conj().T
        return Trajectory(self.model, self.params, self.times, st, basis, dict(self.metadata))

    def element(self, a: str, b: str) -> np.ndarray:
        labels = BELL_LABELS if self.basis is Basis.BELL else COMP_LABELS
        return self.states[:, labels.index(a), labels.index(b)]

    def validate(self, positivity_tol: float = POSITIVITY_TOL) -> dict:
        """Check every sample and store the findings in ``metadata``."""
        viol = []
        worst = np.inf
        for i in range(len(self)):
            s = self.sample(i)
            worst = min(worst, s.min_eigenvalue())
            for msg in s.violations(positivity_tol):
                viol.append((i, msg))
        self.metadata["violations"] = viol
        self.metadata["min_eigenvalue"] = float(worst)
        self.metadata["valid"] = not viol
        return self.metadata


def propagate_grid(rho0: DensityMatrix4, params: SystemParams, tgrid, rates: Rates | None = None,
                   model: str = "nonmarkov") -> Trajectory:
    """Propagate ``rho0`` to every time in ``tgrid`` (strictly increasing, starting at 0)."""
    t = np.asarray(tgrid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise DomainError("tgrid must be a non-empty 1-D sequence")
    if t[0] != 0.0:
        raise DomainError("tgrid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise DomainError("tgrid must be strictly increasing")
    if rates is None:
        rates = compute_rates(params)
    comp = rho0.to(Basis.COMPUTATIONAL).entries
    states = apply_kernel(comp, *kernel_arrays(params, rates, t))
    traj = Trajectory(model, params, t, states, Basis.COMPUTATIONAL, {"rates": rates})
    traj.validate()
    return traj


def printed_bell_propagator(rho0: DensityMatrix4, params: SystemParams, rates: Rates, t: float) -> DensityMatrix4:
    """Bell-basis matrix elements exactly as printed in the source tables (audit only).

    Uses the printed sigma signs, the printed rho--- decay exponent and the
    literal mu/nu split of the coherence feeds. It is kept to measure how far
    that table is from :func:`propagate`; it is not positive in general.
    """
    rho = rho0.to(Basis.BELL).entries
    g0, gr, s = rates.gamma0, rates.gammaR, rates.sigma
    w = params.omega0
    kap = eval_kappa_closed(rates, t)[0] / g0 if g0 else 0.0
    mn = mu_plus_i_nu(rates, params, t)
    mu, nu = mn.real, mn.imag
    O, M, P, I = 0, 1, 2, 3
    R = np.zeros((4, 4), dtype=complex)
    ex = np.exp
    R[I, I] = ex(-4 * g0 * t) * rho[I, I]
    R[I, O] = ex(-2j * w * t - 2 * g0 * t) * rho[I, O]
    R[I, M] = ex(-1j * w * t - 3 * g0 * t + 1j * s * t + gr * t) * rho[I, M]
    R[I, P] = ex(-1j * w * t - 3 * g0 * t - 1j * s * t - gr * t) * rho[I, P]
    R[M, O] = ex(-1j * w * t - g0 * t + 1j * s * t + gr * t) * rho[M, O] + 1j * (g0 + gr) * nu * rho[I, P] \
        + (g0 - gr) * mu * rho[I, M]
    R[P, O] = ex(-1j * w * t - g0 * t - 1j * s * t - gr * t) * rho[P, O] + (g0 + gr) * mu * rho[I, P] \
        + 1j * (g0 - gr) * nu * rho[I, M]
    R[P, P] = ex(-2 * (g0 + gr) * t) * rho[P, P] + (g0 + gr) * kap * rho[I, I]
    R[M, M] = ex(-2 * (g0 + gr) * t) * rho[M, M] + (g0 - gr) * kap * rho[I, I]
    R[P, M] = ex(2j * s * t - 2 * g0 * t) * rho[P, M]
    for i, j in ((I, O), (I, M), (I, P), (M, O), (P, O), (P, M)):
        R[j, i] = np.conj(R[i, j])
    R[O, O] = np.trace(rho) - R[I, I] - R[P, P] - R[M, M]
    return DensityMatrix4(R, Basis.BELL)
