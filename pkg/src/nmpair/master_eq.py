"""Time-local master equation: alpha coefficients, F_t/G_t and generators.

Superoperators act on column-stacked (Fortran order) density matrices in
the Bell basis ordered (O, -, +, I).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError, NumericalRangeError
from .evolution import (
    BELL_TRANSFORM,
    Basis,
    DensityMatrix4,
    Trajectory,
    apply_kernel,
    kernel_arrays,
)
from .propagator import _phi
from .rates import Rates, SystemParams, compute_rates

DEFAULT_HORIZON = 30.0
MARKOV_ALPHAS = np.array([0, -2, 2, 0, 2, 2], dtype=complex)
COND_LIMIT = 1e12

_O, _M, _P, _I = 0, 1, 2, 3


@dataclass(frozen=True)
class AlphaCoefficients:
    t: float
    alpha: np.ndarray

    def __getitem__(self, i):
        """1-based access, ``alphas[5]`` is alpha_5."""
        return self.alpha[i - 1]


@dataclass(frozen=True)
class GeneratorMatrix:
    t: float
    matrix: np.ndarray


# --- alpha coefficients -----------------------------------------------------


def _munu_terms(rates: Rates, omega0: float):
    """mu + i nu as sum_j c_j exp(l_j t); returns (c, l) arrays."""
    g0, gr, sig = rates.gamma0, rates.gammaR, rates.sigma
    s = rates.ratio
    A = 1.0 / (g0 + 2 * s * gr - 1j * sig * (1 + 2 * s))
    a = -1j * omega0 - g0
    b = -g0 - 2 * s * (gr - 1j * sig)
    lam = np.array([a - g0 + b, a - g0 + 1j * sig, a - gr + b, a - gr + 1j * sig])
    c = A * np.array([1, -1, -1, 1])
    return c, lam


def munu_and_derivative(rates: Rates, omega0: float, t: float):
    """(mu + i nu, d/dt (mu + i nu)) at time t."""
    c, lam = _munu_terms(rates, omega0)
    e = c * np.exp(lam * t)
    return complex(e.sum()), complex((lam * e).sum())


def alpha_coefficients(rates: Rates, omega0: float, t: float,
                       horizon: float = DEFAULT_HORIZON) -> AlphaCoefficients:
    """The six coefficients alpha_1..alpha_6 with analytic time derivatives.

    mu and nu are the real and imaginary parts of mu + i nu. Growing
    reweightings are merged with the decaying factors into a single exponent.

    Raises
    ------
    NumericalRangeError
        For Gamma_0 t beyond ``horizon``.
    """
    g0, gr, sig = rates.gamma0, rates.gammaR, rates.sigma
    if t < 0:
        raise NumericalRangeError("alpha coefficients need t >= 0")
    if g0 * t > horizon:
        raise NumericalRangeError(f"Gamma_0 t = {g0 * t:.3g} beyond horizon {horizon}")
    f, fp = munu_and_derivative(rates, omega0, t)
    mu, nu = f.real, f.imag
    mup, nup = fp.real, fp.imag
    b2 = 1j * omega0 + g0 - 1j * sig - gr
    b3 = 1j * omega0 + g0 + 1j * sig + gr
    a1 = 1j * (nup + b2 * nu) * np.exp((b2 + 2 * g0 + 2j * sig + 2 * gr) * t)
    a2 = (mup + b2 * mu) * np.exp((b2 + 2 * g0) * t)
    a3 = (mup + b3 * mu) * np.exp((b3 + 2 * g0) * t)
    a4 = 1j * (nup + b3 * nu) * np.exp((b3 + 2 * g0 - 2j * sig - 2 * gr) * t)
    d = g0 - gr
    # kappa = d e^{-2(G0+Gr)t} g(t), g = t^2 phi(dt)^2, g' = 2 t phi(dt) e^{-dt}
    ph = float(_phi(d * t))
    g = t * t * ph * ph
    gp = 2 * t * ph * np.exp(-d * t)
    a5 = 2 * np.expm1(d * t) if d != 0 else 0.0
    a6 = d * np.exp(2 * d * t) * (gp - 4 * gr * g)
    return AlphaCoefficients(t, np.array([a1, a2, a3, a4, a5, a6], dtype=complex))


# --- operators in the Bell basis -------------------------------------------


def _ket(i):
    v = np.zeros(4, dtype=complex)
    v[i] = 1
    return v


def _A(a, b):
    return np.outer(_ket(a), _ket(b))


_SM = np.array([[0, 1], [0, 0]], dtype=complex)
_B = BELL_TRANSFORM
LOWERING = (
    _B.conj().T @ np.kron(_SM, np.eye(2)) @ _B,
    _B.conj().T @ np.kron(np.eye(2), _SM) @ _B,
)


def free_hamiltonian(omega0: float) -> np.ndarray:
    return np.diag([0.0, omega0, omega0, 2 * omega0]).astype(complex)


def dipole_hamiltonian(sigma: float, printed_sign: bool = False) -> np.ndarray:
    """sigma (|+><+| - |-><-|), the exchange coupling consistent with v+-.

    ``printed_sign`` flips it to -sigma (|+><+| - |-><-|).
    """
    sgn = -1.0 if printed_sign else 1.0
    return sgn * sigma * (_A(_P, _P) - _A(_M, _M))


def lindblad_dissipator(rho: np.ndarray, rates: Rates) -> np.ndarray:
    """sum_ij G_ij (2 S-_j rho S+_i - S+_i S-_j rho - rho S+_i S-_j)."""
    G = np.array([[rates.gamma0, rates.gammaR], [rates.gammaR, rates.gamma0]])
    out = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        Sp_i = LOWERING[i].conj().T
        for j in range(2):
            Sm_j = LOWERING[j]
            K = Sp_i @ Sm_j
            out += G[i, j] * (2 * Sm_j @ rho @ Sp_i - K @ rho - rho @ K)
    return out


def F_superop(rho: np.ndarray, al: np.ndarray) -> np.ndarray:
    a1, a3, a5 = al[0], al[2], al[4]
    AOI, ApI, App, Apm = _A(_O, _I), _A(_P, _I), _A(_P, _P), _A(_P, _M)
    H = lambda X: X.conj().T  # noqa: E731
    return (
        -(2 - a5) * (ApI @ rho @ H(ApI) - AOI @ rho @ H(AOI))
        - (2 - a3) * AOI @ rho @ App
        - (2 - np.conj(a3)) * App @ rho @ H(AOI)
        + a1 * AOI @ rho @ Apm
        + np.conj(a1) * H(Apm) @ rho @ H(AOI)
    )


def G_superop(rho: np.ndarray, al: np.ndarray) -> np.ndarray:
    a2, a4, a6 = al[1], al[3], al[5]
    AOI, AmI, Amm, Apm = _A(_O, _I), _A(_M, _I), _A(_M, _M), _A(_P, _M)
    H = lambda X: X.conj().T  # noqa: E731
    return (
        -(2 - a6) * (AmI @ rho @ H(AmI) - AOI @ rho @ H(AOI))
        + (2 + a2) * AOI @ rho @ Amm
        + (2 + np.conj(a2)) * Amm @ rho @ H(AOI)
        + a4 * AOI @ rho @ H(Apm)
        + np.conj(a4) * H(Apm) @ rho @ H(AOI)
    )


def lindblad_like_rhs(rho: np.ndarray, rates: Rates, omega0: float, alphas=None,
                      printed_sign: bool = False) -> np.ndarray:
    """Right-hand side on a raw Bell-basis array; ``alphas=None`` drops F_t and G_t."""
    H = free_hamiltonian(omega0) + dipole_hamiltonian(rates.sigma, printed_sign)
    out = -1j * (H @ rho - rho @ H) + lindblad_dissipator(rho, rates)
    if alphas is not None:
        al = np.asarray(alphas.alpha if isinstance(alphas, AlphaCoefficients) else alphas)
        out = out + (rates.gamma0 + rates.gammaR) * F_superop(rho, al) \
            + (rates.gamma0 - rates.gammaR) * G_superop(rho, al)
    return out


def apply_lindblad_like(rho: DensityMatrix4, params: SystemParams, t: float, alphas=None,
                        rates: Rates | None = None, printed_sign: bool = False) -> DensityMatrix4:
    """d rho / dt from the Hamiltonian, Lindblad, F_t and G_t terms.

    ``alphas`` defaults to :func:`alpha_coefficients` at ``t``. The result is
    returned in the basis of ``rho``; it is a traceless Hermitian matrix, so the
    returned object carries entries that need not be unit trace.
    """
    if rates is None:
        rates = compute_rates(params)
    if alphas is None:
        alphas = alpha_coefficients(rates, params.omega0, t)
    m = rho.to(Basis.BELL).entries
    d = lindblad_like_rhs(m, rates, params.omega0, alphas, printed_sign)
    if rho.basis is Basis.COMPUTATIONAL:
        d = _B @ d @ _B.conj().T
    return _RawMatrix(d, rho.basis)


class _RawMatrix(DensityMatrix4):
    """A 4x4 matrix with basis tag but without density-matrix semantics."""


def superop_of(fn) -> np.ndarray:
    """16x16 matrix of a linear map on 4x4 arrays (column stacking)."""
    M = np.empty((16, 16), dtype=complex)
    for col in range(16):
        E = np.zeros((4, 4), dtype=complex)
        E[col % 4, col // 4] = 1.0
        M[:, col] = fn(E).reshape(-1, order="F")
    return M


_UNITS_BELL = np.zeros((16, 4, 4), dtype=complex)
for _c in range(16):
    _UNITS_BELL[_c, _c % 4, _c // 4] = 1.0
_UNITS_COMP = _B @ _UNITS_BELL @ _B.conj().T


def propagator_matrices(params: SystemParams, rates: Rates, times) -> np.ndarray:
    """M_t in the Bell basis for each t in ``times``; shape (n, 16, 16)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    kern = kernel_arrays(params, rates, times)
    out = np.empty((len(times), 16, 16), dtype=complex)
    for i in range(len(times)):
        k = tuple(x[i] for x in kern)
        img = _B.conj().T @ apply_kernel(_UNITS_COMP, *k) @ _B
        out[i] = img.transpose(0, 2, 1).reshape(16, 16).T
    return out


def _fd_derivative(params, rates, t, h):
    if t >= 2 * h:
        ts = t + h * np.array([-2, -1, 1, 2])
        M = propagator_matrices(params, rates, ts)
        return (M[0] - 8 * M[1] + 8 * M[2] - M[3]) / (12 * h)
    ts = t + h * np.arange(5)
    M = propagator_matrices(params, rates, ts)
    return (-25 * M[0] + 48 * M[1] - 36 * M[2] + 16 * M[3] - 3 * M[4]) / (12 * h)


def generator_from_propagator(params: SystemParams, t: float, dt: float | None = None,
                              rates: Rates | None = None) -> GeneratorMatrix:
    """L_t = dM_t/dt M_t^{-1} with a fourth-order finite difference for dM/dt.

    The rho^OO row is set to minus the sum of the other population rows, so
    the trace functional annihilates L_t exactly.

    Raises
    ------
    NumericalRangeError
        If M_t is too ill-conditioned to invert reliably.
    """
    if rates is None:
        rates = compute_rates(params)
    if dt is None:
        dt = 1e-3 / params.omega0
    M = propagator_matrices(params, rates, [t])[0]
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalRangeError(f"propagator condition number {cond:.3e} exceeds {COND_LIMIT:.0e}; "
                                  "use a shorter time horizon")
    Md = _fd_derivative(params, rates, t, dt)
    L = np.linalg.solve(M.T, Md.T).T
    # the rho^OO row is fixed by trace preservation; taking it from the other
    # populations avoids the rounding that ||M^{-1}|| ~ e^{4 Gamma_0 t} amplifies
    L[0] = -(L[5] + L[10] + L[15])
    return GeneratorMatrix(t, L)


def lindblad_like_generator(params: SystemParams, t: float, rates: Rates | None = None,
                            alphas=None, markov: bool = False, printed_sign: bool = False) -> GeneratorMatrix:
    """16x16 matrix of the assembled operator form (``markov`` drops F_t and G_t)."""
    if rates is None:
        rates = compute_rates(params)
    if markov:
        alphas = None
    elif alphas is None:
        alphas = alpha_coefficients(rates, params.omega0, t)
    return GeneratorMatrix(t, superop_of(lambda X: lindblad_like_rhs(X, rates, params.omega0, alphas,
                                                                       printed_sign)))


def trace_functional() -> np.ndarray:
    return np.eye(4).reshape(-1, order="F")


# --- integration -------------------------------------------------------------


class GeneratorSource(enum.Enum):
    PROPAGATOR_DERIVED = "propagator_derived"
    PRINTED_ALPHAS = "printed_alphas"
    LINDBLAD = "lindblad"


def _frame_ops(omega0):
    h = np.array([0.0, omega0, omega0, 2 * omega0])
    # i[H0, X] as a diagonal superoperator on vec(X)
    return 1j * (h[np.arange(16) % 4] - h[np.arange(16) // 4])


def integrate_master(rho0: DensityMatrix4, params: SystemParams, tgrid,
                     generator_source: GeneratorSource | str = GeneratorSource.PROPAGATOR_DERIVED,
                     rates: Rates | None = None, rtol: float = 1e-9, atol: float = 1e-12,
                     max_step: float | None = None) -> Trajectory:
    """Integrate d rho/dt = L_t rho with an adaptive order-8 Runge-Kutta scheme.

    The equation is solved in the frame rotating with the free Hamiltonian,
    where the propagator-derived and Lindblad generators vary on the slow
    1/Gamma_0 scale; samples are rotated back before returning.

    Raises
    ------
    NumericalError
        If the integrator fails (step-size collapse).
    """
    src = GeneratorSource(generator_source)
    if rates is None:
        rates = compute_rates(params)
    t = np.asarray(tgrid, dtype=float)
    w = params.omega0
    diag = _frame_ops(w)
    phase = -diag / 1j  # vec(U X U^dag) = exp(-i (h_a - h_b) t) vec(X)

    if src is GeneratorSource.LINDBLAD:
        L0 = lindblad_like_generator(params, 0.0, rates, markov=True).matrix

        def gen(tt):
            return L0
    elif src is GeneratorSource.PROPAGATOR_DERIVED:
        def gen(tt):
            return generator_from_propagator(params, tt, rates=rates).matrix
    else:
        def gen(tt):
            return lindblad_like_generator(params, tt, rates).matrix

    def rhs(tt, y):
        # rotating frame: y = vec(U^dag rho U), U = exp(-i H0 t)
        rot = np.exp(1j * phase * tt)
        return (gen(tt) @ (y * rot)) / rot + diag * y

    y0 = rho0.to(Basis.BELL).entries.reshape(-1, order="F").astype(complex)
    kw = {}
    if max_step is not None:
        kw["max_step"] = max_step
    sol = solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t, rtol=rtol, atol=atol, **kw)
    if not sol.success:
        raise NumericalError(f"integration failed at t={sol.t[-1] if len(sol.t) else t[0]}: {sol.message}")
    ys = sol.y.T * np.exp(1j * phase[None, :] * t[:, None])
    states = ys.reshape(len(t), 4, 4).transpose(0, 2, 1)
    model = "markov_lindblad" if src is GeneratorSource.LINDBLAD else "nonmarkov"
    traj = Trajectory(model, params, t, states, Basis.BELL,
                      {"rates": rates, "generator_source": src.value, "nfev": sol.nfev})
    traj.validate()
    return traj
