"""Kernel functions u, v+-, kappa_1,2 and mu_1,2 that fix the reduced propagator."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError
from .rates import Rates, SystemParams, sinc_separation

# |Gamma_0 - Gamma_r| below this fraction of Gamma_0 uses the series branch for kappa
DEGENERACY_THRESHOLD = 1e-6


@dataclass(frozen=True)
class PropagatorKernel:
    """The seven scalar functions at a single time ``t``.

    ``rates`` and ``omega0`` record what the kernel was evaluated for so that
    the propagator can refuse mismatched inputs.
    """

    t: float
    u: complex
    v_plus: complex
    v_minus: complex
    kappa1: float
    kappa2: float
    mu1: complex
    mu2: complex
    rates: Rates | None = None
    omega0: float | None = None

    def as_tuple(self):
        return (self.u, self.v_plus, self.v_minus, self.kappa1, self.kappa2, self.mu1, self.mu2)


def _check_time(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("time must be finite")
    if np.any(arr < 0):
        raise DomainError("time must be non-negative")
    return arr


def _phi(x):
    """(1 - exp(-x)) / x with the x -> 0 limit, vectorized."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    out = -np.expm1(-safe) / safe
    series = 1 - x / 2 + x * x / 6 - x**3 / 24
    return np.where(small, series, out)


def eval_u_v(rates: Rates, omega0: float, t):
    """Pole-approximated u(t) and v+-(t).

    Returns
    -------
    u, v_plus, v_minus : complex or ndarray
    """
    t = _check_time(t)
    g0, gr, s = rates.gamma0, rates.gammaR, rates.sigma
    u = np.exp((-2j * omega0 - 2 * g0) * t)
    # combine exponents before exponentiating to keep late times finite
    a = np.exp((-1j * omega0 - g0 - 1j * s - gr) * t)
    b = np.exp((-1j * omega0 - g0 + 1j * s + gr) * t)
    v_plus = 0.5 * (a + b)
    v_minus = 0.5 * (a - b)
    if u.ndim == 0:
        return complex(u), complex(v_plus), complex(v_minus)
    return u, v_plus, v_minus


def kappa_closed(rates: Rates, t):
    """kappa(t) = e^{-2 G0 t} (e^{-G0 t} - e^{-Gr t})^2 / (G0 - Gr).

    Written as e^{-2(G0+Gr)t} d t^2 phi(d t)^2 with d = G0 - Gr, which is exact
    and free of 0/0 as d -> 0.
    """
    t = _check_time(t)
    g0, gr = rates.gamma0, rates.gammaR
    d = g0 - gr
    if abs(d) < DEGENERACY_THRESHOLD * g0:
        # second-order series in d t
        x = d * t
        val = np.exp(-2 * (g0 + gr) * t) * d * t**2 * (1 - x + 7 * x * x / 12)
    else:
        val = np.exp(-2 * (g0 + gr) * t) * d * t**2 * _phi(d * t) ** 2
    return float(val) if val.ndim == 0 else val


def eval_kappa_closed(rates: Rates, t):
    """Delta-approximated (kappa1, kappa2) = (G0 kappa, Gr kappa)."""
    k = kappa_closed(rates, t)
    return rates.gamma0 * k, rates.gammaR * k


def mu_plus_i_nu(rates: Rates, params: SystemParams, t):
    """The complex function mu(t) + i nu(t)."""
    t = _check_time(t)
    g0, gr, sig = rates.gamma0, rates.gammaR, rates.sigma
    w = params.omega0
    s = sinc_separation(params.omega0_r)
    denom = g0 + 2 * s * gr - 1j * sig * (1 + 2 * s)
    d = g0 - gr
    if denom == 0:
        # only reachable with all rates zero, where the leading factor vanishes
        val = np.zeros_like(t, dtype=complex)
        return complex(val) if val.ndim == 0 else val
    # (e^{-G0 t} - e^{-Gr t}) = -e^{-Gr t} d t phi(d t)
    diff = -d * t * _phi(d * t)
    lead = np.exp((-1j * w - g0 - gr) * t) * diff
    tail = np.exp((-g0 - 2 * s * (gr - 1j * sig)) * t) - np.exp(1j * sig * t)
    val = lead * tail / denom
    return complex(val) if val.ndim == 0 else val


def eval_mu_nu(rates: Rates, params: SystemParams, t):
    """(mu1, mu2) = (G0, Gr) * (mu + i nu)."""
    m = mu_plus_i_nu(rates, params, t)
    return rates.gamma0 * m, rates.gammaR * m


def evaluate_kernel(params: SystemParams, rates: Rates, t: float) -> PropagatorKernel:
    """All seven kernel functions at a scalar time."""
    t = float(_check_time(t))
    u, vp, vm = eval_u_v(rates, params.omega0, t)
    k1, k2 = eval_kappa_closed(rates, t)
    m1, m2 = eval_mu_nu(rates, params, t)
    return PropagatorKernel(t, u, vp, vm, k1, k2, m1, m2, rates=rates, omega0=params.omega0)


# --- exact k-integrals for kappa --------------------------------------------


@dataclass(frozen=True)
class KappaQuadrature:
    """Result of :func:`eval_kappa_exact` with diagnostics."""

    kappa1: float
    kappa2: float
    abserr: float
    cutoff_change: float


def _lorentz_log_antider(k, k0, gam):
    # antiderivative of k / ((k - k0)^2 + gam^2)
    x = k - k0
    if gam == 0.0:
        return math.log(abs(x)) - k0 / x
    return 0.5 * math.log(x * x + gam * gam) + (k0 / gam) * math.atan(x / gam)


def _quad(f, a, b, **kw):
    if b <= a:
        return 0.0, 0.0
    kw.setdefault("limit", 400)
    val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-10, **kw)
    return val, err


def _quad_trig(f, a, b, omega, phase):
    """Integral of f(k) * cos(omega k + phase) over [a, b] using QAWO weights."""
    if b <= a:
        return 0.0, 0.0
    if omega == 0.0:
        return _quad(lambda k: f(k) * math.cos(phase), a, b)
    c, s = math.cos(phase), math.sin(phase)
    vc, ec = integrate.quad(f, a, b, weight="cos", wvar=omega, epsabs=0.0, epsrel=1e-10, limit=400)
    vs, es = integrate.quad(f, a, b, weight="sin", wvar=omega, epsabs=0.0, epsrel=1e-10, limit=400)
    return c * vc - s * vs, abs(c) * ec + abs(s) * es


def _kappa_integrals(params: SystemParams, rates: Rates, t: float, k_max: float):
    g0, gr, sig = rates.gamma0, rates.gammaR, rates.sigma
    k0 = params.omega0 - sig
    gam = abs(g0 - gr)
    r = params.r
    # numerator A + B - 2C cos(x t) = D + 2C (1 - cos(x t)), x = k - k0
    D = float(np.exp(-2 * gr * t) * (np.expm1(-(g0 - gr) * t)) ** 2)
    C = math.exp(-(g0 + gr) * t)
    half = min(max(50 * gam, 50.0 / t), 0.5 * k0)
    lo, hi = k0 - half, k0 + half
    errs = []

    def lor(k):
        x = k - k0
        return 1.0 / (x * x + gam * gam)

    # kappa1 weight k, kappa2 weight sin(k r) / r
    if r > 0:
        def w2(k):
            return math.sin(k * r) / r
    else:
        def w2(k):
            return k

    # central window: D part via tan substitution, (1 - cos) part directly
    I1 = I2 = 0.0
    if D > 0.0 and gam > 0.0:
        th = math.atan(half / gam)

        def sub(f):
            return lambda th_: f(k0 + gam * math.tan(th_)) / gam

        v, e = _quad(sub(lambda k: k), -th, th)
        I1 += D * v
        errs.append(D * e)
        v, e = _quad(sub(w2), -th, th)
        I2 += D * v
        errs.append(D * e)

    def osc_core(k):
        x = k - k0
        y = x * t
        # (1 - cos y) / (x^2 + gam^2) without cancellation
        one_minus_cos = 2.0 * math.sin(0.5 * y) ** 2
        return one_minus_cos / (x * x + gam * gam)

    v, e = _quad(lambda k: k * osc_core(k), lo, hi, points=[k0])
    I1 += 2 * C * v
    errs.append(2 * C * e)
    v, e = _quad(lambda k: w2(k) * osc_core(k), lo, hi, points=[k0])
    I2 += 2 * C * v
    errs.append(2 * C * e)

    # outer regions: (D + 2C) * non-oscillatory part minus 2C * cos part
    for a, b in ((0.0, lo), (hi, k_max)):
        if b <= a:
            continue
        v1 = _lorentz_log_antider(b, k0, gam) - _lorentz_log_antider(a, k0, gam)
        I1 += (D + 2 * C) * v1
        vc, ec = _quad_trig(lambda k: k * lor(k), a, b, t, -k0 * t)
        I1 -= 2 * C * vc
        errs.append(2 * C * ec)
        if r > 0:
            vs, es = _quad_trig(lambda k: lor(k) / r, a, b, r, -math.pi / 2)
            I2 += (D + 2 * C) * vs
            errs.append((D + 2 * C) * es)
            # sin(k r) cos((k - k0) t) = [sin(k(r+t) - k0 t) + sin(k(r-t) + k0 t)] / 2
            va, ea = _quad_trig(lambda k: lor(k) / r, a, b, r + t, -k0 * t - math.pi / 2)
            omega_b, phase_b = r - t, k0 * t - math.pi / 2
            if omega_b < 0:
                omega_b, phase_b = -omega_b, -phase_b
            vb, eb = _quad_trig(lambda k: lor(k) / r, a, b, omega_b, phase_b)
            I2 -= C * (va + vb)
            errs.extend([C * ea, C * eb])
        else:
            I2 += (D + 2 * C) * v1
            I2 -= 2 * C * vc
    pref = params.lam**2 / (2 * math.pi**2) * math.exp(-2 * g0 * t)
    return pref * I1, pref * I2, pref * math.fsum(errs)


def eval_kappa_exact(params: SystemParams, rates: Rates, t: float, k_max: float | None = None,
                     rtol: float = 1e-6, full_output: bool = False):
    """kappa_1,2 from their Lorentzian-weighted k-integrals without the delta replacement.

    The integral is cut at ``k_max`` (default ``50 * omega0``) and re-evaluated
    at ``2 * k_max``; the change is reported in ``cutoff_change``. The kappa_1
    integrand decays only like 1/k, so that change is logarithmic in the cutoff
    and is not part of the ``rtol`` check, which applies to the quadrature error.

    Raises
    ------
    NumericalError
        If the accumulated quadrature error exceeds ``rtol`` relative.
    """
    t = float(_check_time(t))
    if k_max is None:
        k_max = 50.0 * params.omega0
    if k_max < 20.0 * params.omega0:
        raise DomainError("k_max must be at least 20 omega0")
    if t == 0.0:
        res = KappaQuadrature(0.0, 0.0, 0.0, 0.0)
        return res if full_output else (0.0, 0.0)
    k1, k2, err = _kappa_integrals(params, rates, t, k_max)
    k1b, _, _ = _kappa_integrals(params, rates, t, 2 * k_max)
    scale = max(abs(k1), 1e-300)
    if err > rtol * scale:
        raise NumericalError(f"kappa quadrature reached only {err / scale:.2e} relative error",
                             achieved=err / scale)
    res = KappaQuadrature(k1, k2, err, abs(k1b - k1) / scale)
    return res if full_output else (k1, k2)
