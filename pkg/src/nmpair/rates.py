"""System parameters, special functions and the derived rates Gamma_0, Gamma_r, sigma.

Units: hbar = c = 1. ``omega0`` is an angular frequency, ``r`` a length, so
``omega0 * r`` is dimensionless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

# below this omega0*r the cross rate is replaced by its r -> 0 limit
SMALL_SEPARATION = 1e-8

_SERIES_MAX = 4.0
_CF_EPS = 1e-16
_CF_MAXITER = 200


def _check_arg(x: float, name: str = "x") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def _si_series(x: float) -> float:
    term = x
    total = x
    n = 0
    x2 = x * x
    while True:
        n += 1
        term *= -x2 / ((2 * n) * (2 * n + 1))
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) < 1e-18 * max(abs(total), 1e-300):
            return total


def _cin_series(x: float) -> float:
    # Cin(x) = sum_{n>=1} (-1)^{n+1} x^{2n} / (2n (2n)!)
    x2 = x * x
    term = 1.0
    total = 0.0
    n = 0
    while True:
        n += 1
        term *= x2 / ((2 * n - 1) * (2 * n))
        contrib = (-1) ** (n + 1) * term / (2 * n)
        total += contrib
        if abs(contrib) < 1e-18 * max(abs(total), 1e-300):
            return total


def _e1_imag_axis(x: float) -> complex:
    """E1(i x) for x > 0 by the modified Lentz continued fraction."""
    tiny = 1e-300
    b = complex(1.0, x)
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXITER):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h * complex(math.cos(x), -math.sin(x))
    raise ArithmeticError("continued fraction for E1(ix) did not converge")  # pragma: no cover


def sine_integral(x: float) -> float:
    """Si(x) = integral of sin(z)/z over [0, x].

    Power series for |x| <= 4, continued fraction for E1(ix) beyond.
    Absolute error is below 1e-14 over the real line.
    """
    x = _check_arg(x)
    if x < 0:
        return -sine_integral(-x)
    if x == 0.0:
        return 0.0
    if x <= _SERIES_MAX:
        return _si_series(x)
    return math.pi / 2 + _e1_imag_axis(x).imag


def cosine_integral(x: float) -> float:
    """Ci(x) = gamma + ln x - Cin(x), for x > 0."""
    x = _check_arg(x)
    if x <= 0:
        raise DomainError("Ci(x) requires x > 0")
    if x <= _SERIES_MAX:
        return EULER_GAMMA + math.log(x) - _cin_series(x)
    return -_e1_imag_axis(x).real


def cin_integral(x: float) -> float:
    """Cin(x) = integral of (1 - cos z)/z over [0, x] (entire, even in x)."""
    x = _check_arg(x)
    x = abs(x)
    if x == 0.0:
        return 0.0
    if x <= _SERIES_MAX:
        return _cin_series(x)
    return EULER_GAMMA + math.log(x) + _e1_imag_axis(x).real


@dataclass(frozen=True)
class SystemParams:
    """Physical inputs: coupling ``lam``, transition frequency ``omega0``, separation ``r``."""

    lam: float
    omega0: float
    r: float

    def __post_init__(self):
        for name in ("lam", "omega0", "r"):
            _check_arg(getattr(self, name), name)
        if self.omega0 <= 0:
            raise DomainError("omega0 must be positive")
        if self.r < 0:
            raise DomainError("separation r must be non-negative")
        if self.lam < 0:
            raise DomainError("coupling lam must be non-negative")

    @classmethod
    def from_dimensionless(cls, lam: float, omega0: float, omega0_r: float) -> "SystemParams":
        return cls(lam=lam, omega0=omega0, r=omega0_r / omega0)

    @property
    def omega0_r(self) -> float:
        return self.omega0 * self.r

    @property
    def weak_coupling(self) -> bool:
        return self.lam**2 < 0.1

    @property
    def rotating_wave_ok(self) -> bool:
        return self.lam**2 * self.omega0 * self.r < 1.0

    def validity_warnings(self) -> list[str]:
        out = []
        if not self.weak_coupling:
            out.append(f"lam^2 = {self.lam**2:.3g} >= 0.1: weak-coupling assumption questionable")
        if not self.rotating_wave_ok:
            out.append(
                f"lam^2 omega0 r = {self.lam**2 * self.omega0 * self.r:.3g} >= 1: "
                "rotating-wave approximation unreliable"
            )
        return out


@dataclass(frozen=True)
class Rates:
    """Emission rate ``gamma0``, cross rate ``gammaR`` and dipole shift ``sigma``."""

    gamma0: float
    gammaR: float
    sigma: float

    @property
    def ratio(self) -> float:
        """gammaR / gamma0 = sin(omega0 r) / (omega0 r)."""
        return self.gammaR / self.gamma0 if self.gamma0 else 1.0


def sinc_separation(omega0_r: float) -> float:
    """sin(x)/x with the x -> 0 limit."""
    if omega0_r < SMALL_SEPARATION:
        return 1.0
    return math.sin(omega0_r) / omega0_r


def sigma_shift(params: SystemParams) -> float:
    """Vacuum-induced frequency shift sigma(r); diverges at r = 0."""
    x = params.omega0_r
    if params.r == 0:
        raise DomainError("sigma diverges; physical r must exceed Bohr radius")
    pref = params.lam**2 / (2 * math.pi**2 * params.r)
    bracket = -math.cos(x) * (math.pi / 2 - sine_integral(x)) + math.sin(x) * (
        EULER_GAMMA + math.log(x) + cin_integral(x)
    )
    return pref * bracket


def compute_rates(params: SystemParams) -> Rates:
    """Gamma_0 = lam^2 omega0 / 2pi, Gamma_r = lam^2 sin(omega0 r)/(2 pi r), sigma(r).

    Raises
    ------
    DomainError
        For ``r == 0``, where sigma diverges (use :func:`rates_with_sigma_override`).
    """
    gamma0 = params.lam**2 * params.omega0 / (2 * math.pi)
    gammaR = gamma0 * sinc_separation(params.omega0_r)
    return Rates(gamma0=gamma0, gammaR=gammaR, sigma=sigma_shift(params))


def rates_with_sigma_override(params: SystemParams, sigma: float) -> Rates:
    """Rates with a caller-supplied shift; allows r = 0."""
    gamma0 = params.lam**2 * params.omega0 / (2 * math.pi)
    return Rates(gamma0=gamma0, gammaR=gamma0 * sinc_separation(params.omega0_r), sigma=float(sigma))
