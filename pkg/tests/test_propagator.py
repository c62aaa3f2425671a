import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmpair import (DomainError, eval_kappa_closed, eval_kappa_exact, eval_mu_nu, eval_u_v, evaluate_kernel,
                    rates_with_sigma_override)
from nmpair.propagator import kappa_closed

from conftest import make

# |mu1| at lam=0.1, omega0=1, omega0 r=1, Gamma0 t=1; cross-checked with a 40-digit mpmath evaluation.
GOLDEN_ABS_MU1 = 0.008699713588544327


@pytest.mark.parametrize("x", [0.1, 1.0, math.pi, 10.0])
def test_identity_at_t0(x):
    p, r = make(x)
    k = evaluate_kernel(p, r, 0.0)
    assert np.allclose(k.as_tuple(), (1, 1, 0, 0, 0, 0, 0), atol=1e-14, rtol=0)


def test_u_modulus():
    p, r = make(1.0)
    u, _, _ = eval_u_v(r, p.omega0, 1 / r.gamma0)
    assert abs(u) == pytest.approx(math.exp(-2), abs=1e-6)
    t = np.linspace(0, 10, 101) / r.gamma0
    u, _, _ = eval_u_v(r, p.omega0, t)
    assert np.max(np.abs(np.abs(u) - np.exp(-2 * r.gamma0 * t))) < 1e-12


def test_negative_time_rejected():
    p, r = make(1.0)
    with pytest.raises(DomainError):
        eval_u_v(r, p.omega0, -1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(0.0, 8.0))
def test_v_norm_identity(x, gt):
    p, r = make(x)
    t = gt / r.gamma0
    _, vp, vm = eval_u_v(r, p.omega0, t)
    ref = math.exp(-2 * r.gamma0 * t) * math.cosh(2 * r.gammaR * t)
    assert abs(vp) ** 2 + abs(vm) ** 2 == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_kappa_closed_special_cases():
    p, r = make(1.0)
    assert eval_kappa_closed(r, 0.0) == (0.0, 0.0)
    r0 = rates_with_sigma_override(p, 0.0)
    r0 = type(r0)(r0.gamma0, 0.0, 0.0)
    t = np.linspace(0, 10, 50) / r0.gamma0
    k1, k2 = eval_kappa_closed(r0, t)
    g = r0.gamma0
    assert np.allclose(k1, np.exp(-2 * g * t) * (1 - np.exp(-g * t)) ** 2, atol=1e-15)
    assert np.all(k2 == 0)


def test_kappa_near_degenerate_bound():
    p, r = make(1e-4)
    g, d = r.gamma0, r.gamma0 - r.gammaR
    t = np.linspace(0, 10, 200) / g
    k1, _ = eval_kappa_closed(r, t)
    assert np.all(k1 <= g * d * t**2 * np.exp(-4 * g * t) * 1.01 + 1e-300)


def test_kappa_degenerate_branch_continuous():
    p, r = make(1.0)
    for d in (1e-5, 1e-7, 1e-9):
        ra = type(r)(r.gamma0, r.gamma0 * (1 - d), r.sigma)
        rb = type(r)(r.gamma0, r.gamma0 * (1 - d * 1.0001), r.sigma)
        t = 2 / r.gamma0
        assert kappa_closed(ra, t) == pytest.approx(kappa_closed(rb, t), rel=1e-3)


@pytest.mark.parametrize("x", [0.1, 1.0, math.pi, 10.0])
def test_kappa_ordering(x):
    p, r = make(x)
    t = np.linspace(0, 10, 1000) / r.gamma0
    k1, k2 = eval_kappa_closed(r, t)
    assert np.all(k1 >= 0)
    assert np.all(k1 >= np.abs(k2))


def test_mu_nu_t0_and_golden():
    p, r = make(1.0)
    assert eval_mu_nu(r, p, 0.0) == (0, 0)
    m1, m2 = eval_mu_nu(r, p, 1 / r.gamma0)
    assert abs(m1) == pytest.approx(GOLDEN_ABS_MU1, rel=1e-12)
    assert abs(m2) == pytest.approx(GOLDEN_ABS_MU1 * r.ratio, rel=1e-12)


def test_mu_nu_uncoupled_limit():
    p, r = make(1.0)
    r0 = type(r)(r.gamma0, 0.0, 0.0)
    t = 1.3 / r0.gamma0
    m1, m2 = eval_mu_nu(r0, p, t)
    g = r0.gamma0
    assert m2 == 0
    ref = np.exp(-1j * p.omega0 * t - g * t) * (np.exp(-g * t) - 1) ** 2
    assert abs(m1 - ref) < 1e-15


@pytest.mark.parametrize("x", [math.pi, 10.0, 50.0])
def test_all_kernel_functions_vanish_late(x):
    p, r = make(x)
    k = evaluate_kernel(p, r, 50 / r.gamma0)
    assert max(abs(v) for v in k.as_tuple()) < 1e-10


def test_subradiant_amplitude_persists_at_small_separation():
    # v_- decays at Gamma0 - Gamma_r, so it is not negligible at Gamma0 t = 50 for omega0 r <= 1
    p, r = make(1.0)
    _, _, vm = eval_u_v(r, p.omega0, 50 / r.gamma0)
    assert abs(vm) == pytest.approx(0.5 * math.exp(-50 * (1 - r.ratio)), rel=1e-3)


def test_kappa_exact_zero_time():
    p, r = make(1.0)
    k1, k2 = eval_kappa_exact(p, r, 0.0)
    assert abs(k1) < 1e-8 and abs(k2) < 1e-8


def test_kappa_exact_cutoff_rejected():
    p, r = make(1.0)
    with pytest.raises(DomainError):
        eval_kappa_exact(p, r, 1.0, k_max=5.0)


def test_kappa_exact_vs_closed_at_two_lifetimes():
    p, r = make(1.0)
    t = 2 / r.gamma0
    ex = eval_kappa_exact(p, r, t)
    cl = eval_kappa_closed(r, t)
    assert ex[0] == pytest.approx(cl[0], rel=0.05)


def test_kappa_exact_short_time_disagreement():
    p, r = make(1.0)
    t = 0.5 / p.omega0
    ex = eval_kappa_exact(p, r, t)[0]
    cl = eval_kappa_closed(r, t)[0]
    assert abs(ex - cl) / abs(cl) > 0.05


@pytest.mark.parametrize("gt", [1.0, 3.0, 5.0])
def test_kappa_exact_vs_closed_weak_coupling(gt):
    # omega0 / Gamma0 = 2 pi / lam^2 >= 100 for lam = 0.1
    p, r = make(1.0)
    t = gt / r.gamma0
    assert eval_kappa_exact(p, r, t)[0] == pytest.approx(eval_kappa_closed(r, t)[0], rel=0.05)
