import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmpair import (Basis, DensityMatrix4, DomainError, EntanglementClass, ScenarioSpec, compute_rates, concurrence,
                    concurrence_series, detect_sudden_death, evolve_scenario, propagate_grid)
from nmpair.entanglement import ConcurrenceSeries
from nmpair.markov import lindblad_integrate
from nmpair.scenarios import build_initial, initial_ket

from conftest import make, random_density, random_unitary


def series(kind, x, p=0.5, gmax=10.0, n=1001):
    params, _ = make(x)
    return concurrence_series(evolve_scenario(ScenarioSpec.on_gamma0_grid(kind, params, gmax, n, p)))


def test_reference_states():
    assert concurrence(DensityMatrix4.from_ket(initial_ket("bell_minus", 0))) == pytest.approx(1, abs=1e-14)
    assert concurrence(DensityMatrix4.from_ket([0, 1, 0, 0])) == 0.0
    assert concurrence(DensityMatrix4(np.eye(4) / 4)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1))
def test_class_a_pure_concurrence(p):
    c = concurrence(DensityMatrix4.from_ket(initial_ket("class_a", p)))
    assert c == pytest.approx(2 * math.sqrt(p * (1 - p)), abs=1e-12)


def test_bell_basis_input():
    rho = DensityMatrix4.from_ket([0, 1, 0, 0], Basis.BELL)
    assert concurrence(rho) == pytest.approx(1, abs=1e-14)


def test_invalid_input():
    with pytest.raises(DomainError):
        concurrence(DensityMatrix4(np.diag([1.0, 1.0, 0, 0])))


def test_local_unitary_invariance(rng):
    for _ in range(20):
        rho = random_density(rng, rank=int(rng.integers(1, 3)))
        U = np.kron(random_unitary(rng), random_unitary(rng))
        c0 = concurrence(DensityMatrix4(rho))
        c1 = concurrence(DensityMatrix4(U @ rho @ U.conj().T))
        assert abs(c0 - c1) < 1e-10


def test_range_on_random_states(rng):
    for _ in range(200):
        c = concurrence(DensityMatrix4(random_density(rng)))
        assert 0 <= c <= 1


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 50.0])
def test_bell_minus_concurrence(x):
    params, r = make(x)
    s = series("bell_minus", x, gmax=5.0, n=201)
    ref = np.exp(-2 * (r.gamma0 - r.gammaR) * s.tgrid)
    assert np.max(np.abs(s.values - ref)) < 1e-10
    assert s.death_time is None


def test_class_a_death_time_far_apart():
    _, r = make(50.0)
    s = series("class_a", 50.0, p=0.9)
    assert s.death_time * r.gamma0 == pytest.approx(0.861, rel=0.02)
    rep = detect_sudden_death(s)
    assert rep.classification is EntanglementClass.SUDDEN_DEATH_NO_REVIVAL


def test_class_a_low_p_no_death():
    assert series("class_a", 1.0, p=0.3).death_time is None


def test_plus_state_smooth():
    rep = detect_sudden_death(series("bell_plus", 1.0, gmax=5.0, n=201))
    assert rep.classification is EntanglementClass.SMOOTH_DECAY


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("x", [0.1, 0.5, 1.0])
def test_no_revival_small_separation(x, p):
    assert not series("class_a", x, p=p).revival_detected


def test_markov_comparator_revives_at_small_separation():
    # the Lindblad trajectory dies and comes back; the exact dynamics does not
    params, r = make(0.5)
    spec = ScenarioSpec.on_gamma0_grid("class_a", params, 10, 1001, 0.9)
    rep = detect_sudden_death(concurrence_series(lindblad_integrate(build_initial(spec), params, spec.tgrid)))
    assert rep.classification is EntanglementClass.SUDDEN_DEATH_WITH_REVIVAL
    assert rep.max_revival > 1e-3
    assert detect_sudden_death(concurrence_series(evolve_scenario(spec))).classification \
        is EntanglementClass.SMOOTH_DECAY


def test_revival_classification_reachable():
    t = np.arange(12.0)
    raw = np.array([0.5, 0.3, 0.1, -0.1, -0.1, -0.1, -0.1, -0.1, -0.1, 0.05, 0.1, 0.1])
    s = ConcurrenceSeries(t, np.clip(raw, 0, None), raw, 2.5, True, 9.0)
    rep = detect_sudden_death(s)
    assert rep.classification is EntanglementClass.SUDDEN_DEATH_WITH_REVIVAL
    assert rep.max_revival == pytest.approx(0.1)


@pytest.mark.parametrize("x", [0.1, 1.0, 50.0])
@pytest.mark.parametrize("p", [0.5, 0.9])
def test_concurrence_lipschitz(x, p):
    s = series("class_a", x, p=p)
    dt = s.tgrid[1] - s.tgrid[0]
    _, r = make(x)
    slope = np.max(np.abs(np.diff(s.values))) / dt
    assert slope < 10 * r.gamma0


def test_death_requires_sustained_zero():
    params, r = make(50.0)
    spec = ScenarioSpec.on_gamma0_grid("class_a", params, 10, 1001, 0.9)
    s = concurrence_series(evolve_scenario(spec))
    after = s.tgrid > s.death_time
    assert np.all(s.values[after] < 1e-9)
