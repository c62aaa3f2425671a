"""Acceptance criteria 1-11, one test each, with a PASS/FAIL line per criterion."""
import math

import numpy as np
import pytest

from nmpair import (Basis, DensityMatrix4, ScenarioSpec, SystemParams, alpha_coefficients, compare_markov,
                    compute_rates, concurrence_series, decoherence_report, detect_sudden_death, eval_u_v,
                    evaluate_kernel, evolve_scenario, ficek_tanas_elements, integrate_master, propagate_grid,
                    transfer_matrix_evolve)
from nmpair.entanglement import EntanglementClass
from nmpair.scenarios import initial_ket

from conftest import ACCEPTANCE_LINES, make, oracle_audit, random_density


def verdict(n, checks):
    """Print one line for criterion ``n`` and fail unless every check holds.

    ``checks`` maps a short description to ``(ok, value)``.
    """
    ok = all(c[0] for c in checks.values())
    detail = "; ".join(f"{k}: {'ok' if c[0] else 'FAIL'} ({c[1]})" for k, c in checks.items())
    line = f"Criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    bad = [k for k, c in checks.items() if not c[0]]
    assert ok, f"criterion {n} failed: {bad}"


def test_criterion_01_rates():
    worst_g0 = 0.0
    for lam in (0.01, 0.1, 0.3):
        for w in (0.5, 1.0, 7.0):
            r = compute_rates(SystemParams.from_dimensionless(lam, w, 1.0))
            worst_g0 = max(worst_g0, abs(r.gamma0 / (lam**2 * w / (2 * math.pi)) - 1))
    zeros = max(abs(compute_rates(SystemParams(0.1, w, n * math.pi / w)).gammaR)
                for n in range(1, 11) for w in (0.5, 1.0, 3.0))
    xs = np.concatenate([np.geomspace(1e-8, 1e4, 4000), np.linspace(0.01, 100, 4000)])
    excess = max(abs(r.gammaR) / r.gamma0 - 1 for r in (compute_rates(SystemParams(0.1, 1.0, x)) for x in xs))
    verdict(1, {
        "Gamma0 rel err <= 1e-12": (worst_g0 <= 1e-12, f"{worst_g0:.2e}"),
        "Gamma_r(n pi) == 0 to 1e-14": (zeros <= 1e-14, f"{zeros:.2e}"),
        "|Gamma_r| <= Gamma0": (excess <= 0, f"max |Gr|/G0 - 1 = {excess:.2e}"),
    })


def test_criterion_02_propagator_identity_and_u():
    id_err = 0.0
    u_err = 0.0
    for x in (0.1, 1.0, math.pi, 50.0):
        p, r = make(x)
        k = evaluate_kernel(p, r, 0.0)
        id_err = max(id_err, max(abs(a - b) for a, b in zip(k.as_tuple(), (1, 1, 0, 0, 0, 0, 0))))
        t = np.linspace(0, 10, 1001) / r.gamma0
        u, _, _ = eval_u_v(r, p.omega0, t)
        u_err = max(u_err, float(np.max(np.abs(np.abs(u) - np.exp(-2 * r.gamma0 * t)))))
    verdict(2, {
        "identity at t=0 to 1e-14": (id_err <= 1e-14, f"{id_err:.2e}"),
        "|u| = exp(-2 G0 t) to 1e-12": (u_err <= 1e-12, f"{u_err:.2e}"),
    })


def test_criterion_03_invariant_suite():
    rng = np.random.default_rng(3)
    tr_err = herm_err = 0.0
    min_eig = np.inf
    for x in (0.1, 1.0, math.pi, 50.0):
        p, r = make(x)
        t = np.sort(rng.uniform(0, 10, 49)) / r.gamma0
        t = np.concatenate([[0.0], t])
        for _ in range(200):
            tr = propagate_grid(DensityMatrix4(random_density(rng)), p, t)
            s = tr.states
            tr_err = max(tr_err, float(np.max(np.abs(np.trace(s, axis1=1, axis2=2) - 1))))
            herm_err = max(herm_err, float(np.max(np.abs(s - s.conj().transpose(0, 2, 1)))))
            min_eig = min(min_eig, tr.metadata["min_eigenvalue"])
    verdict(3, {
        "trace to 1e-12": (tr_err <= 1e-12, f"{tr_err:.2e}"),
        "Hermitian to 1e-12": (herm_err <= 1e-12, f"{herm_err:.2e}"),
        "eigenvalues >= -1e-9": (min_eig >= -1e-9, f"min {min_eig:.2e}"),
    })


def test_criterion_04_sub_and_superradiance():
    c_err = 0.0
    rate_err = 0.0
    for x in (0.1, 0.5, 1.0, 2.0, 5.0):
        p, r = make(x)
        minus = ScenarioSpec.on_gamma0_grid("bell_minus", p, 10, 501)
        s = concurrence_series(evolve_scenario(minus))
        c_err = max(c_err, float(np.max(np.abs(s.values - np.exp(-2 * (r.gamma0 - r.gammaR) * s.tgrid)))))
        plus = evolve_scenario(ScenarioSpec.on_gamma0_grid("bell_plus", p, 3, 301)).in_basis(Basis.BELL)
        fit = -np.polyfit(plus.times, np.log(plus.element("+", "+").real), 1)[0]
        rate_err = max(rate_err, abs(fit / (2 * (r.gamma0 + r.gammaR)) - 1))
    verdict(4, {
        "|-> concurrence to 1e-10": (c_err <= 1e-10, f"{c_err:.2e}"),
        "|+> exponent to 0.1%": (rate_err <= 1e-3, f"{rate_err:.2e}"),
    })


def test_criterion_05_master_equation_round_trip():
    p, r = make(1.0)
    spec = ScenarioSpec.on_gamma0_grid("class_a", p, 5, 101, 0.5)
    rho0 = DensityMatrix4.from_ket(initial_ket("class_a", 0.5))
    a = integrate_master(rho0, p, spec.tgrid).in_basis(Basis.COMPUTATIONAL).states
    b = evolve_scenario(spec).states
    err = float(np.max(np.abs(a - b)))
    verdict(5, {"sup-norm < 1e-6": (err < 1e-6, f"{err:.2e}")})


def test_criterion_06_markov_limit_coefficients():
    p, r = make(1.0)
    r0 = type(r)(r.gamma0, 0.0, 0.0)
    al = alpha_coefficients(r0, p.omega0, 10 / r0.gamma0)
    target = {1: 0, 2: -2, 3: 2, 4: 0, 5: 2, 6: 2}
    verdict(6, {f"alpha{i}->{v}": (abs(al[i] - v) <= 1e-3, f"{complex(al[i]):.4g}") for i, v in target.items()})


def test_criterion_07_markov_divergence():
    near = compare_markov(make(0.1)[0], 1.0, 5, 501)
    i = int(np.argmin(np.abs(near.gamma0_t - 1)))
    ratio = float(near.ratio_pp[i])
    far = compare_markov(make(50.0)[0], 1.0, 5, 501)
    div = far.divergence()["rho_pp"]
    verdict(7, {
        "omega0r=0.1 ratio > 10 at G0t=1": (ratio > 10, f"{ratio:.4g}"),
        "omega0r=50 max rel diff < 10%": (div < 0.1, f"{div:.3g}"),
    })


def test_criterion_08_sudden_death():
    tested_r = (0.1, 0.5, 1.0, 5.0, 50.0)
    ps = (0.1, 0.3, 0.5, 0.7, 0.9)

    def report(x, pp):
        p, _ = make(x)
        s = concurrence_series(evolve_scenario(ScenarioSpec.on_gamma0_grid("class_a", p, 10, 1001, pp)))
        return s, detect_sudden_death(s)

    g0 = make(50.0)[1].gamma0
    s, rep = report(50.0, 0.9)
    dt = s.death_time * g0 if s.death_time is not None else float("nan")
    death_ok = s.death_time is not None and abs(dt / 0.861 - 1) <= 0.02
    no_rev = rep.classification is EntanglementClass.SUDDEN_DEATH_NO_REVIVAL
    low_p_deaths = []
    for x in tested_r:
        for pp in (0.1, 0.3, 0.5):
            s2, _ = report(x, pp)
            if s2.death_time is not None:
                low_p_deaths.append(f"r={x:g},p={pp:g}@{s2.death_time * make(x)[1].gamma0:.3g}")
    small_r_events = []
    for x in (0.1, 0.5, 1.0):
        for pp in ps:
            _, rp = report(x, pp)
            if rp.classification is not EntanglementClass.SMOOTH_DECAY:
                small_r_events.append(f"r={x:g},p={pp:g}:{rp.classification.value}")
    verdict(8, {
        "p=0.9, omega0r=50 death at 0.861/G0 (2%)": (death_ok, f"{dt:.4f}"),
        "no revival": (no_rev, rep.classification.value),
        "p<=0.5 no death at tested r": (not low_p_deaths, ", ".join(low_p_deaths) or "none"),
        "omega0r<=1 neither death nor revival": (not small_r_events, ", ".join(small_r_events) or "none"),
    })


def test_criterion_09_decoherence():
    far = decoherence_report(ScenarioSpec.on_gamma0_grid("factorized_ground", make(1000.0)[0], 5, 201, 0.5))
    far_err = float(np.max(np.abs(far.ratio_q1 - 1)))
    near = decoherence_report(ScenarioSpec.on_gamma0_grid("factorized_ground", make(0.01)[0], 3, 301, 0.5))
    factor = float(near.ratio_q1[-1])
    verdict(9, {
        "omega0r=1000 within 0.5%": (far_err <= 5e-3, f"{far_err:.2e}"),
        "omega0r=0.01 > 2x at G0t=3": (factor > 2, f"{factor:.4g}"),
    })


ORACLE_KEYS = {"u": 0.05, "v_plus": 0.05, "v_minus": 0.05, "rho_mm_from_minus": 0.05,
               "rho_pp_from_plus": 0.05, "rho_pp_feed": 0.10}


def test_criterion_10_oracle_equivalence():
    lams = (0.1, 0.05, 0.025)
    audits = {lam: oracle_audit(lam, 2000) for lam in lams}
    main = audits[0.05].errors
    checks = {f"{k} < {tol:g}": (main[k] < tol, f"{main[k]:.3g}") for k, tol in ORACLE_KEYS.items()}
    for k in ORACLE_KEYS:
        seq = [audits[lam].errors[k] for lam in lams]
        mono = all(a >= b for a, b in zip(seq, seq[1:]))
        checks[f"{k} decreasing in lambda"] = (mono, "/".join(f"{v:.3g}" for v in seq))
    verdict(10, checks)


def test_criterion_11_transfer_matrix():
    err = 0.0
    for x in (0.1, 1.0, math.pi, 5.0, 50.0):
        _, r = make(x)
        for gt in np.linspace(0, 10, 101):
            t = gt / r.gamma0
            for pI in (1.0, 0.4):
                occ = transfer_matrix_evolve(r, (pI, 0.0, 0.0, 1 - pI), t)
                err = max(err, abs(occ[2] - ficek_tanas_elements(r, pI, t).rho_mm))
    verdict(11, {"p_- vs Ficek-Tanas rho-- to 1e-9": (err <= 1e-9, f"{err:.2e}")})


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
