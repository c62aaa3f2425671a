"""Independent oracle: two qubits coupled to an explicitly discretized field.

The continuum of modes is reduced to radial shells k_j with weights w_j. After
the angular average, the symmetric and antisymmetric collective lowering
operators S-_+- = (S-_2 +- S-_1)/sqrt(2) couple to two orthogonal families of
shell modes b_{+-,j} with

    g_{+-,j}^2 = G_j^2 (1 +- sin(k_j r) / (k_j r)),   G_j^2 = lam^2 k_j w_j / (2 pi^2),

which follows from g_k = lam / sqrt(omega_k) and the 3D density of states.
|+> only talks to b_+ modes and |-> only to b_- modes, so the one-excitation
sector splits into two (N+1)-level problems solved by exact diagonalization.
The two-excitation sector (|I>, |s; b_s,j>, |O; b_s,j b_s,l>) is evolved with
the two-photon states restricted to pairs of modes inside a resonant band;
modes outside the band enter that sector only through static level shifts.

The qubit frequency is renormalized so that the single-atom self-energy
vanishes at omega0, matching the renormalized omega0 of the closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from .errors import DomainError, NumericalError
from .evolution import Basis, DensityMatrix4, Trajectory
from .rates import SystemParams

BAND_WINDOW = 20.0
SINGLE_WINDOW = 100.0
UNIFORM_WINDOW = 150.0


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class ModeGrid:
    """Radial mode shells with midpoint quadrature weights.

    ``band`` marks the uniform cells within ``window * Gamma_0`` of omega0;
    the band midpoints are symmetric about omega0.
    """

    params: SystemParams
    k: np.ndarray
    weights: np.ndarray
    band: np.ndarray
    window: float
    k_max: float

    @property
    def N(self) -> int:
        return len(self.k)

    @property
    def G2(self) -> np.ndarray:
        lam = self.params.lam
        return lam**2 * self.k * self.weights / (2 * math.pi**2)

    def channel_couplings(self, sign: int) -> np.ndarray:
        """g_{s,j} for s = +1 or -1."""
        if self.params.r == 0:
            fac = np.full(self.N, 1.0 + sign)
        else:
            fac = 1.0 + sign * _sinc(self.k * self.params.r)
        return np.sqrt(self.G2 * np.clip(fac, 0.0, None))

    def lamb_shift(self, mask=None) -> float:
        """Discrete single-atom shift sum G_j^2 / (omega0 - k_j)."""
        sel = np.ones(self.N, bool) if mask is None else mask
        return float(np.sum(self.G2[sel] / (self.params.omega0 - self.k[sel])))

    def cross_shift(self, mask=None) -> float:
        """Discrete collective shift sum G_j^2 sinc(k_j r) / (omega0 - k_j)."""
        sel = np.ones(self.N, bool) if mask is None else mask
        s = _sinc(self.k[sel] * self.params.r) if self.params.r > 0 else np.ones(sel.sum())
        return float(np.sum(self.G2[sel] * s / (self.params.omega0 - self.k[sel])))

    def gamma0_estimate(self, smoothing: float = 2.0) -> float:
        """pi * sum_j G_j^2 L(omega0 - k_j), L a Lorentzian ``smoothing`` band cells wide."""
        band_dk = float(np.median(self.weights[self.band])) if self.band.any() else float(self.weights.min())
        eps = smoothing * band_dk
        lor = eps / math.pi / ((self.params.omega0 - self.k) ** 2 + eps**2)
        return float(math.pi * np.sum(self.G2 * lor))


def build_mode_grid(params: SystemParams, N: int, k_max: float | None = None, window: float = BAND_WINDOW,
                    uniform_window: float = UNIFORM_WINDOW, uniform_fraction: float = 0.6) -> ModeGrid:
    """Grid of N shells on (0, k_max]: uniform near resonance, geometric outside.

    ``uniform_fraction`` of the cells tile omega0 +- ``uniform_window`` Gamma_0
    uniformly, with midpoints symmetric about omega0 (capped at omega0 / 2).
    The rest are geometric in the distance from resonance. ``band`` flags the
    cells within ``window`` Gamma_0, which are the ones paired in the
    two-photon sector.

    Raises
    ------
    DomainError
        For N < 16, k_max < 20 omega0, or fewer than 8 cells within 5 Gamma_0 of omega0.
    """
    w0 = params.omega0
    if k_max is None:
        k_max = 50.0 * w0
    if N < 16:
        raise DomainError("mode grid needs N >= 16")
    if k_max < 20 * w0:
        raise DomainError("k_max must be at least 20 omega0")
    g0 = params.lam**2 * w0 / (2 * math.pi)
    half = min(uniform_window * g0, 0.5 * w0) if g0 > 0 else 1e-3 * w0
    n_uni = int(N * uniform_fraction)
    n_uni -= n_uni % 2
    rest = N - n_uni
    if rest < 4 or n_uni < 2:
        raise DomainError("N too small for the requested grid")
    edges_uni = np.linspace(w0 - half, w0 + half, n_uni + 1)
    l_lo, l_hi = math.log(w0 / half), math.log((k_max - w0) / half)
    n_lo = max(2, int(round(rest * l_lo / (l_lo + l_hi))))
    n_hi = rest - n_lo
    edges_lo = np.sort(w0 - half * np.exp(np.linspace(0.0, l_lo, n_lo + 1)))
    edges_lo[0] = 0.0
    edges_hi = w0 + half * np.exp(np.linspace(0.0, l_hi, n_hi + 1))
    edges_hi[-1] = k_max
    edges = np.concatenate([edges_lo[:-1], edges_uni, edges_hi[1:]])
    k = 0.5 * (edges[1:] + edges[:-1])
    wts = np.diff(edges)
    band = np.abs(k - w0) <= (window * g0 if g0 > 0 else half)
    near = np.abs(k - w0) <= 5 * g0 if g0 > 0 else band
    if near.sum() < 8:
        raise DomainError(f"only {int(near.sum())} modes within 5 Gamma_0 of omega0; need at least 8")
    return ModeGrid(params, k, wts, band, window, k_max)


# --- amplitudes --------------------------------------------------------------


@dataclass
class OracleAmplitudes:
    """Amplitude functions on a time grid.

    ``c[s]``     amplitude <s|U(t)|s> of a single-excitation Bell state, s in {+1, -1}
    ``phi[s]``   photon amplitudes <O; b_s,j|U(t)|s>, shape (n_t, N)
    ``u``        <I|U(t)|I>
    ``A[s]``     <s; b_s,j|U(t)|I> for the modes ``single_modes``
    ``pair_norm`` total weight of the two-photon states, per time
    """

    grid: ModeGrid
    times: np.ndarray
    c: dict
    phi: dict
    u: np.ndarray
    A: dict
    pair_norm: np.ndarray
    single_modes: np.ndarray
    norm_error: dict = field(default_factory=dict)

    @property
    def v_plus(self):
        return 0.5 * (self.c[1] + self.c[-1])

    @property
    def v_minus(self):
        return 0.5 * (self.c[1] - self.c[-1])


def _single_sector(grid: ModeGrid, sign: int, omega_b: float, times):
    g = grid.channel_couplings(sign)
    n = grid.N
    H = np.zeros((n + 1, n + 1))
    H[0, 0] = omega_b
    H[0, 1:] = g
    H[1:, 0] = g
    H[np.arange(1, n + 1), np.arange(1, n + 1)] = grid.k
    E, V = np.linalg.eigh(H)
    ph = np.exp(-1j * np.outer(times, E))
    amp = (ph * V[0][None, :]) @ V.T  # <m|U|0> for all m
    return amp[:, 0], amp[:, 1:]


def _double_sector(grid: ModeGrid, omega_b: float, times, single_window: float):
    """Two-excitation amplitudes in the frame rotating at 2 omega0.

    One-photon states |s; j> are kept for modes within ``single_window``
    Gamma_0 of resonance. Two-photon states |O; j, l> are kept when l lies in
    the resonant band and j is any kept one-photon mode, so every kept
    |s; j> can decay by a resonant second emission. Farther modes enter as
    static level shifts.
    """
    w0 = grid.params.omega0
    g0 = grid.params.lam**2 * w0 / (2 * math.pi)
    half = single_window * g0 if g0 > 0 else 0.0
    kept = grid.band | (np.abs(grid.k - w0) <= half)
    single = np.nonzero(kept)[0]
    ns = len(single)
    in_band = grid.band[single]
    bpos = np.nonzero(in_band)[0]
    opos = np.nonzero(~in_band)[0]
    # pairs (a, b) as positions into ``single``: band x band with a <= b, then outer x band
    bj, bl = np.triu_indices(len(bpos))
    pa = np.concatenate([bpos[bj], np.repeat(opos, len(bpos))])
    pb = np.concatenate([bpos[bl], np.tile(bpos, len(opos))])
    npair = len(pa)
    far = ~kept
    d_far = grid.lamb_shift(far)
    s_far = grid.cross_shift(far)
    d_out = grid.lamb_shift(~grid.band)
    s_out = grid.cross_shift(~grid.band)
    ks = grid.k[single] - w0
    n_tot = 1 + 2 * ns + 2 * npair
    rows, cols, vals = [], [], []
    diag = np.empty(n_tot)
    diag[0] = 2 * (omega_b - w0) + 2 * d_far
    same = pa == pb
    for ci, sign in enumerate((1, -1)):
        g = grid.channel_couplings(sign)[single]
        s0 = 1 + ci * ns
        p0 = 1 + 2 * ns + ci * npair
        # the remaining atom sees every mode outside the band as a static shift
        diag[s0:s0 + ns] = (omega_b - w0) + ks + d_out + sign * s_out
        diag[p0:p0 + npair] = ks[pa] + ks[pb]
        # S-_- |I> = -|->
        rows.append(np.arange(s0, s0 + ns))
        cols.append(np.zeros(ns, int))
        vals.append(sign * g)
        pidx = np.arange(p0, p0 + npair)
        bos = np.where(same, math.sqrt(2.0), 1.0)
        rows.append(pidx)
        cols.append(s0 + pa)
        vals.append(g[pb] * bos)
        rows.append(pidx[~same])
        cols.append(s0 + pb[~same])
        vals.append(g[pa[~same]])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    H = sparse.coo_matrix((v, (r, c)), shape=(n_tot, n_tot))
    H = (H + H.T + sparse.diags(diag)).tocsr().astype(complex)
    y0 = np.zeros(n_tot, complex)
    y0[0] = 1.0
    t = np.asarray(times, float)
    if len(t) > 1 and np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0):
        Y = expm_multiply(-1j * H, y0, start=t[0], stop=t[-1], num=len(t), endpoint=True)
    else:
        Y = np.array([expm_multiply(-1j * H * tt, y0) for tt in t])
    Y = Y * np.exp(-2j * w0 * t)[:, None]
    u = Y[:, 0]
    A = {1: Y[:, 1:1 + ns], -1: Y[:, 1 + ns:1 + 2 * ns]}
    pair_norm = np.sum(np.abs(Y[:, 1 + 2 * ns:]) ** 2, axis=1)
    return u, A, pair_norm, single


def integrate_amplitudes(grid: ModeGrid, params: SystemParams | None = None, tgrid=None,
                         norm_tol: float = 1e-8, single_window: float = SINGLE_WINDOW) -> OracleAmplitudes:
    """Amplitude functions of the discretized model on ``tgrid``.

    The one-excitation sector is diagonalized exactly; the two-excitation
    sector is propagated with a Krylov/Taylor matrix exponential.

    Raises
    ------
    NumericalError
        If the total norm in either sector drifts by more than ``norm_tol``.
    """
    if params is not None and params != grid.params:
        raise DomainError("grid was built for different parameters")
    t = np.asarray(tgrid, dtype=float)
    omega_b = grid.params.omega0 - grid.lamb_shift()
    c, phi = {}, {}
    norm_err = {}
    for s in (1, -1):
        c[s], phi[s] = _single_sector(grid, s, omega_b, t)
        nrm = np.abs(c[s]) ** 2 + np.sum(np.abs(phi[s]) ** 2, axis=1)
        norm_err[f"single{'+' if s > 0 else '-'}"] = float(np.max(np.abs(nrm - 1)))
    u, A, pn, single = _double_sector(grid, omega_b, t, single_window)
    nrm = np.abs(u) ** 2 + np.sum(np.abs(A[1]) ** 2, 1) + np.sum(np.abs(A[-1]) ** 2, 1) + pn
    norm_err["double"] = float(np.max(np.abs(nrm - 1)))
    worst = max(norm_err.values())
    if worst > norm_tol:
        raise NumericalError(f"oracle norm drift {worst:.3e} exceeds {norm_tol:.0e}", achieved=worst)
    return OracleAmplitudes(grid, t, c, phi, u, A, pn, single, norm_err)


def reconstruct_rho(amps: OracleAmplitudes, initial) -> Trajectory:
    """Reduced two-qubit state from the amplitude bilinears.

    ``initial`` is a DensityMatrix4 or anything with a ``build_initial``
    compatible spec (a ScenarioSpec). The field starts in the vacuum.
    Returned in the Bell basis (O, -, +, I).
    """
    if isinstance(initial, DensityMatrix4):
        rho0 = initial
    else:
        from .scenarios import build_initial

        rho0 = build_initial(initial)
    r0 = rho0.to(Basis.BELL).entries
    O, M, P, I = 0, 1, 2, 3
    idx = {1: P, -1: M}
    nt = len(amps.times)
    out = np.zeros((nt, 4, 4), complex)
    c = amps.c
    band = amps.single_modes
    # transfer (s, O) coherences from |I><s| via overlapping photon amplitudes
    feed = {s: np.sum(amps.A[s] * np.conj(amps.phi[s][:, band]), axis=1) for s in (1, -1)}
    lost = {s: np.sum(np.abs(amps.phi[s]) ** 2, axis=1) for s in (1, -1)}
    popA = {s: np.sum(np.abs(amps.A[s]) ** 2, axis=1) for s in (1, -1)}
    u = amps.u

    def amp_of(a):
        if a == O:
            return np.ones(nt, complex)
        if a == I:
            return u
        return c[1] if a == P else c[-1]

    for a in range(4):
        for b in range(4):
            x = r0[a, b]
            if x == 0:
                continue
            out[:, a, b] += x * amp_of(a) * np.conj(amp_of(b))
            if a == b and a in (P, M):
                out[:, O, O] += x * lost[1 if a == P else -1]
            if a == I and b == I:
                for s in (1, -1):
                    out[:, idx[s], idx[s]] += x * popA[s]
                out[:, O, O] += x * amps.pair_norm
            if a == I and b in (P, M):
                s = 1 if b == P else -1
                out[:, b, O] += x * feed[s]
            if b == I and a in (P, M):
                s = 1 if a == P else -1
                out[:, O, a] += x * np.conj(feed[s])
    traj = Trajectory("oracle", amps.grid.params, amps.times, out, Basis.BELL,
                      {"norm_error": amps.norm_error, "N": amps.grid.N})
    traj.validate(positivity_tol=1e-8)
    return traj


# --- audit against the closed forms -----------------------------------------


def _max_rel(a, b) -> float:
    """Max relative difference; absolute where the reference vanishes."""
    a, b = np.asarray(a), np.asarray(b)
    scale = np.abs(b)
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(a - b) / scale))


@dataclass
class OracleAudit:
    """Maximum relative errors of the closed forms against the oracle.

    ``errors`` uses complex differences for u and v+-; ``modulus_errors``
    compares |u|, |v+-| only. ``shifts`` holds the discrete collective shift
    of |+> next to the closed-form sigma, both in units of Gamma_0.
    """

    params: SystemParams
    N: int
    gamma0_t: np.ndarray
    errors: dict
    modulus_errors: dict
    shifts: dict
    norm_error: dict

    def as_dict(self) -> dict:
        return {
            "lambda": self.params.lam,
            "omega0": self.params.omega0,
            "omega0_r": self.params.omega0_r,
            "N": self.N,
            "gamma0_t_range": [float(self.gamma0_t[0]), float(self.gamma0_t[-1])],
            "max_rel_error": self.errors,
            "max_rel_error_modulus": self.modulus_errors,
            "shift_over_gamma0": self.shifts,
            "norm_error": self.norm_error,
        }


def audit(params: SystemParams, N: int = 2000, k_max: float | None = None, window=(0.5, 3.0),
          n_t: int = 26) -> OracleAudit:
    """Compare the oracle with the closed-form kernel over ``window`` (Gamma_0 t units)."""
    from .markov import ficek_tanas_elements
    from .propagator import eval_u_v, kappa_closed, mu_plus_i_nu
    from .rates import compute_rates

    rates = compute_rates(params)
    g0, gr = rates.gamma0, rates.gammaR
    grid = build_mode_grid(params, N, k_max)
    # without coupling there is no decay scale; use 1/omega0 instead
    unit = g0 if g0 > 0 else params.omega0
    t = np.linspace(window[0], window[1], n_t) / unit
    amps = integrate_amplitudes(grid, tgrid=t)
    u, vp, vm = eval_u_v(rates, params.omega0, t)
    feed_pp = np.sum(np.abs(amps.A[1]) ** 2, axis=1)
    pop_pp = np.abs(amps.c[1]) ** 2
    pop_mm = np.abs(amps.c[-1]) ** 2
    band = amps.single_modes
    coh = {s: np.sum(amps.A[s] * np.conj(amps.phi[s][:, band]), axis=1) for s in (1, -1)}
    munu = mu_plus_i_nu(rates, params, t)
    errors = {
        "u": _max_rel(amps.u, u),
        "v_plus": _max_rel(amps.v_plus, vp),
        "v_minus": _max_rel(amps.v_minus, vm),
        "rho_pp_from_plus": _max_rel(pop_pp, np.exp(-2 * (g0 + gr) * t)),
        "rho_mm_from_minus": _max_rel(pop_mm, np.exp(-2 * (g0 - gr) * t)),
        "rho_pp_feed": _max_rel(feed_pp, (g0 + gr) * kappa_closed(rates, t)),
        "rho_plusO_feed": _max_rel(coh[1], (g0 + gr) * munu),
        "rho_minusO_feed": _max_rel(coh[-1], (g0 - gr) * munu),
    }
    modulus = {
        "u": _max_rel(np.abs(amps.u), np.abs(u)),
        "v_plus": _max_rel(np.abs(amps.v_plus), np.abs(vp)),
        "v_minus": _max_rel(np.abs(amps.v_minus), np.abs(vm)),
        "rho_pp_feed_vs_markov": _max_rel(feed_pp, ficek_tanas_elements(rates, 1.0, t).rho_pp),
    }
    shifts = {
        "oracle_plus_state": grid.cross_shift() / unit,
        "closed_form_sigma": rates.sigma / unit,
    }
    return OracleAudit(params, N, unit * t, errors, modulus, shifts, dict(amps.norm_error))
