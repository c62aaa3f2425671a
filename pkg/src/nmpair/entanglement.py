"""Wootters concurrence and detection of entanglement sudden death."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .evolution import Basis, DensityMatrix4, Trajectory

DEATH_THRESHOLD = 1e-9
SUSTAIN_WINDOW = 5

_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def _raw_concurrence(m: np.ndarray) -> float:
    """sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4) without the max(0, .) clamp.

    With rho = A A^dag, the sqrt(l_i) are the singular values of
    A^T (sy x sy) A. An SVD returns them to absolute accuracy ~eps, whereas
    square roots of the eigenvalues of rho rho~ amplify rounding to ~1e-8.
    """
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    a = v * np.sqrt(np.clip(w, 0.0, None))
    s = np.linalg.svd(a.T @ _YY @ a, compute_uv=False)
    return float(s[0] - s[1] - s[2] - s[3])


def concurrence(rho: DensityMatrix4, raw: bool = False) -> float:
    """Wootters concurrence of a two-qubit state.

    Parameters
    ----------
    rho : DensityMatrix4
        Any basis; converted to the computational basis internally.
    raw : bool
        Return the unclamped value sqrt(l1) - sum of the others (may be negative).

    Raises
    ------
    DomainError
        If ``rho`` is not Hermitian or not unit trace.
    """
    m = rho.to(Basis.COMPUTATIONAL).entries
    if rho.hermiticity_error() > 1e-9 or rho.trace_error() > 1e-9:
        raise DomainError("concurrence requires a Hermitian unit-trace matrix")
    c = _raw_concurrence(m)
    return c if raw else max(0.0, c)


class EntanglementClass(enum.Enum):
    SMOOTH_DECAY = "smooth_decay"
    SUDDEN_DEATH_NO_REVIVAL = "sudden_death_no_revival"
    SUDDEN_DEATH_WITH_REVIVAL = "sudden_death_with_revival"


@dataclass
class ConcurrenceSeries:
    """Concurrence on a time grid with sudden-death bookkeeping."""

    tgrid: np.ndarray
    values: np.ndarray
    raw: np.ndarray
    death_time: float | None
    revival_detected: bool
    revival_time: float | None = None


def _death_events(raw, window):
    """Index of the first sustained zero and of a later revival (if any).

    A sample counts as zero when the unclamped concurrence is below
    -DEATH_THRESHOLD, so a smooth decay that merely falls under the threshold
    is not mistaken for death. Death must follow a positive sample.
    """
    zero = raw < -DEATH_THRESHOLD
    alive = raw > DEATH_THRESHOLD
    n = len(raw)
    death = None
    seen = False
    for i in range(n):
        seen = seen or alive[i]
        if seen and zero[i] and not zero[i - 1]:
            stop = min(n, i + window)
            if stop - i == window and np.all(zero[i:stop]):
                death = i
                break
    if death is None:
        return None, None
    later = np.nonzero(alive[death:])[0]
    revival = death + int(later[0]) if len(later) else None
    return death, revival


def concurrence_series(traj: Trajectory, window: int = SUSTAIN_WINDOW) -> ConcurrenceSeries:
    """Pointwise concurrence with a sustained-zero death time.

    The death time is refined by linear interpolation of the unclamped
    concurrence between the last positive sample and the first zero sample.
    """
    comp = traj.in_basis(Basis.COMPUTATIONAL)
    raw = np.array([_raw_concurrence(s) for s in comp.states])
    vals = np.clip(raw, 0.0, None)
    t = comp.times
    death, revival = _death_events(raw, window)
    death_time = None
    if death is not None:
        r0, r1 = raw[death - 1], raw[death]
        t0, t1 = t[death - 1], t[death]
        death_time = float(t0 + (t1 - t0) * r0 / (r0 - r1))
    return ConcurrenceSeries(
        tgrid=t,
        values=vals,
        raw=raw,
        death_time=death_time,
        revival_detected=revival is not None,
        revival_time=float(t[revival]) if revival is not None else None,
    )


@dataclass(frozen=True)
class SuddenDeathReport:
    classification: EntanglementClass
    death_time: float | None
    revival_time: float | None
    max_revival: float


def detect_sudden_death(series: ConcurrenceSeries) -> SuddenDeathReport:
    """Classify a concurrence series as smooth decay, death, or death with revival."""
    if series.death_time is None:
        cls = EntanglementClass.SMOOTH_DECAY
        peak = 0.0
    elif series.revival_detected:
        cls = EntanglementClass.SUDDEN_DEATH_WITH_REVIVAL
        after = series.tgrid >= series.revival_time
        peak = float(np.max(series.values[after]))
    else:
        cls = EntanglementClass.SUDDEN_DEATH_NO_REVIVAL
        peak = 0.0
    return SuddenDeathReport(cls, series.death_time, series.revival_time, peak)
