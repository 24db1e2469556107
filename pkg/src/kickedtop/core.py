"""Shared domain types and collective-spin algebra in the Dicke basis.

The maximum-spin sector of N spin-1/2 particles is spanned by the N+1
Dicke states |N/2, N/2-k>, labelled here by the number of down spins
k = 0..N (k = 0 is the fully polarized "all up" state). Everything in
this package works with complex amplitude vectors in that basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "BlochVector",
    "PhasePoint",
    "DickeState",
    "CollectiveOps",
    "build_collective_ops",
    "spin_coherent_state",
    "bloch_from_state",
    "phase_from_bloch",
    "bloch_from_phase",
    "ln_factorial",
    "ln_binom",
]

BLOCH_NORM_TOL = 1e-9
STATE_NORM_TOL = 1e-8


def ln_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def ln_binom(n: int, k) -> float:
    """log C(n, k); computed in log space so N = 256 stays finite."""
    k = np.asarray(k, dtype=float)
    from scipy.special import gammaln

    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _steps_per_period(tau: float, dt: float, name: str) -> int:
    n = tau / dt
    n_round = round(n)
    if n_round < 1 or abs(n - n_round) > 1e-9 * max(1.0, n):
        raise ValueError(f"{name} = {dt} does not divide tau = {tau}")
    return n_round


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of one simulation.

    h, K, gamma are the transverse field, the kick strength and the decay
    rate, all dimensionless (energy in units of the coupling J, hbar = 1).
    tau is the driving period; dt_mf and dt_q are the mean-field and the
    quantum-jump integration steps and must divide tau exactly.
    """

    h: float = 0.5
    K: float = 0.0
    gamma: float = 0.0
    tau: float = 1.0
    N: int = 1
    dt_mf: float = 0.01
    dt_q: float = 0.01
    n_periods: int = 1000
    n_traj: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.h < 0 or self.K < 0 or self.gamma < 0:
            raise ValueError("h, K and gamma must be non-negative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.n_periods < 1 or self.n_traj < 1:
            raise ValueError("n_periods and n_traj must be >= 1")
        # both checks raise on a non-dividing step
        _steps_per_period(self.tau, self.dt_mf, "dt_mf")
        _steps_per_period(self.tau, self.dt_q, "dt_q")

    @property
    def steps_mf(self) -> int:
        return _steps_per_period(self.tau, self.dt_mf, "dt_mf")

    @property
    def steps_q(self) -> int:
        return _steps_per_period(self.tau, self.dt_q, "dt_q")

    @property
    def spin(self) -> float:
        return self.N / 2.0

    def replace(self, **kwargs) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **kwargs)


@dataclass(frozen=True)
class BlochVector:
    """Classical magnetization (mx, my, mz).

    Mean-field trajectory operations keep the norm at 1 (to 1e-9);
    vectors obtained from quantum states may have norm < 1 and are
    deliberately not renormalized.
    """

    mx: float
    my: float
    mz: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.mx**2 + self.my**2 + self.mz**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.mx, self.my, self.mz])

    @staticmethod
    def from_array(m) -> "BlochVector":
        mx, my, mz = (float(x) for x in m)
        return BlochVector(mx, my, mz)

    def require_unit(self, tol: float = BLOCH_NORM_TOL) -> "BlochVector":
        if abs(self.norm - 1.0) > tol:
            raise ValueError(f"Bloch vector norm {self.norm} deviates from 1")
        return self


@dataclass(frozen=True)
class PhasePoint:
    """Poincare-section chart of the unit sphere: Q = mz in [-1, 1] and
    P in [-pi/2, pi/2), the half-open representative of the angle with
    period pi (the inverse map uses 2P)."""

    Q: float
    P: float

    def __post_init__(self):
        if not -1.0 - 1e-12 <= self.Q <= 1.0 + 1e-12:
            raise ValueError(f"Q = {self.Q} outside [-1, 1]")
        if not -np.pi / 2 - 1e-12 <= self.P < np.pi / 2 + 1e-12:
            raise ValueError(f"P = {self.P} outside [-pi/2, pi/2)")


class DickeState:
    """Pure collective-spin state: N+1 complex amplitudes c_k over the
    Dicke basis, unit norm."""

    __slots__ = ("N", "amps")

    def __init__(self, amps, normalize: bool = False):
        amps = np.asarray(amps, dtype=complex).copy()
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("amplitudes must be a vector of length N+1 >= 2")
        nrm = np.linalg.norm(amps)
        if normalize:
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / nrm
        elif abs(nrm - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond {STATE_NORM_TOL}")
        amps.flags.writeable = False
        object.__setattr__(self, "N", amps.size - 1)
        object.__setattr__(self, "amps", amps)

    def __setattr__(self, *_):
        raise AttributeError("DickeState is immutable")

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @staticmethod
    def polarized(N: int) -> "DickeState":
        """The fully polarized eigenstate |N/2, N/2> (k = 0)."""
        amps = np.zeros(N + 1, dtype=complex)
        amps[0] = 1.0
        return DickeState(amps)

    @staticmethod
    def basis(N: int, k: int) -> "DickeState":
        """The Dicke basis state with k down spins."""
        if not 0 <= k <= N:
            raise ValueError(f"k = {k} outside 0..{N}")
        amps = np.zeros(N + 1, dtype=complex)
        amps[k] = 1.0
        return DickeState(amps)


@dataclass(frozen=True)
class CollectiveOps:
    """Dense collective spin operators on the Dicke basis.

    sz and spsm are diagonal and also kept as 1-d arrays; sp is the
    conjugate transpose of sm. S_z |k> = (N/2 - k)|k> and
    S_- |k> = sqrt((N-k)(k+1)) |k+1>.
    """

    N: int
    sz_diag: np.ndarray = field(repr=False)
    spsm_diag: np.ndarray = field(repr=False)
    sz: np.ndarray = field(repr=False)
    sp: np.ndarray = field(repr=False)
    sm: np.ndarray = field(repr=False)
    sx: np.ndarray = field(repr=False)
    sy: np.ndarray = field(repr=False)
    sz2: np.ndarray = field(repr=False)
    spsm: np.ndarray = field(repr=False)


def build_collective_ops(N: int) -> CollectiveOps:
    """Collective spin operators restricted to the S = N/2 sector."""
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(N + 1)
    sz_diag = N / 2.0 - k
    # S_-|k> = sqrt((N-k)(k+1))|k+1>: entries on the first subdiagonal
    lower = np.sqrt((N - k[:-1]) * (k[:-1] + 1.0))
    sm = np.zeros((N + 1, N + 1))
    sm[k[:-1] + 1, k[:-1]] = lower
    sp = sm.T.copy()
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    sz = np.diag(sz_diag)
    sz2 = np.diag(sz_diag**2)
    # S_+S_-|k> = (N-k)(k+1)|k>; vanishes on the dark state k = N
    spsm_diag = (N - k) * (k + 1.0)
    spsm = np.diag(spsm_diag)
    for arr in (sm, sp, sx, sz, sz2, spsm, sz_diag, spsm_diag):
        arr.flags.writeable = False
    sy.flags.writeable = False
    return CollectiveOps(
        N=N, sz_diag=sz_diag, spsm_diag=spsm_diag,
        sz=sz, sp=sp, sm=sm, sx=sx, sy=sy, sz2=sz2, spsm=spsm,
    )


def spin_coherent_state(N: int, theta: float, phi: float) -> DickeState:
    """Spin coherent state pointing along (theta, phi).

    c_k = sqrt(C(N,k)) cos(theta/2)^(N-k) (sin(theta/2) e^{i phi})^k,
    with the binomial factors assembled in log space.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    k = np.arange(N + 1)
    half = theta / 2.0
    c, s = np.cos(half), np.sin(half)
    amps = np.zeros(N + 1, dtype=complex)
    if s == 0.0:
        amps[0] = 1.0
        return DickeState(amps)
    if c == 0.0:
        amps[N] = np.exp(1j * N * phi)
        return DickeState(amps)
    ln_mag = 0.5 * ln_binom(N, k) + (N - k) * np.log(c) + k * np.log(s)
    amps = np.exp(ln_mag + 1j * k * phi)
    return DickeState(amps, normalize=True)


def bloch_from_state(psi: DickeState) -> BlochVector:
    """Magnetization m_alpha = <S_alpha>/(N/2). Norm may be < 1 for
    non-coherent states; no renormalization is applied."""
    N = psi.N
    c = psi.amps
    k = np.arange(N + 1)
    mz = float(np.sum(np.abs(c) ** 2 * (N / 2.0 - k))) / (N / 2.0)
    # <S_+> couples k+1 -> k with the ladder weight
    w = np.sqrt((N - k[:-1]) * (k[:-1] + 1.0))
    splus = np.sum(np.conj(c[:-1]) * w * c[1:])
    mx = float(np.real(splus)) / (N / 2.0)
    my = float(np.imag(splus)) / (N / 2.0)
    return BlochVector(mx, my, mz)


def phase_from_bloch(m: BlochVector, tol: float = BLOCH_NORM_TOL) -> PhasePoint:
    """(Q, P) chart of a unit Bloch vector; P = 0 at the poles Q = +-1."""
    m.require_unit(tol)
    Q = min(1.0, max(-1.0, m.mz))
    if abs(Q) >= 1.0 or (m.mx == 0.0 and m.my == 0.0):
        return PhasePoint(Q, 0.0)
    P = 0.5 * math.atan2(m.my, m.mx)
    if P >= np.pi / 2:  # atan2 returns pi exactly at the branch cut
        P -= np.pi
    return PhasePoint(Q, P)


def bloch_from_phase(p: PhasePoint) -> BlochVector:
    r = math.sqrt(max(0.0, 1.0 - p.Q**2))
    return BlochVector(r * math.cos(2 * p.P), r * math.sin(2 * p.P), p.Q)
