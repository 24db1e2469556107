"""Thermodynamic-limit dynamics of the dissipative kicked top.

Between kicks the unit magnetization follows the mean-field flow

    dmx/dt =  2 my mz + 2 gamma mx mz
    dmy/dt = -2 mx mz + 2 h mz + 2 gamma my mz
    dmz/dt = -2 h my - 2 gamma (mx^2 + my^2)

which conserves |m|; each kick rotates m about z by the angle 2 K mz.
All heavy operations run on (M, 3) batches so parameter grids and
ensembles of initial conditions integrate in lockstep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BlochVector, ModelParams, PhasePoint, phase_from_bloch

__all__ = [
    "OrbitSeries",
    "LyapunovResult",
    "mf_rhs",
    "mf_step_period",
    "mf_kick",
    "mf_stroboscopic_orbit",
    "stroboscopic_points",
    "lyapunov_largest",
    "lyapunov_batch",
    "lyapunov_map",
    "bifurcation_scan",
    "box_counting_dimension",
    "hausdorff_dimension",
    "DEFAULT_EPSILONS",
]

DEFAULT_D0 = 1e-10
DEFAULT_TRANSIENT = 100
DEFAULT_EPSILONS = tuple(2.0**-k for k in range(10, 0, -1))


def _rhs(m: np.ndarray, h: float, gamma) -> np.ndarray:
    mx, my, mz = m[..., 0], m[..., 1], m[..., 2]
    out = np.empty_like(m)
    out[..., 0] = 2.0 * my * mz + 2.0 * gamma * mx * mz
    out[..., 1] = -2.0 * mx * mz + 2.0 * h * mz + 2.0 * gamma * my * mz
    out[..., 2] = -2.0 * h * my - 2.0 * gamma * (mx * mx + my * my)
    return out


def _flow_period(m: np.ndarray, h: float, gamma, dt: float, n_steps: int,
                 renormalize: bool = True) -> np.ndarray:
    """RK4 over one driving period on an (M, 3) batch; gamma may be a
    scalar or an (M,) array."""
    for _ in range(n_steps):
        k1 = _rhs(m, h, gamma)
        k2 = _rhs(m + 0.5 * dt * k1, h, gamma)
        k3 = _rhs(m + 0.5 * dt * k2, h, gamma)
        k4 = _rhs(m + dt * k3, h, gamma)
        m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if renormalize:
            m = m / np.linalg.norm(m, axis=-1, keepdims=True)
    return m


def _kick(m: np.ndarray, K) -> np.ndarray:
    ang = 2.0 * np.asarray(K) * m[..., 2]
    c, s = np.cos(ang), np.sin(ang)
    out = np.empty_like(m)
    out[..., 0] = m[..., 0] * c - m[..., 1] * s
    out[..., 1] = m[..., 0] * s + m[..., 1] * c
    out[..., 2] = m[..., 2]
    return out


def mf_rhs(m: BlochVector, params: ModelParams) -> tuple[float, float, float]:
    """Instantaneous time derivative of the magnetization."""
    d = _rhs(m.as_array(), params.h, params.gamma)
    return (float(d[0]), float(d[1]), float(d[2]))


def mf_step_period(m: BlochVector, params: ModelParams) -> BlochVector:
    """Integrate the flow for one full period tau (state at tau^-)."""
    m.require_unit()
    out = _flow_period(m.as_array()[None, :], params.h, params.gamma,
                       params.dt_mf, params.steps_mf)
    return BlochVector.from_array(out[0])


def mf_kick(m: BlochVector, K: float) -> BlochVector:
    """Rotation about z by 2 K mz; an exact isometry of the sphere."""
    return BlochVector.from_array(_kick(m.as_array(), K))


@dataclass(frozen=True)
class OrbitSeries:
    """Post-kick stroboscopic record: vectors[i] is m(t_{i+1}^+)."""

    periods: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def bloch(self, i: int) -> BlochVector:
        return BlochVector.from_array(self.vectors[i])

    def phase_points(self) -> list[PhasePoint]:
        return [phase_from_bloch(self.bloch(i)) for i in range(len(self))]

    def qp(self) -> tuple[np.ndarray, np.ndarray]:
        """(Q, P) arrays with the pole convention P = 0 at Q = +-1."""
        return _qp_arrays(self.vectors)


def _qp_arrays(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Q = np.clip(vectors[..., 2], -1.0, 1.0)
    P = 0.5 * np.arctan2(vectors[..., 1], vectors[..., 0])
    P = np.where(P >= np.pi / 2, P - np.pi, P)
    P = np.where(np.abs(Q) >= 1.0, 0.0, P)
    return Q, P


def mf_stroboscopic_orbit(m0: BlochVector, params: ModelParams,
                          n_periods: int | None = None) -> OrbitSeries:
    """Alternate flow and kick, storing the state right after each kick."""
    m0.require_unit()
    if n_periods is None:
        n_periods = params.n_periods
    traj = stroboscopic_points(m0.as_array()[None, :], params, n_periods)
    return OrbitSeries(np.arange(1, n_periods + 1), traj[:, 0, :])


def stroboscopic_points(m0: np.ndarray, params: ModelParams, n_periods: int,
                        record_from: int = 0) -> np.ndarray:
    """Batched orbit: returns (n_recorded, M, 3) post-kick states for the
    (M, 3) initial conditions, skipping the first `record_from` periods."""
    m = np.array(m0, dtype=float)
    out = np.empty((n_periods - record_from, m.shape[0], 3))
    for n in range(n_periods):
        m = _flow_period(m, params.h, params.gamma, params.dt_mf, params.steps_mf)
        m = _kick(m, params.K)
        if n >= record_from:
            out[n - record_from] = m
    return out


@dataclass(frozen=True)
class LyapunovResult:
    lam: float
    n_periods: int
    d0: float


def _benettin_pair(m0: np.ndarray | None, d0: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    if m0 is None:
        m1 = np.tile([0.0, 0.0, 1.0], (M, 1))
        m2 = np.tile([math.sqrt(d0 / 2), math.sqrt(d0 / 2), math.sqrt(1 - d0**2)], (M, 1))
    else:
        m1 = np.tile(np.asarray(m0, dtype=float), (M, 1))
        ref = np.array([1.0, 0.0, 0.0]) if abs(m1[0, 0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        v = np.cross(m1[0], ref)
        v /= np.linalg.norm(v)
        m2 = m1 + d0 * v
        m2 /= np.linalg.norm(m2, axis=1, keepdims=True)
    return m1, m2


def lyapunov_batch(K, gamma, params: ModelParams, n_periods: int = 1000,
                   d0: float = DEFAULT_D0, n_transient: int = DEFAULT_TRANSIENT,
                   m0=None) -> np.ndarray:
    """Largest Lyapunov exponent of the stroboscopic map at each (K, gamma).

    Two trajectories start d0 apart; after every period (flow + kick) the
    distance d_k is measured and the second point is pulled back along the
    joining line to distance d0. lambda = sum ln(d_k/d0) / (n_periods tau),
    accumulated after `n_transient` discarded periods. Nodes whose pair
    collapses to zero distance are reported as NaN.
    """
    K = np.atleast_1d(np.asarray(K, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if K.shape != gamma.shape:
        raise ValueError("K and gamma must have matching shapes")
    M = K.size
    m1, m2 = _benettin_pair(m0, d0, M)
    acc = np.zeros(M)
    dead = np.zeros(M, dtype=bool)
    both_K = np.concatenate([K, K])
    both_g = np.concatenate([gamma, gamma])
    for n in range(n_transient + n_periods):
        both = np.concatenate([m1, m2], axis=0)
        both = _flow_period(both, params.h, both_g, params.dt_mf, params.steps_mf)
        both = _kick(both, both_K)
        m1, m2 = both[:M], both[M:]
        d = np.linalg.norm(m1 - m2, axis=1)
        zero = d == 0.0
        dead |= zero
        d_safe = np.where(zero, 1.0, d)
        if n >= n_transient:
            acc += np.log(d_safe / d0)
        m2 = m1 + (m2 - m1) * (d0 / d_safe)[:, None]
    acc /= n_periods * params.tau
    acc[dead] = np.nan
    return acc


def lyapunov_largest(m0: BlochVector | None, params: ModelParams,
                     n_periods: int = 1000, d0: float = DEFAULT_D0,
                     n_transient: int = DEFAULT_TRANSIENT) -> LyapunovResult:
    """Benettin estimate at the parameters of `params`; m0 = None selects
    the reference pair m1 = (0,0,1), m2 = (sqrt(d0/2), sqrt(d0/2), sqrt(1-d0^2))."""
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    arr = None if m0 is None else m0.require_unit().as_array()
    lam = lyapunov_batch([params.K], [params.gamma], params, n_periods=n_periods,
                         d0=d0, n_transient=n_transient, m0=arr)
    if math.isnan(lam[0]):
        raise ArithmeticError("trajectory pair collapsed to zero distance")
    return LyapunovResult(float(lam[0]), n_periods, d0)


def lyapunov_map(gamma_range, K_range, grid: tuple[int, int], params: ModelParams,
                 n_periods: int = 1000, d0: float = DEFAULT_D0,
                 n_transient: int = DEFAULT_TRANSIENT):
    """lambda on an (nK, nGamma) grid; returns (K_vals, gamma_vals, lam)
    with lam[i, j] at (K_vals[i], gamma_vals[j]), both ascending."""
    nK, nG = grid
    if nK < 1 or nG < 1:
        raise ValueError("grid must be at least 1x1")
    K_vals = np.linspace(min(K_range), max(K_range), nK)
    g_vals = np.linspace(min(gamma_range), max(gamma_range), nG)
    KK, GG = np.meshgrid(K_vals, g_vals, indexing="ij")
    lam = lyapunov_batch(KK.ravel(), GG.ravel(), params, n_periods=n_periods,
                         d0=d0, n_transient=n_transient)
    return K_vals, g_vals, lam.reshape(nK, nG)


@dataclass(frozen=True)
class BifurcationScan:
    K_values: np.ndarray
    values: np.ndarray  # (nK, keep) post-kick observables


def bifurcation_scan(K_values, params: ModelParams, n_periods: int = 10_000,
                     keep: int = 250, observable: str = "my") -> BifurcationScan:
    """Last `keep` post-kick stroboscopic values per kick strength,
    starting from m(0) = (0, 0, 1)."""
    K_values = np.atleast_1d(np.asarray(K_values, dtype=float))
    if K_values.size == 0:
        raise ValueError("empty K range")
    if keep > n_periods:
        raise ValueError("keep exceeds n_periods")
    comp = {"mx": 0, "my": 1, "mz": 2}[observable]
    m = np.tile([0.0, 0.0, 1.0], (K_values.size, 1))
    out = np.empty((K_values.size, keep))
    for n in range(n_periods):
        m = _flow_period(m, params.h, params.gamma, params.dt_mf, params.steps_mf)
        m = _kick(m, K_values)
        if n >= n_periods - keep:
            out[:, n - (n_periods - keep)] = m[:, comp]
    return BifurcationScan(K_values, out)


def box_counting_dimension(Q: np.ndarray, P: np.ndarray, epsilons=DEFAULT_EPSILONS
                           ) -> tuple[float, float, np.ndarray]:
    """Box-counting estimate of the dimension of a point set on the
    section [-1, 1] x [-pi/2, pi/2).

    P is rescaled by 2/pi so both axes span [-1, 1] and the epsilon
    side lengths are isotropic; boxes anchor at the lower-left corner
    and boundary points fall into the last box. Returns the least-squares
    slope of ln N(eps) against -ln eps, its standard error, and the
    occupancy counts.
    """
    epsilons = np.asarray(sorted(epsilons), dtype=float)
    if epsilons.size < 3:
        raise ValueError("need at least 3 box sizes")
    x = np.asarray(Q, dtype=float) + 1.0
    y = np.asarray(P, dtype=float) * (2.0 / np.pi) + 1.0
    counts = np.empty(epsilons.size)
    for i, eps in enumerate(epsilons):
        n_side = int(np.ceil(2.0 / eps - 1e-12))
        ix = np.minimum((x / eps).astype(np.int64), n_side - 1)
        iy = np.minimum((y / eps).astype(np.int64), n_side - 1)
        counts[i] = np.unique(ix * n_side + iy).size
    if int(np.sum(counts > 1)) < 3:
        raise ValueError("degenerate point set: fewer than 3 box sizes resolve "
                         "more than one box (attractor is a fixed point at this "
                         "resolution)")
    xfit = -np.log(epsilons)
    yfit = np.log(counts)
    coeffs, cov = np.polyfit(xfit, yfit, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0])), counts


@dataclass(frozen=True)
class HausdorffResult:
    d_H: float
    stderr: float
    epsilons: tuple
    counts: np.ndarray
    n_points: int


def hausdorff_dimension(params: ModelParams, n_init: int = 500,
                        epsilons=DEFAULT_EPSILONS, n_periods: int = 1000,
                        n_transient: int = DEFAULT_TRANSIENT) -> HausdorffResult:
    """Box-counting dimension of the attractor sampled by `n_init`
    random initial conditions, each contributing the post-transient
    stroboscopic (Q, P) points of `n_periods` periods."""
    rng = np.random.default_rng(params.seed)
    Q0 = rng.uniform(-1.0, 1.0, n_init)
    P0 = rng.uniform(-np.pi / 2, np.pi / 2, n_init)
    r = np.sqrt(1.0 - Q0**2)
    m0 = np.stack([r * np.cos(2 * P0), r * np.sin(2 * P0), Q0], axis=1)
    pts = stroboscopic_points(m0, params, n_periods, record_from=n_transient)
    Q, P = _qp_arrays(pts.reshape(-1, 3))
    d_H, err, counts = box_counting_dimension(Q, P, epsilons)
    return HausdorffResult(d_H, err, tuple(sorted(epsilons)), counts, Q.size)
