"""Finite-size dynamics along quantum-jump trajectories.

One driving period consists of tau/dt_q small steps under the
non-Hermitian no-jump propagator exp(-i H_nH dt), each step either
keeping the (renormalized) no-jump state with probability |U psi|^2 or
jumping to S_- psi / |S_- psi|, followed by the kick unitary
exp(-i 2K S_z^2 / N). A dense Lindblad integrator over the same model
serves as the validation oracle at small N.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import CollectiveOps, DickeState, ModelParams, build_collective_ops
from .observables import _ee_amps, _mz_amps, _sre_amps

__all__ = [
    "FloquetPropagators",
    "TrajectoryRecord",
    "EnsembleSeries",
    "build_propagators",
    "qj_step",
    "run_trajectory",
    "run_ensemble",
    "coherent_initial_states",
    "lindblad_dense_oracle",
    "PROBES",
]

log = logging.getLogger(__name__)

MAX_N = 1024
ORACLE_MAX_N = 12

PROBES = {
    "mz": lambda amps, N: _mz_amps(amps, N),
    "ee": lambda amps, N: _ee_amps(amps, N, max(1, N // 2)),
    "sre": lambda amps, N: _sre_amps(amps, N),
}


@dataclass(frozen=True)
class FloquetPropagators:
    """Precomputed one-step and one-period operators in the Dicke basis."""

    N: int
    dt: float
    steps_per_period: int
    U_nojump: np.ndarray       # exp(-i H_nH dt), dense (N+1)x(N+1)
    U_kick_diag: np.ndarray    # exp(-i 2K (N/2-k)^2 / N)
    U_free: np.ndarray         # exp(-i H_0 tau), gamma = 0 fast path
    ops: CollectiveOps
    gamma: float

    @property
    def sm_weights(self) -> np.ndarray:
        """Ladder weights w_k = sqrt((N-k)(k+1)) of S_-."""
        k = np.arange(self.N)
        return np.sqrt((self.N - k) * (k + 1.0))


def hamiltonian_h0(params: ModelParams, ops: CollectiveOps | None = None) -> np.ndarray:
    """H_0 = -2h S_x + (2/N) S_z^2 (the undriven infinite-range model)."""
    ops = ops or build_collective_ops(params.N)
    return -2.0 * params.h * ops.sx + (2.0 / params.N) * ops.sz2


def build_propagators(params: ModelParams, max_N: int = MAX_N) -> FloquetPropagators:
    """Dense matrix exponentials for one quantum-jump step and one kick.

    The no-jump generator is H_nH = H_0 - i (gamma/2S) S_+S_- with
    S = N/2; its exponential contracts norms (equality only on the
    S_--dark state), which is what supplies the jump probability.
    """
    N = params.N
    if N > max_N:
        raise ValueError(f"N = {N} exceeds the configured maximum {max_N}")
    steps = params.steps_q
    ops = build_collective_ops(N)
    H0 = hamiltonian_h0(params, ops)
    H_nH = H0.astype(complex) - 1j * (params.gamma / N) * ops.spsm
    U_nojump = expm(-1j * H_nH * params.dt_q)
    k = np.arange(N + 1)
    U_kick_diag = np.exp(-1j * 2.0 * params.K * (N / 2.0 - k) ** 2 / N)
    U_free = expm(-1j * H0.astype(complex) * params.tau)
    for arr in (U_nojump, U_kick_diag, U_free):
        arr.flags.writeable = False
    return FloquetPropagators(N=N, dt=params.dt_q, steps_per_period=steps,
                              U_nojump=U_nojump, U_kick_diag=U_kick_diag,
                              U_free=U_free, ops=ops, gamma=params.gamma)


def qj_step(psi: DickeState, props: FloquetPropagators,
            rng: np.random.Generator) -> tuple[DickeState, bool]:
    """One stochastic step: no-jump evolution or an S_- jump.

    Draws u ~ U[0,1); with phi = U_nojump psi, the no-jump branch fires
    when u < |phi|^2 and returns phi normalized, otherwise the state
    jumps to S_- psi (normalized). A jump drawn on an S_--dark state is
    replayed as no-jump and logged: its probability is analytically zero,
    so an occurrence signals a too-coarse dt.
    """
    u = rng.random()
    phi = props.U_nojump @ psi.amps
    p_nojump = float(np.real(np.vdot(phi, phi)))
    if u < p_nojump:
        return DickeState(phi, normalize=True), False
    lowered = np.zeros_like(psi.amps)
    lowered[1:] = props.sm_weights * psi.amps[:-1]
    nrm = np.linalg.norm(lowered)
    if nrm == 0.0:
        log.warning("jump drawn on an S_--dark state (p analytically 0); "
                    "treating as no-jump, consider a smaller dt_q")
        return DickeState(phi, normalize=True), False
    return DickeState(lowered / nrm, normalize=True), True


@dataclass(frozen=True)
class TrajectoryRecord:
    traj_id: int
    seed: tuple
    periods: np.ndarray                 # stroboscopic indices n (t = n tau)
    data: dict                          # probe name -> array over periods
    jumps: np.ndarray                   # jump count per period


@dataclass(frozen=True)
class EnsembleSeries:
    periods: np.ndarray
    mean: dict                          # probe -> mean over trajectories
    stderr: dict                        # probe -> sample std / sqrt(n_traj)
    n_traj: int
    stderr_defined: bool
    raw: dict | None = None             # probe -> (n_recorded, n_traj)


def _traj_rng(base_seed: int, traj_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(base_seed, traj_id)))


def coherent_initial_states(params: ModelParams, n_states: int,
                            id_offset: int = 0) -> np.ndarray:
    """(D, n_states) random spin coherent states, sphere-uniform angles
    (cos theta ~ U[-1,1], phi ~ U[0,2pi)); per-column seeding matches the
    trajectory-seed scheme so column i is reproducible in isolation."""
    from .core import spin_coherent_state

    D = params.N + 1
    out = np.empty((D, n_states), dtype=complex)
    for i in range(n_states):
        rng = _traj_rng(params.seed, id_offset + i)
        theta = float(np.arccos(rng.uniform(-1.0, 1.0)))
        phi = float(rng.uniform(0.0, 2.0 * np.pi))
        out[:, i] = spin_coherent_state(params.N, theta, phi).amps
    return out


def _evolve_batch(Psi: np.ndarray, params: ModelParams, props: FloquetPropagators,
                  gens: list, probes: tuple, record_from: int = 0,
                  n_periods: int | None = None):
    """Shared evolution engine on a (D, M) column batch.

    Column j consumes only gens[j], one uniform per sub-step, so each
    trajectory reproduces identically regardless of how the batch is
    composed. Returns (periods, data, jumps) with per-probe arrays of
    shape (n_recorded, M).
    """
    if n_periods is None:
        n_periods = params.n_periods
    if not 0 <= record_from < n_periods:
        raise ValueError("record_from must lie in [0, n_periods)")
    D, M = Psi.shape
    N = params.N
    steps = props.steps_per_period
    unitary = params.gamma == 0.0
    w = props.sm_weights
    n_rec = n_periods - record_from
    data = {p: np.empty((n_rec, M)) for p in probes}
    jumps = np.zeros((n_rec, M), dtype=np.int64)
    periods = np.arange(record_from + 1, n_periods + 1)
    for n in range(n_periods):
        if unitary:
            Psi = props.U_free @ Psi
        else:
            ublock = np.empty((steps, M))
            for j, g in enumerate(gens):
                ublock[:, j] = g.random(steps)
            per_jumps = np.zeros(M, dtype=np.int64)
            for s in range(steps):
                Phi = props.U_nojump @ Psi
                p_nojump = np.einsum("ij,ij->j", Phi.real, Phi.real) \
                    + np.einsum("ij,ij->j", Phi.imag, Phi.imag)
                jump = ublock[s] >= p_nojump
                if jump.any():
                    idx = np.nonzero(jump)[0]
                    lowered = np.zeros((D, idx.size), dtype=complex)
                    lowered[1:] = w[:, None] * Psi[:-1, idx]
                    nrm = np.linalg.norm(lowered, axis=0)
                    dark = nrm == 0.0
                    if dark.any():
                        log.warning("%d jump(s) drawn on S_--dark states; replayed "
                                    "as no-jump", int(dark.sum()))
                        jump[idx[dark]] = False
                        idx = idx[~dark]
                        lowered = lowered[:, ~dark]
                        nrm = nrm[~dark]
                    Phi[:, idx] = lowered / nrm
                    per_jumps += jump
                Phi /= np.linalg.norm(Phi, axis=0)
                Psi = Phi
        # kick, then renormalize; observables recorded at t_n^+
        Psi = props.U_kick_diag[:, None] * Psi
        Psi /= np.linalg.norm(Psi, axis=0)
        if n >= record_from:
            r = n - record_from
            if not unitary:
                jumps[r] = per_jumps
            for p in probes:
                fn = PROBES[p]
                col = data[p][r]
                for j in range(M):
                    col[j] = fn(Psi[:, j], N)
    return periods, data, jumps


def _validate_probes(probes) -> tuple:
    probes = tuple(probes)
    for p in probes:
        if p not in PROBES:
            raise ValueError(f"unknown probe {p!r}; choose from {sorted(PROBES)}")
    return probes


def run_trajectory(psi0: DickeState | None, params: ModelParams,
                   probes=("mz",), rng: np.random.Generator | None = None,
                   traj_id: int = 0, props: FloquetPropagators | None = None,
                   record_from: int = 0) -> TrajectoryRecord:
    """One quantum trajectory from psi0 (default: the fully polarized
    state |N/2, N/2>), recording the probes right after each kick."""
    probes = _validate_probes(probes)
    props = props or build_propagators(params)
    if psi0 is None:
        psi0 = DickeState.polarized(params.N)
    if psi0.N != params.N:
        raise ValueError("psi0 size does not match params.N")
    if rng is None:
        rng = _traj_rng(params.seed, traj_id)
    periods, data, jumps = _evolve_batch(psi0.amps[:, None].copy(), params, props,
                                         [rng], probes, record_from=record_from)
    return TrajectoryRecord(
        traj_id=traj_id, seed=(params.seed, traj_id), periods=periods,
        data={p: a[:, 0] for p, a in data.items()}, jumps=jumps[:, 0],
    )


def _ensemble_chunk(params: ModelParams, probes: tuple, lo: int, hi: int,
                    record_from: int, props: FloquetPropagators | None = None):
    """Evolve trajectories lo..hi-1; seeding is per absolute index, so
    the result is independent of how the ensemble is chunked."""
    props = props or build_propagators(params)
    if params.gamma == 0.0:
        Psi = coherent_initial_states(params, hi - lo, id_offset=lo)
        gens = [None] * (hi - lo)
    else:
        amps = DickeState.polarized(params.N).amps
        Psi = np.tile(amps[:, None], (1, hi - lo))
        gens = [_traj_rng(params.seed, j) for j in range(lo, hi)]
    return _evolve_batch(Psi, params, props, gens, probes, record_from=record_from)


def _ensemble_chunk_star(args):
    return _ensemble_chunk(*args)


def run_ensemble(params: ModelParams, probes=("mz",),
                 props: FloquetPropagators | None = None,
                 record_from: int = 0, keep_raw: bool = True,
                 n_workers: int = 1) -> EnsembleSeries:
    """Trajectory-averaged stroboscopic series with standard errors.

    For gamma > 0 all params.n_traj trajectories start from the fully
    polarized state and differ by their jump randomness. For gamma = 0
    a trajectory carries no randomness, so the ensemble averages over
    params.n_traj random spin coherent initial states instead. Worker
    processes split the ensemble into contiguous index chunks and the
    merge is ordered by trajectory index.
    """
    probes = _validate_probes(probes)
    M = params.n_traj
    if n_workers > 1 and M > 1:
        import multiprocessing as mp

        n_workers = min(n_workers, M)
        bounds = np.linspace(0, M, n_workers + 1).astype(int)
        jobs = [(params, probes, int(lo), int(hi), record_from)
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with mp.get_context("fork").Pool(len(jobs)) as pool:
            parts = pool.map(_ensemble_chunk_star, jobs)
        periods = parts[0][0]
        data = {p: np.concatenate([part[1][p] for part in parts], axis=1)
                for p in probes}
    else:
        props = props or build_propagators(params)
        periods, data, _ = _ensemble_chunk(params, probes, 0, M, record_from,
                                           props=props)
    mean = {p: a.mean(axis=1) for p, a in data.items()}
    if M > 1:
        stderr = {p: a.std(axis=1, ddof=1) / np.sqrt(M) for p, a in data.items()}
        defined = True
    else:
        stderr = {p: np.zeros(a.shape[0]) for p, a in data.items()}
        defined = False
    return EnsembleSeries(periods=periods, mean=mean, stderr=stderr, n_traj=M,
                          stderr_defined=defined, raw=data if keep_raw else None)


def lindblad_dense_oracle(rho0: np.ndarray, params: ModelParams,
                          n_periods: int, dt: float | None = None) -> np.ndarray:
    """Dense master-equation integration (validation oracle, N <= 12).

    RK4 on d rho/dt = -i[H_0, rho] + (gamma/S)(S- rho S+ - {S+S-, rho}/2)
    between kicks and rho -> U_K rho U_K^dagger at each kick. Returns the
    stroboscopic states rho(t_n^+), n = 0..n_periods (index 0 = rho0).
    The default step tau/2000 keeps the RK4 error well under the trace
    and purity tolerances used in the tests.
    """
    N = params.N
    if N > ORACLE_MAX_N:
        raise ValueError(f"N = {N} beyond the oracle limit {ORACLE_MAX_N}")
    rho = np.asarray(rho0, dtype=complex).copy()
    D = N + 1
    if rho.shape != (D, D):
        raise ValueError("rho0 has the wrong shape")
    if abs(np.trace(rho).real - 1.0) > 1e-9 or np.max(np.abs(rho - rho.conj().T)) > 1e-9:
        raise ValueError("rho0 must be Hermitian with unit trace")
    if dt is None:
        dt = params.tau / 2000.0
    n_steps = round(params.tau / dt)
    if abs(params.tau / dt - n_steps) > 1e-9:
        raise ValueError("dt does not divide tau")
    ops = build_collective_ops(N)
    H0 = hamiltonian_h0(params, ops).astype(complex)
    sm, sp, spsm = ops.sm, ops.sp, ops.spsm
    rate = params.gamma / params.spin

    def rhs(r):
        out = -1j * (H0 @ r - r @ H0)
        if rate:
            out += rate * (sm @ r @ sp - 0.5 * (spsm @ r + r @ spsm))
        return out

    k_diag = np.arange(D)
    kick = np.exp(-1j * 2.0 * params.K * (N / 2.0 - k_diag) ** 2 / N)
    kick_mat = np.outer(kick, kick.conj())
    series = np.empty((n_periods + 1, D, D), dtype=complex)
    series[0] = rho
    for n in range(n_periods):
        for _ in range(n_steps):
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * dt * k1)
            k3 = rhs(rho + 0.5 * dt * k2)
            k4 = rhs(rho + dt * k3)
            rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = kick_mat * rho
        series[n + 1] = rho
    return series
