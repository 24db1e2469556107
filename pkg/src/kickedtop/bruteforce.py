"""Full 2^N tensor-product oracles.

Everything here is deliberately independent of the Dicke-basis fast
paths: operators are assembled site by site, Pauli strings act through
bit arithmetic, and reduced states come from a plain reshape. Used by
the test suite to gate the O(N) collective-sector algebra; capped at
small N.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DickeState
from .observables import PauliClass, dicke_to_full

__all__ = [
    "full_space_ops",
    "project_to_dicke",
    "pauli_expectation_full",
    "pauli_quartic_sum_full",
    "sre_m2_full",
    "entanglement_entropy_full",
]

_MAX_N = 12


def _check_budget(N: int):
    if N > _MAX_N:
        raise ValueError(f"N = {N} beyond the brute-force budget {_MAX_N}")


def _site_op(op: np.ndarray, N: int, site: int) -> np.ndarray:
    mats = [np.eye(2)] * N
    mats[site] = op
    out = np.array([[1.0]])
    for m in mats:
        out = np.kron(out, m)
    return out


def full_space_ops(N: int) -> dict[str, np.ndarray]:
    """Collective S_alpha = (1/2) sum_i sigma_alpha^(i) on all 2^N states."""
    _check_budget(N)
    sx1 = np.array([[0, 1], [1, 0]], dtype=complex)
    sy1 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz1 = np.array([[1, 0], [0, -1]], dtype=complex)
    dim = 2**N
    Sx = np.zeros((dim, dim), dtype=complex)
    Sy = np.zeros((dim, dim), dtype=complex)
    Sz = np.zeros((dim, dim), dtype=complex)
    for i in range(N):
        Sx += 0.5 * _site_op(sx1, N, i)
        Sy += 0.5 * _site_op(sy1, N, i)
        Sz += 0.5 * _site_op(sz1, N, i)
    Sp = Sx + 1j * Sy
    Sm = Sx - 1j * Sy
    return {"sx": Sx, "sy": Sy, "sz": Sz, "sp": Sp, "sm": Sm,
            "sz2": Sz @ Sz, "spsm": Sp @ Sm}


def _dicke_basis_full(N: int) -> np.ndarray:
    """Rows: the N+1 Dicke basis vectors expanded to 2^N amplitudes."""
    rows = []
    for k in range(N + 1):
        rows.append(dicke_to_full(DickeState.basis(N, k)))
    return np.array(rows)


def project_to_dicke(op_full: np.ndarray, N: int) -> np.ndarray:
    """Projection of a full-space operator onto the symmetric sector."""
    _check_budget(N)
    B = _dicke_basis_full(N)
    return B.conj() @ op_full @ B.T


def project_state_to_dicke(full: np.ndarray, N: int) -> np.ndarray:
    """Amplitudes <D_k|full>; recovers c_k for symmetric-sector vectors."""
    _check_budget(N)
    return _dicke_basis_full(N).conj() @ full


def pauli_expectation_full(psi: DickeState, cls: PauliClass) -> float:
    """<P> for the representative string (X^a Y^b Z^c I^...), acting on
    the expanded state through bit masks."""
    N = psi.N
    cls.validate(N)
    _check_budget(N)
    full = dicke_to_full(psi)
    a, b, c = cls.a, cls.b, cls.c
    # site i occupies bit (N-1-i); representative fills sites left to right
    bit = lambda i: 1 << (N - 1 - i)
    x_mask = sum(bit(i) for i in range(a + b))         # X and Y flip
    y_mask = sum(bit(i) for i in range(a, a + b))
    z_mask = sum(bit(i) for i in range(a + b, a + b + c))
    idx = np.arange(2**N)
    # Y|0> = i|1>, Y|1> = -i|0>, Z|1> = -|1>; phases act on the source
    y_down = np.array([bin(x & y_mask).count("1") for x in idx])
    z_down = np.array([bin(x & z_mask).count("1") for x in idx])
    phase = (1j) ** b * (-1.0) ** (y_down + z_down)
    val = np.sum(np.conj(full[idx ^ x_mask]) * phase * full[idx])
    assert abs(val.imag) < 1e-10
    return float(val.real)


def _fwht(a: np.ndarray) -> np.ndarray:
    """In-place-style Walsh-Hadamard transform (unnormalized)."""
    a = a.copy()
    h = 1
    n = a.size
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.concatenate([a[:, 0, :] + a[:, 1, :], a[:, 0, :] - a[:, 1, :]], axis=1)
        a = a.reshape(n)
        h *= 2
    return a


def pauli_quartic_sum_full(full: np.ndarray, N: int) -> float:
    """sum_P <P>^4 over all 4^N strings of the full space.

    Strings are X^a Z^b with i^{|a & b|} supplying the Y phases; for each
    flip mask the Z sum over all masks is one Walsh-Hadamard transform.
    """
    _check_budget(N)
    dim = 2**N
    idx = np.arange(dim)
    popcount = np.array([bin(x).count("1") for x in idx])
    total = 0.0
    for a in range(dim):
        v = np.conj(full[idx ^ a]) * full[idx]
        w = _fwht(v)                      # w[b] = <X^a Z^b> up to Y phases
        ev = (1j) ** popcount[a & idx] * w
        assert np.max(np.abs(ev.imag)) < 1e-9
        total += float(np.sum(ev.real**4))
    return total


def sre_m2_full(psi: DickeState) -> float:
    quartic = pauli_quartic_sum_full(dicke_to_full(psi), psi.N)
    return psi.N * math.log(2.0) - math.log(quartic)


def entanglement_entropy_full(psi: DickeState, N_A: int) -> float:
    """EE from the dense reduced density matrix of the expanded state."""
    N = psi.N
    _check_budget(N)
    full = dicke_to_full(psi).reshape(2**N_A, 2 ** (N - N_A))
    rho_A = full @ full.conj().T
    p = np.linalg.eigvalsh(rho_A)
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log(p)))
