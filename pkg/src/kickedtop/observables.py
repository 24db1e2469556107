"""Nonlinear state functionals on Dicke states.

Stabilizer 2-Renyi entropy through permutational Pauli classes,
bipartite entanglement entropy through the symmetric Schmidt splitting,
and the plain magnetization expectation. All Pauli-string quantities
exploit the fact that strings differing only by a site permutation have
equal expectation values on permutation-symmetric states, so the
4^N-term Pauli sum collapses to O(N^3) classes (a, b, c) counting the
X, Y and Z factors of a string.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DickeState, ln_binom

__all__ = [
    "PauliClass",
    "pauli_class_expectation",
    "sre_m2",
    "SchmidtMatrix",
    "schmidt_matrix",
    "entanglement_entropy",
    "mz_expect",
    "dicke_to_full",
]

LN2 = math.log(2.0)
_FULL_SPACE_MAX_N = 12


@dataclass(frozen=True)
class PauliClass:
    """Permutation class of Pauli strings with a X, b Y and c Z factors
    (and N - a - b - c identities)."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise ValueError("class counts must be non-negative")

    def validate(self, N: int) -> None:
        if self.a + self.b + self.c > N:
            raise ValueError(f"class {self} does not fit into {N} sites")

    def multiplicity(self, N: int) -> int:
        """Number of strings in the class: the multinomial coefficient."""
        self.validate(N)
        d = N - self.a - self.b - self.c
        return math.factorial(N) // (
            math.factorial(self.a) * math.factorial(self.b)
            * math.factorial(self.c) * math.factorial(d)
        )


def _signed_binom_poly(plus: int, minus: int) -> list[int]:
    """Exact integer coefficients of (1+t)^plus (1-t)^minus.

    Exactness matters: the coefficients carry heavy sign cancellations
    (odd ones of (1-t^2)^m are exactly zero) which float convolutions
    would turn into O(2^f eps) noise.
    """
    pa = [math.comb(plus, i) for i in range(plus + 1)]
    pb = [math.comb(minus, j) * (-1) ** j for j in range(minus + 1)]
    out = [0] * (plus + minus + 1)
    for i, ca in enumerate(pa):
        for j, cb in enumerate(pb):
            out[i + j] += ca * cb
    return out


def pauli_class_expectation(psi: DickeState, cls: PauliClass) -> float:
    """<psi|P|psi> for one representative string of the class.

    The representative puts X on the first a sites, Y on the next b and
    Z on the next c. With f = a + b flip sites, the Dicke matrix element
    <D_k'|P|D_k> is nonzero only for k' = k + f - 2j, where j counts the
    down spins of the source bitstring inside the flip block, and equals

        [C(N,k) C(N,k')]^(-1/2) i^b
          * sum_{jx+jy=j} (-1)^{jy} C(a,jx) C(b,jy)
          * sum_z (-1)^z C(c,z) C(N-f-c, k-j-z).

    The two inner sums are the coefficient extractions
    [t^j](1+t)^a (1-t)^b and [t^u](1-t)^c (1+t)^d with u = k - j.
    """
    N = psi.N
    cls.validate(N)
    a, b, c = cls.a, cls.b, cls.c
    f = a + b
    d = N - f - c
    g = np.array(_signed_binom_poly(a, b), dtype=float)        # length f+1
    hh = np.array(_signed_binom_poly(d, c), dtype=float)       # length N-f+1
    lnC = ln_binom(N, np.arange(N + 1))
    amps = psi.amps
    val = 0.0 + 0.0j
    for j in range(f + 1):
        u = np.arange(N - f + 1)
        k = u + j
        kp = u + f - j
        w = np.exp(-0.5 * (lnC[k] + lnC[kp]))
        val += g[j] * np.sum(np.conj(amps[kp]) * amps[k] * hh * w)
    val *= 1j**b
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"Pauli expectation not real: {val}")
    return float(val.real)


@lru_cache(maxsize=8)
def _class_tables(N: int):
    """Per-size cache for the class-summed Pauli spectrum.

    For each flip count f the tables hold G[b, j] = [t^j](1+t)^(f-b)(1-t)^b,
    H[c, u] = [t^u](1-t)^c (1+t)^(N-f-c), the binomial weights
    W[j, u] = [C(N,u+j) C(N,u+f-j)]^(-1/2), the class multiplicities
    M[b, c] and the i^b phases, so that one matrix sandwich per f yields
    every class expectation with a + b = f at once.
    """
    lnC = ln_binom(N, np.arange(N + 1))
    lnfact = np.array([math.lgamma(n + 1) for n in range(N + 1)])
    tables = []
    for f in range(N + 1):
        nf = N - f
        G = np.empty((f + 1, f + 1))
        for b in range(f + 1):
            G[b, :] = _signed_binom_poly(f - b, b)
        H = np.empty((nf + 1, nf + 1))
        for c in range(nf + 1):
            H[c, :] = _signed_binom_poly(nf - c, c)
        j = np.arange(f + 1)[:, None]
        u = np.arange(nf + 1)[None, :]
        k = u + j
        kp = u + f - j
        W = np.exp(-0.5 * (lnC[k] + lnC[kp]))
        b_arr = np.arange(f + 1)
        c_arr = np.arange(nf + 1)
        ln_mult = (
            lnfact[N]
            - (lnfact[f - b_arr] + lnfact[b_arr])[:, None]
            - (lnfact[c_arr] + lnfact[nf - c_arr])[None, :]
        )
        mult = np.exp(ln_mult)
        phase = (1j) ** b_arr
        for arr in (G, H, W, mult):
            arr.flags.writeable = False
        tables.append((G, H, W, mult, phase, k, kp))
    return tables


def _pauli_quartic_class_sum(amps: np.ndarray, N: int) -> float:
    """sum over all 4^N Pauli strings of <P>^4, via permutation classes."""
    total = 0.0
    max_imag = 0.0
    for G, H, W, mult, phase, k, kp in _class_tables(N):
        V = np.conj(amps[kp]) * amps[k] * W
        E = (G @ V) @ H.T
        E = phase[:, None] * E
        max_imag = max(max_imag, float(np.max(np.abs(E.imag))))
        total += float(np.sum(mult * E.real**4))
    if max_imag > 1e-8:
        raise ArithmeticError(f"Pauli spectrum acquired imaginary part {max_imag}")
    return total


def sre_m2(psi: DickeState, norm_tol: float = 1e-8) -> float:
    """Stabilizer 2-Renyi entropy of a pure Dicke-sector state.

    M2 = -ln( sum_P <P>^4 / 2^(2N) ) - N ln 2, assembled in log space;
    zero for stabilizer states, bounded above by N ln 2.
    """
    if abs(psi.norm - 1.0) > norm_tol:
        raise ValueError(f"state norm {psi.norm} is not 1 within {norm_tol}")
    return _sre_amps(psi.amps, psi.N)


def _sre_amps(amps: np.ndarray, N: int) -> float:
    quartic = _pauli_quartic_class_sum(amps, N)
    # literal form: -ln(quartic) + 2N ln2 from the 2^(2N), minus N ln2
    return -(math.log(quartic) - 2 * N * LN2) - N * LN2


@dataclass(frozen=True)
class SchmidtMatrix:
    """Amplitudes of a Dicke-sector state rearranged over an (N_A, N_B)
    bipartition: M[kA, kB] = c_{kA+kB} sqrt(C(N_A,kA) C(N_B,kB) / C(N,kA+kB)).
    Its singular values are the Schmidt coefficients."""

    N_A: int
    N_B: int
    matrix: np.ndarray

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)


def schmidt_matrix(psi: DickeState, N_A: int) -> SchmidtMatrix:
    N = psi.N
    if not 1 <= N_A <= N - 1:
        raise ValueError(f"N_A = {N_A} outside 1..{N - 1}")
    N_B = N - N_A
    kA = np.arange(N_A + 1)[:, None]
    kB = np.arange(N_B + 1)[None, :]
    k = kA + kB
    ln_w = 0.5 * (ln_binom(N_A, kA) + ln_binom(N_B, kB) - ln_binom(N, k))
    return SchmidtMatrix(N_A, N_B, psi.amps[k] * np.exp(ln_w))


def entanglement_entropy(psi: DickeState, N_A: int | None = None) -> float:
    """Von Neumann entropy of the reduced state of N_A spins.

    Defaults to the half cut N_A = N//2. The Schmidt coefficients squared
    are taken as the eigenvalues of M M^dagger, which is the reduced
    density matrix itself in the sub-block Dicke bases.
    """
    if N_A is None:
        N_A = psi.N // 2
    if not 1 <= N_A <= psi.N - 1:
        raise ValueError(f"N_A = {N_A} outside 1..{psi.N - 1}")
    return _ee_amps(psi.amps, psi.N, N_A)


@lru_cache(maxsize=16)
def _schmidt_weights(N: int, N_A: int) -> np.ndarray:
    kA = np.arange(N_A + 1)[:, None]
    kB = np.arange(N - N_A + 1)[None, :]
    w = np.exp(0.5 * (ln_binom(N_A, kA) + ln_binom(N - N_A, kB)
                      - ln_binom(N, kA + kB)))
    w.flags.writeable = False
    return w


def _ee_amps(amps: np.ndarray, N: int, N_A: int) -> float:
    w = _schmidt_weights(N, N_A)
    kA = np.arange(N_A + 1)[:, None]
    kB = np.arange(N - N_A + 1)[None, :]
    M = amps[kA + kB] * w
    if M.shape[0] > M.shape[1]:
        M = M.T
    p = np.linalg.eigvalsh(M @ M.conj().T)
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log(p)))


def mz_expect(psi: DickeState) -> float:
    """<m_z> = sum_k |c_k|^2 (N/2 - k) / (N/2), in [-1, 1]."""
    return _mz_amps(psi.amps, psi.N)


def _mz_amps(amps: np.ndarray, N: int) -> float:
    k = np.arange(N + 1)
    return float(np.sum(np.abs(amps) ** 2 * (N / 2.0 - k)) / (N / 2.0))


def dicke_to_full(psi: DickeState) -> np.ndarray:
    """Expand to the full 2^N tensor-product space (test oracle).

    Each c_k spreads uniformly over the C(N,k) bitstrings of Hamming
    weight k (bit 1 = down spin).
    """
    N = psi.N
    if N > _FULL_SPACE_MAX_N:
        raise ValueError(f"N = {N} beyond the full-space limit {_FULL_SPACE_MAX_N}")
    weights = np.array([bin(x).count("1") for x in range(2**N)])
    scale = np.exp(-0.5 * ln_binom(N, np.arange(N + 1)))
    return psi.amps[weights] * scale[weights]
