import math

import numpy as np
import pytest

from kickedtop.core import DickeState, spin_coherent_state
from kickedtop.observables import (
    PauliClass,
    dicke_to_full,
    entanglement_entropy,
    mz_expect,
    pauli_class_expectation,
    schmidt_matrix,
    sre_m2,
)
from kickedtop.observables import _pauli_quartic_class_sum
from kickedtop.bruteforce import (
    entanglement_entropy_full,
    pauli_expectation_full,
    project_state_to_dicke,
    sre_m2_full,
)

from conftest import random_state


class TestPauliClassExpectation:
    def test_identity_class(self, rng):
        for N in (1, 4, 9):
            psi = random_state(rng, N)
            assert pauli_class_expectation(psi, PauliClass(0, 0, 0)) == pytest.approx(1.0)

    def test_triplet_zz(self):
        # |up down> + |down up>: Z factors anticorrelated
        psi = DickeState.basis(2, 1)
        assert pauli_class_expectation(psi, PauliClass(0, 0, 2)) == pytest.approx(-1.0)

    def test_rejects_oversized_class(self):
        with pytest.raises(ValueError):
            pauli_class_expectation(DickeState.polarized(2), PauliClass(2, 1, 0))
        with pytest.raises(ValueError):
            PauliClass(-1, 0, 0)

    def test_matches_full_space_on_random_pairs(self, rng):
        # 200 random (state, class) pairs across N <= 8
        for _ in range(200):
            N = int(rng.integers(1, 9))
            psi = random_state(rng, N)
            while True:
                a, b, c = (int(rng.integers(0, N + 1)) for _ in range(3))
                if a + b + c <= N:
                    break
            cls = PauliClass(a, b, c)
            got = pauli_class_expectation(psi, cls)
            want = pauli_expectation_full(psi, cls)
            assert got == pytest.approx(want, abs=1e-9)

    def test_multiplicity_partition_of_strings(self):
        # classes partition the 4^N Pauli strings
        for N in (1, 2, 3, 6, 10, 12):
            total = 0
            for a in range(N + 1):
                for b in range(N + 1 - a):
                    for c in range(N + 1 - a - b):
                        total += PauliClass(a, b, c).multiplicity(N)
            assert total == 4**N

    def test_multiplicity_partition_large(self):
        total = sum(
            PauliClass(a, b, c).multiplicity(64)
            for a in range(65) for b in range(65 - a) for c in range(65 - a - b)
        )
        assert total == 4**64


class TestStabilizerRenyiEntropy:
    def test_polarized_is_stabilizer(self):
        for N in (1, 2, 7, 16):
            assert abs(sre_m2(DickeState.polarized(N))) < 1e-9

    def test_single_qubit_t_like_state(self):
        amps = np.array([1.0, np.exp(1j * np.pi / 4)]) / math.sqrt(2)
        # direct 4-term Pauli sum: <I>^4 + <X>^4 + <Y>^4 + <Z>^4 = 3/2
        assert sre_m2(DickeState(amps)) == pytest.approx(math.log(4 / 3), abs=1e-12)

    def test_triplet_is_stabilizer(self):
        # 16-term Pauli sum equals 4 for the Bell-class state
        psi = DickeState.basis(2, 1)
        assert abs(sre_m2(psi)) < 1e-12
        assert _pauli_quartic_class_sum(psi.amps, 2) == pytest.approx(4.0)

    @pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6, 7, 8])
    def test_matches_full_space(self, rng, N):
        for _ in range(6):
            psi = random_state(rng, N)
            assert sre_m2(psi) == pytest.approx(sre_m2_full(psi), abs=1e-9)

    def test_bounds(self, rng):
        for N in (1, 4, 11, 24):
            for _ in range(8):
                m = sre_m2(random_state(rng, N))
                assert m >= -1e-10
                assert m <= N * math.log(2.0)

    def test_global_phase_invariance(self, rng):
        psi = random_state(rng, 9)
        rotated = DickeState(np.exp(1j * 0.8372) * psi.amps)
        assert sre_m2(rotated) == pytest.approx(sre_m2(psi), abs=1e-12)

    def test_normalization_identity(self, rng):
        # Eq-level identity: -ln(sum/2^(2N)) - N ln2 == -ln(sum/2^N)
        for N in (1, 3, 6, 10):
            psi = random_state(rng, N)
            quartic = _pauli_quartic_class_sum(psi.amps, N)
            literal = -math.log(quartic / 4.0**N) - N * math.log(2.0)
            reduced = -math.log(quartic / 2.0**N)
            assert sre_m2(psi) == pytest.approx(literal, abs=1e-10)
            assert literal == pytest.approx(reduced, abs=1e-10)

    def test_rejects_unnormalized(self):
        psi = DickeState.polarized(3)
        bad = object.__new__(DickeState)
        object.__setattr__(bad, "N", 3)
        object.__setattr__(bad, "amps", psi.amps * 1.01)
        with pytest.raises(ValueError):
            sre_m2(bad)


class TestEntanglementEntropy:
    def test_polarized_product_state(self):
        assert entanglement_entropy(DickeState.polarized(8)) == pytest.approx(0.0, abs=1e-12)

    def test_triplet_maximal(self):
        assert entanglement_entropy(DickeState.basis(2, 1), 1) == pytest.approx(math.log(2))

    @pytest.mark.parametrize("N", [2, 4, 6, 8, 10])
    def test_matches_full_space(self, rng, N):
        for _ in range(5):
            psi = random_state(rng, N)
            N_A = int(rng.integers(1, N))
            got = entanglement_entropy(psi, N_A)
            want = entanglement_entropy_full(psi, N_A)
            assert got == pytest.approx(want, abs=1e-9)

    def test_schmidt_symmetry(self, rng):
        for N in (3, 7, 12):
            psi = random_state(rng, N)
            for N_A in range(1, N):
                assert entanglement_entropy(psi, N_A) == pytest.approx(
                    entanglement_entropy(psi, N - N_A), abs=1e-10)

    def test_bounds(self, rng):
        for N in (2, 6, 14):
            psi = random_state(rng, N)
            N_A = N // 2
            ee = entanglement_entropy(psi, N_A)
            assert 0.0 <= ee <= math.log(min(N_A, N - N_A) + 1) + 1e-12

    def test_schmidt_matrix_properties(self, rng):
        psi = random_state(rng, 9)
        sm = schmidt_matrix(psi, 4)
        assert np.linalg.norm(sm.matrix) == pytest.approx(1.0, abs=1e-10)
        s = sm.singular_values()
        assert np.all(s >= -1e-12) and np.all(s <= 1.0 + 1e-12)

    def test_rejects_bad_cut(self):
        psi = DickeState.polarized(4)
        with pytest.raises(ValueError):
            entanglement_entropy(psi, 0)
        with pytest.raises(ValueError):
            entanglement_entropy(psi, 4)

    def test_coherent_states_unentangled(self, rng):
        theta, phi = 1.234, 0.77
        psi = spin_coherent_state(10, theta, phi)
        assert entanglement_entropy(psi) == pytest.approx(0.0, abs=1e-10)


class TestMagnetization:
    def test_polarized(self):
        assert mz_expect(DickeState.polarized(5)) == pytest.approx(1.0)

    def test_all_down(self):
        assert mz_expect(DickeState.basis(6, 6)) == pytest.approx(-1.0)

    def test_uniform_amplitudes(self):
        psi = DickeState(np.ones(5), normalize=True)
        assert mz_expect(psi) == pytest.approx(0.0, abs=1e-14)


class TestDickeToFull:
    def test_n2_middle_state(self):
        full = dicke_to_full(DickeState.basis(2, 1))
        assert np.allclose(full, [0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0])

    def test_norm(self, rng):
        for N in (1, 5, 9):
            full = dicke_to_full(random_state(rng, N))
            assert np.linalg.norm(full) == pytest.approx(1.0, abs=1e-12)

    def test_roundtrip_projection(self, rng):
        for N in (2, 6, 10):
            psi = random_state(rng, N)
            back = project_state_to_dicke(dicke_to_full(psi), N)
            assert np.max(np.abs(back - psi.amps)) < 1e-12

    def test_rejects_large_n(self):
        with pytest.raises(ValueError):
            dicke_to_full(DickeState.polarized(13))
