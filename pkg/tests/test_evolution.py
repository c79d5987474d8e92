import json
import math
import os
import tempfile
import time
import unittest

import numpy as np
import numpy.testing as npt
import scipy.linalg

from src.config_thresholds import HAMILTONIAN_SUITE_THRESHOLDS, LINALG_TOLERANCES
from src.ontology.errors import (
    DimensionMismatchError,
    DomainError,
    NotUnitaryError,
    ResourceLimitError,
    UnsupportedOperationError,
)
from src.ontology.evolution import (
    Branch,
    GeneralizedPermutation,
    NotInvertible,
    UnitaryMatrix,
    bit_shift_universe,
    cogwheel,
    dump_universe,
    evolve,
    extract_hamiltonian,
    from_update_rule,
    load_universe,
    matrix_to_permutation,
    period,
    spectrum,
    to_matrix,
    transform_hamiltonian,
    universe_from_dict,
    unitarity_error,
)
from src.ontology.ontic import StateVector, classify_state
from src.ontology.utils import max_abs
from tests.universe_generator import UniverseGenerator

TOL = LINALG_TOLERANCES['reconstruction']


class TestUniverseConstruction(unittest.TestCase):
    """Costruttori di leggi di evoluzione"""

    def test_cogwheel_targets(self):
        npt.assert_array_equal(cogwheel(3).target, [1, 2, 0])
        npt.assert_array_equal(cogwheel(1).target, [0])
        with self.assertRaises(DomainError):
            cogwheel(0)

    def test_cogwheel_evolution(self):
        law = cogwheel(3)
        final = evolve(StateVector.basis(3, 0), law, 1)
        self.assertEqual(classify_state(final).index, 1)
        final = evolve(StateVector.basis(3, 0), law, 3)
        self.assertEqual(classify_state(final).index, 0)

    def test_update_rule_collision(self):
        result = from_update_rule([1, 1, 0])
        self.assertIsInstance(result, NotInvertible)
        self.assertEqual(result.collision, ((0, 1), 1))

    def test_update_rule_out_of_range(self):
        with self.assertRaises(DomainError):
            from_update_rule([0, 3, 1])

    def test_update_rule_with_phases(self):
        law = from_update_rule([1, 0], [0.5, -0.5])
        self.assertIsInstance(law, GeneralizedPermutation)
        self.assertFalse(law.is_pure)

    def test_constructor_rejects_non_bijection(self):
        with self.assertRaises(DomainError):
            GeneralizedPermutation([0, 0, 1])
        with self.assertRaises(DimensionMismatchError):
            GeneralizedPermutation([1, 0], [0.1])

    def test_bit_shift_lsb_convention(self):
        law = bit_shift_universe(3)
        # 100₂ = 4 -> 001₂ = 1
        self.assertEqual(int(law.target[4]), 1)
        self.assertEqual(int(law.target[1]), 2)
        self.assertEqual(int(law.target[0]), 0)
        self.assertEqual(int(law.target[7]), 7)

    def test_bit_shift_period_is_site_count(self):
        for sites in range(1, 9):
            self.assertEqual(period(bit_shift_universe(sites)), sites)

    def test_bit_shift_resource_limit(self):
        with self.assertRaises(ResourceLimitError):
            bit_shift_universe(13)


class TestPermutationAlgebra(unittest.TestCase):

    def setUp(self):
        self.generator = UniverseGenerator(seed=21)

    def test_period_lcm_of_cycles(self):
        self.assertEqual(period(GeneralizedPermutation([1, 0, 3, 4, 2])), 6)
        self.assertEqual(period(GeneralizedPermutation.identity(4)), 1)

    def test_period_of_phased_law_unsupported(self):
        with self.assertRaises(UnsupportedOperationError):
            period(GeneralizedPermutation([1, 0], [0.3, 0.0]))

    def test_period_returns_to_identity(self):
        for _ in range(30):
            law = self.generator.pure_permutation(self.generator.dimension(1, 40))
            k = period(law)
            npt.assert_array_equal(law.power(k).target, np.arange(law.dim))
            for j in range(1, min(k, 50)):
                self.assertFalse(np.array_equal(law.power(j).target, np.arange(law.dim)))

    def test_inverse_composes_to_identity(self):
        for _ in range(30):
            law = self.generator.generalized_permutation(self.generator.dimension())
            product = to_matrix(law.compose(law.inverse())).entries
            npt.assert_allclose(product, np.eye(law.dim), atol=1e-12)

    def test_power_matches_matrix_power(self):
        for _ in range(20):
            law = self.generator.generalized_permutation(self.generator.dimension(2, 16))
            k = int(self.generator.rng.integers(-20, 21))
            expected = np.linalg.matrix_power(to_matrix(law).entries, k)
            npt.assert_allclose(to_matrix(law.power(k)).entries, expected, atol=1e-10)

    def test_evolve_matches_matrix_action(self):
        for _ in range(30):
            dim = self.generator.dimension(2, 32)
            law = self.generator.generalized_permutation(dim)
            state = self.generator.superposed_state(dim)
            steps = int(self.generator.rng.integers(0, 10))
            expected = np.linalg.matrix_power(to_matrix(law).entries, steps) @ state.amplitudes
            npt.assert_allclose(evolve(state, law, steps).amplitudes, expected, atol=1e-12)

    def test_evolve_backwards(self):
        law = self.generator.generalized_permutation(12)
        state = self.generator.superposed_state(12)
        self.assertTrue(evolve(evolve(state, law, 17), law, -17).allclose(state))

    def test_evolve_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            evolve(StateVector.basis(3, 0), cogwheel(4), 1)

    def test_to_matrix_entry_convention(self):
        law = GeneralizedPermutation([2, 0, 1], [0.0, math.pi / 2, 0.0])
        entries = to_matrix(law).entries
        self.assertAlmostEqual(entries[0, 1], 1j, places=15)
        self.assertEqual(entries[2, 0], 1.0)

    def test_to_matrix_is_unitary(self):
        for _ in range(50):
            law = self.generator.generalized_permutation(self.generator.dimension(1, 64))
            self.assertLessEqual(unitarity_error(to_matrix(law).entries), 1e-12)
        self.assertEqual(unitarity_error(to_matrix(cogwheel(256)).entries), 0.0)

    def test_full_period_restores_superposition(self):
        for _ in range(50):
            dim = self.generator.dimension(2, 64)
            law = self.generator.pure_permutation(dim)
            state = self.generator.superposed_state(dim)
            final = evolve(state, law, period(law))
            self.assertLessEqual(max_abs(final.amplitudes - state.amplitudes), 1e-12)

    def test_matrix_to_permutation(self):
        law = self.generator.generalized_permutation(10)
        recovered = matrix_to_permutation(to_matrix(law))
        npt.assert_array_equal(recovered.target, law.target)
        self.assertIsNone(matrix_to_permutation(self.generator.dense_unitary(4)))

    def test_cycles(self):
        self.assertEqual(GeneralizedPermutation([1, 0, 3, 4, 2]).cycles(), [[0, 1], [2, 3, 4]])


class TestUnitaryMatrix(unittest.TestCase):

    def test_rejects_non_unitary(self):
        with self.assertRaises(NotUnitaryError):
            UnitaryMatrix(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with self.assertRaises(DomainError):
            UnitaryMatrix(np.ones((2, 3)))

    def test_adjoint(self):
        unitary = UniverseGenerator(seed=5).dense_unitary(6)
        npt.assert_allclose(unitary.adjoint().entries @ unitary.entries, np.eye(6), atol=1e-12)


class TestSpectrum(unittest.TestCase):
    """Autofasi, finestre e estrazione dell'Hamiltoniana"""

    def _assert_cogwheel_phases(self, n):
        decomposition = spectrum(to_matrix(cogwheel(n)))
        expected = 2.0 * math.pi * np.arange(n) / n
        npt.assert_allclose(decomposition.eigenphases, expected, atol=TOL, rtol=0)
        self.assertLessEqual(max_abs(decomposition.reconstruct() - to_matrix(cogwheel(n)).entries), TOL)

    def test_cogwheel_eigenphases_small(self):
        for n in range(2, 65):
            self._assert_cogwheel_phases(n)

    def test_cogwheel_eigenphases_large(self):
        start_time = time.perf_counter()
        for n in (128, 256, 512, HAMILTONIAN_SUITE_THRESHOLDS['max_cogwheel']):
            self._assert_cogwheel_phases(n)
        self.assertLess(time.perf_counter() - start_time, HAMILTONIAN_SUITE_THRESHOLDS['max_execution_time'])

    def test_cogwheel_three_cases(self):
        npt.assert_allclose(spectrum(to_matrix(cogwheel(3))).eigenphases,
                            [0.0, 2 * math.pi / 3, 4 * math.pi / 3], atol=TOL)

    def test_diagonal_phase_convention(self):
        # U = V diag(e^{-iφ}) V†: diag(1, i) ha autofasi {0, 3π/2} in [0, 2π)
        unitary = UnitaryMatrix(np.diag([1.0, 1j]))
        npt.assert_allclose(spectrum(unitary).eigenphases, [0.0, 1.5 * math.pi], atol=TOL)
        npt.assert_allclose(spectrum(unitary, Branch.MINUS_PI_TO_PI).eigenphases, [-0.5 * math.pi, 0.0], atol=TOL)

    def test_minus_one_lands_on_pi_in_both_branches(self):
        unitary = UnitaryMatrix(np.diag([1.0, -1.0]))
        npt.assert_allclose(spectrum(unitary, 'zero2pi').eigenphases, [0.0, math.pi], atol=TOL)
        npt.assert_allclose(spectrum(unitary, 'minuspi_pi').eigenphases, [0.0, math.pi], atol=TOL)

    def test_identity_has_zero_hamiltonian(self):
        hamiltonian = extract_hamiltonian(UnitaryMatrix(np.eye(5)))
        self.assertLessEqual(max_abs(hamiltonian), 1e-12)

    def test_degenerate_eigenvectors_are_orthonormal(self):
        law = GeneralizedPermutation([1, 0, 3, 2, 5, 4])
        vectors = spectrum(to_matrix(law)).eigenvectors
        npt.assert_allclose(vectors.conj().T @ vectors, np.eye(6), atol=1e-10)

    def test_round_trip_random_generalized_permutations(self):
        generator = UniverseGenerator(seed=99)
        start_time = time.perf_counter()
        for _ in range(HAMILTONIAN_SUITE_THRESHOLDS['random_trials']):
            dim = generator.dimension(2, HAMILTONIAN_SUITE_THRESHOLDS['random_max_dim'])
            unitary = to_matrix(generator.generalized_permutation(dim))
            dt = float(generator.rng.uniform(0.1, 2.0))
            hamiltonian = extract_hamiltonian(unitary, dt)
            npt.assert_allclose(hamiltonian, hamiltonian.conj().T, atol=LINALG_TOLERANCES['hamiltonian_hermiticity'])
            rebuilt = scipy.linalg.expm(-1j * hamiltonian * dt)
            self.assertLessEqual(max_abs(rebuilt - unitary.entries), TOL)
        self.assertLess(time.perf_counter() - start_time, HAMILTONIAN_SUITE_THRESHOLDS['max_execution_time'])

    def test_branches_differ_by_multiples_of_two_pi(self):
        generator = UniverseGenerator(seed=4)
        for _ in range(20):
            unitary = to_matrix(generator.generalized_permutation(generator.dimension(2, 24)))
            h_zero = extract_hamiltonian(unitary, 1.0, Branch.ZERO_TO_TWO_PI)
            h_sym = extract_hamiltonian(unitary, 1.0, Branch.MINUS_PI_TO_PI)
            shift = np.sort(np.linalg.eigvalsh(h_zero - h_sym))
            npt.assert_allclose(np.round(shift / (2 * math.pi)) * 2 * math.pi, shift, atol=1e-8)

    def test_basis_change_covariance(self):
        generator = UniverseGenerator(seed=8)
        for _ in range(10):
            dim = generator.dimension(2, 16)
            unitary = to_matrix(generator.generalized_permutation(dim))
            basis_change = generator.dense_unitary(dim)
            hamiltonian = extract_hamiltonian(unitary)
            rotated_u = basis_change.entries @ unitary.entries @ basis_change.entries.conj().T
            rotated_h = transform_hamiltonian(hamiltonian, basis_change)
            rebuilt = scipy.linalg.expm(-1j * rotated_h)
            self.assertLessEqual(max_abs(rebuilt - rotated_u), TOL)

    def test_hamiltonian_is_read_only(self):
        hamiltonian = extract_hamiltonian(to_matrix(cogwheel(4)))
        with self.assertRaises(ValueError):
            hamiltonian[0, 0] = 1.0

    def test_rejects_non_positive_time_step(self):
        with self.assertRaises(DomainError):
            extract_hamiltonian(to_matrix(cogwheel(3)), 0.0)


class TestUniverseFiles(unittest.TestCase):

    def test_dump_and_load(self):
        law = GeneralizedPermutation([2, 0, 1], [0.1, 0.2, 0.3])
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'universe.json')
            dump_universe(law, path)
            loaded = load_universe(path)
        npt.assert_array_equal(loaded.target, law.target)
        npt.assert_allclose(loaded.phase, law.phase)

    def test_phase_optional(self):
        law = universe_from_dict({'dim': 3, 'target': [1, 2, 0]})
        self.assertTrue(law.is_pure)

    def test_invalid_files(self):
        with self.assertRaises(DomainError):
            universe_from_dict({'dim': 2, 'target': [0, 1], 'speed': 1})
        with self.assertRaises(DomainError):
            universe_from_dict({'target': [0, 1]})
        with self.assertRaises(DomainError):
            universe_from_dict({'dim': 3, 'target': [0, 1]})
        with self.assertRaises(DomainError):
            universe_from_dict({'dim': 2, 'target': [1, 1]})
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.json')
            with open(path, 'w') as f:
                json.dump([0, 1], f)
            with self.assertRaises(DomainError):
                load_universe(path)


if __name__ == '__main__':
    unittest.main()
