import math
import unittest

import numpy as np
import numpy.testing as npt

from src.ontology.errors import DomainError, NormalizationError
from src.ontology.ontic import (
    Amplitude,
    Ontological,
    StateVector,
    Superposed,
    amplitude_multiset,
    born_probabilities,
    classify_state,
    probability_multiset,
    support_size,
)
from tests.universe_generator import UniverseGenerator

SQRT_HALF = 1.0 / math.sqrt(2.0)


class TestStateVector(unittest.TestCase):
    """Test dei tipi fondamentali dello spazio degli stati"""

    def test_rejects_non_normalized_vector(self):
        with self.assertRaises(NormalizationError):
            StateVector(np.array([1.0, 1.0]))

    def test_renormalizes_roundoff(self):
        state = StateVector.from_amplitudes([1.0 + 5e-7, 0.0])
        self.assertAlmostEqual(state.norm(), 1.0, places=14)

    def test_rejects_user_error(self):
        with self.assertRaises(NormalizationError):
            StateVector.from_amplitudes([0.9, 0.0])

    def test_rejects_empty_and_non_finite(self):
        with self.assertRaises(DomainError):
            StateVector.from_amplitudes([])
        with self.assertRaises(DomainError):
            StateVector.from_amplitudes([float('nan'), 1.0])

    def test_amplitudes_are_read_only(self):
        state = StateVector.basis(3, 1)
        with self.assertRaises(ValueError):
            state.amplitudes[0] = 1.0

    def test_amplitude_accessors(self):
        amplitude = Amplitude.from_complex(0.6 + 0.8j)
        self.assertAlmostEqual(amplitude.modulus, 1.0, places=15)
        self.assertAlmostEqual(amplitude.phase, math.atan2(0.8, 0.6), places=15)
        self.assertEqual(complex(amplitude), 0.6 + 0.8j)
        with self.assertRaises(DomainError):
            Amplitude(float('inf'), 0.0)

    def test_basis_index_out_of_range(self):
        with self.assertRaises(DomainError):
            StateVector.basis(4, 4)


class TestClassifyState(unittest.TestCase):

    def test_basis_vector_is_ontological(self):
        self.assertEqual(classify_state(StateVector.basis(4, 2)), Ontological(2, 0.0))

    def test_phase_factor_is_reported(self):
        state_class = classify_state(StateVector.basis(2, 0, phase=math.pi / 3))
        self.assertIsInstance(state_class, Ontological)
        self.assertEqual(state_class.index, 0)
        self.assertAlmostEqual(state_class.phase, math.pi / 3, places=12)

    def test_phase_in_half_open_window(self):
        state_class = classify_state(StateVector.basis(3, 1, phase=-math.pi))
        self.assertAlmostEqual(state_class.phase, math.pi, places=12)

    def test_equal_superposition_is_superposed(self):
        state = StateVector(np.array([SQRT_HALF, SQRT_HALF]))
        self.assertEqual(classify_state(state), Superposed())
        self.assertFalse(classify_state(state).is_ontological)

    def test_tolerance_domain(self):
        state = StateVector.basis(2, 0)
        for tol in (0.0, 0.5, -1e-3):
            with self.assertRaises(DomainError):
                classify_state(state, tol=tol)

    def test_property_every_rotated_basis_vector(self):
        generator = UniverseGenerator(seed=7)
        for _ in range(200):
            dim = generator.dimension(1, 32)
            state = generator.basis_state(dim)
            state_class = classify_state(state)
            self.assertTrue(state_class.is_ontological)
            self.assertAlmostEqual(abs(state.amplitudes[state_class.index]), 1.0, places=12)

    def test_property_two_large_amplitudes_are_superposed(self):
        generator = UniverseGenerator(seed=11)
        for _ in range(200):
            dim = generator.dimension(2, 32)
            weight = float(generator.rng.uniform(0.05, 0.95))
            values = np.zeros(dim, dtype=complex)
            values[0] = math.sqrt(weight)
            values[dim - 1] = math.sqrt(1.0 - weight) * 1j
            self.assertEqual(classify_state(StateVector(values)), Superposed())


class TestBornAndMultisets(unittest.TestCase):

    def test_born_probabilities_cases(self):
        npt.assert_allclose(born_probabilities(StateVector(np.array([SQRT_HALF, SQRT_HALF]))),
                            [0.5, 0.5], atol=1e-15)
        npt.assert_array_equal(born_probabilities(StateVector.basis(4, 3)), [0, 0, 0, 1])
        npt.assert_allclose(born_probabilities(StateVector(np.array([0.6, 0.8j]))),
                            [0.36, 0.64], atol=1e-15)

    def test_amplitude_multiset_cases(self):
        npt.assert_allclose(amplitude_multiset(StateVector(np.array([SQRT_HALF, SQRT_HALF, 0.0]))),
                            [SQRT_HALF, SQRT_HALF, 0.0], atol=1e-15)
        npt.assert_array_equal(amplitude_multiset(StateVector.basis(5, 2)), [1, 0, 0, 0, 0])
        npt.assert_allclose(amplitude_multiset(StateVector(np.array([0.6, 0.8j]))), [0.8, 0.6], atol=1e-15)

    def test_sorted_probabilities_are_squared_sorted_moduli(self):
        generator = UniverseGenerator(seed=3)
        for _ in range(100):
            state = generator.superposed_state(generator.dimension())
            npt.assert_allclose(probability_multiset(state), amplitude_multiset(state) ** 2, atol=1e-15)
            self.assertAlmostEqual(float(np.sum(born_probabilities(state))), 1.0, places=12)

    def test_support_size(self):
        self.assertEqual(support_size(StateVector.basis(6, 4)), 1)
        self.assertEqual(support_size(StateVector(np.array([0.6, 0.0, 0.8]))), 2)


if __name__ == '__main__':
    unittest.main()
