"""
Verifica delle due leggi di conservazione (ontologia e incertezza), misura senza
collasso e controlli negativi su unitarie generiche
"""
import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

import numpy as np

from ..config_thresholds import (
    CONSERVATION_THRESHOLDS,
    STATE_TOLERANCES,
    evaluate_conservation_verdict,
    evaluate_deviation,
)
from .errors import DimensionMismatchError, DomainError, UnsupportedOperationError
from .evolution import GeneralizedPermutation, UnitaryMatrix, evolve, period
from .ontic import (
    StateClass,
    StateVector,
    amplitude_multiset,
    born_probabilities,
    classify_state,
    probability_multiset,
    support_size,
)
from .utils import (
    SeedLike,
    make_rng,
    random_amplitudes,
    random_dense_unitary,
    random_pure_permutation,
    spawn_seeds,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConservationReport:
    """Esito del confronto tra stato iniziale e finale"""
    law: str
    initial_class: StateClass
    final_class: StateClass
    initial_multiset: np.ndarray
    final_multiset: np.ndarray
    max_multiset_deviation: float
    tolerance: float
    verdict: str
    strict_deviation: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.verdict == 'pass'

    def to_dict(self) -> Dict[str, Any]:
        report = {
            'initial_class': self.initial_class.to_dict(),
            'final_class': self.final_class.to_dict(),
            'deviation': self.max_multiset_deviation,
            'verdict': self.verdict,
        }
        if self.strict_deviation is not None:
            report['strict_deviation'] = self.strict_deviation
        return report


def _multiset_deviation(initial: np.ndarray, final: np.ndarray) -> float:
    return float(np.max(np.abs(initial - final))) if initial.size else 0.0


def _ontology_kept(initial_class: StateClass, final_class: StateClass) -> bool:
    # ontologico in => ontologico out
    return (not initial_class.is_ontological) or final_class.is_ontological


def _build_report(law: str, initial: StateVector, final: StateVector, tol: float,
                  strict: Optional[float] = None,
                  class_tol: float = STATE_TOLERANCES['classification']) -> ConservationReport:
    if law == 'uncertainty':
        initial_multiset = probability_multiset(initial)
        final_multiset = probability_multiset(final)
        ontology_kept = support_size(initial, class_tol) == support_size(final, class_tol)
    else:
        initial_multiset = amplitude_multiset(initial)
        final_multiset = amplitude_multiset(final)
        ontology_kept = True

    initial_class = classify_state(initial, class_tol)
    final_class = classify_state(final, class_tol)
    ontology_kept = ontology_kept and _ontology_kept(initial_class, final_class)
    deviation = _multiset_deviation(initial_multiset, final_multiset)

    return ConservationReport(
        law=law,
        initial_class=initial_class,
        final_class=final_class,
        initial_multiset=initial_multiset,
        final_multiset=final_multiset,
        max_multiset_deviation=deviation,
        tolerance=tol,
        verdict=evaluate_conservation_verdict(deviation, tol, ontology_kept),
        strict_deviation=strict,
    )


def _check_dims(permutation: GeneralizedPermutation, state: StateVector):
    if permutation.dim != state.dim:
        raise DimensionMismatchError(f"Legge dim {permutation.dim}, stato dim {state.dim}")


def strict_deviation(permutation: GeneralizedPermutation, state: StateVector,
                     final: StateVector, steps: int) -> float:
    """
    Confronto elemento per elemento: ripercorre la legge passo per passo
    (indipendentemente da `evolve`, che usa P^k) e confronta i moduli
    nelle posizioni d'arrivo.
    """
    _check_dims(permutation, state)
    position = np.arange(permutation.dim)
    step = 1 if steps >= 0 else -1
    law = permutation if steps >= 0 else permutation.inverse()
    for _ in range(0, steps, step):
        position = law.target[position]
    return float(np.max(np.abs(np.abs(final.amplitudes[position]) - np.abs(state.amplitudes))))


def check_ontology_conservation(permutation: GeneralizedPermutation, state: StateVector, steps: int,
                                tol: float = CONSERVATION_THRESHOLDS['permutation'],
                                strict: bool = False) -> ConservationReport:
    """
    Conservazione dell'ontologia: i coefficienti nella base ontologica sono
    trasportati invariati dallo stato iniziale a quello finale.

    Args:
        permutation: legge di evoluzione
        state: stato iniziale normalizzato
        steps: numero di battiti
        tol: tolleranza sul multiinsieme dei moduli
        strict: calcola anche il confronto elemento per elemento

    Returns:
        ConservationReport
    """
    _check_dims(permutation, state)
    final = evolve(state, permutation, steps)
    strict_value = strict_deviation(permutation, state, final, steps) if strict else None
    report = _build_report('ontology', state, final, tol, strict_value)
    logger.debug(f"Conservazione ontologia: deviazione {report.max_multiset_deviation:.2e} -> {report.verdict}")
    return report


def check_uncertainty_conservation(permutation: GeneralizedPermutation, state: StateVector, steps: int,
                                   tol: float = CONSERVATION_THRESHOLDS['permutation']) -> ConservationReport:
    """
    Conservazione dell'incertezza: il multiinsieme delle probabilità di Born e il
    numero di coefficienti non nulli restano invariati.
    """
    _check_dims(permutation, state)
    final = evolve(state, permutation, steps)
    report = _build_report('uncertainty', state, final, tol)
    logger.debug(f"Conservazione incertezza: deviazione {report.max_multiset_deviation:.2e} -> {report.verdict}")
    return report


def negative_control(unitary: Union[UnitaryMatrix, np.ndarray], state: StateVector,
                     tol: float = CONSERVATION_THRESHOLDS['negative_control']) -> ConservationReport:
    """
    Stesso confronto sotto un'unitaria generica (non di permutazione): per input
    generici il verdetto atteso è fail, la legge non è banale.
    """
    if not isinstance(unitary, UnitaryMatrix):
        unitary = UnitaryMatrix(np.asarray(unitary))
    if unitary.dim != state.dim:
        raise DimensionMismatchError(f"U dim {unitary.dim}, stato dim {state.dim}")
    final = StateVector.from_amplitudes(unitary.entries @ state.amplitudes)
    report = _build_report('ontology', state, final, tol)
    logger.debug(f"Controllo negativo: deviazione {report.max_multiset_deviation:.3f} "
                 f"({evaluate_deviation(report.max_multiset_deviation)})")
    return report


def collapse_free_measurement(permutation: GeneralizedPermutation, ontic_index: int, steps: int) -> np.ndarray:
    """
    Distribuzione di Born finale partendo dallo stato ontologico e_{ontic_index}:
    una massa puntuale esatta, ottenuta dalla sola evoluzione.
    """
    if not permutation.is_pure:
        raise UnsupportedOperationError("La misura senza collasso richiede una permutazione pura")
    initial = StateVector.basis(permutation.dim, ontic_index)
    distribution = born_probabilities(evolve(initial, permutation, steps))
    outcome = int(np.argmax(distribution))
    logger.info(f"Misura senza collasso: e_{ontic_index} dopo {steps} passi -> massa puntuale in {outcome}")
    return distribution


def ensemble_propagation(permutation: GeneralizedPermutation, state: StateVector, steps: int,
                         samples: int, seed: SeedLike = None) -> Dict[str, Any]:
    """
    Estrae stati ontologici con pesi di Born, li propaga deterministicamente e
    confronta la distribuzione empirica finale con quella di Born dello stato evoluto.

    Returns:
        dict con deviazione massima, errore standard binomiale massimo e z-score
    """
    _check_dims(permutation, state)
    if samples < 1:
        raise DomainError(f"samples deve essere >= 1, ricevuto {samples}")
    rng = make_rng(seed)
    initial_weights = born_probabilities(state)
    draws = rng.choice(state.dim, size=samples, p=initial_weights / initial_weights.sum())

    law = permutation.power(steps)
    landed = law.target[draws]
    empirical = np.bincount(landed, minlength=state.dim) / samples
    predicted = born_probabilities(evolve(state, permutation, steps))

    std_error = np.sqrt(predicted * (1.0 - predicted) / samples)
    deviation = np.abs(empirical - predicted)
    z_scores = np.divide(deviation, std_error, out=np.zeros_like(deviation), where=std_error > 0)
    return {
        'samples': samples,
        'max_deviation': float(np.max(deviation)),
        'max_std_error': float(np.max(std_error)),
        'max_z_score': float(np.max(z_scores)),
    }


def _conservation_trial(dim: int, max_steps: int, seed: np.random.SeedSequence) -> Dict[str, Any]:
    rng = make_rng(seed)
    law = GeneralizedPermutation(random_pure_permutation(dim, rng))
    steps = int(rng.integers(0, max_steps + 1))
    superposed = StateVector(random_amplitudes(dim, rng))
    basis = StateVector.basis(dim, int(rng.integers(dim)))

    ontology = check_ontology_conservation(law, superposed, steps)
    uncertainty = check_uncertainty_conservation(law, superposed, steps)
    persistence = check_ontology_conservation(law, basis, steps)
    return {
        'steps': steps,
        'deviation': max(ontology.max_multiset_deviation, uncertainty.max_multiset_deviation,
                         persistence.max_multiset_deviation),
        'ontology_kept': persistence.final_class.is_ontological,
        'passed': ontology.passed and uncertainty.passed and persistence.passed,
    }


def run_conservation_suite(dim: int, steps: int, trials: int, seed: SeedLike = None) -> Dict[str, Any]:
    """
    Suite di proprietà: permutazioni pure casuali, stati casuali, fino a `steps` passi.

    Ogni trial usa un seed figlio `spawn_seeds(seed, trials)[i]`.
    """
    if dim < 1 or trials < 1 or steps < 0:
        raise DomainError(f"Parametri non validi: dim={dim}, steps={steps}, trials={trials}")
    logger.info(f"🔍 Suite di conservazione: dim={dim}, steps<={steps}, trials={trials}")

    start_time = time.perf_counter()
    results = [_conservation_trial(dim, steps, child) for child in spawn_seeds(seed, trials)]
    elapsed = time.perf_counter() - start_time

    passed = sum(1 for r in results if r['passed'])
    ontology_kept = sum(1 for r in results if r['ontology_kept'])
    max_deviation = max(r['deviation'] for r in results)

    summary = {
        'trials': trials,
        'passed_trials': passed,
        'ontology_kept_trials': ontology_kept,
        'max_deviation': max_deviation,
        'deviation_class': evaluate_deviation(max_deviation),
        'verdict': 'pass' if passed == trials and ontology_kept == trials else 'fail',
        'execution_time': elapsed,
    }
    logger.info(f"✅ Suite completata: {passed}/{trials} trial superati, deviazione max {max_deviation:.2e}")
    return summary


def run_negative_control_suite(dim: int, trials: int, seed: SeedLike = None) -> Dict[str, Any]:
    """
    Unitarie dense casuali (Haar) applicate a stati di base casuali: la frazione di
    trial con deviazione > 0.1 misura quanto la legge di conservazione sia non banale.
    """
    if dim < 2 or trials < 1:
        raise DomainError(f"Parametri non validi: dim={dim}, trials={trials}")
    logger.info(f"🔍 Controlli negativi: dim={dim}, trials={trials}")

    min_deviation = CONSERVATION_THRESHOLDS['negative_control_min_deviation']
    deviations = []
    failed_verdicts = 0
    for child in spawn_seeds(seed, trials):
        rng = make_rng(child)
        unitary = UnitaryMatrix(random_dense_unitary(dim, rng))
        state = StateVector.basis(dim, int(rng.integers(dim)))
        report = negative_control(unitary, state)
        deviations.append(report.max_multiset_deviation)
        failed_verdicts += 0 if report.passed else 1

    deviations = np.array(deviations)
    detected_rate = float(np.mean(deviations > min_deviation))
    summary = {
        'trials': trials,
        'failed_verdicts': failed_verdicts,
        'detected_rate': detected_rate,
        'min_deviation': float(deviations.min()),
        'median_deviation': float(np.median(deviations)),
        'verdict': 'pass' if detected_rate >= CONSERVATION_THRESHOLDS['negative_control_min_fail_rate'] else 'fail',
    }
    logger.info(f"Controlli negativi: non conservazione rilevata nel {detected_rate:.1%} dei trial")
    return summary


def collapse_free_check(permutation: GeneralizedPermutation, ontic_index: int, steps: int) -> bool:
    """Vero se la distribuzione finale è una massa puntuale esatta nel target atteso"""
    distribution = collapse_free_measurement(permutation, ontic_index, steps)
    expected = int(permutation.power(steps).target[ontic_index])
    return bool(distribution[expected] == 1.0 and np.count_nonzero(distribution) == 1)


def period_check(permutation: GeneralizedPermutation, ontic_index: int) -> bool:
    """Dopo period(P) passi lo stato ontologico torna su se stesso"""
    distribution = collapse_free_measurement(permutation, ontic_index, period(permutation))
    return bool(distribution[ontic_index] == 1.0)
