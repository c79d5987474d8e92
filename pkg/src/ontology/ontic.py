"""
Tipi fondamentali dello spazio degli stati: ampiezze, vettori di stato sulla base
ontologica, classificazione ontologico/sovrapposto e probabilità di Born
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from ..config_thresholds import STATE_TOLERANCES
from .errors import DomainError, NormalizationError
from .utils import wrap_phase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Amplitude:
    """Coefficiente complesso di uno stato sulla base ontologica"""
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f"Ampiezza non finita: ({self.re}, {self.im})")

    @classmethod
    def from_complex(cls, value: complex) -> 'Amplitude':
        value = complex(value)
        return cls(value.real, value.imag)

    @property
    def modulus(self) -> float:
        # hypot evita overflow/underflow intermedi
        return math.hypot(self.re, self.im)

    @property
    def phase(self) -> float:
        return wrap_phase(math.atan2(self.im, self.re))

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Vettore di stato normalizzato sulla base ontologica.

    Il costruttore diretto accetta solo vettori già normalizzati entro 1e-12;
    `from_amplitudes` rinormalizza input entro 1e-6 dalla norma unitaria e
    rifiuta il resto.
    """
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if values.size == 0:
            raise DomainError("Un vettore di stato richiede dim >= 1")
        if not np.all(np.isfinite(values)):
            raise DomainError("Ampiezze non finite nel vettore di stato")
        deviation = abs(float(np.sum(np.abs(values) ** 2)) - 1.0)
        if deviation > STATE_TOLERANCES['normalization']:
            raise NormalizationError(
                f"Stato non normalizzato: |Σ|a|² - 1| = {deviation:.3e}"
            )
        values.setflags(write=False)
        object.__setattr__(self, 'amplitudes', values)

    @classmethod
    def from_amplitudes(cls, values: Iterable[Union[complex, Amplitude]]) -> 'StateVector':
        """
        Costruisce uno stato rinormalizzando errori di arrotondamento.

        Args:
            values: ampiezze complesse o Amplitude

        Returns:
            StateVector: stato normalizzato

        Raises:
            NormalizationError: se la norma dista più di 1e-6 da 1
        """
        array = np.array([complex(v) for v in values], dtype=np.complex128)
        if array.size == 0:
            raise DomainError("Un vettore di stato richiede dim >= 1")
        if not np.all(np.isfinite(array)):
            raise DomainError("Ampiezze non finite nel vettore di stato")
        norm = float(np.linalg.norm(array))
        if abs(norm - 1.0) > STATE_TOLERANCES['renormalization']:
            raise NormalizationError(
                f"Norma {norm:.9f} troppo lontana da 1 per essere rinormalizzata"
            )
        if abs(norm - 1.0) > STATE_TOLERANCES['normalization']:
            logger.debug(f"Rinormalizzazione dello stato (norma {norm:.15f})")
        return cls(array / norm)

    @classmethod
    def basis(cls, dim: int, index: int, phase: float = 0.0) -> 'StateVector':
        """Stato ontologico e^{iθ}·e_index"""
        if dim < 1:
            raise DomainError(f"dim deve essere >= 1, ricevuto {dim}")
        if not 0 <= index < dim:
            raise DomainError(f"Indice {index} fuori da [0, {dim})")
        values = np.zeros(dim, dtype=np.complex128)
        values[index] = np.exp(1j * phase)
        return cls(values)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def amplitude(self, index: int) -> Amplitude:
        return Amplitude.from_complex(self.amplitudes[index])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def allclose(self, other: 'StateVector', atol: float = 1e-12) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol))

    def to_dict(self) -> dict:
        return {
            'dim': self.dim,
            're': self.amplitudes.real.tolist(),
            'im': self.amplitudes.imag.tolist(),
        }


@dataclass(frozen=True)
class Ontological:
    """Stato di base, eventualmente con un fattore di fase"""
    index: int
    phase: float

    @property
    def is_ontological(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {'kind': 'ontological', 'index': self.index, 'phase': self.phase}


@dataclass(frozen=True)
class Superposed:
    """Miscela probabilistica di ontologie"""

    @property
    def is_ontological(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {'kind': 'superposed'}


StateClass = Union[Ontological, Superposed]


def _check_normalized(state: StateVector):
    deviation = abs(float(np.sum(np.abs(state.amplitudes) ** 2)) - 1.0)
    if deviation > STATE_TOLERANCES['normalization']:
        raise NormalizationError(f"Stato non normalizzato: |Σ|a|² - 1| = {deviation:.3e}")


def classify_state(state: StateVector, tol: float = STATE_TOLERANCES['classification']) -> StateClass:
    """
    Classifica uno stato come ontologico o sovrapposto.

    Ontological(i, θ) richiede |a_i| >= 1 - tol e tutte le altre ampiezze
    entro tol da zero; θ è riportata in (-π, π].

    Args:
        state: stato normalizzato
        tol: tolleranza in (0, 0.5)

    Returns:
        StateClass: Ontological o Superposed
    """
    if not 0.0 < tol < 0.5:
        raise DomainError(f"tol deve stare in (0, 0.5), ricevuto {tol}")
    _check_normalized(state)

    moduli = np.abs(state.amplitudes)
    index = int(np.argmax(moduli))
    if moduli[index] < 1.0 - tol:
        return Superposed()

    others = np.delete(moduli, index)
    if others.size and float(np.max(others)) > tol:
        return Superposed()

    phase = wrap_phase(float(np.angle(state.amplitudes[index])))
    return Ontological(index=index, phase=phase)


def born_probabilities(state: StateVector) -> np.ndarray:
    """
    Probabilità di Born p_i = |a_i|².

    Returns:
        np.ndarray: vettore di probabilità (somma 1 entro 1e-12)
    """
    _check_normalized(state)
    probabilities = np.abs(state.amplitudes) ** 2
    probabilities.setflags(write=False)
    return probabilities


def amplitude_multiset(state: StateVector, tol: Optional[float] = None) -> np.ndarray:
    """
    Moduli delle ampiezze in ordine non crescente: l'impronta conservata della
    distribuzione di incertezza.

    Args:
        state: stato normalizzato
        tol: se indicata, i moduli sotto tol vengono portati a zero esatto

    Returns:
        np.ndarray: moduli ordinati
    """
    moduli = np.abs(state.amplitudes)
    if tol is not None:
        moduli = np.where(moduli < tol, 0.0, moduli)
    multiset = np.sort(moduli)[::-1].copy()
    multiset.setflags(write=False)
    return multiset


def probability_multiset(state: StateVector) -> np.ndarray:
    """Probabilità di Born in ordine non crescente"""
    multiset = np.sort(np.abs(state.amplitudes) ** 2)[::-1].copy()
    multiset.setflags(write=False)
    return multiset


def support_size(state: StateVector, tol: float = STATE_TOLERANCES['classification']) -> int:
    """Numero di coefficienti diversi da zero (oltre tol)"""
    return int(np.count_nonzero(np.abs(state.amplitudes) > tol))
