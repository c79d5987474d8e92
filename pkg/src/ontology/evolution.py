"""
Leggi di evoluzione deterministiche come permutazioni generalizzate, costruttori di
universi (cogwheel, automa a scorrimento di bit), rappresentazione matriciale,
periodo ed estrazione dell'Hamiltoniana U(δt) = e^{-iHδt}
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from ..config import LAB_PARAMS
from ..config_thresholds import LINALG_TOLERANCES
from .errors import (
    DimensionMismatchError,
    DomainError,
    EigenSolverError,
    NotUnitaryError,
    ResourceLimitError,
    UnsupportedOperationError,
)
from .ontic import StateVector
from .utils import max_abs

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class Branch(str, Enum):
    """Finestra in cui collocare le autofasi di Hδt"""
    ZERO_TO_TWO_PI = "zero2pi"        # [0, 2π)
    MINUS_PI_TO_PI = "minuspi_pi"     # (-π, π]


@dataclass(frozen=True, eq=False)
class GeneralizedPermutation:
    """
    Legge di evoluzione P: e_i -> e^{i·phase(i)} e_{target(i)}.

    target deve essere una biiezione su {0, ..., dim-1}; phase è opzionale
    (zero ovunque per una permutazione pura).
    """
    target: np.ndarray
    phase: Optional[np.ndarray] = None

    def __post_init__(self):
        target = np.array(self.target, dtype=np.int64).reshape(-1)
        dim = target.size
        if dim == 0:
            raise DomainError("Una permutazione richiede dim >= 1")
        if np.any(target < 0) or np.any(target >= dim):
            raise DomainError(f"Indici target fuori da [0, {dim})")
        if np.any(np.bincount(target, minlength=dim) != 1):
            raise DomainError("La tabella target non è una biiezione")

        if self.phase is None:
            phase = np.zeros(dim, dtype=np.float64)
        else:
            phase = np.array(self.phase, dtype=np.float64).reshape(-1)
        if phase.size != dim:
            raise DimensionMismatchError(f"phase ha {phase.size} elementi, target {dim}")
        if not np.all(np.isfinite(phase)):
            raise DomainError("Fasi non finite")

        target.setflags(write=False)
        phase.setflags(write=False)
        object.__setattr__(self, 'target', target)
        object.__setattr__(self, 'phase', phase)

    @classmethod
    def identity(cls, dim: int) -> 'GeneralizedPermutation':
        if dim < 1:
            raise DomainError(f"dim deve essere >= 1, ricevuto {dim}")
        return cls(np.arange(dim))

    @property
    def dim(self) -> int:
        return int(self.target.size)

    @property
    def is_pure(self) -> bool:
        return not np.any(self.phase)

    def inverse(self) -> 'GeneralizedPermutation':
        """Legge invertita nel tempo: e_{target(i)} -> e^{-i·phase(i)} e_i"""
        inv_target = np.empty_like(self.target)
        inv_target[self.target] = np.arange(self.dim)
        if self.is_pure:
            return GeneralizedPermutation(inv_target)
        inv_phase = np.empty(self.dim)
        inv_phase[self.target] = np.remainder(-self.phase, TWO_PI)
        return GeneralizedPermutation(inv_target, inv_phase)

    def compose(self, other: 'GeneralizedPermutation') -> 'GeneralizedPermutation':
        """Applica prima self, poi other"""
        if other.dim != self.dim:
            raise DimensionMismatchError(f"Dimensioni diverse: {self.dim} vs {other.dim}")
        target = other.target[self.target]
        if self.is_pure and other.is_pure:
            return GeneralizedPermutation(target)
        phase = np.remainder(self.phase + other.phase[self.target], TWO_PI)
        return GeneralizedPermutation(target, phase)

    def power(self, k: int) -> 'GeneralizedPermutation':
        """P^k per quadrature ripetute; k negativo usa l'inversa"""
        k = int(k)
        if k < 0:
            return self.inverse().power(-k)
        result = GeneralizedPermutation.identity(self.dim)
        base = self
        while k:
            if k & 1:
                result = result.compose(base)
            k >>= 1
            if k:
                base = base.compose(base)
        return result

    def cycles(self) -> List[List[int]]:
        """Decomposizione in cicli disgiunti (ordinati per indice minimo)"""
        visited = np.zeros(self.dim, dtype=bool)
        result = []
        for start in range(self.dim):
            if visited[start]:
                continue
            cycle = []
            current = start
            while not visited[current]:
                visited[current] = True
                cycle.append(current)
                current = int(self.target[current])
            result.append(cycle)
        return result

    def to_dict(self) -> dict:
        return {
            'dim': self.dim,
            'target': self.target.tolist(),
            'phase': self.phase.tolist(),
        }


@dataclass(frozen=True)
class NotInvertible:
    """Tabella di aggiornamento non biiettiva: due stati collidono nello stesso target"""
    first: int
    second: int
    target: int

    @property
    def collision(self) -> Tuple[Tuple[int, int], int]:
        return (self.first, self.second), self.target

    def to_dict(self) -> dict:
        return {'collision': [self.first, self.second], 'target': self.target}


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """Operatore di evoluzione U(δt) in forma densa"""
    entries: np.ndarray
    verified: bool = field(default=False, repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise DomainError(f"Matrice quadrata non vuota richiesta, shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise DomainError("Elementi non finiti nella matrice")
        if not self.verified:
            error = unitarity_error(entries)
            if error > LINALG_TOLERANCES['unitarity']:
                raise NotUnitaryError(f"‖U†U - I‖_max = {error:.3e}")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'verified', True)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def adjoint(self) -> 'UnitaryMatrix':
        return UnitaryMatrix(self.entries.conj().T, verified=True)


@dataclass(frozen=True)
class TimeStep:
    """Durata di un battito del clock esterno (unità astratte)"""
    dt: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"δt deve essere positivo e finito, ricevuto {self.dt}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Autofasi φ_k e autovettori (colonne) con U = V diag(e^{-iφ}) V†"""
    eigenphases: np.ndarray
    eigenvectors: np.ndarray
    branch: Branch = Branch.ZERO_TO_TWO_PI

    @property
    def dim(self) -> int:
        return int(self.eigenphases.size)

    def reconstruct(self) -> np.ndarray:
        vectors = self.eigenvectors
        return (vectors * np.exp(-1j * self.eigenphases)) @ vectors.conj().T

    def energies(self, time_step: Union[TimeStep, float] = 1.0) -> np.ndarray:
        dt = time_step.dt if isinstance(time_step, TimeStep) else TimeStep(float(time_step)).dt
        return self.eigenphases / dt

    def to_dict(self) -> dict:
        return {'branch': self.branch.value, 'eigenphases': self.eigenphases.tolist()}


def unitarity_error(entries: np.ndarray) -> float:
    """‖U†U - I‖_max"""
    gram = entries.conj().T @ entries
    return max_abs(gram - np.eye(entries.shape[0]))


def cogwheel(n: int) -> GeneralizedPermutation:
    """Permutatore a ciclo singolo: P|i> = |i+1 mod N>"""
    if n < 1:
        raise DomainError(f"N deve essere >= 1, ricevuto {n}")
    return GeneralizedPermutation((np.arange(n) + 1) % n)


def from_update_rule(table: Sequence[int],
                     phases: Optional[Sequence[float]] = None) -> Union[GeneralizedPermutation, NotInvertible]:
    """
    Costruisce la legge da una tabella di aggiornamento.

    Args:
        table: target di ciascuno stato
        phases: fasi opzionali per stato

    Returns:
        GeneralizedPermutation se la tabella è biiettiva, altrimenti NotInvertible
        con la prima coppia che collide

    Raises:
        DomainError: indici fuori intervallo
    """
    targets = [int(entry) for entry in table]
    dim = len(targets)
    if dim == 0:
        raise DomainError("Tabella di aggiornamento vuota")
    for index, entry in enumerate(targets):
        if not 0 <= entry < dim:
            raise DomainError(f"Target {entry} dello stato {index} fuori da [0, {dim})")

    seen = {}
    for index, entry in enumerate(targets):
        if entry in seen:
            collision = NotInvertible(first=seen[entry], second=index, target=entry)
            logger.info(f"Legge non invertibile: stati {seen[entry]} e {index} -> {entry}")
            return collision
        seen[entry] = index

    return GeneralizedPermutation(np.array(targets), phases)


def bit_shift_universe(sites: int) -> GeneralizedPermutation:
    """
    Automa locale su L siti binari ad anello: il bit al sito x passa al sito
    (x+1) mod L a ogni passo.

    Convenzione: il sito 0 è il bit meno significativo dell'indice di
    configurazione (L=3: 100₂ = 4 -> 001₂ = 1).
    """
    if sites < 1:
        raise DomainError(f"L deve essere >= 1, ricevuto {sites}")
    if sites > LAB_PARAMS['max_sites']:
        raise ResourceLimitError(
            f"L={sites} supera il limite di {LAB_PARAMS['max_sites']} siti (2^L stati densi)"
        )
    mask = (1 << sites) - 1
    states = np.arange(1 << sites, dtype=np.int64)
    target = ((states << 1) | (states >> (sites - 1))) & mask
    return GeneralizedPermutation(target)


def period(permutation: GeneralizedPermutation) -> int:
    """Minimo k >= 1 con P^k = identità (mcm delle lunghezze dei cicli)"""
    if not permutation.is_pure:
        raise UnsupportedOperationError(
            "Periodo non definito per permutazioni con fasi (rotazioni di fase possibilmente aperiodiche)"
        )
    return math.lcm(*(len(cycle) for cycle in permutation.cycles()))


def to_matrix(permutation: GeneralizedPermutation) -> UnitaryMatrix:
    """Matrice con elemento (target(i), i) = e^{i·phase(i)}"""
    dim = permutation.dim
    entries = np.zeros((dim, dim), dtype=np.complex128)
    columns = np.arange(dim)
    if permutation.is_pure:
        entries[permutation.target, columns] = 1.0
    else:
        entries[permutation.target, columns] = np.exp(1j * permutation.phase)
    # Una sola unità di modulo 1 per riga e colonna: unitaria per costruzione
    return UnitaryMatrix(entries, verified=True)


def matrix_to_permutation(unitary: UnitaryMatrix, tol: float = 1e-12) -> Optional[GeneralizedPermutation]:
    """Riconosce una permutazione generalizzata in forma matriciale, altrimenti None"""
    entries = unitary.entries
    mask = np.abs(entries) > tol
    if np.any(mask.sum(axis=0) != 1) or np.any(mask.sum(axis=1) != 1):
        return None
    target = np.argmax(mask, axis=0)
    values = entries[target, np.arange(unitary.dim)]
    if np.any(np.abs(np.abs(values) - 1.0) > tol):
        return None
    phases = np.angle(values)
    phases = np.where(np.abs(phases) <= tol, 0.0, phases)
    return GeneralizedPermutation(target, phases)


def evolve(state: StateVector, permutation: GeneralizedPermutation, steps: int) -> StateVector:
    """
    Evolve uno stato per `steps` battiti rimescolando gli indici.

    L'ampiezza in target(i) dopo un passo è e^{i·phase(i)} per l'ampiezza in i.
    Passi negativi eseguono la legge all'indietro.
    """
    if state.dim != permutation.dim:
        raise DimensionMismatchError(f"Stato dim {state.dim}, legge dim {permutation.dim}")
    if int(steps) == 0:
        return state
    law = permutation.power(int(steps))
    evolved = np.empty_like(state.amplitudes)
    if law.is_pure:
        evolved[law.target] = state.amplitudes
    else:
        evolved[law.target] = np.exp(1j * law.phase) * state.amplitudes
    return StateVector(evolved)


def _place_in_branch(phases: np.ndarray, branch: Branch) -> np.ndarray:
    snap = LINALG_TOLERANCES['branch_snap']
    if branch == Branch.ZERO_TO_TWO_PI:
        placed = np.remainder(phases, TWO_PI)
        placed = np.where(placed >= TWO_PI - snap, 0.0, placed)
        placed = np.where(np.abs(placed) <= snap, 0.0, placed)
    else:
        placed = math.pi - np.remainder(math.pi - phases, TWO_PI)
        placed = np.where(placed <= -math.pi + snap, math.pi, placed)
        placed = np.where(np.abs(placed) <= snap, 0.0, placed)
    return placed


def _orthonormalize_degenerate_clusters(phases: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Ortonormalizza a blocco gli autovettori di autofasi quasi coincidenti"""
    gap = LINALG_TOLERANCES['degeneracy_gap']
    vectors = vectors.copy()
    start = 0
    dim = phases.size
    clusters = 0
    while start < dim:
        stop = start + 1
        while stop < dim and phases[stop] - phases[stop - 1] < gap:
            stop += 1
        if stop - start > 1:
            q, _ = scipy.linalg.qr(vectors[:, start:stop], mode='economic')
            vectors[:, start:stop] = q
            clusters += 1
        start = stop
    if clusters:
        logger.debug(f"Ortonormalizzati {clusters} cluster degeneri")
    return vectors


def _as_unitary(unitary) -> UnitaryMatrix:
    if isinstance(unitary, UnitaryMatrix):
        return unitary
    if isinstance(unitary, GeneralizedPermutation):
        return to_matrix(unitary)
    return UnitaryMatrix(np.asarray(unitary))


def spectrum(unitary: Union[UnitaryMatrix, np.ndarray],
             branch: Union[Branch, str] = Branch.ZERO_TO_TWO_PI) -> Spectrum:
    """
    Diagonalizza U tramite decomposizione di Schur complessa (per matrici normali
    la forma di Schur è diagonale e i vettori di Schur sono ortonormali).

    Returns:
        Spectrum: autofasi ordinate nella finestra scelta e autovettori

    Raises:
        NotUnitaryError: input non unitario
        EigenSolverError: fallimento dell'autosolutore o ricostruzione oltre 1e-9
    """
    unitary = _as_unitary(unitary)
    branch = Branch(branch)

    try:
        schur_form, schur_vectors = scipy.linalg.schur(unitary.entries, output='complex')
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"Decomposizione di Schur fallita: {str(e)}") from e

    eigenvalues = np.diag(schur_form)
    phases = _place_in_branch(-np.angle(eigenvalues), branch)
    order = np.argsort(phases, kind='stable')
    phases = phases[order]
    vectors = _orthonormalize_degenerate_clusters(phases, schur_vectors[:, order])

    phases.setflags(write=False)
    vectors.setflags(write=False)
    result = Spectrum(eigenphases=phases, eigenvectors=vectors, branch=branch)

    error = max_abs(result.reconstruct() - unitary.entries)
    if error > LINALG_TOLERANCES['reconstruction']:
        raise EigenSolverError(f"Ricostruzione di U fuori tolleranza: {error:.3e}")

    logger.debug(f"Spettro estratto: dim={unitary.dim}, errore di ricostruzione {error:.2e}")
    return result


def extract_hamiltonian(unitary: Union[UnitaryMatrix, np.ndarray],
                        time_step: Union[TimeStep, float] = 1.0,
                        branch: Union[Branch, str] = Branch.ZERO_TO_TWO_PI) -> np.ndarray:
    """
    Estrae H tale che U(δt) = e^{-iHδt}.

    H = V diag(φ/δt) V†, con φ nella finestra scelta. Su dim <= 32 la ricostruzione
    viene verificata anche con scipy.linalg.expm (scaling and squaring).

    Args:
        unitary: operatore di evoluzione
        time_step: δt
        branch: finestra delle autofasi

    Returns:
        np.ndarray: H hermitiana
    """
    time_step = time_step if isinstance(time_step, TimeStep) else TimeStep(float(time_step))
    unitary = _as_unitary(unitary)
    decomposition = spectrum(unitary, branch)

    vectors = decomposition.eigenvectors
    hamiltonian = (vectors * decomposition.energies(time_step)) @ vectors.conj().T
    asymmetry = max_abs(hamiltonian - hamiltonian.conj().T)
    if asymmetry > LINALG_TOLERANCES['hamiltonian_hermiticity']:
        raise EigenSolverError(f"H non hermitiana: ‖H - H†‖_max = {asymmetry:.3e}")
    hamiltonian = 0.5 * (hamiltonian + hamiltonian.conj().T)

    if unitary.dim <= LINALG_TOLERANCES['expm_check_max_dim']:
        rebuilt = scipy.linalg.expm(-1j * hamiltonian * time_step.dt)
        error = max_abs(rebuilt - unitary.entries)
        if error > LINALG_TOLERANCES['reconstruction']:
            raise EigenSolverError(f"Verifica expm fallita: ‖e^(-iHδt) - U‖_max = {error:.3e}")

    hamiltonian.setflags(write=False)
    logger.info(f"Hamiltoniana estratta: dim={unitary.dim}, δt={time_step.dt}, finestra {Branch(branch).value}")
    return hamiltonian


def transform_hamiltonian(hamiltonian: np.ndarray, basis_change: Union[UnitaryMatrix, np.ndarray]) -> np.ndarray:
    """Cambio di base W H W†: l'equazione U = e^{-iHδt} è covariante"""
    basis_change = _as_unitary(basis_change)
    if basis_change.dim != hamiltonian.shape[0]:
        raise DimensionMismatchError(f"H dim {hamiltonian.shape[0]}, W dim {basis_change.dim}")
    w = basis_change.entries
    return w @ hamiltonian @ w.conj().T


def load_universe(path: Union[str, Path]) -> GeneralizedPermutation:
    """
    Legge un file universo `{ "dim": n, "target": [...], "phase": [...] }`.

    Raises:
        DomainError: campi sconosciuti o mancanti, dim incoerente, tabella non biiettiva
    """
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    return universe_from_dict(data)


def universe_from_dict(data: dict) -> GeneralizedPermutation:
    if not isinstance(data, dict):
        raise DomainError("Il file universo deve contenere un oggetto JSON")
    unknown = set(data) - {'dim', 'target', 'phase'}
    if unknown:
        raise DomainError(f"Campi sconosciuti nel file universo: {sorted(unknown)}")
    for key in ('dim', 'target'):
        if key not in data:
            raise DomainError(f"Campo obbligatorio '{key}' mancante nel file universo")
    if len(data['target']) != int(data['dim']):
        raise DomainError(f"dim={data['dim']} ma target ha {len(data['target'])} elementi")

    law = from_update_rule(data['target'], data.get('phase'))
    if isinstance(law, NotInvertible):
        raise DomainError(
            f"Universo non invertibile: stati {law.first} e {law.second} -> {law.target}"
        )
    return law


def dump_universe(permutation: GeneralizedPermutation, path: Union[str, Path]) -> str:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(permutation.to_dict(), f, indent=2)
    logger.info(f"Universo salvato in {path}")
    return str(path)
