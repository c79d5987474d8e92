"""
Strumenti a livello di operatori: evoluzione di Heisenberg, commutatori, verifica di
insiemi di beables e test del cono di luce su un automa locale
"""
import logging
from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse

from ..config import LAB_PARAMS
from ..config_thresholds import CAUSALITY_THRESHOLDS, LINALG_TOLERANCES
from .errors import DimensionMismatchError, DomainError, NotHermitianError
from .evolution import (
    GeneralizedPermutation,
    UnitaryMatrix,
    bit_shift_universe,
    matrix_to_permutation,
    period,
    to_matrix,
)
from .utils import max_abs

logger = logging.getLogger(__name__)

PAULI = {
    'I': np.eye(2, dtype=np.complex128),
    'X': np.array([[0, 1], [1, 0]], dtype=np.complex128),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    'Z': np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

SEPARATIONS = ('spacelike', 'lightlike', 'timelike')


@dataclass(frozen=True, eq=False)
class Observable:
    """Matrice hermitiana sullo spazio degli stati dell'universo"""
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError(f"Osservabile non quadrata: shape {entries.shape}")
        asymmetry = max_abs(entries - entries.conj().T)
        if asymmetry > LINALG_TOLERANCES['observable_hermiticity']:
            raise NotHermitianError(f"‖A - A†‖_max = {asymmetry:.3e} per '{self.label}'")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.entries - np.diag(np.diag(self.entries)))


@dataclass(frozen=True)
class SiteGeometry:
    """Anello di L siti con velocità del segnale in siti per passo"""
    sites: int
    speed: int = 1
    topology: str = 'ring'

    def __post_init__(self):
        if self.sites < 2:
            raise DomainError(f"La geometria richiede L >= 2, ricevuto {self.sites}")
        if self.speed < 1:
            raise DomainError(f"Velocità del segnale non valida: {self.speed}")
        if self.topology != 'ring':
            raise DomainError(f"Topologia non supportata: {self.topology}")

    def ring_distance(self, x: int, x_prime: int) -> int:
        delta = abs(x - x_prime) % self.sites
        return min(delta, self.sites - delta)

    def check_site(self, x: int):
        if not 0 <= x < self.sites:
            raise DomainError(f"Sito {x} fuori da [0, {self.sites})")


@dataclass(frozen=True)
class BeableVerdict:
    """pass, oppure fail con la prima coppia (i, j) e i tempi (s, t) che non commutano"""
    passed: bool
    witness: Optional[Tuple[int, int]] = None
    times: Optional[Tuple[int, int]] = None
    commutator: float = 0.0
    horizon: int = 0

    @property
    def verdict(self) -> str:
        return 'pass' if self.passed else 'fail'

    def to_dict(self) -> dict:
        return {
            'verdict': self.verdict,
            'witness': list(self.witness) if self.witness else None,
            'times': list(self.times) if self.times else None,
            'commutator': self.commutator,
            'horizon': self.horizon,
        }


@dataclass(frozen=True)
class LightConeResult:
    separation: str
    commutator: float
    ring_distance: int
    time_difference: int
    directed: str = field(default='off_cone')

    def to_dict(self) -> dict:
        return {
            'separation': self.separation,
            'commutator': self.commutator,
            'ring_distance': self.ring_distance,
            'time_difference': self.time_difference,
            'directed': self.directed,
        }


def _as_unitary(unitary) -> UnitaryMatrix:
    if isinstance(unitary, UnitaryMatrix):
        return unitary
    if isinstance(unitary, GeneralizedPermutation):
        return to_matrix(unitary)
    return UnitaryMatrix(np.asarray(unitary))


def site_operator(sites: int, site: int, kind: Union[str, np.ndarray] = 'Z') -> Observable:
    """
    Operatore locale: identità ovunque tranne un blocco 2×2 hermitiano sul sito.

    Il sito 0 è il bit meno significativo: il fattore di Kronecker più a sinistra
    è il sito L-1.
    """
    if sites < 1:
        raise DomainError(f"L deve essere >= 1, ricevuto {sites}")
    if not 0 <= site < sites:
        raise DomainError(f"Sito {site} fuori da [0, {sites})")
    if sites > LAB_PARAMS['max_sites']:
        raise DomainError(f"L={sites} oltre il limite di {LAB_PARAMS['max_sites']} siti")

    if isinstance(kind, str):
        block = PAULI[kind.upper()]
        label = f"{kind.upper()}@site{site}"
    else:
        block = np.asarray(kind, dtype=np.complex128)
        label = f"custom@site{site}"
    if block.shape != (2, 2):
        raise DomainError("Il blocco locale deve essere 2×2")

    factors = [block if position == site else PAULI['I'] for position in reversed(range(sites))]
    return Observable(reduce(np.kron, factors), label=label)


def diagonal_observables(dim: int) -> List[Observable]:
    """Proiettori sugli stati ontologici: l'insieme completo di osservabili diagonali"""
    observables = []
    for index in range(dim):
        projector = np.zeros((dim, dim), dtype=np.complex128)
        projector[index, index] = 1.0
        observables.append(Observable(projector, label=f"P{index}"))
    return observables


def _unitary_power(unitary: UnitaryMatrix, t: int) -> np.ndarray:
    if t >= 0:
        return np.linalg.matrix_power(unitary.entries, t)
    return np.linalg.matrix_power(unitary.entries.conj().T, -t)


def _evolve_entries(entries: np.ndarray, unitary_t: np.ndarray) -> np.ndarray:
    evolved = unitary_t.conj().T @ entries @ unitary_t
    return evolved


def _conjugate_by_law(entries: np.ndarray, law_t: GeneralizedPermutation) -> np.ndarray:
    """
    U^{-t} A U^{t} per una permutazione generalizzata, senza prodotti di matrici:
    A(t)[i, j] = e^{-iθ_i} A[τ(i), τ(j)] e^{iθ_j}, con (τ, θ) = P^t.
    """
    index = law_t.target
    evolved = entries[np.ix_(index, index)]
    if not law_t.is_pure:
        phases = np.exp(1j * law_t.phase)
        evolved = evolved * np.outer(phases.conj(), phases)
    return evolved


def _sparse_law(law: GeneralizedPermutation) -> sparse.csr_matrix:
    """Matrice sparsa con elemento (target(i), i) = e^{i·phase(i)}"""
    dim = law.dim
    return sparse.csr_matrix((np.exp(1j * law.phase), (law.target, np.arange(dim))),
                             shape=(dim, dim), dtype=np.complex128)


def _sparse_site_operator(sites: int, site: int, kind: str) -> sparse.csr_matrix:
    factors = [PAULI[kind] if position == site else PAULI['I'] for position in reversed(range(sites))]
    return sparse.csr_matrix(reduce(lambda left, right: sparse.kron(left, right, format='csr'), factors))


def _sparse_commutator_norm(a: sparse.csr_matrix, b: sparse.csr_matrix) -> float:
    difference = a @ b - b @ a
    if difference.nnz == 0:
        return 0.0
    return float(abs(difference).max())


def heisenberg(observable: Observable, unitary, t: int) -> Observable:
    """
    Osservabile nel quadro di Heisenberg: A(t) = U^{-t} A U^{t}.

    t può essere negativo (U è invertibile). Con una GeneralizedPermutation
    l'evoluzione è un rimescolamento di indici, O(dim²).
    """
    if isinstance(unitary, GeneralizedPermutation):
        if unitary.dim != observable.dim:
            raise DimensionMismatchError(f"P dim {unitary.dim}, osservabile dim {observable.dim}")
        if t == 0:
            return observable
        evolved = _conjugate_by_law(observable.entries, unitary.power(int(t)))
        return Observable(evolved, label=f"{observable.label}({t})")

    unitary = _as_unitary(unitary)
    if unitary.dim != observable.dim:
        raise DimensionMismatchError(f"U dim {unitary.dim}, osservabile dim {observable.dim}")
    if t == 0:
        return observable

    evolved = _evolve_entries(observable.entries, _unitary_power(unitary, int(t)))
    asymmetry = max_abs(evolved - evolved.conj().T)
    if asymmetry > LINALG_TOLERANCES['heisenberg_hermiticity']:
        raise NotHermitianError(f"Hermiticità persa nell'evoluzione: {asymmetry:.3e}")
    return Observable(0.5 * (evolved + evolved.conj().T), label=f"{observable.label}({t})")


def commutator_norm(a: Union[Observable, np.ndarray], b: Union[Observable, np.ndarray]) -> float:
    """‖AB - BA‖_max"""
    a_entries = a.entries if isinstance(a, Observable) else np.asarray(a)
    b_entries = b.entries if isinstance(b, Observable) else np.asarray(b)
    if a_entries.shape != b_entries.shape:
        raise DimensionMismatchError(f"Dimensioni diverse: {a_entries.shape} vs {b_entries.shape}")
    return max_abs(a_entries @ b_entries - b_entries @ a_entries)


def default_horizon(unitary) -> int:
    """period(U) se U è una permutazione pura con periodo <= 64, altrimenti 64"""
    cap = LAB_PARAMS['default_horizon_cap']
    if isinstance(unitary, GeneralizedPermutation):
        law = unitary
    else:
        law = matrix_to_permutation(_as_unitary(unitary))
    if law is not None and law.is_pure:
        law_period = period(law)
        if law_period <= cap:
            return law_period
        logger.warning(f"Periodo {law_period} oltre il limite: orizzonte troncato a {cap}")
    else:
        logger.warning(f"Periodo non determinabile: orizzonte di default {cap}")
    return cap


def is_beable_set(observables: Sequence[Observable], unitary, horizon: Optional[int] = None,
                  tol: float = CAUSALITY_THRESHOLDS['beable_commutator']) -> BeableVerdict:
    """
    Verifica che gli operatori commutino a due a due a ogni coppia di tempi
    0 <= s, t <= horizon (incluso lo stesso operatore a tempi diversi).

    Returns:
        BeableVerdict con la prima tripla (coppia, tempi) che viola la commutazione
    """
    if isinstance(unitary, GeneralizedPermutation):
        law, dim = unitary, unitary.dim
    else:
        unitary = _as_unitary(unitary)
        law, dim = None, unitary.dim
    for observable in observables:
        if observable.dim != dim:
            raise DimensionMismatchError(f"'{observable.label}' dim {observable.dim}, U dim {dim}")
    if horizon is None:
        horizon = default_horizon(unitary)
    if horizon < 1:
        raise DomainError(f"horizon deve essere >= 1, ricevuto {horizon}")

    # Una permutazione generalizzata manda matrici diagonali in matrici diagonali
    if law is not None and all(observable.is_diagonal for observable in observables):
        logger.info(f"Insieme di {len(observables)} beables diagonale sotto una permutazione (orizzonte {horizon})")
        return BeableVerdict(passed=True, horizon=horizon)

    if law is not None:
        def step(matrix: np.ndarray) -> np.ndarray:
            return _conjugate_by_law(matrix, law)
    else:
        u = unitary.entries

        def step(matrix: np.ndarray) -> np.ndarray:
            return u.conj().T @ matrix @ u

    # A_i(t) per t = 0..horizon, calcolati iterativamente
    trajectories: List[List[np.ndarray]] = []
    for observable in observables:
        current = observable.entries
        trajectory = [current]
        for _ in range(horizon):
            current = step(current)
            trajectory.append(current)
        trajectories.append(trajectory)

    # Matrici diagonali commutano sempre: scorciatoia esatta
    all_diagonal = all(
        max_abs(m - np.diag(np.diag(m))) <= tol for trajectory in trajectories for m in trajectory
    )
    if all_diagonal:
        logger.info(f"Insieme di {len(observables)} beables diagonale a ogni tempo (orizzonte {horizon})")
        return BeableVerdict(passed=True, horizon=horizon)

    for i, j in combinations_with_replacement(range(len(observables)), 2):
        for s in range(horizon + 1):
            for t in range(horizon + 1):
                if i == j and t <= s:
                    continue
                value = commutator_norm(trajectories[i][s], trajectories[j][t])
                if value > tol:
                    logger.info(f"Beables violati: ({observables[i].label}, {observables[j].label}) "
                                f"ai tempi ({s}, {t}), ‖[A, B]‖ = {value:.3e}")
                    return BeableVerdict(passed=False, witness=(i, j), times=(s, t),
                                         commutator=value, horizon=horizon)

    return BeableVerdict(passed=True, horizon=horizon)


def classify_separation(geometry: SiteGeometry, x: int, t: int, x_prime: int, t_prime: int) -> Tuple[str, int]:
    """Separazione con distanza ad anello d contro |Δt|·speed; simmetrica per t <-> t'"""
    distance = geometry.ring_distance(x, x_prime)
    reach = abs(t - t_prime) * geometry.speed
    if distance > reach:
        return 'spacelike', distance
    if distance == reach:
        return 'lightlike', distance
    return 'timelike', distance


def directed_cone(geometry: SiteGeometry, x: int, t: int, x_prime: int, t_prime: int) -> str:
    """
    Raffinamento orientato: l'automa sposta i segnali verso siti crescenti, quindi
    (x', t') è raggiunto da (x, t) se x' - x ≡ speed·(t' - t) mod L.
    """
    if (x_prime - x - geometry.speed * (t_prime - t)) % geometry.sites == 0:
        return 'on_cone'
    return 'off_cone'


def light_cone_check(geometry: SiteGeometry, unitary, a: Observable, x: int, t: int,
                     b: Observable, x_prime: int, t_prime: int) -> LightConeResult:
    """
    Classifica la separazione di (x, t) e (x', t') e restituisce
    ‖[A(t), B(t')]‖_max con entrambe le osservabili evolute nel quadro di Heisenberg.
    """
    geometry.check_site(x)
    geometry.check_site(x_prime)
    if not isinstance(unitary, GeneralizedPermutation):
        unitary = _as_unitary(unitary)

    separation, distance = classify_separation(geometry, x, t, x_prime, t_prime)
    value = commutator_norm(heisenberg(a, unitary, t), heisenberg(b, unitary, t_prime))
    return LightConeResult(
        separation=separation,
        commutator=value,
        ring_distance=distance,
        time_difference=t_prime - t,
        directed=directed_cone(geometry, x, t, x_prime, t_prime),
    )


def cone_map(sites: int, max_dt: Optional[int] = None, probes: Sequence[str] = ('X', 'Z'),
             unitary=None) -> pd.DataFrame:
    """
    Mappa esaustiva del cono di luce sull'automa a scorrimento di bit: tutte le
    coppie di siti, t = 0 e -max_dt <= t' <= max_dt, tutte le coppie di sonde.

    Con una legge a permutazione (il default) sonde ed evoluzione sono matrici
    sparse con un elemento per riga: il costo per riga è O(2^L).

    Returns:
        DataFrame con colonne (x, x_prime, t, t_prime, probe_a, probe_b,
        separation, commutator_norm, directed)
    """
    geometry = SiteGeometry(sites)
    if sites > LAB_PARAMS['max_sites']:
        raise DomainError(f"L={sites} oltre il limite di {LAB_PARAMS['max_sites']} siti")
    if max_dt is None:
        max_dt = sites
    if max_dt < 0:
        raise DomainError(f"max_dt deve essere >= 0, ricevuto {max_dt}")
    if unitary is None:
        law = bit_shift_universe(sites)
    elif isinstance(unitary, GeneralizedPermutation):
        law = unitary
    else:
        law = matrix_to_permutation(_as_unitary(unitary))
    if law is not None and law.dim != 2 ** sites:
        raise DimensionMismatchError(f"Legge di dimensione {law.dim}, attesa {2 ** sites}")

    time_steps = range(-max_dt, max_dt + 1)
    if law is not None:
        local = {(kind, site): _sparse_site_operator(sites, site, kind) for kind in probes for site in range(sites)}
        powers = {dt: _sparse_law(law.power(dt)) for dt in time_steps}

        def evolve_operator(b, dt):
            return powers[dt].conj().T @ b @ powers[dt]
        norm = _sparse_commutator_norm
    else:
        dense = _as_unitary(unitary)
        local = {(kind, site): site_operator(sites, site, kind).entries
                 for kind in probes for site in range(sites)}
        powers = {dt: _unitary_power(dense, dt) for dt in time_steps}

        def evolve_operator(b, dt):
            return _evolve_entries(b, powers[dt])
        norm = commutator_norm

    rows = []
    for (probe_b, x_prime), b in local.items():
        for t_prime in time_steps:
            b_t = evolve_operator(b, t_prime)
            for (probe_a, x), a in local.items():
                separation, _ = classify_separation(geometry, x, 0, x_prime, t_prime)
                rows.append({
                    'x': x,
                    'x_prime': x_prime,
                    't': 0,
                    't_prime': t_prime,
                    'probe_a': probe_a,
                    'probe_b': probe_b,
                    'separation': separation,
                    'commutator_norm': norm(a, b_t),
                    'directed': directed_cone(geometry, x, 0, x_prime, t_prime),
                })

    df = pd.DataFrame(rows, columns=['x', 'x_prime', 't', 't_prime', 'probe_a', 'probe_b',
                                     'separation', 'commutator_norm', 'directed'])
    df = df.sort_values(['x', 'x_prime', 't_prime', 'probe_a', 'probe_b'], kind='mergesort').reset_index(drop=True)
    logger.info(f"Mappa del cono: L={sites}, |Δt|<={max_dt}, {len(df)} righe")
    return df


def summarize_cone_map(df: pd.DataFrame) -> Dict[str, object]:
    """
    Riassunto della mappa: commutatore massimo fuori dal cono e minimo sulle coppie
    X/Z sul cono orientato.
    """
    spacelike = df[df['separation'] == 'spacelike']
    mixed = df[(df['probe_a'] != df['probe_b'])]
    on_cone = mixed[(mixed['separation'] == 'lightlike') & (mixed['directed'] == 'on_cone')]

    max_spacelike = float(spacelike['commutator_norm'].max()) if not spacelike.empty else 0.0
    min_on_cone = float(on_cone['commutator_norm'].min()) if not on_cone.empty else None

    causal = max_spacelike <= CAUSALITY_THRESHOLDS['spacelike_commutator']
    sharp = min_on_cone is None or min_on_cone >= CAUSALITY_THRESHOLDS['lightlike_commutator_min']
    return {
        'rows': int(len(df)),
        'spacelike_pairs': int(len(spacelike)),
        'max_spacelike_commutator': max_spacelike,
        'lightlike_on_cone_pairs': int(len(on_cone)),
        'min_lightlike_on_cone_commutator': min_on_cone,
        'verdict': 'pass' if causal and sharp else 'fail',
    }
