"""
Esperimento EPR/Bell con la distribuzione di variabili nascoste "mousedrop"
W(a, b, c) = C|sin(4c - 2a - 2b)|: densità, campionamento, rivelazione
deterministica, correlazioni, CHSH, analisi controfattuale e riferimento quantistico

NOTA SUL MODELLO: la regola di rivelazione sign(cos(2(setting - c))) è una scelta
di modello (esiti ontologici senza casualità residua al rivelatore). L'accordo con
il riferimento quantistico cos(2(a - b)) viene misurato e riportato, mai assunto.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from ..config import LAB_PARAMS
from ..config_thresholds import BELL_THRESHOLDS
from .errors import DomainError
from .utils import SeedLike, make_rng, reduce_angle, spawn_seeds

logger = logging.getLogger(__name__)

MOUSEDROP_NORMALIZATION = 0.5
GAUSS_NODES = 8
ACCEPTANCE_RATE = 2.0 / math.pi
QUARTER_PI = math.pi / 4.0

METHOD_ALIASES = {
    'mc': 'montecarlo',
    'montecarlo': 'montecarlo',
    'quad': 'quadrature',
    'quadrature': 'quadrature',
}

SAMPLERS = ('rejection', 'inverse_cdf')


@dataclass(frozen=True)
class PolarizerSettings:
    """Orientazioni dei polarizzatori (radianti, ridotte in [0, π))"""
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("Angoli dei polarizzatori non finiti")
        object.__setattr__(self, 'a', reduce_angle(self.a))
        object.__setattr__(self, 'b', reduce_angle(self.b))

    @classmethod
    def from_degrees(cls, a_deg: float, b_deg: float) -> 'PolarizerSettings':
        return cls(math.radians(a_deg), math.radians(b_deg))


@dataclass(frozen=True)
class HiddenPolarization:
    """Polarizzazione nascosta c in [0, π), comune ai due fotoni"""
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and 0.0 <= self.c < math.pi):
            raise DomainError(f"c deve stare in [0, π), ricevuto {self.c}")


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    std_error: float
    n: int
    method: str
    error_bound: float = 0.0

    def to_dict(self) -> dict:
        return {
            'value': self.value,
            'std_error': self.std_error,
            'n': self.n,
            'method': self.method,
            'error_bound': self.error_bound,
        }


@dataclass(frozen=True)
class ChshResult:
    S: float
    std_error: float
    components: Dict[str, CorrelationEstimate]
    quantum_reference_S: float
    classical_bound: float = BELL_THRESHOLDS['classical_bound']
    tsirelson_bound: float = BELL_THRESHOLDS['tsirelson_bound']

    def to_dict(self) -> dict:
        return {
            'S': self.S,
            'E': {key: estimate.value for key, estimate in self.components.items()},
            'std_error': {**{key: estimate.std_error for key, estimate in self.components.items()},
                          'S': self.std_error},
            'quantum_reference_S': self.quantum_reference_S,
            'classical_bound': self.classical_bound,
            'tsirelson_bound': self.tsirelson_bound,
        }


def _setting_phase(a: float, b: float) -> float:
    return 2.0 * a + 2.0 * b


def mousedrop_density(a: float, b: float, c, normalization: float = MOUSEDROP_NORMALIZATION):
    """
    W(a, b, c) = C|sin(4c - 2a - 2b)| con C = 1/2 sul dominio [0, π).

    Accetta c scalare o array.
    """
    values = normalization * np.abs(np.sin(4.0 * np.asarray(c, dtype=np.float64) - _setting_phase(a, b)))
    if np.ndim(values) == 0:
        return float(values)
    return values


def _periodic_points(offset: float, spacing: float, upper: float = math.pi) -> np.ndarray:
    first = math.fmod(offset, spacing)
    if first < 0:
        first += spacing
    return np.arange(first, upper, spacing)


def _density_kinks(a: float, b: float) -> np.ndarray:
    # zeri di sin(4c - φ): c = (φ + kπ)/4
    return _periodic_points(_setting_phase(a, b) / 4.0, math.pi / 4.0)


def _detection_edges(setting: float) -> np.ndarray:
    # cos(2(s - c)) = 0: c = s + π/4 + kπ/2
    return _periodic_points(setting + math.pi / 4.0, math.pi / 2.0)


def composite_quadrature(func: Callable[[np.ndarray], np.ndarray], panels: int,
                         breakpoints: Iterable[float] = (), lower: float = 0.0,
                         upper: float = math.pi) -> float:
    """
    Gauss-Legendre composito su [lower, upper] con `panels` pannelli distribuiti tra
    i segmenti delimitati dai punti di rottura (spigoli e discontinuità della funzione).
    """
    if panels < BELL_THRESHOLDS['min_grid']:
        raise DomainError(f"gridsize deve essere >= {BELL_THRESHOLDS['min_grid']}, ricevuto {panels}")
    points = np.unique(np.concatenate(([lower, upper], np.asarray(list(breakpoints), dtype=np.float64))))
    points = points[(points >= lower) & (points <= upper)]
    segments = np.diff(points)
    keep = segments > 1e-15
    starts = points[:-1][keep]
    lengths = segments[keep]

    nodes, weights = leggauss(GAUSS_NODES)
    allotted = np.maximum(1, np.floor(panels * lengths / (upper - lower)).astype(int))

    total = 0.0
    for start, length, count in zip(starts, lengths, allotted):
        edges = start + length * np.arange(count + 1) / count
        half = 0.5 * np.diff(edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        abscissae = (centers[:, None] + half[:, None] * nodes[None, :]).ravel()
        total += float(np.sum(np.repeat(half, GAUSS_NODES) * np.tile(weights, count) * func(abscissae)))
    return total


@dataclass(frozen=True)
class MousedropModel:
    """Densità di variabili nascoste con normalizzazione C sul dominio [0, π)"""
    normalization: float = MOUSEDROP_NORMALIZATION
    domain: Tuple[float, float] = field(default=(0.0, math.pi))

    def __post_init__(self):
        if not self.normalization > 0:
            raise DomainError(f"C deve essere positivo, ricevuto {self.normalization}")

    def density(self, a: float, b: float, c):
        return mousedrop_density(a, b, c, self.normalization)

    def total_mass(self, a: float, b: float) -> float:
        """∫₀^π W(a, b, c) dc tramite scipy.integrate.quad sugli spigoli di |sin|"""
        kinks = _density_kinks(a, b)
        value, _ = integrate.quad(lambda c: self.density(a, b, c), *self.domain,
                                  points=kinks[(kinks > 0) & (kinks < math.pi)],
                                  epsabs=1e-13, epsrel=1e-13, limit=200)
        return float(value)

    def fitted_normalization(self, phase: float = 0.0) -> float:
        """C che normalizza ∫₀^π C|sin(4c - φ)| dc a uno"""
        unit = MousedropModel(normalization=1.0)
        return 1.0 / unit.total_mass(phase / 2.0, 0.0)

    def verify_normalization(self, a: float, b: float) -> bool:
        return abs(self.total_mass(a, b) - 1.0) <= BELL_THRESHOLDS['normalization']


def _rejection_batch(phase: float, size: int, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """Rigetto con proposta uniforme su [0, π): accetta con probabilità |sin(4c - φ)|"""
    samples = np.empty(size, dtype=np.float64)
    simulated = 0
    proposals = 0
    while simulated < size:
        k = size - simulated
        c = rng.uniform(0.0, math.pi, size=k)
        u = rng.uniform(size=k)
        accept = u < np.abs(np.sin(4.0 * c - phase))
        num_accept = int(np.sum(accept))
        proposals += k
        if num_accept > 0:
            samples[simulated:simulated + num_accept] = c[accept]
            simulated += num_accept
    return samples, proposals


def _inverse_cdf_batch(phase: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Inversione analitica: u = 4c - φ percorre quattro archi di |sin| di massa uguale;
    si sceglie l'arco e si inverte la CDF (1 - cos v)/2 sull'arco.
    """
    arcs = rng.integers(0, 4, size=size)
    w = rng.uniform(size=size)
    v = np.arccos(1.0 - 2.0 * w)
    c = np.mod((arcs * math.pi + v + phase) / 4.0, math.pi)
    return np.where(c >= math.pi, 0.0, c)


def sample_hidden(a: float, b: float, rng: np.random.Generator, size: Optional[int] = None,
                  method: str = 'rejection') -> Union[HiddenPolarization, np.ndarray]:
    """
    Campiona c con densità W(a, b, ·).

    Args:
        a, b: impostazioni (radianti)
        rng: stream casuale con seed
        size: None per un singolo HiddenPolarization, altrimenti numero di campioni
        method: 'rejection' (inviluppo piatto, accettazione 2/π) o 'inverse_cdf'

    Returns:
        HiddenPolarization oppure array di c in [0, π)
    """
    if method not in SAMPLERS:
        raise DomainError(f"Campionatore sconosciuto: {method}")
    count = 1 if size is None else int(size)
    if count < 0:
        raise DomainError(f"size deve essere >= 0, ricevuto {size}")
    phase = _setting_phase(a, b)

    if method == 'rejection':
        samples, proposals = _rejection_batch(phase, count, rng)
        if count:
            logger.debug(f"Campionamento per rigetto: accettazione {count / proposals:.4f} "
                         f"(attesa {ACCEPTANCE_RATE:.4f})")
    else:
        samples = _inverse_cdf_batch(phase, count, rng)

    if size is None:
        return HiddenPolarization(float(samples[0]))
    return samples


def detect(setting: float, c):
    """
    Esito deterministico ±1: sign(cos(2(setting - c))), con il bordo a misura nulla
    cos = 0 assegnato a +1.

    La differenza setting - c è ridotta in [0, π): l'esito è +1 su [0, π/4] ∪ [3π/4, π).
    I bordi sono riconosciuti entro `detection_edge`, così che setting = c + π/4
    calcolato in virgola mobile dia sempre +1.
    """
    value = c.c if isinstance(c, HiddenPolarization) else c
    offset = reduce_angle(setting - np.asarray(value, dtype=np.float64))
    edge = BELL_THRESHOLDS['detection_edge']
    outcome = np.where((offset <= QUARTER_PI + edge) | (offset >= math.pi - QUARTER_PI - edge), 1, -1)
    if np.ndim(outcome) == 0:
        return int(outcome)
    return outcome.astype(np.int8)


def _normalize_method(method: str) -> str:
    try:
        return METHOD_ALIASES[method]
    except KeyError:
        raise DomainError(f"Metodo sconosciuto: {method}") from None


def _correlation_quadrature(a: float, b: float, grid: int) -> CorrelationEstimate:
    breakpoints = np.concatenate((_density_kinks(a, b), _detection_edges(a), _detection_edges(b)))

    def integrand(c):
        return mousedrop_density(a, b, c) * detect(a, c) * detect(b, c)

    value = composite_quadrature(integrand, grid, breakpoints)
    coarse_grid = grid // 2 if grid // 2 >= BELL_THRESHOLDS['min_grid'] else grid * 2
    coarse = composite_quadrature(integrand, coarse_grid, breakpoints)
    return CorrelationEstimate(value=value, std_error=0.0, n=grid, method='quadrature',
                               error_bound=abs(value - coarse))


def _correlation_batch(a: float, b: float, size: int, seed: np.random.SeedSequence,
                       sampler: str) -> int:
    rng = make_rng(seed)
    c = sample_hidden(a, b, rng, size=size, method=sampler)
    return int(np.sum(detect(a, c).astype(np.int64) * detect(b, c)))


def _correlation_montecarlo(a: float, b: float, samples: int, seed: SeedLike,
                            sampler: str, batch_size: Optional[int],
                            workers: Optional[int]) -> CorrelationEstimate:
    batch_size = batch_size or LAB_PARAMS['mc_batch_size']
    workers = workers or LAB_PARAMS['mc_workers']
    n_batches = max(1, math.ceil(samples / batch_size))
    sizes = [batch_size] * (n_batches - 1) + [samples - batch_size * (n_batches - 1)]
    seeds = spawn_seeds(seed, n_batches)

    # Somme intere per batch: il risultato non dipende dall'ordine di fusione
    if workers > 1 and n_batches > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sums = list(pool.map(lambda args: _correlation_batch(a, b, args[0], args[1], sampler),
                                 zip(sizes, seeds)))
    else:
        sums = [_correlation_batch(a, b, size, child, sampler) for size, child in zip(sizes, seeds)]

    total = sum(sums)
    value = total / samples
    if samples > 1:
        variance = max(0.0, (1.0 - value * value) * samples / (samples - 1))
        std_error = math.sqrt(variance / samples)
    else:
        std_error = 0.0
    return CorrelationEstimate(value=value, std_error=std_error, n=samples, method='montecarlo')


def correlation(a: float, b: float, method: str = 'quadrature', n: Optional[int] = None,
                grid: Optional[int] = None, seed: SeedLike = None, sampler: str = 'rejection',
                batch_size: Optional[int] = None, workers: Optional[int] = None) -> CorrelationEstimate:
    """
    E(a, b) = ∫ W(a, b, c)·detect(a, c)·detect(b, c) dc.

    Args:
        a, b: impostazioni (radianti)
        method: 'montecarlo'/'mc' o 'quadrature'/'quad'
        n: campioni Monte Carlo
        grid: pannelli di quadratura (>= 8)
        seed: seed master; i batch usano spawn_seeds(seed, n_batches)

    Returns:
        CorrelationEstimate
    """
    method = _normalize_method(method)
    if method == 'quadrature':
        grid = 4096 if grid is None else int(grid)
        if grid < BELL_THRESHOLDS['min_grid']:
            raise DomainError(f"gridsize deve essere >= {BELL_THRESHOLDS['min_grid']}, ricevuto {grid}")
        return _correlation_quadrature(a, b, grid)

    if n is None or int(n) < 1:
        raise DomainError(f"n deve essere >= 1, ricevuto {n}")
    estimate = _correlation_montecarlo(a, b, int(n), seed, sampler, batch_size, workers)
    logger.debug(f"E({a:.4f}, {b:.4f}) = {estimate.value:.5f} ± {estimate.std_error:.5f} (n={n})")
    return estimate


def quantum_reference(a: float, b: float) -> float:
    """Predizione quantistica standard per fotoni massimamente entangled: cos(2(a - b))"""
    return math.cos(2.0 * (a - b))


def chsh(a: float, a_prime: float, b: float, b_prime: float, method: str = 'quadrature',
         n: Optional[int] = None, grid: Optional[int] = None, seed: SeedLike = None,
         sampler: str = 'rejection', batch_size: Optional[int] = None,
         workers: Optional[int] = None) -> ChshResult:
    """
    S = E(a, b) - E(a, b') + E(a', b) + E(a', b').

    Le quattro componenti Monte Carlo usano i figli spawn_seeds(seed, 4)
    nell'ordine ab, abp, apb, apbp.
    """
    method = _normalize_method(method)
    pairs = {
        'ab': (a, b),
        'abp': (a, b_prime),
        'apb': (a_prime, b),
        'apbp': (a_prime, b_prime),
    }
    seeds = spawn_seeds(seed, len(pairs))
    components = {
        key: correlation(x, y, method=method, n=n, grid=grid, seed=child, sampler=sampler,
                         batch_size=batch_size, workers=workers)
        for (key, (x, y)), child in zip(pairs.items(), seeds)
    }
    s_value = (components['ab'].value - components['abp'].value
               + components['apb'].value + components['apbp'].value)
    s_error = math.sqrt(sum(estimate.std_error ** 2 for estimate in components.values()))
    quantum_s = (quantum_reference(a, b) - quantum_reference(a, b_prime)
                 + quantum_reference(a_prime, b) + quantum_reference(a_prime, b_prime))

    logger.info(f"CHSH ({method}): S = {s_value:.5f} ± {s_error:.5f}, riferimento quantistico {quantum_s:.5f}")
    return ChshResult(S=s_value, std_error=s_error, components=components, quantum_reference_S=quantum_s)


def counterfactual_shift(a: float, b: float, a_prime: float, b_prime: float, grid: int = 4096) -> float:
    """
    Distanza in variazione totale ½∫₀^π |W(a, b, c) - W(a', b', c)| dc: quanto deve
    cambiare lo stato dei fotoni quando cambiano le impostazioni.
    """
    phase = _setting_phase(a, b)
    phase_prime = _setting_phase(a_prime, b_prime)
    delta = math.fmod(abs(phase - phase_prime), math.pi)
    if min(delta, math.pi - delta) < 1e-15:
        return 0.0

    # incroci |sin(4c - φ)| = |sin(4c - φ')|: c = (φ + φ')/8 + kπ/8
    crossings = _periodic_points((phase + phase_prime) / 8.0, math.pi / 8.0)
    breakpoints = np.concatenate((_density_kinks(a, b), _density_kinks(a_prime, b_prime), crossings))

    def integrand(c):
        return np.abs(mousedrop_density(a, b, c) - mousedrop_density(a_prime, b_prime, c))

    return 0.5 * composite_quadrature(integrand, grid, breakpoints)


def hidden_histogram(a: float, b: float, samples: int, bins: int = 64, seed: SeedLike = None,
                     method: str = 'rejection') -> pd.DataFrame:
    """
    Istogramma dei campioni di c confrontato con le masse di quadratura per bin.

    Returns:
        DataFrame (bin, left, right, observed, expected_mass, expected, sigma, z_score)
    """
    if samples < 1 or bins < 1:
        raise DomainError(f"Parametri non validi: samples={samples}, bins={bins}")
    rng = make_rng(seed)
    c = sample_hidden(a, b, rng, size=samples, method=method)
    edges = np.linspace(0.0, math.pi, bins + 1)
    observed, _ = np.histogram(c, bins=edges)

    kinks = _density_kinks(a, b)
    masses = np.array([
        composite_quadrature(lambda x: mousedrop_density(a, b, x), BELL_THRESHOLDS['min_grid'],
                             kinks, lower=left, upper=right)
        for left, right in zip(edges[:-1], edges[1:])
    ])
    expected = samples * masses
    sigma = np.sqrt(samples * masses * (1.0 - masses))
    z_scores = np.divide(observed - expected, sigma, out=np.zeros(bins), where=sigma > 0)

    return pd.DataFrame({
        'bin': np.arange(bins),
        'left': edges[:-1],
        'right': edges[1:],
        'observed': observed,
        'expected_mass': masses,
        'expected': expected,
        'sigma': sigma,
        'z_score': z_scores,
    })
