import logging
import math
from typing import List, Union

import numpy as np
from scipy.stats import unitary_group

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, None]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """
    Crea un generatore numpy deterministico.

    Args:
        seed: intero, SeedSequence o None (entropia di sistema)

    Returns:
        np.random.Generator: generatore PCG64
    """
    return np.random.default_rng(seed)


def spawn_seeds(master_seed: SeedLike, count: int) -> List[np.random.SeedSequence]:
    """
    Regola di splitting dei sotto-stream: il figlio i-esimo ha la stessa entropia
    del seed master e spawn_key esteso con i.

    Il risultato dipende solo da (master_seed, count, i): batch e trial possono
    essere eseguiti in qualunque ordine o in parallelo, e una SeedSequence
    passata dal chiamante non viene modificata (niente `spawn`, che ne avanza
    il contatore interno).
    """
    if isinstance(master_seed, np.random.SeedSequence):
        root = master_seed
    else:
        root = np.random.SeedSequence(master_seed)
    return [
        np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (i,), pool_size=root.pool_size)
        for i in range(count)
    ]


def wrap_phase(theta: float) -> float:
    """Riporta un angolo nell'intervallo (-π, π]"""
    wrapped = math.remainder(float(theta), 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def reduce_angle(theta, period: float = math.pi):
    """Riduce uno o più angoli in [0, period)"""
    reduced = np.mod(theta, period)
    # np.mod può restituire esattamente `period` per input negativi minuscoli
    reduced = np.where(reduced >= period, 0.0, reduced)
    if np.ndim(reduced) == 0:
        return float(reduced)
    return reduced


def random_pure_permutation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Tabella target di una permutazione uniforme su dim stati"""
    return rng.permutation(dim)


def random_phases(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Fasi uniformi in [0, 2π)"""
    return rng.uniform(0.0, 2.0 * math.pi, size=dim)


def random_amplitudes(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Ampiezze complesse gaussiane normalizzate (distribuzione uniforme sulla sfera)"""
    values = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return values / np.linalg.norm(values)


def random_dense_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unitaria densa distribuita secondo la misura di Haar"""
    return unitary_group.rvs(dim, random_state=rng)


def max_abs(matrix) -> float:
    """Norma max-entry"""
    array = np.asarray(matrix)
    if array.size == 0:
        return 0.0
    return float(np.max(np.abs(array)))


def convert_numpy_types(obj):
    """Converte tipi numpy e pandas per JSON serialization"""
    if isinstance(obj, dict):
        return {str(key): convert_numpy_types(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_numpy_types(item) for item in obj]
    elif isinstance(obj, np.ndarray):
        return convert_numpy_types(obj.tolist())
    elif isinstance(obj, complex):
        return {'re': obj.real, 'im': obj.imag}
    elif hasattr(obj, 'to_dict') and not isinstance(obj, type):
        return convert_numpy_types(obj.to_dict())
    elif isinstance(obj, np.generic):
        return convert_numpy_types(obj.item())
    elif hasattr(obj, 'isoformat'):
        return obj.isoformat()
    else:
        return obj
