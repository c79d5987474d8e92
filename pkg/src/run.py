"""
Runner batch degli esperimenti: sottocomandi cogwheel, spectrum, conserve,
beables, lightcone e bell, con file di configurazione JSON, seed riproducibili
ed emissione JSON/CSV.

Codici di uscita: 0 verdetto pass, 1 verdetto fail, 2 errore d'uso.
"""
import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .config import EXPERIMENT_DEFAULTS, LAB_PARAMS, setup_logging
from .config_thresholds import BELL_THRESHOLDS, LINALG_TOLERANCES
from .ontology import beables, bell, conservation, evolution, report
from .ontology.errors import ConfigError, OntologyLabError
from .ontology.ontic import StateVector, classify_state
from .ontology.utils import make_rng, max_abs, random_pure_permutation, spawn_seeds

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

CONFIG_KEYS = ('subcommand', 'parameters', 'seed', 'output_format', 'output_path')
OUTPUT_FORMATS = ('json', 'csv')
MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class Parameter:
    """Schema di un parametro di sottocomando"""
    kind: type
    default: Any = None
    required: bool = False
    choices: Optional[Tuple[str, ...]] = None
    minimum: Optional[float] = None
    maximum: Optional[float] = None


def _max_dim() -> int:
    return 2 ** LAB_PARAMS['max_sites']


PARAMETER_SCHEMA: Dict[str, Dict[str, Parameter]] = {
    'cogwheel': {
        'n': Parameter(int, required=True, minimum=1, maximum=_max_dim()),
        'steps': Parameter(int, default=0),
        'index': Parameter(int, default=0, minimum=0),
    },
    'spectrum': {
        'n': Parameter(int, minimum=1, maximum=_max_dim()),
        'universe': Parameter(str),
        'dt': Parameter(float, default=EXPERIMENT_DEFAULTS['dt']),
        'branch': Parameter(str, default=EXPERIMENT_DEFAULTS['branch'],
                            choices=tuple(b.value for b in evolution.Branch)),
    },
    'conserve': {
        'dim': Parameter(int, default=64, minimum=1, maximum=_max_dim()),
        'steps': Parameter(int, default=100, minimum=0),
        'trials': Parameter(int, default=1000, minimum=1),
        'negative_trials': Parameter(int, default=0, minimum=0),
    },
    'beables': {
        'universe': Parameter(str, default='random', choices=('bitshift', 'cogwheel', 'random')),
        'size': Parameter(int, default=8, minimum=1),
        'ops': Parameter(str, default='diagonal', choices=('diagonal', 'xz')),
        'horizon': Parameter(int, minimum=1),
    },
    'lightcone': {
        'sites': Parameter(int, default=4, minimum=2, maximum=LAB_PARAMS['max_sites']),
        'max_dt': Parameter(int, minimum=0),
    },
    'bell': {
        'a': Parameter(float, required=True),
        'b': Parameter(float, required=True),
        'aprime': Parameter(float, required=True),
        'bprime': Parameter(float, required=True),
        'method': Parameter(str, default='quad', choices=('mc', 'quad')),
        'samples': Parameter(int, default=EXPERIMENT_DEFAULTS['samples'], minimum=1),
        'grid': Parameter(int, default=EXPERIMENT_DEFAULTS['grid'], minimum=BELL_THRESHOLDS['min_grid']),
        'sampler': Parameter(str, default='rejection', choices=bell.SAMPLERS),
    },
}


@dataclass
class ExperimentConfig:
    subcommand: Optional[str]
    parameters: Dict[str, Any] = field(default_factory=dict)
    seed: int = LAB_PARAMS['default_seed']
    output_format: str = 'json'
    output_path: Optional[str] = None

    def resolved_parameters(self) -> Dict[str, Any]:
        """Parametri con i default documentati, nell'ordine dello schema"""
        schema = PARAMETER_SCHEMA.get(self.subcommand, {})
        resolved = {}
        for name, param in schema.items():
            value = self.parameters.get(name, param.default)
            if value is not None and param.kind is float:
                value = float(value)
            resolved[name] = value
        return resolved

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand,
            'parameters': self.resolved_parameters(),
            'seed': self.seed,
            'output_format': self.output_format,
            'output_path': self.output_path,
        }


def _check_value(name: str, value: Any, param: Parameter) -> List[str]:
    errors = []
    if param.kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            return [f"{name}: atteso un intero, ricevuto {value!r}"]
    elif param.kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return [f"{name}: atteso un numero, ricevuto {value!r}"]
        if not math.isfinite(float(value)):
            return [f"{name}: valore non finito {value!r}"]
    elif not isinstance(value, param.kind):
        return [f"{name}: tipo non valido {value!r}"]

    if param.choices is not None and value not in param.choices:
        errors.append(f"{name}: valore {value!r} non tra {list(param.choices)}")
    if param.minimum is not None and value < param.minimum:
        errors.append(f"{name}: fuori intervallo, minimo {param.minimum}, ricevuto {value}")
    if param.maximum is not None and value > param.maximum:
        errors.append(f"{name}: fuori intervallo, massimo {param.maximum}, ricevuto {value}")
    return errors


def _cross_checks(subcommand: str, params: Dict[str, Any]) -> List[str]:
    errors = []
    if subcommand == 'cogwheel':
        n, index = params.get('n'), params.get('index')
        if isinstance(n, int) and isinstance(index, int) and n >= 1 and index >= n:
            errors.append(f"index: {index} fuori da [0, {n})")
    elif subcommand == 'spectrum':
        has_n = params.get('n') is not None
        has_universe = params.get('universe') is not None
        if has_n == has_universe:
            errors.append("n: specificare esattamente uno tra 'n' e 'universe'")
        dt = params.get('dt')
        if isinstance(dt, (int, float)) and not isinstance(dt, bool) and dt <= 0:
            errors.append(f"dt: deve essere > 0, ricevuto {dt}")
    elif subcommand == 'conserve':
        negative, dim = params.get('negative_trials'), params.get('dim')
        if isinstance(negative, int) and negative > 0 and isinstance(dim, int) and dim < 2:
            errors.append("dim: i controlli negativi richiedono dim >= 2")
    elif subcommand == 'beables':
        universe, size, ops = params.get('universe'), params.get('size'), params.get('ops')
        max_dim = LAB_PARAMS['max_beable_dim']
        if isinstance(size, int):
            if universe == 'bitshift' and 2 ** size > max_dim:
                errors.append(f"size: massimo {max_dim.bit_length() - 1} siti (2^L <= {max_dim}), ricevuto {size}")
            if universe in ('cogwheel', 'random') and size > max_dim:
                errors.append(f"size: massimo {max_dim} stati, ricevuto {size}")
            if ops == 'xz' and universe != 'bitshift' and (size < 2 or size & (size - 1)):
                errors.append(f"size: ops 'xz' richiede una dimensione potenza di 2, ricevuto {size}")
    return errors


def validate(config: ExperimentConfig) -> List[str]:
    """
    Validazione pura della configurazione: raccoglie tutti gli errori.

    Returns:
        List[str]: lista vuota se la configurazione è valida; ogni messaggio
        inizia con il nome della chiave incriminata
    """
    errors = []
    if config.subcommand not in PARAMETER_SCHEMA:
        errors.append(f"subcommand: valore {config.subcommand!r} non tra {list(PARAMETER_SCHEMA)}")

    if isinstance(config.seed, bool) or not isinstance(config.seed, (int, np.integer)):
        errors.append(f"seed: atteso un intero, ricevuto {config.seed!r}")
    elif not 0 <= config.seed < MAX_SEED:
        errors.append(f"seed: fuori da [0, 2^64), ricevuto {config.seed}")

    if config.output_format not in OUTPUT_FORMATS:
        errors.append(f"output_format: valore {config.output_format!r} non tra {list(OUTPUT_FORMATS)}")
    if config.output_path is not None and not isinstance(config.output_path, str):
        errors.append(f"output_path: atteso un percorso, ricevuto {config.output_path!r}")

    if not isinstance(config.parameters, dict):
        errors.append("parameters: atteso un oggetto chiave/valore")
        return errors
    if config.subcommand not in PARAMETER_SCHEMA:
        return errors

    schema = PARAMETER_SCHEMA[config.subcommand]
    for name in config.parameters:
        if name not in schema:
            errors.append(f"{name}: parametro sconosciuto per '{config.subcommand}'")

    for name, param in schema.items():
        value = config.parameters.get(name)
        if value is None:
            if param.required:
                errors.append(f"{name}: parametro obbligatorio mancante")
            continue
        errors.extend(_check_value(name, value, param))

    errors.extend(_cross_checks(config.subcommand, config.parameters))
    return errors


# ============================================================================
# ESPERIMENTI
# ============================================================================

def _run_cogwheel(params: Dict[str, Any], seed: int) -> Tuple[Dict[str, Any], str, Dict[str, Any]]:
    n, steps, index = params['n'], params['steps'], params['index']
    law = evolution.cogwheel(n)
    final = evolution.evolve(StateVector.basis(n, index), law, steps)
    final_class = classify_state(final)
    expected = (index + steps) % n

    passed = (final_class.is_ontological and final_class.index == expected
              and conservation.period_check(law, index))
    result = {
        'n': n,
        'steps': steps,
        'period': evolution.period(law),
        'initial_index': index,
        'expected_index': expected,
        'final_class': final_class.to_dict(),
    }
    return result, 'pass' if passed else 'fail', {}


def _reference_phases(n: int, branch: evolution.Branch) -> np.ndarray:
    phases = 2.0 * math.pi * np.arange(n) / n
    if branch is evolution.Branch.MINUS_PI_TO_PI:
        phases = np.where(phases > math.pi, phases - 2.0 * math.pi, phases)
    return np.sort(phases)


def _run_spectrum(params: Dict[str, Any], seed: int) -> Tuple[Dict[str, Any], str, Dict[str, Any]]:
    branch = evolution.Branch(params['branch'])
    if params['n'] is not None:
        law = evolution.cogwheel(params['n'])
    else:
        law = evolution.load_universe(params['universe'])
    unitary = evolution.to_matrix(law)

    decomposition = evolution.spectrum(unitary, branch)
    time_step = evolution.TimeStep(params['dt'])
    vectors = decomposition.eigenvectors
    rebuilt = (vectors * np.exp(-1j * decomposition.energies(time_step) * time_step.dt)) @ vectors.conj().T
    round_trip = max_abs(rebuilt - unitary.entries)

    result = {
        'dim': law.dim,
        'dt': time_step.dt,
        'branch': branch.value,
        'eigenphases': decomposition.eigenphases,
        'energies': decomposition.energies(time_step),
        'round_trip_error': round_trip,
    }
    passed = round_trip <= LINALG_TOLERANCES['reconstruction']
    if params['n'] is not None:
        reference_error = max_abs(decomposition.eigenphases - _reference_phases(law.dim, branch))
        result['reference_error'] = reference_error
        passed = passed and reference_error <= LINALG_TOLERANCES['reconstruction']

    # Su dimensioni piccole extract_hamiltonian verifica anche con scipy.linalg.expm
    hamiltonian = evolution.extract_hamiltonian(unitary, time_step, branch)
    result['hamiltonian_trace'] = float(np.real(np.trace(hamiltonian)))
    return result, 'pass' if passed else 'fail', {}


def _run_conserve(params: Dict[str, Any], seed: int) -> Tuple[Dict[str, Any], str, Dict[str, Any]]:
    conservation_seed, negative_seed = spawn_seeds(seed, 2)
    summary = conservation.run_conservation_suite(params['dim'], params['steps'], params['trials'],
                                                  conservation_seed)
    meta = {'conservation_time': summary.pop('execution_time')}
    result = {'deviation': summary['max_deviation'], 'conservation': summary}
    passed = summary['verdict'] == 'pass'

    if params['negative_trials'] > 0:
        negative = conservation.run_negative_control_suite(params['dim'], params['negative_trials'],
                                                           negative_seed)
        result['negative_control'] = negative
        passed = passed and negative['verdict'] == 'pass'
    return result, 'pass' if passed else 'fail', meta


def _beable_universe(params: Dict[str, Any], seed: int) -> Tuple[evolution.GeneralizedPermutation, Optional[int]]:
    universe, size = params['universe'], params['size']
    if universe == 'bitshift':
        return evolution.bit_shift_universe(size), size
    if universe == 'cogwheel':
        law = evolution.cogwheel(size)
    else:
        law = evolution.GeneralizedPermutation(random_pure_permutation(size, make_rng(seed)))
    sites = size.bit_length() - 1 if size >= 2 and not size & (size - 1) else None
    return law, sites


def _run_beables(params: Dict[str, Any], seed: int) -> Tuple[Dict[str, Any], str, Dict[str, Any]]:
    law, sites = _beable_universe(params, seed)
    if params['ops'] == 'diagonal':
        observables = beables.diagonal_observables(law.dim)
    else:
        observables = [beables.site_operator(sites, 0, 'X'), beables.site_operator(sites, 0, 'Z')]

    outcome = beables.is_beable_set(observables, law, params['horizon'])
    result = {
        'dim': law.dim,
        'period': evolution.period(law),
        'observables': [observable.label for observable in observables],
        'beable_check': outcome.to_dict(),
    }
    return result, outcome.verdict, {}


def _run_lightcone(params: Dict[str, Any], seed: int) -> Tuple[Dict[str, Any], str, Dict[str, Any]]:
    sites = params['sites']
    max_dt = params['max_dt'] if params['max_dt'] is not None else sites
    table = beables.cone_map(sites, max_dt)
    summary = beables.summarize_cone_map(table)
    verdict = summary.pop('verdict')
    result = {
        'sites': sites,
        'max_dt': max_dt,
        'summary': summary,
        'cone_map': table.to_dict(orient='records'),
    }
    return result, verdict, {'table': table}


def _run_bell(params: Dict[str, Any], seed: int) -> Tuple[Dict[str, Any], str, Dict[str, Any]]:
    a, b = math.radians(params['a']), math.radians(params['b'])
    a_prime, b_prime = math.radians(params['aprime']), math.radians(params['bprime'])
    method = bell.METHOD_ALIASES[params['method']]

    outcome = bell.chsh(a, a_prime, b, b_prime, method=method, n=params['samples'],
                        grid=params['grid'], seed=seed, sampler=params['sampler'])
    result = outcome.to_dict()
    result['counterfactual_shift'] = bell.counterfactual_shift(a, b, a_prime, b_prime, grid=params['grid'])

    if method == 'quadrature':
        error_bound = max(estimate.error_bound for estimate in outcome.components.values())
        result['error_bound'] = error_bound
        passed = error_bound <= BELL_THRESHOLDS['quadrature']
    else:
        reference = bell.chsh(a, a_prime, b, b_prime, method='quadrature', grid=params['grid'])
        tolerance = max(BELL_THRESHOLDS['chsh_mc_agreement'], BELL_THRESHOLDS['mc_sigma'] * outcome.std_error)
        result['quadrature_reference_S'] = reference.S
        passed = abs(outcome.S - reference.S) <= tolerance
    return result, 'pass' if passed else 'fail', {}


EXPERIMENTS = {
    'cogwheel': _run_cogwheel,
    'spectrum': _run_spectrum,
    'conserve': _run_conserve,
    'beables': _run_beables,
    'lightcone': _run_lightcone,
    'bell': _run_bell,
}


def run(config: ExperimentConfig) -> Tuple[int, Optional[Dict[str, Any]]]:
    """
    Esegue l'esperimento descritto dalla configurazione.

    Returns:
        (exit code, artefatto): artefatto None sugli errori d'uso
    """
    errors = validate(config)
    if errors:
        for error in errors:
            logger.error(f"Configurazione non valida: {error}")
        return EXIT_USAGE, None

    params = config.resolved_parameters()
    logger.info(f"Avvio esperimento '{config.subcommand}' (seed {config.seed})")
    start_time = time.perf_counter()
    try:
        result, verdict, extra = EXPERIMENTS[config.subcommand](params, config.seed)
    except OntologyLabError as e:
        logger.error(f"Esperimento '{config.subcommand}' interrotto: {str(e)}")
        return EXIT_USAGE, None
    elapsed = time.perf_counter() - start_time

    table = extra.pop('table', None)
    meta = {'execution_time': elapsed, **extra}
    artifact = report.build_artifact(__version__, config.subcommand, config.to_dict(), config.seed,
                                     result, verdict, meta)
    if table is not None:
        artifact['meta']['rows'] = int(len(table))

    logger.info(f"Esperimento '{config.subcommand}' completato in {elapsed:.2f}s: verdetto {verdict}")
    exit_code = EXIT_PASS if verdict == 'pass' else EXIT_FAIL
    return exit_code, {'artifact': artifact, 'table': table}


def emit(config: ExperimentConfig, outcome: Dict[str, Any]) -> Optional[str]:
    """Serializza l'artefatto nel formato richiesto e lo scrive"""
    artifact = outcome['artifact']
    if config.output_format == 'csv':
        text = report.render_csv(artifact, outcome.get('table'))
    else:
        text = report.render_json(artifact)
    return report.write_artifact(text, config.output_path)


# ============================================================================
# CLI
# ============================================================================

def _common_arguments() -> argparse.ArgumentParser:
    # SUPPRESS: solo i flag effettivamente passati sovrascrivono il file di configurazione
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument('--seed', type=int, help=f"Seed master (default: {LAB_PARAMS['default_seed']})")
    common.add_argument('--out', dest='output_format', choices=OUTPUT_FORMATS, help='Formato di output (default: json)')
    common.add_argument('--output', dest='output_path', help='File di output (default: stdout)')
    common.add_argument('--config', dest='config_path', help='File di configurazione JSON')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_arguments()
    parser = argparse.ArgumentParser(prog='ontology-lab', parents=[common],
                                     description='Laboratorio numerico di meccanica quantistica deterministica')
    subparsers = parser.add_subparsers(dest='subcommand')

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return subparsers.add_parser(name, parents=[common], help=help_text,
                                     argument_default=argparse.SUPPRESS)

    cog = add('cogwheel', 'Evoluzione di uno stato di base sotto il cogwheel')
    cog.add_argument('--n', type=int, help='Numero di stati (obbligatorio)')
    cog.add_argument('--steps', type=int, help='Passi di evoluzione (default: 0)')
    cog.add_argument('--index', type=int, help='Stato ontologico iniziale (default: 0)')

    spectrum_parser = add('spectrum', 'Autofasi e hamiltoniana di un universo')
    spectrum_parser.add_argument('--n', type=int, help='Cogwheel con n stati')
    spectrum_parser.add_argument('--universe', help='File universo JSON {dim, target, phase}')
    spectrum_parser.add_argument('--dt', type=float, help='Passo temporale (default: 1.0)')
    spectrum_parser.add_argument('--branch', choices=[b.value for b in evolution.Branch], help='Finestra delle autofasi')

    cons = add('conserve', 'Suite di conservazione dell\'ontologia')
    cons.add_argument('--dim', type=int, help='Dimensione (default: 64)')
    cons.add_argument('--steps', type=int, help='Passi massimi (default: 100)')
    cons.add_argument('--trials', type=int, help='Trial (default: 1000)')
    cons.add_argument('--negative-trials', dest='negative_trials', type=int,
                      help='Trial di controllo negativo con unitarie dense (default: 0)')

    beab = add('beables', 'Verifica di un insieme di beables')
    beab.add_argument('--universe', choices=['bitshift', 'cogwheel', 'random'], help='Legge di evoluzione (default: random)')
    beab.add_argument('--size', type=int, help='Stati (siti per bitshift) (default: 8)')
    beab.add_argument('--ops', choices=['diagonal', 'xz'], help='Insieme di osservabili (default: diagonal)')
    beab.add_argument('--horizon', type=int, help='Orizzonte temporale (default: periodo o 64)')

    cone = add('lightcone', 'Mappa del cono di luce sull\'automa a scorrimento')
    cone.add_argument('--sites', type=int, help='Siti dell\'anello (default: 4)')
    cone.add_argument('--max-dt', dest='max_dt', type=int, help='|Δt| massimo (default: sites)')

    bell_parser = add('bell', 'Correlazioni EPR e statistica CHSH')
    bell_parser.add_argument('--a', type=float, help='Angolo a in gradi')
    bell_parser.add_argument('--b', type=float, help='Angolo b in gradi')
    bell_parser.add_argument('--aprime', type=float, help='Angolo a\' in gradi')
    bell_parser.add_argument('--bprime', type=float, help='Angolo b\' in gradi')
    bell_parser.add_argument('--method', choices=['mc', 'quad'], help='Monte Carlo o quadratura (default: quad)')
    bell_parser.add_argument('--samples', type=int, help='Campioni Monte Carlo per componente')
    bell_parser.add_argument('--grid', type=int, help='Pannelli di quadratura (>= 8)')
    bell_parser.add_argument('--sampler', choices=list(bell.SAMPLERS), help='Campionatore (default: rejection)')

    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """Legge un ExperimentConfig in forma JSON; chiavi sconosciute rifiutate"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError([f"config: impossibile leggere {path}: {str(e)}"]) from e
    except json.JSONDecodeError as e:
        raise ConfigError([f"config: JSON non valido in {path}: {str(e)}"]) from e

    if not isinstance(data, dict):
        raise ConfigError(["config: atteso un oggetto JSON"])
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError([f"{key}: chiave sconosciuta nel file di configurazione" for key in unknown])
    return data


def config_from_args(argv: Optional[Sequence[str]] = None) -> ExperimentConfig:
    """Combina file di configurazione e flag (i flag hanno la precedenza)"""
    args = vars(build_parser().parse_args(argv))

    data: Dict[str, Any] = {}
    config_path = args.pop('config_path', None)
    if config_path is not None:
        data = load_config_file(config_path)

    raw_parameters = data.get('parameters') or {}
    if not isinstance(raw_parameters, dict):
        raise ConfigError(["parameters: atteso un oggetto chiave/valore"])
    parameters = dict(raw_parameters)
    common = {key: args.pop(key) for key in ('seed', 'output_format', 'output_path') if key in args}
    subcommand = args.pop('subcommand', None) or data.get('subcommand')
    parameters.update(args)

    return ExperimentConfig(
        subcommand=subcommand,
        parameters=parameters,
        seed=common.get('seed', data.get('seed', LAB_PARAMS['default_seed'])),
        output_format=common.get('output_format', data.get('output_format', 'json')),
        output_path=common.get('output_path', data.get('output_path')),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Punto di ingresso principale del laboratorio"""
    setup_logging()

    try:
        config = config_from_args(argv)
    except SystemExit as e:
        # argparse: --help esce con 0, errori di sintassi con 2
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except ConfigError as e:
        for error in e.errors:
            logger.error(f"Configurazione non valida: {error}")
        print(f"Errore di configurazione: {str(e)}", file=sys.stderr)
        return EXIT_USAGE

    errors = validate(config)
    if errors:
        print(f"Errore di configurazione: {'; '.join(errors)}", file=sys.stderr)
        return EXIT_USAGE

    try:
        exit_code, outcome = run(config)
        if outcome is not None:
            emit(config, outcome)
    except Exception as e:
        logger.exception(f"Errore imprevisto: {str(e)}")
        return EXIT_USAGE
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
