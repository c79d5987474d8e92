"""
Configurazione centralizzata delle tolleranze numeriche e delle soglie di accettazione
Questo file contiene tutte le soglie utilizzate dai moduli e dai test del laboratorio
"""
import math

# ============================================================================
# TOLLERANZE STATI (ontic-core)
# ============================================================================

STATE_TOLERANCES = {
    'normalization': 1e-12,      # |Σ|a_i|² - 1| accettato senza rinormalizzare
    'renormalization': 1e-6,     # Oltre questa soglia l'input è un errore dell'utente
    'classification': 1e-9,      # Default di classify_state
}

# ============================================================================
# TOLLERANZE ALGEBRA LINEARE (evolution, beables)
# ============================================================================

LINALG_TOLERANCES = {
    'unitarity': 1e-10,          # ‖U†U - I‖_max
    'reconstruction': 1e-9,      # ‖V diag(e^{-iφ}) V† - U‖_max
    'hamiltonian_hermiticity': 1e-10,
    'observable_hermiticity': 1e-12,
    'heisenberg_hermiticity': 1e-11,
    'degeneracy_gap': 1e-8,      # Cluster di autofasi ortonormalizzati a blocco
    'branch_snap': 1e-10,        # Fasi a distanza < snap dal bordo della finestra
    'expm_check_max_dim': 32,    # Verifica indipendente con scipy.linalg.expm
}

# ============================================================================
# SOGLIE CONSERVAZIONE
# ============================================================================

CONSERVATION_THRESHOLDS = {
    'permutation': 1e-12,        # Aritmetica esatta sugli shuffle
    'matrix': 1e-9,              # Evoluzione tramite rappresentazione matriciale
    'negative_control': 1e-6,    # Separa il round-off dalla non conservazione
    'negative_control_min_deviation': 0.1,
    'negative_control_min_fail_rate': 0.99,
}

# ============================================================================
# SOGLIE CAUSALITÀ E BEABLES
# ============================================================================

CAUSALITY_THRESHOLDS = {
    'spacelike_commutator': 1e-12,   # Commutatore fuori dal cono
    'lightlike_commutator_min': 1.0, # Cono netto per sonde X/Z
    'beable_commutator': 1e-10,
}

# ============================================================================
# SOGLIE BELL / MOUSEDROP
# ============================================================================

BELL_THRESHOLDS = {
    'normalization': 1e-9,
    'quadrature': 1e-9,
    'min_grid': 8,
    'mc_sigma': 3.0,                 # |E_mc - E_quad| <= 3 std_error
    'histogram_bin_pass_rate': 0.95,
    'chsh_mc_agreement': 0.01,
    'counterfactual_min_shift': 0.05,
    'detection_edge': 1e-12,         # |setting - c| a distanza < edge da π/4 conta come bordo (+1)
    'classical_bound': 2.0,
    'tsirelson_bound': 2.0 * math.sqrt(2.0),
}

# ============================================================================
# SOGLIE SUITE DI ACCETTAZIONE
# ============================================================================

HAMILTONIAN_SUITE_THRESHOLDS = {
    'max_cogwheel': 1024,
    'random_trials': 100,
    'random_max_dim': 64,
    'max_execution_time': 60.0,
}

CONSERVATION_SUITE_THRESHOLDS = {
    'trials': 1000,
    'max_dim': 256,
    'max_steps': 1000,
    'max_execution_time': 30.0,
}

LIGHTCONE_SUITE_THRESHOLDS = {
    'min_sites': 3,
    'max_sites': 6,
    'max_execution_time': 120.0,
}

BEABLE_SUITE_THRESHOLDS = {
    'trials': 20,
    'max_dim': 32,
}

SAMPLER_SUITE_THRESHOLDS = {
    'samples': 1_000_000,
    'bins': 64,
    'max_execution_time': 60.0,
}

# ============================================================================
# FUNZIONI HELPER PER VALUTAZIONE
# ============================================================================

def evaluate_deviation(deviation: float) -> str:
    """Classifica una deviazione numerica"""
    if deviation <= CONSERVATION_THRESHOLDS['permutation']:
        return 'exact'
    elif deviation <= CONSERVATION_THRESHOLDS['matrix']:
        return 'roundoff'
    elif deviation <= CONSERVATION_THRESHOLDS['negative_control']:
        return 'marginal'
    else:
        return 'violation'


def evaluate_conservation_verdict(deviation: float, tolerance: float, ontology_kept: bool) -> str:
    """Verdetto di un ConservationReport: pass solo se deviazione e ontologia sono entrambe rispettate"""
    if deviation <= tolerance and ontology_kept:
        return 'pass'
    return 'fail'


def get_suite_thresholds(suite_name: str) -> dict:
    """Ottieni le soglie per una suite specifica"""
    suite_map = {
        'hamiltonian': HAMILTONIAN_SUITE_THRESHOLDS,
        'conservation': CONSERVATION_SUITE_THRESHOLDS,
        'lightcone': LIGHTCONE_SUITE_THRESHOLDS,
        'beables': BEABLE_SUITE_THRESHOLDS,
        'sampler': SAMPLER_SUITE_THRESHOLDS,
    }
    return suite_map.get(suite_name, CONSERVATION_SUITE_THRESHOLDS)
