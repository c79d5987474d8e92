from .ontic import (
    Amplitude,
    Ontological,
    StateVector,
    Superposed,
    amplitude_multiset,
    born_probabilities,
    classify_state,
)
from .evolution import (
    Branch,
    GeneralizedPermutation,
    NotInvertible,
    Spectrum,
    TimeStep,
    UnitaryMatrix,
    bit_shift_universe,
    cogwheel,
    evolve,
    extract_hamiltonian,
    from_update_rule,
    load_universe,
    period,
    spectrum,
    to_matrix,
)
from .conservation import (
    ConservationReport,
    check_ontology_conservation,
    check_uncertainty_conservation,
    collapse_free_measurement,
    negative_control,
)
from .beables import (
    Observable,
    SiteGeometry,
    commutator_norm,
    cone_map,
    heisenberg,
    is_beable_set,
    light_cone_check,
    site_operator,
)
from .bell import (
    HiddenPolarization,
    MousedropModel,
    PolarizerSettings,
    chsh,
    correlation,
    counterfactual_shift,
    detect,
    mousedrop_density,
    quantum_reference,
    sample_hidden,
)

__all__ = [
    'Amplitude',
    'Ontological',
    'StateVector',
    'Superposed',
    'amplitude_multiset',
    'born_probabilities',
    'classify_state',
    'Branch',
    'GeneralizedPermutation',
    'NotInvertible',
    'Spectrum',
    'TimeStep',
    'UnitaryMatrix',
    'bit_shift_universe',
    'cogwheel',
    'evolve',
    'extract_hamiltonian',
    'from_update_rule',
    'load_universe',
    'period',
    'spectrum',
    'to_matrix',
    'ConservationReport',
    'check_ontology_conservation',
    'check_uncertainty_conservation',
    'collapse_free_measurement',
    'negative_control',
    'Observable',
    'SiteGeometry',
    'commutator_norm',
    'cone_map',
    'heisenberg',
    'is_beable_set',
    'light_cone_check',
    'site_operator',
    'HiddenPolarization',
    'MousedropModel',
    'PolarizerSettings',
    'chsh',
    'correlation',
    'counterfactual_shift',
    'detect',
    'mousedrop_density',
    'quantum_reference',
    'sample_hidden',
]
