"""
Gerarchia delle eccezioni del laboratorio
"""


class OntologyLabError(Exception):
    """Base di tutte le eccezioni del laboratorio"""


class NormalizationError(OntologyLabError, ValueError):
    """Vettore di stato non normalizzato oltre la tolleranza"""


class DomainError(OntologyLabError, ValueError):
    """Argomento fuori dal dominio dell'operazione"""


class DimensionMismatchError(OntologyLabError, ValueError):
    """Operandi con dimensioni diverse"""


class ResourceLimitError(OntologyLabError):
    """Universo troppo grande per la rappresentazione densa"""


class UnsupportedOperationError(OntologyLabError):
    """Operazione non definita per l'input (es. periodo di una permutazione con fasi)"""


class NotUnitaryError(OntologyLabError, ValueError):
    """Matrice non unitaria entro la tolleranza"""


class NotHermitianError(OntologyLabError, ValueError):
    """Matrice non hermitiana entro la tolleranza"""


class EigenSolverError(OntologyLabError):
    """Fallimento dell'autosolutore o ricostruzione fuori tolleranza"""


class ConfigError(OntologyLabError, ValueError):
    """Configurazione di esperimento non valida"""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
