import os
import logging
from logging.handlers import RotatingFileHandler
import dotenv

# Carica le variabili d'ambiente dal file .env con override
dotenv.load_dotenv(override=True)

# Parametri generali del laboratorio
LAB_PARAMS = {
    "default_seed": int(os.getenv("LAB_DEFAULT_SEED", "42")),
    # Dimensione dei batch Monte Carlo (campioni per sotto-stream)
    "mc_batch_size": int(os.getenv("LAB_MC_BATCH_SIZE", "250000")),
    "mc_workers": int(os.getenv("LAB_MC_WORKERS", "1")),
    # Mappa del cono: catene oltre max_sites siti sono rifiutate
    "max_sites": int(os.getenv("LAB_MAX_SITES", "12")),
    "default_horizon_cap": int(os.getenv("LAB_HORIZON_CAP", "64")),
    # Beables con matrici dense: dimensione massima dell'universo (stati)
    "max_beable_dim": int(os.getenv("LAB_MAX_BEABLE_DIM", "128")),
}

# Parametri di default per i sottocomandi della CLI
EXPERIMENT_DEFAULTS = {
    "dt": float(os.getenv("LAB_DEFAULT_DT", "1.0")),
    "branch": os.getenv("LAB_DEFAULT_BRANCH", "zero2pi"),
    "samples": int(os.getenv("LAB_DEFAULT_SAMPLES", "1000000")),
    "grid": int(os.getenv("LAB_DEFAULT_GRID", "4096")),
}

# Configurazione logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("LOG_FILE", "logs/ontology_lab.log")


def setup_logging():
    """Configura il sistema di logging"""
    root_logger = logging.getLogger()

    # Se il logger è già configurato, non aggiungere handler duplicati
    if root_logger.handlers:
        return root_logger

    log_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    # Assicurati che la directory dei log esista
    log_dir = os.path.dirname(LOG_FILE)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)

    # Configura file handler con rotazione
    file_handler = RotatingFileHandler(
        LOG_FILE, maxBytes=10 * 1024 * 1024, backupCount=5
    )
    file_handler.setFormatter(log_formatter)

    # Console su stderr: stdout resta riservato agli artefatti JSON/CSV
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(log_formatter)

    root_logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)

    return root_logger
