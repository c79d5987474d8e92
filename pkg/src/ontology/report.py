"""
Emissione degli artefatti degli esperimenti in JSON e CSV.

Ordine dei campi JSON: tool_version, subcommand, config_echo, seed, campi del
risultato, verdict, meta. Il blocco meta (tempi di esecuzione) è escluso dalle
garanzie di stabilità byte per byte.
"""
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from .utils import convert_numpy_types

logger = logging.getLogger(__name__)

RESERVED_FIELDS = ('tool_version', 'subcommand', 'config_echo', 'seed', 'verdict', 'meta')


def build_artifact(tool_version: str, subcommand: str, config_echo: Dict[str, Any], seed: int,
                   result: Dict[str, Any], verdict: str, meta: Dict[str, Any]) -> Dict[str, Any]:
    """Compone l'artefatto con l'ordine dei campi fissato"""
    clashes = [key for key in result if key in RESERVED_FIELDS]
    if clashes:
        raise ValueError(f"Campi riservati nel risultato: {clashes}")

    artifact = {
        'tool_version': tool_version,
        'subcommand': subcommand,
        'config_echo': config_echo,
        'seed': seed,
    }
    artifact.update(result)
    artifact['verdict'] = verdict
    artifact['meta'] = meta
    return artifact


def stable_body(artifact: Dict[str, Any]) -> Dict[str, Any]:
    """Artefatto senza il blocco meta: la parte confrontabile tra esecuzioni"""
    return {key: value for key, value in artifact.items() if key != 'meta'}


def render_json(artifact: Dict[str, Any]) -> str:
    # Converte numpy types per JSON serialization
    return json.dumps(convert_numpy_types(artifact), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def flatten(data: Dict[str, Any], prefix: str = '') -> List[Tuple[str, Any]]:
    """Appiattisce dizionari annidati in coppie (chiave.puntata, valore)"""
    rows = []
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            rows.extend(flatten(value, name))
        elif isinstance(value, list):
            rows.append((name, json.dumps(value)))
        else:
            rows.append((name, value))
    return rows


def render_csv(artifact: Dict[str, Any], table: Optional[pd.DataFrame] = None) -> str:
    """
    CSV con intestazione obbligatoria. Le righe '#' iniziali riportano versione,
    configurazione risolta, seed e verdetto; segue la tabella (mappa del cono,
    istogramma) oppure le coppie chiave/valore del risultato.

    Le righe '#' non fanno parte di RFC 4180: vanno lette come commenti, ad esempio
    `pandas.read_csv(path, comment='#')`, oppure saltate prima di un csv.reader.
    """
    artifact = convert_numpy_types(artifact)
    buffer = io.StringIO()
    buffer.write(f"# tool_version: {artifact['tool_version']}\n")
    buffer.write(f"# subcommand: {artifact['subcommand']}\n")
    buffer.write(f"# config_echo: {json.dumps(artifact['config_echo'])}\n")
    buffer.write(f"# seed: {artifact['seed']}\n")
    buffer.write(f"# verdict: {artifact['verdict']}\n")
    buffer.write(f"# meta: {json.dumps(artifact['meta'])}\n")

    if table is not None:
        table.to_csv(buffer, index=False, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    else:
        body = {key: value for key, value in artifact.items() if key not in RESERVED_FIELDS}
        writer = csv.writer(buffer, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(['key', 'value'])
        writer.writerows(flatten(body))
    return buffer.getvalue()


def write_artifact(text: str, output_path: Optional[str] = None) -> Optional[str]:
    """Scrive l'artefatto su file oppure su stdout"""
    if output_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None

    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(output_path, 'w', newline='', encoding='utf-8') as f:
        f.write(text)
    logger.info(f"📄 Artefatto salvato: {output_path}")
    return output_path
