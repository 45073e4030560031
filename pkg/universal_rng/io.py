"""
File formats: model files, symbol streams and CSV reports.

Model file: a JSON object {"alpha": int, "k": int, "s0": [int] (optional),
"cond": [[float]]} with one row per state in mixed-radix order.

Symbol stream: raw bytes, one byte per symbol, value in [0, alpha).

Reports: pandas CSV preceded by '# key: value' metadata lines.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Dict, Iterator, Optional, Union

import pandas as pd

from .exceptions import ModelError, SymbolError
from .markov_model import MarkovParams

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CSV_SCHEMA_VERSION = 1
STREAM_CHUNK = 1 << 16


def load_model(path: PathLike) -> MarkovParams:
    """Read and validate a model file."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ModelError(f"cannot read model file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ModelError(f"model file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ModelError(f"model file {path} must hold a JSON object")
    params = MarkovParams.from_dict(data)
    logger.info("Loaded model %s: alpha=%d k=%d", path, params.spec.alpha, params.spec.k)
    return params


def save_model(params: MarkovParams, path: PathLike) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(params.to_dict(), f, indent=2)
        f.write('\n')


def read_symbols(path: Optional[PathLike], alpha: int) -> Iterator[int]:
    """
    Yield symbols from a byte stream lazily.

    Args:
        path: Stream file, or None / '-' for standard input
        alpha: Alphabet size used to validate every byte

    Raises:
        SymbolError: on a byte value >= alpha
    """
    if path is None or str(path) == '-':
        handle = sys.stdin.buffer
        close = False
    else:
        handle = open(path, 'rb')
        close = True
    position = 0
    try:
        while True:
            chunk = handle.read(STREAM_CHUNK)
            if not chunk:
                return
            for value in chunk:
                if value >= alpha:
                    raise SymbolError(
                        f"byte {value} at offset {position} is outside [0, {alpha})")
                position += 1
                yield value
    finally:
        if close:
            handle.close()


def write_symbols(symbols, path: PathLike) -> None:
    with open(path, 'wb') as f:
        f.write(bytes(int(a) for a in symbols))


def write_report_csv(df: pd.DataFrame, path: Optional[PathLike],
                     metadata: Dict[str, object]) -> str:
    """
    Write a report with its metadata header; returns the full text.

    Metadata values are written in insertion order. Nothing time-dependent is
    added, so identical runs produce identical files. With path None the
    text goes to standard output.
    """
    lines = [f"# schema: {CSV_SCHEMA_VERSION}"]
    for key, value in metadata.items():
        lines.append(f"# {key}: {value}")
    text = '\n'.join(lines) + '\n' + df.to_csv(index=False)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info("Wrote %d rows to %s", len(df), path)
    return text


def read_report_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')
