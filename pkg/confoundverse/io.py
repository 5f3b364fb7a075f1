"""
Reading and writing datasets, JSON documents and run manifests.

Dataset CSV files use the header `y,t,x1..xd[,env][,u1..ud]`; floats are
written with 17 significant digits so a file read back reproduces the
generated arrays exactly.
"""

from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional
import hashlib
import json
import logging
import os
import re

import numpy as np
import pandas as pd

from confoundverse.config import settings
from confoundverse import exceptions as ex
from confoundverse.confounder_testing import ObservedData


logger = logging.getLogger(__name__)

FLOAT_FORMAT: str = '%.17g'
MANIFEST_SUFFIX: str = '.manifest.json'

_X_COLUMN = re.compile(r'^x(\d+)$')
_U_COLUMN = re.compile(r'^u(\d+)$')


def _numbered(columns, pattern) -> List[str]:
    found = [(int(m.group(1)), c) for c in columns for m in [pattern.match(c)] if m]
    return [c for _, c in sorted(found)]


def read_dataset_csv(path: str) -> ObservedData:
    """
    Read an observed sample from a CSV file.

    Parameters
    ----------
    path : str
        A CSV file with `y`, `t` and `x1..xd` columns and an optional `env`
        column; `u*` columns are hidden confounders and are ignored

    Returns
    -------
    ObservedData
        X with the `x*` columns in numeric order, T, Y and the env labels

    Raises
    ------
    ErrorUnreadableInput
        If the file is missing or not a CSV

    ErrorMissingColumns
        If `y`, `t` or every `x*` column is absent

    ErrorNonFinite
        If a used column holds a non-numeric or non-finite value
    """
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as error:
        raise ex.ErrorUnreadableInput(path, error)

    frame.columns = [str(c).strip() for c in frame.columns]
    x_columns = _numbered(frame.columns, _X_COLUMN)
    missing = [c for c in ('y', 't') if c not in frame.columns]
    if not x_columns:
        missing.append('x1')
    if missing:
        raise ex.ErrorMissingColumns(missing)

    hidden = _numbered(frame.columns, _U_COLUMN)
    if hidden:
        logger.warning('ignoring hidden confounder columns %s in %s', ', '.join(hidden), path)

    def numeric(columns) -> np.ndarray:
        values = frame[columns].apply(pd.to_numeric, errors='coerce').to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            raise ex.ErrorNonFinite(', '.join(columns))
        return values

    env = None
    if 'env' in frame.columns:
        env = numeric(['env'])[:, 0].astype(int)

    return ObservedData(
        X=numeric(x_columns),
        T=numeric(['t'])[:, 0],
        Y=numeric(['y'])[:, 0],
        env_labels=env,
    )


def dataset_frame(dataset: Any, include_hidden: bool = False) -> pd.DataFrame:
    """The CSV layout of a dataset: y, t, x1..xd, then env and u1..ud when present."""
    X = np.asarray(dataset.X, dtype=float).reshape(len(dataset.Y), -1)
    columns: Dict[str, np.ndarray] = {
        'y': np.asarray(dataset.Y, dtype=float),
        't': np.asarray(dataset.T, dtype=float),
    }
    for j in range(X.shape[1]):
        columns[f'x{j + 1}'] = X[:, j]
    if getattr(dataset, 'env_labels', None) is not None:
        columns['env'] = np.asarray(dataset.env_labels, dtype=int)
    if include_hidden:
        U = getattr(dataset, 'U', None)
        if U is None:
            raise ex.ErrorMissingColumns(['u1'])
        U = np.asarray(U, dtype=float).reshape(len(dataset.Y), -1)
        for j in range(U.shape[1]):
            columns[f'u{j + 1}'] = U[:, j]
    return pd.DataFrame(columns)


def write_frame_csv(frame: pd.DataFrame, path: str) -> str:
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info('wrote %d rows to %s', len(frame), path)
    return path


def write_dataset_csv(dataset: Any, path: str, include_hidden: bool = False) -> str:
    """
    Write a dataset as CSV.

    Parameters
    ----------
    dataset : Any
        `GeneratedDataset` or `ObservedData`

    path : str
        Output file

    include_hidden : bool, optional
        Also write the hidden confounders `u1..ud` (audit only), by default False
    """
    return write_frame_csv(dataset_frame(dataset, include_hidden), path)


def dumps_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + '\n'


def write_json(document: Any, path: str) -> str:
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(dumps_json(document))
    logger.info('wrote %s', path)
    return path


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


def file_digest(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Everything needed to rerun a command and get byte-identical outputs.

    Timing fields (`volatile_fields`) are measured per run; the outputs are
    byte-identical across reruns once those fields are dropped.

    Parameters
    ----------
    command : str
        The CLI sub-command

    config : dict
        The fully resolved configuration

    seed : int, optional
        The root seed

    inputs, outputs : List[str]
        File paths read and written

    volatile_fields : List[str]
        Output fields holding wall-clock timings
    """
    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    tool_version: str = ''
    format_version: str = settings.FORMAT_VERSION
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    volatile_fields: List[str] = field(default_factory=list)
    output_sha256: Dict[str, str] = field(default_factory=dict)
    started_at: str = field(default_factory=_utc_now)
    finished_at: Optional[str] = None

    def __post_init__(self):
        if not self.tool_version:
            from confoundverse import __version__
            self.tool_version = __version__

    def finish(self) -> 'RunManifest':
        """Stamp the end time and hash every output that exists."""
        self.finished_at = _utc_now()
        self.output_sha256 = {p: file_digest(p) for p in self.outputs if os.path.isfile(p)}
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def manifest_path(output_path: str) -> str:
    return output_path + MANIFEST_SUFFIX


def write_manifest(manifest: RunManifest, output_path: str) -> str:
    """Write `<output_path>.manifest.json` next to the primary output."""
    if manifest.finished_at is None:
        manifest.finish()
    return write_json(manifest.to_dict(), manifest_path(output_path))
