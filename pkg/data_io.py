"""
File formats: dataset CSV, labels sidecar, model JSON, trace JSON-lines and
summary JSON.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from errors import MixtureInputError
from gibbs_chain import TraceSample
from models import Dataset, MixtureModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = '%.17g'


def read_dataset(path: PathLike, range_mu=None, range_sigma=None,
                 eps: Optional[float] = None) -> Dataset:
    """Read a header-plus-rows CSV of decimal reals into a Dataset."""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise MixtureInputError(f"Could not parse {path}: {e}") from e
    if frame.empty:
        raise MixtureInputError(f"{path} holds no observations")
    try:
        values = frame.to_numpy(dtype=float)
    except ValueError as e:
        raise MixtureInputError(f"{path} has non-numeric values: {e}") from e
    if np.isnan(values).any():
        raise MixtureInputError(f"{path} has missing values")
    return Dataset.from_values(values, names=[str(c) for c in frame.columns],
                               range_mu=range_mu, range_sigma=range_sigma, eps=eps)


def write_dataset(dataset: Dataset, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(dataset.values, columns=list(dataset.names)).to_csv(
        path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def labels_path(data_path: PathLike) -> Path:
    """d.csv -> d.labels.csv"""
    path = Path(data_path)
    return path.with_name(f"{path.stem}.labels.csv")


def write_labels(labels, path: PathLike) -> Path:
    path = Path(path)
    pd.DataFrame({'label': np.asarray(labels, dtype=np.int64)}).to_csv(path, index=False, lineterminator='\n')
    return path


def read_labels(path: PathLike) -> np.ndarray:
    return pd.read_csv(path)['label'].to_numpy(dtype=np.int64)


def model_to_dict(model: MixtureModel, dataset: Dataset) -> Dict[str, Any]:
    return {
        'k': model.k,
        'eps': dataset.eps,
        'ranges': {
            'mu': dataset.range_mu.tolist(),
            'sigma': dataset.range_sigma.tolist(),
        },
        'classes': [
            {
                'weight': float(w),
                'attrs': [{'mu': float(m), 'sigma': float(s)} for m, s in zip(mu_row, sigma_row)],
            }
            for w, mu_row, sigma_row in zip(model.weights, model.mu, model.sigma)
        ],
    }


def model_from_dict(payload: Dict[str, Any]) -> MixtureModel:
    try:
        classes = payload['classes']
        weights = [c['weight'] for c in classes]
        mu = [[a['mu'] for a in c['attrs']] for c in classes]
        sigma = [[a['sigma'] for a in c['attrs']] for c in classes]
    except (KeyError, TypeError) as e:
        raise MixtureInputError(f"Malformed model JSON: {e}") from e
    return MixtureModel(weights, mu, sigma)


def write_json(payload: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + '\n')
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise MixtureInputError(f"Could not parse {path}: {e}") from e


def append_trace(samples: Iterable[TraceSample], path: PathLike) -> int:
    """Append samples as JSON lines; returns how many were written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('a') as handle:
        for sample in samples:
            handle.write(json.dumps(sample.to_dict()) + '\n')
            count += 1
    return count


def read_trace(path: PathLike) -> List[TraceSample]:
    samples = []
    with Path(path).open() as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                samples.append(TraceSample(int(record['k']), int(record['sweep']),
                                           float(record['total_nits']), float(record['part1_nits']),
                                           float(record['part2_nits']), str(record['partition_hash'])))
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                raise MixtureInputError(f"{path}:{line_no}: bad trace record: {e}") from e
    return samples
