"""
Plot-ready tables from a sampler trace: per-k bin tables and per-k visit
frequencies.
"""

import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd

from gibbs_chain import TraceSample
from subspace_estimator import BinTable, build_bins, included_bins, normalize_subspaces, subspace_mass

logger = logging.getLogger(__name__)

BIN_COLUMNS = ['k', 'bin_center_nits', 'visits', 'distinct', 'unique_est', 'included_flag']


def split_by_k(trace: Sequence[TraceSample]) -> Dict[int, List[TraceSample]]:
    by_k = defaultdict(list)
    for sample in trace:
        by_k[sample.k].append(sample)
    return dict(sorted(by_k.items()))


def bin_frame(table: BinTable) -> pd.DataFrame:
    included = included_bins(table)
    return pd.DataFrame({
        'k': table.k,
        'bin_center_nits': table.centers,
        'visits': table.visits,
        'distinct': table.distinct,
        'unique_est': [float('nan') if m is None else m for m in table.unique_est],
        'included_flag': included.astype(int),
    }, columns=BIN_COLUMNS)


def visit_frame(trace: Sequence[TraceSample]) -> pd.DataFrame:
    """Samples and share of samples per k, next to the subspace probability the trace implies."""
    by_k = split_by_k(trace)
    total = sum(len(samples) for samples in by_k.values())
    masses = {k: subspace_mass(build_bins(samples)) for k, samples in by_k.items()}
    probs = normalize_subspaces(masses)
    return pd.DataFrame({
        'k': list(by_k),
        'samples': [len(s) for s in by_k.values()],
        'frequency': [len(s) / total for s in by_k.values()],
        'probability': [probs[k] for k in by_k],
    })


def write_reports(trace: Sequence[TraceSample], out_dir: Union[str, Path], bins: bool = True) -> List[Path]:
    """Write bins_k<k>.csv (when bins) and visits.csv into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if bins:
        for k, samples in split_by_k(trace).items():
            path = out_dir / f"bins_k{k}.csv"
            bin_frame(build_bins(samples)).to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
            written.append(path)
    path = out_dir / 'visits.csv'
    visit_frame(trace).to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    written.append(path)
    logger.info(f"Wrote {len(written)} report tables to {out_dir}")
    return written
