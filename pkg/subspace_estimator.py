"""
Relative posterior mass of a fixed-k subspace from a chain trace.

The visited message lengths are binned one nit wide. In each bin the number
of distinct models seen (m') and the number of visits (v) give an estimate m
of how many models the bin really holds, from m (1 - (1 - 1/m)^v) = m'. The
subspace mass is then the sum over bins of m exp(-centre), taken from the
shortest bin upward while the estimates stay trustworthy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from errors import MixtureInputError
from gibbs_chain import TraceSample
from mml_coder import normalized_posteriors

logger = logging.getLogger(__name__)

UNIQUE_CAP = 1e9
UNIQUE_XTOL = 1e-9


@dataclass(frozen=True)
class BinTable:
    """
    One-nit bins over the message lengths of one subspace's trace.

    Attributes:
        k: subspace dimension
        bin_min: floor of the shortest sampled length
        centers: bin centres, bin_min + j + 0.5
        visits: samples per bin (v)
        distinct: distinct partitions per bin (m')
        unique_est: estimated models per bin (m), None where undetermined
        dropped: samples with non-finite length left out of the table
    """
    k: int
    bin_min: int
    centers: np.ndarray
    visits: np.ndarray
    distinct: np.ndarray
    unique_est: List[Optional[float]]
    dropped: int = 0

    @property
    def n_bins(self) -> int:
        return self.centers.size


def solve_unique(v: int, m_prime: int) -> Optional[float]:
    """
    Number of distinct models m in a bin given v visits that found m' of them.

    Solves m (1 - (1 - 1/m)^v) = m' for m >= m' by bisection on [m', 1e9].

    Returns:
        float root, or None when undetermined (m' = v, or no root below the cap)

    Raises:
        MixtureInputError: m' > v or m' < 1
    """
    if m_prime < 1 or v < 1:
        raise MixtureInputError(f"Need 1 <= m' <= v, got v={v}, m'={m_prime}")
    if m_prime > v:
        raise MixtureInputError(f"Distinct count {m_prime} exceeds visit count {v}")
    if m_prime == v:
        return None

    def residual(m: float) -> float:
        if m <= 1.0:
            return 1.0 - m_prime
        # expected number of distinct models seen in v uniform draws from m
        return -m * math.expm1(v * math.log1p(-1.0 / m)) - m_prime

    low = float(m_prime)
    at_low = residual(low)
    if at_low == 0.0:
        return low
    if residual(UNIQUE_CAP) < 0:
        return None
    return float(optimize.bisect(residual, low, UNIQUE_CAP, xtol=UNIQUE_XTOL, maxiter=200))


def build_bins(trace: Sequence[TraceSample]) -> BinTable:
    """
    Bin one subspace's trace by total message length.

    A length exactly on a bin edge goes to the lower bin.
    """
    if not trace:
        raise MixtureInputError("Cannot bin an empty trace")
    k = trace[0].k
    finite = [s for s in trace if math.isfinite(s.total_nits)]
    dropped = len(trace) - len(finite)
    if dropped:
        logger.warning(f"k={k}: {dropped} samples with infinite length left out of the bins")
    if not finite:
        raise MixtureInputError(f"k={k}: no finite message lengths to bin")

    lengths = np.array([s.total_nits for s in finite])
    bin_min = math.floor(lengths.min())
    bin_max = math.ceil(lengths.max())
    n_bins = max(bin_max - bin_min, 1)
    index = np.clip(np.ceil(lengths - bin_min).astype(np.int64) - 1, 0, n_bins - 1)

    visits = np.bincount(index, minlength=n_bins)
    seen: List[set] = [set() for _ in range(n_bins)]
    for j, sample in zip(index, finite):
        seen[j].add(sample.partition_hash)
    distinct = np.array([len(s) for s in seen], dtype=np.int64)
    unique_est = [solve_unique(int(v), int(d)) if v > 0 else None for v, d in zip(visits, distinct)]
    centers = bin_min + np.arange(n_bins) + 0.5
    return BinTable(k, bin_min, centers, visits, distinct, unique_est, dropped)


def included_bins(table: BinTable) -> np.ndarray:
    """
    Bins that contribute to the subspace mass.

    Bins are taken from the shortest upward, stopping before the first one
    whose estimate is undetermined or differs from m' by more than 1.
    """
    included = np.zeros(table.n_bins, dtype=bool)
    for j, (m, m_prime) in enumerate(zip(table.unique_est, table.distinct)):
        if m is None or abs(m - m_prime) > 1:
            break
        included[j] = True
    return included


def subspace_mass(table: BinTable) -> float:
    """
    -ln of the relative posterior mass of the subspace, in nits.

    When not even the first bin qualifies, it contributes m' alone so every
    visited subspace keeps a nonzero mass.
    """
    included = included_bins(table)
    if not included.any():
        logger.warning(f"k={table.k}: first bin undersampled, falling back to m'={table.distinct[0]}")
        return float(table.centers[0] - math.log(table.distinct[0]))
    counts = np.array([m for m, keep in zip(table.unique_est, included) if keep], dtype=float)
    centers = table.centers[included]
    return float(-logsumexp(-centers, b=counts))


def normalize_subspaces(masses: Dict[int, float]) -> Dict[int, float]:
    """Per-k probabilities from per-k masses in nits; infinite masses get 0."""
    if not masses:
        raise MixtureInputError("No subspace masses to normalize")
    ks = sorted(masses)
    finite = [k for k in ks if math.isfinite(masses[k])]
    if not finite:
        raise MixtureInputError("Every subspace mass is infinite")
    probs = normalized_posteriors([masses[k] for k in finite])
    result = {k: 0.0 for k in ks}
    result.update({k: float(p) for k, p in zip(finite, probs)})
    return result
