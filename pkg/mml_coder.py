"""
Two-part Minimum Message Length coder for Gaussian mixtures.

Part 1 states the model (number of classes, class weights, per-attribute
Gaussian parameters) with a Wallace-Freeman style code: uniform priors over
the configured ranges and a parameter precision from the Fisher information.
Part 2 states every observation given the model: its class label, then each
attribute value to precision eps. All lengths are in nits.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from errors import CoderError, MixtureInputError
from models import Assignment, Dataset, MixtureModel

logger = logging.getLogger(__name__)

# Optimal quantizing lattice constant in two dimensions.
KAPPA_2 = 5.0 / (36.0 * math.sqrt(3.0))
_LATTICE_TERM = 1.0 + math.log(KAPPA_2)


@dataclass(frozen=True)
class MessageLength:
    part1: float
    part2: float
    total: float

    @classmethod
    def from_parts(cls, part1: float, part2: float) -> "MessageLength":
        return cls(float(part1), float(part2), float(part1) + float(part2))

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.total)


def class_nll_matrix(values: np.ndarray, model: MixtureModel, eps: float) -> np.ndarray:
    """(N, k) matrix of attribute code lengths: sum over m of -ln(phi(x_im) * eps) for class j."""
    log_density = stats.norm.logpdf(values[:, None, :], loc=model.mu[None, :, :],
                                    scale=model.sigma[None, :, :])
    return -log_density.sum(axis=2) - values.shape[1] * math.log(eps)


def label_costs(model: MixtureModel) -> np.ndarray:
    """-ln p_j for every class."""
    return -np.log(model.weights)


def _within_priors(model: MixtureModel, data: Dataset) -> bool:
    lo = data.range_mu[:, 0]
    hi = data.range_mu[:, 1]
    return bool(np.all(model.mu >= lo) and np.all(model.mu <= hi)
                and np.all(model.sigma <= data.range_sigma))


def part1_length(model: MixtureModel, counts, data: Dataset, k_max: int) -> float:
    """
    Length of the model statement in nits.

    L_k + L_weights + L_params, where L_k = ln(k_max), L_weights is the
    multinomial cost of the class weights and L_params charges every
    class-attribute pair ln(R_mu R_sigma) + 0.5 ln 2 + ln(n_eff) - 2 ln(sigma)
    + 1 + ln(kappa_2), with n_eff = max(count, 2).

    Returns math.inf when any parameter lies outside its prior range.

    Raises:
        CoderError: counts do not match the model or do not sum to N, or
            the model has more than k_max classes
    """
    counts = np.asarray(counts, dtype=float)
    k = model.k
    if counts.shape != (k,):
        raise CoderError(f"Expected {k} class counts, got {counts.shape}")
    if counts.sum() != data.n_obs:
        raise CoderError(f"Class counts sum to {counts.sum():g}, expected {data.n_obs}")
    if not 1 <= k <= k_max:
        raise CoderError(f"Model has {k} classes but the coder allows at most {k_max}")
    if model.n_attrs != data.n_attrs:
        raise CoderError("Model and data disagree on the number of attributes")
    if not _within_priors(model, data):
        logger.debug("Model parameters fall outside the prior ranges")
        return math.inf

    n_obs = data.n_obs
    length_k = math.log(k_max)
    if k == 1:
        length_weights = 0.0
    else:
        length_weights = 0.5 * (k - 1) * math.log(n_obs / 12.0 + 1.0) - 0.5 * float(np.log(model.weights).sum())

    prior_volume = np.log(data.mu_width * data.range_sigma)          # (M,)
    n_eff = np.log(np.maximum(counts, 2.0))                           # (k,)
    per_pair = (prior_volume[None, :] + 0.5 * math.log(2.0) + n_eff[:, None]
                - 2.0 * np.log(model.sigma) + _LATTICE_TERM)
    return length_k + length_weights + float(per_pair.sum())


def part2_length(data: Dataset, a: Assignment, model: MixtureModel) -> float:
    """Length of the data given the model: label cost plus attribute costs per observation."""
    if a.k != model.k:
        raise CoderError(f"Assignment is for {a.k} classes, model has {model.k}")
    if a.labels.size != data.n_obs:
        raise CoderError("Assignment length does not match the number of observations")
    nll = class_nll_matrix(data.values, model, data.eps)
    rows = np.arange(data.n_obs)
    return float(label_costs(model)[a.labels].sum() + nll[rows, a.labels].sum())


def message_length(data: Dataset, a: Assignment, model: MixtureModel, k_max: int) -> MessageLength:
    """Total two-part message length of (model, assignment)."""
    part1 = part1_length(model, a.counts(), data, k_max)
    part2 = part2_length(data, a, model)
    return MessageLength.from_parts(part1, part2)


def length_constant(n_obs: int, k: int, k_max: int) -> float:
    """The part of the message length no single class owns: L_k and the weight-code offset."""
    offset = 0.5 * (k - 1) * math.log(n_obs / 12.0 + 1.0) if k > 1 else 0.0
    return math.log(k_max) + offset


def class_shares(counts, mu, sigma, scatter, data: Dataset, k: int) -> np.ndarray:
    """
    Each class's share of the total message length.

    A class owns -0.5 ln(w_j) of the weight code, its parameter statements,
    and the part 2 cost of its members. With w_j = (n_j + 1) / (N + k), the
    shares plus length_constant() add up to message_length().total.

    Args:
        counts: (k,) members per class
        mu, sigma: (k, M) class parameters
        scatter: (k, M) sum of squared member deviations from mu
        data: Dataset, for the priors and eps
        k: Number of classes

    Returns:
        (k,) array; math.inf for a class whose parameters fall outside the priors
    """
    counts = np.asarray(counts, dtype=float)
    log_w = np.log((counts + 1.0) / (data.n_obs + k))
    params = (np.log(data.mu_width * data.range_sigma)[None, :] + 0.5 * math.log(2.0)
              + np.log(np.maximum(counts, 2.0))[:, None] - 2.0 * np.log(sigma) + _LATTICE_TERM)
    members = (counts[:, None] * (0.5 * math.log(2.0 * math.pi) + np.log(sigma) - math.log(data.eps))
               + scatter / (2.0 * sigma ** 2))
    shares = -0.5 * log_w - counts * log_w + params.sum(axis=1) + members.sum(axis=1)
    inside = (np.all(mu >= data.range_mu[:, 0], axis=1) & np.all(mu <= data.range_mu[:, 1], axis=1)
              & np.all(sigma <= data.range_sigma, axis=1))
    return np.where(inside, shares, math.inf)


def derived_class_shares(counts, sums, sumsqs, data: Dataset, k: int) -> np.ndarray:
    """
    class_shares() for the parameters derive_model() would estimate from the
    members' sufficient statistics. Every class must have a member.
    """
    counts = np.asarray(counts, dtype=float)
    mu = sums / counts[:, None]
    scatter = np.maximum(sumsqs - sums * mu, 0.0)
    spread = np.sqrt(scatter / np.maximum(counts - 1.0, 1.0)[:, None])
    sigma = np.where(counts[:, None] > 1, np.maximum(spread, data.sigma_min), data.sigma_min)
    return class_shares(counts, mu, sigma, scatter, data, k)


def normalized_posteriors(lengths: Sequence[float]) -> np.ndarray:
    """
    Posterior probabilities from message lengths: p_i proportional to exp(-L_i).

    Computed in the shifted log domain, lengths can be O(1e4) nits.
    """
    lengths = np.asarray(lengths, dtype=float).reshape(-1)
    if lengths.size == 0:
        raise MixtureInputError("Need at least one message length")
    if not np.all(np.isfinite(lengths)):
        raise MixtureInputError("Message lengths must be finite")
    log_p = -lengths - logsumexp(-lengths)
    return np.exp(log_p)


def log_odds(length_a: float, length_b: float) -> float:
    """Posterior log-odds (nits) of model a over model b."""
    return float(length_b - length_a)


def raw_data_length(data: Dataset) -> float:
    """Length of the data sent with no model: each value uniform over its mean range at precision eps."""
    return float(data.n_obs * np.log(data.mu_width / data.eps).sum())


@dataclass(frozen=True)
class RegionOdds:
    """
    Posterior odds of the parameter regions around the MML estimate.

    Attributes:
        mu, sigma: the MML estimate
        cell_mu, cell_sigma: region side lengths on each axis
        length: total message length at the estimate
        odds: (d_mu, d_sigma) offset in cells -> odds ratio, None where the
            neighbour's representative point leaves the prior ranges
    """
    mu: float
    sigma: float
    cell_mu: float
    cell_sigma: float
    length: float
    odds: Dict[Tuple[int, int], Optional[float]]

    def available(self) -> Dict[Tuple[int, int], float]:
        return {offset: value for offset, value in self.odds.items() if value is not None}

    def nearest(self) -> float:
        return min(self.available().values())

    def largest(self) -> float:
        return max(self.available().values())


def region_odds(sample: Dataset, k_max: int = 1) -> RegionOdds:
    """
    Odds of the eight grid-adjacent (mu, sigma) regions against the region
    holding the MML estimate, for a univariate sample coded as one class.

    Cell sides come from the diagonal Fisher terms: s_mu = sqrt(12 sigma^2 / n)
    and s_sigma = sqrt(12 sigma^2 / (2n)).
    """
    if sample.n_attrs != 1:
        raise MixtureInputError("region_odds works on univariate samples")
    n = sample.n_obs
    if n < 10:
        raise MixtureInputError(f"region_odds needs at least 10 observations, got {n}")

    x = sample.values[:, 0]
    mu_hat = float(x.mean())
    sigma_hat = max(float(x.std(ddof=1)), sample.sigma_min)
    cell_mu = math.sqrt(12.0 * sigma_hat ** 2 / n)
    cell_sigma = math.sqrt(12.0 * sigma_hat ** 2 / (2.0 * n))
    assignment = Assignment(np.zeros(n, dtype=np.int64), 1)

    def length_at(mu: float, sigma: float) -> Optional[float]:
        lo, hi = sample.range_mu[0]
        if sigma <= 0 or sigma > sample.range_sigma[0] or not lo <= mu <= hi:
            return None
        model = MixtureModel([1.0], [[mu]], [[sigma]])
        total = message_length(sample, assignment, model, k_max).total
        return total if math.isfinite(total) else None

    base = length_at(mu_hat, sigma_hat)
    if base is None:
        raise MixtureInputError("The MML estimate itself lies outside the prior ranges")

    odds = {}
    for d_mu in (-1, 0, 1):
        for d_sigma in (-1, 0, 1):
            if d_mu == 0 and d_sigma == 0:
                continue
            neighbour = length_at(mu_hat + d_mu * cell_mu, sigma_hat + d_sigma * cell_sigma)
            odds[(d_mu, d_sigma)] = None if neighbour is None else math.exp(neighbour - base)
    return RegionOdds(mu_hat, sigma_hat, cell_mu, cell_sigma, base, odds)
