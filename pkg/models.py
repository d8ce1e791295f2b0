"""
Core domain types for Gaussian mixture modelling.

A Dataset carries the observations together with the prior ranges and the
measurement precision the coder needs. A MixtureModel is a set of weighted
classes with one independent Gaussian per attribute. Models inside the
sampler are always *derived* from an exclusive Assignment, so the partition
of the observations identifies the model.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from app import DEFAULT_SETTINGS
from errors import EmptyClassError, MixtureInputError

logger = logging.getLogger(__name__)

# Hard upper bound on the number of classes any chain or search may use.
K_MAX: int = DEFAULT_SETTINGS['k_cap']


@dataclass(frozen=True)
class GaussianParam:
    mu: float
    sigma: float


@dataclass(frozen=True)
class Dataset:
    """
    N x M matrix of observations plus the per-attribute priors.

    Attributes:
        values: (N, M) array of finite reals
        range_mu: (M, 2) array of [lo, hi] prior bounds on class means
        range_sigma: (M,) array of upper prior bounds on class standard
            deviations; the lower bound is 0
        eps: measurement precision, in the units of the values
        names: attribute names, used when writing CSV
    """
    values: np.ndarray
    range_mu: np.ndarray
    range_sigma: np.ndarray
    eps: float
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise MixtureInputError(f"Dataset needs an N x M matrix with N, M >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise MixtureInputError("Dataset values must all be finite")
        n_attrs = values.shape[1]

        range_mu = np.array(self.range_mu, dtype=float).reshape(-1, 2)
        if range_mu.shape[0] == 1 and n_attrs > 1:
            range_mu = np.repeat(range_mu, n_attrs, axis=0)
        range_sigma = np.atleast_1d(np.array(self.range_sigma, dtype=float))
        if range_sigma.size == 1 and n_attrs > 1:
            range_sigma = np.repeat(range_sigma, n_attrs)
        if range_mu.shape != (n_attrs, 2) or range_sigma.shape != (n_attrs,):
            raise MixtureInputError("Prior ranges must have one entry per attribute")

        eps = float(self.eps)
        if not np.isfinite(eps) or eps <= 0:
            raise MixtureInputError(f"Measurement precision must be positive, got {eps}")
        if np.any(range_mu[:, 1] - range_mu[:, 0] <= 0):
            raise MixtureInputError("Every mean prior range must have positive width")
        if np.any(range_sigma <= eps):
            raise MixtureInputError("Every sigma prior upper bound must exceed eps")

        names = tuple(self.names) if self.names else tuple(f"x{m + 1}" for m in range(n_attrs))
        if len(names) != n_attrs:
            raise MixtureInputError("One attribute name per column is required")

        for array in (values, range_mu, range_sigma):
            array.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'range_mu', range_mu)
        object.__setattr__(self, 'range_sigma', range_sigma)
        object.__setattr__(self, 'eps', eps)
        object.__setattr__(self, 'names', names)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.values.shape[1]

    @property
    def sigma_min(self) -> float:
        """Floor on every class standard deviation (the measurement precision)."""
        return self.eps

    @property
    def mu_width(self) -> np.ndarray:
        return self.range_mu[:, 1] - self.range_mu[:, 0]

    @classmethod
    def from_values(cls, values, names: Optional[Sequence[str]] = None,
                    range_mu=None, range_sigma=None, eps: Optional[float] = None) -> "Dataset":
        """
        Build a Dataset, filling in any prior the caller did not supply.

        Defaults per attribute: mean range [min - 0.1 span, max + 0.1 span],
        sigma range (0, span], eps = 0.01 x pooled standard deviation. A
        constant attribute uses span 1.

        Args:
            values: (N, M) or (N,) array-like
            names: Optional attribute names
            range_mu: (lo, hi) for all attributes or one pair per attribute
            range_sigma: Upper bound for all attributes or one per attribute
            eps: Measurement precision

        Returns:
            Dataset
        """
        array = np.array(values, dtype=float)
        if array.ndim == 1:
            array = array[:, None]
        if array.ndim != 2 or array.size == 0:
            raise MixtureInputError("Cannot build a Dataset from an empty matrix")
        if not np.all(np.isfinite(array)):
            raise MixtureInputError("Dataset values must all be finite")

        lo = array.min(axis=0)
        hi = array.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        if range_mu is None:
            range_mu = np.column_stack([lo - 0.1 * span, hi + 0.1 * span])
        if range_sigma is None:
            range_sigma = span
        if eps is None:
            pooled = float(np.sqrt(np.mean(array.var(axis=0))))
            eps = 0.01 * (pooled if pooled > 0 else 1.0)
        return cls(array, range_mu, range_sigma, eps, tuple(names) if names else ())


@dataclass(frozen=True)
class MixtureModel:
    """
    k weighted classes, each an independent Gaussian per attribute.

    Attributes:
        weights: (k,) positive, summing to 1
        mu: (k, M) class means
        sigma: (k, M) class standard deviations
    """
    weights: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).reshape(-1)
        mu = np.array(self.mu, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        if mu.ndim == 1:
            mu = mu.reshape(weights.size, -1)
            sigma = sigma.reshape(weights.size, -1)
        k = weights.size
        if not 1 <= k <= K_MAX:
            raise MixtureInputError(f"A mixture needs between 1 and {K_MAX} classes, got {k}")
        if mu.shape != sigma.shape or mu.shape[0] != k:
            raise MixtureInputError("mu and sigma must both be k x M")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise MixtureInputError("Class weights must be positive and sum to 1")
        if np.any(sigma <= 0) or not np.all(np.isfinite(mu)) or not np.all(np.isfinite(sigma)):
            raise MixtureInputError("Class parameters must be finite with positive sigma")
        for array in (weights, mu, sigma):
            array.setflags(write=False)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'mu', mu)
        object.__setattr__(self, 'sigma', sigma)

    @property
    def k(self) -> int:
        return self.weights.size

    @property
    def n_attrs(self) -> int:
        return self.mu.shape[1]

    @property
    def classes(self) -> List[List[GaussianParam]]:
        return [[GaussianParam(float(m), float(s)) for m, s in zip(mu_row, sigma_row)]
                for mu_row, sigma_row in zip(self.mu, self.sigma)]

    def relabel(self, perm: Sequence[int]) -> "MixtureModel":
        """Move old class j to position perm[j]."""
        order = np.argsort(np.asarray(perm))
        return MixtureModel(self.weights[order], self.mu[order], self.sigma[order])


@dataclass(frozen=True)
class Assignment:
    """Exclusive class label per observation, each in [0, k)."""
    labels: np.ndarray
    k: int = field(default=0)

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        k = int(self.k) if self.k else (int(labels.max()) + 1 if labels.size else 1)
        if labels.size and (labels.min() < 0 or labels.max() >= k):
            raise MixtureInputError(f"Every label must lie in [0, {k})")
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'k', k)

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def relabel(self, perm: Sequence[int]) -> "Assignment":
        return Assignment(np.asarray(perm)[self.labels], self.k)


def gaussian_nll(x: float, p: GaussianParam, eps: float) -> float:
    """
    Code length in nits of one attribute value under a Gaussian, stated to
    precision eps: -ln(phi(x; mu, sigma) * eps).
    """
    if not np.isfinite(x):
        raise MixtureInputError(f"Cannot encode non-finite value {x}")
    if p.sigma <= 0 or eps <= 0:
        raise MixtureInputError("sigma and eps must be positive")
    return float(-stats.norm.logpdf(x, loc=p.mu, scale=p.sigma) - np.log(eps))


def reestimate_class(members, sigma_min: float) -> List[GaussianParam]:
    """
    Parameter estimates of one class from its exclusively assigned members.

    Per attribute: the sample mean, and the n-1 standard deviation floored at
    sigma_min. A singleton class gets sigma_min.

    Args:
        members: (n, M) array of member observations
        sigma_min: Floor on the standard deviation

    Returns:
        list: One GaussianParam per attribute
    """
    members = np.atleast_2d(np.asarray(members, dtype=float))
    if members.size == 0:
        raise EmptyClassError("Cannot re-estimate a class with no members")
    mu = members.mean(axis=0)
    if members.shape[0] == 1:
        sigma = np.full(mu.shape, sigma_min)
    else:
        sigma = np.maximum(members.std(axis=0, ddof=1), sigma_min)
    return [GaussianParam(float(m), float(s)) for m, s in zip(mu, sigma)]


def smoothed_weights(counts, n_obs: int) -> np.ndarray:
    """Laplace-smoothed class weights (counts_j + 1) / (N + k)."""
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or counts.size == 0 or np.any(counts < 0):
        raise MixtureInputError("counts must be a nonempty vector of non-negative integers")
    if counts.sum() != n_obs:
        raise MixtureInputError(f"counts sum to {counts.sum():g}, expected {n_obs}")
    return (counts + 1.0) / (n_obs + counts.size)


def canonical_labels(labels) -> np.ndarray:
    """Renumber classes in order of first appearance, so [1, 1, 0] -> [0, 0, 1]."""
    labels = np.asarray(labels).reshape(-1)
    if labels.size == 0:
        return labels.astype(np.int64)
    _, first_index, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first_index.size, dtype=np.int64)
    rank[np.argsort(first_index)] = np.arange(first_index.size)
    return rank[inverse.reshape(-1)]


def canonical_partition_hash(a: Union[Assignment, np.ndarray]) -> str:
    """Hash of the partition an assignment induces, invariant under relabelling."""
    labels = a.labels if isinstance(a, Assignment) else a
    canonical = canonical_labels(labels).astype('<i4')
    return hashlib.blake2b(canonical.tobytes(), digest_size=16).hexdigest()


def derive_model(data: Dataset, assignment: Assignment,
                 rng: Optional[np.random.Generator] = None) -> MixtureModel:
    """
    The model an exclusive assignment determines.

    Weights are smoothed counts, class parameters are re-estimated from the
    members. Empty classes are re-seeded from the priors (mu uniform over the
    mean range, sigma uniform over (sigma_min, sigma upper bound]) using rng.

    Raises:
        EmptyClassError: a class is empty and no rng was given
    """
    counts = assignment.counts()
    weights = smoothed_weights(counts, data.n_obs)
    mu = np.empty((assignment.k, data.n_attrs))
    sigma = np.empty((assignment.k, data.n_attrs))
    for j in range(assignment.k):
        if counts[j] == 0:
            if rng is None:
                raise EmptyClassError(f"Class {j} is empty and there is no generator to re-seed it")
            mu[j] = rng.uniform(data.range_mu[:, 0], data.range_mu[:, 1])
            sigma[j] = rng.uniform(data.sigma_min, data.range_sigma)
            logger.debug(f"Re-seeded empty class {j} of {assignment.k}")
            continue
        params = reestimate_class(data.values[assignment.labels == j], data.sigma_min)
        mu[j] = [p.mu for p in params]
        sigma[j] = [p.sigma for p in params]
    return MixtureModel(weights, mu, sigma)
