"""
Comparison baselines: EM mixture fitting, K-Means, and a randomly restarted
EM search over the number of classes scored by message length.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from errors import ConfigError, MixtureInputError
from mml_coder import MessageLength, message_length
from models import K_MAX, Assignment, Dataset, MixtureModel
from rng_streams import substream

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SoftAssignment:
    """EM responsibilities, one row per observation summing to 1."""
    responsibilities: np.ndarray

    def harden(self) -> Assignment:
        """Argmax responsibility per observation (ties to the lowest class)."""
        r = self.responsibilities
        return Assignment(np.argmax(r, axis=1), r.shape[1])


@dataclass(frozen=True, eq=False)
class EMFit:
    model: MixtureModel
    loglik: float
    n_iter: int
    converged: bool
    history: List[float] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class KMeansFit:
    centroids: np.ndarray
    assignment: Assignment
    distortion: float
    n_iter: int
    history: List[float] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class EMSearchResult:
    model: MixtureModel
    assignment: Assignment
    length: MessageLength
    n_fits: int
    partial: bool
    best_per_k: Dict[int, float] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.model.k


def _joint_log_density(data: Dataset, model: MixtureModel) -> np.ndarray:
    # (N, k): ln p_j + ln f(x_i | class j)
    log_f = stats.norm.logpdf(data.values[:, None, :], loc=model.mu[None, :, :],
                              scale=model.sigma[None, :, :]).sum(axis=2)
    return np.log(model.weights)[None, :] + log_f


def log_likelihood(data: Dataset, model: MixtureModel) -> float:
    """Mixture log-likelihood in nats: sum_i ln sum_j p_j f(x_i | class j)."""
    return float(logsumexp(_joint_log_density(data, model), axis=1).sum())


def responsibilities(data: Dataset, model: MixtureModel) -> SoftAssignment:
    joint = _joint_log_density(data, model)
    return SoftAssignment(np.exp(joint - logsumexp(joint, axis=1, keepdims=True)))


def em_step(data: Dataset, model: MixtureModel) -> MixtureModel:
    """One E-step and one M-step; sigma floored at the measurement precision."""
    r = responsibilities(data, model).responsibilities
    x = data.values
    n_k = r.sum(axis=0)
    safe_n_k = np.maximum(n_k, _TINY)
    weights = np.maximum(n_k / data.n_obs, _TINY)
    weights = weights / weights.sum()
    mu = (r.T @ x) / safe_n_k[:, None]
    var = np.einsum('ik,ikm->km', r, (x[:, None, :] - mu[None, :, :]) ** 2) / safe_n_k[:, None]
    sigma = np.maximum(np.sqrt(var), data.sigma_min)
    # a component with no responsibility left keeps its old parameters
    dead = n_k <= _TINY
    if np.any(dead):
        mu[dead] = model.mu[dead]
        sigma[dead] = model.sigma[dead]
    return MixtureModel(weights, mu, sigma)


def initial_model(data: Dataset, k: int, rng: np.random.Generator) -> MixtureModel:
    """k distinct observations as means, pooled sigma, uniform weights."""
    rows = rng.choice(data.n_obs, size=k, replace=False)
    pooled = np.maximum(data.values.std(axis=0), data.sigma_min)
    return MixtureModel(np.full(k, 1.0 / k), data.values[rows], np.tile(pooled, (k, 1)))


def em_fit(data: Dataset, k: int, seed: int, tol: float = 1e-7, max_iter: int = 500,
           deadline: Optional[float] = None) -> EMFit:
    """
    EM from a random start until the log-likelihood changes by less than tol.

    Args:
        data: Dataset
        k: Number of classes
        seed: Seed for the initial means
        tol: Convergence threshold on |delta loglik| (nats)
        max_iter: Iteration cap
        deadline: Optional time.monotonic() value that also stops the loop

    Returns:
        EMFit with the final model and the log-likelihood history
    """
    if not 1 <= k <= min(data.n_obs, K_MAX):
        raise MixtureInputError(f"k={k} must lie in [1, {min(data.n_obs, K_MAX)}]")
    model = initial_model(data, k, substream(seed, "em-init"))
    loglik = log_likelihood(data, model)
    history = [loglik]
    converged = False
    n_iter = 0
    while n_iter < max_iter:
        model = em_step(data, model)
        n_iter += 1
        new_loglik = log_likelihood(data, model)
        history.append(new_loglik)
        change = abs(new_loglik - loglik)
        loglik = new_loglik
        if change < tol:
            converged = True
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
    return EMFit(model, loglik, n_iter, converged, history)


def _distortions(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def kmeans_fit(data: Dataset, k: int, seed: int, max_iter: int = 300) -> KMeansFit:
    """
    Lloyd iterations from k distinct observations.

    Squared Euclidean distortion never increases; ties go to the lowest
    class index. An empty cluster keeps its previous centroid.
    """
    if not 1 <= k <= data.n_obs:
        raise MixtureInputError(f"k={k} must lie in [1, {data.n_obs}]")
    x = data.values
    rng = substream(seed, "kmeans-init")
    centroids = x[rng.choice(data.n_obs, size=k, replace=False)].copy()
    labels = None
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        distances = _distortions(x, centroids)
        new_labels = np.argmin(distances, axis=1)
        history.append(float(distances[np.arange(data.n_obs), new_labels].sum()))
        for j in range(k):
            members = x[new_labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
        if labels is not None and np.array_equal(labels, new_labels):
            labels = new_labels
            break
        labels = new_labels

    distortion = float(_distortions(x, centroids)[np.arange(data.n_obs), labels].sum())
    if distortion < history[-1]:
        history.append(distortion)
    return KMeansFit(centroids, Assignment(labels, k), distortion, n_iter, history)


def em_search(data: Dataset, k_min: int, k_max: int, budget_seconds: float, seed: int,
              start_ks: Optional[Sequence[int]] = None, tol: float = 1e-7,
              max_iter: int = 500) -> EMSearchResult:
    """
    Randomly restarted EM over k, scored by message length.

    Cycles round-robin over k (beginning with start_ks when given) and runs
    em_fit with a fresh seed each time until the budget expires. Every fit is
    hardened to an exclusive assignment and priced with message_length; the
    shortest wins. If the budget ends before one fit converges, that partial
    fit is returned with partial=True.
    """
    if budget_seconds <= 0:
        raise ConfigError("The budget must be positive")
    if not 1 <= k_min <= k_max <= min(data.n_obs, K_MAX):
        raise MixtureInputError(f"Invalid class range [{k_min}, {k_max}]")
    ks = list(range(k_min, k_max + 1))
    order = [k for k in (start_ks or []) if k_min <= k <= k_max]
    deadline = time.monotonic() + budget_seconds
    seeds = substream(seed, "em-search")

    best = None
    best_per_k: Dict[int, float] = {}
    n_fits = 0
    partial = False
    while n_fits == 0 or time.monotonic() < deadline:
        k = order[n_fits] if n_fits < len(order) else ks[(n_fits - len(order)) % len(ks)]
        fit = em_fit(data, k, int(seeds.integers(2 ** 63)), tol, max_iter, deadline=deadline)
        timed_out = not fit.converged and time.monotonic() >= deadline
        if timed_out and best is not None:
            break
        if timed_out:
            partial = True
            logger.warning("Budget ran out before the first EM fit converged; returning the partial fit")
        n_fits += 1
        assignment = responsibilities(data, fit.model).harden()
        length = message_length(data, assignment, fit.model, k_max)
        best_per_k[k] = min(best_per_k.get(k, np.inf), length.total)
        logger.info(f"EM fit {n_fits}: k={k} loglik={fit.loglik:.3f} length={length.total:.2f} nits")
        if best is None or length.total < best[2].total:
            best = (fit.model, assignment, length)
    return EMSearchResult(best[0], best[1], best[2], n_fits, partial, best_per_k)
