"""
Multiple chains at equilibrium.

One fixed-k chain per subspace k in [k_min, k_max]. After burn-in every chain
contributes a block of samples, the samples give a relative posterior mass
per subspace, and the sampler then repeatedly jumps to a chain drawn in
proportion to those masses and advances only that chain for one segment.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from errors import ConfigError, MixtureInputError
from gibbs_chain import (SWEEP_RULES, AnnealSchedule, BestVisit, ChainState, TraceSample,
                         new_chain, run_anneal, run_sweeps)
from models import K_MAX, Dataset
from rng_streams import spawn_generators, substream
from subspace_estimator import build_bins, normalize_subspaces, subspace_mass

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MCEConfig:
    """
    Sampler sizes. Defaults: 500 burn-in sweeps, 1000 samples per chain for
    the first estimate, 100 sweeps per segment, exact sweeps.
    """
    burn_in: int = 500
    samples: int = 1000
    segment: int = 100
    seed: int = 0
    temperature: float = 1.0
    workers: int = 1
    rule: str = 'exact'

    def __post_init__(self):
        if self.burn_in < 0 or self.samples < 1 or self.segment < 1:
            raise ConfigError("Need burn_in >= 0, samples >= 1 and segment >= 1")
        if self.temperature <= 0:
            raise ConfigError("Temperature must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.rule not in SWEEP_RULES:
            raise ConfigError(f"Unknown sweep rule {self.rule!r}")

    @classmethod
    def from_settings(cls, settings: dict, seed: int, temperature: float = 1.0) -> "MCEConfig":
        return cls(settings['burn_in'], settings['samples'], settings['segment'],
                   seed, temperature, settings['workers'], settings['sweep_rule'])


@dataclass(eq=False)
class Ensemble:
    """
    The chains and what has been learned from them.

    Exactly one chain (active_k) advances at any time; traces accumulate per
    k and masses are recomputed from the full trace of the chain that moved.
    """
    chains: Dict[int, ChainState]
    traces: Dict[int, List[TraceSample]]
    masses: Dict[int, float]
    active_k: int
    config: MCEConfig
    rng: np.random.Generator
    burned_in: set = field(default_factory=set)
    best: Optional[BestVisit] = None

    @property
    def ks(self) -> List[int]:
        return sorted(self.chains)


@dataclass(eq=False)
class MCEResult:
    trace: List[TraceSample]
    probabilities: Dict[int, float]
    best: BestVisit
    visits: Dict[int, int]
    ensemble: Ensemble


def init_ensemble(data: Dataset, k_min: int, k_max: int, config: MCEConfig,
                  seed: Optional[int] = None) -> Ensemble:
    """
    One chain per k with uniformly random initial labels.

    Each chain gets its own generator spawned from the master seed; the jump
    sequence gets another.
    """
    seed = config.seed if seed is None else seed
    if not 1 <= k_min <= k_max <= K_MAX:
        raise MixtureInputError(f"Need 1 <= k_min <= k_max <= {K_MAX}, got [{k_min}, {k_max}]")
    if data.n_obs < k_max:
        raise MixtureInputError(f"{data.n_obs} observations cannot populate {k_max} classes")
    ks = list(range(k_min, k_max + 1))
    generators = spawn_generators(seed, "chains", len(ks))
    chains = {k: new_chain(data, k, rng, k_max=k_max, temperature=config.temperature,
                        rule=config.rule)
              for k, rng in zip(ks, generators)}
    return Ensemble(chains=chains, traces={k: [] for k in ks}, masses={},
                    active_k=k_min, config=config, rng=substream(seed, "jump"))


def _burn_and_sample(item: Tuple[int, ChainState, bool], data: Dataset, config: MCEConfig
                     ) -> Tuple[int, ChainState, List[TraceSample], Optional[BestVisit]]:
    k, state, burned = item
    if not burned:
        state, _, _ = run_sweeps(state, data, config.burn_in, collect=False)
        logger.info(f"Chain k={k} burned in after {config.burn_in} sweeps")
    state, trace, best = run_sweeps(state, data, config.samples, collect=True, track_best=True)
    return k, state, trace, best


def _record_best(ensemble: Ensemble, best: Optional[BestVisit]) -> None:
    if best is not None and best.better_than(ensemble.best):
        ensemble.best = best


def estimate_all(ensemble: Ensemble, data: Dataset) -> Dict[int, float]:
    """
    Burn in any chain not yet burned in, draw config.samples samples from
    every chain and return the normalized subspace probabilities.
    """
    config = ensemble.config
    items = [(k, ensemble.chains[k], k in ensemble.burned_in) for k in ensemble.ks]
    if config.workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(lambda item: _burn_and_sample(item, data, config), items))
    else:
        results = [_burn_and_sample(item, data, config) for item in items]

    for k, state, trace, best in results:
        ensemble.chains[k] = state
        ensemble.burned_in.add(k)
        ensemble.traces[k].extend(trace)
        ensemble.masses[k] = subspace_mass(build_bins(ensemble.traces[k]))
        _record_best(ensemble, best)

    probs = normalize_subspaces(ensemble.masses)
    logger.info("Subspace probabilities: " + ", ".join(f"k={k}: {p:.4f}" for k, p in probs.items()))
    return probs


def jump(probs: Dict[int, float], rng: np.random.Generator) -> int:
    """Draw the next active k by inverse CDF over the normalized probabilities."""
    ks = sorted(probs)
    cumulative = np.cumsum([probs[k] for k in ks])
    index = int(np.searchsorted(cumulative, rng.random(), side='right'))
    return ks[min(index, len(ks) - 1)]


def run_segment(ensemble: Ensemble, data: Dataset, probs: Dict[int, float]
                ) -> Tuple[Dict[int, float], List[TraceSample]]:
    """Jump, advance the active chain one segment, refresh its mass and renormalize."""
    k = jump(probs, ensemble.rng)
    ensemble.active_k = k
    state, segment, best = run_sweeps(ensemble.chains[k], data, ensemble.config.segment,
                                      collect=True, track_best=True)
    ensemble.chains[k] = state
    ensemble.traces[k].extend(segment)
    _record_best(ensemble, best)
    # other chains did not move, so only this mass is stale
    ensemble.masses[k] = subspace_mass(build_bins(ensemble.traces[k]))
    return normalize_subspaces(ensemble.masses), segment


def mce_run(data: Dataset, k_min: int, k_max: int, config: MCEConfig, total_segments: int,
            progress: bool = False) -> MCEResult:
    """
    Full multiple-chain run.

    Estimates every subspace once, then for each segment: jump, advance the
    active chain config.segment sweeps, append its samples, refresh its mass
    and renormalize.

    Returns:
        MCEResult with the visit-ordered trace, the final per-k
        probabilities, the best model seen and segment counts per k
    """
    if total_segments < 1:
        raise MixtureInputError("total_segments must be at least 1")
    ensemble = init_ensemble(data, k_min, k_max, config)
    probs = estimate_all(ensemble, data)
    trace = [sample for k in ensemble.ks for sample in ensemble.traces[k]]
    visits = {k: 0 for k in ensemble.ks}

    for _ in tqdm(range(total_segments), desc="segments", disable=not progress):
        probs, segment = run_segment(ensemble, data, probs)
        visits[ensemble.active_k] += 1
        trace.extend(segment)

    if ensemble.best is None:
        raise MixtureInputError("No visited model lies inside the prior ranges")
    logger.info(f"MCE run finished: best k={ensemble.best.k} at {ensemble.best.length.total:.2f} nits")
    return MCEResult(trace, probs, ensemble.best, visits, ensemble)


@dataclass(eq=False)
class AnnealSearchResult:
    best: BestVisit
    runs: List[Dict[str, float]]


def anneal_search(data: Dataset, k_min: int, k_max: int, schedule: AnnealSchedule,
                  budget_seconds: float, seed: int, progress: bool = False,
                  rule: str = 'fixed') -> AnnealSearchResult:
    """
    Independent annealing runs, each on a chain with k drawn uniformly from
    [k_min, k_max], until the wall-clock budget is spent. At least one run
    always starts.

    Chains use the fixed sweep rule unless rule says otherwise.
    """
    if budget_seconds <= 0:
        raise ConfigError("The budget must be positive")
    if not 1 <= k_min <= k_max <= K_MAX or data.n_obs < k_max:
        raise MixtureInputError(f"Invalid class range [{k_min}, {k_max}] for {data.n_obs} observations")
    deadline = time.monotonic() + budget_seconds
    pick = substream(seed, "anneal-k")
    best = None
    runs = []
    run = 0
    while run == 0 or time.monotonic() < deadline:
        k = int(pick.integers(k_min, k_max + 1))
        state = new_chain(data, k, substream(seed, f"anneal-run-{run}"), k_max=k_max, rule=rule)
        result = run_anneal(state, data, schedule.t0, schedule.cool, schedule.iters_per_temp,
                            schedule.t_min, deadline=deadline, progress=progress)
        runs.append({'k': k, 'total_nits': result.best.length.total,
                     'blocks': result.blocks, 'completed': result.completed})
        if result.best.better_than(best):
            best = result.best
        logger.info(f"Annealing run {run}: k={k} best={result.best.length.total:.2f} nits")
        run += 1
    return AnnealSearchResult(best, runs)
