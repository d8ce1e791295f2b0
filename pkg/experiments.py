import logging
import math
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from baselines import em_fit, em_search, responsibilities
from gibbs_chain import AnnealSchedule, new_chain, run_sweeps
from mce_controller import anneal_search
from mml_coder import log_odds, message_length, raw_data_length
from models import Dataset
from rng_streams import substream
from synthgen import GeneratedData, GeneratorSpec, generate, parameter_error

logger = logging.getLogger(__name__)


class MixtureBenchmark:
    """
    Equal-budget comparison of annealed Gibbs sampling against EM search on
    the six-Gaussian problem.
    """

    # Standard protocol (can be overridden by the caller)
    DEFAULT_PROTOCOL = {
        'kind': 'six-gauss',
        'sigma': 0.5,           # 0.6 for the harder variant
        'per_class': 500,       # 3000 observations in total
        'k_min': 1,
        'k_max': 12,
        'budget_seconds': 120.0,
        't0': 2.0,
        'cool': 0.99,
        'iters_per_temp': 50,
        't_min': 0.01,
        'rule': 'fixed',        # sweep rule of the annealing chains
    }

    def __init__(self, protocol: Optional[Dict[str, Any]] = None):
        """Initialize with default or custom protocol settings"""
        self.protocol = self.DEFAULT_PROTOCOL.copy()
        if protocol:
            self.protocol.update(protocol)
        self.schedule = AnnealSchedule(self.protocol['t0'], self.protocol['cool'],
                                       self.protocol['iters_per_temp'], self.protocol['t_min'])

    def generate(self, seed: int) -> GeneratedData:
        spec = GeneratorSpec(self.protocol['kind'], self.protocol['sigma'],
                             self.protocol['per_class'], seed)
        return generate(spec)

    def run_em_search(self, generated: GeneratedData, seed: int) -> Dict[str, Any]:
        result = em_search(generated.dataset, self.protocol['k_min'], self.protocol['k_max'],
                           self.protocol['budget_seconds'], seed)
        return {
            'k': result.k,
            'total_nits': result.length.total,
            'fits': result.n_fits,
            'mu_error': parameter_error(result.model, generated.truth.mu),
            'model': result.model,
        }

    def run_annealing(self, generated: GeneratedData, seed: int) -> Dict[str, Any]:
        result = anneal_search(generated.dataset, self.protocol['k_min'], self.protocol['k_max'],
                               self.schedule, self.protocol['budget_seconds'], seed,
                               rule=self.protocol['rule'])
        return {
            'k': result.best.k,
            'total_nits': result.best.length.total,
            'runs': len(result.runs),
            'mu_error': parameter_error(result.best.model, generated.truth.mu),
            'model': result.best.model,
        }

    def head_to_head(self, seed: int) -> Dict[str, Any]:
        """
        Run both searches on freshly generated data with equal budgets.

        Returns:
            Dict with both results, the raw data length and the log-odds of
            the annealed model over the EM search model
        """
        generated = self.generate(seed)
        em = self.run_em_search(generated, seed)
        mce = self.run_annealing(generated, seed)
        summary = {
            'seed': seed,
            'raw_data_nits': raw_data_length(generated.dataset),
            'em_search': {key: value for key, value in em.items() if key != 'model'},
            'mce': {key: value for key, value in mce.items() if key != 'model'},
            'log_odds_mce_over_em': log_odds(mce['total_nits'], em['total_nits']),
        }
        logger.info(f"Seed {seed}: MCE {mce['total_nits']:.1f} nits (k={mce['k']}) vs "
                    f"EM search {em['total_nits']:.1f} nits (k={em['k']})")
        return summary


def run_head_to_head(seeds: Iterable[int], protocol: Optional[Dict[str, Any]] = None) -> List[Dict[str, Any]]:
    """
    Main function to run the benchmark over several seeds

    Args:
        seeds: Seeds, one dataset and one pair of searches per seed
        protocol: Dict of protocol overrides (optional)

    Returns:
        List of per-seed summaries
    """
    benchmark = MixtureBenchmark(protocol)
    return [benchmark.head_to_head(seed) for seed in seeds]


def consistency_contrast(data: Dataset, ks: Iterable[int], restarts: int, seed: int,
                         k_max: Optional[int] = None) -> Dict[int, Dict[str, float]]:
    """
    Best-of-restarts log-likelihood and message length per k.

    Maximum likelihood keeps improving as classes are added; the message
    length pays for every class and bottoms out at the generating k.
    """
    ks = list(ks)
    k_max = k_max or max(ks)
    seeds = substream(seed, "consistency")
    table = {}
    for k in ks:
        best_loglik = -math.inf
        best_length = math.inf
        for _ in range(restarts):
            fit = em_fit(data, k, int(seeds.integers(2 ** 63)))
            assignment = responsibilities(data, fit.model).harden()
            length = message_length(data, assignment, fit.model, k_max).total
            best_loglik = max(best_loglik, fit.loglik)
            best_length = min(best_length, length)
        table[k] = {'loglik': best_loglik, 'message_length': best_length}
        logger.info(f"k={k}: loglik={best_loglik:.3f} nats, length={best_length:.2f} nits")
    return table


def mode_visit_frequencies(data: Dataset, n_sweeps: int, burn_in: int, seed: int,
                           em_restarts: int = 20, relabel: bool = True) -> Dict[str, Any]:
    """
    How often a k=2 chain sits in each of the two label-symmetric modes,
    against the mode each restarted EM run settles in.

    The mode is 'low_first' when class 0 has the smaller first-attribute mean.
    em_decisiveness is, per EM run, the mean over observations of the larger
    responsibility: near 1 when the run committed to a single mode.
    """
    state = new_chain(data, 2, substream(seed, "modes"), k_max=2, relabel=relabel)
    state, _, _ = run_sweeps(state, data, burn_in, collect=False)
    low_first = 0
    for _ in range(n_sweeps):
        state, _, _ = run_sweeps(state, data, 1, collect=False)
        low_first += int(state.model.mu[0, 0] < state.model.mu[1, 0])

    em_modes = []
    em_decisiveness = []
    seeds = substream(seed, "modes-em")
    for _ in range(em_restarts):
        fit = em_fit(data, 2, int(seeds.integers(2 ** 63)))
        em_modes.append('low_first' if fit.model.mu[0, 0] < fit.model.mu[1, 0] else 'high_first')
        em_decisiveness.append(float(responsibilities(data, fit.model).responsibilities.max(axis=1).mean()))
    return {
        'sampler_low_first': low_first / n_sweeps if n_sweeps else float('nan'),
        'em_modes': em_modes,
        'em_decisiveness': em_decisiveness,
    }
