"""
One fixed-k Markov chain over exclusive assignments.

A sweep is the K-Means/EM loop with one change: instead of moving each
observation to its best class (K-Means) or splitting it across classes (EM),
the observation is assigned to a single class drawn from its normalized
posterior. The class weights and parameters are then recalculated from the
exclusive assignment. Raising the posterior to the power 1/c gives the
annealing variant; c = 1 samples the posterior itself.

Two sweep rules price a candidate class:

  exact   the full two-part length of the partition the move produces, with
          both touched classes re-estimated. Each draw is the conditional of
          exp(-length / c), so the chain leaves that distribution invariant.
  fixed   only the observation's own cost under the current parameters,
          -ln w_j plus its attribute code lengths. Cheap and vectorized, but a
          singleton class (sigma at the floor) never gains members, so it
          suits annealing rather than sampling.

After the labels are drawn a chain may also apply a uniformly random
relabelling. Lengths do not depend on labels, so the move keeps the target
and lets the chain visit every label-symmetric mode.
"""

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp
from tqdm import tqdm

from errors import ConfigError, MixtureInputError
from mml_coder import (MessageLength, class_nll_matrix, class_shares, derived_class_shares,
                       label_costs, message_length)
from models import K_MAX, Assignment, Dataset, MixtureModel, canonical_partition_hash, derive_model

logger = logging.getLogger(__name__)

SWEEP_RULES = ('exact', 'fixed')


@dataclass(frozen=True)
class TraceSample:
    """One retained visit: the lengths of the model after a sweep and its partition."""
    k: int
    sweep: int
    total_nits: float
    part1_nits: float
    part2_nits: float
    partition_hash: str

    def to_dict(self) -> dict:
        return {
            'k': self.k,
            'sweep': self.sweep,
            'total_nits': self.total_nits,
            'part1_nits': self.part1_nits,
            'part2_nits': self.part2_nits,
            'partition_hash': self.partition_hash,
        }


@dataclass(frozen=True, eq=False)
class ChainState:
    """
    State of one chain. The model is always derived from the assignment.

    The generator travels with the state: a state passed to sweep() must not
    be used again by the caller, the returned state owns the stream.
    """
    k: int
    assignment: Assignment
    model: MixtureModel
    temperature: float
    rng: np.random.Generator
    sweep_count: int = 0
    k_max: int = K_MAX
    rule: str = 'exact'
    relabel: bool = True

    def __post_init__(self):
        if self.temperature <= 0:
            raise MixtureInputError(f"Temperature must be positive, got {self.temperature}")
        if self.rule not in SWEEP_RULES:
            raise ConfigError(f"Unknown sweep rule {self.rule!r}; expected one of {', '.join(SWEEP_RULES)}")

    def with_temperature(self, temperature: float) -> "ChainState":
        return replace(self, temperature=float(temperature))


@dataclass(frozen=True, eq=False)
class BestVisit:
    """Shortest (model, assignment) seen so far by a chain or a search."""
    k: int
    length: MessageLength
    model: MixtureModel
    assignment: Assignment
    sweep: int

    def better_than(self, other: Optional["BestVisit"]) -> bool:
        return other is None or self.length.total < other.length.total


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling: start at t0, multiply by cool after each block, stop below t_min."""
    t0: float = 2.0
    cool: float = 0.99
    iters_per_temp: int = 50
    t_min: float = 0.01

    def __post_init__(self):
        if not 0 < self.t_min <= self.t0:
            raise ConfigError("The schedule needs t0 >= t_min > 0")
        if not 0 < self.cool < 1:
            raise ConfigError("The cooling constant must lie strictly between 0 and 1")
        if self.iters_per_temp < 1:
            raise ConfigError("At least one sweep per temperature is required")

    def temperatures(self) -> List[float]:
        temps = []
        t = self.t0
        while True:
            temps.append(t)
            t *= self.cool
            if t < self.t_min:
                return temps

    def block_count(self) -> int:
        return len(self.temperatures())


@dataclass(frozen=True, eq=False)
class AnnealResult:
    best: BestVisit
    final_state: ChainState
    blocks: int
    completed: bool


def anneal_block_count(t0: float, cool: float, t_min: float) -> int:
    """Number of temperature blocks the schedule executes."""
    return AnnealSchedule(t0, cool, 1, t_min).block_count()


def new_chain(data: Dataset, k: int, rng: np.random.Generator,
              k_max: Optional[int] = None, temperature: float = 1.0,
              rule: str = 'exact', relabel: bool = True) -> ChainState:
    """Start a chain from uniformly random labels."""
    k_max = k if k_max is None else k_max
    if not 1 <= k <= min(k_max, K_MAX):
        raise MixtureInputError(f"k={k} must lie in [1, {min(k_max, K_MAX)}]")
    labels = rng.integers(0, k, size=data.n_obs)
    assignment = Assignment(labels, k)
    model = derive_model(data, assignment, rng)
    return ChainState(k, assignment, model, float(temperature), rng, 0, k_max, rule, relabel)


def class_deltas(values: np.ndarray, model: MixtureModel, eps: float) -> np.ndarray:
    """(n, k) length of stating each observation in each class, parameters held fixed."""
    return label_costs(model)[None, :] + class_nll_matrix(values, model, eps)


def tempered_posteriors(deltas: np.ndarray, temperature: float) -> np.ndarray:
    """Row-wise normalized posteriors raised to 1/c and renormalized."""
    scaled = -np.asarray(deltas, dtype=float) / temperature
    return np.exp(scaled - logsumexp(scaled, axis=-1, keepdims=True))


def _conditional(deltas: np.ndarray, temperature: float) -> np.ndarray:
    # a move out of an infinite-length state wins outright
    escapes = deltas == -math.inf
    if escapes.any():
        return escapes / escapes.sum()
    scaled = -deltas / temperature
    weights = np.exp(scaled - scaled.max())
    return weights / weights.sum()


def _draw(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    # inverse CDF per row; clip guards a last cumulative value a hair below 1
    cumulative = np.cumsum(probs, axis=-1)
    labels = (cumulative <= u[..., None]).sum(axis=-1)
    return np.minimum(labels, probs.shape[-1] - 1)


class ClassStats:
    """
    Member counts, attribute sums and sums of squares per class, with each
    class's share of the message length.

    Shares of empty classes come from the chain model's re-seeded parameters.
    """

    def __init__(self, state: ChainState, data: Dataset):
        k = state.k
        labels = state.assignment.labels
        self.k = k
        self.data = data
        self.counts = np.bincount(labels, minlength=k).astype(float)
        self.sums = np.zeros((k, data.n_attrs))
        self.sumsqs = np.zeros((k, data.n_attrs))
        np.add.at(self.sums, labels, data.values)
        np.add.at(self.sumsqs, labels, data.values ** 2)
        self.shares = np.empty(k)
        full = self.counts > 0
        self.shares[full] = derived_class_shares(self.counts[full], self.sums[full],
                                                 self.sumsqs[full], data, k)
        if not full.all():
            empty = ~full
            self.shares[empty] = class_shares(self.counts[empty], state.model.mu[empty],
                                              state.model.sigma[empty],
                                              np.zeros((int(empty.sum()), data.n_attrs)), data, k)
        self._joined = None
        self._left = None

    def deltas(self, x: np.ndarray, a: int) -> np.ndarray:
        """
        Change of the total length when observation x moves from class a to
        each class. Moves that would empty a class are ruled out (inf).
        """
        deltas = np.full(self.k, math.inf)
        deltas[a] = 0.0
        if self.counts[a] <= 1:
            return deltas
        self._joined = derived_class_shares(self.counts + 1.0, self.sums + x, self.sumsqs + x * x,
                                            self.data, self.k)
        self._left = derived_class_shares(self.counts[a:a + 1] - 1.0, self.sums[a:a + 1] - x,
                                          self.sumsqs[a:a + 1] - x * x, self.data, self.k)[0]
        with np.errstate(invalid='ignore'):
            moved = (self._joined - self.shares) + (self._left - self.shares[a])
        # both sides outside the priors: no preference
        moved = np.nan_to_num(moved, nan=0.0, posinf=math.inf, neginf=-math.inf)
        others = np.arange(self.k) != a
        deltas[others] = moved[others]
        return deltas

    def move(self, x: np.ndarray, a: int, b: int) -> None:
        """Apply the move priced by the last deltas() call."""
        self.counts[a] -= 1.0
        self.counts[b] += 1.0
        self.sums[a] -= x
        self.sums[b] += x
        self.sumsqs[a] -= x * x
        self.sumsqs[b] += x * x
        self.shares[a] = self._left
        self.shares[b] = self._joined[b]


def assign_observation(i: int, state: ChainState, data: Dataset) -> int:
    """Draw a new label for observation i from its tempered conditional under the chain's rule."""
    if not 0 <= i < data.n_obs:
        raise MixtureInputError(f"Observation index {i} out of range")
    if state.rule == 'fixed':
        deltas = class_deltas(data.values[i:i + 1], state.model, data.eps)
        probs = tempered_posteriors(deltas, state.temperature)
    else:
        stats = ClassStats(state, data)
        probs = _conditional(stats.deltas(data.values[i], int(state.assignment.labels[i])),
                             state.temperature)[None, :]
    return int(_draw(probs, np.array([state.rng.random()]))[0])


def _exact_labels(state: ChainState, data: Dataset, u: np.ndarray) -> np.ndarray:
    stats = ClassStats(state, data)
    labels = state.assignment.labels.copy()
    for i in range(data.n_obs):
        x = data.values[i]
        a = int(labels[i])
        probs = _conditional(stats.deltas(x, a), state.temperature)
        b = int(_draw(probs[None, :], u[i:i + 1])[0])
        if b != a:
            stats.move(x, a, b)
            labels[i] = b
    return labels


def sweep(state: ChainState, data: Dataset) -> ChainState:
    """
    One Gibbs sweep: reassign every observation in index order, then
    recalculate the model, then relabel at random if the chain does so.

    One uniform is consumed per observation in index order, exactly as
    repeated assign_observation calls would. Under the fixed rule the
    per-class deltas are computed once for all observations.
    """
    u = state.rng.random(data.n_obs)
    if state.rule == 'fixed':
        probs = tempered_posteriors(class_deltas(data.values, state.model, data.eps), state.temperature)
        labels = _draw(probs, u)
    else:
        labels = _exact_labels(state, data, u)
    assignment = Assignment(labels, state.k)
    model = derive_model(data, assignment, state.rng)
    if state.relabel and state.k > 1:
        perm = state.rng.permutation(state.k)
        assignment = assignment.relabel(perm)
        model = model.relabel(perm)
    return replace(state, assignment=assignment, model=model, sweep_count=state.sweep_count + 1)


def visit_length(state: ChainState, data: Dataset) -> MessageLength:
    return message_length(data, state.assignment, state.model, state.k_max)


def sample_of(state: ChainState, data: Dataset,
              length: Optional[MessageLength] = None) -> TraceSample:
    length = length or visit_length(state, data)
    return TraceSample(state.k, state.sweep_count, length.total, length.part1, length.part2,
                       canonical_partition_hash(state.assignment))


def run_sweeps(state: ChainState, data: Dataset, n_sweeps: int, collect: bool = True,
               track_best: bool = False, best: Optional[BestVisit] = None
               ) -> Tuple[ChainState, List[TraceSample], Optional[BestVisit]]:
    """advance() that can also keep the shortest visit seen."""
    if n_sweeps < 0:
        raise MixtureInputError("n_sweeps must be non-negative")
    trace = []
    for _ in range(n_sweeps):
        state = sweep(state, data)
        if not (collect or track_best):
            continue
        length = visit_length(state, data)
        logger.debug(f"k={state.k} sweep={state.sweep_count} total={length.total:.3f}")
        if collect:
            trace.append(sample_of(state, data, length))
        if track_best and length.is_finite:
            candidate = BestVisit(state.k, length, state.model, state.assignment, state.sweep_count)
            if candidate.better_than(best):
                best = candidate
    return state, trace, best


def advance(state: ChainState, data: Dataset, n_sweeps: int,
            collect: bool = True) -> Tuple[ChainState, List[TraceSample]]:
    """Apply n_sweeps sweeps; with collect, record one TraceSample per sweep."""
    state, trace, _ = run_sweeps(state, data, n_sweeps, collect)
    return state, trace


def run_anneal(state: ChainState, data: Dataset, t0: float = 2.0, cool: float = 0.99,
               iters_per_temp: int = 50, t_min: float = 0.01,
               deadline: Optional[float] = None, progress: bool = False) -> AnnealResult:
    """
    Simulated annealing on one chain.

    Runs iters_per_temp sweeps at each temperature of the geometric schedule
    and keeps the shortest (model, assignment) visited, the starting state
    included.

    Args:
        state: Starting chain state (consumed)
        data: Dataset
        t0, cool, iters_per_temp, t_min: Cooling schedule
        deadline: Optional time.monotonic() value after which no new
            temperature block starts
        progress: Show a tqdm bar over temperature blocks

    Returns:
        AnnealResult with the best visit and the final state, left at the
        last temperature used
    """
    schedule = AnnealSchedule(t0, cool, iters_per_temp, t_min)
    temperatures = schedule.temperatures()
    start_length = visit_length(state, data)
    best = None
    if start_length.is_finite:
        best = BestVisit(state.k, start_length, state.model, state.assignment, state.sweep_count)

    blocks = 0
    for block, t in enumerate(tqdm(temperatures, desc=f"anneal k={state.k}", disable=not progress)):
        if deadline is not None and time.monotonic() >= deadline:
            logger.info(f"Annealing k={state.k} stopped by deadline after {blocks} blocks")
            break
        state = state.with_temperature(t)
        state, _, best = run_sweeps(state, data, schedule.iters_per_temp, collect=False,
                                    track_best=True, best=best)
        blocks += 1
        if block % 50 == 0:
            shown = best.length.total if best else math.inf
            logger.info(f"Annealing k={state.k} block {block} t={t:.4f} best={shown:.2f} nits")

    if best is None:
        raise MixtureInputError("Annealing never visited a model inside the prior ranges")
    return AnnealResult(best, state, blocks, blocks == len(temperatures))
