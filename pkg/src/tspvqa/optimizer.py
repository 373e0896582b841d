"""Classical outer loop: finite-difference gradient descent over the angles."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np

from .cost import (
    CostConfig,
    DistanceMatrix,
    PaddedProblem,
    detect_violated_subsets,
    mask_to_cities,
    pad_problem,
    subset_mask,
    total_cost_batch,
)
from .measurement import CorrelationMatrix, correlation_exact, correlation_sampled, overlap, sample_counts_batch
from .oracle import RoutePermutation, nearest_permutation
from .state import build_trial_state, correlation_batch, param_count

MAX_LAZY_ROUNDS = 32
# plateau thresholds quoted for a learning rate of 0.05; the per-step cost
# change scales with the rate, so the default threshold does too
PLATEAU_REF_RATE = 0.05
PLATEAU_REF_TOL = {"exact": 1e-4, "sampled": 1.0}


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.001
    fd_step: float = 0.05
    max_iters: int = 500
    cost_tol: Optional[float] = None  # None: scaled from PLATEAU_REF_TOL
    patience: int = 10
    n_starts: int = 5
    shots: Optional[int] = None  # None: exact X
    seed: int = 0
    protocol: Literal["universal", "projectors"] = "universal"
    cost: CostConfig = field(default_factory=CostConfig)
    select: Literal["length", "cost"] = "length"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.fd_step <= 0:
            raise ValueError("learning_rate and fd_step must be positive")
        if self.max_iters < 0 or self.patience < 1 or self.n_starts < 1:
            raise ValueError("max_iters >= 0, patience >= 1 and n_starts >= 1 required")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.protocol not in ("universal", "projectors"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.select not in ("length", "cost"):
            raise ValueError(f"unknown selection rule {self.select!r}")

    @property
    def exact(self) -> bool:
        return self.shots is None

    @property
    def plateau_tol(self) -> float:
        if self.cost_tol is not None:
            return self.cost_tol
        ref = PLATEAU_REF_TOL["exact" if self.exact else "sampled"]
        return ref * self.learning_rate / PLATEAU_REF_RATE


@dataclass
class IterationRecord:
    iteration: int
    alpha: np.ndarray
    cost: float
    grad_norm: float


@dataclass
class RunTrace:
    records: list[IterationRecord]
    final_x: CorrelationMatrix
    route: RoutePermutation
    overlap: float
    converged: bool
    active_history: list[tuple[int, ...]]
    seed: int
    start: int = 0
    round: int = 0

    @property
    def final_cost(self) -> float:
        return self.records[-1].cost

    @property
    def alpha(self) -> np.ndarray:
        return self.records[-1].alpha


def random_init(n_cities: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, np.pi, param_count(n_cities))


def finite_diff_gradient(cost_at: Callable[[np.ndarray], float], alpha, h: float) -> np.ndarray:
    if h <= 0:
        raise ValueError("fd step must be positive")
    alpha = np.asarray(alpha, dtype=float)
    grad = np.empty_like(alpha)
    for k in range(alpha.size):
        e = np.zeros_like(alpha)
        e[k] = h
        hi, lo = cost_at(alpha + e), cost_at(alpha - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise FloatingPointError(f"non-finite cost while differentiating coordinate {k}")
        grad[k] = (hi - lo) / (2 * h)
    return grad


def measure(n_cities: int, alpha, config: OptimizerConfig, seed=None) -> CorrelationMatrix:
    """X at ``alpha`` through the configured protocol and statistics."""
    if config.protocol == "projectors":
        from .fourcity import emulate_16_projectors

        if n_cities != 4:
            raise ValueError("the 16-projector protocol exists only for N=4")
        return emulate_16_projectors(alpha, config.shots, seed)
    state = build_trial_state(n_cities, alpha)
    if config.exact:
        return correlation_exact(state)
    return correlation_sampled(state, config.shots, seed)[0]


def measure_batch(n_cities: int, alphas: np.ndarray, config: OptimizerConfig, seed=None) -> np.ndarray:
    """X for every row of ``alphas`` with one shared seed; shape (B, dim, dim).

    Sharing the seed means every probe reuses the same uniforms, which keeps
    finite differences of sampled costs well behaved.
    """
    alphas = np.atleast_2d(alphas)
    if config.protocol == "projectors":
        from .fourcity import emulate_16_projectors_batch

        if n_cities != 4:
            raise ValueError("the 16-projector protocol exists only for N=4")
        return emulate_16_projectors_batch(alphas, config.shots, seed)
    xs = correlation_batch(n_cities, alphas)
    if config.exact:
        return xs
    dim = xs.shape[-1]
    return dim * sample_counts_batch(xs / dim, config.shots, seed) / config.shots


def _probe_offsets(k: int, h: float) -> np.ndarray:
    # rows: 0, then +h e_j, then -h e_j for each coordinate j
    eye = h * np.eye(k)
    return np.concatenate([np.zeros((1, k)), eye, -eye])


@dataclass
class _Descent:
    """Outcome of one walker's descent."""

    records: list[IterationRecord]
    converged: bool


def _descend_all(padded: PaddedProblem, config: OptimizerConfig, cost_cfg: CostConfig,
                 alphas: np.ndarray, noise: list[np.random.Generator]) -> list[_Descent]:
    """Advance every walker to plateau or ``max_iters``, in lockstep.

    Exact mode evaluates all probes of all live walkers in one batch; each
    walker's arithmetic does not depend on which others share the batch.
    """
    n = padded.n_cities
    n_walkers, k = alphas.shape
    h = config.fd_step
    alphas = alphas.copy()
    offsets = _probe_offsets(k, h)
    done = np.zeros(n_walkers, dtype=bool)
    converged = np.zeros(n_walkers, dtype=bool)
    quiet = np.zeros(n_walkers, dtype=int)
    prev = np.full(n_walkers, np.nan)
    history = []  # (iteration, walker indices, alphas, costs, gradient norms)
    for it in range(config.max_iters + 1):
        live = np.flatnonzero(~done)
        if live.size == 0:
            break
        last = it == config.max_iters
        a = alphas[live]
        pts = a[:, None, :] if last else a[:, None, :] + offsets[None]
        if config.exact:
            flat = total_cost_batch(padded, measure_batch(n, pts.reshape(-1, k), config), cost_cfg)
            costs = flat.reshape(live.size, -1)
        else:
            # one seed per iteration and walker, shared by the value and all its probes
            costs = np.stack([total_cost_batch(padded, measure_batch(n, p, config, int(noise[w].integers(2**63))),
                                               cost_cfg) for w, p in zip(live, pts)])
        if not np.all(np.isfinite(costs)):
            raise FloatingPointError("non-finite cost during gradient estimation")
        c = costs[:, 0]
        if last:
            history.append((it, live, a, c, np.full(live.size, np.nan)))
            done[live] = True
            break
        g = (costs[:, 1 : k + 1] - costs[:, k + 1 :]) / (2 * h)
        history.append((it, live, a, c, np.linalg.norm(g, axis=1)))
        if it > 0:
            flat_step = np.abs(c - prev[live]) < config.plateau_tol
            quiet[live] = np.where(flat_step, quiet[live] + 1, 0)
        prev[live] = c
        stop = quiet[live] >= config.patience
        done[live[stop]] = converged[live[stop]] = True
        move = live[~stop]
        alphas[move] = a[~stop] - config.learning_rate * g[~stop]
    records: list[list[IterationRecord]] = [[] for _ in range(n_walkers)]
    for it, live, a, c, gn in history:
        for row, w in enumerate(live):
            records[w].append(IterationRecord(it, a[row].copy(), float(c[row]), float(gn[row])))
    return [_Descent(r, bool(cv)) for r, cv in zip(records, converged)]


def _run_round(padded: PaddedProblem, config: OptimizerConfig, cost_cfg: CostConfig,
               round_seq: np.random.SeedSequence, round_no: int) -> list[RunTrace]:
    n = padded.n_cities
    inits, noise, finals = [], [], []
    for seq in round_seq.spawn(config.n_starts):
        init_seq, noise_seq, final_seq = seq.spawn(3)
        inits.append(random_init(n, init_seq))
        noise.append(np.random.default_rng(noise_seq))
        finals.append(None if config.exact else int(final_seq.generate_state(1)[0]))
    descents = _descend_all(padded, config, cost_cfg, np.array(inits), noise)
    traces = []
    for i, (dsc, fs) in enumerate(zip(descents, finals)):
        x = measure(n, dsc.records[-1].alpha, config, fs)
        route = nearest_permutation(x.values)
        traces.append(RunTrace(dsc.records, x, route, overlap(x, route), dsc.converged,
                               [cost_cfg.active_subsets], config.seed, i, round_no))
    return traces


def _tour_length(trace: RunTrace, d: np.ndarray) -> float:
    n = d.shape[0]
    head = trace.route.sigma[:n]
    if any(k >= n for k in head):
        return np.inf
    sub = RoutePermutation(head)
    return sub.length(d) if sub.valid_tour else np.inf


def optimize(problem: DistanceMatrix, config: OptimizerConfig = OptimizerConfig()) -> RunTrace:
    """Multi-start descent with lazily activated subtour terms.

    Each round runs ``n_starts`` descents. The round winner (lowest final
    cost) is rounded to a permutation; in lazy mode, if it contains a
    subtour, the smallest such cycle's city set becomes an active subset and
    a new round starts.

    With ``select="length"`` the returned trace is the one, over all rounds,
    whose rounded route is a valid tour of least length (ties: higher
    overlap, lower cost, then earlier round and start); if no start
    produced a valid tour, the last round winner. ``select="cost"`` returns the last round winner.
    """
    padded = pad_problem(problem)
    n = problem.n_cities
    cost_cfg = config.cost
    root = np.random.SeedSequence(config.seed)
    history: list[tuple[int, ...]] = []
    pool: list[RunTrace] = []
    winner: Optional[RunTrace] = None
    for r in range(MAX_LAZY_ROUNDS):
        history.append(cost_cfg.active_subsets)
        traces = _run_round(padded, config, cost_cfg, root.spawn(1)[0], r)
        pool.extend(traces)
        winner = min(traces, key=lambda t: t.final_cost)
        if cost_cfg.subtour_mode != "lazy" or config.max_iters == 0:
            break
        new = [m for m in map(subset_mask, _by_size(detect_violated_subsets(winner.route, n)))
               if m not in cost_cfg.active_subsets]
        if not new:
            break
        cost_cfg = cost_cfg.with_subsets(new[:1])
    assert winner is not None
    best = winner
    if config.select == "length":
        lengths = [_tour_length(t, problem.d) for t in pool]
        feasible = [(L, -t.overlap, t.final_cost, t.round, t.start, t)
                    for L, t in zip(lengths, pool) if np.isfinite(L)]
        if feasible:
            best = min(feasible, key=lambda e: e[:5])[-1]
    best.active_history = history
    return best


def _by_size(subsets: list[frozenset[int]]) -> list[frozenset[int]]:
    return sorted(subsets, key=lambda s: (len(s), sorted(s)))


def active_cities(history: list[tuple[int, ...]]) -> list[list[list[int]]]:
    return [[sorted(mask_to_cities(m)) for m in masks] for masks in history]
