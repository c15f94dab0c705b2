"""Greedy and exhaustive relay-subset selection driven by the network MMSE.

Every candidate subset is scored by re-solving the budget-constrained weights
for that subset (full budget P_T each time) and summing the active per-relay
MSEs. Two greedy strategies remove one relay per iteration:

* ``lmmsec_g`` scores each active relay by the MMSE it would achieve alone
  and drops the relay with the largest standalone value.
* ``smmsec_g`` tries every one-relay removal and keeps the candidate set with
  the smallest resulting MMSE (backward elimination).

Both accept a removal only when the re-solved MMSE strictly decreases and
never go below the cardinality floor. ``exhaustive_search`` enumerates all
nonempty subsets (or exactly ``m_fix``-sized ones) as the reference optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .channel import ChannelRealization, NetworkScenario
from .consensus import ConsensusConfig, Topology, run_consensus, solve_centralized
from .errors import ConfigError
from .metrics import BeamWeights, LocalEstimator, network_mmse
from .relayset import RelaySet

EXHAUSTIVE_GUARD = 20


@dataclass
class SelectionConfig:
    """Knobs shared by the selection routines."""

    m_min: int = 1
    m_fix: int | None = None
    solver_mode: str = "centralized"
    consensus_cfg: ConsensusConfig | None = None
    topology: Topology | None = None

    def __post_init__(self):
        if self.m_min < 1:
            raise ConfigError(f"cardinality floor must be >= 1, got {self.m_min}")
        if self.m_fix is not None and self.m_fix < 1:
            raise ConfigError(f"fixed cardinality must be >= 1, got {self.m_fix}")
        if self.solver_mode not in ("centralized", "consensus"):
            raise ConfigError(f"unknown solver mode {self.solver_mode!r}")
        if self.solver_mode == "consensus" and self.consensus_cfg is None:
            raise ConfigError("consensus mode needs a ConsensusConfig")


@dataclass
class HistoryRecord:
    """One accepted selection state: (iteration, active mask, achieved mmse)."""

    iteration: int
    mask: int
    mmse: float


@dataclass
class SelectionResult:
    selected: RelaySet
    weights: BeamWeights
    mmse: float
    history: list[HistoryRecord] = field(default_factory=list)


@dataclass
class SolveInfo:
    """Solver bookkeeping for one candidate evaluation."""

    weights: BeamWeights
    mmse: float
    iterations: int
    converged: bool


def _solve(candidate, est, channels, scenario, cfg) -> SolveInfo:
    if cfg.solver_mode == "centralized":
        weights, _ = solve_centralized(candidate, est, channels, scenario.total_power)
        iters, converged = 0, True
    else:
        ccfg = cfg.consensus_cfg
        if ccfg.total_power != scenario.total_power:
            ccfg = ConsensusConfig(
                total_power=scenario.total_power,
                mu_lambda=ccfg.mu_lambda,
                mu_tau=ccfg.mu_tau,
                max_iters=ccfg.max_iters,
                tol_consensus=ccfg.tol_consensus,
                tol_power=ccfg.tol_power,
                lambda_floor=ccfg.lambda_floor,
            )
        topology = cfg.topology or Topology.ring(candidate.n_relays)
        weights, state, converged = run_consensus(candidate, est, channels, ccfg, topology)
        iters = state.iteration
    mmse = network_mmse(candidate, weights, est, channels, scenario)
    return SolveInfo(weights=weights, mmse=mmse, iterations=iters, converged=converged)


def evaluate_set(
    candidate: RelaySet,
    est: LocalEstimator,
    channels: ChannelRealization,
    scenario: NetworkScenario,
    cfg: SelectionConfig,
) -> tuple[BeamWeights, float]:
    """Re-solve the weights for ``candidate`` at full budget and score it."""
    info = _solve(candidate, est, channels, scenario, cfg)
    return info.weights, info.mmse


def _argbest(values, candidates, largest):
    """Index of the extreme value; ties go to the lowest relay index."""
    arr = np.asarray(values)
    best = np.max(arr) if largest else np.min(arr)
    for i, v in enumerate(arr):
        if v == best:
            return candidates[i]
    raise AssertionError("unreachable")


def lmmsec_g(
    est: LocalEstimator,
    channels: ChannelRealization,
    scenario: NetworkScenario,
    cfg: SelectionConfig,
) -> SelectionResult:
    """Greedy removal by largest standalone MMSE.

    Each iteration evaluates every active relay as if it were the only one
    transmitting (full budget), removes the worst scorer, re-solves the
    remaining set, and keeps the removal only on strict improvement.
    """
    m = channels.n_relays
    current = RelaySet.full(m)
    info = _solve(current, est, channels, scenario, cfg)
    history = [HistoryRecord(0, current.mask, info.mmse)]
    iteration = 0
    while current.count > cfg.m_min:
        iteration += 1
        active_idx = list(current.indices)
        scores = []
        for i in active_idx:
            single = RelaySet.from_indices([i], m)
            scores.append(_solve(single, est, channels, scenario, cfg).mmse)
        worst = _argbest(scores, active_idx, largest=True)
        candidate = current.without(worst)
        cand_info = _solve(candidate, est, channels, scenario, cfg)
        if cand_info.mmse < info.mmse:
            current, info = candidate, cand_info
            history.append(HistoryRecord(iteration, current.mask, info.mmse))
        else:
            break
    return SelectionResult(current, info.weights, info.mmse, history)


def smmsec_g(
    est: LocalEstimator,
    channels: ChannelRealization,
    scenario: NetworkScenario,
    cfg: SelectionConfig,
) -> SelectionResult:
    """Backward elimination: drop the relay whose removal helps the most."""
    m = channels.n_relays
    current = RelaySet.full(m)
    info = _solve(current, est, channels, scenario, cfg)
    history = [HistoryRecord(0, current.mask, info.mmse)]
    iteration = 0
    while current.count > cfg.m_min:
        iteration += 1
        active_idx = list(current.indices)
        cand_infos = [
            _solve(current.without(i), est, channels, scenario, cfg) for i in active_idx
        ]
        removed = _argbest([c.mmse for c in cand_infos], active_idx, largest=False)
        cand_info = cand_infos[active_idx.index(removed)]
        if cand_info.mmse < info.mmse:
            current, info = current.without(removed), cand_info
            history.append(HistoryRecord(iteration, current.mask, info.mmse))
        else:
            break
    return SelectionResult(current, info.weights, info.mmse, history)


def exhaustive_search(
    est: LocalEstimator,
    channels: ChannelRealization,
    scenario: NetworkScenario,
    cfg: SelectionConfig,
    allow_large: bool = False,
) -> SelectionResult:
    """Reference optimum over every admissible subset.

    Subsets are visited by ascending cardinality, then lexicographically, and
    only strict improvements are kept, so equal-MMSE ties resolve to the
    smallest, lowest-indexed subset. Refuses M > 20 unless ``allow_large``.
    """
    m = channels.n_relays
    if m > EXHAUSTIVE_GUARD and not allow_large:
        raise ConfigError(
            f"exhaustive search over {m} relays needs allow_large=True "
            f"(2**{m} - 1 subsets)"
        )
    sizes = range(1, m + 1) if cfg.m_fix is None else [cfg.m_fix]
    best = None
    best_info = None
    history = []
    n_evaluated = 0
    for size in sizes:
        if size > m:
            raise ConfigError(f"fixed cardinality {size} exceeds relay count {m}")
        for combo in combinations(range(m), size):
            candidate = RelaySet.from_indices(combo, m)
            info = _solve(candidate, est, channels, scenario, cfg)
            if best_info is None or info.mmse < best_info.mmse:
                best, best_info = candidate, info
                history.append(HistoryRecord(n_evaluated, candidate.mask, info.mmse))
            n_evaluated += 1
    return SelectionResult(best, best_info.weights, best_info.mmse, history)
