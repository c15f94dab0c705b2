"""Relay weight solvers: centralized water-level bisection and the
distributed primal-dual consensus iteration.

The constrained problem is: minimize the sum of active per-relay forwarding
MSEs subject to a shared transmit budget sum_m |w_m|^2 <= P_T. The closed form
per relay is w_m = alpha_m g_m^* c_m / (lambda + alpha_m |g_m|^2); the
centralized solver finds the multiplier by bisection. The distributed variant
lets every relay keep a local copy of the full weight-magnitude vector and
exchanges it with neighbours, enforcing agreement through per-link multipliers
and the budget through a per-relay multiplier, all updated Jacobi-style with
constant step sizes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import ConfigError, DivergenceError, NumericError, SingularityError
from .metrics import BeamWeights, LocalEstimator, network_mmse
from .relayset import RelaySet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Topology:
    """Directed neighbour lists; the undirected union is the message graph."""

    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        m = len(self.neighbors)
        canon = []
        for i, nbrs in enumerate(self.neighbors):
            seen = tuple(int(q) for q in nbrs)
            for q in seen:
                if q == i:
                    raise ConfigError(f"relay {i} lists itself as a neighbour")
                if not 0 <= q < m:
                    raise ConfigError(f"relay {i} lists out-of-range neighbour {q}")
            if len(set(seen)) != len(seen):
                raise ConfigError(f"relay {i} lists a neighbour twice")
            canon.append(seen)
        object.__setattr__(self, "neighbors", tuple(canon))

    @property
    def n_relays(self) -> int:
        return len(self.neighbors)

    @classmethod
    def ring(cls, n_relays: int) -> "Topology":
        """Each relay talks to its successor, the last wrapping to the first."""
        if n_relays < 1:
            raise ConfigError("topology needs at least one relay")
        if n_relays == 1:
            return cls(((),))
        return cls(tuple(((m + 1) % n_relays,) for m in range(n_relays)))

    def link_mask(self, active: RelaySet) -> np.ndarray:
        """Boolean (M, M) mask of directed links whose endpoints are both active."""
        if active.n_relays != self.n_relays:
            raise ConfigError("active set size does not match topology")
        m = self.n_relays
        mask = np.zeros((m, m), dtype=bool)
        for i, nbrs in enumerate(self.neighbors):
            for q in nbrs:
                mask[i, q] = True
        act = active.alpha.astype(bool)
        return mask & act[:, None] & act[None, :]

    def is_connected(self, active: RelaySet) -> bool:
        """True when the undirected union graph connects all active relays."""
        idx = list(active.indices)
        if len(idx) <= 1:
            return True
        mask = self.link_mask(active)
        und = mask | mask.T
        seen = {idx[0]}
        frontier = [idx[0]]
        while frontier:
            i = frontier.pop()
            for q in np.flatnonzero(und[i]):
                if q not in seen:
                    seen.add(int(q))
                    frontier.append(int(q))
        return all(i in seen for i in idx)


@dataclass
class ConsensusConfig:
    """Step sizes, tolerances, and iteration budget of the consensus solver."""

    total_power: float = 1.0
    mu_lambda: float = 0.001
    mu_tau: float = 0.001
    max_iters: int = 10_000
    tol_consensus: float = 1e-6
    tol_power: float = 1e-6
    lambda_floor: float = 1e-8

    def __post_init__(self):
        if self.total_power <= 0:
            raise ConfigError("total power must be positive")
        if self.mu_lambda <= 0 or self.mu_tau <= 0:
            raise ConfigError("step sizes must be positive")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol_consensus <= 0 or self.tol_power <= 0:
            raise ConfigError("tolerances must be positive")
        if self.lambda_floor <= 0:
            raise ConfigError("lambda floor must be positive")


@dataclass
class ConsensusState:
    """Full Jacobi state: one auxiliary weight vector per relay.

    Column m of ``wt`` is relay m's local copy of the network weight vector
    (entry t is its estimate of relay t's weight magnitude, except the own
    entry t = m which carries the complex weight). ``u`` holds the entrywise
    magnitudes, ``lam`` the per-relay budget multipliers, and ``tau[m, q]``
    the length-M agreement multiplier for the directed link m -> q.
    """

    wt: np.ndarray
    lam: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.wt = np.asarray(self.wt, dtype=complex)
        self.lam = np.asarray(self.lam, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        m = self.wt.shape[0]
        if self.wt.shape != (m, m) or self.u.shape != (m, m):
            raise ConfigError("wt and u must be (M, M) arrays")
        if self.lam.shape != (m,) or self.tau.shape != (m, m, m):
            raise ConfigError("lam must be (M,), tau must be (M, M, M)")
        if np.any(self.lam < 0):
            raise ConfigError("budget multipliers must be >= 0")

    def deployed_weights(self, active: RelaySet) -> BeamWeights:
        """Each relay transmits the own entry of its local copy."""
        return BeamWeights(np.diagonal(self.wt) * active.alpha)

    def deployed_power(self, active: RelaySet) -> float:
        with np.errstate(over="ignore"):
            return float(np.sum(active.alpha * np.abs(np.diagonal(self.wt)) ** 2))


def closed_form_weights(
    active: RelaySet,
    est: LocalEstimator,
    channels: ChannelRealization,
    lam: float,
) -> BeamWeights:
    """Per-relay minimizer at a fixed budget multiplier lambda >= 0.

    w_m = alpha_m g_m^* c_m / (lambda + alpha_m |g_m|^2). Raises
    SingularityError at lambda = 0 if an active relay has zero gain.
    """
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    alpha = active.alpha
    gabs2 = np.abs(channels.g) ** 2
    if lam == 0 and np.any((alpha == 1) & (gabs2 == 0)):
        raise SingularityError(
            "closed form at lambda = 0 is singular for an active relay with zero gain"
        )
    w = np.zeros(active.n_relays, dtype=complex)
    act = alpha == 1
    w[act] = np.conj(channels.g[act]) * est.corr[act] / (lam + gabs2[act])
    return BeamWeights(w)


def _constrained_power(active_mask, corr, gabs2, lam):
    """Total transmit power of the closed-form weights at multiplier lam > 0."""
    num = corr[active_mask] ** 2 * gabs2[active_mask]
    return float(np.sum(num / (lam + gabs2[active_mask]) ** 2))


def solve_centralized(
    active: RelaySet,
    est: LocalEstimator,
    channels: ChannelRealization,
    total_power: float,
    tol_power: float = 1e-6,
    max_doublings: int = 200,
) -> tuple[BeamWeights, float]:
    """Budget-constrained MMSE weights via bisection on the multiplier.

    Returns (weights, lambda_star). If the unconstrained minimizer already
    fits the budget, lambda_star = 0. Relays with zero gain get zero weight.
    The transmit power of lambda > 0 solutions is strictly decreasing in
    lambda, which bisection exploits.
    """
    if total_power <= 0:
        raise ConfigError("total power must be positive")
    alpha = active.alpha
    act = alpha == 1
    gabs2 = np.abs(channels.g) ** 2
    corr = est.corr

    w0 = np.zeros(active.n_relays, dtype=complex)
    usable = act & (gabs2 > 0)
    w0[usable] = np.conj(channels.g[usable]) * corr[usable] / gabs2[usable]
    p0 = float(np.sum(np.abs(w0) ** 2))
    if p0 <= total_power:
        return BeamWeights(w0), 0.0

    hi = 1.0
    doublings = 0
    while _constrained_power(act, corr, gabs2, hi) > total_power:
        hi *= 2.0
        doublings += 1
        if doublings > max_doublings:
            raise NumericError(
                f"failed to bracket the power constraint after {max_doublings} doublings"
            )
    lo = 0.0
    lam = hi
    for _ in range(5000):
        lam = 0.5 * (lo + hi)
        p = _constrained_power(act, corr, gabs2, lam)
        if abs(p - total_power) <= tol_power:
            break
        if p > total_power:
            lo = lam
        else:
            hi = lam
    else:
        raise NumericError("bisection failed to meet the power tolerance")
    return closed_form_weights(active, est, channels, lam), float(lam)


def _unconstrained_power(active: RelaySet, est: LocalEstimator, channels: ChannelRealization) -> float:
    gabs2 = np.abs(channels.g) ** 2
    act = (active.alpha == 1) & (gabs2 > 0)
    return float(np.sum(est.corr[act] ** 2 / gabs2[act]))


def consensus_step(
    state: ConsensusState,
    active: RelaySet,
    est: LocalEstimator,
    channels: ChannelRealization,
    cfg: ConsensusConfig,
    topology: Topology,
) -> ConsensusState:
    """One Jacobi sweep: every update reads only the previous iteration.

    New auxiliary vectors come from the previous multipliers; the budget
    multiplier moves by mu_lambda times the previous copy's power surplus
    (magnitude-clipped at zero); the link multipliers move by mu_tau times the
    previous magnitude disagreements. Columns of inactive relays stay zero and
    their multipliers stay frozen.
    """
    m = active.n_relays
    alpha = active.alpha.astype(float)
    act = active.alpha == 1
    g = channels.g
    gabs2 = np.abs(g) ** 2
    links = topology.link_mask(active)

    # Overflow to inf is detected below and raised as DivergenceError, so the
    # intermediate numpy warnings carry no extra information.
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        lam_eff = np.maximum(state.lam, cfg.lambda_floor)
        tau_sum = np.einsum("mqt->mt", state.tau * links[:, :, None])

        # Auxiliary vectors from the previous multipliers.
        own_tau = np.diagonal(tau_sum)
        own = np.zeros(m, dtype=complex)
        own[act] = (
            alpha[act]
            * np.conj(g[act])
            / (lam_eff[act] + alpha[act] * gabs2[act])
            * (est.corr[act] - 0.5 * own_tau[act])
        )
        cross = -(alpha[:, None] * tau_sum) / (2.0 * lam_eff[:, None])
        wt_new = cross.T.astype(complex).copy()
        diag = np.arange(m)
        wt_new[diag, diag] = own
        wt_new[:, ~act] = 0.0

        # Budget multipliers from the previous copies' powers.
        col_power = np.sum(np.abs(state.wt) ** 2, axis=0)
        lam_new = state.lam.copy()
        lam_new[act] = np.abs(
            state.lam[act] + cfg.mu_lambda * (col_power[act] - cfg.total_power)
        )

        # Link multipliers from the previous magnitude disagreements.
        u_old = state.u
        diffs = u_old.T[:, None, :] - u_old.T[None, :, :]  # diffs[m, q, t] = u_m[t] - u_q[t]
        tau_new = state.tau + cfg.mu_tau * diffs * links[:, :, None]

    if not (
        np.all(np.isfinite(wt_new))
        and np.all(np.isfinite(lam_new))
        and np.all(np.isfinite(tau_new))
    ):
        raise DivergenceError(
            f"consensus iteration diverged (mu_lambda={cfg.mu_lambda}, mu_tau={cfg.mu_tau})"
        )
    return ConsensusState(
        wt=wt_new, lam=lam_new, tau=tau_new, u=np.abs(wt_new), iteration=state.iteration + 1
    )


def _disagreement(state: ConsensusState, active: RelaySet) -> float:
    """Largest entrywise gap between any two active relays' magnitude copies."""
    idx = np.flatnonzero(active.alpha)
    if idx.size <= 1:
        return 0.0
    cols = state.u[:, idx]
    return float(np.max(cols.max(axis=1) - cols.min(axis=1)))


def initial_state(active: RelaySet, topology: Topology) -> ConsensusState:
    """All-ones start: unit copies, unit multipliers on every active link."""
    m = active.n_relays
    act = active.alpha == 1
    wt = np.zeros((m, m), dtype=complex)
    wt[:, act] = 1.0
    lam = np.ones(m)
    tau = np.broadcast_to(topology.link_mask(active)[:, :, None], (m, m, m)).astype(float)
    return ConsensusState(wt=wt, lam=lam, tau=tau, u=np.abs(wt), iteration=0)


def run_consensus(
    active: RelaySet,
    est: LocalEstimator,
    channels: ChannelRealization,
    cfg: ConsensusConfig,
    topology: Topology,
    trace_sink: list | None = None,
    scenario=None,
) -> tuple[BeamWeights, ConsensusState, bool]:
    """Iterate consensus steps until agreement and budget tolerance, or budget out.

    Convergence requires the magnitude copies of all active relays to agree
    within tol_consensus and the deployed power to sit within tol_power of
    min(P_T, unconstrained power). When ``trace_sink`` is a list, one
    (iteration, disagreement, power, mmse) row is appended per iteration
    (mmse requires ``scenario``; it is NaN otherwise).
    """
    if active.count == 0:
        raise ConfigError("consensus needs a nonempty active set")
    if topology.n_relays != active.n_relays:
        raise ConfigError("topology size does not match the relay count")
    if not topology.is_connected(active):
        logger.warning(
            "active relays %s are not connected by the topology; consensus cannot agree",
            active.indices,
        )

    target = min(cfg.total_power, _unconstrained_power(active, est, channels))
    state = initial_state(active, topology)
    converged = False
    for _ in range(cfg.max_iters):
        state = consensus_step(state, active, est, channels, cfg, topology)
        gap = _disagreement(state, active)
        power = state.deployed_power(active)
        if trace_sink is not None:
            if scenario is not None:
                # A diverging run can overflow this diagnostic to inf one
                # iteration before the step itself raises; the trace should
                # record that, not warn about it.
                with np.errstate(over="ignore"):
                    mmse = network_mmse(
                        active, state.deployed_weights(active), est, channels, scenario
                    )
            else:
                mmse = float("nan")
            trace_sink.append((state.iteration, gap, power, mmse))
        if gap < cfg.tol_consensus and abs(power - target) <= cfg.tol_power:
            converged = True
            break
    return state.deployed_weights(active), state, converged
