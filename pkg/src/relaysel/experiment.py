"""Monte Carlo sweep harness: paired trials, seed discipline, CSV output.

Each (sweep point, trial) pair draws one channel realization which every
method consumes, so per-trial comparisons are fair. Child seeds are derived
from the master seed by value (not position), so adding grid points, trials,
or methods never changes existing rows. The relay-count sweep additionally
draws each relay's channels from its own substream, making the M-relay
realization a prefix of the (M+1)-relay one; the exhaustive optimum is then
monotone in M trial by trial instead of only on average.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, NetworkScenario, path_loss
from .config import ExperimentConfig, db_to_linear
from .consensus import ConsensusConfig, Topology, run_consensus
from .errors import ConfigError, NumericError
from .metrics import local_estimator, network_mmse, output_sinr
from .relayset import RelaySet
from .selection import (
    SelectionConfig,
    _solve,
    exhaustive_search,
    lmmsec_g,
    smmsec_g,
)

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "method,sweep_param,sweep_value,trial,seed,selected_mask,"
    "mmse,sinr_linear,sinr_db,iters,converged"
)

_SWEEP_TAGS = {"snr": 101, "m": 202}
# Leading tags for the per-trial channel substreams (see draw_trial_channels).
_F_STREAM = 1
_G_STREAM = 2
_SHADOW_F_STREAM = 3
_SHADOW_G_STREAM = 4


@dataclass
class SweepPoint:
    param: str  # "snr_db" or "m"
    value: float


@dataclass
class TrialResult:
    method: str
    sweep_param: str
    sweep_value: float
    trial: int
    seed: int
    selected_mask: int
    mmse: float
    sinr_linear: float
    sinr_db: float
    iters: int
    converged: bool
    channel_hash: str = ""  # in-memory fairness check only, not serialized


@dataclass
class PointSummary:
    method: str
    sweep_param: str
    sweep_value: float
    n_trials: int
    n_failed: int
    mean_mmse: float
    mean_sinr_db: float


@dataclass
class ResultTable:
    sweep_param: str
    rows: list[TrialResult]
    summary: list[PointSummary]


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def trial_seed_for(master: int, sweep: str, value: float, trial: int) -> int:
    """Value-keyed 64-bit child seed. The relay-count sweep deliberately
    excludes the grid value so channel draws nest across M."""
    if sweep == "snr":
        entropy = [master, _SWEEP_TAGS["snr"], _float_bits(value), trial]
    else:
        entropy = [master, _SWEEP_TAGS["m"], trial]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _scenario_at(cfg: ExperimentConfig, point: SweepPoint) -> NetworkScenario:
    if point.param == "snr_db":
        snr_db, m = float(point.value), cfg.m
    else:
        snr_db, m = cfg.snr_db, int(point.value)
    p1 = cfg.relay_noise_var * db_to_linear(snr_db)
    if cfg.k > 1:
        p_int = cfg.relay_noise_var * db_to_linear(cfg.inr_db)
        if cfg.inr_mode == "aggregate":
            p_int /= cfg.k - 1
        powers = np.array([p1] + [p_int] * (cfg.k - 1))
    else:
        powers = np.array([p1])
    return NetworkScenario(
        n_sources=cfg.k,
        n_relays=m,
        source_powers=powers,
        relay_noise_var=cfg.relay_noise_var,
        dest_noise_var=cfg.dest_noise_var,
        total_power=cfg.total_power,
        pathloss_ref=cfg.pathloss_ref,
        pathloss_exp=cfg.rho,
        shadow_spread_db=cfg.shadow_db,
        shadowing_mode=cfg.shadowing_mode,
    )


def draw_trial_channels(scenario: NetworkScenario, trial_seed: int) -> ChannelRealization:
    """Channel draw with one substream per channel coefficient.

    Entry (i, k) of F and entry i of g each come from their own child stream of
    the trial seed, so realizations nest: relay i's gains are identical in any
    scenario sharing the seed regardless of the relay count, and the desired
    column is identical regardless of the source count. The relay-count sweep
    and the zero-interferer degeneration both rely on this.
    """
    m, k = scenario.n_relays, scenario.n_sources
    F = np.zeros((m, k), dtype=complex)
    g = np.zeros(m, dtype=complex)
    spread = scenario.shadow_spread_db
    per_link = scenario.shadowing_mode == "per_link"
    for i in range(m):
        gamma_src = path_loss(scenario.pathloss_ref, scenario.distances[i, 0], scenario.pathloss_exp)
        gamma_dst = path_loss(scenario.pathloss_ref, scenario.distances[i, 1], scenario.pathloss_exp)
        for j in range(k):
            rng = np.random.default_rng(np.random.SeedSequence([trial_seed, _F_STREAM, i, j]))
            re, im = rng.standard_normal(2)
            beta = 10.0 ** (spread * rng.standard_normal() / 10.0) if per_link else 1.0
            F[i, j] = gamma_src * beta * np.sqrt(0.5) * (re + 1j * im)
        rng = np.random.default_rng(np.random.SeedSequence([trial_seed, _G_STREAM, i]))
        re, im = rng.standard_normal(2)
        beta = 10.0 ** (spread * rng.standard_normal() / 10.0) if per_link else 1.0
        g[i] = gamma_dst * beta * np.sqrt(0.5) * (re + 1j * im)
    if not per_link:
        rf = np.random.default_rng(np.random.SeedSequence([trial_seed, _SHADOW_F_STREAM]))
        rg = np.random.default_rng(np.random.SeedSequence([trial_seed, _SHADOW_G_STREAM]))
        F *= 10.0 ** (spread * rf.standard_normal() / 10.0)
        g *= 10.0 ** (spread * rg.standard_normal() / 10.0)
    return ChannelRealization(F=F, g=g)


def _selection_config(cfg: ExperimentConfig, scenario: NetworkScenario) -> SelectionConfig:
    consensus_cfg = None
    if cfg.solver == "consensus":
        consensus_cfg = ConsensusConfig(
            total_power=scenario.total_power,
            mu_lambda=cfg.mu_lambda,
            mu_tau=cfg.mu_tau,
            max_iters=cfg.max_iters,
            tol_consensus=cfg.tol_consensus,
            tol_power=cfg.tol_power,
        )
    return SelectionConfig(
        m_min=cfg.m_min,
        m_fix=cfg.m_fix,
        solver_mode=cfg.solver,
        consensus_cfg=consensus_cfg,
        topology=Topology.ring(scenario.n_relays),
    )


def _failed_row(method, point, trial_index, trial_seed, channel_hash) -> TrialResult:
    nan = float("nan")
    return TrialResult(
        method=method,
        sweep_param=point.param,
        sweep_value=point.value,
        trial=trial_index,
        seed=trial_seed,
        selected_mask=0,
        mmse=nan,
        sinr_linear=nan,
        sinr_db=nan,
        iters=0,
        converged=False,
        channel_hash=channel_hash,
    )


def run_trial(
    cfg: ExperimentConfig,
    point: SweepPoint,
    trial_seed: int,
    trial_index: int = 0,
) -> list[TrialResult]:
    """Evaluate every configured method on one shared channel realization."""
    scenario = _scenario_at(cfg, point)
    channels = draw_trial_channels(scenario, trial_seed)
    est = local_estimator(scenario, channels)
    digest = hashlib.sha256(channels.F.tobytes() + channels.g.tobytes()).hexdigest()[:16]
    sel_cfg = _selection_config(cfg, scenario)

    rows = []
    for method in cfg.methods:
        if method == "exhaustive" and scenario.n_relays > 20:
            rows.append(_failed_row(method, point, trial_index, trial_seed, digest))
            continue
        try:
            if method == "none":
                selected = RelaySet.full(scenario.n_relays)
                info = _solve(selected, est, channels, scenario, sel_cfg)
                weights, mmse = info.weights, info.mmse
                iters, converged = info.iterations, info.converged
            else:
                algo = {
                    "lmmsec_g": lmmsec_g,
                    "smmsec_g": smmsec_g,
                    "exhaustive": exhaustive_search,
                }[method]
                result = algo(est, channels, scenario, sel_cfg)
                selected, weights, mmse = result.selected, result.weights, result.mmse
                info = _solve(selected, est, channels, scenario, sel_cfg)
                iters, converged = info.iterations, info.converged
            sinr = output_sinr(weights, channels, scenario, selected)
            sinr_db = 10.0 * np.log10(sinr) if sinr > 0 else float("-inf")
            rows.append(
                TrialResult(
                    method=method,
                    sweep_param=point.param,
                    sweep_value=point.value,
                    trial=trial_index,
                    seed=trial_seed,
                    selected_mask=selected.mask,
                    mmse=mmse,
                    sinr_linear=sinr,
                    sinr_db=sinr_db,
                    iters=iters,
                    converged=converged,
                    channel_hash=digest,
                )
            )
        except NumericError as exc:
            logger.warning(
                "solver failed (%s, %s=%s, trial %d): %s",
                method, point.param, point.value, trial_index, exc,
            )
            rows.append(_failed_row(method, point, trial_index, trial_seed, digest))
    return rows


def _summarize(rows: list[TrialResult], param: str) -> list[PointSummary]:
    keys = sorted({(r.method, r.sweep_value) for r in rows})
    summary = []
    for method, value in keys:
        matching = [r for r in rows if r.method == method and r.sweep_value == value]
        ok = [r for r in matching if np.isfinite(r.mmse)]
        mean_mmse = float(np.mean([r.mmse for r in ok])) if ok else float("nan")
        mean_lin = float(np.mean([r.sinr_linear for r in ok])) if ok else float("nan")
        mean_db = 10.0 * np.log10(mean_lin) if ok and mean_lin > 0 else float("nan")
        summary.append(
            PointSummary(
                method=method,
                sweep_param=param,
                sweep_value=value,
                n_trials=len(matching),
                n_failed=len(matching) - len(ok),
                mean_mmse=mean_mmse,
                mean_sinr_db=mean_db,
            )
        )
    return summary


def _run_sweep(cfg: ExperimentConfig, param: str, values) -> ResultTable:
    rows = []
    for value in values:
        point = SweepPoint(param=param, value=value)
        if param == "m" and "exhaustive" in cfg.methods and value > 20:
            logger.warning(
                "skipping exhaustive search at m=%s (guard: over 20 relays)", value
            )
        for trial in range(cfg.trials):
            seed = trial_seed_for(cfg.seed, cfg.sweep, value, trial)
            rows.extend(run_trial(cfg, point, seed, trial))
    return ResultTable(sweep_param=param, rows=rows, summary=_summarize(rows, param))


def sweep_snr(cfg: ExperimentConfig) -> ResultTable:
    """Desired-source SNR sweep at fixed relay count."""
    if cfg.sweep != "snr":
        raise ConfigError("config is not an snr sweep")
    return _run_sweep(cfg, "snr_db", list(cfg.snr_grid_db))


def sweep_m(cfg: ExperimentConfig) -> ResultTable:
    """Relay-count sweep at fixed SNR/INR, with nested channel draws."""
    if cfg.sweep != "m":
        raise ConfigError("config is not an m sweep")
    return _run_sweep(cfg, "m", list(cfg.m_grid))


def run_sweep(cfg: ExperimentConfig) -> ResultTable:
    return sweep_snr(cfg) if cfg.sweep == "snr" else sweep_m(cfg)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def format_rows(table: ResultTable) -> list[str]:
    ordered = sorted(table.rows, key=lambda r: (r.method, r.sweep_value, r.trial))
    lines = [CSV_HEADER]
    for r in ordered:
        value = int(r.sweep_value) if table.sweep_param == "m" else r.sweep_value
        lines.append(
            ",".join(
                (
                    r.method,
                    r.sweep_param,
                    _fmt(value),
                    str(r.trial),
                    str(r.seed),
                    str(r.selected_mask),
                    _fmt(r.mmse),
                    _fmt(r.sinr_linear),
                    _fmt(r.sinr_db),
                    str(r.iters),
                    _fmt(r.converged),
                )
            )
        )
    return lines


def emit_csv(table: ResultTable, destination) -> None:
    """Write rows in deterministic (method, sweep value, trial) order.

    ``destination`` is a path or a text file object. Full double precision via
    repr, so identical configs and seeds give byte-identical files.
    """
    lines = format_rows(table)
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def consensus_trace(cfg: ExperimentConfig) -> list[tuple[int, float, float, float]]:
    """Trace of the full-set consensus solve at the first sweep point, trial 0."""
    values = cfg.snr_grid_db if cfg.sweep == "snr" else cfg.m_grid
    param = "snr_db" if cfg.sweep == "snr" else "m"
    point = SweepPoint(param=param, value=values[0])
    scenario = _scenario_at(cfg, point)
    seed = trial_seed_for(cfg.seed, cfg.sweep, point.value, 0)
    channels = draw_trial_channels(scenario, seed)
    est = local_estimator(scenario, channels)
    ccfg = ConsensusConfig(
        total_power=scenario.total_power,
        mu_lambda=cfg.mu_lambda,
        mu_tau=cfg.mu_tau,
        max_iters=cfg.max_iters,
        tol_consensus=cfg.tol_consensus,
        tol_power=cfg.tol_power,
    )
    sink: list[tuple[int, float, float, float]] = []
    run_consensus(
        RelaySet.full(scenario.n_relays),
        est,
        channels,
        ccfg,
        Topology.ring(scenario.n_relays),
        trace_sink=sink,
        scenario=scenario,
    )
    return sink


def emit_trace_csv(trace_rows, destination) -> None:
    lines = ["iteration,disagreement,power,mmse"]
    for it, gap, power, mmse in trace_rows:
        lines.append(f"{it},{repr(float(gap))},{repr(float(power))},{repr(float(mmse))}")
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
