"""Centralized solver and distributed consensus iteration tests."""

import logging

import numpy as np
import pytest

from relaysel import (
    BeamWeights,
    ChannelRealization,
    ConfigError,
    ConsensusConfig,
    ConsensusState,
    DivergenceError,
    LocalEstimator,
    NetworkScenario,
    RelaySet,
    SingularityError,
    Topology,
    closed_form_weights,
    consensus_step,
    initial_state,
    local_estimator,
    network_mmse,
    run_consensus,
    solve_centralized,
)
from oracles import TOTAL_POWER, make_instance, pgd_mmse


def _single(corr=1.0, g=1.0):
    est = LocalEstimator(phi=np.array([0.5 + 0j]), corr=np.array([float(corr)]))
    ch = ChannelRealization(F=np.ones((1, 1)), g=np.array([g], dtype=complex))
    return est, ch


def _symmetric_pair():
    """Two identical relays, strong desired channel, binding budget."""
    sc = NetworkScenario(
        n_sources=1, n_relays=2, source_powers=np.array([10.0]), total_power=TOTAL_POWER
    )
    ch = ChannelRealization(F=np.full((2, 1), 3.0 + 0.0j), g=np.ones(2, dtype=complex))
    return sc, ch, local_estimator(sc, ch)


# ---------------------------------------------------------------- topology


def test_ring_topology_shapes():
    assert Topology.ring(4).neighbors == ((1,), (2,), (3,), (0,))
    assert Topology.ring(1).neighbors == ((),)
    with pytest.raises(ConfigError):
        Topology.ring(0)


def test_topology_rejects_malformed_neighbour_lists():
    with pytest.raises(ConfigError):
        Topology(((0,),))  # self loop
    with pytest.raises(ConfigError):
        Topology(((2,), (0,)))  # out of range
    with pytest.raises(ConfigError):
        Topology(((1, 1), ()))  # duplicate


def test_link_mask_restricted_to_active_subgraph():
    topo = Topology.ring(3)
    mask = topo.link_mask(RelaySet.from_indices([0, 2], 3))
    expected = np.zeros((3, 3), dtype=bool)
    expected[2, 0] = True  # 0->1 and 1->2 touch the disabled relay
    assert np.array_equal(mask, expected)


def test_connectivity_on_active_subgraph():
    topo = Topology.ring(4)
    assert topo.is_connected(RelaySet.full(4))
    assert topo.is_connected(RelaySet.from_indices([1], 4))
    # opposite corners of the ring share no direct link
    assert not topo.is_connected(RelaySet.from_indices([0, 2], 4))


def test_consensus_config_validation():
    with pytest.raises(ConfigError):
        ConsensusConfig(max_iters=0)
    with pytest.raises(ConfigError):
        ConsensusConfig(mu_lambda=0.0)
    with pytest.raises(ConfigError):
        ConsensusConfig(tol_consensus=-1e-6)
    with pytest.raises(ConfigError):
        ConsensusConfig(total_power=0.0)


# ------------------------------------------------------- closed form / KKT


def test_closed_form_hand_value():
    est, ch = _single(corr=np.sqrt(0.5))
    w = closed_form_weights(RelaySet.full(1), est, ch, lam=1.0)
    assert w.w[0] == pytest.approx(0.35355339059327373)


def test_closed_form_inactive_relay_gets_zero():
    rng = np.random.default_rng(2)
    sc, ch, est = make_instance(rng, 3)
    w = closed_form_weights(RelaySet.from_indices([1], 3), est, ch, lam=0.5)
    assert w.w[0] == 0.0 and w.w[2] == 0.0 and w.w[1] != 0.0


def test_closed_form_magnitude_decays_with_lambda():
    rng = np.random.default_rng(6)
    sc, ch, est = make_instance(rng, 2)
    active = RelaySet.full(2)
    mags = [
        np.abs(closed_form_weights(active, est, ch, lam).w)
        for lam in (0.0, 0.5, 2.0, 10.0, 1e4)
    ]
    for a, b in zip(mags, mags[1:]):
        assert np.all(b < a)
    assert np.all(mags[-1] < 1e-3)


def test_closed_form_singularity_and_domain_errors():
    est, ch = _single(g=0.0)
    with pytest.raises(SingularityError):
        closed_form_weights(RelaySet.full(1), est, ch, lam=0.0)
    with pytest.raises(ConfigError):
        closed_form_weights(RelaySet.full(1), est, ch, lam=-1.0)
    # positive lambda is fine even with zero gain
    w = closed_form_weights(RelaySet.full(1), est, ch, lam=0.5)
    assert w.w[0] == 0.0


def test_solve_centralized_unconstrained_case():
    est, ch = _single(corr=1.0)
    w, lam = solve_centralized(RelaySet.full(1), est, ch, total_power=4.0)
    assert lam == 0.0
    assert w.w[0] == pytest.approx(1.0)
    assert w.power() <= 4.0


def test_solve_centralized_binding_budget_hand_value():
    est, ch = _single(corr=1.0)
    w, lam = solve_centralized(RelaySet.full(1), est, ch, total_power=0.25)
    # c/(lambda + 1) = 0.5 at the budget boundary -> lambda* = 1
    assert abs(w.w[0]) == pytest.approx(0.5, abs=1e-5)
    assert lam == pytest.approx(1.0, abs=1e-4)
    assert w.power() == pytest.approx(0.25, abs=1e-6)


def test_solve_centralized_symmetric_relays_get_equal_weights():
    sc, ch, est = _symmetric_pair()
    w, lam = solve_centralized(RelaySet.full(2), est, ch, TOTAL_POWER)
    assert w.w[0] == pytest.approx(w.w[1])
    assert lam > 0.0
    assert w.power() == pytest.approx(TOTAL_POWER, abs=1e-6)


def test_solve_centralized_budget_always_respected():
    rng = np.random.default_rng(40)
    for _ in range(25):
        m = int(rng.integers(1, 6))
        sc, ch, est = make_instance(rng, m, snr_db=float(rng.uniform(-5, 15)))
        w, lam = solve_centralized(RelaySet.full(m), est, ch, TOTAL_POWER)
        assert w.power() <= TOTAL_POWER + 1e-6
        assert lam >= 0.0


def test_solve_centralized_tolerates_zero_gain_relay():
    sc = NetworkScenario(n_sources=1, n_relays=2, source_powers=np.array([4.0]))
    ch = ChannelRealization(F=np.ones((2, 1)), g=np.array([1.0, 0.0], dtype=complex))
    est = local_estimator(sc, ch)
    w, lam = solve_centralized(RelaySet.full(2), est, ch, total_power=0.5)
    assert w.w[1] == 0.0
    assert w.power() == pytest.approx(0.5, abs=1e-6)


def test_constrained_power_is_decreasing_in_lambda():
    rng = np.random.default_rng(41)
    sc, ch, est = make_instance(rng, 3)
    active = RelaySet.full(3)
    for _ in range(10):
        a, b = sorted(rng.uniform(0.01, 20.0, size=2))
        if a == b:
            continue
        pa = closed_form_weights(active, est, ch, a).power()
        pb = closed_form_weights(active, est, ch, b).power()
        assert pb < pa


def test_solve_centralized_agrees_with_projected_gradient():
    rng = np.random.default_rng(42)
    for _ in range(8):
        m = int(rng.integers(1, 5))
        sc, ch, est = make_instance(rng, m, snr_db=float(rng.uniform(-5, 15)))
        active = RelaySet.full(m)
        w, _ = solve_centralized(active, est, ch, TOTAL_POWER)
        mmse = network_mmse(active, w, est, ch, sc)
        _, oracle = pgd_mmse(active, est, ch, sc.desired_power, TOTAL_POWER)
        assert mmse == pytest.approx(oracle, rel=1e-5)


# ------------------------------------------------------------- iteration


def test_initial_state_matches_documented_start():
    active = RelaySet.from_indices([0, 2], 3)
    topo = Topology.ring(3)
    state = initial_state(active, topo)
    assert np.all(state.wt[:, [0, 2]] == 1.0)
    assert np.all(state.wt[:, 1] == 0.0)
    assert np.all(state.lam == 1.0)
    links = topo.link_mask(active)
    assert np.all(state.tau[links] == 1.0)
    assert np.all(state.tau[~links] == 0.0)
    assert np.array_equal(state.u, np.abs(state.wt))


def test_consensus_state_rejects_bad_shapes_and_negative_lambda():
    with pytest.raises(ConfigError):
        ConsensusState(
            wt=np.zeros((2, 3)), lam=np.ones(2), tau=np.zeros((2, 2, 2)), u=np.zeros((2, 2))
        )
    with pytest.raises(ConfigError):
        ConsensusState(
            wt=np.ones((2, 2)),
            lam=np.array([1.0, -0.1]),
            tau=np.zeros((2, 2, 2)),
            u=np.ones((2, 2)),
        )


def test_step_collapses_to_closed_form_when_multipliers_frozen():
    rng = np.random.default_rng(50)
    sc, ch, est = make_instance(rng, 3)
    active = RelaySet.full(3)
    topo = Topology.ring(3)
    lam_star = 0.7
    state = ConsensusState(
        wt=np.zeros((3, 3), dtype=complex),
        lam=np.full(3, lam_star),
        tau=np.zeros((3, 3, 3)),
        u=np.zeros((3, 3)),
    )
    cfg = ConsensusConfig(total_power=TOTAL_POWER)
    new = consensus_step(state, active, est, ch, cfg, topo)
    expected = closed_form_weights(active, est, ch, lam_star)
    assert np.diagonal(new.wt) == pytest.approx(expected.w)
    off_diag = new.wt[~np.eye(3, dtype=bool)]
    assert np.all(off_diag == 0.0)


def test_step_lambda_update_hand_value():
    # |1 + 0.001 * (1.5 - 1)| = 1.0005
    est, ch = _single()
    active = RelaySet.full(1)
    topo = Topology.ring(1)
    state = ConsensusState(
        wt=np.array([[np.sqrt(1.5)]], dtype=complex),
        lam=np.ones(1),
        tau=np.zeros((1, 1, 1)),
        u=np.array([[np.sqrt(1.5)]]),
    )
    cfg = ConsensusConfig(total_power=1.0, mu_lambda=0.001)
    new = consensus_step(state, active, est, ch, cfg, topo)
    assert new.lam[0] == pytest.approx(1.0005, abs=1e-12)


def test_step_freezes_inactive_relays():
    rng = np.random.default_rng(51)
    sc, ch, est = make_instance(rng, 3)
    active = RelaySet.from_indices([0, 2], 3)
    topo = Topology.ring(3)
    state = initial_state(active, topo)
    new = consensus_step(state, active, est, ch, ConsensusConfig(total_power=1.0), topo)
    assert np.all(new.wt[:, 1] == 0.0)
    assert new.lam[1] == state.lam[1]
    assert np.all(new.tau[0, 1] == state.tau[0, 1])
    assert np.all(new.tau[1, 2] == state.tau[1, 2])


def test_lambda_stays_nonnegative_over_many_steps():
    rng = np.random.default_rng(52)
    sc, ch, est = make_instance(rng, 4)
    active = RelaySet.full(4)
    topo = Topology.ring(4)
    state = initial_state(active, topo)
    cfg = ConsensusConfig(total_power=TOTAL_POWER, mu_lambda=0.05, mu_tau=0.05)
    for _ in range(150):
        state = consensus_step(state, active, est, ch, cfg, topo)
        assert np.all(state.lam >= 0.0)
        assert np.all(np.isfinite(state.wt))


def test_step_raises_divergence_error_on_overflow():
    sc, ch, est = _symmetric_pair()
    active = RelaySet.full(2)
    topo = Topology.ring(2)
    state = initial_state(active, topo)
    bad = ConsensusState(
        wt=state.wt, lam=np.full(2, 1e-8), tau=np.full((2, 2, 2), 1e308), u=state.u
    )
    with pytest.raises(DivergenceError) as err:
        consensus_step(bad, active, est, ch, ConsensusConfig(total_power=1.0), topo)
    assert "mu_lambda" in str(err.value)


def test_run_consensus_divergence_propagates():
    rng = np.random.default_rng(3)
    sc, ch, est = make_instance(rng, 2, k=1)
    cfg = ConsensusConfig(total_power=TOTAL_POWER, mu_tau=1e200, max_iters=50)
    with pytest.raises(DivergenceError):
        run_consensus(RelaySet.full(2), est, ch, cfg, Topology.ring(2))


def test_run_consensus_single_relay_matches_centralized():
    rng = np.random.default_rng(1)
    sc, ch, est = make_instance(rng, 1, snr_db=10.0)
    active = RelaySet.full(1)
    cfg = ConsensusConfig(total_power=TOTAL_POWER)
    w, state, converged = run_consensus(active, est, ch, cfg, Topology.ring(1))
    assert converged
    wc, _ = solve_centralized(active, est, ch, TOTAL_POWER)
    mm = network_mmse(active, w, est, ch, sc)
    mmc = network_mmse(active, wc, est, ch, sc)
    assert mm == pytest.approx(mmc, rel=1e-4)


def test_run_consensus_symmetric_pair_reaches_agreement():
    sc, ch, est = _symmetric_pair()
    active = RelaySet.full(2)
    cfg = ConsensusConfig(
        total_power=TOTAL_POWER, mu_lambda=0.01, mu_tau=0.01, max_iters=20000
    )
    w, state, converged = run_consensus(active, est, ch, cfg, Topology.ring(2))
    assert converged
    assert np.max(np.abs(state.u[:, 0] - state.u[:, 1])) < cfg.tol_consensus
    assert w.w[0] == pytest.approx(w.w[1], abs=1e-9)
    assert w.power() == pytest.approx(TOTAL_POWER, abs=1e-5)
    wc, _ = solve_centralized(active, est, ch, TOTAL_POWER)
    mm = network_mmse(active, w, est, ch, sc)
    mmc = network_mmse(active, wc, est, ch, sc)
    assert mm == pytest.approx(mmc, rel=1e-4)


def test_run_consensus_warns_on_disconnected_active_set(caplog):
    rng = np.random.default_rng(53)
    sc, ch, est = make_instance(rng, 4)
    active = RelaySet.from_indices([0, 2], 4)
    cfg = ConsensusConfig(total_power=TOTAL_POWER, max_iters=10)
    with caplog.at_level(logging.WARNING, logger="relaysel.consensus"):
        run_consensus(active, est, ch, cfg, Topology.ring(4))
    assert any("not connected" in r.getMessage() for r in caplog.records)


def test_run_consensus_trace_sink_collects_rows():
    sc, ch, est = _symmetric_pair()
    active = RelaySet.full(2)
    cfg = ConsensusConfig(total_power=TOTAL_POWER, max_iters=25)
    sink = []
    run_consensus(active, est, ch, cfg, Topology.ring(2), trace_sink=sink, scenario=sc)
    assert len(sink) == 25
    iters, gaps, powers, mmses = zip(*sink)
    assert iters == tuple(range(1, 26))
    assert all(np.isfinite(v) for v in mmses)
    # without a scenario the mmse column is NaN
    sink2 = []
    run_consensus(active, est, ch, cfg, Topology.ring(2), trace_sink=sink2)
    assert all(np.isnan(row[3]) for row in sink2)


def test_run_consensus_size_mismatch():
    sc, ch, est = _symmetric_pair()
    cfg = ConsensusConfig(total_power=TOTAL_POWER, max_iters=5)
    with pytest.raises(ConfigError):
        run_consensus(RelaySet.full(2), est, ch, cfg, Topology.ring(3))
