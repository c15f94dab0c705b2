"""Joint MMSE beamforming and greedy relay selection for two-hop
amplify-and-forward relay networks, with a Monte Carlo sweep harness."""

import logging

from .channel import ChannelRealization, NetworkScenario, draw_channels, path_loss, shadowing_draw
from .config import ExperimentConfig, build_config, default_config, load_config, parse_config_text
from .consensus import (
    ConsensusConfig,
    ConsensusState,
    Topology,
    closed_form_weights,
    consensus_step,
    initial_state,
    run_consensus,
    solve_centralized,
)
from .errors import ConfigError, DivergenceError, NumericError, RelayselError, SingularityError
from .experiment import (
    ResultTable,
    SweepPoint,
    TrialResult,
    consensus_trace,
    draw_trial_channels,
    emit_csv,
    emit_trace_csv,
    run_sweep,
    run_trial,
    sweep_m,
    sweep_snr,
    trial_seed_for,
)
from .metrics import (
    BeamWeights,
    LocalEstimator,
    local_estimator,
    network_mmse,
    output_sinr,
    per_relay_mse,
    simulate_transmission,
)
from .relayset import RelaySet
from .selection import (
    SelectionConfig,
    SelectionResult,
    evaluate_set,
    exhaustive_search,
    lmmsec_g,
    smmsec_g,
)

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
