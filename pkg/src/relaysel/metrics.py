"""Per-relay MMSE estimators and the MSE / SINR figures of merit.

Each relay m forms a local linear MMSE estimate of the desired symbol from its
received mixture, normalizes it to unit power, and forwards it through a
complex weight. The network cost is the sum over active relays of the
individual forwarding MSEs; the destination figure of merit is the output SINR
of the amplified two-hop chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, NetworkScenario
from .errors import ConfigError, NumericError
from .relayset import RelaySet


@dataclass
class LocalEstimator:
    """Per-relay estimator coefficients.

    phi[m] turns relay m's receive sample into its desired-symbol estimate;
    corr[m] = sqrt(E[|estimate|^2]) is the (real, nonnegative) correlation of
    the normalized estimate with the desired symbol.
    """

    phi: np.ndarray
    corr: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex)
        corr = np.asarray(self.corr, dtype=float)
        if phi.shape != corr.shape or phi.ndim != 1:
            raise ConfigError("phi and corr must be 1-D arrays of equal length")
        if np.any(corr < 0):
            raise ConfigError("correlation factors must be >= 0")
        phi.flags.writeable = False
        corr.flags.writeable = False
        self.phi = phi
        self.corr = corr


@dataclass
class BeamWeights:
    """Complex relay transmit weights, one per relay (zero where inactive)."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        if w.ndim != 1:
            raise ConfigError("weights must form a 1-D vector")
        if not np.all(np.isfinite(w)):
            raise NumericError("weights must be finite")
        w.flags.writeable = False
        self.w = w

    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


def local_estimator(scenario: NetworkScenario, channels: ChannelRealization) -> LocalEstimator:
    """Compute every relay's local MMSE coefficient and correlation factor.

    phi_m = conj(f_m1) P1 / (sum_k |f_mk|^2 P_k + sigma_n^2) and
    corr_m = sqrt(|f_m1|^2 P1^2 / (sum_k |f_mk|^2 P_k + sigma_n^2)).
    """
    F = channels.F
    powers = scenario.source_powers
    denom = np.abs(F) ** 2 @ powers + scenario.dest_noise_var
    if np.any(denom <= 0):
        raise NumericError(
            "estimator denominator hit zero (no received signal and zero noise)"
        )
    p1 = scenario.desired_power
    phi = np.conj(F[:, 0]) * p1 / denom
    corr = np.sqrt(np.abs(F[:, 0]) ** 2 * p1**2 / denom)
    return LocalEstimator(phi=phi, corr=corr)


def per_relay_mse(
    m: int,
    w_m: complex,
    est: LocalEstimator,
    g: np.ndarray,
    desired_power: float,
) -> float:
    """Forwarding MSE of relay m: P1 - 2 c_m Re{g_m w_m} + |g_m w_m|^2.

    Always real and >= P1 - c_m^2 >= 0.
    """
    a = g[m] * w_m
    return float(desired_power - 2.0 * est.corr[m] * a.real + abs(a) ** 2)


def network_mmse(
    active: RelaySet,
    weights: BeamWeights,
    est: LocalEstimator,
    channels: ChannelRealization,
    scenario: NetworkScenario,
) -> float:
    """Sum of per-relay forwarding MSEs over the active set."""
    if active.count == 0:
        raise ConfigError("network MMSE needs at least one active relay")
    alpha = active.alpha
    a = channels.g * weights.w
    terms = scenario.desired_power - 2.0 * est.corr * a.real + np.abs(a) ** 2
    return float(np.sum(alpha * terms))


def output_sinr(
    weights: BeamWeights,
    channels: ChannelRealization,
    scenario: NetworkScenario,
    active: RelaySet,
) -> float:
    """Destination output SINR of the amplified two-hop chain.

    With effective weights v_m = alpha_m w_m:
    P1 |sum_m g_m v_m f_m1|^2 over (interference + forwarded relay noise +
    destination noise).
    """
    v = active.alpha * weights.w
    gv = channels.g * v
    # One reduction per source column (sum_m g_m v_m f_mk). Column by column
    # rather than one matrix product, so the desired-source gain is bitwise
    # identical whether or not interferer columns are present.
    beams = np.array([np.sum(gv * col) for col in channels.F.T])
    powers = scenario.source_powers
    signal = powers[0] * np.abs(beams[0]) ** 2
    interference = float(np.sum(powers[1:] * np.abs(beams[1:]) ** 2))
    relay_noise = scenario.relay_noise_var * float(np.sum(np.abs(gv) ** 2))
    denom = interference + relay_noise + scenario.dest_noise_var
    if denom <= 0:
        raise NumericError("SINR denominator is zero (all noise and interference absent)")
    return float(signal / denom)


def simulate_transmission(
    scenario: NetworkScenario,
    channels: ChannelRealization,
    weights: BeamWeights,
    symbols: np.ndarray,
    rng: np.random.Generator,
) -> complex:
    """Simulate one transmission through the weighted relay chain.

    ``symbols`` is the length-K transmitted source vector (power scaling
    included). Relays apply their weights to the raw receive samples:
    x = F s + nu, z = sum_m g_m w_m x_m + n.
    """
    s = np.asarray(symbols, dtype=complex)
    if s.shape != (scenario.n_sources,):
        raise ConfigError(
            f"symbols must have shape ({scenario.n_sources},), got {s.shape}"
        )
    m = scenario.n_relays
    nu = np.sqrt(scenario.relay_noise_var * 0.5) * (
        rng.standard_normal(m) + 1j * rng.standard_normal(m)
    )
    n = np.sqrt(scenario.dest_noise_var * 0.5) * (
        rng.standard_normal() + 1j * rng.standard_normal()
    )
    x = channels.F @ s + nu
    z = np.sum(channels.g * weights.w * x) + n
    return complex(z)
