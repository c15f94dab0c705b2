"""Network scenario description and random two-hop channel generation.

A scenario has K sources (source 1 carries the desired stream, the rest are
interferers) and M amplify-and-forward relays. Source-to-relay gains form an
M x K matrix F and relay-to-destination gains a length-M vector g. Large-scale
effects are exponential path loss plus log-normal shadowing on top of unit
variance Rayleigh fading.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)


def path_loss(ref_gain: float, distance: float, exponent: float) -> float:
    """Amplitude path-loss factor sqrt(ref_gain) / sqrt(distance**exponent).

    ``ref_gain`` is the linear (not dB) gain at unit distance.
    """
    if ref_gain <= 0:
        raise ConfigError(f"path loss reference gain must be positive, got {ref_gain}")
    if distance <= 0:
        raise ConfigError(f"distance must be positive, got {distance}")
    return float(np.sqrt(ref_gain) / np.sqrt(distance**exponent))


def shadowing_draw(shadow_spread_db, rng, size=None):
    """Draw log-normal shadowing amplitude factors 10**(spread * Z / 10), Z ~ N(0,1).

    Returns a scalar when ``size`` is None, else an ndarray of that shape.
    """
    if shadow_spread_db < 0:
        raise ConfigError(f"shadowing spread must be >= 0 dB, got {shadow_spread_db}")
    z = rng.standard_normal(size)
    return 10.0 ** (shadow_spread_db * z / 10.0)


@dataclass
class NetworkScenario:
    """Static parameters of one relay-network instance.

    Parameters
    ----------
    n_sources : int
        K >= 1. Source 1 is the desired stream.
    n_relays : int
        M >= 1.
    source_powers : array_like, shape (K,)
        Transmit powers; entry 0 (desired) must be > 0, interferers >= 0.
    relay_noise_var, dest_noise_var : float
        Noise variances at the relays and the destination (>= 0; zero only
        makes sense for deterministic checks).
    total_power : float
        Shared relay transmit budget P_T > 0.
    pathloss_ref : float
        Linear reference gain of the exponential path-loss law.
    pathloss_exp : float
        Path-loss exponent; values outside [2, 5] are accepted with a warning.
    shadow_spread_db : float
        Log-normal shadowing spread in dB (typically 0..9).
    distances : ndarray, shape (M, 2), optional
        Per-relay hop distances, column 0 source->relay, column 1
        relay->destination. Defaults to all ones.
    shadowing_mode : str
        "per_link" draws one shadowing factor per channel coefficient;
        "per_matrix" draws a single factor for all of F and another for all
        of g (the literal whole-matrix scaling).
    """

    n_sources: int
    n_relays: int
    source_powers: np.ndarray
    relay_noise_var: float = 1.0
    dest_noise_var: float = 1.0
    total_power: float = 1.0
    pathloss_ref: float = 1.0
    pathloss_exp: float = 2.0
    shadow_spread_db: float = 0.0
    distances: np.ndarray | None = None
    shadowing_mode: str = "per_link"

    def __post_init__(self):
        if self.n_sources < 1:
            raise ConfigError(f"need at least one source, got {self.n_sources}")
        if self.n_relays < 1:
            raise ConfigError(f"need at least one relay, got {self.n_relays}")
        powers = np.asarray(self.source_powers, dtype=float)
        if powers.shape != (self.n_sources,):
            raise ConfigError(
                f"source_powers must have shape ({self.n_sources},), got {powers.shape}"
            )
        if powers[0] <= 0:
            raise ConfigError("desired source power must be positive")
        if np.any(powers < 0):
            raise ConfigError("source powers must be >= 0")
        if self.relay_noise_var < 0 or self.dest_noise_var < 0:
            raise ConfigError("noise variances must be >= 0")
        if self.total_power <= 0:
            raise ConfigError(f"total relay power must be positive, got {self.total_power}")
        if self.pathloss_ref <= 0:
            raise ConfigError("path loss reference gain must be positive")
        if self.pathloss_exp < 0:
            raise ConfigError("path loss exponent must be >= 0")
        if not 2.0 <= self.pathloss_exp <= 5.0:
            logger.warning(
                "path loss exponent %.3g outside the usual [2, 5] range", self.pathloss_exp
            )
        if self.shadow_spread_db < 0:
            raise ConfigError("shadowing spread must be >= 0 dB")
        if self.shadow_spread_db > 9.0:
            logger.warning(
                "shadowing spread %.3g dB outside the usual [0, 9] dB range",
                self.shadow_spread_db,
            )
        if self.distances is None:
            dists = np.ones((self.n_relays, 2))
        else:
            dists = np.asarray(self.distances, dtype=float)
            if dists.shape != (self.n_relays, 2):
                raise ConfigError(
                    f"distances must have shape ({self.n_relays}, 2), got {dists.shape}"
                )
            if np.any(dists <= 0):
                raise ConfigError("distances must be positive")
        if self.shadowing_mode not in ("per_link", "per_matrix"):
            raise ConfigError(f"unknown shadowing_mode {self.shadowing_mode!r}")
        powers.flags.writeable = False
        dists.flags.writeable = False
        self.source_powers = powers
        self.distances = dists

    @property
    def desired_power(self) -> float:
        return float(self.source_powers[0])


@dataclass
class ChannelRealization:
    """One draw of the two-hop channels: F is (M, K), g is (M,)."""

    F: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.F, dtype=complex)
        g = np.asarray(self.g, dtype=complex)
        if F.ndim != 2:
            raise ConfigError(f"F must be a matrix, got ndim={F.ndim}")
        if g.shape != (F.shape[0],):
            raise ConfigError(
                f"g must have one entry per relay: F is {F.shape}, g is {g.shape}"
            )
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(g))):
            raise ConfigError("channel gains must be finite")
        F.flags.writeable = False
        g.flags.writeable = False
        self.F = F
        self.g = g

    @property
    def n_relays(self) -> int:
        return self.F.shape[0]

    @property
    def n_sources(self) -> int:
        return self.F.shape[1]


def _rayleigh(rng, shape):
    # Circularly-symmetric complex Gaussian, unit variance per coefficient.
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(scenario: NetworkScenario, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization for ``scenario``.

    Small-scale fading is unit-variance Rayleigh; each coefficient is scaled by
    the hop's amplitude path loss and by log-normal shadowing (per link or per
    matrix depending on ``scenario.shadowing_mode``).
    """
    m, k = scenario.n_relays, scenario.n_sources
    f0 = _rayleigh(rng, (m, k))
    g0 = _rayleigh(rng, m)
    gamma_src = np.array(
        [path_loss(scenario.pathloss_ref, d, scenario.pathloss_exp) for d in scenario.distances[:, 0]]
    )
    gamma_dst = np.array(
        [path_loss(scenario.pathloss_ref, d, scenario.pathloss_exp) for d in scenario.distances[:, 1]]
    )
    if scenario.shadowing_mode == "per_link":
        beta_f = shadowing_draw(scenario.shadow_spread_db, rng, (m, k))
        beta_g = shadowing_draw(scenario.shadow_spread_db, rng, m)
    else:
        beta_f = shadowing_draw(scenario.shadow_spread_db, rng)
        beta_g = shadowing_draw(scenario.shadow_spread_db, rng)
    F = gamma_src[:, None] * beta_f * f0
    g = gamma_dst * beta_g * g0
    return ChannelRealization(F=F, g=g)
