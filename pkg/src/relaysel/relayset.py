"""Active-relay subsets represented as 0/1 indicator vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class RelaySet:
    """Indicator vector over the M relays; at least one relay must be active."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha)
        if alpha.ndim != 1:
            raise ConfigError("relay indicator must be a 1-D vector")
        if not np.all(np.isin(alpha, (0, 1))):
            raise ConfigError("relay indicators must be 0 or 1")
        alpha = alpha.astype(np.int64)
        if alpha.sum() < 1:
            raise ConfigError("at least one relay must be active")
        alpha.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def full(cls, n_relays: int) -> "RelaySet":
        return cls(np.ones(n_relays, dtype=np.int64))

    @classmethod
    def from_indices(cls, indices, n_relays: int) -> "RelaySet":
        alpha = np.zeros(n_relays, dtype=np.int64)
        alpha[list(indices)] = 1
        return cls(alpha)

    @property
    def n_relays(self) -> int:
        return self.alpha.shape[0]

    @property
    def count(self) -> int:
        return int(self.alpha.sum())

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.alpha))

    @property
    def mask(self) -> int:
        """Bitmask with bit i set when relay i is active."""
        return int(sum(1 << i for i in self.indices))

    def is_active(self, m: int) -> bool:
        return bool(self.alpha[m])

    def without(self, m: int) -> "RelaySet":
        if not self.alpha[m]:
            raise ConfigError(f"relay {m} is not active")
        alpha = self.alpha.copy()
        alpha[m] = 0
        return RelaySet(alpha)
