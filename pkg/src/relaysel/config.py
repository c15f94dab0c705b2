"""Experiment configuration and the flat key=value config-file format.

dB-suffixed keys (snr_db, inr_db, pt_dbw, pathloss_db, shadow_db) follow the
usual conventions; budget and path-loss reference are converted to linear once
at parse time, while sweep axes stay in dB because they are reporting
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError

METHODS = ("exhaustive", "lmmsec_g", "none", "smmsec_g")
_METHOD_ALIASES = {
    "none": "none",
    "lmmsec": "lmmsec_g",
    "lmmsec_g": "lmmsec_g",
    "smmsec": "smmsec_g",
    "smmsec_g": "smmsec_g",
    "exhaustive": "exhaustive",
}


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass
class ExperimentConfig:
    """Everything one sweep run needs; field names match the config-file keys."""

    sweep: str = "snr"
    k: int = 3
    m: int = 5
    trials: int = 100
    seed: int = 5
    methods: tuple[str, ...] = METHODS
    solver: str = "centralized"
    snr_grid_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0)
    m_grid: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    snr_db: float = 0.0
    inr_db: float = 10.0
    inr_mode: str = "per_interferer"
    pt_dbw: float = 1.0
    pathloss_db: float = 10.0
    shadow_db: float = 3.0
    shadowing_mode: str = "per_link"
    rho: float = 2.0
    m_min: int = 1
    m_fix: int | None = None
    relay_noise_var: float = 1.0
    dest_noise_var: float = 1.0
    mu_lambda: float = 0.001
    mu_tau: float = 0.001
    max_iters: int = 10_000
    tol_consensus: float = 1e-6
    tol_power: float = 1e-6

    def __post_init__(self):
        if self.sweep not in ("snr", "m"):
            raise ConfigError(f"sweep must be 'snr' or 'm', got {self.sweep!r}")
        if self.k < 1 or self.m < 1:
            raise ConfigError("k and m must be >= 1")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        methods = tuple(self.methods)
        if not methods:
            raise ConfigError("at least one method is required")
        canon = []
        for name in methods:
            if name not in _METHOD_ALIASES:
                raise ConfigError(f"unknown method {name!r}")
            canon.append(_METHOD_ALIASES[name])
        if len(set(canon)) != len(canon):
            raise ConfigError("methods listed twice")
        self.methods = tuple(sorted(canon))
        if self.solver not in ("centralized", "consensus"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        for grid, name in ((self.snr_grid_db, "snr_grid_db"), (self.m_grid, "m_grid")):
            vals = tuple(grid)
            if not vals:
                raise ConfigError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        self.snr_grid_db = tuple(float(v) for v in self.snr_grid_db)
        self.m_grid = tuple(int(v) for v in self.m_grid)
        if any(v < 1 for v in self.m_grid):
            raise ConfigError("m_grid values must be >= 1")
        if self.inr_mode not in ("per_interferer", "aggregate"):
            raise ConfigError(f"unknown inr_mode {self.inr_mode!r}")
        if self.shadowing_mode not in ("per_link", "per_matrix"):
            raise ConfigError(f"unknown shadowing_mode {self.shadowing_mode!r}")
        if self.m_min < 1:
            raise ConfigError("m_min must be >= 1")
        if self.m_fix is not None and self.m_fix < 1:
            raise ConfigError("m_fix must be >= 1")

    @property
    def total_power(self) -> float:
        """Relay power budget in watts (pt_dbw is dB relative to 1 W)."""
        return db_to_linear(self.pt_dbw)

    @property
    def pathloss_ref(self) -> float:
        return db_to_linear(self.pathloss_db)


def default_config(sweep: str = "snr") -> ExperimentConfig:
    """Reference defaults: the SNR sweep runs 5 relays at INR 10 dB; the
    relay-count sweep fixes SNR = INR = 0 dB."""
    if sweep == "snr":
        return ExperimentConfig(sweep="snr", inr_db=10.0)
    if sweep == "m":
        return ExperimentConfig(sweep="m", snr_db=0.0, inr_db=0.0)
    raise ConfigError(f"sweep must be 'snr' or 'm', got {sweep!r}")


_INT_KEYS = {"k", "m", "trials", "seed", "m_min", "m_fix", "max_iters"}
_FLOAT_KEYS = {
    "snr_db", "inr_db", "pt_dbw", "pathloss_db", "shadow_db", "rho",
    "relay_noise_var", "dest_noise_var", "mu_lambda", "mu_tau",
    "tol_consensus", "tol_power",
}
_STR_KEYS = {"sweep", "solver", "inr_mode", "shadowing_mode"}
_LIST_KEYS = {"methods", "snr_grid_db", "m_grid"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _LIST_KEYS


def _parse_value(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "methods":
            return tuple(tok.strip() for tok in raw.split(",") if tok.strip())
        if key == "snr_grid_db":
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        if key == "m_grid":
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict:
    """Parse flat key=value lines ('#' starts a comment) into typed overrides."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        overrides[key] = _parse_value(key, raw)
    return overrides


def load_config(path: str, cli_overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file and apply CLI overrides on top (flags win)."""
    with open(path, "r", encoding="utf-8") as fh:
        overrides = parse_config_text(fh.read())
    if cli_overrides:
        overrides.update(cli_overrides)
    return build_config(overrides)


def build_config(overrides: dict) -> ExperimentConfig:
    """Defaults for the chosen sweep, then the given key overrides."""
    sweep = overrides.get("sweep", "snr")
    base = default_config(sweep)
    unknown = set(overrides) - _ALL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return replace(base, **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
