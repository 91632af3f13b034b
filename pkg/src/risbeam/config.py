"""Scenario configuration, validation, seeded randomness, and the flat config-file format.

Powers and path losses are stored linear (watts / linear gain) everywhere in
the library; dB and dBm values are accepted only at the config-file boundary
through ``*_db`` / ``*_dbm`` key suffixes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace

import numpy as np

# The five propagation links of the scenario:
#   t1: BS -> RIS 1,  t2: BS -> RIS 2,  s: RIS 1 -> RIS 2,
#   r1: RIS 1 -> user k,  r2: RIS 2 -> user k
LINKS = ("t1", "t2", "s", "r1", "r2")

# Short hops (BS->RIS1, RIS2->user) decay slowly; long hops at 3.6.
DEFAULT_PLOSS_EXPONENTS = {"t1": 2.2, "t2": 3.6, "s": 3.6, "r1": 3.6, "r2": 2.2}


class ConfigError(ValueError):
    """A SystemConfig invariant is violated; the message names the invariant."""


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0) * 1e-3


def watt_to_dbm(x_watt: float) -> float:
    return 10.0 * np.log10(x_watt / 1e-3)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario scalars for one simulation setup.

    Defaults reproduce the reference scenario: a 16-antenna BS at (1,0,5) m,
    two 64-element reflecting surfaces at (0,0,2) m and (0,50,2) m, and two
    4-antenna users dropped uniformly in a 2 m disk around (1,50,0) m.
    """

    n_tx: int = 16                 # BS antennas
    n_rx_per_user: int = 4         # receive antennas per user (uniform)
    n_streams_per_user: int = 2    # data streams per user (uniform)
    n_users: int = 2
    n_elements: int = 64           # reflecting elements per surface (equal on both)
    tx_power: float = 1e-3         # W  (0 dBm)
    noise_power: float = 1e-15     # W  (-120 dBm)
    bs_position: tuple[float, float, float] = (1.0, 0.0, 5.0)
    ris1_position: tuple[float, float, float] = (0.0, 0.0, 2.0)
    ris2_position: tuple[float, float, float] = (0.0, 50.0, 2.0)
    user_center: tuple[float, float, float] = (1.0, 50.0, 0.0)
    user_radius: float = 2.0       # m, horizontal drop disk
    rician_factor: float = 0.75    # LoS power fraction, in [0, 1]
    ref_path_loss: float = 1e-3    # linear gain at d = 1 m  (-30 dB)
    ploss_exponents: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PLOSS_EXPONENTS)
    )
    seed: int = 0

    @property
    def n_streams_total(self) -> int:
        return self.n_users * self.n_streams_per_user


def validate_config(cfg: SystemConfig) -> None:
    """Raise ConfigError naming the violated invariant; return None if valid."""
    for name in ("n_tx", "n_rx_per_user", "n_streams_per_user", "n_users", "n_elements"):
        v = getattr(cfg, name)
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    n_total = cfg.n_users * cfg.n_streams_per_user
    if n_total > cfg.n_tx:
        raise ConfigError(
            f"total streams {n_total} exceed n_tx={cfg.n_tx}: precoder columns do not fit"
        )
    if cfg.n_streams_per_user > cfg.n_rx_per_user:
        raise ConfigError(
            f"n_streams_per_user={cfg.n_streams_per_user} exceeds "
            f"n_rx_per_user={cfg.n_rx_per_user}: equalizer rows do not fit"
        )
    if not cfg.tx_power > 0:
        raise ConfigError(f"tx_power must be > 0 W, got {cfg.tx_power!r}")
    if not cfg.noise_power > 0:
        raise ConfigError(f"noise_power must be > 0 W, got {cfg.noise_power!r}")
    if not 0.0 <= cfg.rician_factor <= 1.0:
        raise ConfigError(f"rician_factor must lie in [0, 1], got {cfg.rician_factor!r}")
    if not cfg.ref_path_loss > 0:
        raise ConfigError(f"ref_path_loss must be > 0, got {cfg.ref_path_loss!r}")
    if not cfg.user_radius >= 0:
        raise ConfigError(f"user_radius must be >= 0 m, got {cfg.user_radius!r}")
    for pos_name in ("bs_position", "ris1_position", "ris2_position", "user_center"):
        pos = getattr(cfg, pos_name)
        if len(pos) != 3 or not all(np.isfinite(pos)):
            raise ConfigError(f"{pos_name} must be a finite 3-vector, got {pos!r}")
    missing = [k for k in LINKS if k not in cfg.ploss_exponents]
    if missing:
        raise ConfigError(f"ploss_exponents missing links {missing}")
    if cfg.seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {cfg.seed!r}")


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic random source; identical seeds give bit-identical streams."""
    if seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.default_rng(int(seed))


def derive_seed(base_seed: int, *parts) -> int:
    """Stable sub-seed from a base seed and context labels/indices.

    Uses SHA-256 over the '|'-joined decimal/text parts and keeps the top
    63 bits, so derived streams are independent and reproducible across
    platforms and library versions.
    """
    text = "|".join([str(int(base_seed))] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF


def config_digest(cfg: SystemConfig) -> str:
    """Stable hex digest of a config (used to tag channel dumps)."""
    return hashlib.sha256(format_config(cfg).encode("ascii")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Flat key-value config files
# ---------------------------------------------------------------------------

_VEC_FIELDS = ("bs_position", "ris1_position", "ris2_position", "user_center")
_INT_FIELDS = ("n_tx", "n_rx_per_user", "n_streams_per_user", "n_users", "n_elements", "seed")
_FLOAT_FIELDS = ("tx_power", "noise_power", "user_radius", "rician_factor", "ref_path_loss")
# accepted dB-valued aliases -> (target field, converter)
_DB_ALIASES = {
    "tx_power_dbm": ("tx_power", dbm_to_watt),
    "noise_power_dbm": ("noise_power", dbm_to_watt),
    "ref_path_loss_db": ("ref_path_loss", db_to_linear),
}


def format_config(cfg: SystemConfig) -> str:
    """Render a config as flat ``key = value`` text (linear units, full precision)."""
    lines = []
    for name in _INT_FIELDS:
        lines.append(f"{name} = {getattr(cfg, name)}")
    for name in _FLOAT_FIELDS:
        lines.append(f"{name} = {getattr(cfg, name)!r}")
    for name in _VEC_FIELDS:
        vec = getattr(cfg, name)
        lines.append(f"{name} = {vec[0]!r}, {vec[1]!r}, {vec[2]!r}")
    for link in LINKS:
        lines.append(f"ploss_exp_{link} = {cfg.ploss_exponents[link]!r}")
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> SystemConfig:
    """Parse flat ``key = value`` text; '#' starts a comment."""
    values: dict[str, object] = {}
    assigned: set[str] = set()

    def assign(field_name: str, value, key: str) -> None:
        if field_name in assigned:
            raise ConfigError(f"duplicate assignment of {field_name} (via key {key!r})")
        assigned.add(field_name)
        values[field_name] = value

    ploss = dict(DEFAULT_PLOSS_EXPONENTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        try:
            if key in _INT_FIELDS:
                assign(key, int(val), key)
            elif key in _FLOAT_FIELDS:
                assign(key, float(val), key)
            elif key in _DB_ALIASES:
                target, conv = _DB_ALIASES[key]
                assign(target, conv(float(val)), key)
            elif key in _VEC_FIELDS:
                parts = [float(p) for p in val.replace(",", " ").split()]
                if len(parts) != 3:
                    raise ConfigError(f"line {lineno}: {key} needs 3 components")
                assign(key, tuple(parts), key)
            elif key.startswith("ploss_exp_"):
                link = key[len("ploss_exp_"):]
                if link not in LINKS:
                    raise ConfigError(f"line {lineno}: unknown link {link!r} in {key!r}")
                ploss[link] = float(val)
            else:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {exc}") from exc
    values["ploss_exponents"] = ploss
    cfg = SystemConfig(**values)  # type: ignore[arg-type]
    validate_config(cfg)
    return cfg


def load_config(path) -> SystemConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config_text(fh.read())


def save_config(cfg: SystemConfig, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_config(cfg))


def with_overrides(cfg: SystemConfig, **kwargs) -> SystemConfig:
    """Return a copy of cfg with the given fields replaced (and re-validated)."""
    new = replace(cfg, **kwargs)
    validate_config(new)
    return new
