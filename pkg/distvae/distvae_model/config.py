import logging
from dataclasses import asdict, dataclass, fields

from distvae.errors import ConfigError
from settings.config import config as default_config
from settings.config import required_keys

logger = logging.getLogger(__name__)

ORDINAL_ROUNDING_MODES = ('nearest_level', 'first_decimal')


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = default_config['epochs']
    batch_size: int = default_config['batch_size']
    learning_rate: float = default_config['learning_rate']
    beta: float = default_config['beta']
    latent_dim: int = default_config['latent_dim']
    knot_count: int = default_config['knot_count']
    hidden_width: int = default_config['hidden_width']
    hidden_layers: int = default_config['hidden_layers']
    seed: int = default_config['seed']
    adam_beta1: float = default_config['adam_beta1']
    adam_beta2: float = default_config['adam_beta2']
    adam_eps: float = default_config['adam_eps']
    clip_percentiles: bool = default_config['clip_percentiles']
    ordinal_rounding: str = default_config['ordinal_rounding']

    def __post_init__(self):
        for name in ('epochs', 'batch_size', 'latent_dim', 'knot_count', 'hidden_width', 'hidden_layers'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for name in ('learning_rate', 'beta', 'adam_eps'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ('adam_beta1', 'adam_beta2'):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1), got {getattr(self, name)!r}")
        if self.ordinal_rounding not in ORDINAL_ROUNDING_MODES:
            raise ConfigError(
                f"ordinal_rounding must be one of {ORDINAL_ROUNDING_MODES}, got {self.ordinal_rounding!r}")

    @classmethod
    def from_mapping(cls, overrides=None):
        """Defaults from settings.config, overridden key by key."""
        overrides = dict(overrides or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        merged = {key: default_config[key] for key in known}
        merged.update(overrides)
        for key in required_keys:
            if merged.get(key) is None:
                raise ConfigError(f"Missing required config key: {key}")
        return cls(**merged)

    def to_dict(self):
        return asdict(self)
