import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from errors import ConfigError

load_dotenv()

__version__ = '1.0.0'

VARIANTS = ('rescaled', 'log')
TRAJECTORY_LENGTH = 10
LONG_WINDOW = TRAJECTORY_LENGTH - 1
ALLOWED_QUANTILES = (4, 5, 10)
ENV_PREFIX = 'CITEFORECAST_'


def _env_int(name, default):
    value = os.getenv(ENV_PREFIX + name)
    return int(value) if value not in (None, '') else default


class Config:
    """Application configuration"""

    # Logging
    LOG_LEVEL = os.getenv(ENV_PREFIX + 'LOG_LEVEL', 'INFO')

    # Model windows
    LONG_WINDOW = _env_int('LONG_WINDOW', LONG_WINDOW)
    T_MIN = _env_int('T_MIN', 0)
    T_MAX = _env_int('T_MAX', 8)

    # Inclusion thresholds ("more than 100 publications", "more than 50 observations")
    SC_THRESHOLD = _env_int('SC_THRESHOLD', 100)
    UNCITED_THRESHOLD = _env_int('UNCITED_THRESHOLD', 50)
    UNCITED_SC_WINDOW = _env_int('UNCITED_SC_WINDOW', 3)

    # Stratification
    STRATA_QUANTILES = _env_int('STRATA_QUANTILES', 4)

    # Reports
    DIGITS = _env_int('DIGITS', 3)
    RANK_SIZE = _env_int('RANK_SIZE', 10)
    AREA_MAP = os.getenv(ENV_PREFIX + 'AREA_MAP', os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'macro_areas.csv'))
    OUT_DIR = os.getenv(ENV_PREFIX + 'OUT_DIR', 'out')

    # Execution
    WORKERS = _env_int('WORKERS', 1)
    SEED = _env_int('SEED', 20040101)

    @classmethod
    def validate_config(cls):
        """Validate that environment-provided defaults are usable"""
        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ConfigError(f"Invalid log level: {cls.LOG_LEVEL}")
        cls.defaults().validate()
        return True

    @classmethod
    def defaults(cls):
        return RunConfig(
            long_window=cls.LONG_WINDOW,
            t_min=cls.T_MIN,
            t_max=cls.T_MAX,
            sc_threshold=cls.SC_THRESHOLD,
            uncited_threshold=cls.UNCITED_THRESHOLD,
            uncited_sc_window=cls.UNCITED_SC_WINDOW,
            strata_quantiles=cls.STRATA_QUANTILES,
            digits=cls.DIGITS,
            rank_size=cls.RANK_SIZE,
            area_map=cls.AREA_MAP,
            out_dir=cls.OUT_DIR,
            workers=cls.WORKERS,
            seed=cls.SEED,
        )


@dataclass(frozen=True)
class RunConfig:
    """Settings for one pipeline run"""

    inputs: Tuple[str, ...] = ()
    variants: Tuple[str, ...] = VARIANTS
    t_min: int = 0
    t_max: int = 8
    long_window: int = LONG_WINDOW
    sc_threshold: int = 100
    uncited_threshold: int = 50
    uncited_sc_window: int = 3
    strata_quantiles: int = 4
    error_quantiles: Optional[int] = None
    area_map: Optional[str] = None
    out_dir: str = 'out'
    seed: int = 20040101
    workers: int = 1
    digits: int = 3
    rank_size: int = 10
    log_if_regressor: str = 'rescaled'
    errors_cited_only: bool = False
    synth_preset: Optional[str] = None
    synth_pubs: int = 5000
    synth_scs: int = 1

    # Excluded from the config hash: they never change results
    _UNHASHED = ('out_dir', 'workers', 'digits')

    @property
    def t_range(self):
        return range(self.t_min, self.t_max + 1)

    def quantiles_for_errors(self, variant):
        """Deciles for rescaled citations, quintiles for log-transformed ones"""
        if self.error_quantiles is not None:
            return self.error_quantiles
        return 10 if variant == 'rescaled' else 5

    def validate(self):
        if self.sc_threshold < 1 or self.uncited_threshold < 1:
            raise ConfigError('thresholds must be >= 1')
        if not 1 <= self.long_window <= LONG_WINDOW:
            raise ConfigError(f"long window must lie in [1, {LONG_WINDOW}], got {self.long_window}")
        if not 0 <= self.t_min <= self.t_max < self.long_window:
            raise ConfigError(
                f"t range [{self.t_min}, {self.t_max}] must lie within [0, {self.long_window - 1}]")
        if not 0 <= self.uncited_sc_window < self.long_window:
            raise ConfigError(f"uncited SC window {self.uncited_sc_window} outside [0, {self.long_window - 1}]")
        for q in (self.strata_quantiles, self.error_quantiles):
            if q is not None and q not in ALLOWED_QUANTILES:
                raise ConfigError(f"quantiles must be one of {ALLOWED_QUANTILES}, got {q}")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise ConfigError(f"variants must be drawn from {VARIANTS}, got {self.variants}")
        if self.log_if_regressor not in ('rescaled', 'raw'):
            raise ConfigError(f"log-variant IF regressor must be 'rescaled' or 'raw', got {self.log_if_regressor}")
        if self.workers < 1:
            raise ConfigError('workers must be >= 1')
        if self.digits < 0 or self.rank_size < 1:
            raise ConfigError('digits must be >= 0 and rank size >= 1')
        if self.synth_pubs < 1 or self.synth_scs < 1:
            raise ConfigError('synthetic corpus needs at least one SC and one publication')
        return self

    def config_hash(self):
        payload = {k: v for k, v in asdict(self).items() if k not in self._UNHASHED}
        # Input paths are hashed by name only
        canonical = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name, raw):
    """Convert a config-file string into the RunConfig field type"""
    if name in ('inputs', 'variants'):
        if name == 'variants' and raw == 'both':
            return VARIANTS
        return tuple(part.strip() for part in raw.split(',') if part.strip())
    if name == 'errors_cited_only':
        return raw.strip().lower() in ('1', 'true', 'yes', 'on')
    if name in ('error_quantiles',) and raw.strip() == '':
        return None
    if name in ('area_map', 'synth_preset', 'out_dir', 'log_if_regressor'):
        return raw.strip()
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"config key '{name}' expects an integer, got '{raw}'")


def load_config_file(path):
    """Read a dotenv-style KEY=value file into RunConfig field overrides"""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    overrides = {}
    for key, raw in dotenv_values(path).items():
        name = key.lower()
        if name.startswith(ENV_PREFIX.lower()):
            name = name[len(ENV_PREFIX):]
        if name not in _FIELD_TYPES or name.startswith('_'):
            raise ConfigError(f"unknown config key '{key}' in {path}")
        overrides[name] = _coerce(name, raw if raw is not None else '')
    return overrides


def build_run_config(config_file=None, **flags):
    """Merge Config defaults < config file < command-line flags"""
    run_config = Config.defaults()
    if config_file:
        run_config = replace(run_config, **load_config_file(config_file))
    explicit = {k: v for k, v in flags.items() if v is not None}
    if explicit:
        run_config = replace(run_config, **explicit)
    return run_config.validate()
