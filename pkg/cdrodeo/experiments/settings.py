"""
Resolved experiment settings

Values come from three layers, highest priority first: explicit command-line flags,
a plain key=value file given by --config, and the defaults in config.py. The process
environment is never consulted.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from dotenv import dotenv_values

import config
from ..errors import InvalidInput
from ..estimator import EvalPoint
from ..kernels import KERNELS, get_kernel
from ..models import MODELS, ModelSpec
from ..rodeo import DIRECT_FLOORS, REVERSE_CAPS, REVERSE_GUARDS, RodeoConfig, Variant

logger = logging.getLogger(__name__)

MARGINALS = ('known', 'preestimator', 'chained')
COMPARE_MARGINALS = ('preestimator', 'chained')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


class _Unset:
    """Marks a flag that was not given on the command line"""

    def __repr__(self) -> str:
        return 'UNSET'


UNSET = _Unset()


def _choice(options, lower: bool = True) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = str(text).strip()
        value = value.lower() if lower else value.upper()
        if value not in options:
            raise InvalidInput(f"'{text}' is not one of {list(options)}")
        return value
    parse.__name__ = 'choice'
    return parse


def parse_int(text: Union[str, int]) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise InvalidInput(f"Expected an integer, got '{text}'") from None


def parse_float(text: Union[str, float]) -> float:
    try:
        value = float(str(text).strip())
    except ValueError:
        raise InvalidInput(f"Expected a number, got '{text}'") from None
    if not math.isfinite(value):
        raise InvalidInput(f"Expected a finite number, got '{text}'")
    return value


def parse_auto_float(text: Union[str, float, None]) -> Optional[float]:
    """A number, or 'auto' for the procedure's own default"""
    if text is None or str(text).strip().lower() in ('', 'auto'):
        return None
    return parse_float(text)


def parse_optional_int(text: Union[str, int, None]) -> Optional[int]:
    if text is None or str(text).strip().lower() in ('', 'auto', 'none'):
        return None
    return parse_int(text)


def parse_float_list(text: str) -> Tuple[float, ...]:
    """Comma-separated numbers, e.g. '0,0.5,1'"""
    values = tuple(parse_float(v) for v in str(text).split(',') if v.strip())
    if not values:
        raise InvalidInput(f"Expected a comma-separated list of numbers, got '{text}'")
    return values


def parse_int_list(text: str) -> Tuple[int, ...]:
    values = tuple(parse_int(v) for v in str(text).split(',') if v.strip())
    if not values:
        raise InvalidInput(f"Expected a comma-separated list of integers, got '{text}'")
    return values


def parse_bool(text: Union[str, bool]) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off', ''):
        return False
    raise InvalidInput(f"Expected a boolean, got '{text}'")


def parse_point(text: Union[str, EvalPoint, None]) -> Optional[EvalPoint]:
    if text is None or isinstance(text, EvalPoint):
        return text
    if str(text).strip().lower() in ('', 'auto'):
        return None
    return EvalPoint.parse(str(text))


def parse_path(text: Union[str, Path, None]) -> Optional[Path]:
    if text is None or str(text).strip() == '':
        return None
    return Path(str(text).strip())


def parse_optional_choice(options) -> Callable[[str], Optional[str]]:
    choice = _choice(options)

    def parse(text: Optional[str]) -> Optional[str]:
        if text is None or str(text).strip().lower() in ('', 'none'):
            return None
        return choice(text)
    parse.__name__ = 'choice'
    return parse


# Setting name -> parser applied to config-file strings (and used as argparse type=)
PARSERS: Dict[str, Callable[[Any], Any]] = {
    'model': _choice(MODELS),
    'd1': parse_int,
    'n': parse_int,
    'seed': parse_int,
    'a': parse_auto_float,
    'beta': parse_float,
    'h0': parse_auto_float,
    'kernel': _choice(tuple(KERNELS)),
    'variant': _choice(tuple(v.value for v in Variant)),
    'marginal': _choice(MARGINALS),
    'w': parse_point,
    'out': parse_path,
    'threads': parse_optional_int,
    'no_timing': parse_bool,
    'input': parse_path,
    'compare_marginal': parse_optional_choice(COMPARE_MARGINALS),
    'a_grid': parse_float_list,
    'beta_grid': parse_float_list,
    'd1_grid': parse_int_list,
    'n_grid': parse_int_list,
    'samples': parse_int,
    'points': parse_int,
    'replicates': parse_int,
    'direction': lambda text: str(text).strip().lower(),
    'grid_min': parse_float,
    'grid_max': parse_float,
    'grid_points': parse_int,
    'preestimator_c': parse_float,
    'aux_cap': parse_int,
    'cache_dir': parse_path,
    'reverse_guard': _choice(REVERSE_GUARDS),
    'reverse_cap': _choice(REVERSE_CAPS),
    'direct_floor': _choice(DIRECT_FLOORS),
    'threshold_scale': parse_float,
    'max_iterations': parse_optional_int,
    'bench_repeats': parse_int,
    'log_level': _choice(LOG_LEVELS, lower=False),
}


@dataclass(frozen=True)
class ExperimentSettings:
    """Typed view of every knob an experiment reads"""

    model: str = config.DEFAULT_MODEL
    d1: Optional[int] = None
    n: int = config.DEFAULT_N
    seed: int = config.DEFAULT_SEED
    a: Optional[float] = None
    beta: float = config.DEFAULT_BETA
    h0: Optional[float] = None
    kernel: str = config.DEFAULT_KERNEL
    variant: str = config.DEFAULT_VARIANT
    marginal: str = config.DEFAULT_MARGINAL
    w: Optional[EvalPoint] = None
    out: Optional[Path] = None
    threads: Optional[int] = None
    no_timing: bool = False
    input: Optional[Path] = None
    compare_marginal: Optional[str] = None
    a_grid: Tuple[float, ...] = parse_float_list(config.DEFAULT_A_GRID)
    beta_grid: Tuple[float, ...] = parse_float_list(config.DEFAULT_BETA_GRID)
    d1_grid: Tuple[int, ...] = parse_int_list(config.DEFAULT_D1_GRID)
    n_grid: Tuple[int, ...] = parse_int_list(config.DEFAULT_N_GRID)
    samples: int = config.DEFAULT_SAMPLES_B
    points: int = config.DEFAULT_POINTS_M
    replicates: int = config.DEFAULT_REPLICATES_R
    direction: str = 'y1'
    grid_min: float = config.DEFAULT_GRID_MIN
    grid_max: float = config.DEFAULT_GRID_MAX
    grid_points: int = config.DEFAULT_GRID_POINTS
    preestimator_c: float = config.DEFAULT_PREESTIMATOR_C
    aux_cap: int = config.AUX_SAMPLE_CAP
    cache_dir: Optional[Path] = None
    reverse_guard: str = config.DEFAULT_REVERSE_GUARD
    reverse_cap: str = config.DEFAULT_REVERSE_CAP
    direct_floor: str = config.DEFAULT_DIRECT_FLOOR
    threshold_scale: float = 1.0
    max_iterations: Optional[int] = None
    bench_repeats: int = config.BENCH_REPEATS
    log_level: str = config.LOG_LEVEL

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInput(f"n must be at least 2, got {self.n}")
        if self.d1 is not None and self.d1 < 0:
            raise InvalidInput(f"d1 must be nonnegative, got {self.d1}")
        for name in ('samples', 'points', 'replicates', 'grid_points', 'bench_repeats', 'aux_cap'):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be positive, got {getattr(self, name)}")
        if self.threads is not None and self.threads < 1:
            raise InvalidInput(f"threads must be positive, got {self.threads}")
        if any(d1 < 1 for d1 in self.d1_grid):
            raise InvalidInput(f"d1 grid entries must be positive, got {self.d1_grid}")
        if any(n < 2 for n in self.n_grid):
            raise InvalidInput(f"n grid entries must be at least 2, got {self.n_grid}")
        if not self.grid_min <= self.grid_max:
            raise InvalidInput(f"grid_min must not exceed grid_max ({self.grid_min} > {self.grid_max})")
        if not self.preestimator_c > 1.0:
            raise InvalidInput(f"preestimator_c must exceed 1, got {self.preestimator_c}")
        # Fails early on an invalid beta, h0, a or rule name
        self.rodeo_config()

    def rodeo_config(self, **overrides) -> RodeoConfig:
        """RodeoConfig from these settings, with per-run overrides such as a=... or beta=..."""
        values = dict(
            a=self.a,
            beta=self.beta,
            h0=self.h0,
            kernel=get_kernel(self.kernel),
            variant=self.variant,
            max_iterations=self.max_iterations,
            reverse_guard=self.reverse_guard,
            reverse_cap=self.reverse_cap,
            direct_floor=self.direct_floor,
            threshold_scale=self.threshold_scale,
        )
        values.update(overrides)
        return RodeoConfig(**values)

    @property
    def model_d1(self) -> int:
        """d1 for model draws; an --input file infers its own from the header unless d1 is given"""
        return config.DEFAULT_D1 if self.d1 is None else self.d1

    def model_spec(self, d1: Optional[int] = None, seed: Optional[int] = None) -> ModelSpec:
        return ModelSpec(self.model, self.model_d1 if d1 is None else d1, self.seed if seed is None else seed)


def normalize_key(key: str) -> str:
    return str(key).strip().lower().replace('-', '_')


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a key=value file such as

        beta=0.9
        n=20000
        marginal=known

    Args:
        path: Config file path

    Returns:
        Parsed values keyed by setting name

    Raises:
        InvalidInput: missing file, unknown key or unparsable value
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"Config file not found: {path}")
    parsed = {}
    for key, value in dotenv_values(path).items():
        name = normalize_key(key)
        if name not in PARSERS:
            raise InvalidInput(f"Unknown key '{key}' in {path}. Known keys: {sorted(PARSERS)}")
        if value is None:
            raise InvalidInput(f"Key '{key}' in {path} has no value")
        parsed[name] = PARSERS[name](value)
    logger.info(f"Loaded {len(parsed)} settings from {path}")
    return parsed


def resolve_settings(cli_values: Dict[str, Any], config_path: Optional[Union[str, Path]] = None) -> ExperimentSettings:
    """
    Merge flags over the config file over the defaults

    Args:
        cli_values: Flag values; UNSET means the flag was not given. An explicit None
            (a flag given as 'auto' or 'none') overrides the config file
        config_path: Optional key=value file

    Returns:
        ExperimentSettings
    """
    values = load_config_file(config_path) if config_path else {}
    values.update({normalize_key(k): v for k, v in cli_values.items()
                   if v is not UNSET and normalize_key(k) in PARSERS})
    return ExperimentSettings(**values)
