"""
Run configuration: built-in defaults, then a json/yaml/toml file, then command line flags.
"""
import logging
from typing import NamedTuple, Optional, Tuple

from rankprep.functions import parse_function, parse_interval
from rankprep.helper import (
    Encoding, Mode, ConfigError, DEFAULT_DIGIT_BITS, DEFAULT_K_MARGIN, DEFAULT_QUAD_POINTS, MAX_DIGIT_BITS,
    parse_backend,
)
from rankprep.serialization import canonical_hash, load_path_content

logger = logging.getLogger(__name__)

INVALID_PARAMETERS_MSG = ("The following parameter(s) are not valid: %s\n"
                          "The valid parameters are %s.")
BAD_CONFIG_FILE_MSG = "The config file {} must hold a mapping of parameters, got {}."
BAD_VALUE_MSG = "Invalid value for {}: {!r}. {}"
OUTPUT_FORMATS = ('json', 'csv')
# Never part of a report or its config hash.
RUNTIME_KEYS = frozenset(('output_dir', 'workers', 'format', 'log_frequency_in_sec'))


class RunConfig(NamedTuple):
    function: str = 'lognormal:0,0.5'
    interval: Tuple[float, float] = (0.0, 1.0)
    encoding: Encoding = Encoding.pointwise
    n: int = 6
    n_range: Optional[Tuple[int, ...]] = None
    r: int = 64
    r_range: Optional[Tuple[int, ...]] = None
    k_margin: float = DEFAULT_K_MARGIN
    t_override: Optional[float] = None
    backend: str = 'exact'
    mode: Mode = Mode.postselect
    d: int = DEFAULT_DIGIT_BITS
    seed: int = 0
    rescale: bool = True
    output_dir: Optional[str] = None
    # None uses every logical core
    workers: Optional[int] = None
    format: str = 'json'
    m: Optional[int] = None
    t: Optional[float] = None
    epsilon: float = 0.01
    trials: int = 100
    quad_points: int = DEFAULT_QUAD_POINTS
    lam: Optional[float] = None
    log_frequency_in_sec: int = 0

    def to_document(self):
        """The resolved config without the keys that only steer where and how fast it runs."""
        return {key: value for key, value in self._asdict().items() if key not in RUNTIME_KEYS}

    @property
    def config_hash(self):
        return canonical_hash(self.to_document())

    def n_values(self):
        if self.n_range is None:
            return (self.n,)
        return tuple(range(self.n_range[0], self.n_range[1] + 1))

    def r_values(self):
        return (self.r,) if self.r_range is None else self.r_range


def _int_tuple(name, value):
    if value is None:
        return None
    if isinstance(value, str):
        value = [item for item in value.replace(':', ',').split(',') if item.strip()]
    try:
        return tuple(int(item) for item in value)
    except (TypeError, ValueError):
        raise ConfigError(BAD_VALUE_MSG.format(name, value, 'Expected a comma separated list of integers.')) from None


def _n_range(value):
    """'6,11' is the inclusive range of n from 6 to 11."""
    bounds = _int_tuple('n_range', value)
    if bounds is None:
        return None
    if len(bounds) != 2 or bounds[0] > bounds[1] or bounds[0] < 1:
        raise ConfigError(BAD_VALUE_MSG.format('n_range', value, 'Expected low,high with 1 <= low <= high.'))
    return bounds


def _coerce(values):
    try:
        values['encoding'] = Encoding(str(values['encoding']))
        values['mode'] = Mode(str(values['mode']))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    values['interval'] = parse_interval(values['interval'])
    # Fails early on unknown function names.
    parse_function(values['function'], interval=values['interval'])
    values['backend'] = str(parse_backend(values['backend']))
    values['n_range'] = _n_range(values['n_range'])
    values['r_range'] = _int_tuple('r_range', values['r_range'])
    for name in ('n', 'r', 'd', 'seed', 'trials', 'quad_points', 'log_frequency_in_sec'):
        try:
            values[name] = int(values[name])
        except (TypeError, ValueError):
            raise ConfigError(BAD_VALUE_MSG.format(name, values[name], 'Expected an integer.')) from None
    for name in ('k_margin', 'epsilon', 't_override', 't', 'lam'):
        if values[name] is not None:
            try:
                values[name] = float(values[name])
            except (TypeError, ValueError):
                raise ConfigError(BAD_VALUE_MSG.format(name, values[name], 'Expected a number.')) from None
    for name in ('m', 'workers'):
        if values[name] is not None:
            values[name] = int(values[name])
    if not isinstance(values['rescale'], bool):
        values['rescale'] = str(values['rescale']).lower() in ('1', 'true', 'yes')
    values['seed'] &= 0xFFFFFFFFFFFFFFFF
    if values['n'] < 1 or values['r'] < 1 or values['trials'] < 1 or (values['workers'] or 1) < 1:
        raise ConfigError(BAD_VALUE_MSG.format('n, r, workers or trials', None, 'They must be at least 1.'))
    if not 1 <= values['d'] <= MAX_DIGIT_BITS:
        raise ConfigError(BAD_VALUE_MSG.format('d', values['d'], f'Expected 1 <= d <= {MAX_DIGIT_BITS}.'))
    if values['format'] not in OUTPUT_FORMATS:
        raise ConfigError(BAD_VALUE_MSG.format('format', values['format'], f'Expected one of {OUTPUT_FORMATS}.'))
    return values


def resolve_config(file_values=None, flag_values=None):
    """
    Merges defaults, file values and flag values, later sources winning.

    Flags that are None were not given and never override a file value.

    >>> resolve_config({'n': 4}, {'n': None, 'r': 8}).n
    4
    """
    values = RunConfig()._asdict()
    file_values = dict(file_values or {})
    invalid = set(file_values) - set(values)
    if invalid:
        raise ConfigError(INVALID_PARAMETERS_MSG % (
            ', '.join(sorted(invalid)), ', '.join(RunConfig._fields)))
    values.update(file_values)
    for key, value in (flag_values or {}).items():
        if value is None:
            continue
        if key not in values:
            raise ConfigError(INVALID_PARAMETERS_MSG % (key, ', '.join(RunConfig._fields)))
        values[key] = value
    return RunConfig(**_coerce(values))


def load_config(path):
    content = load_path_content(path)
    if not isinstance(content, dict):
        raise ConfigError(BAD_CONFIG_FILE_MSG.format(path, type(content).__name__))
    return content
