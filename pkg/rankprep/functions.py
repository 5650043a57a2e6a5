"""
Built-in scalar functions that can be loaded on a grid.

Functions are referred to by a spec string: the name, optionally followed by a
colon and comma separated parameters, e.g. ``normal:0.5,0.1`` or ``slater:10``.
Every function is vectorized over numpy arrays of x.
"""
import math
import logging
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Tuple

import numpy as np
from scipy import stats

from rankprep.helper import ConfigError, EvaluationError
from rankprep.serialization import load_path_content

logger = logging.getLogger(__name__)

ZETA_TERMS = 200
ZETA_CHUNK = 4096

UNKNOWN_FUNCTION_MSG = "Unknown function {!r}. The valid functions are: {}"
BAD_PARAMS_MSG = "Function {!r} takes at most {} parameter(s) ({}), got {}."
BAD_PARAM_VALUE_MSG = "Could not parse the parameters of {!r}: {}"
BAD_INTERVAL_MSG = "Interval must be two numbers a < b, got {!r}."
BAD_CORPUS_MSG = "A function corpus must be a list of entries with a name, got {!r}."
TABULATED_COLUMNS_MSG = "Tabulated function {} needs an x column and a y (or re/im) column."


def _uniform(x, value=1.0):
    return np.full(np.shape(x), value, dtype=float)


def _linear(x, slope=1.0, intercept=0.0):
    return slope * np.asarray(x, dtype=float) + intercept


def _square(x):
    return np.asarray(x, dtype=float) ** 2


def _normal(x, mu=0.5, sigma=0.1):
    return stats.norm.pdf(x, loc=mu, scale=sigma)


def _lognormal(x, mu=0.0, sigma=0.5):
    x = np.asarray(x, dtype=float)
    # scipy's lognorm takes s=sigma and scale=exp(mu); the pdf is 0 for x <= 0.
    return stats.lognorm.pdf(x, s=sigma, scale=np.exp(mu))


def _slater(x, alpha=10.0, center=0.5):
    return np.exp(-alpha * np.abs(np.asarray(x, dtype=float) - center))


def _box(x, low=0.25, high=0.75):
    x = np.asarray(x, dtype=float)
    return ((x >= low) & (x < high)).astype(float)


def _sine(x, frequency=1.0):
    return np.sin(2 * np.pi * frequency * np.asarray(x, dtype=float))


def _wave(x, frequency=1.0):
    return np.exp(2j * np.pi * frequency * np.asarray(x, dtype=float))


@lru_cache(maxsize=8)
def _eta_weights(terms):
    """
    Alternating-series acceleration weights (d_k - d_n) / d_n for k < n.

    d_k = n * sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!). The sums are exact
    rationals so the weights are correctly rounded floats in [-1, 0].
    """
    n = terms
    partial = Fraction(0)
    d = []
    for i in range(n + 1):
        partial += Fraction(math.factorial(n + i - 1) * 4 ** i, math.factorial(n - i) * math.factorial(2 * i))
        d.append(n * partial)
    d_n = d[n]
    return np.array([float((d[k] - d_n) / d_n) for k in range(n)])


def riemann_zeta(s, terms=ZETA_TERMS):
    """
    Riemann zeta at complex s with Re(s) > 0, s != 1.

    Uses the accelerated alternating series of the Dirichlet eta function,
    zeta(s) = eta(s) / (1 - 2^(1-s)).
    """
    s = np.asarray(s, dtype=complex)
    flat = s.ravel()
    weights = _eta_weights(terms)
    k = np.arange(terms)
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    log_k = np.log(k + 1.0)
    eta = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, ZETA_CHUNK):
        chunk = flat[start:start + ZETA_CHUNK]
        powers = np.exp(-chunk[:, None] * log_k[None, :])
        eta[start:start + ZETA_CHUNK] = -(powers @ (signs * weights))
    zeta = eta / (1 - 2.0 ** (1 - flat))
    return zeta.reshape(s.shape)


def _zeta(x, alpha=10.0):
    return np.abs(riemann_zeta(0.5 + 1j * alpha * np.asarray(x, dtype=float)))


class _Tabulated:
    """Linear interpolation of a function tabulated in a csv, json, yaml or toml file."""

    def __init__(self, path):
        rows = load_path_content(path)
        try:
            rows = sorted(rows, key=lambda row: float(row['x']))
            self.x = np.array([float(row['x']) for row in rows])
            if 'y' in rows[0]:
                self.y = np.array([complex(row['y']) for row in rows])
            else:
                self.y = np.array([complex(row['re'], row.get('im', 0.0)) for row in rows])
        except (KeyError, TypeError, IndexError):
            raise ConfigError(TABULATED_COLUMNS_MSG.format(path)) from None
        if not np.any(self.y.imag):
            self.y = self.y.real

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.iscomplexobj(self.y):
            return np.interp(x, self.x, self.y.real) + 1j * np.interp(x, self.x, self.y.imag)
        return np.interp(x, self.x, self.y)


FUNCTIONS = {
    'uniform': (_uniform, ('value',)),
    'linear': (_linear, ('slope', 'intercept')),
    'square': (_square, ()),
    'normal': (_normal, ('mu', 'sigma')),
    'lognormal': (_lognormal, ('mu', 'sigma')),
    'slater': (_slater, ('alpha', 'center')),
    'zeta': (_zeta, ('alpha',)),
    'box': (_box, ('low', 'high')),
    'sine': (_sine, ('frequency',)),
    'wave': (_wave, ('frequency',)),
}

# These never take negative or complex values, so they can be integral encoded.
DENSITIES = {'uniform', 'linear', 'square', 'normal', 'lognormal', 'slater', 'zeta', 'box'}


class ScalarFunction(NamedTuple):
    name: str
    params: Tuple = ()
    interval: Tuple[float, float] = (0.0, 1.0)
    source: str = ''

    def __call__(self, x):
        if self.name == 'tabulated':
            return _load_tabulated(self.source)(x)
        func, _ = FUNCTIONS[self.name]
        return func(x, *self.params)

    @property
    def spec(self):
        if self.name == 'tabulated':
            return f"tabulated:{self.source}"
        if not self.params:
            return self.name
        return f"{self.name}:{','.join(repr(float(p)) for p in self.params)}"

    @property
    def is_density(self):
        return self.name in DENSITIES

    def __str__(self):
        return self.spec


@lru_cache(maxsize=32)
def _load_tabulated(path):
    return _Tabulated(path)


def parse_interval(value, default=(0.0, 1.0)):
    """
    Accepts 'a,b', [a, b] or None.
    """
    if value is None:
        return tuple(default)
    if isinstance(value, str):
        value = value.split(',')
    try:
        a, b = (float(item) for item in value)
    except (TypeError, ValueError):
        raise ConfigError(BAD_INTERVAL_MSG.format(value)) from None
    if not a < b:
        raise ConfigError(BAD_INTERVAL_MSG.format(value))
    return (a, b)


def parse_function(spec, interval=None):
    """
    Parses a spec string such as 'lognormal:0,0.5' into a ScalarFunction.

    >>> float(parse_function('slater:20')(0.5))
    1.0
    """
    if isinstance(spec, ScalarFunction):
        if interval is None:
            return spec
        return spec._replace(interval=parse_interval(interval))
    name, _, raw_params = str(spec).strip().partition(':')
    name = name.strip().lower()
    interval = parse_interval(interval)
    if name == 'tabulated':
        if not raw_params:
            raise ConfigError(TABULATED_COLUMNS_MSG.format(spec))
        return ScalarFunction(name=name, interval=interval, source=raw_params.strip())
    if name not in FUNCTIONS:
        raise ConfigError(UNKNOWN_FUNCTION_MSG.format(name, ', '.join(sorted(FUNCTIONS) + ['tabulated'])))
    _, param_names = FUNCTIONS[name]
    try:
        params = tuple(float(item) for item in raw_params.split(',') if item.strip())
    except ValueError as e:
        raise ConfigError(BAD_PARAM_VALUE_MSG.format(spec, e)) from None
    if len(params) > len(param_names):
        raise ConfigError(BAD_PARAMS_MSG.format(name, len(param_names), ', '.join(param_names), len(params)))
    return ScalarFunction(name=name, params=params, interval=interval)


def load_corpus(path):
    """
    Loads a list of functions from a json, yaml or toml file.

    Each entry has a ``name`` (a spec string or a bare name), optional ``params``
    and an optional ``interval``. A toml file keeps the list under a ``functions`` key.
    """
    content = load_path_content(path)
    if isinstance(content, dict):
        content = content.get('functions')
    if not isinstance(content, list):
        raise ConfigError(BAD_CORPUS_MSG.format(content))
    corpus = []
    for entry in content:
        if isinstance(entry, str):
            corpus.append(parse_function(entry))
            continue
        if not isinstance(entry, dict) or 'name' not in entry:
            raise ConfigError(BAD_CORPUS_MSG.format(entry))
        spec = entry['name']
        params = entry.get('params')
        if params:
            spec = f"{spec}:{','.join(str(p) for p in params)}"
        corpus.append(parse_function(spec, interval=entry.get('interval')))
    return corpus


def evaluate(func, x):
    """
    Evaluates func at x as a complex vector and rejects non-finite samples, naming the first bad index.
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(func(x), dtype=complex)
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape).copy()
    bad = ~np.isfinite(values)
    if bad.any():
        index = np.unravel_index(int(np.argmax(bad)), bad.shape)
        index = index[0] if len(index) == 1 else index
        raise EvaluationError(f"Function {func} is not finite at index {index} (x={x[index]!r}).")
    return values


# The functions and parameters of the filling ratio table, all on [0, 1],
# with the tabulated ratio.
TABLE_ONE = (
    ('normal', (0.5, 0.1), 0.25),
    ('normal', (0.5, 0.05), 0.13),
    ('normal', (0.5, 0.01), 0.025),
    ('lognormal', (0.0, 0.5), 0.55),
    ('lognormal', (0.0, 1.0), 0.76),
    # Tabulated as 6.1e-3; the density on [0, 1] gives 0.61 (misprinted exponent).
    ('lognormal', (0.0, 1.5), 0.0061),
    ('slater', (5.0,), 0.37),
    ('slater', (10.0,), 0.20),
    ('slater', (20.0,), 0.10),
    ('zeta', (10.0,), 0.61),
    ('zeta', (20.0,), 0.50),
    ('zeta', (100.0,), 0.31),
)


def table_one_functions():
    return [(ScalarFunction(name=name, params=params), tabulated) for name, params, tabulated in TABLE_ONE]
