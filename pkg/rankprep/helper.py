import os
import re
import sys
import enum
import time
import logging
from hashlib import sha256
from threading import Timer
from typing import NamedTuple

import numpy as np


logger = logging.getLogger(__name__)


def _int_or_zero(value):
    """
    Integer value of one version component. Non-digits are stripped, so 24b becomes 24.
    """
    try:
        return int(value)
    except Exception:
        digits = [char for char in value if char.isdigit()]
        if digits:
            return int(''.join(digits))
        return 0


def get_semvar_as_integer(version):
    """
    Converts:

    '1.23.5' to 1023005
    """
    version = version.split('.')
    if len(version) > 3:
        version = version[:3]
    elif len(version) < 3:
        version.extend(['0'] * (3 - len(version)))

    return sum([10**(i * 3) * _int_or_zero(v) for i, v in enumerate(reversed(version))])


if get_semvar_as_integer(np.__version__) < 1022000:
    sys.exit('The minimum required Numpy version is 1.22.0. Please upgrade your Numpy package.')


class EnumBase(str, enum.Enum):
    def __repr__(self):
        return f"'{self.name}'"

    def __str__(self):
        return self.name


class Encoding(EnumBase):
    pointwise = 'pointwise'
    integral = 'integral'


class Backend(EnumBase):
    exact = 'exact'
    taylor = 'taylor'
    # exp(-i dt H) applied directly, without the ancilla register
    ideal = 'ideal'


class Mode(EnumBase):
    postselect = 'postselect'
    sample = 'sample'


class BackendSpec(NamedTuple):
    kind: Backend = Backend.exact
    taylor_order: int = 7

    def __str__(self):
        if self.kind == Backend.taylor:
            return f"taylor:{self.taylor_order}"
        return str(self.kind)


# Errors

class RankPrepError(Exception):
    """
    Base class of every error raised by rankprep.
    """
    pass


class EvaluationError(RankPrepError, ValueError):
    pass


class DomainError(RankPrepError, ValueError):
    pass


class ShapeError(RankPrepError, ValueError):
    pass


class PrecisionError(RankPrepError, ValueError):
    pass


class ResourceError(RankPrepError, MemoryError):
    pass


class DegenerateHamiltonianError(RankPrepError, ValueError):
    pass


class PostselectionError(RankPrepError, RuntimeError):
    pass


class FitError(RankPrepError, ValueError):
    pass


class SearchExhaustedError(RankPrepError, RuntimeError):
    pass


class ConfigError(RankPrepError, ValueError):
    pass


# Defaults

DEFAULT_DIGIT_BITS = 32
MAX_DIGIT_BITS = 62
DEFAULT_QUAD_POINTS = 64
DEFAULT_K_MARGIN = 100.0
# Total time of the fig2 sweeps, dt * ||A||_max < 1 at r = 64 for the unit-scale log-normal target.
FIG2_TOTAL_TIME = 25.5
DEFAULT_TAYLOR_ORDER = 7
DEFAULT_MAX_JOINT_QUBITS = 12
DEFAULT_MAX_GRID_QUBITS = 24
EMPIRICAL_MAX_QUBITS = 8
# Leading-order bounds are asserted with multiplicative slack (1 + LEADING_ORDER_SLACK).
LEADING_ORDER_SLACK = 0.5
POSTSELECT_MIN_PROB = 1e-15
NORM_TOLERANCE = 1e-12
ORACLE_QUERIES_PER_STEP = 4

MAX_JOINT_QUBITS_ENV = 'RANKPREP_MAX_JOINT_QUBITS'
MAX_GRID_QUBITS_ENV = 'RANKPREP_MAX_GRID_QUBITS'

# Bump a schema version whenever a column or a key of that document changes.
RUN_REPORT_SCHEMA_VERSION = 1
BOUNDS_REPORT_SCHEMA_VERSION = 1
TRACE_CSV_SCHEMA_VERSION = 1
TABLE_CSV_SCHEMA_VERSION = 1

SQRT_HALF = 1 / np.sqrt(2)

# Candidate phases of the trivial initial function, in tie-breaking order.
INITIAL_PHASES = (
    complex(SQRT_HALF, SQRT_HALF),
    complex(SQRT_HALF, -SQRT_HALF),
    complex(-SQRT_HALF, SQRT_HALF),
    complex(-SQRT_HALF, -SQRT_HALF),
)

INVALID_ENV_CAP_MSG = 'Environment variable {} must be a positive integer, got {!r}. Using the default of {}.'
INVALID_BACKEND_MSG = "Backend must be 'exact', 'ideal' or 'taylor:m' with m >= 1, got {!r}."


def _cap_from_env(env_name, default):
    value = os.environ.get(env_name)
    if value is None:
        return default
    try:
        cap = int(value)
        if cap < 1:
            raise ValueError(value)
    except ValueError:
        logger.warning(INVALID_ENV_CAP_MSG.format(env_name, value, default))
        return default
    return cap


def get_max_joint_qubits():
    """Qubit cap of a single register in a JointTensor (the tensor holds 4^n amplitudes)."""
    return _cap_from_env(MAX_JOINT_QUBITS_ENV, DEFAULT_MAX_JOINT_QUBITS)


def get_max_grid_qubits():
    return _cap_from_env(MAX_GRID_QUBITS_ENV, DEFAULT_MAX_GRID_QUBITS)


def parse_backend(value):
    """
    Parses 'exact', 'taylor' or 'taylor:m' into a BackendSpec.
    """
    if isinstance(value, BackendSpec):
        return value
    if isinstance(value, Backend):
        return BackendSpec(kind=value)
    text = str(value).strip().lower()
    if text in ('exact', 'ideal'):
        return BackendSpec(kind=Backend(text))
    match = re.fullmatch(r'taylor(?::(\d+))?', text)
    if match:
        order = int(match.group(1)) if match.group(1) else DEFAULT_TAYLOR_ORDER
        if order >= 1:
            return BackendSpec(kind=Backend.taylor, taylor_order=order)
    raise ConfigError(INVALID_BACKEND_MSG.format(value))


def sha256hex(obj):
    """Use Sha256 as a cryptographic hash."""
    if isinstance(obj, str):
        obj = obj.encode('utf-8')
    return sha256(obj).hexdigest()


def _stream_key(name):
    # Stable across processes and python versions, unlike hash().
    return int(sha256hex(name)[:8], 16)


def substream(seed, name, *indexes):
    """
    A numpy Generator for the named sub-stream of a run seed.

    Streams are keyed by their name and integer indexes, so drawing from one
    stream never shifts the draws of another:

    >>> a = substream(7, 'step', 3).random()
    >>> b = substream(7, 'step', 3).random()
    >>> a == b
    True
    """
    spawn_key = (_stream_key(name), *[int(i) for i in indexes])
    sequence = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))


def ensure_rng(rng, seed=0, name='default'):
    """Pass Generators through; build a named sub-stream from seed otherwise."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is not None:
        return np.random.default_rng(rng)
    return substream(seed, name)


def round_significant(value, digits=2):
    """Round to the given number of significant figures."""
    if value == 0 or not np.isfinite(value):
        return value
    return float(f"{value:.{digits - 1}e}")


class RepeatedTimer:
    """
    Threaded Repeated Timer by MestreLion
    https://stackoverflow.com/a/38317060/1497443
    """

    def __init__(self, interval, function, *args, **kwargs):
        self._timer = None
        self.interval = interval
        self.function = function
        self.args = args
        self.start_time = time.time()
        self.kwargs = kwargs
        self.is_running = False
        self.start()

    def _get_duration_sec(self):
        return int(time.time() - self.start_time)

    def _run(self):
        self.is_running = False
        self.start()
        self.function(*self.args, **self.kwargs)

    def start(self):
        self.kwargs.update(duration=self._get_duration_sec())
        if not self.is_running:
            self._timer = Timer(self.interval, self._run)
            self._timer.daemon = True
            self._timer.start()
            self.is_running = True

    def stop(self):
        duration = self._get_duration_sec()
        self._timer.cancel()
        self.is_running = False
        return duration


def vector_norm(values):
    """
    2-norm with numpy's pairwise summation, so the result does not depend on thread count.
    """
    return float(np.sqrt(np.sum(np.abs(values) ** 2)))

