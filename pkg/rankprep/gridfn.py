import logging
from typing import NamedTuple, Optional

import numpy as np

from rankprep.functions import evaluate
from rankprep.helper import (
    Encoding, DomainError, ShapeError, PrecisionError, ResourceError, EvaluationError,
    DEFAULT_QUAD_POINTS, MAX_DIGIT_BITS, INITIAL_PHASES, NORM_TOLERANCE,
    get_max_grid_qubits, vector_norm,
)

logger = logging.getLogger(__name__)

BAD_INTERVAL_MSG = "A grid needs a < b, got a={} and b={}."
BAD_QUBITS_MSG = "A grid needs at least one qubit, got n={}."
GRID_MISMATCH_MSG = "Grid functions live on different grids or encodings: {} {} and {} {}."
BAD_LENGTH_MSG = "A grid function on {} qubits needs {} values, got {}."
NEGATIVE_DENSITY_MSG = "The density is negative at cell {} (x={!r}); the integral encoding needs f >= 0."
COMPLEX_DENSITY_MSG = "The density has an imaginary part at cell {}; the integral encoding needs a real f >= 0."
ZERO_FUNCTION_MSG = "The grid function is identically zero so its {} is undefined."
BAD_DIGIT_BITS_MSG = "Digitization needs 1 <= d <= {} bits, got d={}."
BAD_INTERPOLATION_MSG = "Interpolation parameter s must be in [0, 1], got {}."
BAD_QUAD_POINTS_MSG = "quad_points must be at least 1, got {}."
GRID_CAP_MSG = "Flattening to {} qubits exceeds the cap of {} qubits (set RANKPREP_MAX_GRID_QUBITS to raise it)."
NOT_REAL_MSG = "The overlap split needs a real valued function."


class _GridSpec(NamedTuple):
    a: float
    b: float
    n: int


class GridSpec(_GridSpec):
    """
    The uniform grid x_j = a + j * delta, j = 0 .. N - 1, with N = 2^n and delta = (b - a) / N.

    x_N = b is never a grid point.
    """
    __slots__ = ()

    def __new__(cls, a, b, n):
        a, b, n = float(a), float(b), int(n)
        if not a < b:
            raise DomainError(BAD_INTERVAL_MSG.format(a, b))
        if n < 1:
            raise ShapeError(BAD_QUBITS_MSG.format(n))
        return super().__new__(cls, a, b, n)

    @property
    def N(self):
        return 1 << self.n

    @property
    def delta(self):
        return (self.b - self.a) / self.N

    @property
    def width(self):
        return self.b - self.a

    def points(self):
        return self.a + np.arange(self.N) * self.delta


class GridFunction(NamedTuple):
    grid: GridSpec
    values: np.ndarray
    encoding: Encoding = Encoding.pointwise
    digit_bits: Optional[int] = None
    fmax_used: Optional[float] = None

    @property
    def N(self):
        return self.grid.N

    def with_values(self, values):
        return self._replace(values=values, digit_bits=None, fmax_used=None)

    def to_rows(self):
        """csv rows j, x_j, re, im."""
        x = self.grid.points()
        return [
            {'j': j, 'x_j': float(x[j]), 're': float(value.real), 'im': float(value.imag)}
            for j, value in enumerate(self.values)
        ]

    @classmethod
    def from_rows(cls, rows, grid, encoding=Encoding.pointwise):
        if len(rows) != grid.N:
            raise ShapeError(BAD_LENGTH_MSG.format(grid.n, grid.N, len(rows)))
        rows = sorted(rows, key=lambda row: int(row['j']))
        values = np.array([complex(float(row['re']), float(row['im'])) for row in rows])
        return cls(grid=grid, values=values, encoding=Encoding(encoding))


class FunctionNorms(NamedTuple):
    l1: float
    l2: float
    lmax: float
    normN: float
    filling_ratio: float


class StateVector(NamedTuple):
    grid: GridSpec
    amplitudes: np.ndarray
    unnormalized: bool = False

    @property
    def norm(self):
        return vector_norm(self.amplitudes)

    def normalized(self):
        norm = self.norm
        if norm == 0:
            raise DomainError(ZERO_FUNCTION_MSG.format('normalization'))
        return self._replace(amplitudes=self.amplitudes / norm, unnormalized=False)


def make_grid_function(grid, values, encoding=Encoding.pointwise):
    values = np.asarray(values, dtype=complex)
    if values.shape != (grid.N,):
        raise ShapeError(BAD_LENGTH_MSG.format(grid.n, grid.N, values.shape))
    return GridFunction(grid=grid, values=values, encoding=Encoding(encoding))


def check_same_grid(first, second):
    if first.grid != second.grid or first.encoding != second.encoding:
        raise ShapeError(GRID_MISMATCH_MSG.format(first.grid, first.encoding, second.grid, second.encoding))


def sample_pointwise(f, grid):
    """
    values[j] = f(x_j).
    """
    return GridFunction(grid=grid, values=evaluate(f, grid.points()), encoding=Encoding.pointwise)


def _round_half_away(values):
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def digitize(gf, d, fmax=None):
    """
    Rounds every value to the nearest multiple of fmax / 2^d.

    fmax defaults to max_j |values[j]|. Real and imaginary parts are rounded
    independently and ties go away from zero.
    """
    d = int(d)
    if d < 1 or d > MAX_DIGIT_BITS:
        raise PrecisionError(BAD_DIGIT_BITS_MSG.format(MAX_DIGIT_BITS, d))
    values = np.asarray(gf.values, dtype=complex)
    if fmax is None:
        fmax = float(np.max(np.abs(values))) if values.size else 0.0
    if fmax == 0:
        return gf._replace(values=values.copy(), digit_bits=d, fmax_used=0.0)
    quantum = fmax / 2.0 ** d
    rounded = _round_half_away(values.real / quantum) * quantum + 1j * _round_half_away(values.imag / quantum) * quantum
    return gf._replace(values=rounded, digit_bits=d, fmax_used=fmax)


def integral_encode(f, grid, quad_points=DEFAULT_QUAD_POINTS):
    """
    values[j] = sqrt(integral of f over [x_j, x_j + delta]).

    The cell integrals use the composite midpoint rule with quad_points panels per cell.
    """
    quad_points = int(quad_points)
    if quad_points < 1:
        raise DomainError(BAD_QUAD_POINTS_MSG.format(quad_points))
    offsets = (np.arange(quad_points) + 0.5) / quad_points
    x = grid.a + (np.arange(grid.N)[:, None] + offsets[None, :]) * grid.delta
    samples = evaluate(f, x)
    if np.any(samples.imag != 0):
        cell = int(np.argmax(np.any(samples.imag != 0, axis=1)))
        raise DomainError(COMPLEX_DENSITY_MSG.format(cell))
    samples = samples.real
    negative = samples < 0
    if negative.any():
        cell, panel = np.unravel_index(int(np.argmax(negative)), negative.shape)
        raise DomainError(NEGATIVE_DENSITY_MSG.format(cell, float(x[cell, panel])))
    cell_integrals = samples.mean(axis=1) * grid.delta
    return GridFunction(grid=grid, values=np.sqrt(cell_integrals).astype(complex), encoding=Encoding.integral)


def encode_function(f, grid, encoding=Encoding.pointwise, quad_points=DEFAULT_QUAD_POINTS, rescale=False):
    """
    Loads f on the grid with the given encoding, optionally rescaled to a unit eigenvalue scale.
    """
    if Encoding(encoding) == Encoding.integral:
        gf = integral_encode(f, grid, quad_points=quad_points)
    else:
        gf = sample_pointwise(f, grid)
    return rescale_to_unit_density(gf) if rescale else gf


def interpolate(f0, f1, s):
    """
    f_s = (1 - s) f0 + s f1.
    """
    check_same_grid(f0, f1)
    s = float(s)
    if not 0 <= s <= 1:
        raise DomainError(BAD_INTERPOLATION_MSG.format(s))
    if s == 0:
        return f0._replace(digit_bits=None, fmax_used=None)
    if s == 1:
        return f1._replace(digit_bits=None, fmax_used=None)
    return GridFunction(grid=f0.grid, values=(1 - s) * f0.values + s * f1.values, encoding=f0.encoding)


def norms(gf):
    """
    Riemann-sum norms of the samples.

    l1 = sum |f| delta, l2 = sqrt(sum |f|^2 delta), lmax = max |f|,
    normN = sqrt(sum |f|^2) and filling_ratio = l1 / lmax.
    """
    magnitudes = np.abs(gf.values)
    lmax = float(np.max(magnitudes))
    if lmax == 0:
        raise DomainError(ZERO_FUNCTION_MSG.format('filling ratio'))
    squares = float(np.sum(magnitudes ** 2))
    l1 = float(np.sum(magnitudes)) * gf.grid.delta
    return FunctionNorms(
        l1=l1,
        l2=float(np.sqrt(squares * gf.grid.delta)),
        lmax=lmax,
        normN=float(np.sqrt(squares)),
        filling_ratio=l1 / lmax,
    )


def filling_ratio(f, grid):
    return norms(sample_pointwise(f, grid)).filling_ratio


def encoded_filling_ratio(gf):
    """
    The filling ratio of the function behind gf.

    An integral encoded gf holds sqrt cell masses, so the density is recovered as g^2 / delta.
    """
    if gf.encoding == Encoding.pointwise:
        return norms(gf).filling_ratio
    masses = np.abs(gf.values) ** 2
    peak = float(np.max(masses))
    if peak == 0:
        raise DomainError(ZERO_FUNCTION_MSG.format('filling ratio'))
    return gf.grid.delta * float(np.sum(masses)) / peak


def eigenvalue_scale(gf):
    """
    The one nonzero eigenvalue of A/N for the rank-1 matrix built from gf.

    It is normN^2 / N for the pointwise encoding and sum_j g_j^2 for the integral encoding.
    """
    squares = float(np.sum(np.abs(gf.values) ** 2))
    if gf.encoding == Encoding.integral:
        return squares
    return squares / gf.N


def rescale_to_unit_density(f1):
    """
    Scales f1 so the nonzero eigenvalue of A/N is exactly 1.

    For the pointwise encoding that is normN = sqrt(N); for the integral
    encoding the squared values sum to 1.
    """
    scale = eigenvalue_scale(f1)
    if scale == 0:
        raise DomainError(ZERO_FUNCTION_MSG.format('normalization'))
    return f1.with_values(f1.values / np.sqrt(scale))


def choose_initial_phase(f1):
    """
    The phase among (+-1 +-i)/sqrt(2) that maximizes Re(conj(phase) * sum_j f1(x_j)).

    Ties keep the first candidate in INITIAL_PHASES order.
    """
    total = complex(np.sum(f1.values))
    scores = [(np.conj(phase) * total).real for phase in INITIAL_PHASES]
    return INITIAL_PHASES[int(np.argmax(scores))]


def initial_function(f1, phase=None):
    """
    The phase-constant starting function f0 on the grid and encoding of f1, with eigenvalue scale 1.
    """
    phase = choose_initial_phase(f1) if phase is None else phase
    value = phase if f1.encoding == Encoding.pointwise else phase / np.sqrt(f1.N)
    return GridFunction(grid=f1.grid, values=np.full(f1.N, value, dtype=complex), encoding=f1.encoding)


def flatten_grids(f, *grids):
    """
    Samples a function of len(grids) variables on the product grid.

    The first grid indexes the most significant bits of the flat index. The
    returned grid spans the volume of the product so Riemann sums stay integrals.
    """
    total_qubits = sum(grid.n for grid in grids)
    cap = get_max_grid_qubits()
    if total_qubits > cap:
        raise ResourceError(GRID_CAP_MSG.format(total_qubits, cap))
    coordinates = np.meshgrid(*[grid.points() for grid in grids], indexing='ij')
    values = np.asarray(f(*coordinates), dtype=complex)
    values = np.broadcast_to(values, coordinates[0].shape).ravel()
    if not np.all(np.isfinite(values)):
        index = int(np.argmax(~np.isfinite(values)))
        raise EvaluationError(f"Function {f} is not finite at flat index {index}.")
    volume = float(np.prod([grid.width for grid in grids]))
    return GridFunction(grid=GridSpec(0.0, volume, total_qubits), values=values, encoding=Encoding.pointwise)


def flatten_multivariate(f2, grid_x, grid_y):
    """
    values[k] = f2(x_{k_M}, y_{k_L}) where k_M are the high grid_x.n bits of k.
    """
    return flatten_grids(f2, grid_x, grid_y)


def target_state(gf):
    """The normalized state whose amplitudes are proportional to the grid values."""
    return StateVector(grid=gf.grid, amplitudes=np.asarray(gf.values, dtype=complex)).normalized()


def plus_state(grid):
    return StateVector(grid=grid, amplitudes=np.full(grid.N, 1 / np.sqrt(grid.N), dtype=complex))


def fidelity(state_a, state_b):
    """|<a|b>|^2, blind to global phases."""
    return float(np.abs(np.vdot(state_a.amplitudes, state_b.amplitudes)) ** 2)


def check_normalized(state, name='state'):
    if state.unnormalized or abs(state.norm - 1) > 1e-9:
        raise DomainError(f"The {name} must be normalized, its norm is {state.norm!r}.")


def overlap_with_plus(gf):
    """|<psi|+^n>|^2 of the normalized encoding of gf."""
    return fidelity(target_state(gf), plus_state(gf.grid))


def max_amplitude_ratio(gf):
    """N * max_j |psi_j|^2 of the normalized encoding of gf."""
    amplitudes = target_state(gf).amplitudes
    return float(gf.N * np.max(np.abs(amplitudes) ** 2))


def encoding_infidelity(f, grid, quad_points=DEFAULT_QUAD_POINTS):
    """
    1 - |<pointwise(sqrt f)|integral(f)>|^2 for a density f.
    """
    pointwise = sample_pointwise(lambda x: np.sqrt(np.asarray(f(x), dtype=float)), grid)
    integral = integral_encode(f, grid, quad_points=quad_points)
    return 1 - fidelity(target_state(pointwise), target_state(integral))


def overlap_split(gf):
    """
    Splits a real gf into f+ = (f + |f|)/2 and f- = (f - |f|)/2 and returns
    the part with the larger filling ratio (f- is returned with its sign).

    Returns (part, sign) with sign = +1 or -1.
    """
    if np.any(np.abs(gf.values.imag) > NORM_TOLERANCE * max(1.0, float(np.max(np.abs(gf.values))))):
        raise DomainError(NOT_REAL_MSG)
    real = gf.values.real
    best = None
    for sign in (1, -1):
        part = (real + sign * np.abs(real)) / 2
        if not np.any(part):
            continue
        candidate = gf.with_values(part.astype(complex))
        ratio = norms(candidate).filling_ratio
        if best is None or ratio > best[0]:
            best = (ratio, candidate, sign)
    if best is None:
        raise DomainError(ZERO_FUNCTION_MSG.format('overlap split'))
    return best[1], best[2]
