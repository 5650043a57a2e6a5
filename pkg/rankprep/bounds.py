"""
Closed form bounds of the adiabatic preparation and their empirical checks.

Every bound is written in terms of c, the nonzero eigenvalue of A(1)/N.
After rescaling c = 1 and the bounds reduce to the gap 1/2, the delay
factor 8 and the discretization error 12/r.
"""
import math
import logging
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import integrate, linalg

from rankprep.gridfn import (
    GridSpec, encoded_filling_ratio, eigenvalue_scale, encode_function, initial_function,
    make_grid_function, plus_state,
)
from rankprep.helper import (
    Encoding, DomainError, ResourceError, DEFAULT_DIGIT_BITS, DEFAULT_K_MARGIN,
    EMPIRICAL_MAX_QUBITS, ORACLE_QUERIES_PER_STEP, substream,
)
from rankprep.rank1 import (
    Rank1Hamiltonian, delay_factor, delay_factor_bound, gap_lower_bound, matrix_norms,
    spectral_gap, total_time,
)

logger = logging.getLogger(__name__)

DEFAULT_S_POINTS = 1000
DELTA0_POINTS_PER_STEP = 10
PROJECTION_EXPONENTS = {Encoding.pointwise: -4, Encoding.integral: -2}

DOWNGRADE_MSG = "Empirical bounds are only evaluated up to n={}; n={} reports the closed forms only."
BAD_STEPS_MSG = "r must be at least 1, got {}."
BAD_EPSILON_MSG = "epsilon must be positive, got {}."
DENSE_CAP_MSG = "Dense evaluation is limited to n={}, got n={}."


class BoundsReport(NamedTuple):
    n: int
    r: int
    T: float
    eigenvalue_scale: float
    gap_bound: float
    delay_bound: float
    delta0: float
    delta0_coarse: float
    delta1: float
    total_unitary_bound: float
    prob_bound: float
    a_max: float
    a_over_n_2: float
    norm_ratio: float
    filling_ratio: float
    query_count: int
    qubits: int
    ancilla_qubits: int
    empirical: bool
    downgraded: bool = False
    gap_min_empirical: Optional[float] = None
    delay_max_empirical: Optional[float] = None
    delta0_empirical: Optional[float] = None


class NormStudyRow(NamedTuple):
    n: int
    a_max: float
    a_over_n_2: float
    ratio: float
    filling_ratio: float


class NormStudy(NamedTuple):
    encoding: Encoding
    rows: List[NormStudyRow]
    limit_a_over_n_2: float
    limit_ratio: float


class Projection(NamedTuple):
    filling_ratio: float
    exponent: int
    constant: float
    epsilon: float
    r: int


class RegressionResult(NamedTuple):
    slope_median: float
    slopes: List[float]


class TotalDeviation(NamedTuple):
    deviation: float
    bound: float
    T: float


def _a_max_over_path(f0, f1):
    # |f_s| <= max(|f0|, |f1|) pointwise
    return max(matrix_norms(Rank1Hamiltonian(f0, f1, s)).a_max for s in (0.0, 1.0))


def discretization_bound(c, r):
    """max_s ||H(s) - H(ceil(s r)/r)||_2 <= (2/r)(1 + 3 sqrt(c) + 2c)."""
    return 2 / r * (1 + 3 * math.sqrt(c) + 2 * c)


def simulation_bound(a_max, T, r):
    return 2.5 * a_max ** 2 * T / r


def empirical_gap_delay(f1, s_points=DEFAULT_S_POINTS):
    """min_s g(s) and max_s ||dH/ds|| / g(s)^2 over an even grid of s in [0, 1]."""
    f0 = initial_function(f1)
    gap_min = math.inf
    delay_max = 0.0
    for s in np.linspace(0, 1, s_points):
        h = Rank1Hamiltonian(f0, f1, s)
        gap_min = min(gap_min, spectral_gap(h))
        delay_max = max(delay_max, delay_factor(h))
    return gap_min, delay_max


def rank1_difference_norm(a, b):
    """
    ||a a^H - b b^H||_2.

    The difference lives on span(a, b) where it acts as [[|a|^2, <a|b>], [-<b|a>, -|b|^2]].
    """
    na = float(np.vdot(a, a).real)
    nb = float(np.vdot(b, b).real)
    overlap = abs(np.vdot(a, b)) ** 2
    trace = na - nb
    det = overlap - na * nb
    discriminant = math.sqrt(max(trace ** 2 - 4 * det, 0.0))
    return (abs(trace) + discriminant) / 2


def empirical_delta0(f1, r, points_per_step=DELTA0_POINTS_PER_STEP, dense=False):
    """
    max over s = k / (points_per_step r) of ||H(s) - H(ceil(s r) / r)||_2.

    dense=True evaluates the spectral norm of the N x N difference instead of the closed form.
    """
    if dense and f1.grid.n > EMPIRICAL_MAX_QUBITS:
        raise ResourceError(DENSE_CAP_MSG.format(EMPIRICAL_MAX_QUBITS, f1.grid.n))
    f0 = initial_function(f1)
    worst = 0.0
    total = points_per_step * r
    for k in range(1, total + 1):
        step = -(-k // points_per_step)
        h = Rank1Hamiltonian(f0, f1, k / total)
        h_step = Rank1Hamiltonian(f0, f1, step / r)
        if dense:
            distance = float(np.linalg.norm(h.dense() - h_step.dense(), 2))
        else:
            distance = rank1_difference_norm(h.v, h_step.v)
        worst = max(worst, distance)
    return worst


def eval_bounds(f1, r, k_margin=DEFAULT_K_MARGIN, T=None, empirical=True, digit_bits=DEFAULT_DIGIT_BITS,
                s_points=DEFAULT_S_POINTS):
    """
    Every bound of the r step preparation of f1.

    Empirical values are added when `empirical` and n <= EMPIRICAL_MAX_QUBITS;
    larger grids report the closed forms with `downgraded` set.
    """
    r = int(r)
    if r < 1:
        raise DomainError(BAD_STEPS_MSG.format(r))
    c = eigenvalue_scale(f1)
    T = total_time(f1, k_margin) if T is None else float(T)
    f0 = initial_function(f1)
    a_max = _a_max_over_path(f0, f1)
    target_norms = matrix_norms(Rank1Hamiltonian(f0, f1, 1.0))
    delta0 = discretization_bound(c, r)
    delta1 = simulation_bound(a_max, T, r)
    n = f1.grid.n
    downgraded = False
    if empirical and n > EMPIRICAL_MAX_QUBITS:
        logger.warning(DOWNGRADE_MSG.format(EMPIRICAL_MAX_QUBITS, n))
        empirical = False
        downgraded = True
    report = BoundsReport(
        n=n,
        r=r,
        T=T,
        eigenvalue_scale=c,
        gap_bound=gap_lower_bound(f1),
        delay_bound=delay_factor_bound(f1),
        delta0=delta0,
        delta0_coarse=8 / r,
        delta1=delta1,
        total_unitary_bound=math.sqrt(2 * T * (delta0 + delta1)),
        prob_bound=1 - T ** 2 * a_max ** 2 / r,
        a_max=target_norms.a_max,
        a_over_n_2=target_norms.a_over_n_2,
        norm_ratio=target_norms.a_max / target_norms.a_over_n_2,
        filling_ratio=encoded_filling_ratio(f1) / f1.grid.width,
        query_count=ORACLE_QUERIES_PER_STEP * r,
        qubits=2 * n + digit_bits + 2,
        ancilla_qubits=n + digit_bits + 2,
        empirical=empirical,
        downgraded=downgraded,
    )
    if empirical:
        gap_min, delay_max = empirical_gap_delay(f1, s_points=s_points)
        report = report._replace(
            gap_min_empirical=gap_min,
            delay_max_empirical=delay_max,
            delta0_empirical=empirical_delta0(f1, r),
        )
    return report


def _continuous_norms(f, interval, encoding):
    a, b = interval
    width = b - a
    fine = np.linspace(a, b, (1 << 16) + 1)
    peak = float(np.max(np.abs(f(fine))))
    if Encoding(encoding) == Encoding.integral:
        mass, _ = integrate.quad(lambda x: float(np.real(f(np.array([x]))[0])), a, b, limit=200)
        return mass, width * peak / mass
    squares, _ = integrate.quad(lambda x: float(np.abs(f(np.array([x]))[0])) ** 2, a, b, limit=200)
    return squares / width, width * peak ** 2 / squares


def asymptotic_norm_study(f, n_values, encoding=Encoding.pointwise, interval=(0.0, 1.0)):
    """
    ||A||_max, ||A/N||_2 and their ratio for each n, with their large N limits.

    Pointwise: ||A/N||_2 -> ||f||_2^2 / (b - a) and the ratio -> (b - a) ||f||_max^2 / ||f||_2^2.
    Integral: ||A/N||_2 -> ||f||_1 and the ratio -> (b - a) ||f||_max / ||f||_1.
    """
    encoding = Encoding(encoding)
    rows = []
    for n in n_values:
        gf = encode_function(f, GridSpec(interval[0], interval[1], n), encoding=encoding)
        h = Rank1Hamiltonian(gf, gf, 1.0)
        norms = matrix_norms(h)
        rows.append(NormStudyRow(
            n=n,
            a_max=norms.a_max,
            a_over_n_2=norms.a_over_n_2,
            ratio=norms.a_max / norms.a_over_n_2,
            filling_ratio=encoded_filling_ratio(gf) / gf.grid.width,
        ))
    limit_a_over_n_2, limit_ratio = _continuous_norms(f, interval, encoding)
    return NormStudy(encoding=encoding, rows=rows, limit_a_over_n_2=limit_a_over_n_2, limit_ratio=limit_ratio)


def query_complexity_projection(f1, epsilon, constant=1.0):
    """
    r = ceil(C F^p / epsilon^2) with F the filling ratio over (b - a), p = -4 pointwise and -2 integral.
    """
    if not epsilon > 0:
        raise DomainError(BAD_EPSILON_MSG.format(epsilon))
    filling = encoded_filling_ratio(f1) / f1.grid.width
    exponent = PROJECTION_EXPONENTS[Encoding(f1.encoding)]
    r = math.ceil(constant * filling ** exponent / epsilon ** 2)
    return Projection(filling_ratio=filling, exponent=exponent, constant=constant, epsilon=epsilon, r=r)


def fit_projection_constant(r, epsilon, filling_ratio, encoding=Encoding.pointwise):
    """The C for which a measured (r, epsilon) pair lies on the projection."""
    return r * epsilon ** 2 / filling_ratio ** PROJECTION_EXPONENTS[Encoding(encoding)]


def random_instance(grid, rng, encoding=Encoding.pointwise):
    """A random target: complex gaussian samples, or their magnitudes for the integral encoding."""
    values = rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N)
    if Encoding(encoding) == Encoding.integral:
        values = np.abs(values)
    return make_grid_function(grid, values, encoding=encoding)


def _random_hermitian(rng, dim):
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (x + x.conj().T) / 2


def effective_hamiltonian_regression(pairs=200, dim=4, t_values=None, seed=0):
    """
    For random Hermitian H1, H2 the gap | ||H1 - H2|| - ||exp(-i t H1) - exp(-i t H2)|| / t |
    vanishes like t^2. Returns the median and all per-pair log-log slopes.
    """
    t_values = np.logspace(-3, -1, 7) if t_values is None else np.asarray(t_values, dtype=float)
    rng = substream(seed, 'regression')
    slopes = []
    for _ in range(pairs):
        h1 = _random_hermitian(rng, dim)
        h2 = _random_hermitian(rng, dim)
        distance = np.linalg.norm(h1 - h2, 2)
        gaps = np.array([
            abs(distance - np.linalg.norm(linalg.expm(-1j * t * h1) - linalg.expm(-1j * t * h2), 2) / t)
            for t in t_values
        ])
        if np.any(gaps <= 0):
            continue
        slope, _ = np.polyfit(np.log(t_values), np.log(gaps), 1)
        slopes.append(float(slope))
    return RegressionResult(slope_median=float(np.median(slopes)), slopes=slopes)


def continuous_evolution(f1, T, rtol=1e-10, atol=1e-12):
    """
    |+^n> evolved under the continuous schedule H(t / T) for time T.
    """
    f0 = initial_function(f1)
    h0 = Rank1Hamiltonian(f0, f1, 0.0)
    h1 = h0.at(1.0)
    v0, v1 = h0.v, h1.v

    def derivative(time, psi):
        s = time / T
        v = (1 - s) * v0 + s * v1
        # -i H psi with H = -|v><v|
        return 1j * v * np.vdot(v, psi)

    start = np.asarray(plus_state(f1.grid).amplitudes, dtype=complex)
    solution = integrate.solve_ivp(derivative, (0.0, T), start, method='DOP853', rtol=rtol, atol=atol)
    return solution.y[:, -1]


def measure_total_deviation(f1, r, k_margin=DEFAULT_K_MARGIN, T=None, backend='exact', seed=0):
    """
    Distance of the r step low-rank preparation to the continuous evolution,
    minimized over a global phase, next to sqrt(2 T (delta0 + delta1)).
    """
    from rankprep.adiabatic import plan, run
    if f1.grid.n > EMPIRICAL_MAX_QUBITS:
        raise ResourceError(DENSE_CAP_MSG.format(EMPIRICAL_MAX_QUBITS, f1.grid.n))
    schedule = plan(f1, r, k_margin=k_margin, t_override=T)
    report = run(f1, schedule, backend=backend, seed=seed, track_fidelity=False)
    continuous = continuous_evolution(f1, schedule.T)
    overlap = abs(np.vdot(continuous / np.linalg.norm(continuous), report.final_state.amplitudes))
    deviation = math.sqrt(max(2 * (1 - overlap), 0.0))
    return TotalDeviation(deviation=deviation, bound=report.bounds.total_unitary_bound, T=schedule.T)
