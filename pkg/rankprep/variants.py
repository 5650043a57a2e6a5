"""
Phase estimation, destructive interference and Grover-Rudolph routines built
on the exact rank-1 propagator.

Phases are fractions of a full turn. The controlled unitary is
U(t) = exp(-i 2 pi t H), which multiplies the target by exp(2 pi i gamma)
with gamma = t * c, c being the nonzero eigenvalue of A/N. Every other
vector is left alone, so it only ever reads out as 0.
"""
import math
import logging
from collections import Counter
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize

from rankprep.functions import evaluate
from rankprep.gridfn import (
    StateVector, check_normalized, encoded_filling_ratio, fidelity, initial_function,
    make_grid_function, overlap_split, plus_state, rescale_to_unit_density,
    target_state,
)
from rankprep.helper import (
    Backend, BackendSpec, Mode, DomainError, FitError, PostselectionError, ResourceError,
    SearchExhaustedError, ShapeError, DEFAULT_K_MARGIN, EMPIRICAL_MAX_QUBITS,
    POSTSELECT_MIN_PROB, ensure_rng, get_max_grid_qubits, substream, vector_norm,
)
from rankprep.rank1 import Rank1Hamiltonian, exact_rank1_step, ground_state, matrix_norms, total_time
from rankprep.sparsesim import lowrank_step

logger = logging.getLogger(__name__)

# Above this many register + main qubits the readout distribution is computed analytically.
QPE_MAX_REGISTER_QUBITS = 20
MODAL_HITS = 16
MAX_SEARCH_DRAWS = 1 << 20
# Lower bound of |<f'|f>|^2 for the larger sign part f' of a signed function
SIGNED_OVERLAP_BOUND = 0.5

QPE_WINDOW_MSG = "QPE time t={:.6g} is outside the window [{:.6g}, {:.6g}]; readouts may be 0 or wrap around."
QPE_STAGE_MSG = "QPE search stage %s: t=%.6g, %s of %s readouts nonzero."
QPE_SIZE_MSG = ("A QPE register of {} qubits next to {} main qubits exceeds the grid qubit cap "
                "(RANKPREP_MAX_GRID_QUBITS).")
BAD_REGISTER_MSG = "The QPE register needs at least one qubit, got m={}."
LOWRANK_QPE_MSG = "Low-rank controlled evolution is only simulated up to n={}, got n={}."
SEARCH_EXHAUSTED_MSG = "No nonzero readout up to the safe time cap t={:.6g}; the function may be too sparse for m={}."
NO_HITS_MSG = "Only {} nonzero readouts in {} draws at t={:.6g}."
BAD_EPSILON_MSG = "The failure probability must be in (0, 1), got {}."
BAD_TRIALS_MSG = "trials must be at least 1, got {}."
BAD_C2_MSG = "c2 must be positive, got {}."
EMPTY_SWEEP_MSG = "A normalization sweep needs at least one time."
FEW_TIMES_MSG = "A cosine fit needs at least 3 distinct times, got {}."
FLAT_SWEEP_MSG = "prob_one is zero at every time, so the input has no overlap with the target."
ZERO_MASS_MSG = "Cell {} of level {} has zero mass so its conditional probability is undefined."
ZERO_MASS_SKIP_MSG = "Skipping %s zero mass cell(s) at level %s."
NEGATIVE_MASS_MSG = "Cell {} has negative mass {:.3e}; a density must be non-negative."
COMPLEX_MASS_MSG = "The density has an imaginary part at x={!r}."
STAGE_FAILED_MSG = "Stage {} of the two stage preparation has zero success probability."


class QpeResult(NamedTuple):
    m: int
    t: float
    readout: int
    gamma_readout: float
    collapsed_state: StateVector
    success: bool
    prob_success: float
    lambda_in: float


class NormalizationEstimate(NamedTuple):
    norm: float
    norm_sq: float
    c2: float
    t: float
    gamma: float
    m: int
    stages: int
    samples_per_stage: int
    draws: int


class HadamardTestResult(NamedTuple):
    t: float
    prob_one: float
    state_on_one: Optional[StateVector]
    lambda_in: float
    outcome: int = 1


class SweepPoint(NamedTuple):
    t: float
    prob_one: float


class CosineFit(NamedTuple):
    lam: float
    c2: float
    residual: float


class VerificationResult(NamedTuple):
    frequency: float
    successes: int
    trials: int
    lambda_exact: float
    all_fail_probability: float


class TwoStageResult(NamedTuple):
    sign: int
    prob_stage_one: float
    prob_stage_two: float
    prob_total: float
    bound: float
    state: StateVector
    fidelity: float


class NormEstimateRow(NamedTuple):
    s: float
    c2_estimate: float
    c2_exact: float


class AdiabaticNormalizationResult(NamedTuple):
    r: int
    T: float
    rows: List[NormEstimateRow]
    final_state: StateVector
    final_infidelity: float


def target_hamiltonian(f1, digit_bits=None):
    """The rank-1 Hamiltonian whose ground state encodes f1."""
    return Rank1Hamiltonian(f1, f1, 1.0, digit_bits=digit_bits)


def turn_fraction(evolution_time, norm_sq, N):
    """The phase in turns that exp(-i evolution_time H) puts on the target."""
    return evolution_time * norm_sq / (2 * math.pi * N)


def qpe_gamma(t, norm_sq, N):
    """gamma = t N^2 / N, the turn fraction of U(t) = exp(-i 2 pi t H)."""
    return t * norm_sq / N


def t_window(h, m):
    """
    The QPE times for which the target phase is at least 2^(1-m) turns and at most one turn.
    """
    c = h.norm_sq
    return 2.0 ** (1 - m) / c, 1.0 / c


def readout_distribution(gamma, overlap, m):
    """
    P(y) for an input with fidelity `overlap` to the target.

    The target part reads out with the Fejer kernel around gamma * 2^m and
    the rest always reads out as 0.
    """
    M = 1 << m
    offsets = gamma * M - np.arange(M)
    denominators = M * np.sin(np.pi * offsets / M)
    kernel = np.ones(M)
    regular = np.abs(denominators) > 1e-12
    kernel[regular] = (np.sin(np.pi * offsets[regular]) / denominators[regular]) ** 2
    probabilities = overlap * kernel
    probabilities[0] += 1 - overlap
    probabilities = np.clip(probabilities, 0, None)
    return probabilities / probabilities.sum()


def _lowrank_power(initial, h, dt, backend):
    steps = max(1, math.ceil(abs(dt) * matrix_norms(h).a_max))
    state = initial
    for _ in range(steps):
        state = lowrank_step(state, h, dt / steps, backend=backend, mode=Mode.postselect).state
    return state


def _register(initial, h, m, t, backend):
    """
    The (2^m, N) register after the controlled powers and the inverse QFT.

    Row x of the register before the QFT holds U(t x) initial / sqrt(2^m).
    """
    M = 1 << m
    if backend.kind == Backend.ideal:
        v = h.v
        norm_sq = float(np.vdot(v, v).real)
        amplitudes = np.asarray(initial.amplitudes, dtype=complex)
        projection = v * (np.vdot(v, amplitudes) / norm_sq)
        # exact_rank1_step(initial, h, 2 pi t x) for every x at once
        phases = np.exp(2j * np.pi * t * norm_sq * np.arange(M)) - 1
        rows = amplitudes[None, :] + phases[:, None] * projection[None, :]
    else:
        rows = np.array([_lowrank_power(initial, h, 2 * np.pi * t * x, backend).amplitudes for x in range(M)])
    return np.fft.fft(rows / np.sqrt(M), axis=0, norm='ortho')


def _uses_register(grid, m, backend):
    if m > get_max_grid_qubits():
        raise ResourceError(QPE_SIZE_MSG.format(m, grid.n))
    if backend.kind != Backend.ideal:
        if grid.n > EMPIRICAL_MAX_QUBITS:
            raise ResourceError(LOWRANK_QPE_MSG.format(EMPIRICAL_MAX_QUBITS, grid.n))
        return True
    return m + grid.n <= QPE_MAX_REGISTER_QUBITS


def _readout_probabilities(initial, h, m, t, backend):
    if _uses_register(h.grid, m, backend):
        register = _register(initial, h, m, t, backend)
        probabilities = np.sum(np.abs(register) ** 2, axis=1)
        return probabilities / probabilities.sum(), register
    overlap = fidelity(initial, ground_state(h))
    return readout_distribution(t * h.norm_sq, overlap, m), None


def _analytic_branch(initial, h, m, t, readout):
    """The unnormalized main register state that goes with `readout`."""
    M = 1 << m
    v = h.v
    amplitudes = np.asarray(initial.amplitudes, dtype=complex)
    projection = v * (np.vdot(v, amplitudes) / float(np.vdot(v, v).real))
    x = np.arange(M)
    weight = np.sum(np.exp(2j * np.pi * x * (t * h.norm_sq - readout / M))) / M
    if readout == 0:
        return amplitudes - projection + weight * projection
    return weight * projection


def qpe_prepare(initial, f1, m, t, rng=None, backend=BackendSpec(kind=Backend.ideal)):
    """
    Phase estimation with an m-qubit register and controlled U(t 2^j) powers.

    A nonzero readout leaves the main register in the target state.
    """
    check_normalized(initial, 'initial state')
    h = target_hamiltonian(f1)
    if initial.grid != h.grid:
        raise ShapeError(f"The initial state lives on {initial.grid} but f1 on {h.grid}.")
    if m < 1:
        raise ShapeError(BAD_REGISTER_MSG.format(m))
    low, high = t_window(h, m)
    if not low <= t <= high:
        logger.warning(QPE_WINDOW_MSG.format(t, low, high))
    rng = ensure_rng(rng, name='qpe')
    probabilities, register = _readout_probabilities(initial, h, m, t, backend)
    readout = int(rng.choice(len(probabilities), p=probabilities))
    if register is not None:
        branch = register[readout]
    else:
        branch = _analytic_branch(initial, h, m, t, readout)
    collapsed = StateVector(grid=h.grid, amplitudes=branch / vector_norm(branch))
    return QpeResult(
        m=m,
        t=t,
        readout=readout,
        gamma_readout=readout / (1 << m),
        collapsed_state=collapsed,
        success=readout != 0,
        prob_success=float(1 - probabilities[0]),
        lambda_in=fidelity(initial, ground_state(h)),
    )


def samples_for_overlap(overlap, epsilon, literal=False):
    """
    Samples per search stage when every sample hits the target with probability at least `overlap`.

    With q = 1 - overlap the count is ceil(log epsilon / log q), so a stage
    misses with probability at most epsilon. literal=True gives ceil(|log q / log epsilon|).
    """
    if not 0 < epsilon < 1:
        raise DomainError(BAD_EPSILON_MSG.format(epsilon))
    q = 1 - overlap
    if q <= 0:
        return 1
    if literal:
        return max(1, math.ceil(abs(math.log(q) / math.log(epsilon))))
    return max(1, math.ceil(math.log(epsilon) / math.log(q)))


def stage_sample_count(filling, width, epsilon, literal=False):
    """
    Samples per search stage so that a target phase above 2^(1-m) is missed with probability <= epsilon.

    Starting from |+^n> every sample succeeds with probability at least (filling / width)^2.
    """
    return samples_for_overlap((filling / width) ** 2, epsilon, literal=literal)


def overlap_initial(f1):
    """
    The easy to prepare starting state of phase estimation and a lower bound on its fidelity to f1.

    A function that keeps its sign starts from |+^n>, whose fidelity is at least
    (filling / width)^2. A signed real function starts from the encoding of
    (f + |f|)/2 or (f - |f|)/2, whichever holds more of the norm, so the
    fidelity is at least 1/2. That part is itself prepared from |+^n> first.
    Complex functions start from |+^n> with the bound of |f|.
    """
    width = f1.grid.width
    if np.any(f1.values.imag != 0):
        magnitudes = f1.with_values(np.abs(f1.values).astype(complex))
        return plus_state(f1.grid), (encoded_filling_ratio(magnitudes) / width) ** 2
    real = f1.values.real
    if np.all(real >= 0) or np.all(real <= 0):
        return plus_state(f1.grid), (encoded_filling_ratio(f1) / width) ** 2
    parts = [(real + sign * np.abs(real)) / 2 for sign in (1, -1)]
    part = max(parts, key=lambda values: float(np.sum(values ** 2)))
    return target_state(f1.with_values(part.astype(complex))), SIGNED_OVERLAP_BOUND


def state_with_fidelity(target, lam):
    """
    sqrt(lam) target + sqrt(1 - lam) w with w a unit vector orthogonal to target.

    w is |+^n> with its target component removed, or |0> when |+^n> is the target.
    """
    if not 0 <= lam <= 1:
        raise DomainError(f"lam must be in [0, 1], got {lam}.")
    amplitudes = np.asarray(target.amplitudes, dtype=complex)
    for candidate in (plus_state(target.grid).amplitudes, np.eye(1, target.grid.N, dtype=complex)[0]):
        orthogonal = candidate - amplitudes * np.vdot(amplitudes, candidate)
        if vector_norm(orthogonal) > 1e-6:
            break
    orthogonal = orthogonal / vector_norm(orthogonal)
    mixed = math.sqrt(lam) * amplitudes + math.sqrt(1 - lam) * orthogonal
    return StateVector(grid=target.grid, amplitudes=mixed / vector_norm(mixed))


def _modal_readout(probabilities, rng, t, hits=MODAL_HITS):
    """The most frequent nonzero readout among `hits` nonzero draws, and the draws spent."""
    found = []
    draws = 0
    batch = 4 * hits
    while len(found) < hits:
        if draws >= MAX_SEARCH_DRAWS:
            raise SearchExhaustedError(NO_HITS_MSG.format(len(found), draws, t))
        readouts = rng.choice(len(probabilities), size=batch, p=probabilities)
        draws += batch
        found.extend(int(y) for y in readouts if y)
    return Counter(found[:hits]).most_common(1)[0][0], draws


def estimate_normalization_qpe(f1, m, epsilon_fail=0.01, rng=None, initial=None, overlap_bound=None,
                               backend=BackendSpec(kind=Backend.ideal)):
    """
    Estimates N(f1)^2 = sum |f1|^2 by phase estimation with a doubling time search.

    The search starts at t_cap 2^-m with t_cap = 1 / max |f1|^2, which keeps the
    phase below one turn, and doubles t until a stage of samples shows a nonzero
    readout. It then keeps doubling while the estimate stays below half a turn
    and reads gamma off the modal nonzero readout.

    `initial` defaults to overlap_initial(f1). `overlap_bound` lower bounds its
    fidelity to f1 and sets the samples per stage.
    """
    rng = ensure_rng(rng, name='qpe-search')
    h = target_hamiltonian(f1)
    if initial is None:
        initial, default_bound = overlap_initial(f1)
        overlap_bound = default_bound if overlap_bound is None else overlap_bound
    elif overlap_bound is None:
        magnitudes = f1.with_values(np.abs(f1.values).astype(complex))
        overlap_bound = (encoded_filling_ratio(magnitudes) / f1.grid.width) ** 2
    check_normalized(initial, 'initial state')
    samples = samples_for_overlap(overlap_bound, epsilon_fail)
    M = 1 << m
    t_cap = 1 / matrix_norms(h).a_max
    t = t_cap / M
    stage = 0
    draws = 0
    while True:
        if t > t_cap * (1 + 1e-12):
            raise SearchExhaustedError(SEARCH_EXHAUSTED_MSG.format(t_cap, m))
        probabilities, _ = _readout_probabilities(initial, h, m, t, backend)
        readouts = rng.choice(M, size=samples, p=probabilities)
        draws += samples
        hits = int(np.count_nonzero(readouts))
        logger.debug(QPE_STAGE_MSG, stage, t, hits, samples)
        if hits:
            break
        t *= 2
        stage += 1
    readout, spent = _modal_readout(probabilities, rng, t)
    draws += spent
    gamma = readout / M
    while 2 * (gamma + 2.0 ** (1 - m)) < 1:
        t *= 2
        stage += 1
        probabilities, _ = _readout_probabilities(initial, h, m, t, backend)
        readout, spent = _modal_readout(probabilities, rng, t)
        draws += spent
        gamma = readout / M
        logger.debug(QPE_STAGE_MSG, stage, t, readout, M)
    c2 = gamma / t
    norm_sq = f1.N * c2
    return NormalizationEstimate(
        norm=math.sqrt(norm_sq),
        norm_sq=norm_sq,
        c2=c2,
        t=t,
        gamma=gamma,
        m=m,
        stages=stage + 1,
        samples_per_stage=samples,
        draws=draws,
    )


def integrate_lipschitz(h, grid, m=22, epsilon_fail=0.01, rng=None):
    """
    integral of h over the grid interval as delta * N(sqrt h)^2, N estimated by phase estimation.

    Signed integrands are split into their positive and negative parts and
    complex ones into the four parts of their real and imaginary components.
    Parts that vanish on the grid are skipped.
    """
    rng = ensure_rng(rng, name='integrate')
    values = evaluate(h, grid.points())
    parts = (
        (1, np.maximum(values.real, 0)),
        (-1, np.maximum(-values.real, 0)),
        (1j, np.maximum(values.imag, 0)),
        (-1j, np.maximum(-values.imag, 0)),
    )
    total = 0j
    for weight, part in parts:
        if not np.any(part > 0):
            continue
        f = make_grid_function(grid, np.sqrt(part))
        estimate = estimate_normalization_qpe(f, m, epsilon_fail=epsilon_fail, rng=rng)
        logger.debug("Part %s integrates to %.12g.", weight, grid.delta * estimate.norm_sq)
        total += weight * grid.delta * estimate.norm_sq
    if total.imag == 0:
        return float(total.real)
    return complex(total)


def _one_branch(initial, h, t):
    evolved = exact_rank1_step(initial, h, t)
    return (np.asarray(initial.amplitudes, dtype=complex) - evolved.amplitudes) / 2


def hadamard_test_prepare(initial, f1, c2=None, rng=None, mode=Mode.postselect, t=None):
    """
    The one ancilla circuit H, controlled exp(-i t H), H, with t = pi / c2 by default.

    At t = pi / c2 the controlled evolution reflects the target, so outcome 1
    has probability lambda = |<target|initial>|^2 and leaves exactly the target.
    In sample mode the ancilla is measured and `outcome` records the result.
    """
    check_normalized(initial, 'initial state')
    h = target_hamiltonian(f1)
    if c2 is None:
        c2 = h.norm_sq
    if c2 <= 0:
        raise DomainError(BAD_C2_MSG.format(c2))
    t = math.pi / c2 if t is None else t
    one = _one_branch(initial, h, t)
    prob_one = min(vector_norm(one) ** 2, 1.0)
    state_on_one = None
    if prob_one > POSTSELECT_MIN_PROB:
        state_on_one = StateVector(grid=h.grid, amplitudes=one / vector_norm(one))
    outcome = 1
    if Mode(mode) == Mode.sample:
        rng = ensure_rng(rng, name='hadamard')
        outcome = int(rng.random() < prob_one)
    return HadamardTestResult(
        t=t,
        prob_one=prob_one,
        state_on_one=state_on_one,
        lambda_in=fidelity(initial, ground_state(h)),
        outcome=outcome,
    )


def normalization_sweep(initial, f1, t_list):
    """Exact prob_one(t) = lambda (1 - cos(t c2)) / 2 for every t in t_list."""
    if len(t_list) == 0:
        raise DomainError(EMPTY_SWEEP_MSG)
    check_normalized(initial, 'initial state')
    h = target_hamiltonian(f1)
    return [SweepPoint(t=float(t), prob_one=vector_norm(_one_branch(initial, h, t)) ** 2) for t in t_list]


def _cosine_model(t, lam, c2):
    return lam * (1 - np.cos(c2 * t)) / 2


def fit_c2(points):
    """
    Fits prob_one(t) = lam (1 - cos(c2 t)) / 2 to sweep points.

    A grid search up to the Nyquist frequency of the sweep picks the start of a least squares fit.
    """
    t = np.array([point.t for point in points], dtype=float)
    prob = np.array([point.prob_one for point in points], dtype=float)
    distinct = np.unique(t)
    if len(distinct) < 3:
        raise FitError(FEW_TIMES_MSG.format(len(distinct)))
    if np.max(prob) < POSTSELECT_MIN_PROB:
        raise FitError(FLAT_SWEEP_MSG)
    c_max = np.pi / np.min(np.diff(distinct))
    candidates = np.linspace(c_max / 2000, c_max, 2000)
    basis = (1 - np.cos(np.outer(candidates, t))) / 2
    weights = np.sum(basis ** 2, axis=1)
    lam = (basis @ prob) / np.where(weights > 0, weights, 1)
    errors = np.sum((prob[None, :] - lam[:, None] * basis) ** 2, axis=1)
    best = int(np.argmin(errors))
    (lam_fit, c2_fit), _ = optimize.curve_fit(_cosine_model, t, prob, p0=(lam[best], candidates[best]))
    residual = float(np.max(np.abs(prob - _cosine_model(t, lam_fit, c2_fit))))
    return CosineFit(lam=float(lam_fit), c2=float(abs(c2_fit)), residual=residual)


def verify_state(candidate, f1, trials, rng=None):
    """
    Repeats the Hadamard test at t = pi / c2 and counts the outcome 1 results.

    The exact lambda and the probability (1 - lambda)^trials that every trial fails are reported too.
    """
    if trials < 1:
        raise DomainError(BAD_TRIALS_MSG.format(trials))
    rng = ensure_rng(rng, name='verify')
    result = hadamard_test_prepare(candidate, f1)
    successes = int(np.count_nonzero(rng.random(trials) < result.prob_one))
    return VerificationResult(
        frequency=successes / trials,
        successes=successes,
        trials=trials,
        lambda_exact=result.lambda_in,
        all_fail_probability=(1 - result.lambda_in) ** trials,
    )


def two_stage_prepare(f1):
    """
    |+^n> to the overlap part of f1 to f1, each stage a Hadamard test postselected on outcome 1.

    `bound` is F(part)^2 / (b - a)^2 / 2.
    """
    part, sign = overlap_split(f1)
    first = hadamard_test_prepare(plus_state(f1.grid), part)
    if first.state_on_one is None:
        raise PostselectionError(STAGE_FAILED_MSG.format(1))
    second = hadamard_test_prepare(first.state_on_one, f1)
    if second.state_on_one is None:
        raise PostselectionError(STAGE_FAILED_MSG.format(2))
    bound = encoded_filling_ratio(part) ** 2 / f1.grid.width ** 2 / 2
    return TwoStageResult(
        sign=sign,
        prob_stage_one=first.prob_one,
        prob_stage_two=second.prob_one,
        prob_total=first.prob_one * second.prob_one,
        bound=bound,
        state=second.state_on_one,
        fidelity=fidelity(second.state_on_one, target_state(f1)),
    )


def adiabatic_normalization(f1, r, m=12, epsilon_fail=0.01, k_margin=DEFAULT_K_MARGIN, seed=0):
    """
    Adiabatic preparation without a known normalization.

    At every stage s = j/r the eigenvalue c(s) of A(s)/N is estimated by phase
    estimation (on copies of the current state) and the step exp(-i dt H(s)) is
    taken with dt = (T / r) / c(s), so each step sees a unit gap scale.
    """
    if r < 1:
        raise DomainError(f"r must be at least 1, got {r}.")
    f0 = initial_function(f1)
    T = total_time(rescale_to_unit_density(f1), k_margin)
    state = plus_state(f1.grid)
    rows = []
    for j in range(1, r + 1):
        s = j / r
        h = Rank1Hamiltonian(f0, f1, s)
        estimate = estimate_normalization_qpe(
            h.f_s, m, epsilon_fail=epsilon_fail, rng=substream(seed, 'qpe-stage', j), initial=state,
        )
        rows.append(NormEstimateRow(s=s, c2_estimate=estimate.c2, c2_exact=h.norm_sq))
        state = exact_rank1_step(state, h, (T / r) / estimate.c2)
    return AdiabaticNormalizationResult(
        r=r,
        T=T,
        rows=rows,
        final_state=state,
        final_infidelity=1 - fidelity(state, target_state(f1)),
    )


def _cell_masses(density, grid, limit=200):
    """Integral of the density over every cell by adaptive quadrature."""

    def integrand(x):
        value = evaluate(density, np.array([x]))[0]
        if value.imag != 0:
            raise DomainError(COMPLEX_MASS_MSG.format(x))
        return value.real

    edges = grid.a + np.arange(grid.N + 1) * grid.delta
    masses = np.array([
        integrate.quad(integrand, low, high, limit=limit, epsabs=0, epsrel=1e-12)[0]
        for low, high in zip(edges[:-1], edges[1:])
    ])
    negative = masses < 0
    if negative.any():
        cell = int(np.argmax(negative))
        raise DomainError(NEGATIVE_MASS_MSG.format(cell, masses[cell]))
    return masses


def grover_rudolph_reference(density, grid, strict=False, limit=200):
    """
    The integral encoding of a density built level by level from conditional probabilities.

    Level k splits every cell in two and rotates its amplitude by
    theta = arccos(sqrt(mass(left) / mass(cell))). The masses come from
    scipy's adaptive quad, not from the midpoint rule of integral_encode.
    Zero mass cells keep amplitude 0, or raise DomainError when strict.
    """
    masses = _cell_masses(density, grid, limit=limit)
    levels = [masses]
    while len(levels[-1]) > 1:
        levels.append(levels[-1].reshape(-1, 2).sum(axis=1))
    levels.reverse()
    if levels[0][0] <= 0:
        raise DomainError(ZERO_MASS_MSG.format(0, 0))
    amplitudes = np.ones(1)
    for k in range(grid.n):
        parent = levels[k]
        left = levels[k + 1][0::2]
        empty = parent <= 0
        if empty.any():
            if strict:
                raise DomainError(ZERO_MASS_MSG.format(int(np.argmax(empty)), k))
            logger.debug(ZERO_MASS_SKIP_MSG, int(empty.sum()), k)
        ratio = np.clip(left / np.where(empty, 1, parent), 0, 1)
        theta = np.arccos(np.sqrt(ratio))
        refined = np.empty(2 * len(amplitudes))
        refined[0::2] = amplitudes * np.cos(theta)
        refined[1::2] = amplitudes * np.sin(theta)
        amplitudes = refined
    return StateVector(grid=grid, amplitudes=amplitudes.astype(complex))
