"""
The rank-1 Hamiltonian H(s) = -A(s)/N with A(s)_kl = f_s(x_k) conj(f_s(x_l)).

H(s) = -|v_s><v_s| where v_s = f_s/sqrt(N) for the pointwise encoding and
v_s = g_s for the integral encoding (A_kl = N g_k g_l). Every propagator here is
exp(-i dt H) = exp(+i dt A/N); sa_evolution_time is the one place that sign flips.
"""
import logging
from typing import NamedTuple

import numpy as np

from rankprep.gridfn import (
    StateVector, check_same_grid, digitize, eigenvalue_scale, interpolate,
)
from rankprep.helper import (
    Encoding, DegenerateHamiltonianError, DomainError, ShapeError, DEFAULT_K_MARGIN, vector_norm,
)

logger = logging.getLogger(__name__)

INDEX_OUT_OF_RANGE_MSG = "Index ({}, {}) is out of range for a {} x {} matrix."
DEGENERATE_MSG = "v_s is zero at s={}; the rank-1 Hamiltonian has no ground state."
BAD_K_MARGIN_MSG = "k_margin must be positive, got {}."
BAD_SCALE_MSG = "The target function is zero so its bounds are undefined."
STATE_GRID_MSG = "The state lives on {} but the Hamiltonian on {}."


class Rank1Norms(NamedTuple):
    a_max: float
    a_over_n_2: float


class Rank1Hamiltonian:
    """
    H(s) built from f0, f1 and s, never stored as an N x N array.

    When digit_bits is given the interpolated samples are digitized to d bits
    before any matrix element is formed.
    """

    def __init__(self, f0, f1, s, digit_bits=None):
        check_same_grid(f0, f1)
        self.f0 = f0
        self.f1 = f1
        self.s = float(s)
        self.digit_bits = digit_bits
        f_s = interpolate(f0, f1, self.s)
        if digit_bits is not None:
            f_s = digitize(f_s, digit_bits)
        self.f_s = f_s
        self.grid = f0.grid
        self.encoding = f0.encoding
        # A_kl = samples_k * conj(samples_l)
        if self.encoding == Encoding.integral:
            self.samples = f_s.values * np.sqrt(self.N)
        else:
            self.samples = np.asarray(f_s.values, dtype=complex)

    def __repr__(self):
        return f"<Rank1Hamiltonian n={self.grid.n} s={self.s} {self.encoding}>"

    @property
    def N(self):
        return self.grid.N

    def at(self, s):
        return Rank1Hamiltonian(self.f0, self.f1, s, digit_bits=self.digit_bits)

    @property
    def v(self):
        return self.samples / np.sqrt(self.N)

    @property
    def v_derivative(self):
        """dv_s/ds, from the undigitized endpoints."""
        difference = self.f1.values - self.f0.values
        if self.encoding == Encoding.integral:
            return np.asarray(difference, dtype=complex)
        return difference / np.sqrt(self.N)

    @property
    def norm_sq(self):
        return float(np.sum(np.abs(self.samples) ** 2)) / self.N

    def entry(self, k, l):
        N = self.N
        if not (0 <= k < N and 0 <= l < N):
            raise ShapeError(INDEX_OUT_OF_RANGE_MSG.format(k, l, N, N))
        return complex(self.samples[k] * np.conj(self.samples[l]))

    def dense_a(self):
        """The N x N matrix A(s). Only for oracles and small N."""
        return np.outer(self.samples, np.conj(self.samples))

    def dense(self):
        """The N x N matrix H(s) = -A(s)/N."""
        return -self.dense_a() / self.N


def entry(h, k, l):
    return h.entry(k, l)


def sa_evolution_time(dt):
    """
    The S_A evolution time that induces exp(-i dt H(s)) on the main register.

    exp(-i tau S_A) induces exp(-i tau A/N) and H = -A/N, so tau = -dt.
    """
    return -dt


def exact_rank1_step(state, h, dt):
    """
    exp(-i dt H) state = state + (exp(i dt |v|^2) - 1) P state with P = |v><v| / |v|^2.
    """
    if state.grid != h.grid:
        raise ShapeError(STATE_GRID_MSG.format(state.grid, h.grid))
    v = h.v
    norm_sq = float(np.vdot(v, v).real)
    if norm_sq == 0:
        raise DegenerateHamiltonianError(DEGENERATE_MSG.format(h.s))
    amplitudes = np.asarray(state.amplitudes, dtype=complex)
    projection = v * (np.vdot(v, amplitudes) / norm_sq)
    new_amplitudes = amplitudes + (np.exp(1j * dt * norm_sq) - 1) * projection
    return state._replace(amplitudes=new_amplitudes)


def matrix_norms(h):
    """
    a_max = max_k |f_s(x_k)|^2 = ||A||_max and a_over_n_2 = ||A/N||_2, the sole nonzero eigenvalue of A/N.
    """
    magnitudes_sq = np.abs(h.samples) ** 2
    return Rank1Norms(a_max=float(np.max(magnitudes_sq)), a_over_n_2=float(np.sum(magnitudes_sq)) / h.N)


def spectral_gap(h):
    """g(s) = |v_s|^2."""
    return h.norm_sq


def _eigenvalue_of(f1):
    scale = eigenvalue_scale(f1)
    if scale <= 0:
        raise DomainError(BAD_SCALE_MSG)
    return scale


def gap_lower_bound(f1):
    """
    g(s) >= c / (c + 1) with c = N(1)^2/N, for the phase-corrected f0.
    """
    c = _eigenvalue_of(f1)
    return c / (c + 1)


def delay_factor_bound(f1):
    """
    max_s |dH/ds|_2 / g(s)^2 <= 2 (c + 1)^2 / c^(3/2) with c = N(1)^2/N.
    """
    c = _eigenvalue_of(f1)
    return 2 * (c + 1) ** 2 / c ** 1.5


def total_time(f1, k_margin=DEFAULT_K_MARGIN):
    if k_margin <= 0:
        raise DomainError(BAD_K_MARGIN_MSG.format(k_margin))
    return k_margin * delay_factor_bound(f1)


def derivative_norm(h):
    """
    |dH/ds|_2 exactly.

    dH/ds = -(|v'><v| + |v><v'|) has rank two; with a = v' and b = v its
    eigenvalues are Re<a|b> +- sqrt(|a|^2 |b|^2 - Im<a|b>^2).
    """
    a = h.v_derivative
    b = h.v
    overlap = np.vdot(a, b)
    radicand = max(vector_norm(a) ** 2 * vector_norm(b) ** 2 - overlap.imag ** 2, 0.0)
    return float(abs(overlap.real) + np.sqrt(radicand))


def delay_factor(h):
    """|dH/ds|_2 / g(s)^2 at h.s."""
    gap = spectral_gap(h)
    if gap == 0:
        raise DegenerateHamiltonianError(DEGENERATE_MSG.format(h.s))
    return derivative_norm(h) / gap ** 2


def ground_state(h):
    """v_s / |v_s|, the target state of H(s)."""
    norm = vector_norm(h.v)
    if norm == 0:
        raise DegenerateHamiltonianError(DEGENERATE_MSG.format(h.s))
    return StateVector(grid=h.grid, amplitudes=h.v / norm)
