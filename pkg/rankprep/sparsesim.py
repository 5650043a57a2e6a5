"""
Exact simulation of the 1-sparse embedding S_A on the joint ancilla x main register.

The joint state is the N x N tensor psi[k, l] with k the ancilla index and l the
main register index. S_A |a, b> = A_ab |b, a>, so (S_A psi)[k, l] = A[l, k] psi[l, k].
"""
import math
import logging
from typing import NamedTuple

import numpy as np

from rankprep.gridfn import StateVector, check_normalized
from rankprep.helper import (
    Backend, BackendSpec, Mode, PostselectionError, ResourceError,
    ORACLE_QUERIES_PER_STEP, POSTSELECT_MIN_PROB, SQRT_HALF,
    ensure_rng, get_max_joint_qubits, vector_norm,
)
from rankprep.rank1 import exact_rank1_step, matrix_norms, sa_evolution_time

logger = logging.getLogger(__name__)

JOINT_CAP_MSG = ("A joint tensor on 2 x {} qubits needs {:.1f} MB which exceeds the cap of {} qubits per register. "
                 "Set RANKPREP_MAX_JOINT_QUBITS to raise it.")
TAYLOR_REGIME_MSG = ("Taylor stepping with |t| * ||A||_max = {:.3g} > 1; "
                     "the truncated series of order {} may be inaccurate.")
TAYLOR_RENORM_MSG = "Taylor step of order %s renormalized the joint tensor by %.3e."
POSTSELECTION_MSG = "The |+^n> ancilla outcome has probability {:.3e} < {:.0e}; postselection is impossible."
BAD_TAYLOR_ORDER_MSG = "The Taylor order must be at least 1, got {}."


def check_joint_cap(grid):
    cap = get_max_joint_qubits()
    if grid.n > cap:
        raise ResourceError(JOINT_CAP_MSG.format(grid.n, 16 * grid.N ** 2 / 2 ** 20, cap))


class JointTensor:
    """
    psi[k, l] = (<k| x <l|) |Psi>, first index the ancilla register.

    Holds 16 N^2 bytes, so the constructor refuses registers above the joint qubit cap.
    """

    def __init__(self, grid, psi, renorm=0.0):
        check_joint_cap(grid)
        self.grid = grid
        self.psi = psi
        self.renorm = renorm

    def __repr__(self):
        return f"<JointTensor n={self.grid.n} norm={self.norm:.12f}>"

    @property
    def norm(self):
        return vector_norm(self.psi)


class StepResult(NamedTuple):
    state: StateVector
    outcome: str
    prob_plus: float
    op_error: float
    mode: Mode
    renorm: float = 0.0
    queries: int = ORACLE_QUERIES_PER_STEP


def init_joint(state):
    """The product state |+^n> x |state>."""
    check_normalized(state)
    grid = state.grid
    check_joint_cap(grid)
    psi = np.tile(np.asarray(state.amplitudes, dtype=complex) / np.sqrt(grid.N), (grid.N, 1))
    return JointTensor(grid, psi)


def apply_sa_exact(joint, h, t):
    """
    exp(-i t S_A) on the joint tensor with no simulation error.

    Each pair (k, l), (l, k) spans an invariant block [[0, A_lk], [A_kl, 0]] whose
    square is |A_kl|^2 times the identity; diagonal cells get the phase exp(-i t A_kk).
    """
    a = h.dense_a()
    magnitude = np.abs(a)
    # sin(|A| t) / |A| without dividing by zero
    sin_over = t * np.sinc(magnitude * t / np.pi)
    psi = np.cos(magnitude * t) * joint.psi - 1j * sin_over * (a * joint.psi).T
    return JointTensor(joint.grid, psi)


def apply_sa_taylor(joint, h, t, m=7):
    """
    exp(-i t S_A) by the Taylor series sum_{j<=m} (-i t)^j / j! psi^(j),
    psi^(j+1)[k, l] = A[l, k] psi^(j)[l, k], followed by renormalization.
    """
    if m < 1:
        raise ValueError(BAD_TAYLOR_ORDER_MSG.format(m))
    a_max = matrix_norms(h).a_max
    if abs(t) * a_max > 1:
        logger.warning(TAYLOR_REGIME_MSG.format(abs(t) * a_max, m))
    a = h.dense_a()
    term = joint.psi
    psi = joint.psi.copy()
    for j in range(1, m + 1):
        term = (a * term).T
        psi = psi + ((-1j * t) ** j / math.factorial(j)) * term
    norm = vector_norm(psi)
    renorm = abs(norm - joint.norm)
    logger.debug(TAYLOR_RENORM_MSG, m, renorm)
    return JointTensor(joint.grid, psi * (joint.norm / norm), renorm=renorm)


def walsh_hadamard(psi):
    """H^{x n} applied along the first axis of psi, with the first axis of length 2^n."""
    rows = psi.shape[0]
    n = rows.bit_length() - 1
    out = psi.reshape((2,) * n + psi.shape[1:])
    for axis in range(n):
        low = np.take(out, 0, axis=axis)
        high = np.take(out, 1, axis=axis)
        out = np.stack((low + high, low - high), axis=axis) * SQRT_HALF
    return out.reshape(psi.shape)


def ancilla_round(joint, mode=Mode.postselect, rng=None):
    """
    Hadamards on the ancilla, measurement, and reset of the ancilla to |+^n>.

    prob_plus = sum_l |sum_k psi[k, l] / sqrt(N)|^2 is the all-zero outcome.
    """
    mode = Mode(mode)
    grid = joint.grid
    total = joint.norm ** 2
    plus_branch = joint.psi.sum(axis=0) / np.sqrt(grid.N)
    prob_plus = float(np.sum(np.abs(plus_branch) ** 2) / total)
    outcome = 0
    branch = plus_branch
    if mode == Mode.postselect:
        if prob_plus < POSTSELECT_MIN_PROB:
            raise PostselectionError(POSTSELECTION_MSG.format(prob_plus, POSTSELECT_MIN_PROB))
    else:
        rng = ensure_rng(rng, name='ancilla')
        transformed = walsh_hadamard(joint.psi)
        probabilities = np.sum(np.abs(transformed) ** 2, axis=1)
        probabilities = probabilities / probabilities.sum()
        outcome = int(rng.choice(grid.N, p=probabilities))
        branch = transformed[outcome]
    state = StateVector(grid=grid, amplitudes=branch / vector_norm(branch))
    return StepResult(
        state=state,
        outcome=format(outcome, f'0{grid.n}b'),
        prob_plus=min(prob_plus, 1.0),
        op_error=0.0,
        mode=mode,
        renorm=joint.renorm,
    )


def lowrank_step(state, h, dt, backend=BackendSpec(), mode=Mode.postselect, rng=None):
    """
    One step of exp(-i dt H(s)) through S_A: init_joint, apply_sa, ancilla_round.

    op_error is the distance of the resulting state to exact_rank1_step(state, h, dt).
    A zero step returns the state unchanged and spends no oracle queries.
    """
    if dt == 0:
        return StepResult(state=state, outcome='0' * state.grid.n, prob_plus=1.0, op_error=0.0, mode=Mode(mode),
                          queries=0)
    exact = exact_rank1_step(state, h, dt)
    if backend.kind == Backend.ideal:
        return StepResult(state=exact, outcome='0' * state.grid.n, prob_plus=1.0, op_error=0.0, mode=Mode(mode))
    joint = init_joint(state)
    t = sa_evolution_time(dt)
    if backend.kind == Backend.taylor:
        joint = apply_sa_taylor(joint, h, t, m=backend.taylor_order)
    else:
        joint = apply_sa_exact(joint, h, t)
    result = ancilla_round(joint, mode=mode, rng=rng)
    op_error = vector_norm(result.state.amplitudes - exact.amplitudes)
    return result._replace(op_error=op_error)
