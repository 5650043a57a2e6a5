"""
The r step adiabatic preparation: from |+^n> through H(1/r), ..., H(r/r), one
low-rank step of length T/r each.
"""
import logging
from typing import List, NamedTuple, Optional

import numpy as np

from rankprep.bounds import BoundsReport, eval_bounds
from rankprep.gridfn import (
    StateVector, check_normalized, fidelity, initial_function, plus_state, target_state,
)
from rankprep.helper import (
    Backend, Mode, DomainError, ShapeError, DEFAULT_K_MARGIN, DEFAULT_DIGIT_BITS,
    RepeatedTimer, parse_backend, substream,
)
from rankprep.rank1 import Rank1Hamiltonian, ground_state, matrix_norms, total_time
from rankprep.sparsesim import check_joint_cap, lowrank_step

logger = logging.getLogger(__name__)

PROGRESS_MSG = "rankprep {} seconds in progress. Step {} of {}."
BAD_STEPS_MSG = "The schedule needs r >= 1 steps, got {}."
BAD_TIME_MSG = "The total evolution time must be positive, got {}."
TRACE_FIELDS = ('step', 's', 'prob_plus', 'fidelity', 'op_error', 'renorm')


class Schedule(NamedTuple):
    r: int
    T: float
    dt: float
    s_values: tuple
    # dt * max_s ||A(s)||_max
    regime: float


class StepRecord(NamedTuple):
    step: int
    s: float
    prob_plus: float
    fidelity: Optional[float]
    op_error: float
    renorm: float
    outcome: str


class RunReport(NamedTuple):
    schedule: Schedule
    backend: str
    mode: Mode
    steps: List[StepRecord]
    cumulative_success_prob: float
    final_infidelity: float
    final_infidelity_ideal: float
    queries: int
    bounds: Optional[BoundsReport] = None
    final_state: Optional[StateVector] = None

    def without_state(self):
        return self._replace(final_state=None)


def plan(f1, r, k_margin=DEFAULT_K_MARGIN, t_override=None):
    """
    The constant schedule with T = k_margin * delay_factor_bound(f1) unless t_override is given.
    """
    r = int(r)
    if r < 1:
        raise DomainError(BAD_STEPS_MSG.format(r))
    T = float(t_override) if t_override is not None else total_time(f1, k_margin)
    if not T > 0:
        raise DomainError(BAD_TIME_MSG.format(T))
    dt = T / r
    f0 = initial_function(f1)
    # |f_s| <= max(|f0|, |f1|) pointwise, so the endpoints bound ||A(s)||_max
    a_max = max(matrix_norms(Rank1Hamiltonian(f0, f1, s)).a_max for s in (0.0, 1.0))
    return Schedule(r=r, T=T, dt=dt, s_values=tuple(j / r for j in range(1, r + 1)), regime=dt * a_max)


def infidelity(state_a, state_b):
    """1 - |<a|b>|^2 of two normalized states on the same grid."""
    if state_a.grid != state_b.grid:
        raise ShapeError(f"The states live on different grids: {state_a.grid} and {state_b.grid}.")
    check_normalized(state_a, 'first state')
    check_normalized(state_b, 'second state')
    return min(max(1 - fidelity(state_a, state_b), 0.0), 1.0)


def _report_progress(stats, progress_logger, duration):
    """
    Report the progress every few seconds.
    """
    progress_logger(PROGRESS_MSG.format(duration, stats['step'], stats['r']))


def run(f1, schedule, backend='exact', mode=Mode.postselect, seed=0, track_fidelity=True,
        digit_bits=None, log_frequency_in_sec=0, progress_logger=logger.info):
    """
    Runs the schedule from |+^n> towards the encoding of f1.

    f1 is used as given. Pass it through gridfn.rescale_to_unit_density first
    for the unit-scale bounds and the default schedule. Step j draws its
    ancilla outcomes from the sub-stream ('step', j) of the seed.
    With digit_bits the interpolated samples are digitized before every step
    and final_infidelity is measured against the digitized target, while
    final_infidelity_ideal always uses the exact encoding of f1.
    """
    backend = parse_backend(backend)
    mode = Mode(mode)
    grid = f1.grid
    if backend.kind != Backend.ideal:
        check_joint_cap(grid)
    f0 = initial_function(f1)
    state = plus_state(grid)
    cumulative = 1.0
    records = []
    queries = 0
    stats = {'step': 0, 'r': schedule.r}
    if log_frequency_in_sec:
        # Creating a progress log reporter that runs in a separate thread every log_frequency_in_sec seconds.
        progress_timer = RepeatedTimer(log_frequency_in_sec, _report_progress, stats, progress_logger)
    else:
        progress_timer = None
    try:
        for j, s in enumerate(schedule.s_values, start=1):
            h = Rank1Hamiltonian(f0, f1, s, digit_bits=digit_bits)
            result = lowrank_step(state, h, schedule.dt, backend=backend, mode=mode, rng=substream(seed, 'step', j))
            state = result.state
            cumulative *= result.prob_plus
            queries += result.queries
            records.append(StepRecord(
                step=j,
                s=s,
                prob_plus=result.prob_plus,
                fidelity=fidelity(state, ground_state(h)) if track_fidelity else None,
                op_error=result.op_error,
                renorm=result.renorm,
                outcome=result.outcome,
            ))
            stats['step'] = j
    finally:
        if progress_timer:
            duration = progress_timer.stop()
            logger.debug("Adiabatic run of %s steps took %s seconds.", schedule.r, duration)
    digitized_target = ground_state(Rank1Hamiltonian(f0, f1, 1.0, digit_bits=digit_bits))
    bounds = eval_bounds(
        f1, schedule.r, T=schedule.T, empirical=False,
        digit_bits=DEFAULT_DIGIT_BITS if digit_bits is None else digit_bits,
    )
    return RunReport(
        schedule=schedule,
        backend=str(backend),
        mode=mode,
        steps=records,
        cumulative_success_prob=cumulative,
        final_infidelity=infidelity(state, digitized_target),
        final_infidelity_ideal=infidelity(state, target_state(f1)),
        queries=queries,
        bounds=bounds,
        final_state=state,
    )


def trace_rows(report):
    """The per step csv rows of a run."""
    rows = []
    for record in report.steps:
        rows.append({
            'step': record.step,
            's': record.s,
            'prob_plus': record.prob_plus,
            'fidelity': '' if record.fidelity is None else record.fidelity,
            'op_error': record.op_error,
            'renorm': record.renorm,
        })
    return rows


def scaling_exponent(values, errors):
    """The slope of log(errors) against log(values), e.g. infidelity ~ r^slope."""
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    slope, _ = np.polyfit(np.log(values), np.log(errors), 1)
    return float(slope)
