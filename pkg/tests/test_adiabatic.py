import time
import pytest
import numpy as np
from unittest import mock
from rankprep import adiabatic
from rankprep.adiabatic import (
    PROGRESS_MSG, TRACE_FIELDS, infidelity, plan, run, scaling_exponent, trace_rows,
)
from rankprep.gridfn import (
    GridSpec, StateVector, overlap_with_plus, plus_state, rescale_to_unit_density, target_state,
)
from rankprep.helper import DomainError, Mode, ShapeError, FIG2_TOTAL_TIME, LEADING_ORDER_SLACK, ORACLE_QUERIES_PER_STEP
from rankprep.sparsesim import lowrank_step
from tests import pointwise

import logging
logging.disable(logging.CRITICAL)


class TestPlan:

    def test_default_time(self, lognormal_n6):
        schedule = plan(lognormal_n6, 10)
        assert 800.0 == pytest.approx(schedule.T)
        assert 80.0 == pytest.approx(schedule.dt)
        assert pytest.approx([0.1 * j for j in range(1, 11)]) == list(schedule.s_values)
        assert schedule.regime > 0

    def test_override(self, lognormal_n6):
        schedule = plan(lognormal_n6, 4, t_override=2.0)
        assert 0.5 == schedule.dt

    @pytest.mark.parametrize('r, t_override', [(0, None), (4, -1.0), (4, 0.0)])
    def test_bad_schedule(self, lognormal_n6, r, t_override):
        with pytest.raises(DomainError):
            plan(lognormal_n6, r, t_override=t_override)


class TestInfidelity:

    def test_same_state(self):
        state = plus_state(GridSpec(0, 1, 3))
        assert 0.0 == infidelity(state, state)

    def test_grid_mismatch(self):
        with pytest.raises(ShapeError):
            infidelity(plus_state(GridSpec(0, 1, 2)), plus_state(GridSpec(0, 1, 3)))

    def test_unnormalized(self):
        grid = GridSpec(0, 1, 1)
        with pytest.raises(DomainError):
            infidelity(StateVector(grid=grid, amplitudes=np.array([1.0, 1.0])), plus_state(grid))


class TestRun:

    @pytest.mark.parametrize('backend', ['exact', 'taylor:7', 'ideal'])
    def test_uniform_target_is_never_left(self, backend):
        f1 = rescale_to_unit_density(pointwise('uniform', 3))
        report = run(f1, plan(f1, 8), backend=backend)
        assert report.final_infidelity < 1e-12
        assert 1.0 == pytest.approx(report.cumulative_success_prob)

    def test_single_ideal_step_keeps_overlap(self, lognormal_n6):
        # One step rotates about the target, so the overlap of |+^n> with it is kept.
        report = run(lognormal_n6, plan(lognormal_n6, 1), backend='ideal')
        assert 1 - overlap_with_plus(lognormal_n6) == pytest.approx(report.final_infidelity, abs=1e-12)

    def test_report_fields(self, lognormal_n6):
        schedule = plan(lognormal_n6, 16, t_override=4.0)
        report = run(lognormal_n6, schedule, backend='exact', seed=3)
        assert 16 == len(report.steps)
        assert ORACLE_QUERIES_PER_STEP * 16 == report.queries
        assert 'exact' == report.backend
        assert Mode.postselect == report.mode
        assert report.cumulative_success_prob == pytest.approx(np.prod([step.prob_plus for step in report.steps]))
        assert 16 == report.bounds.r
        assert not report.bounds.empirical
        assert 4.0 == report.bounds.T
        assert 1.0 == pytest.approx(report.final_state.norm)
        assert report.without_state().final_state is None
        assert all(0 <= step.fidelity <= 1 + 1e-12 for step in report.steps)

    def test_digitization_reports_both_infidelities(self, lognormal_n6):
        schedule = plan(lognormal_n6, 8, t_override=1.0)
        report = run(lognormal_n6, schedule, backend='ideal', digit_bits=3)
        assert report.final_infidelity != report.final_infidelity_ideal

    def test_sample_mode_is_seeded(self, lognormal_n6):
        schedule = plan(lognormal_n6, 6, t_override=30.0)
        first = run(lognormal_n6, schedule, mode='sample', seed=11, track_fidelity=False)
        second = run(lognormal_n6, schedule, mode='sample', seed=11, track_fidelity=False)
        assert [step.outcome for step in first.steps] == [step.outcome for step in second.steps]
        assert first.final_infidelity == second.final_infidelity
        assert all(step.fidelity is None for step in first.steps)

    def test_longer_ideal_evolution_gets_closer(self):
        f1 = rescale_to_unit_density(pointwise('slater:5', 4))
        start = 1 - overlap_with_plus(f1)
        report = run(f1, plan(f1, 4096), backend='ideal', track_fidelity=False)
        assert report.final_infidelity < start / 10

    def test_docstring_names_the_expected_rescaling(self):
        assert 'rescale_to_unit_density' in run.__doc__

    @pytest.mark.parametrize('T, r', [(2.0, 64), (2.0, 128), (1.0, 32)])
    def test_cumulative_success_above_bound(self, lognormal_n6, T, r):
        report = run(lognormal_n6, plan(lognormal_n6, r, t_override=T), track_fidelity=False)
        loose_bound = 1 - (1 + LEADING_ORDER_SLACK) * T ** 2 * report.bounds.a_max ** 2 / r
        assert loose_bound >= 0.5
        assert report.cumulative_success_prob >= loose_bound
        assert report.cumulative_success_prob >= report.bounds.prob_bound

    @mock.patch('rankprep.adiabatic.lowrank_step')
    def test_repeated_timer(self, mock_step, lognormal_n6):
        def slow_step(*args, **kwargs):
            time.sleep(.1)
            return lowrank_step(*args, **kwargs)

        mock_step.side_effect = slow_step
        progress_logger = mock.Mock()
        run(lognormal_n6, plan(lognormal_n6, 3, t_override=1.0), log_frequency_in_sec=0.02,
            progress_logger=progress_logger)
        message = progress_logger.call_args[0][0]
        assert message.startswith('rankprep 0 seconds in progress. Step')
        assert message.endswith('of 3.')


class TestTrace:

    def test_rows(self, lognormal_n6):
        report = run(lognormal_n6, plan(lognormal_n6, 4, t_override=1.0), backend='ideal', track_fidelity=False)
        rows = trace_rows(report)
        assert 4 == len(rows)
        assert list(TRACE_FIELDS) == list(rows[0].keys())
        assert '' == rows[0]['fidelity']
        assert 4 == rows[-1]['step']

    def test_scaling_exponent(self):
        assert -2.0 == pytest.approx(scaling_exponent([1, 2, 4], [1, 0.25, 0.0625]))

    def test_progress_message(self):
        assert 'rankprep 3 seconds in progress. Step 2 of 5.' == PROGRESS_MSG.format(3, 2, 5)
        stats = {'step': 2, 'r': 5}
        progress_logger = mock.Mock()
        adiabatic._report_progress(stats, progress_logger, duration=3)
        progress_logger.assert_called_once_with('rankprep 3 seconds in progress. Step 2 of 5.')


@pytest.mark.slow
class TestScaling:

    def test_infidelity_falls_with_r(self, lognormal_n6):
        rs = [64, 128, 256]
        schedules = [plan(lognormal_n6, r, t_override=FIG2_TOTAL_TIME) for r in rs]
        assert schedules[0].regime < 1
        errors = [run(lognormal_n6, schedule, track_fidelity=False).final_infidelity for schedule in schedules]
        assert all(later <= 0.75 * earlier for earlier, later in zip(errors, errors[1:]))
        assert -1.4 <= scaling_exponent(rs, errors) <= -1.0

    def test_infidelity_approaches_a_constant_in_n(self):
        errors = []
        for n in range(5, 10):
            f1 = rescale_to_unit_density(pointwise('lognormal:0,0.5', n))
            errors.append(run(f1, plan(f1, 128, t_override=FIG2_TOTAL_TIME), track_fidelity=False).final_infidelity)
        differences = np.abs(np.diff(errors))
        assert all(later < earlier for earlier, later in zip(differences, differences[1:]))

    def test_target_state_reached_for_large_r(self):
        f1 = rescale_to_unit_density(pointwise('normal:0.5,0.2', 5))
        report = run(f1, plan(f1, 32768), backend='exact', track_fidelity=False)
        assert 1 - abs(np.vdot(target_state(f1).amplitudes, report.final_state.amplitudes)) ** 2 < 0.05
