import math
import pytest
import numpy as np
from scipy import stats
from rankprep.functions import parse_function
from rankprep.gridfn import (
    GridFunction, GridSpec, StateVector, check_same_grid, choose_initial_phase, digitize, eigenvalue_scale,
    encode_function, encoded_filling_ratio, encoding_infidelity, fidelity, flatten_grids, flatten_multivariate,
    initial_function, integral_encode, interpolate, make_grid_function, max_amplitude_ratio, norms,
    overlap_split, overlap_with_plus, plus_state, rescale_to_unit_density, sample_pointwise, target_state,
)
from rankprep.helper import (
    Encoding, DomainError, EvaluationError, PrecisionError, ResourceError, ShapeError, INITIAL_PHASES,
)
from tests import CORPUS_SPECS, parameterize_cases, pointwise

import logging
logging.disable(logging.CRITICAL)


class TestGridSpec:

    def test_points(self):
        grid = GridSpec(0, 1, 3)
        assert 8 == grid.N
        assert 0.125 == grid.delta
        assert np.allclose(np.arange(8) / 8, grid.points())
        # b is never a grid point
        assert 1.0 not in grid.points()

    def test_bad_interval(self):
        with pytest.raises(DomainError):
            GridSpec(1, 0, 3)

    def test_bad_qubits(self):
        with pytest.raises(ShapeError):
            GridSpec(0, 1, 0)

    def test_hashable_and_equal(self):
        assert GridSpec(0, 1, 2) == GridSpec(0.0, 1.0, 2)
        assert 1 == len({GridSpec(0, 1, 2), GridSpec(0.0, 1.0, 2)})


class TestSampling:

    def test_sample_pointwise(self):
        gf = sample_pointwise(parse_function('linear'), GridSpec(0, 1, 2))
        assert np.allclose([0, 0.25, 0.5, 0.75], gf.values)
        assert Encoding.pointwise == gf.encoding

    def test_non_finite_sample(self):
        with pytest.raises(EvaluationError):
            sample_pointwise(lambda x: np.log(x), GridSpec(0, 1, 2))

    def test_make_grid_function_length(self):
        with pytest.raises(ShapeError):
            make_grid_function(GridSpec(0, 1, 2), [1, 2, 3])

    def test_rows(self):
        gf = make_grid_function(GridSpec(0, 1, 1), [1 + 2j, 3])
        rows = gf.to_rows()
        assert {'j': 1, 'x_j': 0.5, 're': 3.0, 'im': 0.0} == rows[1]
        restored = GridFunction.from_rows(list(reversed(rows)), gf.grid)
        assert np.array_equal(gf.values, restored.values)


DIGITIZE_CASES = {
    'quarter_steps': {
        'values': [1.0, 0.5, 0.3],
        'd': 2,
        'fmax': None,
        'expected': [1.0, 0.5, 0.25],
    },
    'ties_away_from_zero': {
        'values': [0.125, -0.125, 0.375j],
        'd': 2,
        'fmax': 1.0,
        'expected': [0.25, -0.25, 0.5j],
    },
    'zero_function': {
        'values': [0, 0],
        'd': 8,
        'fmax': None,
        'expected': [0, 0],
    },
}


class TestDigitize:

    @pytest.mark.parametrize(**parameterize_cases('test_name, values, d, fmax, expected', DIGITIZE_CASES))
    def test_digitize(self, test_name, values, d, fmax, expected):
        grid = GridSpec(0, 1, 2)
        padded = list(values) + [0] * (grid.N - len(values))
        result = digitize(make_grid_function(grid, padded), d, fmax=fmax)
        assert np.allclose(expected, result.values[:len(values)]), f"{test_name} failed"
        assert d == result.digit_bits

    @pytest.mark.parametrize('d', [0, 63])
    def test_bad_bits(self, d):
        with pytest.raises(PrecisionError):
            digitize(pointwise('uniform', 2), d)

    def test_error_within_half_quantum(self):
        gf = pointwise('lognormal:0,0.5', 6)
        result = digitize(gf, 10)
        quantum = result.fmax_used / 2 ** 10
        assert np.max(np.abs(result.values - gf.values)) <= quantum / 2 * math.sqrt(2) + 1e-15


class TestIntegralEncode:

    def test_uniform(self):
        gf = integral_encode(parse_function('uniform'), GridSpec(0, 1, 2))
        assert np.allclose(0.5, gf.values)
        assert Encoding.integral == gf.encoding

    def test_linear_density(self):
        gf = integral_encode(lambda x: 2 * x, GridSpec(0, 1, 1))
        assert np.allclose([0.5, math.sqrt(0.75)], gf.values.real)

    def test_negative_density(self):
        with pytest.raises(DomainError) as excinfo:
            integral_encode(parse_function('sine'), GridSpec(0, 1, 2))
        assert 'negative' in str(excinfo.value)

    def test_complex_density(self):
        with pytest.raises(DomainError):
            integral_encode(parse_function('wave'), GridSpec(0, 1, 2))

    def test_bad_quad_points(self):
        with pytest.raises(DomainError):
            integral_encode(parse_function('uniform'), GridSpec(0, 1, 2), quad_points=0)

    @pytest.mark.parametrize('spec', ['uniform', 'normal:0.5,0.1', 'slater:10', 'lognormal:0,0.5'])
    def test_encodings_agree_for_smooth_densities(self, spec):
        assert encoding_infidelity(parse_function(spec), GridSpec(0, 1, 8)) < 1e-3

    def test_encodings_converge_with_n(self):
        density = parse_function('normal:0.5,0.1')
        errors = [encoding_infidelity(density, GridSpec(0, 1, n)) for n in range(6, 15)]
        assert all(fine <= coarse for coarse, fine in zip(errors, errors[1:]))
        assert errors[-1] < 1e-6


class TestNorms:

    def test_uniform(self):
        result = norms(pointwise('uniform', 2))
        assert (1.0, 1.0, 1.0, 2.0, 1.0) == pytest.approx(tuple(result))

    def test_zero_function(self):
        with pytest.raises(DomainError):
            norms(make_grid_function(GridSpec(0, 1, 2), np.zeros(4)))

    def test_encoded_filling_ratio_integral(self):
        gf = integral_encode(parse_function('uniform'), GridSpec(0, 2, 3))
        assert 2.0 == pytest.approx(encoded_filling_ratio(gf))

    def test_encoded_filling_ratio_pointwise(self):
        gf = pointwise('linear', 4)
        assert norms(gf).filling_ratio == encoded_filling_ratio(gf)

    @pytest.mark.parametrize('spec, exact', [
        ('linear', 0.5),
        ('square', 1 / 3),
        ('normal:0.3,0.1', stats.norm.cdf(1, 0.3, 0.1) - stats.norm.cdf(0, 0.3, 0.1)),
    ])
    def test_riemann_error_halves(self, spec, exact):
        errors = [abs(norms(pointwise(spec, n)).l1 - exact) for n in range(6, 16)]
        for coarse, fine in zip(errors, errors[1:]):
            assert 0.5 == pytest.approx(fine / coarse, rel=0.25)


class TestEigenvalueScale:

    def test_pointwise_uniform(self):
        assert 1.0 == pytest.approx(eigenvalue_scale(pointwise('uniform', 3)))

    def test_integral_is_mass(self):
        gf = integral_encode(parse_function('uniform', interval=(0, 2)), GridSpec(0, 2, 3))
        assert 2.0 == pytest.approx(eigenvalue_scale(gf))

    @pytest.mark.parametrize('spec', CORPUS_SPECS)
    @pytest.mark.parametrize('encoding', ['pointwise', 'integral'])
    def test_rescale_gives_unit_scale(self, spec, encoding):
        gf = encode_function(parse_function(spec), GridSpec(0, 1, 5), encoding=encoding, rescale=True)
        assert 1.0 == pytest.approx(eigenvalue_scale(gf), abs=1e-12)

    def test_rescale_zero(self):
        with pytest.raises(DomainError):
            rescale_to_unit_density(make_grid_function(GridSpec(0, 1, 1), [0, 0]))


class TestInitialFunction:

    def test_positive_real_takes_first_phase(self):
        assert INITIAL_PHASES[0] == choose_initial_phase(pointwise('uniform', 2))

    def test_negative_real(self):
        gf = make_grid_function(GridSpec(0, 1, 1), [-1, -2])
        assert INITIAL_PHASES[2] == choose_initial_phase(gf)

    def test_imaginary(self):
        gf = make_grid_function(GridSpec(0, 1, 1), [-1j, -1j])
        assert INITIAL_PHASES[1] == choose_initial_phase(gf)

    def test_phase_maximizes_overlap(self):
        gf = make_grid_function(GridSpec(0, 1, 2), [0.3 - 1j, 0.1 + 0.2j, -0.5j, 1.0])
        total = np.sum(gf.values)
        scores = [(np.conj(phase) * total).real for phase in INITIAL_PHASES]
        phase = choose_initial_phase(gf)
        assert max(scores) == (np.conj(phase) * total).real
        assert max(scores) > 0

    @pytest.mark.parametrize('encoding', ['pointwise', 'integral'])
    def test_unit_scale(self, encoding):
        gf = encode_function(parse_function('slater:5'), GridSpec(0, 1, 4), encoding=encoding)
        f0 = initial_function(gf)
        assert 1.0 == pytest.approx(eigenvalue_scale(f0))
        assert f0.encoding == gf.encoding


class TestInterpolate:

    def test_midpoint(self):
        f0 = pointwise('uniform', 2)
        f1 = pointwise('linear', 2)
        assert np.allclose((f0.values + f1.values) / 2, interpolate(f0, f1, 0.5).values)

    def test_endpoints(self):
        f0 = pointwise('uniform', 2)
        f1 = pointwise('linear', 2)
        assert np.array_equal(f1.values, interpolate(f0, f1, 1).values)
        assert np.array_equal(f0.values, interpolate(f0, f1, 0).values)

    def test_out_of_range(self):
        f0 = pointwise('uniform', 2)
        with pytest.raises(DomainError):
            interpolate(f0, f0, 1.5)

    def test_grid_mismatch(self):
        with pytest.raises(ShapeError):
            check_same_grid(pointwise('uniform', 2), pointwise('uniform', 3))

    def test_encoding_mismatch(self):
        grid = GridSpec(0, 1, 2)
        with pytest.raises(ShapeError):
            interpolate(sample_pointwise(parse_function('uniform'), grid),
                        integral_encode(parse_function('uniform'), grid), 0.5)


class TestFlatten:

    def test_most_significant_bits_first(self):
        gf = flatten_multivariate(lambda x, y: x + 10 * y, GridSpec(0, 1, 1), GridSpec(0, 1, 2))
        assert np.allclose([0, 2.5, 5, 7.5, 0.5, 3, 5.5, 8], gf.values)
        assert 3 == gf.grid.n

    def test_separable_filling_ratio_multiplies(self):
        grid_x, grid_y = GridSpec(0, 1, 4), GridSpec(0, 1, 3)
        fx, fy = parse_function('slater:5'), parse_function('normal:0.5,0.2')
        gf = flatten_grids(lambda x, y: fx(x) * fy(y), grid_x, grid_y)
        expected = norms(sample_pointwise(fx, grid_x)).filling_ratio * norms(sample_pointwise(fy, grid_y)).filling_ratio
        assert expected == pytest.approx(norms(gf).filling_ratio)

    def test_three_grids(self):
        grids = (GridSpec(0, 1, 1), GridSpec(0, 2, 1), GridSpec(0, 1, 2))
        gf = flatten_grids(lambda x, y, z: x * 0 + y * 0 + z * 0 + 1, *grids)
        assert 16 == gf.N
        assert 2.0 == gf.grid.b

    def test_cap(self, monkeypatch):
        monkeypatch.setenv('RANKPREP_MAX_GRID_QUBITS', '2')
        with pytest.raises(ResourceError):
            flatten_multivariate(lambda x, y: x * y, GridSpec(0, 1, 1), GridSpec(0, 1, 2))


class TestStates:

    def test_target_state_normalized(self):
        state = target_state(pointwise('lognormal:0,0.5', 5))
        assert 1.0 == pytest.approx(state.norm)

    def test_zero_state(self):
        with pytest.raises(DomainError):
            StateVector(grid=GridSpec(0, 1, 1), amplitudes=np.zeros(2)).normalized()

    def test_uniform_overlap_and_peak(self):
        gf = pointwise('uniform', 4)
        assert 1.0 == pytest.approx(overlap_with_plus(gf))
        assert 1.0 == pytest.approx(max_amplitude_ratio(gf))

    @pytest.mark.parametrize('spec', CORPUS_SPECS)
    def test_overlap_bounded_by_filling_ratio(self, spec):
        # (sum f)^2 / (N sum f^2) >= F / (N max |psi|^2) for f >= 0
        gf = pointwise(spec, 6)
        assert overlap_with_plus(gf) >= norms(gf).filling_ratio / max_amplitude_ratio(gf) - 1e-12

    def test_fidelity_ignores_global_phase(self):
        state = target_state(pointwise('linear:1,1', 3))
        rotated = state._replace(amplitudes=state.amplitudes * 1j)
        assert 1.0 == pytest.approx(fidelity(state, rotated))
        assert 1.0 == pytest.approx(fidelity(plus_state(state.grid), plus_state(state.grid)))


class TestOverlapSplit:

    def test_positive_part(self):
        gf = make_grid_function(GridSpec(0, 1, 2), [1, -3, 2, 0])
        part, sign = overlap_split(gf)
        assert 1 == sign
        assert np.allclose([1, 0, 2, 0], part.values)

    def test_negative_part(self):
        gf = make_grid_function(GridSpec(0, 1, 2), [-1, -1, 2, 0])
        part, sign = overlap_split(gf)
        assert -1 == sign
        assert np.allclose([-1, -1, 0, 0], part.values)

    def test_complex(self):
        with pytest.raises(DomainError):
            overlap_split(make_grid_function(GridSpec(0, 1, 1), [1j, 1]))

    def test_zero(self):
        with pytest.raises(DomainError):
            overlap_split(make_grid_function(GridSpec(0, 1, 1), [0, 0]))
