import pytest
import numpy as np
from scipy import linalg
from rankprep.bounds import random_instance
from rankprep.gridfn import (
    GridSpec, eigenvalue_scale, fidelity, initial_function, integral_encode, make_grid_function, plus_state,
    rescale_to_unit_density,
)
from rankprep.functions import parse_function
from rankprep.helper import DegenerateHamiltonianError, DomainError, ShapeError, substream
from rankprep.rank1 import (
    Rank1Hamiltonian, delay_factor, delay_factor_bound, derivative_norm, entry, exact_rank1_step,
    gap_lower_bound, ground_state, matrix_norms, sa_evolution_time, spectral_gap, total_time,
)
from tests import pointwise


@pytest.fixture
def lognormal_path():
    f1 = rescale_to_unit_density(pointwise('lognormal:0,0.5', 4))
    return initial_function(f1), f1


class TestRank1Hamiltonian:

    def test_dense_matches_entries(self, lognormal_path):
        f0, f1 = lognormal_path
        h = Rank1Hamiltonian(f0, f1, 0.3)
        a = h.dense_a()
        assert entry(h, 2, 5) == pytest.approx(a[2, 5])
        assert np.allclose(a, a.conj().T)
        assert np.allclose(-a / h.N, h.dense())

    def test_entry_out_of_range(self, lognormal_path):
        h = Rank1Hamiltonian(*lognormal_path, 0.5)
        with pytest.raises(ShapeError):
            h.entry(16, 0)

    def test_ground_state_and_gap(self, lognormal_path):
        h = Rank1Hamiltonian(*lognormal_path, 0.6)
        eigenvalues, eigenvectors = np.linalg.eigh(h.dense())
        assert spectral_gap(h) == pytest.approx(eigenvalues[1] - eigenvalues[0])
        state = ground_state(h)
        assert 1.0 == pytest.approx(fidelity(state, state._replace(amplitudes=eigenvectors[:, 0])))

    def test_integral_eigenvalue_is_mass(self):
        g = integral_encode(parse_function('normal:0.5,0.1'), GridSpec(0, 1, 5))
        h = Rank1Hamiltonian(g, g, 1.0)
        assert eigenvalue_scale(g) == pytest.approx(h.norm_sq)
        assert np.allclose(g.values, h.v)
        assert h.norm_sq == pytest.approx(np.linalg.eigvalsh(h.dense_a() / h.N)[-1])

    def test_digitized(self, lognormal_path):
        h = Rank1Hamiltonian(*lognormal_path, 0.5, digit_bits=4)
        assert 4 == h.f_s.digit_bits
        assert h.at(0.7).digit_bits == 4

    def test_degenerate(self):
        grid = GridSpec(0, 1, 1)
        h = Rank1Hamiltonian(make_grid_function(grid, [-1, -1]), make_grid_function(grid, [1, 1]), 0.5)
        with pytest.raises(DegenerateHamiltonianError):
            ground_state(h)
        with pytest.raises(DegenerateHamiltonianError):
            exact_rank1_step(plus_state(grid), h, 0.1)


class TestExactStep:

    @pytest.mark.parametrize('s, dt', [(0.0, 0.3), (0.5, 1.7), (1.0, -2.0)])
    def test_matches_expm(self, lognormal_path, s, dt):
        h = Rank1Hamiltonian(*lognormal_path, s)
        state = plus_state(h.grid)
        expected = linalg.expm(-1j * dt * h.dense()) @ state.amplitudes
        assert np.allclose(expected, exact_rank1_step(state, h, dt).amplitudes, atol=1e-12)

    def test_ground_state_only_gains_a_phase(self, lognormal_path):
        h = Rank1Hamiltonian(*lognormal_path, 1.0)
        state = ground_state(h)
        evolved = exact_rank1_step(state, h, 0.4)
        assert np.allclose(np.exp(0.4j * h.norm_sq) * state.amplitudes, evolved.amplitudes)

    def test_grid_mismatch(self, lognormal_path):
        h = Rank1Hamiltonian(*lognormal_path, 1.0)
        with pytest.raises(ShapeError):
            exact_rank1_step(plus_state(GridSpec(0, 1, 2)), h, 0.1)

    @pytest.mark.parametrize('s, dt', [(0.3, 0.8), (1.0, -1.3)])
    def test_half_steps_compose(self, lognormal_path, s, dt):
        h = Rank1Hamiltonian(*lognormal_path, s)
        state = plus_state(h.grid)
        halves = exact_rank1_step(exact_rank1_step(state, h, dt / 2), h, dt / 2)
        whole = exact_rank1_step(state, h, dt)
        assert np.allclose(whole.amplitudes, halves.amplitudes, atol=1e-10)
        assert 1.0 == pytest.approx(np.linalg.norm(whole.amplitudes), abs=1e-12)

    def test_sa_time_flips_sign(self):
        assert -0.25 == sa_evolution_time(0.25)


class TestBounds:

    def test_unit_scale_constants(self):
        f1 = rescale_to_unit_density(pointwise('slater:10', 5))
        assert 0.5 == pytest.approx(gap_lower_bound(f1))
        assert 8.0 == pytest.approx(delay_factor_bound(f1))
        assert 800.0 == pytest.approx(total_time(f1))
        assert 80.0 == pytest.approx(total_time(f1, k_margin=10))

    def test_bad_k_margin(self):
        with pytest.raises(DomainError):
            total_time(pointwise('uniform', 2), k_margin=0)

    def test_zero_target(self):
        with pytest.raises(DomainError):
            gap_lower_bound(make_grid_function(GridSpec(0, 1, 1), [0, 0]))

    def test_matrix_norms(self):
        f1 = rescale_to_unit_density(pointwise('uniform', 3))
        norms = matrix_norms(Rank1Hamiltonian(initial_function(f1), f1, 1.0))
        assert (1.0, 1.0) == pytest.approx(tuple(norms))

    def test_derivative_norm_matches_dense(self, lognormal_path):
        f0, f1 = lognormal_path
        s, eps = 0.4, 1e-3
        # H(s) is quadratic in s, so the central difference is exact.
        dense = (Rank1Hamiltonian(f0, f1, s + eps).dense() - Rank1Hamiltonian(f0, f1, s - eps).dense()) / (2 * eps)
        assert np.linalg.norm(dense, 2) == pytest.approx(derivative_norm(Rank1Hamiltonian(f0, f1, s)), rel=1e-7)

    @pytest.mark.parametrize('rescale', [True, False])
    @pytest.mark.parametrize('encoding', ['pointwise', 'integral'])
    def test_random_instances_respect_bounds(self, rescale, encoding):
        rng = substream(0, 'rank1-bounds', int(rescale))
        grid = GridSpec(0, 1, 4)
        for _ in range(20):
            f1 = random_instance(grid, rng, encoding=encoding)
            if rescale:
                f1 = rescale_to_unit_density(f1)
            f0 = initial_function(f1)
            gap_bound = gap_lower_bound(f1)
            delay_bound = delay_factor_bound(f1)
            for s in np.linspace(0, 1, 101):
                h = Rank1Hamiltonian(f0, f1, s)
                assert spectral_gap(h) >= gap_bound * (1 - 1e-12)
                assert delay_factor(h) <= delay_bound * (1 + 1e-12)
