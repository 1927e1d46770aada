import numpy as np
import pytest

from mirror_diffusion import (ConfigError, Dirichlet, Domain, IdentityMap,
                              MirrorStationaryScore, MlpArch, MlpScore,
                              NegativeEntropyMap, NoiseSchedule, forward_marginal,
                              forward_step, init_mlp, reverse_step_dual_ddpm,
                              reverse_step_mirror_corrected, sample_dual_ddpm,
                              sample_mirror_corrected, standard_normal_target)
from mirror_diffusion.rng import make_generator

# Regression oracle: recorded from the first validated run of this
# implementation (seed 42, tiny network, d=2, T=10) and frozen.
GOLDEN_TRAJECTORY = np.array([
    [-1.257673272296176, -0.20819052895002524],
    [0.3555827472177874, -1.5045987285356446],
    [-0.6443095990215789, -0.9812015288538288],
])


class TestNoiseSchedule:
    def test_alpha_bar_monotone_and_terminal(self):
        sched = NoiseSchedule()
        assert np.all(np.diff(sched.alpha_bars) < 0)
        assert sched.alpha_bar(0) == 1.0
        assert sched.alpha_bar(sched.steps) < 1e-3

    def test_variance_preserving_coefficients(self):
        ab = NoiseSchedule().alpha_bars
        assert np.all(ab + (1.0 - ab) == 1.0)

    def test_validation(self):
        with pytest.raises(ConfigError):
            NoiseSchedule(beta_min=0.5, beta_max=0.1)
        with pytest.raises(ConfigError):
            NoiseSchedule(beta_max=1.5)
        with pytest.raises(ConfigError):
            NoiseSchedule(steps=0)

    def test_index_errors(self):
        sched = NoiseSchedule(steps=10)
        with pytest.raises(IndexError):
            sched.beta(0)
        with pytest.raises(IndexError):
            sched.beta(11)
        with pytest.raises(IndexError):
            sched.alpha_bar(11)


class TestForwardMarginal:
    def test_k_zero_is_identity(self):
        sched = NoiseSchedule(steps=100)
        y0 = np.array([1.5, -2.0])
        noise = np.array([3.0, 3.0])
        assert np.array_equal(forward_marginal(sched, y0, 0, noise), y0)

    def test_zero_beta_schedule_never_corrupts(self):
        sched = NoiseSchedule(beta_min=0.0, beta_max=0.0, steps=50)
        y0 = np.array([0.3, 0.7])
        noise = np.array([5.0, -5.0])
        for k in (0, 1, 25, 50):
            assert forward_marginal(sched, y0, k, noise) == pytest.approx(y0)

    def test_index_error_beyond_T(self):
        sched = NoiseSchedule(steps=10)
        with pytest.raises(IndexError):
            forward_marginal(sched, np.zeros(2), 11, np.zeros(2))

    def test_terminal_moments_monte_carlo(self):
        # 1e5 draws at k=T: mean sqrt(abar_T) y0, cov ~ I within 3 SE
        sched = NoiseSchedule()
        rng = make_generator(8)
        y0 = np.array([0.7, -0.4])
        z = rng.standard_normal((100_000, 2))
        yT = forward_marginal(sched, y0, sched.steps, z)
        expected_mean = np.sqrt(sched.alpha_bar(sched.steps)) * y0
        se_mean = 1.0 / np.sqrt(100_000)
        assert np.abs(yT.mean(axis=0) - expected_mean).max() <= 3 * se_mean
        se_var = np.sqrt(2.0 / 100_000)
        assert np.abs(yT.var(axis=0, ddof=1) - 1.0).max() <= 3 * se_var
        # first two moments within 1% of the standard normal prior
        assert np.abs(yT.mean(axis=0)).max() < 0.01
        assert np.abs(yT.var(axis=0, ddof=1) - 1.0).max() < 0.01


class TestForwardStep:
    def test_zero_beta_is_identity(self):
        sched = NoiseSchedule(beta_min=0.0, beta_max=0.0, steps=5)
        y = np.array([1.0, 2.0])
        assert np.array_equal(forward_step(sched, y, 0, np.array([9.0, 9.0])), y)

    def test_pure_noise_from_origin(self):
        sched = NoiseSchedule(steps=5)
        noise = np.array([1.0, -2.0])
        out = forward_step(sched, np.zeros(2), 2, noise)
        assert out == pytest.approx(np.sqrt(sched.beta(3)) * noise)

    def test_index_error(self):
        sched = NoiseSchedule(steps=5)
        with pytest.raises(IndexError):
            forward_step(sched, np.zeros(2), 5, np.zeros(2))

    def test_composition_matches_marginal_distribution(self):
        # iterate the chain T times vs closed form: moments agree within 3 SE
        sched = NoiseSchedule(beta_min=2e-3, beta_max=0.05, steps=40)
        rng = make_generator(17)
        n = 100_000
        y0 = np.full((n, 1), 0.9)
        y = y0.copy()
        for k in range(sched.steps):
            y = forward_step(sched, y, k, rng.standard_normal((n, 1)))
        closed = forward_marginal(sched, y0, sched.steps,
                                  rng.standard_normal((n, 1)))
        se_mean = 1.0 / np.sqrt(n)
        se_var = np.sqrt(2.0 / n)
        assert abs(y.mean() - closed.mean()) <= 3 * np.sqrt(2) * se_mean
        assert abs(y.var(ddof=1) - closed.var(ddof=1)) <= 3 * np.sqrt(2) * se_var


class TestReverseDualDdpm:
    def test_exact_score_standard_normal(self):
        # N(0,1) target in the dual: marginals stay N(0,1); with the exact
        # score the terminal law matches to discretization accuracy.
        sched = NoiseSchedule()
        score = lambda y, k: -y
        n = 100_000
        rng = make_generator(4)
        y = rng.standard_normal((n, 1))
        for k in range(sched.steps, 0, -1):
            z = rng.standard_normal((n, 1)) if k > 1 else 0.0
            y = reverse_step_dual_ddpm(sched, score, y, k, z)
        assert abs(y.mean()) <= 0.02
        assert 0.95 <= y.var(ddof=1) <= 1.05

    def test_zero_score_zero_noise_zero_beta_keeps_state(self):
        sched = NoiseSchedule(beta_min=0.0, beta_max=0.0, steps=4)
        y = np.array([[1.3, -0.2]])
        out = reverse_step_dual_ddpm(sched, lambda y_, k: 0.0 * y_, y, 3,
                                     np.zeros((1, 2)))
        assert np.array_equal(out, y)

    def test_golden_trajectory_regression(self):
        sched = NoiseSchedule(steps=10)
        arch = MlpArch(input_dim=2, hidden_widths=(4,), total_steps=10,
                       time_embedding_dim=4)
        score = MlpScore(init_mlp(arch, seed=7), sched)
        y = sample_dual_ddpm(sched, score, dim=2, n_chains=3, seed=42)
        assert np.array_equal(y, GOLDEN_TRAJECTORY)

    def test_step_index_bounds(self):
        sched = NoiseSchedule(steps=5)
        with pytest.raises(IndexError):
            reverse_step_dual_ddpm(sched, lambda y, k: -y, np.zeros(2), 6, np.zeros(2))


class TestReverseMirrorCorrected:
    def test_identity_map_zero_potential_shape(self):
        # H = I: step is y + 2 h s + sqrt(2h) z
        dim = 3
        sched = NoiseSchedule(steps=100)
        mm = IdentityMap(Domain.euclidean(dim))
        target = standard_normal_target(dim)
        zero_f = _ZeroPotential(target)
        score = lambda y, k: -0.5 * y
        rng = make_generator(11)
        y = rng.standard_normal((4, dim))
        z = rng.standard_normal((4, dim))
        out, events = reverse_step_mirror_corrected(sched, mm, zero_f, score, y, 50, z)
        h = 1.0 / sched.steps
        expected = y + 2.0 * h * score(y, 50) + np.sqrt(2.0 * h) * z
        assert out == pytest.approx(expected, abs=1e-14)
        assert events == 0

    def test_all_zero_inputs_keep_state(self):
        dim = 2
        sched = NoiseSchedule(steps=10)
        mm = IdentityMap(Domain.euclidean(dim))
        target = _ZeroPotential(standard_normal_target(dim))
        y = np.array([[0.4, -1.1]])
        out, _ = reverse_step_mirror_corrected(
            sched, mm, target, lambda y_, k: 0.0 * y_, y, 5, np.zeros((1, dim)))
        assert np.array_equal(out, y)

    def test_dirichlet_mean_recovered(self):
        # transported exact score; componentwise mean within 3 SE of 1/3
        alpha = np.array([2.0, 2.0, 2.0])
        target = Dirichlet(alpha)
        mm = NegativeEntropyMap(Domain.simplex(3))
        sched = NoiseSchedule(steps=2000)
        score = MirrorStationaryScore(mm, target)
        n = 10_000
        y, _ = sample_mirror_corrected(sched, mm, target, score, n, seed=5)
        x = mm.grad_conjugate(y)
        se = x.std(axis=0, ddof=1) / np.sqrt(n)
        assert np.abs(x.mean(axis=0) - 1.0 / 3.0).max() <= (3 * se).max()
        assert (x >= 0).all() and np.abs(x.sum(axis=1) - 1).max() <= 1e-9

    def test_mode_equivalence_identity_map_diffusion_coefficient(self):
        # With T a power of two and per-step beta = 2/T, the two modes'
        # noise coefficients coincide exactly: sqrt(2h) == sqrt(beta_k).
        T = 1024
        sched = NoiseSchedule(beta_min=2.0 / T, beta_max=2.0 / T, steps=T)
        h = 1.0 / sched.steps
        for k in (1, T // 2, T):
            assert np.sqrt(2.0 * h) == np.sqrt(sched.beta(k))


class _ZeroPotential:
    """Analytic target stub whose potential gradient vanishes."""

    def __init__(self, base):
        self._base = base
        self.domain = base.domain
        self.is_analytic = True

    def grad_potential(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))
