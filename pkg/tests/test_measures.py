import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from opgauge import (
    Attenuation,
    DerivedEpsilon,
    GaussianBlur,
    GridSpec,
    InsufficientSpectrumError,
    NonlinearStage,
    NumericalTolerance,
    SingularSpectrum,
    ThresholdError,
    ThresholdPolicy,
    analytic_spectrum,
    capacity,
    effective_rank,
    info_report,
    irreversibility,
    local_capacity,
    mode_weights,
    operator_entropy,
    randomized_svd,
    realize,
)
from opgauge.measures import ModeWeights
from opgauge.operators import diagonal, from_matrix

# -sum lambda ln lambda for lambda = (2/3, 1/6, 1/6), 30-digit mpmath
H_211 = 0.86756322848146125492283452977
# sech^2(2), 30-digit mpmath
SECH2_2 = 0.0706508248531644656862476558611

ABS = lambda d: ThresholdPolicy(d[1], NumericalTolerance.absolute(d[0]))  # noqa: E731


def spec(values, n=None):
    return SingularSpectrum.from_values(values, n)


class TestModeWeights:
    def test_symmetric(self):
        np.testing.assert_allclose(mode_weights(spec([1, 1])).lambdas, [0.5, 0.5])

    def test_211(self):
        np.testing.assert_allclose(mode_weights(spec([2, 1, 1])).lambdas, [2 / 3, 1 / 6, 1 / 6], rtol=1e-15)

    def test_sampling(self):
        lam = mode_weights(spec([1, 1, 1, 0, 0, 0, 0])).lambdas
        np.testing.assert_allclose(lam, [1 / 3] * 3 + [0] * 4)

    def test_degenerate(self):
        w = mode_weights(spec([0, 0, 0]))
        assert w.degenerate and operator_entropy(w) is None

    def test_sum_to_one(self):
        lam = mode_weights(spec(np.random.default_rng(0).uniform(0, 5, 50))).lambdas
        assert abs(lam.sum() - 1) <= 1e-12


class TestEntropy:
    def test_single_mode(self):
        assert operator_entropy(ModeWeights(np.array([1.0, 0, 0]))) == 0.0

    def test_constant_attenuation(self):
        s = analytic_spectrum(Attenuation(math.log(2)), GridSpec((64,)))
        assert abs(operator_entropy(mode_weights(s)) - math.log(64)) <= 1e-12

    def test_211(self):
        assert operator_entropy(mode_weights(spec([2, 1, 1]))) == pytest.approx(H_211, abs=1e-14)

    def test_blur_monotone_in_width(self):
        grid = GridSpec((64,))
        hs = [operator_entropy(mode_weights(analytic_spectrum(GaussianBlur(w), grid))) for w in (0.25, 0.5, 1, 2, 4)]
        assert all(a >= b for a, b in zip(hs, hs[1:]))

    def test_scale_invariance_on_operators(self):
        a = np.random.default_rng(3).standard_normal((20, 20))
        h = operator_entropy(mode_weights(from_matrix(a).spectrum("dense")))
        for c in (1e-6, 0.3, 7.0, 1e5):
            hc = operator_entropy(mode_weights(from_matrix(c * a).spectrum("dense")))
            assert abs(h - hc) <= 1e-12


positive_spectra = arrays(
    np.float64, st.integers(1, 200), elements=st.floats(0, 1e6, allow_nan=False, allow_infinity=False)
)


class TestEntropyProperties:
    @settings(max_examples=200, deadline=None)
    @given(positive_spectra)
    def test_bounds(self, values):
        assume(np.any(values > 0))
        s = spec(values)
        h = operator_entropy(mode_weights(s))
        assert 0.0 <= h <= math.log(s.n_object)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 300), st.floats(1e-6, 1e6))
    def test_maximal_when_equal(self, n, level):
        h = operator_entropy(mode_weights(spec(np.full(n, level))))
        assert abs(h - math.log(n)) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 300), st.floats(1e-6, 1e6))
    def test_single_mode_zero(self, n, level):
        v = np.zeros(n)
        v[0] = level
        assert operator_entropy(mode_weights(spec(v))) == 0.0

    @settings(max_examples=200, deadline=None)
    @given(positive_spectra, st.floats(1e-3, 1e3))
    def test_scale_invariance(self, values, c):
        assume(np.any(values > 1e-3))
        h = operator_entropy(mode_weights(spec(values)))
        hc = operator_entropy(mode_weights(spec(c * values)))
        assert abs(h - hc) <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(positive_spectra, st.floats(1e-3, 1.0))
    def test_r_eff(self, values, eps):
        assume(np.any(values > 0))
        r = info_report(spec(values), ThresholdPolicy(max(eps, 1e-3), NumericalTolerance.absolute(0.0)))
        assert abs(math.exp(r.entropy) - r.r_eff) <= 1e-12 * r.r_eff
        assert r.r_eff >= 1.0 - 1e-12


class TestEffectiveRankAndCapacity:
    def test_counting(self):
        assert effective_rank(spec([1, 0.5, 0.1, 1e-14]), ABS((1e-12, 0.3))) == 2

    def test_attenuation_below_threshold(self):
        s = analytic_spectrum(Attenuation(math.log(2)), GridSpec((16,)))
        assert effective_rank(s, ThresholdPolicy(0.6)) == 0

    def test_sampling(self):
        assert effective_rank(spec([1, 1, 1, 0, 0, 0]), ThresholdPolicy(0.5)) == 3

    def test_inclusive_at_epsilon(self):
        assert effective_rank(spec([0.5, 0.4]), ThresholdPolicy(0.5)) == 1

    def test_epsilon_below_delta(self):
        with pytest.raises(ThresholdError, match="delta"):
            effective_rank(spec([1.0]), ABS((1e-3, 1e-4)))

    def test_capacity_values(self):
        assert capacity(1) == 0.0
        assert capacity(25) == pytest.approx(3.21887582486820074920151866645, abs=1e-15)
        assert capacity(0) is None
        assert capacity(0, paper_convention=True) == 0.0

    def test_threshold_monotonicity(self):
        s = spec(np.random.default_rng(1).uniform(0, 1, 100))
        eps = np.linspace(0.01, 1, 25)
        reports = [info_report(s, ThresholdPolicy(e)) for e in eps]
        ranks = [r.rank_eps for r in reports]
        irr = [r.irreversibility for r in reports]
        assert ranks == sorted(ranks, reverse=True)
        assert irr == sorted(irr)

    def test_derived_epsilon(self):
        p = ThresholdPolicy(DerivedEpsilon(kappa=3, sigma_n=0.02, amplitude=2.0))
        assert p.epsilon_value == pytest.approx(0.03)
        assert effective_rank(spec([1, 0.04, 0.02]), p) == 2


class TestIrreversibility:
    def test_sampling_25_of_100(self):
        s = spec([1.0] * 25 + [0.0] * 75)
        for eps in (1e-9, 0.3, 1.0):
            loss = irreversibility(s, ThresholdPolicy(eps))
            assert (loss.irreversibility, loss.hard_loss, loss.soft_loss) == (0.75, 75, 0)

    def test_counting(self):
        loss = irreversibility(spec([1, 0.5, 0.1, 1e-14]), ABS((1e-12, 0.3)))
        assert (loss.irreversibility, loss.hard_loss, loss.soft_loss, loss.recoverable) == (0.5, 1, 1, 2)

    def test_identity(self):
        assert irreversibility(spec(np.ones(8)), ThresholdPolicy(0.5)).irreversibility == 0.0

    def test_delta_boundary_is_hard(self):
        loss = irreversibility(spec([1.0, 0.01]), ABS((0.01, 0.5)))
        assert loss.hard_loss == 1 and loss.soft_loss == 0

    def test_attenuation_contrast(self):
        grid = GridSpec((32,))
        for mu_d, rank in ((math.log(2), 0), (math.log(1.25), 32)):
            s = analytic_spectrum(Attenuation(mu_d), grid)
            r = info_report(s, ThresholdPolicy(0.6))
            assert abs(r.entropy - math.log(32)) <= 1e-12
            assert r.rank_eps == rank

    @settings(max_examples=200, deadline=None)
    @given(positive_spectra, st.floats(0, 1e-3), st.floats(1e-3, 1e6))
    def test_partition(self, values, delta, eps):
        r = info_report(spec(values), ThresholdPolicy(eps, NumericalTolerance.absolute(delta)))
        assert r.hard_loss + r.soft_loss + r.recoverable == r.n_object
        assert r.irreversibility == (r.hard_loss + r.soft_loss) / r.n_object
        assert r.rank_eps == r.recoverable

    def test_randomized_certified_tail(self):
        d = np.concatenate([[5, 4, 3], np.full(29, 1e-3)])
        op = diagonal(d)
        s = randomized_svd(op.apply, op.adjoint, 32, 4, seed=0).spectrum(32)
        r = info_report(s, ThresholdPolicy(0.5, NumericalTolerance.absolute(1e-6)))
        assert r.rank_eps == 3 and r.soft_loss == 29 and r.unresolved_modes == 28

    def test_randomized_uncertified_tail(self):
        op = diagonal(np.linspace(1, 0.5, 32))
        s = randomized_svd(op.apply, op.adjoint, 32, 4, seed=0).spectrum(32)
        with pytest.raises(InsufficientSpectrumError):
            irreversibility(s, ThresholdPolicy(0.3))

    def test_degenerate_report(self):
        r = info_report(spec([0.0, 0.0]), ThresholdPolicy(0.1, NumericalTolerance.absolute(0.0)))
        assert r.entropy is None and r.r_eff is None and r.capacity is None
        assert r.no_recoverable_modes and r.irreversibility == 1.0


class TestLocalCapacity:
    def test_identity_map(self):
        r = local_capacity(NonlinearStage("identity", 0.3), GridSpec((8,)), ThresholdPolicy(0.5))
        assert r.rank_eps == 8 and r.capacity == pytest.approx(math.log(8))

    def test_quadratic_at_zero_is_identity(self):
        grid, pol = GridSpec((8,)), ThresholdPolicy(0.5)
        a = local_capacity(NonlinearStage("quadratic", 0.0), grid, pol)
        b = local_capacity(NonlinearStage("identity", 0.0), grid, pol)
        assert (a.rank_eps, a.capacity, a.irreversibility) == (b.rank_eps, b.capacity, b.irreversibility)
        assert a.entropy == pytest.approx(b.entropy, abs=1e-12)

    def test_tanh_saturation(self):
        stage = NonlinearStage("tanh", 2.0)
        grid = GridSpec((4,))
        j = realize(stage, grid).materialize()
        np.testing.assert_allclose(np.diag(j), SECH2_2, rtol=1e-8)
        r = local_capacity(stage, grid, ThresholdPolicy(0.1))
        assert r.rank_eps == 0 and r.capacity is None and r.irreversibility == 1.0
        assert r.entropy == pytest.approx(math.log(4), abs=1e-9)
