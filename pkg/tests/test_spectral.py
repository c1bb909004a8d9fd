import mpmath
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from opgauge import (
    Attenuation,
    EmptyOperatorError,
    GaussianBlur,
    GridSpec,
    InputError,
    KernelConvolution,
    MatrixStage,
    NumericalTolerance,
    ParameterError,
    Sampling,
    SingularSpectrum,
    UnsupportedError,
    analytic_spectrum,
    dense_svd,
    numerical_rank,
    randomized_svd,
    realize,
)
from opgauge.operators import diagonal, from_matrix

# exp(-k^2/2) at k = 0, pi/2, pi (30-digit mpmath evaluation)
BLUR4 = (1.0, 0.291212933214020866058834329882808, 0.0071918833558263656078013663963706)


def mp_singular_values(a):
    """Independent SVD oracle: mpmath's Jacobi-style routine at 30 digits."""
    with mpmath.workdps(30):
        s = mpmath.svd_r(mpmath.matrix(a.tolist()), compute_uv=False)
        return np.array(sorted((float(v) for v in s), reverse=True))


class TestDenseSvd:
    def test_identity(self):
        assert np.array_equal(dense_svd(np.eye(3)).singular_values, [1, 1, 1])

    def test_diagonal_sorted(self):
        np.testing.assert_allclose(dense_svd(np.diag([3.0, 0.0, 1.0])).singular_values, [3, 1, 0], atol=1e-15)

    def test_matches_independent_oracle(self, rng):
        a = rng.standard_normal((8, 8))
        got = dense_svd(a).singular_values
        np.testing.assert_allclose(got, mp_singular_values(a), rtol=1e-10)

    def test_factors_orthonormal(self, rng):
        f = dense_svd(rng.standard_normal((32, 32)))
        assert np.max(np.abs(f.left_vectors.T @ f.left_vectors - np.eye(32))) <= 1e-10
        assert np.max(np.abs(f.right_vectors.T @ f.right_vectors - np.eye(32))) <= 1e-10

    def test_reconstruction_n512(self, rng):
        a = rng.standard_normal((512, 512))
        f = dense_svd(a)
        assert np.max(np.abs(a - f.reconstruct())) <= 1e-8 * f.singular_values[0]

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            dense_svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_rejects_empty(self):
        with pytest.raises(EmptyOperatorError):
            dense_svd(np.zeros((0, 0)))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def square_matrices(draw, max_n=64):
    n = draw(st.integers(1, max_n))
    return draw(arrays(np.float64, (n, n), elements=finite))


class TestSvdProperties:
    @settings(max_examples=40, deadline=None)
    @given(square_matrices())
    def test_round_trip(self, a):
        f = dense_svd(a)
        assert np.max(np.abs(a - f.reconstruct())) <= 1e-8 * max(f.singular_values[0], 1.0)

    @settings(max_examples=40, deadline=None)
    @given(square_matrices(max_n=24), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, a, r):
        n = a.shape[0]
        p = np.eye(n)[r.sample(range(n), n)]
        q = np.eye(n)[r.sample(range(n), n)]
        s, sp = dense_svd(a).singular_values, dense_svd(p @ a @ q).singular_values
        assert np.max(np.abs(s - sp)) <= 1e-12 * max(1.0, s[0])

    @settings(max_examples=40, deadline=None)
    @given(square_matrices(max_n=24), st.floats(1e-3, 1e3))
    def test_scale_equivariance(self, a, c):
        s, sc = dense_svd(a).singular_values, dense_svd(c * a).singular_values
        assert np.max(np.abs(sc - c * s)) <= 1e-12 * max(c * s[0], 1e-300) * a.shape[0]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 128), st.floats(0.05, 6.0))
    def test_route_equivalence_blur(self, n, width):
        grid = GridSpec((n,))
        op = realize(GaussianBlur(width), grid)
        kernel = op.apply(np.eye(n)[0])
        dense = dense_svd(sla.circulant(kernel)).singular_values
        analytic = analytic_spectrum(GaussianBlur(width), grid).values
        assert np.max(np.abs(np.sort(dense) - np.sort(analytic))) <= 1e-10

    @settings(max_examples=25, deadline=None)
    @given(arrays(np.float64, st.integers(1, 128), elements=st.floats(-1, 1)))
    def test_route_equivalence_kernel(self, kernel):
        grid = GridSpec((kernel.size,))
        dense = dense_svd(sla.circulant(kernel)).singular_values
        analytic = analytic_spectrum(KernelConvolution(kernel), grid).values
        assert np.max(np.abs(np.sort(dense) - np.sort(analytic))) <= 1e-10


class TestAnalyticSpectrum:
    def test_attenuation_ln2(self):
        s = analytic_spectrum(Attenuation(0.693147, 1.0), GridSpec((4,)))
        np.testing.assert_allclose(s.values, 0.5, atol=1e-6)
        assert s.method == "analytic"

    def test_gaussian_n4(self):
        s = analytic_spectrum(GaussianBlur(1.0), GridSpec((4,)))
        expected = [BLUR4[0], BLUR4[1], BLUR4[1], BLUR4[2]]
        np.testing.assert_allclose(s.values, expected, rtol=1e-14)

    def test_sampling(self):
        mask = np.zeros(8, bool)
        mask[[1, 4, 6]] = True
        s = analytic_spectrum(Sampling(mask), GridSpec((8,)))
        assert np.array_equal(s.values, [1, 1, 1, 0, 0, 0, 0, 0])

    def test_spatially_varying_attenuation_sorted(self):
        mu = np.array([0.0, 2.0, 1.0])
        s = analytic_spectrum(Attenuation(mu, 1.0), GridSpec((3,)))
        np.testing.assert_allclose(s.values, np.exp(-np.array([0.0, 1.0, 2.0])))

    def test_unsupported_kind(self):
        with pytest.raises(UnsupportedError):
            analytic_spectrum(MatrixStage(np.eye(2)), GridSpec((2,)))

    def test_convolution_needs_periodic_grid(self):
        with pytest.raises(UnsupportedError):
            analytic_spectrum(GaussianBlur(1.0), GridSpec((8,), periodic=False))

    def test_2d_grid(self):
        grid = GridSpec((4, 4), (1.0, 2.0))
        s = analytic_spectrum(GaussianBlur(0.7), grid)
        ky, kx = np.meshgrid(2 * np.pi * np.fft.fftfreq(4, 1.0), 2 * np.pi * np.fft.fftfreq(4, 2.0), indexing="ij")
        expected = np.sort(np.exp(-0.5 * 0.49 * (kx**2 + ky**2)).ravel())[::-1]
        np.testing.assert_allclose(s.values, expected, rtol=1e-14)


class TestRandomizedSvd:
    def test_decaying_diagonal(self):
        d = np.concatenate([[10, 5, 1], np.full(61, 0.1)])
        op = diagonal(d)
        f = randomized_svd(op.apply, op.adjoint, 64, 3, seed=3)
        oracle = dense_svd(np.diag(d)).singular_values[:3]
        np.testing.assert_allclose(f.singular_values, oracle, rtol=1e-6)

    def test_identity(self):
        op = diagonal(np.ones(16))
        f = randomized_svd(op.apply, op.adjoint, 16, 4, seed=0)
        np.testing.assert_allclose(f.singular_values, 1.0, rtol=1e-12)

    def test_blur_matches_analytic(self):
        grid = GridSpec((256,))
        op = realize(GaussianBlur(12.0), grid)
        f = randomized_svd(op.apply, op.adjoint, 256, 10, seed=11)
        ref = analytic_spectrum(GaussianBlur(12.0), grid).values[:10]
        np.testing.assert_allclose(f.singular_values, ref, rtol=1e-6)

    def test_gap_contract_on_random_matrices(self, rng):
        # spectra with sigma_{k+1} <= 0.5 sigma_k
        for trial in range(5):
            n, k = 48, 6
            u, _ = np.linalg.qr(rng.standard_normal((n, n)))
            v, _ = np.linalg.qr(rng.standard_normal((n, n)))
            s = np.concatenate([np.linspace(4, 1, k), 0.5 * 0.8 ** np.arange(n - k)])
            a = (u * s) @ v.T
            op = from_matrix(a)
            f = randomized_svd(op.apply, op.adjoint, n, k, seed=trial)
            np.testing.assert_allclose(f.singular_values, s[:k], rtol=1e-6)

    def test_deterministic(self):
        op = realize(GaussianBlur(3.0), GridSpec((128,)))
        a = randomized_svd(op.apply, op.adjoint, 128, 8, seed=5)
        b = randomized_svd(op.apply, op.adjoint, 128, 8, seed=5)
        assert a.singular_values.tobytes() == b.singular_values.tobytes()

    def test_slow_decay_is_flagged(self):
        op = realize(GaussianBlur(1.0), GridSpec((256,)))
        f = randomized_svd(op.apply, op.adjoint, 256, 10, seed=0)
        assert f.accuracy_warning

    def test_k_out_of_range(self):
        op = diagonal(np.ones(4))
        with pytest.raises(ParameterError):
            randomized_svd(op.apply, op.adjoint, 4, 5)

    def test_spectrum_tail_marker(self):
        op = diagonal(np.linspace(1, 0.1, 20))
        s = randomized_svd(op.apply, op.adjoint, 20, 4, seed=1).spectrum(20)
        assert s.method == "randomized" and s.values.size == 4
        assert s.tail_bound == s.values[-1]


class TestNumericalRank:
    def test_counting(self):
        s = SingularSpectrum([1, 0.5, 1e-14], 3)
        assert numerical_rank(s, NumericalTolerance.absolute(1e-12)) == 2

    @pytest.mark.parametrize("delta", [0.0, 1e-12, 1.0])
    def test_zero_spectrum(self, delta):
        assert numerical_rank(SingularSpectrum([0, 0, 0], 3), NumericalTolerance.absolute(delta)) == 0

    def test_sampling(self):
        s = SingularSpectrum([1, 1, 1, 0, 0, 0, 0, 0], 8)
        assert numerical_rank(s, NumericalTolerance.absolute(1e-12)) == 3

    def test_strict_at_delta(self):
        s = SingularSpectrum([1.0, 0.5], 2)
        assert numerical_rank(s, NumericalTolerance.absolute(0.5)) == 1

    def test_default_relative_policy(self):
        s = SingularSpectrum([2.0, 1e-13, 1e-16], 3)
        # delta = 3 * eps * 2 ~ 1.3e-15
        assert numerical_rank(s) == 2


class TestSpectrumType:
    def test_rejects_unsorted(self):
        with pytest.raises(InputError):
            SingularSpectrum([0.5, 1.0], 2)

    def test_rejects_negative(self):
        with pytest.raises(InputError):
            SingularSpectrum([1.0, -0.1], 2)

    def test_hs_norm(self):
        s = SingularSpectrum.from_values([1.0, 3.0, 2.0])
        assert s.hs_norm_sq == 14.0
        assert list(s.values) == [3, 2, 1]

    def test_length_must_match(self):
        with pytest.raises(InputError):
            SingularSpectrum([1.0], 2)
