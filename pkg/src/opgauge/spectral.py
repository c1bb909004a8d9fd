"""Singular spectra by three routes: dense SVD, closed form, randomized.

The dense route is the reference. The analytic route covers stages that are
diagonal in a known basis (pointwise multiplication, periodic convolution,
projection) and the randomized route is for large operators that are only
available matrix-free.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import EmptyOperatorError, InputError, ParameterError, UnsupportedError
from .stages import Attenuation, GaussianBlur, KernelConvolution, MTFStage, Sampling

METHODS = ("dense", "analytic", "randomized")


@dataclass(frozen=True, eq=False)
class SingularSpectrum:
    """Sorted singular values of an operator on an ``n_object``-dim space.

    For the randomized route only the leading ``len(values)`` values are
    known; ``tail_bound`` then records the assumption that every unresolved
    value is at most ``values[-1]``. ``hs_norm_sq`` is the sum of squares of
    the resolved values (the squared Hilbert-Schmidt norm when complete).
    """

    values: np.ndarray
    n_object: int
    method: str = "dense"
    accuracy_warning: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if self.method not in METHODS:
            raise InputError(f"unknown spectrum method {self.method!r}")
        if self.n_object < 1:
            raise EmptyOperatorError("spectrum of an empty operator")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("singular values must be finite and nonnegative")
        if np.any(np.diff(v) > 0):
            raise InputError("singular values must be sorted nonincreasing")
        if self.method == "randomized":
            if not 1 <= v.size <= self.n_object:
                raise InputError(f"randomized spectrum must hold 1..{self.n_object} values")
        elif v.size != self.n_object:
            raise InputError(f"expected {self.n_object} singular values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "n_object", int(self.n_object))

    @classmethod
    def from_values(cls, values, n_object=None, method="dense", accuracy_warning=False):
        """Sort ``values`` (and zero-pad to ``n_object`` for complete routes)."""
        v = np.sort(np.abs(np.asarray(values, dtype=float).ravel()))[::-1]
        if n_object is None:
            n_object = v.size
        if method != "randomized" and v.size < n_object:
            v = np.concatenate([v, np.zeros(n_object - v.size)])
        return cls(v, n_object, method, accuracy_warning)

    @property
    def complete(self):
        return self.method != "randomized" or self.values.size == self.n_object

    @property
    def tail_bound(self):
        """Upper bound assumed for unresolved values; None when complete."""
        return None if self.complete else float(self.values[-1])

    @property
    def hs_norm_sq(self):
        return float(np.sum(self.values**2))

    @property
    def sigma_max(self):
        return float(self.values[0])

    def __eq__(self, other):
        if not isinstance(other, SingularSpectrum):
            return NotImplemented
        return (
            self.n_object == other.n_object
            and self.method == other.method
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD ``A = U diag(s) V^T``; columns of U and V are orthonormal."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray
    method: str = "dense"
    accuracy_warning: bool = False

    def spectrum(self, n_object=None):
        if n_object is None:
            n_object = self.right_vectors.shape[0]
        return SingularSpectrum.from_values(
            self.singular_values, n_object, self.method, self.accuracy_warning
        )

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class NumericalTolerance:
    """Tolerance below which singular values count as numerically zero.

    ``policy="absolute"`` uses ``value`` as delta directly;
    ``policy="relative"`` uses ``delta = value * N * sigma_max`` for the
    spectrum at hand. The default is the usual numerical-rank convention.
    """

    value: float = float(np.finfo(float).eps)
    policy: str = "relative"

    def __post_init__(self):
        if self.policy not in ("absolute", "relative"):
            raise InputError(f"unknown tolerance policy {self.policy!r}", "delta.policy")
        if not np.isfinite(self.value) or self.value < 0:
            raise InputError(f"tolerance must be >= 0, got {self.value}", "delta.value")

    @classmethod
    def absolute(cls, delta):
        return cls(float(delta), "absolute")

    @classmethod
    def relative(cls, c=float(np.finfo(float).eps)):
        return cls(float(c), "relative")

    def resolve(self, spectrum):
        if self.policy == "absolute":
            return self.value
        return self.value * spectrum.n_object * spectrum.sigma_max


def _check_matrix(matrix):
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise InputError(f"expected a 2-D array, got shape {a.shape}")
    if a.size == 0:
        raise EmptyOperatorError("cannot decompose an empty operator")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    return a


def dense_svd(matrix):
    """Thin SVD of a dense matrix, singular values sorted nonincreasing."""
    a = _check_matrix(matrix)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdFactors(u, s, vt.T, "dense")


def singular_values(matrix):
    return np.linalg.svd(_check_matrix(matrix), compute_uv=False)


def spectral_norm(matrix):
    return float(singular_values(matrix)[0])


def analytic_spectrum(stage, grid):
    """Closed-form spectrum of a stage that is diagonal in a known basis."""
    if isinstance(stage, Attenuation):
        stage.check_grid(grid)
        values = stage.factors(grid)
    elif isinstance(stage, Sampling):
        stage.check_grid(grid)
        values = stage.mask.astype(float)
    elif isinstance(stage, (GaussianBlur, KernelConvolution, MTFStage)):
        if not grid.periodic:
            raise UnsupportedError(f"{stage.kind} needs a periodic grid; supply a matrix stage instead")
        stage.check_grid(grid)
        values = np.abs(stage.transfer(grid))
    else:
        raise UnsupportedError(f"no closed-form spectrum for stage kind {stage.kind!r}")
    return SingularSpectrum.from_values(values, grid.n, "analytic")


def _orth(y):
    return la.qr(y, mode="economic", check_finite=False)[0]


def randomized_svd(apply, apply_adjoint, n, k, oversample=8, power_iters=2, seed=0, tol=1e-6):
    """Truncated SVD of a matrix-free operator via a Gaussian range finder.

    ``apply`` maps an (n, l) block to the operator's output space and
    ``apply_adjoint`` maps back. The sketch has ``k + oversample`` columns
    and is refined by ``power_iters`` rounds of subspace iteration with QR
    re-orthonormalisation. If the top-k estimates still move by more than
    ``tol`` (relative) in the last round, the result carries
    ``accuracy_warning=True``.

    Accuracy is good to roughly 1e-6 relative when the spectrum has a gap,
    e.g. ``sigma_{k+1} <= 0.5 sigma_k``; that is checked in tests, not here.
    """
    n, k = int(n), int(k)
    if n < 1:
        raise EmptyOperatorError("randomized_svd on an empty operator")
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if oversample < 0 or power_iters < 0:
        raise ParameterError("oversample and power_iters must be >= 0")
    ell = min(n, k + int(oversample))
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((n, ell))

    q = _orth(apply(omega))
    previous = None
    for it in range(power_iters):
        if it == power_iters - 1:
            previous = la.svd(apply_adjoint(q).T, compute_uv=False)[:k]
        q = _orth(apply(_orth(apply_adjoint(q))))

    b = apply_adjoint(q).T  # q^T A, shape (ell, n)
    ub, s, vbt = la.svd(b, full_matrices=False)
    u = q @ ub[:, :k]
    s = s[:k]
    v = vbt[:k].T

    warn = False
    if previous is not None:
        scale = np.maximum(np.abs(s), np.finfo(float).tiny)
        warn = bool(np.max(np.abs(s - previous[: s.size]) / scale) > tol)
    return SvdFactors(u, s, v, "randomized", warn)


def numerical_rank(spectrum, tol=None):
    """Number of singular values strictly above the resolved tolerance.

    For a truncated (randomized) spectrum this counts resolved values only.
    """
    tol = tol if tol is not None else NumericalTolerance()
    delta = tol.resolve(spectrum)
    return int(np.count_nonzero(spectrum.values > delta))
