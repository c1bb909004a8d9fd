"""Declarative descriptions of physical imaging stages.

A stage says *what* a step of the chain does (attenuate, blur, sample, ...);
:func:`opgauge.operators.realize` turns it into a concrete linear map on a
:class:`~opgauge.grid.GridSpec`.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


def _freeze(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class _Stage:
    """Equality that understands array-valued fields."""

    kind = None

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not (np.shape(a) == np.shape(b) and np.array_equal(a, b)):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None

    def check_grid(self, grid):
        pass


def _check_length(arr, grid, path):
    if arr.size != grid.n:
        raise InputError(f"expected {grid.n} samples, got {arr.size}", path)


@dataclass(eq=False)
class Attenuation(_Stage):
    """Multiplicative attenuation ``exp(-mu(r) d)``.

    ``mu`` is either a scalar or one coefficient per grid sample.
    """

    mu: object
    d: float = 1.0
    label: str = "attenuation"
    kind = "attenuation"

    def __post_init__(self):
        if np.ndim(self.mu) == 0:
            self.mu = float(self.mu)
            bad = not np.isfinite(self.mu) or self.mu < 0
        else:
            self.mu = _freeze(self.mu)
            bad = not np.all(np.isfinite(self.mu)) or np.any(self.mu < 0)
        if bad:
            raise InputError("attenuation coefficients must be finite and >= 0", "mu")
        self.d = float(self.d)
        if not np.isfinite(self.d) or self.d < 0:
            raise InputError(f"propagation distance must be >= 0, got {self.d}", "d")

    def check_grid(self, grid):
        if isinstance(self.mu, np.ndarray):
            _check_length(self.mu, grid, "mu")

    def factors(self, grid):
        mu = np.broadcast_to(self.mu, (grid.n,)) if np.ndim(self.mu) == 0 else self.mu.ravel()
        return np.exp(-mu * self.d)


@dataclass(eq=False)
class GaussianBlur(_Stage):
    """Periodic convolution with a Gaussian of standard deviation ``width``."""

    width: float
    label: str = "gaussian_blur"
    kind = "gaussian_blur"

    def __post_init__(self):
        self.width = float(self.width)
        if not np.isfinite(self.width) or self.width <= 0:
            raise InputError(f"blur width must be > 0, got {self.width}", "width")

    def transfer(self, grid):
        k = grid.frequency_magnitudes(angular=True)
        return np.exp(-0.5 * self.width**2 * k**2)


@dataclass(eq=False)
class KernelConvolution(_Stage):
    """Periodic convolution with an explicit kernel (index 0 is the origin)."""

    kernel: object
    label: str = "kernel_convolution"
    kind = "kernel_convolution"

    def __post_init__(self):
        self.kernel = _freeze(self.kernel)
        if not np.all(np.isfinite(self.kernel)):
            raise InputError("kernel entries must be finite", "kernel")

    def check_grid(self, grid):
        _check_length(self.kernel, grid, "kernel")

    def transfer(self, grid):
        return np.fft.fftn(self.kernel.reshape(grid.dims)).ravel()


def uniform_mask(n, m):
    """Boolean mask keeping ``m`` of ``n`` evenly spaced samples."""
    if not 1 <= m <= n:
        raise InputError(f"need 1 <= M <= N, got M={m}, N={n}", "mask")
    mask = np.zeros(n, dtype=bool)
    mask[(np.arange(m) * n) // m] = True
    return mask


@dataclass(eq=False)
class Sampling(_Stage):
    """Orthogonal projection onto the samples where ``mask`` is true.

    The output stays on the original N-sample object space (unsampled points
    read zero), so losses are always counted against all N modes.
    """

    mask: object
    label: str = "sampling"
    kind = "sampling"

    def __post_init__(self):
        self.mask = _freeze(self.mask, dtype=bool)
        if self.mask.ndim != 1:
            self.mask = _freeze(self.mask.ravel(), dtype=bool)
        m = int(self.mask.sum())
        if not 1 <= m <= self.mask.size:
            raise InputError(f"sampling mask must keep 1..N samples, keeps {m}", "mask")

    @classmethod
    def uniform(cls, n, m, label="sampling"):
        return cls(uniform_mask(n, m), label=label)

    @property
    def keep(self):
        return int(self.mask.sum())

    def check_grid(self, grid):
        _check_length(self.mask, grid, "mask")


@dataclass(eq=False)
class MatrixStage(_Stage):
    """Explicit dense matrix acting on flattened object vectors.

    ``path`` is informational (where the matrix was loaded from); the data
    itself always lives in ``matrix``.
    """

    matrix: object
    label: str = "matrix"
    path: str = None
    kind = "matrix"

    def __post_init__(self):
        self.matrix = _freeze(np.atleast_2d(self.matrix))
        if self.matrix.ndim != 2 or 0 in self.matrix.shape:
            raise InputError(f"matrix must be a non-empty 2-D array, got shape {self.matrix.shape}", "matrix")
        if not np.all(np.isfinite(self.matrix)):
            raise InputError("matrix entries must be finite", "matrix")

    def check_grid(self, grid):
        if self.matrix.shape[1] != grid.n:
            raise InputError(f"matrix has {self.matrix.shape[1]} columns, grid has N={grid.n}", "matrix")


EXTRAPOLATION_RULES = (None, "hold", "zero")


@dataclass(eq=False)
class MTFStage(_Stage):
    """Radially symmetric, zero-phase transfer function given as an MTF curve.

    ``curve`` rows are ``(frequency, magnitude)`` with frequency in cycles per
    unit length. Magnitudes are linearly interpolated at each grid frequency
    ``||f||``. Beyond the last curve point, ``extrapolation`` decides: None
    (error), ``"hold"`` (last magnitude) or ``"zero"``.
    """

    curve: object
    label: str = "mtf"
    extrapolation: str = None
    path: str = None
    kind = "mtf"

    def __post_init__(self):
        curve = _freeze(self.curve)
        if curve.ndim != 2 or curve.shape[1] != 2 or curve.shape[0] < 2:
            raise InputError("MTF curve needs at least two (frequency, magnitude) rows", "curve")
        f, m = curve[:, 0], curve[:, 1]
        if not np.all(np.isfinite(curve)):
            raise InputError("MTF curve must be finite", "curve")
        if f[0] < 0 or np.any(np.diff(f) <= 0):
            raise InputError("MTF frequencies must be nonnegative and strictly increasing", "curve")
        if np.any(m < 0) or np.any(m > 1):
            raise InputError("MTF magnitudes must lie in [0, 1]", "curve")
        if self.extrapolation not in EXTRAPOLATION_RULES:
            raise InputError(f"unknown extrapolation rule {self.extrapolation!r}", "extrapolation")
        self.curve = curve

    def transfer(self, grid):
        f = grid.frequency_magnitudes(angular=False)
        fc, mc = self.curve[:, 0], self.curve[:, 1]
        fmax = f.max()
        # allow roundoff at the Nyquist bin
        if fmax > fc[-1] * (1 + 1e-12) and self.extrapolation is None:
            raise InputError(
                f"MTF curve ends at {fc[-1]:g} but grid frequencies reach {fmax:g}; "
                "declare an extrapolation rule",
                "curve",
            )
        if f.min() < fc[0]:
            raise InputError(f"MTF curve starts at {fc[0]:g}, grid needs 0", "curve")
        right = 0.0 if self.extrapolation == "zero" else mc[-1]
        out = np.interp(f, fc, mc, right=right)
        out[f <= fc[-1] * (1 + 1e-12)] = np.interp(f[f <= fc[-1] * (1 + 1e-12)], fc, mc)
        return out


def _identity(x):
    return x


def _quadratic(x, a=0.1):
    return x + a * x**2


def _tanh(x, gain=1.0):
    return np.tanh(gain * x)


def _exp(x, rate=1.0):
    return np.exp(rate * x)


# Elementwise maps addressable from chain files.
NONLINEAR_MAPS = {
    "identity": _identity,
    "quadratic": _quadratic,
    "tanh": _tanh,
    "exp": _exp,
}


@dataclass(eq=False)
class NonlinearStage(_Stage):
    """Nonlinear stage, analysed through its Jacobian at ``operating_point``.

    ``map`` is either a callable on object vectors or the name of an entry
    in :data:`NONLINEAR_MAPS` (then ``params`` are passed as keywords).
    ``fd_step`` of None means ``1e-5 * (1 + max|X|)``.
    """

    map: object
    operating_point: object
    fd_step: float = None
    params: dict = field(default_factory=dict)
    label: str = "nonlinear"
    kind = "nonlinear"

    def __post_init__(self):
        if isinstance(self.map, str) and self.map not in NONLINEAR_MAPS:
            raise InputError(f"unknown nonlinear map {self.map!r}", "map")
        if not isinstance(self.map, str) and not callable(self.map):
            raise InputError("map must be callable or a registered name", "map")
        if np.ndim(self.operating_point) == 0:
            self.operating_point = float(self.operating_point)
        else:
            self.operating_point = _freeze(self.operating_point)
        if self.fd_step is not None:
            self.fd_step = float(self.fd_step)
            if not self.fd_step > 0:
                raise InputError(f"fd_step must be > 0, got {self.fd_step}", "fd_step")
        self.params = dict(self.params)

    def check_grid(self, grid):
        if isinstance(self.operating_point, np.ndarray):
            _check_length(self.operating_point, grid, "operating_point")

    def point(self, grid):
        if isinstance(self.operating_point, np.ndarray):
            return np.array(self.operating_point, dtype=float).ravel()
        return np.full(grid.n, self.operating_point)

    def function(self):
        if isinstance(self.map, str):
            fn, params = NONLINEAR_MAPS[self.map], self.params
            return lambda x: fn(x, **params)
        return self.map

    def step(self, grid):
        if self.fd_step is not None:
            return self.fd_step
        return 1e-5 * (1.0 + np.max(np.abs(self.point(grid))))


STAGE_TYPES = {
    cls.kind: cls
    for cls in (Attenuation, GaussianBlur, KernelConvolution, Sampling, MatrixStage, MTFStage, NonlinearStage)
}
