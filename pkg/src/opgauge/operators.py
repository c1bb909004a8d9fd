"""Realized linear operators on a discretised object space.

Stages are realized as matrix-free maps with an adjoint. Composition takes
stages in physical order (source first), so ``compose([S, P, D])`` is the
operator ``D o P o S``.
"""

import csv
import io
from pathlib import Path

import numpy as np

from .errors import CompositionError, InputError, StageError, UnsupportedError
from .spectral import (
    SingularSpectrum,
    analytic_spectrum,
    dense_svd,
    randomized_svd,
    singular_values,
)
from .stages import (
    Attenuation,
    GaussianBlur,
    KernelConvolution,
    MatrixStage,
    MTFStage,
    NonlinearStage,
    Sampling,
)

STRUCTURES = ("diagonal", "circulant", "projection", "dense", "composed")


class RealizedOperator:
    """A linear map R^n_object -> R^n_out given by ``apply`` and ``adjoint``.

    Both callables accept a vector of shape (n,) or a block of column
    vectors of shape (n, k). Instances are treated as immutable.
    """

    def __init__(
        self,
        n_object,
        apply,
        adjoint,
        structure,
        *,
        n_out=None,
        matrix=None,
        spectrum_fn=None,
        parts=(),
        materializable=True,
        label="",
    ):
        if structure not in STRUCTURES:
            raise InputError(f"unknown operator structure {structure!r}")
        self.n_object = int(n_object)
        self.n_out = int(n_out if n_out is not None else n_object)
        self._apply = apply
        self._adjoint = adjoint
        self.structure = structure
        self.parts = tuple(parts)
        self.materializable = materializable
        self.label = label
        self._matrix = matrix
        self._spectrum_fn = spectrum_fn

    def __repr__(self):
        return f"RealizedOperator({self.label or self.structure}, {self.n_out}x{self.n_object})"

    @property
    def shape(self):
        return (self.n_out, self.n_object)

    def _check_input(self, x, n):
        x = np.asarray(x, dtype=float)
        if x.ndim not in (1, 2) or x.shape[0] != n:
            raise InputError(f"{self.label or 'operator'} expects length {n}, got shape {x.shape}")
        return x

    def apply(self, x):
        return self._apply(self._check_input(x, self.n_object))

    def adjoint(self, y):
        return self._adjoint(self._check_input(y, self.n_out))

    __call__ = apply

    def materialize(self):
        if not self.materializable:
            raise UnsupportedError(f"{self!r} cannot be materialized")
        if self._matrix is None:
            m = self.apply(np.eye(self.n_object))
            m.setflags(write=False)
            self._matrix = m
        return self._matrix

    @property
    def has_analytic_spectrum(self):
        return self._spectrum_fn is not None

    def svd(self):
        return dense_svd(self.materialize())

    def norm(self):
        """Spectral norm (largest singular value)."""
        if self._spectrum_fn is not None:
            return self._spectrum_fn().sigma_max
        return float(singular_values(self.materialize())[0])

    def spectrum(self, route="auto", k=None, oversample=8, power_iters=2, seed=0):
        """Singular spectrum via ``"analytic"``, ``"dense"`` or ``"randomized"``.

        ``"auto"`` prefers the closed form and falls back to a dense SVD.
        """
        if route == "auto":
            route = "analytic" if self._spectrum_fn is not None else "dense"
        if route == "analytic":
            if self._spectrum_fn is None:
                raise UnsupportedError(f"{self!r} has no closed-form spectrum")
            return self._spectrum_fn()
        if route == "dense":
            s = singular_values(self.materialize())
            return SingularSpectrum.from_values(s, self.n_object, "dense")
        if route == "randomized":
            k = k if k is not None else min(self.n_object, 10)
            f = randomized_svd(
                self.apply, self.adjoint, self.n_object, k, oversample, power_iters, seed
            )
            return f.spectrum(self.n_object)
        raise InputError(f"unknown spectrum route {route!r}")


def identity(n, label="identity"):
    return RealizedOperator(
        n,
        lambda x: x.copy(),
        lambda y: y.copy(),
        "diagonal",
        spectrum_fn=lambda: SingularSpectrum.from_values(np.ones(n), n, "analytic"),
        label=label,
    )


def diagonal(factors, label="diagonal", structure="diagonal"):
    f = np.array(factors, dtype=float).ravel()
    n = f.size

    def apply(x):
        return f * x if x.ndim == 1 else f[:, None] * x

    return RealizedOperator(
        n,
        apply,
        apply,
        structure,
        spectrum_fn=lambda: SingularSpectrum.from_values(f, n, "analytic"),
        label=label,
    )


def from_matrix(matrix, label="matrix"):
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise InputError(f"expected a non-empty 2-D array, got shape {a.shape}")
    a.setflags(write=False)
    return RealizedOperator(
        a.shape[1], lambda x: a @ x, lambda y: a.T @ y, "dense", n_out=a.shape[0], matrix=a, label=label
    )


def circulant(transfer, dims, label="circulant", spectrum_fn=None):
    """Periodic convolution given by its (possibly complex) DFT ``transfer``.

    ``transfer`` must be Hermitian-symmetric so that real inputs map to real
    outputs; the imaginary roundoff is discarded.
    """
    dims = tuple(dims)
    n = int(np.prod(dims))
    h = np.asarray(transfer).reshape(dims)
    axes = tuple(range(len(dims)))

    def filt(x, g):
        block = x.reshape(dims + x.shape[1:])
        gg = g.reshape(dims + (1,) * (x.ndim - 1))
        out = np.fft.ifftn(np.fft.fftn(block, axes=axes) * gg, axes=axes).real
        return out.reshape(x.shape)

    hc = np.conj(h)
    return RealizedOperator(
        n,
        lambda x: filt(x, h),
        lambda y: filt(y, hc),
        "circulant",
        spectrum_fn=spectrum_fn or (lambda: SingularSpectrum.from_values(np.abs(h), n, "analytic")),
        label=label,
    )


def realize(stage, grid):
    """Turn a declarative stage into a :class:`RealizedOperator` on ``grid``."""
    stage.check_grid(grid)
    label = stage.label
    if isinstance(stage, Attenuation):
        return diagonal(stage.factors(grid), label=label)
    if isinstance(stage, Sampling):
        return diagonal(stage.mask.astype(float), label=label, structure="projection")
    if isinstance(stage, (GaussianBlur, KernelConvolution, MTFStage)):
        if not grid.periodic:
            raise UnsupportedError(f"{stage.kind} stage '{label}' needs a periodic grid")
        return circulant(
            stage.transfer(grid),
            grid.dims,
            label=label,
            spectrum_fn=lambda: analytic_spectrum(stage, grid),
        )
    if isinstance(stage, MatrixStage):
        return from_matrix(stage.matrix, label=label)
    if isinstance(stage, NonlinearStage):
        return linearize(stage, grid)
    raise InputError(f"cannot realize {type(stage).__name__}")


def compose(stages):
    """Compose realized operators given in physical order (first acts first)."""
    stages = list(stages)
    if not stages:
        raise CompositionError("cannot compose an empty chain")
    for i, (a, b) in enumerate(zip(stages, stages[1:])):
        if a.n_out != b.n_object:
            raise CompositionError(
                f"stage {i} outputs {a.n_out} samples but stage {i + 1} expects {b.n_object}"
            )
    if len(stages) == 1:
        return stages[0]

    def apply(x):
        for op in stages:
            x = op._apply(x)
        return x

    def adjoint(y):
        for op in reversed(stages):
            y = op._adjoint(y)
        return y

    return RealizedOperator(
        stages[0].n_object,
        apply,
        adjoint,
        "composed",
        n_out=stages[-1].n_out,
        parts=stages,
        materializable=all(op.materializable for op in stages),
        label=" -> ".join(op.label or op.structure for op in stages),
    )


def jacobian(fn, x, h):
    """Central-difference Jacobian of ``fn`` at ``x`` with step ``h``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        try:
            plus = np.asarray(fn(x + e), dtype=float)
            minus = np.asarray(fn(x - e), dtype=float)
        except Exception as exc:
            raise StageError(f"map evaluation failed while perturbing index {i}: {exc}") from exc
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
            raise StageError(f"map returned non-finite values while perturbing index {i}")
        cols.append((plus - minus) / (2 * h))
    return np.column_stack(cols)


def linearize(stage, grid):
    """Dense finite-difference Jacobian of a nonlinear stage at its operating point."""
    stage.check_grid(grid)
    x = stage.point(grid)
    jac = jacobian(stage.function(), x, stage.step(grid))
    return from_matrix(jac, label=stage.label)


def mtf_to_spectrum(stage, grid):
    """Singular spectrum implied by an MTF curve on a periodic grid."""
    if not isinstance(stage, MTFStage):
        stage = MTFStage(stage)
    return SingularSpectrum.from_values(stage.transfer(grid), grid.n, "analytic")


def load_matrix_text(source):
    """Read the plain-text matrix format: a ``"N M"`` line, then N rows of M numbers.

    ``source`` is a path or a file-like object.
    """
    if hasattr(source, "read"):
        text, where = source.read(), "<stream>"
    else:
        text, where = Path(source).read_text(), str(source)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty matrix file", where)
    try:
        n, m = (int(t) for t in lines[0].split())
    except ValueError:
        raise InputError(f"line 1: expected 'N M', got {lines[0]!r}", where) from None
    if len(lines) - 1 != n:
        raise InputError(f"header declares {n} rows, found {len(lines) - 1}", where)
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        try:
            row = [float(t) for t in ln.split()]
        except ValueError:
            raise InputError(f"line {i}: non-numeric entry", where) from None
        if len(row) != m:
            raise InputError(f"line {i}: expected {m} values, got {len(row)}", where)
        rows.append(row)
    return np.array(rows, dtype=float).reshape(n, m)


def dump_matrix_text(matrix):
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    out = [f"{a.shape[0]} {a.shape[1]}"]
    out += [" ".join(repr(float(v)) for v in row) for row in a]
    return "\n".join(out) + "\n"


def load_mtf_csv(source):
    """Read an MTF curve from CSV with header ``frequency,magnitude``."""
    if hasattr(source, "read"):
        text, where = source.read(), "<stream>"
    else:
        text, where = Path(source).read_text(), str(source)
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader, [])]
    if header != ["frequency", "magnitude"]:
        raise InputError(f"expected header 'frequency,magnitude', got {','.join(header)!r}", where)
    rows = []
    for i, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        try:
            rows.append([float(row[0]), float(row[1])])
        except (ValueError, IndexError):
            raise InputError(f"line {i}: expected two numbers", where) from None
    return np.array(rows, dtype=float)
