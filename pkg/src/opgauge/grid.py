"""Discretised object-space grids."""

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class GridSpec:
    """Regular 1-D or 2-D sampling grid.

    Vectors on the grid are flattened in C (row-major) order, so a 2-D grid
    with ``dims=(ny, nx)`` carries objects of length ``ny * nx``.
    """

    dims: tuple
    spacing: tuple = None
    periodic: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in np.atleast_1d(self.dims))
        spacing = self.spacing
        if spacing is None:
            spacing = (1.0,) * len(dims)
        spacing = tuple(float(h) for h in np.atleast_1d(spacing))
        if len(dims) not in (1, 2):
            raise InputError(f"grid must be 1-D or 2-D, got {len(dims)} axes", "grid.dims")
        if len(spacing) != len(dims):
            raise InputError("spacing length must match dims length", "grid.spacing")
        if any(d < 1 for d in dims):
            raise InputError(f"sample counts must be positive, got {dims}", "grid.dims")
        if any(not np.isfinite(h) or h <= 0 for h in spacing):
            raise InputError(f"spacing must be positive, got {spacing}", "grid.spacing")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "periodic", bool(self.periodic))

    @property
    def n(self):
        return prod(self.dims)

    def frequencies(self, angular=True):
        """Per-axis FFT frequencies (``fftfreq`` order), angular by default."""
        out = []
        for d, h in zip(self.dims, self.spacing):
            f = np.fft.fftfreq(d, d=h)
            out.append(2 * np.pi * f if angular else f)
        return out

    def frequency_magnitudes(self, angular=True):
        """||k|| for every FFT bin, flattened in the same order as ``fftn``."""
        axes = np.meshgrid(*self.frequencies(angular), indexing="ij")
        return np.sqrt(sum(a**2 for a in axes)).ravel()

    def nyquist(self):
        """Nyquist frequency in cycles per unit length (finest axis)."""
        return 1.0 / (2.0 * min(self.spacing))
