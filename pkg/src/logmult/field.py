"""Sampled periodic fields, spectra, and the norms everything else is built on.

The computational domain is a flat torus of period ``L`` per axis, sampled on a
regular grid of ``M`` points per axis (``M`` a power of two).  A
:class:`SampledField` is identified with its band-limited trigonometric
interpolant; under that identification the Fourier transform, convolution
against analytic frequency profiles, and translation by arbitrary real vectors
are all exact up to roundoff.

Conventions:

* Fourier transform  ``f_hat(xi) = integral f(x) exp(-2 pi i (x, xi)) dx``
  discretized with quadrature weight ``(L/M)**d``.
* Grid frequencies are ``k / L`` for integer ``k`` in ``(-M/2, M/2]`` per axis
  (numpy FFT ordering).
* All integrals are plain Riemann sums with weight ``(L/M)**d``; band-limited
  integrands make these spectrally accurate.

Fields and spectra are immutable after construction; every operation here is a
pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "GridSpec",
    "SampledField",
    "Spectrum",
    "MixedNormSpec",
    "GridMismatchError",
    "NyquistError",
    "transform",
    "inverse",
    "convolve",
    "phase_shift",
    "grid_aligned_steps",
    "lp_norm",
    "mixed_norm",
]

Exponent = Union[int, float, Fraction]


class GridMismatchError(ValueError):
    """Two operands live on different grids."""


class NyquistError(ValueError):
    """A certified spectral support does not fit under the grid's Nyquist frequency."""


@dataclass(frozen=True)
class GridSpec:
    """Regular sampling grid on the d-dimensional torus of period ``period``.

    ``samples_per_axis`` must be a power of two and at least 8 so that dyadic
    cube partitions and FFT sizes stay well behaved.
    """

    dimension: int
    samples_per_axis: int
    period: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        m = self.samples_per_axis
        if m < 8 or (m & (m - 1)) != 0:
            raise ValueError(f"samples_per_axis must be a power of two >= 8, got {m}")
        if not (self.period > 0):
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def spacing(self) -> float:
        return self.period / self.samples_per_axis

    @property
    def nyquist(self) -> float:
        """Largest representable frequency radius, M / (2 L)."""
        return self.samples_per_axis / (2.0 * self.period)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.samples_per_axis,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def size(self) -> int:
        return self.samples_per_axis**self.dimension

    def axis_coordinates(self) -> np.ndarray:
        return _axis_coordinates(self.samples_per_axis, self.period)

    def axis_frequencies(self) -> np.ndarray:
        return _axis_frequencies(self.samples_per_axis, self.period)

    def frequency_mesh(self) -> Tuple[np.ndarray, ...]:
        """Frequency coordinate arrays, one per axis, broadcastable to ``shape``."""
        return _frequency_mesh(self.samples_per_axis, self.period, self.dimension)

    def frequency_radii(self) -> np.ndarray:
        """|xi| on the full frequency grid."""
        return _frequency_radii(self.samples_per_axis, self.period, self.dimension)

    def coordinate_mesh(self) -> Tuple[np.ndarray, ...]:
        return _coordinate_mesh(self.samples_per_axis, self.period, self.dimension)

    def torus_distances(self) -> np.ndarray:
        """Min-image distance |x| from the origin for every grid point."""
        return _torus_distances(self.samples_per_axis, self.period, self.dimension)

    def check_supports_radius(self, radius: float) -> None:
        if radius >= self.nyquist:
            raise NyquistError(
                f"certified support radius {radius} is not strictly below the "
                f"Nyquist frequency {self.nyquist} (M={self.samples_per_axis}, L={self.period})"
            )


@lru_cache(maxsize=64)
def _axis_coordinates(m: int, period: float) -> np.ndarray:
    x = np.arange(m) * (period / m)
    x.flags.writeable = False
    return x


@lru_cache(maxsize=64)
def _axis_frequencies(m: int, period: float) -> np.ndarray:
    xi = np.fft.fftfreq(m, d=period / m)
    xi.flags.writeable = False
    return xi


@lru_cache(maxsize=64)
def _frequency_mesh(m: int, period: float, dim: int) -> Tuple[np.ndarray, ...]:
    axis = _axis_frequencies(m, period)
    if dim == 1:
        return (axis,)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij", sparse=True)
    for a in mesh:
        a.flags.writeable = False
    return tuple(mesh)

@lru_cache(maxsize=64)
def _frequency_radii(m: int, period: float, dim: int) -> np.ndarray:
    mesh = _frequency_mesh(m, period, dim)
    r = np.sqrt(sum(a**2 for a in mesh))
    r.flags.writeable = False
    return r


@lru_cache(maxsize=64)
def _coordinate_mesh(m: int, period: float, dim: int) -> Tuple[np.ndarray, ...]:
    axis = _axis_coordinates(m, period)
    if dim == 1:
        return (axis,)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij", sparse=True)
    for a in mesh:
        a.flags.writeable = False
    return tuple(mesh)


@lru_cache(maxsize=64)
def _torus_distances(m: int, period: float, dim: int) -> np.ndarray:
    axis = _axis_coordinates(m, period)
    folded = np.minimum(axis, period - axis)
    if dim == 1:
        d = folded
    else:
        mesh = np.meshgrid(*([folded] * dim), indexing="ij", sparse=True)
        d = np.sqrt(sum(a**2 for a in mesh))
    d = np.asarray(d, dtype=float)
    d.flags.writeable = False
    return d


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.asarray(values, dtype=np.complex128)
    if out.base is not None or out is values:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SampledField:
    """Complex samples of a periodic function, row-major over the grid.

    ``band`` is an optional certificate ``(inner, outer)`` in physical
    frequency units: the field's spectrum is guaranteed (and, where asserted,
    verified) to vanish outside the annulus ``inner <= |xi| <= outer``.
    """

    grid: GridSpec
    values: np.ndarray
    band: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        vals = _freeze(self.values)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.size:
                vals = _freeze(vals.reshape(self.grid.shape))
            else:
                raise ValueError(
                    f"values shape {vals.shape} incompatible with grid {self.grid.shape}"
                )
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)
        if self.band is not None:
            inner, outer = self.band
            if not (0 <= inner <= outer):
                raise ValueError(f"invalid band certificate {self.band}")
            self.grid.check_supports_radius(outer)

    # Small arithmetic surface used for bank construction and linearity tests.
    def __add__(self, other: "SampledField") -> "SampledField":
        if not isinstance(other, SampledField):
            return NotImplemented
        require_same_grid(self, other)
        band = None
        if self.band is not None and other.band is not None:
            band = (min(self.band[0], other.band[0]), max(self.band[1], other.band[1]))
        return SampledField(self.grid, self.values + other.values, band)

    def __sub__(self, other: "SampledField") -> "SampledField":
        if not isinstance(other, SampledField):
            return NotImplemented
        return self + (other * (-1.0))

    def __mul__(self, scalar: complex) -> "SampledField":
        if isinstance(scalar, SampledField):
            return NotImplemented
        return SampledField(self.grid, self.values * complex(scalar), self.band)

    __rmul__ = __mul__

    def pointwise(self, other: "SampledField") -> "SampledField":
        """Pointwise product; band certificates add (supports convolve in frequency)."""
        require_same_grid(self, other)
        band = None
        if self.band is not None and other.band is not None:
            outer = self.band[1] + other.band[1]
            if outer < self.grid.nyquist:
                band = (0.0, outer)
        return SampledField(self.grid, self.values * other.values, band)


@dataclass(frozen=True)
class Spectrum:
    """Discrete Fourier coefficients with an optional certified support annulus."""

    grid: GridSpec
    coefficients: np.ndarray
    support_certificate: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        coeffs = _freeze(self.coefficients)
        if coeffs.shape != self.grid.shape:
            if coeffs.size == self.grid.size:
                coeffs = _freeze(coeffs.reshape(self.grid.shape))
            else:
                raise ValueError(
                    f"coefficients shape {coeffs.shape} incompatible with grid {self.grid.shape}"
                )
        object.__setattr__(self, "coefficients", coeffs)
        if self.support_certificate is not None:
            inner, outer = self.support_certificate
            if not (0 <= inner <= outer):
                raise ValueError(f"invalid support certificate {self.support_certificate}")
            self.grid.check_supports_radius(outer)
            r = self.grid.frequency_radii()
            off = (r < inner) | (r > outer)
            if np.any(coeffs[off] != 0):
                bad = np.max(np.abs(coeffs[off]))
                raise ValueError(
                    f"support certificate {self.support_certificate} violated: "
                    f"max |coefficient| outside annulus is {bad}"
                )


@dataclass(frozen=True)
class MixedNormSpec:
    """Outer Lebesgue exponent over space, inner sequence exponent: L_p(l_q)."""

    outer_p: Exponent
    inner_q: Exponent

    def __post_init__(self):
        for name, e in (("outer_p", self.outer_p), ("inner_q", self.inner_q)):
            if not (e == np.inf or e >= 1):
                raise ValueError(f"{name} must be >= 1 or infinity, got {e}")


def require_same_grid(*objs) -> GridSpec:
    grid = objs[0].grid
    for o in objs[1:]:
        if o.grid != grid:
            raise GridMismatchError(f"grid mismatch: {o.grid} vs {grid}")
    return grid


def transform(f: SampledField) -> Spectrum:
    """Forward transform: quadrature-weighted FFT, f_hat(k/L) per grid frequency.

    A band certificate asserts the out-of-band coefficients are mathematically
    zero; FFT roundoff dust there is zeroed to keep the certificate exact.
    Content that is genuinely out of band (beyond roundoff) is an error.
    """
    coeffs = np.fft.fftn(f.values) * f.grid.cell_volume
    if f.band is not None:
        inner, outer = f.band
        r = f.grid.frequency_radii()
        off = (r < inner) | (r > outer)
        if np.any(off):
            dust = float(np.max(np.abs(coeffs[off]))) if coeffs[off].size else 0.0
            scale = float(np.max(np.abs(coeffs)))
            if scale > 0 and dust > 1e-10 * scale:
                raise ValueError(
                    f"band certificate {f.band} violated: out-of-band content "
                    f"{dust} vs in-band scale {scale}"
                )
            coeffs[off] = 0.0
    return Spectrum(f.grid, coeffs, support_certificate=f.band)


def inverse(s: Spectrum) -> SampledField:
    """Inverse transform; round-trips with :func:`transform` to roundoff."""
    values = np.fft.ifftn(np.asarray(s.coefficients)) / s.grid.cell_volume
    return SampledField(s.grid, values, band=s.support_certificate)


def convolve(f: SampledField, g: SampledField) -> SampledField:
    """Periodic convolution with physical weight: pointwise product of spectra."""
    require_same_grid(f, g)
    sf = transform(f)
    sg = transform(g)
    coeffs = sf.coefficients * sg.coefficients
    cert = None
    if f.band is not None and g.band is not None:
        inner = max(f.band[0], g.band[0])
        outer = min(f.band[1], g.band[1])
        if inner > outer:
            cert = (0.0, 0.0)
            coeffs = np.zeros_like(coeffs)
        else:
            cert = (inner, outer)
    return inverse(Spectrum(f.grid, coeffs, support_certificate=cert))


def grid_aligned_steps(shift: Sequence[float], grid: GridSpec) -> Optional[Tuple[int, ...]]:
    """Sample steps realizing the shift exactly, or None when off-grid."""
    steps = []
    for a in shift:
        t = a / grid.spacing
        r = round(t)
        if abs(t - r) > 1e-9 * max(1.0, abs(t)):
            return None
        steps.append(int(r) % grid.samples_per_axis)
    return tuple(steps)


def phase_shift(f: SampledField, shift: Sequence[float]) -> SampledField:
    """Exact translation x -> f(x - shift) for arbitrary real shifts.

    Grid-aligned shifts take a sample-roll path (bit-exact permutation);
    everything else goes through the spectrum with unimodular phases.
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    if shift.shape != (f.grid.dimension,):
        raise ValueError(f"shift must have length {f.grid.dimension}, got {shift.shape}")
    steps = grid_aligned_steps(shift, f.grid)
    if steps is not None:
        values = np.roll(f.values, steps, axis=tuple(range(f.grid.dimension)))
        return SampledField(f.grid, values, band=f.band)
    s = transform(f)
    mesh = f.grid.frequency_mesh()
    phase_arg = sum(a * axis for a, axis in zip(shift, mesh))
    coeffs = s.coefficients * np.exp(-2j * np.pi * phase_arg)
    return inverse(Spectrum(f.grid, coeffs, support_certificate=s.support_certificate))


def _as_float_exponent(p: Exponent) -> float:
    if p == np.inf:
        return np.inf
    return float(p)


def lp_norm(f: SampledField, p: Exponent) -> float:
    """Riemann-sum L_p quadrature norm; max modulus when p is infinity."""
    q = _as_float_exponent(p)
    if q != np.inf and q < 1:
        raise ValueError(f"p must be >= 1 or infinity, got {p}")
    mags = np.abs(f.values)
    if q == np.inf:
        return float(np.max(mags))
    if q == 2.0:
        return float(np.sqrt(np.sum(mags**2) * f.grid.cell_volume))
    return float((np.sum(mags**q) * f.grid.cell_volume) ** (1.0 / q))


def mixed_norm(fs: Sequence[SampledField], spec: MixedNormSpec) -> float:
    """Inner l_q over the sequence index pointwise, then outer L_p quadrature."""
    if len(fs) == 0:
        raise ValueError("mixed_norm of an empty sequence")
    grid = require_same_grid(*fs)
    q = _as_float_exponent(spec.inner_q)
    p = _as_float_exponent(spec.outer_p)
    stack = np.stack([np.abs(f.values) for f in fs])
    if q == np.inf:
        inner = np.max(stack, axis=0)
    else:
        inner = np.sum(stack**q, axis=0) ** (1.0 / q)
    if p == np.inf:
        return float(np.max(inner))
    return float((np.sum(inner**p) * grid.cell_volume) ** (1.0 / p))
