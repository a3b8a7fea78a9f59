"""Shifted dyadic convolution operators and the derived square/maximal machinery.

The shifted dilate of a profile ``Phi`` at scale ``l`` and shift ``y`` acts on
a field by frequency multiplication with ``Phi_hat(2**-l xi) *
exp(-2 pi i (2**-l y, xi))``; equivalently it is the unshifted piece translated
by ``2**-l y``.  Because fields are band-limited interpolants, the action is
exact to roundoff for any real shift.

Scale sums and suprema run over a pair's declared scale range; experiments are
expected to certify that their inputs' spectra sit inside the covered octaves
so that the truncation is exact rather than approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .calibration import LPPair
from .field import (
    GridSpec,
    MixedNormSpec,
    NyquistError,
    SampledField,
    Spectrum,
    grid_aligned_steps,
    mixed_norm,
    require_same_grid,
    transform,
)

__all__ = [
    "ShiftedDyadicOp",
    "DyadicCubeSet",
    "CubeRatioResult",
    "dyadic_piece",
    "square_function",
    "maximal_function",
    "bmo_norm",
    "peetre_max",
    "peetre_cube_ratio",
    "fefferman_stein_ratio",
    "representable_cube_scales",
]


@dataclass(frozen=True)
class ShiftedDyadicOp:
    """Convolution against ``2**(l d) Phi(2**l x - y)`` for a radial profile Phi."""

    profile: object
    scale: int
    shift: Tuple[float, ...]

    def dilated_support(self) -> Tuple[float, float]:
        inner, outer = self.profile.support
        s = 2.0**self.scale
        return (inner * s, outer * s)


def _effective_band(
    f: SampledField, op_support: Tuple[float, float], scale: int
) -> Tuple[float, float]:
    """Output support certificate; raises when the piece is not exactly representable."""
    lo, hi = op_support
    if f.band is None:
        if hi >= f.grid.nyquist:
            raise NyquistError(
                f"dilated profile support reaches {hi} at scale {scale}, not below the "
                f"Nyquist frequency {f.grid.nyquist}, and the field carries no band certificate"
            )
        return (lo, hi)
    inner = max(lo, f.band[0])
    outer = min(hi, f.band[1])
    if inner > outer:
        return (0.0, 0.0)
    return (inner, outer)


def _piece_values(
    spectrum: Spectrum,
    profile,
    scale: int,
    shift: Sequence[float],
) -> np.ndarray:
    """Sample values of one shifted dyadic piece.

    Grid-aligned effective shifts are realized by rolling the unshifted piece
    (an exact permutation); everything else by unimodular spectral phases.
    """
    grid = spectrum.grid
    mult = profile(grid.frequency_radii() * 2.0**-scale)
    coeffs = spectrum.coefficients * mult
    shift_vec = np.atleast_1d(np.asarray(shift, dtype=float)) * 2.0**-scale
    if np.any(shift_vec != 0.0):
        steps = grid_aligned_steps(shift_vec, grid)
        if steps is not None:
            values = np.fft.ifftn(coeffs) / grid.cell_volume
            return np.roll(values, steps, axis=tuple(range(grid.dimension)))
        mesh = grid.frequency_mesh()
        phase_arg = sum(a * axis for a, axis in zip(shift_vec, mesh))
        coeffs = coeffs * np.exp(-2j * np.pi * phase_arg)
    return np.fft.ifftn(coeffs) / grid.cell_volume


def dyadic_piece(f: SampledField, op: ShiftedDyadicOp) -> SampledField:
    """Apply one shifted dyadic dilate in the frequency domain (exact to roundoff)."""
    band = _effective_band(f, op.dilated_support(), op.scale)
    if band == (0.0, 0.0):
        return SampledField(f.grid, np.zeros(f.grid.shape, dtype=np.complex128), band)
    values = _piece_values(transform(f), op.profile, op.scale, op.shift)
    return SampledField(f.grid, values, band)


def _zero_shift(grid: GridSpec) -> Tuple[float, ...]:
    return (0.0,) * grid.dimension


def _pieces(
    f: SampledField,
    profile,
    scales: Iterable[int],
    shift: Sequence[float],
) -> Iterable[np.ndarray]:
    """Values of the shifted dyadic pieces, one scale at a time (single forward FFT)."""
    spectrum = transform(f)
    inner, outer = profile.support
    for scale in scales:
        _effective_band(f, (inner * 2.0**scale, outer * 2.0**scale), scale)
        yield _piece_values(spectrum, profile, scale, shift)


def square_function(
    f: SampledField, pair: LPPair, shift: Optional[Sequence[float]] = None
) -> SampledField:
    """Pointwise l2 aggregate of the shifted annular pieces over the pair's scales."""
    if shift is None:
        shift = _zero_shift(f.grid)
    acc = np.zeros(f.grid.shape, dtype=float)
    for piece in _pieces(f, pair.psi_hat, pair.scales, shift):
        acc += np.abs(piece) ** 2
    return SampledField(f.grid, np.sqrt(acc))


def maximal_function(
    f: SampledField, pair: LPPair, shift: Optional[Sequence[float]] = None
) -> SampledField:
    """Pointwise sup over scales of the shifted low-pass pieces."""
    if shift is None:
        shift = _zero_shift(f.grid)
    acc = np.zeros(f.grid.shape, dtype=float)
    for piece in _pieces(f, pair.phi_hat, pair.scales, shift):
        np.maximum(acc, np.abs(piece), out=acc)
    return SampledField(f.grid, acc)


def representable_cube_scales(grid: GridSpec) -> List[int]:
    """Dyadic cube scales k whose cubes (side 2**-k) tile the grid exactly."""
    period = Fraction(grid.period)
    scales = []
    # sides range from the full period down to the grid spacing
    k_lo = -(period.numerator.bit_length())  # generous lower sweep bound
    k_hi = int(math.log2(grid.samples_per_axis)) + period.denominator.bit_length()
    for k in range(k_lo, k_hi + 1):
        cubes = period * Fraction(2) ** k
        if cubes.denominator != 1 or cubes.numerator < 1:
            continue
        n = cubes.numerator
        if grid.samples_per_axis % n == 0:
            scales.append(k)
    return scales


@dataclass(frozen=True)
class DyadicCubeSet:
    """Grid-aligned partition of the period into cubes of side 2**-scale."""

    grid: GridSpec
    scale: int

    def __post_init__(self):
        period = Fraction(self.grid.period)
        cubes = period * Fraction(2) ** self.scale
        if cubes.denominator != 1 or cubes.numerator < 1:
            raise ValueError(
                f"cube side 2**-{self.scale} does not tile the period {self.grid.period}"
            )
        if self.grid.samples_per_axis % cubes.numerator != 0:
            raise ValueError(
                f"cube side 2**-{self.scale} is not an integer multiple of the grid spacing"
            )

    @property
    def cubes_per_axis(self) -> int:
        return int(Fraction(self.grid.period) * Fraction(2) ** self.scale)

    @property
    def points_per_cube_axis(self) -> int:
        return self.grid.samples_per_axis // self.cubes_per_axis

    @property
    def cube_count(self) -> int:
        return self.cubes_per_axis**self.grid.dimension

    def reduce(self, values: np.ndarray, how: str) -> np.ndarray:
        """Per-cube reduction (mean / max / min) of a grid-shaped real array."""
        n = self.cubes_per_axis
        p = self.points_per_cube_axis
        if self.grid.dimension == 1:
            blocks = values.reshape(n, p)
            axes: Tuple[int, ...] = (1,)
        else:
            blocks = values.reshape(n, p, n, p)
            axes = (1, 3)
        if how == "mean":
            return blocks.mean(axis=axes)
        if how == "max":
            return blocks.max(axis=axes)
        if how == "min":
            return blocks.min(axis=axes)
        raise ValueError(f"unknown reduction {how!r}")


def bmo_norm(f: SampledField, pair: LPPair) -> float:
    """Dyadic square-function oscillation estimator.

    sup over representable cubes P of the square root of the mean over P of
    ``sum_{l >= -log2 side(P)} |psi_l * f|**2``, the scale sum truncated at the
    pair's top scale.
    """
    scales = representable_cube_scales(f.grid)
    if not scales:
        raise ValueError(
            f"no dyadic cube scale tiles period {f.grid.period} on {f.grid.samples_per_axis} points"
        )
    sq_pieces = {
        scale: np.abs(piece) ** 2
        for scale, piece in zip(
            pair.scales, _pieces(f, pair.psi_hat, pair.scales, _zero_shift(f.grid))
        )
    }
    # cumulative sums from the top scale down: tail[l] = sum_{j >= l} |psi_j * f|^2
    tail: dict = {}
    running = np.zeros(f.grid.shape, dtype=float)
    for scale in sorted(sq_pieces, reverse=True):
        running = running + sq_pieces[scale]
        tail[scale] = running
    best = 0.0
    for k in scales:
        if k > pair.scale_max:
            continue
        start = max(k, pair.scale_min)
        cubes = DyadicCubeSet(f.grid, k)
        means = cubes.reduce(tail[start], "mean")
        best = max(best, float(np.max(means)))
    return math.sqrt(best)


def _peetre_weights(grid: GridSpec, sigma: float, k: int) -> np.ndarray:
    return (1.0 + 2.0**k * grid.torus_distances()) ** (-sigma)


def peetre_max(f: SampledField, sigma: float, k: int) -> SampledField:
    """Weighted sup ``sup_z |f(x - z)| / (1 + 2**k |z|)**sigma`` over grid offsets.

    |z| is the torus min-image distance.  Offsets are visited in decreasing
    weight order with an early exit once no remaining weight can improve any
    point, which makes well-localized fields cheap.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    weights = _peetre_weights(f.grid, sigma, k)
    absf = np.abs(f.values)
    peak = float(absf.max())
    out = absf.copy()  # z = 0 lower bound
    if peak == 0.0:
        return SampledField(f.grid, out)
    flat_order = np.argsort(weights, axis=None)[::-1]
    dim = f.grid.dimension
    axes = tuple(range(dim))
    for flat in flat_order:
        idx = np.unravel_index(flat, f.grid.shape)
        w = weights[idx]
        if w >= 1.0:  # z = 0 already accounted for
            continue
        if w * peak <= out.min():
            break
        np.maximum(out, w * np.roll(absf, idx, axis=axes), out=out)
    return SampledField(f.grid, out)


@dataclass(frozen=True)
class CubeRatioResult:
    ratio: float
    cube_index: Tuple[int, ...]
    scale: int


def peetre_cube_ratio(
    f: SampledField, sigma: float, k: int, cubes: Optional[DyadicCubeSet] = None
) -> CubeRatioResult:
    """Worst-case sup/inf of the Peetre maximal function over dyadic cubes at scale k.

    Returns an infinite ratio (flag) when some cube has zero infimum but
    positive supremum, which signals sigma too small or a support violation.
    """
    if cubes is None:
        cubes = DyadicCubeSet(f.grid, k)
    elif cubes.scale != k:
        raise ValueError(f"cube set at scale {cubes.scale} does not match k={k}")
    m = np.abs(peetre_max(f, sigma, k).values)
    sups = cubes.reduce(m, "max")
    infs = cubes.reduce(m, "min")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(sups == 0.0, 1.0, sups / infs)
    flat = int(np.argmax(ratios))
    idx = np.unravel_index(flat, sups.shape)
    worst = float(ratios[idx])
    if infs[idx] == 0.0 and sups[idx] > 0.0:
        worst = float("inf")
    return CubeRatioResult(worst, tuple(int(i) for i in idx), k)


def fefferman_stein_ratio(
    fs: Sequence[SampledField],
    scales: Sequence[int],
    sigma: float,
    p: Union[int, float, Fraction],
    q: Union[int, float, Fraction],
    band_factor: Optional[float] = None,
) -> float:
    """Mixed-norm ratio of the Peetre-maximal bank to the bank itself (always >= 1).

    ``band_factor`` is the declared constant A: when given, each field must
    certify a spectral support radius at most ``2 * A * 2**k``.
    """
    if len(fs) != len(scales):
        raise ValueError("fs and scales must align")
    require_same_grid(*fs)
    if band_factor is not None:
        for f, k in zip(fs, scales):
            if f.band is None:
                raise ValueError("fields must carry band certificates for the declared A")
            if f.band[1] > 2.0 * band_factor * 2.0**k:
                raise ValueError(
                    f"field certified to radius {f.band[1]} exceeds 2*A*2**k = "
                    f"{2.0 * band_factor * 2.0 ** k} at k={k}"
                )
    spec = MixedNormSpec(p, q)
    denom = mixed_norm(fs, spec)
    if denom == 0.0:
        raise ZeroDivisionError("zero bank: mixed norm of the inputs vanishes")
    numer = mixed_norm([peetre_max(f, sigma, k) for f, k in zip(fs, scales)], spec)
    return numer / denom
