"""Growth experiments for shifted-operator norms and the exact change-of-variables check.

Operator-norm proxies are maxima of per-input ratios over a declared test
bank, hence lower bounds on the true operator norms.  Random band-limited
fields alone do not witness logarithmic growth; the banks therefore include
adversarial inputs (a modulated bump whose dyadic pieces translate to
geometrically spaced positions, and trains of octave-matched packets that
stack at a common point after shifting).

The change-of-variables identity holds on the torus exactly, so its check is
a roundoff test, not a statistical one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .calibration import LPPair, RadialProfile, make_lp_pair
from .field import (
    GridSpec,
    NyquistError,
    SampledField,
    Spectrum,
    inverse,
    lp_norm,
    phase_shift,
    require_same_grid,
    transform,
)
from .lp_ops import maximal_function, square_function
from .reporting import ExperimentReport

__all__ = [
    "GrowthBankSpec",
    "GrowthExperiment",
    "FitResult",
    "ChangeOfVariablesResult",
    "operator_norm_proxy",
    "fit_log_exponent",
    "run_growth",
    "change_of_variables_check",
    "dilate_field",
    "random_band_limited",
    "modulated_bump",
    "bump_train",
    "predicted_growth_exponent",
]

SQUARE = "shifted-square"
MAXIMAL = "shifted-maximal"


# ---------------------------------------------------------------------------
# test-bank synthesis (all spectral, deterministic, certificate-carrying)
# ---------------------------------------------------------------------------

def _rng(seed: int, *stream: int) -> np.random.Generator:
    # counter-based generator: one 64-bit seed, per-purpose stream keys
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=list(stream) + [0] * (4 - len(stream))))


def random_band_limited(
    grid: GridSpec, band: Tuple[float, float], seed: int, index: int = 0
) -> SampledField:
    """Random field with spectrum supported in the annulus ``band``.

    Coefficients are drawn per integer frequency in a resolution-independent
    order, so the same (seed, index) produces the same physical field on a
    finer grid.
    """
    lo, hi = band
    grid.check_supports_radius(hi)
    gen = _rng(seed, 1, index)
    kmax = int(math.floor(hi * grid.period))
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    if grid.dimension == 1:
        ks = np.arange(-kmax, kmax + 1)
        draws = gen.standard_normal((ks.size, 2))
        for (k, (a, b)) in zip(ks, draws):
            xi = abs(k) / grid.period
            if lo <= xi <= hi:
                coeffs[k % grid.samples_per_axis] = complex(a, b)
    else:
        ks = np.arange(-kmax, kmax + 1)
        draws = gen.standard_normal((ks.size, ks.size, 2))
        for i, k1 in enumerate(ks):
            for j, k2 in enumerate(ks):
                xi = math.hypot(k1, k2) / grid.period
                if lo <= xi <= hi:
                    coeffs[k1 % grid.samples_per_axis, k2 % grid.samples_per_axis] = complex(
                        *draws[i, j]
                    )
    return inverse(Spectrum(grid, coeffs, support_certificate=band))


def modulated_bump(
    grid: GridSpec,
    center_frequency: float = 0.75,
    envelope_radius: float = 0.25,
    position: Optional[Sequence[float]] = None,
) -> SampledField:
    """Smooth packet at a single base frequency; band certificate is exact.

    Its low-pass dyadic pieces at every scale l >= 0 are the packet itself, so
    under a shift y the maximal field develops copies at the geometrically
    spaced positions 2**-l y: the witness for logarithmic maximal growth.
    """
    profile = RadialProfile(envelope_radius / 2.0, envelope_radius)
    mesh = grid.frequency_mesh()
    centered = [axis.copy() for axis in np.broadcast_arrays(*mesh)] if grid.dimension > 1 else [
        np.asarray(mesh[0]).copy()
    ]
    centered[0] = centered[0] - center_frequency
    radii = np.sqrt(sum(a**2 for a in centered))
    coeffs = profile(radii).astype(np.complex128)
    if position is not None:
        phase_arg = sum(p * np.asarray(axis) for p, axis in zip(np.atleast_1d(position), mesh))
        coeffs = coeffs * np.exp(-2j * np.pi * phase_arg)
    band = (max(0.0, center_frequency - envelope_radius), center_frequency + envelope_radius)
    return inverse(Spectrum(grid, coeffs, support_certificate=band))


def bump_train(
    grid: GridSpec,
    shift_magnitude: float,
    scales: Sequence[int],
    envelope_radius: float = 0.5,
    conjugate: bool = False,
) -> SampledField:
    """Train of fixed-width packets, one per scale: frequency 2**s, position -2**-s y e_1.

    After applying the shifted annular pieces at shift y e_1, every packet
    lands at the origin, which stacks the aggregate to ~#scales while the
    input's own L_p norm only grows like (#scales)**(1/p) as long as the
    positions stay separated.
    """
    axis0 = np.asarray(grid.frequency_mesh()[0], dtype=float)
    rest_sq = (
        sum(np.asarray(a, dtype=float) ** 2 for a in grid.frequency_mesh()[1:])
        if grid.dimension > 1
        else 0.0
    )
    profile = RadialProfile(envelope_radius / 2.0, envelope_radius)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    sign = -1.0 if conjugate else 1.0
    lo = math.inf
    hi = 0.0
    for scale in scales:
        kappa = sign * 2.0**scale
        centered = axis0 - kappa
        packet = profile(np.sqrt(centered**2 + rest_sq)).astype(np.complex128)
        position = -(2.0**-scale) * shift_magnitude
        # f(x) = eta(x - position) exp(2 pi i kappa x): translation phase in
        # the centered frequency variable
        packet = packet * np.exp(-2j * np.pi * position * centered)
        coeffs += packet
        lo = min(lo, abs(kappa) - envelope_radius)
        hi = max(hi, abs(kappa) + envelope_radius)
    grid.check_supports_radius(hi)
    return inverse(Spectrum(grid, coeffs, support_certificate=(max(lo, 0.0), hi)))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthBankSpec:
    """What goes into the test bank for one growth experiment."""

    seed: int = 20240801
    n_random: int = 2
    random_band: Tuple[float, float] = (1.0, 8.0)
    adversarial: str = "bump"  # "bump" | "none"
    bump_center: float = 0.75
    bump_radius: float = 0.25


@dataclass(frozen=True)
class GrowthExperiment:
    kind: str
    p: float
    shifts: Tuple[float, ...]
    grid: GridSpec
    scale_range: Tuple[int, int]
    bank: GrowthBankSpec = GrowthBankSpec()
    tolerance: float = 0.3
    bump_width_hint: float = 16.0
    allow_wrapped_positions: bool = False

    def __post_init__(self):
        if self.kind not in (SQUARE, MAXIMAL):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if any(b <= a for a, b in zip(self.shifts, self.shifts[1:])):
            raise ValueError("shift ladder must be strictly increasing")
        if self.allow_wrapped_positions:
            # norm-equality experiments do not rely on separated hump positions
            return
        reach = max(self.shifts) * 2.0 ** -self.scale_range[0]
        margin = 4.0 * self.bump_width_hint
        if reach + margin > self.grid.period:
            raise ValueError(
                f"largest shifted position {reach} plus margin {margin} exceeds the "
                f"period {self.grid.period}"
            )

    def make_pair(self) -> LPPair:
        return make_lp_pair(self.scale_range)

    def make_bank(self) -> List[SampledField]:
        bank: List[SampledField] = []
        if self.bank.adversarial == "bump":
            bank.append(
                modulated_bump(self.grid, self.bank.bump_center, self.bank.bump_radius)
            )
        for i in range(self.bank.n_random):
            bank.append(random_band_limited(self.grid, self.bank.random_band, self.bank.seed, i))
        return bank


def operator_norm_proxy(
    kind: str,
    p: float,
    y: Sequence[float],
    bank: Sequence[SampledField],
    pair: LPPair,
) -> float:
    """Max over the bank of shifted-norm / unshifted-estimator ratios (a lower bound)."""
    if len(bank) == 0:
        raise ValueError("empty bank")
    op = square_function if kind == SQUARE else maximal_function
    if kind not in (SQUARE, MAXIMAL):
        raise ValueError(f"unknown operator kind {kind!r}")
    best = None
    for i, f in enumerate(bank):
        denom = lp_norm(op(f, pair), p)
        if denom == 0.0:
            warnings.warn(f"bank input {i} has zero unshifted estimator; skipped")
            continue
        numer = lp_norm(op(f, pair, y), p)
        ratio = numer / denom
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise ValueError("every bank input had a zero unshifted estimator")
    return best


@dataclass(frozen=True)
class FitResult:
    exponent: float
    residual: float
    pairs: Tuple[Tuple[float, float], ...]


def fit_log_exponent(pairs: Sequence[Tuple[float, float]]) -> FitResult:
    """Least-squares slope of log(ratio) against log(log(e + |y|))."""
    if len(pairs) < 4:
        raise ValueError(f"need at least 4 (|y|, ratio) pairs, got {len(pairs)}")
    ys = np.array([abs(y) for y, _ in pairs], dtype=float)
    ratios = np.array([r for _, r in pairs], dtype=float)
    if np.any(ratios <= 0):
        raise ValueError("ratios must be positive")
    if math.log2(ys.max() / ys.min()) < 3.0:
        raise ValueError("shift ladder must span at least 3 octaves")
    x = np.log(np.log(np.e + ys))
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate abscissas")
    z = np.log(ratios)
    slope, intercept = np.polyfit(x, z, 1)
    resid = float(np.sqrt(np.mean((z - (slope * x + intercept)) ** 2)))
    return FitResult(float(slope), resid, tuple((float(a), float(b)) for a, b in zip(ys, ratios)))


def predicted_growth_exponent(kind: str, p: float) -> float:
    """Expected logarithmic exponent: |1/2 - 1/p| for the square family, 1/p for maximal."""
    inv_p = 0.0 if p == math.inf else 1.0 / p
    if kind == SQUARE:
        return abs(0.5 - inv_p)
    if kind == MAXIMAL:
        return inv_p
    raise ValueError(f"unknown operator kind {kind!r}")


def run_growth(experiment: GrowthExperiment) -> ExperimentReport:
    """Measure the proxy along the shift ladder, fit, and compare to the prediction."""
    pair = experiment.make_pair()
    bank = experiment.make_bank()
    direction = np.zeros(experiment.grid.dimension)
    rows = []
    measured: List[Tuple[float, float]] = []
    for magnitude in experiment.shifts:
        y = direction.copy()
        y[0] = magnitude
        ratio = operator_norm_proxy(experiment.kind, experiment.p, y, bank, pair)
        rows.append({"shift": magnitude, "ratio": ratio})
        measured.append((magnitude, ratio))
    fit = fit_log_exponent(measured)
    predicted = predicted_growth_exponent(experiment.kind, experiment.p)
    gap = fit.exponent - predicted
    report = ExperimentReport(
        name=f"growth-{experiment.kind}",
        params={
            "kind": experiment.kind,
            "p": experiment.p,
            "scale_range": experiment.scale_range,
            "samples": experiment.grid.samples_per_axis,
            "period": experiment.grid.period,
            "bank_seed": experiment.bank.seed,
            "bank_random": experiment.bank.n_random,
            "bank_adversarial": experiment.bank.adversarial,
        },
        rows=rows,
        summary={
            "fitted_exponent": fit.exponent,
            "fit_residual": fit.residual,
            "predicted_exponent": predicted,
            "gap": gap,
            "tolerance": experiment.tolerance,
        },
        passed=abs(gap) <= experiment.tolerance,
    )
    return report


# ---------------------------------------------------------------------------
# change of variables
# ---------------------------------------------------------------------------

def dilate_field(g: SampledField, scale: int) -> SampledField:
    """The L1-normalized dyadic dilate ``2**(l d) g(2**l x)`` for l >= 0.

    Spectral index map: the coefficient at integer frequency k moves to
    2**l k (scaled by 2**(l d)); compressions (l < 0) do not stay periodic on
    the fixed torus and are rejected.
    """
    if scale < 0:
        raise ValueError("dilation scales must be nonnegative on a fixed period")
    if scale == 0:
        return g
    grid = g.grid
    if g.band is not None:
        top = g.band[1] * 2.0**scale
    else:
        top = grid.nyquist * 2.0**scale
    if top >= grid.nyquist:
        raise NyquistError(
            f"dilating by 2**{scale} pushes the certified band to {top}, past the "
            f"Nyquist frequency {grid.nyquist}"
        )
    m = grid.samples_per_axis
    coeffs = transform(g).coefficients
    out = np.zeros_like(coeffs)
    step = 2**scale
    if grid.dimension == 1:
        k = np.fft.fftfreq(m, d=1.0 / m).astype(int)  # signed integer frequencies
        src = np.abs(k) * step <= m // 2
        out[(k[src] * step) % m] = coeffs[src]
    else:
        k = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        keep = np.abs(k) * step <= m // 2
        idx = (k[keep] * step) % m
        sub = coeffs[np.ix_(keep, keep)]
        out[np.ix_(idx, idx)] = sub
    out *= float(step) ** grid.dimension
    band = None if g.band is None else (g.band[0] * step, g.band[1] * step)
    return inverse(Spectrum(grid, out, support_certificate=band))


@dataclass(frozen=True)
class ChangeOfVariablesResult:
    lhs: float
    rhs: float
    discrepancy: float
    relative: bool


def change_of_variables_check(
    gs: Sequence[SampledField],
    ys: Sequence[Sequence[float]],
    k0: int,
    scale_range: Tuple[int, int],
    p: float = 2.0,
) -> ChangeOfVariablesResult:
    """Compare the shifted product norm against its shift-removed counterpart.

    Both sides are L_p(l_p) norms over the scale range of the pointwise
    product of shifted dyadic dilates; the right-hand side removes the shift
    from slot ``k0`` and moves it onto the others.  On the torus the equality
    is exact, so the discrepancy measures only roundoff/quadrature.
    """
    if not 0 <= k0 < len(gs):
        raise ValueError(f"k0={k0} out of range for {len(gs)} inputs")
    grid = require_same_grid(*gs)
    ys = [np.atleast_1d(np.asarray(y, dtype=float)) for y in ys]
    if len(ys) != len(gs):
        raise ValueError("one shift per input required")
    scales = range(scale_range[0], scale_range[1] + 1)
    dilates = {scale: [dilate_field(g, scale) for g in gs] for scale in scales}

    def norm_p(shifts: Sequence[np.ndarray]) -> float:
        total = 0.0
        for scale in scales:
            prod = np.ones(grid.shape, dtype=np.complex128)
            for g_l, y in zip(dilates[scale], shifts):
                shifted = phase_shift(g_l, 2.0**-scale * y)
                prod = prod * shifted.values
            total += float(np.sum(np.abs(prod) ** p)) * grid.cell_volume
        return total ** (1.0 / p)

    lhs = norm_p(ys)
    rhs = norm_p([y - ys[k0] for y in ys])
    if lhs == 0.0:
        return ChangeOfVariablesResult(lhs, rhs, abs(lhs - rhs), relative=False)
    return ChangeOfVariablesResult(lhs, rhs, abs(lhs - rhs) / lhs, relative=True)
