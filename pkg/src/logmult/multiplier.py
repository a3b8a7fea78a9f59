"""The n-linear operator, its (n+1)-linear form, kernels, and the log-weighted size.

Kernels are finite sums of rank-1 tensor terms whose per-slot factors are
*spectrally evaluable*: each factor is a radial frequency profile together
with an optional physical translation, so the dilated factor transforms
``g_hat(2**-l xi)`` needed by the scale sum can be evaluated exactly at any
frequency.  Every object that must be computed exactly here (the sharpness
kernel, the shifted-form integrand) has this structure.

The log-weighted size D_lambda treats a factor's declared translation as a
position in unbounded space: the weight sees ``log(e + |center + offset|)``
with the offset folded to the torus min-image.  Without the lift, the period
would cap the weight and mask the very growth the functional measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .calibration import LPPair
from .field import (
    GridSpec,
    NyquistError,
    SampledField,
    Spectrum,
    inverse,
    require_same_grid,
    transform,
)

__all__ = [
    "SpectralFactor",
    "TensorKernel",
    "TransposedKernel",
    "DyadicRange",
    "DLambdaResult",
    "d_lambda",
    "apply_t",
    "lambda_form",
    "transpose_kernel",
    "shifted_form",
]


@dataclass(frozen=True)
class SpectralFactor:
    """One slot of a rank-1 kernel term: a radial profile, optionally translated.

    Physical function: ``g(x) = P(x - translation)`` where ``P`` is the inverse
    transform of the profile.  Its transform is ``profile(|xi|) *
    exp(-2 pi i (translation, xi))``, evaluable at dilated frequencies.
    """

    profile: object
    translation: Optional[Tuple[float, ...]] = None

    @property
    def support(self) -> Tuple[float, float]:
        return self.profile.support

    def spectrum_on(self, grid: GridSpec, dilation_scale: int = 0) -> np.ndarray:
        """Values of g_hat(2**-l xi) on the grid frequencies."""
        scale = 2.0**-dilation_scale
        values = self.profile(grid.frequency_radii() * scale).astype(np.complex128)
        if self.translation is not None:
            mesh = grid.frequency_mesh()
            phase_arg = sum(a * scale * np.asarray(axis) for a, axis in zip(self.translation, mesh))
            values = values * np.exp(-2j * np.pi * phase_arg)
        return values

    def field_on(self, grid: GridSpec) -> SampledField:
        inner, outer = self.support
        return inverse(Spectrum(grid, self.spectrum_on(grid), support_certificate=(inner, outer)))

    def center(self, dimension: int) -> np.ndarray:
        if self.translation is None:
            return np.zeros(dimension)
        return np.asarray(self.translation, dtype=float)


@dataclass(frozen=True)
class DyadicRange:
    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"need low <= high, got [{self.low}, {self.high}]")

    def __iter__(self):
        return iter(range(self.low, self.high + 1))


@dataclass(frozen=True)
class TensorKernel:
    """Sum of rank-1 terms ``coeff * prod_k g_k(y_k)`` on a common grid geometry."""

    n: int
    terms: Tuple[Tuple[complex, Tuple[SpectralFactor, ...]], ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("kernels are at least bilinear (n >= 2)")
        if not self.terms:
            raise ValueError("kernel needs at least one term")
        for _, factors in self.terms:
            if len(factors) != self.n:
                raise ValueError("every term needs one factor per slot")

    @classmethod
    def rank_one(cls, factors: Sequence[SpectralFactor], coefficient: complex = 1.0) -> "TensorKernel":
        return cls(len(factors), ((complex(coefficient), tuple(factors)),))

    @property
    def rank(self) -> int:
        return len(self.terms)

    def joint_support(self) -> Tuple[float, float]:
        """Interval-arithmetic bounds on |(xi_1, ..., xi_n)| over the joint spectrum."""
        lo = 0.0
        hi = 0.0
        for _, factors in self.terms:
            t_lo = math.sqrt(sum(f.support[0] ** 2 for f in factors))
            t_hi = math.sqrt(sum(f.support[1] ** 2 for f in factors))
            lo = t_lo if lo == 0.0 else min(lo, t_lo)
            hi = max(hi, t_hi)
        return lo, hi

    def annulus_certificate(self, normalization_scale: float = 1.0) -> Tuple[float, float]:
        """Joint support divided by the declared normalization; must land in [1/2, 2]."""
        lo, hi = self.joint_support()
        lo, hi = lo / normalization_scale, hi / normalization_scale
        if not (0.5 <= lo and hi <= 2.0):
            raise ValueError(
                f"joint spectrum [{lo}, {hi}] (after normalization) leaves the unit annulus [1/2, 2]"
            )
        return lo, hi

    def to_manifest(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {
                    "coefficient": str(coeff),
                    "factors": [
                        {**f.profile.to_record(), "translation": f.translation}
                        for f in factors
                    ],
                }
                for coeff, factors in self.terms
            ],
        }


def _slot_band(
    f: SampledField, factor: SpectralFactor, scale: int
) -> Optional[Tuple[float, float]]:
    """Effective certified band of (dilated factor) * f_hat; None when provably zero."""
    lo, hi = factor.support
    lo, hi = lo * 2.0**scale, hi * 2.0**scale
    if f.band is None:
        if hi >= f.grid.nyquist:
            raise NyquistError(
                f"dilated kernel factor reaches frequency {hi} at scale {scale}, "
                f"past Nyquist {f.grid.nyquist}, and the field carries no band certificate"
            )
        return (lo, hi)
    inner = max(lo, f.band[0])
    outer = min(hi, f.band[1])
    if inner > outer:
        return None
    return (inner, outer)


def apply_t(kernel: TensorKernel, fs: Sequence[SampledField], scales: DyadicRange) -> SampledField:
    """Diagonal restriction of the dyadic-sum action: per term and scale, the
    pointwise product of the per-slot convolutions ``g_{k,l} * f_k``."""
    if len(fs) != kernel.n:
        raise ValueError(f"kernel is {kernel.n}-linear, got {len(fs)} inputs")
    grid = require_same_grid(*fs)
    spectra = [transform(f) for f in fs]
    out = np.zeros(grid.shape, dtype=np.complex128)
    for scale in scales:
        for coeff, factors in kernel.terms:
            bands = [_slot_band(f, factor, scale) for f, factor in zip(fs, factors)]
            if any(b is None for b in bands):
                continue  # certified zero at this scale
            prod = np.full(grid.shape, coeff, dtype=np.complex128)
            for spec, factor in zip(spectra, factors):
                piece = np.fft.ifftn(spec.coefficients * factor.spectrum_on(grid, scale))
                prod *= piece / grid.cell_volume
            out += prod
    return SampledField(grid, out)


def lambda_form(
    kernel: TensorKernel, fs: Sequence[SampledField], scales: DyadicRange
) -> complex:
    """Quadrature pairing of the operator output against the last input."""
    if len(fs) != kernel.n + 1:
        raise ValueError(f"form is {kernel.n + 1}-linear, got {len(fs)} inputs")
    t_out = apply_t(kernel, fs[:-1], scales)
    grid = require_same_grid(t_out, fs[-1])
    return complex(np.sum(t_out.values * fs[-1].values) * grid.cell_volume)


# ---------------------------------------------------------------------------
# D_lambda: exact product-grid path and certified bracket path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DLambdaResult:
    value: float
    lower: float
    upper: float
    method: str

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _signed_offsets(grid: GridSpec, center: np.ndarray) -> np.ndarray:
    """Min-image offsets x - center per grid point (d=1: shape (M,), d=2: radii)."""
    if grid.dimension == 1:
        x = grid.axis_coordinates()
        off = (x - center[0] + grid.period / 2.0) % grid.period - grid.period / 2.0
        return off
    mesh = grid.coordinate_mesh()
    comps = [
        (np.asarray(axis) - c + grid.period / 2.0) % grid.period - grid.period / 2.0
        for axis, c in zip(mesh, center)
    ]
    return np.sqrt(sum(c**2 for c in comps))


def _weight(r: np.ndarray, lam: float) -> np.ndarray:
    return np.log(np.e + r) ** lam


def _lifted_axis(grid: GridSpec, center: np.ndarray) -> np.ndarray:
    """Unwrapped slot coordinate: declared center plus the min-image offset."""
    return center[0] + _signed_offsets(grid, center)


def _exact_d_lambda(kernel: TensorKernel, lam: float, grid: GridSpec) -> float:
    """Direct quadrature over the n-fold product grid (d = 1, n in {2, 3})."""
    if grid.dimension != 1 or kernel.n > 3:
        raise ValueError("exact path supports d = 1 with n in {2, 3}")
    m = grid.samples_per_axis
    factor_fields = [
        [factor.field_on(grid).values for factor in factors] for _, factors in kernel.terms
    ]
    coeffs = [coeff for coeff, _ in kernel.terms]
    for _, factors in kernel.terms[1:]:
        for k, factor in enumerate(factors):
            if not np.allclose(factor.center(1), kernel.terms[0][1][k].center(1)):
                raise ValueError("exact path requires all terms to share slot translations")
    lifted = [
        _lifted_axis(grid, kernel.terms[0][1][k].center(1)) for k in range(kernel.n)
    ]
    total = 0.0
    cell = grid.cell_volume
    if kernel.n == 2:
        y2sq = lifted[1] ** 2
        for i in range(m):
            kv = np.zeros(m, dtype=np.complex128)
            for coeff, fields in zip(coeffs, factor_fields):
                kv += coeff * fields[0][i] * fields[1]
            r = np.sqrt(lifted[0][i] ** 2 + y2sq)
            total += float(np.sum(np.abs(kv) * _weight(r, lam)))
        return total * cell**2
    y2 = lifted[1][:, None]
    y3 = lifted[2][None, :]
    rsq23 = y2**2 + y3**2
    for i in range(m):
        kv = np.zeros((m, m), dtype=np.complex128)
        for coeff, fields in zip(coeffs, factor_fields):
            kv += coeff * fields[0][i] * (fields[1][:, None] * fields[2][None, :])
        r = np.sqrt(lifted[0][i] ** 2 + rsq23)
        total += float(np.sum(np.abs(kv) * _weight(r, lam)))
    return total * cell**3


_DEFAULT_SHELLS = {2: 256, 3: 128, 4: 48, 5: 24}


def _shell_data(
    factor: SpectralFactor, grid: GridSpec, shells: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Per-shell (mass, offset low, offset high, signed?) for one factor.

    d = 1 buckets the *signed* min-image offset, which keeps interval
    arithmetic on differences tight; d = 2 buckets the radial offset.
    """
    center = factor.center(grid.dimension)
    off = _signed_offsets(grid, center)
    signed = grid.dimension == 1
    if not signed:
        off = np.abs(off)
    base = float(off.min()) if signed else 0.0
    reach = float(off.max()) - base
    width = reach / shells if reach > 0 else 1.0
    idx = np.minimum(((off - base) / width).astype(int), shells - 1)
    mags = np.abs(factor.field_on(grid).values)
    mass = np.bincount(idx.ravel(), weights=mags.ravel(), minlength=shells) * grid.cell_volume
    lo = base + np.arange(shells) * width
    hi = lo + width
    return mass, lo, hi, signed


def _abs_bounds(lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Bounds of |x| when x ranges over the signed interval [lo, hi]."""
    lo_abs = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    hi_abs = np.maximum(np.abs(lo), np.abs(hi))
    return lo_abs, hi_abs


def _bracket_d_lambda(
    kernel: TensorKernel, lam: float, grid: GridSpec, shells: Optional[int]
) -> Tuple[float, float]:
    if kernel.rank != 1:
        raise ValueError("bracket path handles rank-1 kernels")
    n = kernel.n
    s = shells or _DEFAULT_SHELLS.get(n, 16)
    _, factors = kernel.terms[0]
    coeff = abs(kernel.terms[0][0])
    data = [_shell_data(f, grid, s) for f in factors]
    grids = np.meshgrid(*[np.arange(s)] * n, indexing="ij")
    flat = [g.ravel() for g in grids]
    mass = np.ones(flat[0].size)
    lo_sq = np.zeros(flat[0].size)
    hi_sq = np.zeros(flat[0].size)
    for k in range(n):
        m_k, lo_k, hi_k, signed = data[k]
        mass *= m_k[flat[k]]
        if signed:
            c = factors[k].center(1)[0]
            yk_lo, yk_hi = _abs_bounds(c + lo_k[flat[k]], c + hi_k[flat[k]])
        else:
            c = float(np.linalg.norm(factors[k].center(grid.dimension)))
            yk_lo = np.maximum(0.0, np.maximum(lo_k[flat[k]] - c, c - hi_k[flat[k]]))
            yk_hi = c + hi_k[flat[k]]
        lo_sq += yk_lo**2
        hi_sq += yk_hi**2
    live = mass > 0
    lower = coeff * float(np.sum(mass[live] * _weight(np.sqrt(lo_sq[live]), lam)))
    upper = coeff * float(np.sum(mass[live] * _weight(np.sqrt(hi_sq[live]), lam)))
    return lower, upper


def d_lambda(
    kernel: Union[TensorKernel, "TransposedKernel"],
    lam: float,
    grid: GridSpec,
    method: str = "auto",
    shells: Optional[int] = None,
    budget: int = 2**24,
) -> DLambdaResult:
    """The log-weighted kernel size; exact on small product grids, bracketed otherwise.

    The bracket is certified (quadrature value lies between the bounds); a
    bracket wider than 10% of the value is refused with advice.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if isinstance(kernel, TransposedKernel):
        return kernel._d_lambda(lam, grid, method, shells, budget)
    if method == "auto":
        exact_ok = grid.dimension == 1 and kernel.n <= 3 and grid.size**kernel.n <= budget
        method = "exact" if exact_ok else "bracket"
    if method == "exact":
        value = _exact_d_lambda(kernel, lam, grid)
        return DLambdaResult(value, value, value, "exact")
    if method != "bracket":
        raise ValueError(f"unknown method {method!r}")
    lower, upper = _bracket_d_lambda(kernel, lam, grid, shells)
    value = 0.5 * (lower + upper)
    if value > 0 and (upper - lower) > 0.1 * value:
        raise ValueError(
            f"bracket width {upper - lower} exceeds 10% of the value {value}; "
            "reduce the slot count/dimension or use more shells"
        )
    return DLambdaResult(value, lower, upper, "bracket")


@dataclass(frozen=True)
class TransposedKernel:
    """Shear of a kernel: slot j swaps with the dual argument.

    Evaluation at (y_1, ..., y_n) is K(y_1 - y_j, ..., -y_j, ..., y_n - y_j).
    The shear mixes slots, so the result is generally not rank-1; the handle
    supports pointwise evaluation on the grid and the bracketed size only.
    """

    base: TensorKernel
    j: int  # 1-based slot index

    def __post_init__(self):
        if not 1 <= self.j <= self.base.n:
            raise ValueError(f"transpose index must lie in 1..{self.base.n}, got {self.j}")

    @property
    def n(self) -> int:
        return self.base.n

    def values_on_rows(self, grid: GridSpec, rows: Sequence[int]) -> np.ndarray:
        """Pointwise values K^j on {y_1 in rows} x grid^(n-1), d = 1 only.

        Grid differences stay on the grid, so the shear evaluates exactly from
        the sampled factor fields.
        """
        if grid.dimension != 1:
            raise ValueError("pointwise transpose evaluation is d = 1 only")
        n = self.base.n
        if n > 3:
            raise ValueError("pointwise transpose evaluation supports n in {2, 3}")
        m = grid.samples_per_axis
        jj = self.j - 1
        idx = np.arange(m)
        out = np.zeros((len(rows),) + (m,) * (n - 1), dtype=np.complex128)
        for coeff, factors in self.base.terms:
            fields = [factor.field_on(grid).values for factor in factors]
            for ri, r in enumerate(rows):
                if n == 2:
                    ys = (np.full(m, r), idx)
                else:
                    y1 = np.full((m, m), r)
                    y2 = np.broadcast_to(idx[:, None], (m, m))
                    y3 = np.broadcast_to(idx[None, :], (m, m))
                    ys = (y1, y2, y3)
                yj = ys[jj]
                vals = fields[jj][(-yj) % m]
                for k in range(n):
                    if k != jj:
                        vals = vals * fields[k][(ys[k] - yj) % m]
                out[ri] += coeff * vals
        return out

    def _d_lambda(
        self, lam: float, grid: GridSpec, method: str, shells: Optional[int], budget: int
    ) -> DLambdaResult:
        if method == "auto":
            exact_ok = grid.dimension == 1 and self.base.n <= 3 and grid.size**self.base.n <= budget
            method = "exact" if exact_ok else "bracket"
        if method == "exact":
            value = self._exact(lam, grid)
            return DLambdaResult(value, value, value, "exact")
        lower, upper = self._bracket(lam, grid, shells)
        value = 0.5 * (lower + upper)
        if value > 0 and (upper - lower) > 0.1 * value:
            raise ValueError(
                f"bracket width {upper - lower} exceeds 10% of the value {value}; "
                "reduce the slot count/dimension or use more shells"
            )
        return DLambdaResult(value, lower, upper, "bracket")

    def _exact(self, lam: float, grid: GridSpec) -> float:
        m = grid.samples_per_axis
        lifted = _signed_offsets(grid, np.zeros(1))
        total = 0.0
        n = self.base.n
        chunk = 64 if n == 3 else m
        for start in range(0, m, chunk):
            rows = list(range(start, min(start + chunk, m)))
            vals = np.abs(self.values_on_rows(grid, rows))
            if n == 2:
                r = np.sqrt(lifted[rows][:, None] ** 2 + lifted[None, :] ** 2)
            else:
                r = np.sqrt(
                    lifted[rows][:, None, None] ** 2
                    + lifted[None, :, None] ** 2
                    + lifted[None, None, :] ** 2
                )
            total += float(np.sum(vals * _weight(r, lam)))
        return total * grid.cell_volume**n

    def _bracket(
        self, lam: float, grid: GridSpec, shells: Optional[int]
    ) -> Tuple[float, float]:
        base = self.base
        if base.rank != 1:
            raise ValueError("bracket path handles rank-1 kernels")
        n = base.n
        s = shells or _DEFAULT_SHELLS.get(n, 16)
        _, factors = base.terms[0]
        coeff = abs(base.terms[0][0])
        data = [_shell_data(f, grid, s) for f in factors]
        centers = [f.center(grid.dimension) for f in factors]
        jj = self.j - 1
        grids = np.meshgrid(*[np.arange(s)] * n, indexing="ij")
        flat = [g.ravel() for g in grids]
        mass = np.ones(flat[0].size)
        for k in range(n):
            mass *= data[k][0][flat[k]]
        signed = data[jj][3]
        lo_j = data[jj][1][flat[jj]]
        hi_j = data[jj][2][flat[jj]]
        if signed:
            cj = centers[jj][0]
            yj_lo, yj_hi = _abs_bounds(cj + lo_j, cj + hi_j)
        else:
            cj = float(np.linalg.norm(centers[jj]))
            yj_lo = np.maximum(0.0, np.maximum(lo_j - cj, cj - hi_j))
            yj_hi = cj + hi_j
        lo_sq = yj_lo**2
        hi_sq = yj_hi**2
        for k in range(n):
            if k == jj:
                continue
            lo_k = data[k][1][flat[k]]
            hi_k = data[k][2][flat[k]]
            if signed:
                # y_k = (a_k - a_j) + (v_k - v_j): exact signed interval arithmetic
                d_c = centers[k][0] - centers[jj][0]
                yk_lo, yk_hi = _abs_bounds(d_c + lo_k - hi_j, d_c + hi_k - lo_j)
            else:
                dist = float(np.linalg.norm(centers[k] - centers[jj]))
                w_lo = np.maximum(0.0, np.maximum(lo_k - hi_j, lo_j - hi_k))
                w_hi = hi_k + hi_j
                yk_lo = np.maximum(0.0, np.maximum(w_lo - dist, dist - w_hi))
                yk_hi = dist + w_hi
            lo_sq += yk_lo**2
            hi_sq += yk_hi**2
        live = mass > 0
        lower = coeff * float(np.sum(mass[live] * _weight(np.sqrt(lo_sq[live]), lam)))
        upper = coeff * float(np.sum(mass[live] * _weight(np.sqrt(hi_sq[live]), lam)))
        return lower, upper


def transpose_kernel(kernel: TensorKernel, j: int) -> TransposedKernel:
    """Kernel of the j-th transpose operator (a unimodular shear of the base kernel)."""
    return TransposedKernel(kernel, j)


def shifted_form(
    fs: Sequence[SampledField],
    psi_slots: Tuple[int, int],
    tau: int,
    shifts: Sequence[Sequence[float]],
    scales: DyadicRange,
    pair: LPPair,
) -> complex:
    """The scale-summed integrand with annular pieces on two slots and no shift on tau.

    ``psi_slots`` names the (1-based) pair carrying the annular profile; every
    other slot carries the low-pass profile.  Slot ``tau`` is evaluated
    unshifted regardless of its entry in ``shifts``.
    """
    n1 = len(fs)
    s, t = psi_slots
    if not (1 <= s < t <= n1):
        raise ValueError(f"psi slots must satisfy 1 <= s < t <= {n1}, got ({s}, {t})")
    if not 1 <= tau <= n1:
        raise ValueError(f"tau must lie in 1..{n1}, got {tau}")
    grid = require_same_grid(*fs)
    if len(shifts) != n1:
        raise ValueError("one shift per slot required (tau's entry is ignored)")
    spectra = [transform(f) for f in fs]
    radii = grid.frequency_radii()
    mesh = grid.frequency_mesh()
    total = 0.0 + 0.0j
    for scale in scales:
        prod = np.ones(grid.shape, dtype=np.complex128)
        for k in range(1, n1 + 1):
            profile = pair.psi_hat if k in (s, t) else pair.phi_hat
            mult = profile(radii * 2.0**-scale).astype(np.complex128)
            if k != tau:
                vec = np.atleast_1d(np.asarray(shifts[k - 1], dtype=float)) * 2.0**-scale
                if np.any(vec != 0.0):
                    phase_arg = sum(a * np.asarray(ax) for a, ax in zip(vec, mesh))
                    mult = mult * np.exp(-2j * np.pi * phase_arg)
            piece = np.fft.ifftn(spectra[k - 1].coefficients * mult) / grid.cell_volume
            prod *= piece
        total += np.sum(prod) * grid.cell_volume
    return complex(total)
