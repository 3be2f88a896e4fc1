"""Boundary values of a once-subtracted spectral representation.

A pair of non-negative spectral weights sigma_plus / sigma_minus supported
on the positive half line defines

    f(s) = (1/2pi) [ I1(s) + i sqrt(-s) I2(s) ]

    I1(s) = int_0^inf (sigma_plus - sigma_minus)(u) / (u - s) du
    I2(s) = int_0^inf (sigma_plus + sigma_minus)(u) / (sqrt(u) (u - s)) du

with sqrt the principal branch.  f is holomorphic off the non-negative real
axis; its upper/lower edge values there carry Im f = sigma_plus /
sigma_minus exactly, while on the negative axis Im f is strictly positive
wherever the weights are: a continuum of damped support below zero rather
than an isolated pole.  Swapping the two weights relates the two half
planes through f_swapped(conj(s)) = -conj(f(s)).

Numerically the weights live on [0, s_max] and continue beyond as the
power tail sigma(s_max) (u/s_max)**(-tail_exponent); tail contributions are
summed in closed form, which confines evaluation to |s| < 0.9 s_max.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .quadrature import integrate_panels, principal_value, tanh_sinh

TAIL_RADIUS = 0.9
TAIL_TERMS = 400
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpectralDensity:
    """Non-negative spectral weights on [0, s_max] with a power-law tail."""

    sigma_plus: Callable[[np.ndarray], np.ndarray]
    sigma_minus: Callable[[np.ndarray], np.ndarray]
    s_max: float
    tail_exponent: float

    def __post_init__(self):
        if not (self.s_max > 0.0 and math.isfinite(self.s_max)):
            raise ValidationError(f"s_max must be positive and finite, got {self.s_max}")
        if not self.tail_exponent > 0.0:
            raise ValidationError(
                f"tail exponent must be positive for a convergent tail, got {self.tail_exponent}")
        probe = np.linspace(0.0, self.s_max, 257)
        for name, fn in (("sigma_plus", self.sigma_plus), ("sigma_minus", self.sigma_minus)):
            vals = np.asarray(fn(probe), dtype=float)
            if vals.shape != probe.shape:
                raise ValidationError(f"{name} must map arrays to arrays of the same shape")
            if not np.all(np.isfinite(vals)) or vals.min() < -1e-12:
                raise ValidationError(f"{name} must be finite and non-negative on [0, s_max]")

    def swapped(self) -> "SpectralDensity":
        """The density with the two weights exchanged."""
        return SpectralDensity(self.sigma_minus, self.sigma_plus,
                               self.s_max, self.tail_exponent)


def demo_density(s_max: float = 10.0, tail_exponent: float = 1.0) -> SpectralDensity:
    """Two smooth resonance bumps, one per weight."""

    def plus(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u / ((u - 3.0) ** 2 + 4.0)

    def minus(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return 0.5 * u / ((u - 5.0) ** 2 + 6.0)

    return SpectralDensity(plus, minus, s_max, tail_exponent)


def _check_radius(spec: SpectralDensity, s: complex) -> None:
    if abs(s) >= TAIL_RADIUS * spec.s_max:
        raise ValidationError(
            f"|s| = {abs(s):.4g} outside the reliable disk "
            f"|s| < {TAIL_RADIUS * spec.s_max:.4g} set by the tail model")


def _tail_sum(s: complex, s_max: float, shift: float) -> complex:
    """sum_k (s/s_max)^k / (tail_exponent + shift-adjusted k), times 1/s_max^shift."""
    # Closed-form tail of int_{s_max}^inf (u/s_max)^(-eta) u^(-extra) / (u - s) du
    # after expanding 1/(u - s) in s/u; `shift` is eta for the plain kernel and
    # eta + 1/2 for the 1/sqrt(u) kernel.
    ratio = s / s_max
    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(TAIL_TERMS):
        total += term / (shift + k)
        term *= ratio
        if abs(term) < 1e-16 * max(1.0, abs(total)):
            break
    return total


def _integrals(spec: SpectralDensity, s: complex,
               tol: float = 1e-10) -> Tuple[complex, complex]:
    """(I1, I2) for s strictly off the support [0, inf)."""
    if s.imag == 0.0 and s.real >= 0.0:
        raise ValidationError(
            f"s = {s} lies on the spectral support; use edge_values for cut limits")
    _check_radius(spec, s)

    def diff_kernel(u: np.ndarray) -> np.ndarray:
        return (np.asarray(spec.sigma_plus(u)) - np.asarray(spec.sigma_minus(u))) / (u - s)

    def sum_kernel(u: np.ndarray) -> np.ndarray:
        return ((np.asarray(spec.sigma_plus(u)) + np.asarray(spec.sigma_minus(u)))
                / (np.sqrt(u) * (u - s)))

    if 0.0 < s.real < spec.s_max:
        breaks = (0.0, float(s.real), spec.s_max)
    else:
        breaks = (0.0, spec.s_max)
    i1 = integrate_panels(diff_kernel, breaks, tol=tol).value
    i2 = integrate_panels(sum_kernel, breaks, tol=tol).value

    sp = float(np.asarray(spec.sigma_plus(np.array([spec.s_max])))[0])
    sm = float(np.asarray(spec.sigma_minus(np.array([spec.s_max])))[0])
    eta = spec.tail_exponent
    i1 += (sp - sm) * _tail_sum(s, spec.s_max, eta)
    i2 += (sp + sm) / math.sqrt(spec.s_max) * _tail_sum(s, spec.s_max, eta + 0.5)
    return i1, i2


def boundary_function(spec: SpectralDensity, s: complex, tol: float = 1e-10) -> complex:
    """f(s) for s strictly off the non-negative real axis."""
    s = complex(s)
    i1, i2 = _integrals(spec, s, tol=tol)
    return (i1 + 1j * np.sqrt(complex(-s)) * i2) / TWO_PI


class EdgeValues(NamedTuple):
    upper: complex
    lower: complex


def edge_values(spec: SpectralDensity, s0: float, tol: float = 1e-10) -> EdgeValues:
    """The two cut limits f(s0 +- i0) for 0 < s0 < 0.9 s_max.

    Real parts come from principal-value integrals; imaginary parts are the
    spectral weights themselves, which the edge limits reproduce exactly.
    """
    s0 = float(s0)
    if not 0.0 < s0:
        raise ValidationError(f"edge values need s0 > 0, got {s0}")
    _check_radius(spec, complex(s0))

    def diff_w(u: np.ndarray) -> np.ndarray:
        return np.asarray(spec.sigma_plus(u)) - np.asarray(spec.sigma_minus(u))

    def sum_w(u: np.ndarray) -> np.ndarray:
        return ((np.asarray(spec.sigma_plus(u)) + np.asarray(spec.sigma_minus(u)))
                / np.sqrt(u))

    i1 = principal_value(diff_w, s0, 0.0, spec.s_max, tol=tol).value.real
    i2 = principal_value(sum_w, s0, 0.0, spec.s_max, tol=tol).value.real

    sp_m = float(np.asarray(spec.sigma_plus(np.array([spec.s_max])))[0])
    sm_m = float(np.asarray(spec.sigma_minus(np.array([spec.s_max])))[0])
    eta = spec.tail_exponent
    i1 += (sp_m - sm_m) * _tail_sum(complex(s0), spec.s_max, eta).real
    i2 += (sp_m + sm_m) / math.sqrt(spec.s_max) * _tail_sum(complex(s0), spec.s_max,
                                                            eta + 0.5).real

    sp = float(np.asarray(spec.sigma_plus(np.array([s0])))[0])
    sm = float(np.asarray(spec.sigma_minus(np.array([s0])))[0])
    root = math.sqrt(s0)
    upper = ((i1 + root * i2) + 1j * math.pi * (sp + sm) + 1j * math.pi * (sp - sm)) / TWO_PI
    lower = ((i1 - root * i2) + 1j * math.pi * (sp + sm) - 1j * math.pi * (sp - sm)) / TWO_PI
    return EdgeValues(upper, lower)


def retarded_imaginary(spec: SpectralDensity, s: float, k0_sign: int = 1,
                       tol: float = 1e-10) -> float:
    """Im of the retarded boundary value, 2 Im f(s + i0 sgn k0).

    Non-negative for every real s in the reliable disk: on the cut it is
    twice a spectral weight, below zero it is the strictly positive
    continuum contribution.
    """
    if k0_sign not in (-1, 1):
        raise ValidationError(f"k0_sign must be +-1, got {k0_sign}")
    s = float(s)
    if s >= 0.0:
        if s == 0.0:
            raise ValidationError("s = 0 sits on the branch point")
        e = edge_values(spec, s, tol=tol)
        val = e.upper.imag if k0_sign > 0 else e.lower.imag
    else:
        val = boundary_function(spec, complex(s), tol=tol).imag
    return 2.0 * val


def dissipation_rate(spec: SpectralDensity, s: float, k0_sign: int = 1,
                     tol: float = 1e-10) -> float:
    """Mode damping rate 2 (2pi)^2 Im f at the retarded edge."""
    return (TWO_PI ** 2) * retarded_imaginary(spec, s, k0_sign=k0_sign, tol=tol)


class CutConsistency(NamedTuple):
    sigma_plus_recovered: float
    sigma_minus_recovered: float
    residual: float


def cut_self_consistency(spec: SpectralDensity, s0: float,
                         eps0: float | None = None,
                         tol: float = 1e-10) -> CutConsistency:
    """Recover the weights at s0 from off-cut samples and compare.

    Im f(s0 + i eps) is sampled at eps0, eps0/2, eps0/4 and extrapolated to
    eps = 0 through the interpolating quadratic (and likewise below the
    axis); the residual is the worse relative mismatch against the exact
    weights.
    """
    s0 = float(s0)
    if s0 <= 0.0:
        raise ValidationError(f"cut consistency needs s0 > 0, got {s0}")
    if eps0 is None:
        eps0 = 1e-2 * (1.0 + s0)
    eps = np.array([eps0, eps0 / 2.0, eps0 / 4.0])

    def extrapolate(samples: np.ndarray) -> float:
        total = 0.0
        for j in range(3):
            num = 1.0
            den = 1.0
            for k in range(3):
                if k != j:
                    num *= -eps[k]
                    den *= eps[j] - eps[k]
            total += samples[j] * num / den
        return total

    up = np.array([boundary_function(spec, complex(s0, e), tol=tol).imag for e in eps])
    down = np.array([boundary_function(spec, complex(s0, -e), tol=tol).imag for e in eps])
    rec_p = extrapolate(up)
    rec_m = extrapolate(down)
    exact_p = float(np.asarray(spec.sigma_plus(np.array([s0])))[0])
    exact_m = float(np.asarray(spec.sigma_minus(np.array([s0])))[0])
    scale = max(exact_p, exact_m, 1e-12)
    residual = max(abs(rec_p - exact_p), abs(rec_m - exact_m)) / scale
    return CutConsistency(rec_p, rec_m, residual)


def reflection_defect(spec: SpectralDensity, s: complex, tol: float = 1e-10) -> float:
    """|f_swapped(conj s) + conj f(s)|, zero for the exact representation."""
    s = complex(s)
    a = boundary_function(spec.swapped(), s.conjugate(), tol=tol)
    b = boundary_function(spec, s, tol=tol)
    return abs(a + b.conjugate())


def holomorphy_residual(spec: SpectralDensity, s: complex,
                        h: float | None = None, tol: float = 1e-10) -> float:
    """Relative Cauchy-Riemann defect of f at s from 4th-order stencils.

    Both stencil arms must clear the cut; the step defaults to
    1e-2 (1 + |s|).
    """
    s = complex(s)
    if h is None:
        h = 1e-2 * (1.0 + abs(s))
    on_cut_risk = (abs(s.imag) <= 2.0 * h + 1e-15) and (s.real + 2.0 * h >= 0.0)
    if on_cut_risk:
        raise ValidationError(
            f"stencil of step {h:.3g} around {s} would touch the spectral support")

    def f(z: complex) -> complex:
        return boundary_function(spec, z, tol=tol)

    def deriv(step: complex) -> complex:
        return (-f(s + 2 * step) + 8 * f(s + step)
                - 8 * f(s - step) + f(s - 2 * step)) / (12 * step)

    fx = deriv(complex(h, 0.0))
    fy = (-f(s + 2j * h) + 8 * f(s + 1j * h)
          - 8 * f(s - 1j * h) + f(s - 2j * h)) / (12 * h)
    defect = abs(fx + 1j * fy)
    scale = max(abs(fx), abs(fy), 1e-300)
    return defect / scale


def boundary_scan(spec: SpectralDensity, s_values: Sequence[float],
                  tol: float = 1e-10) -> List[dict]:
    """Rows of both edge limits over a real grid (equal off the support)."""
    rows: List[dict] = []
    for s in s_values:
        s = float(s)
        if s > 0.0:
            e = edge_values(spec, s, tol=tol)
            up, down = e.upper, e.lower
        else:
            if s == 0.0:
                continue
            val = boundary_function(spec, complex(s), tol=tol)
            up = down = val
        rows.append({
            "s": s,
            "re_upper": float(up.real), "im_upper": float(up.imag),
            "re_lower": float(down.real), "im_lower": float(down.imag),
        })
    return rows
