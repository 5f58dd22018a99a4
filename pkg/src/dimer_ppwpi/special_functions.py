"""Complex error function and the ordered double Gaussian time integral.

The ordered integral

    I(alpha, beta) = int dt2 int_{-inf}^{t2} dt1
                     exp(-t1**2/(2 s**2) + i alpha t1 - t2**2/(2 s**2) - i beta t2)

appears in every second-order pulse propagator.  Its closed form is
``pi s**2 exp(-s**2 (alpha**2 + beta**2)/2) (1 - erf(i s (alpha + beta)/2))``.
The erf factor grows like exp(y**2) along the imaginary axis, so the
evaluation here goes through the Faddeeva function instead, which folds the
two exponentials together and cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

__all__ = [
    "NestedIntegralArgs",
    "QuadratureError",
    "complex_erf",
    "faddeeva",
    "nested_gaussian_integral",
    "nested_gaussian_integral_erf",
    "quadrature_oracle",
]


class QuadratureError(RuntimeError):
    """Raised when the quadrature oracle hits its refinement cap."""


@dataclass(frozen=True)
class NestedIntegralArgs:
    alpha: float
    beta: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def complex_erf(z):
    """Error function of a complex argument.

    Odd symmetry is exact: arguments in the left half plane are reflected
    before evaluation.  Raises ``OverflowError`` instead of returning an
    infinite value (erf(iy) grows like exp(y**2)/y).
    """
    z = np.asarray(z, dtype=complex)
    flip = (z.real < 0) | ((z.real == 0) & (z.imag < 0))
    zz = np.where(flip, -z, z)
    with np.errstate(over="ignore", invalid="ignore"):
        out = special.erf(zz)
    if not np.all(np.isfinite(out)):
        raise OverflowError("complex_erf: result exceeds floating point range")
    out = np.where(flip, -out, out)
    return out[()] if out.ndim == 0 else out


def faddeeva(z):
    """w(z) = exp(-z**2) erfc(-i z)."""
    return special.wofz(np.asarray(z, dtype=complex))


def nested_gaussian_integral(alpha, beta, sigma):
    """Closed-form ordered double Gaussian integral I(alpha, beta; sigma).

    Broadcasts over array arguments.  Uses
    ``1 - erf(i y) = exp(y**2) w(-y)`` so that
    ``I = pi s**2 exp(-s**2 (alpha - beta)**2 / 4) w(-s (alpha + beta) / 2)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    diff = sigma * (alpha - beta)
    y = 0.5 * sigma * (alpha + beta)
    out = np.pi * sigma**2 * np.exp(-0.25 * diff**2) * special.wofz(-y + 0j)
    return out[()] if out.ndim == 0 else out


def nested_gaussian_integral_erf(alpha, beta, sigma):
    """The same integral written literally with the complex error function.

    Only usable while ``|sigma (alpha + beta) / 2|`` stays small enough for
    erf to be representable; kept for cross-checking the scaled form.
    """
    args = NestedIntegralArgs(float(alpha), float(beta), float(sigma))
    s = args.sigma
    z = 0.5j * s * (args.alpha + args.beta)
    envelope = np.exp(-0.5 * s**2 * (args.alpha**2 + args.beta**2))
    return complex(np.pi * s**2 * envelope * (1.0 - complex_erf(z)))


@lru_cache(maxsize=16)
def _ordered_rule(n, half_width):
    # Gauss-Legendre on the triangle -L < t1 < t2 < L.
    x, w = leggauss(n)
    t2 = half_width * x
    w2 = half_width * w
    # inner interval [-L, t2] mapped from [-1, 1]
    half = 0.5 * (t2 + half_width)
    t1 = -half_width + half[:, None] * (x[None, :] + 1.0)
    w1 = half[:, None] * w[None, :]
    return t1, w1, t2, w2


def quadrature_oracle(alpha, beta, sigma, *, half_width=10.0, rtol=1e-12,
                      n_start=64, n_max=1024):
    """Direct 2D quadrature of the ordered Gaussian integral.

    The integrand is entire, so both time contours are moved to the line
    ``Im tau = sigma**2 (alpha - beta) / 2`` (Cauchy).  On that line the
    Gaussian prefactor ``exp(-sigma**2 (alpha - beta)**2 / 4)`` is carried by
    every sample instead of emerging from cancellation, which keeps the
    relative accuracy when the result is exponentially small.  The real part
    of each contour is truncated at ``+-half_width * sigma``.  Gauss-Legendre
    order is doubled until two successive estimates agree to ``rtol``.
    """
    args = NestedIntegralArgs(float(alpha), float(beta), float(sigma))
    a, b, s = args.alpha, args.beta, args.sigma
    shift = 0.5 * s * s * (a - b)

    def integrand(tau1, tau2):
        expo = (-tau1**2 / (2 * s * s) + 1j * a * tau1
                - tau2**2 / (2 * s * s) - 1j * b * tau2)
        return np.exp(expo)

    prev = None
    n = n_start
    while n <= n_max:
        t1, w1, t2, w2 = _ordered_rule(n, half_width)
        tau1 = s * t1 + 1j * shift
        tau2 = s * t2 + 1j * shift
        vals = integrand(tau1, tau2[:, None])
        est = s * s * np.sum(w2[:, None] * w1 * vals)
        if prev is not None and abs(est - prev) <= rtol * abs(est):
            return complex(est)
        prev = est
        n *= 2
    raise QuadratureError(
        f"quadrature_oracle did not converge for alpha={a}, beta={b}, sigma={s}")
