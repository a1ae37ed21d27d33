"""Lobachevsky function L(theta) = -int_0^theta log|2 sin t| dt."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import quad

HALF_PI = 0.5 * np.pi

#degree of the Chebyshev fit of the smooth remainder on [0, pi/2]
_FIT_DEGREE = 48


#smooth part S(x) = int_0^x log(sin t / t) dt; the log singularity is split off analytically
def _smooth_remainder(x: float) -> float:
    value, _ = quad(lambda t: np.log(np.sinc(t / np.pi)), 0.0, float(x), epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


#the fit shifted so that it vanishes exactly at 0, where S(0) = 0
@lru_cache(maxsize=1)
def _remainder_fit() -> Chebyshev:
    fit = Chebyshev.interpolate(np.vectorize(_smooth_remainder), _FIT_DEGREE, domain=[0.0, HALF_PI])
    return fit - fit(0.0)


#reduces to [0, pi/2] using period pi and L(pi - x) = -L(x); returns (reduced, sign)
def _reduce(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.mod(theta, np.pi)
    upper = x > HALF_PI
    reduced = np.where(upper, np.pi - x, x)
    sign = np.where(upper, -1.0, 1.0)
    return reduced, sign


#vectorised evaluation, absolute error well below 1e-9
def lobachevsky(theta):
    theta = np.asarray(theta, dtype=float)
    x, sign = _reduce(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(x > 0.0, x * np.log(x), 0.0)
    value = -x * np.log(2.0) - (xlogx - x) - _remainder_fit()(x)
    value = np.where(x > 0.0, sign * value, 0.0)
    return float(value) if value.ndim == 0 else value


#independent adaptive-quadrature oracle used to validate the fast path
def lobachevsky_quad(theta: float) -> float:
    x, sign = _reduce(np.asarray(theta, dtype=float))
    x = float(x)
    if x == 0.0:
        return 0.0
    value, _ = quad(lambda t: -np.log(abs(2.0 * np.sin(t))), 0.0, x, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(sign) * value


__all__ = ["lobachevsky", "lobachevsky_quad"]
