"""Bessel functions of the first kind, the normalized eigenfunctions of the
Bessel operator, and the constants a(r), c(r).

Everything here is written against numpy only.  J_nu is evaluated in three
regimes selected per argument:

* ``z <= SERIES_LIMIT``: the ascending power series,
* ``SERIES_LIMIT < z < asymptotic threshold``: Miller's backward recurrence
  normalized with the Neumann series for (z/2)^mu,
* beyond the threshold: the Hankel asymptotic expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import StepTooLargeError, UnsupportedOrderError, UsageError
from .measure import BesselSpace

SERIES_LIMIT = 8.0

# Lanczos coefficients for g = 7, n = 9 (the usual double precision set).
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Gamma function for real x (not a non-positive integer).

    Positive integers and half-integers are returned from their exact
    product forms so that constants like a(1) come out as exactly 1.0.
    """
    x = float(x)
    if not math.isfinite(x):
        raise UsageError(f"gamma: non-finite argument {x!r}")
    if x <= 0 and x == math.floor(x):
        raise UsageError(f"gamma: pole at {x!r}")
    if x > 0 and x <= 171 and 2 * x == math.floor(2 * x):
        if x == math.floor(x):
            return float(math.factorial(int(x) - 1))
        # Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
        k = int(x - 0.5)
        return math.factorial(2 * k) / (4**k * math.factorial(k)) * math.sqrt(math.pi)
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


@dataclass(frozen=True)
class Constants:
    """a(r) normalizes phi_lambda; c(r) normalizes the translation density."""

    r: float
    a_r: float
    c_r: float

    @property
    def nu(self) -> float:
        return (self.r - 1.0) / 2.0

    @property
    def theta_constant(self) -> float:
        """Normalization of the angular form of the translation,
        Gamma((r+1)/2) / (Gamma(r/2) sqrt(pi))."""
        return gamma((self.r + 1) / 2) / (gamma(self.r / 2) * math.sqrt(math.pi))


@lru_cache(maxsize=64)
def constants(r: float) -> Constants:
    r = float(r)
    if not (r > 0 and math.isfinite(r)):
        raise UsageError(f"weight exponent r must be positive and finite, got {r!r}")
    nu = (r - 1.0) / 2.0
    a_r = 2.0**nu * gamma(nu + 1.0)
    c_r = 2.0 ** (r - 2.0) * gamma((r + 1) / 2) / (gamma(r / 2) * math.sqrt(math.pi))
    return Constants(r=r, a_r=a_r, c_r=c_r)


def _reduced_series(nu: float, z: np.ndarray) -> np.ndarray:
    """sum_k (-z^2/4)^k / (k! (nu+1)_k), i.e. 0F1(; nu+1; -z^2/4).

    Intended for z <= SERIES_LIMIT where the terms stay moderate."""
    q = -0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, 80):
        term = term * q / (k * (nu + k))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _asymptotic_threshold(nu: float) -> float:
    return max(25.0, 0.5 * nu * nu + 10.0)


def _hankel_asymptotic(nu: float, z: np.ndarray) -> np.ndarray:
    mu4 = 4.0 * nu * nu
    omega = z - (0.5 * nu + 0.25) * math.pi
    p = np.ones_like(z)
    q = np.zeros_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    last = np.full(z.shape, np.inf)
    for k in range(1, 60):
        term = term * (mu4 - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(term)
        # stop each element once its terms start growing (optimal truncation)
        active &= mag < last
        last = np.where(active, mag, last)
        contrib = np.where(active, term, 0.0)
        if k % 2 == 1:
            q = q + (1 if (k // 2) % 2 == 0 else -1) * contrib
        else:
            p = p + (1 if (k // 2) % 2 == 0 else -1) * contrib
        if not np.any(active & (mag > 1e-17)):
            break
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(omega) - q * np.sin(omega))


def _miller(nu: float, z: np.ndarray) -> np.ndarray:
    """Backward recurrence from a high order, normalized by
    (z/2)^mu / Gamma(mu+1) = J_mu + sum_{k>=1} (mu+2k) h_k J_{mu+2k}."""
    # orders in (-1/2, 0) recur on themselves; the Neumann identity holds there
    mu = nu - math.floor(nu) if nu >= 0 else nu
    target = int(round(nu - mu))
    zmax = float(np.max(z))
    top = int(1.3 * zmax + target + 40)
    if top % 2:
        top += 1
    j_next = np.zeros_like(z)  # J_{mu+top+1}
    j_cur = np.full_like(z, 1e-300)  # J_{mu+top}
    norm = np.zeros_like(z)
    result = np.zeros_like(z)
    # h_k coefficients for even orders 2k up to top
    h = [0.0, 1.0]
    for k in range(1, top // 2 + 1):
        h.append(h[-1] * (mu + k) / (k + 1))
    for k in range(top, -1, -1):
        if k == target:
            result = j_cur.copy()
        if k % 2 == 0:
            if k == 0:
                norm = norm + j_cur
            else:
                norm = norm + (mu + k) * h[k // 2] * j_cur
        if k == 0:
            break
        j_prev = (2.0 * (mu + k) / z) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur = j_cur * scale
            j_next = j_next * scale
            norm = norm * scale
            result = result * scale
    lead = (0.5 * z) ** mu / gamma(mu + 1.0)
    return result * lead / norm


def bessel_j(nu: float, z):
    """J_nu(z) for real nu >= -1/2 and z >= 0 (scalar or array)."""
    nu = float(nu)
    if nu < -0.5 or not math.isfinite(nu):
        raise UnsupportedOrderError(f"order nu={nu!r} outside the supported range nu >= -1/2")
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or not np.all(np.isfinite(z)):
        raise UsageError("bessel_j requires finite z >= 0")
    flat = z.ravel()
    out = np.empty_like(flat)
    if nu == 0.5 or nu == -0.5:
        with np.errstate(divide="ignore", invalid="ignore"):
            amp = np.sqrt(2.0 / (math.pi * flat))
            out = amp * (np.sin(flat) if nu > 0 else np.cos(flat))
        zero = flat == 0
        out[zero] = 0.0 if nu > 0 else np.inf
    else:
        small = flat <= SERIES_LIMIT
        large = flat >= _asymptotic_threshold(nu)
        middle = ~(small | large)
        if np.any(small):
            zs = flat[small]
            with np.errstate(divide="ignore"):
                lead = (0.5 * zs) ** nu / gamma(nu + 1.0)
            out[small] = lead * _reduced_series(nu, zs)
        if np.any(middle):
            out[middle] = _miller(nu, flat[middle])
        if np.any(large):
            out[large] = _hankel_asymptotic(nu, flat[large])
    out = out.reshape(z.shape)
    return float(out) if scalar else out


def _phi_of_argument(nu: float, a_r: float, z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = z <= SERIES_LIMIT
    if np.any(small):
        out[small] = _reduced_series(nu, z[small])
    if np.any(~small):
        zl = z[~small]
        out[~small] = a_r * zl ** (-nu) * bessel_j(nu, zl)
    return out


def phi_lambda(space: BesselSpace, lam, x):
    """The eigenfunction phi_lambda(x) = a(r) (lam x)^{-nu} J_nu(lam x),
    nu = (r-1)/2, normalized so that phi_lambda(0) = 1.

    ``lam`` and ``x`` broadcast against each other."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0) or not np.all(np.isfinite(lam_arr)):
        raise UsageError("phi_lambda requires lambda > 0")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise UsageError("phi_lambda requires x >= 0")
    c = constants(space.r)
    z = np.multiply(lam_arr, x_arr)
    shape = z.shape
    vals = _phi_of_argument(c.nu, c.a_r, np.atleast_1d(z).ravel().astype(float))
    if shape == ():
        return float(vals[0])
    return vals.reshape(shape)


def phi_matrix(space: BesselSpace, lams: np.ndarray, xs: np.ndarray, block: int = 1 << 22) -> np.ndarray:
    """Matrix phi_{lams[j]}(xs[i]) with shape (len(lams), len(xs)), built in
    row blocks to bound temporary memory."""
    lams = np.asarray(lams, dtype=float)
    xs = np.asarray(xs, dtype=float)
    c = constants(space.r)
    out = np.empty((lams.size, xs.size))
    rows = max(1, block // max(xs.size, 1))
    for start in range(0, lams.size, rows):
        z = np.outer(lams[start:start + rows], xs)
        out[start:start + rows] = _phi_of_argument(c.nu, c.a_r, z.ravel()).reshape(z.shape)
    return out


def eigen_residual(space: BesselSpace, lam: float, x: float, h: float) -> float:
    """|(L - lam^2) phi_lambda|(x) with L discretized by centered differences
    of step h.  The error is second order in h."""
    if not (h > 0):
        raise UsageError("step h must be positive")
    if x <= 2 * h:
        raise StepTooLargeError(f"need x > 2h, got x={x}, h={h}")
    pts = np.array([x - h, x, x + h])
    vals = phi_lambda(space, lam, pts)
    d2 = (vals[2] - 2 * vals[1] + vals[0]) / (h * h)
    d1 = (vals[2] - vals[0]) / (2 * h)
    return float(abs(-d2 - (space.r / x) * d1 - lam * lam * vals[1]))
