"""Sharp Euclidean constants and their numerical verification.

The critical inequality on R^n reads ||f||_{U^k} <= C_k^n ||f||_{L^{p_k}}
with C_k = 2^{k/2^k} / (k+1)^{(k+1)/2^{k+1}}, attained exactly by Gaussians
times degree <= k-1 phases.  This module computes the constants in extended
precision, certifies the exact Gaussian identities through the integer
determinant of the cube quadratic form, and verifies the sharp ratio and the
U^3 Fourier invariance on discretised grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .config import DEFAULT, ToleranceProfile
from .domains import EuclideanGrid, Signal, lp_norm
from .engine import critical_exponent, uk_grid
from .errors import DomainError, PreconditionError

_MP_DPS = 50


@dataclass(frozen=True)
class CubeFormMatrix:
    """Integer matrix of the quadratic form sum_w |x + w.h|^2 on (x, h_1..h_d)."""

    d: int
    entries: tuple

    def validate(self):
        m = self.entries
        d = self.d
        size = d + 1
        for i in range(size):
            for j in range(size):
                if m[i][j] != m[j][i]:
                    raise DomainError("cube form matrix must be symmetric")
        if m[0][0] != 2**d:
            raise DomainError("x^2 coefficient must be 2^d")
        for j in range(1, size):
            if m[0][j] != 2 ** (d - 1) or m[j][j] != 2 ** (d - 1):
                raise DomainError("x.h and h^2 entries must be 2^(d-1)")
            for i in range(1, size):
                if i != j and m[i][j] != 2 ** (d - 2):
                    raise DomainError("mixed h_i.h_j entries must be 2^(d-2)")


def cube_form_matrix(d: int) -> CubeFormMatrix:
    if d < 1:
        raise PreconditionError("d must be >= 1")
    size = d + 1
    rows = []
    for i in range(size):
        row = []
        for j in range(size):
            if i == 0 and j == 0:
                row.append(2**d)
            elif i == 0 or j == 0:
                row.append(2 ** (d - 1))
            elif i == j:
                row.append(2 ** (d - 1))
            else:
                row.append(2 ** (d - 2))
        rows.append(tuple(row))
    return CubeFormMatrix(d, tuple(rows))


def cube_form_det(d: int) -> int:
    """Exact determinant of the cube form matrix by fraction-free elimination."""
    if not 1 <= d <= 12:
        raise PreconditionError("cube_form_det supports 1 <= d <= 12")
    m = [list(row) for row in cube_form_matrix(d).entries]
    # 4x the matrix keeps all Bareiss intermediates integral for d = 1 too
    n = d + 1
    prev = 1
    sign = 1
    for col in range(n - 1):
        if m[col][col] == 0:
            swap = next((r for r in range(col + 1, n) if m[r][col] != 0), None)
            if swap is None:
                return 0
            m[col], m[swap] = m[swap], m[col]
            sign = -sign
        for r in range(col + 1, n):
            for c in range(col + 1, n):
                m[r][c] = (m[r][c] * m[col][col] - m[r][col] * m[col][c]) // prev
            m[r][col] = 0
        prev = m[col][col]
    return sign * m[n - 1][n - 1]


def sharp_gowers_constant(k: int) -> float:
    """C_k = 2^{k/2^k} / (k+1)^{(k+1)/2^{k+1}}, evaluated in extended precision."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    with mpmath.workdps(_MP_DPS):
        val = mpmath.power(2, mpmath.mpf(k) / 2**k) / mpmath.power(k + 1, mpmath.mpf(k + 1) / 2 ** (k + 1))
        return float(val)


def beckner_constant(p: float) -> float:
    """A_p = (p^{1/p} / p'^{1/p'})^{1/2} with 1/p + 1/p' = 1."""
    if p <= 1:
        raise PreconditionError("Beckner constant needs p > 1")
    with mpmath.workdps(_MP_DPS):
        pm = mpmath.mpf(p)
        pp = pm / (pm - 1)
        val = mpmath.sqrt(mpmath.power(pm, 1 / pm) / mpmath.power(pp, 1 / pp))
        return float(val)


def ck_recursion_gap(k: int) -> float:
    """|(A_{2k/(k+1)}^2 / A_k)^{k/2^k} C_{k-1}^{1/2} - C_k| in extended precision."""
    if k < 2:
        raise PreconditionError("recursion check needs k >= 2")
    with mpmath.workdps(_MP_DPS):

        def a_const(p):
            pm = mpmath.mpf(p)
            pp = pm / (pm - 1)
            return mpmath.sqrt(mpmath.power(pm, 1 / pm) / mpmath.power(pp, 1 / pp))

        def c_const(kk):
            return mpmath.power(2, mpmath.mpf(kk) / 2**kk) / mpmath.power(kk + 1, mpmath.mpf(kk + 1) / 2 ** (kk + 1))

        lhs = mpmath.power(a_const(mpmath.mpf(2 * k) / (k + 1)) ** 2 / a_const(k), mpmath.mpf(k) / 2**k) * mpmath.sqrt(
            c_const(k - 1)
        )
        return float(abs(lhs - c_const(k)))


def gaussian_uk_exact(d: int) -> float:
    """||e^{-pi x^2}||_{U^d(R)} = det(M_d)^{-1/2^{d+1}} = 2^{-d(d-1)/2^{d+1}}.

    Also certifies the sharpness identity: the value equals
    C_d ||e^{-pi x^2}||_{L^{p_d}} = C_d p_d^{-(d+1)/2^{d+1}} to 1e-12, which
    pins the norm convention (the box integral is the 2^d-th power).
    """
    if d < 1:
        raise PreconditionError("d must be >= 1")
    det = cube_form_det(d)
    value = float(det) ** (-1.0 / 2 ** (d + 1))
    pk = float(critical_exponent(d))
    via_constant = sharp_gowers_constant(d) * pk ** (-(d + 1) / 2 ** (d + 1))
    if abs(value - via_constant) > 1e-12:
        raise AssertionError(f"Gaussian norm convention mismatch: {value} vs {via_constant}")
    return value


# ---------------------------------------------------------------------------
# grid verification


def gaussian_signal(grid: EuclideanGrid, sigma: float = 1.0, center: float = 0.0, freq: float = 0.0) -> Signal:
    """Sampled e^{-pi ((x - center)/sigma)^2} e(freq * x) on a 1-D grid."""
    if grid.dim != 1:
        raise DomainError("gaussian_signal is one-dimensional")
    x = grid.axis_coordinates()
    vals = np.exp(-np.pi * ((x - center) / sigma) ** 2) * np.exp(2j * np.pi * freq * x)
    return Signal(grid, vals)


@dataclass(frozen=True)
class SharpnessReport:
    d: int
    ratio: float
    constant: float
    error: float
    refinement: tuple  # ((points, error), ...) on coarse grids
    observed_order: float


def verify_sharpness(
    d: int,
    grid_points: int,
    extent: float,
    sigma: float = 1.0,
    profile: ToleranceProfile = DEFAULT,
) -> SharpnessReport:
    """Compare the grid U^d / L^{p_d} ratio of a Gaussian against C_d.

    The refinement study reruns the ratio on coarse grids where the
    discretisation error is visible and reports the observed convergence
    order in the grid spacing.
    """
    gauss_sigma = sigma / math.sqrt(2 * math.pi)  # std of exp(-pi (x/sigma)^2)
    if extent < 6 * gauss_sigma:
        raise PreconditionError(f"extent {extent} below the 6 sigma padding requirement {6 * gauss_sigma:.3f}")
    constant = sharp_gowers_constant(d)
    pk = float(critical_exponent(d))

    def ratio_at(points):
        grid = EuclideanGrid(1, extent, points)
        f = gaussian_signal(grid, sigma)
        return uk_grid(f, d, profile).value / lp_norm(f, pk)

    ratio = ratio_at(grid_points)
    error = abs(ratio - constant)
    coarse = [max(8, int(3 * extent)), max(12, int(6 * extent))]
    refinement = tuple((m, abs(ratio_at(m) - constant)) for m in coarse)
    errs = [err for _, err in refinement]
    if errs[1] > 0 and errs[0] > 0:
        observed_order = math.log(errs[0] / errs[1]) / math.log(coarse[1] / coarse[0])
    else:
        observed_order = math.inf
    return SharpnessReport(d, ratio, constant, error, refinement, observed_order)


def grid_fourier(f: Signal, profile: ToleranceProfile = DEFAULT) -> Signal:
    """Continuous-normalisation Fourier transform of a 1-D grid signal.

    Returns f^(xi) = sum f(x) e(-xi x) dx sampled on the dual grid (spacing
    1/(2L), extent m/(4L)).  Raises when spectral mass near the Nyquist band
    indicates aliasing.
    """
    dom = f.domain
    if not (isinstance(dom, EuclideanGrid) and dom.dim == 1):
        raise DomainError("grid_fourier expects a 1-D grid signal")
    m, w = dom.points, dom.spacing
    spectrum = np.fft.fft(f.values)
    freqs = np.fft.fftfreq(m, d=w)
    power = np.abs(spectrum) ** 2
    total = float(np.sum(power))
    near_nyquist = np.abs(freqs) >= 0.9 * np.max(np.abs(freqs))
    if total > 0 and float(np.sum(power[near_nyquist])) > profile.aliasing_tol * total:
        raise PreconditionError("spectral mass near the Nyquist frequency; refine the grid before transforming")
    vals = w * np.exp(2j * np.pi * freqs * dom.extent) * spectrum
    order = np.argsort(np.round(freqs * (2 * dom.extent)).astype(int))
    dual = EuclideanGrid(1, m / (4 * dom.extent), m)
    return Signal(dual, vals[order])


def fourier_invariance_check(f: Signal, profile: ToleranceProfile = DEFAULT):
    """(||f||_{U^3}, ||f^||_{U^3}, difference) for a padded 1-D grid signal."""
    fhat = grid_fourier(f, profile)
    u3_f = uk_grid(f, 3, profile).value
    u3_hat = uk_grid(fhat, 3, profile).value
    return u3_f, u3_hat, abs(u3_f - u3_hat)
