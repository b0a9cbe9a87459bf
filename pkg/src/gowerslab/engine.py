"""Multi-backend computation of Gowers uniformity norms.

Backends:

* ``uk_direct``: the explicit 2^k-fold box sum over (x, h_1, ..., h_k),
  vectorised over the trailing axes.  Cost |G|^(k+1); refuses work above the
  configured cap.  This is the slow reference every other backend is checked
  against.
* ``u2_fft``: U^2 via the identity ||f||_{U^2} = ||f^||_{L^4(dual)}, one
  mixed-radix FFT.
* ``uk_recursive``: the derivative recursion
  ||f||_{U^k}^{2^k} = E_h ||(T^h f) conj(f)||_{U^{k-1}}^{2^{k-1}}
  with the U^2 base case computed by FFT.
* ``uk_interval``: interval norms ||f||_{U^k([N])} as the ratio of lattice
  box sums of the zero extension against those of the interval indicator.
  Any cyclic embedding Z/N~ with N~ > 2^k N gives the same value (the
  embedding cancels); an explicit embedding path is kept for cross-checks.
* ``uk_grid``: Riemann-sum norms on periodised Euclidean grids with
  cell-volume measure weights.

All large reductions go through numpy's pairwise summation, so results do not
depend on iteration order or thread count.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sfft

from .config import DEFAULT, ToleranceProfile
from .domains import (
    EuclideanGrid,
    FiniteAbelian,
    Interval,
    Signal,
    add_table,
    fourier,
    lp_norm,
    mult_derivative,
)
from .errors import DomainError, GowersLabError, PreconditionError, WorkCapError

# vectorise the trailing two shift axes of the direct sum as long as the
# 3-D block stays below this many entries
_VEC3_CAP = 2_200_000


@dataclass(frozen=True)
class NormResult:
    k: int
    value: float
    backend: str  # direct | recursive | fft_u2 | grid
    work_count: int
    elapsed: float


@dataclass(frozen=True)
class GhkEstimate:
    k: int
    schedule: tuple
    estimates: tuple
    value: float
    slope: Optional[float]
    monotone_tail: bool


def critical_exponent(k: int) -> Fraction:
    """The critical Lebesgue exponent p_k = 2^k / (k+1)."""
    if k < 1:
        raise PreconditionError(f"critical exponent needs k >= 1, got {k}")
    return Fraction(2**k, k + 1)


# ---------------------------------------------------------------------------
# direct backend


def _root_of_power_sum(total: complex, scale: float, k: int) -> float:
    """Check realness/nonnegativity of a 2^k-power sum and take the root."""
    tol = 1e-12 * max(scale, 1.0)
    if abs(total.imag) > tol:
        raise GowersLabError(f"power sum has imaginary part {total.imag:.3e} beyond rounding")
    re = total.real
    if re < 0:
        if re < -tol:
            raise GowersLabError(f"power sum {re:.3e} is negative beyond rounding; this indicates a bug")
        re = 0.0
    return re ** (1.0 / 2**k)


def _direct_box_sum(arrays: Sequence[np.ndarray], moduli: tuple, k: int) -> complex:
    """Unnormalised sum over (x, h_1..h_k) of prod_w g_w(x + w.h).

    ``arrays`` lists the 2^k factor arrays g_w (conjugations already applied),
    indexed so that bit j-1 of the list index is w_j.
    """
    add = add_table(moduli)
    card = add.shape[0]
    xs = np.arange(card)

    if k == 1:
        v0 = arrays[0]
        v1 = arrays[1][add]  # (x, h1)
        return complex(np.sum(v0[:, None] * v1))

    use3d = card**3 <= _VEC3_CAP
    n_prefix = k - 2 if use3d else k - 1
    tail_bits = 2 if use3d else 1

    # group the factor indices by their tail bit pattern
    groups = {pat: [] for pat in itertools.product((0, 1), repeat=tail_bits)}
    for w in range(2**k):
        pat = tuple((w >> (k - tail_bits + j)) & 1 for j in range(tail_bits))
        groups[pat].append(w)

    def prefix_offset(w: int, prefix: tuple) -> int:
        off = 0
        for j in range(n_prefix):
            if (w >> j) & 1:
                off = add[off, prefix[j]]
        return off

    total = np.complex128(0)
    partials = []
    for prefix in itertools.product(range(card), repeat=n_prefix):
        if use3d:
            block = None
            for pat, ws in groups.items():
                sub = None
                for w in ws:
                    base = add[xs, prefix_offset(w, prefix)] if n_prefix else xs
                    idx = base
                    if pat[0]:
                        idx = add[idx[:, None], xs[None, :]]
                    if pat[1]:
                        idx = add[idx[..., None], xs[None, :]] if idx.ndim == 2 else add[idx[:, None], xs[None, :]]
                    term = arrays[w][idx]
                    sub = term if sub is None else sub * term
                if sub is None:
                    continue
                # broadcast sub to (x, h_{k-1}, h_k)
                if pat == (0, 0):
                    sub = sub[:, None, None]
                elif pat == (1, 0):
                    sub = sub[:, :, None]
                elif pat == (0, 1):
                    sub = sub[:, None, :]
                block = sub if block is None else block * sub
            partials.append(np.sum(block))
        else:
            vec_fixed = None
            vec_h = None
            for w in range(2**k):
                base = add[xs, prefix_offset(w, prefix)] if n_prefix else xs
                if (w >> (k - 1)) & 1:
                    term = arrays[w][add[base[:, None], xs[None, :]]]
                    vec_h = term if vec_h is None else vec_h * term
                else:
                    term = arrays[w][base]
                    vec_fixed = term if vec_fixed is None else vec_fixed * term
            block = vec_h if vec_fixed is None else vec_h * vec_fixed[:, None]
            partials.append(np.sum(block))
        if len(partials) >= 4096:
            total = total + np.sum(np.array(partials))
            partials = []
    if partials:
        total = total + np.sum(np.array(partials))
    return complex(total)


def uk_direct(f: Signal, k: int, profile: ToleranceProfile = DEFAULT) -> NormResult:
    """U^k norm by the explicit box sum.  FiniteAbelian domains only."""
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("direct backend requires a finite abelian domain")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    card = dom.cardinality
    if float(card) ** (k + 1) > profile.direct_work_cap:
        raise WorkCapError(
            f"|G|^(k+1) = {card}^{k + 1} exceeds the direct work cap "
            f"{profile.direct_work_cap:.1e}; use the recursive backend"
        )
    t0 = time.perf_counter()
    vals = f.values
    arrays = [np.conj(vals) if bin(w).count("1") % 2 else vals for w in range(2**k)]
    total = _direct_box_sum(arrays, dom.moduli, k)
    scale = float(card) ** (k + 1) * max(np.max(np.abs(vals)), 1.0) ** (2**k)
    value = _root_of_power_sum(total / card ** (k + 1) * 1.0, scale / card ** (k + 1), k)
    return NormResult(k, value, "direct", 2**k * card ** (k + 1), time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# FFT and recursive backends


def _u2_power(values: np.ndarray, moduli: tuple) -> float:
    """||f||_{U^2}^4 = sum_xi |f^(xi)|^4 with f^ = E_x f e(-xi.x)."""
    card = int(np.prod(moduli, dtype=object))
    spect = np.abs(np.fft.fftn(values.reshape(moduli))) / card
    spect *= spect
    return float(np.sum(spect * spect))


def u2_fft(f: Signal, profile: ToleranceProfile = DEFAULT) -> NormResult:
    """U^2 norm as the L^4 norm of the Fourier transform."""
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("u2_fft requires a finite abelian domain")
    t0 = time.perf_counter()
    p = _u2_power(f.values, dom.moduli)
    card = dom.cardinality
    work = int(5 * card * max(math.log2(card), 1)) + 2 * card
    return NormResult(2, p**0.25, "fft_u2", work, time.perf_counter() - t0)


def _recursive_power(values: np.ndarray, moduli: tuple, k: int) -> float:
    """||f||_{U^k}^{2^k} by the derivative recursion, U^2 base by FFT."""
    if k == 2:
        return _u2_power(values, moduli)
    card = int(np.prod(moduli, dtype=object))
    if len(moduli) == 1 and k == 3:
        n = card
        x = np.arange(n)
        deriv = values[np.mod(x[None, :] - x[:, None], n)] * np.conj(values)[None, :]
        spect = np.abs(np.fft.fft(deriv, axis=1)) / n
        spect *= spect
        return float(np.sum(spect * spect)) / n
    add = add_table(moduli)
    neg_h = None  # shifts realised through the table
    powers = np.empty(card)
    for h in range(card):
        shifted = values[add[:, h]]  # f(x - h) read via x = add(idx, h) inverse; see below
        # add[:, h] maps x -> x + h, so values[add[:, h]] is f(x + h);
        # conjugation symmetry of the h-average makes T^h and T^-h equivalent
        deriv = shifted * np.conj(values)
        powers[h] = _recursive_power(deriv, moduli, k - 1)
    _ = neg_h
    return float(np.mean(powers))


def uk_recursive(f: Signal, k: int, profile: ToleranceProfile = DEFAULT) -> NormResult:
    """U^k norm by the derivative recursion.  FiniteAbelian, k >= 2."""
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("recursive backend requires a finite abelian domain")
    if k < 2:
        raise PreconditionError("recursive backend needs k >= 2; U^1 is |mean|")
    t0 = time.perf_counter()
    p = _recursive_power(f.values, dom.moduli, k)
    card = dom.cardinality
    work = int(card ** (k - 2) * (5 * card * max(math.log2(card), 1)))
    return NormResult(k, p ** (1.0 / 2**k), "recursive", work, time.perf_counter() - t0)


def u1_norm(f: Signal) -> float:
    """||f||_{U^1} = |E f| under the domain's normalised measure."""
    w = f.domain.point_weight
    return float(abs(np.sum(f.values) * w))


def uk_norm(f: Signal, k: int, backend: str = "auto", profile: ToleranceProfile = DEFAULT) -> NormResult:
    """Dispatch a U^k computation to the appropriate backend."""
    dom = f.domain
    if isinstance(dom, Interval):
        return uk_interval(f, k, profile=profile)
    if isinstance(dom, EuclideanGrid):
        return uk_grid(f, k, profile=profile)
    if backend == "direct":
        return uk_direct(f, k, profile)
    if backend == "fft":
        if k != 2:
            raise PreconditionError("fft backend computes U^2 only")
        return u2_fft(f, profile)
    if backend == "recursive":
        return uk_recursive(f, k, profile)
    if backend == "auto":
        if k == 1:
            t0 = time.perf_counter()
            return NormResult(1, u1_norm(f), "direct", dom.cardinality, time.perf_counter() - t0)
        if k == 2:
            return u2_fft(f, profile)
        return uk_recursive(f, k, profile)
    raise PreconditionError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# Gowers inner product


def gowers_inner(family: Sequence[Signal], profile: ToleranceProfile = DEFAULT) -> complex:
    """The 2^k-linear correlation form of a family indexed by {0,1}^k.

    Index bit j-1 of the family position is the cube coordinate w_j, and the
    entry at w is conjugated when |w| is odd.  With all entries equal to f
    this returns ||f||_{U^k}^{2^k}.
    """
    m = len(family)
    k = m.bit_length() - 1
    if 2**k != m or m < 2:
        raise PreconditionError(f"family size must be a power of two >= 2, got {m}")
    dom = family[0].domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("gowers_inner requires finite abelian signals")
    if any(g.domain != dom for g in family):
        raise DomainError("all family members must share one domain")
    card = dom.cardinality
    if float(card) ** (k + 1) > profile.direct_work_cap:
        raise WorkCapError("family correlation exceeds the direct work cap")
    arrays = [np.conj(g.values) if bin(w).count("1") % 2 else g.values for w, g in enumerate(family)]
    total = _direct_box_sum(arrays, dom.moduli, k)
    return complex(total / card ** (k + 1))


# ---------------------------------------------------------------------------
# interval norms


def _next_pow2(n: int) -> int:
    return 1 << max(int(n - 1).bit_length(), 0) if n > 1 else 1


def _raw2_batch(rows, lengths, out, fft_len, dtype=np.complex128):
    """Fill out[i] with the quadruple box sum of each compactly supported row.

    For g supported on s points, sum_{x,h1,h2 in Z} g(x) conj g(x+h1)
    conj g(x+h2) g(x+h1+h2) = (1/L) sum_j |DFT_L(g)(j)|^4 for any L >= 2s-1.
    """
    mat = np.zeros((len(rows), fft_len), dtype=dtype)
    for i, r in enumerate(rows):
        mat[i, : lengths[i]] = r
    spect = sfft.fft(mat, axis=1)
    power = spect.real.astype(np.float64) ** 2 + spect.imag.astype(np.float64) ** 2
    out += [float(v) / fft_len for v in np.sum(power * power, axis=1)]


def _interval_raw_power(vals: np.ndarray, k: int, dtype=np.complex128) -> float:
    """Unnormalised lattice box-sum power raw_k = sum over Z^{k+1} boxes.

    ||f||_{U^k([N])}^{2^k} equals raw_k(f) / raw_k(1_{[N]}): embedding the
    zero extension in any Z/N~ with N~ > 2^k N contributes a factor N~^{k+1}
    to both sums, which cancels.
    """
    n = len(vals)
    if n == 0:
        return 0.0
    if k == 1:
        return float(abs(np.sum(vals)) ** 2)
    if k == 2:
        out = []
        _raw2_batch([vals], [n], out, _next_pow2(2 * n - 1), dtype)
        return out[0]
    if k == 3:
        total = 0.0
        h = 0
        conj_vals = np.conj(vals)
        while h < n:
            s = n - h
            fft_len = _next_pow2(2 * s - 1)
            chunk = max(1, 4_000_000 // fft_len)
            rows, lengths, weights = [], [], []
            while h < n and _next_pow2(2 * (n - h) - 1) == fft_len and len(rows) < chunk:
                s = n - h
                rows.append(vals[:s] * conj_vals[h:])
                lengths.append(s)
                weights.append(1.0 if h == 0 else 2.0)  # raw_2(D_-h) = raw_2(D_h)
                h += 1
            out = []
            _raw2_batch(rows, lengths, out, fft_len, dtype)
            total += float(np.dot(weights, out))
        return total
    # k >= 4: plain recursion over the outermost shift
    total = _interval_raw_power(vals, k - 1, dtype)
    for h in range(1, n):
        total += 2.0 * _interval_raw_power(vals[: n - h] * np.conj(vals[h:]), k - 1, dtype)
    return total


def _interval_indicator_raw(n: int, k: int) -> float:
    """raw_k(1_{[n]}) by exact integer dynamic programming."""

    def raw(m: int, kk: int, cache={}) -> int:
        if m <= 0:
            return 0
        key = (m, kk)
        if key in cache:
            return cache[key]
        if kk == 1:
            v = m * m
        elif kk == 2:
            # sum_{|t| < m} (m - |t|)^2
            v = m * m + 2 * sum(t * t for t in range(1, m))
        else:
            v = raw(m, kk - 1) + 2 * sum(raw(m - h, kk - 1) for h in range(1, m))
        cache[key] = v
        return v

    return float(raw(n, k))


def uk_interval(
    f: Signal,
    k: int,
    profile: ToleranceProfile = DEFAULT,
    n_tilde: Optional[int] = None,
    precision: str = "double",
) -> NormResult:
    """U^k norm on the interval {1..N}.

    Default path evaluates the lattice box-sum ratio directly (equivalent to
    any embedding Z/N~ with N~ > 2^k N).  Passing ``n_tilde`` forces the
    explicit zero-extension embedding through the group engine, which is the
    cross-check used by the N~-independence tests.  ``precision="single"``
    runs the inner transforms in complex64 (value accurate to ~1e-5
    relative), intended for long-signal threshold experiments.
    """
    dom = f.domain
    if not isinstance(dom, Interval):
        raise DomainError("uk_interval requires an interval signal")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    if precision not in ("double", "single"):
        raise PreconditionError("precision must be 'double' or 'single'")
    dtype = np.complex128 if precision == "double" else np.complex64
    n = dom.length
    t0 = time.perf_counter()
    if n_tilde is not None:
        if n_tilde <= 2**k * n:
            raise PreconditionError(f"embedding needs N~ > 2^k N = {2 ** k * n}, got {n_tilde}")
        num = _embedded_norm_power(f.values, n_tilde, k)
        den = _embedded_norm_power(np.ones(n), n_tilde, k)
    else:
        num = _interval_raw_power(f.values, k, dtype)
        den = _interval_indicator_raw(n, k)
    value = (num / den) ** (1.0 / 2**k)
    return NormResult(k, value, "recursive", int(den), time.perf_counter() - t0)


def _embedded_norm_power(vals: np.ndarray, n_tilde: int, k: int) -> float:
    ext = np.zeros(n_tilde, dtype=complex)
    ext[1 : len(vals) + 1] = vals  # embed {1..N} at residues 1..N
    if k == 1:
        return float(abs(np.mean(ext)) ** 2)
    return _recursive_power(ext, (n_tilde,), k)


# ---------------------------------------------------------------------------
# Euclidean grids


def _grid_boundary_fraction(f: Signal) -> float:
    dom = f.domain
    view = np.abs(f.grid_view())
    total = float(np.sum(view))
    if total == 0:
        return 0.0
    inner = view
    for ax in range(dom.dim):
        inner = np.take(inner, np.arange(1, dom.points - 1), axis=ax)
    return float(total - np.sum(inner)) / total


def _grid_u2_power(values: np.ndarray, shape: tuple, weight: float) -> float:
    spect = np.abs(np.fft.fftn(values.reshape(shape)))
    spect *= spect
    card = values.size
    return weight**3 / card * float(np.sum(spect * spect))


def _grid_power(values: np.ndarray, shape: tuple, weight: float, k: int) -> float:
    if k == 1:
        return float(abs(np.sum(values) * weight) ** 2)
    if k == 2:
        return _grid_u2_power(values, shape, weight)
    if len(shape) == 1:
        m = shape[0]
        x = np.arange(m)
        if k == 3:
            deriv = values[np.mod(x[None, :] - x[:, None], m)] * np.conj(values)[None, :]
            spect = np.abs(np.fft.fft(deriv, axis=1))
            spect *= spect
            return weight**4 / m * float(np.sum(spect * spect))
        total = 0.0
        for h in range(m):
            deriv = np.roll(values, h) * np.conj(values)
            total += _grid_power(deriv, shape, weight, k - 1)
        return weight * total
    total = 0.0
    for shift in itertools.product(*[range(s) for s in shape]):
        deriv = (np.roll(values.reshape(shape), shift, axis=tuple(range(len(shape)))).reshape(-1)) * np.conj(values)
        total += _grid_power(deriv, shape, weight, k - 1)
    return weight * total


def uk_grid(f: Signal, k: int, profile: ToleranceProfile = DEFAULT, check_boundary: bool = True) -> NormResult:
    """Riemann-sum U^k norm on a periodised Euclidean grid."""
    dom = f.domain
    if not isinstance(dom, EuclideanGrid):
        raise DomainError("uk_grid requires a grid signal")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    card = dom.cardinality
    if float(card) ** max(k - 1, 1) * card > profile.direct_work_cap:
        raise WorkCapError("grid norm exceeds the work cap")
    if check_boundary:
        frac_b = _grid_boundary_fraction(f)
        if frac_b > profile.boundary_mass_tol:
            raise PreconditionError(
                f"boundary layer holds {frac_b:.2e} of the L1 mass; pad the signal before computing grid norms"
            )
    t0 = time.perf_counter()
    shape = (dom.points,) * dom.dim
    p = _grid_power(f.values, shape, dom.point_weight, k)
    work = int(card ** max(k - 2, 0) * 5 * card * max(math.log2(card), 1))
    return NormResult(k, p ** (1.0 / 2**k), "grid", work, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Gowers-Host-Kra orbit estimator


def _ghk_power(vals: np.ndarray, k: int, trunc: int) -> float:
    if k == 1:
        return float(abs(np.mean(vals)) ** 2)
    acc = 0.0
    for h in range(1, trunc + 1):
        acc += _ghk_power(vals[h:] * np.conj(vals[:-h]), k - 1, trunc)
    return acc / trunc


def ghk_orbit_estimate(orbit: Signal, k: int, schedule: Sequence[int]) -> GhkEstimate:
    """Truncated Gowers-Host-Kra seminorm estimates along an orbit sample.

    ``schedule`` lists increasing truncation radii H; each estimate applies
    its H at every level of the derivative recursion, with U^1 base |E_n f|.
    Convergence is reported (per-step differences and a log-log slope), never
    assumed.
    """
    if not isinstance(orbit.domain, Interval):
        raise DomainError("orbit samples must live on an interval domain")
    length = orbit.domain.length
    schedule = [int(h) for h in schedule]
    if not schedule or any(h < 1 for h in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise PreconditionError("schedule must be a strictly increasing list of positive truncations")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    if schedule[-1] > length // 2**k:
        raise PreconditionError(f"truncation {schedule[-1]} exceeds L / 2^k = {length // 2 ** k}")
    estimates = []
    for trunc in schedule:
        estimates.append(_ghk_power(orbit.values, k, trunc) ** (1.0 / 2**k))
    diffs = [abs(b - a) for a, b in zip(estimates, estimates[1:])]
    slope = None
    if len(diffs) >= 2 and all(d > 0 for d in diffs):
        slope = float(np.polyfit(np.log(schedule[1:]), np.log(diffs), 1)[0])
    monotone = all(b <= a + 1e-15 for a, b in zip(diffs, diffs[1:])) if diffs else True
    return GhkEstimate(k, tuple(schedule), tuple(estimates), estimates[-1], slope, monotone)


# ---------------------------------------------------------------------------
# benchmarking


def bench_backends(sizes: Sequence[int], k: int, seed: int = 0, profile: ToleranceProfile = DEFAULT):
    """Time the direct and recursive backends on random signals.

    Returns CSV-ready rows (size, backend, k, elapsed_s, work).
    """
    rows = []
    rng = np.random.Generator(np.random.Philox(seed))
    for n in sizes:
        vals = rng.normal(size=n) + 1j * rng.normal(size=n)
        f = Signal(FiniteAbelian((int(n),)), vals)
        for backend, fn in (("direct", uk_direct), ("recursive", uk_recursive)):
            try:
                res = fn(f, k, profile)
            except WorkCapError:
                continue
            rows.append({"size": int(n), "backend": backend, "k": k, "elapsed_s": res.elapsed, "work": res.work_count})
    return rows
