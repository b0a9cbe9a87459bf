"""Threshold witnesses: Heisenberg nilsequences, fractional quadratic
examples, and quadratic correlation scanning.

The Heisenberg construction samples an orbit of the group law
(x1, x2, z)(x1', x2', z') = (x1 + x1', x2 + x2', z + z' + x1' x2) against a
Zak-style window f(x1, x2, z) = e(z) sum_k F0(x1 + k) e(k x2) with a Gaussian
window F0.  Along the orbit of (a1, a2, 0) the coordinates are
(n a1, n a2, binom(n, 2) a1 a2); the k-sum makes the evaluation invariant
under integer shifts of x1 (certified numerically), so the sequence is a
genuine function on the compact quotient.  Its U^3/L^2 ratio approaches the
sharp Euclidean constant 2^{-1/8} while correlating with no short quadratic
phase, which is the threshold phenomenon the scan makes visible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft

from .config import DEFAULT, ToleranceProfile
from .domains import FiniteAbelian, Interval, Signal, frac, lp_norm
from .engine import uk_interval, uk_norm
from .errors import DomainError, PreconditionError

GOLDEN = (math.sqrt(5) - 1) / 2
SILVER = math.sqrt(2) - 1


@dataclass(frozen=True)
class HeisenbergSpec:
    """Parameters of the Heisenberg orbit sample.

    alpha1 = alpha2 would confine the horizontal orbit to a diagonal, so the
    defaults pair two badly approximable numbers that are rationally
    independent together with 1.
    """

    alpha1: float = GOLDEN
    alpha2: float = SILVER
    sigma: float = 1.0
    k_cut: int = 6
    n_samples: int = 65536
    partial_quotient_cap: int = 64

    def tail_mass(self) -> float:
        # window mass beyond the truncation radius, relative to the peak
        t = (self.k_cut - 1) / self.sigma
        return float(math.erfc(math.sqrt(math.pi) * t) * self.sigma)

    def validate(self):
        if not (0 < self.alpha1 < 1 and 0 < self.alpha2 < 1):
            raise PreconditionError("frequencies must lie in (0, 1)")
        if self.tail_mass() >= 1e-10:
            raise PreconditionError(f"window tail {self.tail_mass():.2e} beyond k_cut exceeds 1e-10; raise k_cut")
        for a in (self.alpha1, self.alpha2):
            quotients = continued_fraction_quotients(a, 20)
            if max(quotients[1:], default=1) > self.partial_quotient_cap:
                raise PreconditionError(f"frequency {a} has a partial quotient above {self.partial_quotient_cap}; pick a badly approximable value")


def continued_fraction_quotients(x: float, depth: int):
    out = []
    for _ in range(depth):
        a = math.floor(x)
        out.append(int(a))
        rem = x - a
        if rem < 1e-12:
            break
        x = 1.0 / rem
    return out


def _window_sum(spec: HeisenbergSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """sum_k F0(x1 + k) e(k x2) truncated to |x1 + k| <= k_cut."""
    base = -np.round(x1)
    acc = np.zeros(len(x1), dtype=complex)
    for off in range(-spec.k_cut, spec.k_cut + 1):
        k = base + off
        acc += np.exp(-np.pi * ((x1 + k) / spec.sigma) ** 2) * np.exp(2j * np.pi * frac(k * x2))
    return acc


def heisenberg_nilsequence(spec: HeisenbergSpec) -> Signal:
    """Sample f along the orbit: f(n) = e(z_n) sum_k F0(n a1 + k) e(k n a2).

    z_n = binom(n, 2) a1 a2 comes from iterating the group law.  The
    truncation certificate (window tail below 1e-10) is enforced by the spec
    validation.
    """
    spec.validate()
    n = np.arange(1, spec.n_samples + 1, dtype=np.int64)
    x1 = n * spec.alpha1
    x2 = frac(n.astype(float) * spec.alpha2)
    z = frac((n * (n - 1) // 2).astype(float) * (spec.alpha1 * spec.alpha2))
    vals = np.exp(2j * np.pi * z) * _window_sum(spec, x1, x2)
    return Signal(Interval(spec.n_samples), vals)


def heisenberg_invariance_defect(spec: HeisenbergSpec, samples: int = 100, seed: int = 0) -> float:
    """Max deviation of the Zak-window identity w(x1+1, x2) = e(-x2) w(x1, x2)
    over random points: the numerical certificate that the evaluation is a
    function on the quotient."""
    rng = np.random.Generator(np.random.Philox(seed))
    x1 = rng.uniform(-3, 3, samples)
    x2 = rng.uniform(0, 1, samples)
    lhs = _window_sum(spec, x1 + 1.0, x2) * np.exp(2j * np.pi * x2)
    rhs = _window_sum(spec, x1, x2)
    return float(np.max(np.abs(lhs - rhs)))


def window_l2_norm(spec: HeisenbergSpec) -> float:
    """||F0||_{L^2(R)} for the Gaussian window: (sigma^2 / 2)^{1/4}."""
    return (spec.sigma**2 / 2.0) ** 0.25


# ---------------------------------------------------------------------------
# fractional quadratic example


def quadratic_example(n: int, q: int) -> Signal:
    """f(m) = e(m^2 / (q n)) on Z/n for the canonical representatives m < n.

    For q > 1 this is not a polynomial phase on Z/n (well-definedness fails);
    it is stored as a raw signal.
    """
    if n < 1 or q < 1:
        raise PreconditionError("need n, q >= 1")
    m = np.arange(n, dtype=np.int64)
    return Signal(FiniteAbelian((n,)), np.exp(2j * np.pi * frac((m * m).astype(float) / (q * n))))


def skew_shift_orbit(alpha: float, x0: float, y0: float, n_samples: int) -> Signal:
    """Samples e(y_n) of the skew product (x, y) -> (x + alpha, y + x):
    y_n = y0 + n x0 + binom(n, 2) alpha."""
    if not 0 <= alpha < 1:
        raise PreconditionError("alpha must lie in [0, 1)")
    n = np.arange(1, n_samples + 1, dtype=np.int64)
    y = frac(y0 + n.astype(float) * x0 + frac((n * (n - 1) // 2).astype(float) * alpha))
    return Signal(Interval(n_samples), np.exp(2j * np.pi * y))


# ---------------------------------------------------------------------------
# quadratic correlation scan


@dataclass(frozen=True)
class ScanResult:
    denominator: int
    max_abs: float
    argmax: tuple  # (a, b), deterministic smallest-pair tie-break
    l2_norm: float
    count: int
    histogram_edges: tuple
    histogram_counts: tuple

    def to_json(self) -> dict:
        return {
            "denominator": self.denominator,
            "max_abs": self.max_abs,
            "argmax_a": self.argmax[0],
            "argmax_b": self.argmax[1],
            "l2_norm": self.l2_norm,
            "count": self.count,
            "histogram_edges": list(self.histogram_edges),
            "histogram_counts": list(self.histogram_counts),
        }


def quad_correlation_scan(
    f: Signal,
    denominator: int,
    profile: ToleranceProfile = DEFAULT,
    threads: int = 1,
) -> ScanResult:
    """Max normalised correlation |< f, e((a n^2 + b n)/D) >| over a, b < D.

    For each a the b-sweep is a single length-lcm(M, D) transform of
    f(n) e(-a n^2 / D); the constant term only rotates the inner product and
    is omitted.  Ties resolve to the smallest (a, b).
    """
    dom = f.domain
    if isinstance(dom, FiniteAbelian) and len(dom.moduli) == 1:
        points = np.arange(dom.cardinality, dtype=np.int64)
    elif isinstance(dom, Interval):
        points = np.arange(1, dom.length + 1, dtype=np.int64)
    else:
        raise DomainError("scan supports cyclic-group and interval signals")
    if denominator < 1 or denominator > profile.scan_denominator_cap:
        raise PreconditionError(
            f"denominator {denominator} outside 1..{profile.scan_denominator_cap}; sweep a coarser grid"
        )
    m = len(points)
    lcm = math.lcm(m, denominator)
    step = lcm // denominator
    sq = (points * points).astype(np.float64)
    bins = np.linspace(0.0, 1.0, 25)

    def scan_range(a_values):
        best = (-1.0, (0, 0))
        counts = np.zeros(len(bins) - 1, dtype=np.int64)
        for a in a_values:
            g = f.values * np.exp(-2j * np.pi * frac(a * sq / denominator))
            spect = np.abs(sfft.fft(g, lcm)[::step]) / m
            b = int(np.argmax(spect))
            val = float(spect[b])
            if val > best[0]:
                best = (val, (int(a), b))
            counts += np.histogram(np.minimum(spect, 1.0), bins=bins)[0]
        return best, counts

    chunks = np.array_split(np.arange(denominator), max(1, threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan_range, [c for c in chunks if len(c)]))
    else:
        results = [scan_range(c) for c in chunks if len(c)]
    counts = np.zeros(len(bins) - 1, dtype=np.int64)
    best_val, best_arg = -1.0, (0, 0)
    for (val, arg), cnt in results:  # chunk order fixed: deterministic argmax
        counts += cnt
        if val > best_val:
            best_val, best_arg = val, arg
    return ScanResult(
        denominator,
        best_val,
        best_arg,
        lp_norm(f, 2),
        denominator * denominator,
        tuple(float(x) for x in bins),
        tuple(int(x) for x in counts),
    )


# ---------------------------------------------------------------------------
# threshold sweep


def threshold_sweep(config: dict, seed: int = 0, profile: ToleranceProfile = DEFAULT):
    """Rows of (construction, params, U^3/L^2 ratio, max quad correlation).

    ``config`` maps construction names to parameter-dict lists; supported
    constructions: ``planted-quadratic`` (n, a, b), ``heisenberg``
    (n_samples, sigma, denominator), ``random`` (n, denominator).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    rows = []
    for name, instances in config.items():
        for params in instances:
            if name == "planted-quadratic":
                n, a, b = params["n"], params["a"], params["b"]
                f = Signal(
                    FiniteAbelian((n,)),
                    np.exp(2j * np.pi * frac((a * np.arange(n) ** 2 + b * np.arange(n)).astype(float) / n)),
                )
                denom = params.get("denominator", n)
            elif name == "heisenberg":
                spec = HeisenbergSpec(
                    n_samples=params.get("n_samples", 4096),
                    sigma=params.get("sigma", 1.0),
                )
                f = heisenberg_nilsequence(spec)
                denom = params.get("denominator", 256)
            elif name == "random":
                n = params["n"]
                f = Signal(FiniteAbelian((n,)), np.exp(2j * np.pi * rng.random(n)))
                denom = params.get("denominator", n)
            else:
                raise PreconditionError(f"unknown construction {name!r}")
            if isinstance(f.domain, Interval):
                ratio = uk_interval(f, 3, profile).value / lp_norm(f, 2)
            else:
                ratio = uk_norm(f, 3, profile=profile).value / lp_norm(f, 2)
            scan = quad_correlation_scan(f, denom, profile)
            rows.append(
                {
                    "construction": name,
                    "params": ";".join(f"{k}={v}" for k, v in sorted(params.items())),
                    "u3_ratio": ratio,
                    "max_corr": scan.max_abs,
                    "argmax_a": scan.argmax[0],
                    "argmax_b": scan.argmax[1],
                }
            )
    return rows
