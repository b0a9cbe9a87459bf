"""Domains, signals, polynomial phases, and Fourier transforms.

Three domain variants are supported:

* ``FiniteAbelian(moduli)``: the product Z/n_1 x ... x Z/n_r with normalised
  counting measure (total mass 1).  Elements are flat indices in mixed-radix
  row-major order, so index 0 is the identity and reshaping a value array to
  ``moduli`` aligns axis i with coordinate i.
* ``Interval(length)``: the discrete interval {1, ..., N} with normalised
  counting measure.  Index i holds the value at n = i + 1.  Intervals are not
  groups: shifts require an explicit cyclic embedding and raise otherwise.
* ``EuclideanGrid(dim, extent, points)``: m uniform points per axis on
  [-L, L)^dim with cell-volume measure (2L/m)^dim, a periodised Riemann
  approximation of Euclidean space.  Translation wraps around; callers must
  pad compactly supported signals (>= 4 sigma for Gaussians) so wraparound is
  negligible.

The dual of a finite abelian group is identified with the group itself via
the pairing xi . x = sum_i xi_i x_i / n_i, fixed once here.  Dual-side
signals carry counting measure (weight 1 per character), marked by
``FiniteAbelian.dual``.

R/Z values are represented in [0, 1); ``center`` lifts to (-1/2, 1/2] where a
small representative is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .config import DEFAULT, ToleranceProfile
from .errors import DomainError, PolyRejection, PreconditionError


# ---------------------------------------------------------------------------
# domain descriptors


@dataclass(frozen=True)
class FiniteAbelian:
    moduli: tuple
    dual: bool = False

    def __post_init__(self):
        mods = tuple(int(n) for n in self.moduli)
        if not mods or any(n < 1 for n in mods):
            raise DomainError(f"moduli must be integers >= 1, got {self.moduli}")
        object.__setattr__(self, "moduli", mods)

    @property
    def cardinality(self) -> int:
        return int(np.prod(self.moduli, dtype=object))

    @property
    def point_weight(self) -> float:
        return 1.0 if self.dual else 1.0 / self.cardinality


@dataclass(frozen=True)
class Interval:
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise DomainError(f"interval length must be >= 1, got {self.length}")

    @property
    def cardinality(self) -> int:
        return self.length

    @property
    def point_weight(self) -> float:
        return 1.0 / self.length


@dataclass(frozen=True)
class EuclideanGrid:
    dim: int
    extent: float
    points: int

    def __post_init__(self):
        if self.dim < 1 or self.points < 2 or self.extent <= 0:
            raise DomainError(f"invalid grid parameters dim={self.dim} extent={self.extent} points={self.points}")

    @property
    def cardinality(self) -> int:
        return self.points**self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points

    @property
    def point_weight(self) -> float:
        return self.spacing**self.dim

    def axis_coordinates(self) -> np.ndarray:
        return -self.extent + self.spacing * np.arange(self.points)


DomainSpec = Union[FiniteAbelian, Interval, EuclideanGrid]


def domain_to_json(domain: DomainSpec) -> dict:
    if isinstance(domain, FiniteAbelian):
        d = {"kind": "finite_abelian", "moduli": list(domain.moduli)}
        if domain.dual:
            d["dual"] = True
        return d
    if isinstance(domain, Interval):
        return {"kind": "interval", "length": domain.length}
    if isinstance(domain, EuclideanGrid):
        return {"kind": "grid", "dim": domain.dim, "extent": domain.extent, "points": domain.points}
    raise DomainError(f"unknown domain {domain!r}")


def domain_from_json(d: dict) -> DomainSpec:
    kind = d.get("kind")
    if kind == "finite_abelian":
        return FiniteAbelian(tuple(d["moduli"]), dual=bool(d.get("dual", False)))
    if kind == "interval":
        return Interval(int(d["length"]))
    if kind == "grid":
        return EuclideanGrid(int(d["dim"]), float(d["extent"]), int(d["points"]))
    raise DomainError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# index arithmetic on finite abelian groups

_TABLE_CAP = 5_000_000  # entries; add tables above this are refused


@lru_cache(maxsize=32)
def _coordinates(moduli: tuple) -> np.ndarray:
    """(|G|, r) array of coordinate tuples in row-major index order."""
    grids = np.meshgrid(*[np.arange(n) for n in moduli], indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


@lru_cache(maxsize=16)
def add_table(moduli: tuple) -> np.ndarray:
    """ADD[i, j] = flat index of element i + element j."""
    card = int(np.prod(moduli, dtype=object))
    if card * card > _TABLE_CAP:
        raise DomainError(f"group of order {card} too large for a dense addition table")
    coords = _coordinates(moduli)
    mods = np.asarray(moduli)
    summed = (coords[:, None, :] + coords[None, :, :]) % mods
    return np.ravel_multi_index(tuple(summed[..., i] for i in range(len(moduli))), moduli).astype(np.intp)


@lru_cache(maxsize=32)
def neg_table(moduli: tuple) -> np.ndarray:
    """NEG[i] = flat index of -element i."""
    coords = _coordinates(moduli)
    mods = np.asarray(moduli)
    neg = (-coords) % mods
    return np.ravel_multi_index(tuple(neg[:, i] for i in range(len(moduli))), moduli).astype(np.intp)


def element_tuple(domain: FiniteAbelian, index: int) -> tuple:
    return tuple(int(v) for v in _coordinates(domain.moduli)[index])


def add_elements(domain: FiniteAbelian, i: int, j: int) -> int:
    coords = _coordinates(domain.moduli)
    mods = np.asarray(domain.moduli)
    s = (coords[i] + coords[j]) % mods
    return int(np.ravel_multi_index(tuple(s), domain.moduli))


def neg_element(domain: FiniteAbelian, i: int) -> int:
    return int(neg_table(domain.moduli)[i])


# ---------------------------------------------------------------------------
# signals


@dataclass(frozen=True, eq=False)
class Signal:
    domain: DomainSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if vals.shape != (self.domain.cardinality,):
            raise DomainError(
                f"value array of shape {vals.shape} does not match domain cardinality {self.domain.cardinality}"
            )
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise DomainError("signal values must be finite")
        object.__setattr__(self, "values", vals)

    def grid_view(self) -> np.ndarray:
        """Values reshaped to the domain's natural multi-axis shape."""
        if isinstance(self.domain, FiniteAbelian):
            return self.values.reshape(self.domain.moduli)
        if isinstance(self.domain, EuclideanGrid):
            return self.values.reshape((self.domain.points,) * self.domain.dim)
        return self.values


def signal_to_json(f: Signal) -> dict:
    return {
        "domain": domain_to_json(f.domain),
        "values": [[float(v.real), float(v.imag)] for v in f.values],
    }


def signal_from_json(d: dict) -> Signal:
    vals = np.array([complex(re, im) for re, im in d["values"]])
    return Signal(domain_from_json(d["domain"]), vals)


# ---------------------------------------------------------------------------
# R/Z helpers


def frac(x):
    """Canonical representative in [0, 1)."""
    return np.mod(x, 1.0)


def center(x):
    """Representative in (-1/2, 1/2]."""
    y = np.mod(x, 1.0)
    return np.where(y > 0.5, y - 1.0, y) if isinstance(y, np.ndarray) else (y - 1.0 if y > 0.5 else y)


def circle_dist(a, b=0.0):
    """Distance on R/Z."""
    return np.abs(center(np.asarray(a, dtype=float) - b))


def e(x):
    """e(x) = exp(2 pi i x)."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# shifts and derivatives


def translate(f: Signal, h) -> Signal:
    """T^h f with T^h f(x) = f(x - h).

    Group domains take a flat element index (or coordinate tuple); grids take
    a lattice vector and wrap periodically.  Intervals are not shiftable
    without an explicit cyclic embedding and raise DomainError.
    """
    dom = f.domain
    if isinstance(dom, FiniteAbelian):
        if isinstance(h, (tuple, list)):
            h = int(np.ravel_multi_index(tuple(np.mod(h, dom.moduli)), dom.moduli))
        h = int(h) % dom.cardinality
        if len(dom.moduli) == 1:
            shifted = np.roll(f.values, h)
        else:
            coords = _coordinates(dom.moduli)[h]
            shifted = np.roll(f.grid_view(), tuple(coords), axis=tuple(range(len(dom.moduli)))).reshape(-1)
        return Signal(dom, shifted)
    if isinstance(dom, EuclideanGrid):
        vec = np.atleast_1d(np.asarray(h, dtype=int))
        if vec.shape != (dom.dim,):
            raise DomainError(f"grid shift must be a lattice vector of length {dom.dim}")
        shifted = np.roll(f.grid_view(), tuple(int(v) for v in vec), axis=tuple(range(dom.dim)))
        return Signal(dom, shifted.reshape(-1))
    raise DomainError("intervals shift only inside an explicit Z/N~Z embedding; use lift/embedding helpers")


def mult_derivative(f: Signal, h) -> Signal:
    """Multiplicative derivative (T^h f) * conj(f)."""
    return Signal(f.domain, translate(f, h).values * np.conj(f.values))


def lp_norm(f: Signal, p) -> float:
    """Measure-aware L^p norm; p = inf gives the sup norm."""
    if p == math.inf or p == "inf":
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    p = float(p)
    if p <= 0:
        raise PreconditionError(f"L^p norm needs p > 0, got {p}")
    w = f.domain.point_weight
    return float(np.sum(np.abs(f.values) ** p * w) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Fourier transforms on finite abelian groups


def fourier(f: Signal, check_plancherel: bool = True, profile: ToleranceProfile = DEFAULT) -> Signal:
    """Fourier transform f^(xi) = E_x f(x) e(-xi.x) on the dual group.

    The dual carries counting measure, so Plancherel reads
    sum_xi |f^(xi)|^2 = ||f||_{L^2}^2; it is asserted to ``plancherel_tol``
    relative unless disabled.
    """
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("fourier transform requires a finite abelian domain")
    if dom.dual:
        raise DomainError("signal already lives on a dual group; use fourier_inverse")
    card = dom.cardinality
    fhat = (np.fft.fftn(f.grid_view()) / card).reshape(-1)
    out = Signal(FiniteAbelian(dom.moduli, dual=True), fhat)
    if check_plancherel:
        lhs = float(np.sum(np.abs(fhat) ** 2))
        rhs = lp_norm(f, 2) ** 2
        scale = max(lhs, rhs, 1e-300)
        if abs(lhs - rhs) > profile.plancherel_tol * scale:
            raise AssertionError(f"Plancherel identity violated: {lhs} vs {rhs}")
    return out


def fourier_inverse(fhat: Signal) -> Signal:
    """Inverse of :func:`fourier`: f(x) = sum_xi f^(xi) e(+xi.x)."""
    dom = fhat.domain
    if not (isinstance(dom, FiniteAbelian) and dom.dual):
        raise DomainError("fourier_inverse expects a dual-group signal")
    card = dom.cardinality
    vals = (np.fft.ifftn(fhat.grid_view()) * card).reshape(-1)
    return Signal(FiniteAbelian(dom.moduli, dual=False), vals)


def character(domain: FiniteAbelian, xi) -> Signal:
    """The character x -> e(xi.x) as a signal."""
    table = character_phase_table(domain, xi)
    return Signal(domain, e(table))


def character_phase_table(domain: FiniteAbelian, xi) -> np.ndarray:
    if isinstance(xi, (int, np.integer)):
        xi = element_tuple(domain, int(xi) % domain.cardinality)
    coords = _coordinates(domain.moduli)
    mods = np.asarray(domain.moduli, dtype=float)
    return frac(coords @ (np.asarray(xi, dtype=float) / mods))


# ---------------------------------------------------------------------------
# polynomial phases


@dataclass(frozen=True, eq=False)
class PolyPhase:
    """A polynomial map P: domain -> R/Z of bounded degree.

    ``table`` holds canonical representatives in [0, 1), one per domain
    element.  For cyclic and interval domains, ``coeffs`` optionally holds the
    Newton coefficients c_i in the binomial basis
    P(n) = sum_i c_i binom(n, i) mod 1.
    """

    domain: DomainSpec
    degree: int
    table: np.ndarray = field(repr=False)
    coeffs: Optional[tuple] = None

    def __post_init__(self):
        t = frac(np.ascontiguousarray(self.table, dtype=float))
        if t.shape != (self.domain.cardinality,):
            raise DomainError("phase table length must equal domain cardinality")
        object.__setattr__(self, "table", t)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "coeffs": list(self.coeffs) if self.coeffs is not None else None,
            "table": [float(v) for v in self.table],
        }


def _binom_vector(n_values: np.ndarray, i: int) -> np.ndarray:
    """binom(n, i) for integer n (possibly negative), exact in float for desk sizes."""
    out = np.ones_like(n_values, dtype=float)
    for j in range(i):
        out = out * (n_values - j) / (j + 1)
    return out


def poly_table_from_coeffs(domain: DomainSpec, coeffs: Sequence[float]) -> np.ndarray:
    """Evaluate sum_i c_i binom(n, i) mod 1 on the domain's integer points."""
    if isinstance(domain, FiniteAbelian):
        if len(domain.moduli) != 1:
            raise DomainError("binomial coefficients only apply to cyclic domains")
        n = np.arange(domain.cardinality)
    elif isinstance(domain, Interval):
        n = np.arange(1, domain.length + 1)
    else:
        raise DomainError("binomial coefficients only apply to cyclic or interval domains")
    total = np.zeros(len(n), dtype=float)
    for i, c in enumerate(coeffs):
        total += frac(float(c) * _binom_vector(n, i))
    return frac(total)


def max_difference_defect(table: np.ndarray, domain: DomainSpec, degree: int) -> float:
    """Maximal (degree+1)-fold difference of ``table`` (distance to 0 mod 1).

    Differences run along each group generator (equivalently, all directions,
    by the expansion of a general shift into generator steps) and along +1 on
    intervals where the stencil fits.
    """
    d = degree + 1
    if isinstance(domain, FiniteAbelian):
        arr = table.reshape(domain.moduli)
        worst = 0.0
        axes = range(len(domain.moduli))
        # iterate over multisets of d generators
        def rec(start_axis, current, depth):
            nonlocal worst
            if depth == d:
                worst = max(worst, float(np.max(circle_dist(current))) if current.size else 0.0)
                return
            for ax in range(start_axis, len(domain.moduli)):
                rec(ax, np.roll(current, 1, axis=ax) - current, depth + 1)

        rec(0, arr, 0)
        return worst
    if isinstance(domain, Interval):
        cur = table.astype(float)
        for _ in range(d):
            cur = cur[:-1] - cur[1:] if cur.size > 1 else np.array([])
        # paper convention Delta_h P(x) = P(x-h) - P(x); sign is immaterial here
        return float(np.max(circle_dist(cur))) if cur.size else 0.0
    raise DomainError("difference test supports group and interval domains")


def poly_from_table(
    table: np.ndarray,
    domain: DomainSpec,
    degree: int,
    profile: ToleranceProfile = DEFAULT,
) -> PolyPhase:
    """Certify a value table as a polynomial phase of the given degree.

    Accepts iff all (degree+1)-fold differences vanish mod 1 within
    ``tau_poly``; raises :class:`PolyRejection` carrying the maximal defect
    otherwise.  On cyclic and interval domains the Newton coefficients
    c_i = (forward difference)^i P at the base point are extracted as
    metadata.
    """
    table = frac(np.ascontiguousarray(table, dtype=float))
    if table.shape != (domain.cardinality,):
        raise DomainError("table length must equal domain cardinality")
    defect = max_difference_defect(table, domain, degree)
    if defect > profile.tau_poly:
        raise PolyRejection(defect)
    coeffs = None
    if isinstance(domain, Interval) or (isinstance(domain, FiniteAbelian) and len(domain.moduli) == 1):
        coeffs = tuple(newton_coefficients(table, degree))
    return PolyPhase(domain, degree, table, coeffs)


def newton_coefficients(table: np.ndarray, degree: int) -> list:
    """c_i = i-th forward difference of the table at the base point, mod 1."""
    coeffs = []
    cur = center(np.asarray(table, dtype=float))
    for _ in range(degree + 1):
        coeffs.append(float(frac(cur[0])) if cur.size else 0.0)
        cur = center(cur[1:] - cur[:-1]) if cur.size > 1 else np.array([])
    return coeffs


def phase_signal(phase: PolyPhase, c: complex = 1.0) -> Signal:
    """The signal c * e(P(x))."""
    return Signal(phase.domain, c * e(phase.table))


# ---------------------------------------------------------------------------
# cosets


@dataclass(frozen=True)
class CosetDescriptor:
    """A coset x0 + H0 of a subgroup H0 in a finite abelian group.

    ``elements`` lists the subgroup members (sorted flat indices); ``offset``
    is the coset representative x0.
    """

    domain: FiniteAbelian
    elements: tuple
    offset: int

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(sorted(int(v) for v in self.elements)))

    def validate(self):
        """Exhaustively check the subgroup axioms; raises DomainError."""
        elems = set(self.elements)
        if 0 not in elems:
            raise DomainError("subgroup must contain the identity")
        add = add_table(self.domain.moduli)
        neg = neg_table(self.domain.moduli)
        for a in elems:
            if int(neg[a]) not in elems:
                raise DomainError(f"subgroup not closed under negation at {a}")
            for b in elems:
                if int(add[a, b]) not in elems:
                    raise DomainError(f"subgroup not closed under addition at {a}+{b}")
        if self.domain.cardinality % len(elems) != 0:
            raise DomainError("subgroup order must divide the group order")

    def coset_elements(self) -> tuple:
        add = add_table(self.domain.moduli)
        return tuple(sorted(int(add[self.offset, h]) for h in self.elements))


# ---------------------------------------------------------------------------
# enumeration of cyclic polynomial maps


def cyclic_polynomial_coefficients(n: int, degree: int):
    """All binomial-basis coefficient tuples (c_1..c_degree) of polynomial
    maps Z/n -> R/Z of the given degree, modulo constants.

    Well-definedness of sum_i c_i binom(x, i) on Z/n is the triangular system
    sum_{i > j} c_i binom(n, i - j) = 0 mod 1 for j = 0..degree-1; each level
    leaves exactly n choices, so n^degree tuples are produced.
    """
    results = []

    def rec(partial: dict, j: int):
        if j < 0:
            results.append(tuple(partial.get(i, 0.0) for i in range(1, degree + 1)))
            return
        rem = sum(partial[i] * math.comb(n, i - j) for i in range(j + 2, degree + 1))
        for t in range(n):
            rec({**partial, j + 1: float(frac((t - rem) / n))}, j - 1)

    rec({}, degree - 1)
    return results


def random_cyclic_polynomial(n: int, degree: int, rng: np.random.Generator) -> PolyPhase:
    """A uniformly random polynomial phase of the given degree on Z/n."""
    partial: dict = {}
    for j in range(degree - 1, -1, -1):
        rem = sum(partial[i] * math.comb(n, i - j) for i in range(j + 2, degree + 1))
        t = int(rng.integers(n))
        partial[j + 1] = float(frac((t - rem) / n))
    coeffs = (float(frac(rng.random())),) + tuple(partial.get(i, 0.0) for i in range(1, degree + 1))
    dom = FiniteAbelian((n,))
    return PolyPhase(dom, degree, poly_table_from_coeffs(dom, coeffs), coeffs)


# ---------------------------------------------------------------------------
# interval lifting


def lift_to_extension(f: Signal, q: int) -> Signal:
    """Lift f on Z/N to g on Z/qN by g(n) = f(n mod N).

    Preserves the L^2 norm under the normalised measures.
    """
    dom = f.domain
    if not (isinstance(dom, FiniteAbelian) and len(dom.moduli) == 1):
        raise DomainError("lift_to_extension expects a cyclic-group signal")
    if q < 1:
        raise PreconditionError(f"extension factor must be >= 1, got {q}")
    n = dom.moduli[0]
    return Signal(FiniteAbelian((q * n,)), np.tile(f.values, q))
