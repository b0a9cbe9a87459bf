"""Inverse Hoelder/Young pipeline: locate the coset carrying a near-extremal
L^{p_k}-normalised signal, then hand the restricted phase to the group
decoder.

Pipeline: level sets of |f| give a candidate support H; the shifts under
which H is almost invariant form a set K; when the difference set K - K is
small (measure below 3/2 of K) it is verified to be a subgroup, and the coset
of maximal |f|^{p_k} mass is selected.  Restricting, renormalising and
translating reduces phase recovery to the sup-normalised decoder on the
subgroup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULT, ToleranceProfile
from .decoder import DecodeReport, decode_group
from .domains import (
    CosetDescriptor,
    FiniteAbelian,
    PolyPhase,
    Signal,
    add_table,
    e,
    lp_norm,
    neg_table,
)
from .engine import critical_exponent, uk_norm
from .errors import CosetFailure, DomainError, GowersLabError, PreconditionError


@dataclass(frozen=True, eq=False)
class CosetReport:
    coset: CosetDescriptor
    magnitude_residual: float
    phase: PolyPhase
    c: complex
    total_residual: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "subgroup": list(self.coset.elements),
            "offset": self.coset.offset,
            "magnitude_residual": self.magnitude_residual,
            "phase": self.phase.to_json(),
            "c": [self.c.real, self.c.imag],
            "total_residual": self.total_residual,
            "diagnostics": {k: (v if not isinstance(v, np.generic) else v.item()) for k, v in self.diagnostics.items()},
        }


@dataclass(frozen=True)
class HolderMatch:
    exceptional: tuple  # indices of the exceptional set E
    constants: tuple  # c_i with c_i f_i^{p_i} matched off E
    band: float  # worst multiplicative deviation |log ratio| off E
    mass_fractions: tuple  # int_E f_i^{p_i} / ||f_i||^{p_i}


# ---------------------------------------------------------------------------
# measure-theoretic splitting


def markov_split(f: Signal, g: Signal, eps: float):
    """Split off the set where g exceeds sqrt(eps) f.

    Requires f, g nonnegative with int g <= eps int f.  Returns
    (E, certificates) where E is the index set {x : g(x) > sqrt(eps) f(x)},
    certified to satisfy int_E f < sqrt(eps) int f, and g <= sqrt(eps) f off
    E.  Both certificates are checked exactly on the finite domain.
    """
    if f.domain != g.domain:
        raise DomainError("markov_split needs signals on a common domain")
    fv, gv = f.values.real, g.values.real
    if np.any(f.values.imag != 0) or np.any(g.values.imag != 0) or np.any(fv < 0) or np.any(gv < 0):
        raise PreconditionError("markov_split expects nonnegative real signals")
    w = f.domain.point_weight
    int_f = float(np.sum(fv) * w)
    int_g = float(np.sum(gv) * w)
    if int_g > eps * int_f:
        raise PreconditionError(f"int g = {int_g:.3e} exceeds eps * int f = {eps * int_f:.3e} (ratio {int_g / max(int_f, 1e-300):.3e})")
    root = math.sqrt(eps)
    mask = gv > root * fv
    E = np.flatnonzero(mask)
    mass_E = float(np.sum(fv[mask]) * w)
    cert = {
        "mass_on_E": mass_E,
        "mass_bound": root * int_f,
        "mass_ok": bool(mass_E <= root * int_f),
        "pointwise_ok": bool(np.all(gv[~mask] <= root * fv[~mask] + 1e-15)),
    }
    if not (cert["mass_ok"] and cert["pointwise_ok"]):
        raise GowersLabError("markov_split certificates failed; this indicates a bug")
    return E, cert


def _holder_pair(u: np.ndarray, v: np.ndarray, q1: float, q2: float, weight: float, eps: float):
    """Two-factor near-equality analysis with conjugate exponents q1, q2.

    u, v are nonnegative and L^{q1}/L^{q2}-normalised.  Returns (mask of the
    exceptional set, band) so that u^{q1} and v^{q2} agree multiplicatively
    off the set.
    """
    base = u**q1 / q1 + v**q2 / q2
    defect = base - u * v  # pointwise >= 0 by weighted AM-GM
    int_base = float(np.sum(base) * weight)
    int_defect = float(np.sum(defect) * weight)
    eps_eff = max(int_defect / max(int_base, 1e-300), 1e-300)
    root = math.sqrt(eps_eff)
    mask = defect > root * base
    keep = ~mask & (u > 0) & (v > 0)
    if np.any(keep):
        band = float(np.max(np.abs(np.log(u[keep] ** q1) - np.log(v[keep] ** q2))))
    else:
        band = math.inf
    return mask, band, eps_eff


def holder_level_match(
    factors: Sequence[Signal],
    exponents: Sequence[float],
    eps: float,
) -> HolderMatch:
    """Near-extremisers of the Hoelder inequality.

    Given nonnegative factors with ||prod f_i||_{L^p} >= (1 - eps) prod
    ||f_i||_{L^{p_i}} (1/p = sum 1/p_i), produces an exceptional set E of
    small relative mass and constants c_i with c_i f_i(x)^{p_i} matched
    across i off E, the residual band reported numerically.  Reduction to the
    two-factor case pairs each factor against the product of the rest; the
    pointwise criterion is the convexity defect of exp.
    """
    m = len(factors)
    if m < 2 or len(exponents) != m:
        raise PreconditionError("need >= 2 factors with one exponent each")
    dom = factors[0].domain
    if any(f.domain != dom for f in factors):
        raise DomainError("factors must share a domain")
    vals = [np.abs(f.values) for f in factors]
    norms = [lp_norm(f, p) for f, p in zip(factors, exponents)]
    if any(n == 0 for n in norms):
        raise PreconditionError("Hoelder equality impossible: some factor vanishes identically")
    p = 1.0 / sum(1.0 / q for q in exponents)
    prod = np.ones_like(vals[0])
    for v in vals:
        prod = prod * v
    w = dom.point_weight
    lhs = float(np.sum(prod**p * w) ** (1.0 / p))
    if lhs < (1 - eps) * float(np.prod(norms)) - 1e-12:
        raise PreconditionError(f"inputs are not (1-eps)-extremal: lhs {lhs:.6g} vs {(1 - eps) * float(np.prod(norms)):.6g}")

    mask_total = np.zeros(dom.cardinality, dtype=bool)
    band = 0.0
    for i in range(m - 1):
        rest = np.ones_like(vals[0])
        for j in range(i + 1, m):
            rest = rest * (vals[j] / norms[j])
        rest_exp = 1.0 / sum(1.0 / exponents[j] for j in range(i + 1, m))
        pair_p = 1.0 / (1.0 / exponents[i] + 1.0 / rest_exp)
        # normalise to the p = 1 form: replace factors by their pair_p powers
        u = (vals[i] / norms[i]) ** pair_p
        v = rest**pair_p
        q1 = exponents[i] / pair_p
        q2 = rest_exp / pair_p
        mask, pair_band, _ = _holder_pair(u, v, q1, q2, w, eps)
        mask_total |= mask
        band = max(band, pair_band)

    constants = tuple(float(n ** -q) for n, q in zip(norms, exponents))
    fractions = []
    for v, n, q in zip(vals, norms, exponents):
        mass = float(np.sum((v[mask_total]) ** q) * w)
        fractions.append(mass / float(n**q))
    return HolderMatch(tuple(int(i) for i in np.flatnonzero(mask_total)), constants, band, tuple(fractions))


# ---------------------------------------------------------------------------
# inverse sumset


def sumset_group_test(domain: FiniteAbelian, members: Sequence[int]):
    """Test whether K - K is a subgroup via the 3/2 difference-set criterion.

    Returns the sorted element tuple of H0 = K - K when |K - K| < (3/2)|K|,
    after verifying closure exhaustively (a verification failure is a hard
    error: the criterion guarantees closure).  Raises
    :class:`CosetFailure` with the measured ratio otherwise.
    """
    members = sorted(set(int(x) for x in members))
    if not members:
        raise PreconditionError("K must be nonempty")
    add = add_table(domain.moduli)
    neg = neg_table(domain.moduli)
    karr = np.asarray(members, dtype=np.intp)
    diffs = np.unique(add[np.ix_(karr, neg[karr])])
    ratio = len(diffs) / len(members)
    if len(diffs) >= 1.5 * len(members):
        raise CosetFailure("sumset-ratio", {"ratio": ratio, "k_size": len(members), "diff_size": int(len(diffs))})
    dset = set(int(x) for x in diffs)
    closed = np.all(np.isin(add[np.ix_(diffs, diffs)], diffs))
    symmetric = all(int(neg[x]) in dset for x in dset)
    if not (closed and symmetric and 0 in dset):
        raise GowersLabError("difference set below the 3/2 threshold failed closure; this indicates a bug")
    return tuple(int(x) for x in diffs)


# ---------------------------------------------------------------------------
# coset detection and structured recovery


def detect_coset(f: Signal, k: int, eps: float, profile: ToleranceProfile = DEFAULT):
    """Locate the coset supporting a near-extremal L^{p_k}-normalised signal.

    Returns (CosetDescriptor, magnitude residual, diagnostics).  Stage gates:
    level set at theta_level * max|f|, shift set by (1 - delta_cap) overlap,
    subgroup from the difference-set criterion, offset by |f|^{p_k} mass
    argmax with smallest-representative tie-break.
    """
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("detect_coset requires a finite abelian domain")
    pk = float(critical_exponent(k))
    norm_pk = lp_norm(f, pk)
    if norm_pk > 1 + 1e-9:
        raise PreconditionError(f"expected ||f||_{{L^{pk:.3g}}} <= 1, got {norm_pk}")
    uk_val = uk_norm(f, k, profile=profile).value
    if uk_val < 1 - eps - 1e-9:
        raise PreconditionError(f"U^{k} norm {uk_val:.6f} below the 1 - eps = {1 - eps:.6f} threshold")

    mags = np.abs(f.values)
    level = profile.theta_level * float(np.max(mags))
    support = np.flatnonzero(mags >= level)
    if support.size == 0:
        raise CosetFailure("level-set", {"max": float(np.max(mags))})
    add = add_table(dom.moduli)
    neg = neg_table(dom.moduli)
    ind = np.zeros(dom.cardinality, dtype=np.int64)
    ind[support] = 1
    overlap_floor = (1 - profile.delta_cap) * support.size
    shifts = [h for h in range(dom.cardinality) if int(np.sum(ind[support] * ind[add[support, h]])) >= overlap_floor]
    # x in H and x in H + h <=> x - h in H; counting via x + h is symmetric
    subgroup = sumset_group_test(dom, shifts)

    sub_arr = np.asarray(subgroup, dtype=np.intp)
    seen = np.zeros(dom.cardinality, dtype=bool)
    best_rep, best_mass = None, -1.0
    masses = np.abs(f.values) ** pk
    for rep in range(dom.cardinality):
        if seen[rep]:
            continue
        coset = add[rep, sub_arr]
        seen[coset] = True
        mass = float(np.sum(masses[coset]))
        if mass > best_mass + 1e-15:
            best_rep, best_mass = rep, mass
    descriptor = CosetDescriptor(dom, subgroup, int(best_rep))
    mu = len(subgroup) / dom.cardinality
    model = np.zeros(dom.cardinality)
    model[list(descriptor.coset_elements())] = mu ** (-1.0 / pk)
    residual = lp_norm(Signal(dom, np.abs(f.values) - model), pk)
    diagnostics = {
        "level_set_size": int(support.size),
        "shift_set_size": len(shifts),
        "subgroup_order": len(subgroup),
        "uk_value": uk_val,
        "coset_mass": best_mass,
    }
    return descriptor, residual, diagnostics


def _cyclic_generator(domain: FiniteAbelian, subgroup: Sequence[int]) -> Optional[list]:
    """Element ordering [0, g, 2g, ...] when the subgroup is cyclic, else None."""
    add = add_table(domain.moduli)
    order = len(subgroup)
    members = set(subgroup)
    for gen in subgroup:
        if gen == 0 and order > 1:
            continue
        chain = [0]
        cur = 0
        for _ in range(order - 1):
            cur = int(add[cur, gen])
            if cur == 0 or cur not in members:
                break
            chain.append(cur)
        if len(chain) == order:
            return chain
    return [0] if order == 1 else None


def recover_structured(f: Signal, k: int, eps: float, profile: ToleranceProfile = DEFAULT) -> CosetReport:
    """Full structured recovery: coset + polynomial phase + unit constant.

    Restricts f to the detected coset, renormalises to the subgroup's Haar
    measure, translates the offset away and decodes the phase at degree
    k - 1.  The total residual compares f against
    mu(H)^{-1/p_k} 1_{x0+H0} c e(P(. - x0)) in L^{p_k}(G).
    """
    if k < 2:
        raise PreconditionError("degenerate case k=1 excluded")
    dom = f.domain
    descriptor, mag_residual, diagnostics = detect_coset(f, k, eps, profile)
    pk = float(critical_exponent(k))
    sub = descriptor.elements
    order = len(sub)
    mu = order / dom.cardinality

    if order == dom.cardinality:
        chain = list(range(dom.cardinality))
        sub_domain = dom
    else:
        chain = _cyclic_generator(dom, sub)
        if chain is None:
            raise DomainError("structured recovery supports cyclic subgroups (or the full group) at desk scale")
        sub_domain = FiniteAbelian((order,))

    add = add_table(dom.moduli)
    positions = add[descriptor.offset, np.asarray(chain, dtype=np.intp)]
    restricted = f.values[positions] * mu ** (1.0 / pk)
    sup = float(np.max(np.abs(restricted)))
    scaled = restricted / max(sup / (1 + 1e-12), 1.0)
    report: DecodeReport = decode_group(Signal(sub_domain, scaled), k, profile)

    model = np.zeros(dom.cardinality, dtype=complex)
    model[positions] = mu ** (-1.0 / pk) * report.c * e(report.phase.table)
    total = lp_norm(Signal(dom, f.values - model), pk)
    diagnostics = dict(diagnostics)
    diagnostics["decode_residual"] = report.residual_L1
    return CosetReport(descriptor, mag_residual, report.phase, report.c, total, diagnostics)
