"""Recovery of polynomial phases from near-extremal signals.

``decode_group`` implements the derivative induction on finite abelian
groups: decode every multiplicative derivative one degree lower, extend the
admitted shifts to all of G through the a+b decomposition, repair the
resulting family of phases from a 2-cocycle of constants into an exact
cocycle by averaging, and integrate the cocycle to the global phase
phi(x) = Q~_{-x}(0).  ``decode_interval`` is the windowed variant for
signals on {1..N}, where the derivative phases are genuine polynomials over
Z (binomial basis, real coefficients) and the cocycle repair runs one
coefficient at a time over a shrinking window cascade.

The k=2 base case is Fourier-analytic in both settings: the dominant
character on groups, a refined chirp fit on intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT, ToleranceProfile
from .domains import (
    FiniteAbelian,
    Interval,
    PolyPhase,
    Signal,
    add_table,
    center,
    character_phase_table,
    circle_dist,
    cyclic_polynomial_coefficients,
    e,
    frac,
    neg_table,
    poly_from_table,
    poly_table_from_coeffs,
)
from .errors import (
    DecodeFailure,
    DomainError,
    GowersLabError,
    PolyRejection,
    PreconditionError,
)


@dataclass(frozen=True, eq=False)
class DecodeReport:
    phase: PolyPhase
    c: complex
    residual_L1: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "phase": self.phase.to_json(),
            "c": [self.c.real, self.c.imag],
            "residual_L1": self.residual_L1,
            "diagnostics": _jsonable(self.diagnostics),
        }


@dataclass(frozen=True, eq=False)
class CocycleTable:
    """Derivative phases and their repaired cocycle data.

    ``tables[h]`` is the phase table Q_h (constants folded in);
    ``constants[h, h']`` the defect constant of Q_{h+h'} - T^h Q_{h'} - Q_h
    lifted to (-1/2, 1/2]; ``corrector[h]`` the averaged repair b(h); and
    ``max_defect`` the worst deviation of any defect table from constancy.
    """

    tables: dict
    constants: np.ndarray
    corrector: np.ndarray
    max_defect: float


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _check_bounded(f: Signal, profile: ToleranceProfile):
    sup = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if sup > 1.0 + 1e-9:
        raise PreconditionError(f"decoder expects sup|f| <= 1, got {sup}")


def _clamp_unimodular(values: np.ndarray, tau_mag: float) -> np.ndarray:
    mags = np.abs(values)
    out = np.ones_like(values)
    big = mags >= tau_mag
    out[big] = values[big] / mags[big]
    return out


def _l1_residual(f: Signal, model: np.ndarray) -> float:
    return float(np.mean(np.abs(f.values - model)))


def _unit_mean(values: np.ndarray) -> complex:
    m = complex(np.mean(values))
    return m / abs(m) if abs(m) > 0 else 1.0 + 0j


# ---------------------------------------------------------------------------
# base cases


def decode_base_mean(f: Signal):
    """(c, residual) with c the direction of the mean; extremal iff constant."""
    _check_bounded(f, DEFAULT)
    c = _unit_mean(f.values)
    return c, _l1_residual(f, np.full_like(f.values, c))


def decode_base_linear(f: Signal, profile: ToleranceProfile = DEFAULT) -> DecodeReport:
    """Degree <= 1 decoding on a finite abelian group via the dominant character."""
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("decode_base_linear requires a finite abelian domain")
    spectrum = np.abs(np.fft.fftn(f.grid_view())).reshape(-1)
    xi = int(np.argmax(spectrum))  # first maximum = smallest canonical index
    table = character_phase_table(dom, xi)
    coeffs = None
    if len(dom.moduli) == 1:
        coeffs = (0.0, float(frac(xi / dom.moduli[0])))
    phase = PolyPhase(dom, 1, table, coeffs)
    c = _unit_mean(f.values * np.conj(e(table)))
    residual = _l1_residual(f, c * e(table))
    return DecodeReport(phase, c, residual, {"xi": xi, "acceptance_by_level": {}})


# ---------------------------------------------------------------------------
# group decoder


def _shift_table(table: np.ndarray, h: int, add: np.ndarray, neg: np.ndarray) -> np.ndarray:
    # (T^h P)(x) = P(x - h)
    return table[add[:, neg[h]]]


def decode_group(
    f: Signal,
    k: int,
    profile: ToleranceProfile = DEFAULT,
    return_cocycle: bool = False,
):
    """Recover (P, c) with f close to c e(P), deg P <= k-1, on a finite group.

    Raises :class:`DecodeFailure` when the shift covering condition or a
    cocycle/integration certificate fails (inputs far from extremal).
    """
    dom = f.domain
    if not isinstance(dom, FiniteAbelian):
        raise DomainError("decode_group requires a finite abelian domain")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    _check_bounded(f, profile)
    card = dom.cardinality

    if k == 1 or card == 1:
        c, residual = decode_base_mean(f)
        phase = PolyPhase(dom, max(k - 1, 0), np.zeros(card))
        report = DecodeReport(phase, c, residual, {"acceptance_by_level": {}})
        return (report, None) if return_cocycle else report

    if k == 2:
        report = decode_base_linear(f, profile)
        return (report, None) if return_cocycle else report

    add = add_table(dom.moduli)
    neg = neg_table(dom.moduli)
    clamped = _clamp_unimodular(f.values, profile.tau_mag)
    threshold = profile.accept_threshold(k)

    # decode every derivative (T^h f) conj(f) one degree lower, admit good shifts
    derivative_tables = {}
    sub_fracs = []
    for h in range(card):
        deriv = clamped[add[:, neg[h]]] * np.conj(clamped)  # f(x-h) conj f(x)
        try:
            sub = decode_group(Signal(dom, deriv), k - 1, profile)
        except (DecodeFailure, PreconditionError):
            continue
        if sub.residual_L1 <= threshold:
            gamma = frac(np.angle(sub.c) / (2 * np.pi))
            derivative_tables[h] = frac(sub.phase.table + gamma)
            sub_fracs.append(sub.diagnostics.get("acceptance_by_level", {}))
    accepted = sorted(derivative_tables)
    acc_frac = len(accepted) / card

    # a + b extension: T^h f ~ e(T^a P_{h-a} + P_a) f whenever a, h-a admitted
    acc_set = set(accepted)
    q_tables = {}
    for h in range(card):
        pick = None
        for a in accepted:
            b = add[h, neg[a]]
            if int(b) in acc_set:
                pick = (a, int(b))
                break
        if pick is None:
            raise DecodeFailure("covering", {"h": h, "accepted_fraction": acc_frac})
        a, b = pick
        q_tables[h] = frac(_shift_table(derivative_tables[b], a, add, neg) + derivative_tables[a])

    # cocycle constants: each defect table must be constant to the gate
    gate = profile.cocycle_gate(k)
    constants = np.zeros((card, card))
    max_defect = 0.0
    for h in range(card):
        for h2 in range(card):
            defect = q_tables[add[h, h2]] - _shift_table(q_tables[h2], h, add, neg) - q_tables[h]
            mean_angle = np.angle(np.sum(e(defect)))
            m = frac(mean_angle / (2 * np.pi))
            dev = float(np.max(circle_dist(defect - m)))
            max_defect = max(max_defect, dev)
            if dev > gate:
                raise DecodeFailure("cocycle-constancy", {"h": h, "h2": h2, "deviation": dev, "gate": gate})
            constants[h, h2] = center(float(m))

    # average the 2-cocycle into a 2-coboundary and integrate
    corrector = constants.mean(axis=1)
    repaired = {h: frac(q_tables[h] + corrector[h]) for h in range(card)}
    phi = np.array([repaired[int(neg[x])][0] for x in range(card)])

    try:
        phase = poly_from_table(phi, dom, k - 1, profile)
    except PolyRejection as exc:
        raise DecodeFailure("phase-certification", {"defect": exc.defect}) from exc

    integration_defect = 0.0
    for h in range(card):
        delta = frac(_shift_table(phi, h, add, neg) - phi)
        integration_defect = max(integration_defect, float(np.max(circle_dist(delta - repaired[h]))))
    if integration_defect > max(profile.tau_poly, 1e-8):
        raise DecodeFailure("integration", {"defect": integration_defect})

    c = _unit_mean(f.values * np.conj(e(phi)))
    residual = _l1_residual(f, c * e(phi))
    # average child acceptance fractions per recursion level
    levels = {k: acc_frac}
    child_levels = {}
    for sub in sub_fracs:
        for lvl, fr in sub.items():
            child_levels.setdefault(lvl, []).append(fr)
    for lvl, vals in child_levels.items():
        levels[lvl] = float(np.mean(vals))
    diagnostics = {
        "acceptance_by_level": levels,
        "max_cocycle_defect": max_defect,
        "max_corrector": float(np.max(np.abs(corrector))) if card else 0.0,
        "integration_defect": integration_defect,
    }
    report = DecodeReport(phase, c, residual, diagnostics)
    if return_cocycle:
        cocycle = CocycleTable(repaired, constants, corrector, max_defect)
        return report, cocycle
    return report


# ---------------------------------------------------------------------------
# interval decoder

_CERT_TOL = 1e-4  # structural consistency gate for the interval integration


def _eval_coeffs(coeffs: np.ndarray, n_values: np.ndarray) -> np.ndarray:
    """Evaluate sum_i coeffs[i] binom(n, i) mod 1 at integer points."""
    total = np.zeros(len(n_values), dtype=float)
    term = np.ones(len(n_values), dtype=float)
    for i, c in enumerate(coeffs):
        if i > 0:
            term = term * (n_values - (i - 1)) / i
        total += frac(float(c) * term)
    return frac(total)


def _shift_coeffs(coeffs: np.ndarray, a: int) -> np.ndarray:
    """Binomial-basis coefficients of P(n - a) given those of P(n)."""
    deg = len(coeffs) - 1
    out = np.zeros_like(coeffs)
    for i, c in enumerate(coeffs):
        if c == 0.0:
            continue
        # binom(n - a, i) = sum_j binom(-a, i - j) binom(n, j)
        for j in range(i + 1):
            out[j] += c * _binom_int(-a, i - j)
    _ = deg
    return out


def _binom_int(m: int, i: int) -> float:
    out = 1.0
    for j in range(i):
        out = out * (m - j) / (j + 1)
    return out


def _interval_linear_fit(vals: np.ndarray, n_values: np.ndarray):
    """Fit vals ~ c e(alpha n + beta): coarse FFT peak plus weighted phase fit."""
    n = len(vals)
    if n < 4:
        cmean = _unit_mean(vals)
        return 0.0, float(frac(np.angle(cmean) / (2 * np.pi)))
    pad = 1 << int(math.ceil(math.log2(8 * n)))
    spectrum = np.abs(np.fft.fft(vals * np.exp(-2j * np.pi * np.arange(n) * 0.0), pad))
    alpha0 = int(np.argmax(spectrum)) / pad
    g = vals * np.exp(-2j * np.pi * alpha0 * n_values)
    theta = np.unwrap(np.angle(g)) / (2 * np.pi)
    weights = np.abs(vals)
    if float(np.sum(weights)) == 0.0:
        return alpha0, 0.0
    coeffs = np.polyfit(n_values, theta, 1, w=weights)
    return float(alpha0 + coeffs[0]), float(frac(coeffs[1]))


def decode_interval(f: Signal, k: int, profile: ToleranceProfile = DEFAULT) -> DecodeReport:
    """Recover (P, c), P a degree <= k-1 polynomial Z -> R/Z, on {1..N}.

    Derivative phases are decoded on the windows {1..N-h}, extended by the
    a+b decomposition to shifts |h| <= N/8, repaired coefficient by
    coefficient over windows shrinking fourfold per level, and integrated by
    the discrete antidifference of the unit-shift phase.
    """
    dom = f.domain
    if not isinstance(dom, Interval):
        raise DomainError("decode_interval requires an interval signal")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    _check_bounded(f, profile)
    n = dom.length
    n_values = np.arange(1, n + 1)

    if k == 1:
        c, residual = decode_base_mean(f)
        phase = PolyPhase(dom, 0, np.zeros(n), (0.0,))
        return DecodeReport(phase, c, residual, {"acceptance_by_level": {}})

    if k == 2:
        alpha, beta = _interval_linear_fit(f.values, n_values)
        coeffs = (float(frac(beta)), float(frac(alpha)))
        table = _eval_coeffs(np.array([0.0, alpha]), n_values)
        phase = PolyPhase(dom, 1, table, (0.0, float(frac(alpha))))
        c = _unit_mean(f.values * np.conj(e(table)))
        residual = _l1_residual(f, c * e(table))
        _ = coeffs
        return DecodeReport(phase, c, residual, {"alpha": alpha, "acceptance_by_level": {}})

    n_min = profile.interval_n_min(k)
    if n < n_min:
        raise PreconditionError(f"interval decoder at k={k} needs N >= {n_min}, got {n}")

    clamped = _clamp_unimodular(f.values, profile.tau_mag)
    threshold = profile.accept_threshold(k)

    # windowed derivative decodes on {1..N-h}
    m_candidates = n // 8 + 1
    sub_coeffs = {}
    for h in range(1, m_candidates + 1):
        window = clamped[h:] * np.conj(clamped[: n - h])  # f(x+h) conj f(x) on {1..N-h}
        try:
            sub = decode_interval(Signal(Interval(n - h), window), k - 1, profile)
        except (DecodeFailure, PreconditionError):
            continue
        if sub.residual_L1 <= threshold:
            cs = np.zeros(k - 1)
            got = sub.phase.coeffs or ()
            cs[: len(got)] = got
            cs[0] = frac(cs[0] + np.angle(sub.c) / (2 * np.pi))
            sub_coeffs[h] = cs
    accepted = sorted(sub_coeffs)
    acc_set = set(accepted)
    acc_frac = len(accepted) / m_candidates

    # T^{-h} f ~ e(P_h) f means T^h f ~ e(T^a(P_{a-h} - P_a)) f for admitted a, a-h
    w_extend = n // 8
    q_coeffs = {}
    for h in range(-w_extend, w_extend + 1):
        pick = None
        for a in accepted:
            if a - h in acc_set:
                pick = a
                break
        if pick is None and h == 0:
            q_coeffs[0] = np.zeros(k - 1)
            continue
        if pick is None:
            raise DecodeFailure("covering", {"h": h, "accepted_fraction": acc_frac})
        a = pick
        q_coeffs[h] = _shift_coeffs(sub_coeffs[a - h] - sub_coeffs[a], a)

    # Q_h was built from T^{-a}: correct orientation check below uses the
    # defect of Q_{h+h'} - T^h Q_{h'} - Q_h, whose coefficients must be smaller
    # than any genuine polynomial quantum
    def defect(h, h2):
        return q_coeffs[h + h2] - _shift_coeffs(q_coeffs[h2], h) - q_coeffs[h]

    # coefficient-by-coefficient cocycle repair over a shrinking window cascade
    window = n // 16
    max_defect = 0.0
    for idx in range(k - 2, -1, -1):
        w_half = max(window // 2, 1)
        means = {}
        for h in range(-w_half, w_half + 1):
            samples = [center(defect(h, h2)[idx]) for h2 in range(-w_half, w_half + 1)]
            means[h] = float(np.mean(samples))
        for h, a_rep in means.items():
            q_coeffs[h][idx] += a_rep
        w_quarter = max(w_half // 2, 1)
        b = {0: 0.0}
        for h in range(0, w_quarter):
            b[h + 1] = b[h] + float(center(defect(h, 1)[idx]))
        for h in range(0, -w_quarter, -1):
            b[h - 1] = b[h] - float(center(defect(h - 1, 1)[idx]))
        for h in range(-w_quarter, w_quarter + 1):
            q_coeffs[h][idx] -= b[h]
        window = w_quarter
        for h in range(-window, window + 1):
            for h2 in range(-window, window + 1):
                if abs(h + h2) <= w_extend:
                    max_defect = max(max_defect, float(abs(center(defect(h, h2)[idx]))))

    # integrate: phi(n) - phi(n-1) = -Q~_1(n), via sum_{m<=n} binom(m,i) = binom(n+1,i+1)
    q1 = q_coeffs[1]
    phi_coeffs = np.zeros(k)
    for i, c in enumerate(q1):
        phi_coeffs[i + 1] -= c
        phi_coeffs[i] -= c

    phi_table = _eval_coeffs(phi_coeffs, n_values)
    cert_defect = 0.0
    for h in range(-window, window + 1):
        if h == 0:
            continue
        lhs = _eval_coeffs(q_coeffs[h], n_values)
        rhs = _eval_coeffs(_shift_coeffs(phi_coeffs, h) - phi_coeffs, n_values)
        cert_defect = max(cert_defect, float(np.max(circle_dist(lhs - rhs))))
    if cert_defect > _CERT_TOL:
        raise DecodeFailure("integration", {"defect": cert_defect})

    try:
        phase = poly_from_table(phi_table, dom, k - 1, profile)
    except PolyRejection as exc:
        raise DecodeFailure("phase-certification", {"defect": exc.defect}) from exc
    phase = PolyPhase(dom, k - 1, phi_table, tuple(float(frac(c)) for c in phi_coeffs))

    c = _unit_mean(f.values * np.conj(e(phi_table)))
    residual = _l1_residual(f, c * e(phi_table))
    diagnostics = {
        "acceptance_by_level": {k: acc_frac},
        "max_cocycle_defect": max_defect,
        "integration_defect": cert_defect,
        "final_window": window,
    }
    return DecodeReport(phase, c, residual, diagnostics)


# ---------------------------------------------------------------------------
# separation scan

_SCAN_N_CAP = 12
_SCAN_K_CAP = 3


def separation_scan(n: int, k: int) -> float:
    """Minimum L^2 distance ||e(P) - 1|| over nonconstant degree <= k
    polynomial phases on Z/n, the constant term optimised analytically
    (distance^2 = 2 - 2 |mean e(P_0)|).

    Asserts the separation bound 2^{-k+1/2}; a violation would falsify the
    enumeration or the bound and raises.
    """
    if n > _SCAN_N_CAP or k > _SCAN_K_CAP:
        raise PreconditionError(f"separation scan enumerates only n <= {_SCAN_N_CAP}, k <= {_SCAN_K_CAP}")
    if n < 1 or k < 1:
        raise PreconditionError("need n >= 1 and k >= 1")
    x = np.arange(n)
    best = math.inf
    for coeffs in cyclic_polynomial_coefficients(n, k):
        table = _eval_coeffs(np.concatenate([[0.0], coeffs]), x)
        if float(np.max(circle_dist(table - table[0]))) < 1e-12:
            continue  # constant as a function
        dist_sq = 2.0 - 2.0 * abs(np.mean(e(table)))
        best = min(best, math.sqrt(max(dist_sq, 0.0)))
    bound = 2.0 ** (-k + 0.5)
    if best < bound - 1e-12:
        raise GowersLabError(f"separation scan found distance {best} below the bound {bound}")
    return best
