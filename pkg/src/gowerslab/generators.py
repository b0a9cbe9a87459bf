"""Deterministic signal generators.

One counter-based pseudorandom generator (Philox) backs every randomized
construction; a 64-bit seed fully determines the output.
"""

from __future__ import annotations

import numpy as np

from . import engine, euclid
from .domains import (
    EuclideanGrid,
    FiniteAbelian,
    Interval,
    Signal,
    character,
    e,
    phase_signal,
    random_cyclic_polynomial,
)
from .errors import GowersLabError


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def smooth_noise(n: int, rng: np.random.Generator, modes: int = 3) -> np.ndarray:
    """Unit-RMS real field built from a few low Fourier modes."""
    x = np.arange(n)
    g = np.zeros(n)
    for j in range(1, modes + 1):
        g += rng.normal() * np.cos(2 * np.pi * j * x / n) + rng.normal() * np.sin(2 * np.pi * j * x / n)
    rms = np.sqrt(np.mean(g**2))
    return g / rms if rms > 0 else g


def random_unimodular(domain, rng: np.random.Generator) -> Signal:
    return Signal(domain, np.exp(2j * np.pi * rng.random(domain.cardinality)))


def random_bounded(domain, rng: np.random.Generator) -> Signal:
    """Random complex signal normalised to sup norm 1."""
    vals = rng.normal(size=domain.cardinality) + 1j * rng.normal(size=domain.cardinality)
    sup = float(np.max(np.abs(vals)))
    return Signal(domain, vals / sup if sup > 0 else vals)


def coset_phase_extremiser(n: int, order: int, offset: int, degree: int, k: int, rng: np.random.Generator) -> Signal:
    """The critical-inequality extremiser mu(H)^{-1/p_k} 1_{x0+H0} e(P(.-x0))
    on Z/n for the subgroup of the given order."""
    if n % order:
        raise GowersLabError("subgroup order must divide the modulus")
    pk = float(engine.critical_exponent(k))
    phase = random_cyclic_polynomial(order, degree, rng)
    vals = np.zeros(n, dtype=complex)
    step = n // order
    mu = order / n
    c = np.exp(2j * np.pi * rng.random())
    for j in range(order):
        vals[(offset + j * step) % n] = mu ** (-1.0 / pk) * c * e(phase.table[j])
    return Signal(FiniteAbelian((n,)), vals)


def padded_random_grid(grid: EuclideanGrid, rng: np.random.Generator, modes: int = 5) -> Signal:
    """Smooth random grid signal under a Gaussian envelope (well padded)."""
    x = grid.axis_coordinates()
    envelope = np.exp(-np.pi * (x / (grid.extent / 4.0)) ** 2)
    wave = np.zeros(grid.points, dtype=complex)
    for j in range(1, modes + 1):
        wave += (rng.normal() + 1j * rng.normal()) * np.exp(2j * np.pi * j * x / (2 * grid.extent))
        wave += (rng.normal() + 1j * rng.normal()) * np.exp(-2j * np.pi * j * x / (2 * grid.extent))
    return Signal(grid, envelope * wave)


def generate(kind: str, params: dict, seed: int) -> Signal:
    """Named deterministic generators used by the CLI."""
    rng = make_rng(seed)
    domain = params.get("domain", FiniteAbelian((16,)))
    if kind == "constant":
        return Signal(domain, np.ones(domain.cardinality))
    if kind == "character":
        return character(domain, int(params.get("xi", 1)))
    if kind == "poly-phase":
        if not (isinstance(domain, FiniteAbelian) and len(domain.moduli) == 1):
            raise GowersLabError("poly-phase generation needs a cyclic domain")
        phase = random_cyclic_polynomial(domain.moduli[0], int(params.get("degree", 2)), rng)
        return phase_signal(phase, np.exp(2j * np.pi * rng.random()))
    if kind == "noisy-poly-phase":
        base = generate("poly-phase", params, seed)
        delta = float(params.get("delta", 0.05))
        return Signal(base.domain, base.values * np.exp(1j * delta * smooth_noise(base.domain.cardinality, rng)))
    if kind == "coset-phase":
        n = int(params.get("n", 12))
        return coset_phase_extremiser(
            n,
            int(params.get("order", 4)),
            int(params.get("offset", 0)) % n,
            int(params.get("degree", 2)),
            int(params.get("k", 3)),
            rng,
        )
    if kind == "gaussian-grid":
        grid = params.get("domain", EuclideanGrid(1, 8.0, 2048))
        return euclid.gaussian_signal(
            grid, float(params.get("sigma", 1.0)), float(params.get("center", 0.0)), float(params.get("freq", 0.0))
        )
    if kind == "random-unimodular":
        return random_unimodular(domain, rng)
    if kind == "random-complex":
        return random_bounded(domain, rng)
    raise GowersLabError(f"unknown generator kind {kind!r}")


def random_interval_signal(length: int, rng: np.random.Generator) -> Signal:
    vals = rng.normal(size=length) + 1j * rng.normal(size=length)
    sup = float(np.max(np.abs(vals)))
    return Signal(Interval(length), vals / sup if sup > 0 else vals)
