"""Centralised tolerances and work caps.

Every numeric gate in the package reads from a ``ToleranceProfile`` so that
all calibration lives in one record.  ``DEFAULT`` is used when no profile is
passed explicitly; ``NOISY_DECODE`` relaxes the decoder admission threshold
for inputs in the noisy (rather than exact) regime and is what the noise-curve
calibration runs use.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ToleranceProfile:
    # polynomial difference test: max allowed defect mod 1
    tau_poly: float = 1e-8
    # magnitude threshold below which decoder clamping replaces f by 1
    tau_mag: float = 0.5
    # admission threshold for derivative sub-decodes is theta_accept_base * 2^-k
    # unless theta_accept overrides it outright
    theta_accept_base: float = 0.1
    theta_accept: float | None = None
    # cocycle near-constancy gate: reject when the defect table deviates from
    # its mean by more than 2^(-k-1/2) (in circle units)
    cocycle_gate_base: float = 0.5
    # direct backend refuses |G|^(k+1) elementary operations above this
    direct_work_cap: float = 1e10
    # relative Plancherel identity check inside the Fourier transform
    plancherel_tol: float = 1e-10
    # relative agreement demanded between norm backends
    backend_agree_tol: float = 1e-9
    # grid signals: flag wraparound when boundary-layer L1 mass exceeds this
    # fraction of the total
    boundary_mass_tol: float = 1e-6
    # aliasing gate for grid Fourier transforms: spectral mass within the top
    # tenth of the band, as a fraction of total spectral mass
    aliasing_tol: float = 1e-6
    # coset detection: level-set fraction of max|f| and allowed overlap loss
    theta_level: float = 0.5
    delta_cap: float = 0.25
    # largest denominator the quadratic correlation scan will sweep
    scan_denominator_cap: int = 16384
    # smallest interval length accepted by the interval decoder at degree k-1
    interval_n_min_base: int = 32

    def accept_threshold(self, k: int) -> float:
        if self.theta_accept is not None:
            return self.theta_accept
        return self.theta_accept_base * 0.5**k

    def cocycle_gate(self, k: int) -> float:
        return self.cocycle_gate_base * 2.0 ** (-k + 0.5)

    def interval_n_min(self, k: int) -> int:
        # stage windows shrink by 4 per corrector level from N/16; keep the
        # final window non-empty
        return max(self.interval_n_min_base, 16 * 4 ** (k - 2)) if k >= 3 else 4


DEFAULT = ToleranceProfile()

# admission loose enough to keep derivative sub-decodes of phase-jittered
# inputs (amplitude up to ~0.1 rad) inside the covering stage
NOISY_DECODE = replace(DEFAULT, theta_accept=0.35)

PROFILES = {
    "default": DEFAULT,
    "noisy-decode": NOISY_DECODE,
}
