"""Two-sided envelope shapes for the kernels, for arbitrary rank-one root data.

Each function returns the comparison shape with constant 1; kernels are
compared with it through fitted bands (c1, c2).  Exponents are computed from
:class:`RootData`, never hard-coded for H^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import RootData

DEFAULT_KAPPA = 1.0


class EstimateNotAsserted(ValueError):
    """The requested regime carries no two-sided estimate."""


def _check(t, r):
    if t <= 0 or r < 0:
        raise ValueError("need t > 0 and r >= 0")


def _check_zeta(rd: RootData, zeta: float):
    if not 0 <= zeta <= rd.rho_norm:
        raise ValueError("zeta must lie in [0, rho_norm]")


def log_phi0_envelope(rd: RootData, r: float) -> float:
    """log of prod over reduced roots of (1 + |alpha| r), times e^{-|rho| r}."""
    return sum(math.log1p(a.norm * r) for a in rd.reduced_roots) - rd.rho_norm * r


def phi0_envelope(rd: RootData, r: float) -> float:
    return math.exp(log_phi0_envelope(rd, r))


def phi0_upper(rd: RootData, r: float) -> float:
    return (1.0 + r) ** rd.n_reduced * math.exp(-rd.rho_min * r)


def phi0_lower(rd: RootData, r: float) -> float:
    return math.exp(-rd.rho_norm * r)


def _log_heat_poly(rd: RootData, t: float, r: float, with_t: bool) -> float:
    out = 0.0
    for a in rd.reduced_roots:
        expo = (a.mult + a.mult_double) / 2.0 - 1.0
        out += expo * math.log(1.0 + (t if with_t else 0.0) + a.norm * r)
    return out


def log_heat_envelope(rd: RootData, zeta: float, t: float, r: float) -> float:
    _check(t, r)
    _check_zeta(rd, zeta)
    return (
        -(rd.n / 2.0) * math.log(t)
        + _log_heat_poly(rd, t, r, True)
        + log_phi0_envelope(rd, r)
        - zeta * zeta * t
        - r * r / (4.0 * t)
    )


def heat_envelope(rd: RootData, zeta: float, t: float, r: float) -> float:
    return math.exp(log_heat_envelope(rd, zeta, t, r))


def heat_envelope_smalltime(rd: RootData, zeta: float, T: float, t: float, r: float) -> float:
    """Bounded-time form: the (1 + t) and e^{-zeta^2 t} factors are absorbed into constants."""
    _check(t, r)
    _check_zeta(rd, zeta)
    if t >= T:
        raise ValueError(f"small-time envelope needs t < T (t={t}, T={T})")
    return math.exp(-(rd.n / 2.0) * math.log(t) + _log_heat_poly(rd, t, r, False) + log_phi0_envelope(rd, r) - r * r / (4.0 * t))


def frac_poisson_exponent(rd: RootData, sigma: float, zeta: float) -> float:
    """Power of (t + r) in the large regime."""
    if zeta > 0:
        return rd.rank / 2.0 + rd.n_reduced + sigma + 0.5
    return rd.rank + 2.0 * rd.n_reduced + 2.0 * sigma


def _regime(t: float, r: float, kappa: float, regime: str | None) -> str:
    if regime not in (None, "small", "large"):
        raise ValueError("regime must be 'small' or 'large'")
    return regime or ("small" if t + r <= kappa else "large")


def log_frac_poisson_envelope(
    rd: RootData, sigma: float, zeta: float, t: float, r: float, kappa: float = DEFAULT_KAPPA, regime: str | None = None
) -> float:
    _check(t, r)
    _check_zeta(rd, zeta)
    if not 0 < sigma < 1 or kappa <= 0:
        raise ValueError("need sigma in (0, 1) and kappa > 0")
    lt = 2 * sigma * math.log(t)
    if _regime(t, r, kappa, regime) == "small":
        return lt - (rd.n + 2 * sigma) * math.log(t + r)
    out = lt - frac_poisson_exponent(rd, sigma, zeta) * math.log(t + r) + log_phi0_envelope(rd, r)
    if zeta > 0:
        out -= zeta * math.hypot(t, r)
    return out


def frac_poisson_envelope(
    rd: RootData, sigma: float, zeta: float, t: float, r: float, kappa: float = DEFAULT_KAPPA, regime: str | None = None
) -> float:
    """Envelope of the extension kernel; ``regime`` forces 'small' or 'large'."""
    return math.exp(log_frac_poisson_envelope(rd, sigma, zeta, t, r, kappa, regime))


def frac_heat_exponent(rd: RootData, alpha: float, zeta: float) -> float:
    if zeta > 0:
        return rd.rank / 2.0 + rd.n_reduced + alpha / 2.0 + 0.5
    return rd.rank + 2.0 * rd.n_reduced + alpha


def frac_heat_large_admissible(alpha: float, zeta: float, t: float, r: float) -> bool:
    return r >= (t ** (2.0 / alpha) if zeta > 0 else t ** (1.0 / alpha))


def log_frac_heat_envelope(
    rd: RootData, alpha: float, zeta: float, t: float, r: float, kappa: float = DEFAULT_KAPPA, regime: str | None = None
) -> float:
    _check(t, r)
    _check_zeta(rd, zeta)
    if not 0 < alpha < 2 or kappa <= 0:
        raise ValueError("need alpha in (0, 2) and kappa > 0")
    lt = math.log(t)
    if _regime(t, r, kappa, regime) == "small":
        return lt - (rd.n + alpha) * math.log(t ** (1.0 / alpha) + r)
    if not frac_heat_large_admissible(alpha, zeta, t, r):
        raise EstimateNotAsserted(
            f"no two-sided bound for t={t}, r={r}: need r >= t^{2 if zeta > 0 else 1}/alpha"
        )
    expo = frac_heat_exponent(rd, alpha, zeta)
    if zeta > 0:
        return lt - expo * math.log(t + r) + log_phi0_envelope(rd, r) - zeta * r
    return lt - expo * math.log(t ** (1.0 / alpha) + r) + log_phi0_envelope(rd, r)


def frac_heat_envelope(
    rd: RootData, alpha: float, zeta: float, t: float, r: float, kappa: float = DEFAULT_KAPPA, regime: str | None = None
) -> float:
    """Envelope of the fractional heat kernel.

    In the large regime the estimate holds only for r >= t^{2/alpha}
    (zeta > 0) or r >= t^{1/alpha} (zeta = 0); elsewhere this raises
    :class:`EstimateNotAsserted` instead of extrapolating.
    """
    return math.exp(log_frac_heat_envelope(rd, alpha, zeta, t, r, kappa, regime))


def regime_mismatch(kind: str, rd: RootData, param: float, zeta: float, t: float, kappa: float = DEFAULT_KAPPA) -> float:
    """Ratio of the two branches on the boundary t + r = kappa (at least 1)."""
    r = kappa - t
    if r < 0:
        raise ValueError("need t <= kappa")
    f = frac_poisson_envelope if kind == "frac_poisson" else frac_heat_envelope
    a = f(rd, param, zeta, t, r, kappa, regime="small")
    b = f(rd, param, zeta, t, r, kappa, regime="large")
    return max(a / b, b / a)


@dataclass(frozen=True)
class EnvelopeSpec:
    kind: str
    rd: RootData
    zeta: float = 0.0
    param: float | None = None
    kappa: float = DEFAULT_KAPPA
    T: float | None = None

    def __post_init__(self):
        kinds = ("heat", "heat_smalltime", "frac_poisson", "frac_heat", "phi0", "volume")
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        _check_zeta(self.rd, self.zeta)

    def log(self, t: float, r: float, regime: str | None = None) -> float:
        k = self.kind
        if k == "heat":
            return log_heat_envelope(self.rd, self.zeta, t, r)
        if k == "heat_smalltime":
            return math.log(heat_envelope_smalltime(self.rd, self.zeta, self.T, t, r))
        if k == "frac_poisson":
            return log_frac_poisson_envelope(self.rd, self.param, self.zeta, t, r, self.kappa, regime)
        if k == "frac_heat":
            return log_frac_heat_envelope(self.rd, self.param, self.zeta, t, r, self.kappa, regime)
        if k == "phi0":
            return log_phi0_envelope(self.rd, r)
        # volume growth shape; t is ignored
        if r <= self.kappa:
            return self.rd.n * math.log(r)
        return ((self.rd.rank - 1) / 2.0) * math.log(r) + 2 * self.rd.rho_norm * r

    def __call__(self, t: float, r: float, regime: str | None = None) -> float:
        return math.exp(self.log(t, r, regime))


def fitted_band(ratios) -> tuple[float, float]:
    """(min, max) of kernel/envelope ratios; raises if any ratio is not positive and finite."""
    a = np.asarray(ratios, dtype=float)
    if a.size == 0 or not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ValueError("ratios must be positive and finite")
    return float(a.min()), float(a.max())
