"""Radial weights, the classes D_p(psi_t) and D_p^loc, and companion weights.

Membership is decided from leading tail rates.  For a weight

    v(r) = (1+r)^a exp(b r + c r^2 + d e^r) (r/(1+r))^{-s}

and a kernel whose log-profile behaves like G r^2 + E r + P log r at
infinity, the integrand (psi v^{-1/p})^{p'} sinh^2 r has a tail whose
double-exponential, Gaussian, exponential and polynomial coefficients are
compared in that order.  Truncated quadratures in log space only confirm
the verdict.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np
from scipy import interpolate, special

from .geometry import H3
from .kernels import SPHERE_AREA, KernelFamily, log_kernel_profile

MEMBER, NON_MEMBER, BORDERLINE = "member", "non-member", "borderline"
HEAT_T0_GRID = tuple(2.0 ** -k for k in range(0, 21))
TREND_RADII = (5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0)
_GL16 = special.roots_legendre(16)


class ConsistencyError(RuntimeError):
    """Two routes to the same verdict disagree."""


@dataclass(frozen=True)
class RadialWeight:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    s: float = 0.0
    name: str = ""

    @property
    def locally_integrable(self) -> bool:
        return self.s < H3.n

    def log(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = self.a * np.log1p(r) + self.b * r + self.c * r * r
            if self.d != 0:
                out = out + self.d * np.exp(r)
            if self.s != 0:
                out = out - self.s * (np.log(r) - np.log1p(r))
        return out

    def __call__(self, r):
        return np.exp(self.log(r))

    @classmethod
    def parse(cls, text: str) -> "RadialWeight":
        """'unit', or comma-separated key:value pairs with keys a, b, c, d, s, exp, poly, gauss, dexp."""
        if text in ("unit", "1", ""):
            return cls(name="unit")
        alias = {"exp": "b", "poly": "a", "gauss": "c", "dexp": "d"}
        kw = {}
        for part in text.split(","):
            key, _, val = part.partition(":")
            key = alias.get(key.strip(), key.strip())
            if key not in ("a", "b", "c", "d", "s"):
                raise ValueError(f"unknown weight parameter {key!r}")
            kw[key] = float(val)
        return cls(name=text, **kw)


@dataclass(frozen=True)
class TailRates:
    """Coefficients of e^r, r^2, r and log r in a log-integrand at infinity."""

    dexp: float
    gauss: float
    exp: float
    poly: float

    def leading(self) -> tuple[str, float]:
        for key in ("dexp", "gauss", "exp"):
            val = getattr(self, key)
            if abs(val) > 1e-12:
                return key, val
        return "poly", self.poly


def kernel_tail_rates(family: KernelFamily, t: float) -> TailRates:
    """Asymptotic log psi_t(r) = gauss r^2 + exp r + poly log r + O(1)."""
    rho, zeta = H3.rho_norm, family.zeta
    if family.kind == "heat":
        return TailRates(0.0, -1.0 / (4.0 * t), -rho, 1.0)
    order = family.sigma if family.kind == "frac_poisson" else family.alpha / 2.0
    if zeta > 0:
        return TailRates(0.0, 0.0, -(rho + zeta), -1.0 - order)
    return TailRates(0.0, 0.0, -rho, -2.0 - 2.0 * order)


def conjugate(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1.0)


def integrand_tail_rates(v: RadialWeight, family: KernelFamily, t: float, p: float) -> TailRates:
    """Tail of (psi_t v^{-1/p})^{p'} sinh^2, or of psi_t / v when p = 1."""
    k = kernel_tail_rates(family, t)
    if p == 1:
        return TailRates(-v.d, k.gauss - v.c, k.exp - v.b, k.poly - v.a)
    q = conjugate(p)
    e = q / p
    return TailRates(-e * v.d, q * k.gauss - e * v.c, q * k.exp - e * v.b + 2.0 * H3.rho_norm, q * k.poly - e * v.a)


def tail_verdict(rates: TailRates, p: float) -> str:
    key, val = rates.leading()
    if key != "poly":
        return MEMBER if val < 0 else NON_MEMBER
    if p == 1:
        return MEMBER if val <= 0 else NON_MEMBER
    if abs(val + 1.0) < 1e-12:
        return BORDERLINE
    return MEMBER if val < -1.0 else NON_MEMBER


def dploc_membership(v: RadialWeight, p: float) -> bool:
    """v^{-1/p} in L^{p'}_loc: near 0 the integrand is r^{s p'/p + n - 1}."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if p == 1:
        return v.s >= 0
    return -v.s * conjugate(p) / p < H3.n


# ------------------------------------------------------------------ numeric confirmation


def _trend_rule():
    edges = np.unique(np.concatenate([np.geomspace(1e-8, 1.0, 41), np.arange(1.0, 40.0, 0.5), np.arange(40.0, 640.0 + 1, 2.0)]))
    x, w = _GL16
    half = 0.5 * np.diff(edges)
    nodes = (half[:, None] * x + (0.5 * (edges[1:] + edges[:-1]))[:, None]).ravel()
    return nodes, np.log((half[:, None] * w).ravel())


_TREND_NODES, _TREND_LOGW = _trend_rule()


@lru_cache(maxsize=128)
def _trend_kernel(family: KernelFamily, t: float) -> np.ndarray:
    out = log_kernel_profile(family, t, _TREND_NODES)
    out.setflags(write=False)
    return out


def log_integrand(v: RadialWeight, family: KernelFamily, t: float, p: float, r=None) -> np.ndarray:
    """log of (psi_t v^{-1/p})^{p'} times the polar density (4 pi sinh^2); log(psi_t / v) when p = 1.

    ``r`` defaults to the trend quadrature nodes, where kernel values are cached.
    """
    if r is None:
        r, lk = _TREND_NODES, _trend_kernel(family, t)
    else:
        r = np.asarray(r, dtype=float)
        lk = log_kernel_profile(family, t, r)
    if p == 1:
        return lk - v.log(r)
    q = conjugate(p)
    return q * lk - (q / p) * v.log(r) + 2.0 * np.log(np.sinh(r)) + math.log(SPHERE_AREA)


def _shell_logs(F: np.ndarray, nodes: np.ndarray, logw: np.ndarray, p: float, radii) -> tuple[list[float], list[float]]:
    """Cumulative logs over B(o, R) and shell logs over R_prev < r <= R (sups when p = 1)."""
    cum, shells, prev = [], [], 0.0
    for R in radii:
        inner, shell = nodes <= R, (nodes > prev) & (nodes <= R)
        if p == 1:
            cum.append(float(np.max(F[inner])))
            shells.append(float(np.max(F[shell])))
        else:
            cum.append(float(special.logsumexp(F[inner] + logw[inner])))
            shells.append(float(special.logsumexp(F[shell] + logw[shell])))
        prev = R
    return cum, shells


def partial_log_norms(v: RadialWeight, family: KernelFamily, t: float, p: float, radii=TREND_RADII):
    """(cumulative, shell) logs of the truncated integrals; sups of psi/v when p = 1."""
    F = log_integrand(v, family, t, p)
    return _shell_logs(F, _TREND_NODES, _TREND_LOGW, p, radii)


FLAT_TOL = 0.05


def classify_trend(shell_logs: Sequence[float], p: float) -> str:
    """Trend of the contribution of the outermost shells [R/2, R].

    In a polynomial tail the log-increment tends to (degree + 1) log 2, so
    'decaying', 'flat' and 'growing' separate convergent, borderline and
    divergent tails; exponential and faster tails are far from the flat band.
    For p = 1 the shells carry sups and a flat trend is bounded.  The
    increment is Richardson-extrapolated, since the next-order correction
    in a polynomial tail halves with each doubling.
    """
    inc = np.diff(np.asarray(shell_logs, dtype=float))
    last = 2.0 * inc[-1] - inc[-2]
    if np.isnan(last):
        raise ValueError("shell trend is undefined")
    if last > FLAT_TOL:
        return "growing"
    if p == 1:
        return "bounded"
    return "decaying" if last < -FLAT_TOL else "flat"


def trend_for_verdict(verdict: str, p: float) -> str:
    if verdict == NON_MEMBER:
        return "growing"
    if verdict == BORDERLINE:
        return "flat"
    return "bounded" if p == 1 else "decaying"


@dataclass
class ClassReport:
    verdict: str
    p: float
    t0: float | None
    rates: TailRates | None
    origin_ok: bool
    partial_logs: list[float] = field(default_factory=list)
    shell_logs: list[float] = field(default_factory=list)
    trend: str = ""
    stable_over_t0_grid: bool | None = None
    other_trace: TailRates | None = None

    @property
    def consistent(self) -> bool:
        """Symbolic verdict and quadrature trend agree."""
        if not self.origin_ok:
            return self.verdict == NON_MEMBER
        return trend_for_verdict(self.verdict, self.p) == self.trend

    def to_dict(self) -> dict:
        out = asdict(self)
        out["consistent"] = self.consistent
        return out


def dp_membership(v: RadialWeight, family: KernelFamily, p: float, confirm: bool = True) -> ClassReport:
    """Decide v in D_p(psi_t): is psi_{t0} v^{-1/p} in L^{p'} for some t0 > 0?"""
    if p < 1:
        raise ValueError("p must be at least 1")
    origin_ok = dploc_membership(v, p)
    if family.kind == "heat":
        verdicts = [(t, tail_verdict(integrand_tail_rates(v, family, t, p), p)) for t in HEAT_T0_GRID]
        first = next((i for i, (_, vd) in enumerate(verdicts) if vd == MEMBER), None)
        if first is None:
            t0 = HEAT_T0_GRID[-1]
            verdict = BORDERLINE if any(vd == BORDERLINE for _, vd in verdicts) else NON_MEMBER
            stable = None
        else:
            t0 = verdicts[first][0]
            verdict = MEMBER
            stable = all(vd == MEMBER for _, vd in verdicts[first:])
    else:
        # tail rates of the subordinated kernels do not depend on t
        t0 = 1.0
        verdict = tail_verdict(integrand_tail_rates(v, family, t0, p), p)
        stable = None
    rates = integrand_tail_rates(v, family, t0, p)
    if not origin_ok:
        verdict = NON_MEMBER
    report = ClassReport(verdict, p, t0 if verdict == MEMBER else None, rates, origin_ok, stable_over_t0_grid=stable)
    if verdict == BORDERLINE:
        report.other_trace = integrand_tail_rates(v, family, t0 / 2.0, p)
    if confirm:
        t_num = t0 if verdict == MEMBER else 1.0
        report.partial_logs, report.shell_logs = partial_log_norms(v, family, t_num, p)
        report.trend = classify_trend(report.shell_logs, p)
    return report


# ------------------------------------------------------------------ translated criterion


@lru_cache(maxsize=64)
def _kernel_spline(family: KernelFamily, t: float):
    grid = np.unique(np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 200), np.arange(1.0, 700.0, 0.05)]))
    return interpolate.CubicSpline(grid, log_kernel_profile(family, t, grid))


def _log_kernel(family: KernelFamily, t: float, d):
    if family.kind == "heat":
        return log_kernel_profile(family, t, d)
    return _kernel_spline(family, t)(d)


def _translated_partials(v: RadialWeight, family: KernelFamily, t: float, p: float, s: float, radii=TREND_RADII):
    """(cumulative, shell) logs of int (psi_t(d(x,y)) v(y)^{-1/p})^{p'} dmu(y) over y in B(o, R), |x| = s.

    For p = 1 these are sups of psi_t(d(x,y)) / v(y); the kernel decreases
    in the distance, so the sup over a sphere about o sits at d = |rho - s|.
    """
    if s == 0:
        return partial_log_norms(v, family, t, p, radii)
    rho, lw_rho = _TREND_NODES, _TREND_LOGW
    if p == 1:
        F = _log_kernel(family, t, np.abs(rho - s)) - v.log(rho)
        return _shell_logs(F, rho, lw_rho, p, radii)
    q = conjugate(p)
    # inner mean over the sphere S(o, rho), written as an integral in d = d(x, y)
    frac = np.concatenate([[0.0], np.geomspace(1e-7, 1.0, 14)])
    x, w = special.roots_legendre(8)
    lo = np.abs(rho - s)[:, None]
    span = (rho + s)[:, None] - lo
    e = lo + span * frac[None, :]
    half = 0.5 * np.diff(e, axis=1)
    mid = 0.5 * (e[:, 1:] + e[:, :-1])
    dn = (mid[..., None] + half[..., None] * x).reshape(len(rho), -1)
    dw = (half[..., None] * w).reshape(len(rho), -1)
    with np.errstate(divide="ignore"):
        inner = special.logsumexp(
            q * _log_kernel(family, t, dn.ravel()).reshape(dn.shape) + np.log(np.sinh(dn)) + np.log(dw), axis=1
        ) - np.log(2.0 * math.sinh(s) * np.sinh(rho))
    F = inner - (q / p) * v.log(rho) + 2.0 * np.log(np.sinh(rho)) + math.log(SPHERE_AREA)
    return _shell_logs(F, rho, lw_rho, p, radii)


@dataclass
class TranslatedResult:
    member: bool | None
    t1: float
    log_norm: float  # log of the L^{p'} norm (sup when p = 1) on the largest truncation
    trend: str
    partial_logs: list[float]
    shell_logs: list[float]


def translated_criterion(v: RadialWeight, family: KernelFamily, p: float, s: float, report: ClassReport | None = None) -> TranslatedResult:
    """Check psi_{t1}(d(x, .)) v^{-1/p} in L^{p'} at a point x with |x| = s, t1 = t0 / c_gamma."""
    report = report or dp_membership(v, family, p, confirm=False)
    t0 = report.t0 if report.t0 is not None else 1.0
    t1 = t0 / family.c_gamma
    logs, shells = _translated_partials(v, family, t1, p, s)
    trend = classify_trend(shells, p)
    member = None if trend == "flat" else trend != "growing"
    if report.verdict != BORDERLINE and report.origin_ok and member is not None and member != (report.verdict == MEMBER):
        raise ConsistencyError(f"translated check at |x|={s} gives {trend} but the tail verdict is {report.verdict}")
    norm = logs[-1] if p == 1 else logs[-1] / conjugate(p)
    return TranslatedResult(member, t1, norm, trend, logs, shells)


def log_dual_norm(v: RadialWeight, family: KernelFamily, t: float, p: float, s: float) -> float:
    """log || psi_t(d(x, .)) v^{-1/p} ||_{p'} for |x| = s."""
    logs, _ = _translated_partials(v, family, t, p, s, radii=(640.0,))
    return logs[-1] if p == 1 else logs[-1] / conjugate(p)


# ------------------------------------------------------------------ companion weight


@dataclass(frozen=True)
class CompanionWeight:
    """u(r) = min(1, 1/Psi(r)) (1+r)^{-n-1} e^{-(2 rho + 1) r}, with log Psi tabulated."""

    radii: tuple[float, ...]
    log_psi: tuple[float, ...]

    def log_Psi(self, r):
        return np.interp(np.asarray(r, dtype=float), self.radii, self.log_psi)

    def log(self, r):
        r = np.asarray(r, dtype=float)
        damping = -(H3.n + 1) * np.log1p(r) - (2 * H3.rho_norm + 1) * r
        return np.minimum(0.0, -self.log_Psi(r)) + damping

    def __call__(self, r):
        return np.exp(self.log(r))


def companion_weight(v: RadialWeight, family: KernelFamily, p: float, t0: float, radii=None) -> CompanionWeight:
    report = dp_membership(v, family, p, confirm=False)
    if report.verdict != MEMBER:
        raise ValueError("companion weight needs a member weight")
    radii = np.linspace(0.0, 12.0, 25) if radii is None else np.asarray(radii, dtype=float)
    log_psi = [p * log_dual_norm(v, family, t0, p, float(s)) for s in radii]
    if not np.all(np.isfinite(log_psi)):
        raise ValueError("Psi is not finite on the grid; t0 is not a witness")
    return CompanionWeight(tuple(float(r) for r in radii), tuple(log_psi))


# ------------------------------------------------------------------ zoo


ZOO_FAMILIES = {
    "heat": KernelFamily.heat(1.0),
    "frac_heat": KernelFamily.frac_heat(1.5, 1.0),
    "frac_poisson": KernelFamily.frac_poisson(0.5, 1.0),
}


@dataclass(frozen=True)
class ZooEntry:
    name: str
    weight: RadialWeight
    expected: dict  # family -> {"1": verdict, "2": verdict}
    note: str = ""


def load_zoo() -> list[ZooEntry]:
    raw = json.loads(resources.files("symker").joinpath("data/zoo.json").read_text())
    out = []
    for e in raw["weights"]:
        w = RadialWeight(**{k: float(e["params"].get(k, 0.0)) for k in "abcds"}, name=e["name"])
        out.append(ZooEntry(e["name"], w, e["expected"], e.get("note", "")))
    return out


def zoo_entry(name: str) -> ZooEntry:
    for e in load_zoo():
        if e.name == name:
            return e
    raise KeyError(name)
