"""Heat, fractional heat and extension (fractional Poisson) kernels on H^3.

All kernels are radial; ``r`` is always the geodesic distance to the
origin.  The shift ``zeta`` selects the operator Delta - 1 + zeta^2, so
zeta = 1 is the Laplace-Beltrami heat flow and zeta = 0 has no spectral gap.

Two numerical paths exist for the subordinated kernels:

* scalar routines (``frac_heat_h3``, ``frac_poisson_h3``) use adaptive
  ``scipy.integrate.quad`` in log-time with regime breakpoints;
* vectorised profiles (``log_kernel_profile``) use a windowed composite
  Gauss-Legendre rule in log-time, computed entirely in log space so that
  deep tails neither underflow nor lose relative accuracy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate, special

from .geometry import H3, HPoint, log_phi0_h3, log_polar_density_h3, phi_lambda_h3

LOG_4PI = math.log(4.0 * math.pi)
SPHERE_AREA = 4.0 * math.pi


class DomainError(ValueError):
    """Parameters outside the range where a kernel is defined."""


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, estimate: float):
        super().__init__(f"{msg} (error estimate {estimate:.3e})")
        self.estimate = estimate


@dataclass(frozen=True)
class KernelFamily:
    """One of the three kernel families with its class constants.

    ``gamma`` is the parabolic homogeneity, ``d_gamma`` the cone constant
    and ``c_gamma`` the time dilation used by the comparison axiom.
    """

    kind: str
    zeta: float = 1.0
    alpha: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in ("heat", "frac_heat", "frac_poisson"):
            raise DomainError(f"unknown kernel kind {self.kind!r}")
        if not 0.0 <= self.zeta <= H3.rho_norm:
            raise DomainError("zeta must lie in [0, rho_norm]")
        if self.kind == "frac_heat" and not (self.alpha is not None and 0 < self.alpha < 2):
            raise DomainError("frac_heat needs alpha in (0, 2)")
        if self.kind == "frac_poisson" and not (self.sigma is not None and 0 < self.sigma < 1):
            raise DomainError("frac_poisson needs sigma in (0, 1)")

    @classmethod
    def heat(cls, zeta: float = 1.0) -> "KernelFamily":
        return cls("heat", zeta)

    @classmethod
    def frac_heat(cls, alpha: float, zeta: float = 1.0) -> "KernelFamily":
        return cls("frac_heat", zeta, alpha=alpha)

    @classmethod
    def frac_poisson(cls, sigma: float, zeta: float = 1.0) -> "KernelFamily":
        return cls("frac_poisson", zeta, sigma=sigma)

    @property
    def gamma(self) -> float:
        return {"heat": 2.0, "frac_heat": self.alpha, "frac_poisson": 1.0}[self.kind]

    @property
    def d_gamma(self) -> float:
        return 2.0 * H3.n if self.kind == "heat" else 1.0

    @property
    def c_gamma(self) -> float:
        return 4.0 if self.kind == "heat" else 1.0

    def label(self) -> str:
        if self.kind == "heat":
            return f"heat(zeta={self.zeta:g})"
        if self.kind == "frac_heat":
            return f"frac_heat(alpha={self.alpha:g},zeta={self.zeta:g})"
        return f"frac_poisson(sigma={self.sigma:g},zeta={self.zeta:g})"


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 0.0
    max_subdivisions: int = 400
    split_factor: float = 8.0

    def __post_init__(self):
        if self.rel_tol < 1e-12 and self.abs_tol <= 0:
            raise ValueError("rel_tol must be at least 1e-12")


@dataclass(frozen=True)
class SubordinatorSpec:
    alpha: float
    method: str = "stable_integral"

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise DomainError("alpha must lie in (0, 2)")
        if self.method not in ("closed_form_alpha1", "stable_integral"):
            raise ValueError(f"unknown subordinator method {self.method!r}")
        if self.method == "closed_form_alpha1" and self.alpha != 1:
            raise ValueError("closed form exists only for alpha = 1")


# ---------------------------------------------------------------- heat kernel


def log_heat_h3(t, r, zeta: float = 1.0):
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    out = -1.5 * (LOG_4PI + np.log(t)) + log_phi0_h3(r) - zeta * zeta * t - r * r / (4.0 * t)
    return out if out.ndim else float(out)


def heat_h3(t: float, r: float, zeta: float = 1.0, with_flag: bool = False):
    """Closed-form heat kernel of Delta - 1 + zeta^2 on H^3.

    Returns exact 0.0 when the value underflows; ``with_flag`` additionally
    returns whether that happened.
    """
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    if not 0 <= zeta <= 1:
        raise DomainError("zeta must lie in [0, 1]")
    lv = log_heat_h3(t, r, zeta)
    val = math.exp(lv) if lv > -745.0 else 0.0
    return (val, val == 0.0) if with_flag else val


def _inversion_integral(t: float, r: float) -> tuple[float, float]:
    """Return (log J, method) for J = int_0^inf e^{-t lam^2} phi_lam(r) lam^2 dlam.

    phi_lam(r) lam^2 = lam sin(lam r) / sinh r.  When r^2/4t is moderate the
    oscillatory integral is done on the real axis with a sine-weighted rule.
    Otherwise the contour is moved to Im lam = r/(2t), where the integrand
    stops oscillating and the exponentially small factor separates.
    """
    if r == 0.0:
        val, _ = integrate.quad(lambda x: x * x * math.exp(-t * x * x), 0.0, np.inf, epsabs=0, epsrel=1e-13)
        return math.log(val), 0.0
    log_sinh = 0.5 * log_polar_density_h3(r)
    if r * r / (4.0 * t) <= 12.0:
        cut = math.sqrt(80.0 / t)
        if r * cut < 1.0:
            # no oscillation on the support: r int x^2 sinc(x r) e^{-t x^2}
            val, _ = integrate.quad(
                lambda x: x * x * np.sinc(x * r / math.pi) * math.exp(-t * x * x), 0.0, np.inf, epsabs=0, epsrel=1e-13
            )
            return math.log(val) + math.log(r) - log_sinh, 1.0
        with warnings.catch_warnings():
            # quadpack flags roundoff at 1e-13; its error estimate is checked instead
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                lambda x: x * math.exp(-t * x * x), 0.0, cut, weight="sin", wvar=r, epsabs=0, epsrel=1e-13, limit=400
            )
        if err > 1e-10 * abs(val):
            raise QuadratureError("inversion integral did not converge", err)
        return math.log(val) - log_sinh, 1.0
    y0 = r / (2.0 * t)
    # along lam = x + i y0: lam e^{i lam r - t lam^2} = (x + i y0) e^{-t x^2} e^{-r^2/4t}
    def im_part(x):
        z = complex(x, y0)
        w = z * np.exp(1j * z * r - t * z * z + r * r / (4.0 * t))
        return w.imag

    val, _ = integrate.quad(im_part, -np.inf, np.inf, epsabs=0, epsrel=1e-13, limit=400)
    return math.log(0.5 * val) - r * r / (4.0 * t) - log_sinh, 2.0


def plancherel_constant() -> float:
    """c in h_t(r) = c e^{-t} int_0^inf lam sin(lam r) e^{-t lam^2} dlam / sinh r, from |c(lam)|^{-2} = lam^2."""
    return 1.0 / (2.0 * math.pi**2)


def spherical_inversion_h3(t: float, r: float, log: bool = False) -> float:
    """Heat kernel of the Laplace-Beltrami operator by spherical Fourier inversion."""
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    lj, _ = _inversion_integral(t, r)
    lv = math.log(plancherel_constant()) - t + lj
    if log:
        return lv
    return math.exp(lv) if lv > -745.0 else 0.0


# ---------------------------------------------------------------- subordinator


def _kanter_log_K(phi, beta):
    a = 1.0 / (1.0 - beta)
    return (
        beta * a * np.log(np.sin(beta * phi))
        + np.log(np.sin((1.0 - beta) * phi))
        - a * np.log(np.sin(phi))
    )


def _kanter_K0(beta):
    return (1.0 - beta) * beta ** (beta / (1.0 - beta))


_GL12 = special.roots_legendre(12)


def stable_log_density_integral(beta: float, x) -> np.ndarray:
    """log of the density with Laplace transform exp(-u^beta), by the Kanter integral.

    Vectorised composite Gauss-Legendre in the angle, panels graded towards 0
    where the integrand concentrates for small x.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = 1.0 / (1.0 - beta)
    X = x ** (-beta * a)
    K0 = _kanter_K0(beta)
    c = np.minimum(math.pi / 64.0, 0.05 / np.sqrt(np.maximum(X, 1e-300)))
    m = 24
    frac = np.linspace(0.0, 1.0, m + 1)
    half = math.pi / 2.0
    # geometric panels from c up to pi/2, then mirrored geometric panels towards pi
    left = c[:, None] * (half / c[:, None]) ** frac[None, :]
    right = math.pi - 1e-9 * (half / 1e-9) ** frac[::-1]
    edges = np.concatenate(
        [np.zeros((x.size, 1)), left, np.broadcast_to(right[1:], (x.size, m)), np.full((x.size, 1), math.pi)],
        axis=1,
    )
    lo, hi = edges[:, :-1], edges[:, 1:]
    nodes, wts = _GL12
    phi = (0.5 * (hi - lo))[..., None] * nodes + (0.5 * (hi + lo))[..., None]
    w = (0.5 * (hi - lo))[..., None] * wts
    lK = _kanter_log_K(phi, beta)
    K = np.exp(lK)
    expo = lK - (K - K0) * X[:, None, None]
    lint = special.logsumexp(expo + np.log(w), axis=(1, 2))
    out = math.log(beta * a / math.pi) - a * np.log(x) - K0 * X + lint
    return out


def stable_log_density_series(beta: float, x, terms: int = 80) -> np.ndarray:
    """Convergent large-x series; accurate when x^{-beta} is at most about 1."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = np.arange(1, terms + 1)
    logc = special.gammaln(k * beta + 1.0) - special.gammaln(k + 1.0)
    sgn = (-1.0) ** (k + 1) * np.sin(k * math.pi * beta)
    y = x ** (-beta)
    ly = np.log(y)[:, None]
    terms_v = sgn[None, :] * np.exp(logc[None, :] + k[None, :] * ly)
    s = terms_v.sum(axis=1)
    return np.log(s / math.pi) - np.log(x)


_X_SERIES = 0.8  # the series takes over once x^{-beta/(1-beta)} drops below this
_X_TABLE_MAX = 2.0e4
_X_TABLE_MIN = 1.0e-8


@lru_cache(maxsize=32)
def _stable_table(beta: float):
    a = 1.0 / (1.0 - beta)
    x_lo = _X_TABLE_MAX ** (-1.0 / (beta * a))
    x_mid = _X_SERIES ** (-1.0 / (beta * a))
    x_hi = _X_TABLE_MIN ** (-1.0 / (beta * a))
    n = int(math.ceil((math.log(x_hi) - math.log(x_lo)) / 0.004)) + 1
    lx = np.linspace(math.log(x_lo), math.log(x_hi), n)
    lg = np.empty_like(lx)
    inner = lx < math.log(x_mid)
    lg[inner] = stable_log_density_integral(beta, np.exp(lx[inner]))
    for i in range(0, int((~inner).sum()), 2000):
        idx = np.flatnonzero(~inner)[i : i + 2000]
        lg[idx] = stable_log_density_series(beta, np.exp(lx[idx]))
    return interpolate.CubicSpline(lx, lg), x_lo, x_hi


def stable_log_density(beta: float, x, fast: bool = False) -> np.ndarray:
    """log g_beta(x) for the one-sided stable law with Laplace transform exp(-u^beta).

    Exact mode uses the Kanter integral for small x and the convergent
    series for large x.  ``fast`` reads a cached cubic spline of log g in
    log x (relative error about 1e-10) and falls back to a 12-term series
    beyond the table.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    a = 1.0 / (1.0 - beta)
    X = x ** (-beta * a)
    if not fast:
        ser = X < _X_SERIES
        if ser.any():
            out[ser] = stable_log_density_series(beta, x[ser])
        if (~ser).any():
            out[~ser] = stable_log_density_integral(beta, x[~ser])
        return out
    spline, x_lo, x_hi = _stable_table(beta)
    tab = (x >= x_lo) & (x <= x_hi)
    if tab.any():
        out[tab] = spline(np.log(x[tab]))
    far = x > x_hi
    if far.any():
        out[far] = stable_log_density_series(beta, x[far], terms=12)
    deep = x < x_lo
    if deep.any():
        # density below exp(-K0 * 2e4): keep only the dominant exponential
        out[deep] = spline(math.log(x_lo)) - _kanter_K0(beta) * (X[deep] - _X_TABLE_MAX)
    return out


def log_subordinator_density(spec: SubordinatorSpec, t: float, s, fast: bool = False):
    s = np.asarray(s, dtype=float)
    if spec.method == "closed_form_alpha1":
        out = np.log(t / (2.0 * math.sqrt(math.pi))) - 1.5 * np.log(s) - t * t / (4.0 * s)
    else:
        beta = spec.alpha / 2.0
        scale = t ** (1.0 / beta)
        out = stable_log_density(beta, np.atleast_1d(s) / scale, fast=fast) - math.log(scale)
        out = out.reshape(s.shape)
    return out if np.ndim(out) else float(out)


def subordinator_density(spec: SubordinatorSpec, t: float, s):
    """Density eta_t^alpha(s) with Laplace transform exp(-t u^{alpha/2})."""
    if t <= 0 or np.any(np.asarray(s) <= 0):
        raise DomainError("need t > 0 and s > 0")
    return np.exp(log_subordinator_density(spec, t, s))


def subordinator_constant(alpha: float) -> float:
    """Exponent constant c_alpha of the small-time regime bound."""
    return ((2 - alpha) / 2) * (alpha / 2) ** (alpha / (2 - alpha))


def log_subordinator_bound_shape(alpha: float, t: float, s):
    """Log of the two-regime comparison function for eta_t^alpha (without constants)."""
    s = np.asarray(s, dtype=float)
    thr = t ** (2.0 / alpha)
    ls = np.log(s)
    small = (
        math.log(t) / (2 - alpha)
        - (4 - alpha) / (4 - 2 * alpha) * ls
        - subordinator_constant(alpha) * t ** (2 / (2 - alpha)) * np.exp(-alpha / (2 - alpha) * ls)
    )
    large = math.log(t) - (1 + alpha / 2) * ls
    return np.where(s <= thr, small, large)


def subordinator_bound_shape(alpha: float, t: float, s):
    """Two-regime comparison function for eta_t^alpha (without constants)."""
    return np.exp(log_subordinator_bound_shape(alpha, t, s))


def laplace_transform_subordinator(spec: SubordinatorSpec, t: float, u: float) -> float:
    """int_0^inf eta_t(s) e^{-u s} ds by adaptive quadrature in log-time."""
    thr = t ** (2.0 / spec.alpha)

    def f(v):
        s = math.exp(v)
        return math.exp(float(log_subordinator_density(spec, t, s)) - u * s + v)

    lo, hi = math.log(thr) - 45.0, math.log(thr) + 40.0 / (spec.alpha / 2.0)
    if u > 0:
        hi = min(hi, math.log(60.0 / u) + 1.0) if 60.0 / u > thr else math.log(thr) + 5.0
    pts = sorted({math.log(thr), math.log(thr) - 3, math.log(thr) + 3})
    pts = [p for p in pts if lo < p < hi]
    return _quad_sum(f, [lo, *pts, hi], QuadratureSpec(rel_tol=1e-12))


# ---------------------------------------------------------------- quadrature helpers


def _quad_sum(f, edges, spec: QuadratureSpec) -> float:
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v, e = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions)
            except integrate.IntegrationWarning:
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                v, e = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions)
                if e > 1e3 * max(spec.rel_tol * abs(v), spec.abs_tol, 1e-300):
                    raise QuadratureError("subordination integral did not converge", e)
        total += v
        err += e
    return total


def _log_time_edges(center_pts, lo, hi, log_integrand):
    """Breakpoints in u = log s: regime splits plus the coarse-grid peak."""
    grid = np.linspace(lo, hi, 241)
    vals = np.array([log_integrand(u) for u in grid])
    peak = grid[int(np.argmax(vals))]
    keep = vals > vals.max() - 80.0
    a = grid[max(int(np.argmax(keep)) - 1, 0)]
    b = grid[min(len(grid) - 1 - int(np.argmax(keep[::-1])) + 1, len(grid) - 1)]
    pts = {a, b, peak, *[p for p in center_pts if a < p < b]}
    return sorted(pts)


def _log_heat_in_s(u, r, zeta):
    s = math.exp(u)
    return -1.5 * (LOG_4PI + u) + float(log_phi0_h3(r)) - zeta * zeta * s - r * r / (4.0 * s)


def frac_heat_h3(
    alpha: float,
    zeta: float,
    t: float,
    r: float,
    quad: QuadratureSpec = QuadratureSpec(),
    method: str | None = None,
) -> float:
    """P_t^{alpha,zeta}(r) = int_0^inf h_s^zeta(r) eta_t^alpha(s) ds by adaptive quadrature.

    The s-axis is split at t^{2/alpha} (the subordinator's scale) and at
    (t^{1/alpha} + r)^2 (where the Gaussian factor switches on).
    """
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    if method is None:
        method = "closed_form_alpha1" if alpha == 1 else "stable_integral"
    spec = SubordinatorSpec(alpha, method)

    def lf(u):
        return _log_heat_in_s(u, r, zeta) + float(log_subordinator_density(spec, t, math.exp(u))) + u

    s1 = (2.0 / alpha) * math.log(t)
    s2 = 2.0 * math.log(t ** (1.0 / alpha) + r)
    lo = min(s1, s2) - 45.0
    hi = max(s1, s2) + 70.0
    edges = _log_time_edges([s1, s2], lo, hi, lf)
    return _quad_sum(lambda u: math.exp(lf(u)), edges, quad)


def _log_extension_weight(sigma: float, t: float, s):
    """log of t^{2 sigma}/(4^sigma Gamma(sigma)) e^{-t^2/4s} s^{-1-sigma}."""
    s = np.asarray(s, dtype=float)
    return (
        2 * sigma * math.log(t)
        - sigma * math.log(4.0)
        - special.gammaln(sigma)
        - t * t / (4.0 * s)
        - (1.0 + sigma) * np.log(s)
    )


def frac_poisson_h3(
    sigma: float, zeta: float, t: float, r: float, quad: QuadratureSpec = QuadratureSpec()
) -> float:
    """Extension kernel Q_t^{sigma,zeta}(r) by subordination of the heat kernel.

    Splits at b/eta and eta b with b = sqrt(t^2+r^2)/(2 zeta) when zeta > 0,
    otherwise at t^2 + r^2.
    """
    if t <= 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    if not 0 < sigma < 1:
        raise DomainError("sigma must lie in (0, 1)")

    def lf(u):
        return _log_heat_in_s(u, r, zeta) + float(_log_extension_weight(sigma, t, math.exp(u))) + u

    R2 = t * t + r * r
    if zeta > 0:
        b = math.sqrt(R2) / (2.0 * zeta)
        splits = [math.log(b / quad.split_factor), math.log(b * quad.split_factor)]
    else:
        splits = [math.log(R2)]
    lo = math.log(R2) - 50.0
    hi = max(splits) + 70.0
    edges = _log_time_edges(splits, lo, hi, lf)
    return _quad_sum(lambda u: math.exp(lf(u)), edges, quad)


# ---------------------------------------------------------------- vectorised profiles

_GL16 = special.roots_legendre(16)


def _windowed_log_integral(log_integrand, lo, hi, n_coarse=321, panels=48):
    """log int exp(F(u, j)) du for a batch j, each on its own window.

    ``log_integrand(u)`` takes u of shape (batch, k) and returns the same shape.
    A coarse scan locates the region where F is within 80 of its maximum;
    a composite 16-point Gauss-Legendre rule then integrates that window.
    """
    nb = lo.shape[0]
    frac = np.linspace(0.0, 1.0, n_coarse)
    ucoarse = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    F = log_integrand(ucoarse)
    fmax = F.max(axis=1, keepdims=True)
    keep = F > fmax - 80.0
    first = np.argmax(keep, axis=1)
    last = n_coarse - 1 - np.argmax(keep[:, ::-1], axis=1)
    idx = np.arange(nb)
    a = ucoarse[idx, np.maximum(first - 1, 0)]
    b = ucoarse[idx, np.minimum(last + 1, n_coarse - 1)]
    pf = np.linspace(0.0, 1.0, panels + 1)
    edges = a[:, None] + (b - a)[:, None] * pf[None, :]
    plo, phi_ = edges[:, :-1], edges[:, 1:]
    x, w = _GL16
    half = 0.5 * (phi_ - plo)
    u = (half[..., None] * x + (0.5 * (phi_ + plo))[..., None]).reshape(nb, -1)
    lw = (np.log(half)[..., None] + np.log(w)).reshape(nb, -1)
    return special.logsumexp(log_integrand(u) + lw, axis=1)


_CHUNK = 48


def log_reduced_profile(family: KernelFamily, t: float, r) -> np.ndarray:
    """log(psi_t(r) / phi_0(r)).

    Every kernel here is phi_0(r) times a function of r alone that carries
    no exponential growth, so tail integrals built from this quantity avoid
    cancelling the e^{+r} and e^{-r} factors numerically.
    """
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = r.ravel()
    if t <= 0 or np.any(r < 0):
        raise DomainError("need t > 0 and r >= 0")
    if family.kind == "heat":
        out = -1.5 * (LOG_4PI + math.log(t)) - family.zeta ** 2 * t - r * r / (4.0 * t)
        return out.reshape(shape)
    out = np.empty_like(r)
    for i in range(0, r.size, _CHUNK):
        out[i : i + _CHUNK] = _log_subordinated_profile(family, t, r[i : i + _CHUNK])
    return out.reshape(shape)


def log_kernel_profile(family: KernelFamily, t: float, r) -> np.ndarray:
    """log psi_t(r) for an array of radii, computed in log space throughout."""
    return log_reduced_profile(family, t, r) + log_phi0_h3(np.asarray(r, dtype=float))


def _log_subordinated_profile(family: KernelFamily, t: float, r: np.ndarray) -> np.ndarray:
    z2 = family.zeta ** 2
    if family.kind == "frac_heat":
        alpha = family.alpha
        spec = SubordinatorSpec(alpha, "closed_form_alpha1" if alpha == 1 else "stable_integral")
        R2 = r * r
        scale = (2.0 / alpha) * math.log(t)

        def lw(s):
            return log_subordinator_density(spec, t, s, fast=True)

        base_lo = np.minimum(scale, np.log(np.maximum(R2, 1e-300))) - 45.0
        base_lo = np.maximum(base_lo, scale - 45.0)
        base_hi = np.maximum(scale, np.log(np.maximum(R2, 1e-300))) + 70.0
    else:
        sigma = family.sigma
        R2 = r * r + t * t

        def lw(s):
            return _log_extension_weight(sigma, t, s)

        base_lo = np.log(R2) - 50.0
        base_hi = np.log(R2) + 70.0

    if z2 > 0:
        # beyond 800/zeta^2 the factor e^{-zeta^2 s} is negligible
        base_hi = np.minimum(base_hi, math.log(800.0 / z2) + np.maximum(0, np.log(np.sqrt(R2) + 1.0)))
        base_hi = np.maximum(base_hi, base_lo + 5.0)

    rr = r[:, None]

    def F(u):
        s = np.exp(u)
        return -1.5 * (LOG_4PI + u) - z2 * s - rr * rr / (4.0 * s) + lw(s) + u

    return _windowed_log_integral(F, base_lo, base_hi)


def kernel_profile(family: KernelFamily, t: float, r) -> np.ndarray:
    return np.exp(log_kernel_profile(family, t, r))


def kernel_value(family: KernelFamily, t: float, r: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Single kernel value via the adaptive scalar routines."""
    if family.kind == "heat":
        return heat_h3(t, r, family.zeta)
    if family.kind == "frac_heat":
        return frac_heat_h3(family.alpha, family.zeta, t, r, quad)
    return frac_poisson_h3(family.sigma, family.zeta, t, r, quad)


# ---------------------------------------------------------------- multipliers and masses


def multiplier(family: KernelFamily, t: float, lam) -> np.ndarray:
    """Spherical transform m_t(lambda) of psi_t."""
    lam = np.asarray(lam, dtype=float)
    k2 = lam * lam + family.zeta ** 2
    if family.kind == "heat":
        out = np.exp(-t * k2)
    elif family.kind == "frac_heat":
        out = np.exp(-t * k2 ** (family.alpha / 2.0))
    else:
        sigma = family.sigma

        def one(k2v):
            if k2v == 0.0:
                return 1.0

            def f(u):
                s = math.exp(u)
                return math.exp(float(_log_extension_weight(sigma, t, s)) - k2v * s + u)

            # peak of e^{-k^2 s - t^2/4s} sits at s = t/(2k)
            c = math.log(t / (2 * math.sqrt(k2v)))
            return _quad_sum(f, [c - 60, c - 3, c, c + 3, c + 60], QuadratureSpec(rel_tol=1e-12))

        out = np.vectorize(one, otypes=[float])(k2)
    return out if out.ndim else float(out)


def multiplier_frac_poisson_bessel(sigma: float, zeta: float, t: float, lam) -> np.ndarray:
    """Closed form (2/Gamma(sigma)) (tk/2)^sigma K_sigma(tk), k^2 = lam^2 + zeta^2."""
    k = np.sqrt(np.asarray(lam, dtype=float) ** 2 + zeta ** 2)
    z = t * k
    with np.errstate(invalid="ignore"):
        out = 2.0 / special.gamma(sigma) * (z / 2.0) ** sigma * special.kv(sigma, z)
    return np.where(z == 0, 1.0, out)


def radial_log_integral(log_integrand, v_lo: float = -15.0, v_hi: float = 100.0, panel: float = 0.25) -> float:
    """log of 4 pi int_0^inf exp(F(r)) dr using r = e^v and composite Gauss-Legendre."""
    n = int(math.ceil((v_hi - v_lo) / panel))
    edges = np.linspace(v_lo, v_hi, n + 1)
    x, w = _GL16
    half = 0.5 * (edges[1:] - edges[:-1])
    v = (half[:, None] * x + (0.5 * (edges[1:] + edges[:-1]))[:, None]).ravel()
    lw = (np.log(half)[:, None] + np.log(w)).ravel()
    r = np.exp(v)
    return math.log(SPHERE_AREA) + float(special.logsumexp(log_integrand(r) + v + lw))


def _radial_cutoff(family: KernelFamily, t: float) -> float:
    """log of a radius beyond which radial integrands of psi_t are negligible."""
    if family.kind == "heat":
        return math.log(60.0 * math.sqrt(t) + 60.0)
    if family.zeta > 0:
        return math.log(900.0 / family.zeta + 4.0 * t)
    return 100.0


def spherical_transform_at_zero(family: KernelFamily, t: float) -> float:
    """int psi_t phi_0 dmu, which equals m_t(0); phi_0^2 sinh^2 r = r^2 exactly."""
    return math.exp(
        radial_log_integral(lambda r: log_reduced_profile(family, t, r) + 2.0 * np.log(r), v_hi=_radial_cutoff(family, t))
    )


def total_mass(family: KernelFamily, t: float, v_hi: float | None = None) -> float:
    """int psi_t dmu; infinite for the subordinated kernels when zeta < 1."""
    vh = (_radial_cutoff(family, t) if family.kind == "heat" else 100.0) if v_hi is None else v_hi
    return math.exp(
        radial_log_integral(
            lambda r: log_reduced_profile(family, t, r) + np.log(r) + 0.5 * log_polar_density_h3(r), v_hi=vh
        )
    )


def spherical_transform_numeric(family: KernelFamily, t: float, lam: float) -> float:
    """int psi_t phi_lam dmu by radial quadrature (oscillatory, moderate lam only)."""

    def f(r):
        return float(kernel_profile(family, t, np.array([r]))[0] * phi_lambda_h3(lam, r) * math.sinh(r) ** 2)

    edges = [0.0, 0.5, 1, 2, 4, 8, 16, 32, 60]
    return SPHERE_AREA * _quad_sum(f, edges, QuadratureSpec(rel_tol=1e-10))


# ---------------------------------------------------------------- distinguished lift


def modular_function(p: HPoint, rd=H3) -> float:
    """delta~ = z^{-2 rho} in upper half-space coordinates (A-coordinate log z)."""
    _, _, z = p.to_halfspace()
    return z ** (-2.0 * rd.rho_norm)


def distinguished_lift(psi_value: float, p: HPoint) -> float:
    """delta~(p)^{1/2} psi_t(|p|); pass a zeta = 0 kernel value."""
    _, _, z = p.to_halfspace()
    if z <= 0:
        raise DomainError("half-space height must be positive")
    return z ** (-H3.rho_norm) * psi_value


def lift_family(family: KernelFamily) -> KernelFamily:
    """Base kernel of the lifted family: same parameters with zeta = 0."""
    return KernelFamily(family.kind, 0.0, family.alpha, family.sigma)
