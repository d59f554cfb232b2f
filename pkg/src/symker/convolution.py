"""Convolution with radial kernels, local averages and local maximal operators.

Everything is reduced to one-dimensional integrals: for a radial f and a
point x at distance s from the origin, the mean of f over the geodesic
sphere of radius r about x is

    (1/2) int_{-1}^{1} f(arccosh(cosh s cosh r - sinh s sinh r c)) dc.

Radial functions declare the radii where they are not smooth (``breaks``);
those radii are turned into split points in c and in r, so indicators of
balls and shells are integrated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, special

from .geometry import H3, HPoint, ball_volume, distance_from_origin, log_polar_density_h3, sphere_quadrature
from .kernels import SPHERE_AREA, KernelFamily, log_kernel_profile

_GL = {m: special.roots_legendre(m) for m in (8, 16, 24, 32)}


@dataclass(frozen=True)
class RadialFunction:
    """f(x) = profile(d(o, x)).

    ``profile`` maps an array of radii to values.  ``support`` is the radius
    beyond which f vanishes (may be inf).  ``breaks`` lists radii where the
    profile or its derivatives jump.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    support: float = math.inf
    breaks: tuple[float, ...] = ()
    name: str = "f"
    tags: tuple[str, ...] = ()

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(self.profile(r), dtype=float)
        if math.isfinite(self.support):
            out = np.where(r <= self.support, out, 0.0)
        return out

    def scaled(self, c: float) -> "RadialFunction":
        return RadialFunction(lambda r: c * self.profile(r), self.support, self.breaks, f"{c:g}*{self.name}", self.tags)


def indicator_ball(radius: float) -> RadialFunction:
    return RadialFunction(lambda r: np.ones_like(r), radius, (radius,), f"1_B({radius:g})", ("indicator",))


def indicator_shell(a: float, b: float) -> RadialFunction:
    def prof(r):
        return ((r >= a) & (r <= b)).astype(float)

    return RadialFunction(prof, b, tuple(x for x in (a, b) if x > 0), f"1_[{a:g},{b:g}]", ("indicator",))


def smooth_bump(radius: float, height: float = 1.0) -> RadialFunction:
    """height * exp(1 - 1/(1 - (r/radius)^2)) on B(o, radius), C-infinity."""

    def prof(r):
        u = np.clip(np.asarray(r) / radius, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            out = height * np.exp(1.0 - 1.0 / (1.0 - u * u))
        return np.where(u < 1.0, out, 0.0)

    return RadialFunction(prof, radius, (), f"bump({radius:g})", ("smooth",))


def constant(c: float = 1.0) -> RadialFunction:
    return RadialFunction(lambda r: np.full_like(np.asarray(r, dtype=float), c), math.inf, (), f"const({c:g})")


# ------------------------------------------------------------------ sphere means


TINY_RADIUS = 1e-6


def _log_sinh(x):
    return 0.5 * log_polar_density_h3(x)


def sphere_mean(f: RadialFunction, s: float, r, m: int = 16, panel: float = 1.0) -> np.ndarray:
    """Mean of f over the geodesic sphere of radius r about a point at distance s from o.

    On H^3 this is int_{|s-r|}^{s+r} f(d) sinh d dd / (2 sinh s sinh r).  Each
    range is cut into panels no wider than ``panel`` and at the breaks of f.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    # the mean differs from the centre value by O(radius^2)
    if s < TINY_RADIUS:
        return f(r)
    lo, hi = np.abs(s - r), s + r
    n_pan = int(min(64, max(1, math.ceil(2.0 * min(s, float(r.max())) / panel))))
    u = np.linspace(0.0, 1.0, n_pan + 1)
    cols = [lo[:, None] + (hi - lo)[:, None] * u]
    marks = [b for b in (*f.breaks, f.support) if 0 < b < math.inf]
    if marks:
        cols.append(np.clip(np.asarray(marks)[None, :], lo[:, None], hi[:, None]))
    edges = np.sort(np.concatenate(cols, axis=1), axis=1)
    x, w = _GL[m]
    a, b = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (b - a)
    d = half[..., None] * x + (0.5 * (a + b))[..., None]
    logw = np.log(np.maximum(half, 1e-300))[..., None] + np.log(w) + _log_sinh(d)
    logw = logw - (_log_sinh(s) + _log_sinh(r) + math.log(2.0))[:, None, None]
    vals = f(d)
    out = np.sum(np.where(half[..., None] > 0, vals * np.exp(logw), 0.0), axis=(1, 2))
    return np.where(r >= TINY_RADIUS, out, f(np.full_like(r, s)))


def _nonsmooth_radii(f: RadialFunction, s: float) -> list[float]:
    out = []
    for b in [*f.breaks, f.support]:
        if b > 0 and math.isfinite(b):
            out.extend([abs(s - b), s + b])
    return out


def _radial_rule(edges: Sequence[float], m: int = 16) -> tuple[np.ndarray, np.ndarray]:
    e = np.unique(np.asarray([x for x in edges if np.isfinite(x)], dtype=float))
    x, w = _GL[m]
    half = 0.5 * np.diff(e)
    nodes = (half[:, None] * x + (0.5 * (e[1:] + e[:-1]))[:, None]).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


# ------------------------------------------------------------------ convolution


@dataclass
class ConvolutionResult:
    value: float
    status: str  # "finite", "divergent" or "inconclusive"
    partials: list[tuple[float, float]] = field(default_factory=list)

    def __float__(self):
        return self.value


def _kernel_scale(family: KernelFamily, t: float) -> float:
    return t ** (1.0 / family.gamma)


@lru_cache(maxsize=256)
def _kernel_table(family: KernelFamily, t: float, hi: float, n: int):
    scale = _kernel_scale(family, t)
    grid = np.concatenate([[0.0], np.geomspace(min(scale, hi) * 1e-4, hi, n)])
    return interpolate.CubicSpline(grid, log_kernel_profile(family, t, grid))


def tabulated_log_kernel(family: KernelFamily, t: float, r, n: int = 1600) -> np.ndarray:
    """log psi_t(r) from a cached cubic spline on a graded grid (relative error about 1e-9).

    The heat kernel is cheap and is always evaluated directly.
    """
    r = np.asarray(r, dtype=float)
    if family.kind == "heat" or r.size == 0:
        return log_kernel_profile(family, t, r)
    hi = 2.0 ** max(0, math.ceil(math.log2(max(float(r.max()), 1.0))))
    return _kernel_table(family, float(t), hi, n)(r)


def _convolve_on(f, family, t, s, r_max, kernel_cutoff, m, tabulate=False):
    scale = _kernel_scale(family, t)
    hi = r_max if kernel_cutoff is None else min(r_max, kernel_cutoff)
    geo = np.geomspace(min(1e-4 * scale, hi * 1e-6), hi, 64)
    fine = np.linspace(0.0, hi, int(min(4000, max(8, 4 * hi))) + 1)
    extra = [x for x in _nonsmooth_radii(f, s) if 0 < x < hi]
    if kernel_cutoff is not None and kernel_cutoff < r_max:
        extra.append(kernel_cutoff)
    nodes, w = _radial_rule([0.0, *geo, *fine, *extra, hi], m)
    logk = tabulated_log_kernel(family, t, nodes) if tabulate else log_kernel_profile(family, t, nodes)
    weight = np.exp(logk + log_polar_density_h3(nodes)) * w * SPHERE_AREA
    return float(np.sum(weight * sphere_mean(f, s, nodes)))


def convolve(
    f: RadialFunction,
    family: KernelFamily,
    t: float,
    x: HPoint | float,
    kernel_cutoff: float | None = None,
    max_doublings: int = 12,
    m: int = 16,
    tabulate: bool = False,
) -> ConvolutionResult:
    """T_t f(x) = int f(y) psi_t(d(y, x)) dmu(y).

    ``x`` may be an HPoint or its distance to the origin.  With unbounded
    support the integral is truncated at radii 2^k; a divergence verdict is
    issued when the truncated value grows at least tenfold across two
    consecutive doublings.  ``kernel_cutoff`` restricts the kernel to a ball;
    ``tabulate`` reads the kernel from a cached spline, for repeated calls.
    """
    s = distance_from_origin(x) if isinstance(x, HPoint) else float(x)
    if math.isfinite(f.support):
        r_max = s + f.support
        return ConvolutionResult(_convolve_on(f, family, t, s, r_max, kernel_cutoff, m, tabulate), "finite")
    if kernel_cutoff is not None:
        return ConvolutionResult(_convolve_on(f, family, t, s, kernel_cutoff, kernel_cutoff, m, tabulate), "finite")
    partials = []
    for k in range(1, max_doublings + 1):
        R = 2.0 ** k
        v = _convolve_on(f, family, t, s, R, None, m, tabulate)
        partials.append((R, v))
        if len(partials) >= 3:
            a, b, c = (abs(p[1]) for p in partials[-3:])
            if a > 0 and b >= 10 * a and c >= 10 * b:
                return ConvolutionResult(c, "divergent", partials)
            if c > 0 and abs(c - b) <= 1e-12 * abs(c) and abs(b - a) <= 1e-9 * abs(c):
                return ConvolutionResult(c, "finite", partials)
    return ConvolutionResult(partials[-1][1], "inconclusive", partials)


# ------------------------------------------------------------------ averages and maximal functions


def local_average(f: RadialFunction, r: float, x: HPoint | float, m: int = 16) -> float:
    """A_r |f|(x): mean of |f| over the ball B(x, r)."""
    if r <= 0:
        raise ValueError("radius must be positive")
    s = distance_from_origin(x) if isinstance(x, HPoint) else float(x)
    g = RadialFunction(lambda u: np.abs(f.profile(u)), f.support, f.breaks)
    extra = [u for u in _nonsmooth_radii(g, s) if 0 < u < r]
    nodes, w = _radial_rule([0.0, *np.linspace(0, r, 9), *extra, r], m)
    integral = SPHERE_AREA * float(np.sum(np.sinh(nodes) ** 2 * w * sphere_mean(g, s, nodes)))
    return integral / ball_volume(H3, r)


def radius_grid(R: float, n: int) -> np.ndarray:
    """Radii in (0, R): n geometric points from 1e-3 R plus n equispaced points, ending at R(1 - 1e-9)."""
    j = np.arange(n)
    base = R * (1e-3) ** (j / max(n - 1, 1))
    lin = R * (j + 1) / n
    return np.unique(np.minimum(np.concatenate([base, lin]), R * (1 - 1e-9)))


def maximal_MR(f: RadialFunction, R: float, x: HPoint | float, r_grid=None, n: int = 48) -> float:
    """M_R f(x) = sup_{0<r<R} A_r |f|(x), as a max over a geometric radius grid.

    All grid radii share one radial rule whose panel edges include the grid,
    so every ball integral is a partial sum of the same sphere means.
    """
    grid = radius_grid(R, n) if r_grid is None else np.asarray(r_grid, dtype=float)
    s = distance_from_origin(x) if isinstance(x, HPoint) else float(x)
    # the averages are continuous in r, but the sup often sits where r crosses a break
    extra = [u for u in _nonsmooth_radii(f, s) if 0 < u < grid.max()]
    grid = np.unique(np.concatenate([grid, extra]))
    g = RadialFunction(lambda u: np.abs(f.profile(u)), f.support, f.breaks)
    edges = np.unique(np.concatenate([[0.0], grid, np.linspace(0.0, grid[-1], 9)]))
    nodes, w = _radial_rule(edges, 16)
    cum = np.cumsum(SPHERE_AREA * np.sinh(nodes) ** 2 * w * sphere_mean(g, s, nodes))
    idx = np.searchsorted(nodes, grid) - 1
    vols = np.array([ball_volume(H3, float(r)) for r in grid])
    return float(np.max(cum[idx] / vols))


def maximal_MR_refined(f: RadialFunction, R: float, x, n: int = 48) -> tuple[float, float]:
    """(value on n-point grid, value on 2n-point grid)."""
    return maximal_MR(f, R, x, n=n), maximal_MR(f, R, x, n=2 * n)


def time_grid(R: float, n: int, t_min_factor: float = 1e-3) -> np.ndarray:
    j = np.arange(n)
    return R * t_min_factor ** (1.0 - j / max(n - 1, 1)) * (1 - 1e-9)


@dataclass
class MaximalReport:
    points: list[float]
    MR: list[float]
    Tstar: list[float]
    TR: list[float]
    domination: list[float]  # Tstar / (MR + TR)

    @property
    def constant(self) -> float:
        return max(self.domination)


def maximal_Tstar(f: RadialFunction, family: KernelFamily, R: float, x, t_grid=None, n: int = 24) -> dict:
    """sup over a geometric t-grid in (0, R) of |T_t f(x)|, with the M_R + T_R comparison."""
    grid = time_grid(R, n) if t_grid is None else np.asarray(t_grid, dtype=float)
    vals = []
    for t in grid:
        res = convolve(f, family, float(t), x)
        if res.status == "divergent":
            return {"value": math.inf, "status": "divergent", "values": vals}
        vals.append(abs(res.value))
    TR = abs(convolve(f, family, R, x).value)
    MR = maximal_MR(f, R, x)
    tstar = max(vals)
    return {"value": tstar, "status": "finite", "values": vals, "MR": MR, "TR": TR, "ratio": tstar / (MR + TR)}


def maximal_report(f: RadialFunction, family: KernelFamily, R: float, points, n: int = 24) -> MaximalReport:
    rows = [maximal_Tstar(f, family, R, p, n=n) for p in points]
    return MaximalReport(
        points=[float(p) for p in points],
        MR=[r["MR"] for r in rows],
        Tstar=[r["value"] for r in rows],
        TR=[r["TR"] for r in rows],
        domination=[r["ratio"] for r in rows],
    )


# ------------------------------------------------------------------ vector-valued experiment


def _maximal_profile(f: RadialFunction, R: float, radii: np.ndarray, n: int) -> np.ndarray:
    return np.array([maximal_MR(f, R, float(s), n=n) for s in radii])


def _radial_lq(values: np.ndarray, q: float) -> np.ndarray:
    return np.sum(np.abs(values) ** q, axis=0) ** (1.0 / q)


def vv_maximal_experiment(
    f_seq: Sequence[RadialFunction],
    q: float,
    R: float,
    r_max: float | None = None,
    n_points: int = 160,
    n_radii: int = 24,
    p: float | None = None,
) -> dict:
    """Empirical weak-(1,1) (or L^p) ratio for the l^q-valued local maximal operator.

    The functions are radial, so |M_R f|_q is radial and level sets are balls
    or shells; their measure is a one-dimensional integral.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    supp = max(g.support for g in f_seq)
    if not math.isfinite(supp):
        raise ValueError("functions must have bounded support")
    r_max = supp + R + 0.5 if r_max is None else r_max
    nodes, w = _radial_rule(np.linspace(0.0, r_max, n_points // 16 + 1), 16)
    dens = SPHERE_AREA * np.sinh(nodes) ** 2 * w
    Mvals = np.stack([_maximal_profile(g, R, nodes, n_radii) for g in f_seq])
    F = _radial_lq(Mvals, q)
    fvals = np.stack([g(nodes) for g in f_seq])
    fq = _radial_lq(fvals, q)
    if p is None:
        # level sets of F on the node grid; sup_s s mu{F > s}
        levels = np.unique(F[F > 0])
        sup = 0.0
        for lev in levels:
            s_val = lev * (1 - 1e-12)
            sup = max(sup, s_val * float(np.sum(dens[F > s_val])))
        norm = float(np.sum(dens * fq))
        return {"ratio": sup / norm, "weak_norm": sup, "l1_norm": norm}
    num = float(np.sum(dens * F**p)) ** (1 / p)
    den = float(np.sum(dens * fq**p)) ** (1 / p)
    return {"ratio": num / den, "lp_norm_M": num, "lp_norm_f": den}


def shell_partition(n_shells: int, outer: float) -> list[RadialFunction]:
    edges = np.linspace(0.0, outer, n_shells + 1)
    return [indicator_shell(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]


# ------------------------------------------------------------------ non-radial quadrature around a point


def boost_from_origin(x: HPoint) -> np.ndarray:
    """Lorentz boost taking the origin to x."""
    x0 = x.array[0]
    v = x.array[1:]
    B = np.empty((4, 4))
    B[0, 0] = x0
    B[0, 1:] = v
    B[1:, 0] = v
    B[1:, 1:] = np.eye(3) + np.outer(v, v) / (1.0 + x0)
    return B


def ball_nodes(x: HPoint, r_max: float, n_r: int = 24, sphere_order: int = 16, breaks=()):
    """Nodes (hyperboloid coordinates) and weights for integrating over B(x, r_max) with dmu."""
    rn, rw = _radial_rule([0.0, *[b for b in breaks if 0 < b < r_max], *np.linspace(0, r_max, max(2, n_r // 16 + 1)), r_max], 16)
    sq = sphere_quadrature(sphere_order)
    local = np.concatenate(
        [np.cosh(rn)[:, None, None] * np.ones((1, len(sq.weights), 1)), np.sinh(rn)[:, None, None] * sq.nodes[None, :, :]],
        axis=2,
    ).reshape(-1, 4)
    pts = local @ boost_from_origin(x).T
    w = (SPHERE_AREA * np.sinh(rn) ** 2 * rw)[:, None] * sq.weights[None, :]
    return pts, w.ravel(), np.repeat(rn, len(sq.weights))


def halfspace_height(pts: np.ndarray) -> np.ndarray:
    """z-coordinate of hyperboloid points in the upper half-space model."""
    return 1.0 / (pts[:, 0] - pts[:, 3])


def local_average_right(f: RadialFunction, r: float, x: HPoint, n_r: int = 32, sphere_order: int = 24) -> float:
    """Average of |f| over B(x, r) against the right Haar measure z^{2 rho} dmu."""
    pts, w, _ = ball_nodes(x, r, n_r, sphere_order, breaks=_nonsmooth_radii(f, distance_from_origin(x)))
    z = halfspace_height(pts)
    rad = np.arcsinh(np.linalg.norm(pts[:, 1:], axis=1))
    dens = z ** (2 * H3.rho_norm) * w
    return float(np.sum(np.abs(f(rad)) * dens) / np.sum(dens))


def maximal_MR_right(f: RadialFunction, R: float, x: HPoint, n: int = 24, n_r: int = 32, sphere_order: int = 24) -> float:
    grid = radius_grid(R, n)
    return max(local_average_right(f, float(r), x, n_r, sphere_order) for r in grid)
