"""Rank-one symmetric space geometry, realised concretely on hyperbolic 3-space.

Points live on the upper sheet of the hyperboloid x0^2 - |x|^2 = 1.  The
unit-ball model is used for boundary (Busemann) data and the upper half-space
model for Iwasawa coordinates.  General :class:`RootData` only feeds the
envelope formulas; exact kernels exist for the H^3 preset alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

HYPERBOLOID_TOL = 1e-12


class GeometryError(ValueError):
    """A point or boundary vector violates its model invariant."""


@dataclass(frozen=True)
class ReducedRoot:
    norm: float
    mult: int
    mult_double: int = 0


@dataclass(frozen=True)
class RootData:
    """Root-system parameters of a rank-one (or general) symmetric space."""

    rank: int
    reduced_roots: tuple[ReducedRoot, ...]
    n: int
    nu: int
    rho_norm: float
    rho_min: float

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        dim = self.rank + sum(a.mult + a.mult_double for a in self.reduced_roots)
        if dim != self.n:
            raise ValueError(f"n={self.n} inconsistent with multiplicities (expected {dim})")
        if self.nu != self.rank + 2 * len(self.reduced_roots):
            raise ValueError("nu must equal rank + 2 * (number of reduced positive roots)")
        if not 0 < self.rho_min <= self.rho_norm:
            raise ValueError("need 0 < rho_min <= rho_norm")

    @property
    def n_reduced(self) -> int:
        return len(self.reduced_roots)

    @classmethod
    def real_hyperbolic(cls, dim: int) -> "RootData":
        """Real hyperbolic space of dimension ``dim`` (curvature -1)."""
        m = dim - 1
        rho = m / 2.0
        return cls(1, (ReducedRoot(1.0, m, 0),), dim, 3, rho, rho)

    @classmethod
    def complex_hyperbolic(cls, complex_dim: int) -> "RootData":
        """Complex hyperbolic space, roots normalised so that |alpha| = 1."""
        m_a, m_2a = 2 * (complex_dim - 1), 1
        rho = 0.5 * (m_a + 2 * m_2a)
        return cls(1, (ReducedRoot(1.0, m_a, m_2a),), 1 + m_a + m_2a, 3, rho, rho)


H3 = RootData.real_hyperbolic(3)


def _minkowski(p: np.ndarray, q: np.ndarray) -> float:
    return float(p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3])


@dataclass(frozen=True)
class HPoint:
    """A point of H^3 in hyperboloid coordinates (x0, x1, x2, x3)."""

    coords: tuple[float, float, float, float]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        if len(c) != 4:
            raise GeometryError("HPoint needs 4 coordinates")
        object.__setattr__(self, "coords", c)
        x = np.asarray(c)
        q = _minkowski(x, x)
        if abs(q - 1.0) > HYPERBOLOID_TOL * max(1.0, x[0] * x[0]) or x[0] < 1.0 - HYPERBOLOID_TOL:
            raise GeometryError(f"point off the upper hyperboloid: <x,x> = {q!r}, x0 = {x[0]!r}")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords)

    @classmethod
    def normalized(cls, spatial) -> "HPoint":
        """Lift a spatial vector (x1, x2, x3) to the hyperboloid."""
        v = np.asarray(spatial, dtype=float)
        x0 = math.sqrt(1.0 + float(v @ v))
        return cls((x0, *v))

    @classmethod
    def polar(cls, r: float, direction=(0.0, 0.0, 1.0)) -> "HPoint":
        """Point at geodesic distance ``r`` from the origin along ``direction``."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return cls((math.cosh(r), *(math.sinh(r) * d)))

    @classmethod
    def from_ball(cls, u) -> "HPoint":
        u = np.asarray(u, dtype=float)
        s = float(u @ u)
        if s >= 1.0:
            raise GeometryError("ball-model point must satisfy |u| < 1")
        return cls(((1 + s) / (1 - s), *(2 * u / (1 - s))))

    @classmethod
    def from_halfspace(cls, y1: float, y2: float, z: float) -> "HPoint":
        if z <= 0:
            raise GeometryError("half-space height must be positive")
        s = y1 * y1 + y2 * y2
        x0 = (s + z * z + 1) / (2 * z)
        x3 = (s + z * z - 1) / (2 * z)
        return cls((x0, y1 / z, y2 / z, x3))

    def to_ball(self) -> np.ndarray:
        x = self.array
        return x[1:] / (1.0 + x[0])

    def to_halfspace(self) -> tuple[float, float, float]:
        """Upper half-space coordinates (y1, y2, z); the origin maps to (0, 0, 1)."""
        x0, x1, x2, x3 = self.coords
        w = x0 - x3
        return x1 / w, x2 / w, 1.0 / w


ORIGIN = HPoint((1.0, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class BoundaryPoint:
    b: tuple[float, float, float]

    def __post_init__(self):
        v = tuple(float(x) for x in self.b)
        object.__setattr__(self, "b", v)
        if abs(math.sqrt(sum(x * x for x in v)) - 1.0) > 1e-12:
            raise GeometryError("boundary point must be a unit vector")


def distance(p: HPoint, q: HPoint) -> float:
    c = _minkowski(p.array, q.array)
    if c < 1.0 - 1e-10 * max(1.0, abs(c)):
        raise GeometryError(f"Minkowski product {c!r} below 1")
    c = max(c, 1.0)
    # arccosh loses half the digits near 1, so use the chordal form there
    if c < 1.5:
        diff = p.array - q.array
        chord2 = -_minkowski(diff, diff)  # = 2(c - 1)
        chord2 = max(chord2, 0.0)
        return 2.0 * math.asinh(0.5 * math.sqrt(chord2))
    return math.acosh(c)


def distance_from_origin(p: HPoint) -> float:
    return math.asinh(float(np.linalg.norm(p.array[1:])))


def polar_density(rd: RootData, r):
    """Density of the radial part of the Riemannian measure (up to the sphere area)."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    for a in rd.reduced_roots:
        out = out * np.sinh(a.norm * r) ** a.mult * np.sinh(2 * a.norm * r) ** a.mult_double
    return out if out.ndim else float(out)


def log_polar_density_h3(r):
    """log sinh^2 r, safe for large r."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        small = 2.0 * np.log(np.sinh(np.minimum(r, 1.0)))
        big = 2.0 * (r + np.log1p(-np.exp(-2.0 * np.maximum(r, 1.0))) - math.log(2.0))
    out = np.where(r < 1.0, small, big)
    return out if out.ndim else float(out)


def sphere_area(dim: int) -> float:
    """Area of the unit sphere S^{dim-1} in R^dim."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def ball_volume(rd: RootData, r: float) -> float:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if rd == H3:
        if r < 1e-3:
            # series of sinh(2r) - 2r avoids cancellation
            return math.pi * (8 * r**3 / 6 + 32 * r**5 / 120 + 128 * r**7 / 5040)
        return math.pi * (math.sinh(2 * r) - 2 * r)
    val, _ = integrate.quad(lambda s: polar_density(rd, s), 0.0, r, limit=200)
    return sphere_area(rd.n) * val


def volume_growth_band(rd: RootData, radii, R: float = 1.0) -> dict:
    """Fitted constants of the two-regime volume growth law.

    For r <= R the volume is compared with r^n, for r > R with
    r^{(rank-1)/2} e^{2 |rho| r}.  Returns min/max ratio per regime.
    """
    radii = np.asarray(radii, dtype=float)
    vols = np.array([ball_volume(rd, float(r)) for r in radii])
    small = radii <= R
    out = {}
    if small.any():
        ratio = vols[small] / radii[small] ** rd.n
        out["small"] = (float(ratio.min()), float(ratio.max()))
    if (~small).any():
        rr = radii[~small]
        ratio = vols[~small] / (rr ** ((rd.rank - 1) / 2) * np.exp(2 * rd.rho_norm * rr))
        out["large"] = (float(ratio.min()), float(ratio.max()))
    return out


def phi0_h3(r):
    """Ground spherical function r / sinh r of H^3."""
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < 1e-4
    safe = np.where(small, 1.0, r)
    with np.errstate(over="ignore"):
        out = np.where(small, 1.0 - r * r / 6.0, safe / np.sinh(safe))
    return out if out.ndim else float(out)


def log_phi0_h3(r):
    """log(r / sinh r) without overflow for large r."""
    r = np.asarray(r, dtype=float)
    small = r < 1e-4
    safe = np.where(small, 1.0, r)
    big = np.log(safe) - safe - np.log1p(-np.exp(-2 * safe)) + math.log(2.0)
    out = np.where(small, -r * r / 6.0, big)
    return out if out.ndim else float(out)


def phi_lambda_h3(lam, r):
    """Spherical function sin(lam r) / (lam sinh r)."""
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    lr = lam * r
    sinc = np.where(np.abs(lr) < 1e-8, 1.0 - lr * lr / 6.0, np.sin(lr) / np.where(lr == 0, 1.0, lr))
    return sinc * phi0_h3(r)


def busemann_A(p: HPoint, b: BoundaryPoint | np.ndarray, rd: RootData = H3):
    """Iwasawa A-component a(p, b) with e^{rho a} = ((1-|u|^2)/|u-b|^2)^{rho_norm}.

    ``b`` may be a single BoundaryPoint or an array of unit vectors (N, 3);
    returns a float or an array accordingly.  The exponent is normalised so
    that a(p, b) takes values in [-d(o,p), d(o,p)].
    """
    u = p.to_ball()
    bv = np.asarray(b.b if isinstance(b, BoundaryPoint) else b, dtype=float)
    diff = u - bv
    den = np.sum(diff * diff, axis=-1)
    if np.any(den < 1e-28):
        raise GeometryError("point coincides with the boundary point")
    num = 1.0 - float(u @ u)
    out = np.log(num) - np.log(den)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SphereQuadrature:
    """Positive quadrature on S^2 with weights normalised to sum 1."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    order: int = 0

    def __post_init__(self):
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise ValueError("nodes must be (N, 3)")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be positive and sum to 1")

    def points(self):
        return [BoundaryPoint(tuple(v)) for v in self.nodes]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _rotation_to(pole) -> np.ndarray:
    """Orthogonal matrix sending e3 to the unit vector ``pole``."""
    z = np.asarray(pole, dtype=float)
    z = z / np.linalg.norm(z)
    helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = helper - (helper @ z) * z
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


@lru_cache(maxsize=64)
def _graded_theta_rule(n_per_panel: int, first_panel: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule in theta, panels doubling away from the pole."""
    edges = [0.0]
    w = first_panel
    while edges[-1] + w < math.pi:
        edges.append(edges[-1] + w)
        w *= 2.0
    edges.append(math.pi)
    x, wx = special.roots_legendre(n_per_panel)
    thetas, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        th = 0.5 * (b - a) * x + 0.5 * (a + b)
        thetas.append(th)
        weights.append(0.5 * (b - a) * wx * np.sin(th) / 2.0)
    return np.concatenate(thetas), np.concatenate(weights)


def sphere_quadrature(order: int, pole=(0.0, 0.0, 1.0), first_panel: float | None = None) -> SphereQuadrature:
    """Product rule: graded Gauss-Legendre in the polar angle times trapezoid in azimuth.

    ``order`` is the number of Gauss nodes per theta panel; the azimuth uses
    ``4 * order`` equispaced nodes.  Panels start at width ``first_panel``
    (default pi/order) around ``pole`` and double towards the antipode,
    which resolves integrands peaked near the pole.
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    fp = math.pi / order if first_panel is None else first_panel
    th, wth = _graded_theta_rule(order, float(fp))
    n_phi = 4 * order
    ph = 2 * math.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    W = np.repeat(wth[:, None], n_phi, axis=1) / n_phi
    local = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    nodes = local @ _rotation_to(pole).T
    w = W.reshape(-1)
    return SphereQuadrature(nodes, w / w.sum(), order)


def horocycle_integral(p: HPoint, q: HPoint, quad: SphereQuadrature, rd: RootData = H3) -> float:
    """Sphere average of e^{rho a(p,b)} e^{rho a(q,b)}."""
    vals = np.exp(rd.rho_norm * (busemann_A(p, quad.nodes, rd) + busemann_A(q, quad.nodes, rd)))
    return quad.integrate(vals)


def horocycle_identity_check(p: HPoint, q: HPoint, rtol: float = 1e-8, max_order: int = 256) -> dict:
    """Compare phi_0(d(p,q)) with the boundary product integral.

    The grid is polarised at the point farther from the origin; its order
    doubles until two successive values agree to ``rtol``.
    """
    far = p if distance_from_origin(p) >= distance_from_origin(q) else q
    dfar = distance_from_origin(far)
    pole = far.array[1:] if dfar > 0 else (0.0, 0.0, 1.0)
    # the Poisson peak has angular width about e^{-d}
    fp = min(0.2, 0.25 * math.exp(-dfar))
    order, prev, value = 8, None, None
    while order <= max_order:
        value = horocycle_integral(p, q, sphere_quadrature(order, pole, first_panel=fp))
        if prev is not None and abs(value - prev) <= rtol * abs(value):
            break
        prev = value
        order *= 2
    exact = phi0_h3(distance(p, q))
    return {"integral": value, "phi0": exact, "rel_err": abs(value - exact) / exact, "order": order}


def random_point(rng: np.random.Generator, max_radius: float) -> HPoint:
    """Point with direction uniform on S^2 and radius uniform in [0, max_radius]."""
    v = rng.normal(size=3)
    return HPoint.polar(float(rng.uniform(0.0, max_radius)), v)
