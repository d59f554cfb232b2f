"""Experiment harness: sandwich sweeps, convergence runs, divergence witnesses,
weighted boundedness probes and the distinguished-Laplacian reruns.

Every run takes an :class:`ExperimentConfig` and returns a :class:`ResultTable`
whose metadata carries the config hash, tolerances and the module that
produced each verdict.  Nothing here draws random numbers unless a seed is
given, so identical configs give identical tables.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import special

from . import __version__
from .convolution import (
    RadialFunction,
    _nonsmooth_radii,
    _radial_rule,
    ball_nodes,
    boost_from_origin,
    convolve,
    halfspace_height,
    indicator_ball,
    indicator_shell,
    local_average,
    local_average_right,
    maximal_MR,
    radius_grid,
    smooth_bump,
    sphere_mean,
    tabulated_log_kernel,
    vv_maximal_experiment,
    shell_partition,
)
from .envelopes import EnvelopeSpec, EstimateNotAsserted
from .geometry import H3, ORIGIN, HPoint, log_polar_density_h3, sphere_quadrature
from .kernels import SPHERE_AREA, KernelFamily, heat_h3, log_heat_h3, log_kernel_profile, lift_family
from .weights import (
    BORDERLINE,
    MEMBER,
    NON_MEMBER,
    RadialWeight,
    companion_weight,
    conjugate,
    dp_membership,
    log_dual_norm,
    log_integrand,
    zoo_entry,
    _trend_rule,
)

DRIFT_TOL = 0.05
EXPERIMENTS = ("converge", "probe", "vv", "distinguished", "sandwich", "weight-class", "certify")
CONVERGENCE_TOL = 1e-3
GROWTH_FACTOR = 10.0
DEFAULT_POINTS = (0.0, 1.0, 2.0, 4.0)
SAMPLED = "at all sampled points"


# ------------------------------------------------------------------ config and tables


def family_from_dict(d: dict) -> KernelFamily:
    kind = d["kind"]
    zeta = float(d.get("zeta", 1.0))
    if kind == "heat":
        return KernelFamily.heat(zeta)
    if kind == "frac_heat":
        return KernelFamily.frac_heat(float(d["alpha"]), zeta)
    if kind == "frac_poisson":
        return KernelFamily.frac_poisson(float(d["sigma"]), zeta)
    raise ValueError(f"unknown kernel family {kind!r}")


def family_to_dict(f: KernelFamily) -> dict:
    d = {"kind": f.kind, "zeta": f.zeta}
    if f.alpha is not None:
        d["alpha"] = f.alpha
    if f.sigma is not None:
        d["sigma"] = f.sigma
    return d


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, JSON-serialisable description of one run.

    ``weight`` is a zoo entry name or a weight spec understood by
    :meth:`RadialWeight.parse`.  ``k_max`` sets the time grid t_k = 2^{-k},
    k = 1..k_max.
    """

    experiment: str
    family: dict = field(default_factory=lambda: {"kind": "heat", "zeta": 1.0})
    weight: str = "unit"
    p: float = 2.0
    R: float = 1.0
    k_max: int = 10
    points: tuple[float, ...] = DEFAULT_POINTS
    test_function: str = "smooth"
    shells: int = 12
    output_dir: str = "results"
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        family_from_dict(self.family)
        self.resolve_weight()
        if not self.p >= 1:
            raise ValueError("p must be at least 1")
        if self.k_max < 1 or self.R <= 0 or self.shells < 3:
            raise ValueError("need k_max >= 1, R > 0 and at least 3 shells")
        if not self.points or any(x < 0 for x in self.points):
            raise ValueError("need at least one evaluation point, each a distance >= 0")

    @property
    def kernel(self) -> KernelFamily:
        return family_from_dict(self.family)

    def resolve_weight(self) -> RadialWeight:
        try:
            return zoo_entry(self.weight).weight
        except KeyError:
            return RadialWeight.parse(self.weight)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["points"] = list(self.points)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        d = json.loads(text)
        if "points" in d:
            d["points"] = tuple(float(x) for x in d["points"])
        return cls(**d)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[Any]]
    metadata: dict
    passed: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"columns": self.columns, "rows": self.rows, "metadata": self.metadata, "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, default=_json_default)

    def write(self, directory: str | Path, stem: str) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        h = self.metadata.get("config_hash", "nohash")
        csv_path = d / f"{stem}-{h}.csv"
        json_path = d / f"{stem}-{h}.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serialisable: {type(o)}")


def _metadata(config: ExperimentConfig | None, producer: str, **extra) -> dict:
    md = {"producer": producer, "version": __version__, "traceability": producer}
    if config is not None:
        md["config"] = config.to_dict()
        md["config_hash"] = config.hash
    md.update(extra)
    return md


# ------------------------------------------------------------------ sandwich sweeps


def envelope_for(family: KernelFamily, kappa: float = 1.0) -> EnvelopeSpec:
    param = family.alpha if family.kind == "frac_heat" else family.sigma
    return EnvelopeSpec(family.kind, H3, family.zeta, param, kappa)


def _sandwich_radii(family: KernelFamily, t: float, n_r: int, r_max: float, kappa: float) -> np.ndarray:
    extra = [kappa - t]
    if family.kind == "frac_heat":
        extra += [t ** (2.0 / family.alpha), t ** (1.0 / family.alpha)]
    extra = [x for x in extra if 0 <= x <= r_max]
    return np.unique(np.concatenate([[0.0], np.geomspace(1e-3, r_max, n_r), np.linspace(0.0, r_max, n_r), extra]))


def sandwich_band(
    family: KernelFamily,
    n_t: int,
    n_r: int,
    kappa: float = 1.0,
    t_range=(0.01, 10.0),
    r_max: float = 20.0,
) -> dict:
    """Kernel/envelope log-ratio extremes per regime on a (t, r) grid.

    Points on t + r = kappa are scored under both branches, since the
    extremes of each branch sit on that boundary.  Points where no
    two-sided estimate is asserted are skipped and counted.
    """
    env = envelope_for(family, kappa)
    logs: dict[str, list[float]] = {}
    skipped = 0
    for t in np.geomspace(t_range[0], t_range[1], n_t):
        t = float(t)
        rs = _sandwich_radii(family, t, n_r, r_max, kappa)
        lk = log_kernel_profile(family, t, rs)
        for r, lkv in zip(rs, lk):
            r = float(r)
            if family.kind == "heat":
                regimes = ["all"]
            elif abs(t + r - kappa) <= 1e-12 * kappa:
                regimes = ["small", "large"]
            else:
                regimes = ["small" if t + r <= kappa else "large"]
            for reg in regimes:
                try:
                    le = env.log(t, r, None if reg == "all" else reg)
                except EstimateNotAsserted:
                    skipped += 1
                    continue
                logs.setdefault(reg, []).append(float(lkv) - le)
    out = {}
    for reg, v in logs.items():
        a = np.asarray(v)
        out[reg] = {"c1": float(np.exp(a.min())), "c2": float(np.exp(a.max())), "band": float(np.exp(a.max() - a.min())), "n": int(a.size)}
    return {"regimes": out, "skipped": skipped}


def sandwich_study(family: KernelFamily, coarse=(25, 40), kappa: float = 1.0, t_range=(0.01, 10.0), r_max: float = 20.0) -> dict:
    """Bands on a grid and on its doubling, with the relative drift of c1 and c2."""
    fine = (2 * coarse[0] - 1, 2 * coarse[1])
    a = sandwich_band(family, *coarse, kappa=kappa, t_range=t_range, r_max=r_max)
    b = sandwich_band(family, *fine, kappa=kappa, t_range=t_range, r_max=r_max)
    regimes = {}
    for reg, va in a["regimes"].items():
        vb = b["regimes"][reg]
        d = max(abs(vb["c1"] / va["c1"] - 1.0), abs(vb["c2"] / va["c2"] - 1.0))
        regimes[reg] = {**vb, "coarse": va, "drift": d, "stable": d < DRIFT_TOL}
    return {
        "family": family.label(),
        "kappa": kappa,
        "grids": {"coarse": coarse, "fine": fine},
        "regimes": regimes,
        "skipped": b["skipped"],
        "stable": all(v["stable"] for v in regimes.values()),
    }


def heat_sandwich_grid(zeta: float = 1.0, ts=(0.01, 0.1, 1.0, 10.0), rs=(0.0, 1.0, 5.0, 20.0)) -> dict:
    """Heat band on the closed-form test grid."""
    env = envelope_for(KernelFamily.heat(zeta))
    logs = [float(log_heat_h3(t, r, zeta)) - env.log(t, r) for t in ts for r in rs]
    return {"c1": math.exp(min(logs)), "c2": math.exp(max(logs)), "band": math.exp(max(logs) - min(logs))}


# ------------------------------------------------------------------ convergence and divergence


def _log_lp_norm_radial(g: RadialFunction, p: float, log_v=None) -> float:
    """log (int |g|^p v dmu)^{1/p} over the support of g (v = 1 when log_v is None)."""
    edges = [0.0, *np.linspace(0.0, g.support, 33), *g.breaks, g.support]
    nodes, w = _radial_rule(edges, 16)
    lv = 0.0 if log_v is None else log_v(nodes)
    with np.errstate(divide="ignore"):
        terms = p * np.log(np.abs(g(nodes))) + lv + log_polar_density_h3(nodes) + np.log(w * SPHERE_AREA)
    terms = np.where(np.isnan(terms), -np.inf, terms)
    return float(special.logsumexp(terms) / p)


def named_function(name: str) -> RadialFunction:
    """Named bounded, compactly supported profiles g used to build f = v^{-1/p} g."""
    table = {
        "bump": smooth_bump(3.0),
        "bump1": smooth_bump(1.0),
        "ball": indicator_ball(2.0),
        "shell": indicator_shell(1.0, 2.0),
        "bump_wide": smooth_bump(5.0),
    }
    if name not in table:
        raise ValueError(f"unknown test function {name!r}; choose from {sorted(table)}")
    return table[name]


def _sup_normalised(shape, h: RadialFunction, name: str, tags) -> RadialFunction:
    grid = np.linspace(0.0, h.support, 2001)
    c = 1.0 / float(np.max(np.abs(shape(grid))))
    return RadialFunction(lambda r: c * shape(r), h.support, h.breaks, name, tags)


def weighted_datum(v: RadialWeight, p: float, g: RadialFunction) -> RadialFunction:
    """f = c v^{-1/p} g scaled to sup |f| = 1 (f is in L^p(v) since g is bounded with compact support)."""

    def shape(r):
        r = np.asarray(r, dtype=float)
        return g.profile(r) * np.exp(-v.log(r) / p)

    return _sup_normalised(shape, g, f"v^(-1/{p:g})*{g.name}", g.tags)


def smooth_datum(v: RadialWeight, p: float, h: RadialFunction | None = None) -> RadialFunction:
    """f = c r^{2m} h with sup |f| = 1.

    m is the least integer with 2m >= s/p, so g = v^{1/p} f stays bounded
    near an origin singularity r^{-s} of v; f = v^{-1/p} g with g bounded
    and compactly supported, as for :func:`weighted_datum`.
    """
    h = smooth_bump(8.0) if h is None else h
    m = math.ceil(max(v.s, 0.0) / (2.0 * p))

    def shape(r):
        r = np.asarray(r, dtype=float)
        return h.profile(r) * (r * r) ** m

    return _sup_normalised(shape, h, f"smooth*{h.name}", ("smooth",))


def log_datum_norm(f: RadialFunction, v: RadialWeight, p: float) -> float:
    return _log_lp_norm_radial(f, p, log_v=v.log)


def datum_norm(f: RadialFunction, v: RadialWeight, p: float) -> float:
    return math.exp(log_datum_norm(f, v, p))


def convergence_datum(kind: str, v: RadialWeight, p: float) -> RadialFunction:
    if kind == "smooth":
        return smooth_datum(v, p)
    if kind == "weighted":
        return weighted_datum(v, p, smooth_bump(3.0))
    return weighted_datum(v, p, named_function(kind))


def convergence_curve(f: RadialFunction, family: KernelFamily, points, k_max: int) -> list[list[float]]:
    """Rows (k, t, x, T_t f(x), |T_t f(x) - f(x)|) for t = 2^{-k}."""
    rows = []
    for k in range(1, k_max + 1):
        t = 2.0**-k
        for x in points:
            val = convolve(f, family, t, float(x), tabulate=family.kind != "heat").value
            rows.append([k, t, float(x), val, abs(val - float(f(float(x))))])
    return rows


def convergence_verdict(rows, points, tol: float = CONVERGENCE_TOL) -> dict:
    """Final error below tol at every point and the worst error non-increasing in k."""
    ks = sorted({r[0] for r in rows})
    worst = [max(r[4] for r in rows if r[0] == k) for k in ks]
    final = {float(x): next(r[4] for r in rows if r[0] == ks[-1] and r[2] == x) for x in points}
    monotone = all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(worst, worst[1:]))
    below = all(e < tol for e in final.values())
    return {"final_errors": final, "worst_by_k": worst, "monotone": monotone, "below_tol": below, "converged": monotone and below}


def _witness_rule(outer: float):
    edges = np.unique(
        np.concatenate([np.geomspace(1e-8, 1.0, 41), np.arange(1.0, 40.0, 0.5), np.arange(40.0, outer, 2.0), 2.0 ** np.arange(0, 30), [outer]])
    )
    edges = edges[edges <= outer]
    nodes, w = _radial_rule(edges, 16)
    return nodes, np.log(w)


def divergence_witness(v: RadialWeight, family: KernelFamily, p: float, t: float = 1.0, k_max: int = 12) -> dict:
    """Dual witness against the centre o, built shell by shell.

    On S_k = {2^{k-1} < r <= 2^k} (S_0 = B(o, 1)) take
    f_k = (psi_t v^{-1/p})^{p'/p} v^{-1/p} 1_{S_k} / I_k^{1/p} with
    I_k = int_{S_k} psi_t^{p'} v^{-p'/p} dmu, so ||f_k||_{L^p(v)} = 1 and
    T_t f_k(o) = I_k^{1/p'}.  For p = 1, f_k is a normalised indicator
    concentrated where psi_t / v peaks on S_k and T_t f_k(o) tends to that
    sup.  The datum f = sum (k+1)^{-2} f_k has ||f||_{L^p(v)} <= pi^2/6
    and T_t f(o) truncated to B(o, 2^K) is the partial sum up to K.
    """
    outer = 2.0**k_max
    nodes, logw = _witness_rule(outer)
    lk = tabulated_log_kernel(family, t, nodes)
    if p == 1:
        F = lk - v.log(nodes)
    else:
        q = conjugate(p)
        F = q * lk - (q / p) * v.log(nodes) + log_polar_density_h3(nodes) + math.log(SPHERE_AREA)
    rows, partial, prev = [], -math.inf, 0.0
    overflow_radius = None
    for k in range(0, k_max + 1):
        R = 2.0**k
        sel = (nodes > prev) & (nodes <= R)
        if not np.all(np.isfinite(F[sel])):
            # log v itself overflows (double-exponential weights); stop at the last representable shell
            overflow_radius = prev
            break
        if p == 1:
            log_c = float(np.max(F[sel]))
        else:
            log_c = float(special.logsumexp(F[sel] + logw[sel])) / conjugate(p)
        log_c -= 2.0 * math.log(k + 1)
        partial = float(np.logaddexp(partial, log_c))
        rows.append([k, R, log_c, partial])
        prev = R
    growth = [b[3] - a[3] for a, b in zip(rows, rows[1:])]
    lg = math.log(GROWTH_FACTOR)
    trigger = next((i + 2 for i in range(len(growth) - 1) if growth[i] >= lg and growth[i + 1] >= lg), None)
    return {
        "rows": rows,
        "log_growth": growth,
        "status": "divergent" if trigger is not None else "inconclusive",
        "trigger_k": trigger,
        "norm_bound": math.pi**2 / 6,
        "t": t,
        "overflow_radius": overflow_radius,
    }


def run_converge(config: ExperimentConfig) -> ResultTable:
    family, v, p = config.kernel, config.resolve_weight(), config.p
    report = dp_membership(v, family, p)
    md = _metadata(config, "expcli.run_converge", verdict=report.verdict, verdict_source="weights.dp_membership", tolerance=CONVERGENCE_TOL)
    if report.verdict == MEMBER:
        f = convergence_datum(config.test_function, v, p)
        rows = convergence_curve(f, family, config.points, config.k_max)
        summary = convergence_verdict(rows, config.points)
        other = "weighted" if config.test_function == "smooth" else "smooth"
        alt = convergence_verdict(convergence_curve(convergence_datum(other, v, p), family, config.points, config.k_max), config.points)
        smooth = convergence_curve(smooth_bump(1.0), family, [0.0], config.k_max)
        md.update(
            summary=summary,
            datum=f.name,
            datum_log_lp_norm=log_datum_norm(f, v, p),
            alternate_datum={"kind": other, **alt},
            smooth_origin_errors=[r[4] for r in smooth],
            outcome="convergent" if summary["converged"] else "not converged",
        )
        md["statement"] = f"|T_t f - f| < {CONVERGENCE_TOL:g} {SAMPLED}" if summary["converged"] else "convergence not observed"
        return ResultTable(["k", "t", "x", "Ttf", "error"], rows, md, summary["converged"])
    w = divergence_witness(v, family, p, t=1.0, k_max=config.shells)
    if w["status"] == "inconclusive" and config.shells < 16:
        w = divergence_witness(v, family, p, t=1.0, k_max=16)
        md["enlarged"] = True
    md.update(witness={k: w[k] for k in ("status", "trigger_k", "norm_bound", "t", "log_growth", "overflow_radius")}, outcome=w["status"])
    if report.verdict == BORDERLINE:
        md["statement"] = "borderline weight: no dichotomy claim; witness reported for information"
        return ResultTable(["k", "radius", "log_contribution", "log_partial"], w["rows"], md, True)
    ok = w["status"] == "divergent"
    md["statement"] = "divergence witness triggered at o" if ok else "divergence inconclusive: truncation growth below threshold"
    return ResultTable(["k", "radius", "log_contribution", "log_partial"], w["rows"], md, ok)


# ------------------------------------------------------------------ weighted boundedness probe


PROBE_FUNCTIONS = ("bump", "bump1", "ball", "shell", "bump_wide")


def _radial_lp(values, log_weight, nodes, w, p) -> float:
    dens = np.exp(log_weight + log_polar_density_h3(nodes)) * w * SPHERE_AREA
    return float(np.sum(np.abs(values) ** p * dens)) ** (1.0 / p)


def _weak_l1(values, log_weight, nodes, w) -> float:
    """sup_s s * u{|F| > s} for a radial F sampled on quadrature nodes."""
    dens = np.exp(log_weight + log_polar_density_h3(nodes)) * w * SPHERE_AREA
    a = np.abs(values)
    order = np.argsort(-a)
    cum = np.cumsum(dens[order])
    return float(np.max(a[order] * cum))


def run_boundedness_probe(config: ExperimentConfig, r_max: float = 12.0) -> ResultTable:
    """Empirical L^p(v) -> L^p(u) ratios of M_R and T_{t0} over the test functions, u the companion weight."""
    family, v, p, R = config.kernel, config.resolve_weight(), config.p, config.R
    report = dp_membership(v, family, p, confirm=False)
    md = _metadata(config, "expcli.run_boundedness_probe", verdict=report.verdict, verdict_source="weights.dp_membership")
    if report.verdict != MEMBER:
        md["statement"] = "probe needs a member weight"
        return ResultTable([], [], md, False)
    t0 = report.t0
    u = companion_weight(v, family, p, t0)
    nodes, w = _radial_rule(np.arange(0.0, r_max + 0.25, 0.5), 8)
    rows = []
    for name in PROBE_FUNCTIONS:
        f = weighted_datum(v, p, named_function(name))
        fn = datum_norm(f, v, p)
        Tf = np.array([convolve(f, family, t0, float(r), tabulate=True).value for r in nodes])
        inside = nodes <= f.support + R
        Mf = np.zeros_like(nodes)
        Mf[inside] = [maximal_MR(f, R, float(r), n=16) for r in nodes[inside]]
        T_ratio = _radial_lp(Tf, u.log(nodes), nodes, w, p) / fn
        M_ratio = _radial_lp(Mf, u.log(nodes), nodes, w, p) / fn
        weak = _weak_l1(Tf, u.log(nodes), nodes, w) / fn if p == 1 else math.nan
        # |T f(x)| <= Psi(x)^{1/p} ||f||_{L^p(v)}: log-slack at a few radii
        slack = min(log_dual_norm(v, family, t0, p, s) + math.log(fn) - math.log(abs(float(np.interp(s, nodes, Tf))) + 1e-300) for s in (0.0, 1.0, 2.0, 4.0))
        rows.append([name, fn, T_ratio, M_ratio, weak, slack])
    tstar = [maximal_Tstar_value(weighted_datum(v, p, named_function("bump")), family, R, x) for x in config.points]
    ratios = np.array([[r[2], r[3]] for r in rows])
    ok = bool(np.all(np.isfinite(ratios)) and np.all(ratios > 0) and min(r[5] for r in rows) >= -1e-6 and all(map(math.isfinite, tstar)))
    md.update(t0=t0, companion="weights.companion_weight", Tstar_R=tstar, spread={"T": float(ratios[:, 0].max() / ratios[:, 0].min()), "M": float(ratios[:, 1].max() / ratios[:, 1].min())})
    md["statement"] = f"ratios finite and T*_R f finite {SAMPLED}" if ok else "probe failed"
    return ResultTable(["function", "lp_v_norm", "T_ratio", "M_ratio", "weak_T_ratio", "holder_log_slack"], rows, md, ok)


def maximal_Tstar_value(f: RadialFunction, family: KernelFamily, R: float, x: float, n: int = 12) -> float:
    """sup_{0<t<R} |T_t f(x)| over a geometric grid of n times."""
    ts = R * np.geomspace(1e-3, 1.0, n) * (1 - 1e-9)
    return max(abs(convolve(f, family, float(t), x, tabulate=True).value) for t in ts)


# ------------------------------------------------------------------ distinguished Laplacian


def analytic_bump(width: float = 1.0) -> RadialFunction:
    """exp(-2 (cosh r - 1) / width^2): smooth on H^3 and negligible (< 1e-300) past the declared support.

    The profile is far narrower than its support, so quarter-width radii are
    declared as panel edges for the sphere-mean and radial rules.
    """
    support = float(np.arccosh(1.0 + 350.0 * width**2))
    edges = tuple(float(x) for x in np.arange(0.25, 4.0, 0.25) * width if x < support)
    return RadialFunction(lambda r: np.exp(-2.0 * (np.cosh(r) - 1.0) / width**2), support, edges, f"gbump({width:g})", ("smooth",))


def _halfspace(pts: np.ndarray):
    wq = pts[:, 0] - pts[:, 3]
    return pts[:, 1] / wq, pts[:, 2] / wq, 1.0 / wq


def lifted_convolution_group(f: RadialFunction, base: KernelFamily, t: float, x: HPoint, r_max: float, n_panels: int = 48, sphere_order: int = 12) -> float:
    """T~_t f~(x) = int_S f~(y) psi~_t(y^{-1} x) dlambda(y), by cubature in half-space coordinates.

    y^{-1} x is formed with the group law (w, z)(w', z') = (w + z w', z z');
    f~ = delta~^{1/2} f and psi~ = delta~^{1/2} psi with delta~ = z^{-2}.
    The sphere rule about x is graded towards o, where f concentrates.
    """
    edges = np.concatenate([np.geomspace(1e-4, 1.0, 17), np.linspace(1.0, r_max, n_panels)])
    rn, rw = _radial_rule([0.0, *edges], 16)
    v = x.array[1:]
    pole = -v / np.linalg.norm(v) if np.linalg.norm(v) > 0 else (0.0, 0.0, 1.0)
    sq = sphere_quadrature(sphere_order, pole=pole)
    local = np.concatenate(
        [np.cosh(rn)[:, None, None] * np.ones((1, len(sq.weights), 1)), np.sinh(rn)[:, None, None] * sq.nodes[None, :, :]], axis=2
    ).reshape(-1, 4)
    pts = local @ boost_from_origin(x).T
    wts = ((SPHERE_AREA * np.sinh(rn) ** 2 * rw)[:, None] * sq.weights[None, :]).ravel()
    y1, y2, yz = _halfspace(pts)
    x1, x2, xz = x.to_halfspace()
    g1, g2, gz = (x1 - y1) / yz, (x2 - y2) / yz, xz / yz
    d_g = np.arccosh(np.maximum((g1 * g1 + g2 * g2 + gz * gz + 1.0) / (2.0 * gz), 1.0))
    d_y = np.arccosh(np.maximum(pts[:, 0], 1.0))
    lk = tabulated_log_kernel(base, t, d_g)
    f_tilde = f(d_y) / yz
    psi_tilde = np.exp(lk) / gz
    return float(np.sum(wts * f_tilde * psi_tilde))


def distinguished_points(seed: int, n: int = 10, max_radius: float = 3.0) -> list[HPoint]:
    from .geometry import random_point

    rng = np.random.default_rng(seed)
    return [random_point(rng, max_radius) for _ in range(n)]


def conjugation_identity(base: KernelFamily, t: float, points, f: RadialFunction | None = None) -> list[list[float]]:
    """Rows (|x|, z(x), group-law value, delta~^{1/2}(x) T_t f(x), relative error)."""
    f = analytic_bump() if f is None else f
    rows = []
    for x in points:
        s = float(np.arccosh(max(x.array[0], 1.0)))
        lhs = lifted_convolution_group(f, base, t, x, r_max=s + f.support)
        z = x.to_halfspace()[2]
        rhs = convolve(f, base, t, s, tabulate=True).value / z
        rows.append([s, z, lhs, rhs, abs(lhs - rhs) / abs(rhs)])
    return rows


def right_left_functions() -> list[RadialFunction]:
    """Strictly positive profiles, so both maximal functions are nonzero on B(o, 5)."""
    return [
        RadialFunction(lambda r: np.exp(-np.asarray(r)), math.inf, (), "exp(-r)"),
        RadialFunction(lambda r: 1.0 + (np.asarray(r) <= 2.0), math.inf, (2.0,), "1+1_B(2)"),
    ]


def _right_maximal(h: RadialFunction, grid: np.ndarray, x: HPoint, sphere_order: int, m: int = 16) -> float:
    """max over the grid radii of the right-measure average of |h| over B(x, r), in one cubature pass."""
    s = float(np.arccosh(max(x.array[0], 1.0)))
    edges = np.unique(np.concatenate([[0.0], grid, [u for u in _nonsmooth_radii(h, s) if 0 < u < grid[-1]]]))
    rn, rw = _radial_rule(edges, m)
    v = x.array[1:]
    pole = -v / np.linalg.norm(v) if np.linalg.norm(v) > 0 else (0.0, 0.0, 1.0)
    sq = sphere_quadrature(sphere_order, pole=pole)
    local = np.concatenate(
        [np.cosh(rn)[:, None, None] * np.ones((1, len(sq.weights), 1)), np.sinh(rn)[:, None, None] * sq.nodes[None, :, :]], axis=2
    ).reshape(-1, 4)
    pts = local @ boost_from_origin(x).T
    z2 = (halfspace_height(pts) ** (2 * H3.rho_norm)).reshape(len(rn), -1)
    vals = np.abs(h(np.arccosh(np.maximum(pts[:, 0], 1.0)))).reshape(len(rn), -1)
    radial = np.sinh(rn) ** 2 * rw
    cn = np.cumsum(((vals * z2) @ sq.weights) * radial)
    cd = np.cumsum((z2 @ sq.weights) * radial)
    idx = np.searchsorted(rn, grid) - 1
    return float(np.max(cn[idx] / cd[idx]))


def right_left_band(h: RadialFunction, R: float, points, n: int, sphere_order: int) -> list[float]:
    """M~_R h(x) / M_R h(x) at each point, both as maxima over the same radius grid."""
    out = []
    grid = radius_grid(R, n)
    for x in points:
        s = float(np.arccosh(max(x.array[0], 1.0)))
        out.append(_right_maximal(h, grid, x, sphere_order) / maximal_MR(h, R, s, r_grid=grid))
    return out


def run_distinguished(config: ExperimentConfig, n_points: int = 10) -> ResultTable:
    base = lift_family(config.kernel)
    md = _metadata(config, "expcli.run_distinguished", base_kernel=base.label())
    pts = distinguished_points(config.seed, n_points)
    ident = conjugation_identity(base, 0.5, pts)
    max_err = max(r[4] for r in ident)

    # convergence rerun through the conjugation: T~ f~ - f~ = delta~^{1/2} (T f - f)
    f = analytic_bump(3.0)
    conv_rows = []
    for k in range(1, config.k_max + 1):
        t = 2.0**-k
        errs = []
        for x in pts[:4]:
            s = float(np.arccosh(max(x.array[0], 1.0)))
            z = x.to_halfspace()[2]
            errs.append(abs(convolve(f, base, t, s, tabulate=base.kind != "heat").value - float(f(s))) / z)
        conv_rows.append(max(errs))
    converged = conv_rows[-1] < CONVERGENCE_TOL and all(b <= a * (1 + 1e-9) for a, b in zip(conv_rows, conv_rows[1:]))

    # right/left maximal band on B(o, 5)
    rng = np.random.default_rng(config.seed + 1)
    from .geometry import random_point

    ball_pts = [random_point(rng, 5.0) for _ in range(6)] + [HPoint.polar(5.0, (0, 0, 1)), HPoint.polar(5.0, (0, 0, -1))]
    coarse, fine = [], []
    for h in right_left_functions():
        coarse += right_left_band(h, config.R, ball_pts, 16, 12)
        fine += right_left_band(h, config.R, ball_pts, 32, 24)
    c1, c2 = min(fine), max(fine)
    band_drift = max(abs(min(fine) / min(coarse) - 1), abs(max(fine) / max(coarse) - 1))
    bound = math.exp(2 * H3.rho_norm * (2 * config.R + 10))

    # heat lift at height z = 1
    lift_err = heat_lift_check()

    ok = max_err < 1e-8 and band_drift < DRIFT_TOL and c2 / c1 <= bound and lift_err < 1e-12 and converged
    md.update(
        identity_max_rel_err=max_err,
        convergence_worst_by_k=conv_rows,
        converged=converged,
        right_left_band={"c1": c1, "c2": c2, "ratio": c2 / c1, "drift": band_drift, "bound": bound},
        heat_lift_rel_err=lift_err,
    )
    md["statement"] = f"conjugation identity and right/left band hold {SAMPLED}" if ok else "distinguished checks failed"
    return ResultTable(["r", "z", "group_law", "conjugated", "rel_err"], ident, md, ok)


def heat_lift_check(ts=(0.1, 1.0, 3.0), rs=(0.0, 0.5, 2.0)) -> float:
    """max relative gap between the lifted zeta = 0 heat kernel at height 1 and e^{t} h_t^{zeta=1}."""
    from .kernels import distinguished_lift, kernel_profile

    worst = 0.0
    for t in ts:
        for r in rs:
            # a point at height 1 at distance r from the origin: |w| = 2 sinh(r/2)
            p = HPoint.from_halfspace(2.0 * math.sinh(r / 2.0), 0.0, 1.0)
            lifted = distinguished_lift(float(kernel_profile(KernelFamily.heat(0.0), t, r)), p)
            target = math.exp(t) * heat_h3(t, r, 1.0)
            worst = max(worst, abs(lifted / target - 1.0))
    return worst


# ------------------------------------------------------------------ vector-valued maximal experiment


def run_vv(config: ExperimentConfig, q: float = 2.0, counts=(4, 8, 16), outer: float = 3.0) -> ResultTable:
    """Weak-(1,1) (p = 1) or L^p ratio of the l^q-valued M_R as the shell count doubles."""
    p = None if config.p == 1 else config.p
    rows = []
    for n in counts:
        res = vv_maximal_experiment(shell_partition(n, outer), q, config.R, p=p)
        rows.append([n, res["ratio"]])
    vals = [r[1] for r in rows]
    spread = max(vals) / min(vals)
    ok = spread <= 2.0
    md = _metadata(config, "convolution.vv_maximal_experiment", q=q, spread=spread)
    md["statement"] = "ratio stable within a factor 2" if ok else "ratio drifts by more than a factor 2"
    return ResultTable(["shells", "ratio"], rows, md, ok)
