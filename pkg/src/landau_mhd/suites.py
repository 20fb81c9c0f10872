"""Verification suites shared by the command line and the acceptance tests.

Each ``run_*`` function takes a plain config dict (see the ``*_SCHEMA``
defaults), an integer seed and an optional output directory, and returns a
:class:`SuiteReport` with one :class:`Check` per acceptance row.
"""
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io, landau, linop, mhdsim, ratecalc, weaklp
from .errors import BlowUpError
from .specfield import (Grid, SpectralVectorField, hardy_ratio, near_extremal_profile,
                        project_spec, radial_hardy_ratio, random_bump_field,
                        random_solenoidal_Lq)


@dataclass
class Check:
    """One pass/fail row: ``value`` compared against ``threshold`` (a description)."""
    name: str
    value: object
    threshold: str
    passed: bool
    detail: str = ""

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {_fmt(self.value)} (need {self.threshold}){' ' + self.detail if self.detail else ''}"


@dataclass
class SuiteReport:
    suite: str
    checks: list = dc_field(default_factory=list)
    records: list = dc_field(default_factory=list)
    artifacts: list = dc_field(default_factory=list)
    notes: list = dc_field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, value, threshold, passed, detail=""):
        self.checks.append(Check(name, value, threshold, bool(passed), detail))

    def markdown(self):
        rows = [f"## {self.suite}", "", "| check | measured | required | result |",
                "|---|---|---|---|"]
        for c in self.checks:
            rows.append(f"| {c.name} | {_fmt(c.value)} | {c.threshold} | "
                        f"{'pass' if c.passed else 'FAIL'} |")
        for n in self.notes:
            rows.append(f"\n- {n}")
        return "\n".join(rows) + "\n"


def _fmt(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _out(out, name):
    if out is None:
        return None
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p / name


def _timed(fn):
    def wrapper(cfg, seed=0, out=None, threads=1, **kw):
        t0 = time.perf_counter()
        rep = fn(cfg, seed, out, threads, **kw)
        rep.wall_clock = time.perf_counter() - t0
        return rep
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------- landau

LANDAU_SCHEMA = dict(
    A_values=[1.2, 2.0, 10.0], n_points=1000, r_min=0.5, r_max=5.0, direction=[0.0, 0.0, 1.0],
    residual_tol=1e-6, homogeneity_tol=1e-10, scales=[0.25, 3.0, 40.0],
    beta_A=200.0, beta_tol=0.01, roundtrip_tol=1e-10,
    stress_A=1.0001, stress_tol=1e-5, export_N=32, export_L=16.0,
)


def _homogeneity_error(params, x, scales):
    base = landau.eval_landau(params, x)
    worst = 0.0
    for lam in scales:
        ev = landau.eval_landau(params, lam * x)
        du = np.max(np.abs(lam * ev.velocity - base.velocity)) / np.max(np.abs(base.velocity))
        dg = (np.max(np.abs(lam ** 2 * ev.velocity_gradient - base.velocity_gradient))
              / np.max(np.abs(base.velocity_gradient)))
        worst = max(worst, du, dg)
    return worst


def _max_rel_residual(params, x):
    res, scale = landau.stationary_ns_residual(params, x, return_scale=True)
    return float(np.max(np.linalg.norm(res, axis=1) / scale))


@_timed
def run_landau(cfg, seed=0, out=None, threads=1):
    """Residual, homogeneity, beta asymptotics and round trips of the Landau family."""
    rep = SuiteReport("verify-landau")
    pts = landau.shell_points(cfg["n_points"], cfg["r_min"], cfg["r_max"], seed=seed)
    unit = landau.shell_points(cfg["n_points"], 1.0, 1.0, seed=seed)
    for A in cfg["A_values"]:
        p = landau.LandauParams.from_A(A, cfg["direction"])
        rel = _max_rel_residual(p, pts)
        rep.add(f"residual A={A}", rel, f"< {cfg['residual_tol']:g}", rel < cfg["residual_tol"])
        hom = _homogeneity_error(p, pts, cfg["scales"])
        c1 = landau.bound_constants(p, unit)
        c2 = landau.bound_constants(p, 7.0 * unit)
        hom = max(hom, abs(c1[0] - c2[0]) / c1[0], abs(c1[1] - c2[1]) / c1[1])
        rep.add(f"homogeneity A={A}", hom, f"< {cfg['homogeneity_tol']:g}",
                hom < cfg["homogeneity_tol"])
        rep.records.append({"A": A, "beta": landau.beta_of_A(A), "residual": rel,
                            "homogeneity": hom, "C_vel": c1[0], "C_grad": c1[1]})
    A = cfg["beta_A"]
    asym = abs(A * landau.beta_of_A(A) / (16 * np.pi) - 1)
    rep.add(f"beta asymptotics A={A}", asym, f"< {cfg['beta_tol']:g}", asym < cfg["beta_tol"])
    As = 1 + np.geomspace(1e-6, 1e6, 61)
    trip = max(abs(landau.A_of_beta(landau.beta_of_A(a)) - a) / (a - 1) for a in As)
    rep.add("A -> beta -> A round trip", trip, f"< {cfg['roundtrip_tol']:g}",
            trip < cfg["roundtrip_tol"])
    p = landau.LandauParams.from_A(cfg["stress_A"], cfg["direction"])
    rel = _max_rel_residual(p, pts)
    consts = landau.bound_constants(p, unit)
    ok = rel < cfg["stress_tol"] and all(np.isfinite(consts))
    rep.add(f"near-boundary A={cfg['stress_A']}", rel, f"< {cfg['stress_tol']:g}, finite constants",
            ok, f"C_vel={consts[0]:.4g} C_grad={consts[1]:.4g}")
    if out is not None and cfg["export_N"] > 0:
        p = landau.LandauParams.from_A(cfg["A_values"][0], cfg["direction"])
        ev = landau.eval_landau(p, pts)
        rep.artifacts.append(io.write_point_samples(_out(out, "landau_samples.csv"), pts,
                                                    ev.velocity, ["Ux", "Uy", "Uz"]))
        g = Grid(cfg["export_N"], cfg["export_L"], threads)
        bg = landau.make_background(p.b, g)
        rep.artifacts.append(io.write_field(_out(out, "landau_background.bin"), bg.phys, g.L))
        rep.artifacts.append(io.write_json(_out(out, "landau_records.json"), rep.records))
    return rep


# ---------------------------------------------------------------- hardy

HARDY_SCHEMA = dict(
    N=64, L=64.0, n_fields=1000, bound=4.05, gauss_N=64, gauss_L=16.0, gauss_tol=1e-3,
    deltas=[0.2, 0.1, 0.05], extremal_floor=3.0, R1=1.0, R2=8.0,
)


@_timed
def run_hardy(cfg, seed=0, out=None, threads=1):
    """Hardy ratios: random bumps, the Gaussian closed form and a near-extremal family."""
    rep = SuiteReport("hardy")
    g = Grid(cfg["N"], cfg["L"], threads)
    rng = np.random.default_rng(seed)
    ratios = np.array([hardy_ratio(random_bump_field(g, rng, n_blobs=int(rng.integers(1, 6)),
                                                     vector=bool(i % 2)), g)
                       for i in range(cfg["n_fields"])])
    rep.add(f"max ratio over {cfg['n_fields']} fields", float(ratios.max()),
            f"<= {cfg['bound']:g}", ratios.max() <= cfg["bound"])
    gg = Grid(cfg["gauss_N"], cfg["gauss_L"], threads)
    r = gg.radius()
    gauss = hardy_ratio(np.exp(-r * r / 2), gg)
    err = abs(gauss - 4 / 3)
    rep.add("Gaussian ratio - 4/3", err, f"<= {cfg['gauss_tol']:g}", err <= cfg["gauss_tol"],
            f"cell-rule value {hardy_ratio(np.exp(-r * r / 2), gg, 'cell'):.6f}")
    ext = []
    for d in cfg["deltas"]:
        w, dw = near_extremal_profile(d, cfg["R1"], cfg["R2"])
        ext.append(radial_hardy_ratio(w, dw, cfg["R2"], breakpoints=(cfg["R1"],)))
    d_min = min(cfg["deltas"])
    top = ext[cfg["deltas"].index(d_min)]
    order = np.argsort(cfg["deltas"])[::-1]
    mono = bool(np.all(np.diff(np.array(ext)[order]) > 0))
    rep.add(f"near-extremal ratio delta={d_min}", top, f"> {cfg['extremal_floor']:g}, rising as delta falls",
            top > cfg["extremal_floor"] and mono)
    rep.records.append({"max_ratio": ratios.max(), "mean_ratio": ratios.mean(), "gaussian": gauss,
                        "near_extremal": dict(zip(map(str, cfg["deltas"]), ext))})
    if out is not None:
        path = _out(out, "hardy_ratios.csv")
        np.savetxt(path, ratios, delimiter=",", header="ratio", comments="")
        rep.artifacts += [path, io.write_json(_out(out, "hardy.json"), rep.records)]
    return rep


# ---------------------------------------------------------------- weak Lp

WEAKLP_SCHEMA = dict(
    p_values=[4 / 3, 1.5, 2.0, 3.0], n_cells=10000, T=1.0, power_tol=0.01,
    brute_cells=12, brute_trials=60, brute_tol=1e-12,
    n_pairs=200, pair_cells=256, dilations=[0.1, 7.0], scale_tol=1e-9,
)


def _random_exponents(rng, kind):
    """Exponents ``(p, q)`` whose Young (``1/p + 1/q > 1``) or Holder (``< 1``) target exceeds 1."""
    while True:
        p, q = rng.uniform(1.05, 6.0, 2)
        s = 1 / p + 1 / q
        if (kind == "young" and 1.02 < s < 1.98) or (kind == "holder" and s < 0.98):
            return p, q


@_timed
def run_weaklp(cfg, seed=0, out=None, threads=1):
    """Weak-norm exactness, brute-force agreement and weak Young/Holder ratios."""
    rep = SuiteReport("weaklp")
    for p in cfg["p_values"]:
        f = weaklp.Sampled1D.from_antiderivative(lambda s: s ** (1 - 1 / p) / (1 - 1 / p),
                                                 cfg["T"], cfg["n_cells"])
        rel = abs(weaklp.weak_norm(f, p) / (p / (p - 1)) - 1)
        rep.add(f"||s^(-1/p)|| p={p:.4g}", rel, f"rel err < {cfg['power_tol']:g}",
                rel < cfg["power_tol"])
        if out is not None and p == cfg["p_values"][0]:
            rep.artifacts.append(io.write_sampled(_out(out, "power_function.csv"), f))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cfg["brute_trials"]):
        n = int(rng.integers(1, cfg["brute_cells"] + 1))
        f = weaklp.Sampled1D(np.cumsum(rng.uniform(0.1, 1.0, n)), rng.exponential(1.0, n)
                             * (rng.random(n) < 0.8))
        p = rng.uniform(1.05, 5.0)
        a, b = weaklp.weak_norm(f, p), weaklp.weak_norm_bruteforce(f, p)
        worst = max(worst, abs(a - b) / max(b, 1e-300))
    rep.add(f"rearrangement vs brute force ({cfg['brute_trials']} meshes)", worst,
            f"<= {cfg['brute_tol']:g}", worst <= cfg["brute_tol"])
    young, holder, drift = [], [], 0.0
    n = cfg["pair_cells"]
    for _ in range(cfg["n_pairs"]):
        f = weaklp.random_piecewise(rng, n)
        g = weaklp.random_piecewise(rng, n)
        rec = {}
        for kind, check, acc in (("young", weaklp.check_weak_young, young),
                                 ("holder", weaklp.check_weak_holder, holder)):
            p, q = _random_exponents(rng, kind)
            r0 = check(f, g, p, q)
            for lam in cfg["dilations"]:
                fl = weaklp.Sampled1D(f.nodes / lam, f.values)
                gl = weaklp.Sampled1D(g.nodes / lam, g.values)
                drift = max(drift, abs(check(fl, gl, p, q) / r0 - 1))
            acc.append(r0)
            rec[kind] = {"p": p, "q": q, "ratio": r0}
        rep.records.append(rec)
    finite = bool(np.all(np.isfinite(young)) and np.all(np.isfinite(holder))
                  and min(young) > 0 and min(holder) > 0)
    rep.add(f"weak Young/Holder ratios finite ({cfg['n_pairs']} pairs)",
            [max(young), max(holder)], "finite and positive", finite)
    rep.add("dilation invariance of the ratios", drift, f"< {cfg['scale_tol']:g}",
            drift < cfg["scale_tol"])
    if out is not None:
        rep.artifacts.append(io.write_json(_out(out, "weaklp_pairs.json"), rep.records))
    return rep


# ---------------------------------------------------------------- operators and semigroup

OPERATORS_SCHEMA = dict(
    N=64, L=32.0, coupling=0.1, direction=[0.0, 0.6, 0.8], n_fields=200, n_adjoint=20,
    adjoint_tol=1e-10, coercive_slack=0.02, n_trajectories=4, t_final=4.0, dt=0.1,
)

SEMIGROUP_SCHEMA = dict(
    N=64, L=128.0, smoothing=3.0, window=[0.5, 10.0], dt=0.25, n_records=48,
    cases=["plain:1", "plain:1.5", "div:2", "div:1.5"], couplings=[0.0, 0.1],
    direction=[0.0, 0.6, 0.8], rate_tol=0.15, oracle_tol=0.05, b_tol=0.1,
)
THEORY = {"plain": lambda q: -1.5 * (1 / q - 0.5), "div": lambda q: -1.5 * (1 / q - 0.5) - 0.5}


def _background(grid, coupling, factor, direction):
    if coupling == 0:
        return None, 0.0, 0.0
    b = landau.b_for_coupling(coupling, factor, direction)
    bg = landau.make_background(b, grid)
    return bg, landau.measured_C0(bg.params), bg.b_mag


def _random_test_field(grid, rng, i):
    kind = i % 3
    if kind == 0:
        return random_solenoidal_Lq(grid, int(rng.integers(2 ** 31)), 1.0, "compact-bump")
    if kind == 1:
        return random_solenoidal_Lq(grid, int(rng.integers(2 ** 31)), rng.uniform(1.0, 2.0),
                                    smoothing=rng.uniform(1.0, 3.0))
    u = rng.standard_normal(grid.phys_shape(3))
    s = project_spec(grid, grid.fft(u) * np.exp(-grid.k2 * rng.uniform(0.5, 2.0)))
    s[:, 0, 0, 0] = 0.0
    return SpectralVectorField(grid, spec=s, solenoidal=True)


@_timed
def run_operators(cfg, seed=0, out=None, threads=1):
    """Adjoint identities, coercivity ratios and linear contraction around a background."""
    rep = SuiteReport("operators")
    g = Grid(cfg["N"], cfg["L"], threads)
    bg, C0, bm = _background(g, cfg["coupling"], 6.0, cfg["direction"])
    rep.notes.append(f"|b| = {bm:.6g}, measured C0 = {C0:.6g}, 6 C0 |b| = {6 * C0 * bm:.4g}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(cfg["n_adjoint"]):
        u, v = _random_test_field(g, rng, i), _random_test_field(g, rng, i + 1)
        for op in ("L1", "L2"):
            h = linop.LinearOperatorHandle(op, bg, g)
            Lu = linop.apply(h, u)
            Lsv = linop.apply(h.with_operator(op + "_adjoint"), v)
            lhs, rhs = Lu.inner(v), u.inner(Lsv)
            scale = max(Lu.l2() * v.l2(), u.l2() * Lsv.l2())
            worst = max(worst, abs(lhs - rhs) / scale)
    rep.add(f"adjoint identity ({cfg['n_adjoint']} pairs, L1 and L2)", worst,
            f"< {cfg['adjoint_tol']:g}", worst < cfg["adjoint_tol"])
    ratios = []
    ok = True
    for i in range(cfg["n_fields"]):
        w = _random_test_field(g, rng, i)
        for form in ("a1", "a2"):
            lo, hi, r = linop.coercivity_margin(w, bg, C0, bm, cfg["coercive_slack"], form)
            ok &= lo and hi
            ratios.append(r)
    band = 6 * C0 * bm + cfg["coercive_slack"]
    rep.add(f"coercivity ratio ({cfg['n_fields']} fields)", [min(ratios), max(ratios)],
            f"within [{1 - band:.4f}, {1 + band:.4f}]", ok)
    mono = True
    for i in range(cfg["n_trajectories"]):
        w = _random_test_field(g, rng, i)
        for op in ("L1", "L2"):
            h = linop.LinearOperatorHandle(op, bg, g)
            tr = linop.evolve_linear(h, w, cfg["t_final"], cfg["dt"])
            mono &= bool(np.all(np.diff(tr.series["l2"]) <= 0))
    rep.add(f"L2 norm non-increasing ({2 * cfg['n_trajectories']} trajectories)", mono,
            "every recorded step", mono)
    rep.records.append({"b_mag": bm, "C0": C0, "adjoint_worst": worst,
                        "coercivity_min": min(ratios), "coercivity_max": max(ratios)})
    if out is not None:
        rep.artifacts.append(io.write_json(_out(out, "operators.json"), rep.records))
    return rep


def parse_case(case):
    """``"plain:1.5"`` or ``"div:2"`` -> ``(kind, q)``."""
    kind, q = case.split(":")
    if kind not in THEORY:
        raise ValueError(f"unknown case kind {kind!r}")
    return kind, float(Fraction(q))


def measure_case(kind, q, handle, cfg, seed):
    fam = linop.DataFamily(seed=seed, smoothing=cfg["smoothing"])
    window = tuple(cfg["window"])
    if kind == "plain":
        return linop.measure_semigroup_decay(handle, q, fam, window, cfg["dt"], cfg["n_records"])
    return linop.measure_div_decay(handle, q, fam, window, cfg["dt"], cfg["n_records"])


@_timed
def run_semigroup(cfg, seed=0, out=None, threads=1, config_hash=""):
    """Fitted semigroup decay exponents against theory, the free-space oracle and ``b = 0``."""
    rep = SuiteReport("semigroup")
    g = Grid(cfg["N"], cfg["L"], threads)
    base = {}
    for c in cfg["couplings"]:
        bg, C0, bm = _background(g, c, 6.0, cfg["direction"])
        for case in cfg["cases"]:
            kind, q = parse_case(case)
            h = linop.LinearOperatorHandle("L1", bg, g)
            fit = measure_case(kind, q, h, cfg, seed)
            series = fit.extra.pop("series")
            theory = THEORY[kind](q)
            label = f"{case} 6C0|b|={6 * C0 * bm:.3g}"
            if c == 0:
                base[case] = fit.exponent
                rep.add(f"{label} exponent vs theory {theory:.4g}", fit.exponent,
                        f"within {cfg['rate_tol']:g}", abs(fit.exponent - theory) <= cfg["rate_tol"])
                orc = fit.extra["oracle_exponent"]
                rep.add(f"{label} exponent vs free-space oracle {orc:.4g}", fit.exponent - orc,
                        f"within {cfg['oracle_tol']:g}", abs(fit.exponent - orc) <= cfg["oracle_tol"])
            elif case in base:
                d = fit.exponent - base[case]
                rep.add(f"{label} exponent shift from b=0", d, f"within {cfg['b_tol']:g}",
                        abs(d) <= cfg["b_tol"])
            rec = fit.as_record()
            rec.update(case=case, coupling=c, C0=C0, config_hash=config_hash)
            rep.records.append(rec)
            if out is not None:
                stem = f"semigroup_{kind}_q{q:g}_c{c:g}"
                rep.artifacts.append(io.write_series_wide(_out(out, stem + ".csv"), series))
                rep.artifacts.append(io.write_gnuplot(_out(out, stem + ".gp"), stem + ".csv",
                                                      ["l2", "grad_l2"], stem))
    if out is not None:
        rep.artifacts.append(io.write_json(_out(out, "semigroup_fits.json"), rep.records))
    return rep


# ---------------------------------------------------------------- nonlinear

NONLINEAR_SCHEMA = dict(
    N=64, L=64.0, q_values=[1.5, 2.0], coupling=0.1, direction=[0.0, 0.6, 0.8],
    w_amplitude=2.0, B_amplitude=1.0, smoothing=3.0, dt=0.05, cfl=0.5, t_final=10.0,
    window=[0.5, 10.0], duhamel_snapshots=32, duhamel_samples=10, duhamel_dt=0.25,
    energy_tol=1e-3, rate_tol=0.15, duhamel_tol=1e-3, ns_check_steps=5,
)


def nonlinear_config(cfg, q, seed, threads=1, b=(0.0, 0.0, 0.0)):
    return mhdsim.SimConfig(
        N=cfg["N"], L=cfg["L"], threads=threads, b=tuple(b), dt=cfg["dt"], cfl=cfg["cfl"],
        t_final=cfg["t_final"], fit_window=tuple(cfg["window"]),
        w0=mhdsim.InitialSpec(seed=seed, q_target=q, amplitude=cfg["w_amplitude"],
                              smoothing=cfg["smoothing"]),
        B0=mhdsim.InitialSpec(seed=seed + 1, q_target=q, amplitude=cfg["B_amplitude"],
                              smoothing=cfg["smoothing"]))


def ns_path_identical(grid, background, config, steps):
    """Step the full system with ``B = 0`` and the Navier-Stokes path; compare bits."""
    w0 = mhdsim.initial_state(config, grid).w
    full = mhdsim.Integrator(grid, background, ns_path=False)
    ns = mhdsim.Integrator(grid, background, ns_path=True)
    u = np.concatenate((w0.spec, np.zeros_like(w0.spec)))
    v = w0.spec.copy()
    for _ in range(steps):
        u = full.step(u, config.dt)
        v = ns.step(v, config.dt)
    return bool(np.array_equal(u[:3], v) and not np.any(u[3:]))


@_timed
def run_nonlinear(cfg, seed=0, out=None, threads=1, config_hash=""):
    """Energy audits, decay fits and Duhamel bounds of the nonlinear system."""
    rep = SuiteReport("nonlinear")
    g = Grid(cfg["N"], cfg["L"], threads)
    bg, C0, bm = _background(g, cfg["coupling"], 4.0, cfg["direction"])
    rep.notes.append(f"|b| = {bm:.6g}, measured C0 = {C0:.6g}, 4 C0 |b| = {4 * C0 * bm:.4g}")
    if cfg["B_amplitude"] == 0:
        rep.notes.append("B0 = 0: the Navier-Stokes reduction path was integrated")
    b = tuple(bg.params.b) if bg is not None else (0.0, 0.0, 0.0)
    for q in cfg["q_values"]:
        sc = nonlinear_config(cfg, q, seed, threads, b)
        snaps = mhdsim.duhamel_snapshot_times(cfg["t_final"], cfg["duhamel_snapshots"])
        try:
            res = mhdsim.run(sc, bg, g, snapshot_times=snaps)
        except BlowUpError as exc:
            rep.add(f"q={q} run", "blow-up", "completes", False, str(exc.record))
            continue
        er = mhdsim.energy_inequality_report(res.series, C0, bm, cfg["energy_tol"])
        rep.add(f"q={q} energy non-increasing", er.monotone_worst, "<= 0 for all pairs",
                er.monotone_worst <= 0)
        worst = max(er.sei_defect, er.coercive_worst)
        rep.add(f"q={q} strong energy inequality defect", worst, f"< {cfg['energy_tol']:g}",
                worst < cfg["energy_tol"])
        fit = mhdsim.fit_run_decay(res, tuple(cfg["window"]))
        theory = -1.5 * (1 / q - 0.5)
        rep.add(f"q={q} decay exponent", fit.exponent, f"<= {theory + cfg['rate_tol']:.4g}",
                fit.exponent <= theory + cfg["rate_tol"])
        if cfg["duhamel_samples"] > 0:
            dr = mhdsim.duhamel_residual(res, bg, cfg["duhamel_samples"], cfg["duhamel_dt"])
            rel = dr.min_slack / dr.w0_norm
            rep.add(f"q={q} Duhamel slack / ||w0||", rel, f">= {-cfg['duhamel_tol']:g}",
                    rel >= -cfg["duhamel_tol"])
        rec = fit.as_record()
        rec.update(energy=er.as_record(), steps=res.steps, ns_path=res.ns_path,
                   config_hash=config_hash, C0=C0)
        rep.records.append(rec)
        if out is not None:
            stem = f"nonlinear_q{q:g}"
            rep.artifacts += [io.write_series_wide(_out(out, stem + ".csv"), res.series),
                              io.write_series_long(_out(out, stem + "_long.csv"), res.series),
                              io.write_gnuplot(_out(out, stem + ".gp"), stem + ".csv",
                                               res.series.names, stem),
                              io.write_field(_out(out, stem + "_w.bin"), res.state.w.phys, g.L),
                              io.write_field(_out(out, stem + "_B.bin"), res.state.B.phys, g.L)]
    if cfg["ns_check_steps"] > 0:
        sc = nonlinear_config(cfg, cfg["q_values"][0], seed, threads, b)
        same = ns_path_identical(g, bg, sc, cfg["ns_check_steps"])
        rep.add("B = 0 path bit-identical to Navier-Stokes reduction", same, "identical", same)
    if out is not None:
        rep.artifacts.append(io.write_json(_out(out, "nonlinear_fits.json"), rep.records))
    return rep


# ---------------------------------------------------------------- rates

RATES_SCHEMA = dict(q_values=["1", "30/23", "3/2"], free_q="1", free_rounds=20, free_floor=0.9,
                    n_grid=800)
PINNED_TRIPLES = ((Fraction(0), Fraction(3, 2), Fraction(1, 4)),
                 (Fraction(1, 4), Fraction(15, 8), Fraction(2, 5)),
                 (Fraction(2, 5), Fraction(4, 3), Fraction(3, 4)))


@_timed
def run_rates(cfg, seed=0, out=None, threads=1):
    """Exact bootstrap triples, regime boundaries and the free-exponent chain."""
    rep = SuiteReport("rates")
    for d, r, want in PINNED_TRIPLES:
        got = ratecalc.bootstrap_alpha(d, r)
        rep.add(f"({d}, r={r}) -> {want}", got, f"exactly {want}",
                isinstance(got, Fraction) and got == want)
    bounds = ratecalc.regime_boundaries()
    rep.add("regime boundaries", [b[2] for b in bounds[:2]], "exactly [3/2, 30/23]",
            [b[2] for b in bounds[:2]] == [Fraction(3, 2), Fraction(30, 23)])
    for qs in cfg["q_values"]:
        q = Fraction(qs)
        ch = ratecalc.decay_chain(q, "pinned")
        rep.records.append({"q": q, "mode": "pinned", "rate": ch.rate, "binds_at": ch.binds_at,
                            "steps": [{"step": k + 1, "r": r, "exponent": e}
                                      for k, (e, r) in enumerate(ch.steps)]})
    q = Fraction(cfg["free_q"])
    ch = ratecalc.decay_chain(q, "free", rounds=cfg["free_rounds"], n_grid=cfg["n_grid"])
    rep.add(f"free chain peak q={q}", ch.peak, f"> {cfg['free_floor']:g} within {cfg['free_rounds']} rounds",
            ch.peak > cfg["free_floor"] and len(ch.steps) <= cfg["free_rounds"])
    rep.records.append({"q": q, "mode": "free", "rate": ch.rate, "binds_at": ch.binds_at,
                        "steps": [{"step": k + 1, "r": r, "exponent": e}
                                  for k, (e, r) in enumerate(ch.steps)]})
    if out is not None:
        rep.artifacts.append(io.write_json(_out(out, "rates.json"), rep.records))
    return rep


def chain_table(records):
    """Plain-text table of the chains in a rates report."""
    lines = [f"{'q':>7} {'mode':>5} {'step':>4} {'r':>9} {'exponent':>10}"]
    for rec in records:
        for s in rec["steps"]:
            lines.append(f"{str(rec['q']):>7} {rec['mode']:>5} {s['step']:>4} "
                         f"{_fmt(s['r']):>9} {_fmt(s['exponent']):>10}")
    return "\n".join(lines)


# ---------------------------------------------------------------- sweep

SWEEP_SCHEMA = dict(
    N=64, L=64.0, q_values=[1.5, 1.75, 2.0], couplings=[0.0, 0.05, 0.1], factor=4.0,
    direction=[0.0, 0.6, 0.8], w_amplitude=2.0, B_amplitude=1.0, smoothing=3.0, dt=0.1,
    cfl=0.5, t_final=10.0, window=[0.5, 10.0], workers=1,
)


def _sweep_one(args):
    cfg, q, c, seed, threads = args
    g = Grid(cfg["N"], cfg["L"], threads)
    rec = {"q": q, "coupling": c, "seed": seed}
    try:
        bg, C0, bm = _background(g, c, cfg["factor"], cfg["direction"])
        b = tuple(bg.params.b) if bg is not None else (0.0, 0.0, 0.0)
        sc = dict(cfg, duhamel_snapshots=0)
        res = mhdsim.run(nonlinear_config(sc, q, seed, threads, b), bg, g)
        fit = mhdsim.fit_run_decay(res, tuple(cfg["window"]))
        er = mhdsim.energy_inequality_report(res.series, C0, bm)
        rec.update(fit.as_record(), b_mag=bm, C0=C0, stable=True, energy_flagged=er.flagged)
        return rec, res.series
    except BlowUpError as exc:
        rec.update(stable=False, blowup=exc.record)
        return rec, None


@_timed
def run_sweep(cfg, seed=0, out=None, threads=1, config_hash=""):
    """Nonlinear runs over a ``q x coupling`` grid; blow-ups are recorded, not fatal."""
    rep = SuiteReport("sweep")
    jobs = [(cfg, q, c, seed, threads) for q in cfg["q_values"] for c in cfg["couplings"]]
    if cfg["workers"] > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(cfg["workers"]) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    for rec, series in results:
        rec["config_hash"] = config_hash
        rep.records.append(rec)
        if out is not None and series is not None:
            stem = f"sweep_q{rec['q']:g}_c{rec['coupling']:g}"
            rep.artifacts += [io.write_series_wide(_out(out, stem + ".csv"), series),
                              io.write_gnuplot(_out(out, stem + ".gp"), stem + ".csv",
                                               series.names, stem)]
    stable = sum(r["stable"] for r in rep.records)
    rep.add("sweep completed", f"{len(rep.records)} records, {stable} stable",
            f"{len(jobs)} records", len(rep.records) == len(jobs))
    if out is not None:
        rep.artifacts.append(io.write_json(_out(out, "sweep_fits.json"), rep.records))
    return rep


SUITES = {
    "verify-landau": (LANDAU_SCHEMA, run_landau),
    "hardy": (HARDY_SCHEMA, run_hardy),
    "weaklp": (WEAKLP_SCHEMA, run_weaklp),
    "operators": (OPERATORS_SCHEMA, run_operators),
    "semigroup": (SEMIGROUP_SCHEMA, run_semigroup),
    "nonlinear": (NONLINEAR_SCHEMA, run_nonlinear),
    "rates": (RATES_SCHEMA, run_rates),
    "sweep": (SWEEP_SCHEMA, run_sweep),
}
