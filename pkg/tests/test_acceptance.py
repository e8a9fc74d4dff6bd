"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with `pytest -s tests/test_acceptance.py` to see the lines as they
complete.
"""

import time

import numpy as np
import pytest

from kuracomp import analysis, basin, cli, doe, graphs, models, presets, solver, stats
from kuracomp.models import CentroidCoupling, ModelConfig, centroid_coeffs
from kuracomp.solver import IntegratorSettings


def _report(num, desc, ok, t0, detail=""):
    line = (f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} "
            f"({time.time() - t0:5.1f}s) {desc}{detail}")
    print(line)
    assert ok, line


# -- 1 ----------------------------------------------------------------------

def test_criterion_1_closed_form_vs_numeric_centroid():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    done = 0
    while done < 20:
        C, S = rng.uniform(-2.0, 2.0, 2)
        mu = rng.uniform(-1.5, 1.5)
        if C * C + S * S - mu * mu <= 0.1:
            continue
        d0 = rng.uniform(-3.0, 3.0)
        st = IntegratorSettings(rtol=1e-10, atol=1e-13, t_end=20.0,
                                dt_max=0.05)
        traj = solver.integrate(
            lambda t, y: np.array([mu + S * np.cos(y[0]) - C * np.sin(y[0])]),
            np.array([d0]), st)
        closed = analysis.delta_time_course(traj.t, C, S, mu, d0)
        worst = max(worst, float(np.max(np.abs(closed - traj.y[:, 0]))))
        done += 1
    _report(1, "closed-form vs numeric centroid dynamics", worst <= 1e-6, t0,
            f" (sup error {worst:.2e} over 20 draws)")


# -- 2 ----------------------------------------------------------------------

def test_criterion_2_fixed_point_residual_gate():
    t0 = time.time()
    ok = True
    detail = []
    cfg_s = ModelConfig(r1=3.0, r2=2.5, beta1=2.0, beta2=2.0, mu=0.2,
                        phi=0.2, psi=0.0, gamma1=1.0, gamma2=1.0)
    cfg_e = ModelConfig(r1=3.0, r2=2.5, beta1=7.5, beta2=2.0, alpha=20.0,
                        tau=1.0, x1=0.25, mu=0.25, phi=0.2, psi=0.0,
                        gamma1=1.0, gamma2=1.0)
    batches = [
        (cfg_s, analysis.simple_fixed_points(cfg_s)),
        (cfg_s.with_overrides(beta1=3.1),
         analysis.simple_fixed_points(cfg_s.with_overrides(beta1=3.1))),
        (cfg_e, analysis.eco2_fixed_points(cfg_e)),
        (cfg_e.with_overrides(beta1=4.0, mu=0.1),
         analysis.eco2_fixed_points(cfg_e.with_overrides(beta1=4.0, mu=0.1))),
    ]
    worst_res = max(r.residual for _, recs in batches for r in recs)
    ok &= worst_res <= 1e-8
    detail.append(f"max residual {worst_res:.1e}")
    # interior ecology roots against an independent companion-matrix solve
    worst_root = 0.0
    n_interior = 0
    for cfg_used, recs in batches[2:]:
        for rec in recs:
            if rec.label in ("FP3", "FP4", "FP5"):
                n_interior += 1
                comp = np.roots(analysis.eco2_cubic_coeffs(cfg_used,
                                                           rec.state[2]))
                worst_root = max(worst_root,
                                 float(np.min(np.abs(comp - rec.state[1]))))
    ok &= n_interior >= 3 and worst_root <= 1e-8
    detail.append(f"{n_interior} interior roots, companion gap {worst_root:.1e}")
    _report(2, "fixed-point residual gate", ok, t0, " (" + "; ".join(detail) + ")")


# -- 3 ----------------------------------------------------------------------

def test_criterion_3_threshold_reproduction_heatmap():
    t0 = time.time()
    cfg = ModelConfig(r1=3.0, r2=2.5, beta2=2.0, mu=0.2, psi=0.0,
                      gamma1=1.0, gamma2=1.0)
    betas = np.linspace(1.2, 4.2, 21)
    phis = np.linspace(-0.8, 0.8, 21)
    spec = basin.BasinSpec(grid=(9, 9),
                           settings=IntegratorSettings(dt_init=0.02,
                                                       t_end=200.0))
    mat, _, _ = basin.basin_heatmap("simple-reduced", cfg, "beta1", betas,
                                    "phi", phis, spec)
    step = betas[1] - betas[0]
    ok = True
    n_rows = 0
    worst = 0.0
    for i, ph in enumerate(phis):
        c = cfg.with_overrides(phi=float(ph))
        co = centroid_coeffs(c, CentroidCoupling.from_config(c), 1.0, 0.0)
        d1 = analysis.delta_star(co.C, co.S, c.mu)
        if d1 is None:
            continue
        threshold = c.r2 / (1 + 0.5 * np.sin(d1))
        if not betas[1] < threshold < betas[-2]:
            continue
        above = np.nonzero(mat[i] >= 0.5)[0]
        if above.size == 0:
            ok = False
            continue
        crossing = betas[above[0]] - 0.5 * step
        gap = abs(crossing - threshold)
        worst = max(worst, gap)
        ok &= gap <= step
        n_rows += 1
    ok &= n_rows >= 15
    _report(3, "basin transition tracks the beta_1 stability threshold",
            ok, t0, f" ({n_rows} rows, worst gap {worst:.3f} <= step {step:.3f})")


# -- 4 ----------------------------------------------------------------------

def test_criterion_4_always_unstable_fixed_points():
    t0 = time.time()
    rng = np.random.default_rng(404)
    checked = 0
    ok = True
    while checked < 100:
        cfg = ModelConfig(
            r1=rng.uniform(0.1, 5.0), r2=rng.uniform(0.1, 5.0),
            beta1=rng.uniform(0.0, 6.0), beta2=rng.uniform(0.0, 6.0),
            alpha=rng.uniform(1.0, 30.0), tau=rng.uniform(0.2, 3.0),
            x1=rng.uniform(0.0, 1.0), mu=rng.uniform(-0.8, 0.8),
            phi=rng.uniform(-1.0, 1.0), psi=rng.uniform(-1.0, 1.0),
            gamma1=1.0, gamma2=1.0)
        simple = {r.label: r for r in analysis.simple_fixed_points(cfg)}
        eco = {r.label: r for r in analysis.eco2_fixed_points(cfg)}
        if "FP3" not in simple or "FP1" not in eco:
            continue               # centroid fixed point absent for this draw
        checked += 1
        ok &= simple["FP3"].classification == "unstable"
        ok &= eco["FP1"].classification == "unstable"
    _report(4, "trivial fixed points always unstable (r1, r2 > 0)", ok, t0,
            f" (100 random parameter draws)")


# -- 5 ----------------------------------------------------------------------

def test_criterion_5_k_regime_behaviour():
    t0 = time.time()
    rng = np.random.default_rng(505)
    ok = True
    details = []
    # K < 0: slip period within 2% of 2*pi/sqrt(-K)
    worst_rel = 0.0
    for _ in range(5):
        C, S = rng.uniform(-1.5, 1.5, 2)
        mu = np.sign(rng.standard_normal()) * (
            np.hypot(C, S) + rng.uniform(0.3, 1.5))
        K = C * C + S * S - mu * mu
        assert K < 0
        period = 2 * np.pi / np.sqrt(-K)
        st = IntegratorSettings(rtol=1e-10, atol=1e-12,
                                t_end=20 * period, dt_max=0.05)
        traj = solver.integrate(
            lambda t, y: np.array([mu + S * np.cos(y[0]) - C * np.sin(y[0])]),
            np.array([0.1]), st)
        slips = (traj.y[-1, 0] - traj.y[0, 0]) / (2 * np.pi)
        measured = traj.t[-1] / slips
        rel = abs(abs(measured) - period) / period
        worst_rel = max(worst_rel, rel)
        ok &= rel <= 0.02
    details.append(f"slip period rel err {worst_rel:.2e}")
    # K > 0: convergence to the closed-form limit within 1e-6
    worst_gap = 0.0
    for _ in range(5):
        C, S = rng.uniform(-2.0, 2.0, 2)
        mu = rng.uniform(-1.0, 1.0)
        if C * C + S * S - mu * mu <= 0.1:
            continue
        d_star = analysis.delta_star(C, S, mu)
        st = IntegratorSettings(rtol=1e-11, atol=1e-13, t_end=80.0)
        traj = solver.integrate(
            lambda t, y: np.array([mu + S * np.cos(y[0]) - C * np.sin(y[0])]),
            np.array([d_star + 0.5]), st)
        gap = abs(np.mod(traj.y[-1, 0] - d_star + np.pi, 2 * np.pi) - np.pi)
        worst_gap = max(worst_gap, float(gap))
        ok &= gap <= 1e-6
    details.append(f"fixed-point gap {worst_gap:.1e}")
    _report(5, "K discriminant governs slips vs convergence", ok, t0,
            " (" + "; ".join(details) + ")")


# -- 6 ----------------------------------------------------------------------

def test_criterion_6_reduction_fidelity():
    t0 = time.time()
    cfg = ModelConfig(r1=3.0, r2=2.5, beta1=3.5, beta2=2.0, mu=0.2,
                      phi=0.2, psi=0.0, gamma1=1.0, gamma2=1.0)
    worst = 0.0
    for s in range(5):
        tree = graphs.gen_kary_tree(4, 2)
        er = graphs.gen_erdos_renyi(21, 0.2, 1000 + s)
        links = {(0, 1): [(i, i) for i in range(5, 21)]}
        xi = graphs.xi_paper_normalization([tree, er], links)
        omega = presets.sample_omega([21, 21], mu=0.2, nu=0.0, seed=2000 + s)
        net = graphs.assemble([tree, er], links, sigma=[4.0, 2.0], xi=xi,
                              phi=0.2, psi=0.0, omega=omega)
        coup = CentroidCoupling.from_network(net)
        co = centroid_coeffs(cfg, coup, 1.0, 1.0)
        d0 = analysis.delta_star(co.C, co.S, cfg.mu)
        theta0 = np.zeros(42)
        theta0[21:] = -d0
        y0 = np.concatenate([[0.5, 0.5], theta0])
        st = IntegratorSettings(rtol=1e-8, atol=1e-10, t_end=20.0,
                                dt_max=0.05)
        full = models.build_system("feedback", cfg, net=net)
        tf = solver.integrate(lambda t, y: full.rhs(y), y0, st)
        red = models.build_system("simple-reduced", cfg, coupling=coup)
        tr = solver.integrate(lambda t, y: red.rhs(y),
                              np.array([0.5, 0.5, d0]), st)
        ts = np.linspace(0.0, 20.0, 401)
        diff = float(np.max(np.abs(tf.interpolate(ts)[:, :2]
                                   - tr.interpolate(ts)[:, :2])))
        worst = max(worst, diff)
    ok = worst <= 0.05
    # qualitative basin monotonicity in beta1 (full feedback model)
    tree = graphs.gen_kary_tree(4, 2)
    er = graphs.gen_erdos_renyi(21, 0.2, 1000)
    links = {(0, 1): [(i, i) for i in range(5, 21)]}
    xi = graphs.xi_paper_normalization([tree, er], links)
    omega = presets.sample_omega([21, 21], mu=0.2, nu=0.0, seed=2000)
    net = graphs.assemble([tree, er], links, sigma=[4.0, 2.0], xi=xi,
                          phi=0.2, psi=0.0, omega=omega)
    values = []
    for b1 in (1.0, 2.5, 4.0):
        spec = basin.BasinSpec(grid=(3, 3), n_sim=6, seed=5, recon_T=10.0,
                               settings=IntegratorSettings(dt_init=0.02,
                                                           t_end=60.0))
        values.append(basin.estimate_basin(
            "feedback", cfg.with_overrides(beta1=b1), spec, net=net).value)
    monotone = values[0] <= values[1] <= values[2] and values[2] > values[0]
    ok &= monotone
    _report(6, "synchronised full model tracks the reduction", ok, t0,
            f" (sup diff {worst:.4f} <= 0.05 over 5 seeds; "
            f"basin values {values} monotone in beta1)")


# -- 7 ----------------------------------------------------------------------

def test_criterion_7_scenario_classes():
    t0 = time.time()
    results = {}
    for name, want in (("fig3a", "red"), ("fig3b", "blue")):
        p = presets.get_preset(name)
        net = presets.build_network(p["network"], master_seed=42)
        cfg = ModelConfig(**p["params"])
        system = models.build_system("eco3", cfg, net=net)
        res = solver.ensemble(
            system, [5.0, 5.0, 5.0], n_sim=20, seed=42,
            settings=IntegratorSettings(dt_init=0.01, t_end=100.0),
            recon_T=50.0, p_death=cfg.P_D)
        results[name] = (want, res.fractions[want])
    ok = all(frac >= 0.8 for _, frac in results.values())
    # informational: the phi = +/- pi/4 variant from the prose
    info = {}
    for name, phi in (("fig3a", -np.pi / 4), ("fig3b", np.pi / 4)):
        p = presets.get_preset(name)
        p["network"]["phi"] = phi
        p["params"]["phi"] = phi
        net = presets.build_network(p["network"], master_seed=42)
        cfg = ModelConfig(**p["params"])
        system = models.build_system("eco3", cfg, net=net)
        res = solver.ensemble(
            system, [5.0, 5.0, 5.0], n_sim=8, seed=42,
            settings=IntegratorSettings(dt_init=0.01, t_end=100.0),
            recon_T=50.0, p_death=cfg.P_D)
        info[name] = res.fractions
    print(f"    [info] phi=+/-pi/4 variant fractions: {info}")
    _report(7, "scenario presets classify as captioned", ok, t0,
            f" ({ {k: v for k, v in results.items()} }, threshold 0.8)")


# -- 8 ----------------------------------------------------------------------

def test_criterion_8_doe_stratification():
    t0 = time.time()

    def g(x):
        return float((x[0] * x[1]) ** 2)

    def chi2_uniform(ys, bins=10):
        h, _ = np.histogram(np.clip(ys, 0, 1), bins=bins, range=(0, 1))
        e = len(ys) / bins
        return float(((h - e) ** 2 / e).sum())

    ranges = [(0.0, 1.0), (0.0, 1.0)]
    k_init, n_total = 20, 60
    chis_bo, chis_lhs = [], []
    for s in range(10):
        recs = doe.run_doe(g, ranges, k_init, n_total, seed=800 + s)
        ys_bo = np.array([r.y for r in recs if not r.failed])
        lhs = doe.build_design(2, n_total, ranges, seed=800 + s)
        ys_lhs = np.array([g(x) for x in lhs.points])
        chis_bo.append(chi2_uniform(ys_bo))
        chis_lhs.append(chi2_uniform(ys_lhs))
    ok = np.mean(chis_bo) < np.mean(chis_lhs)
    _report(8, "acquisition loop stratifies responses better than pure LHS",
            ok, t0, f" (mean chi2 {np.mean(chis_bo):.1f} vs "
                    f"{np.mean(chis_lhs):.1f}, 10 paired seeds)")


# -- 9 ----------------------------------------------------------------------

def test_criterion_9_glm_oracle_equivalence():
    t0 = time.time()
    ok = True
    details = []
    # hand-executed IRLS oracle on the 3-point problem
    x = np.array([-1.0, 0.0, 1.0])
    y = np.array([0.2, 0.5, 0.9])
    b0, b1 = 0.0, 0.0
    for _ in range(60):
        eta = b0 + b1 * x
        mu = 1 / (1 + np.exp(-eta))
        w = mu * (1 - mu)
        z = eta + (y - mu) / w
        s00, s01, s11 = w.sum(), (w * x).sum(), (w * x * x).sum()
        t0_, t1_ = (w * z).sum(), (w * x * z).sum()
        det = s00 * s11 - s01 * s01
        b0, b1 = (s11 * t0_ - s01 * t1_) / det, (s00 * t1_ - s01 * t0_) / det
    mu = 1 / (1 + np.exp(-(b0 + b1 * x)))
    w = mu * (1 - mu)
    dispersion = ((y - mu) ** 2 / w).sum() / 1.0
    s00, s01, s11 = w.sum(), (w * x).sum(), (w * x * x).sum()
    det = s00 * s11 - s01 * s01
    se = np.sqrt(np.array([s11, s00]) / det * dispersion)
    fit = stats.fit_quasibinomial(x[:, None], y)
    ok &= abs(fit.coefficients[0] - b0) <= 1e-8
    ok &= abs(fit.coefficients[1] - b1) <= 1e-8
    ok &= abs(fit.dispersion - dispersion) <= 1e-8
    ok &= abs(fit.t_values[0] - b0 / se[0]) <= 1e-8
    ok &= abs(fit.t_values[1] - b1 / se[1]) <= 1e-8
    details.append("IRLS oracle matched")
    # ANOVA telescoping
    rng = np.random.default_rng(900)
    X = rng.normal(size=(200, 3))
    yy = np.clip(1 / (1 + np.exp(-(0.3 + X @ np.array([1.0, -0.5, 0.0]))))
                 + rng.normal(scale=0.03, size=200), 1e-3, 1 - 1e-3)
    tab = stats.deviance_anova(X, yy)
    ok &= abs(tab.percentages.sum() - 100.0) <= 1e-9
    details.append(f"ANOVA sum {tab.percentages.sum():.12f}")
    # null-feature permutation importance below 0.01 in >= 95% of 20 runs
    below = 0
    for s in range(20):
        rng = np.random.default_rng(1000 + s)
        X = rng.normal(size=(400, 2))
        yy = np.clip(1 / (1 + np.exp(-(0.2 + X[:, 0])))
                     + rng.normal(scale=0.05, size=400), 1e-3, 1 - 1e-3)
        fit_s = stats.fit_quasibinomial(X, yy, feature_names=["sig", "null"])
        imp = stats.permutation_importance(fit_s, X, yy, n_repeats=5, seed=s)
        below += abs(imp["null"]) < 0.01
    ok &= below >= 19
    details.append(f"null importance below 0.01 in {below}/20 runs")
    # format-compatible coefficient table
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "coef.csv"
        stats.write_coefficient_table(
            stats.fit_quasibinomial(X, yy, feature_names=["a", "b"]),
            stats.deviance_anova(X, yy, ["a", "b"]), path)
        header = path.read_text().splitlines()[0]
        ok &= header == "term,Estimate,Std. Error,t-value,Deviance%"
    _report(9, "GLM pipeline matches its oracles", ok, t0,
            " (" + "; ".join(details) + ")")


# -- 10 ---------------------------------------------------------------------

def _artifact_values(path):
    out = {}
    for p in sorted(path.glob("*.csv")):
        rows = []
        for line in p.read_text().splitlines()[1:]:
            vals = []
            for tok in line.split(","):
                try:
                    vals.append(float(tok))
                except ValueError:
                    vals.append(tok)
            rows.append(vals)
        out[p.name] = rows
    return out


def test_criterion_10_determinism(tmp_path):
    t0 = time.time()
    ok = True
    details = []
    runs = {
        "simple-cs": ["task.type=simulate", "beta1=4.0", "solver.t_end=40"],
        "eco2-supp": [],
        "paper-2pop": ["solver.t_end=30"],
        "fig3b": ["solver.t_end=30", "solver.recon_T=10"],
    }
    for name, overrides in runs.items():
        a = tmp_path / f"{name}-a"
        b = tmp_path / f"{name}-b"
        cli.run(name, overrides=overrides, out_dir=a, seed=11)
        cli.run(name, overrides=overrides, out_dir=b, seed=11)
        va, vb = _artifact_values(a), _artifact_values(b)
        ok &= set(va) == set(vb) and len(va) > 0
        method = presets.get_preset(name)["solver"].get("method", "rk45")
        for fname in va:
            for ra, rb in zip(va[fname], vb[fname]):
                for xa, xb in zip(ra, rb):
                    if isinstance(xa, float):
                        if method == "rk4":
                            ok &= xa == xb             # byte-identical
                        else:
                            ok &= abs(xa - xb) <= 1e-12
                    else:
                        ok &= xa == xb
        if method == "rk4":
            # fixed-step artifacts must match byte for byte
            for fname in ("trajectory.csv",):
                fa, fb = a / fname, b / fname
                if fa.exists():
                    ok &= fa.read_bytes() == fb.read_bytes()
        details.append(f"{name}:{method}")
    _report(10, "preset reruns reproduce artifacts", ok, t0,
            " (" + ", ".join(details) + ")")
