"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured numbers; the
lines are repeated in the pytest terminal summary.
"""

import json
from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np

from blockage_geom import analytic as an
from blockage_geom import montecarlo as mc
from blockage_geom.cli import main
from blockage_geom.geometry import Kind, brute_force_intervals, intervals_for_buildings
from blockage_geom.model import BASELINE
from blockage_geom.layout import save_layout

from _helpers import boundary_mismatch, random_scene, report
from test_layout import eixample

LONG = replace(BASELINE, d=100_000.0)


def _random_height_params(rng, n):
    """Random valid parameter sets, one third per height regime."""
    out = []
    for i in range(n):
        hu = rng.uniform(0, 5)
        hmin = hu + rng.uniform(0, 40)
        hmax = hmin + rng.uniform(0.01, 60)
        regime = i % 3
        if regime == 0:
            hb = rng.uniform(hu + 0.05, max(hu + 0.1, hmin))
            hb = min(hb, hmin) if hmin > hu + 0.05 else hb
        elif regime == 1:
            hb = rng.uniform(max(hmin, hu + 0.05), hmax)
        else:
            hb = hmax + rng.uniform(0, 50)
        out.append(replace(BASELINE, h_user=hu, h_min=hmin, h_max=hmax, h_bs=hb))
    return out


def test_criterion_1_eta_closed_forms():
    rng = np.random.default_rng(2024)
    params = _random_height_params(rng, 200)
    regimes = Counter(p.regime for p in params)
    worst = max(
        max(abs(an.eta_x(p) - an.eta_x_quadrature(p, 100_000)),
            abs(an.eta_tilde(p) - an.eta_tilde_quadrature(p, 100_000)))
        for p in params
    )
    jumps = []
    for edge in ("h_min", "h_max"):
        hb = getattr(BASELINE, edge)
        for f in (an.eta_x, an.eta_tilde):
            vals = [f(replace(BASELINE, h_bs=hb + s)) for s in (-1e-10, 0.0, 1e-10)]
            jumps += [abs(vals[1] - vals[0]), abs(vals[2] - vals[1])]
    ok = worst <= 1e-8 and max(jumps) <= 1e-9 and len(regimes) == 3
    report(1, "eta closed forms vs quadrature", ok,
           f"max |diff| {worst:.2e} (tol 1e-8), max branch jump {max(jumps):.2e} (tol 1e-9), regimes {len(regimes)}/3")
    assert ok


def test_criterion_2_sweep_matches_brute_force():
    rng = np.random.default_rng(99)
    worst, n_intervals = 0.0, 0
    for _ in range(100):
        params, buildings = random_scene(rng, max_buildings=50, d_max=500)
        fast = intervals_for_buildings(buildings, params)
        slow = brute_force_intervals(buildings, params, 0.01)
        worst = max(worst, boundary_mismatch(fast, slow))
        n_intervals += len(fast)
    ok = worst <= 0.01
    report(2, "sweep-merge vs brute force", ok, f"100 scenes, {n_intervals} intervals, max boundary offset {worst:.4f} m (tol 0.01)")
    assert ok


def test_criterion_3_point_los_probability():
    stats = mc.run_trials(mc.TrialConfig(LONG, 12, seed=3))
    freq = stats.point_los_frequency
    ok = stats.total_trajectory_length >= 1e6 and abs(freq - 0.6127) <= 0.01
    report(3, "point LOS probability", ok,
           f"{freq:.4f} over {stats.total_trajectory_length:.3g} m (target 0.6127 +- 0.01, closed form {an.p_los_point(BASELINE):.4f})")
    assert ok


def test_criterion_4_mean_lengths():
    details, ok = [], True
    for r in (100.0, 200.0, 300.0):
        p = replace(LONG, r=r)
        stats = mc.run_trials(mc.TrialConfig(p, 20, seed=4))
        ez, es = an.mean_los_length(p), an.mean_nlos_length(p)
        ez_err = abs(stats.mean_los() / ez - 1)
        es_err = abs(stats.mean_nlos() / es - 1)
        ok &= ez_err <= 0.05 and es_err <= 0.05
        details.append(f"r={r:g}: Z {stats.mean_los():.2f}/{ez:.2f} ({ez_err:.1%}), S {stats.mean_nlos():.2f}/{es:.2f} ({es_err:.1%})")
    report(4, "mean LOS/NLOS lengths within 5%", ok, "; ".join(details))
    assert ok


def test_criterion_5_cdf_bound():
    stats = mc.run_trials(mc.TrialConfig(LONG, 20, seed=5))
    z = stats.los_lengths
    n = z.size
    grid = np.linspace(0, 5 * an.mean_los_length(BASELINE), 201)
    f_emp = np.array([f for _, f in mc.empirical_cdf(z, grid)])
    bound = an.cdf_los_bound(BASELINE, grid)
    band = 3 * np.sqrt(f_emp * (1 - f_emp) / n)
    excess = float(np.max(f_emp - bound - band))
    gap = float(np.max(np.abs(f_emp - bound)))
    ok = n >= 10_000 and excess <= 0 and gap <= 0.05
    report(5, "LOS-length CDF vs bound", ok,
           f"n={n}, max(F_emp - bound - 3sigma) {excess:+.4f} (<= 0), sup-gap {gap:.4f} (tol 0.05)")
    assert ok


def _sweep(params, r_values):
    rows = mc.density_sweep(replace(params, d=100_000.0), r_values, n_trials=300, seed=6)
    return np.array([[row.los_density, row.mean_Z, row.mean_S] for row in rows]).T


def test_criterion_6_density_curve():
    details, ok = [], True
    target_value = an.max_density_value(BASELINE)
    for scale, r_values in ((1, np.arange(20, 401, 20.0)), (2, np.arange(10, 201, 10.0))):
        p = replace(BASELINE, lam=BASELINE.lam * scale)
        density, _, _ = _sweep(p, r_values)
        r_peak, value = mc.peak_location(r_values, density)
        target_r = an.critical_radii(p)[0]
        ok &= abs(r_peak / target_r - 1) <= 0.10 and abs(value / target_value - 1) <= 0.10
        details.append(f"{scale}x lambda: peak r {r_peak:.1f} (theory {target_r:.1f}), value {value:.5f} (theory {target_value:.5f})")
    report(6, "interval density peak", ok, "; ".join(details))
    assert ok


def test_criterion_7_equal_length_crossing():
    r_values = np.arange(20, 401, 20.0)
    _, mean_z, mean_s = _sweep(BASELINE, r_values)
    r_cross, value = mc.crossing(r_values, mean_z, mean_s)
    target_r = an.critical_radii(BASELINE)[1]
    target_value = an.equal_length_value(BASELINE)
    ok = abs(r_cross / target_r - 1) <= 0.10 and abs(value / target_value - 1) <= 0.10
    report(7, "E[Z] = E[S] crossing", ok,
           f"r {r_cross:.1f} (theory {target_r:.1f}), value {value:.2f} m (theory {target_value:.2f})")
    assert ok


def _write_config(path: Path, **extra) -> Path:
    cfg = BASELINE.to_dict()
    cfg.update(extra)
    path.write_text(json.dumps(cfg))
    return path


def _rows(path: Path, key: str) -> Counter:
    import csv

    with open(path) as fh:
        return Counter((r[key], r["kind"], r["length"], r["censored"]) for r in csv.DictReader(fh))


def test_criterion_8_layout_round_trip(tmp_path):
    mismatches, total = 0, 0
    for seed in range(5):
        d = 3000.0
        sim_cfg = _write_config(tmp_path / f"sim{seed}.json", d=d, n_trials=1, seed=seed)
        scene = tmp_path / f"scene{seed}.json"
        assert main(["simulate", "--config", str(sim_cfg), "--out", str(tmp_path / f"sim{seed}"), "--export-layout", str(scene)]) == 0
        lay_cfg = _write_config(tmp_path / f"lay{seed}.json", d=d, layout=scene.name,
                                query={"bs_u": 0, "bs_v": 0, "u_start": 0, "u_end": d})
        assert main(["layout", "--config", str(lay_cfg), "--out", str(tmp_path / f"lay{seed}")]) == 0
        sim = Counter({k[1:]: v for k, v in _rows(tmp_path / f"sim{seed}" / "intervals.csv", "trial").items()})
        via_layout = Counter({k[1:]: v for k, v in _rows(tmp_path / f"lay{seed}" / "intervals.csv", "query").items()})
        total += sum(sim.values())
        mismatches += sum(((sim - via_layout) + (via_layout - sim)).values())
    ok = mismatches == 0 and total > 0
    report(8, "layout round trip", ok, f"5 exported scenes, {total} intervals, {mismatches} mismatches")
    assert ok


def _snapshot(directory: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_criterion_9_determinism(tmp_path):
    grid = eixample(10, 8, h=20.0)
    save_layout(grid, tmp_path / "grid.json")
    u0, u1, v0, v1 = grid.bbox
    cfg = _write_config(
        tmp_path / "c.json", d=20_000, n_trials=8, seed=11,
        z_grid=list(np.linspace(0, 300, 31)),
        layout="grid.json", query={"bs_u": u0 + 15, "bs_v": v0 + 15, "u_start": u0 + 15, "u_end": u1 - 15},
    )
    checked = []
    for command, extra in (("analytic", []), ("simulate", []), ("sweep", ["--r", "50,100,150"]), ("layout", ["--thinning", "0.5"])):
        outs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
            out = tmp_path / f"{command}_{tag}"
            assert main([command, "--config", str(cfg), "--out", str(out), "--workers", str(workers), *extra]) == 0
            outs.append(_snapshot(out))
        checked.append(outs[0] == outs[1] == outs[2] and bool(outs[0]))
    ok = all(checked)
    report(9, "determinism", ok, "analytic/simulate/sweep/layout byte-identical across reruns and 1 vs 2 workers: "
           + ", ".join(str(c) for c in checked))
    assert ok
