"""Command-line front end: ``blockage-geom analytic|simulate|sweep|layout``.

Every command reads a JSON config (scenario parameters plus options), lets
flags override individual keys and writes CSV/JSON files into ``--out``.
Exit codes: 0 success, 2 invalid config or input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, layout as lay, montecarlo as mc
from .model import ScenarioParams, ValidationError, validate

DEFAULTS = {
    "n_trials": 100,
    "seed": 0,
    "include_censored": False,
    "workers": 1,
}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _check_grid(cfg: dict, key: str) -> list[float] | None:
    grid = cfg.get(key)
    if grid is None:
        return None
    if not isinstance(grid, list) or not grid:
        raise ConfigError(f"{key}: must be a non-empty list")
    try:
        grid = [float(x) for x in grid]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: entries must be numbers") from None
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{key}: must be sorted ascending")
    return grid


def load_config(args: argparse.Namespace) -> tuple[dict, ScenarioParams]:
    path = Path(args.config)
    text = path.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    cfg = {**DEFAULTS, **cfg, "_dir": str(path.parent)}
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.trials is not None:
        cfg["n_trials"] = args.trials
    if args.include_censored:
        cfg["include_censored"] = True
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.r is not None:
        cfg["r_values"] = args.r
        if len(args.r) == 1:
            cfg["r"] = args.r[0]
    params = validate(ScenarioParams.from_dict(cfg))
    for key in ("n_trials", "seed", "workers"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < 0:
            raise ConfigError(f"{key}: must be a non-negative integer")
    if cfg["n_trials"] < 1:
        raise ConfigError("n_trials: must be >= 1")
    if cfg["seed"] >= 2**64:
        raise ConfigError("seed: must fit in 64 bits")
    cfg["r_values"] = _check_grid(cfg, "r_values")
    cfg["z_grid"] = _check_grid(cfg, "z_grid")
    if cfg["r_values"] and min(cfg["r_values"]) <= 0:
        raise ConfigError("r_values: entries must be > 0")
    return cfg, params


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2) + "\n")


def _default_z_grid(params: ScenarioParams) -> list[float]:
    return list(np.linspace(0.0, 5 * analytic.mean_los_length(params), 101))


def _ecdf_column(samples, grid) -> list[float]:
    if len(samples) == 0:
        return [math.nan] * len(grid)
    return [f for _, f in mc.empirical_cdf(samples, grid)]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_analytic(cfg: dict, params: ScenarioParams, out: Path) -> dict:
    summary = analytic.summarize(params).as_json()
    write_json(out / "summary.json", summary)
    if cfg["r_values"]:
        rows = []
        for r in cfg["r_values"]:
            p = replace(params, r=r)
            rows.append((r, analytic.p_los_point(p), 1 - analytic.p_los_point(p), analytic.mean_los_length(p),
                         analytic.mean_nlos_length(p), analytic.interval_density(p)))
        write_csv(out / "analytic_r.csv", ["r", "p_los", "p_nlos", "mean_Z", "mean_S", "density"], rows)
    z_grid = cfg["z_grid"]
    if z_grid:
        rows = [(z, analytic.p_segment_los(params, z), analytic.cdf_los_bound(params, z), analytic.pdf_los_approx(params, z))
                for z in z_grid]
        write_csv(out / "analytic_z.csv", ["z", "p_segment_los", "cdf_bound", "pdf_approx"], rows)
    return summary


def cmd_simulate(cfg: dict, params: ScenarioParams, out: Path, export_layout: str | None = None) -> dict:
    if cfg["r_values"] and len(cfg["r_values"]) > 1:
        raise ConfigError("r: simulate takes a single r (use sweep for several)")
    config = mc.TrialConfig(params, cfg["n_trials"], cfg["seed"], cfg["include_censored"])
    stats = mc.run_trials(config, workers=cfg["workers"])

    # per-interval rows are recomputed trial by trial; cheap next to sampling
    rows = []
    for i in range(config.n_trials):
        scene, tr = mc.run_single_trial(params, config.seed, i)
        if i == 0 and export_layout:
            lay.save_layout(lay.scene_layout(scene, params), export_layout)
        for kind, s, e, cens in tr.rows():
            rows.append((i, kind, s, e, e - s, cens))
    write_csv(out / "intervals.csv", ["trial", "kind", "start", "end", "length", "censored"], rows)

    grid = cfg["z_grid"] or _default_z_grid(params)
    ecdf_los = _ecdf_column(stats.los_lengths, grid)
    ecdf_nlos = _ecdf_column(stats.nlos_lengths, grid)
    bound = analytic.cdf_los_bound(params, np.asarray(grid))
    n = max(stats.los_lengths.size, 1)
    band = 3 * np.sqrt(bound * (1 - bound) / n)
    write_csv(out / "cdf.csv", ["z", "ecdf_los", "cdf_bound", "band_3sigma", "ecdf_nlos"],
              zip(grid, ecdf_los, bound, band, ecdf_nlos))

    summary = stats.summary()
    summary["seed"] = config.seed
    summary["analytic"] = analytic.summarize(params).as_json()
    write_json(out / "summary.json", summary)
    return summary


def cmd_sweep(cfg: dict, params: ScenarioParams, out: Path) -> list:
    r_values = cfg["r_values"]
    if not r_values:
        raise ConfigError("r_values: sweep needs a non-empty r list")
    sweep = mc.density_sweep(params, r_values, cfg["n_trials"], cfg["seed"], cfg["include_censored"], cfg["workers"])
    rows = []
    for row in sweep:
        p = replace(params, r=row.r)
        rows.append((row.r, row.los_density, row.nlos_density, row.mean_Z, row.mean_S,
                     analytic.mean_los_length(p), analytic.mean_nlos_length(p), analytic.interval_density(p)))
    write_csv(out / "sweep.csv",
              ["r", "density_los", "density_nlos", "meanZ_emp", "meanS_emp", "meanZ_theory", "meanS_theory", "density_theory"],
              rows)
    return rows


def _layout_queries(cfg: dict, params: ScenarioParams, layout: lay.LayoutFile, thinning: float | None) -> list[lay.LayoutQuery]:
    q = cfg.get("query")
    rb = cfg.get("random_bs")
    if (q is None) == (rb is None):
        raise ConfigError("query: give exactly one of 'query' or 'random_bs'")
    if q is not None:
        if not isinstance(q, dict):
            raise ConfigError("query: expected an object")
        q = dict(q)
        if thinning is not None:
            q["thinning"] = thinning
        q.setdefault("r", params.r)
        try:
            return [lay.LayoutQuery(h_bs=params.h_bs, h_user=params.h_user, **q)]
        except TypeError as e:
            raise ConfigError(f"query: {e}") from None
    if not isinstance(rb, dict) or "n" not in rb:
        raise ConfigError("random_bs: expected an object with at least 'n'")
    queries = lay.random_queries(layout, int(rb["n"]), params.r, float(rb.get("length", params.d)), params.h_bs,
                                 params.h_user, int(rb.get("seed", cfg["seed"])))
    thinning = rb.get("thinning", 1.0) if thinning is None else thinning
    return [replace(qq, thinning=thinning, seed=int(rb.get("seed", cfg["seed"]))) for qq in queries]


def cmd_layout(cfg: dict, params: ScenarioParams, out: Path, thinning: float | None = None) -> dict:
    if "layout" not in cfg:
        raise ConfigError("layout: path to a layout JSON file is required")
    path = Path(cfg["layout"])
    if not path.is_absolute():
        path = Path(cfg["_dir"]) / path
    layout = lay.load_layout(path)
    queries = _layout_queries(cfg, params, layout, thinning)

    rows, los = [], []
    for qi, q in enumerate(queries):
        res = lay.evaluate_layout(layout, q)
        for iv in res.intervals:
            rows.append((qi, iv.kind.value, iv.start, iv.end, iv.length, iv.censored))
        los.append(res.los_lengths(cfg["include_censored"]))
    los = np.concatenate(los) if los else np.empty(0)
    write_csv(out / "intervals.csv", ["query", "kind", "start", "end", "length", "censored"], rows)

    # density of the layout actually evaluated (after thinning)
    r = queries[0].r
    thinned = lay.thin(layout, queries[0].thinning, queries[0].seed)
    n_rect, n_line = len(thinned.rects), len(thinned.lines)
    factor = lay.effective_line_factor(r)
    lam_buildings = n_rect / layout.area
    lam_lines = factor * lam_buildings + n_line / layout.area
    overlay = replace(params, r=r, lam=lam_lines) if lam_lines > 0 else None

    grid = cfg["z_grid"] or list(np.linspace(0.0, max(float(los.max()) if los.size else 1.0, 1.0), 101))
    ecdf = _ecdf_column(los, grid)
    theory = analytic.cdf_los_bound(overlay, np.asarray(grid)) if overlay else np.zeros(len(grid))
    write_csv(out / "cdf.csv", ["z", "ecdf_los", "cdf_analytic"], zip(grid, ecdf, theory))

    summary = {
        "layout": layout.name,
        "n_queries": len(queries),
        "r": r,
        "n_rects": n_rect,
        "n_lines": n_line,
        "lambda_buildings": lam_buildings,
        "line_factor": factor,
        "lambda_lines": lam_lines,
        "n_los_intervals": int(los.size),
        "mean_Z_emp": float(los.mean()) if los.size else None,
        "mean_Z_theory": analytic.mean_los_length(overlay) if overlay else None,
    }
    write_json(out / "summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockage-geom", description="LOS/NLOS interval statistics for street trajectories.")
    p.add_argument("command", choices=["analytic", "simulate", "sweep", "layout"])
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--trials", type=int)
    p.add_argument("--r", type=_float_list, help="comma-separated distances to the BS")
    p.add_argument("--include-censored", action="store_true")
    p.add_argument("--workers", type=int, help="worker processes for trials (output is identical)")
    p.add_argument("--export-layout", help="simulate: write trial 0's scene as a layout JSON")
    p.add_argument("--thinning", type=float, help="layout: keep each building with this probability")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, params = load_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "analytic":
            cmd_analytic(cfg, params, out)
        elif args.command == "simulate":
            cmd_simulate(cfg, params, out, args.export_layout)
        elif args.command == "sweep":
            cmd_sweep(cfg, params, out)
        else:
            cmd_layout(cfg, params, out, args.thinning)
    except (ValidationError, ConfigError, lay.LayoutError, lay.QueryError, ValueError) as e:
        print(f"blockage-geom: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"blockage-geom: I/O error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
