"""Command-line benchmark harness: single runs, density sweeps and reports.

    gapnav run --config scenario.json --seed 7 [--trace trace.csv]
    gapnav sweep --spec sweep.json --out results/ [--jobs 4] [--resume]
    gapnav report --in results/ --out report/

Output directories default to ``$GAPNAV_OUT`` when ``--out`` is omitted.
Every file written here is documented in docs/formats.md.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import struct
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from scipy import stats

from .config import cell_config, load_scenario, load_sweep_spec
from .errors import ConfigError
from .metrics import compute_metrics, wilcoxon_paired
from .sim import run_scenario, write_trace

SCHEMA_VERSION = 1
OUT_ENV = "GAPNAV_OUT"
METRICS = ("time_to_target", "path_length", "collision_rate_moving", "svr_moving", "avg_social_force")
RUN_COLUMNS = (
    "planner", "density", "density_index", "seed_index", "seed", "status", "outcome",
    *METRICS, "error",
)
PARTIAL = "runs.partial.csv"
NA = "NA"


def hash64(*values):
    """Stable 64-bit hash of a tuple of integers (BLAKE2b, little-endian)."""
    data = b"".join(struct.pack("<q", int(v)) for v in values)
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def cell_seed(master_seed, density_index, seed_index):
    """Seed of one sweep cell. The planner is left out so every stack sees the same crowd."""
    return hash64(master_seed, density_index, seed_index)


def _fmt(value):
    if value is None:
        return NA
    if isinstance(value, float):
        return NA if math.isnan(value) else repr(value)
    return str(value)


# -- run ---------------------------------------------------------------------


def cmd_run(args):
    try:
        config = load_scenario(args.config)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    config.seed = args.seed
    record = run_scenario(config)
    if args.trace:
        write_trace(record, args.trace)
    metrics = compute_metrics(record)
    line = {"seed": args.seed, "planner": config.ego_planner, "density": config.density, **metrics.as_dict()}
    print(json.dumps(line, sort_keys=True))
    return 0


# -- sweep ---------------------------------------------------------------------


def _cells(spec):
    for p_idx, planner in enumerate(spec.planners):
        for d_idx, density in enumerate(spec.densities):
            for s_idx in range(spec.seeds_per_cell):
                yield planner, d_idx, density, s_idx


def run_cell(spec, planner, density_index, density, seed_index):
    """Run one cell and return its result row (a dict of strings)."""
    seed = cell_seed(spec.master_seed, density_index, seed_index)
    row = {
        "planner": planner, "density": _fmt(float(density)), "density_index": str(density_index),
        "seed_index": str(seed_index), "seed": str(seed),
    }
    try:
        record = run_scenario(cell_config(spec, density, seed, planner))
        m = compute_metrics(record)
    except Exception as exc:  # recorded per cell; the sweep carries on
        row.update(status="error", outcome=NA, error=f"{type(exc).__name__}: {exc}".replace("\n", " "))
        row.update({k: NA for k in METRICS})
        return row
    row.update(status="ok", outcome=m.outcome, error="")
    row.update({k: _fmt(float(getattr(m, k))) for k in METRICS})
    return row


def _row_key(row):
    return row["planner"], int(row["density_index"]), int(row["seed_index"])


def read_rows(path):
    """Rows of a results CSV, skipping '#' metadata lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _write_rows(path, rows, columns):
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_VERSION}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, NA) for c in columns})
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _append_row(fh, row):
    csv.DictWriter(fh, fieldnames=RUN_COLUMNS, lineterminator="\n").writerow(row)
    fh.flush()


def sweep(spec, out_dir, jobs=1, resume=False, progress=None):
    """Run every (planner, density, seed) cell and write runs.csv and aggregate.csv.

    Finished cells are appended to runs.partial.csv as they complete; with
    ``resume`` the cells already recorded there with status ok are skipped.
    The final tables are sorted, so their bytes depend neither on the worker
    count nor on completion order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / PARTIAL
    done = {}
    if resume and partial.exists():
        for row in read_rows(partial):
            done[_row_key(row)] = row
    else:
        with open(partial, "w", encoding="utf-8") as fh:
            fh.write(f"# schema={SCHEMA_VERSION}\n")
            csv.DictWriter(fh, fieldnames=RUN_COLUMNS, lineterminator="\n").writeheader()
    (out / "sweep_spec.json").write_text(_spec_json(spec), encoding="utf-8")

    order = {p: i for i, p in enumerate(spec.planners)}
    todo = [c for c in _cells(spec)
            if done.get((c[0], c[1], c[3]), {}).get("status") != "ok"]
    with open(partial, "a", encoding="utf-8") as fh:
        if jobs <= 1:
            for cell in todo:
                row = run_cell(spec, *cell)
                _append_row(fh, row)
                done[_row_key(row)] = row
                if progress:
                    progress(row)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_cell, spec, *cell) for cell in todo]
                for fut in as_completed(futures):
                    row = fut.result()
                    _append_row(fh, row)
                    done[_row_key(row)] = row
                    if progress:
                        progress(row)

    wanted = {(c[0], c[1], c[3]) for c in _cells(spec)}
    rows = sorted((r for k, r in done.items() if k in wanted),
                  key=lambda r: (order[r["planner"]], int(r["density_index"]), int(r["seed_index"])))
    _write_rows(out / "runs.csv", rows, RUN_COLUMNS)
    aggregate = aggregate_rows(rows, spec.planners, spec.densities)
    _write_rows(out / "aggregate.csv", aggregate, AGG_COLUMNS)
    return rows


def _spec_json(spec):
    return json.dumps({
        "densities": list(spec.densities), "seeds_per_cell": spec.seeds_per_cell,
        "planners": list(spec.planners), "master_seed": spec.master_seed, "scenario": spec.scenario,
    }, indent=2, sort_keys=True) + "\n"


# -- aggregation -----------------------------------------------------------------


def mean_ci(values, level=0.95):
    """(mean, lower, upper) with a Student-t interval; NaN where undefined."""
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        return math.nan, math.nan, math.nan
    mean = float(np.mean(x))
    if len(x) < 2:
        return mean, math.nan, math.nan
    half = float(stats.t.ppf(0.5 + level / 2.0, len(x) - 1) * np.std(x, ddof=1) / math.sqrt(len(x)))
    return mean, mean - half, mean + half


AGG_COLUMNS = (
    "planner", "density", "n_runs", "n_ok", "n_reached", "n_error", "metric", "mean", "ci_low", "ci_high",
)


def _ok_rows(rows, planner, density):
    return [r for r in rows if r["planner"] == planner and float(r["density"]) == density and r["status"] == "ok"]


def aggregate_rows(rows, planners, densities):
    """Long-format table: one row per (planner, density, metric).

    ``time_to_target`` counts timeouts at the timeout value; the extra
    ``time_to_target_reached`` metric averages over reached runs only.
    """
    out = []
    for planner in planners:
        for density in densities:
            cell = [r for r in rows if r["planner"] == planner and float(r["density"]) == density]
            ok = [r for r in cell if r["status"] == "ok"]
            reached = [r for r in ok if r["outcome"] == "reached"]
            base = {
                "planner": planner, "density": _fmt(float(density)), "n_runs": str(len(cell)),
                "n_ok": str(len(ok)), "n_reached": str(len(reached)),
                "n_error": str(len(cell) - len(ok)),
            }
            series = {m: [float(r[m]) for r in ok] for m in METRICS}
            series["time_to_target_reached"] = [float(r["time_to_target"]) for r in reached]
            for metric, values in series.items():
                mean, lo, hi = mean_ci(values)
                out.append({**base, "metric": metric, "mean": _fmt(mean), "ci_low": _fmt(lo), "ci_high": _fmt(hi)})
    return out


# -- report ------------------------------------------------------------------------


TABLE_COLUMNS = ("density", "planner", "n", "mean", "ci_low", "ci_high")
SIG_COLUMNS = ("metric", "pgp_planner", "baseline", "density", "n_pairs", "mean_pgp", "mean_baseline",
               "mean_diff", "p_value")


def _paired(rows, metric, a, b, density=None):
    """Values of ``metric`` for planners a and b on the seeds both completed."""
    def index(planner):
        return {
            (r["density_index"], r["seed_index"]): float(r[metric])
            for r in rows
            if r["planner"] == planner and r["status"] == "ok"
            and (density is None or float(r["density"]) == density)
        }
    ia, ib = index(a), index(b)
    keys = sorted(set(ia) & set(ib), key=lambda k: (int(k[0]), int(k[1])))
    return np.array([ia[k] for k in keys]), np.array([ib[k] for k in keys])


def significance_rows(rows, planners, densities):
    """Paired Wilcoxon p-values of every PGP stack against its baseline, per density and pooled."""
    out = []
    pairs = [(p, p.split("+", 1)[1]) for p in planners if p.startswith("pgp+") and p.split("+", 1)[1] in planners]
    for metric in METRICS:
        for pgp_name, base in pairs:
            for density in [*densities, None]:
                a, b = _paired(rows, metric, pgp_name, base, density)
                n = len(a)
                p = wilcoxon_paired(b, a) if n >= 5 else math.nan
                out.append({
                    "metric": metric, "pgp_planner": pgp_name, "baseline": base,
                    "density": "pooled" if density is None else _fmt(float(density)),
                    "n_pairs": str(n),
                    "mean_pgp": _fmt(float(a.mean())) if n else NA,
                    "mean_baseline": _fmt(float(b.mean())) if n else NA,
                    "mean_diff": _fmt(float((a - b).mean())) if n else NA,
                    "p_value": _fmt(p),
                })
    return out


def report(in_dir, out_dir):
    """Summary tables, significance table and gnuplot files for a finished sweep."""
    src = Path(in_dir)
    runs = src / "runs.csv"
    if not runs.exists():
        runs = src / PARTIAL
    rows = read_rows(runs)
    spec_path = src / "sweep_spec.json"
    if spec_path.exists():
        spec = json.loads(spec_path.read_text(encoding="utf-8"))
        planners, densities = spec["planners"], [float(d) for d in spec["densities"]]
    else:
        planners = list(dict.fromkeys(r["planner"] for r in rows))
        densities = sorted({float(r["density"]) for r in rows})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gaps = 0
    for metric in METRICS:
        table = []
        for density in densities:
            for planner in planners:
                values = [float(r[metric]) for r in _ok_rows(rows, planner, density)]
                mean, lo, hi = mean_ci(values)
                gaps += not values
                table.append({"density": _fmt(density), "planner": planner, "n": str(len(values)),
                              "mean": _fmt(mean), "ci_low": _fmt(lo), "ci_high": _fmt(hi)})
        _write_rows(out / f"{metric}.csv", table, TABLE_COLUMNS)
        _write_dat(out / f"{metric}.dat", metric, table, planners, densities)
    _write_rows(out / "significance.csv", significance_rows(rows, planners, densities), SIG_COLUMNS)
    _write_rows(out / "summary.csv", _summary(rows, planners, densities), ("planner", "metric", "mean_over_densities"))
    return gaps


def _summary(rows, planners, densities):
    """Mean over densities of the per-density means, each density weighted equally."""
    out = []
    for planner in planners:
        for metric in METRICS:
            means = [np.mean([float(r[metric]) for r in _ok_rows(rows, planner, d)])
                     for d in densities if _ok_rows(rows, planner, d)]
            value = float(np.mean(means)) if len(means) == len(densities) else math.nan
            out.append({"planner": planner, "metric": metric, "mean_over_densities": _fmt(value)})
    return out


def _write_dat(path, metric, table, planners, densities):
    lookup = {(r["density"], r["planner"]): r for r in table}
    lines = [f"# {metric}: per-density mean and 95% CI; missing cells are NA",
             '# gnuplot: set datafile missing "NA"',
             "# density " + " ".join(f"{p}_mean {p}_lo {p}_hi" for p in planners)]
    for density in densities:
        cols = [_fmt(density)]
        for planner in planners:
            r = lookup[(_fmt(density), planner)]
            cols += [r["mean"], r["ci_low"], r["ci_high"]]
        lines.append(" ".join(cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- entry point --------------------------------------------------------------------


def _out_dir(value, parser):
    value = value or os.environ.get(OUT_ENV)
    if not value:
        parser.error(f"--out not given and ${OUT_ENV} is unset")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="gapnav", description="Crowd-navigation benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and print its metrics as JSON")
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--trace", help="write the per-tick trace CSV here")

    p = sub.add_parser("sweep", help="run every (planner, density, seed) cell of a sweep spec")
    p.add_argument("--spec", required=True, help="sweep spec JSON file")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--resume", action="store_true", help="skip cells already recorded in the manifest")

    p = sub.add_parser("report", help="summary tables and plot data for a finished sweep")
    p.add_argument("--in", dest="in_dir", help=f"sweep directory (default ${OUT_ENV})")
    p.add_argument("--out", help="report directory (default <in>/report)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "sweep":
        out = _out_dir(args.out, parser)
        try:
            spec = load_sweep_spec(args.spec)
        except ConfigError as exc:
            print(f"error: {args.spec}: {exc}", file=sys.stderr)
            return 2
        rows = sweep(spec, out, jobs=max(1, args.jobs), resume=args.resume)
        errors = sum(r["status"] != "ok" for r in rows)
        print(f"{len(rows)} runs written to {out} ({errors} errors)")
        return 0
    in_dir = _out_dir(args.in_dir, parser)
    out = args.out or str(Path(in_dir) / "report")
    if not (Path(in_dir) / "runs.csv").exists() and not (Path(in_dir) / PARTIAL).exists():
        print(f"error: no sweep results in {in_dir}", file=sys.stderr)
        return 2
    gaps = report(in_dir, out)
    print(f"report written to {out}" + (f" ({gaps} empty cells marked {NA})" if gaps else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
