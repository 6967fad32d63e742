"""Command-line entry point: batch runs, estimate suites, ensembles.

Commands: simulate, picard, verify-estimates, converge-n, ensemble,
plot-data.  Every run writes a manifest first (exit_status "running") and
finalizes it with checksummed output records, so any finished run directory
replays by pointing --config at its manifest.json.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, io, noise, solver, spectral
from ._version import __version__
from .backend import resolve_backend
from .errors import BlowupError, ConfigError

__all__ = ["main", "run"]


def _load_config(args):
    cfg = io.parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def _resolved_doc(cfg):
    doc = cfg.to_doc()
    doc["backend"] = resolve_backend(cfg.backend)
    return doc


def _record(outdir: Path, kind: str, name: str) -> io.OutputRecord:
    return io.OutputRecord(kind=kind, path=name, sha256=io.sha256_file(outdir / name))


def _build(cfg):
    grid = cfg.make_grid()
    return grid, cfg.make_basis(grid), cfg.make_kernel(grid), cfg.make_coeff()


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = _resolved_doc(cfg)
    manifest = io.RunManifest.start("simulate", doc)
    manifest.write(outdir / "manifest.json")
    grid, basis, kernel, coeff = _build(cfg)
    records = []
    try:
        traj = solver.simulate(
            basis, kernel, coeff, cfg.make_initial_field(grid),
            cfg.make_noise(), cfg.make_solver(), backend=doc["backend"],
        )
    except BlowupError as e:
        (outdir / "error.txt").write_text(str(e) + "\n", encoding="utf-8")
        manifest.finalize("failed", [_record(outdir, "report", "error.txt")])
        manifest.write(outdir / "manifest.json")
        print(f"blow-up: {e}", file=sys.stderr)
        return 1
    io.write_timeseries(outdir / "timeseries.csv", traj)
    records.append(_record(outdir, "timeseries", "timeseries.csv"))
    for step, t, snap in zip(traj.snapshot_steps, traj.snapshot_times, traj.snapshots):
        name = f"snapshot_{step:06d}.txt"
        io.write_snapshot(outdir / name, grid, t, snap)
        records.append(_record(outdir, "snapshot", name))
    qv = diagnostics.qv_check(traj)
    (outdir / "report_quadratic_variation.json").write_text(qv.to_json() + "\n", encoding="utf-8")
    records.append(_record(outdir, "report", "report_quadratic_variation.json"))
    manifest.finalize("ok", records)
    manifest.write(outdir / "manifest.json")
    print(f"simulate: {traj.times.size - 1} steps, backend {traj.backend}, "
          f"final mass {traj.mass[-1]:.6g}")
    return 0


def cmd_picard(args) -> int:
    cfg = _load_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = _resolved_doc(cfg)
    manifest = io.RunManifest.start("picard", doc, {"sweeps": args.sweeps, "tol": args.tol})
    manifest.write(outdir / "manifest.json")
    grid, basis, kernel, coeff = _build(cfg)
    result = solver.picard_solve(
        basis, kernel, coeff, cfg.make_initial_field(grid), cfg.make_noise(),
        cfg.make_solver(), max_sweeps=args.sweeps, tol=args.tol,
    )
    with open(outdir / "contraction_log.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sweep,gap_sq\n")
        for i, g in enumerate(result.gaps, start=1):
            fh.write(f"{i},{g:.17g}\n")
    summary = {
        "sweeps": result.sweeps,
        "converged": result.converged,
        "gaps": result.gaps,
        "ratios": result.ratios(),
    }
    (outdir / "picard_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    records = [
        _record(outdir, "table", "contraction_log.csv"),
        _record(outdir, "report", "picard_summary.json"),
    ]
    manifest.finalize("ok", records)
    manifest.write(outdir / "manifest.json")
    print(f"picard: {result.sweeps} sweeps, converged={result.converged}, "
          f"last gap {result.gaps[-1]:.3g}")
    return 0


def _estimate_reports(cfg, trials_scale: int = 1):
    grid, basis, kernel, coeff = _build(cfg)
    rng = np.random.default_rng(cfg.seed)
    t_grid = np.logspace(-4, 0, 25)
    reports = [spectral.verify_smoothing(basis, t_grid, trials=300 * trials_scale, rng=rng)]
    for which in ("a1", "a2"):
        reports.append(
            spectral.holder_scaling_check(
                basis, eta=0.4, s=0.5, gaps=[2.0**-k for k in range(3, 11)], which=which
            )
        )
    if kernel is not None:
        m_rep, q_rep = diagnostics.estimate_lemma_constants(
            basis, kernel, trials=300 * trials_scale, rng=rng
        )
        reports += [m_rep, q_rep]
        reports += diagnostics.estimate_conv_bounds(basis, kernel, trials=400 * trials_scale, rng=rng)
    reports.append(noise.hs_embedding_check(basis, K_max=100_000))
    pairs = []
    for _ in range(200 * trials_scale):
        u = spectral.from_spectral(basis, diagnostics.sample_trial_field(basis, rng))
        v = spectral.from_spectral(basis, diagnostics.sample_trial_field(basis, rng))
        pairs.append((u, v))
    hs_rep = noise.hs_lipschitz_check(basis, coeff, pairs)
    reports.append(hs_rep)
    by_name = {r.name: r for r in reports}
    if kernel is not None:
        estimates = {
            "drift_M": by_name["transport_bilinear_M"].empirical_constant,
            "smoothing_C": by_name["semigroup_smoothing"].empirical_constant,
            "hs_lipschitz_K": hs_rep.empirical_constant,
        }
        reports.append(solver.check_condition_T(estimates, R=2.0))
    return reports


def cmd_verify_estimates(args) -> int:
    cfg = _load_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = _resolved_doc(cfg)
    manifest = io.RunManifest.start("verify-estimates", doc, {"trials_scale": args.trials})
    manifest.write(outdir / "manifest.json")
    reports = _estimate_reports(cfg, trials_scale=args.trials)
    records = []
    all_passed = True
    for rep in reports:
        name = f"report_{rep.name}.json"
        (outdir / name).write_text(rep.to_json() + "\n", encoding="utf-8")
        records.append(_record(outdir, "report", name))
        print(rep.summary_line())
        all_passed = all_passed and rep.passed
    manifest.finalize("ok" if all_passed else "failed", records)
    manifest.write(outdir / "manifest.json")
    return 0 if all_passed else 1


def cmd_converge_n(args) -> int:
    cfg = _load_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    n_list = [int(v) for v in args.n_list.split(",")]
    doc = _resolved_doc(cfg)
    manifest = io.RunManifest.start("converge-n", doc, {"n_list": n_list})
    manifest.write(outdir / "manifest.json")
    grid, basis, kernel, _ = _build(cfg)
    table = diagnostics.convergence_in_n(
        basis, kernel, cfg.lam, cfg.make_initial_field(grid), cfg.make_noise(),
        cfg.make_solver(), n_list=n_list, continuity_fix=cfg.continuity_fix,
        backend=doc["backend"],
    )
    with open(outdir / "converge_n.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n_lo,n_hi,distance\n")
        for (lo, hi), d in table["distances"].items():
            fh.write(f"{lo},{hi},{d:.17g}\n")
    records = [_record(outdir, "table", "converge_n.csv")]
    manifest.finalize("ok", records)
    manifest.write(outdir / "manifest.json")
    print(f"converge-n: monotone={table['monotone']} distances="
          + " ".join(f"d({lo},{hi})={d:.3g}" for (lo, hi), d in table["distances"].items()))
    return 0


def _one_stream(cfg, basis, kernel, coeff, grid, sid, backend):
    spec = noise.NoiseSpec(seed=cfg.seed, stream_id=sid)
    traj = solver.simulate(
        basis, kernel, coeff, cfg.make_initial_field(grid), spec,
        cfg.make_solver(), backend=backend,
    )
    qv = diagnostics.qv_check(traj)
    return {
        "stream_id": sid,
        "final_mass": traj.mass[-1],
        "mass_drift": traj.mass[-1] - traj.mass[0],
        "qv_ratio": qv.empirical_constant,
        "positivity_min": float(np.min(traj.positivity_fraction)),
        "db_norm_final": traj.db_norm[-1],
    }


def cmd_ensemble(args) -> int:
    cfg = _load_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = _resolved_doc(cfg)
    manifest = io.RunManifest.start(
        "ensemble", doc, {"count": args.count, "workers": args.workers}
    )
    manifest.write(outdir / "manifest.json")
    grid, basis, kernel, coeff = _build(cfg)
    sids = [cfg.stream_id + i for i in range(args.count)]
    rows = []
    failures = []

    def task(sid):
        try:
            return _one_stream(cfg, basis, kernel, coeff, grid, sid, doc["backend"])
        except Exception as e:  # per-realization isolation
            return {"stream_id": sid, "error": f"{type(e).__name__}: {e}"}

    with ThreadPoolExecutor(max_workers=args.workers) as ex:
        for res in ex.map(task, sids):
            (failures if "error" in res else rows).append(res)
    rows.sort(key=lambda r: r["stream_id"])
    failures.sort(key=lambda r: r["stream_id"])
    cols = ("stream_id", "final_mass", "mass_drift", "qv_ratio", "positivity_min", "db_norm_final")
    with open(outdir / "ensemble.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(
                str(r[c]) if c == "stream_id" else f"{r[c]:.17g}" for c in cols
            ) + "\n")
    summary = {"count": args.count, "completed": len(rows), "failures": failures}
    if rows:
        # means over stream-sorted arrays: order-insensitive pairwise reduction
        for stat in ("mass_drift", "qv_ratio", "final_mass"):
            arr = np.array([r[stat] for r in rows])
            summary[f"mean_{stat}"] = float(np.mean(arr))
            summary[f"stderr_{stat}"] = (
                float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.inf
            )
    (outdir / "ensemble_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    records = [
        _record(outdir, "table", "ensemble.csv"),
        _record(outdir, "report", "ensemble_summary.json"),
    ]
    status = "ok" if not failures else "failed"
    manifest.finalize(status, records)
    manifest.write(outdir / "manifest.json")
    drift = summary.get("mean_mass_drift")
    msg = f"ensemble: {len(rows)}/{args.count} streams ok"
    if drift is not None:
        msg += f", mean mass drift {drift:.3g} (se {summary['stderr_mass_drift']:.3g})"
    print(msg)
    return 0 if not failures else 1


def cmd_plot_data(args) -> int:
    path = Path(args.input)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
    except OSError as e:
        print(f"cannot read {path}: {e}", file=sys.stderr)
        return 1
    lines = []
    if first.startswith("# L="):
        values, L, N, _t = io.read_snapshot(path)
        x = (np.arange(N) + 0.5) * (L / N)
        lines = [f"{xi:.17g} {vi:.17g}" for xi, vi in zip(x, values)]
    else:
        series = io.read_timeseries(path)
        if args.column not in series or args.column == "t":
            print("column must be one of mass, positivity_fraction, db_norm", file=sys.stderr)
            return 1
        lines = [
            f"{t:.17g} {v:.17g}" for t, v in zip(series["t"], series[args.column])
        ]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        name = path.stem + "_plot.txt"
        (outdir / name).write_text(text, encoding="utf-8")
        print(f"wrote {outdir / name}")
    return 0


def run(command: str, args) -> int:
    """Dispatch one parsed command; returns the process exit status."""
    table = {
        "simulate": cmd_simulate,
        "picard": cmd_picard,
        "verify-estimates": cmd_verify_estimates,
        "converge-n": cmd_converge_n,
        "ensemble": cmd_ensemble,
        "plot-data": cmd_plot_data,
    }
    if command not in table:
        raise ConfigError([f"unknown command {command!r}"])
    return table[command](args)


def _add_common(p, seed=True):
    p.add_argument("--config", required=True, help="config file, inline JSON, or a manifest.json")
    p.add_argument("--out", default="out", help="output directory")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="override the config seed")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bloomsim",
        description="Simulator and estimate-verification suite for a stochastic "
        "aggregation-diffusion equation on an interval.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("simulate", help="one trajectory with recorded diagnostics"))
    p = sub.add_parser("picard", help="frozen-noise fixed-point iteration")
    _add_common(p)
    p.add_argument("--sweeps", type=int, default=8, help="maximum sweeps")
    p.add_argument("--tol", type=float, default=1e-12, help="stop when the squared gap drops below this")
    p = sub.add_parser("verify-estimates", help="run every estimate suite, one report per inequality")
    _add_common(p)
    p.add_argument("--trials", type=int, default=1, help="trial-count multiplier")
    p = sub.add_parser("converge-n", help="common-noise coupling study across n")
    _add_common(p)
    p.add_argument("--n-list", default="1,4,16,64", help="comma-separated increasing indices")
    p = sub.add_parser("ensemble", help="many streams, merged statistics")
    _add_common(p)
    p.add_argument("--count", type=int, default=8, help="number of noise streams")
    p.add_argument("--workers", type=int, default=1, help="concurrent workers")
    p = sub.add_parser("plot-data", help="re-emit a stored output as two-column text")
    p.add_argument("--input", required=True, help="snapshot or timeseries file")
    p.add_argument("--out", default=None, help="output directory (default: stdout)")
    p.add_argument("--column", default="mass", help="timeseries column to emit")

    args = parser.parse_args(argv)
    try:
        return run(args.command, args)
    except ConfigError as e:
        for problem in e.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except BlowupError as e:
        print(f"blow-up: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
