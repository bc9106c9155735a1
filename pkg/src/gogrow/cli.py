"""Command-line harness: runs experiments and writes CSV/JSON outputs.

Subcommands
-----------
simulate      one run; writes snapshots.csv and xi.csv
speed-sweep   replicated (K, chi) grid; writes speed.csv
histogram     moving-frame histogram of a final state; histogram.csv
lineage       ancestral lineages of a selection window; lineage.csv, ancestry.csv
pde-front     macroscopic front tracking; pde_xbar.csv, pde_profile.csv
fp-evolve     lineage Fokker-Planck evolution; fp_profile.csv
verify        acceptance checks; verify_report.json

Every command writes manifest.json describing inputs, derived seeds and
output files (row counts and SHA-256 digests); reruns with the same spec
reproduce every output byte for byte. Config files are INI-style with
sections matching the option groups; command-line flags override file
keys. Replicates run in parallel up to --jobs (default from GOGROW_JOBS).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__, analytics, verify as verify_mod
from .ancestral_fp import DriftProfile, fp_evolve
from .config import SimConfig, derive_seed
from .engine import run
from .grid import GridField
from .limit_pde import PdeConfig, evolve_front
from .genealogy import CoverageError


# -- CSV / manifest plumbing -----------------------------------------------------


def _fmt(value) -> str:
    """Full round-trip formatting: repr of a float is the shortest string
    that parses back to the same value."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class OutputWriter:
    """Serialises CSV output and collects the manifest."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: List[dict] = []
        self.errors: List[dict] = []

    def write_csv(self, name: str, header: Sequence[str], rows) -> Path:
        # RFC-4180 quoting: particle labels contain commas
        path = self.out_dir / name
        count = 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
                count += 1
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append({"name": name, "rows": count, "sha256": digest})
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        body = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        path.write_text(body)
        self.files.append({"name": name, "rows": None,
                           "sha256": hashlib.sha256(body.encode()).hexdigest()})
        return path

    def record_error(self, run_id: str, message: str) -> None:
        self.errors.append({"run_id": run_id, "error": message})

    def manifest(self, spec: dict, seeds: Dict[str, int], wall: float) -> dict:
        return {
            "spec": spec,
            "derived_seeds": seeds,
            "version": __version__,
            "wall_time_s": round(wall, 3),
            "files": self.files,
            "errors": self.errors,
            "partial": bool(self.errors),
        }


def _write_manifest(writer: OutputWriter, spec: dict, seeds: Dict[str, int], t0: float):
    manifest = writer.manifest(spec, seeds, time.perf_counter() - t0)
    path = writer.out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# -- config file / argument handling ------------------------------------------------


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise SystemExit(f"config file not found: {path}")
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[key.replace("-", "_")] = value
    return flat


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """File keys fill in only where the CLI left None."""
    merged = dict(defaults)
    for key, value in vars(args).items():
        if value is not None:
            merged[key] = value
    return merged


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI config file; flags override its keys")
    p.add_argument("--out", help="output directory", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel replicates (default: GOGROW_JOBS or 1)")


def _add_sim(p: argparse.ArgumentParser):
    p.add_argument("--chi", type=float, default=None)
    p.add_argument("--k", type=int, default=None, dest="k")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None, dest="t_end")
    p.add_argument("--snapshot-dt", type=float, default=None, dest="snapshot_dt")


def _get(merged: dict, key: str, cast, fallback):
    value = merged.get(key)
    if value is None:
        return fallback
    return cast(value)


def _jobs_of(merged: dict) -> int:
    env = os.environ.get("GOGROW_JOBS")
    return int(_get(merged, "jobs", int, env if env else 1))


def _float_list(text: str) -> List[float]:
    return [float(v) for v in str(text).split(",") if v != ""]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in str(text).split(",") if v != ""]


# -- subcommands ---------------------------------------------------------------------


def _sim_config(merged: dict, seed: int, record_particles=True) -> SimConfig:
    return SimConfig(
        chi=_get(merged, "chi", float, 2.0),
        K=_get(merged, "k", int, 64),
        dt=_get(merged, "dt", float, 0.01),
        t_end=_get(merged, "t_end", float, 10.0),
        seed=seed,
        snapshot_dt=_get(merged, "snapshot_dt", float, 1.0),
        record_particles=record_particles,
    )


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    base_seed = _get(merged, "seed", int, 0)
    writer = OutputWriter(merged.get("out") or "out")
    cfg = _sim_config(merged, base_seed)
    rec = run(cfg)
    store = rec.genealogy

    def snapshot_rows():
        for snap in store.snapshots:
            for node, x in zip(snap.node_ids, snap.positions):
                yield ("run0", snap.time, store.label_of(int(node)), float(x))

    writer.write_csv("snapshots.csv", ["run_id", "t", "label", "x"], snapshot_rows())
    writer.write_csv("xi.csv", ["run_id", "t", "N", "xi"],
                     (("run0", t, int(n), x) for t, n, x in zip(rec.times, rec.counts, rec.xi)))
    _write_manifest(writer, {"command": "simulate", **_spec_echo(merged)},
                    {"run0": base_seed}, t0)
    return 0


def _spec_echo(merged: dict) -> dict:
    return {k: v for k, v in sorted(merged.items())
            if k not in ("config", "fn") and v is not None and not callable(v)}


def _speed_worker(payload):
    kwargs, t1, t2 = payload
    rec = run(SimConfig(**kwargs))
    speed = analytics.speed_estimator(rec.times, rec.xi, t1, t2)
    i1 = int(np.argmin(np.abs(rec.times - t1)))
    i2 = int(np.argmin(np.abs(rec.times - t2)))
    return float(rec.xi[i1]), float(rec.xi[i2]), speed


def cmd_speed_sweep(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    base_seed = _get(merged, "seed", int, 0)
    writer = OutputWriter(merged.get("out") or "out")
    k_list = _int_list(merged.get("k_list") or _get(merged, "k", int, 64))
    chi_list = _float_list(merged.get("chi_list") or _get(merged, "chi", float, 2.0))
    replicates = _get(merged, "replicates", int, 1)
    t1 = _get(merged, "t1", float, 100.0)
    t2 = _get(merged, "t2", float, 200.0)
    jobs = _jobs_of(merged)

    tasks = []
    seeds: Dict[str, int] = {}
    for ki, K in enumerate(k_list):
        for ci, chi in enumerate(chi_list):
            for r in range(replicates):
                seed = derive_seed(base_seed, ki, ci, r)
                run_id = f"K{K}_chi{chi}_r{r}"
                seeds[run_id] = seed
                kwargs = dict(chi=chi, K=K, dt=_get(merged, "dt", float, 0.01),
                              t_end=_get(merged, "t_end", float, t2),
                              seed=seed, snapshot_dt=_get(merged, "snapshot_dt", float, 1.0),
                              record_particles=False)
                tasks.append((run_id, K, chi, seed, (kwargs, t1, t2)))

    rows = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(meta, pool.submit(_speed_worker, payload))
                       for *meta, payload in tasks]
            results = []
            for meta, fut in futures:
                try:
                    results.append((meta, fut.result(), None))
                except Exception as exc:  # surfaced per run
                    results.append((meta, None, str(exc)))
    else:
        results = []
        for *meta, payload in tasks:
            try:
                results.append((meta, _speed_worker(payload), None))
            except Exception as exc:
                results.append((meta, None, str(exc)))

    for (run_id, K, chi, seed), result, error in results:
        if error is not None:
            writer.record_error(run_id, error)
            continue
        xi1, xi2, speed = result
        rows.append((run_id, K, chi, seed, xi1, xi2, speed))
    writer.write_csv("speed.csv",
                     ["run_id", "K", "chi", "seed", "xi_t1", "xi_t2", "speed"], rows)
    _write_manifest(writer, {"command": "speed-sweep", **_spec_echo(merged)}, seeds, t0)
    if writer.errors:
        print(f"speed-sweep: {len(writer.errors)} run(s) failed; see manifest.json",
              file=sys.stderr)
        return 1
    return 0


def cmd_histogram(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    base_seed = _get(merged, "seed", int, 0)
    writer = OutputWriter(merged.get("out") or "out")
    cfg = _sim_config(merged, base_seed)
    bin_width = _get(merged, "bin_width", float, 0.1)
    z_min = _get(merged, "z_min", float, -5.0)
    z_max = _get(merged, "z_max", float, 3.0)
    rec = run(cfg)
    snap = rec.genealogy.snapshots[-1]
    edges, counts, overlay = analytics.histogram(
        snap.positions, bin_width, (z_min, z_max), center=snap.xi, K=cfg.K, chi=cfg.chi)
    writer.write_csv("histogram.csv", ["bin_left", "count"],
                     ((float(e), int(c)) for e, c in zip(edges[:-1], counts)))
    _write_manifest(writer, {"command": "histogram", **_spec_echo(merged),
                             "overlay_constant": overlay, "xi_T": snap.xi},
                    {"run0": base_seed}, t0)
    return 0


def cmd_lineage(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    base_seed = _get(merged, "seed", int, 0)
    writer = OutputWriter(merged.get("out") or "out")
    cfg = _sim_config(merged, base_seed)
    window = (_get(merged, "window_lo", float, -20.0), _get(merged, "window_hi", float, 10.0))
    s_grid = _float_list(merged.get("s_grid") or "") or [_get(merged, "s", float, 50.0)]
    t_query = _get(merged, "t", float, cfg.t_end)
    rec = run(cfg)
    store = rec.genealogy
    lineage_rows = []
    ancestry_rows = []
    for s in s_grid:
        try:
            res = store.ancestral_distribution(window, t=t_query, s=s)
        except CoverageError as exc:
            writer.record_error(f"s={s}", str(exc))
            continue
        ancestry_rows.append((s, res.distinct_ancestors, res.selection_size))
        snap_a = store.snapshot_nearest(t_query - s)
        for node, y_hat in zip(res.ancestor_nodes, res.y_hat):
            lineage_rows.append((store.label_of(int(node)), s,
                                 float(y_hat + snap_a.xi), float(y_hat)))
    writer.write_csv("lineage.csv", ["particle", "s", "y", "y_hat"], lineage_rows)
    writer.write_csv("ancestry.csv", ["s", "distinct_ancestors", "selection_size"],
                     ancestry_rows)
    _write_manifest(writer, {"command": "lineage", **_spec_echo(merged)},
                    {"run0": base_seed}, t0)
    return 1 if writer.errors else 0


def cmd_pde_front(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    writer = OutputWriter(merged.get("out") or "out")
    chi = _get(merged, "chi", float, 2.0)
    dx = _get(merged, "dx", float, 0.02)
    t_end = _get(merged, "t_end", float, 10.0)
    x_min = _get(merged, "x_min", float, -25.0)
    x_max = _get(merged, "x_max", float, 45.0)
    init = merged.get("init") or "profile"
    cfg = PdeConfig.auto_dt(chi=chi, dx=dx, x_min=x_min, x_max=x_max, window_shift=True)
    if init == "profile":
        u0 = cfg.grid(lambda x: analytics.wave_profile(chi, x))
    elif init == "block":
        u0 = cfg.grid(lambda x: np.where((x >= -2.0) & (x <= 0.0), 1.0, 0.0))
    else:
        raise SystemExit(f"unknown init {init!r} (profile|block)")
    res = evolve_front(u0, cfg, t_end=t_end, record_dt=_get(merged, "record_dt", float, 0.5))
    writer.write_csv("pde_xbar.csv", ["t", "xbar", "mass"],
                     zip(res.times, res.xbar, res.mass))
    u = res.u_final
    writer.write_csv("pde_profile.csv", ["t", "x", "u"],
                     ((res.times[-1], float(x), float(v)) for x, v in zip(u.x(), u.values)))
    _write_manifest(writer, {"command": "pde-front", **_spec_echo(merged)}, {}, t0)
    return 0


def cmd_fp_evolve(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    writer = OutputWriter(merged.get("out") or "out")
    chi = _get(merged, "chi", float, 2.0)
    dz = _get(merged, "dz", float, 0.02)
    s_end = _get(merged, "s_end", float, 100.0)
    z_min = _get(merged, "z_min", float, -40.0)
    z_max = _get(merged, "z_max", float, 120.0)
    n = int(round((z_max - z_min) / dz)) + 1
    z = z_min + dz * np.arange(n)
    vals = analytics.wave_profile(chi, z) * ((z >= -20.0) & (z <= 10.0))
    v0 = GridField(z_min, dz, vals / (vals.sum() * dz))
    marks = _float_list(merged.get("record_s") or "") or list(np.linspace(0, s_end, 6))
    records = fp_evolve(v0, DriftProfile(chi), s_end=s_end, record_times=marks)
    rows = []
    for recd in records:
        for zi, vi in zip(recd.field.x(), recd.field.values):
            rows.append((recd.s, float(zi), float(vi)))
    writer.write_csv("fp_profile.csv", ["s", "z", "v"], rows)
    _write_manifest(writer, {"command": "fp-evolve", **_spec_echo(merged),
                             "means": [r.mean for r in records],
                             "modes": [r.mode for r in records]}, {}, t0)
    return 0


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    merged = _merged(args, _load_config_file(args.config))
    writer = OutputWriter(merged.get("out") or "out")
    jobs = _jobs_of(merged)
    quick = bool(merged.get("quick"))
    results = verify_mod.run_all(jobs=jobs, quick=quick)
    payload = {
        "quick_scale": quick,
        "all_passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
        "reference": verify_mod.reference_table(),
    }
    writer.write_json("verify_report.json", payload)
    _write_manifest(writer, {"command": "verify", **_spec_echo(merged)}, {}, t0)
    return 0 if payload["all_passed"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gogrow",
        description="Go-or-Grow particle system: simulation, limit PDE and lineage tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="single run; snapshots.csv, xi.csv")
    _add_common(p); _add_sim(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("speed-sweep", help="replicated speed estimates; speed.csv")
    _add_common(p); _add_sim(p)
    p.add_argument("--k-list", dest="k_list", default=None, help="comma-separated K values")
    p.add_argument("--chi-list", dest="chi_list", default=None, help="comma-separated chi values")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--t1", type=float, default=None)
    p.add_argument("--t2", type=float, default=None)
    p.set_defaults(fn=cmd_speed_sweep)

    p = sub.add_parser("histogram", help="moving-frame histogram; histogram.csv")
    _add_common(p); _add_sim(p)
    p.add_argument("--bin-width", dest="bin_width", type=float, default=None)
    p.add_argument("--z-min", dest="z_min", type=float, default=None)
    p.add_argument("--z-max", dest="z_max", type=float, default=None)
    p.set_defaults(fn=cmd_histogram)

    p = sub.add_parser("lineage", help="ancestral lineages; lineage.csv, ancestry.csv")
    _add_common(p); _add_sim(p)
    p.add_argument("--s", type=float, default=None, help="lookback duration")
    p.add_argument("--s-grid", dest="s_grid", default=None, help="comma-separated lookbacks")
    p.add_argument("--t", type=float, default=None, help="query time (default t_end)")
    p.add_argument("--window-lo", dest="window_lo", type=float, default=None)
    p.add_argument("--window-hi", dest="window_hi", type=float, default=None)
    p.set_defaults(fn=cmd_lineage)

    p = sub.add_parser("pde-front", help="macroscopic front; pde_xbar.csv, pde_profile.csv")
    _add_common(p)
    p.add_argument("--chi", type=float, default=None)
    p.add_argument("--dx", type=float, default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--x-min", dest="x_min", type=float, default=None)
    p.add_argument("--x-max", dest="x_max", type=float, default=None)
    p.add_argument("--init", default=None, help="profile|block")
    p.add_argument("--record-dt", dest="record_dt", type=float, default=None)
    p.set_defaults(fn=cmd_pde_front)

    p = sub.add_parser("fp-evolve", help="lineage Fokker-Planck; fp_profile.csv")
    _add_common(p)
    p.add_argument("--chi", type=float, default=None)
    p.add_argument("--dz", type=float, default=None)
    p.add_argument("--s-end", dest="s_end", type=float, default=None)
    p.add_argument("--z-min", dest="z_min", type=float, default=None)
    p.add_argument("--z-max", dest="z_max", type=float, default=None)
    p.add_argument("--record-s", dest="record_s", default=None,
                   help="comma-separated record times")
    p.set_defaults(fn=cmd_fp_evolve)

    p = sub.add_parser("verify", help="acceptance checks; verify_report.json")
    _add_common(p)
    p.add_argument("--quick", action="store_true", default=None,
                   help="reduced-scale smoke run")
    p.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
