"""Command-line front end: reproducible batch runs with persisted manifests.

Subcommands: sample, integrate, reference, polytope, knotscan, report, replay.
Every run writes a JSON manifest echoing the full configuration; re-running
with the same version and seed reproduces the data files bit-identically.
Numbers in delimited output use 17 significant digits so values round-trip.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_forms as cf
from .geometry import Polygon, as_edge_lengths, write_polygons, z_width, closure_defect
from .mcmc_stats import ips_variance
from .polytopes import (confined_fan_polytope, fan_polytope, half_space_polytope,
                        hyperbox, slab_polytope, rejection_volume_estimate,
                        centroid_estimate)
from .samplers import (ChainRunner, McmcConfig, make_observable, make_rng,
                       run_arm_chain, sample_arms_direct)
from .knots import polygon_determinant

FMT = "%.17g"


def _fmt(x) -> str:
    return FMT % float(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) if not isinstance(x, str) else x for x in row) + "\n")


def _write_table(path: Path, header: list[str], rows, fmt: str) -> Path:
    """Delimited table as CSV, or as a column/row JSON document under --format json."""
    if fmt == "json":
        path = path.with_suffix(".json")
        payload = {
            "columns": header,
            "rows": [[x if isinstance(x, str) else float(x) for x in row] for row in rows],
        }
        _write_json(path, payload)
        return path
    _write_csv(path, header, rows)
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class Manifest:
    """Config echo plus counters and timing; one per command invocation."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.payload = {
            "command": command,
            "version": f"polywalk {__version__}",
            "config": {k: v for k, v in sorted(vars(args).items())
                       if k not in ("func",) and not k.startswith("_")},
            "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": [],
            "counters": {},
        }
        self._t0 = time.perf_counter()

    def add_output(self, path: Path) -> None:
        self.payload["outputs"].append(str(path))

    def finish(self, out_dir: Path, filename: str = "manifest.json", **extra) -> Path:
        self.payload.update(extra)
        self.payload["finished_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.payload["wall_time_s"] = time.perf_counter() - self._t0
        path = out_dir / filename
        _write_json(path, self.payload)
        return path


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _edge_lengths_from(args) -> np.ndarray | float:
    if getattr(args, "edge_lengths", None):
        values = []
        for line in Path(args.edge_lengths).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                values.extend(float(tok) for tok in line.split())
        return np.asarray(values)
    return 1.0


def _mcmc_config(args) -> McmcConfig:
    return McmcConfig(
        n=args.n,
        steps=args.steps,
        edge_lengths=_edge_lengths_from(args),
        triangulation=args.triangulation,
        triangulation_seed=args.triangulation_seed,
        beta=args.beta,
        delta=args.delta,
        hr_multiplicity=args.hr_multiplicity,
        burnin=args.burnin,
        seed=args.seed,
        confinement_radius=args.confine_radius,
    )


def _maybe_figures(args, manifest: Manifest, out_dir: Path) -> None:
    if getattr(args, "figures", False):
        from . import report
        for png in report.render_run_dir(out_dir):
            manifest.add_output(png)


# ---------------------------------------------------------------- sample

def cmd_sample(args) -> int:
    out_dir = _out_dir(args)
    manifest = Manifest("sample", args)
    if args.walk == "closed":
        return _sample_closed(args, out_dir, manifest)
    return _sample_arm(args, out_dir, manifest)


def _sample_closed(args, out_dir, manifest) -> int:
    config = _mcmc_config(args)
    runner = ChainRunner(config)
    radius = args.confine_radius
    m = len(runner.chart.triangulation.chords)
    coord_rows = []
    polygons = []
    for i in range(config.resolved_burnin()):
        runner.step()
    for i in range(config.steps):
        runner.step()
        state = runner.state
        poly = runner.polygon()
        if radius is not None:
            reach = np.linalg.norm(poly.vertices - poly.vertices[0], axis=1).max()
            if reach > radius + 1e-9:
                raise AssertionError(
                    f"confinement violated at step {i}: reach {reach} > {radius}"
                )
        coord_rows.append([i, *state.d, *state.theta])
        if args.emit in ("polygons", "both"):
            polygons.append(poly)
    coords_path = _write_table(
        out_dir / "coords.csv",
        ["step"] + [f"d{i+1}" for i in range(m)] + [f"theta{i+1}" for i in range(m)],
        coord_rows, args.format)
    manifest.add_output(coords_path)
    if polygons:
        poly_path = out_dir / "polygons.txt"
        write_polygons(poly_path, polygons)
        manifest.add_output(poly_path)
    _maybe_figures(args, manifest, out_dir)
    manifest.finish(out_dir, counters=runner.counters)
    return 0


def _sample_arm(args, out_dir, manifest) -> int:
    n = args.n
    r = as_edge_lengths(_edge_lengths_from(args), n=n)
    rng = make_rng(args.seed)
    rows = []
    polygons = []
    if args.walk == "arm":
        vertices = sample_arms_direct(r, args.steps, rng)
        for i in range(args.steps):
            p = Polygon(vertices[i], closed=False)
            rows.append([i, z_width(p), closure_defect(p)])
            if args.emit in ("polygons", "both"):
                polygons.append(p)
        counters = {"direct_samples": args.steps}
    else:
        if args.walk == "slab-arm" and args.slab_height is None:
            raise SystemExit("slab-arm sampling needs --slab-height")
        P = slab_polytope(n, args.slab_height) if args.walk == "slab-arm" \
            else half_space_polytope(n)
        collected = []

        def grab(p, _state):
            collected.append(p)
            return 0.0

        result = run_arm_chain(P, r, args.steps, rng, {"_": grab},
                               burnin=args.burnin or 0,
                               hr_multiplicity=args.hr_multiplicity)
        for i, p in enumerate(collected):
            rows.append([i, z_width(p), closure_defect(p)])
            if args.emit in ("polygons", "both"):
                polygons.append(p)
        counters = result.counters
    series_path = _write_table(out_dir / "arms.csv", ["step", "zwidth", "end_to_end"],
                               rows, args.format)
    manifest.add_output(series_path)
    if polygons:
        poly_path = out_dir / "polygons.txt"
        write_polygons(poly_path, polygons)
        manifest.add_output(poly_path)
    _maybe_figures(args, manifest, out_dir)
    manifest.finish(out_dir, counters=counters)
    return 0


# ---------------------------------------------------------------- integrate

def _run_one_chain(payload):
    """Worker for --chains: one seeded chain, returning series and counters."""
    config_kwargs, observable_names = payload
    config = McmcConfig(**config_kwargs)
    observables = {name: make_observable(name, config.n) for name in observable_names}
    runner = ChainRunner(config)
    result = runner.run(observables)
    return result.series, result.counters


def cmd_integrate(args) -> int:
    out_dir = _out_dir(args)
    manifest = Manifest("integrate", args)
    names = []
    for chunk in args.observable:
        names.extend(s for s in chunk.split(",") if s)
    if not names:
        raise SystemExit("integrate needs at least one --observable")
    for name in names:
        make_observable(name, args.n)  # validate early; raises listing choices
    config = _mcmc_config(args)
    config.validate()

    seeds = [args.seed] if args.chains == 1 else \
        [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(args.seed).spawn(args.chains)]
    payloads = []
    for seed in seeds:
        kwargs = dict(
            n=config.n, steps=config.steps, edge_lengths=config.edge_lengths,
            triangulation=config.triangulation, triangulation_seed=config.triangulation_seed,
            beta=config.beta, delta=config.delta, hr_multiplicity=config.hr_multiplicity,
            burnin=config.burnin, seed=seed, confinement_radius=config.confinement_radius,
        )
        payloads.append((kwargs, names))

    if args.chains == 1:
        outcomes = [_run_one_chain(payloads[0])]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.chains) as pool:
            outcomes = list(pool.map(_run_one_chain, payloads))

    report = {"observables": {}, "chains": args.chains}
    merged_counters: dict[str, int] = {}
    for chain_idx, (series, counters) in enumerate(outcomes):
        for key, val in counters.items():
            merged_counters[key] = merged_counters.get(key, 0) + val
        series_path = out_dir / ("series.csv" if args.chains == 1
                                 else f"series_chain{chain_idx}.csv")
        steps_col = np.arange(config.steps)
        series_path = _write_table(series_path, ["step"] + names,
                                   np.column_stack([steps_col] + [series[name] for name in names]),
                                   args.format)
        manifest.add_output(series_path)

    for name in names:
        per_chain = [ips_variance(series[name]) for series, _ in outcomes]
        entry = {"per_chain": [s.to_json_dict() for s in per_chain]}
        if args.chains == 1:
            entry.update(per_chain[0].to_json_dict())
        else:
            mean = float(np.mean([s.mean for s in per_chain]))
            half = float(np.sqrt(np.sum([s.half_width ** 2 for s in per_chain]))
                         / args.chains)
            entry.update({
                "mean": mean,
                "half_width_95": half,
                "m": sum(s.m for s in per_chain),
                "clamped": any(s.clamped for s in per_chain),
            })
        report["observables"][name] = entry

    report_path = out_dir / "integrate.json"
    _write_json(report_path, report)
    manifest.add_output(report_path)
    _maybe_figures(args, manifest, out_dir)
    manifest.finish(out_dir, counters=merged_counters, per_observable={
        name: {k: v for k, v in report["observables"][name].items() if k != "per_chain"}
        for name in names})
    print(json.dumps(report["observables"], indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------- reference

def cmd_reference(args) -> int:
    out_dir = _out_dir(args)
    manifest = Manifest("reference", args)
    table = args.table
    if table == "curvature":
        ns = _parse_ns(args.ns, default=list(range(3, 21)) + [32, 64])
        rows = [[n, cf.expected_total_curvature(n), cf.grosberg_asymptotic(n)] for n in ns]
        path = out_dir / "curvature.csv"
        _write_csv(path, ["n", "expected_total_curvature", "asymptotic"], rows)
    elif table == "halfspace":
        ns = _parse_ns(args.ns, default=list(range(1, 9)))
        rows = [[n, str(cf.half_space_volume(n)), float(cf.half_space_volume(n))] for n in ns]
        path = out_dir / "halfspace_volumes.csv"
        _write_csv(path, ["n", "volume_exact", "volume"], rows)
    elif table == "chord-moments":
        ns = _parse_ns(args.ns, default=list(range(4, 11)))
        rows = []
        for n in ns:
            for k in range(2, n - 1):
                val = cf.expected_squared_chord(k, n)
                rows.append([n, k, str(val), float(val)])
        path = out_dir / "chord_second_moments.csv"
        _write_csv(path, ["n", "k", "second_moment_exact", "second_moment"], rows)
    elif table == "pdf":
        n = args.pdf_n
        grid = np.linspace(0.0, n, args.grid_points)
        rows = [[l, cf.end_to_end_pdf(l, n),
                 cf.ftc_pdf(l, n) if 0 < l < n else (cf.c_n(n) if l == 0 and n >= 4 else 0.0)]
                for l in grid]
        path = out_dir / f"pdf_n{n}.csv"
        _write_csv(path, ["ell", "end_to_end_pdf", "failure_to_close_pdf"], rows)
    elif table == "volumes":
        ns = _parse_ns(args.ns, default=list(range(4, 13)))
        rows = [[n, cf.equilateral_volume(n)] for n in ns]
        path = out_dir / "polygon_space_volumes.csv"
        _write_csv(path, ["n", "volume"], rows)
    else:
        raise SystemExit(f"unknown table {table!r}")
    manifest.add_output(path)
    _maybe_figures(args, manifest, out_dir)
    manifest.finish(out_dir)
    print(path)
    return 0


def _parse_ns(spec: str | None, default: list[int]) -> list[int]:
    if not spec:
        return default
    out = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


# ---------------------------------------------------------------- polytope

def _build_body(args):
    n = args.n
    if args.body == "fan":
        return fan_polytope(n, _edge_lengths_from(args) if getattr(args, "edge_lengths", None) else 1.0)
    if args.body == "confined-fan":
        if args.confine_radius is None:
            raise SystemExit("confined-fan needs --confine-radius")
        return confined_fan_polytope(n, 1.0, args.confine_radius)
    if args.body == "slab":
        if args.slab_height is None:
            raise SystemExit("slab needs --slab-height")
        return slab_polytope(n, args.slab_height)
    if args.body == "halfspace":
        return half_space_polytope(n)
    if args.body == "hyperbox":
        r = _edge_lengths_from(args)
        return hyperbox(as_edge_lengths(r, n=n))
    raise SystemExit(f"unknown body {args.body!r}")


def cmd_polytope(args) -> int:
    out_dir = _out_dir(args)
    manifest = Manifest("polytope", args)
    P = _build_body(args)
    rng = make_rng(args.seed)
    volume, vol_stderr = rejection_volume_estimate(P, rng, args.samples)
    centroid, cen_stderr = centroid_estimate(P, make_rng(args.seed + 1),
                                             max(args.samples // 4, 1000),
                                             method=args.method)
    payload = {
        "body": args.body,
        "rows": P.rows,
        "dim": P.dim,
        "volume": volume,
        "volume_stderr": vol_stderr,
        "centroid": centroid.tolist(),
        "centroid_stderr": cen_stderr.tolist(),
        "samples": args.samples,
        "seed": args.seed,
    }
    if args.as_probability:
        # Confinement probability of the corresponding arm model: volume / 2^n.
        payload["probability"] = volume / 2.0 ** args.n
        payload["probability_stderr"] = vol_stderr / 2.0 ** args.n
    path = out_dir / "polytope.json"
    _write_json(path, payload)
    manifest.add_output(path)
    manifest.finish(out_dir)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------- knotscan

def cmd_knotscan(args) -> int:
    out_dir = _out_dir(args)
    manifest = Manifest("knotscan", args)
    config = _mcmc_config(args)
    config.validate()
    runner = ChainRunner(config)
    rng = make_rng(args.seed + 10**9)  # separate stream for projection directions
    rows = []
    indicators = np.empty(config.steps)
    for _ in range(config.resolved_burnin()):
        runner.step()
    for i in range(config.steps):
        runner.step()
        det = polygon_determinant(runner.polygon(), rng)
        knotted = det != 1
        indicators[i] = float(knotted)
        rows.append([i, det, int(knotted)])
    scan_path = _write_table(out_dir / "knotscan.csv",
                             ["sample_index", "determinant", "is_knotted"],
                             rows, args.format)
    manifest.add_output(scan_path)
    summary = ips_variance(indicators).to_json_dict()
    summary["frequency"] = summary.pop("mean")
    summary["knots_found"] = int(indicators.sum())
    summary_path = out_dir / "knotscan_summary.json"
    _write_json(summary_path, summary)
    manifest.add_output(summary_path)
    _maybe_figures(args, manifest, out_dir)
    manifest.finish(out_dir, counters=runner.counters)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------- report / replay

def cmd_report(args) -> int:
    from . import report
    manifest = Manifest("report", args)
    written = report.render_run_dir(args.run_dir)
    for path in written:
        manifest.add_output(path)
        print(path)
    manifest.finish(Path(args.run_dir), filename="report_manifest.json")
    return 0


def cmd_replay(args) -> int:
    payload = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    command = payload["command"]
    config = payload["config"]
    parser = build_parser()
    sub_actions = next(a for a in parser._subparsers._group_actions)
    target = sub_actions.choices[command]
    known = {}
    for action in target._actions:
        if action.option_strings:
            known[action.dest] = action.option_strings[-1]
    argv = [command]
    for key, val in config.items():
        if key not in known or val is None or val is False or key == "output_dir":
            continue
        flag = known[key]
        if val is True:
            argv.append(flag)
        elif isinstance(val, list):
            for item in val:
                argv.extend([flag, str(item)])
        else:
            argv.extend([flag, str(val)])
    argv.extend(["--output-dir", args.output_dir])
    return main(argv)


# ---------------------------------------------------------------- parser

def _add_common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="number of edges")
    p.add_argument("--edge-lengths", help="file of edge lengths (default: equilateral)")
    p.add_argument("--triangulation", default="fan",
                   choices=["fan", "spiral", "teeth", "random"])
    p.add_argument("--triangulation-seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=None,
                   help="permutation-move probability (default: 0.9 equilateral unconfined, else 0)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--burnin", type=int, default=None, help="default: 10*n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--confine-radius", type=float, default=None)
    p.add_argument("--hr-multiplicity", type=int, default=10)
    p.add_argument("--output-dir", default="runs/out")
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--figures", action="store_true", help="render figures from the CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polywalk",
        description="Sample closed, confined, and open fixed-edgelength random "
                    "walks via action-angle coordinates on moment polytopes.",
    )
    parser.add_argument("--version", action="version", version=f"polywalk {__version__}")
    parser.add_argument("--config", help="key=value file of flag defaults; flags win")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sample", help="emit sampled polygons and coordinates")
    _add_common_run_flags(p)
    p.add_argument("--walk", default="closed", choices=["closed", "arm", "slab-arm", "halfspace-arm"])
    p.add_argument("--slab-height", type=float, default=None)
    p.add_argument("--emit", default="both", choices=["coords", "polygons", "both"])
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("integrate", help="MCMC integration with IPS error bars")
    _add_common_run_flags(p)
    p.add_argument("--observable", action="append", default=[],
                   help="total_curvature | chord:k | squared_chord:k | zwidth | octant6")
    p.add_argument("--chains", type=int, default=1)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("reference", help="closed-form reference tables as CSV")
    p.add_argument("--table", required=True,
                   choices=["curvature", "halfspace", "chord-moments", "pdf", "volumes"])
    p.add_argument("--ns", help="n values, e.g. 3-20,32,64")
    p.add_argument("--pdf-n", type=int, default=6)
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--output-dir", default="runs/reference")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("polytope", help="Monte Carlo volume and centroid of a moment polytope")
    p.add_argument("--body", required=True,
                   choices=["fan", "confined-fan", "slab", "halfspace", "hyperbox"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--edge-lengths")
    p.add_argument("--slab-height", type=float, default=None)
    p.add_argument("--confine-radius", type=float, default=None)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--method", default="rejection", choices=["rejection", "hitandrun"])
    p.add_argument("--as-probability", action="store_true",
                   help="also report volume / 2^n, the arm confinement probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default="runs/polytope")
    p.set_defaults(func=cmd_polytope)

    p = sub.add_parser("knotscan", help="stream knot determinants over sampled polygons")
    _add_common_run_flags(p)
    p.set_defaults(func=cmd_knotscan, walk="closed")

    p = sub.add_parser("report", help="render figures from a run directory's CSVs")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-execute a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold key=value defaults from --config into the subcommand parser."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = Path(argv[idx + 1])
    defaults = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        for cast in (int, float):
            try:
                val = cast(val)
                break
            except ValueError:
                continue
        defaults[key] = val
    for action in parser._subparsers._group_actions:
        for sub_parser in action.choices.values():
            known = {a.dest for a in sub_parser._actions}
            sub_parser.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return argv[:idx] + argv[idx + 2:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
