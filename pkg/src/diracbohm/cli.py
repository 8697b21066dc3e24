"""Command-line front end: simulate, ensemble, sigma, perturb, validate.

Exit codes: 0 success, 1 usage error, 2 config error, 3 data/physics
failure (node at the initial condition, degenerate sampling density, too
many excluded trajectories), 4 internal failure (integrator breakdown,
singular linear solves, failed self-checks, unexpected exceptions).

Every successful run writes one summary.json into the output directory.
All numeric output is canonical (sorted keys, 17 significant digits), so
repeated runs of the same scenario produce byte-identical files; the only
nondeterministic datum, wall-clock information, is confined to the single
"timestamp" string field of the summary.
"""
from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import (
    ScenarioConfig,
    build_model,
    canonical_json,
    load_config,
    scenario_hash,
)
from .dynamics import events_payload, integrate, write_trajectory_csv
from .ensemble import HistogramSpec, SamplingRegion, run_ensemble
from .errors import (
    ConfigError,
    DegenerateDensityError,
    DiracBohmError,
    NearNodeError,
    TooManyLostError,
)
from .transversality import (
    DEGENERATE_CELL_FRACTION,
    DEGENERATE_TOL,
    MARGIN_TOL,
    NEWTON_TOL,
    CompactBox,
    SigmaPoint,
    perturb_and_compare,
    transversality_report,
)
from .validate import run_checks, format_results

_MAX_POINTS_IN_JSON = 1000


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub: argparse.ArgumentParser, config_required: bool) -> None:
    if config_required:
        sub.add_argument("--config", required=True, help="scenario JSON file")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument(
        "--seed", type=int, default=None, help="override run seeds from the config"
    )
    sub.add_argument(
        "--threads", type=int, default=None, help="kernel threads (compiled backend)"
    )
    sub.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="diracbohm",
        description="Bohmian trajectories and diagnostics for the free Dirac equation",
    )
    subs = parser.add_subparsers(dest="command")
    _add_common(
        subs.add_parser("simulate", help="integrate trajectories", add_help=True),
        config_required=True,
    )
    _add_common(
        subs.add_parser("ensemble", help="sample, transport, and compare", add_help=True),
        config_required=True,
    )
    _add_common(
        subs.add_parser("sigma", help="locate and classify the speed-c set"),
        config_required=True,
    )
    _add_common(
        subs.add_parser("perturb", help="perturbation statistics for the speed-c set"),
        config_required=True,
    )
    _add_common(subs.add_parser("validate", help="run self-checks"), config_required=False)
    return parser


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _write_json(path: Path, payload) -> None:
    path.write_text(canonical_json(payload))


def _require(cfg: ScenarioConfig, name: str) -> dict:
    section = getattr(cfg, name)
    if section is None:
        raise ConfigError(f"config has no '{name}' section, required by this command")
    return section


def _build_box(b: dict) -> CompactBox:
    return CompactBox(
        t_span=tuple(b["t_span"]),
        lo=tuple(b["lo"]),
        hi=tuple(b["hi"]),
        resolution=tuple(b.get("resolution", (17, 17, 17, 17))),
    )


def _sigma_kwargs(sec: dict) -> dict:
    return {
        "newton_tol": sec.get("newton_tol", NEWTON_TOL),
        "margin_tol": sec.get("margin_tol", MARGIN_TOL),
        "degenerate_tol": sec.get("degenerate_tol", DEGENERATE_TOL),
        "degenerate_cell_fraction": sec.get(
            "degenerate_cell_fraction", DEGENERATE_CELL_FRACTION
        ),
        "max_iter": sec.get("max_iter", 25),
    }


def _point_payload(p: SigmaPoint) -> dict:
    return {
        "x": p.x.tolist(),
        "residual": p.residual,
        "s_dev": p.s_dev,
        "margin": p.margin,
        "sigma1": p.sigma1,
        "psi_norm_squared": p.psi_norm_squared,
    }


def _run_simulate(cfg: ScenarioConfig, model, args, outdir: Path) -> dict:
    sec = _require(cfg, "simulate")
    t1, t2 = sec["t_span"]
    entries = []
    for i, q0 in enumerate(sec["initial_positions"]):
        q0 = np.asarray(q0, dtype=np.float64)
        try:
            traj = integrate(model, q0, t1, t2, cfg.integrator)
        except NearNodeError as exc:
            raise NearNodeError(
                f"initial position {q0.tolist()} at t={t1}: {exc}"
            ) from exc
        csv_name = f"trajectory_{i:03d}.csv"
        write_trajectory_csv(traj, outdir / csv_name)
        events = events_payload(traj.events)
        _write_json(outdir / f"events_{i:03d}.json", events)
        entries.append(
            {
                "initial_position": q0.tolist(),
                "csv": csv_name,
                "events": events,
                "termination_reason": traj.termination_reason,
                "t_end_reached": traj.samples[-1].t,
                "max_speed": traj.max_speed,
                "n_samples": len(traj.samples),
            }
        )
        _say(args, f"trajectory {i}: {traj.termination_reason}, "
                   f"max speed {traj.max_speed:.6f} -> {csv_name}")
    return {"t_span": [t1, t2], "trajectories": entries}


def _run_ensemble(cfg: ScenarioConfig, model, args, outdir: Path) -> dict:
    sec = _require(cfg, "ensemble")
    rc = sec["region"]
    seed = args.seed if args.seed is not None else rc["seed"]
    region = SamplingRegion(tuple(rc["lo"]), tuple(rc["hi"]), rc["n"], seed)
    hc = sec["histogram"]
    hist = HistogramSpec(tuple(hc["lo"]), tuple(hc["hi"]), tuple(hc["bins"]))
    t1, t2 = sec["t_span"]
    report = run_ensemble(
        model,
        t1,
        t2,
        region,
        [float(e) for e in sec["epsilons"]],
        hist,
        step=sec.get("transport_step", 0.02),
        psi_floor=cfg.integrator.psi_floor,
        lost_tol=sec.get("lost_tol", 0.10),
    )
    payload = {
        "seed": seed,
        "t_span": [t1, t2],
        "n_requested": report.n_requested,
        "n_accepted": report.n_accepted,
        "near_node_count": report.near_node_count,
        "max_speed": report.max_speed,
        "speed_c_fractions": [
            {"epsilon": e, "fraction": f} for e, f in report.speed_c_fractions
        ],
        "equivariance": report.equivariance,
    }
    _write_json(outdir / "ensemble_report.json", payload)
    final = report.equivariance[-1]
    _say(args, f"ensemble: distance {final['distance']:.4f} at t={final['t']:g}, "
               f"max speed {report.max_speed:.6f} -> ensemble_report.json")
    return payload


def _run_sigma(cfg: ScenarioConfig, model, args, outdir: Path) -> dict:
    sec = _require(cfg, "sigma")
    box = _build_box(sec["box"])
    report = transversality_report(
        model, box, psi_floor=cfg.integrator.psi_floor, **_sigma_kwargs(sec)
    )
    points = [_point_payload(p) for p in report.points[:_MAX_POINTS_IN_JSON]]
    payload = {
        "verdict": report.verdict,
        "min_margin": report.min_margin,
        "n_points": len(report.points),
        "seed_count": report.seed_count,
        "converged_count": report.converged_count,
        "failed_count": report.failed_count,
        "degenerate_fraction": report.degenerate_fraction,
        "grid_size": report.grid_size,
        "points": points,
        "points_truncated": len(report.points) > _MAX_POINTS_IN_JSON,
    }
    _write_json(outdir / "sigma_report.json", payload)
    if sec.get("write_points_csv", False):
        lines = ["t,x,y,z,residual,s_dev,margin,sigma1"]
        for p in report.points:
            coords = ",".join(format(c, ".17g") for c in p.x)
            lines.append(
                f"{coords},{p.residual:.17g},{p.s_dev:.17g},"
                f"{p.margin:.17g},{p.sigma1:.17g}"
            )
        (outdir / "sigma_points.csv").write_text("\n".join(lines) + "\n")
    _say(args, f"sigma: {report.verdict}, {len(report.points)} points "
               f"-> sigma_report.json")
    return payload


def _run_perturb(cfg: ScenarioConfig, model, args, outdir: Path) -> dict:
    sec = _require(cfg, "perturb")
    box = _build_box(sec["box"])
    seed = args.seed if args.seed is not None else sec["seed"]
    stats = perturb_and_compare(
        model,
        amplitude=sec["amplitude"],
        trials=sec["trials"],
        box=box,
        seed=seed,
        wavenumber=sec.get("wavenumber", 1.0),
        psi_floor=cfg.integrator.psi_floor,
        **_sigma_kwargs(sec),
    )
    payload = {
        "seed": seed,
        "amplitude": stats.amplitude,
        "wavenumber": stats.wavenumber,
        "fraction_transverse": stats.fraction_transverse,
        "base_degenerate_fraction": stats.base_degenerate_fraction,
        "trials": [
            {
                "verdict": t.verdict,
                "min_margin": t.min_margin,
                "n_points": t.n_points,
                "degenerate_fraction": t.degenerate_fraction,
                "all_rank_two": t.all_rank_two,
            }
            for t in stats.trials
        ],
    }
    _write_json(outdir / "perturb_report.json", payload)
    _say(args, f"perturb: {stats.fraction_transverse:.0%} of "
               f"{len(stats.trials)} trials transverse -> perturb_report.json")
    return payload


def _run_validate(args, outdir: Path) -> tuple[dict, int]:
    seed = args.seed if args.seed is not None else 20260814
    results = run_checks(seed=seed)
    if not args.quiet:
        print(format_results(results))
    all_passed = all(r.passed for r in results)
    payload = {
        "seed": seed,
        "all_passed": all_passed,
        "checks": [
            {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results
        ],
    }
    _write_json(outdir / "validate_report.json", payload)
    return payload, 0 if all_passed else 4


def _versions() -> dict:
    import scipy

    return {
        "diracbohm": __version__,
        "kernel_backend": _kernels.BACKEND_NAME,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: a subcommand is required", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError(f"--threads must be >= 1, got {args.threads}")
            _kernels.set_num_threads(args.threads)
        hash_value = None
        if args.command == "validate":
            outdir = Path(args.out or "out")
            outdir.mkdir(parents=True, exist_ok=True)
            results, code = _run_validate(args, outdir)
        else:
            cfg = load_config(args.config)
            hash_value = scenario_hash(cfg.raw)
            model = build_model(cfg.model)
            outdir = Path(args.out or cfg.output_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            runner = {
                "simulate": _run_simulate,
                "ensemble": _run_ensemble,
                "sigma": _run_sigma,
                "perturb": _run_perturb,
            }[args.command]
            results = runner(cfg, model, args, outdir)
            code = 0
        wall = time.perf_counter() - t0
        stamp = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        summary = {
            "command": args.command,
            "scenario_hash": hash_value,
            "seed_override": args.seed,
            "versions": _versions(),
            "results": results,
            "timestamp": f"{stamp} wall={wall:.3f}s",
        }
        _write_json(outdir / "summary.json", summary)
        _say(args, f"summary -> {outdir / 'summary.json'}")
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NearNodeError, DegenerateDensityError, TooManyLostError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DiracBohmError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # anything unexpected is an internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
