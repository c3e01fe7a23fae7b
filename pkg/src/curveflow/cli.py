"""Command-line front end.

    curveflow evolve   --image obj.pgm --circle 0,0,0.5 --charge -1@0,0 --out run/
    curveflow mcf      --circle 0,0,1 --n 64 --max-iters 1500 --out mcf/
    curveflow diagnose --circle 0,0,2 --charge -1@0,0 --charge -1@0.6,0 --out diag/
    curveflow bench    --ns 16,32 --reps 10 --out bench/

Options may also come from a ``key=value`` file given with ``--config``;
command-line flags take precedence.  Keys are the long flag names without
the leading dashes (``max-iters=2000``); ``charge`` may repeat.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bem
from .errors import CurveFlowError, InvalidCurve, MalformedImage
from .flow import ChargeSet, FlowConfig, area_accuracy, run
from .geometry import DiscreteCurve, circle, local_frames, read_curve_csv, resample_uniform
from .image import DEFAULT_SCALE, read_pgm
from .output import fmt, write_matrix_csv, write_trace
from .scenarios import disk_scene

log = logging.getLogger("curveflow")

EXIT_OK = 0
EXIT_MAX_ITER = 2
EXIT_ERROR = 3

DEFAULTS = {
    "n": 64,
    "dt": None,
    "mu": 0.15,
    "threshold": 0.90,
    "max-iters": 50_000,
    "trace-every": 100,
    "scale": DEFAULT_SCALE,
    "guard": 1.0,
    "clamp": None,
    "reps": 10,
    "ns": "16,32,64",
}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    inputs: dict
    out_dir: str
    trace_every: int
    charges: list = field(default_factory=list)


def _parse_charge(text: str):
    try:
        c, xy = text.split("@")
        x, y = xy.split(",")
        return float(c), (float(x), float(y))
    except ValueError:
        raise UsageError(f"charge must look like c@x,y, got {text!r}") from None


def _parse_circle(text: str):
    try:
        cx, cy, r = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"circle must look like cx,cy,r, got {text!r}") from None
    if r <= 0:
        raise UsageError("circle radius must be positive")
    return cx, cy, r


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "charge":
            out.setdefault("charge", []).append(value)
        else:
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--image", help="PGM raster (P2 or P5)")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--curve", help="CSV of x,y points")
    src.add_argument("--circle", help="generated circle cx,cy,r")
    common.add_argument("--n", type=int, help="number of curve points (default 64)")
    common.add_argument("--dt", type=float, help="time step (default 1/n^2)")
    common.add_argument("--mu", type=float, help="curvature blend in [0,1] (default 0.15)")
    common.add_argument("--charge", action="append", help="charge c@x,y (repeatable)")
    common.add_argument("--threshold", type=float, help="matched fraction that stops the run (default 0.90)")
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--trace-every", type=int, dest="trace_every")
    common.add_argument("--scale", type=float, help="world units per pixel (default 0.001)")
    common.add_argument("--guard", type=float, help="minimum charge distance in units of l/N (default 1)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--overwrite", action="store_true", help="allow writing into a non-empty --out")
    common.add_argument("--dump-matrices", action="store_true", dest="dump_matrices")
    common.add_argument("--clamp", choices=("min0", "max0"))
    common.add_argument("--stability", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="curveflow", description="Anisotropic curvature flow for contour fitting.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evolve", parents=[common], help="fit a curve to the object in an image")
    sub.add_parser("mcf", parents=[common], help="isotropic curvature flow, no image or charges")
    sub.add_parser("diagnose", parents=[common], help="condition numbers for a list of charge positions")
    bench = sub.add_parser("bench", parents=[common], help="time the disk-matching scene for several N")
    bench.add_argument("--ns", help="comma-separated point counts (default 16,32,64)")
    bench.add_argument("--reps", type=int, help="repetitions per N (default 10)")
    return parser


def resolve(args) -> dict:
    """Merge builtin defaults, the config file and command-line flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    flags = {
        "image": args.image,
        "curve": args.curve,
        "circle": args.circle,
        "n": args.n,
        "dt": args.dt,
        "mu": args.mu,
        "charge": args.charge,
        "threshold": args.threshold,
        "max-iters": args.max_iters,
        "trace-every": args.trace_every,
        "scale": args.scale,
        "guard": args.guard,
        "clamp": args.clamp,
        "ns": getattr(args, "ns", None),
        "reps": getattr(args, "reps", None),
    }
    if args.curve or args.circle:
        cfg.pop("curve", None)
        cfg.pop("circle", None)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    for key in ("stability", "dump-matrices"):
        flag = getattr(args, key.replace("-", "_"))
        cfg[key] = bool(flag) or str(cfg.get(key, "")).lower() in ("1", "true", "yes")

    try:
        for key in ("n", "max-iters", "trace-every", "reps"):
            cfg[key] = int(cfg[key])
        for key in ("mu", "threshold", "scale", "guard"):
            cfg[key] = float(cfg[key])
        if cfg["dt"] is not None:
            cfg["dt"] = float(cfg["dt"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad option value: {exc}") from None
    charges = cfg.get("charge") or []
    if isinstance(charges, str):
        charges = [charges]
    cfg["charge"] = [_parse_charge(c) for c in charges]
    return cfg


def flow_config(cfg) -> FlowConfig:
    try:
        return FlowConfig(
            n=cfg["n"],
            dt=cfg["dt"],
            mu=cfg["mu"],
            match_threshold=cfg["threshold"],
            max_iterations=cfg["max-iters"],
            trace_every=cfg["trace-every"],
            clamp=cfg["clamp"],
            charge_guard=cfg["guard"],
            stability=cfg["stability"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def load_curve(cfg) -> DiscreteCurve:
    if cfg.get("curve"):
        # the flow assumes near-uniform spacing from the first step
        return resample_uniform(read_curve_csv(cfg["curve"]), cfg["n"])
    if cfg.get("circle"):
        cx, cy, r = _parse_circle(cfg["circle"])
        return circle((cx, cy), r, cfg["n"])
    raise UsageError("an initial curve is required: --curve PATH or --circle cx,cy,r")


def prepare_out(path, overwrite: bool) -> Path:
    out = Path(path).resolve()
    if out.exists() and any(out.iterdir()) and not overwrite:
        raise UsageError(f"output directory {out} is not empty (use --overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(manifest: RunManifest, out: Path) -> None:
    text = json.dumps(asdict(manifest), indent=2, sort_keys=True, default=str)
    (out / "manifest.json").write_text(text + "\n")
    print(text)


def _manifest(command, cfg, out, inputs) -> RunManifest:
    keep = {k: v for k, v in cfg.items() if k not in ("charge", "curve", "circle", "image", "config")}
    return RunManifest(command, keep, inputs, str(out), cfg["trace-every"], [[c, list(p)] for c, p in cfg["charge"]])


def _dump_matrices(curve, charges, field, cfg, out: Path) -> None:
    from .image import mask_values

    frames = local_frames(curve, cfg["mu"])
    sol = bem.solve_boundary(curve, frames, frames.curvature, charges, mask_values(field, curve.points), cfg["guard"])
    mdir = out / "matrices"
    mdir.mkdir(exist_ok=True)
    write_matrix_csv(mdir / "stage1_matrix.csv", sol.stage1_matrix)
    write_matrix_csv(mdir / "stage1_rhs.csv", sol.stage1_rhs)
    write_matrix_csv(mdir / "stage2_matrix.csv", sol.stage2_matrix)
    write_matrix_csv(mdir / "stage2_rhs.csv", sol.stage2_rhs)


def _report(trace) -> int:
    if trace.error is not None:
        print(f"error at iteration {trace.error.iteration}: {trace.error}", file=sys.stderr)
        return EXIT_ERROR
    print(f"stopped: {trace.reason} after {trace.iterations} iterations")
    return EXIT_OK if trace.reason == "matched" else EXIT_MAX_ITER


def _resolve_paths(cfg) -> None:
    for key in ("image", "curve"):
        if cfg.get(key):
            path = Path(cfg[key]).resolve()
            if not path.is_file():
                raise UsageError(f"{key} file not found: {path}")
            cfg[key] = str(path)


def cmd_evolve(cfg, out_arg, overwrite) -> int:
    if not cfg.get("image"):
        raise UsageError("evolve needs --image PATH")
    _resolve_paths(cfg)
    field = read_pgm(cfg["image"], scale=cfg["scale"])
    curve = load_curve(cfg)
    charges = ChargeSet.of(*cfg["charge"])
    config = flow_config(cfg)
    out = prepare_out(out_arg, overwrite)
    write_manifest(_manifest("evolve", cfg, out, {"image": cfg["image"], "curve": cfg.get("curve") or cfg.get("circle")}), out)
    if cfg["dump-matrices"]:
        _dump_matrices(curve, charges, field, cfg, out)
    trace = run(curve, charges, field, config)
    write_trace(trace, out, field, stability=cfg["stability"])
    print(f"area accuracy: {area_accuracy(DiscreteCurve.unchecked(trace.final.points), field):.2f}%")
    return _report(trace)


def cmd_mcf(cfg, out_arg, overwrite) -> int:
    if cfg.get("image") or cfg["charge"]:
        raise UsageError("mcf takes no --image and no --charge")
    _resolve_paths(cfg)
    curve = load_curve(cfg)
    config = flow_config(cfg)
    out = prepare_out(out_arg, overwrite)
    write_manifest(_manifest("mcf", cfg, out, {"curve": cfg.get("curve") or cfg.get("circle")}), out)
    trace = run(curve, ChargeSet(), None, config)
    write_trace(trace, out, stability=cfg["stability"])
    if trace.error is not None:
        return _report(trace)
    print(f"stopped: {trace.reason} after {trace.iterations} iterations")
    return EXIT_OK


def condition_table(curve: DiscreteCurve, positions, mu: float = 0.15):
    """Rows ``(index, x, y, c, cond_stage1, cond_stage2, ratio, error)``; the first position is the reference."""
    frames = local_frames(curve, mu)
    S, D = bem.assemble_layers(curve, frames)
    c1 = bem.condition_inf(bem.stage1_matrix(D)).condition
    rows = []
    ref = None
    for i, (c, p) in enumerate(positions):
        try:
            cols = bem.charge_columns(curve, [(c, p)])
            c2 = bem.condition_inf(bem.stage2_condition_matrix(-S, cols)).condition
            err = ""
        except CurveFlowError as exc:
            c2, err = float("nan"), str(exc)
        if i == 0:
            ref = c2
        rows.append((i, p[0], p[1], c, c1, c2, c2 / ref, err))
    return rows


def cmd_diagnose(cfg, out_arg, overwrite) -> int:
    _resolve_paths(cfg)
    curve = load_curve(cfg)
    if not cfg["charge"]:
        raise UsageError("diagnose needs at least one --charge c@x,y; the first is the reference")
    out = prepare_out(out_arg, overwrite)
    write_manifest(_manifest("diagnose", cfg, out, {"curve": cfg.get("curve") or cfg.get("circle")}), out)
    rows = condition_table(curve, cfg["charge"], cfg["mu"])
    with (out / "condition.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("index", "x", "y", "strength", "cond_stage1", "cond_stage2", "ratio", "error"))
        for i, x, y, c, c1, c2, ratio, err in rows:
            w.writerow((i, fmt(x), fmt(y), fmt(c), fmt(c1), fmt(c2), fmt(ratio), err))
    for row in rows:
        print(f"p{row[0]} = ({row[1]:g}, {row[2]:g}): C = {row[5]:.6g}, ratio {row[6]:.6g}")
    return EXIT_ERROR if np.isnan(rows[0][5]) else EXIT_OK


def cmd_bench(cfg, out_arg, overwrite) -> int:
    try:
        ns = [int(v) for v in str(cfg["ns"]).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--ns must be comma-separated integers, got {cfg['ns']!r}") from None
    reps = cfg["reps"]
    if reps < 2:
        raise UsageError("--reps must be at least 2 to report a deviation")
    out = prepare_out(out_arg, overwrite)
    write_manifest(_manifest("bench", cfg, out, {"scene": "disk"}), out)
    rows = []
    for n in ns:
        times, iters, reason, err = [], 0, "", ""
        try:
            field, initial, charges = disk_scene(n)
            config = FlowConfig(n=n, mu=cfg["mu"], match_threshold=cfg["threshold"],
                                max_iterations=cfg["max-iters"], trace_every=cfg["max-iters"] + 1,
                                charge_guard=cfg["guard"], conditioning=False)
            run(initial, charges, field, config)  # warm-up, not timed
            for _ in range(reps):
                t0 = time.perf_counter()
                trace = run(initial, charges, field, config)
                times.append(time.perf_counter() - t0)
                iters, reason = trace.iterations, trace.reason
                if trace.error is not None:
                    err = str(trace.error)
        except (CurveFlowError, ValueError) as exc:
            err = str(exc)
        mean = float(np.mean(times)) if times else float("nan")
        std = float(np.std(times, ddof=1)) if len(times) > 1 else float("nan")
        rows.append((n, reps, mean, std, iters, reason, err))
        print(f"N={n}: {mean:.4f} s +/- {std:.4f} s ({iters} iterations, {reason or 'failed'})")
    with (out / "bench.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n", "reps", "mean_seconds", "std_seconds", "iterations", "reason", "error"))
        for n, r, mean, std, it, reason, err in rows:
            w.writerow((n, r, fmt(mean), fmt(std), it, reason, err))
    return EXIT_OK if any(not np.isnan(r[2]) for r in rows) else EXIT_ERROR


COMMANDS = {"evolve": cmd_evolve, "mcf": cmd_mcf, "diagnose": cmd_diagnose, "bench": cmd_bench}


def _glue_charges(argv):
    # "--charge -1@0,0" would otherwise be read as an unknown option.
    out, it = [], iter(argv)
    for a in it:
        if a == "--charge":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--charge={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_charges(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, args.out, args.overwrite)
    except (UsageError, InvalidCurve, MalformedImage, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"curveflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CurveFlowError as exc:
        print(f"curveflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
