"""Command-line entry point: ``bwp <command> [options]``.

Every command writes its tables as CSV and a ``*.manifest.json`` next to
the main output.  Exit codes: 0 success, 2 bad arguments, 3 unreadable or
malformed input file, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import (
    ROOM_AREAS,
    ROOM_ASPECT_RATIOS,
    SweepSpec,
    calibrate_noise,
    layout_grid_eval,
    mean_metrics,
    room_grid_eval,
    room_means,
    sweep_dimensions,
    sweep_frequency,
)
from .core import NLOS_CHOICES, QuadratureConfig, building_powers
from .geometry import (
    BuildingLayout,
    LayoutSyntaxError,
    RoomSpec,
    load_layout,
    make_office_layout,
    make_rect_room,
    office_rooms,
)
from .io import (
    InputFileError,
    RunManifest,
    manifest_path,
    parse_scenario,
    read_csv,
    scenario_dict,
    write_cdf_csv,
    write_csv,
    write_grid_csv,
)
from .montecarlo import McConfig, mc_powers
from .propagation import TWO_RAY_FORMS, Scenario
from .surrogate import TrainConfig, TrainingDiverged, forward, generate_dataset, load_model, save_model, train

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4
BANDS = {"6": 6.0, "28": 28.0}


class UsageError(Exception):
    pass


def _positive(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {text!r}")
        return v
    return conv


def _positive_int(name):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {text!r}")
        return v
    return conv


def _float_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def resolve_threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("BWP_THREADS", "").strip()
    if not env:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"BWP_THREADS must be a positive integer, got {env!r}") from None
    if n < 1:
        raise UsageError(f"BWP_THREADS must be a positive integer, got {env!r}")
    return n


def build_scenario(args, freq: float | None = None) -> Scenario:
    overrides = {
        "frequency_ghz": freq if freq is not None else args.freq_ghz,
        "noise_dbw": args.noise_dbw,
        "r_max_m": args.r_max,
        "two_ray_form": args.two_ray_form,
    }
    if args.scenario:
        try:
            text = Path(args.scenario).read_text()
        except OSError as exc:
            raise InputFileError(f"cannot read scenario file {args.scenario}: {exc}") from None
        return parse_scenario(text, **overrides)
    if overrides["frequency_ghz"] is None:
        raise UsageError("--freq-ghz is required when no --scenario file is given")
    try:
        return Scenario(**{k: v for k, v in overrides.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_quad(args) -> QuadratureConfig:
    return QuadratureConfig(n_theta=args.n_theta, scheme=args.scheme)


def _manifest(args, scenario=None, layout=None, config=None, seeds=()) -> RunManifest:
    return RunManifest(
        command=args.command,
        argv=list(args.argv),
        scenario=scenario_dict(scenario) if scenario is not None else None,
        layout_hash=layout.digest() if layout is not None else None,
        config=config or {},
        seeds=list(seeds),
        kernel_backend=kernels.BACKEND,
    )


def _quad_config(args) -> dict:
    return {"n_theta": args.n_theta, "scheme": args.scheme, "nlos_model": args.nlos_model,
            "resolution_m": getattr(args, "resolution", None)}


def _check_finite(*values):
    if not all(math.isfinite(v) for v in values):
        raise FloatingPointError("non-finite result; check the scenario and quadrature settings")


# ---------------------------------------------------------------------------
# commands


def cmd_eval_room(args) -> int:
    width, length = sorted((args.width, args.length))
    scenario = build_scenario(args)
    room = RoomSpec(width, length)
    grid = room_grid_eval(room, scenario, args.resolution, build_quad(args), nlos=args.nlos_model,
                          threads=args.threads)
    g_i, g_p = mean_metrics(grid)
    _check_finite(g_i, g_p)
    write_grid_csv(args.out, grid)
    cfg = _quad_config(args) | {"width_m": width, "length_m": length}
    _manifest(args, scenario, make_rect_room(room), cfg).write(manifest_path(args.out))
    print(f"room {width:g} m x {length:g} m, {grid.n_x * grid.n_y} cells")
    print(f"mean_g_i={g_i:.6g} mean_g_p={g_p:.6g}")
    return EXIT_OK


def _load_building(args):
    if args.builtin:
        return make_office_layout(), office_rooms()
    return load_layout(args.layout), []


def cmd_eval_building(args) -> int:
    scenario = build_scenario(args)
    layout, rooms = _load_building(args)
    grid = layout_grid_eval(layout, scenario, args.resolution, build_quad(args), nlos=args.nlos_model,
                            threads=args.threads)
    g_i, g_p = mean_metrics(grid)
    _check_finite(g_i, g_p)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_grid_csv(out / f"{args.prefix}_grid.csv", grid)
    rows = [("all", grid.n_x * grid.n_y, g_i, g_p)]
    rows += [(name, n, mi, mp) for name, n, mi, mp in room_means(grid, rooms)]
    write_csv(out / f"{args.prefix}_rooms.csv", ("room", "cells", "mean_g_i", "mean_g_p"), rows)
    write_cdf_csv(out / f"{args.prefix}_cdf.csv",
                  {"g_i": grid.array("g_i").ravel(), "g_p": grid.array("g_p").ravel()})
    cfg = _quad_config(args) | {"builtin": args.builtin, "layout_file": args.layout}
    _manifest(args, scenario, layout, cfg).write(out / f"{args.prefix}.manifest.json")
    print(f"{len(layout.walls)} walls, {grid.n_x * grid.n_y} cells")
    print(f"mean_g_i={g_i:.6g} mean_g_p={g_p:.6g}")
    return EXIT_OK


def cmd_sweep_dimensions(args) -> int:
    scenario = build_scenario(args)
    spec = SweepSpec(args.areas, args.ars, (scenario.frequency_ghz,))
    rows = sweep_dimensions(spec, scenario, args.resolution, build_quad(args), nlos=args.nlos_model,
                            threads=args.threads)
    write_csv(args.out, ("area_m2", "aspect_ratio", "mean_g_i", "mean_g_p"),
              [(r.area, r.aspect_ratio, r.mean_g_i, r.mean_g_p) for r in rows])
    cfg = _quad_config(args) | {"areas": spec.areas, "aspect_ratios": spec.aspect_ratios}
    _manifest(args, scenario, None, cfg).write(manifest_path(args.out))
    print(f"{len(rows)} rooms written to {args.out}")
    return EXIT_OK


def cmd_sweep_frequency(args) -> int:
    if args.to_ghz <= args.from_ghz and args.points > 1:
        raise UsageError("--to must exceed --from")
    freqs = np.geomspace(args.from_ghz, args.to_ghz, args.points)
    scenario = build_scenario(args, freq=float(freqs[0]))
    room = RoomSpec.from_area(args.area, args.ar)
    res = sweep_frequency(freqs, scenario, room, args.resolution, build_quad(args),
                          refine=not args.no_refine, nlos=args.nlos_model, threads=args.threads)
    _check_finite(*res.mean_g_i, *res.mean_g_p)
    write_csv(args.out, ("frequency_ghz", "mean_g_i", "mean_g_p"),
              list(zip(res.frequencies, res.mean_g_i, res.mean_g_p)))
    cfg = _quad_config(args) | {"area_m2": args.area, "aspect_ratio": args.ar,
                                "frequencies_ghz": list(res.frequencies)}
    _manifest(args, scenario, make_rect_room(room), cfg).write(manifest_path(args.out))
    print(f"argmax f_star_ghz={res.f_star:.6g} mean_g_i={res.g_i_star:.6g}")
    print(f"g_p_nondecreasing={res.g_p_nondecreasing} g_i_unimodal={res.g_i_unimodal}")
    return EXIT_OK


def cmd_calibrate_noise(args) -> int:
    scenario = build_scenario(args)
    quad = build_quad(args)
    grids = [room_grid_eval(RoomSpec.from_area(a, ar), scenario, args.resolution, quad,
                            nlos=args.nlos_model, threads=args.threads)
             for a in args.areas for ar in args.ars]
    cal = calibrate_noise(grids, (args.lo, args.hi))
    if cal.found:
        print(f"noise_w={cal.noise_w:.6g} noise_dbw={cal.noise_dbw:.6g} residual=0")
    else:
        print(f"none found; best residual={cal.residual:.6g}")
    if cal.degenerate:
        print("degenerate: in-building and open-space interference coincide")
    print(f"room means: min={min(cal.means):.6g} max={max(cal.means):.6g}")
    return EXIT_OK


MC_CASES = ("open", "room", "office")
MC_R_MAX = 100.0  # a 50 km disk leaves the coverage region empty at any practical N


def cmd_validate_mc(args) -> int:
    if args.r_max is None and not args.scenario:
        args.r_max = MC_R_MAX
    scenario = build_scenario(args)
    if args.case == "open":
        layout, ue = BuildingLayout((), bounds=(-1.0, -1.0, 1.0, 1.0)), (0.0, 0.0)
    elif args.case == "room":
        layout, ue = make_rect_room(RoomSpec.from_area(20.0, 1.25)), (1.3, 2.1)
    else:
        layout, ue = make_office_layout(), (55.3, 7.1)
    if args.ue is not None:
        ue = tuple(args.ue)
    mc = mc_powers(layout, scenario, ue, McConfig(args.n, args.seed, args.reps),
                   nlos=args.nlos_model, threads=args.threads)
    ref = building_powers(layout, scenario, ue, build_quad(args), nlos=args.nlos_model)
    z = mc.z_scores(ref)
    rows = [(term, getattr(ref, term), getattr(mc.mean, term), mc.stderr_of(term), z[term])
            for term in ("p_o", "i_o", "p_b", "i_b", "p_b_los", "p_b_nlos", "i_b_los", "i_b_nlos")]
    write_csv(args.out, ("term", "quadrature", "mc_mean", "mc_stderr", "z"), rows)
    cfg = _quad_config(args) | {"case": args.case, "ue": list(ue), "n_elements": args.n,
                                "repetitions": args.reps}
    _manifest(args, scenario, layout, cfg, [args.seed]).write(manifest_path(args.out))
    worst = max(abs(v) for v in z.values())
    print(f"max |z| = {worst:.3g} over {len(z)} terms")
    return EXIT_OK


def cmd_train_surrogate(args) -> int:
    freq = BANDS[args.band]
    scenario = build_scenario(args, freq=freq)
    data = generate_dataset(args.areas, args.ars, scenario, args.resolution, build_quad(args),
                            threads=args.threads)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs,
                      seed=args.seed, val_fraction=args.val_fraction, momentum=args.momentum)
    model, report = train(data, cfg)
    save_model(model, args.out)
    if args.dataset_out:
        write_csv(args.dataset_out, ("x", "y", "width", "length", "g_i", "g_p"),
                  np.hstack((data.inputs, data.targets)).tolist())
    conf = {"band_ghz": freq, "rows": len(data), "resolution_m": args.resolution,
            "train": {k: getattr(cfg, k) for k in ("learning_rate", "batch_size", "epochs",
                                                    "val_fraction", "momentum")},
            "val_rmse": list(report.val_rmse), "final_loss": report.losses[-1]}
    _manifest(args, scenario, None, conf, [args.seed]).write(manifest_path(args.out))
    print(f"{len(data)} rows, {report.n_train} train / {report.n_val} validation")
    print(f"val_rmse_g_i={report.val_rmse[0]:.6g} val_rmse_g_p={report.val_rmse[1]:.6g}")
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise InputFileError(f"cannot read model file: {exc}") from None
    except ValueError as exc:
        raise InputFileError(f"{args.model}: {exc}") from None
    if args.input:
        header, rows = read_csv(args.input)
        try:
            cols = [header.index(c) for c in ("x", "y", "width", "length")]
        except ValueError:
            raise InputFileError(f"{args.input}: needs columns x,y,width,length") from None
        x = np.array([[row[c] for c in cols] for row in rows], dtype=float)
    else:
        if None in (args.x, args.y, args.width, args.length):
            raise UsageError("give --input or all of --x --y --width --length")
        x = np.array([[args.x, args.y, args.width, args.length]])
    pred = forward(model, x)
    if args.out:
        write_csv(args.out, ("x", "y", "width", "length", "g_i", "g_p"), np.hstack((x, pred)).tolist())
        _manifest(args, None, None, {"model": str(args.model)}).write(manifest_path(args.out))
    else:
        for row in pred:
            print(f"g_i={row[0]:.6g} g_p={row[1]:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(p, *, freq=True, resolution=True):
    p.add_argument("--scenario", help="scenario file (key = value lines)")
    if freq:
        p.add_argument("--freq-ghz", type=_positive("--freq-ghz"), help="carrier frequency in GHz")
    p.add_argument("--noise-dbw", type=float, help="noise power in dBW (default: noise-free)")
    p.add_argument("--r-max", type=_positive("--r-max"), help="outer integration radius in m")
    p.add_argument("--two-ray-form", choices=TWO_RAY_FORMS)
    p.add_argument("--nlos-model", choices=NLOS_CHOICES, default="single-slope")
    p.add_argument("--n-theta", type=_positive_int("--n-theta"), default=1024)
    p.add_argument("--scheme", choices=("ray", "grid"), default="ray")
    p.add_argument("--threads", type=_positive_int("--threads"),
                   help="worker threads (default: $BWP_THREADS or 1)")
    if resolution:
        p.add_argument("--resolution", type=_positive("--resolution"), default=0.5,
                       help="UE grid cell size in m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bwp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval-room", help="raster of g_i and g_p over one rectangular room")
    _common(p)
    p.add_argument("--width", type=_positive("--width"), required=True)
    p.add_argument("--length", type=_positive("--length"), required=True)
    p.add_argument("--out", default="room.csv")
    p.set_defaults(func=cmd_eval_room)

    p = sub.add_parser("eval-building", help="raster, per-room means and CDFs for a layout")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=("office",))
    src.add_argument("--layout", help="layout file")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="building")
    p.set_defaults(func=cmd_eval_building)

    p = sub.add_parser("sweep-dimensions", help="mean gains over room areas and aspect ratios")
    _common(p)
    p.add_argument("--areas", type=_float_list, default=ROOM_AREAS)
    p.add_argument("--ars", type=_float_list, default=ROOM_ASPECT_RATIOS)
    p.add_argument("--out", default="sweep_dimensions.csv")
    p.set_defaults(func=cmd_sweep_dimensions)

    p = sub.add_parser("sweep-frequency", help="mean gains of one room across frequency")
    _common(p, freq=False)
    p.add_argument("--from", dest="from_ghz", type=_positive("--from"), default=0.5)
    p.add_argument("--to", dest="to_ghz", type=_positive("--to"), default=100.0)
    p.add_argument("--points", type=_positive_int("--points"), default=24)
    p.add_argument("--area", type=_positive("--area"), default=60.0)
    p.add_argument("--ar", type=float, default=2.0)
    p.add_argument("--no-refine", action="store_true", help="skip the golden-section refinement")
    p.add_argument("--out", default="sweep_frequency.csv")
    p.set_defaults(func=cmd_sweep_frequency)

    p = sub.add_parser("calibrate-noise", help="noise power placing every room mean g_i in an interval")
    _common(p)
    p.add_argument("--areas", type=_float_list, default=ROOM_AREAS)
    p.add_argument("--ars", type=_float_list, default=ROOM_ASPECT_RATIOS)
    p.add_argument("--lo", type=float, default=41.0)
    p.add_argument("--hi", type=float, default=46.0)
    p.set_defaults(func=cmd_calibrate_noise)

    p = sub.add_parser("validate-mc", help="compare quadrature with random deployments",
                       description="Deployment disk radius defaults to 100 m unless --r-max or a scenario file sets it.")
    _common(p, resolution=False)
    p.add_argument("--case", choices=MC_CASES, default="room")
    p.add_argument("--ue", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--n", type=_positive_int("--n"), default=1_000_000)
    p.add_argument("--reps", type=_positive_int("--reps"), default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="validate_mc.csv")
    p.set_defaults(func=cmd_validate_mc)

    p = sub.add_parser("train-surrogate", help="fit the network for one band")
    _common(p, freq=False)
    p.add_argument("--band", choices=tuple(BANDS), required=True)
    p.add_argument("--areas", type=_float_list, default=ROOM_AREAS)
    p.add_argument("--ars", type=_float_list, default=ROOM_ASPECT_RATIOS)
    p.add_argument("--epochs", type=_positive_int("--epochs"), default=1500)
    p.add_argument("--lr", type=_positive("--lr"), default=0.01)
    p.add_argument("--batch-size", type=_positive_int("--batch-size"), default=32)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset-out", help="also write the labelled rows as CSV")
    p.add_argument("--out", default="surrogate.mlp")
    p.set_defaults(func=cmd_train_surrogate)

    p = sub.add_parser("predict", help="evaluate a trained network")
    p.add_argument("--model", required=True)
    p.add_argument("--input", help="CSV with columns x,y,width,length")
    for name in ("x", "y", "width", "length"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--out", help="write predictions as CSV instead of printing")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        if hasattr(args, "threads"):
            args.threads = resolve_threads(args.threads)
        return args.func(args)
    except UsageError as exc:
        print(f"bwp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputFileError, LayoutSyntaxError, OSError) as exc:
        print(f"bwp {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TrainingDiverged, FloatingPointError, ArithmeticError) as exc:
        print(f"bwp {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"bwp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
