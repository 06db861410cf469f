"""Command-line surface: model, synth, simulate, compare, validate.

Exit codes: 0 success, 1 configuration error (or failed validation),
2 synthesis failure, 3 simulation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checks, pipeline, reference
from .config import RunConfig, parse_config
from .errors import ConfigError, EmsimError, SimulationDiverged, SynthesisError
from .numerics import NumericalError, eig, is_hurwitz
from .report import write_report, write_trace_csv
from .simulate import RoadProfile, peak_body_travel, simulate_closed_loop
from .synthesis import LQI_STATIC

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SYNTHESIS = 2
EXIT_SIMULATION = 3


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _parse_road(spec: str) -> RoadProfile:
    kind, _, rest = spec.partition(":")
    try:
        if kind == "zero":
            return RoadProfile.zero()
        parts = [float(v) for v in rest.split(",")] if rest else []
        if kind == "bump":
            amp, start, dur = parts
            return RoadProfile("half_sine_bump", amp, start, dur)
        if kind == "step":
            amp, start = parts
            return RoadProfile("step", amp, start, 1.0)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad --road value {spec!r}: {exc}") from exc
    raise ConfigError(
        f"bad --road value {spec!r}; use bump:<amp>,<start>,<dur> | "
        f"step:<amp>,<start> | zero"
    )


def load_config(args) -> RunConfig:
    """Config file, then EMS_SEED, then command-line overrides."""
    text = ""
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
    cfg = parse_config(text)

    env_seed = os.environ.get("EMS_SEED")
    sim = cfg.sim
    if env_seed is not None:
        try:
            sim = dataclasses.replace(sim, seed=int(env_seed))
        except ValueError as exc:
            raise ConfigError(f"EMS_SEED must be an integer, got {env_seed!r}") from exc
    if getattr(args, "seed", None) is not None:
        sim = dataclasses.replace(sim, seed=args.seed)
    if getattr(args, "dt", None) is not None:
        sim = dataclasses.replace(sim, dt=args.dt)
    if getattr(args, "t_final", None) is not None:
        sim = dataclasses.replace(sim, t_final=args.t_final)
    if getattr(args, "no_noise", False):
        sim = dataclasses.replace(sim, noise_on=False)
    road = _parse_road(args.road) if getattr(args, "road", None) else cfg.road
    out_dir = args.out if getattr(args, "out", None) else cfg.out_dir
    return dataclasses.replace(cfg, sim=sim, road=road, out_dir=out_dir)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, metavar="U64", help="override seed")
    common.add_argument("--dt", type=float, metavar="S", help="override step size")
    common.add_argument("--t-final", type=float, metavar="S", dest="t_final",
                        help="override horizon")
    common.add_argument("--road", metavar="SPEC",
                        help="bump:<amp>,<start>,<dur> | step:<amp>,<start> | zero")
    common.add_argument("--no-noise", action="store_true", help="force noise off")
    common.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="emsim",
        description="Electromagnetic suspension modelling, synthesis and simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("model", parents=[common],
                   help="print realizations, transfer function, eigenvalues")
    synth = sub.add_parser("synth", parents=[common],
                           help="synthesize a controller and write its artifact")
    synth.add_argument("which", choices=("lqg", "lqi"))
    simulate = sub.add_parser("simulate", parents=[common],
                              help="simulate one scenario and write its trace")
    simulate.add_argument("--controller", choices=("open", "lqg", "lqi"),
                          default="lqg")
    sub.add_parser("compare", parents=[common],
                   help="run open-loop, LQG and LQI on the same road")
    sub.add_parser("validate", parents=[common],
                   help="run every release-gate criterion")
    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _mat(name: str, m) -> str:
    body = np.array2string(np.asarray(m), precision=6, suppress_small=True)
    pad = " " * (len(name) + 3)
    return f"{name} = " + body.replace("\n", "\n" + pad)


def cmd_model(cfg: RunConfig) -> int:
    models = pipeline.derive_models(cfg.plant)
    tf = models.tf
    print("Physical realization (states: gap, velocity, current)")
    for name, m in (("A", models.physical.a), ("B", models.physical.b),
                    ("C", models.physical.c), ("D", models.physical.d)):
        print(_mat(name, m))
    print("\nCompanion realization (synthesis plant, unity numerator)")
    for name, m in (("A", models.companion.a), ("B", models.companion.b),
                    ("C", models.companion.c)):
        print(_mat(name, m))
    print("\nTransfer function (road displacement to body travel)")
    print(f"  num = {np.array2string(tf.num, precision=6)}")
    print(f"  den = {np.array2string(tf.den, precision=6)}")
    eigs = sorted(eig(models.physical.a), key=lambda z: z.real)
    print("\nOpen-loop eigenvalues")
    for z in eigs:
        print(f"  {z.real:+.6g} {z.imag:+.6g}j")
    residual = cfg.plant.equilibrium_residual()
    print(f"\nWARNING: operating point is not a force balance: "
          f"|m g - f_m(x0, i0)| = {residual:.4g} N")
    return EXIT_OK


def cmd_synth(cfg: RunConfig, which: str) -> int:
    models = pipeline.derive_models(cfg.plant)
    synth = pipeline.synthesize(cfg, models)
    plant = models.companion
    comp = synth.lqg if which == "lqg" else synth.lqi
    from .simulate import closed_loop_matrix

    loop = closed_loop_matrix(plant, comp)
    eigs = sorted(eig(loop), key=lambda z: z.real)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifact_path = out_dir / f"{which}.json"
    if which == "lqg":
        artifact = {
            "kind": comp.kind,
            "a_c": comp.a_c.tolist(),
            "b_c": comp.b_c.tolist(),
            "c_c": comp.c_c.tolist(),
            "d_c": comp.d_c.tolist(),
            "lqr_gain": synth.k_c.tolist(),
            "kalman_gain": synth.k_f.tolist(),
        }
    else:
        artifact = {
            "kind": comp.kind,
            "k": comp.k.tolist(),
            "integrator": "dx_i/dt = r - y",
            "reference_gain_delta": (comp.k[0] - np.array(reference.LQI_GAIN)).tolist(),
        }
    artifact["closed_loop_eigenvalues"] = [[z.real, z.imag] for z in eigs]
    write_report(artifact, artifact_path)
    print(f"{which} controller written to {artifact_path}")
    print("Closed-loop eigenvalues:")
    for z in eigs:
        print(f"  {z.real:+.6g} {z.imag:+.6g}j")
    if which == "lqi":
        deltas = comp.k[0] - np.array(reference.LQI_GAIN)
        print(f"Gain vs reference {list(reference.LQI_GAIN)}: "
              f"delta = {np.array2string(deltas, precision=3)}")
    if not is_hurwitz(loop):
        print("ERROR: closed loop is not Hurwitz", file=sys.stderr)
        return EXIT_SYNTHESIS
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, controller: str, plot: bool) -> int:
    models = pipeline.derive_models(cfg.plant)
    comp = None
    if controller != "open":
        synth = pipeline.synthesize(cfg, models)
        comp = synth.lqg if controller == "lqg" else synth.lqi
    trace = simulate_closed_loop(
        models.companion, comp, cfg.road,
        cfg.noise if cfg.sim.noise_on else None, cfg.sim,
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = "open_loop" if controller == "open" else controller
    csv_path = out_dir / f"{name}.csv"
    write_trace_csv(trace, csv_path)
    print(f"trace written to {csv_path}")
    if plot:
        from .plots import render_single

        fig_path = render_single(trace, out_dir / f"{name}.png",
                                 title=f"{name} response")
        print(f"figure written to {fig_path}")
    print(f"peak |body travel| = {peak_body_travel(trace):.6g} m")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, plot: bool) -> int:
    report, results = pipeline.compare_run(cfg, cfg.out_dir, plot=plot)
    print(f"report written to {Path(cfg.out_dir) / 'report.json'}")
    for name, res in results.items():
        if res.status == "ok":
            print(f"  {name:<10} peak = {res.peak:.6g} m   cost = {res.cost:.6g}")
        else:
            print(f"  {name:<10} FAILED: {res.error}")
    ordering = report["peak_ordering"]
    if ordering.get("complete"):
        print(f"  reference ordering (lqg < lqi < open) reproduced: "
              f"{ordering['reference_ordering_reproduced']}")
    if any(res.status != "ok" for res in results.values()):
        return EXIT_SIMULATION
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    results = checks.run_all(cfg)
    width = max(len(r.criterion) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.criterion:<{width}}  {status}  {r.measured}")
        failures += 0 if r.passed else 1
    print(f"\n{len(results) - failures}/{len(results)} criteria passed")
    return EXIT_OK if failures == 0 else EXIT_CONFIG


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "model":
            return cmd_model(cfg)
        if args.command == "synth":
            return cmd_synth(cfg, args.which)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.controller, plot=not args.no_plot)
        if args.command == "compare":
            return cmd_compare(cfg, plot=not args.no_plot)
        if args.command == "validate":
            return cmd_validate(cfg)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SynthesisError, NumericalError) as exc:
        print(f"synthesis error: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except EmsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
