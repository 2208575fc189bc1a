"""Command-line entry point: cgl-vortex <subcommand> [options]."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("cgl_vortex")


class UsageError(Exception):
    pass


def _parse_grid(text):
    try:
        n, L = text.lower().split("x")
        return int(n), float(L)
    except ValueError as exc:
        raise UsageError(f"--grid expects <N>x<L>, e.g. 801x2.0, got {text!r}") from exc


def _parse_eps(text):
    try:
        return [float(e) for e in text.split(",") if e.strip()]
    except ValueError as exc:
        raise UsageError(f"--eps expects a comma-separated list, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment TOML file")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--eps", help="comma-separated eps list")
    common.add_argument("--delta", type=float)
    common.add_argument("--tfinal", type=float)
    common.add_argument("--grid", help="fixed grid as <N>x<L>")
    common.add_argument("--threads", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cgl-vortex", description="Vortex dynamics for the 2D complex Ginzburg-Landau equation")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("profile", parents=[common], help="tabulate the radial vortex profile")
    sub.add_parser("prepare", parents=[common], help="write well-prepared initial data per eps")
    s = sub.add_parser("simulate", parents=[common], help="evolve the PDE and write snapshot streams")
    s.add_argument("--stride", type=int, default=None, help="snapshot every k steps")
    sub.add_parser("ode", parents=[common], help="integrate the point-vortex ODE")
    t = sub.add_parser("track", parents=[common], help="track vortices in a snapshot stream")
    t.add_argument("--run", required=True, help="directory with manifest.json and t_*.cglf files")
    sub.add_parser("compare", parents=[common], help="PDE vs ODE comparison and convergence table")
    sub.add_parser("verify", parents=[common], help="run the identity ledger")
    e = sub.add_parser("energy", parents=[common], help="energy breakdown of a snapshot or of the initial data")
    e.add_argument("--snapshot", help="field snapshot (.cglf); default: prepared data")
    e.add_argument("--radius", type=float, default=None, help="radius for the renormalized energy")
    return p


def _overrides(args):
    ov = {}
    if args.eps:
        ov["eps"] = _parse_eps(args.eps)
    if args.delta is not None:
        ov["delta"] = args.delta
    if args.tfinal is not None:
        ov["t_final"] = args.tfinal
    if args.threads is not None:
        ov["threads"] = args.threads
    if args.out:
        ov["output"] = args.out
    if args.grid:
        n, L = _parse_grid(args.grid)
        ov["grid"] = {"N": n, "L": L}
    return ov


def _config(args):
    from .harness import load_config

    return load_config(args.config, _overrides(args))


def _outdir(args, cfg=None) -> Path:
    out = Path(args.out or (cfg.output if cfg is not None else "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_profile(args):
    from .profile import solve_profile, write_profile_csv

    prof = solve_profile()
    out = _outdir(args)
    write_profile_csv(out / "profile.csv", prof)
    print(json.dumps({"slope0": prof.slope0, "residual": prof.residual, "file": str(out / "profile.csv")}))
    return EXIT_OK


def cmd_prepare(args):
    from dataclasses import asdict

    from .grid import write_snapshot
    from .harness import prepare_initial_data

    cfg = _config(args)
    out = _outdir(args, cfg)
    cfg0 = cfg.initial_configuration()
    cfg0.save(out / "vortices.json")
    reports = []
    for e in cfg.eps_list:
        u0, rep = prepare_initial_data(cfg0, e, cfg.grid_for(e), tol=cfg.prep_tol)
        write_snapshot(out / f"u0_eps{e:g}.cglf", u0)
        reports.append(asdict(rep))
    with open(out / "prepare.json", "w") as fh:
        json.dump(reports, fh, indent=2)
    print(json.dumps(reports, indent=2))
    return EXIT_OK


def cmd_simulate(args):
    from .fields import CGLParams
    from .harness import prepare_initial_data
    from .solver import evolve, write_run

    cfg = _config(args)
    out = _outdir(args, cfg)
    cfg0 = cfg.initial_configuration()
    ok = True
    for e in cfg.eps_list:
        spec = cfg.grid_for(e)
        base = cfg.solver_config(e, 1)
        steps = max(1, int(math.ceil(cfg.t_final / base.dt)))
        stride = args.stride or max(1, steps // cfg.samples)
        sc = cfg.solver_config(e, stride)
        u0, _ = prepare_initial_data(cfg0, e, spec, tol=cfg.prep_tol)
        params = CGLParams(cfg.delta, e)
        res = evolve(u0, params, sc, cfg.t_final)
        write_run(out / f"run_eps{e:g}", res, params, sc)
        mono = bool(np.all(np.diff(res.energy) <= 1e-8 * abs(res.energy[0])))
        if cfg.delta > 0 and not mono:
            ok = False
        print(json.dumps({"eps": e, "N": spec.N, "steps": res.steps, "dt": res.dt, "energy_nonincreasing": mono}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ode(args):
    from .point_vortex import OdeState, integrate_ode

    cfg = _config(args)
    out = _outdir(args, cfg)
    times = np.linspace(0.0, cfg.t_final, cfg.samples + 1)
    res = integrate_ode(OdeState(0.0, cfg.initial_configuration(), cfg.delta), cfg.t_final, cfg.ode_rtol, times)
    res.trajectory.to_csv(out / "ode.csv")
    print(json.dumps({"reason": res.reason, "t_end": res.t_end, "file": str(out / "ode.csv")}))
    return EXIT_OK


def cmd_track(args):
    from .grid import read_snapshot
    from .tracker import Trajectory, associate, detect

    run = Path(args.run)
    try:
        with open(run / "manifest.json") as fh:
            man = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {run / 'manifest.json'}: {exc}") from exc
    eps = man["params"]["eps"]
    traj = None
    for item in man["snapshots"]:
        f = read_snapshot(run / item["file"])
        dets = detect(f, eps)
        if traj is None:
            traj = Trajectory.start(dets, item["t"], threshold=max(0.1, 4 * f.spec.h))
        else:
            traj = associate(traj, dets, item["t"])
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    print(json.dumps({"vortices": traj.width, "samples": len(traj.times), "terminated": traj.terminated}))
    return EXIT_OK


def cmd_compare(args):
    from .harness import run_comparison

    cfg = _config(args)
    rep = run_comparison(cfg)
    rows = rep.convergence_rows()
    for r in rows:
        print(json.dumps(r))
    dec = rep.errors_decreasing()
    mono = all(r["energy_nonincreasing"] for r in rows) or cfg.delta == 0
    print(json.dumps({"errors_decreasing": dec, "output": cfg.output}))
    return EXIT_OK if (dec and mono) else EXIT_FAIL


def cmd_verify(args):
    from .harness import tomllib
    from .verification import verify_identities

    vcfg = None
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        vcfg = raw.get("verify", {} if not raw else None)
    try:
        ledger = verify_identities(vcfg)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    text = ledger.to_json()
    if args.out:
        out = _outdir(args)
        (out / "ledger.json").write_text(text + "\n")
    print(text)
    return EXIT_OK if ledger.ok else EXIT_FAIL


def cmd_energy(args):
    from dataclasses import asdict

    from .diagnostics import boundary_degree, energy_breakdown, renormalized_energy
    from .grid import read_snapshot
    from .harness import prepare_initial_data

    cfg = _config(args)
    eps = cfg.eps_list[-1]
    if args.snapshot:
        u = read_snapshot(args.snapshot)
    else:
        u, _ = prepare_initial_data(cfg.initial_configuration(), eps, cfg.grid_for(eps), tol=cfg.prep_tol)
    b = energy_breakdown(u, eps)
    out = asdict(b)
    R = args.radius or 0.9 * (u.spec.L - u.spec.h)
    ren = renormalized_energy(u, boundary_degree(u.values), eps, R)
    out["renormalized"] = asdict(ren)
    print(json.dumps(out, indent=2))
    return EXIT_OK


COMMANDS = {
    "profile": cmd_profile,
    "prepare": cmd_prepare,
    "simulate": cmd_simulate,
    "ode": cmd_ode,
    "track": cmd_track,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "energy": cmd_energy,
}


def main(argv=None) -> int:
    from .fields import ConfigurationError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", None):
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError) as exc:
        print(f"cgl-vortex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
