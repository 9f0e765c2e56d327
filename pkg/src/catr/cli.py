"""``catr`` command line.

Every subcommand reads one JSON config (``--config``), writes its results to
``--out`` and echoes the resolved config into its JSON output. Exit status:
0 ok, 1 invalid input, 2 infeasible or not converged (outputs still written).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RobotConfig
from .errors import CATRError, ConfigError, EmptyVoxelError
from .io import EXACT_FORMAT, FLOAT_FORMAT, Exact, write_csv, write_json
from .multiseg import (
    dexterity,
    forward_kinematics,
    ik_trace_rows,
    inverse_kinematics,
    sample_workspace,
)
from .slit_design import design_document, optimize_design
from .statics import recover_interaction_load, solve_deflection, tip_from_deflection

OK, INFEASIBLE, NON_CONVERGED = "ok", "infeasible", "non_converged"
EXIT = {OK: 0, INFEASIBLE: 2, NON_CONVERGED: 2}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _grid(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.replace("x", ",").split(",")]
    except ValueError:
        raise ConfigError(f"--grid: expected five comma-separated integers, got {text!r}") from None
    if len(vals) != 5 or min(vals) < 1:
        raise ConfigError(f"--grid: expected five positive integers, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="catr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    help_ = {
        "design": "optimise slit parameters (JSON table + epsilon trace CSV)",
        "fk": "forward kinematics of fk.actuation",
        "ik": "inverse kinematics for ik.targets",
        "workspace": "voxelised tip cloud and volume",
        "statics": "deflection curve under statics.load",
        "dexterity": "dexterity index at dexterity.point",
    }
    for name, h in help_.items():
        s = sub.add_parser(name, help=h)
        s.add_argument("--config", type=Path, help="JSON config (defaults: reference robot)")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--workers", type=int, default=1, help="worker threads (does not change results)")
        if name in ("workspace", "dexterity"):
            s.add_argument("--grid", type=_grid, help="D_p^p,theta_M^p,q_d,D_p^d,theta_M^d sample counts")
            s.add_argument("--voxel", type=float, help="voxel edge (mm)")
    return p


def _resolve(args) -> RobotConfig:
    data = {}
    if args.config is not None:
        data = RobotConfig.load(args.config).to_dict()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed: must be an unsigned 64-bit integer")
        data["seed"] = args.seed
    if getattr(args, "grid", None) is not None:
        data.setdefault("workspace", {})["grid"] = args.grid
    if getattr(args, "voxel", None) is not None:
        data.setdefault("workspace", {})["voxel"] = args.voxel
    if args.workers < 1:
        raise ConfigError("--workers: must be >= 1")
    return RobotConfig(data)


def _header(cfg: RobotConfig, command: str, status: str) -> dict:
    return {"command": command, "status": status, "config_float_format": EXACT_FORMAT, "config": Exact(cfg.to_dict())}


# ------------------------------------------------------------ commands


def cmd_design(cfg: RobotConfig, out: Path, workers: int) -> str:
    d = cfg.resolved["design"]
    bounds = cfg.design_bounds()
    opts = cfg.optimizer(workers)
    designs, meta, statuses = {}, {}, []
    for seg in d["segments"]:
        res = optimize_design(
            cfg.fixed_geometry(seg), bounds, opts,
            epsilon0=d["epsilon0"], epsilon_step=d["epsilon_step"], i_max=d["i_max"],
        )
        res.trace_csv(out / f"design_trace_{seg}.csv", FLOAT_FORMAT)
        statuses.append(res.status)
        best = res.chosen or (res.s1m if res.s1m.feasible else None)
        if best is not None:
            designs[seg] = best.design
        meta[seg] = {
            "status": res.status,
            "stop_reason": res.stop_reason,
            "f1_min": res.s1m.f1,
            "f2_min": res.s2m.f2,
            "iterations": len(res.epsilon_trace),
            "frontier": [[c.f1, c.f2] for c in res.frontier],
        }
    status = INFEASIBLE if INFEASIBLE in statuses else NON_CONVERGED if NON_CONVERGED in statuses else OK
    doc = _header(cfg, "design", status)
    doc.update(design_document(designs) if designs else {})
    doc["search"] = meta
    write_json(out / "design.json", doc)
    return status


def cmd_fk(cfg: RobotConfig, out: Path, workers: int) -> str:
    robot = cfg.robot()
    A = cfg.actuation()
    pose = forward_kinematics(A, robot)
    doc = _header(cfg, "fk", OK)
    doc.update(
        actuation=A.as_dict(),
        position=pose.position,
        orientation=pose.orientation,
        pointing=pose.pointing,
        euler_xyz=pose.euler_xyz(),
    )
    write_json(out / "fk.json", doc)
    return OK


def cmd_ik(cfg: RobotConfig, out: Path, workers: int) -> str:
    robot = cfg.robot()
    ik = cfg.resolved["ik"]
    settings = cfg.ik_settings()
    opts = cfg.optimizer(workers)
    prev = cfg.actuation(ik["prev"], "ik.prev") if ik["prev"] is not None else None
    results = []
    for k, t in enumerate(cfg.ik_targets()):
        # each target gets its own stream so that solves stay reproducible in isolation
        o = replace(opts, seed=int(np.random.SeedSequence([opts.seed, k]).generate_state(1)[0]))
        r = inverse_kinematics(t, robot, prev, o, settings)
        results.append(r)
        if ik["chain"]:
            prev = r.actuation
    status = OK if all(r.reachable for r in results) else NON_CONVERGED
    doc = _header(cfg, "ik", status)
    doc["solutions"] = [
        {
            "status": OK if r.reachable else NON_CONVERGED,
            "actuation": r.actuation.as_dict(),
            "position_residual_mm": r.position_residual,
            "direction_residual_rad": r.direction_residual,
            "loss": r.loss,
            "evaluations": r.search.evaluations,
        }
        for r in results
    ]
    write_json(out / "ik.json", doc)
    write_csv(out / "ik_trace.csv", ["target", "generation", "loss"], ik_trace_rows(results))
    return status


def _cloud(cfg: RobotConfig, workers: int):
    w = cfg.resolved["workspace"]
    return sample_workspace(
        cfg.robot(), tuple(w["grid"]), cfg.seed if w["jitter"] else None,
        voxel=w["voxel"], q_p=w["q_p"], workers=workers,
    )


def cmd_workspace(cfg: RobotConfig, out: Path, workers: int) -> str:
    cloud = _cloud(cfg, workers)
    cloud.to_csv(out / "workspace_cloud.csv", FLOAT_FORMAT)
    doc = _header(cfg, "workspace", OK)
    doc.update(cloud.summary())
    doc["volume"] = cloud.volume
    doc["volume_unit"] = "cm^3"
    write_json(out / "workspace.json", doc)
    return OK


def cmd_statics(cfg: RobotConfig, out: Path, workers: int) -> str:
    st = cfg.resolved["statics"]
    seg = cfg.segment(st["segment"])
    lc = cfg.load_case()
    curve = solve_deflection(lc, seg, st["grid"])
    curve.to_csv(out / "statics.csv", FLOAT_FORMAT)
    load = recover_interaction_load(curve, lc, seg)
    doc = _header(cfg, "statics", OK)
    doc.update(
        tip=tip_from_deflection(curve),
        tip_angle_rad=float(curve.phi[-1]),
        tip_moment_Nmm=load.tip_moment,
        inner_moment_tip_Nmm=load.inner_moment_tip,
    )
    write_json(out / "statics.json", doc)
    return OK


def cmd_dexterity(cfg: RobotConfig, out: Path, workers: int) -> str:
    cloud = _cloud(cfg, workers)
    point = cfg.resolved["dexterity"]["point"]
    try:
        dex, status, note = dexterity(cloud, point), OK, None
    except EmptyVoxelError as exc:
        dex, status, note = None, INFEASIBLE, str(exc)
    doc = _header(cfg, "dexterity", status)
    doc.update(point=point, dexterity=dex, workspace=cloud.summary())
    if note:
        doc["reason"] = note
    write_json(out / "dexterity.json", doc)
    return status


COMMANDS = {
    "design": cmd_design,
    "fk": cmd_fk,
    "ik": cmd_ik,
    "workspace": cmd_workspace,
    "statics": cmd_statics,
    "dexterity": cmd_dexterity,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _resolve(args)
        args.out.mkdir(parents=True, exist_ok=True)
        status = COMMANDS[args.command](cfg, args.out, args.workers)
    except (CATRError, ValueError) as exc:
        print(f"catr: error: {exc}", file=sys.stderr)
        return 1
    print(f"catr {args.command}: {status}", file=sys.stderr)
    return EXIT[status]


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
