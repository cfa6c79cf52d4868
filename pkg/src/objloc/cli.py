"""Command-line interface: ``objloc {gen,run,bench,sweep}``.

Exit codes: 0 success, 1 runtime failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .association import AssociationPool, ClusterParams, decide, top_k, update
from .exceptions import InfeasibleSpecError, InvalidArgumentError, ObjlocError
from .maps import Pose, load_scene, map_to_dict, save_scene
from .pose import FULL_6DOF, MODES, YAW_ONLY, estimate_pose, is_success, pose_error
from .sim import (
    BenchConfig,
    DynamicSpec,
    ObservationSpec,
    SceneSpec,
    default_catalog,
    derive_observation,
    generate_scene,
    load_config,
    make_dynamic,
    random_gt_pose,
    run_sweep,
    run_trials,
    sweep_to_csv,
    trials_to_csv,
)

log = logging.getLogger("objloc")

DEFAULT_GAMMAS = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
DEFAULT_TOP_KS = (1, 5, 10, 15, 20)
DEFAULT_OBJECT_COUNTS = (3, 4, 5, 6, 8)


class BadInput(Exception):
    pass


def _engine_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("engine")
    g.add_argument("--gamma", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--cap-factor", type=int)
    g.add_argument("--stale-epochs", type=int)
    g.add_argument("--dominance-ratio", type=float)
    g.add_argument("--top-k", type=int)
    g.add_argument("--mode", choices=MODES)
    g.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="objloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic global map (and optional variants)")
    gen.add_argument("--objects", type=int, default=20)
    gen.add_argument("--classes", type=int, help="number of class labels (default: objects // 2)")
    gen.add_argument("--extent", type=float, nargs=3, default=(8.0, 6.0, 1.5), metavar=("X", "Y", "Z"))
    gen.add_argument("--min-separation", type=float, default=0.5)
    gen.add_argument("--descriptor-dim", type=int, default=16)
    gen.add_argument("--descriptor-spread", type=float, default=0.4)
    gen.add_argument("--config", help="JSON config; its scene/dynamic sections override the flags")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="global map path")
    gen.add_argument("--dynamic-out", help="also write a rearranged variant of the map here")
    gen.add_argument("--local-out", help="also write a simulated local observation (with gt_pose)")
    gen.add_argument("--observe", type=int, default=5, help="objects revealed in the local observation")
    gen.add_argument("--noise", type=float, default=0.0, help="position noise radius, meters")
    gen.add_argument("--clutter", type=float, default=0.0)

    run = sub.add_parser("run", help="relocalize one local map against a global map")
    run.add_argument("--global", dest="global_path", required=True)
    run.add_argument("--local", dest="local_path", required=True)
    run.add_argument("--gt-pose", help="JSON file with {rotation, translation}; default: local file's gt_pose")
    run.add_argument("--pool-out", help="write the final pool snapshot here")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", help="write the report here instead of stdout")
    _engine_args(run)

    for name, helptext in (("bench", "run the trial protocol once"),
                           ("sweep", "ablation grid over gamma, top-k and object count")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="CSV path (default: stdout)")
        _engine_args(p)
        if name == "sweep":
            p.add_argument("--gammas", type=float, nargs="+")
            p.add_argument("--top-ks", type=int, nargs="+")
            p.add_argument("--object-counts", type=int, nargs="+")
    return parser


def _params(args, base: ClusterParams = ClusterParams()) -> ClusterParams:
    overrides = {k: v for k, v in {
        "gamma": args.gamma,
        "delta": args.delta,
        "cap_factor": args.cap_factor,
        "stale_epochs": args.stale_epochs,
        "dominance_ratio": args.dominance_ratio,
    }.items() if v is not None}
    return replace(base, **overrides)


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    dynamic = None
    if args.config:
        cfg = load_config(args.config)
        scene, dynamic = cfg.scene, cfg.dynamic
    else:
        if args.objects < 2:
            raise BadInput("--objects must be at least 2")
        scene = SceneSpec(
            n_objects=args.objects,
            class_catalog=tuple(default_catalog(args.objects, args.classes)),
            extent=((0.0, 0.0, 0.0), tuple(args.extent)),
            descriptor_dim=args.descriptor_dim,
            class_descriptor_spread=args.descriptor_spread,
            seed=args.seed,
            position_noise_ceiling=args.min_separation / 2.0,
        )
    world, _ = generate_scene(scene)
    save_scene(world, args.out)
    if args.dynamic_out:
        dyn = dynamic or DynamicSpec(seed=args.seed)
        save_scene(make_dynamic(world, dyn), args.dynamic_out)
    if args.local_out:
        rng = np.random.default_rng(args.seed)
        gt = random_gt_pose(rng, YAW_ONLY)
        obs = ObservationSpec((args.observe,), position_noise_radius=args.noise,
                              clutter_rate=args.clutter, gt_pose=gt, seed=args.seed)
        local, _ = derive_observation(world, obs, 1)
        save_scene(local, args.local_out, {"gt_pose": gt.to_dict()})
    return 0


def cmd_run(args) -> int:
    global_map = load_scene(args.global_path)
    local_map = load_scene(args.local_path)
    params = _params(args)
    mode = args.mode or FULL_6DOF
    k = args.top_k or 10
    gt = None
    if args.gt_pose:
        gt = Pose.from_dict(json.loads(Path(args.gt_pose).read_text(encoding="utf-8")))
    else:
        raw = json.loads(Path(args.local_path).read_text(encoding="utf-8"))
        if raw.get("gt_pose"):
            gt = Pose.from_dict(raw["gt_pose"])

    pool = update(AssociationPool(params), global_map, local_map, local_map.ids)
    chosen = decide(pool)
    report = {
        "status": "decided" if chosen else "ambiguous",
        "pool_size": len(pool),
        "top": [{"pairs": [list(p) for p in s.pairs], "score": s.score} for s in top_k(pool, k)],
    }
    if chosen is not None:
        report["decided"] = {"pairs": [list(p) for p in chosen.pairs], "score": chosen.score}
        est = estimate_pose(chosen, global_map, local_map, mode)
        report["pose"] = est.pose.to_dict()
        report["rms_residual"] = est.rms_residual
        report["mode"] = mode
        if gt is not None:
            rot, trans = pose_error(est.pose, gt)
            report["errors"] = {"rot_err_deg": rot, "trans_err_m": trans, "success": is_success(rot, trans)}
    if args.pool_out:
        Path(args.pool_out).write_text(json.dumps(pool.to_dict(), indent=1) + "\n", encoding="utf-8")
    _emit(json.dumps(report, indent=1) + "\n", args.out)
    return 0


def _bench_config(args) -> BenchConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, scene=replace(cfg.scene, seed=args.seed),
                      observation=replace(cfg.observation, seed=args.seed))
    return replace(
        cfg,
        engine=_params(args, cfg.engine),
        top_k=args.top_k or cfg.top_k,
        n_trials=args.trials or cfg.n_trials,
        mode=args.mode or cfg.mode,
    )


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    results = run_trials(cfg.scene, cfg.observation, cfg.dynamic, cfg.engine, cfg.top_k,
                         cfg.n_trials, cfg.mode, args.jobs)
    _emit(trials_to_csv(results), args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _bench_config(args)
    grid = cfg.sweep
    gammas = args.gammas or grid.get("gamma", DEFAULT_GAMMAS)
    top_ks = args.top_ks or grid.get("top_k", DEFAULT_TOP_KS)
    counts = args.object_counts or grid.get("object_counts", DEFAULT_OBJECT_COUNTS)
    for g in gammas:
        ClusterParams(gamma=g)
    if any(k < 1 for k in top_ks):
        raise BadInput("top-k values must be >= 1")
    rows = run_sweep(cfg.scene, cfg.observation, cfg.dynamic, cfg.engine, gammas, top_ks, counts,
                     cfg.n_trials, cfg.mode, args.jobs)
    _emit(sweep_to_csv(rows), args.out)
    return 0


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    level = os.environ.get("OBJLOC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (BadInput, InvalidArgumentError, InfeasibleSpecError, FileNotFoundError,
            IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"objloc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ObjlocError, OSError) as exc:
        print(f"objloc {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
