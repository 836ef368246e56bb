"""Command-line front end.

Subcommands:
    simulate    ground truth + observations to JSON lines
    assimilate  run assimilation cycles against a recorded observation file
    evaluate    score recorded posteriors against a recorded trajectory
    run         full pipeline: simulate, assimilate, score, write metrics
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import worldsim
from .assimilation import Observation, assimilate_window
from .deselby import DeselbyState
from .experiment import (ExperimentConfig, information_score, run_experiment,
                         write_snapshot)
from .gridmodel import predator_prey_spec
from .hamiltonian import build_hamiltonian


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed]
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "cycles", None):
        cfg.cycles = args.cycles
    if getattr(args, "grid", None):
        w, _, hgt = args.grid.partition("x")
        cfg.width, cfg.height = int(w), int(hgt)
    if getattr(args, "tol", None):
        cfg.rel_tol = args.tol
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = predator_prey_spec(cfg.width, cfg.height, cfg.rates(), cfg.boundary)
    order = worldsim.species_major_order(cfg.width * cfg.height)
    for seed in cfg.seeds:
        rng_t = worldsim.trajectory_stream(seed)
        rng_o = worldsim.observation_stream(seed)
        world = worldsim.sample_initial(cfg.prior_lambdas(), rng_t)
        tpath = out / f"trajectory_seed{seed}.jsonl"
        opath = out / f"observations_seed{seed}.jsonl"
        with open(tpath, "w") as tf, open(opath, "w") as of:
            worldsim.write_trajectory_record(tf, world)
            for _ in range(cfg.cycles):
                world = worldsim.advance(world, spec,
                                         world.time + cfg.window_t, rng_t)
                omega = worldsim.observe(world, cfg.p_observe, cfg.p_detect,
                                         rng_o, index_order=order)
                worldsim.write_trajectory_record(tf, world)
                worldsim.write_observation_record(of, world.time, omega)
        print(f"wrote {tpath} and {opath}")
    return 0


def cmd_assimilate(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = predator_prey_spec(cfg.width, cfg.height, cfg.rates(), cfg.boundary)
    h = build_hamiltonian(spec)
    belief = cfg.prior_state()
    ppath = out / "posteriors.jsonl"
    with open(args.observations) as fh, open(ppath, "w") as pf:
        for line in fh:
            rec = json.loads(line)
            omega = [Observation(o["index"], o["m"], o["r"])
                     for o in rec["obs"]]
            belief, diag = assimilate_window(
                belief, omega, h, cfg.window_t, rel_tol=cfg.rel_tol,
                max_order=cfg.max_order, prune_n=cfg.prune_n,
                neg_tol=cfg.neg_tol)
            pf.write(json.dumps({
                "t": rec["t"],
                "lambdas": [round(float(v), 12) for v in belief.lambdas],
                "deltas": belief.deltas.tolist(),
                **diag.to_record(),
            }) + "\n")
    print(f"wrote {ppath}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(args.trajectory) as fh:
        truth_records = [json.loads(line) for line in fh]
    truth_by_t = {round(r["t"], 9): np.array(r["counts"], dtype=np.int64)
                  for r in truth_records}
    mpath = out / "scores.csv"
    with open(args.posteriors) as fh, open(mpath, "w", newline="") as mf:
        w = csv.writer(mf)
        w.writerow(["t", "assimilated_bits"])
        for line in fh:
            rec = json.loads(line)
            counts = truth_by_t.get(round(rec["t"], 9))
            if counts is None:
                print(f"no truth record at t={rec['t']}", file=sys.stderr)
                return 1
            state = DeselbyState(np.array(rec["lambdas"]),
                                 np.array(rec["deltas"], dtype=np.int64))
            score = information_score(state, worldsim.WorldState(counts,
                                                                 rec["t"]))
            w.writerow([rec["t"], f"{score:.12g}"])
    print(f"wrote {mpath}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = run_experiment(cfg, progress=not args.quiet)
    print(f"wrote {out / 'metrics.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fockabm",
                                description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_obs=False, with_traj=False):
        sp.add_argument("--config", help="flat JSON experiment config")
        sp.add_argument("--seed", type=int, help="single seed override")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--cycles", type=int, help="cycle count override")
        sp.add_argument("--grid", help="grid size as WxH, e.g. 16x16")
        sp.add_argument("--tol", type=float, help="series relative tolerance")
        if with_obs:
            sp.add_argument("observations",
                            help="observation JSON-lines file")
        if with_traj:
            sp.add_argument("trajectory", help="trajectory JSON-lines file")
            sp.add_argument("posteriors", help="posterior JSON-lines file")

    sp = sub.add_parser("simulate", help="generate truth and observations")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("assimilate", help="assimilate recorded observations")
    common(sp, with_obs=True)
    sp.set_defaults(func=cmd_assimilate)

    sp = sub.add_parser("evaluate", help="score recorded posteriors")
    common(sp, with_traj=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("run", help="full experiment pipeline")
    common(sp)
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
