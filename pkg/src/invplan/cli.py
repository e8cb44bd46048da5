"""Command-line interface.

Subcommands: validate, plan, simulate, generate-dataset, infer, bench,
robustness, list-domains.  Exit codes: 0 success, 1 configuration or parse
error, 2 runtime failure.  Seeds are mandatory (explicit in configs or on
the command line); nothing is seeded from the wall clock.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import agent as agent_mod
from . import bench, domains, observation, pddl, planner, sips
from .bench import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _load_config(path):
    with open(path, "rb") as f:
        return tomllib.load(f)


def _resolve_problem(domain_arg, problem_arg):
    """Domain/problem resolution: bundle names or .pddl file paths."""
    if domain_arg in domains.BUNDLE_NAMES:
        bundle = domains.load_bundle(domain_arg)
        dom = bundle.domain
        if problem_arg in bundle.problems:
            return bundle, dom, bundle.problems[problem_arg], problem_arg
        text = Path(problem_arg).read_text(encoding="utf-8")
        return bundle, dom, pddl.parse_problem(text, dom), problem_arg
    dom = pddl.parse_domain(Path(domain_arg).read_text(encoding="utf-8"))
    text = Path(problem_arg).read_text(encoding="utf-8")
    return None, dom, pddl.parse_problem(text, dom), problem_arg


def _heuristic_for(bundle, dom, problem, kind):
    if bundle is not None:
        return bundle.heuristic(problem, kind)
    from .heuristics import make_heuristic
    return make_heuristic(kind or "goal_count", dom, problem)


def cmd_validate(args):
    try:
        dom = pddl.parse_domain(
            Path(args.domain).read_text(encoding="utf-8"))
    except pddl.PddlSyntaxError as e:
        print(f"{args.domain}:{e.line}:{e.col}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except pddl.PddlError as e:
        print(f"{args.domain}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.domain}: ok ({len(dom.operators)} operators)")
    status = EXIT_OK
    for ppath in args.problems:
        try:
            prob = pddl.parse_problem(Path(ppath).read_text(encoding="utf-8"),
                                      dom)
            print(f"{ppath}: ok ({len(prob.goals)} goals)")
        except pddl.PddlSyntaxError as e:
            print(f"{ppath}:{e.line}:{e.col}: {e}", file=sys.stderr)
            status = EXIT_CONFIG
        except pddl.PddlError as e:
            print(f"{ppath}: {e}", file=sys.stderr)
            status = EXIT_CONFIG
    return status


def cmd_plan(args):
    bundle, dom, problem, _ = _resolve_problem(args.domain, args.problem)
    goal = problem.goals[args.goal_index]
    h = _heuristic_for(bundle, dom, problem, args.heuristic)
    budget = None if args.budget < 0 else args.budget
    if args.gamma > 0:
        rng = np.random.default_rng(args.seed)
        plan, stats = planner.probabilistic_astar(
            problem.init, goal, h, args.gamma, budget, rng, dom,
            problem.objects)
    else:
        plan, stats = planner.astar(problem.init, goal, h, dom,
                                    problem.objects, budget=budget)
    for step in plan.steps:
        print(step.action)
    print(json.dumps({
        "complete": plan.complete, "length": len(plan.steps),
        "nodes_expanded": stats.nodes_expanded,
        "budget": stats.budget, "found_goal": stats.found_goal,
    }, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args):
    bundle, dom, problem, pid = _resolve_problem(args.domain, args.problem)
    goal = problem.goals[args.goal_index]
    h = _heuristic_for(bundle, dom, problem, args.heuristic)
    params = agent_mod.AgentParams(r=args.r, q=args.q, gamma=args.gamma,
                                   heuristic=h)
    rng = np.random.default_rng(args.seed)
    name = bundle.name if bundle else dom.name
    traj = bench.agent_trajectory(problem, goal, params, args.t_max, rng,
                                  name, pid, seed=args.seed)
    bench.save_trajectory(traj, args.out)
    print(f"wrote {args.out} ({traj.T} states, goal '{traj.true_goal}')")
    return EXIT_OK


def cmd_generate_dataset(args):
    cfg = _load_config(args.config) if args.config else {}
    cfg = dict(cfg.get("dataset", cfg))
    for key in ("domain", "split", "n", "seed", "t_max", "problem"):
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            cfg[key] = v
    if "seed" not in cfg:
        raise ConfigError("a seed is required (config [dataset].seed or "
                          "--seed)")
    manifest = bench.generate_dataset(cfg, args.out)
    print(f"wrote {len(manifest['trajectories'])} trajectories to {args.out}")
    return EXIT_OK


def cmd_infer(args):
    traj = bench.load_trajectory(args.trajectory)
    mcfg = {
        "particles_per_goal": args.particles_per_goal,
        "ess_threshold": args.ess_threshold,
        "rejuvenation": args.rejuvenation,
        "p_goal_move": args.p_goal_move,
        "r": args.r, "q": args.q, "gamma": args.gamma,
        "alpha": args.alpha, "beta": args.beta,
        "discount": args.discount,
    }
    if args.vi_iters is not None:
        mcfg["vi_iters"] = args.vi_iters
    if args.heuristic:
        mcfg["heuristic"] = args.heuristic
    if args.no_noise:
        mcfg["flip_prob"] = 0.0
        mcfg["sigma"] = 0.0
    else:
        mcfg["flip_prob"] = args.flip_prob
        mcfg["sigma"] = args.sigma
    oracle_states = None
    if args.method == "birl-oracle" and args.oracle_trajectories:
        oracle_states = []
        for f in sorted(Path(args.oracle_trajectories).glob("traj-*.jsonl")):
            oracle_states.extend(bench.load_trajectory(f).states)
    snapshots, c0 = bench.run_method(args.method, traj, mcfg, args.seed,
                                     oracle_states=oracle_states)
    bench.snapshots_to_jsonl(snapshots, args.out)
    final = snapshots[-1]
    print(json.dumps({"out": str(args.out), "timesteps": final.t,
                      "setup_seconds": c0,
                      "final_probs": {k: final.probs[k]
                                      for k in sorted(final.probs)}},
                     sort_keys=True))
    return EXIT_OK


def cmd_bench(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if "seed" not in cfg:
        raise ConfigError("a seed is required ([seed] in config or --seed)")
    rows = bench.run_experiment(cfg, args.out)
    for row in rows:
        print(f"{row.domain}/{row.method}: "
              f"P(g|o) Q1-Q3 = {[round(p, 3) for p in row.p_true]}, "
              f"top-1 = {[round(p, 3) for p in row.top1]}, "
              f"N = {row.n_nodes:.0f}")
    print(f"metrics written to {Path(args.out) / 'metrics.csv'}")
    return EXIT_OK


def cmd_robustness(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if "seed" not in cfg:
        raise ConfigError("a seed is required ([seed] in config or --seed)")
    matrix = bench.robustness_grid(cfg, args.out)
    print(json.dumps({f"{t}->{a}": v for (t, a), v in sorted(matrix.items())},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_list_domains(args):
    out = []
    for name in domains.BUNDLE_NAMES:
        b = domains.load_bundle(name)
        out.append({
            "name": name,
            "problems": sorted(b.problems),
            "goal_count": b.goal_count,
            "default_heuristic": b.default_heuristic_kind,
            "operators": [op.name for op in b.domain.operators],
        })
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="invplan",
        description="Simulate boundedly-rational planning agents and infer "
                    "their goals online from observed states.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and check domain/problem files")
    v.add_argument("domain")
    v.add_argument("problems", nargs="*")
    v.set_defaults(fn=cmd_validate)

    pl = sub.add_parser("plan", help="search for a plan to one goal")
    pl.add_argument("--domain", required=True)
    pl.add_argument("--problem", required=True)
    pl.add_argument("--goal-index", type=int, default=0)
    pl.add_argument("--heuristic", default=None)
    pl.add_argument("--gamma", type=float, default=0.0,
                    help="search noise; 0 selects deterministic search")
    pl.add_argument("--budget", type=int, default=-1,
                    help="node budget; negative means unlimited")
    pl.add_argument("--seed", type=int, default=0)
    pl.set_defaults(fn=cmd_plan)

    sim = sub.add_parser("simulate", help="roll out the replanning agent")
    sim.add_argument("--domain", required=True)
    sim.add_argument("--problem", required=True)
    sim.add_argument("--goal-index", type=int, default=0)
    sim.add_argument("--r", type=int, default=2)
    sim.add_argument("--q", type=float, default=0.95)
    sim.add_argument("--gamma", type=float, default=0.1)
    sim.add_argument("--heuristic", default=None)
    sim.add_argument("--t-max", type=int, default=60)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True)
    sim.set_defaults(fn=cmd_simulate)

    gd = sub.add_parser("generate-dataset",
                        help="produce a trajectory dataset")
    gd.add_argument("--config", default=None)
    gd.add_argument("--domain", default=None)
    gd.add_argument("--problem", default=None)
    gd.add_argument("--split", default=None, choices=("optimal", "agent"))
    gd.add_argument("--n", type=int, default=None)
    gd.add_argument("--seed", type=int, default=None)
    gd.add_argument("--t-max", type=int, default=None)
    gd.add_argument("--out", required=True)
    gd.set_defaults(fn=cmd_generate_dataset)

    inf = sub.add_parser("infer", help="goal inference over one trajectory")
    inf.add_argument("--method", required=True, choices=bench.METHODS)
    inf.add_argument("--trajectory", required=True)
    inf.add_argument("--out", required=True)
    inf.add_argument("--seed", type=int, required=True)
    inf.add_argument("--particles-per-goal", type=int, default=10)
    inf.add_argument("--ess-threshold", type=float, default=0.25)
    inf.add_argument("--rejuvenation", action="store_true")
    inf.add_argument("--p-goal-move", type=float, default=0.25)
    inf.add_argument("--r", type=int, default=2)
    inf.add_argument("--q", type=float, default=0.95)
    inf.add_argument("--gamma", type=float, default=0.1)
    inf.add_argument("--heuristic", default=None)
    inf.add_argument("--flip-prob", type=float, default=0.05)
    inf.add_argument("--sigma", type=float, default=0.25)
    inf.add_argument("--no-noise", action="store_true",
                     help="score with a deterministic observation channel")
    inf.add_argument("--alpha", type=float, default=1.0)
    inf.add_argument("--beta", type=float, default=1.0)
    inf.add_argument("--discount", type=float, default=0.9)
    inf.add_argument("--vi-iters", type=int, default=None)
    inf.add_argument("--oracle-trajectories", default=None)
    inf.set_defaults(fn=cmd_infer)

    be = sub.add_parser("bench", help="run a full experiment from a config")
    be.add_argument("--config", required=True)
    be.add_argument("--seed", type=int, default=None)
    be.add_argument("--out", required=True)
    be.set_defaults(fn=cmd_bench)

    ro = sub.add_parser("robustness",
                        help="assumed-vs-true parameter grids")
    ro.add_argument("--config", required=True)
    ro.add_argument("--seed", type=int, default=None)
    ro.add_argument("--out", required=True)
    ro.set_defaults(fn=cmd_robustness)

    ld = sub.add_parser("list-domains", help="bundled domain metadata")
    ld.set_defaults(fn=cmd_list_domains)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, pddl.PddlError, FileNotFoundError, KeyError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
