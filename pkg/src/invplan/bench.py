"""Experiment harness: datasets, method execution, metrics, serialization.

Trajectory files are JSON lines: the first line is a manifest (domain,
problem, goal label, provenance, seed), each further line one timestep with
sorted fact strings, fluent values, and the action taken (null on the final
state).  Metrics follow the quartile convention ceil(q*T/4), reporting the
posterior probability of the true goal and Top-1 rates (both chance-credit
and strict-argmax tie policies), plus start-up cost C0, marginal per-step
cost MC, average cost AC, and states visited N.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import agent as agent_mod
from . import baselines, domains, observation, pddl, sips
from .planner import astar

METHODS = ("sips", "birl-unbiased", "birl-oracle", "prp")


class ConfigError(Exception):
    pass


@dataclass
class Trajectory:
    domain: str  # bundle name
    problem_id: str
    problem: "pddl.ProblemDef"
    true_goal: str
    states: list  # s_1 .. s_T (one more state than action)
    actions: list  # a_1 .. a_{T-1}
    provenance: dict
    seed: int | None = None
    readings: list | None = None  # stored corrupted observations, if any

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("need exactly one more state than action")

    @property
    def T(self):
        return len(self.states)

    def observations(self):
        """What an observer sees: stored noisy readings or the exact states."""
        if self.readings is not None:
            return list(self.readings)
        return [observation.exact_observation(s) for s in self.states]

    def replay_check(self):
        s = self.states[0]
        for i, a in enumerate(self.actions):
            s = pddl.apply(s, a)
            if s != self.states[i + 1]:
                raise ValueError(f"trajectory does not replay at t={i + 2}")
        if self.true_goal not in {g.label for g in self.problem.goals}:
            raise ValueError("true goal not among the problem's goals")


def _state_record(t, facts, fluents, action):
    return {
        "t": t,
        "facts": sorted(pddl.atom_to_str(a) for a in facts),
        "fluents": {pddl.fluent_to_str(k): v for k, v in sorted(fluents.items())},
        "action": action,
    }


def save_trajectory(traj: Trajectory, path):
    path = Path(path)
    lines = [json.dumps({
        "domain": traj.domain,
        "problem": traj.problem_id,
        "true_goal": traj.true_goal,
        "provenance": traj.provenance,
        "seed": traj.seed,
    }, sort_keys=True)]
    source = traj.readings if traj.readings is not None else traj.states
    for i, s in enumerate(source):
        action = str(traj.actions[i]) if i < len(traj.actions) else None
        lines.append(json.dumps(
            _state_record(i + 1, s.facts, s.fluents, action), sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_fluents(d):
    return {pddl.str_to_atom(k): v for k, v in d.items()}


def load_trajectory(path, problem=None) -> Trajectory:
    """Read a trajectory file; resolves the problem from bundles by default.

    A ``problem`` override may be passed for files that reference external
    problem text (a path relative to the trajectory file).
    """
    path = Path(path)
    rows = [json.loads(line) for line in
            path.read_text(encoding="utf-8").splitlines() if line.strip()]
    manifest, steps = rows[0], rows[1:]
    if problem is None:
        pid = manifest["problem"]
        if pid.endswith(".pddl"):
            bundle = domains.load_bundle(manifest["domain"])
            problem = pddl.parse_problem(
                (path.parent / pid).read_text(encoding="utf-8"),
                bundle.domain)
        else:
            bundle = domains.load_bundle(manifest["domain"])
            problem = bundle.problems[pid]
    noisy = bool(manifest["provenance"].get("noise"))
    states, readings, actions = [], [], []
    for i, row in enumerate(steps):
        facts = frozenset(pddl.str_to_atom(s) for s in row["facts"])
        fluents = _parse_fluents(row["fluents"])
        if noisy:
            readings.append(observation.Observation(
                facts, {k: float(v) for k, v in fluents.items()}))
            states.append(observation.to_state(readings[-1]))
        else:
            states.append(pddl.State(facts, {k: int(v)
                                             for k, v in fluents.items()}))
        if row["action"] is not None:
            actions.append(pddl.parse_action(row["action"], problem.domain,
                                             problem.objects))
        elif i != len(steps) - 1:
            raise ValueError("only the final step may omit the action")
    traj = Trajectory(
        domain=manifest["domain"], problem_id=manifest["problem"],
        problem=problem, true_goal=manifest["true_goal"],
        states=states, actions=actions, provenance=manifest["provenance"],
        seed=manifest.get("seed"),
        readings=readings if noisy else None)
    if not noisy:
        traj.replay_check()
    return traj


# ---------------------------------------------------------------------------
# Trajectory construction
# ---------------------------------------------------------------------------

def optimal_trajectory(problem, goal, heuristic, domain_name,
                       problem_id, seed=None) -> Trajectory:
    plan, _ = astar(problem.init, goal, heuristic, problem.domain,
                    problem.objects)
    if not plan.complete:
        raise ValueError(f"goal '{goal.label}' is unreachable")
    states = [st.state for st in plan.steps] + [plan.goal_state]
    return Trajectory(domain=domain_name, problem_id=problem_id,
                      problem=problem, true_goal=goal.label, states=states,
                      actions=list(plan.actions()),
                      provenance={"kind": "optimal"}, seed=seed)


def agent_trajectory(problem, goal, params, t_max, rng, domain_name,
                     problem_id, seed=None) -> Trajectory:
    trace = agent_mod.simulate(problem, goal, params, t_max, rng)
    return Trajectory(
        domain=domain_name, problem_id=problem_id, problem=problem,
        true_goal=goal.label, states=list(trace.states),
        actions=list(trace.actions),
        provenance={"kind": "agent", "r": params.r, "q": params.q,
                    "gamma": params.gamma,
                    "heuristic": params.heuristic.kind},
        seed=seed)


def scripted_trajectory(problem, action_strs, goal_label, domain_name,
                        problem_id) -> Trajectory:
    states = [problem.init]
    actions = []
    for astr in action_strs:
        a = pddl.parse_action(astr, problem.domain, problem.objects)
        actions.append(a)
        states.append(pddl.apply(states[-1], a))
    return Trajectory(domain=domain_name, problem_id=problem_id,
                      problem=problem, true_goal=goal_label, states=states,
                      actions=actions, provenance={"kind": "external"})


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------

def generate_dataset(cfg: dict, out_dir) -> dict:
    """Produce a trajectory dataset directory with a manifest.

    cfg keys: domain, problem ("generate" or a bundled id), split ("optimal"
    or "agent"), n, seed; optional generate_params, agent params (r, q,
    gamma, heuristic), t_max, noise (flip_prob, sigma) to store corrupted
    observations.
    """
    for key in ("domain", "split", "n", "seed"):
        if key not in cfg:
            raise ConfigError(f"dataset config missing '{key}'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = domains.load_bundle(cfg["domain"])
    split = cfg["split"]
    if split not in ("optimal", "agent"):
        raise ConfigError(f"unknown split '{split}'")
    n = int(cfg["n"])
    seed = int(cfg["seed"])
    t_max = int(cfg.get("t_max", 60))
    hkind = cfg.get("heuristic", bundle.default_heuristic_kind)
    gen_params = dict(cfg.get("generate_params", {}))
    problem_cfg = cfg.get("problem", "generate")
    noise_cfg = cfg.get("noise")
    files = []
    skipped = 0
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        if problem_cfg == "generate":
            try:
                problem = domains.generate_problem(cfg["domain"], rng,
                                                   **gen_params)
            except domains.GenerationError as e:
                skipped += 1
                print(f"warning: skipping instance {i}: {e}")
                continue
            pid = f"problem-{i:03d}.pddl"
            (out / pid).write_text(pddl.problem_to_str(problem) + "\n",
                                   encoding="utf-8")
        else:
            problem = bundle.problems[problem_cfg]
            pid = problem_cfg
        goal = problem.goals[i % len(problem.goals)]
        h = domains.make_heuristic(cfg["domain"], hkind, problem.domain,
                                   problem)
        if split == "optimal":
            traj = optimal_trajectory(problem, goal, h, cfg["domain"], pid,
                                      seed=seed + i)
        else:
            params = agent_mod.AgentParams(
                r=int(cfg.get("r", 2)), q=float(cfg.get("q", 0.95)),
                gamma=float(cfg.get("gamma", 0.1)), heuristic=h)
            traj = agent_trajectory(problem, goal, params, t_max, rng,
                                    cfg["domain"], pid, seed=seed + i)
        if noise_cfg:
            nm = observation.NoiseModel(float(noise_cfg.get("flip_prob", 0)),
                                        float(noise_cfg.get("sigma", 0)))
            vocab = observation.atom_vocabulary(problem)
            traj.readings = [observation.corrupt(s, nm, rng, vocab)
                             for s in traj.states]
            traj.provenance["noise"] = {"flip_prob": nm.flip_prob,
                                        "sigma": nm.sigma}
        fname = f"traj-{i:03d}.jsonl"
        save_trajectory(traj, out / fname)
        files.append(fname)
    manifest = {"config": {k: v for k, v in cfg.items()},
                "trajectories": files, "skipped": skipped}
    (out / "dataset.json").write_text(json.dumps(manifest, indent=2,
                                                 sort_keys=True) + "\n",
                                      encoding="utf-8")
    return manifest


def load_dataset(dataset_dir):
    out = Path(dataset_dir)
    manifest = json.loads((out / "dataset.json").read_text(encoding="utf-8"))
    return [load_trajectory(out / f) for f in manifest["trajectories"]]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def quartile_indices(T):
    return [math.ceil(q * T / 4) for q in (1, 2, 3)]


def _top1(probs, true_goal, strict):
    best = max(probs.values())
    winners = [g for g, p in probs.items() if p == best]
    if true_goal not in winners:
        return 0.0
    if strict:
        return 1.0 if len(winners) == 1 else 0.0
    return 1.0 / len(winners)


def quartile_metrics(snapshots, true_goal, T=None):
    """Accuracy read off the snapshots at the three quartile timesteps.

    Returns (p_true, top1_chance, top1_strict), each a 3-list over Q1..Q3.
    Top-1 with the strict policy requires the true goal to be the unique
    argmax; the chance-credit policy splits ties evenly.
    """
    T = T or len(snapshots)
    by_t = {s.t: s for s in snapshots}
    p_true, chance, strict = [], [], []
    for idx in quartile_indices(T):
        snap = by_t[idx]
        p_true.append(snap.probs.get(true_goal, 0.0))
        chance.append(_top1(snap.probs, true_goal, strict=False))
        strict.append(_top1(snap.probs, true_goal, strict=True))
    return p_true, chance, strict


@dataclass
class MetricsRow:
    domain: str
    method: str
    n_traj: int
    p_true: list  # means at Q1..Q3
    p_true_std: list
    top1: list  # chance-credit tie policy (headline)
    top1_std: list
    top1_strict: list
    top1_strict_std: list
    c0_s: float
    c0_s_std: float
    mc_s: float
    mc_s_std: float
    ac_s: float
    ac_s_std: float
    n_nodes: float
    n_nodes_std: float

    CSV_FIELDS = (
        ["domain", "method", "n_traj"]
        + [f"p_true_q{i}" for i in (1, 2, 3)]
        + [f"p_true_q{i}_std" for i in (1, 2, 3)]
        + [f"top1_q{i}" for i in (1, 2, 3)]
        + [f"top1_q{i}_std" for i in (1, 2, 3)]
        + [f"top1_strict_q{i}" for i in (1, 2, 3)]
        + [f"top1_strict_q{i}_std" for i in (1, 2, 3)]
        + ["c0_s", "c0_s_std", "mc_s", "mc_s_std", "ac_s", "ac_s_std",
           "n", "n_std"]
    )

    def to_csv_dict(self):
        d = {"domain": self.domain, "method": self.method,
             "n_traj": self.n_traj}
        for i in range(3):
            d[f"p_true_q{i + 1}"] = self.p_true[i]
            d[f"p_true_q{i + 1}_std"] = self.p_true_std[i]
            d[f"top1_q{i + 1}"] = self.top1[i]
            d[f"top1_q{i + 1}_std"] = self.top1_std[i]
            d[f"top1_strict_q{i + 1}"] = self.top1_strict[i]
            d[f"top1_strict_q{i + 1}_std"] = self.top1_strict_std[i]
        d.update(c0_s=self.c0_s, c0_s_std=self.c0_s_std, mc_s=self.mc_s,
                 mc_s_std=self.mc_s_std, ac_s=self.ac_s,
                 ac_s_std=self.ac_s_std, n=self.n_nodes,
                 n_std=self.n_nodes_std)
        return d


def snapshots_to_jsonl(snapshots, path):
    lines = []
    for s in snapshots:
        lines.append(json.dumps({
            "t": s.t,
            "probs": {k: s.probs[k] for k in sorted(s.probs)},
            "ess": None if math.isnan(s.ess) else s.ess,
            "nodes": s.stats.nodes_expanded,
            "planner_calls": s.stats.planner_calls,
            "step_seconds": s.step_seconds,
        }, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_snapshots(path):
    rows = [json.loads(l) for l in
            Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
    out = []
    for r in rows:
        out.append(sips.PosteriorSnapshot(
            t=r["t"], probs=r["probs"],
            ess=float("nan") if r["ess"] is None else r["ess"],
            stats=sips.RunStats(nodes_expanded=r["nodes"],
                                planner_calls=r.get("planner_calls", 0)),
            step_seconds=r.get("step_seconds", 0.0)))
    return out


# ---------------------------------------------------------------------------
# Method execution
# ---------------------------------------------------------------------------

def _sips_config(problem, mcfg, bundle_name):
    hkind = mcfg.get("heuristic")
    h = domains.make_heuristic(
        bundle_name, hkind or domains._DEFAULT_HEURISTIC[bundle_name],
        problem.domain, problem)
    params = agent_mod.AgentParams(
        r=int(mcfg.get("r", 2)), q=float(mcfg.get("q", 0.95)),
        gamma=float(mcfg.get("gamma", 0.1)), heuristic=h)
    noise = observation.NoiseModel(
        flip_prob=float(mcfg.get("flip_prob", 0.05)),
        sigma=float(mcfg.get("sigma", 0.25)))
    rejuv = sips.RejuvenationConfig(
        enabled=bool(mcfg.get("rejuvenation", False)),
        goal_move_prob=float(mcfg.get("p_goal_move", 0.25)),
        temperature=float(mcfg.get("proposal_temperature", 1.0)))
    return sips.SipsConfig(
        particles_per_goal=int(mcfg.get("particles_per_goal", 10)),
        agent_params=params, noise=noise,
        ess_threshold=float(mcfg.get("ess_threshold", 0.25)),
        rejuvenation=rejuv)


class _ViSetupCache:
    """Per-problem value-iteration setups shared across trajectories."""

    def __init__(self):
        self.entries = {}

    def get(self, problem, mcfg, method, seed, oracle_states=None,
            bundle=None):
        key = (id(problem), method)
        if key not in self.entries:
            t0 = time.perf_counter()
            rng = np.random.default_rng(np.random.SeedSequence([seed, 999]))
            iters = int(mcfg.get("vi_iters",
                                 250_000 if method == "birl-unbiased"
                                 else 10_000))
            per_goal = max(1, iters // len(problem.goals))
            qfns = {}
            if method == "birl-unbiased":
                sampler = bundle.state_sampler(problem)
                for g in problem.goals:
                    qfns[g.label] = baselines.value_iteration(
                        problem, g, discount=float(mcfg.get("discount", 0.9)),
                        mode="async_uniform", iters=per_goal, rng=rng,
                        state_sampler=sampler)
            else:
                for g in problem.goals:
                    qfns[g.label] = baselines.value_iteration(
                        problem, g, discount=float(mcfg.get("discount", 0.9)),
                        mode="async_oracle", iters=per_goal, rng=rng,
                        oracle_states=oracle_states)
            self.entries[key] = (qfns, time.perf_counter() - t0)
        return self.entries[key]


def run_method(method, traj: Trajectory, mcfg: dict, seed, traj_index=0,
               vi_cache=None, oracle_states=None):
    """Run one inference method over one trajectory.

    Returns (snapshots, c0_seconds).
    """
    bundle = domains.load_bundle(traj.domain)
    problem = traj.problem
    if method == "sips":
        cfg = _sips_config(problem, mcfg, traj.domain)
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, traj_index]))
        t0 = time.perf_counter()
        ps = sips.init(problem, cfg, rng)
        c0 = time.perf_counter() - t0
        ps.stats.setup_seconds = c0
        snapshots = []
        for o in traj.observations():
            t1 = time.perf_counter()
            sips.step(ps, o)
            dt = time.perf_counter() - t1
            ps.stats.step_seconds += dt
            snap = sips.goal_posterior(ps)
            snap.step_seconds = dt
            snapshots.append(snap)
        return snapshots, c0
    if method in ("birl-unbiased", "birl-oracle"):
        vi_cache = vi_cache or _ViSetupCache()
        if method == "birl-oracle" and not oracle_states:
            oracle_states = traj.states
        qfns, c0 = vi_cache.get(problem, mcfg, method, seed,
                                oracle_states=oracle_states, bundle=bundle)
        snapshots = baselines.birl_posteriors(
            traj, qfns, float(mcfg.get("alpha", 1.0)), problem)
        return snapshots, c0
    if method == "prp":
        hkind = mcfg.get("heuristic") or bundle.default_heuristic_kind
        h = domains.make_heuristic(traj.domain, hkind, problem.domain,
                                   problem)
        t0 = time.perf_counter()
        cache = baselines.PrpCache(optimal_costs={})
        snapshots, cache = baselines.prp_posteriors(
            traj, problem, float(mcfg.get("beta", 1.0)), h, cache=cache)
        return snapshots, time.perf_counter() - t0
    raise ConfigError(f"unknown method '{method}'")


def run_experiment(cfg: dict, out_dir) -> list:
    """Run configured methods over a dataset; emit metrics CSV and logs."""
    for key in ("dataset", "methods", "seed"):
        if key not in cfg:
            raise ConfigError(f"experiment config missing '{key}'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trajectories = load_dataset(cfg["dataset"])
    seed = int(cfg["seed"])
    rows = []
    for mcfg in cfg["methods"]:
        method = mcfg.get("name")
        if method not in METHODS:
            raise ConfigError(f"unknown method '{method}'")
        vi_cache = _ViSetupCache()
        oracle_states = None
        if method == "birl-oracle":
            oracle_states = [s for t in trajectories for s in t.states]
        per_traj = {"p": [], "chance": [], "strict": [], "c0": [], "mc": [],
                    "ac": [], "n": []}
        failures = 0
        logdir = out / "snapshots" / method
        logdir.mkdir(parents=True, exist_ok=True)
        for i, traj in enumerate(trajectories):
            try:
                snapshots, c0 = run_method(method, traj, mcfg, seed,
                                           traj_index=i, vi_cache=vi_cache,
                                           oracle_states=oracle_states)
            except Exception as e:  # noqa: BLE001 - record and continue
                failures += 1
                print(f"warning: {method} failed on trajectory {i}: {e}")
                continue
            snapshots_to_jsonl(snapshots, logdir / f"traj-{i:03d}.jsonl")
            p, chance, strict = quartile_metrics(snapshots, traj.true_goal)
            per_traj["p"].append(p)
            per_traj["chance"].append(chance)
            per_traj["strict"].append(strict)
            step_secs = [s.step_seconds for s in snapshots]
            per_traj["c0"].append(c0)
            per_traj["mc"].append(float(np.mean(step_secs)))
            per_traj["ac"].append((c0 + float(np.sum(step_secs))) / traj.T)
            per_traj["n"].append(snapshots[-1].stats.nodes_expanded)
        if failures:
            print(f"note: {method} failed on {failures} trajectories")
        if not per_traj["p"]:
            continue
        p_arr = np.array(per_traj["p"])
        c_arr = np.array(per_traj["chance"])
        s_arr = np.array(per_traj["strict"])
        rows.append(MetricsRow(
            domain=trajectories[0].domain, method=method,
            n_traj=len(per_traj["p"]),
            p_true=list(p_arr.mean(axis=0)),
            p_true_std=list(p_arr.std(axis=0)),
            top1=list(c_arr.mean(axis=0)), top1_std=list(c_arr.std(axis=0)),
            top1_strict=list(s_arr.mean(axis=0)),
            top1_strict_std=list(s_arr.std(axis=0)),
            c0_s=float(np.mean(per_traj["c0"])),
            c0_s_std=float(np.std(per_traj["c0"])),
            mc_s=float(np.mean(per_traj["mc"])),
            mc_s_std=float(np.std(per_traj["mc"])),
            ac_s=float(np.mean(per_traj["ac"])),
            ac_s_std=float(np.std(per_traj["ac"])),
            n_nodes=float(np.mean(per_traj["n"])),
            n_nodes_std=float(np.std(per_traj["n"])),
        ))
    write_metrics_csv(rows, out / "metrics.csv")
    return rows


def write_metrics_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=MetricsRow.CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv_dict())


# ---------------------------------------------------------------------------
# Robustness grids
# ---------------------------------------------------------------------------

def robustness_grid(cfg: dict, out_dir) -> dict:
    """Cross product of assumed vs true agent parameters.

    cfg keys: domain, parameter (r | q | gamma | heuristic), true_values,
    assumed_values, n, seed; optional problem, t_max, base method config.
    Emits a Top-1-at-Q3 matrix (rows = true, columns = assumed).
    """
    for key in ("domain", "parameter", "true_values", "assumed_values", "n",
                "seed"):
        if key not in cfg:
            raise ConfigError(f"robustness config missing '{key}'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    param = cfg["parameter"]
    if param not in ("r", "q", "gamma", "heuristic"):
        raise ConfigError(f"unknown robustness parameter '{param}'")
    seed = int(cfg["seed"])
    matrix = {}
    for tv in cfg["true_values"]:
        dataset_cfg = {
            "domain": cfg["domain"], "split": "agent", "n": int(cfg["n"]),
            "seed": seed, "problem": cfg.get("problem", "generate"),
            "generate_params": cfg.get("generate_params", {}),
            "t_max": cfg.get("t_max", 60),
        }
        dataset_cfg[param] = tv
        ds_dir = out / f"data-true-{tv}"
        generate_dataset(dataset_cfg, ds_dir)
        trajectories = load_dataset(ds_dir)
        for av in cfg["assumed_values"]:
            mcfg = dict(cfg.get("method", {}))
            mcfg[param] = av
            q3s = []
            for i, traj in enumerate(trajectories):
                snapshots, _ = run_method("sips", traj, mcfg, seed,
                                          traj_index=i)
                _, chance, _ = quartile_metrics(snapshots, traj.true_goal)
                q3s.append(chance[2])
            matrix[(str(tv), str(av))] = float(np.mean(q3s))
    with open(out / "robustness.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["true\\assumed"] + [str(a)
                                             for a in cfg["assumed_values"]])
        for tv in cfg["true_values"]:
            writer.writerow([str(tv)] + [matrix[(str(tv), str(av))]
                                         for av in cfg["assumed_values"]])
    return matrix
