"""Inference baselines: Bayesian IRL over value iteration, and
plan-recognition-as-planning with cost-difference likelihoods.

Both emit the same posterior snapshot schema as the particle filter, so the
benchmark harness treats all methods interchangeably.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import pddl
from .planner import astar
from .sips import PosteriorSnapshot, RunStats
from .util import logsumexp

VI_MODES = ("sync", "async_uniform", "async_oracle")


@dataclass
class QFunction:
    """State-action values from (asynchronous) value iteration.

    Unvisited entries default to 0.  The indicator-reward MDP pays 1 once on
    entering a goal-satisfying state, which is absorbing (V = 0 afterwards).
    """

    values: dict  # state key -> {action string -> value}
    discount: float
    iterations: int
    mode: str
    visits: int = 0  # states visited, the platform-independent cost metric
    deltas: list = field(default_factory=list)  # per-sweep max-norm changes

    def value(self, skey):
        q = self.values.get(skey)
        return max(q.values()) if q else 0.0

    def q(self, skey, action_str):
        return self.values.get(skey, {}).get(action_str, 0.0)


def _backup(qf, s, goal, dom, objs):
    """Recompute Q(s, .) for all applicable actions from the current table."""
    entry = {}
    for a in pddl.available_actions(s, dom, objs):
        nxt = pddl.apply(s, a)
        if pddl.satisfies(nxt, goal):
            entry[str(a)] = 1.0
        else:
            entry[str(a)] = qf.discount * qf.value(nxt.key())
    qf.values[s.key()] = entry
    qf.visits += 1
    return entry


def value_iteration(problem, goal, discount=0.9, mode="sync", iters=10_000,
                    rng=None, state_sampler=None, oracle_states=None,
                    size_bound=10 ** 6) -> QFunction:
    """Value iteration for one goal's indicator-reward MDP.

    ``sync`` sweeps the enumerated reachable state space ``iters`` times and
    refuses state spaces above ``size_bound``.  The async modes update a
    single sampled state per iteration: uniform over a domain state sampler,
    or uniform over the states of an oracle trajectory set.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if mode not in VI_MODES:
        raise ValueError(f"unknown VI mode '{mode}'")
    dom, objs = problem.domain, problem.objects
    qf = QFunction(values={}, discount=discount, iterations=iters, mode=mode)
    if mode == "sync":
        states = pddl.reachable_states(problem.init, dom, objs,
                                       bound=size_bound)
        states = [s for s in states if not pddl.satisfies(s, goal)]
        states.sort(key=lambda s: tuple(sorted(map(pddl.atom_to_str, s.facts)))
                    + tuple(sorted(s.fluents.items())))
        for _ in range(iters):
            delta = 0.0
            for s in states:
                old = dict(qf.values.get(s.key(), {}))
                new = _backup(qf, s, goal, dom, objs)
                for a_str, v in new.items():
                    delta = max(delta, abs(v - old.get(a_str, 0.0)))
            qf.deltas.append(delta)
        return qf
    if mode == "async_uniform":
        if state_sampler is None or rng is None:
            raise ValueError("async_uniform needs a state sampler and rng")
        for _ in range(iters):
            s = state_sampler(rng)
            if not pddl.satisfies(s, goal):
                _backup(qf, s, goal, dom, objs)
            else:
                qf.visits += 1
        return qf
    # async_oracle: biased sampling over states seen in observed trajectories
    if not oracle_states or rng is None:
        raise ValueError("async_oracle needs oracle states and rng")
    pool = list(oracle_states)
    for _ in range(iters):
        s = pool[int(rng.integers(len(pool)))]
        if not pddl.satisfies(s, goal):
            _backup(qf, s, goal, dom, objs)
        else:
            qf.visits += 1
    return qf


def birl_posteriors(trajectory, qfns, alpha, problem) -> list:
    """Goal posteriors from Boltzmann action likelihoods over Q functions.

    ``trajectory`` provides aligned ``states``/``actions``; the posterior at
    snapshot t conditions on the actions taken before the t-th state.
    ``qfns`` maps goal label -> QFunction.
    """
    labels = [g.label for g in problem.goals]
    dom, objs = problem.domain, problem.objects
    vi_visits = sum(qfns[l].visits for l in labels)
    base_stats = RunStats(nodes_expanded=vi_visits)
    log_post = {l: 0.0 for l in labels}  # uniform prior, unnormalized
    snapshots = []
    states = trajectory.states
    actions = trajectory.actions
    for t in range(1, len(states) + 1):
        t0 = time.perf_counter()
        if t >= 2 and actions[t - 2] != pddl.NOOP:
            s = states[t - 2]
            a_str = str(actions[t - 2])
            avail = [str(a) for a in pddl.available_actions(s, dom, objs)]
            skey = s.key()
            for l in labels:
                qf = qfns[l]
                logits = np.array([alpha * qf.q(skey, a) for a in avail])
                log_post[l] += alpha * qf.q(skey, a_str) - logsumexp(logits)
        lz = logsumexp(np.array([log_post[l] for l in labels]))
        probs = {l: float(np.exp(log_post[l] - lz)) for l in labels}
        dt = time.perf_counter() - t0
        stats = base_stats.copy()
        stats.step_seconds = (snapshots[-1].stats.step_seconds if snapshots
                              else 0.0) + dt
        snapshots.append(PosteriorSnapshot(
            t=t, probs=probs, ess=float("nan"), stats=stats,
            step_seconds=dt))
    return snapshots


@dataclass
class PrpCache:
    optimal_costs: dict  # goal label -> optimal plan length from init
    completion_costs: list = field(default_factory=list)  # per timestep dict
    nodes_expanded: int = 0


def prp_posteriors(trajectory, problem, beta, heuristic,
                   cache=None) -> tuple:
    """Plan-recognition-as-planning posteriors.

    The likelihood of a goal decays exponentially (rate ``beta``) in the gap
    between the cheapest observation-consistent plan, built as (executed
    prefix) + (optimal completion from the current state), and the goal's
    optimal plan.  Goals admitting no completion get zero likelihood; when
    every goal is unreachable the posterior falls back to uniform.
    The heuristic should be admissible for the costs to be exact.
    """
    dom, objs = problem.domain, problem.objects
    cache = cache or PrpCache(optimal_costs={})
    if not cache.optimal_costs:
        for g in problem.goals:
            plan, stats = astar(problem.init, g, heuristic, dom, objs)
            cache.optimal_costs[g.label] = (
                len(plan.steps) if plan.complete else float("inf"))
            cache.nodes_expanded += stats.nodes_expanded
    snapshots = []
    cum_seconds = 0.0
    for t in range(1, len(trajectory.states) + 1):
        t0 = time.perf_counter()
        s = trajectory.states[t - 1]
        diffs = {}
        for g in problem.goals:
            plan, stats = astar(s, g, heuristic, dom, objs)
            cache.nodes_expanded += stats.nodes_expanded
            if plan.complete:
                total = (t - 1) + len(plan.steps)
                diffs[g.label] = total - cache.optimal_costs[g.label]
            else:
                diffs[g.label] = float("inf")
        cache.completion_costs.append(diffs)
        logits = np.array([-beta * diffs[g.label] if diffs[g.label] != float("inf")
                           else -float("inf") for g in problem.goals])
        if np.all(np.isneginf(logits)):
            probs = {g.label: 1.0 / len(problem.goals) for g in problem.goals}
        else:
            lz = logsumexp(logits)
            probs = {g.label: float(np.exp(lg - lz))
                     for g, lg in zip(problem.goals, logits)}
        dt = time.perf_counter() - t0
        cum_seconds += dt
        stats = RunStats(nodes_expanded=cache.nodes_expanded,
                         step_seconds=cum_seconds)
        snapshots.append(PosteriorSnapshot(
            t=t, probs=probs, ess=float("nan"), stats=stats, step_seconds=dt))
    return snapshots, cache
