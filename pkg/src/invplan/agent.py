"""Boundedly-rational planning agent: budgets, replanning, action selection.

The agent interleaves search and execution: it plans with a stochastic,
budget-limited search (the budget drawn from a negative binomial), executes
the resulting partial plan, and replans whenever execution runs past the plan
or reaches a state the plan did not predict.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import pddl
from .heuristics import Heuristic
from .planner import (PartialPlan, PlanStep, SearchStats, empty_plan,
                      probabilistic_astar)


class PlanInconsistencyError(Exception):
    """The plan does not cover (t, s_t); indicates a caller bug."""


@dataclass(frozen=True)
class AgentParams:
    r: int  # maximum failure count of the budget distribution
    q: float  # continuation probability per expanded node
    gamma: float  # search noise temperature
    heuristic: Heuristic

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must be in (0, 1)")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")


@dataclass
class AgentTrace:
    """One simulated rollout.

    ``states[i]`` is the state at timestep ``i+1``; there is one more state
    than action (the state reached by the final action).  ``plans[i]`` is the
    plan in force at timestep ``i+1``; ``budgets`` maps replan timesteps to
    the sampled node budget.
    """

    goal: "pddl.GoalSpec"
    states: list
    actions: list
    plans: list
    budgets: dict
    stats: SearchStats = field(default_factory=SearchStats)

    def replay_check(self, init):
        """Verify the trace replays through the transition function."""
        s = init
        for i, a in enumerate(self.actions):
            if s != self.states[i]:
                raise PlanInconsistencyError(f"state mismatch at t={i + 1}")
            s = pddl.apply(s, a)
        if s != self.states[-1]:
            raise PlanInconsistencyError("final state mismatch")

    def to_jsonable(self):
        return {
            "goal": self.goal.label,
            "states": [
                {
                    "facts": sorted(pddl.atom_to_str(a) for a in s.facts),
                    "fluents": {pddl.fluent_to_str(k): v
                                for k, v in sorted(s.fluents.items())},
                }
                for s in self.states
            ],
            "actions": [str(a) for a in self.actions],
            "budgets": {str(t): b for t, b in sorted(self.budgets.items())},
        }


def sample_goal(problem, rng):
    """Uniform draw from the problem's candidate goal set."""
    return problem.goals[int(rng.integers(len(problem.goals)))]


def sample_budget(r, q, rng) -> int:
    """Number of successes (prob q each) before the r-th failure.

    Mean r*q/(1-q); for r=2, q=0.95 the average budget is 38 nodes.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not 0.0 <= q < 1.0:
        raise ValueError("q must be in [0, 1)")
    if q == 0.0:
        return 0
    return int(rng.negative_binomial(r, 1.0 - q))


def needs_replan(t, s_t, p_prev) -> bool:
    """The replanning trigger: past the plan's end, or an unpredicted state."""
    step = p_prev.step_at(t)
    return step is None or step.state != s_t


def replan_with_budget(t, s_t, p_prev, goal, params, problem, eta, rng):
    """Extend ``p_prev`` at ``t`` by a fresh search capped at ``eta`` nodes."""
    fresh, stats = probabilistic_astar(
        s_t, goal, params.heuristic, params.gamma, eta, rng,
        problem.domain, problem.objects, start_time=t)
    if not fresh.steps:
        # Search made no progress (or the goal already holds): idle one step
        # and let the trigger fire again next timestep.
        fresh = PartialPlan(t, (PlanStep(s_t, pddl.NOOP),),
                            s_t, fresh.complete)
    return p_prev.truncated(t).extended(fresh), stats


def update_plan(t, s_t, p_prev, goal, params, problem, rng):
    """Extend or reuse the previous plan at timestep ``t``.

    Returns ``(plan, stats, budget)`` where ``budget`` is None when the
    previous plan was reused unchanged (no planner call).
    """
    if not needs_replan(t, s_t, p_prev):
        return p_prev, SearchStats(), None
    eta = sample_budget(params.r, params.q, rng)
    plan, stats = replan_with_budget(t, s_t, p_prev, goal, params, problem,
                                     eta, rng)
    return plan, stats, eta


def select_action(t, s_t, p_t):
    """The action stored at timestep ``t``; errors if the plan mispredicts."""
    step = p_t.step_at(t)
    if step is None:
        raise PlanInconsistencyError(f"plan does not cover timestep {t}")
    if step.state != s_t:
        raise PlanInconsistencyError(
            f"plan expects a different state at timestep {t}")
    return step.action


def simulate(problem, goal, params, t_max, rng) -> AgentTrace:
    """Roll the agent forward from the initial state.

    Stops after the action that first satisfies ``goal``, or after ``t_max``
    actions.  The trace records one more state than action.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    s = problem.init
    trace = AgentTrace(goal=goal, states=[], actions=[], plans=[], budgets={},
                       stats=SearchStats())
    plan = empty_plan(start=1)
    for t in range(1, t_max + 1):
        plan, stats, eta = update_plan(t, s, plan, goal, params, problem, rng)
        if eta is not None:
            trace.budgets[t] = eta
        trace.stats.nodes_expanded += stats.nodes_expanded
        a = select_action(t, s, plan)
        trace.states.append(s)
        trace.actions.append(a)
        trace.plans.append(plan)
        s = pddl.apply(s, a)
        if pddl.satisfies(s, goal):
            break
    trace.states.append(s)
    trace.stats.found_goal = pddl.satisfies(s, goal)
    return trace
