"""Parse a bundled domain, plan with A*, and roll out a noisy agent.

Walks through the layers bottom-up: states and ground actions, deterministic
search, the stochastic budget-limited search, and the replanning agent.
"""
import numpy as np

from invplan import agent, domains, pddl
from invplan.planner import astar, probabilistic_astar

bundle = domains.load_bundle("doors-keys-gems")
problem = bundle.problems["maze-1"]
print(f"domain '{bundle.domain.name}' with operators:",
      [op.name for op in bundle.domain.operators])
print(f"problem '{problem.name}', goals:",
      [g.label for g in problem.goals])

# ground actions available in the initial state
acts = pddl.available_actions(problem.init, bundle.domain, problem.objects)
print("\navailable at start:", [str(a) for a in acts])

# deterministic, optimal search for each gem
h = bundle.heuristic(problem)
for goal in problem.goals:
    plan, stats = astar(problem.init, goal, h, bundle.domain,
                        problem.objects)
    print(f"optimal plan to {goal.label}: {len(plan.steps)} actions, "
          f"{stats.nodes_expanded} nodes expanded")

# the same search made stochastic and budget-limited: partial plans
rng = np.random.default_rng(0)
goal = problem.goals[2]
plan, stats = probabilistic_astar(problem.init, goal, h, gamma=0.1, eta=25,
                                  rng=rng, dom=bundle.domain,
                                  objs=problem.objects)
print(f"\nbudget-limited search (25 nodes): reached a plan of "
      f"{len(plan.steps)} steps, complete={plan.complete}")

# a boundedly-rational agent interleaves such searches with execution
params = agent.AgentParams(r=2, q=0.95, gamma=0.1, heuristic=h)
trace = agent.simulate(problem, goal, params, t_max=50,
                       rng=np.random.default_rng(7))
print(f"\nagent rollout toward '{goal.label}': {len(trace.actions)} actions,"
      f" reached goal: {trace.stats.found_goal}")
print("replanned at timesteps:", sorted(trace.budgets),
      "with budgets", [trace.budgets[t] for t in sorted(trace.budgets)])
print("actions:", " ".join(str(a) for a in trace.actions))
