"""Online goal inference: filter a trajectory and watch the posterior move.

Simulates a noisy agent heading for one gem, then feeds the state sequence
to the particle filter one observation at a time.
"""
import numpy as np

from invplan import agent, bench, domains, observation, sips

bundle = domains.load_bundle("doors-keys-gems")
problem = bundle.problems["maze-1"]
h = bundle.heuristic(problem)
params = agent.AgentParams(r=2, q=0.95, gamma=0.1, heuristic=h)

true_goal = problem.goals[2]
traj = bench.agent_trajectory(problem, true_goal, params, 60,
                              np.random.default_rng(11),
                              "doors-keys-gems", "maze-1")
print(f"hidden goal: {traj.true_goal}; trajectory of {traj.T} states")

cfg = sips.SipsConfig(
    particles_per_goal=10,
    agent_params=params,
    noise=observation.NoiseModel(flip_prob=0.05, sigma=0.25),
    ess_threshold=0.25,
)
snapshots = sips.run(problem, traj.observations(), cfg,
                     np.random.default_rng(1))

labels = sorted(snapshots[0].probs)
print("\n t  " + "  ".join(f"{l:>8}" for l in labels) + "     ESS")
for s in snapshots:
    row = "  ".join(f"{s.probs[l]:8.3f}" for l in labels)
    print(f"{s.t:3d}  {row}  {s.ess:6.1f}")

final = snapshots[-1]
print(f"\ntop goal: {max(final.probs, key=final.probs.get)} "
      f"(true: {traj.true_goal}); planner nodes expanded: "
      f"{final.stats.nodes_expanded}")
