"""The irreversible-failure storyboard.

The agent spends its only key on the first door toward the blue gem; the
keys that would have opened everything else are locked away, so no gem is
reachable afterwards.  The particle filter (with rejuvenation) stays on the
blue gem; the plan-recognition baseline, which assumes goals stay
achievable, falls back to a uniform posterior.
"""
from invplan import bench, domains

bundle = domains.load_bundle("doors-keys-gems")
problem = bundle.problems["myopic"]
print("map (top row first):")
for row in domains.MYOPIC_MAP:
    print("   " + row)
actions = domains.DEMO_ACTIONS["myopic"]
print("\nobserved actions:", " ".join(actions))

traj = bench.scripted_trajectory(problem, actions, "blue",
                                 "doors-keys-gems", "myopic")

sips_snaps, _ = bench.run_method(
    "sips", traj,
    {"particles_per_goal": 30, "rejuvenation": True, "p_goal_move": 0.25,
     "heuristic": "maze"},
    seed=3)
prp_snaps, _ = bench.run_method("prp", traj, {"heuristic": "manhattan"},
                                seed=0)

labels = sorted(sips_snaps[0].probs)
print("\n      " + " | ".join(f"{'sips ' + l:>12}" for l in labels)
      + " || " + " | ".join(f"{'prp ' + l:>11}" for l in labels))
for s_sips, s_prp in zip(sips_snaps, prp_snaps):
    left = " | ".join(f"{s_sips.probs[l]:12.3f}" for l in labels)
    right = " | ".join(f"{s_prp.probs[l]:11.3f}" for l in labels)
    marker = "  <- key spent" if s_sips.t == 7 else ""
    print(f"t={s_sips.t:2d}  {left} || {right}{marker}")

print("\nAfter the unlock the filter is certain of blue, while the "
      "baseline has no\nconsistent completion for any gem and resets to "
      "uniform.")
