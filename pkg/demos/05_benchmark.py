"""A small end-to-end benchmark: dataset generation, methods, metrics CSV.

Writes everything under ./demo-output (safe to delete).  The same flow is
available from the command line via `invplan generate-dataset` and
`invplan bench --config <toml>`.
"""
from pathlib import Path

from invplan import bench

out = Path("demo-output")
dataset_cfg = {
    "domain": "block-words",
    "problem": "problem-1",
    "split": "agent",  # noisy replanning agents, not optimal demonstrations
    "n": 10,
    "seed": 42,
    "t_max": 40,
    "r": 2, "q": 0.95, "gamma": 0.1,
}
manifest = bench.generate_dataset(dataset_cfg, out / "dataset")
print(f"generated {len(manifest['trajectories'])} trajectories")

experiment_cfg = {
    "dataset": str(out / "dataset"),
    "seed": 7,
    "methods": [
        {"name": "sips", "particles_per_goal": 10, "ess_threshold": 0.25},
        {"name": "prp", "beta": 1.0},
        {"name": "birl-oracle", "vi_iters": 5000},
    ],
}
rows = bench.run_experiment(experiment_cfg, out / "results")

print(f"\n{'method':>12}  {'P(true)@Q3':>10}  {'top1@Q3':>8}  "
      f"{'C0':>6}  {'MC':>6}  {'AC':>6}  {'N':>7}")
for r in rows:
    print(f"{r.method:>12}  {r.p_true[2]:10.3f}  {r.top1[2]:8.3f}  "
          f"{r.c0_s:6.2f}  {r.mc_s:6.3f}  {r.ac_s:6.3f}  {r.n_nodes:7.0f}")
print(f"\nfull table: {out / 'results' / 'metrics.csv'}")
print(f"per-trajectory posterior logs: {out / 'results' / 'snapshots'}/")
