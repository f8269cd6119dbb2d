"""One dense-crowd scenario per stack, same seed, metrics side by side.

    python demos/compare_stacks.py [density] [seed]
"""

import sys

from gapnav.metrics import compute_metrics
from gapnav.sim import PLANNERS, ScenarioConfig, run_scenario

density = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 7

print(f"density {density}, seed {seed}")
print(f"{'stack':9} {'outcome':8} {'time':>6} {'path':>6} {'coll':>6} {'svr':>6} {'force':>6}")
for name in PLANNERS:
    m = compute_metrics(run_scenario(ScenarioConfig(density=density, seed=seed, ego_planner=name)))
    print(f"{name:9} {m.outcome:8} {m.time_to_target:6.1f} {m.path_length:6.2f} "
          f"{m.collision_rate_moving:6.3f} {m.svr_moving:6.3f} {m.avg_social_force:6.3f}")
