"""Gap planner facing one pedestrian walking straight at the ego.

Prints every candidate's fan angle, outside fraction, survival at the end of
the horizon and expected utility, then the chosen subgoal.

    python demos/head_on.py
"""

import math

from gapnav.planner import plan
from gapnav.prediction import AgentState

ego = AgentState(id="ego", position=(0.0, 5.0), velocity=(0.0, 0.0))
walker = AgentState(id=1, position=(5.0, 5.0), velocity=(-1.0, 0.0))
result = plan(ego, [walker], None, (10.0, 5.0))

print(f"{'alpha':>6} {'frac':>5} {'p_surv[-1]':>11} {'E[u]':>7}")
for k, score in enumerate(result.per_candidate):
    t = score.trajectory
    mark = "  <- chosen" if k == result.best_index else ""
    print(f"{math.degrees(t.fan_angle):6.0f} {t.outside_fraction:5.1f} "
          f"{score.survival.p_surv[-1]:11.4f} {score.expected_utility:7.3f}{mark}")
print("subgoal:", result.subgoal.round(3))
