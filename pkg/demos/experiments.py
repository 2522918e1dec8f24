"""
Policy comparison over the demand sweeps
========================================

The hisam policy against fixed and demand-driven authentication schedules.  Each point
averages 10 seeds; this takes under a minute.
"""

from hisam.sim import POLICIES, Scenario, experiment_grid

base = Scenario()
for sweep in ("mean", "variance", "size"):
    print("\n%s sweep" % sweep)
    print("%8s %-14s %12s %10s %10s %8s" % ("value", "policy", "loss", "detect[s]", "workload", "evicted"))
    for rec in experiment_grid(base, sweep):
        print("%8g %-14s %12.4f %10.4f %10.1f %8.1f"
              % (rec.sweep_value, rec.policy, rec.population_loss,
                 rec.mean_detection_time, rec.total_workload, rec.evicted))

# fixed_high saturates the population cap, so its loss is infinite by design
print("\npolicies:", ", ".join(POLICIES))
