"""Run one full episode and narrate what happened step by step.

Prints a compact timeline: estimated mode, separation, and any advisory
issued, then closing statistics. Rerun with a different seed to watch a
different encounter.
"""

import sys

import numpy as np

from immcda.scenario import ScenarioConfig, run_episode

MODE_NAMES = {1: "straight", 2: "left", 3: "right"}


def main() -> None:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    config = ScenarioConfig(seed=seed)
    trace = run_episode(config)

    print(f"episode seed {seed}: {config.steps} steps of {config.dt:.0f} s, "
          f"protected radius {config.r_safe:.0f} m")
    print(f"intruder spawns {trace.separation[0]:.0f} m out\n")

    print("  k  sep [m]   est mode   advisory")
    print("  -- -------  ---------  --------")
    for k in range(len(trace.separation)):
        advisory = ""
        if trace.trigger_j[k] > 0:
            advisory = (f"turn {np.degrees(trace.advisory_theta[k]):+.1f} deg "
                        f"(threat in {trace.trigger_j[k]} steps)")
        marker = " <== breach" if trace.separation[k] < config.r_safe else ""
        if k % 5 == 0 or advisory or marker:
            print(f"  {k:>2} {trace.separation[k]:7.0f}  "
                  f"{MODE_NAMES[trace.est_mode[k]]:>9}  {advisory}{marker}")

    err = np.hypot(trace.est[:, 0] - trace.truth[:, 0],
                   trace.est[:, 2] - trace.truth[:, 2])
    meas_err = np.hypot(trace.z[:, 0] - trace.truth[:, 0],
                        trace.z[:, 1] - trace.truth[:, 2])
    print(f"\nminimum separation: {trace.separation.min():.0f} m "
          f"({'breached' if trace.separation.min() < config.r_safe else 'clear'})")
    print(f"advisories issued:  {int(np.sum(trace.trigger_j > 0))}")
    print(f"mean position error: filter {err.mean():.1f} m, "
          f"raw measurement {meas_err.mean():.1f} m")


if __name__ == "__main__":
    main()
