"""Paired Monte Carlo comparison: avoidance on versus off.

Both batches reuse the same seeds and noise draws, so every difference
in the table comes from the advisories alone.
"""

from dataclasses import replace

from immcda.scenario import ScenarioConfig, run_monte_carlo

N = 100


def main() -> None:
    base = ScenarioConfig(seed=0)
    print(f"running {N} paired episodes (seeds 0..{N - 1})...")
    on = run_monte_carlo(base, N)
    off = run_monte_carlo(replace(base, cda_enabled=False), N)

    rows = [
        ("breach fraction", f"{on.breach_fraction:.3f}", f"{off.breach_fraction:.3f}"),
        ("min separation mean [m]", f"{on.min_separation_mean:7.0f}", f"{off.min_separation_mean:7.0f}"),
        ("min separation median [m]", f"{on.min_separation_median:7.0f}", f"{off.min_separation_median:7.0f}"),
        ("position RMSE, filter [m]", f"{on.rmse_position_est:7.1f}", f"{off.rmse_position_est:7.1f}"),
        ("position RMSE, raw [m]", f"{on.rmse_position_meas:7.1f}", f"{off.rmse_position_meas:7.1f}"),
        ("mode accuracy", f"{on.mode_accuracy:.3f}", f"{off.mode_accuracy:.3f}"),
    ]

    width = max(len(r[0]) for r in rows)
    print(f"\n  {'':{width}}  {'avoid on':>10}  {'avoid off':>10}")
    for name, a, b in rows:
        print(f"  {name:{width}}  {a:>10}  {b:>10}")

    print("\nevery scenario is spawned on a collision course, so the "
          "avoidance-off column breaches almost always; the filter quality "
          "is unchanged because the estimator never sees the advisories.")


if __name__ == "__main__":
    main()
