"""Time a full-horizon Scenario-1 run (kernel compile excluded)."""
import argparse
import time

from hessim.dispatch import ScenarioPolicy, default_specs, simulate_horizon
from hessim.profiles import MINUTES_PER_YEAR, synthetic_year


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--years", type=int, default=15)
    ap.add_argument("--scenario", default="s1_fixed_split")
    ap.add_argument("--trace", action="store_true", help="also fill the per-minute trace buffer")
    args = ap.parse_args()

    profiles = (synthetic_year("pv"), synthetic_year("load"))
    policy = ScenarioPolicy(id=args.scenario)
    t0 = time.perf_counter()
    simulate_horizon(policy, default_specs(), profiles, years=1)
    warm = time.perf_counter() - t0

    t0 = time.perf_counter()
    simulate_horizon(policy, default_specs(), profiles, years=args.years,
                     trace=args.trace, on_year=(lambda *a: None) if args.trace else None)
    elapsed = time.perf_counter() - t0
    steps = args.years * MINUTES_PER_YEAR
    print(f"warm-up (incl. compile/cache load): {warm:.2f} s")
    print(f"{args.scenario}: {steps:,} steps in {elapsed:.2f} s ({steps / elapsed / 1e6:.2f} M steps/s)")


if __name__ == "__main__":
    main()
