"""Run the five EMS scenarios over the horizon and print KPI and economics tables."""
import argparse

from hessim.cli import simulate_scenario
from hessim.config import RunConfig, validate

SCENARIOS = ["s1_fixed_split", "s2_psoc_split", "s3_band_split", "s5_single_vrfb", "s5_single_lib"]


def fmt(x, spec):
    return format("-", ">" + spec.split(".")[0]) if x is None else format(x, spec)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--years", type=int, default=15)
    args = ap.parse_args()

    config = RunConfig.load(args.config, {"years": args.years})
    problems = validate(config)
    if problems:
        raise SystemExit("\n".join(problems))

    results = [simulate_scenario(config, s) for s in SCENARIOS]
    print(f"{'scenario':16s} {'SCR':>6s} {'SSR':>6s} {'GRF':>6s} {'OBU_V':>6s} {'OBU_L':>6s} {'EG kWh':>8s}")
    for r in results:
        k = r["kpis"]
        print(f"{r['scenario']:16s} {k.scr:6.3f} {k.ssr:6.3f} {k.grf:6.3f} "
              f"{k.obu['vrfb']:6.3f} {k.obu['lib']:6.3f} {k.eg:8.0f}")
    print()
    print(f"{'scenario':16s} {'invest':>8s} {'NPV':>9s} {'IRR':>7s} {'SPB':>6s} {'LCOE':>6s}")
    for r in results:
        e = r["economics"]
        print(f"{r['scenario']:16s} {e.investment:8.0f} {e.npv:9.0f} {fmt(e.irr, '7.3f')} "
              f"{fmt(e.spb, '6.1f')} {e.lcoe:6.3f}")


if __name__ == "__main__":
    main()
