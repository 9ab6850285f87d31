"""SOC-window sweep for the three seasonal use cases, summarised per KPI."""
import argparse
import time

from hessim.config import RunConfig
from hessim.sweep import USE_CASES, SweepInputs, best_per_kpi, enumerate_cases, rank, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--years", type=int, default=15)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--limit", type=int, help="first N cases per use case (quick look)")
    ap.add_argument("--store", default="sweep_store.jsonl", help="resumable result store")
    args = ap.parse_args()

    config = RunConfig.load(args.config, {"years": args.years})
    pv, load = config.profiles()
    inputs = SweepInputs(pv=pv, load=load, specs=config.specs(), scaling=config.scaling(),
                         aging=config.aging(), tariff=config.tariff(), cost=config.costs(),
                         rates=config.rates(), years=args.years)
    for uc in USE_CASES:
        cases = enumerate_cases(uc)[: args.limit]
        t0 = time.perf_counter()
        results = run_sweep(uc, inputs, workers=args.workers, store=args.store, cases=cases)
        print(f"\n{uc}  ({len(results)} cases, {time.perf_counter() - t0:.0f} s)")
        for kpi, entry in best_per_kpi(results).items():
            ranges = "; ".join(f"VRFB {c['vrfb']} LIB {c['lib']}" for c in entry["cases"][:4])
            extra = f" (+{len(entry['cases']) - 4})" if len(entry["cases"]) > 4 else ""
            print(f"  best {kpi:9s} {entry['best']:.4f}  {ranges}{extra}")
        top = rank(results, "obu_lib")[0]
        print(f"  top ranked: {top.case.label}  SCR {top.scr:.4f}  OBU_LIB {top.obu['lib']:.3f}")


if __name__ == "__main__":
    main()
