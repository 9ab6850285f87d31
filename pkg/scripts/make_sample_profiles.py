"""Write the synthetic sample year as timestamped CSVs plus a config that uses them.

The profiles are one representative week tiled over a 365-day year, with a
seasonal envelope on PV.  They are synthetic and only meant for smoke runs.
"""
import argparse
import json
from pathlib import Path

from hessim.profiles import synthetic_year, write_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="sample_data")
    ap.add_argument("--pv-peak", type=float, default=7600.0, help="PV peak power, W")
    ap.add_argument("--load-scale", type=float, default=1.0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pv = synthetic_year("pv", pv_peak_w=args.pv_peak)
    load = synthetic_year("load", load_scale=args.load_scale)
    write_profile(pv, out / "pv_minute.csv")
    write_profile(load, out / "load_minute.csv")
    config = {
        "profiles": {"pv": "pv_minute.csv", "load": "load_minute.csv",
                     "pv_native_step": 60, "load_native_step": 60},
        "scenarios": ["s1", "s2", "s3", "s5_vrfb", "s5_lib"],
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"PV   {pv.energy_wh / 1e6:.2f} MWh/yr -> {out / 'pv_minute.csv'}")
    print(f"load {load.energy_wh / 1e6:.2f} MWh/yr -> {out / 'load_minute.csv'}")
    print(f"config -> {out / 'config.json'}")


if __name__ == "__main__":
    main()
