"""Energy functionals of the reference configuration at three step sizes."""

import argparse
import dataclasses
import json

from sllb.config import load_config
from sllb.verify import check_energy_estimates, check_increment_moments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/reference.yaml")
    ap.add_argument("--paths", type=int, default=64)
    ap.add_argument("--out", default=None, help="optional JSON file for the reports")
    args = ap.parse_args()

    cfg = load_config(args.config)
    sim = dataclasses.replace(cfg.build_sim(), control_on=False)
    energy = check_energy_estimates(sim, args.paths, tuple(cfg.verify.energy_dt_levels), cfg.seed)
    print("dt levels:", energy["statistics"]["dt_levels"])
    for name, vals in energy["statistics"]["functionals"].items():
        print(f"  {name:12s} " + "  ".join(f"{v:10.5f}" for v in vals))
    inc = check_increment_moments(dataclasses.replace(sim, dt_max=cfg.verify.increment_dt),
                                  cfg.verify.increment_thetas, args.paths, cfg.seed)
    print(f"increment slope {inc['statistics']['slope']:.3f} (R^2 {inc['statistics']['r2']:.4f})")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"energy": energy, "increments": inc}, fh, indent=2, default=float)


if __name__ == "__main__":
    main()
