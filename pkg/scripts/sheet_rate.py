"""Sweep a sheet configuration and fit zeta_delta against |log nu|^(-1/4).

    python scripts/sheet_rate.py [--config scripts/configs/sheet_sweep.toml] [--out DIR]
"""

import argparse
import json
from pathlib import Path

from nashlab.sweep import SweepConfig, fit_log_rate, run_sweep

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=HERE / "configs" / "sheet_sweep.toml")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    cfg = SweepConfig.from_toml(args.config)
    out = args.out or Path(cfg.output_dir)
    records = run_sweep(cfg, out)
    print(f"{'nu':>10} {'zeta':>12} {'zeta_delta':>12} {'E(T)/E(0)':>10} {'steps':>6}")
    for r in records:
        if not r.ok:
            print(f"{r.nu:10.4g}  failed: {r.error}")
            continue
        print(f"{r.nu:10.4g} {r.zeta_total:12.6g} {r.zeta_delta:12.6g} "
              f"{r.energyT / r.energy0:10.4f} {r.diagnostics['steps']:6d}")
    fit = fit_log_rate(records, cfg.delta)
    print(f"zeta_delta ~ {fit.slope:.4g} x + {fit.intercept:.4g}, x = |log nu|^(-1/4), R^2 = {fit.r_squared:.4f}")
    print(f"through the origin: slope {fit.slope_origin:.4g}, R^2 = {fit.r_squared_origin:.4f}")
    with open(out / "fit.json", "w") as fh:
        json.dump(fit.to_dict(), fh, indent=2)


if __name__ == "__main__":
    main()
