#!/usr/bin/env python3
"""Build the default laboratory, run the distance study, write the report.

Equivalent to `imlab distance-study` but handy as a template for sweeps:
edit the config overrides below or pass --config / --eps-grid / --out.
"""

import argparse
import json
import pathlib
import sys

from imlab.config import build_lab, default_config, load_config
from imlab.perturbation_harness import rate_study


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="JSON config file; defaults otherwise")
    ap.add_argument("--eps-grid", help="comma-separated perturbation sizes")
    ap.add_argument("--out", default="out", help="output directory")
    args = ap.parse_args(argv)

    cfg = load_config(args.config) if args.config else default_config()
    lab = build_lab(cfg)
    grid = None
    if args.eps_grid:
        grid = tuple(float(x) for x in args.eps_grid.split(",") if x.strip())

    report = rate_study(lab, eps_grid=grid)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")

    for row, ps, pc in zip(report.rows, report.passes_sup, report.passes_c1theta):
        flag = "ok" if ps and pc else "FAIL"
        print(f"eps={row.eps:<8g} d_sup={row.d_sup:.3e} "
              f"d_c1theta={row.d_c1theta:.3e} {flag}")
    print(f"fitted_C_sup = {report.fitted_C_sup:.6g}")
    print(f"fitted_C_c1theta = {report.fitted_C_c1theta:.6g}")
    print(f"all_pass = {report.all_pass}  interpolation_ok = {report.interpolation_ok}")
    print(json.dumps({k: v for k, v in report.fits.items()}, indent=2))
    return 0 if report.all_pass and report.interpolation_ok else 2


if __name__ == "__main__":
    sys.exit(main())
