#!/usr/bin/env python3
"""Scan gap margins over Lipschitz budgets and spectral cuts.

Prints, for each L_F on a grid, the smallest admissible m in the default
spectrum and the margins at that cut, then shows how multiplicative
eigenvalue perturbations erode the margins at the default cut. Useful for
picking (m, L_F) pairs before a long run.
"""

import argparse
import sys

from imlab.config import default_config
from imlab.gap_analysis import check_gap, find_admissible_m, margin_erosion


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=0.0)
    ap.add_argument("--eps-max", type=float, default=0.5,
                    help="largest multiplicative spectral perturbation")
    args = ap.parse_args(argv)

    cfg = default_config()
    lam = cfg.spectral.limit_eigenvalues()

    print(f"spectrum: lambda_i = {lam[0]:g} * i^2, N = {lam.size}")
    print(f"{'L_F':>8}  {'m':>3}  {'margin_gap':>12}  {'margin_strength':>16}")
    for lf in (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0):
        m = find_admissible_m(lam, lf, args.kappa, args.alpha)
        if m is None:
            print(f"{lf:>8g}  {'-':>3}  no admissible cut")
            continue
        _, (mg, ms) = check_gap(lam[m - 1], lam[m], lf, args.kappa, args.alpha)
        print(f"{lf:>8g}  {m:>3}  {mg:>12.4f}  {ms:>16.4f}")

    m = cfg.spectral.m
    lf = cfg.nonlinearity.lf
    print(f"\nerosion at the default cut m={m}, L_F={lf:g}, "
          f"eigenvalues scaled by 1+eps:")
    spectra = [
        (f"eps={e:g}", lam[m - 1] * (1 + e), lam[m] * (1 + e))
        for e in (0.0, 0.1, 0.25, args.eps_max)
    ]
    rows = margin_erosion(spectra, lf, args.kappa, args.alpha)
    for label, mg, ms, ok in rows:
        print(f"{label:>10}  margin_gap={mg:>10.4f}  "
              f"margin_strength={ms:>10.4f}  {'ok' if ok else 'FAIL'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
