"""Size of each warped Berwald component family as the warp amplitude grows.

Uses a constant-b Randers torus base (a Berwald base that is not Riemannian),
which is what makes the mixed family eq4 visible.
"""

import argparse

from finslercurv import warped, zoo

FAMILIES = ("eq11", "eq2", "eq3", "eq4", "eq5", "eq6", "eq7", "eq8")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'amplitude':>9} " + " ".join(f"{f:>9}" for f in FAMILIES) + "  closed-vs-brute")
    for amp in (0.0, 0.1, 0.5, 1.0):
        w = zoo.randers_base_warp(f"2 + {amp} * cos(theta)")
        r = warped.identity_suite(w, n_samples=args.samples, seed=args.seed)
        fam = r.berwald_family_max
        print(f"{amp:9.2f} " + " ".join(f"{fam[f]:9.2e}" for f in FAMILIES)
              + f"  {max(r.berwald_component_residuals.values()):.1e}")


if __name__ == "__main__":
    main()
