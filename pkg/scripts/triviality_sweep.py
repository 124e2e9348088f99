"""Audit random nonconstant warps on compact bases against lambda in {0, -1}.

Prints one row per (seed, lambda) with the Einstein residual and verdict.
"""

import argparse

from finslercurv import audit, zoo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--grid", type=int, default=64)
    args = ap.parse_args()
    print(f"{'seed':>4} {'base':>4} {'lambda':>6} {'residual':>10} {'f range':>17}  verdict")
    for seed in range(args.seeds):
        base_dim = 1 + seed % 2
        w = zoo.random_periodic_warp(seed, base_dim=base_dim)
        for lam in (0.0, -1.0):
            r = audit.triviality_audit(w, lam, grid=args.grid, seed=seed)
            print(f"{seed:4d} {base_dim:4d} {lam:6.1f} {r.lambda_residual:10.3e} "
                  f"[{r.f_min:7.4f}, {r.f_max:7.4f}]  {r.verdict}")


if __name__ == "__main__":
    main()
