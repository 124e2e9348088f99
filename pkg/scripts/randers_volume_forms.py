"""Holmes-Thompson, Busemann-Hausdorff, max and min densities of |y| + b y1."""

import argparse

import numpy as np

from finslercurv import volume as vol
from finslercurv import zoo
from finslercurv.errors import IntegrationBudgetExceeded


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budget", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=2)
    args = ap.parse_args()
    print(f"{'b':>4} {'HT (MC)':>19} {'HT polar':>9} {'HT exact':>9} {'BH':>9} {'max':>9} {'min':>9}")
    for b in np.arange(1, 10) / 10:
        spec = zoo.randers_constant([b] + [0.0] * (args.dim - 1))
        x = np.zeros(args.dim)
        try:
            ht = vol.density_ht(spec, x, budget=args.budget, seed=args.seed)
            mc = f"{ht.value:9.5f} +- {ht.std_error:.1e}"
        except IntegrationBudgetExceeded:
            mc = f"{'over budget':>19}"
        polar = vol.density_ht(spec, x, method="polar", quad_order=256).value
        print(f"{b:4.1f} {mc} {polar:9.5f} {vol.ht_randers_closed_form(b, args.dim):9.5f} "
              f"{vol.density(spec, x, 'BH-randers'):9.5f} {vol.density(spec, x, 'max'):9.5f} "
              f"{vol.density(spec, x, 'min'):9.5f}")


if __name__ == "__main__":
    main()
