"""Fit the Einstein constant of R x_{e^t} R^n2 and evaluate mu along t."""

import argparse

import numpy as np

from finslercurv import curvature as cv
from finslercurv import warped, zoo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-n2", type=int, default=4)
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for n2 in range(1, args.max_n2 + 1):
        w = zoo.hyperbolic_warped(n2)
        fit = cv.einstein_fit(w, w.random_samples(args.samples, seed=args.seed))
        ts = np.linspace(-1, 1, 9)
        mu = max(abs(warped.compute_mu(w, -float(n2), [t])) for t in ts)
        print(f"n2={n2}: lambda in [{fit.lambdas.min():+.10f}, {fit.lambdas.max():+.10f}]  "
              f"residual {fit.max_residual:.2e}  max |mu| {mu:.2e}")


if __name__ == "__main__":
    main()
