"""Shift residuals of the frequency layer with and without pooling.

With pooling off the layer commutes with every cyclic shift up to
round-off. Max pooling with phase gathering only keeps the stride-multiple
shifts on the coarse grid, and even those are not reproduced exactly, so
the residual is reported rather than asserted.

    python3 demos/equivariance_report.py [--trials 5]
"""
import argparse

from freqgan.evfreq import check_shift_equivariance
from freqgan.verify import toy_evfreq_factory


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--size", type=int, default=16)
    args = p.parse_args()
    for pooling in (False, True):
        r = check_shift_equivariance(toy_evfreq_factory(8, pooling), args.trials, size=args.size)
        worst = ", ".join(f"{v:.1e}" for v in r.per_trial)
        print(f"pooling {'on ' if pooling else 'off'}: max {r.max_residual:.3e}  per draw [{worst}]")


if __name__ == "__main__":
    main()
