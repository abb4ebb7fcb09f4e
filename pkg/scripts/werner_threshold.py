"""Completeness of the four-projector model on p*singlet + (1-p)*I/4.

The quadrilateral slack is linear in p, so the LP should switch from complete
to incomplete at p = 1/sqrt(2). The script scans p, reports the LP verdict, the
exact-oracle verdict and the most violated quadrilateral, then bisects for the
switching point. The bisected switch lands a little above 1/sqrt(2): a
violation smaller than the 1e-7 feasibility threshold still counts as
complete.
"""

import argparse
import math

from rvrkit.entropy import make_singlet
from rvrkit.errors import NumericallyAmbiguous
from rvrkit.hilbert import DensityOperator, embed, maximally_mixed, spin_projector
from rvrkit.rvr import build_rvr, completeness_lp, hull_oracle, scan_quadrilaterals


def model(p: float):
    rho = DensityOperator(p * make_singlet().matrix + (1 - p) * maximally_mixed(4).matrix)
    a = [embed(spin_projector(t), 0, [2, 2]) for t in (0.0, 90.0)]
    b = [embed(spin_projector(t), 1, [2, 2]) for t in (225.0, 135.0)]
    return build_rvr([a[0], b[0], a[1], b[1]], rho, labels=["a1", "b1", "a2", "b2"])


def verdict(p: float) -> str:
    try:
        return completeness_lp(model(p)).status
    except NumericallyAmbiguous:
        return "ambiguous"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()

    print(f"{'p':>6}  {'LP':>10}  {'exact':>8}  {'min slack':>12}")
    for i in range(args.points):
        p = i / (args.points - 1)
        m = model(p)
        exact = "member" if hull_oracle(m).member else "outside"
        print(f"{p:6.3f}  {verdict(p):>10}  {exact:>8}  {scan_quadrilaterals(m)[0][1]:+12.9f}")

    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = (lo + hi) / 2
        v = verdict(mid)
        if v == "ambiguous":
            break
        lo, hi = (mid, hi) if v == "complete" else (lo, mid)
    print(f"switch between p = {lo:.9f} and {hi:.9f}; 1/sqrt(2) = {1 / math.sqrt(2):.9f}")


if __name__ == "__main__":
    main()
