"""CHSH optimum for cos(eta)|up,down> - sin(eta)|down,up> across eta.

Prints the search result next to 2*sqrt(1 + sin^2(2 eta)) and the entropy of
one party, so the violation can be compared with the amount of entanglement.
"""

import argparse
import math

import numpy as np

from rvrkit.bell import maximize_chsh, partially_entangled_state
from rvrkit.entropy import von_neumann_entropy
from rvrkit.hilbert import reduced_state


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=5.0, help="eta step in degrees")
    ap.add_argument("--full-sphere", action="store_true")
    args = ap.parse_args()

    print(f"{'eta':>6}  {'S_A (bits)':>10}  {'search':>12}  {'closed form':>12}  {'diff':>9}")
    for eta in np.arange(0.0, 45.0 + 1e-9, args.step):
        rho = partially_entangled_state(eta)
        s_a = von_neumann_entropy(reduced_state(rho, [2, 2], 0)) / math.log(2)
        opt = maximize_chsh(rho, full_sphere=args.full_sphere)
        closed = 2 * math.sqrt(1 + math.sin(math.radians(2 * eta)) ** 2)
        print(f"{eta:6.1f}  {s_a:10.6f}  {opt.value:12.9f}  {closed:12.9f}  {opt.value - closed:+9.1e}")


if __name__ == "__main__":
    main()
