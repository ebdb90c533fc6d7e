"""Exact displacement law of the extension walk, by dynamic programming.

n P(S_n = 0) converges to 1/(2 pi sqrt(det Sigma)); the conditioned variant
pins the endpoints to cylinder windows and approaches the same constant times
the two window masses.
"""

import argparse

from recur2d.llt import (displacement_distribution, llt_conditional_check,
                         return_probability_track)
from recur2d.returns import recurrence_beta
from recur2d.sft import Window
from recur2d.systems import get_system

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--system", default="lazy5",
                    choices=("lazy5", "srw4", "markov5"))
parser.add_argument("-n", type=int, default=400, help="number of steps")
args = parser.parse_args()

bundle = get_system(args.system)
m, phi = bundle.measure, bundle.observable
beta = recurrence_beta(m, phi)

track = return_probability_track(m, phi, args.n)
print(f"system {args.system}: beta = {beta:.6f}")
print("      n    P(S_n = 0)    n P(S_n = 0)")
for n in (1, 2, 5, 10, 50, 100, args.n):
    if n > args.n:
        continue
    p = track[n - 1]
    print(f"  {n:5d}    {p:.8f}    {n * p:.6f}")
print(f"limit of n P(S_n = 0): {beta:.6f}")
print()

table = displacement_distribution(m, phi, 12)
print(f"full displacement table at n = 12: mass {table.mass_check:.12f}, "
      f"support radius {table.radius}")
print(f"  P(S_12 = 0)      {table.point_mass((0, 0)):.8f}")
print(f"  P(S_12 = (1,1))  {table.point_mass((1, 1)):.8f}")
print()

if args.system == "lazy5":
    wa = Window(m.sft, ("E", "N", "W"))
    wb = Window(m.sft, ("S",), one_sided=True)
    check = llt_conditional_check(m, phi, wa, wb, 150, 5)
    print("conditioned endpoint check at n = 150, k = 5:")
    print(f"  exact probability  {check['exact']:.6e}")
    print(f"  limit main term    {check['main_term']:.6e}")
    print(f"  ratio              {check['ratio']:.4f}")
