"""Endpoint matrix of the max-entropy measure and the mixture limit law.

For a maximal-entropy measure the mass of a (2k+1)-cylinder depends on its
endpoints only: nu(C_k(x)) = Q[x_-k, x_k] exp(-(2k+1) h).  The estimated Q
is constant in k, and the limit law of the rescaled extension return time is
the finite mixture sum_ij alpha_ij G(beta Q_ij t) with G(s) = s/(1+s).
"""

from recur2d.returns import q_matrix
from recur2d.systems import build_full_shift, get_system

golden = get_system("golden-mean").measure
rep = q_matrix(golden, (1, 2, 3), seed=3)
print("golden mean, k in (1, 2, 3):")
print(f"  symbols     {list(rep.symbols)}")
print(f"  Q           {rep.q.round(6).tolist()}")
print(f"  alpha       {rep.alpha.round(6).tolist()}")
print(f"  constancy   max deviation across k: {rep.constancy_deviation:.2e}")
print()

full = build_full_shift(3).measure
rep3 = q_matrix(full, (1, 2), seed=3)
print(f"full 3-shift: Q is the all-ones matrix "
      f"(max entry deviation {abs(rep3.q - 1.0).max():.2e})")
print()

cdf = rep.mixture_cdf(1.0)
print("mixture CDF at unit rate, golden mean endpoints:")
for t in (0.1, 0.5, 1.0, 5.0, 50.0):
    print(f"  t = {t:5.1f}   {cdf(t):.4f}")
