"""Ball-hitting probabilities and recurrence times of planar random walks.

P(|S_n| < eps) scales like eps^2 / n for any zero-drift square-integrable
step law, and the time to hit an eps-ball grows so fast that
log tau_eps / log(1/eps) has median of order the dimension.  Both effects
are law-independent; the three step laws below differ in support and
covariance yet produce the same slopes.
"""

from recur2d.planar import PlanarWalkLaw, planar_return_prob, planar_tau_trend

for tag, param in (("gaussian", 1.0), ("uniform-disc", 2.0),
                   ("lattice-simple", 1.0)):
    law = PlanarWalkLaw(tag, param)
    est = "conditional" if tag == "gaussian" else "indicator"
    out = planar_return_prob(law, [20, 40, 80], [0.2, 0.3, 0.45], 20000, 31,
                             estimator=est)
    print(f"== {tag} (param {param}, estimator {est})")
    print(f"   slope in log n    {out['slope_log_n']:+.4f}  (limit -1)")
    print(f"   slope in log eps  {out['slope_log_eps']:+.4f}  (limit +2)")

law = PlanarWalkLaw("gaussian", 1.0)
trend = planar_tau_trend(law, [1.0, 0.8, 0.6], 600, 31, budget=200_000)
print()
print("hitting-time growth, gaussian steps:")
print("    eps    median tau    log-median ratio    censored")
for row in trend["rows"]:
    med = "         -" if row["median_tau"] is None else \
        f"{row['median_tau']:10.1f}"
    ratio = "      -" if row["median_ratio"] is None else \
        f"{row['median_ratio']:7.3f}"
    print(f"  {row['eps']:5.2f}    {med}    {ratio}"
          f"             {row['censored_fraction']:.3f}")
