"""Two systems with the same MTF cutoff but different information budgets.

System A pairs a sharp lens with a coarse detector; system B a softer lens
with a denser detector. A bundled grid search matches their MTF cutoffs
(within 5%) at N = 256. Conventional metrics call them equivalent, the
operator measures do not.
"""

from opgauge import comparative_experiment, search_comparison

a, b, params = search_comparison(256)
print("search result:", params)

res = comparative_experiment(a, b, parameters=params)
for arm, r in (("A", res.report_a), ("B", res.report_b)):
    print(f"system {arm}: rank_eps={r.rank_eps}  C={r.capacity:.4f}  I={r.irreversibility:.4f}  H={r.entropy:.4f}")
print("matched metrics:", res.matched_metrics)
print("verdicts:", res.verdicts)
