"""Entropy, capacity and irreversibility of the three textbook operators.

Uniform attenuation keeps every mode alive in relative terms (maximal
entropy) yet can push all of them under the noise threshold. Blur spreads
energy over few modes. Sampling removes N - M modes exactly.
"""

import math

from opgauge import Attenuation, GaussianBlur, GridSpec, Sampling, ThresholdPolicy, analytic_spectrum, info_report

N = 64
grid = GridSpec((N,))


def show(name, stage, eps):
    r = info_report(analytic_spectrum(stage, grid), ThresholdPolicy(eps))
    cap = "undefined" if r.capacity is None else f"{r.capacity:.4f}"
    print(f"{name:<28} H={r.entropy:.4f}  r_eff={r.r_eff:7.3f}  rank={r.rank_eps:3d}  "
          f"C={cap:<9}  I={r.irreversibility:.4f}")


print(f"N = {N}, ln N = {math.log(N):.4f}\n")
# halving the signal: relative structure untouched, so H stays at ln N
show("attenuation mu*d = ln 2", Attenuation(math.log(2)), 0.6)
show("attenuation mu*d = ln 2", Attenuation(math.log(2)), 0.4)
for s in (0.5, 1.0, 2.0, 4.0):
    show(f"gaussian blur s = {s}", GaussianBlur(s), 0.01)
for m in (8, 16, 32):
    show(f"sampling M = {m}", Sampling.uniform(N, m), 0.5)
