"""Where along an imaging chain information is lost.

Loads a bundled blur-then-sample chain, reports each prefix, checks the
composition bounds, and sweeps the blur width.
"""

from importlib import resources

from opgauge import chain_diagnostics, info_report, load_chain, marginal_loss, stage_attribution, sweep

path = resources.files("opgauge") / "data" / "blur_then_sample_16.json"
spec = load_chain(path)
ops = spec.realize_stages()

reports = stage_attribution(ops, spec.thresholds)
for stage, r, dm in zip(spec.stages, reports, marginal_loss(reports)):
    print(f"after {stage.label:<14} I={r.irreversibility:.4f} (+{dm:.4f})  H={r.entropy:.4f}")

for d in chain_diagnostics(ops, spec.thresholds):
    print("bounds hold:", d.bounds_ok, " rank inequality:", d.rank_inequality_ok, " monotone:", d.monotonicity_ok)

whole = info_report(spec.spectrum(), spec.thresholds)
print("whole chain irreversibility:", whole.irreversibility)

result = sweep(spec, "stages[0].width", [0.25, 0.5, 1.0, 2.0, 4.0])
for v, r in zip(result.values, result.reports):
    print(f"blur width {v:<5} rank_eps={r.rank_eps:2d}  I={r.irreversibility:.4f}")
