"""Analysis of composed chains.

Operator norms are spectral norms (largest singular value) throughout, and
all composition checks use dense SVDs of materialized operators.
"""

import dataclasses
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chainfile import ChainSpec
from .errors import InputError
from .grid import GridSpec
from .measures import DerivedEpsilon, ThresholdPolicy, info_report
from .operators import compose
from .spectral import SingularSpectrum, singular_values
from .stages import GaussianBlur, KernelConvolution, MTFStage, Sampling

SLACK_TOL = 1e-10
NONEXPANSIVE_TOL = 1e-12


def max_workers():
    """Thread cap from ``OPGAUGE_THREADS`` (default: CPU count, at most 8)."""
    env = os.environ.get("OPGAUGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"OPGAUGE_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def _ordered_map(fn, items):
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _dense_spectrum(matrix, n):
    return SingularSpectrum.from_values(singular_values(matrix), n, "dense")


def _rank_at(values, threshold):
    return int(np.count_nonzero(values >= threshold))


@dataclass
class CompositionDiagnostics:
    """Singular-value and rank bounds for ``B o A`` (A acts first).

    ``slack_b[k] = ||B|| s_k(A) - s_k(BA)`` and
    ``slack_a[k] = ||A|| s_k(B) - s_k(BA)``; both should be >= 0.
    """

    slack_b: np.ndarray
    slack_a: np.ndarray
    norm_a: float
    norm_b: float
    rank_composed: int
    rank_bound: int
    rank_inequality_ok: bool
    monotonicity_applicable: bool
    monotonicity_ok: bool
    irreversibility_delta: float
    irreversibility: dict = field(default_factory=dict)

    @property
    def min_slack(self):
        return float(min(self.slack_b.min(), self.slack_a.min()))

    @property
    def bounds_ok(self):
        return self.min_slack >= -SLACK_TOL

    def to_dict(self):
        return {
            "slack_b": self.slack_b.tolist(),
            "slack_a": self.slack_a.tolist(),
            "norm_a": self.norm_a,
            "norm_b": self.norm_b,
            "rank_composed": self.rank_composed,
            "rank_bound": self.rank_bound,
            "rank_inequality_ok": self.rank_inequality_ok,
            "monotonicity_applicable": self.monotonicity_applicable,
            "monotonicity_ok": self.monotonicity_ok,
            "irreversibility_delta": self.irreversibility_delta,
            "irreversibility": dict(self.irreversibility),
            "bounds_ok": self.bounds_ok,
        }


def composition_diagnostics(a, b, policy):
    """Check the singular-value bounds, the rank inequality and monotonicity for ``b o a``."""
    if not (a.n_object == a.n_out == b.n_object == b.n_out):
        raise InputError(f"diagnostics need two square operators of equal size, got {a.shape} and {b.shape}")
    n = a.n_object
    ma, mb = a.materialize(), b.materialize()
    sa, sb, sba = singular_values(ma), singular_values(mb), singular_values(mb @ ma)
    norm_a, norm_b = float(sa[0]), float(sb[0])

    spec_ba = _dense_spectrum(mb @ ma, n)
    _, eps = policy.resolve(spec_ba)
    rank_ba = _rank_at(sba, eps)
    rank_a = _rank_at(sa, eps / norm_b) if norm_b > 0 else 0
    rank_b = _rank_at(sb, eps / norm_a) if norm_a > 0 else 0
    bound = min(rank_a, rank_b)

    irr = {
        "a": info_report(_dense_spectrum(ma, n), policy).irreversibility,
        "b": info_report(_dense_spectrum(mb, n), policy).irreversibility,
        "composed": info_report(spec_ba, policy).irreversibility,
    }
    applicable = norm_a <= 1 + NONEXPANSIVE_TOL and norm_b <= 1 + NONEXPANSIVE_TOL
    delta_irr = irr["composed"] - max(irr["a"], irr["b"])
    return CompositionDiagnostics(
        slack_b=norm_b * sa - sba,
        slack_a=norm_a * sb - sba,
        norm_a=norm_a,
        norm_b=norm_b,
        rank_composed=rank_ba,
        rank_bound=bound,
        rank_inequality_ok=rank_ba <= bound,
        monotonicity_applicable=applicable,
        monotonicity_ok=(delta_irr >= 0) if applicable else True,
        irreversibility_delta=delta_irr,
        irreversibility=irr,
    )


def chain_diagnostics(ops, policy):
    """Diagnostics for each step ``stage_k o (stages before k)`` of a chain."""
    out = []
    prefix = ops[0]
    for op in ops[1:]:
        out.append(composition_diagnostics(prefix, op, policy))
        prefix = compose([prefix, op])
    return out


def stage_attribution(chain, policy):
    """One report per prefix of ``chain`` (stage 1, stages 1-2, ...)."""
    chain = list(chain)
    if not chain:
        raise InputError("stage_attribution needs a non-empty chain")
    prefixes = [compose(chain[: i + 1]) for i in range(len(chain))]
    return [info_report(p.spectrum("dense"), policy) for p in prefixes]


def marginal_loss(reports):
    """Irreversibility added by each stage, from prefix reports."""
    irr = [r.irreversibility for r in reports]
    return [irr[0]] + [b - a for a, b in zip(irr, irr[1:])]


# ------------------------------------------------------ conventional metrics

CUTOFF_LEVEL = 0.1


def _transfer_profile(stages, grid):
    """Radial magnitude of the cascaded convolution stages, normalised at f=0."""
    f = grid.frequency_magnitudes(angular=False)
    h = np.ones_like(f)
    for st in stages:
        if isinstance(st, (GaussianBlur, KernelConvolution, MTFStage)):
            h = h * np.abs(st.transfer(grid))
    order = np.argsort(f, kind="stable")
    f, h = f[order], h[order]
    f, idx = np.unique(f, return_index=True)
    h = h[idx]
    if h[0] > 0:
        h = h / h[0]
    return f, h


def mtf_cutoff(spec, level=CUTOFF_LEVEL):
    """System MTF cutoff in cycles per unit length.

    The optical part is the first frequency where the cascaded transfer
    magnitude falls below ``level`` (linearly interpolated between grid
    frequencies; the grid Nyquist frequency if it never does). Sampling
    stages cap it at their own Nyquist frequency ``(M/N) * f_Nyquist``.
    """
    f, h = _transfer_profile(spec.stages, spec.grid)
    below = np.nonzero(h < level)[0]
    if below.size == 0:
        cutoff = float(f[-1])
    else:
        j = below[0]
        if j == 0:
            cutoff = 0.0
        else:
            t = (h[j - 1] - level) / (h[j - 1] - h[j])
            cutoff = float(f[j - 1] + t * (f[j] - f[j - 1]))
    for st in spec.stages:
        if isinstance(st, Sampling):
            cutoff = min(cutoff, st.keep / st.mask.size * spec.grid.nyquist())
    return cutoff


def snr(policy):
    """Detector SNR implied by a derived threshold (amplitude / sigma_n), else None."""
    eps = policy.epsilon
    if isinstance(eps, DerivedEpsilon) and eps.sigma_n > 0:
        return eps.amplitude / eps.sigma_n
    return None


def _order(a, b):
    if a is None:
        a = -np.inf
    if b is None:
        b = -np.inf
    if a > b:
        return "a>b"
    if a < b:
        return "a<b"
    return "equal"


@dataclass
class ComparisonReport:
    report_a: object
    report_b: object
    matched_metrics: dict
    verdicts: dict
    label_a: str = "a"
    label_b: str = "b"
    parameters: dict = None

    def to_dict(self):
        return {
            "label_a": self.label_a,
            "label_b": self.label_b,
            "report_a": self.report_a.to_dict(),
            "report_b": self.report_b.to_dict(),
            "matched_metrics": self.matched_metrics,
            "verdicts": self.verdicts,
            "parameters": self.parameters,
        }


def comparative_experiment(system_a, system_b, policy=None, parameters=None):
    """Operator measures and conventional metrics for two chains on one grid.

    Both arms are analysed under the same threshold policy, which is what
    makes their detector SNR equal. Verdicts compare rank (capacity),
    irreversibility and entropy.
    """
    if system_a.grid != system_b.grid:
        raise InputError("compared chains must share a grid")
    policy = policy if policy is not None else system_a.thresholds
    report_a, report_b = _ordered_map(lambda s: info_report(s.spectrum(), policy), [system_a, system_b])
    metrics = {
        "snr": {"a": snr(policy), "b": snr(policy)},
        "mtf_cutoff_frequency": {"a": mtf_cutoff(system_a), "b": mtf_cutoff(system_b)},
    }
    verdicts = {
        "capacity_order": _order(report_a.rank_eps, report_b.rank_eps),
        "irreversibility_order": _order(report_a.irreversibility, report_b.irreversibility),
        "entropy_order": _order(report_a.entropy, report_b.entropy),
    }
    return ComparisonReport(report_a, report_b, metrics, verdicts, system_a.label, system_b.label, parameters)


# Parameter grid for the blur/sampling comparison. Arm A: mild blur with
# coarse sampling; arm B: stronger blur with denser sampling.
SEARCH_N = 256
SEARCH_WIDTHS_A = (0.5, 0.75, 1.0)
SEARCH_KEEP_A = (32, 48, 64)
SEARCH_WIDTHS_B = tuple(np.round(np.arange(1.05, 8.0 + 1e-9, 0.05), 2))
SEARCH_KEEP_B = (96, 128, 192, 256)
MATCH_TOL = 0.05
DEFAULT_POLICY = ThresholdPolicy(DerivedEpsilon(kappa=3.0, sigma_n=0.01, amplitude=1.0))


def blur_sampling_chain(n, width, keep, policy, label):
    grid = GridSpec((n,))
    return ChainSpec(
        grid,
        (GaussianBlur(width, label="blur"), Sampling.uniform(n, keep, label="sampling")),
        policy,
        label,
    )


def search_comparison(n=SEARCH_N, policy=DEFAULT_POLICY, tol=MATCH_TOL):
    """Find the first (s_A, M_A, s_B, M_B) in a fixed grid with matched MTF cutoffs.

    The scan order is fixed, so the result is deterministic. Besides the
    cutoff match, arm A must be sampling-limited (its blur alone would pass
    higher frequencies) and arm B blur-limited, which is what distinguishes
    the two designs. Returns ``(chain_a, chain_b, parameters)``.
    """
    grid = GridSpec((n,))
    nyq = grid.nyquist()

    def optical_cutoff(width):
        return mtf_cutoff(ChainSpec(grid, [GaussianBlur(width)], policy))

    for s_a in SEARCH_WIDTHS_A:
        for m_a in SEARCH_KEEP_A:
            opt_a = optical_cutoff(s_a)
            cut_a = min(opt_a, m_a / n * nyq)
            if opt_a <= m_a / n * nyq:
                continue
            for m_b in SEARCH_KEEP_B:
                if m_b <= m_a:
                    continue
                for s_b in SEARCH_WIDTHS_B:
                    if s_b <= s_a:
                        continue
                    opt_b = optical_cutoff(s_b)
                    cut_b = min(opt_b, m_b / n * nyq)
                    if opt_b >= m_b / n * nyq:
                        continue
                    if abs(cut_b - cut_a) <= tol * cut_a:
                        a = blur_sampling_chain(n, s_a, m_a, policy, "system_a")
                        b = blur_sampling_chain(n, float(s_b), m_b, policy, "system_b")
                        params = {
                            "n": n,
                            "width_a": s_a,
                            "keep_a": m_a,
                            "width_b": float(s_b),
                            "keep_b": m_b,
                            "cutoff_a": cut_a,
                            "cutoff_b": cut_b,
                            "match_tolerance": tol,
                        }
                        return a, b, params
    raise InputError("no parameter set in the search grid matches the MTF cutoffs")


# ------------------------------------------------------------------ sweeps


@dataclass
class SweepResult:
    parameter: str
    values: list
    reports: list

    def __post_init__(self):
        if len(self.values) != len(self.reports):
            raise InputError("sweep values and reports differ in length")


_PATH = re.compile(r"^(?:stages(?:\[(\d+)\]|\.(\d+))|([^.\[\]]+))\.([A-Za-z_]\w*)$")


def _resolve_parameter(template, path):
    m = _PATH.match(path)
    if not m:
        raise InputError(f"cannot parse parameter path {path!r}; use stages[i].field or label.field", "parameter")
    idx = m.group(1) or m.group(2)
    name = m.group(4)
    if idx is not None:
        i = int(idx)
        if i >= len(template.stages):
            raise InputError(f"chain has {len(template.stages)} stages, no index {i}", "parameter")
    else:
        hits = [i for i, s in enumerate(template.stages) if s.label == m.group(3)]
        if len(hits) != 1:
            raise InputError(f"label {m.group(3)!r} matches {len(hits)} stages", "parameter")
        i = hits[0]
    stage = template.stages[i]
    if isinstance(stage, Sampling) and name == "keep":
        return i, name
    names = {f.name for f in dataclasses.fields(stage)}
    if name not in names:
        raise InputError(f"{stage.kind} stage has no field {name!r}", "parameter")
    current = getattr(stage, name)
    if isinstance(current, (bool, str)) or not isinstance(current, (int, float)):
        raise InputError(f"field {name!r} of {stage.kind} stage is not a scalar number", "parameter")
    return i, name


def with_parameter(template, path, value):
    """Copy of ``template`` with one numeric stage field replaced."""
    i, name = _resolve_parameter(template, path)
    stage = template.stages[i]
    if isinstance(stage, Sampling) and name == "keep":
        new = Sampling.uniform(stage.mask.size, int(value), label=stage.label)
    else:
        new = dataclasses.replace(stage, **{name: value})
    stages = list(template.stages)
    stages[i] = new
    return ChainSpec(template.grid, stages, template.thresholds, template.label)


def sweep(template, parameter, values, policy=None):
    """One report per parameter value, in input order."""
    policy = policy if policy is not None else template.thresholds
    values = list(values)
    _resolve_parameter(template, parameter)
    chains = [with_parameter(template, parameter, v) for v in values]
    reports = _ordered_map(lambda c: info_report(c.spectrum(), policy), chains)
    return SweepResult(parameter, values, reports)
