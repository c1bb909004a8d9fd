"""Measurement model ``y = O x + n`` and truncated-SVD reconstruction.

Noise is i.i.d. Gaussian per component with standard deviation ``sigma_n``.
Trial ``t`` of an experiment seeded with ``seed`` draws from its own stream
``default_rng([seed, t])``, so statistics do not depend on execution order.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError, StrategyError
from .measures import ThresholdPolicy
from .spectral import NumericalTolerance


@dataclass(frozen=True)
class NoiseModel:
    sigma_n: float
    seed: int = 0
    distribution: str = "gaussian_iid"

    def __post_init__(self):
        if not (np.isfinite(self.sigma_n) and self.sigma_n >= 0):
            raise InputError(f"sigma_n must be >= 0, got {self.sigma_n}", "sigma_n")
        if self.distribution != "gaussian_iid":
            raise InputError(f"unsupported noise distribution {self.distribution!r}", "distribution")

    def draw(self, n, trial=0):
        if self.sigma_n == 0:
            return np.zeros(n)
        return self.sigma_n * np.random.default_rng([self.seed, trial]).standard_normal(n)


def measure(op, x, noise, trial=0):
    x = np.asarray(x, dtype=float)
    if x.shape != (op.n_object,):
        raise InputError(f"object has shape {x.shape}, operator expects ({op.n_object},)")
    return op.apply(x) + noise.draw(op.n_out, trial)


def _filtered_inverse(factors, y, filt):
    u, s, v = factors.left_vectors, factors.singular_values, factors.right_vectors
    return v @ (filt(s) * (u.T @ y))


def truncated_pinv_reconstruct(op, y, policy, factors=None):
    """``sum over sigma_i >= eps of <u_i, y> / sigma_i * v_i``."""
    factors = factors if factors is not None else op.svd()
    _, eps = policy.resolve(factors.spectrum(op.n_object))
    y = np.asarray(y, dtype=float)
    if y.shape != (op.n_out,):
        raise InputError(f"measurement has shape {y.shape}, operator outputs ({op.n_out},)")

    def filt(s):
        keep = s >= eps
        out = np.zeros_like(s)
        out[keep] = 1.0 / s[keep]
        return out

    return _filtered_inverse(factors, y, filt)


def ridge_reconstruct(op, y, policy, factors=None):
    """Tikhonov inverse with ``alpha = eps**2``."""
    factors = factors if factors is not None else op.svd()
    _, eps = policy.resolve(factors.spectrum(op.n_object))
    alpha = eps**2
    return _filtered_inverse(factors, np.asarray(y, dtype=float), lambda s: s / (s**2 + alpha))


@dataclass
class ModeResult:
    index: int
    sigma: float
    input_coeff: float
    criterion_pass: bool
    empirical_relative_error: float
    predicted_relative_error: float
    undefined_scale: bool = False


@dataclass
class RecoverabilityResult:
    per_mode: list
    trials: int
    truncation_rank: int
    kappa: float
    sigma_n: float

    def to_dict(self):
        return {
            "trials": self.trials,
            "truncation_rank": self.truncation_rank,
            "kappa": self.kappa,
            "sigma_n": self.sigma_n,
            "per_mode": [vars(m) for m in self.per_mode],
        }


def recoverability_experiment(op, x, noise, kappa, trials=10_000, policy=None):
    """Monte-Carlo check of the per-mode criterion ``sigma_i |x_i| >= kappa sigma_n``.

    For each singular mode the coefficient is estimated as ``<u_i, y> / sigma_i``
    and its root-mean-square error over trials, relative to ``|x_i|``, is
    reported next to the prediction ``sigma_n / (sigma_i |x_i|)``. Modes with
    ``x_i = 0`` or ``sigma_i <= delta`` are flagged ``undefined_scale``.
    ``truncation_rank`` counts passing modes.
    """
    if trials < 100:
        raise ParameterError(f"need at least 100 trials, got {trials}")
    if not kappa > 0:
        raise ParameterError(f"kappa must be > 0, got {kappa}")
    x = np.asarray(x, dtype=float)
    factors = op.svd()
    u, s, v = factors.left_vectors, factors.singular_values, factors.right_vectors
    spectrum = factors.spectrum(op.n_object)
    delta = (policy.delta if policy is not None else NumericalTolerance()).resolve(spectrum)
    coeffs = v.T @ x
    clean = op.apply(x)

    sq_err = np.zeros_like(s)
    usable = s > delta
    for t in range(trials):
        y = clean + noise.draw(op.n_out, t)
        est = (u.T @ y)[usable] / s[usable]
        sq_err[usable] += (est - coeffs[usable]) ** 2
    rms = np.sqrt(sq_err / trials)

    modes = []
    for i in range(s.size):
        undefined = coeffs[i] == 0 or not usable[i]
        passed = bool(s[i] * abs(coeffs[i]) >= kappa * noise.sigma_n)
        modes.append(
            ModeResult(
                index=i,
                sigma=float(s[i]),
                input_coeff=float(coeffs[i]),
                criterion_pass=passed,
                empirical_relative_error=float("nan") if undefined else float(rms[i] / abs(coeffs[i])),
                predicted_relative_error=float("nan") if undefined else float(noise.sigma_n / (s[i] * abs(coeffs[i]))),
                undefined_scale=bool(undefined),
            )
        )
    return RecoverabilityResult(
        per_mode=modes,
        trials=trials,
        truncation_rank=sum(m.criterion_pass for m in modes),
        kappa=float(kappa),
        sigma_n=float(noise.sigma_n),
    )


@dataclass(frozen=True)
class Reconstructor:
    name: str
    fn: object
    policy: ThresholdPolicy = None

    def __call__(self, op, y, policy, factors=None):
        return self.fn(op, y, self.policy or policy, factors)


def default_reconstructors(policy):
    """Truncated pseudo-inverse at epsilon and at a looser level, plus ridge."""
    eps = policy.epsilon_value
    looser = ThresholdPolicy(eps / 4, policy.delta, policy.paper_capacity)
    return [
        Reconstructor("truncated_pinv", truncated_pinv_reconstruct),
        Reconstructor("truncated_pinv_loose", truncated_pinv_reconstruct, looser),
        Reconstructor("ridge", ridge_reconstruct),
    ]


@dataclass
class InvarianceOutcome:
    nullspace_dim: int
    measurement_gap: float
    reconstruction_gaps: dict = field(default_factory=dict)
    ok: bool = True

    def __bool__(self):
        return self.ok


def invariance_check(op, policy, reconstructors=None, seed=0, x=None, atol=1e-12, rtol=1e-10):
    """Check that nullspace components of the input never reach the estimate.

    A random object ``x`` and ``x' = x + z`` with ``z`` in the numerical
    nullspace (right singular vectors with ``sigma_i <= delta``) must give
    measurements equal to ``atol`` and reconstructions equal to ``rtol``
    (relative) under every strategy. Vacuously true with no nullspace. The
    returned outcome is truthy when the check passes.
    """
    reconstructors = reconstructors if reconstructors is not None else default_reconstructors(policy)
    factors = op.svd()
    spectrum = factors.spectrum(op.n_object)
    delta, _ = policy.resolve(spectrum)
    v = factors.right_vectors
    s_full = np.zeros(op.n_object)
    s_full[: factors.singular_values.size] = factors.singular_values
    # full right basis: thin SVD omits the trailing nullspace of wide maps
    if v.shape[1] < op.n_object:
        v = np.linalg.svd(op.materialize(), full_matrices=True)[2].T
    null = v[:, s_full <= delta]
    if null.shape[1] == 0:
        return InvarianceOutcome(0, 0.0)

    rng = np.random.default_rng(seed)
    if x is None:
        x = rng.standard_normal(op.n_object)
        x /= np.linalg.norm(x)
    z = null @ rng.standard_normal(null.shape[1])
    x2 = x + z / np.linalg.norm(z)
    y1, y2 = op.apply(x), op.apply(x2)
    gap = float(np.max(np.abs(y1 - y2)))
    outcome = InvarianceOutcome(null.shape[1], gap, ok=gap <= atol)
    for r in reconstructors:
        a, b = r(op, y1, policy, factors), r(op, y2, policy, factors)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise StrategyError(f"strategy {r.name!r} produced non-finite output")
        rel = float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.finfo(float).tiny))
        outcome.reconstruction_gaps[r.name] = rel
        outcome.ok = outcome.ok and rel <= rtol
    return outcome
