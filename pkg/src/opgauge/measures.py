"""Entropy, capacity and irreversibility of an operator from its spectrum.

All logarithms are natural, so entropy and capacity are in nats.

Modes are split three ways at resolved thresholds ``delta <= epsilon``:

* hard loss      ``sigma <= delta``            (numerical nullspace)
* soft loss      ``delta < sigma < epsilon``   (present, below the noise floor)
* recoverable    ``sigma >= epsilon``
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError, InsufficientSpectrumError, ThresholdError
from .operators import linearize
from .spectral import NumericalTolerance


@dataclass(frozen=True)
class DerivedEpsilon:
    """Operating threshold from a noise criterion: ``kappa * sigma_n / amplitude``.

    ``amplitude`` is the typical magnitude of an object coefficient, so a mode
    is recoverable when ``sigma_i * amplitude >= kappa * sigma_n``.
    """

    kappa: float
    sigma_n: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ThresholdError(f"kappa must be > 0, got {self.kappa}", "epsilon.kappa")
        if not self.sigma_n >= 0:
            raise ThresholdError(f"sigma_n must be >= 0, got {self.sigma_n}", "epsilon.sigma_n")
        if not self.amplitude > 0:
            raise ThresholdError(f"amplitude must be > 0, got {self.amplitude}", "epsilon.amplitude")

    @property
    def value(self):
        return self.kappa * self.sigma_n / self.amplitude


@dataclass(frozen=True)
class ThresholdPolicy:
    """Operating threshold epsilon and numerical tolerance delta.

    ``epsilon`` is a positive float or a :class:`DerivedEpsilon`. With
    ``paper_capacity=True`` a report with no recoverable modes states
    capacity 0 instead of None.
    """

    epsilon: object
    delta: NumericalTolerance = field(default_factory=NumericalTolerance)
    paper_capacity: bool = False

    def __post_init__(self):
        if not isinstance(self.epsilon, DerivedEpsilon):
            eps = float(self.epsilon)
            if not (np.isfinite(eps) and eps > 0):
                raise ThresholdError(f"epsilon must be a positive number, got {self.epsilon}", "epsilon")
            object.__setattr__(self, "epsilon", eps)

    @property
    def epsilon_value(self):
        if isinstance(self.epsilon, DerivedEpsilon):
            return self.epsilon.value
        return self.epsilon

    def resolve(self, spectrum):
        """Return ``(delta, epsilon)`` for ``spectrum``; epsilon < delta is rejected."""
        delta = self.delta.resolve(spectrum)
        eps = self.epsilon_value
        if eps < delta:
            raise ThresholdError(
                f"epsilon={eps!r} is below the numerical tolerance delta={delta!r}", "thresholds"
            )
        return delta, eps


@dataclass(frozen=True, eq=False)
class ModeWeights:
    """Normalised modal energies ``sigma_i^2 / sum sigma_j^2``.

    ``degenerate`` is set for an all-zero operator, where the weights are
    undefined and ``lambdas`` is all zeros.
    """

    lambdas: np.ndarray
    degenerate: bool = False


@dataclass
class InfoReport:
    entropy: float
    r_eff: float
    rank_eps: int
    capacity: float
    no_recoverable_modes: bool
    irreversibility: float
    hard_loss: int
    soft_loss: int
    recoverable: int
    n_object: int
    delta: float
    epsilon: float
    unresolved_modes: int = 0
    unit: str = "nats"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class LossCounts:
    hard_loss: int
    soft_loss: int
    recoverable: int
    n_object: int
    delta: float
    epsilon: float
    unresolved_modes: int = 0

    @property
    def irreversibility(self):
        return (self.hard_loss + self.soft_loss) / self.n_object


def mode_weights(spectrum):
    """Modal energy fractions.

    For a truncated (randomized) spectrum the weights are normalised over
    the resolved values only.
    """
    s = spectrum.values
    top = s[0] if s.size else 0.0
    if top == 0.0:
        return ModeWeights(np.zeros_like(s), degenerate=True)
    # scale first so tiny spectra do not underflow when squared
    e = (s / top) ** 2
    return ModeWeights(e / math.fsum(e))


def operator_entropy(weights):
    """Entropy ``-sum lambda ln lambda`` in nats, or None when degenerate."""
    if weights.degenerate:
        return None
    lam = weights.lambdas[weights.lambdas > 0]
    h = -math.fsum(lam * np.log(lam))
    # roundoff can push past the exact bounds [0, ln(#nonzero)]
    return min(max(h, 0.0), math.log(lam.size))


def effective_rank(spectrum, policy):
    """Count of singular values with ``sigma >= epsilon`` (inclusive)."""
    _, eps = policy.resolve(spectrum)
    return int(np.count_nonzero(spectrum.values >= eps))


def capacity(rank_eps, paper_convention=False):
    """``ln(rank_eps)``; rank 0 gives None, or 0 when ``paper_convention`` is set."""
    if rank_eps < 0:
        raise InputError(f"rank must be >= 0, got {rank_eps}")
    if rank_eps == 0:
        return 0.0 if paper_convention else None
    return math.log(rank_eps)


def irreversibility(spectrum, policy):
    """Hard/soft/recoverable split of all N object-space modes.

    A truncated spectrum is accepted only if its tail bound is below
    epsilon, so that the recoverable count is exact. Unresolved modes then
    count as hard loss if the tail bound is at most delta, otherwise as soft
    loss (recorded in ``unresolved_modes``).
    """
    delta, eps = policy.resolve(spectrum)
    s = spectrum.values
    hard = int(np.count_nonzero(s <= delta))
    rec = int(np.count_nonzero(s >= eps))
    soft = s.size - hard - rec
    unresolved = spectrum.n_object - s.size
    if unresolved:
        tail = spectrum.tail_bound
        if not tail < eps:
            raise InsufficientSpectrumError(
                f"{unresolved} unresolved modes with tail bound {tail:g} >= epsilon {eps:g}; "
                "increase k or use the dense route"
            )
        if tail <= delta:
            hard += unresolved
        else:
            soft += unresolved
    return LossCounts(hard, soft, rec, spectrum.n_object, delta, eps, unresolved)


def info_report(spectrum, policy):
    """Full :class:`InfoReport` for a spectrum at a threshold policy."""
    loss = irreversibility(spectrum, policy)
    h = operator_entropy(mode_weights(spectrum))
    cap = capacity(loss.recoverable, policy.paper_capacity)
    return InfoReport(
        entropy=h,
        r_eff=None if h is None else math.exp(h),
        rank_eps=loss.recoverable,
        capacity=cap,
        no_recoverable_modes=loss.recoverable == 0,
        irreversibility=loss.irreversibility,
        hard_loss=loss.hard_loss,
        soft_loss=loss.soft_loss,
        recoverable=loss.recoverable,
        n_object=loss.n_object,
        delta=loss.delta,
        epsilon=loss.epsilon,
        unresolved_modes=loss.unresolved_modes,
    )


def operator_report(op, policy, route="auto"):
    return info_report(op.spectrum(route), policy)


def local_capacity(stage, grid, policy):
    """Report for the finite-difference Jacobian of a nonlinear stage."""
    return info_report(linearize(stage, grid).spectrum("dense"), policy)
