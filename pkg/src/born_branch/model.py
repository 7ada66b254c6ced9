"""Parameter algebra for truncated branching processes.

Branching specifications, threshold schedules, the induced random-walk and
diffusion parameters, feasibility checks for the critical decay rate, and
the endogenous-threshold growth formulas. All derived quantities live in
log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import NamedTuple, Union

import numpy as np

from .errors import DegenerateSpec, OutOfRange, WrongArity

#: Absolute tolerance on sum(deltas) == 1.
SIMPLEX_TOL = 1e-12

#: Threshold for the K=3 min-delta sufficient condition, 1 / (1 + 2 e^{3/2}).
MIN_DELTA_THRESHOLD = 1.0 / (1.0 + 2.0 * math.exp(1.5))


@dataclass(frozen=True)
class BranchingSpec:
    """A K-way branching specification with ratios delta_k summing to one.

    Each period a branch splits into K children carrying squared-amplitude
    fractions delta_k. Derived quantities use the geometric mean delta_bar:
    log_devs are the centered log ratios log(delta_k / delta_bar), whose
    population variance is sigma2.
    """

    deltas: tuple[float, ...]
    log_deltas: tuple[float, ...] = field(init=False, repr=False)
    log_delta_bar: float = field(init=False, repr=False)
    log_devs: tuple[float, ...] = field(init=False, repr=False)
    sigma2: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        deltas = tuple(float(d) for d in self.deltas)
        if not deltas:
            raise OutOfRange("need at least one branching ratio")
        for d in deltas:
            # upper boundary 1.0 is reachable only in the K=1 degenerate case
            if not (0.0 < d <= 1.0) or (d == 1.0 and len(deltas) > 1):
                raise OutOfRange(f"branching ratio {d} outside (0, 1)")
        total = math.fsum(deltas)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise OutOfRange(
                f"branching ratios sum to {total!r}, off the simplex by "
                f"{total - 1.0:.3e} (> {SIMPLEX_TOL})"
            )
        log_deltas = tuple(math.log(d) for d in deltas)
        log_bar = math.fsum(log_deltas) / len(deltas)
        devs = tuple(ld - log_bar for ld in log_deltas)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "log_deltas", log_deltas)
        object.__setattr__(self, "log_delta_bar", log_bar)
        object.__setattr__(self, "log_devs", devs)
        object.__setattr__(self, "sigma2", math.fsum(d * d for d in devs) / len(devs))

    @classmethod
    def renormalized(cls, deltas) -> "BranchingSpec":
        """Construct after explicitly rescaling the ratios to sum to one."""
        total = math.fsum(float(d) for d in deltas)
        if total <= 0.0:
            raise OutOfRange("cannot renormalize a non-positive total")
        return cls(tuple(float(d) / total for d in deltas))

    @property
    def K(self) -> int:
        return len(self.deltas)

    @property
    def delta_bar(self) -> float:
        """Geometric mean of the branching ratios."""
        return math.exp(self.log_delta_bar)

    @property
    def sigma(self) -> float:
        """Population standard deviation of log(delta_k / delta_bar)."""
        return math.sqrt(self.sigma2)


class AlphaResult(NamedTuple):
    alpha: float
    feasible: bool


class WalkMoments(NamedTuple):
    mu: float
    sigma: float
    beta: float


class EndogenousAlpha(NamedTuple):
    log_alpha: float
    c0: float


def alpha_for_unit_beta(spec: BranchingSpec) -> AlphaResult:
    """Decay rate alpha with beta(alpha) = 1, and whether it is usable.

    alpha = delta_bar * exp(sigma2). Feasible means the truncated process
    can actually sustain growth at that rate: delta_bar < alpha < max delta_k
    with sigma > 0. Never raises; infeasible specs return feasible=False.
    """
    alpha = math.exp(spec.log_delta_bar + spec.sigma2)
    feasible = spec.sigma2 > 0.0 and spec.delta_bar < alpha < max(spec.deltas)
    return AlphaResult(alpha, feasible)


def basic_params(spec: BranchingSpec, alpha: float) -> WalkMoments:
    """Walk parameters (mu, sigma, beta) induced by decay rate alpha.

    mu = log(alpha / delta_bar), sigma from the spec, beta = mu / sigma^2.
    """
    if not (0.0 < alpha < 1.0):
        raise OutOfRange(f"decay rate alpha={alpha} outside (0, 1)")
    if spec.sigma2 == 0.0:
        raise DegenerateSpec("all branching ratios equal: sigma = 0, beta undefined")
    mu = math.log(alpha) - spec.log_delta_bar
    return WalkMoments(mu, spec.sigma, mu / spec.sigma2)


def min_delta_sufficient_condition(spec: BranchingSpec) -> bool:
    """Sufficient (not necessary) feasibility test for K = 3.

    min_k delta_k > 1 / (1 + 2 e^{3/2}) guarantees the unit-beta decay rate
    is feasible. Defined only for three branches.
    """
    if spec.K != 3:
        raise WrongArity(f"condition defined for K=3, got K={spec.K}")
    return min(spec.deltas) > MIN_DELTA_THRESHOLD


def non_lattice_check(spec: BranchingSpec, max_denominator: int = 10**6) -> str:
    """Heuristic lattice diagnostic on the log-ratio geometry.

    For every ordered triple of distinct indices (k, j, l) it forms
    r = log(delta_k/delta_j) / log(delta_l/delta_j) and asks whether r is
    within 1e-12 of a rational with denominator <= max_denominator
    (continued-fraction convergents). If some triple matches no such
    rational, the path-sum lattice cannot close and the spec is reported
    "likely_non_lattice"; otherwise "likely_lattice". K = 2 is always a
    lattice for fixed depth.
    """
    if spec.K < 2:
        raise WrongArity("lattice structure needs at least two branches")
    if spec.K == 2:
        return "likely_lattice"
    ld = spec.log_deltas
    for k, j, l in permutations(range(spec.K), 3):
        den = ld[l] - ld[j]
        if abs(den) < 1e-15:
            continue
        r = (ld[k] - ld[j]) / den
        approx = Fraction(r).limit_denominator(max_denominator)
        if abs(r - float(approx)) > 1e-12:
            return "likely_non_lattice"
    return "likely_lattice"


def endogenous_beta(varepsilon: float) -> float:
    """Power-law exponent 1 / (1 - varepsilon) for the endogenous threshold."""
    if not (0.0 < varepsilon < 1.0):
        raise OutOfRange(f"varepsilon={varepsilon} outside (0, 1)")
    return 1.0 / (1.0 - varepsilon)


def endogenous_alpha(
    tilde_mu: float, sigma: float, varepsilon: float, phi0: float = 1.0
) -> EndogenousAlpha:
    """Predicted growth rate and intercept of the endogenous threshold.

    Under the exponential quasi-stationary ansatz with rate 1/(1-varepsilon):
    log alpha = sigma^2 / (1 - varepsilon) - tilde_mu and the threshold
    intercept is c0 = phi0 * varepsilon / (1 - varepsilon). Returned as
    reference targets; the measured growth rate of the interacting particle
    system deviates from this ansatz (see endogenous_population docs).
    """
    if sigma <= 0.0:
        raise OutOfRange(f"sigma={sigma} must be positive")
    if not (0.0 < varepsilon < 1.0):
        raise OutOfRange(f"varepsilon={varepsilon} outside (0, 1)")
    if phi0 <= 0.0:
        raise OutOfRange(f"phi0={phi0} must be positive")
    log_alpha = sigma * sigma / (1.0 - varepsilon) - tilde_mu
    return EndogenousAlpha(log_alpha, phi0 * varepsilon / (1.0 - varepsilon))


@dataclass(frozen=True)
class Exogenous:
    """Deterministic threshold xi_t = epsilon * alpha^t."""

    epsilon: float
    alpha: float

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise OutOfRange(f"epsilon={self.epsilon} must be positive")
        if not (0.0 < self.alpha < 1.0):
            raise OutOfRange(f"alpha={self.alpha} outside (0, 1)")

    def log_xi(self, t: int) -> float:
        # canonical one-multiply-one-add form, shared by every consumer so
        # float decisions agree bit for bit across backends
        return math.log(self.epsilon) + t * math.log(self.alpha)


@dataclass(frozen=True)
class Endogenous:
    """Threshold tied to the surviving population: xi = varepsilon * E[Phi | Phi > 0]."""

    varepsilon: float

    def __post_init__(self) -> None:
        if not (0.0 < self.varepsilon < 1.0):
            raise OutOfRange(f"varepsilon={self.varepsilon} outside (0, 1)")


@dataclass(frozen=True)
class RandomBarrier:
    """Noisy log threshold: log xi_t = log epsilon + V_t, V_t ~ N(0, noise_sd^2)."""

    epsilon: float
    noise_sd: float

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise OutOfRange(f"epsilon={self.epsilon} must be positive")
        if self.noise_sd < 0.0:
            raise OutOfRange(f"noise_sd={self.noise_sd} must be >= 0")


ThresholdSchedule = Union[Exogenous, Endogenous, RandomBarrier]


@dataclass(frozen=True)
class FiniteSupportShocks:
    """Uniform law on the standardized log deviations of a branching spec."""

    values: tuple[float, ...]

    @classmethod
    def from_spec(cls, spec: BranchingSpec) -> "FiniteSupportShocks":
        if spec.sigma2 == 0.0:
            raise DegenerateSpec("cannot standardize shocks of a zero-variance spec")
        s = spec.sigma
        return cls(tuple(d / s for d in spec.log_devs))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        vals = np.asarray(self.values)
        return vals[rng.integers(0, len(vals), size=size)]

    def has_upside(self, threshold: float) -> bool:
        return max(self.values) > threshold


@dataclass(frozen=True)
class LogUniformShocks:
    """U = log(u) + 1 for u uniform on (0, 1): mean 0, variance 1, support (-inf, 1]."""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        np.clip(u, np.finfo(float).tiny, None, out=u)
        return np.log(u) + 1.0

    def has_upside(self, threshold: float) -> bool:
        return threshold < 1.0


@dataclass(frozen=True)
class GaussianShocks:
    """Standard normal shocks."""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.standard_normal(size)

    def has_upside(self, threshold: float) -> bool:
        return True


ShockLaw = Union[FiniteSupportShocks, LogUniformShocks, GaussianShocks]


@dataclass(frozen=True)
class WalkParams:
    """Downward random walk X_t = X_{t-1} - mu + sigma U_t with standardized shocks."""

    mu: float
    sigma: float
    shocks: ShockLaw = GaussianShocks()

    def __post_init__(self) -> None:
        if self.mu <= 0.0:
            raise OutOfRange(f"drift mu={self.mu} must be positive")
        if self.sigma < 0.0:
            raise OutOfRange(f"sigma={self.sigma} must be >= 0")

    @classmethod
    def from_branching(cls, spec: BranchingSpec, alpha: float) -> "WalkParams":
        """Walk induced by a branching spec under decay rate alpha."""
        mu, sigma, _ = basic_params(spec, alpha)
        return cls(mu, sigma, FiniteSupportShocks.from_spec(spec))

    @property
    def beta(self) -> float:
        if self.sigma == 0.0:
            raise DegenerateSpec("beta undefined for a deterministic walk (sigma = 0)")
        return self.mu / (self.sigma * self.sigma)

    def has_survival_upside(self) -> bool:
        """Whether a single step can gain ground: P(U > mu/sigma) > 0."""
        if self.sigma == 0.0:
            return False
        return self.shocks.has_upside(self.mu / self.sigma)


@dataclass(frozen=True)
class DiffusionParams:
    """Drifted Brownian motion dX = -mu dt + sigma dW with mu = log(alpha) + tilde_mu."""

    tilde_mu: float
    sigma: float
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise OutOfRange(f"sigma={self.sigma} must be positive")
        if not (0.0 < self.alpha <= 1.0):
            raise OutOfRange(f"alpha={self.alpha} outside (0, 1]")

    @classmethod
    def from_mu(cls, mu: float, sigma: float) -> "DiffusionParams":
        """Parameters with total downward drift mu and no threshold decay."""
        return cls(tilde_mu=mu, sigma=sigma, alpha=1.0)

    @property
    def mu(self) -> float:
        return math.log(self.alpha) + self.tilde_mu

    @property
    def beta(self) -> float:
        return self.mu / (self.sigma * self.sigma)
