"""Interacting particle system with a population-defined threshold.

N particles diffuse in log amplitude; after each step the threshold is
recomputed as xi = varepsilon * mean(Phi) over the current particles,
particles strictly below it are absorbed, and each absorbed particle is
replaced by a copy of a uniformly chosen survivor. The log threshold then
grows linearly; the measured slope is compared with the exponential-ansatz
prediction sigma^2/(1 - varepsilon) - tilde_mu from endogenous_alpha.

The state is carried in centered coordinates Z - log phi0, so rescaling
phi0 shifts every reported threshold by exactly log(phi0) and changes
nothing else, bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import Extinction, OutOfRange
from .model import endogenous_alpha
from .rng import rng_stream
from .stats import FitResult, fit_power_law


@dataclass(frozen=True)
class PopulationState:
    """Particle log amplitudes with the current threshold and clone count."""

    z: np.ndarray
    log_xi: float
    time: float
    resample_count: int


@dataclass(frozen=True)
class PopulationRun:
    """Threshold trajectory of one run with its fitted growth rate."""

    times: np.ndarray
    log_xi: np.ndarray
    n_survivors: np.ndarray
    mean_z: np.ndarray
    fit: FitResult
    theory_log_alpha: float
    theory_c0: float
    resample_count: int
    final: PopulationState

    @property
    def slope(self) -> float:
        return self.fit.slope


def endogenous_population(
    tilde_mu: float,
    sigma: float,
    varepsilon: float,
    n_particles: int,
    tau: float,
    dt: float = 0.01,
    phi0: float = 1.0,
    seed: int = 0,
    burn_in: float = 0.3,
) -> PopulationRun:
    """Run the self-thresholding population and fit the threshold growth.

    Update order per step: diffuse all particles, recompute the threshold
    from the diffused population, absorb (strictly below dies, equality
    survives), then clone survivors onto the absorbed slots. Raises
    Extinction if a step leaves no survivors. The growth fit discards the
    first burn_in fraction of the trajectory.
    """
    if sigma <= 0.0:
        raise OutOfRange(f"sigma={sigma} must be positive")
    if not (0.0 < varepsilon < 1.0):
        raise OutOfRange(f"varepsilon={varepsilon} outside (0, 1)")
    if n_particles < 2:
        raise OutOfRange(f"n_particles={n_particles} must be >= 2")
    if tau <= 0.0 or dt <= 0.0 or dt > tau:
        raise OutOfRange(f"need 0 < dt <= tau, got dt={dt}, tau={tau}")
    if phi0 <= 0.0:
        raise OutOfRange(f"phi0={phi0} must be positive")
    if not (0.0 <= burn_in < 1.0):
        raise OutOfRange(f"burn_in={burn_in} outside [0, 1)")
    rng = rng_stream(seed, 0)
    n_steps = max(1, int(round(tau / dt)))
    dt_eff = tau / n_steps
    sdt = sigma * math.sqrt(dt_eff)
    log_phi0 = math.log(phi0)
    log_eps_tilde = math.log(varepsilon)
    z = np.zeros(n_particles)  # centered: Z - log phi0
    times = np.empty(n_steps)
    log_xi = np.empty(n_steps)
    n_survivors = np.empty(n_steps, dtype=np.int64)
    mean_z = np.empty(n_steps)
    resampled = 0
    cur_xi = -math.inf
    for step in range(n_steps):
        z += -tilde_mu * dt_eff + sdt * rng.standard_normal(n_particles)
        cur_xi = log_eps_tilde + float(logsumexp(z)) - math.log(n_particles)
        dead = z < cur_xi
        n_dead = int(np.count_nonzero(dead))
        if n_dead == n_particles:
            raise Extinction(f"all {n_particles} particles absorbed at step {step + 1}")
        if n_dead:
            survivors = np.nonzero(~dead)[0]
            donors = survivors[rng.integers(0, survivors.size, size=n_dead)]
            z[dead] = z[donors]
            resampled += n_dead
        times[step] = (step + 1) * dt_eff
        log_xi[step] = cur_xi + log_phi0
        n_survivors[step] = n_particles - n_dead
        mean_z[step] = float(z.mean()) + log_phi0
    start = int(burn_in * n_steps)
    if n_steps - start < 2:
        start = max(0, n_steps - 2)
    fit = fit_power_law(times[start:], log_xi[start:])
    theory = endogenous_alpha(tilde_mu, sigma, varepsilon, phi0)
    final = PopulationState(
        z=z + log_phi0,
        log_xi=cur_xi + log_phi0,
        time=float(times[-1]),
        resample_count=resampled,
    )
    return PopulationRun(
        times=times,
        log_xi=log_xi,
        n_survivors=n_survivors,
        mean_z=mean_z,
        fit=fit,
        theory_log_alpha=theory.log_alpha,
        theory_c0=theory.c0,
        resample_count=resampled,
        final=final,
    )
