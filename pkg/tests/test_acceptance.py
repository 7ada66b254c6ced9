"""End-to-end acceptance checks with pinned targets and tolerances.

Each criterion is one test that prints a single line

    ACCEPTANCE nn PASS: ...   or   ACCEPTANCE nn FAIL: ...

(visible with -s; the same text is the assertion message, so a plain -v
run carries one verdict per criterion too). Tolerances, targets, and time
budgets are stated inline and are not loosened to force green. Several
criteria pin first-order asymptotic constants that the exact dynamics
measurably miss at every reachable scale; those tests fail by design, and
their docstrings and failure messages carry the measured values, the
exact-oracle values where one exists, and the reason for the gap.

Run with: python3 -m pytest tests/test_acceptance.py -v -s
"""

import math
import time
from fractions import Fraction

import numpy as np

from born_branch import (
    DEFAULT_LCG_ALPHA,
    BranchingSpec,
    DiffusionParams,
    Exogenous,
    LcgSpec,
    MeasurementSetup,
    RandomBarrier,
    TooFewSurvivors,
    WalkParams,
    alpha_for_unit_beta,
    batch_survive,
    binomial_count_fraction,
    binomial_interval_logprob,
    conditional_mean_ratio,
    conditioned_sample,
    count_survivors_dp,
    endogenous_population,
    enumerate_brute,
    ks_distance,
    lcg_delta_stream,
    lcg_walk_survival,
    log_survival_closed_form,
    measurement_pipeline,
    rng_stream,
    scan_rows_from_series,
    survival_closed_form,
    survival_ratio,
)


def _verdict(n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n:02d} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    assert ok, line


def test_criterion_01_dp_matches_brute_force():
    """Survivor counts from the DP equal brute-force path enumeration.

    50 random specs: K cycles through {2, 3, 4}, branch fractions are
    Dirichlet draws floored at 0.05, alpha uniform in [0.3, 0.9], epsilon
    log-uniform in [1e-4, 0.3], horizon t uniform in [4, cap(K)] with caps
    12/11/9 so every K^t enumeration stays small and t <= 12 throughout.
    Counts are integers, so the comparison is exact equality at every
    recorded depth, not approx. Budget 60 s; measured about 0.1 s.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    t_cap = {2: 12, 3: 11, 4: 9}
    compared = 0
    for i in range(50):
        k = (2, 3, 4)[i % 3]
        while True:
            deltas = rng.dirichlet(np.ones(k))
            if deltas.min() >= 0.05:
                break
        alpha = float(rng.uniform(0.3, 0.9))
        epsilon = float(math.exp(rng.uniform(math.log(1e-4), math.log(0.3))))
        t = int(rng.integers(4, t_cap[k] + 1))
        spec = BranchingSpec(tuple(float(x) for x in deltas))
        sched = Exogenous(epsilon, alpha)
        series = count_survivors_dp(spec, sched, t, [1.0], record_ts=range(t + 1))
        brute = {r.t: r.counts[0] for r in enumerate_brute(spec, sched, t, 1.0)}
        if not all(r.counts[0] == brute[r.t] for r in series):
            _verdict(
                1,
                False,
                f"count mismatch at spec {i}: K={k} t={t} "
                f"alpha={alpha:.4f} epsilon={epsilon:.2e}",
            )
        compared += len(series)
    elapsed = time.perf_counter() - t0
    _verdict(
        1,
        elapsed < 60.0,
        f"50 random specs, {compared} recorded counts all equal "
        f"({elapsed:.1f}s, budget 60s)",
    )


def test_criterion_02_critical_tuning_exponent_and_ratio():
    """Near-critical DP: the fitted exponent holds, the 4:1 ratio drifts out.

    deltas (1/6, 1/3, 1/2) with alpha = 0.372041 (the unit-exponent tuning
    delta_bar e^{sigma^2}), epsilon = 1e-6, starts {1, 2, 4, 8, 16},
    checkpoints t = 400..1000 step 100. Required at every checkpoint:
    fitted exponent in [0.85, 1.15] AND N_t(4)/N_t(1) in [3.4, 4.6].
    The exponent clause holds (0.965 to 1.111 over the grid). The ratio
    clause fails: the ratio rises through the band (3.882 at t = 400) and
    crosses 4.6 between t = 800 and t = 900 (4.645 at 900, 4.713 at 1000),
    because at the critical tuning the finite-horizon counts carry a
    slowly growing start-dependent correction on top of the phi^beta tilt,
    the count analogue of the d e^{beta d} prefactor in the diffusion
    survival formula. Budget 180 s.
    """
    t0 = time.perf_counter()
    spec = BranchingSpec((1.0 / 6.0, 1.0 / 3.0, 1.0 / 2.0))
    sched = Exogenous(1e-6, 0.372041)
    phis = [1.0, 2.0, 4.0, 8.0, 16.0]
    series = count_survivors_dp(
        spec, sched, 1000, phis, record_ts=range(400, 1001, 100)
    )
    rows = scan_rows_from_series(series, phis, [(4.0, 1.0)])
    beta_ok = all(0.85 <= r.beta_hat <= 1.15 for r in rows)
    bad = [f"t={r.t}:{r.ratios[0]:.3f}" for r in rows if not 3.4 <= r.ratios[0] <= 4.6]
    elapsed = time.perf_counter() - t0
    lo_b = min(r.beta_hat for r in rows)
    hi_b = max(r.beta_hat for r in rows)
    ratio_part = (
        "ratio(4:1) outside [3.4, 4.6] at " + ", ".join(bad)
        if bad
        else "ratio(4:1) in [3.4, 4.6] at all checkpoints"
    )
    _verdict(
        2,
        beta_ok and not bad and elapsed < 180.0,
        f"beta_hat {lo_b:.3f}..{hi_b:.3f} vs [0.85, 1.15]; {ratio_part} "
        f"({elapsed:.0f}s, budget 180s)",
    )


def test_criterion_03_infeasible_tuning_goes_extinct():
    """A tuning above the largest branch fraction dies out in the DP.

    deltas (0.05, 0.45, 0.5) give delta_bar e^{sigma^2} = 0.691397, which
    exceeds max delta = 0.5: even the best branch loses log(0.5/alpha) =
    -0.3236 per step against the threshold, so no path can keep pace. The
    tuning helper flags this (feasible = False) and the DP confirms it:
    with epsilon = 1e-6 the count hits zero at t = 43 (log epsilon =
    -13.816 crossed near t = 42.7), far inside the t <= 2000 requirement.
    Budget 120 s; measured well under 1 s.
    """
    t0 = time.perf_counter()
    spec = BranchingSpec((0.05, 0.45, 0.5))
    info = alpha_for_unit_beta(spec)
    alpha_ok = math.isclose(info.alpha, 0.691397, rel_tol=1e-5)
    flagged_ok = not info.feasible
    series = count_survivors_dp(
        spec, Exogenous(1e-6, info.alpha), 200, [1.0], record_ts=range(201)
    )
    extinct = [r.t for r in series if r.counts[0] == 0]
    extinct_ok = bool(extinct) and extinct[0] <= 2000
    elapsed = time.perf_counter() - t0
    first = extinct[0] if extinct else "never"
    _verdict(
        3,
        alpha_ok and flagged_ok and extinct_ok and elapsed < 120.0,
        f"alpha {info.alpha:.6f} flagged infeasible (exceeds max delta 0.5); "
        f"N_t = 0 from t = {first} (<= 2000) ({elapsed:.1f}s, budget 120s)",
    )


def test_criterion_04_start_tilt_against_bare_exponential():
    """Closed-form survival misses the bare e^{beta dx} tilt at the tolerances.

    mu = sigma^2 = 1, log epsilon = -18.4, exact closed form only (no
    sampling, so the gaps are deterministic). Required: the survival ratio
    between starts x_a = 2 and x_b = 0 at tau = 500 within 2% of e^2, and
    the fitted exponent over starts {0, 1, 2, 3} at tau = 1000 within 0.5%
    of 1. Measured: ratio 7.5814 vs e^2 = 7.3891, a 2.60% gap; exponent
    1.0305, a 3.05% gap. Both gaps are structural: with d(x) = x - log eps,

      log q(x) - log q(0) = beta x + log(d(x)/d(0)) - (d(x)^2 - d(0)^2)
                            / (2 sigma^2 tau) + o(1),

    and at these depths the prefactor term contributes +0.1036 and the
    horizon term -0.0776 to the tau = 500 log ratio. They shrink only
    like 1/log(1/epsilon) and d^2/tau, so no reachable (epsilon, tau)
    meets both tolerances while the bare tilt is the target. Budget 1 s.
    """
    t0 = time.perf_counter()
    log_eps = -18.4
    ratio = math.exp(
        log_survival_closed_form(1.0, 1.0, 2.0 - log_eps, 500.0)
        - log_survival_closed_form(1.0, 1.0, 0.0 - log_eps, 500.0)
    )
    target = math.exp(2.0)
    ratio_err = abs(ratio / target - 1.0)
    xs = np.array([0.0, 1.0, 2.0, 3.0])
    logs = np.array(
        [log_survival_closed_form(1.0, 1.0, x - log_eps, 1000.0) for x in xs]
    )
    slope = float(np.polyfit(xs, logs, 1)[0])
    slope_err = abs(slope - 1.0)
    elapsed = time.perf_counter() - t0
    _verdict(
        4,
        ratio_err <= 0.02 and slope_err <= 0.005 and elapsed < 1.0,
        f"ratio {ratio:.4f} vs e^2 = {target:.4f}, err {100 * ratio_err:.2f}% "
        f"(tol 2%); fitted exponent {slope:.4f}, err {100 * slope_err:.2f}% "
        f"(tol 0.5%) ({1e3 * elapsed:.0f}ms, budget 1s)",
    )


def test_criterion_05_euler_survival_unbiased_on_grid():
    """Euler-simulated survival matches the closed form across a 3x3 grid.

    mu = sigma = 1, d in {2, 3, 5} x tau in {5, 10, 20}, 1e5 paths per
    cell at dt = 0.01 on disjoint streams. Required: every cell's z-score
    against the closed form is below 3 in magnitude. The half-step bridge
    correction inside the stepper is what keeps the Euler scheme unbiased
    here; without it the d = 2, tau = 5 cell alone would sit several
    standard errors high. Calibration gives max |z| = 1.37. Budget 120 s;
    measured about 30 s.
    """
    t0 = time.perf_counter()
    zs = []
    idx = 0
    for d in (2.0, 3.0, 5.0):
        for tau in (5.0, 10.0, 20.0):
            alive, _ = batch_survive(
                1.0, 1.0, d, tau, 0.01, rng_stream(500, idx), 100_000
            )
            q = survival_closed_form(1.0, 1.0, d, tau)
            se = math.sqrt(q * (1.0 - q) / 100_000)
            zs.append(abs(float(alive.mean()) - q) / se)
            idx += 1
    elapsed = time.perf_counter() - t0
    _verdict(
        5,
        max(zs) < 3.0 and elapsed < 120.0,
        f"9 cells, max |z| = {max(zs):.2f} (tol 3) ({elapsed:.0f}s, budget 120s)",
    )


def test_criterion_06_conditioned_law_is_not_shifted_exponential():
    """The survivor overshoot law fails the shifted-exponential KS test.

    mu = sigma = 1, barrier at log epsilon = -3, start x = 0, tau = 8,
    1e6 paths at dt = 0.01 give 18224 survivors (>= 1e4 required).
    Required: KS distance to the best-fit shifted exponential below 0.02,
    and a memorylessness probe passing. Measured: KS 0.152, and with
    s = t = the sample median the probe gives P(Y > s + t | Y > s) = 0.267
    against P(Y > t) = 0.500, a gap of 0.233 (tolerance 0.05, about ten
    standard errors of slack for a true exponential). Both numbers are
    what a Gamma(2, beta) overshoot law predicts, not noise: its KS
    distance to any exponential is about 0.15, and its conditional tail
    at the median m = 1.678 is (1 + 2m) e^{-m} / (1 + m) = 0.304. The
    fitted rate 0.600 is reported against both candidate rates
    mu/sigma^2 = 1 and 2 mu/sigma^2 = 2; it sits below both because the
    Gamma(2, 1) mean is twice the Exp(1) mean. Budget 180 s.
    """
    t0 = time.perf_counter()
    cs = conditioned_sample(
        DiffusionParams.from_mu(1.0, 1.0),
        math.exp(-3.0),
        8.0,
        1_000_000,
        seed=61,
        x0=0.0,
        dt=0.01,
    )
    ys = cs.ys
    m = float(np.median(ys))
    n_tail = int((ys > m).sum())
    cond = float((ys > 2.0 * m).sum()) / n_tail
    uncond = float((ys > m).mean())
    probe_gap = abs(cond - uncond)
    elapsed = time.perf_counter() - t0
    count_ok = cs.n_survivors >= 10_000
    ks_ok = cs.ks_fitted_exponential < 0.02
    probe_ok = probe_gap < 0.05
    _verdict(
        6,
        count_ok and ks_ok and probe_ok and elapsed < 180.0,
        f"{cs.n_survivors} survivors; KS vs fitted shifted exponential "
        f"{cs.ks_fitted_exponential:.3f} (tol 0.02); memorylessness gap "
        f"{probe_gap:.3f} (tol 0.05); fitted rate {cs.fitted_rate:.3f} vs "
        f"mu/sigma^2 = 1 and 2mu/sigma^2 = 2 ({elapsed:.0f}s, budget 180s)",
    )


def test_criterion_07_conditional_mean_ratio_constants():
    """E[value | survival] / threshold misses beta/(beta-1) at both betas.

    The pinned constant beta/(beta-1) is E[e^Y] under an Exp(beta)
    overshoot law: 5 at beta = 1.25 and 2 at beta = 2, required within
    10%. Exact image-density quadrature puts the true conditional mean
    ratio at 7.772 (beta = 1.25: mu = 1.25, sigma = 1, d = 3, tau = 6)
    and 3.926 (beta = 2: mu = 2, sigma = 1, d = 4, tau = 4); the Monte
    Carlo runs here agree with those oracles (calibration 7.65 +- 0.21
    and 3.98 +- 0.08), so the misses are the estimand, not the estimator.
    Under the Gamma(2, beta) law of criterion 6 the stationary value
    would be (beta/(beta-1))^2 = 25 and 4; the finite-tau values sit
    between the two candidates, and every survivor-rich (d, tau) cell
    scanned lies outside the 10% bands. Budget 120 s.
    """
    t0 = time.perf_counter()
    r_a = conditional_mean_ratio(
        DiffusionParams.from_mu(1.25, 1.0),
        math.exp(-3.0),
        6.0,
        600_000,
        seed=71,
        x0=0.0,
        dt=0.01,
    )
    r_b = conditional_mean_ratio(
        DiffusionParams.from_mu(2.0, 1.0),
        math.exp(-4.0),
        4.0,
        400_000,
        seed=72,
        x0=0.0,
        dt=0.01,
    )
    err_a = abs(r_a.estimate / 5.0 - 1.0)
    err_b = abs(r_b.estimate / 2.0 - 1.0)
    elapsed = time.perf_counter() - t0
    _verdict(
        7,
        err_a <= 0.10 and err_b <= 0.10 and elapsed < 120.0,
        f"beta=1.25: {r_a.estimate:.3f} +- {r_a.se:.3f} vs 5 "
        f"(err {100 * err_a:.0f}%, tol 10%); beta=2: {r_b.estimate:.3f} "
        f"+- {r_b.se:.3f} vs 2 (err {100 * err_b:.0f}%, tol 10%) "
        f"({elapsed:.0f}s, budget 120s)",
    )


def test_criterion_08_endogenous_growth_and_scale_invariance():
    """Self-thresholding population: invariance is exact, the rate is not 0.25.

    tilde_mu = 1, sigma = 1, tilde_epsilon = 0.2, 1e5 particles, tau =
    100, dt = 0.01. Required: threshold growth slope within 0.25 +- 0.03
    (the quasi-stationary ansatz log alpha = sigma^2 / (1 - eps) -
    tilde_mu), and slope change below 0.005 when every start is scaled
    by 100. Measured slope 0.6809, nearly triple the ansatz and stable
    across seeds and population sizes: resampling a fixed fraction each
    step feeds the threshold faster than the small-fraction ansatz
    allows. The invariance clause is exact here, not merely within
    tolerance: scaling starts by 100 shifts every log coordinate and the
    recomputed threshold by the same log 100, so with shared shocks the
    survivor sets are identical and the slope change is 0.0. Budget 300 s;
    measured about 55 s for the two runs.
    """
    t0 = time.perf_counter()
    run_a = endogenous_population(
        1.0, 1.0, 0.2, 100_000, 100.0, dt=0.01, phi0=1.0, seed=81
    )
    run_b = endogenous_population(
        1.0, 1.0, 0.2, 100_000, 100.0, dt=0.01, phi0=100.0, seed=81
    )
    slope_err = abs(run_a.slope - 0.25)
    d_slope = abs(run_a.slope - run_b.slope)
    elapsed = time.perf_counter() - t0
    _verdict(
        8,
        slope_err <= 0.03 and d_slope < 0.005 and elapsed < 300.0,
        f"slope {run_a.slope:.4f} vs 0.25 +- 0.03 (ansatz "
        f"{run_a.theory_log_alpha:.2f}); scale-invariance slope change "
        f"{d_slope:.1e} (tol 0.005) ({elapsed:.0f}s, budget 300s)",
    )


def test_criterion_09_measurement_frequencies_at_depth():
    """Outcome frequencies at tau = 200 are unreachable by direct sampling.

    deltas (0.2, 0.3, 0.5) with mu = sigma^2 = 1 and tau = 200. Required:
    >= 3e4 survivors and per-arm frequencies within 3 SE of the branch
    fractions. Survival per path decays like e^{-mu^2 tau / (2 sigma^2)}
    = e^{-100}, so the closed-form precheck predicts about 1.4e-39
    survivors from the 1e7 paths attempted here; reaching 3e4 survivors
    would take about 2e50 paths. The pipeline refuses to run rather than
    tally an empty sample, and this criterion is recorded as failed with
    the precheck's numbers. The factorization it targets is validated at
    reachable depth in test_measure.py (tau = 70, tau * min delta = 21,
    frequencies within 4 SE of the branch fractions). Budget 240 s.
    """
    t0 = time.perf_counter()
    setup = MeasurementSetup((0.2, 0.3, 0.5), 1.0, 1e-3, 200.0)
    try:
        res = measurement_pipeline(setup, 10_000_000, seed=9)
    except TooFewSurvivors as exc:
        elapsed = time.perf_counter() - t0
        _verdict(9, False, f"unreachable at tau=200: {exc} ({elapsed:.0f}s)")
    freq_ok = all(
        abs(arm.frequency - w) <= 3.0 * arm.freq_se
        for arm, w in zip(res.outcomes, res.expected_frequencies)
    )
    elapsed = time.perf_counter() - t0
    _verdict(
        9,
        res.n_survivors >= 30_000 and freq_ok and elapsed < 240.0,
        f"{res.n_survivors} survivors; frequencies "
        f"{[round(a.frequency, 4) for a in res.outcomes]} vs "
        f"{res.expected_frequencies} within 3 SE ({elapsed:.0f}s, budget 240s)",
    )


def test_criterion_10_conditioned_start_medians_at_depth():
    """Conditioned start medians at tau in {250, 500, 1000} are unreachable.

    Same setup as criterion 9. Required: for the delta = 0.2 arm, the
    median conditioned start at tau = 500 within +-0.25 of log epsilon +
    log 2 + log(tau delta), and the slope of that median against
    log(tau delta) over tau in {250, 500, 1000} within 1 +- 0.1. Survival
    at tau = 500 is of order e^{-250}: the precheck predicts about 6e-105
    survivors from 1e7 paths, so all three pipeline calls refuse to run
    and the criterion is recorded as failed with their numbers. The
    median law it targets is validated at reachable depth in
    test_measure.py (tau = 70 and 280, including the slope-1 doubling
    check). Budget 300 s.
    """
    t0 = time.perf_counter()
    taus = (250.0, 500.0, 1000.0)
    medians = {}
    failures = []
    for tau in taus:
        setup = MeasurementSetup((0.2, 0.3, 0.5), 1.0, 1e-3, tau)
        try:
            res = measurement_pipeline(setup, 10_000_000, seed=10)
        except TooFewSurvivors as exc:
            failures.append(f"tau={tau:.0f}: {str(exc).split(';')[0]}")
        else:
            medians[tau] = res.outcomes[0]
    elapsed = time.perf_counter() - t0
    if failures:
        _verdict(10, False, "; ".join(failures) + f" ({elapsed:.0f}s)")
    arm = medians[500.0]
    median_ok = abs(arm.median_x0 - arm.median_target) <= 0.25
    xs = [math.log(tau * 0.2) for tau in taus]
    ys = [medians[tau].median_x0 for tau in taus]
    slope = float(np.polyfit(xs, ys, 1)[0])
    _verdict(
        10,
        median_ok and abs(slope - 1.0) <= 0.1 and elapsed < 300.0,
        f"median {arm.median_x0:.3f} vs target {arm.median_target:.3f} "
        f"(tol 0.25); slope {slope:.3f} vs 1 +- 0.1 ({elapsed:.0f}s, budget 300s)",
    )


def test_criterion_11_binomial_interval_tails():
    """Big-integer binomial tails at n = 1000 stay exact below underflow.

    P(100 <= S <= 300) for S ~ Binomial(1000, 0.2): the complement must
    equal 2.2e-14 within 20% relative; the two-sided log-tail sum gives
    2.2021e-14. Counting equally weighted outcomes instead, sum of
    C(1000, k) for k in [100, 300] over 2^1000 must be below 1e-37, and
    the check is an exact Fraction comparison (log10 = -37.05), immune
    to float underflow. Budget 5 s.
    """
    t0 = time.perf_counter()
    _, log_out = binomial_interval_logprob(1000, 0.2, 100, 300)
    outside = math.exp(log_out)
    prob_ok = abs(outside / 2.2e-14 - 1.0) <= 0.20
    log10_frac, frac = binomial_count_fraction(1000, 100, 300, exact=True)
    frac_ok = frac < Fraction(1, 10**37)
    elapsed = time.perf_counter() - t0
    _verdict(
        11,
        prob_ok and frac_ok and elapsed < 5.0,
        f"complement {outside:.6e} (target 2.2e-14 +- 20%); count fraction "
        f"10^{log10_frac:.2f} < 1e-37 as an exact Fraction "
        f"({elapsed:.1f}s, budget 5s)",
    )


def test_criterion_12_lcg_shock_moments_and_walk_exponent():
    """The congruential shock stream is uniform but has the wrong variance.

    Modulus p = 2^61 - 1, multiplier 6364136223846793005, 1e6 transitions.
    Required: KS distance to Uniform(0, 1) below 0.002, mean(-log delta)
    within 1 +- 0.01, var(log delta) within 2% of 1/12, and the walk
    exponent under the tuning alpha = e^{-11/12} within [0.85, 1.15].
    The first two hold (KS 0.00061, mean 0.99984). The variance clause
    fails: var(log U) for U ~ Uniform(0, 1) is 1, and the stream delivers
    1.0009; 1/12 is the variance of U itself, not of its log. The
    exponent clause fails for the same reason: the tuning would give
    drift/variance = (1 - 11/12) / (1/12) = 1 only if var(log delta)
    were 1/12; with the actual unit variance the predicted exponent is
    (1/12) / 1 = 0.083, and the walk over starts {1, 4, 16, 64} measures
    0.122 +- 0.004 (finite-depth corrections push it slightly above the
    prediction), far outside the band. Budget 180 s.
    """
    t0 = time.perf_counter()
    spec = LcgSpec((1 << 61) - 1, 6364136223846793005)
    deltas = lcg_delta_stream(spec, 1_000_000, seed=0)
    ks = ks_distance(deltas, lambda v: np.clip(v, 0.0, 1.0))
    logs = np.log(deltas)
    mean_neg = float(-logs.mean())
    var_log = float(logs.var())
    walk = lcg_walk_survival(
        spec,
        Exogenous(1e-4, DEFAULT_LCG_ALPHA),
        200,
        [1.0, 4.0, 16.0, 64.0],
        20_000,
        seed=121,
    )
    elapsed = time.perf_counter() - t0
    clauses = [
        (f"KS {ks:.5f} (tol 0.002)", ks < 0.002),
        (f"mean(-log delta) {mean_neg:.4f} (1 +- 0.01)", abs(mean_neg - 1.0) <= 0.01),
        (
            f"var(log delta) {var_log:.4f} (1/12 +- 2%)",
            abs(var_log - 1.0 / 12.0) <= 0.02 / 12.0,
        ),
        (
            f"beta_hat {walk.beta_hat:.3f} ([0.85, 1.15])",
            0.85 <= walk.beta_hat <= 1.15,
        ),
    ]
    detail = "; ".join(f"{txt} {'pass' if ok else 'FAIL'}" for txt, ok in clauses)
    _verdict(
        12,
        all(ok for _, ok in clauses) and elapsed < 180.0,
        detail + f" ({elapsed:.0f}s, budget 180s)",
    )


def test_criterion_13_random_barrier_matches_fixed():
    """Zero-mean barrier noise leaves the start-survival ratio unchanged.

    Gaussian walk mu = 0.15, sigma = 1.1, flat barrier at epsilon = 1e-8,
    t = 300, starts 1.0 and 0.0, 2e5 paths per arm. Required: the
    survival ratio with per-step N(0, 0.5^2) barrier noise agrees with
    the fixed-barrier ratio within 3 combined standard errors. The noise
    is zero mean and independent of the walk shocks, so it perturbs both
    arms' survival alike without moving the tilt between starts;
    calibration gives 1.1359 +- 0.0043 fixed vs 1.1462 +- 0.0045 noisy,
    a gap of 0.0103 against an allowance of 0.0185. Budget 120 s.
    """
    t0 = time.perf_counter()
    params = WalkParams(0.15, 1.1)
    fixed = survival_ratio(
        params, 1.0, 0.0, Exogenous(1e-8, 0.5), 300, 200_000, seed=131
    )
    noisy = survival_ratio(
        params, 1.0, 0.0, RandomBarrier(1e-8, 0.5), 300, 200_000, seed=132
    )
    gap = abs(noisy.ratio - fixed.ratio)
    allowance = 3.0 * math.hypot(noisy.se, fixed.se)
    elapsed = time.perf_counter() - t0
    _verdict(
        13,
        gap <= allowance and elapsed < 120.0,
        f"fixed {fixed.ratio:.4f} +- {fixed.se:.4f} vs noisy {noisy.ratio:.4f} "
        f"+- {noisy.se:.4f}: gap {gap:.4f} <= 3 SE allowance {allowance:.4f} "
        f"({elapsed:.0f}s, budget 120s)",
    )
