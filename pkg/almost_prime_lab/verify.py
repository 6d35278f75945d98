"""Invariant suites run by `app.py verify`; each check reports pass/fail with a short detail line."""
from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from almost_prime_lab import expsum, gamma, kernel, params, primes, sieve
from almost_prime_lab.errors import PreconditionError
from almost_prime_lab.logging_setup import log_stage
from almost_prime_lab.models import CheckResult, SuiteResult

logger = logging.getLogger("almost_prime_lab.verify")

SANDWICH_MATRIX: List[Tuple[float, float]] = [(50, 10), (100, 10), (500, 20), (1000, 30)]
SANDWICH_M = 100_000
KERNEL_MATRIX: List[Tuple[float, int]] = [(0.1, 3), (0.01, 8), (0.5, 1)]
G_MATRIX: List[Tuple[float, float]] = [(343, 7), (27, 3), (100, 5), (1000, 10)]


def _check(name: str, passed: bool, detail: str = "") -> CheckResult:
    if not passed:
        logger.warning("check %s failed: %s", name, detail)
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def suite_params(seed: int, samples: int) -> SuiteResult:
    p = params.derive_params(1.005, 3.0 * 1.0e6 ** 1.005)
    obj = float(params.sieve_objective(params.DEFAULT_S, 2.0 / 3.0))
    scan = params.scan_sieve_quality(1.005, coefficient=0.75)
    return SuiteResult(
        suite="params",
        checks=[
            _check("beta_at_2.95", abs(p.beta - 0.030477) < 1e-5, f"beta={p.beta:.7f}"),
            _check("h_is_32", p.h == 32, f"h={p.h}"),
            _check("objective_two_thirds_positive", obj > 1e-5, f"f - 2/3 F = {obj:.4e}"),
            _check("objective_three_quarters_negative", scan.all_negative, f"max={scan.best_objective:.4e}"),
            _check("c_one_outside", params.check_theorem_range(1.0) == "outside"),
        ],
    )


def suite_primes(seed: int, samples: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    checks = [_check("primes_50_100", primes.sieve_primes(50, 100).size == 10)]
    table = primes.build_prime_table(200_000)
    seg = primes.sieve_primes(0, 200_000, segment_size=4096)
    checks.append(_check("segmented_matches_spf", np.array_equal(seg, table.primes), f"{seg.size} primes"))
    ns = rng.integers(2, 200_000, size=200)
    bad = [int(n) for n in ns if primes.is_prime(int(n)) != (int(n) in table)]
    checks.append(_check("trial_division_agrees", not bad, f"mismatches={bad[:5]}"))
    phi = primes.phi_table(5000)
    mu = primes.moebius_table(5000)
    bad_phi = [n for n in range(1, 5001) if primes.euler_phi(n, table) != phi[n] or primes.moebius(n, table) != mu[n]]
    checks.append(_check("phi_mu_tables", not bad_phi, f"mismatches={bad_phi[:5]}"))
    return SuiteResult(suite="primes", checks=checks)


def suite_sieve(seed: int, samples: int) -> SuiteResult:
    checks: List[CheckResult] = []
    for D, z in SANDWICH_MATRIX:
        r = sieve.sandwich_check(D, z, SANDWICH_M)
        checks.append(_check(f"sandwich_D{D:g}_z{z:g}", r.violations == 0, f"violations={r.violations}"))
    vs = sieve.vector_sieve_sample(100, 10, m_max=2000, samples=samples, seed=seed)
    checks.append(_check("vector_sieve", vs.violations == 0, f"checked={vs.checked} violations={vs.violations}"))
    for D, z in G_MATRIX:
        g = sieve.g_bounds_check(D, z)
        checks.append(
            _check(f"G_chain_D{D:g}_z{z:g}", g.chain_holds, f"{g.G_minus:.6f} <= {g.curly_F:.6f} <= {g.G_plus:.6f}")
        )
    grid = np.linspace(2.0, 3.0, 101)
    f = np.array([sieve.sieve_functions(s).f for s in grid])
    F = np.array([sieve.sieve_functions(s).F for s in grid])
    checks.append(_check("f_increasing_F_decreasing", bool(np.all(np.diff(f) > 0) and np.all(np.diff(F) < 0))))
    return SuiteResult(suite="sieve", checks=checks)


def suite_kernel(seed: int, samples: int) -> SuiteResult:
    checks: List[CheckResult] = []
    xs = np.geomspace(1e-3, 1e6, 10_000)
    for vt, k in KERNEL_MATRIX:
        spec = kernel.make_kernel(vt, k)
        r = kernel.verify_kernel_bounds(spec, xs)
        checks.append(_check(f"bounds_vt{vt:g}_k{k}", r.violations == 0, f"violations={r.violations}"))
        plateau = np.linspace(-0.75 * vt, 0.75 * vt, 101)
        outside = np.concatenate([np.linspace(vt, 2 * vt, 51), -np.linspace(vt, 2 * vt, 51)])
        shape = bool(np.all(kernel.theta_eval(spec, plateau) == 1.0) and np.all(kernel.theta_eval(spec, outside) == 0.0))
        checks.append(_check(f"plateau_support_vt{vt:g}_k{k}", shape))
    spec = kernel.make_kernel(0.5, 8)
    rt = kernel.fourier_roundtrip_error(spec, 1000.0)
    checks.append(_check("fourier_roundtrip", rt.max_error <= 1e-6, f"max_error={rt.max_error:.3e}"))
    return SuiteResult(suite="kernel", checks=checks)


def suite_expsum(seed: int, samples: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    checks: List[CheckResult] = []
    p = params.desk_params(1.1, X=2000.0, vartheta=0.05, z=5.0)
    ctx = expsum.build_context(p)
    t = rng.uniform(-1.0, 1.0, size=50)
    for sign in ("plus", "minus", "unsieved"):
        a, b = expsum.L_sum(ctx, sign, t), expsum.L_sum(ctx, sign, -t)
        checks.append(_check(f"conjugate_symmetry_{sign}", bool(np.max(np.abs(a - np.conj(b))) <= 1e-9)))
        bound = expsum.trivial_bound(ctx, sign)
        checks.append(_check(f"trivial_bound_{sign}", bool(np.max(np.abs(a)) <= bound * (1 + 1e-12))))

    worst = 0.0
    for _ in range(20):
        X = float(rng.uniform(100.0, 1.0e4))
        alpha = float(rng.uniform(-1.0, 1.0))
        exact = expsum.I_closed_form_c1(alpha, X)
        worst = max(worst, abs(expsum.I_integral(alpha, X, 1.0) - exact) / X)
    checks.append(_check("I_matches_closed_form", worst <= expsum.I_TOL, f"worst error/X={worst:.3e}"))

    dec = expsum.decay_check(1.0e4, 1.005, 1.0e4 ** -1.005 * np.geomspace(1.0, 1.0e3, 40))
    checks.append(_check("I_decay_bound", dec.holds, f"max ratio={dec.max_ratio:.4f}"))

    missed = []
    for X in range(4, 25):
        interval = expsum.min_sum(X, 1.1)
        exact_val = expsum.minsum_exact(X, 1.1)
        if not (interval.lower <= exact_val <= interval.upper):
            missed.append(X)
    checks.append(_check("min_sum_interval_contains_exact", not missed, f"missed X={missed}"))
    return SuiteResult(suite="expsum", checks=checks)


def _toy_context() -> Tuple[expsum.ExpSumContext, kernel.KernelSpec, float]:
    p = params.desk_params(1.1, X=100.0, vartheta=0.5, z=5.0, D=50.0)
    ctx = expsum.build_context(p)
    # centre N on a quadruple of rough primes so every count is nonzero
    x = ctx.powers[gamma.admissible(ctx, True)]
    N = float(x[0] + x[1] + x[-1] + x[0]) + 0.1
    return ctx, kernel.make_kernel(0.5, 8), N


def suite_gamma(seed: int, samples: int) -> SuiteResult:
    checks: List[CheckResult] = []
    ctx, spec, N = _toy_context()
    vt = spec.vartheta

    idx = gamma.admissible(ctx, True)
    brute = gamma.gamma_direct_bruteforce(ctx.primes[idx], ctx.params.c, N, vt)
    mitm = gamma.gamma_direct(ctx, vt, True, N=N)
    checks.append(_check("mitm_equals_bruteforce", mitm == brute, f"{mitm!r} vs {brute!r}"))

    inner = gamma.gamma_direct(ctx, 0.75 * vt, True, N=N)
    smooth = gamma.gamma_smoothed(ctx, spec, True, "indicator", N=N)
    checks.append(_check("theta_sandwich", inner <= smooth <= mitm, f"{inner:.6g} <= {smooth:.6g} <= {mitm:.6g}"))

    mixed = [gamma.gamma_smoothed(ctx, spec, True, f"mixed{i}", N=N) for i in range(1, 5)]
    spread = max(mixed) - min(mixed)
    checks.append(_check("mixed_symmetry", spread <= 1e-10 * max(1.0, max(abs(m) for m in mixed)), f"spread={spread:.3e}"))

    g5 = gamma.gamma_smoothed(ctx, spec, True, "upper4", N=N)
    g0 = 4.0 * mixed[0] - 3.0 * g5
    checks.append(_check("vector_sieve_decomposition", smooth >= g0 - 1e-9 * max(1.0, abs(g0)), f"{smooth:.6g} >= {g0:.6g}"))
    return SuiteResult(suite="gamma", checks=checks)


SUITES: Dict[str, Callable[[int, int], SuiteResult]] = {
    "params": suite_params,
    "primes": suite_primes,
    "sieve": suite_sieve,
    "kernel": suite_kernel,
    "expsum": suite_expsum,
    "gamma": suite_gamma,
}


def run_suites(name: str, seed: int = 20170101, samples: int = 1_000_000) -> List[SuiteResult]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise PreconditionError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    out = []
    for n in names:
        with log_stage(logger, f"suite {n}"):
            result = SUITES[n](seed, samples)
        logger.info("suite %s: %s", n, "passed" if result.passed else "FAILED")
        out.append(result)
    return out
