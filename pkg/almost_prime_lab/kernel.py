"""
Smoothing pair (theta, Theta): theta is the k-fold box average of the indicator of [-a, a]
with a = 7*vartheta/8 and box half-width delta = vartheta/(8k), so theta = 1 on |y| <= 3*vartheta/4
and theta = 0 on |y| >= vartheta. Theta is its Fourier transform with e(-xy).
"""
from __future__ import annotations

import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from almost_prime_lab.errors import PreconditionError
from almost_prime_lab.models import KernelBoundReport, KernelSpec, RoundtripReport

logger = logging.getLogger("almost_prime_lab.kernel")

DEFAULT_K = 8
BOUND_RTOL = 1e-12


def make_kernel(vartheta: float, k: int = DEFAULT_K) -> KernelSpec:
    if vartheta <= 0:
        raise PreconditionError(f"vartheta must be positive, got {vartheta}")
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    return KernelSpec(vartheta=vartheta, k=k)


def irwin_hall_cdf(x: np.ndarray | float, k: int) -> np.ndarray:
    """CDF of the sum of k independent U[0,1], evaluated on the nearer half to limit cancellation."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, float(k))
    reflect = xc > k / 2.0
    u = np.where(reflect, k - xc, xc)
    acc = np.zeros_like(u)
    for j in range(k + 1):
        acc += (-1) ** j * math.comb(k, j) * np.clip(u - j, 0.0, None) ** k
    acc /= math.factorial(k)
    out = np.where(reflect, 1.0 - acc, acc)
    out = np.where(x <= 0.0, 0.0, out)
    out = np.where(x >= k, 1.0, out)
    return out


def theta_eval(spec: KernelSpec, y: np.ndarray | float) -> np.ndarray | float:
    """theta_k(y) = P(|y + S| <= a), S a sum of k uniforms on [-delta, delta]."""
    scalar = np.ndim(y) == 0
    y = np.abs(np.asarray(y, dtype=float))
    a, delta, k = spec.a, spec.delta, spec.k

    def cdf_s(t: np.ndarray) -> np.ndarray:
        return irwin_hall_cdf((t + k * delta) / (2.0 * delta), k)

    val = cdf_s(a - y) - cdf_s(-a - y)
    val = np.clip(val, 0.0, 1.0)
    val = np.where(y <= 0.75 * spec.vartheta, 1.0, val)
    val = np.where(y >= spec.vartheta, 0.0, val)
    return float(val) if scalar else val


def theta_fourier(spec: KernelSpec, x: np.ndarray | float) -> np.ndarray | float:
    """Theta(x) = 2a sinc(2ax) sinc(2 delta x)^k, with numpy's normalized sinc."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    val = 2.0 * spec.a * np.sinc(2.0 * spec.a * x) * np.sinc(2.0 * spec.delta * x) ** spec.k
    return float(val) if scalar else val


def bound_branches(spec: KernelSpec, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three branches 7*vartheta/4, 1/(pi|x|), (1/(pi|x|)) (k/(2 pi |x| vartheta/8))^k."""
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", over="ignore"):
        b1 = np.full_like(x, 7.0 * spec.vartheta / 4.0)
        b2 = np.where(x > 0, 1.0 / (np.pi * x), np.inf)
        q = spec.k / (2.0 * np.pi * x * spec.vartheta / 8.0)
        b3 = np.where(x > 0, b2 * q ** spec.k, np.inf)
    return b1, b2, b3


def verify_kernel_bounds(spec: KernelSpec, xs: Sequence[float] | np.ndarray) -> KernelBoundReport:
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise PreconditionError("x-grid is empty")
    vals = np.abs(theta_fourier(spec, xs))
    b1, b2, b3 = bound_branches(spec, xs)
    stacked = np.vstack([b1, b2, b3])
    bound = stacked.min(axis=0)
    excess = vals - bound * (1.0 + BOUND_RTOL)
    dominant = np.argmin(stacked, axis=0)
    report = KernelBoundReport(
        vartheta=spec.vartheta,
        k=spec.k,
        points=int(xs.size),
        violations=int(np.count_nonzero(excess > 0)),
        max_excess=float(np.max(vals - bound)),
        dominant_branch={f"branch{i + 1}": int(np.count_nonzero(dominant == i)) for i in range(3)},
    )
    if report.violations:
        logger.warning("kernel bound violated at %d of %d points", report.violations, report.points)
    return report


def kernel_table(spec: KernelSpec, xs: Iterable[float]) -> List[Tuple[float, float, float, float, float, float]]:
    xs = np.asarray(list(xs), dtype=float)
    vals = theta_fourier(spec, xs)
    b1, b2, b3 = bound_branches(spec, xs)
    bound = np.minimum(np.minimum(b1, b2), b3)
    return [
        (float(x), float(v), float(p), float(q), float(r), float(b))
        for x, v, p, q, r, b in zip(xs, vals, b1, b2, b3, bound)
    ]


def tail_bound(spec: KernelSpec, T: float) -> float:
    """Integral of the third (smoothness) bound branch over |x| > T."""
    if T <= 0:
        return math.inf
    q = spec.k / (2.0 * math.pi * spec.vartheta / 8.0)
    # 2 * int_T^inf (1/(pi x)) (q/x)^k dx
    log_val = math.log(2.0 / (math.pi * spec.k)) + spec.k * (math.log(q) - math.log(T))
    return math.exp(log_val) if log_val < 700 else math.inf


def max_resolved_step(spec: KernelSpec, y_max: float) -> float:
    """Largest trapezoid step for which aliases of theta(y), |y| <= y_max, fall outside its support."""
    return 1.0 / (abs(y_max) + spec.vartheta)


def fourier_roundtrip_error(
    spec: KernelSpec,
    T: float,
    quad_step: Optional[float] = None,
    ys: Optional[Sequence[float] | np.ndarray] = None,
) -> RoundtripReport:
    """
    sup_y |theta(y) - int_{-T}^{T} Theta(x) e(xy) dx| on a y-grid, plus the analytic tail bound.
    Trapezoid sampling of Theta at step h reproduces sum_m theta(y + m/h), so the rule is exact
    up to truncation once 1/h >= |y|max + vartheta.
    """
    if T <= 0:
        raise PreconditionError(f"T must be positive, got {T}")
    if ys is None:
        ys = np.linspace(-2.0 * spec.vartheta, 2.0 * spec.vartheta, 161)
    ys = np.asarray(ys, dtype=float)
    y_max = float(np.max(np.abs(ys)))
    limit = max_resolved_step(spec, y_max)
    if quad_step is None:
        quad_step = limit / 4.0
    if quad_step > limit:
        raise PreconditionError(
            f"quad_step={quad_step:.3e} too coarse: must be <= 1/(|y|max + vartheta) = {limit:.3e}"
        )
    n = int(math.floor(T / quad_step))
    xs = quad_step * np.arange(n + 1)
    th = theta_fourier(spec, xs)
    w = np.full(n + 1, 2.0)
    w[0] = 1.0
    # even integrand: int_{-T}^{T} Theta(x) cos(2 pi x y) dx
    approx = quad_step * (np.cos(2.0 * np.pi * np.outer(ys, xs)) @ (w * th))
    err = float(np.max(np.abs(theta_eval(spec, ys) - approx)))
    return RoundtripReport(
        T=T, quad_step=quad_step, y_points=int(ys.size), max_error=err,
        tail_bound=tail_bound(spec, max(T - quad_step, quad_step)),
    )


def mass(spec: KernelSpec, points: int = 40001) -> float:
    """Simpson integral of theta over its support; equals 2a = 7*vartheta/4."""
    ys = np.linspace(-spec.vartheta, spec.vartheta, points)
    return float(integrate.simpson(theta_eval(spec, ys), x=ys))
