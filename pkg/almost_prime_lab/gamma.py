"""
Counts of prime quadruples with |p1^c + p2^c + p3^c + p4^c - N| small: direct and smoothed
meet-in-the-middle joins, the vector-sieve pieces Gamma_1 and Gamma_5, the Fourier-side
evaluation of Gamma_1, the singular integral B(X), and witness extraction.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from almost_prime_lab.errors import PreconditionError, ResourceCapError
from almost_prime_lab.expsum import (
    ExpSumContext,
    I_values,
    L_sum,
    PairSumTable,
    pair_table,
    trivial_bound,
)
from almost_prime_lab.kernel import irwin_hall_cdf, tail_bound, theta_eval, theta_fourier
from almost_prime_lab.logging_setup import log_stage
from almost_prime_lab.models import (
    BReport,
    FourierReport,
    GammaReport,
    KernelSpec,
    PredictionReport,
    TheoremParams,
    Witness,
    WitnessSearch,
)
from almost_prime_lab.primes import build_prime_table, classify_shifted

logger = logging.getLogger("almost_prime_lab.gamma")

MAX_ADMISSIBLE = 6000  # per side of the join; pair tables stay below 3.6e7 entries
MATCH_CAP = 20_000_000
LEFT_CHUNK = 1 << 16
WINDOW_WIDEN = 1e-9
FOURIER_POINTS_CAP = 1 << 24
B_POINTS_CAP = 1 << 23


# ---------- admissible primes and multipliers ----------
def admissible(ctx: ExpSumContext, require_rough: bool) -> np.ndarray:
    """Indices into ctx.primes of the primes entering a direct count."""
    idx = np.arange(ctx.primes.size)
    if require_rough:
        idx = idx[ctx.rough.astype(bool)]
    return idx


def _check_size(n: int) -> None:
    if n == 0:
        raise PreconditionError("no admissible primes in (X/2, X]")
    if n > MAX_ADMISSIBLE:
        raise ResourceCapError(f"{n} admissible primes exceed the pair-table cap {MAX_ADMISSIBLE}")


def position_multipliers(ctx: ExpSumContext, sieve_mode: str, require_rough: bool = True) -> List[np.ndarray]:
    """Per-position prime multipliers: rough indicator, Lambda-, Lambda+ or Lambda- at one position."""
    n = ctx.primes.size
    if sieve_mode == "indicator":
        one = ctx.rough.astype(float) if require_rough else np.ones(n)
        return [one] * 4
    if sieve_mode == "lower4":
        return [ctx.coef_minus.astype(float)] * 4
    if sieve_mode == "upper4":
        return [ctx.coef_plus.astype(float)] * 4
    if sieve_mode.startswith("mixed"):
        digits = sieve_mode[len("mixed") :].strip("()")
        if digits not in {"1", "2", "3", "4"}:
            raise PreconditionError(f"mixed mode needs a position 1..4, got {sieve_mode!r}")
        i = int(digits) - 1
        out = [ctx.coef_plus.astype(float)] * 4
        out[i] = ctx.coef_minus.astype(float)
        return out
    raise PreconditionError(f"unknown sieve mode {sieve_mode!r}")


# ---------- window join ----------
def _window_join(
    left: np.ndarray, right: np.ndarray, N: float, radius: float, threads: int = 1
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Index pairs (a, b) with left[a] + right[b] within a slightly widened radius of N;
    callers filter with the exact strict test. right must be sorted.
    """
    if not radius > 0 or left.size == 0 or right.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    r = radius * (1.0 + WINDOW_WIDEN) + WINDOW_WIDEN * abs(N)

    def chunk(start: int) -> Tuple[np.ndarray, np.ndarray]:
        a = np.arange(start, min(start + LEFT_CHUNK, left.size))
        target = N - left[a]
        lo = np.searchsorted(right, target - r, side="left")
        hi = np.searchsorted(right, target + r, side="right")
        counts = np.maximum(hi - lo, 0)
        total = int(counts.sum())
        if total > MATCH_CAP:
            raise ResourceCapError(f"window join holds {total} candidates, cap is {MATCH_CAP}")
        ia = np.repeat(a, counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        return ia, np.repeat(lo, counts) + offsets

    starts = list(range(0, left.size, LEFT_CHUNK))
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(s) for s in starts]
    ia = np.concatenate([p[0] for p in parts])
    ib = np.concatenate([p[1] for p in parts])
    if ia.size > MATCH_CAP:
        raise ResourceCapError(f"window join holds {ia.size} candidates, cap is {MATCH_CAP}")
    return ia, ib


def _tables(ctx: ExpSumContext, idx: np.ndarray, mults: Sequence[np.ndarray]) -> Tuple[PairSumTable, PairSumTable]:
    primes = ctx.primes[idx]
    c = ctx.params.c
    w = [ctx.logs[idx] * m[idx] for m in mults]
    return pair_table(primes, c, w[0], w[1]), pair_table(primes, c, w[2], w[3])


def _target(ctx: ExpSumContext, N: Optional[float]) -> float:
    return float(ctx.params.N if N is None else N)


# ---------- direct counts ----------
def gamma_direct(
    ctx: ExpSumContext,
    radius: float,
    require_rough: bool = True,
    *,
    N: Optional[float] = None,
    exact: bool = True,
) -> float:
    """
    sum of log p1 log p2 log p3 log p4 over admissible ordered quadruples with
    |(p1^c + p2^c) + (p3^c + p4^c) - N| < radius. radius = inf gives (sum log p)^4.

    exact=True enumerates the matches and sums the weights with fsum, reproducing the nested-loop
    oracle bit for bit; exact=False uses prefix sums of the sorted pair weights.
    """
    N = _target(ctx, N)
    idx = admissible(ctx, require_rough)
    _check_size(idx.size)
    if radius <= 0:
        return 0.0
    table = pair_table(ctx.primes[idx], ctx.params.c, ctx.logs[idx])
    v, w = table.values, table.weights

    if math.isinf(radius):
        s = math.fsum(ctx.logs[idx].tolist())
        return s ** 4

    if not exact:
        prefix = np.concatenate([[0.0], np.cumsum(w)])
        lo = np.searchsorted(v, N - v - radius, side="right")
        hi = np.searchsorted(v, N - v + radius, side="left")
        hi = np.maximum(hi, lo)
        return float(np.dot(w, prefix[hi] - prefix[lo]))

    ia, ib = _window_join(v, v, N, radius, ctx.threads)
    keep = np.abs((v[ia] + v[ib]) - N) < radius
    ia, ib = ia[keep], ib[keep]
    return math.fsum((w[ia] * w[ib]).tolist())


def gamma_direct_bruteforce(
    primes: Sequence[int], c: float, N: float, radius: float
) -> float:
    """Nested-loop oracle for gamma_direct over the given (already filtered) primes."""
    ps = np.asarray(primes, dtype=np.int64)
    x = ps.astype(float) ** c
    lg = np.log(ps.astype(float))
    terms = []
    for i1, i2, i3, i4 in itertools.product(range(ps.size), repeat=4):
        if abs((x[i1] + x[i2]) + (x[i3] + x[i4]) - N) < radius:
            terms.append((lg[i1] * lg[i2]) * (lg[i3] * lg[i4]))
    return math.fsum(terms)


def gamma_smoothed(
    ctx: ExpSumContext,
    kernel: KernelSpec,
    require_rough: bool = True,
    sieve_mode: str = "indicator",
    *,
    N: Optional[float] = None,
) -> float:
    """
    sum over ordered quadruples of theta(sum p_i^c - N) prod log p_i prod m_i(p_i), with m_i the
    multipliers of the mode: indicator gives the smoothed count, upper4 Gamma_5, mixed(i) Gamma_1.
    Only indicator mode filters by roughness; the sieve modes run over every prime in range.
    """
    N = _target(ctx, N)
    if ctx.primes.size == 0:
        raise PreconditionError("no primes in (X/2, X]")
    mults = position_multipliers(ctx, sieve_mode, require_rough)
    idx = np.arange(ctx.primes.size)
    if sieve_mode == "indicator" and require_rough:
        idx = admissible(ctx, True)
    _check_size(idx.size)
    left, right = _tables(ctx, idx, mults)
    ia, ib = _window_join(left.values, right.values, N, kernel.vartheta, ctx.threads)
    y = (left.values[ia] + right.values[ib]) - N
    keep = np.abs(y) < kernel.vartheta
    ia, ib, y = ia[keep], ib[keep], y[keep]
    th = np.atleast_1d(theta_eval(kernel, y))
    return math.fsum(((left.weights[ia] * right.weights[ib]) * th).tolist())


def gamma_smoothed_bruteforce(
    primes: Sequence[int], c: float, N: float, kernel: KernelSpec, multipliers: Sequence[Sequence[float]]
) -> float:
    """Nested-loop oracle: sum theta(...) ((l1 m1)(l2 m2)) ((l3 m3)(l4 m4))."""
    ps = np.asarray(primes, dtype=np.int64)
    x = ps.astype(float) ** c
    lg = np.log(ps.astype(float))
    m = [np.asarray(mm, dtype=float) for mm in multipliers]
    terms = []
    for i1, i2, i3, i4 in itertools.product(range(ps.size), repeat=4):
        y = (x[i1] + x[i2]) + (x[i3] + x[i4]) - N
        if abs(y) < kernel.vartheta:
            w12 = (lg[i1] * m[0][i1]) * (lg[i2] * m[1][i2])
            w34 = (lg[i3] * m[2][i3]) * (lg[i4] * m[3][i4])
            terms.append((w12 * w34) * theta_eval(kernel, y))
    return math.fsum(terms)


# ---------- Fourier side ----------
def fourier_step(ctx: ExpSumContext, kernel: KernelSpec, N: float) -> float:
    """Trapezoid step at which aliases of theta(y), y = sum p_i^c - N, leave the support (factor 2 margin)."""
    x = ctx.powers
    y_max = max(abs(4.0 * float(x.max()) - N), abs(N - 4.0 * float(x.min())))
    return 1.0 / (2.0 * (y_max + kernel.vartheta))


def _symmetric_grid(h: float, T: float) -> np.ndarray:
    n = int(math.floor(T / h))
    return h * np.arange(-n, n + 1)


def gamma1_fourier(
    ctx: ExpSumContext,
    kernel: KernelSpec,
    T: float,
    quad_step: Optional[float] = None,
    *,
    N: Optional[float] = None,
    tol: Optional[float] = None,
    max_points: int = FOURIER_POINTS_CAP,
) -> FourierReport:
    """
    int_{-T}^{T} Theta(t) e(-Nt) L_minus(t) L_plus(t)^3 dt by the trapezoid rule, split over
    |t| < tau, tau <= |t| <= K and K < |t| <= T, with the analytic bound for |t| > T.
    """
    if ctx.primes.size == 0:
        raise PreconditionError("no primes in (X/2, X]")
    if T <= 0:
        raise PreconditionError(f"T must be positive, got {T}")
    N = _target(ctx, N)
    limit = fourier_step(ctx, kernel, N)
    h = limit if quad_step is None else quad_step
    if h > 2.0 * limit:
        raise PreconditionError(f"quad_step={h:.3e} does not resolve the frequencies; need <= {2.0 * limit:.3e}")
    t = _symmetric_grid(h, T)
    if t.size > max_points:
        raise ResourceCapError(f"Fourier grid needs {t.size} points, cap is {max_points}; lower T")

    L1 = np.asarray(L_sum(ctx, "minus", t))
    L2 = np.asarray(L_sum(ctx, "plus", t))
    ph = -N * t
    ph -= np.floor(ph)
    f = h * theta_fourier(kernel, t) * np.exp(2j * np.pi * ph) * L1 * L2 ** 3

    tau, K = ctx.params.tau, ctx.params.K
    at = np.abs(t)
    masks = (at < tau, (at >= tau) & (at <= K), at > K)
    regions = tuple(math.fsum(f.real[m].tolist()) for m in masks)
    value = math.fsum(f.real.tolist())
    imag = math.fsum(f.imag.tolist())

    bound_L = trivial_bound(ctx, "minus") * trivial_bound(ctx, "plus") ** 3
    tail = tail_bound(kernel, max(T - h, h)) * bound_L
    if tol is not None and tail > tol:
        raise PreconditionError(f"Fourier tail bound {tail:.3e} exceeds tol={tol:.3e}; raise k or T")
    return FourierReport(
        value=value, imag=imag, regions=regions, tail_bound=tail, T=T, quad_step=h, points=int(t.size)
    )


def J1_integral(
    ctx: ExpSumContext, kernel: KernelSpec, quad_step: Optional[float] = None, *, N: Optional[float] = None
) -> complex:
    """int_{|t| < tau} Theta(t) e(-Nt) M_minus(t) M_plus(t)^3 dt with M = I(t) G."""
    N = _target(ctx, N)
    p = ctx.params
    h = min(p.tau / 200.0, p.X ** (-p.c) / 8.0, 1.0 / (8.0 * abs(N))) if quad_step is None else quad_step
    n = int(math.ceil(p.tau / h))
    if 2 * n + 1 > FOURIER_POINTS_CAP:
        raise ResourceCapError(f"J1 grid needs {2 * n + 1} points, cap is {FOURIER_POINTS_CAP}")
    h = p.tau / n
    t = h * np.arange(-n, n + 1)
    I = I_values(t, p.X, p.c)
    M1, M2 = I * ctx.G("minus"), I * ctx.G("plus")
    ph = -N * t
    ph -= np.floor(ph)
    f = theta_fourier(kernel, t) * np.exp(2j * np.pi * ph) * M1 * M2 ** 3
    w = np.full(t.size, h)
    w[0] = w[-1] = h / 2.0
    f = f * w
    return complex(math.fsum(f.real.tolist()), math.fsum(f.imag.tolist()))


# ---------- singular integral ----------
def _hat_cdf(r: np.ndarray) -> np.ndarray:
    r = np.clip(r, -1.0, 1.0)
    return np.where(r <= 0.0, 0.5 * (1.0 + r) ** 2, 1.0 - 0.5 * (1.0 - r) ** 2)


def _b_on_grid(params: TheoremParams, kernel: KernelSpec, n: int, N: float, window: str) -> float:
    X, c = params.X, params.c
    u0, u1 = (X / 2.0) ** c, X ** c
    h = (u1 - u0) / n
    u = u0 + h * np.arange(n + 1)
    g = u ** (1.0 / c - 1.0) / c
    g[0] *= 0.5
    g[-1] *= 0.5
    g2 = h * signal.fftconvolve(g, g)  # density of u1 + u2 at 2 u0 + k h
    g2 = np.clip(g2, 0.0, None)
    base = 4.0 * u0
    lo = int(math.floor((N - kernel.vartheta - base) / h)) - 1
    hi = int(math.ceil((N + kernel.vartheta - base) / h)) + 1
    lo, hi = max(lo, 0), min(hi, 4 * n)
    if hi < lo:
        return 0.0
    js = np.arange(lo, hi + 1)
    m = g2.size
    g4 = np.empty(js.size)
    for k, j in enumerate(js):
        i0, i1 = max(0, j - (m - 1)), min(j, m - 1)
        g4[k] = h * float(np.dot(g2[i0 : i1 + 1], g2[j - i1 : j - i0 + 1][::-1])) if i1 >= i0 else 0.0
    y = base + h * js - N
    if window == "smooth":
        wts = h * np.atleast_1d(theta_eval(kernel, y))
    else:
        wts = h * (_hat_cdf((kernel.vartheta - y) / h) - _hat_cdf((-kernel.vartheta - y) / h))
    return math.fsum((g4 * wts).tolist())


def B_integral(
    params: TheoremParams,
    kernel: KernelSpec,
    *,
    N: Optional[float] = None,
    window: str = "smooth",
    grid_step: Optional[float] = None,
    max_points: int = B_POINTS_CAP,
) -> BReport:
    """
    B = int theta(u1 + u2 + u3 + u4 - N) prod g(u_i) du, g(u) = u^{1/c - 1}/c on [(X/2)^c, X^c].
    The density of u1 + u2 comes from one FFT convolution; the fourfold density is formed only
    near N. window="indicator" integrates the linear interpolant over |y| < vartheta instead.
    """
    if window not in ("smooth", "indicator"):
        raise PreconditionError(f"window must be smooth or indicator, got {window!r}")
    N = float(params.N if N is None else N)
    X, c = params.X, params.c
    u0, u1 = (X / 2.0) ** c, X ** c
    step = kernel.vartheta / 16.0 if grid_step is None else grid_step
    if step > kernel.vartheta / 16.0:
        raise PreconditionError(f"grid_step must be <= vartheta/16 = {kernel.vartheta / 16.0:.3e}")
    n = int(math.ceil((u1 - u0) / step))
    n += n % 2
    if N <= 4.0 * u0 - kernel.vartheta or N >= 4.0 * u1 + kernel.vartheta:
        return BReport(B=0.0, error_estimate=0.0, grid_step=(u1 - u0) / n, points=n + 1, window=window)
    if n + 1 > max_points:
        raise ResourceCapError(f"B(X) grid needs {n + 1} points, cap is {max_points}")
    fine = _b_on_grid(params, kernel, n, N, window)
    coarse = _b_on_grid(params, kernel, n // 2, N, window)
    return BReport(B=fine, error_estimate=abs(fine - coarse), grid_step=(u1 - u0) / n, points=n + 1, window=window)


def slab_volume_oracle(X: float, N: float, radius: float) -> float:
    """c = 1: volume of {y in [X/2, X]^4 : |sum y - N| < radius}, via the Irwin-Hall CDF."""
    half = X / 2.0
    hi = (N + radius - 4.0 * half) / half
    lo = (N - radius - 4.0 * half) / half
    return half ** 4 * float(irwin_hall_cdf(hi, 4) - irwin_hall_cdf(lo, 4))


# ---------- prediction ----------
def main_prediction(B: float, Gplus: float, Gminus: float, coefficient: float = 0.75) -> PredictionReport:
    """W = 4 (G+)^3 (G- - coefficient G+); the prediction is B W."""
    if not (0.0 < coefficient < 1.0):
        raise PreconditionError(f"coefficient must lie in (0, 1), got {coefficient}")
    W = 4.0 * Gplus ** 3 * (Gminus - coefficient * Gplus)
    report = PredictionReport(B=B, G_plus=Gplus, G_minus=Gminus, coefficient=coefficient, W=W, prediction=B * W)
    if report.negative:
        logger.warning("W=%.6g < 0 with coefficient %.4f: negative main-term prediction", W, coefficient)
    return report


# ---------- witnesses ----------
def find_witnesses(
    ctx: ExpSumContext,
    limit: int = 100,
    *,
    radius: Optional[float] = None,
    require_rough: bool = True,
    N: Optional[float] = None,
) -> WitnessSearch:
    """
    Quadruples of admissible primes with |sum p_i^c - N| < radius (default vartheta), reported up to
    ordering with the number of ordered tuples as multiplicity, sorted by (distance, tuple).
    """
    N = _target(ctx, N)
    radius = ctx.params.vartheta if radius is None else radius
    idx = admissible(ctx, require_rough)
    n = int(idx.size)
    if n == 0:
        return WitnessSearch(radius=radius, admissible_primes=0, searched_quadruples=0, matches=0)
    _check_size(n)
    table = pair_table(ctx.primes[idx], ctx.params.c)
    v = table.values
    ia, ib = _window_join(v, v, N, radius, ctx.threads)
    keep = np.abs((v[ia] + v[ib]) - N) < radius
    ia, ib = ia[keep], ib[keep]

    groups: Dict[Tuple[int, int, int, int], int] = {}
    quads = np.stack([table.left[ia], table.right[ia], table.left[ib], table.right[ib]], axis=1)
    quads.sort(axis=1)
    for q in map(tuple, quads.tolist()):
        groups[q] = groups.get(q, 0) + 1

    c = ctx.params.c
    rows = []
    for q, mult in groups.items():
        form = math.fsum(float(p) ** c for p in q)
        rows.append((abs(form - N), q, form, mult))
    rows.sort(key=lambda r: (r[0], r[1]))

    z = ctx.params.z
    table_p = build_prime_table(int(ctx.primes.max()) + 2)
    witnesses = []
    for dist, q, form, mult in rows[:limit]:
        profiles = [classify_shifted(int(p), z, table_p) for p in q] if z >= 3 else []
        witnesses.append(
            Witness(p1=q[0], p2=q[1], p3=q[2], p4=q[3], form_value=form, distance=dist,
                    multiplicity=mult, shifted_profiles=profiles)
        )
    logger.info("witness search: %d ordered matches, %d distinct quadruples", int(ia.size), len(groups))
    return WitnessSearch(
        radius=radius, admissible_primes=n, searched_quadruples=n ** 4, matches=int(ia.size), witnesses=witnesses
    )


def witness_bruteforce(primes: Sequence[int], c: float, N: float, radius: float) -> List[Tuple[int, int, int, int]]:
    """Sorted distinct quadruples (p1 <= p2 <= p3 <= p4) with |sum p_i^c - N| < radius."""
    ps = sorted(int(p) for p in primes)
    out = []
    for q in itertools.combinations_with_replacement(ps, 4):
        if abs(math.fsum(float(p) ** c for p in q) - N) < radius:
            out.append(q)
    return out


# ---------- full report ----------
def build_report(
    ctx: ExpSumContext,
    kernel: KernelSpec,
    *,
    coefficient: float = 0.75,
    T: Optional[float] = None,
    witness_limit: int = 20,
    N: Optional[float] = None,
) -> GammaReport:
    """Every stage on one desk instance; the Fourier stage and J1 run only when T is given."""
    N = _target(ctx, N)
    p = ctx.params
    diagnostics = list(p.diagnostics)

    with log_stage(logger, "direct counts"):
        direct = gamma_direct(ctx, kernel.vartheta, True, N=N)
        inner = gamma_direct(ctx, 0.75 * kernel.vartheta, True, N=N)
        smoothed = gamma_smoothed(ctx, kernel, True, "indicator", N=N)
        g1 = gamma_smoothed(ctx, kernel, True, "mixed1", N=N)
        g5 = gamma_smoothed(ctx, kernel, True, "upper4", N=N)
    g0 = 4.0 * g1 - 3.0 * g5
    if not (inner <= smoothed <= direct):
        diagnostics.append("theta sandwich failed: inner <= smoothed <= direct")
    if smoothed < g0:
        diagnostics.append("vector-sieve decomposition failed: smoothed < 4 Gamma_1 - 3 Gamma_5")

    fourier: Optional[FourierReport] = None
    J1: Optional[float] = None
    if T is not None:
        with log_stage(logger, "fourier side"):
            fourier = gamma1_fourier(ctx, kernel, T, N=N)
            J1 = J1_integral(ctx, kernel, N=N).real
        if abs(fourier.value - g1) > 1e-3 * max(1.0, abs(g1)) + fourier.tail_bound:
            diagnostics.append("Fourier evaluation of Gamma_1 disagrees with the direct join")

    with log_stage(logger, "singular integral"):
        b = B_integral(p, kernel, N=N)
    pred = main_prediction(b.B, ctx.G("plus"), ctx.G("minus"), coefficient)
    if pred.negative:
        diagnostics.append(f"W < 0 at coefficient {coefficient}")
    logX = math.log(p.X)
    witnesses = find_witnesses(ctx, witness_limit, radius=kernel.vartheta, N=N).witnesses

    for d in diagnostics:
        logger.warning(d)
    return GammaReport(
        N=N, gamma_direct=direct, gamma_smoothed=smoothed, gamma_inner=inner, gamma1=g1, gamma5=g5, gamma0=g0,
        gamma1_fourier=None if fourier is None else fourier.value,
        gamma1_regions=None if fourier is None else fourier.regions,
        gamma1_tail_bound=None if fourier is None else fourier.tail_bound,
        J1=J1, B=b.B, B_error=b.error_estimate, W=pred.W, prediction=pred.prediction,
        final_reference=kernel.vartheta * p.X ** (4.0 - p.c) / logX ** 4,
        regime=p.regime, witnesses=witnesses, diagnostics=diagnostics,
    )
