"""
Exponential sums over primes with sieve weights and the oscillatory integral I(alpha).

L(t) = sum_d lambda(d) sum_{X/2 < p <= X, p = -2 (mod d)} e(p^c t) log p is evaluated in the
rearranged form sum_p Lambda(p+2) log p e(p^c t), with Lambda(p+2) assembled from the residue index.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from almost_prime_lab.errors import ConvergenceError, PreconditionError, ResourceCapError
from almost_prime_lab.kernel import theta_fourier
from almost_prime_lab.models import (
    DecayReport,
    KernelSpec,
    MinSumInterval,
    MomentReport,
    ResidualReport,
    SumSign,
    SupReport,
    TailMomentReport,
    TheoremParams,
)
from almost_prime_lab.primes import sieve_primes
from almost_prime_lab.sieve import RosserWeights, build_rosser, coprime_indicator, g_sum, trivial_weights

logger = logging.getLogger("almost_prime_lab.expsum")

CHUNK_ELEMS = 1 << 21  # t-values x primes per block; fixed so blocks do not depend on thread count
I_TOL = 1e-8  # absolute error target for I(alpha), relative to X
MAX_PANELS = 1 << 22
SERIES_CUTOFF = 0.5
MOMENT_POINTS_CAP = 1 << 22
MINSUM_CAP = 4096
MINSUM_EXACT_CAP = 24
WINDOW_PAIRS_CAP = 50_000_000
SUP_PER_OCTAVE = 64


# ---------- context ----------
@dataclass(frozen=True)
class ExpSumContext:
    params: TheoremParams
    primes: np.ndarray  # primes in (X/2, X], ascending
    weights_plus: RosserWeights
    weights_minus: RosserWeights
    residue_index: Dict[int, np.ndarray]  # d -> primes p in range with d | p + 2
    coef_plus: np.ndarray  # Lambda+(p + 2)
    coef_minus: np.ndarray
    rough: np.ndarray  # [(p + 2, P(z)) = 1]
    threads: int = 1
    logs: np.ndarray = field(init=False)
    powers: np.ndarray = field(init=False)  # p^c

    def __post_init__(self) -> None:
        object.__setattr__(self, "logs", np.log(self.primes.astype(float)))
        object.__setattr__(self, "powers", self.primes.astype(float) ** self.params.c)

    def weights(self, sign: SumSign) -> RosserWeights:
        if sign == "plus":
            return self.weights_plus
        if sign == "minus":
            return self.weights_minus
        return trivial_weights(self.params.D, self.params.z, "plus")

    def coefficients(self, sign: SumSign) -> np.ndarray:
        if sign == "plus":
            return self.coef_plus
        if sign == "minus":
            return self.coef_minus
        if sign == "unsieved":
            return np.ones(self.primes.size, dtype=np.int64)
        raise PreconditionError(f"unknown sign {sign!r}")

    def amplitudes(self, sign: SumSign) -> np.ndarray:
        return self.coefficients(sign) * self.logs

    def G(self, sign: SumSign) -> float:
        return 1.0 if sign == "unsieved" else float(g_sum(self.weights(sign)))


def _residue_index(primes: np.ndarray, ds: Sequence[int]) -> Dict[int, np.ndarray]:
    shifted = primes + 2
    return {int(d): primes[shifted % d == 0] for d in sorted(ds)}


def _coefficients(primes: np.ndarray, weights: RosserWeights, index: Dict[int, np.ndarray]) -> np.ndarray:
    coef = np.zeros(primes.size, dtype=np.int64)
    for d, lam in weights.nonzero.items():
        pos = np.searchsorted(primes, index[d])
        coef[pos] += lam
    return coef


def build_context(
    params: TheoremParams,
    *,
    primes: Optional[np.ndarray] = None,
    weights_plus: Optional[RosserWeights] = None,
    weights_minus: Optional[RosserWeights] = None,
    threads: int = 1,
) -> ExpSumContext:
    """Primes in (X/2, X] (or the given ones), both Rosser tables, the residue index and Lambda+-(p+2)."""
    if threads < 1:
        raise PreconditionError(f"threads must be >= 1, got {threads}")
    if primes is None:
        primes = sieve_primes(int(math.floor(params.X / 2.0)), int(math.floor(params.X)))
    primes = np.asarray(primes, dtype=np.int64)
    if primes.size and np.any(np.diff(primes) <= 0):
        raise PreconditionError("primes must be strictly increasing")

    if weights_plus is None or weights_minus is None:
        if params.z < 3:
            logger.warning("z=%s < 3: nothing is sifted, using trivial weights", params.z)
            weights_plus = trivial_weights(params.D, params.z, "plus")
            weights_minus = trivial_weights(params.D, params.z, "minus")
        else:
            weights_plus = build_rosser(params.D, params.z, "plus")
            weights_minus = build_rosser(params.D, params.z, "minus")

    ds = set(weights_plus.nonzero) | set(weights_minus.nonzero)
    index = _residue_index(primes, ds)
    rough = coprime_indicator(params.z, int(primes.max()) + 2)[primes + 2] if primes.size else np.zeros(0, np.int64)
    ctx = ExpSumContext(
        params=params,
        primes=primes,
        weights_plus=weights_plus,
        weights_minus=weights_minus,
        residue_index=index,
        coef_plus=_coefficients(primes, weights_plus, index),
        coef_minus=_coefficients(primes, weights_minus, index),
        rough=rough.astype(np.int64),
        threads=threads,
    )
    logger.info(
        "context X=%.6g c=%s: %d primes, %d rough, %d residue classes",
        params.X, params.c, primes.size, int(ctx.rough.sum()), len(index),
    )
    return ctx


# ---------- L(t) ----------
def _map_blocks(fn: Callable[[np.ndarray], np.ndarray], t: np.ndarray, width: int, threads: int) -> np.ndarray:
    step = max(1, CHUNK_ELEMS // max(width, 1))
    blocks = [t[i : i + step] for i in range(0, t.size, step)]
    if not blocks:
        return np.zeros(0, dtype=complex)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    return np.concatenate(parts)


def _oscillatory_sum(freqs: np.ndarray, amps: np.ndarray, t: np.ndarray, threads: int) -> np.ndarray:
    """sum_j amps_j e(freqs_j t) for every t."""

    def block(tb: np.ndarray) -> np.ndarray:
        ph = np.outer(tb, freqs)
        ph -= np.floor(ph)
        return np.exp(2j * np.pi * ph) @ amps

    return _map_blocks(block, t, freqs.size, threads)


def L_sum(ctx: ExpSumContext, sign: SumSign, t: np.ndarray | float) -> np.ndarray | complex:
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if ctx.primes.size == 0:
        out = np.zeros(tt.size, dtype=complex)
    else:
        out = _oscillatory_sum(ctx.powers, ctx.amplitudes(sign).astype(float), tt, ctx.threads)
    return complex(out[0]) if scalar else out


def trivial_bound(ctx: ExpSumContext, sign: SumSign) -> float:
    """sum_d |lambda(d)| sum_{p = -2 (d)} log p; bounds |L(t)| for every t."""
    if sign == "unsieved":
        return math.fsum(ctx.logs.tolist())
    w = ctx.weights(sign)
    return math.fsum(
        abs(lam) * math.fsum(np.log(ctx.residue_index[d].astype(float)).tolist())
        for d, lam in sorted(w.nonzero.items())
    )


def trivial_bound_reference(X: float) -> float:
    return X * math.log(X) ** 2


# ---------- I(alpha) ----------
def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, by series near 0."""
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF
    zs = z[small]
    term = np.ones_like(zs)
    acc = np.ones_like(zs)
    for n in range(1, 20):
        term = term * zs / (n + 1)
        acc = acc + term
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.exp(zb) - 1.0) / zb
    return out


def _psi(z: np.ndarray) -> np.ndarray:
    """int_0^1 s e^{zs} ds = (e^z (z - 1) + 1)/z^2, by series near 0."""
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF
    zs = z[small]
    acc = np.full_like(zs, 0.5)
    power = np.ones_like(zs)
    fact = 1.0
    for n in range(1, 20):
        power = power * zs
        fact *= n
        acc = acc + power / (fact * (n + 2))
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.exp(zb) * (zb - 1.0) + 1.0) / zb ** 2
    return out


@dataclass(frozen=True)
class FilonPanels:
    nodes: np.ndarray  # u_0 < ... < u_n on [(X/2)^c, X^c]
    amplitude: np.ndarray  # g(u_j) = u_j^{1/c - 1}/c
    width: float
    error_bound: float


def filon_panels(X: float, c: float, tol: Optional[float] = None, max_panels: int = MAX_PANELS) -> FilonPanels:
    """Uniform panels in u = t^c, doubled until the linear-interpolation bound of g meets tol."""
    if X <= 0:
        raise PreconditionError(f"X must be positive, got {X}")
    if c < 1.0:
        raise PreconditionError(f"c must be >= 1, got {c}")
    tol = I_TOL * X if tol is None else tol
    u0, u1 = (X / 2.0) ** c, X ** c
    span = u1 - u0
    r = 1.0 / c
    # |g''| is largest at the left end since its exponent 1/c - 3 is negative
    g2 = abs((r - 1.0) * (r - 2.0) * u0 ** (r - 3.0)) / c
    n = 16
    while True:
        h = span / n
        bound = span * h * h / 8.0 * g2
        if bound <= tol:
            break
        if n >= max_panels:
            raise ConvergenceError(f"I(alpha) panels exceed cap {max_panels} for X={X}, c={c}", bound)
        n *= 2
    nodes = u0 + h * np.arange(n + 1)
    nodes[-1] = u1
    return FilonPanels(nodes=nodes, amplitude=nodes ** (r - 1.0) / c, width=h, error_bound=bound)


def I_values(alphas: np.ndarray | Sequence[float], X: float, c: float, panels: Optional[FilonPanels] = None) -> np.ndarray:
    """I(alpha) = int_{X/2}^{X} e(alpha t^c) dt for every alpha, one panel set shared."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    panels = filon_panels(X, c) if panels is None else panels
    u = panels.nodes[:-1]
    g0 = panels.amplitude[:-1]
    dg = np.diff(panels.amplitude)
    h = panels.width
    out = np.empty(alphas.size, dtype=complex)
    step = max(1, CHUNK_ELEMS // max(u.size, 1))
    for i in range(0, alphas.size, step):
        a = alphas[i : i + step]
        z = np.broadcast_to((2j * np.pi * h) * a[:, None], (a.size, u.size)).copy()
        ph = np.outer(a, u)
        ph -= np.floor(ph)
        local = g0 * _phi1(z.ravel()).reshape(z.shape) + dg * _psi(z.ravel()).reshape(z.shape)
        out[i : i + step] = h * (np.exp(2j * np.pi * ph) * local).sum(axis=1)
    # alpha = 0 is X/2 exactly
    out[alphas == 0.0] = X / 2.0
    return out


def I_integral(alpha: float, X: float, c: float) -> complex:
    return complex(I_values([alpha], X, c)[0])


def I_closed_form_c1(alpha: float, X: float) -> complex:
    """c = 1: (e(alpha X) - e(alpha X/2)) / (2 pi i alpha)."""
    if alpha == 0:
        return complex(X / 2.0)
    upper = np.exp(2j * np.pi * alpha * X)
    lower = np.exp(1j * np.pi * alpha * X)
    return complex((upper - lower) / (2j * np.pi * alpha))


def decay_constant(c: float) -> float:
    """Twice the first-derivative-test constant, 1/(pi c (1/2)^{c-1})."""
    return 2.0 / (math.pi * c * 0.5 ** (c - 1.0))


def decay_check(X: float, c: float, alpha_grid: Sequence[float] | np.ndarray) -> DecayReport:
    alphas = np.asarray(alpha_grid, dtype=float)
    if alphas.size == 0 or np.any(alphas == 0):
        raise PreconditionError("alpha grid must be non-empty and exclude 0")
    C = decay_constant(c)
    vals = np.abs(I_values(alphas, X, c))
    ratios = vals / (C * X ** (1.0 - c) / np.abs(alphas))
    report = DecayReport(X=X, c=c, constant=C, points=int(alphas.size), max_ratio=float(ratios.max()))
    if not report.holds:
        logger.warning("decay bound exceeded: max ratio %.4f", report.max_ratio)
    return report


# ---------- main terms ----------
def main_term(ctx: ExpSumContext, sign: SumSign, t: np.ndarray | float) -> np.ndarray | complex:
    """M(t) = I(t) G."""
    scalar = np.ndim(t) == 0
    vals = I_values(np.atleast_1d(t), ctx.params.X, ctx.params.c) * ctx.G(sign)
    return complex(vals[0]) if scalar else vals


def asymptotic_residual(ctx: ExpSumContext, sign: SumSign, t_grid: Sequence[float] | np.ndarray) -> ResidualReport:
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0:
        raise PreconditionError("t grid is empty")
    tau = ctx.params.tau
    if np.any(np.abs(t) >= tau):
        raise PreconditionError(f"t grid must lie inside (-tau, tau), tau={tau:.3e}")
    X, A = ctx.params.X, ctx.params.A
    res = np.abs(L_sum(ctx, sign, t) - main_term(ctx, sign, t))
    sup = float(res.max())
    logX = math.log(X)
    return ResidualReport(
        sign=sign, X=X, A=A, points=int(t.size), sup_residual=sup,
        reference=X / logX ** A, normalized=sup / (X / logX ** 2),
        asymptotic_regime=ctx.params.regime == "asymptotic",
    )


# ---------- moments ----------
def _trapezoid_fsum(values: np.ndarray, h: float) -> float:
    if values.size < 2:
        return 0.0
    inner = math.fsum(values[1:-1].tolist())
    return h * (inner + 0.5 * (float(values[0]) + float(values[-1])))


def mean_square(
    ctx: ExpSumContext, sign: SumSign, tau: Optional[float] = None, max_points: int = MOMENT_POINTS_CAP
) -> MomentReport:
    """int_{-tau}^{tau} |L|^2 as twice the integral over [0, tau]; reference X^{2-c} log^6 X."""
    X, c = ctx.params.X, ctx.params.c
    tau = ctx.params.tau if tau is None else tau
    if tau <= 0:
        raise PreconditionError(f"tau must be positive, got {tau}")
    step = min(tau / 200.0, X ** (-c) / 8.0)
    n = int(math.ceil(tau / step))
    resolved = True
    if n + 1 > max_points:
        logger.warning("mean_square grid too coarse: %d points needed, capped at %d", n + 1, max_points)
        n = max_points - 1
        resolved = False
    h = tau / n
    t = h * np.arange(n + 1)
    vals = np.abs(L_sum(ctx, sign, t)) ** 2
    value = 2.0 * _trapezoid_fsum(vals, h)
    return MomentReport(
        kind="mean_square", sign=sign, X=X, c=c, value=value,
        reference=X ** (2.0 - c) * math.log(X) ** 6, step=h, points=n + 1, resolved=resolved,
    )


def I_mean_square(X: float, c: float, tau: float, max_points: int = MOMENT_POINTS_CAP) -> MomentReport:
    """int_{-tau}^{tau} |I(alpha)|^2; reference X^{2-c} log X."""
    if tau <= 0:
        raise PreconditionError(f"tau must be positive, got {tau}")
    step = min(tau / 200.0, X ** (-c) / 8.0)
    n = int(math.ceil(tau / step))
    resolved = True
    if n + 1 > max_points:
        logger.warning("I_mean_square grid too coarse: %d points needed, capped at %d", n + 1, max_points)
        n = max_points - 1
        resolved = False
    h = tau / n
    vals = np.abs(I_values(h * np.arange(n + 1), X, c)) ** 2
    return MomentReport(
        kind="I_mean_square", sign="unsieved", X=X, c=c, value=2.0 * _trapezoid_fsum(vals, h),
        reference=X ** (2.0 - c) * math.log(X), step=h, points=n + 1, resolved=resolved,
    )


def unit_interval_moment(
    ctx: ExpSumContext, sign: SumSign, order: int, max_points: int = MOMENT_POINTS_CAP
) -> MomentReport:
    """int_0^1 |L|^order with step <= X^{-c}/8 and a coarse-grid (2h) comparison."""
    if order not in (2, 4):
        raise PreconditionError(f"order must be 2 or 4, got {order}")
    X, c = ctx.params.X, ctx.params.c
    n = int(math.ceil(8.0 * X ** c))
    n += n % 2
    if n + 1 > max_points:
        raise ResourceCapError(
            f"unit-interval moment needs {n + 1} evaluations, budget is {max_points}; use a smaller X"
        )
    h = 1.0 / n
    if ctx.primes.size == 0:
        vals = np.zeros(n + 1)
    else:
        vals = np.abs(L_sum(ctx, sign, h * np.arange(n + 1))) ** order
    fine = _trapezoid_fsum(vals, h)
    coarse = _trapezoid_fsum(vals[::2], 2.0 * h)
    ref = X * math.log(X) ** 5 if order == 2 else X ** (4.0 - c + ctx.params.eta)
    return MomentReport(
        kind=f"unit_moment_{order}", sign=sign, X=X, c=c, value=fine, reference=ref,
        step=h, points=n + 1, richardson_delta=abs(fine - coarse),
    )


def weighted_tail_moments(
    ctx: ExpSumContext,
    sign: SumSign,
    kernel: KernelSpec,
    tau: Optional[float] = None,
    K: Optional[float] = None,
    max_points: int = MOMENT_POINTS_CAP,
) -> TailMomentReport:
    """int_{tau <= |t| <= K} |Theta| |L|^2 and |Theta| |L|^4, with their Cauchy-Schwarz combination."""
    p = ctx.params
    tau = p.tau if tau is None else tau
    K = p.K if K is None else K
    if not (0 < tau < K):
        raise PreconditionError(f"need 0 < tau < K, got tau={tau}, K={K}")
    n = int(math.ceil((K - tau) * 8.0 * p.X ** p.c))
    if n + 1 > max_points:
        raise ResourceCapError(f"tail moments need {n + 1} evaluations, budget is {max_points}; lower K or X")
    h = (K - tau) / n
    t = tau + h * np.arange(n + 1)
    th = np.abs(theta_fourier(kernel, t))
    l2 = np.abs(L_sum(ctx, sign, t)) ** 2
    second = 2.0 * _trapezoid_fsum(th * l2, h)
    fourth = 2.0 * _trapezoid_fsum(th * l2 * l2, h)
    logX = math.log(p.X)
    return TailMomentReport(
        sign=sign, second=second, fourth=fourth, cauchy_product=math.sqrt(second * fourth),
        reference_second=p.X * logX ** 6, reference_fourth=p.X ** (4.0 - p.c + p.eta) * logX, points=n + 1,
    )


# ---------- min(1, 1/|gap|) quadruple sum ----------
@dataclass(frozen=True)
class PairSumTable:
    values: np.ndarray  # sorted a^c + b^c
    weights: np.ndarray
    left: np.ndarray  # first member of each pair, aligned with values
    right: np.ndarray

    def __post_init__(self) -> None:
        if self.values.size != self.weights.size:
            raise PreconditionError("pair table values and weights differ in length")

    @property
    def size(self) -> int:
        return int(self.values.size)


def pair_table(
    members: np.ndarray,
    c: float,
    member_weights: Optional[np.ndarray] = None,
    second_weights: Optional[np.ndarray] = None,
) -> PairSumTable:
    """All ordered pairs (a, b) with value a^c + b^c and weight w_a w'_b, stably sorted by value."""
    members = np.asarray(members, dtype=np.int64)
    w = np.ones(members.size) if member_weights is None else np.asarray(member_weights, dtype=float)
    w2 = w if second_weights is None else np.asarray(second_weights, dtype=float)
    pw = members.astype(float) ** c
    vals = (pw[:, None] + pw[None, :]).ravel()
    wts = (w[:, None] * w2[None, :]).ravel()
    ia, ib = np.meshgrid(np.arange(members.size), np.arange(members.size), indexing="ij")
    order = np.argsort(vals, kind="stable")
    return PairSumTable(
        values=vals[order], weights=wts[order], left=members[ia.ravel()[order]], right=members[ib.ravel()[order]]
    )


def _integer_range(X: int) -> np.ndarray:
    return np.arange(X // 2 + 1, X + 1, dtype=np.int64)


def minsum_exact(X: int, c: float, cap: int = MINSUM_EXACT_CAP) -> float:
    """sum over X/2 < n_i <= X of min(1, 1/|n1^c + n2^c - n3^c - n4^c|), all M^4 terms."""
    if X > cap:
        raise ResourceCapError(f"exact min-sum is O(X^4); X={X} exceeds cap {cap}")
    vals = pair_table(_integer_range(X), c).values
    gap = np.abs(vals[:, None] - vals[None, :]).ravel()
    with np.errstate(divide="ignore"):
        terms = np.where(gap <= 1.0, 1.0, 1.0 / gap)
    return math.fsum(terms.tolist())


def min_sum(X: int, c: float, cap: int = MINSUM_CAP, exact_gap: float = 1.0) -> MinSumInterval:
    """
    Certified interval for the min(1, 1/|gap|) quadruple sum. Pairs-of-pairs with |gap| <= exact_gap
    are summed exactly; the rest are counted in bands (g 2^j, g 2^{j+1}] and bounded by the band ends.
    """
    if X < 2:
        raise PreconditionError(f"X must be >= 2, got {X}")
    if X > cap:
        raise ResourceCapError(f"pair table has ~X^2/4 entries; X={X} exceeds cap {cap}")
    if exact_gap <= 0:
        raise PreconditionError(f"exact_gap must be positive, got {exact_gap}")
    v = pair_table(_integer_range(X), c).values
    n_pairs = int(v.size)

    lo_idx = np.searchsorted(v, v - exact_gap, side="left")
    hi_idx = np.searchsorted(v, v + exact_gap, side="right")
    if exact_gap <= 1.0:
        exact = float(np.sum(hi_idx - lo_idx))
    else:
        total = int(np.sum(hi_idx - lo_idx))
        if total > WINDOW_PAIRS_CAP:
            raise ResourceCapError(f"exact window holds {total} pairs, cap is {WINDOW_PAIRS_CAP}")
        counts = hi_idx - lo_idx
        a = np.repeat(np.arange(n_pairs), counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        gap = np.abs(v[lo_idx[a] + offsets] - v[a])
        with np.errstate(divide="ignore"):
            exact = math.fsum(np.where(gap <= 1.0, 1.0, 1.0 / gap).tolist())

    lower, upper = [exact], [exact]
    span = float(v[-1] - v[0])
    edge = exact_gap
    while edge < span:
        # one-sided count of v_b - v_a in (edge, 2 edge], doubled for the mirror side
        cnt = 2 * int(
            np.sum(np.searchsorted(v, v + 2.0 * edge, side="right") - np.searchsorted(v, v + edge, side="right"))
        )
        if cnt:
            lower.append(cnt / (2.0 * edge) if 2.0 * edge > 1.0 else float(cnt))
            upper.append(cnt / edge if edge > 1.0 else float(cnt))
        edge *= 2.0
    lo_val, hi_val = math.fsum(lower), math.fsum(upper)
    slack = 1e-9 * hi_val
    return MinSumInterval(
        X=X, c=c, pairs=n_pairs, lower=lo_val - slack, upper=hi_val + slack, exact_part=exact,
        reference=X ** (4.0 - c) * math.log(X) ** 5,
    )


# ---------- intermediate range ----------
def intermediate_reference(params: TheoremParams, tau: float, K: float) -> float:
    """X^eta (X^{1/3+c/2} D K^{1/2} + X^{3/4+c/6} D^{2/3} K^{1/6} + X^{1-c/6} D^{1/3} tau^{-1/6})."""
    X, c, D = params.X, params.c, params.D
    return X ** params.eta * (
        X ** (1.0 / 3.0 + c / 2.0) * D * K ** 0.5
        + X ** (0.75 + c / 6.0) * D ** (2.0 / 3.0) * K ** (1.0 / 6.0)
        + X ** (1.0 - c / 6.0) * D ** (1.0 / 3.0) * tau ** (-1.0 / 6.0)
    )


def sup_grid(tau: float, K: float, per_octave: int = SUP_PER_OCTAVE) -> np.ndarray:
    if not (0 < tau < K):
        raise PreconditionError(f"need 0 < tau < K, got tau={tau}, K={K}")
    if per_octave < SUP_PER_OCTAVE:
        raise PreconditionError(f"grid density must be >= {SUP_PER_OCTAVE} points per octave")
    octaves = math.log2(K / tau)
    n = int(math.ceil(octaves * per_octave)) + 1
    return tau * np.exp2(np.linspace(0.0, octaves, n))


def intermediate_sup(
    ctx: ExpSumContext,
    sign: SumSign,
    tau: Optional[float] = None,
    K: Optional[float] = None,
    per_octave: int = SUP_PER_OCTAVE,
) -> SupReport:
    """sup of |L| over tau <= |t| <= K on a log grid, plus the same with geometric midpoints added."""
    tau = ctx.params.tau if tau is None else tau
    K = ctx.params.K if K is None else K
    grid = sup_grid(tau, K, per_octave)
    vals = np.abs(L_sum(ctx, sign, grid))
    mids = np.sqrt(grid[:-1] * grid[1:])
    mid_vals = np.abs(L_sum(ctx, sign, mids)) if mids.size else np.zeros(0)
    sup = float(vals.max())
    refined = max(sup, float(mid_vals.max())) if mid_vals.size else sup
    if sup > 0 and refined > 1.05 * sup:
        logger.warning("intermediate sup moved %.1f%% under refinement", 100.0 * (refined / sup - 1.0))
    return SupReport(
        sign=sign, tau=tau, K=K, points=int(grid.size), sup=sup, refined_sup=refined,
        trivial_bound=trivial_bound(ctx, sign), reference=intermediate_reference(ctx.params, tau, K),
    )


# ---------- trace rows ----------
def l_trace_rows(ctx: ExpSumContext, sign: SumSign, t_grid: np.ndarray) -> List[Tuple[float, float, float, float, float]]:
    t = np.asarray(t_grid, dtype=float)
    L = np.atleast_1d(L_sum(ctx, sign, t))
    M = np.atleast_1d(main_term(ctx, sign, t))
    return [(float(a), float(b.real), float(b.imag), float(abs(b)), float(abs(m))) for a, b, m in zip(t, L, M)]


def i_trace_rows(X: float, c: float, alphas: np.ndarray) -> List[Tuple[float, float, float, float, float]]:
    a = np.asarray(alphas, dtype=float)
    vals = I_values(a, X, c)
    C = decay_constant(c)
    with np.errstate(divide="ignore"):
        bound = np.where(a != 0, C * X ** (1.0 - c) / np.abs(a), X / 2.0)
    bound = np.minimum(bound, X / 2.0)
    return [(float(x), float(v.real), float(v.imag), float(abs(v)), float(b)) for x, v, b in zip(a, vals, bound)]


def moment_rows(reports: Sequence[MomentReport]) -> List[Tuple[float, str, float, float, float]]:
    return [(r.X, r.kind, r.value, r.reference, r.ratio) for r in reports]


def minsum_rows(intervals: Sequence[MinSumInterval]) -> List[Tuple[int, float, float, float, float, float]]:
    return [(m.X, m.lower, m.upper, m.exact_part, m.reference, m.ratio_upper) for m in intervals]
