"""Rosser weights of level D, sieve sandwich and vector-sieve checks, G+-, F(z), and f, F on [2, 3]."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from almost_prime_lab.errors import PreconditionError, ResourceCapError
from almost_prime_lab.models import GBoundsReport, SandwichReport, SieveFunctionValue, Sign, VectorSieveReport
from almost_prime_lab.primes import sieve_primes

logger = logging.getLogger("almost_prime_lab.sieve")

TABLE_CAP = 10_000_000
EXACT_G_LIMIT = 10_000
EULER_GAMMA = float(np.euler_gamma)
S_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class RosserWeights:
    level_D: float
    z: float
    sign: Sign
    table: Dict[int, int]  # d -> lambda(d), every odd squarefree z-smooth d < D
    factors: Dict[int, Tuple[int, ...]] = field(default_factory=dict)  # d -> primes, descending

    @property
    def nonzero(self) -> Dict[int, int]:
        return {d: lam for d, lam in self.table.items() if lam}

    @cached_property
    def sifting_primes(self) -> Tuple[int, ...]:
        return tuple(int(p) for p in sieve_primes(2, int(math.floor(self.z)))) if self.z >= 3 else ()


def trivial_weights(D: float, z: float, sign: Sign) -> RosserWeights:
    """The table {1: 1}; Lambda is identically 1."""
    return RosserWeights(level_D=D, z=z, sign=sign, table={1: 1}, factors={1: ()})


def _odd_primes_upto(z: float) -> List[int]:
    return [int(p) for p in sieve_primes(2, int(math.floor(z)))] if z >= 3 else []


def build_rosser(D: float, z: float, sign: Sign, cap: int = TABLE_CAP) -> RosserWeights:
    """
    d = p1 p2 ... pr with p1 > ... > pr gets lambda(d) = mu(d) when
    p1 ... p_{m-1} p_m^3 < D for every m <= r of the sign's parity (odd for plus, even for minus),
    and 0 otherwise. Only odd squarefree d < D with prime factors in (2, z] are tabulated.
    """
    if z < 3:
        raise PreconditionError(f"z must be >= 3, got {z}")
    if D < 1:
        raise PreconditionError(f"D must be >= 1, got {D}")
    if sign not in ("plus", "minus"):
        raise PreconditionError(f"sign must be plus or minus, got {sign!r}")
    primes = _odd_primes_upto(z)
    if sign == "minus" and primes and primes[-1] >= D:
        # a prime in [D, z] would carry lambda = 0 at an odd index and break the lower bound
        raise PreconditionError(
            f"lower sieve needs every sifting prime below D (largest prime {primes[-1]} >= D={D})"
        )
    parity = 1 if sign == "plus" else 0
    desc = sorted(primes, reverse=True)

    table: Dict[int, int] = {1: 1}
    factors: Dict[int, Tuple[int, ...]] = {1: ()}
    # stack entries: (d, index of next admissible prime in desc, r, alive)
    stack: List[Tuple[int, int, int, bool]] = [(1, 0, 0, True)]
    while stack:
        d, start, r, alive = stack.pop()
        for i in range(start, len(desc)):
            p = desc[i]
            nd = d * p
            if nd >= D:
                continue
            m = r + 1
            ok = alive
            if ok and m % 2 == parity and d * p ** 3 >= D:
                ok = False
            table[nd] = (-1) ** m if ok else 0
            factors[nd] = factors[d] + (p,)
            if len(table) > cap:
                raise ResourceCapError(f"Rosser table exceeds cap={cap} entries (D={D}, z={z})")
            stack.append((nd, i + 1, m, ok))
    w = RosserWeights(level_D=D, z=z, sign=sign, table=table, factors=factors)
    logger.debug("built %s weights D=%s z=%s: %d entries, %d nonzero", sign, D, z, len(table), len(w.nonzero))
    return w


def lambda_sum_at(weights: RosserWeights, m: int) -> int:
    """Lambda(m) = sum of lambda(d) over d | (m, P(z))."""
    if m < 1:
        raise PreconditionError(f"m must be >= 1, got {m}")
    ps = [p for p in weights.sifting_primes if m % p == 0]
    total = 0
    for r in range(len(ps) + 1):
        for combo in combinations(ps, r):
            total += weights.table.get(math.prod(combo), 0)
    return total


def lambda_sums(weights: RosserWeights, M: int) -> np.ndarray:
    """Lambda(m) for 0 <= m <= M (index 0 unused); d | m iff d | (m, P(z)) for tabulated d."""
    out = np.zeros(M + 1, dtype=np.int64)
    for d, lam in weights.nonzero.items():
        out[d::d] += lam
    return out


def coprime_indicator(z: float, M: int) -> np.ndarray:
    """[(m, P(z)) = 1] for 0 <= m <= M."""
    ind = np.ones(M + 1, dtype=np.int64)
    for p in _odd_primes_upto(z):
        ind[p::p] = 0
    return ind


def sandwich_check(D: float, z: float, M: int) -> SandwichReport:
    if M < 1:
        raise PreconditionError(f"M must be >= 1, got {M}")
    lower = lambda_sums(build_rosser(D, z, "minus"), M)[1:]
    upper = lambda_sums(build_rosser(D, z, "plus"), M)[1:]
    ind = coprime_indicator(z, M)[1:]
    report = SandwichReport(
        D=D, z=z, M=M,
        lower_violations=int(np.count_nonzero(lower > ind)),
        upper_violations=int(np.count_nonzero(ind > upper)),
    )
    if report.violations:
        logger.warning("sandwich violated %d times (D=%s z=%s M=%d)", report.violations, D, z, M)
    return report


def vector_sieve_bound(lo: Sequence[float], hi: Sequence[float]) -> float:
    """lo1 hi2 hi3 hi4 + hi1 lo2 hi3 hi4 + hi1 hi2 lo3 hi4 + hi1 hi2 hi3 lo4 - 3 hi1 hi2 hi3 hi4."""
    if len(lo) != 4 or len(hi) != 4:
        raise PreconditionError("vector sieve bound takes 4-tuples")
    if any(l > h for l, h in zip(lo, hi)):
        raise PreconditionError(f"need lo <= hi componentwise, got lo={lo} hi={hi}")
    prod_hi = math.prod(hi)
    total = 0.0
    for j in range(4):
        total += lo[j] * math.prod(hi[i] for i in range(4) if i != j)
    return total - 3.0 * prod_hi


def vector_sieve_bounds(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Row-wise vector_sieve_bound for (n, 4) arrays."""
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    prod_hi = hi.prod(axis=1)
    total = np.zeros(lo.shape[0], dtype=np.int64)
    for j in range(4):
        others = np.prod(np.delete(hi, j, axis=1), axis=1)
        total += lo[:, j] * others
    return total - 3 * prod_hi


def vector_sieve_sample(
    D: float, z: float, m_max: int = 2000, samples: int = 1_000_000, pool_size: int = 50, seed: int = 0
) -> VectorSieveReport:
    """Check the vector-sieve inequality on random quadruples and on every quadruple of a value pool."""
    lower = lambda_sums(build_rosser(D, z, "minus"), m_max)
    upper = lambda_sums(build_rosser(D, z, "plus"), m_max)
    ind = coprime_indicator(z, m_max)
    rng = np.random.default_rng(seed)

    violations = 0
    checked = 0
    chunk = 250_000
    remaining = samples
    while remaining > 0:
        n = min(chunk, remaining)
        ms = rng.integers(1, m_max + 1, size=(n, 4))
        bound = vector_sieve_bounds(lower[ms], upper[ms])
        violations += int(np.count_nonzero(bound > ind[ms].prod(axis=1)))
        checked += n
        remaining -= n

    pool = rng.choice(np.arange(1, m_max + 1), size=min(pool_size, m_max), replace=False)
    grid = np.stack(np.meshgrid(pool, pool, pool, pool, indexing="ij"), axis=-1).reshape(-1, 4)
    for start in range(0, grid.shape[0], chunk):
        ms = grid[start : start + chunk]
        bound = vector_sieve_bounds(lower[ms], upper[ms])
        violations += int(np.count_nonzero(bound > ind[ms].prod(axis=1)))
        checked += ms.shape[0]

    return VectorSieveReport(
        D=D, z=z, m_max=m_max, samples=samples, pool_size=int(pool.size), checked=checked, violations=violations
    )


def _phi_squarefree(factors: Tuple[int, ...]) -> int:
    return math.prod(p - 1 for p in factors)


def g_sum(weights: RosserWeights, exact: Optional[bool] = None) -> float | Fraction:
    """G = sum over d | P(z) of lambda(d)/phi(d); exact Fractions for small tables."""
    items = [(d, lam) for d, lam in sorted(weights.table.items()) if lam]
    if exact is None:
        exact = len(weights.table) <= EXACT_G_LIMIT
    if exact:
        return sum((Fraction(lam, _phi_squarefree(weights.factors[d])) for d, lam in items), Fraction(0))
    return math.fsum(lam / _phi_squarefree(weights.factors[d]) for d, lam in items)


def curly_F(z: float, exact: bool = False) -> float | Fraction:
    """Product over 2 < p <= z of (1 - 1/(p-1)); the empty product 1 for z < 3."""
    if z < 3:
        logger.warning("curly_F: z=%s < 3 gives the empty product", z)
        return Fraction(1) if exact else 1.0
    primes = _odd_primes_upto(z)
    if exact:
        return math.prod((Fraction(p - 2, p - 1) for p in primes), start=Fraction(1))
    return math.prod((p - 2) / (p - 1) for p in primes)


def curly_F_log_ratio(z: float) -> float:
    """F(z) * log z, bounded above and below as z grows."""
    return float(curly_F(z)) * math.log(z)


def sieve_functions(s: float) -> SieveFunctionValue:
    # log D / log z lands a few ulps off the endpoints for D = z^2, z^3
    if abs(s - 2.0) < S_EDGE_TOL:
        s = 2.0
    elif abs(s - 3.0) < S_EDGE_TOL:
        s = 3.0
    if not (2.0 <= s <= 3.0):
        raise PreconditionError(f"s={s} outside [2, 3]; no continuation of f, F is provided")
    scale = 2.0 * math.exp(EULER_GAMMA) / s
    return SieveFunctionValue(s=s, f=scale * math.log(s - 1.0), F=scale)


def g_bounds_check(D: float, z: float) -> GBoundsReport:
    """G- <= F(z) <= G+ asserted exactly; the comparisons with f(s), F(s) are ratio reports."""
    s = math.log(D) / math.log(z)
    sf = sieve_functions(s)
    plus = build_rosser(D, z, "plus")
    minus = build_rosser(D, z, "minus")
    exact = max(len(plus.table), len(minus.table)) <= EXACT_G_LIMIT
    gp, gm = g_sum(plus, exact), g_sum(minus, exact)
    cf = curly_F(z, exact=exact)
    chain = gm <= cf <= gp
    if not chain:
        logger.warning("chain G- <= F(z) <= G+ fails: %s, %s, %s", gm, cf, gp)
    cf_f = float(cf)
    return GBoundsReport(
        D=D, z=z, s=s, G_minus=float(gm), curly_F=cf_f, G_plus=float(gp), f=sf.f, F=sf.F,
        ratio_lower=float(gm) / (cf_f * sf.f) if sf.f > 0 else math.inf,
        ratio_upper=float(gp) / (cf_f * sf.F),
        chain_holds=bool(chain), exact=exact, table_size=len(plus.table),
    )


def weights_table_rows(plus: RosserWeights, minus: RosserWeights) -> List[Tuple[int, str, int, int]]:
    """(d, factorization, lambda_plus, lambda_minus) rows sorted by d."""
    ds = sorted(set(plus.table) | set(minus.table))
    factors = {**minus.factors, **plus.factors}
    return [
        (d, "*".join(str(p) for p in sorted(factors.get(d, ()))) or "1", plus.table.get(d, 0), minus.table.get(d, 0))
        for d in ds
    ]
