"""Prime enumeration, smallest-prime-factor tables and the arithmetic functions phi, mu, tau, Omega."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from almost_prime_lab.errors import PreconditionError
from almost_prime_lab.models import RoughnessVerdict

logger = logging.getLogger("almost_prime_lab.primes")

SEGMENT_SIZE = 1 << 18  # ~256 KiB of bool per segment, near a typical L2
MAX_HI = (1 << 62)


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    primes: np.ndarray  # int64, ascending
    spf: np.ndarray  # int64, spf[n] for 2 <= n <= limit; spf[0] = spf[1] = 0

    def __contains__(self, n: int) -> bool:
        return 2 <= n <= self.limit and int(self.spf[n]) == n


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def build_prime_table(limit: int) -> PrimeTable:
    if limit < 2:
        raise PreconditionError(f"prime table limit must be >= 2, got {limit}")
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]  # view
            block[block == 0] = p
    idx = np.flatnonzero(spf == 0)
    idx = idx[idx >= 2]
    spf[idx] = idx
    return PrimeTable(limit=limit, primes=idx.astype(np.int64), spf=spf)


def sieve_primes(lo: int, hi: int, segment_size: int = SEGMENT_SIZE) -> np.ndarray:
    """Primes in (lo, hi], ascending, by a segmented sieve of Eratosthenes."""
    if lo < 0 or hi < lo:
        raise PreconditionError(f"need 0 <= lo <= hi, got ({lo}, {hi}]")
    if hi >= MAX_HI:
        raise PreconditionError(f"hi={hi} overflows the 64-bit sieve range")
    if segment_size < 2:
        raise PreconditionError("segment_size must be >= 2")
    if hi == lo:
        return np.array([], dtype=np.int64)

    base = _simple_sieve(math.isqrt(hi))
    out: List[np.ndarray] = []
    start = lo + 1
    while start <= hi:
        stop = min(start + segment_size, hi + 1)  # exclusive
        mask = np.ones(stop - start, dtype=bool)
        if start < 2:
            mask[: 2 - start] = False
        for p in base:
            p = int(p)
            if p * p >= stop:
                break
            first = max(p * p, -(-start // p) * p)
            if first < stop:
                mask[first - start :: p] = False
        out.append(np.flatnonzero(mask).astype(np.int64) + start)
        start = stop
    return np.concatenate(out) if out else np.array([], dtype=np.int64)


def segment_counts(lo: int, hi: int, segment_size: int = SEGMENT_SIZE) -> List[Tuple[int, int, int]]:
    """(segment_lo, segment_hi, prime count) rows for the CSV dump."""
    rows: List[Tuple[int, int, int]] = []
    primes = sieve_primes(lo, hi, segment_size)
    start = lo
    while start < hi:
        stop = min(start + segment_size, hi)
        cnt = int(np.searchsorted(primes, stop, side="right") - np.searchsorted(primes, start, side="right"))
        rows.append((start, stop, cnt))
        start = stop
    return rows


def is_prime(n: int) -> bool:
    """Deterministic trial division up to sqrt(n)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    f = 3
    while f <= r:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int, table: Optional[PrimeTable] = None) -> List[Tuple[int, int]]:
    """(prime, exponent) pairs of n, ascending. Uses the spf table when n is covered."""
    if n < 1:
        raise PreconditionError(f"cannot factor n={n}")
    out: Dict[int, int] = {}
    if table is not None and n <= table.limit:
        while n > 1:
            p = int(table.spf[n])
            out[p] = out.get(p, 0) + 1
            n //= p
        return sorted(out.items())

    candidates = table.primes if table is not None else None
    if candidates is not None:
        for p in candidates:
            p = int(p)
            if p * p > n:
                break
            while n % p == 0:
                out[p] = out.get(p, 0) + 1
                n //= p
        f = int(candidates[-1]) + 2 if len(candidates) else 2
        if f % 2 == 0:
            f += 1
    else:
        while n % 2 == 0:
            out[2] = out.get(2, 0) + 1
            n //= 2
        f = 3
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return sorted(out.items())


def classify_shifted(p: int, z: float, table: Optional[PrimeTable] = None) -> RoughnessVerdict:
    """Factor n = p + 2 and report Omega, least odd prime factor and coprimality to P(z)."""
    if not is_prime(p):
        raise PreconditionError(f"p={p} is not prime")
    if z < 3:
        raise PreconditionError(f"z must be >= 3, got {z}")
    n = p + 2
    fac = factorize(n, table)
    odd = [q for q, _ in fac if q != 2]
    lpf = odd[0] if odd else None
    return RoughnessVerdict(
        n=n,
        z=z,
        least_odd_prime_factor=lpf,
        omega=sum(e for _, e in fac),
        omega_distinct=len(fac),
        is_coprime_to_Pz=lpf is None or lpf > z,
    )


# ---------- multiplicative functions ----------
def _check_positive(n: int) -> None:
    if n < 1:
        raise PreconditionError(f"arithmetic functions need n >= 1, got {n}")


def euler_phi(n: int, table: Optional[PrimeTable] = None) -> int:
    _check_positive(n)
    out = n
    for p, _ in factorize(n, table):
        out -= out // p
    return out


def moebius(n: int, table: Optional[PrimeTable] = None) -> int:
    _check_positive(n)
    fac = factorize(n, table)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def divisor_count(n: int, table: Optional[PrimeTable] = None) -> int:
    _check_positive(n)
    return math.prod(e + 1 for _, e in factorize(n, table))


def phi_table(limit: int) -> np.ndarray:
    phi = np.arange(limit + 1, dtype=np.int64)
    for p in _simple_sieve(limit):
        phi[p::p] -= phi[p::p] // p
    return phi


def moebius_table(limit: int) -> np.ndarray:
    mu = np.ones(limit + 1, dtype=np.int64)
    mu[0] = 0
    for p in _simple_sieve(limit):
        p = int(p)
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def divisor_count_table(limit: int) -> np.ndarray:
    tau = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, limit + 1):
        tau[d::d] += 1
    return tau


def phi_reciprocal_sum(X: int) -> float:
    """Sum_{n <= X} 1/phi(n), exactly rounded."""
    if X < 2:
        raise PreconditionError(f"X must be >= 2, got {X}")
    phi = phi_table(int(X))
    return math.fsum((1.0 / phi[1:]).tolist())


def tau_growth(limit: int, exponent: float = 0.3) -> float:
    """max_{n <= limit} tau(n) / n^exponent."""
    tau = divisor_count_table(limit)
    n = np.arange(1, limit + 1, dtype=float)
    return float(np.max(tau[1:] / n ** exponent))
