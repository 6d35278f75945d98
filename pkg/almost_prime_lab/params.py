"""Theorem parameters: derivation, desk-regime overrides, sieve-quality scan, c-range classification."""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from almost_prime_lab.errors import PreconditionError
from almost_prime_lab.models import RangeClass, ScanReport, TheoremParams
from almost_prime_lab.sieve import sieve_functions

logger = logging.getLogger("almost_prime_lab.params")

EPS0 = Fraction(1, 1000)
D_EXPONENT = Fraction(1, 11) - EPS0  # 989/11000
TAU_EXPONENT = Fraction(57, 275)
BETA_LIMIT = Fraction(1, 33)
MAIN_RANGE = Fraction(832, 825)
VARIANT_RANGE = Fraction(51, 50)
DEFAULT_A = 21.0
DEFAULT_S = 2.95
MIN_X = 16.0
S_RANGE = (2.0, 3.0)


def check_theorem_range(c: float) -> RangeClass:
    """Classify c against the main range (1, 832/825) and the wider variant range (1, 51/50)."""
    if 1.0 < c < float(MAIN_RANGE):
        return "inside-main-range"
    if 1.0 < c < float(VARIANT_RANGE):
        return "inside-variant-range-only"
    return "outside"


def _diagnose(c: float, beta: float, regime: str) -> List[str]:
    notes: List[str] = []
    cls = check_theorem_range(c)
    if cls != "inside-main-range":
        notes.append(f"c={c!r} is {cls} (main range is 1 < c < 832/825)")
    if beta >= float(BETA_LIMIT):
        notes.append(f"beta={beta:.6f} >= 1/33 conflicts with the constraint 0 < beta < 1/33")
    if regime == "desk":
        notes.append("desk regime: parameters overridden, not the asymptotic formulas")
    for n in notes:
        logger.warning(n)
    return notes


def derive_params(c: float, N: float, A: float = DEFAULT_A, s: float = DEFAULT_S) -> TheoremParams:
    """All derived quantities from (c, N, A, s) by the asymptotic formulas."""
    if c < 1.0:
        raise PreconditionError(f"c must be >= 1, got {c}")
    if A <= 0:
        raise PreconditionError(f"A must be positive, got {A}")
    if not (S_RANGE[0] <= s <= S_RANGE[1]):
        raise PreconditionError(f"s={s} outside [2, 3], where f and F have closed forms")
    if N <= 0:
        raise PreconditionError(f"N must be positive, got {N}")

    X = (N / 3.0) ** (1.0 / c)
    if X < MIN_X:
        raise PreconditionError(f"N={N} too small: X=(N/3)^(1/c)={X:.4g} < {MIN_X}")
    logX = math.log(X)

    tau = X ** (float(TAU_EXPONENT) - c)
    vartheta = logX ** (-(A + 1.0))
    K = logX ** 2 / vartheta
    D = X ** float(D_EXPONENT)
    eta = float(EPS0) / 9.0
    beta = float(D_EXPONENT) / s
    z = X ** beta
    h = math.floor(1.0 / beta)

    diagnostics = _diagnose(c, beta, "asymptotic")
    if c == 1.0:
        diagnostics.append("c = 1 is the degenerate integer case, outside every theorem range")

    return TheoremParams(
        c=c, N=N, A=A, X=X, tau=tau, vartheta=vartheta, K=K, D=D, eps0=float(EPS0),
        eta=eta, s=s, beta=beta, z=z, h=h, regime="asymptotic", diagnostics=diagnostics,
    )


def desk_params(
    c: float,
    N: Optional[float] = None,
    *,
    X: Optional[float] = None,
    vartheta: float,
    z: float,
    D: Optional[float] = None,
    tau: Optional[float] = None,
    K: Optional[float] = None,
    A: float = DEFAULT_A,
) -> TheoremParams:
    """
    Desk-regime parameters: asymptotic formulas are defaults, everything is overridable.
    Give either N or X; the other follows from X = (N/3)^(1/c). D defaults to z^3 (s = 3).
    """
    if c < 1.0:
        raise PreconditionError(f"c must be >= 1, got {c}")
    if N is None and X is None:
        raise PreconditionError("desk_params needs N or X")
    if N is None:
        N = 3.0 * X ** c
    if X is None:
        X = (N / 3.0) ** (1.0 / c)
    if X <= 1.0 or N <= 0:
        raise PreconditionError(f"X must exceed 1 (got X={X}, N={N})")
    if vartheta <= 0:
        raise PreconditionError(f"vartheta must be positive, got {vartheta}")
    if z <= 1.0:
        raise PreconditionError(f"z must exceed 1, got {z}")
    if D is None:
        D = z ** 3
    if D <= 1.0:
        raise PreconditionError(f"D must exceed 1, got {D}")

    logX = math.log(X)
    tau = X ** (float(TAU_EXPONENT) - c) if tau is None else tau
    K = logX ** 2 / vartheta if K is None else K
    s = math.log(D) / math.log(z)
    beta = math.log(z) / logX
    h = math.floor(1.0 / beta)
    return TheoremParams(
        c=c, N=N, A=A, X=X, tau=tau, vartheta=vartheta, K=K, D=D, eps0=float(EPS0),
        eta=float(EPS0) / 9.0, s=s, beta=beta, z=z, h=h, regime="desk",
        diagnostics=_diagnose(c, beta, "desk"),
    )


def sieve_objective(s: np.ndarray | float, coefficient: float) -> np.ndarray:
    """f(s) - coefficient * F(s), elementwise over s in [2, 3]."""
    grid = np.asarray(s, dtype=float)
    values = [sieve_functions(float(x)) for x in grid.ravel()]
    return np.array([v.f - coefficient * v.F for v in values]).reshape(grid.shape)


def scan_sieve_quality(
    c: float,
    D_exponent: float = float(D_EXPONENT),
    coefficient: float = 2.0 / 3.0,
    grid_step: float = 0.01,
) -> ScanReport:
    if grid_step <= 0:
        raise PreconditionError(f"grid_step must be positive, got {grid_step}")
    if not (0.0 <= coefficient < 1.0):
        raise PreconditionError(f"coefficient must lie in [0, 1), got {coefficient}")
    if D_exponent <= 0:
        raise PreconditionError(f"D_exponent must be positive, got {D_exponent}")

    n = int(math.floor((S_RANGE[1] - S_RANGE[0]) / grid_step + 1e-9))
    grid = S_RANGE[0] + grid_step * np.arange(n + 1)
    if grid[-1] < S_RANGE[1] - 1e-12:
        grid = np.append(grid, S_RANGE[1])
    obj = sieve_objective(grid, coefficient)

    i = int(np.argmax(obj))
    best_s = float(grid[i])
    beta = D_exponent / best_s
    rows = [(float(a), float(b)) for a, b in zip(grid, obj)]
    report = ScanReport(
        c=c, D_exponent=D_exponent, coefficient=coefficient, grid_step=grid_step, rows=rows,
        best_s=best_s, best_objective=float(obj[i]), beta=beta, h=math.floor(1.0 / beta),
        all_negative=bool(np.all(obj < 0)),
    )
    if report.all_negative:
        logger.warning("objective f(s) - %.4f F(s) is negative on all of [2, 3]", coefficient)
    return report


def params_report(p: TheoremParams) -> Dict[str, Any]:
    """Decimal values next to exact rational exponents for JSON output."""
    out = p.model_dump(mode="json")
    out["range_class"] = check_theorem_range(p.c)
    out["exponents"] = {
        "tau": f"{TAU_EXPONENT} - c",
        "tau_value": float(TAU_EXPONENT) - p.c,
        "D": str(D_EXPONENT),
        "D_value": float(D_EXPONENT),
        "eps0": str(EPS0),
        "beta_limit": str(BETA_LIMIT),
        "main_range": str(MAIN_RANGE),
        "variant_range": str(VARIANT_RANGE),
    }
    out["beta_exceeds_limit"] = p.beta >= float(BETA_LIMIT)
    return out
