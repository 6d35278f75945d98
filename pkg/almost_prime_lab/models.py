from __future__ import annotations

import os
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field

Regime = Literal["asymptotic", "desk"]
RangeClass = Literal["inside-main-range", "inside-variant-range-only", "outside"]
Sign = Literal["plus", "minus"]
SumSign = Literal["plus", "minus", "unsieved"]


def available_threads() -> int:
    return os.cpu_count() or 1


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


# ---------- params ----------
class TheoremParams(_Frozen):
    c: float
    N: float
    A: float
    X: float
    tau: float
    vartheta: float
    K: float
    D: float
    eps0: float = 0.001
    eta: float
    s: float
    beta: float
    z: float
    h: int
    regime: Regime = "asymptotic"
    diagnostics: List[str] = Field(default_factory=list)


class ScanReport(BaseModel):
    c: float
    D_exponent: float
    coefficient: float
    grid_step: float
    rows: List[Tuple[float, float]] = Field(default_factory=list)
    best_s: float
    best_objective: float
    beta: float
    h: int
    all_negative: bool


# ---------- kernel ----------
class KernelSpec(_Frozen):
    vartheta: float = Field(gt=0)
    k: int = Field(default=8, ge=1)

    @computed_field
    @property
    def a(self) -> float:
        return 7.0 * self.vartheta / 8.0

    @computed_field
    @property
    def delta(self) -> float:
        return self.vartheta / (8.0 * self.k)


class KernelBoundReport(BaseModel):
    vartheta: float
    k: int
    points: int
    violations: int
    max_excess: float
    dominant_branch: Dict[str, int] = Field(default_factory=dict)


class RoundtripReport(BaseModel):
    T: float
    quad_step: float
    y_points: int
    max_error: float
    tail_bound: float

    @computed_field
    @property
    def certified_error(self) -> float:
        return self.max_error + self.tail_bound


# ---------- primes ----------
class RoughnessVerdict(_Frozen):
    n: int
    z: float
    least_odd_prime_factor: Optional[int] = None
    omega: int
    omega_distinct: int
    is_coprime_to_Pz: bool


# ---------- sieve ----------
class SieveFunctionValue(_Frozen):
    s: float
    f: float
    F: float


class SandwichReport(BaseModel):
    D: float
    z: float
    M: int
    lower_violations: int
    upper_violations: int

    @computed_field
    @property
    def violations(self) -> int:
        return self.lower_violations + self.upper_violations


class VectorSieveReport(BaseModel):
    D: float
    z: float
    m_max: int
    samples: int
    pool_size: int
    checked: int
    violations: int


class GBoundsReport(BaseModel):
    D: float
    z: float
    s: float
    G_minus: float
    curly_F: float
    G_plus: float
    f: float
    F: float
    ratio_lower: float  # G- / (F(z) f(s))
    ratio_upper: float  # G+ / (F(z) F(s))
    chain_holds: bool
    exact: bool
    table_size: int


# ---------- expsum ----------
class DecayReport(BaseModel):
    X: float
    c: float
    constant: float
    points: int
    max_ratio: float

    @computed_field
    @property
    def holds(self) -> bool:
        return self.max_ratio <= 1.0


class ResidualReport(BaseModel):
    sign: SumSign
    X: float
    A: float
    points: int
    sup_residual: float
    reference: float  # X / (log X)^A
    normalized: float  # sup_residual / (X / log^2 X)
    asymptotic_regime: bool


class MomentReport(BaseModel):
    kind: str
    sign: SumSign
    X: float
    c: float
    value: float
    reference: float
    step: float
    points: int
    resolved: bool = True
    richardson_delta: Optional[float] = None

    @computed_field
    @property
    def ratio(self) -> float:
        return self.value / self.reference if self.reference else float("nan")


class MinSumInterval(BaseModel):
    X: int
    c: float
    pairs: int
    lower: float
    upper: float
    exact_part: float
    reference: float  # X^{4-c} log^5 X

    @computed_field
    @property
    def ratio_upper(self) -> float:
        return self.upper / self.reference


class SupReport(BaseModel):
    sign: SumSign
    tau: float
    K: float
    points: int
    sup: float
    refined_sup: float
    trivial_bound: float
    reference: float  # three-term bound, exploratory only


class TailMomentReport(BaseModel):
    sign: SumSign
    second: float
    fourth: float
    cauchy_product: float
    reference_second: float
    reference_fourth: float
    points: int


# ---------- gamma ----------
class Witness(_Frozen):
    p1: int
    p2: int
    p3: int
    p4: int
    form_value: float
    distance: float
    multiplicity: int = 1
    shifted_profiles: List[RoughnessVerdict] = Field(default_factory=list)

    def row(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "p1": self.p1,
            "p2": self.p2,
            "p3": self.p3,
            "p4": self.p4,
            "form_value": self.form_value,
            "distance": self.distance,
            "multiplicity": self.multiplicity,
        }
        for i, v in enumerate(self.shifted_profiles, 1):
            out[f"omega{i}"] = v.omega
            out[f"omega_distinct{i}"] = v.omega_distinct
            out[f"lpf{i}"] = v.least_odd_prime_factor
        return out


class WitnessSearch(BaseModel):
    radius: float
    admissible_primes: int
    searched_quadruples: int
    matches: int
    witnesses: List[Witness] = Field(default_factory=list)


class FourierReport(BaseModel):
    value: float
    imag: float
    regions: Tuple[float, float, float]  # |t|<tau, tau<=|t|<=K, K<|t|<=T
    tail_bound: float
    T: float
    quad_step: float
    points: int


class BReport(BaseModel):
    B: float
    error_estimate: float
    grid_step: float
    points: int
    window: Literal["smooth", "indicator"] = "smooth"


class PredictionReport(BaseModel):
    B: float
    G_plus: float
    G_minus: float
    coefficient: float
    W: float
    prediction: float

    @computed_field
    @property
    def negative(self) -> bool:
        return self.W < 0


class GammaReport(BaseModel):
    N: float
    gamma_direct: float
    gamma_smoothed: float
    gamma_inner: float  # direct count at radius 3*vartheta/4
    gamma1: float
    gamma5: float
    gamma0: float  # 4 gamma1 - 3 gamma5
    gamma1_fourier: Optional[float] = None
    gamma1_regions: Optional[Tuple[float, float, float]] = None
    gamma1_tail_bound: Optional[float] = None
    J1: Optional[float] = None
    B: float
    B_error: float = 0.0
    W: float
    prediction: float
    final_reference: float  # vartheta X^{4-c} / log^4 X
    regime: Regime
    witnesses: List[Witness] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)


# ---------- verify ----------
class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class SuiteResult(BaseModel):
    suite: str
    checks: List[CheckResult] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------- run configs ----------
class ParamsConfig(BaseModel):
    c: float = 1.005
    N: Optional[float] = None
    X: float = 1.0e6
    A: float = 21.0
    s: float = 2.95
    coefficient: float = 2.0 / 3.0
    scan: bool = False
    grid_step: float = 0.01
    out: Optional[str] = None


class SearchConfig(BaseModel):
    c: float = 1.005
    X: float = 2000.0
    N: Optional[float] = None
    vartheta: float = 0.05
    z: float = 5.0
    D: Optional[float] = None
    radius: Optional[float] = None
    require_rough: bool = True
    limit: int = 100
    # no effect on results, so kept out of artifact headers
    threads: int = Field(default_factory=available_threads, ge=1, exclude=True)
    out: Optional[str] = None


class TraceConfig(BaseModel):
    quantity: Literal["L", "I", "Theta", "moments", "minsum", "primes"] = "L"
    c: float = 1.1
    X: float = 1000.0
    vartheta: float = 0.05
    k: int = 8
    z: float = 5.0
    D: Optional[float] = None
    sign: SumSign = "plus"
    points: int = 257
    t_max: Optional[float] = None
    scales: List[float] = Field(default_factory=lambda: [256.0, 512.0, 1024.0])
    segment_size: int = 1 << 18
    threads: int = Field(default_factory=available_threads, ge=1, exclude=True)
    out: Optional[str] = None


class VerifyConfig(BaseModel):
    suite: Literal["params", "primes", "sieve", "kernel", "expsum", "gamma", "all"] = "all"
    seed: int = 20170101
    samples: int = 1_000_000
    out: Optional[str] = None


class WeightsConfig(BaseModel):
    D: float = 100.0
    z: float = 10.0
    out: Optional[str] = None


class KernelTableConfig(BaseModel):
    vartheta: float = 0.05
    k: int = 8
    x_max: Optional[float] = None
    points: int = 1001
    out: Optional[str] = None


class ReportConfig(BaseModel):
    c: float = 1.1
    X: float = 100.0
    N: Optional[float] = None
    vartheta: float = 0.05
    k: int = 8
    z: float = 5.0
    D: Optional[float] = None
    coefficient: float = 0.75
    T: Optional[float] = None
    witness_limit: int = 20
    threads: int = Field(default_factory=available_threads, ge=1, exclude=True)
    out: Optional[str] = None
