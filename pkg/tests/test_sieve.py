from fractions import Fraction

import numpy as np
import pytest

from almost_prime_lab import sieve
from almost_prime_lab.errors import PreconditionError, ResourceCapError


def test_weights_level_100_z_10():
    plus = sieve.build_rosser(100, 10, "plus")
    minus = sieve.build_rosser(100, 10, "minus")
    assert plus.nonzero == {1: 1, 3: -1}
    assert minus.nonzero == {1: 1, 3: -1, 5: -1, 7: -1}
    for d in (15, 21, 35):
        assert minus.table[d] == 0
        assert plus.table[d] == 0
    assert set(plus.table) == {1, 3, 5, 7, 15, 21, 35}
    assert plus.factors[35] == (7, 5)


def test_weights_are_moebius_or_zero():
    w = sieve.build_rosser(1000, 30, "plus")
    for d, lam in w.table.items():
        r = len(w.factors[d])
        assert lam in (0, (-1) ** r)
        assert d < 1000 and d % 2 == 1
        assert all(p <= 30 for p in w.factors[d])


def test_truncation_is_inherited():
    # once a prefix fails, every extension of it is 0
    w = sieve.build_rosser(500, 20, "minus")
    for d, lam in w.table.items():
        fac = w.factors[d]
        if lam == 0:
            continue
        for cut in range(1, len(fac)):
            prefix = int(np.prod(fac[:cut]))
            assert w.table[prefix] != 0


def test_build_rosser_preconditions():
    with pytest.raises(PreconditionError):
        sieve.build_rosser(100, 2, "plus")
    with pytest.raises(PreconditionError):
        sieve.build_rosser(0.5, 10, "plus")
    with pytest.raises(PreconditionError):
        sieve.build_rosser(100, 10, "both")
    # a sifting prime at or above D would break the lower bound
    with pytest.raises(PreconditionError):
        sieve.build_rosser(2, 10, "minus")
    with pytest.raises(ResourceCapError):
        sieve.build_rosser(10**6, 100, "plus", cap=10)


def test_lambda_sums_match_pointwise():
    for sign in ("plus", "minus"):
        w = sieve.build_rosser(100, 10, sign)
        arr = sieve.lambda_sums(w, 300)
        for m in range(1, 301):
            assert arr[m] == sieve.lambda_sum_at(w, m)
    assert sieve.lambda_sum_at(sieve.build_rosser(100, 10, "plus"), 1) == 1
    with pytest.raises(PreconditionError):
        sieve.lambda_sum_at(sieve.build_rosser(100, 10, "plus"), 0)


def test_coprime_indicator():
    ind = sieve.coprime_indicator(10, 30)
    expected = [m for m in range(1, 31) if all(m % p for p in (3, 5, 7))]
    assert np.flatnonzero(ind[1:]).tolist() == [m - 1 for m in expected]


@pytest.mark.parametrize("D, z", [(50, 10), (100, 10), (500, 20), (1000, 30)])
def test_sandwich(D, z):
    report = sieve.sandwich_check(D, z, 100_000)
    assert report.violations == 0


def test_sandwich_trivial_m():
    report = sieve.sandwich_check(100, 10, 1)
    assert (report.lower_violations, report.upper_violations) == (0, 0)


def test_vector_sieve_bound_examples():
    assert sieve.vector_sieve_bound((1, 1, 1, 1), (1, 1, 1, 1)) == 1
    # lo = (1,1,1,-1), hi = (1,1,1,2): 2 + 2 + 2 - 1 - 6
    assert sieve.vector_sieve_bound((1, 1, 1, -1), (1, 1, 1, 2)) == -1
    assert sieve.vector_sieve_bound((1, 1, 1, -1), (1, 1, 1, 0)) <= 0
    with pytest.raises(PreconditionError):
        sieve.vector_sieve_bound((2, 1, 1, 1), (1, 1, 1, 1))
    with pytest.raises(PreconditionError):
        sieve.vector_sieve_bound((1, 1, 1), (1, 1, 1))


def test_vectorized_bound_matches_scalar():
    rng = np.random.default_rng(7)
    lo = rng.integers(-2, 2, size=(200, 4))
    hi = lo + rng.integers(0, 3, size=(200, 4))
    got = sieve.vector_sieve_bounds(lo, hi)
    for row, val in zip(zip(lo.tolist(), hi.tolist()), got.tolist()):
        assert sieve.vector_sieve_bound(*row) == val


def test_vector_sieve_sample():
    report = sieve.vector_sieve_sample(100, 10, m_max=2000, samples=100_000, pool_size=20, seed=1)
    assert report.violations == 0
    assert report.checked == 100_000 + 20**4


@pytest.mark.slow
def test_vector_sieve_full_sample():
    report = sieve.vector_sieve_sample(100, 10, m_max=2000, samples=1_000_000, pool_size=50, seed=20170101)
    assert report.violations == 0


@pytest.mark.parametrize(
    "D, z, plus, curly, minus",
    [
        (343, 7, Fraction(3, 8), Fraction(5, 16), Fraction(7, 24)),
        (27, 3, Fraction(1), Fraction(1, 2), Fraction(1, 2)),
        (100, 5, Fraction(1, 2), Fraction(3, 8), Fraction(1, 4)),
    ],
)
def test_g_sums_exact(D, z, plus, curly, minus):
    gp = sieve.g_sum(sieve.build_rosser(D, z, "plus"))
    gm = sieve.g_sum(sieve.build_rosser(D, z, "minus"))
    assert isinstance(gm, Fraction)
    assert gp == plus
    assert gm == minus
    assert sieve.curly_F(z, exact=True) == curly
    assert gm <= curly <= gp


@pytest.mark.parametrize("D, z", [(343, 7), (27, 3), (100, 5), (1000, 10), (10_000, 30)])
def test_g_bounds_chain(D, z):
    report = sieve.g_bounds_check(D, z)
    assert report.chain_holds
    assert report.exact
    assert report.G_minus <= report.curly_F <= report.G_plus


def test_g_sum_float_agrees_with_exact():
    w = sieve.build_rosser(10_000, 30, "minus")
    assert float(sieve.g_sum(w, exact=True)) == pytest.approx(sieve.g_sum(w, exact=False), rel=1e-13)


def test_trivial_weights():
    w = sieve.trivial_weights(100, 2, "plus")
    assert w.nonzero == {1: 1}
    assert sieve.g_sum(w) == 1
    assert sieve.curly_F(2) == 1.0


def test_curly_F_log_ratio_stays_bounded():
    ratios = [sieve.curly_F_log_ratio(z) for z in (10.0, 100.0, 1000.0, 10_000.0)]
    assert all(0.5 < r < 2.0 for r in ratios)


def test_sieve_functions_closed_forms():
    v = sieve.sieve_functions(2.95)
    eg = np.exp(np.euler_gamma)
    assert v.F == pytest.approx(2 * eg / 2.95)
    assert v.f == pytest.approx(2 * eg * np.log(1.95) / 2.95)
    assert sieve.sieve_functions(2.0).f == pytest.approx(0.0)
    # D = z^3 gives s a few ulps away from 3
    assert sieve.sieve_functions(np.log(125.0) / np.log(5.0)).s == 3.0
    with pytest.raises(PreconditionError):
        sieve.sieve_functions(3.5)
    with pytest.raises(PreconditionError):
        sieve.sieve_functions(1.5)


def test_f_increasing_F_decreasing():
    grid = np.linspace(2.0, 3.0, 51)
    f = [sieve.sieve_functions(s).f for s in grid]
    F = [sieve.sieve_functions(s).F for s in grid]
    assert all(a < b for a, b in zip(f, f[1:]))
    assert all(a > b for a, b in zip(F, F[1:]))


def test_weights_table_rows():
    rows = sieve.weights_table_rows(sieve.build_rosser(100, 10, "plus"), sieve.build_rosser(100, 10, "minus"))
    by_d = {r[0]: r for r in rows}
    assert by_d[1] == (1, "1", 1, 1)
    assert by_d[3] == (3, "3", -1, -1)
    assert by_d[5] == (5, "5", 0, -1)
    assert by_d[35] == (35, "5*7", 0, 0)
    assert [r[0] for r in rows] == sorted(by_d)


def test_sifting_primes_are_computed_once(monkeypatch):
    w = sieve.build_rosser(100, 10, "plus")
    assert w.sifting_primes == (3, 5, 7)

    def fail(*args, **kwargs):
        raise AssertionError("sifting primes re-sieved")

    monkeypatch.setattr(sieve, "sieve_primes", fail)
    assert [sieve.lambda_sum_at(w, m) for m in (1, 3, 15, 105)] == [1, 0, 0, 0]
    assert sieve.trivial_weights(100, 2, "plus").sifting_primes == ()
