from fractions import Fraction
from math import factorial

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from fractau.fracpoly import (
    FLPBasis,
    FracGrid,
    FracPoly,
    GridMismatchError,
    flp_coefficient_row,
    flp_coefficients,
    flp_eval,
    fracpoly_combine,
    fracpoly_eval,
)
from fractau.numerics import DomainError, gauss_legendre, to_mpf, tol


def explicit_row(i):
    return tuple((-1) ** (i + j) * factorial(i + j) // (factorial(i - j) * factorial(j) ** 2) for j in range(i + 1))


@pytest.mark.parametrize("i,row", [(0, (1,)), (1, (-1, 2)), (2, (1, -6, 6))])
def test_coefficient_rows(i, row):
    assert flp_coefficient_row(i) == row
    assert flp_coefficients(i) == [mpf(c) for c in row]


@pytest.mark.parametrize("i", range(21))
def test_row_recurrence_matches_factorials_and_sums_to_one(i):
    row = flp_coefficient_row(i)
    assert row == explicit_row(i)
    assert sum(Fraction(c) for c in row) == 1
    assert row[-1] > 0


def test_basis_table():
    b = FLPBasis(Fraction(1, 3), 4)
    assert b.C(3, 2) == -30
    assert b.coeff_table[2] == [1, -6, 6]
    with pytest.raises(ValueError):
        FLPBasis(Fraction(3, 2), 2)


def test_flp_eval_special_values():
    for i in range(8):
        assert flp_eval(i, Fraction(1, 3), 1) == 1
    assert flp_eval(0, Fraction(1, 2), mpf("0.123")) == 1
    with pytest.raises(DomainError):
        flp_eval(2, Fraction(1, 2), mpf("1.5"))


@pytest.mark.parametrize("theta", [Fraction(1, 3), Fraction(1, 2), Fraction(3, 4), 1])
def test_recurrence_agrees_with_explicit_form(theta):
    th = mpf(Fraction(theta).numerator) / Fraction(theta).denominator
    for i in range(21):
        row = flp_coefficient_row(i)
        for t in (mpf("0.01"), mpf("0.3"), mpf("0.7"), mpf("0.99")):
            explicit = mpmath.fsum(c * t ** (j * th) for j, c in enumerate(row))
            assert abs(flp_eval(i, theta, t) - explicit) <= tol(8) * max(1, max(abs(c) for c in row))


def test_example_point():
    t = mpf("0.7")
    explicit = mpmath.fsum(c * t ** (mpf(j) / 3) for j, c in enumerate(flp_coefficient_row(5)))
    assert abs(flp_eval(5, Fraction(1, 3), t) - explicit) < tol(8)


@pytest.mark.parametrize("theta", [Fraction(1, 2), Fraction(1, 3)])
def test_orthogonality(theta):
    # with u = t**theta the weight theta t**(theta-1) dt becomes du
    rule = gauss_legendre(20)
    for i in range(13):
        for j in range(13):
            val = rule.integrate(
                lambda u: flp_eval(i, theta, u ** (1 / to_mpf(theta))) * flp_eval(j, theta, u ** (1 / to_mpf(theta)))
            )
            target = mpf(1) / (2 * i + 1) if i == j else 0
            assert abs(val - target) < tol(25)


# -- FracPoly ----------------------------------------------------------------

G2 = FracGrid(2)


def test_grid():
    assert G2.alpha == Fraction(1, 2)
    assert G2.index_of(Fraction(3, 2)) == 3
    assert G2.index_of(Fraction(1, 3)) is None
    with pytest.raises(ValueError):
        FracGrid(0)


def test_eval_examples():
    assert fracpoly_eval(FracPoly.from_coeffs(G2, [0, 0, 1]), mpf("0.25")) == mpf("0.25")
    assert fracpoly_eval(FracPoly(G2), mpf("0.4")) == 0
    y = FracPoly.monomial(G2, 3)
    assert abs(y(mpf("0.81")) - mpf("0.729")) < tol(2)
    p = FracPoly.from_coeffs(G2, [5, 1, 2])
    assert p(0) == 5
    with pytest.raises(DomainError):
        p(mpf(-0.1))


def test_trim_and_degree():
    p = FracPoly.from_coeffs(FracGrid(3), [1, 2, mpf(10) ** -45, 0])
    assert p.coeffs == (1, 2)
    assert p.index_degree == 1 and p.degree == Fraction(1, 3)
    assert FracPoly(G2).index_degree == -1 and FracPoly(G2).is_zero()


def test_combine_examples():
    p = FracPoly.from_coeffs(G2, [1, 2, 3])
    assert fracpoly_combine([(1, p), (-1, p)]).is_zero()
    q = fracpoly_combine([(2, FracPoly.from_coeffs(G2, [1])), (3, FracPoly.from_coeffs(G2, [0, 1]))])
    assert q.coeffs == (2, 3)
    with pytest.raises(GridMismatchError):
        fracpoly_combine([(1, p), (1, FracPoly.from_coeffs(FracGrid(3), [1]))])


def test_combination_reproduces_p2():
    g = FracGrid(4)
    monos = [FracPoly.monomial(g, k) for k in range(3)]
    p2 = fracpoly_combine([(c, m) for c, m in zip((1, -6, 6), monos)])
    for k in range(1, 21):
        t = mpf(k) / 20
        assert abs(p2(t) - flp_eval(2, Fraction(1, 4), t)) < tol(8)


def test_as_fracpoly_on_finer_grid():
    b = FLPBasis(Fraction(1, 2), 3)
    g = FracGrid(4)
    p = b.as_fracpoly(3, g)
    assert p.coeffs[1] == 0 and p.coeffs[2] == flp_coefficient_row(3)[1]
    t = mpf("0.37")
    assert abs(p(t) - flp_eval(3, Fraction(1, 2), t)) < tol(8)
    with pytest.raises(GridMismatchError):
        FLPBasis(Fraction(1, 3), 2).as_fracpoly(1, g)


coeff_lists = st.lists(st.integers(-1000, 1000).map(lambda k: mpf(k) / 7), max_size=8)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), coeff_lists), min_size=1, max_size=4))
def test_combine_never_raises_degree(parts):
    grid = FracGrid(3)
    terms = [(s, FracPoly.from_coeffs(grid, c)) for s, c in parts]
    out = fracpoly_combine(terms)
    assert out.index_degree <= max(p.index_degree for _, p in terms)
    t = mpf("0.43")
    assert abs(out(t) - mpmath.fsum(s * p(t) for s, p in terms)) < tol(12)
