import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from fractau import exprlang as ex
from fractau.cordial import (
    ConstraintError,
    ProblemSpec,
    RationalExp,
    apply_K,
    check_solvability,
    derive_params,
    manufacture_g,
    spectrum_value,
)
from fractau.numerics import DomainError, beta, tol, to_mpf


def params(g, b):
    return derive_params(RationalExp.parse(g), RationalExp.parse(b))


def one(t, s):
    return mpf(1)


@pytest.mark.parametrize(
    "g,b,delta,s1,s2",
    [("1/3", "2/3", 3, 1, 2), ("1/2", "1/2", 2, 1, 1), ("1", "1", 1, 1, 1), ("2/3", "1", 3, 2, 3), ("1/2", "3/2", 2, 1, 3)],
)
def test_derive_params_examples(g, b, delta, s1, s2):
    p = params(g, b)
    assert (p.delta, p.sigma1, p.sigma2) == (delta, s1, s2)
    assert p.alpha == Fraction(1, delta)


def test_derive_params_constraints():
    with pytest.raises(ConstraintError):
        params("1/2", "1/3")
    with pytest.raises(ConstraintError):
        params("3/2", "2")
    with pytest.raises(ConstraintError):
        derive_params(RationalExp.parse("1/2"), RationalExp.parse("1/2"), 3)
    assert derive_params(RationalExp.parse("1/2"), RationalExp.parse("1/2"), 4).delta == 4


def test_rational_exp():
    assert str(RationalExp.parse("6/4")) == "3/2"
    for bad in ("0", "-1/2", "x"):
        with pytest.raises(ConstraintError):
            RationalExp.parse(bad)
    with pytest.raises(ConstraintError):
        RationalExp(2, 4)


def test_exactness_random_pairs():
    rng = random.Random(31)
    count = 0
    while count < 200:
        g = Fraction(rng.randint(1, 40), rng.randint(1, 40))
        b = Fraction(rng.randint(1, 60), rng.randint(1, 40))
        if g > 1 or b < g:
            continue
        p = derive_params(RationalExp(g.numerator, g.denominator), RationalExp(b.numerator, b.denominator))
        assert p.sigma1 * p.alpha == g and p.sigma2 * p.alpha == b
        assert p.gamma == g and p.beta == b
        count += 1


def test_problem_spec_validation():
    ok = ProblemSpec.from_strings("1/2", "1", "s", g="t")
    assert ok.g is not None
    with pytest.raises(ConstraintError):
        ProblemSpec.from_strings("1/2", "1", "s")
    with pytest.raises(ConstraintError):
        ProblemSpec.from_strings("1/2", "1", "s", g="t", exact_y="t", manufacture=True)
    with pytest.raises(ConstraintError):
        ProblemSpec.from_strings("1/2", "1", "s", manufacture=True)
    with pytest.raises(ex.ParseError):
        ProblemSpec.from_strings("1/2", "1", "s", g="s")


# -- solvability -------------------------------------------------------------


def test_example2_spectrum():
    p = params("1/3", "2/3")
    h00 = mpmath.sqrt(3) / (3 * mpmath.pi)
    rep = check_solvability(h00, p)
    assert not rep.compact and rep.solvable
    assert rep.values[0][0] == 0
    assert abs(rep.values[0][1] - h00 * beta(Fraction(1, 3), Fraction(4, 3))) < tol(4)
    assert mpmath.nstr(rep.values[0][1], 3) == "0.487"
    assert mpmath.nstr(rep.min_gap, 3) == "0.513"


def test_compact_when_h00_vanishes():
    rep = check_solvability(0, params("1/2", "1/2"))
    assert rep.compact and rep.solvable and rep.violations == ()


def test_crafted_violation():
    p = params("1/2", "1/2")
    h00 = 1 / beta(p.gamma, 1 - p.gamma + p.beta)
    rep = check_solvability(h00, p)
    assert rep.violations == (0,)
    assert not rep.solvable


def test_violation_deeper_in_the_lattice():
    p = params("1/3", "2/3")
    h00 = 1 / spectrum_value(1, p, 3)
    rep = check_solvability(h00, p)
    assert rep.violations == (3,) and rep.checked_r_max >= 3


def test_example3_spectrum_values():
    p = params("1", "1")
    for r in range(6):
        assert abs(spectrum_value(mpf(1) / 2, p, r) - mpf(1) / (2 * (1 + r))) < tol(4)


def test_slow_decay_terminates_quickly():
    # gamma = 1/12 with a large h00 crosses 1 only near r ~ 1e29
    p = params("1/12", "1")
    h00 = mpf(20)
    rep = check_solvability(h00, p)
    r = rep.checked_r_max
    assert r > 10**20
    assert spectrum_value(h00, p, r) < 1 - mpf("1e-8") <= spectrum_value(h00, p, r - 1)
    assert len(rep.violations) == 1000 and rep.violations[0] > 10**20
    assert rep.min_gap < mpf("1e-8")


def test_negative_h00_has_no_violations():
    rep = check_solvability(mpf(-3), params("1/2", "1"))
    assert rep.solvable and not rep.compact and rep.min_gap > 1


def test_margin_must_be_positive():
    with pytest.raises(ValueError):
        check_solvability(1, params("1/2", "1"), margin=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(0.05, 20))
def test_spectrum_strictly_decreasing(q1, extra, h00):
    g = Fraction(1, q1)
    b = g + Fraction(extra, 7)
    p = derive_params(RationalExp(g.numerator, g.denominator), RationalExp(b.numerator, b.denominator))
    rep = check_solvability(mpf(h00), p)
    rs = range(min(rep.checked_r_max, 40) + 1)
    vals = [spectrum_value(mpf(h00), p, r) for r in rs]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert abs(dict(rep.values)[rep.checked_r_max]) < 1 - mpf("1e-8")
    if rep.checked_r_max:
        assert abs(spectrum_value(mpf(h00), p, rep.checked_r_max - 1)) >= 1 - mpf("1e-8")


# -- cordial operator --------------------------------------------------------


@pytest.mark.parametrize("lam", [0, Fraction(1, 2), 1, Fraction(5, 2)])
def test_eigenrelation(lam):
    p = params("1/3", "2/3")
    lam_f = to_mpf(lam)
    target = beta(p.gamma, p.beta - p.gamma + lam_f + 1)
    y = lambda s: s**lam_f if s else mpf(0) ** lam_f
    for t in (mpf("0.1"), mpf("0.5"), mpf(1), mpf("0.77")):
        assert abs(apply_K(y, t, one, p) / t**lam_f - target) < tol(25)


def test_apply_K_zero_function_and_domain():
    p = params("1/2", "1/2")
    assert apply_K(lambda s: mpf(0), mpf("0.4"), one, p) == 0
    with pytest.raises(DomainError):
        apply_K(lambda s: s, 0, one, p)


def test_apply_K_example1_data():
    p = params("1/2", "1/2")
    val = apply_K(lambda s: s ** mpf(1.5), mpf(1), lambda t, s: s**2, p)
    assert abs(val - beta(Fraction(1, 2), Fraction(9, 2))) < tol(25)


def test_apply_K_smooth_nonpolynomial_against_mpmath():
    p = params("2/3", "1")
    H = lambda t, s: mpmath.cos(t * s)
    y = lambda s: mpmath.sqrt(s) * mpmath.sin(s)
    t = mpf("0.6")
    g, b = to_mpf(p.gamma), to_mpf(p.beta)
    direct = mpmath.quad(
        lambda s: t ** -b * (t - s) ** (g - 1) * s ** (b - g) * H(t, s) * y(s), [0, t / 2, t]
    )
    assert abs(apply_K(y, t, H, p) - direct) < mpf(10) ** -20


def test_manufacture_zero_kernel():
    p = params("1/2", "1")
    f = manufacture_g(lambda t: mpmath.exp(t), lambda t, s: mpf(0), p)
    for t in (0, mpf("0.3"), 1):
        assert abs(f(t) - mpmath.exp(t)) < tol(10)


def test_manufacture_example1():
    p = params("1/2", "1/2")
    f = manufacture_g(lambda t: t ** mpf(1.5), lambda t, s: s**2, p)
    b = beta(Fraction(1, 2), Fraction(9, 2))
    for k in range(1, 11):
        t = mpf(k) / 10
        assert abs(f(t) - (t ** mpf(1.5) - b * t ** mpf(3.5))) < tol(25)


@pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(13, 4)])
def test_manufacture_round_trip(lam):
    p = params("1/3", "2/3")
    c = mpf("0.4")
    lam_f = to_mpf(lam)
    f = manufacture_g(lambda t: t**lam_f, lambda t, s: c, p)
    factor = 1 - c * beta(p.gamma, p.beta - p.gamma + lam_f + 1)
    for k in range(1, 21):
        t = mpf(k) / 20
        assert abs(f(t) - factor * t**lam_f) < tol(25)


def test_manufacture_memoises():
    calls = []

    def y(t):
        calls.append(t)
        return t

    f = manufacture_g(y, lambda t, s: mpf(0), params("1/2", "1"), m=10)
    f(mpf("0.5"))
    n = len(calls)
    f(mpf("0.5"))
    assert len(calls) == n
