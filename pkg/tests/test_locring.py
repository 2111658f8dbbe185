"""Scalar ring: exact arithmetic, cancellation, evaluation, units, text forms."""

import random
from fractions import Fraction

import pytest

from motzeta.errors import DenominatorVanishes, NotInvertible
from motzeta.locring import (
    L,
    ONE,
    ZERO,
    LaurentPoly,
    LocRat,
    one_minus_L,
    parse_laurent,
    parse_locrat,
)


def test_laurent_basic_arithmetic():
    a = LaurentPoly({0: 1, 1: 2})  # 1 + 2L
    b = LaurentPoly({-1: 3, 1: -2})  # 3L^-1 - 2L
    assert (a + b).c == {-1: 3, 0: 1}
    assert (a - a).is_zero()
    assert (a * b).c == {-1: 3, 0: 6, 1: -2, 2: -4}
    assert (a * 0).is_zero()
    assert (a**2).c == {0: 1, 1: 4, 2: 4}


def test_laurent_divexact():
    # (1 - L^2) = (1 - L)(1 + L), exactly.
    q = one_minus_L(2).divexact(one_minus_L(1))
    assert q == LaurentPoly({0: 1, 1: 1})
    # Non-exact division returns None.
    assert LaurentPoly({0: 1, 1: 1}).divexact(one_minus_L(1)) is None
    # Laurent shifts are handled.
    p = LaurentPoly({-2: 1, 0: -1})  # L^-2 (1 - L^2)
    assert p.divexact(one_minus_L(2)) == LaurentPoly({-2: 1})


def test_sum_of_simple_fractions():
    # 1/(1-L) + 1/(1-L^2) == (2+L)/(1-L^2)
    a = LocRat(1, (1,))
    b = LocRat(1, (2,))
    expect = LocRat(LaurentPoly({0: 2, 1: 1}), (2,))
    assert a + b == expect


def test_unit_cancellation_to_poly():
    # (1-L^2)/(1-L) * 1 normalizes to the exact polynomial 1+L.
    r = LocRat(one_minus_L(2), (1,)) * ONE
    assert r.den == ()
    assert r.num == LaurentPoly({0: 1, 1: 1})


def test_eval_exact_rational():
    # (L-1)/(1-L^2) at L=5 equals -1/6.
    r = LocRat(LaurentPoly({1: 1, 0: -1}), (2,))
    assert r.eval_at(5) == Fraction(-1, 6)
    assert LocRat.L(-1).eval_at(5) == Fraction(1, 5)


def test_eval_denominator_vanishes():
    with pytest.raises(DenominatorVanishes):
        LocRat(1, (1,)).eval_at(1)
    with pytest.raises(DenominatorVanishes):
        LocRat(1, (4,)).eval_at(-1)


def test_inverse_of_declared_factors():
    # (1-L^n) * (1-L^n)^-1 == 1 for n = 1..12.
    for n in range(1, 13):
        prod = LocRat(one_minus_L(n)) * LocRat(1, (n,))
        assert prod == ONE
        inv = LocRat(one_minus_L(n)).inverse()
        assert inv == LocRat(1, (n,))
        assert LocRat(one_minus_L(n)) * inv == ONE


def test_inverse_of_mixed_units():
    rng = random.Random(20260817)
    for _ in range(25):
        k = rng.randint(-4, 4)
        sign = rng.choice([1, -1])
        u = LocRat(LaurentPoly({k: sign}))
        for _ in range(rng.randint(0, 3)):
            n = rng.randint(1, 5)
            if rng.random() < 0.5:
                u = u * LocRat(one_minus_L(n))
            else:
                u = u * LocRat(1, (n,))
        assert u * u.inverse() == ONE


def test_inverse_rejects_non_units():
    with pytest.raises(NotInvertible):
        LocRat(LaurentPoly({0: 2})).inverse()
    with pytest.raises(NotInvertible):
        LocRat(LaurentPoly({0: 2, 1: 1, 2: 1})).inverse()
    with pytest.raises(NotInvertible):
        LocRat(LaurentPoly({0: 1, 1: 3})).inverse()


def test_inverse_handles_cyclotomic_units():
    # 1 + L = (1-L^2)/(1-L) is a unit even though no (1-L^n) divides it.
    u = ONE + L
    assert u * u.inverse() == ONE
    # 1 + L + L^2 = (1-L^3)/(1-L) likewise.
    v = LocRat(LaurentPoly({0: 1, 1: 1, 2: 1}))
    assert v * v.inverse() == ONE


def _random_locrat(rng):
    num = LaurentPoly(
        {rng.randint(-3, 4): rng.randint(-9, 9) for _ in range(rng.randint(0, 4))}
    )
    den = tuple(rng.choice([1, 1, 2, 3]) for _ in range(rng.randint(0, 2)))
    return LocRat(num, den)


def test_ring_axioms_randomized():
    rng = random.Random(987123)
    for _ in range(60):
        a, b, c = (_random_locrat(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert a + b == b + a
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + ZERO == a
        assert a * ONE == a
        assert a - a == ZERO
        assert a * ZERO == ZERO


def test_eval_is_ring_homomorphism():
    rng = random.Random(55511)
    for q in (2, 3, 5, 7, 13):
        for _ in range(20):
            a, b = _random_locrat(rng), _random_locrat(rng)
            assert (a + b).eval_at(q) == a.eval_at(q) + b.eval_at(q)
            assert (a * b).eval_at(q) == a.eval_at(q) * b.eval_at(q)
            assert (-a).eval_at(q) == -a.eval_at(q)
    assert ONE.eval_at(7) == 1
    assert L.eval_at(7) == 7


def test_equality_across_representations():
    # L^2/(1-L) and -L^2(1-L^3)/((1-L)(1-L^3)) agree by cross-multiplication.
    a = LocRat(LaurentPoly({2: 1}), (1,))
    b = LocRat(LaurentPoly({2: 1}) * one_minus_L(3), (1, 3))
    assert a == b
    assert not (a == a + ONE)


def test_render_and_parse_roundtrip():
    rng = random.Random(424242)
    for _ in range(40):
        r = _random_locrat(rng)
        back = parse_locrat(r.render())
        assert back == r
    assert parse_locrat("(2 + L) / (1-L^2)") == LocRat(LaurentPoly({0: 2, 1: 1}), (2,))
    assert parse_laurent("-L^-1 + 3*L^2 - 4") == LaurentPoly({-1: -1, 2: 3, 0: -4})


def test_pow_including_negative():
    r = LocRat(1, (2,))
    assert r**3 == LocRat(1, (2, 2, 2))
    u = L * LocRat(one_minus_L(2))
    assert u**-2 * u**2 == ONE
    assert (L**-3) * (L**3) == ONE
