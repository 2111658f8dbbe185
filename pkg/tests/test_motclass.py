"""Class algebra: normal forms, rewrites, convolution, count realization."""

import random
from fractions import Fraction

import pytest

from motzeta.errors import UnboundAtom
from motzeta.geomset import GeomSet, mu_n, point, torus
from motzeta.locring import L, L_MINUS_1, LocRat, ONE
from motzeta.motclass import (
    Atom,
    Binding,
    ConvNode,
    SymbolicClass,
    augment,
    bind_and_count,
    conv,
    conv0,
    conv1,
    external_mul,
)

UNIT = SymbolicClass.unit()


def atom(name, order=1, aug=False):
    return SymbolicClass.from_atom(Atom(name, order, "pt", aug))


def test_unit_law_and_bilinearity():
    a = atom("a", 2)
    assert external_mul(UNIT, a) == a
    assert external_mul(a.scale(L), UNIT) == a.scale(L)
    b = atom("b", 3)
    lhs = external_mul(a.scale(2) + b, b)
    rhs = external_mul(a, b).scale(2) + external_mul(b, b)
    assert lhs == rhs


def test_commutativity_normal_form():
    a, b = atom("a", 2), atom("b", 3)
    assert external_mul(a, b) == external_mul(b, a)
    assert conv0(a, b) == conv0(b, a)
    assert conv1(a, b) == conv1(b, a)


def test_trivial_action_conv_rewrites():
    # 1 *0 1 = (L-1), 1 *1 1 = (L-2), 1 * 1 = 1.
    assert conv0(UNIT, UNIT) == SymbolicClass.scalar(L_MINUS_1)
    assert conv1(UNIT, UNIT) == SymbolicClass.scalar(L_MINUS_1 - 1)
    assert conv(UNIT, UNIT) == UNIT
    # Trivial-action atoms also reduce.
    x, y = atom("x"), atom("y")
    assert conv0(x, y) == external_mul(x, y).scale(L_MINUS_1)
    # Augmented operands count as trivial-action.
    a2 = augment(atom("a", 2))
    assert conv0(a2, y) == external_mul(a2, y).scale(L_MINUS_1)


def test_nontrivial_conv_stays_symbolic():
    a, b = atom("a", 2), atom("b", 2)
    c = conv0(a, b)
    assert len(c.terms) == 1
    factors, aug_term, coeff = c.terms[0]
    assert isinstance(factors[0], ConvNode)
    assert coeff == ONE


def test_augment_linear_idempotent():
    a = atom("a", 3)
    assert augment(augment(a)) == augment(a)
    assert augment(UNIT) == UNIT
    assert augment(a.scale(L) + UNIT.scale(2)) == augment(a).scale(L) + UNIT.scale(2)


def test_r1_mark_moves_to_smaller():
    a, b = Atom("a", 2), Atom("b", 3)
    lhs = external_mul(atom("a", 2), augment(atom("b", 3)))
    rhs = external_mul(augment(atom("a", 2)), atom("b", 3))
    assert lhs == rhs
    factors, _aug, _c = lhs.terms[0]
    marked = [f for f in factors if f.aug]
    assert len(marked) == 1 and marked[0].name == "a"
    del a, b


def test_confluence_randomized_corpus():
    rng = random.Random(314159)
    names = ["a", "b", "c", "d"]
    orders = {"a": 1, "b": 2, "c": 3, "d": 2}

    def rand_class(depth):
        kind = rng.randrange(6 if depth > 0 else 3)
        if kind == 0:
            return SymbolicClass.scalar(LocRat.from_int(rng.randint(-3, 3)))
        if kind == 1:
            n = rng.choice(names)
            return atom(n, orders[n])
        if kind == 2:
            n = rng.choice(names)
            return augment(atom(n, orders[n]))
        if kind == 3:
            return rand_class(depth - 1) + rand_class(depth - 1)
        if kind == 4:
            return external_mul(rand_class(depth - 1), rand_class(depth - 1))
        return conv0(rand_class(depth - 1), rand_class(depth - 1))

    for _ in range(60):
        x = rand_class(2)
        y = rand_class(2)
        z = rand_class(2)
        # Same element assembled in different orders normalizes identically.
        assert external_mul(x, y) == external_mul(y, x)
        assert external_mul(external_mul(x, y), z) == external_mul(
            x, external_mul(y, z)
        )
        assert (x + y) + z == x + (y + z)
        assert conv0(x, y) == conv0(y, x)
        assert augment(augment(x)) == augment(x)
        assert external_mul(x, y + z) == external_mul(x, y) + external_mul(x, z)


def test_bind_and_count_scalars_and_atoms():
    binding = Binding({"t": torus(), "m3": mu_n(3)}, 7)
    assert bind_and_count(SymbolicClass.scalar(L_MINUS_1), binding) == 6
    assert bind_and_count(atom("m3", 3), binding) == 3
    assert bind_and_count(atom("t"), binding) == 6
    with pytest.raises(UnboundAtom):
        bind_and_count(atom("nope"), binding)


def test_bind_and_count_products():
    binding = Binding({"m2": mu_n(2), "m3": mu_n(3)}, 7)
    c = external_mul(atom("m2", 2), atom("m3", 3))
    assert bind_and_count(c, binding) == 6


def test_augment_count_burnside_average():
    # augment([mu_2]) at q=5 has count (2+0)/2 = 1.
    binding = Binding({"m2": mu_n(2)}, 5)
    assert bind_and_count(augment(atom("m2", 2)), binding) == 1
    # augment([mu_3]) at q=7: (3+0+0)/3 = 1.
    binding7 = Binding({"m3": mu_n(3)}, 7)
    assert bind_and_count(augment(atom("m3", 3)), binding7) == 1


def test_conv_formula_matches_trivial_parametrization():
    # Force a ConvNode with order-1 operands past the rewrite and verify the
    # double Burnside formula returns the same value as (L-1) resp. (L-2).
    unit_atom = Atom("one", 1)
    for q in (5, 7, 13):
        binding = Binding({"one": point()}, q)
        for kind, expect in ((0, q - 1), (1, q - 2)):
            node = ConvNode(kind, (unit_atom,), (unit_atom,))
            c = SymbolicClass((((node,), False, ONE),))
            assert bind_and_count(c, binding) == expect


def test_conv_formula_mu_independence():
    # Present the point with a trivially-acting mu_2 structure: the Burnside
    # formula then runs over N=2 sectors but must give the same values.
    fat_point = GeomSet((), (), (), 2, ())
    fat = Atom("fat", 2)
    for q in (5, 13):
        binding = Binding({"fat": fat_point}, q)
        for kind, expect in ((0, q - 1), (1, q - 2)):
            node = ConvNode(kind, (fat,), (fat,))
            c = SymbolicClass((((node,), False, ONE),))
            assert bind_and_count(c, binding) == expect, (q, kind)


def test_bind_homomorphism_random():
    rng = random.Random(777)
    binding = Binding({"m2": mu_n(2), "t": torus()}, 5)

    def rand_simple():
        parts = []
        for _ in range(rng.randint(1, 3)):
            c = LocRat.from_int(rng.randint(-2, 3))
            which = rng.randrange(3)
            if which == 0:
                parts.append(SymbolicClass.scalar(c))
            elif which == 1:
                parts.append(atom("m2", 2).scale(c))
            else:
                parts.append(atom("t").scale(c))
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        return total

    for _ in range(25):
        a, b = rand_simple(), rand_simple()
        va = bind_and_count(a, binding)
        vb = bind_and_count(b, binding)
        assert bind_and_count(a + b, binding) == va + vb
        assert bind_and_count(external_mul(a, b), binding) == va * vb


def test_conv_value_example():
    # [mu_2] *0 [mu_2] at q=5: only the untwisted sector of each operand is
    # inhabited, giving F_0^2(0,0)/4 * 2 * 2 = 8/4 * 4 = 8.
    binding = Binding({"m2": mu_n(2)}, 5)
    c = conv0(atom("m2", 2), atom("m2", 2))
    assert bind_and_count(c, binding) == 8


def test_twist_component_realization():
    # s-twisted realization of [mu_3] at q=7 picks out twisted sectors.
    binding = Binding({"m3": mu_n(3)}, 7)
    a = atom("m3", 3)
    assert bind_and_count(a, binding, s=0) == 3
    assert bind_and_count(a, binding, s=1) == 0
    # Augmented classes are twist-independent.
    aug_a = augment(a)
    assert (
        bind_and_count(aug_a, binding, s=0)
        == bind_and_count(aug_a, binding, s=1)
        == 1
    )
