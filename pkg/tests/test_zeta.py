"""Jet loci and zeta series: counting routes, splits, resolution evaluators."""

import math
from fractions import Fraction

import pytest

from motzeta.egseq import EGSeq
from motzeta.errors import (
    BudgetExceeded,
    ConeNotDecomposed,
    FieldTooLarge,
    FitFailed,
    MotzetaError,
)
from motzeta.geomset import GeomSet, twisted_count
from motzeta.locring import LocRat
from motzeta.motclass import Atom, SymbolicClass, bind_and_count, conv0, conv1
from motzeta.poly import Poly, parse_poly
from motzeta.realize import count_realization, symbolic_realization
from motzeta.series import series_from_json, series_to_json
from motzeta.zeta import (
    AxisCounts,
    ConePieces,
    JetTable,
    ResolutionData,
    Stratum,
    classify_shape,
    cone_euler,
    default_q,
    diagonal_closed,
    direct_pair_counts,
    dl_eval,
    fermat_affine_counts,
    histogram_pair_counts,
    jet_count,
    jet_count_direct,
    jet_set,
    mono_exact_count,
    mono_ordgt_count,
    monomial_pair_counts,
    multizeta_direct,
    multizeta_trunc,
    nearby_cycles,
    parse_resolution,
    required_orders,
    standard_atom_sets,
    sum_zeta_pullback,
    validate_cone,
    zeta_closed,
    zeta_trunc,
)

X = parse_poly("x")
X2 = parse_poly("x^2")
X3 = parse_poly("x^3")
Y = parse_poly("y")
Y3 = parse_poly("y^3")
XY = parse_poly("x + y")


# ---------------------------------------------------------------------------
# jet loci
# ---------------------------------------------------------------------------


def test_jet_count_linear_is_one():
    # phi = c1 t + ... + cn t^n with phi = t^n exactly: all digits pinned.
    for n in (1, 2, 3, 4):
        assert jet_count(X, n, 7) == 1
        assert jet_count(X, n, 5) == 1


def test_jet_count_square():
    # phi^2 = t^2 exactly at level 2: c1^2 = 1, c2 free.
    assert jet_count(X2, 2, 5) == 10
    assert jet_count(X2, 2, 7) == 14
    # odd target order is unreachable for a square
    assert jet_count(X2, 3, 5) == 0
    assert jet_count(X2, 3, 7) == 0


def test_jet_closed_forms_match_enumeration():
    for a, n, q in [(1, 3, 5), (2, 2, 5), (2, 4, 5), (3, 3, 7), (2, 3, 7), (3, 6, 7)]:
        f = Poly.var("x", a)
        want = mono_exact_count(a, n, q, n)
        assert jet_count(f, n, q) == want
        assert jet_count_direct(f, n, q) == want
        assert jet_count_direct(f, n, q, target="ordgt") == mono_ordgt_count(a, n, q, n)


def test_jet_level_padding():
    # one free coordinate per level above the constrained depth
    assert jet_count_direct(X2, 2, 5, level=4) == 10 * 25
    ax = AxisCounts(X2, 5)
    assert ax.exact(2, level=4) == 10 * 25
    assert ax.ordgt(2, level=4) == mono_ordgt_count(2, 2, 5, 2) * 25


def test_linear_sum_jets_are_sector_blind():
    # a sum of distinct coordinates imposes n independent linear conditions,
    # in every twisted sector alike
    for n in (2, 3):
        gs = jet_set(XY, n)
        for s in range(n):
            assert twisted_count(gs, 5, s) == 5**n
            assert twisted_count(gs, 7, s) == 7**n


def test_jet_sets_carry_good_actions():
    for f, n in [(X, 3), (X2, 2), (X2, 4), (XY, 2), (X3, 3)]:
        jet_set(f, n).check_action_invariance()
        jet_set(f, n, exact=False).check_action_invariance()


def test_classify_shape():
    assert classify_shape(X2) == ("monomial", "x", 2)
    assert classify_shape(X) == ("monomial", "x", 1)
    assert classify_shape(XY) == ("linsum", (1, 1))
    assert classify_shape(parse_poly("x^2 + x^3")) == ("generic", None)
    assert classify_shape(parse_poly("x + y^2")) == ("generic", None)


# ---------------------------------------------------------------------------
# digit tables
# ---------------------------------------------------------------------------


def test_jet_table_matches_direct_counts():
    for f, level, q in [(X2, 4, 5), (X3, 6, 5), (parse_poly("x^2 + x^3"), 5, 5)]:
        tab = JetTable(f, level, q)
        for n in range(1, level + 1):
            assert tab.exact_count(n) == jet_count_direct(f, n, q, level=level)
            assert tab.ordgt_count(n) == jet_count_direct(
                f, n, q, level=level, target="ordgt"
            )


def test_jet_table_budget_guard():
    with pytest.raises(BudgetExceeded):
        JetTable(X2, 9, 7, budget=1000)
    with pytest.raises(BudgetExceeded):
        jet_count_direct(X2, 8, 7, budget=100)


# ---------------------------------------------------------------------------
# pair splits for f(phi) + g(psi) = t^n
# ---------------------------------------------------------------------------

PAIR_CASES = [
    (1, 1, 2, 5),
    (1, 2, 2, 5),
    (2, 2, 2, 5),
    (2, 2, 2, 7),
    (2, 2, 3, 5),
    (2, 2, 4, 7),
    (2, 3, 6, 5),
    (2, 3, 6, 7),
    (3, 3, 3, 7),
    (3, 3, 6, 5),
]


def _pair_polys(a, b):
    return Poly.var("x", a), Poly.var("y", b)


@pytest.mark.parametrize("a,b,n,q", PAIR_CASES)
def test_pair_routes_agree(a, b, n, q):
    f, g = _pair_polys(a, b)
    hist = histogram_pair_counts(f, g, n, q)
    direct = direct_pair_counts(f, g, n, q)
    closed = monomial_pair_counts(a, b, n, q)
    for key in ("total", "A1", "A2", "A3", "A3_by_l", "Bpair"):
        assert hist[key] == direct[key], (key, a, b, n, q)
        assert hist[key] == closed[key], (key, a, b, n, q)
    assert hist["total"] == hist["A1"] + hist["A2"] + hist["A3"]


def test_pair_routes_agree_generic_shape():
    f = parse_poly("x^2 + x^3")
    for n in (2, 3, 4):
        hist = histogram_pair_counts(f, Y3, n, 5)
        direct = direct_pair_counts(f, Y3, n, 5)
        assert hist == direct


def test_split_values_square_pair():
    # both orders at n=2: leading coefficients solve u^2 + v^2 = 1;
    # mixed orders: one side pinned to t^2, the other of order > 2
    out = monomial_pair_counts(2, 2, 2, 7)
    f1 = fermat_affine_counts(2, 2, 7)[1]
    assert out["A1"] == f1 * 7**2
    assert out["A2"] == 4 * 7**2
    assert out["A3"] == 0
    assert out["total"] == 8 * 49


def test_split_values_common_lower_order():
    # (2,3) at n=6 admits a common order l=6k < n only at l divisible by 6;
    # at n=6 the A3 bucket is empty but at n=12 it is not
    out = monomial_pair_counts(2, 3, 12, 7)
    f0 = fermat_affine_counts(2, 3, 7)[0]
    assert out["A3_by_l"] == {6: f0 * 7 ** (12 + 6 - 3 - 2)}
    assert out["A3"] == out["A3_by_l"][6]


# ---------------------------------------------------------------------------
# leading-coefficient convolutions and tail sums
# ---------------------------------------------------------------------------


def _leading_locus(tag, a, n):
    """Jets phi with phi^a = t^n + ...: the leading coefficient satisfies
    u^a = 1 and rescaling t by an n-th root of unity scales u by zeta^{n/a}."""
    gs = GeomSet(("u",), (Poly.var("u", a) - 1,), ("u",), n, (n // a,))
    return SymbolicClass.from_atom(Atom(tag, n)), gs


LEMMA_CASES = [
    (1, 1, 7, 1),
    (1, 2, 5, 2),
    (2, 2, 5, 2),
    (2, 2, 5, 4),
    (2, 2, 7, 2),
    (2, 2, 13, 2),
    (2, 3, 7, 6),
    (3, 3, 7, 3),
]


@pytest.mark.parametrize("a,b,q,n", LEMMA_CASES)
def test_convolutions_match_fermat_counts(a, b, q, n):
    A, gs_a = _leading_locus("lf", a, n)
    B, gs_b = _leading_locus("lg", b, n)
    table = {"lf": gs_a, "lg": gs_b}
    f0, f1, _ = fermat_affine_counts(a, b, q)
    assert bind_and_count(conv0(A, B), table, q) == f0
    assert bind_and_count(conv1(A, B), table, q) == f1


def test_convolution_binding_field_guard():
    # an order-12 action at q=13 would need the 144th cyclotomic splitting
    # field F_13^12, past the enumeration cutoff
    A, gs_a = _leading_locus("lf", 2, 12)
    B, gs_b = _leading_locus("lg", 3, 12)
    with pytest.raises(FieldTooLarge):
        bind_and_count(conv0(A, B), {"lf": gs_a, "lg": gs_b}, 13)


def _tail_stream(real, deg, q):
    # l -> q^{-l/deg} on multiples of deg, zero elsewhere
    return EGSeq.single_residue(
        real, deg, 0, Fraction(1, q), Fraction(1)
    ).tail_sum()


@pytest.mark.parametrize("a,b,q,n", [(2, 2, 7, 2), (2, 2, 5, 4), (2, 3, 7, 6), (3, 3, 7, 3)])
def test_mixed_order_split_is_a_tail_sum(a, b, q, n):
    # A2 pairs pin one side to t^n exactly while the other side has order
    # beyond n; summing the exact-order measure over all higher orders
    # reproduces the same mass.
    real = count_realization(q)
    out = monomial_pair_counts(a, b, n, q)
    a_n = Fraction(mono_exact_count(a, n, q, n), q**n) if n % a == 0 else Fraction(0)
    b_n = Fraction(mono_exact_count(b, n, q, n), q**n) if n % b == 0 else Fraction(0)
    tail_a = _tail_stream(real, a, q).value(n)
    tail_b = _tail_stream(real, b, q).value(n)
    lhs = Fraction(out["A2"], q ** (2 * n))
    assert lhs == (q - 1) * (a_n * tail_b + tail_a * b_n)


def test_order_beyond_mass_closes():
    # sum_{l > n} (q-1) q^{-l/deg} over multiples of deg equals q^{-floor(n/deg)}
    real = count_realization(7)
    for deg in (1, 2, 3):
        tail = _tail_stream(real, deg, 7)
        for n in range(1, 9):
            assert (7 - 1) * tail.value(n) == Fraction(1, 7 ** (n // deg))


# ---------------------------------------------------------------------------
# per-axis route selection
# ---------------------------------------------------------------------------


def test_axis_routes_agree():
    for f, q, ns in [(X2, 5, range(1, 7)), (X3, 7, range(1, 7)), (XY, 5, range(1, 5))]:
        ax = AxisCounts(f, q)
        for n in ns:
            closed = ax.exact(n, route="auto")
            assert ax.exact(n, route="direct") == closed
            assert ax.exact(n, route="hist") == closed
            assert ax.ordgt(n, route="direct") == ax.ordgt(n, route="auto")


def test_axis_generic_demotion():
    # exponent sharing a factor with q falls back to enumeration
    ax = AxisCounts(X3, 3)
    assert ax.shape[0] == "generic"
    assert ax.exact(3, route="direct") == jet_count_direct(X3, 3, 3)
    with pytest.raises(BudgetExceeded):
        AxisCounts(X2, 7, budget=10).exact(8, route="direct")


# ---------------------------------------------------------------------------
# one-variable series
# ---------------------------------------------------------------------------


def test_zeta_trunc_counts():
    z = zeta_trunc(X2, 8, count_realization(7))
    assert z.support() == [(2,), (4,), (6,), (8,)]
    for k in (1, 2, 3, 4):
        assert z.coeff((2 * k,)) == Fraction(2, 7**k)


def test_zeta_symbolic_realizes_to_counts():
    zs = zeta_trunc(X2, 8, symbolic_realization())
    zc = zeta_trunc(X2, 8, count_realization(7))
    table = standard_atom_sets(("mu2",))
    assert zs.support() == zc.support()
    for e in zs.support():
        assert bind_and_count(zs.coeff(e), table, 7) == zc.coeff(e)


def test_zeta_closed_matches_trunc():
    for f, q in [(X2, 5), (X3, 7), (X, 7)]:
        closed = zeta_closed(f, count_realization(q))
        assert closed.expand(9) == zeta_trunc(f, 9, count_realization(q))
    sym = zeta_closed(X3, symbolic_realization())
    assert sym.expand(9) == zeta_trunc(X3, 9, symbolic_realization())


def test_zeta_closed_rejects_generic():
    with pytest.raises(FitFailed):
        zeta_closed(parse_poly("x^2 + x^3"), symbolic_realization())


def test_zeta_global_base_sums_local_contributions():
    # x(x-1) vanishes at two rational points, each locally linear
    f = parse_poly("x^2 - x")
    g = zeta_trunc(f, 6, count_realization(7), base="global")
    local = zeta_trunc(X, 6, count_realization(7))
    assert g == local.scale(Fraction(2))


# ---------------------------------------------------------------------------
# several functions over chains
# ---------------------------------------------------------------------------


def test_multizeta_routes_agree_small():
    r5 = count_realization(5)
    for fs, D in [((X, Y), 4), ((X2, Y), 4)]:
        sep = multizeta_trunc(fs, D, r5, mode="separable")
        axes = multizeta_trunc(fs, D, r5, mode="axes")
        direct = multizeta_direct(fs, D, r5)
        assert sep == axes == direct


def test_multizeta_definitional_check_at_q3():
    r3 = count_realization(3)
    axes = multizeta_trunc((X2, Y3), 5, r3, mode="axes")
    direct = multizeta_direct((X2, Y3), 5, r3)
    assert axes == direct
    assert axes.support() == [(2, 3)]
    assert axes.coeff((2, 3)) == Fraction(2, 9)


def test_multizeta_chain_support_and_values():
    mz = multizeta_trunc((X2, Y3), 8, count_realization(7))
    assert mz.support() == [(2, 3), (2, 4), (2, 5), (2, 6)]
    assert mz.coeff((2, 3)) == Fraction(2, 49)
    assert mz.coeff((2, 6)) == Fraction(2, 343)
    # exponent tuples must be strict chains
    assert mz.coeff((3, 2)) == 0
    assert mz.coeff((2, 2)) == 0


def test_multizeta_symbolic_realizes_to_counts():
    ms = multizeta_trunc((X2, Y3), 8, symbolic_realization())
    mc = multizeta_trunc((X2, Y3), 8, count_realization(7))
    table = standard_atom_sets(("mu2", "mu3"))
    assert ms.support() == mc.support()
    for e in ms.support():
        assert bind_and_count(ms.coeff(e), table, 7) == mc.coeff(e)


# ---------------------------------------------------------------------------
# the sum pullback
# ---------------------------------------------------------------------------


def test_pullback_linear_pair():
    S = sum_zeta_pullback(X, Y, 5, count_realization(7))
    for n in range(1, 6):
        assert S.coeff((n,)) == Fraction(1, 7**n)
    Ssym = sum_zeta_pullback(X, Y, 4, symbolic_realization())
    for n in range(1, 5):
        assert Ssym.coeff((n,)) == SymbolicClass.scalar(LocRat.L(-n))


def test_pullback_routes_agree():
    r7 = count_realization(7)
    strata = sum_zeta_pullback(X2, Y3, 6, r7, mode="strata")
    hist = sum_zeta_pullback(X2, Y3, 6, r7, mode="hist")
    assert strata == hist
    r5 = count_realization(5)
    assert sum_zeta_pullback(X2, Y3, 5, r5, mode="hist") == sum_zeta_pullback(
        X2, Y3, 5, r5, mode="direct"
    )


def test_pullback_split_sums_to_total():
    total, parts = sum_zeta_pullback(X2, Y3, 6, count_realization(7), split=True)
    acc = parts["A1"].add(parts["A2"]).add(parts["A3"])
    assert acc == total
    assert not parts["Bpair"].is_zero()


def test_pullback_requires_disjoint_variables():
    with pytest.raises(MotzetaError):
        sum_zeta_pullback(X2, X3, 4, count_realization(5))


def test_pullback_symbolic_generic_pair_unsupported():
    with pytest.raises(FitFailed):
        sum_zeta_pullback(X2, Y3, 4, symbolic_realization())


# ---------------------------------------------------------------------------
# supplied resolution data
# ---------------------------------------------------------------------------


def _mono_resolution(a):
    return ResolutionData([Stratum(("E",), Atom("mu%d" % a, a), ((a,),), (1,))])


def test_dl_single_stratum_matches_jet_series():
    rs = symbolic_realization()
    for a in (2, 3, 4):
        assert dl_eval(_mono_resolution(a), rs) == zeta_closed(Poly.var("x", a), rs)
    r7 = count_realization(7)
    for a in (2, 3):
        assert dl_eval(_mono_resolution(a), r7) == zeta_closed(Poly.var("x", a), r7)


def test_dl_trunc_matches_closed():
    res = _mono_resolution(3)
    r7 = count_realization(7)
    assert dl_eval(res, r7, mode="trunc", D=9) == dl_eval(res, r7).expand(9)
    rs = symbolic_realization()
    assert dl_eval(res, rs, mode="trunc", D=9) == dl_eval(res, rs).expand(9)


def test_dl_two_strata():
    # crossing of two divisors: the depth-two stratum carries one torus
    # factor (q-1 at counts) per extra member
    res = ResolutionData(
        [
            Stratum(("E1",), None, ((1, 0),), (1,)),
            Stratum(("E2",), None, ((0, 1),), (1,)),
            Stratum(("E1", "E2"), None, ((1, 0), (0, 1)), (1, 1)),
        ]
    )
    r7 = count_realization(7)
    out = dl_eval(res, r7, mode="trunc", D=3, vars=("T", "U"))
    q = Fraction(7)
    assert out.coeff((1, 0)) == 1 / q
    assert out.coeff((0, 1)) == 1 / q
    assert out.coeff((1, 1)) == (q - 1) / q**2
    assert out.coeff((2, 1)) == (q - 1) / q**3


def test_parse_resolution_round_trip():
    rs = symbolic_realization()
    parsed = parse_resolution([{"I": ["E"], "atom": "mu3", "N": [[3]], "nu": [1]}])
    assert dl_eval(parsed, rs) == zeta_closed(X3, rs)
    with pytest.raises(ValueError):
        Stratum(("E",), None, ((0,),), (1,))
    with pytest.raises(ValueError):
        Stratum(("E",), None, ((1,),), (0,))


def test_dl_closed_without_cone_decomposition():
    res = _mono_resolution(2)
    with pytest.raises(ConeNotDecomposed):
        dl_eval(res, symbolic_realization(), cone=[object()])


# ---------------------------------------------------------------------------
# lattice cones
# ---------------------------------------------------------------------------


def _quadrant():
    return ConePieces(
        (
            (((1, 0),), (True,)),
            (((0, 1),), (True,)),
            (((1, 0), (0, 1)), (True, True)),
        ),
        origin=True,
    )


def test_cone_validation_and_euler():
    quad = _quadrant()
    validate_cone(quad, lambda p: all(c >= 0 for c in p), 5, dim=2)
    assert cone_euler(quad) == 0
    # the same set as one piece: closed flags admit zero coefficients, so
    # the rays and the origin are inside
    glued = ConePieces(((((1, 0), (0, 1)), (False, False)),), origin=False)
    validate_cone(glued, lambda p: all(c >= 0 for c in p), 5, dim=2)
    # a wrong membership predicate must be rejected
    with pytest.raises(MotzetaError):
        validate_cone(quad, lambda p: p[0] >= 1 and p[1] >= 0, 4, dim=2)


def test_cone_trunc_matches_closed():
    res = ResolutionData(
        [Stratum(("E1", "E2"), None, ((1, 0), (0, 1)), (1, 1))]
    )
    r7 = count_realization(7)
    quad = _quadrant()
    closed = dl_eval(res, r7, cone=quad)
    trunc = dl_eval(res, r7, mode="trunc", D=5, cone=quad)
    assert trunc == closed.expand(5)
    chain = ConePieces(
        ((((1, 1),), (True,)), (((1, 1), (0, 1)), (True, True))),
    )
    closed2 = dl_eval(res, r7, cone=chain)
    trunc2 = dl_eval(res, r7, mode="trunc", D=6, cone=chain)
    assert trunc2 == closed2.expand(6)
    validate_cone(chain, lambda p: 1 <= p[0] <= p[1], 6, dim=2)


def test_cone_json_round_trip():
    quad = _quadrant()
    again = ConePieces.from_json(quad.to_json())
    assert again.pieces == quad.pieces and again.origin == quad.origin


# ---------------------------------------------------------------------------
# the limit at infinity
# ---------------------------------------------------------------------------


def test_nearby_class_of_powers():
    rs = symbolic_realization()
    assert nearby_cycles(zeta_closed(X, rs)) == SymbolicClass.unit()
    assert nearby_cycles(zeta_closed(X3, rs)) == SymbolicClass.from_atom(Atom("mu3", 3))
    assert nearby_cycles(zeta_closed(X3, count_realization(7))) == 3
    assert nearby_cycles(zeta_closed(X2, count_realization(7))) == 2
    assert nearby_cycles(zeta_closed(X2, count_realization(13))) == 2


def test_diagonal_collapses_variables():
    res = ResolutionData(
        [Stratum(("E1", "E2"), None, ((1, 0), (0, 1)), (1, 1))]
    )
    r7 = count_realization(7)
    diag = diagonal_closed(dl_eval(res, r7, vars=("T", "U")))
    assert diag.vars == ("T",)
    two_var = dl_eval(res, r7, mode="trunc", D=8, vars=("T", "U"))
    folded = {}
    for e in two_var.support():
        folded[e[0] + e[1]] = folded.get(e[0] + e[1], Fraction(0)) + two_var.coeff(e)
    expanded = diag.expand(8)
    for k, v in folded.items():
        if k <= 8:
            assert expanded.coeff((k,)) == v


# ---------------------------------------------------------------------------
# prime selection and serialization
# ---------------------------------------------------------------------------


def test_default_q_choices():
    assert default_q(()) == 2
    assert default_q((2,)) == 3
    assert default_q((2, 3)) == 7
    assert default_q((4,)) == 5
    assert default_q((5,)) == 11
    assert default_q((2,), avoid=(3,)) == 5


def test_required_orders_feed_default_q():
    orders, avoid = required_orders((X2, Y3))
    assert default_q(orders, avoid=avoid) == 7


def test_series_round_trip_and_determinism():
    z1 = zeta_trunc(X2, 8, symbolic_realization())
    z2 = zeta_trunc(X2, 8, symbolic_realization())
    blob1 = series_to_json(z1)
    blob2 = series_to_json(z2)
    assert blob1 == blob2
    assert series_from_json(blob1) == z1
    mz = multizeta_trunc((X2, Y3), 8, count_realization(7))
    assert series_from_json(series_to_json(mz)) == mz
