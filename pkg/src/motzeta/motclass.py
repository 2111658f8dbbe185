"""The monodromic class algebra: symbolic normal forms and count realization.

An element is a finite sum of terms; each term is a scalar from the localized
ring times a commutative product of factors.  A factor is either an Atom (a
named equivariant class with a finite-order root-of-unity action) or a
ConvNode recording an unevaluated convolution of two factor products.

Rewrites applied at construction, to fixpoint:
  - full bilinear distribution (convolution operands are never sums),
  - commutativity: factor multisets and convolution operand pairs sorted,
  - trivial-action reduction: a *0 b -> (L-1)(a x b) and
    a *1 b -> (L-2)(a x b) when both operands have effective order 1,
  - augmentation marks dropped on effective-order-1 factors,
  - term-level augmentation pushed onto the unique factor with a live action
    when there is exactly one,
  - R1: in a binary atom product with exactly one augmented factor, the mark
    moves to the canonically smaller atom.  (Sound for the normal form's
    syntactic equality; the count realization evaluates whatever normal form
    it is handed and never constructs symbolic forms internally.)

Equality of classes is syntactic equality of normal forms; it is sound but
not complete for the underlying ring.

The count realization maps a class to exact rationals: L goes to q, an atom
goes to a twisted point count of a bound GeomSet, a convolution goes to the
double Burnside sum over the two lifted group actions with a Fermat-pair
inner count, and an augmented class goes to the plain average over its group
(the underlying non-equivariant class).
"""

from __future__ import annotations

from fractions import Fraction

from .errors import UnboundAtom
from .geomset import (  # noqa: F401  (re-exported: GeomSet lives with its counts)
    GeomSet,
    WorkMeter,
    fermat_twisted_count,
    quotient_count,
    twisted_count,
)
from .locring import L_MINUS_1, LocRat, ONE as SC_ONE

_L_MINUS_2 = L_MINUS_1 - 1


def _lcm(a, b):
    from math import gcd

    return a * b // gcd(a, b)


class Atom:
    """A named equivariant class; aug marks the underlying plain class."""

    __slots__ = ("name", "base", "order", "aug")

    def __init__(self, name, order=1, base="pt", aug=False):
        self.name = name
        self.order = int(order)
        self.base = base
        self.aug = bool(aug)

    def effective_order(self):
        return 1 if self.aug else self.order

    def sort_key(self):
        return ("atom", self.name, self.base, self.order, self.aug)

    def with_aug(self, aug):
        return Atom(self.name, self.order, self.base, aug)

    def __eq__(self, other):
        return isinstance(other, Atom) and self.sort_key() == other.sort_key()

    def __hash__(self):
        return hash(self.sort_key())

    def render(self):
        return self.name + ("'" if self.aug else "")

    def __repr__(self):
        return "Atom(%s, order=%d)" % (self.render(), self.order)


class ConvNode:
    """Unevaluated convolution of two factor products.

    kind 0 is the additive Fermat convolution (u^N + v^N = 0), kind 1 the
    affine one (u^N + v^N = 1).  Operands are sorted factor tuples.
    """

    __slots__ = ("kind", "left", "right", "aug")

    def __init__(self, kind, left, right, aug=False):
        left = tuple(sorted(left, key=lambda f: f.sort_key()))
        right = tuple(sorted(right, key=lambda f: f.sort_key()))
        if _factors_key(right) < _factors_key(left):
            left, right = right, left
        self.kind = kind
        self.left = left
        self.right = right
        self.aug = bool(aug)

    @property
    def order(self):
        n = 1
        for f in self.left + self.right:
            n = _lcm(n, f.effective_order())
        return n

    def effective_order(self):
        return 1 if self.aug else self.order

    def sort_key(self):
        return (
            "conv",
            self.kind,
            _factors_key(self.left),
            _factors_key(self.right),
            self.aug,
        )

    def with_aug(self, aug):
        return ConvNode(self.kind, self.left, self.right, aug)

    def __eq__(self, other):
        return isinstance(other, ConvNode) and self.sort_key() == other.sort_key()

    def __hash__(self):
        return hash(self.sort_key())

    def render(self):
        op = "*0" if self.kind == 0 else "*1"
        body = "(%s %s %s)" % (_render_factors(self.left), op, _render_factors(self.right))
        return body + ("'" if self.aug else "")

    def __repr__(self):
        return "ConvNode(%s)" % self.render()


def _factors_key(factors):
    return tuple(f.sort_key() for f in factors)


def _render_factors(factors):
    if not factors:
        return "1"
    return " x ".join(f.render() for f in factors)


def _normalize_term(factors, aug_term):
    """Apply factor-level rewrites; returns (factors sorted, aug_term)."""
    out = []
    for f in factors:
        if f.aug and f.with_aug(False).effective_order() == 1:
            f = f.with_aug(False)
        out.append(f)
    live = [i for i, f in enumerate(out) if f.effective_order() > 1]
    if aug_term:
        if not live:
            aug_term = False
        elif len(live) == 1:
            out[live[0]] = out[live[0]].with_aug(True)
            aug_term = False
    # R1: augmentation marks on live atoms slide to a canonical position,
    # the k marks resting on the k canonically smallest live atoms of the
    # product.  Each slide is an instance of the binary exchange
    # a x b' = a' x b; making the placement a function of the multiset alone
    # keeps normalization confluent under associativity and commutativity.
    # Order-1 atoms never carry marks (dropped above) and are never targets;
    # marks on convolution nodes stay where they are.
    if not aug_term:
        live = [
            i
            for i, f in enumerate(out)
            if isinstance(f, Atom) and f.order > 1
        ]
        k = sum(1 for i in live if out[i].aug)
        if k:
            live.sort(key=lambda i: out[i].with_aug(False).sort_key())
            for rank, i in enumerate(live):
                out[i] = out[i].with_aug(rank < k)
    out.sort(key=lambda f: f.sort_key())
    return tuple(out), aug_term


class SymbolicClass:
    """Normal-form element of the class algebra over a named base."""

    __slots__ = ("base", "terms")

    def __init__(self, terms=(), base="pt"):
        # terms: iterable of (factors tuple, aug_term bool, LocRat coeff)
        merged = {}
        store = {}
        for factors, aug_term, coeff in terms:
            factors, aug_term = _normalize_term(factors, aug_term)
            key = (_factors_key(factors), aug_term)
            if key in merged:
                merged[key] = merged[key] + coeff
            else:
                merged[key] = coeff
                store[key] = (factors, aug_term)
        final = []
        for key in sorted(merged):
            coeff = merged[key]
            if not coeff.is_zero():
                factors, aug_term = store[key]
                final.append((factors, aug_term, coeff))
        self.terms = tuple(final)
        self.base = base

    # -- constructors ---------------------------------------------------------

    @classmethod
    def scalar(cls, c, base="pt"):
        if isinstance(c, int):
            c = LocRat.from_int(c)
        return cls((((), False, c),), base)

    @classmethod
    def unit(cls, base="pt"):
        return cls.scalar(1, base)

    @classmethod
    def zero(cls, base="pt"):
        return cls((), base)

    @classmethod
    def from_atom(cls, atom, base=None):
        return cls(
            (((atom,), False, SC_ONE),),
            base if base is not None else atom.base,
        )

    # -- structure ------------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, SymbolicClass):
            return NotImplemented
        if self.base != other.base or len(self.terms) != len(other.terms):
            return False
        for (f1, a1, c1), (f2, a2, c2) in zip(self.terms, other.terms):
            if f1 != f2 or a1 != a2 or not (c1 == c2):
                return False
        return True

    __hash__ = None

    def __add__(self, other):
        if self.base != other.base:
            from .errors import BaseMismatch

            raise BaseMismatch(
                "cannot add classes over %r and %r" % (self.base, other.base)
            )
        return SymbolicClass(self.terms + other.terms, self.base)

    def __neg__(self):
        return SymbolicClass(
            tuple((f, a, -c) for f, a, c in self.terms), self.base
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        if isinstance(c, int):
            c = LocRat.from_int(c)
        return SymbolicClass(
            tuple((f, a, coeff * c) for f, a, coeff in self.terms), self.base
        )

    def render(self):
        if not self.terms:
            return "0"
        parts = []
        for factors, aug_term, coeff in self.terms:
            body = _render_factors(factors)
            if aug_term:
                body = "(%s)'" % body
            parts.append("[%s]*%s" % (coeff.render(), body))
        return " + ".join(parts)

    def __repr__(self):
        return "SymbolicClass(%s)" % self.render()


def external_mul(a, b, base=None):
    """External product; bilinear, commutative, unit = scalar 1."""
    if base is None:
        if a.base == b.base:
            base = a.base
        else:
            base = "%s*%s" % (a.base, b.base)
    def side(factors, aug_term):
        if not aug_term:
            return factors
        live = sum(1 for f in factors if f.effective_order() > 1)
        if live > 1:
            # A jointly-augmented product of several live actions cannot be
            # expressed by per-factor marks (the diagonal average differs
            # from independent averages); no pipeline here produces one.
            raise NotImplementedError(
                "external product with a jointly-augmented factor pair"
            )
        return tuple(f.with_aug(True) for f in factors)

    terms = []
    for fa, aa, ca in a.terms:
        for fb, ab, cb in b.terms:
            terms.append((side(fa, aa) + side(fb, ab), False, ca * cb))
    return SymbolicClass(terms, base)


def augment(a):
    """The underlying plain class (action forgotten); linear, idempotent."""
    return SymbolicClass(
        tuple((f, True, c) for f, _aug, c in a.terms), a.base
    )


def _conv_terms(kind, a, b, base):
    terms = []
    for fa, aa, ca in a.terms:
        for fb, ab, cb in b.terms:
            coeff = ca * cb
            # Effective order of each operand (term-level aug kills actions).
            oa = 1
            if not aa:
                for f in fa:
                    oa = _lcm(oa, f.effective_order())
            ob = 1
            if not ab:
                for f in fb:
                    ob = _lcm(ob, f.effective_order())
            fa2 = fa if not aa else tuple(f.with_aug(True) for f in fa)
            fb2 = fb if not ab else tuple(f.with_aug(True) for f in fb)
            if oa == 1 and ob == 1:
                scalar = L_MINUS_1 if kind == 0 else _L_MINUS_2
                terms.append((fa2 + fb2, False, coeff * scalar))
            else:
                terms.append(((ConvNode(kind, fa2, fb2),), False, coeff))
    return terms


def conv0(a, b, base=None):
    if base is None:
        base = a.base if a.base == b.base else "%s*%s" % (a.base, b.base)
    return SymbolicClass(_conv_terms(0, a, b, base), base)


def conv1(a, b, base=None):
    if base is None:
        base = a.base if a.base == b.base else "%s*%s" % (a.base, b.base)
    return SymbolicClass(_conv_terms(1, a, b, base), base)


def conv(a, b, base=None):
    """Full convolution: conv0 - conv1."""
    return conv0(a, b, base) - conv1(a, b, base)


# --- count realization -------------------------------------------------------


class Binding:
    """Maps atom names to GeomSet presentations for counting."""

    def __init__(self, table, q, budget=None):
        self.table = dict(table)
        self.q = q
        self.meter = WorkMeter(budget)
        self._atom_cache = {}

    def geomset_for(self, atom):
        gs = self.table.get(atom.name)
        if gs is None:
            raise UnboundAtom("atom %r has no bound geometry" % atom.name)
        if gs.action_order != atom.order:
            raise UnboundAtom(
                "atom %r has order %d but its geometry has order %d"
                % (atom.name, atom.order, gs.action_order)
            )
        return gs

    def atom_twisted(self, atom, s):
        """Twisted count of the atom's geometry at group exponent s."""
        gs = self.geomset_for(atom)
        n = gs.action_order
        key = (atom.name, s % n)
        if key not in self._atom_cache:
            self._atom_cache[key] = twisted_count(
                gs, self.q, s % n, meter=self.meter
            )
        return self._atom_cache[key]


def _factor_value(binding, f, s):
    """Realization of one factor against group exponent s (Fraction)."""
    if isinstance(f, Atom):
        if f.aug:
            n = binding.geomset_for(f).action_order
            total = sum(binding.atom_twisted(f, h) for h in range(n))
            return Fraction(total, n)
        return Fraction(binding.atom_twisted(f, s))
    # ConvNode
    N = f.order
    if f.aug:
        if N == 1:
            return _conv_value(binding, f, 0, 1)
        total = Fraction(0)
        for h in range(N):
            total += _conv_value(binding, f, h, N)
        return total / N
    return _conv_value(binding, f, s, N)


def _operand_value(binding, factors, s):
    out = Fraction(1)
    for f in factors:
        out *= _factor_value(binding, f, s)
    return out


def _conv_value(binding, node, s, N):
    """Burnside realization of a convolution node at group exponent s."""
    q = binding.q
    total = Fraction(0)
    for alpha in range(N):
        va = _operand_value(binding, node.left, alpha)
        if va == 0:
            continue
        for beta in range(N):
            vb = _operand_value(binding, node.right, beta)
            if vb == 0:
                continue
            fcount = fermat_twisted_count(
                node.kind, N, q, alpha - s, beta - s, meter=binding.meter
            )
            total += Fraction(fcount) * va * vb
    return total / (N * N)


def bind_and_count(c, binding_or_table, q=None, s=0, budget=None):
    """Exact rational realization of a symbolic class.

    L evaluates to q; atoms to twisted counts of their bound geometry;
    convolutions to the double Burnside sum; augmented parts to plain
    group averages.  s picks the group-twist component (0 = plain counts).
    """
    if isinstance(binding_or_table, Binding):
        binding = binding_or_table
    else:
        binding = Binding(binding_or_table, q, budget)
    total = Fraction(0)
    for factors, aug_term, coeff in c.terms:
        cval = coeff.eval_at(binding.q)
        if aug_term:
            # Diagonal average over the joint group of the live factors.
            N = 1
            for f in factors:
                N = _lcm(N, f.effective_order())
            acc = Fraction(0)
            for h in range(N):
                acc += _operand_value(binding, factors, h)
            tval = acc / N
        else:
            tval = _operand_value(binding, factors, s)
        total += cval * tval
    return total
