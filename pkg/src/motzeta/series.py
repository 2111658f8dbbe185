"""Multivariate formal series over the class algebra.

Two interchangeable shapes cover the calculus.  A TruncSeries is a
total-degree-truncated table of exponent -> coefficient entries; a
ClosedSeries is a finite sum of strands, each a coefficient times a
monomial times a product of open geometric factors
L^m X^n / (1 - L^m X^n).  Expansion converts closed to truncated exactly;
closed_from_fit recovers a validated closed form from counted samples.

On top of the two shapes sit the operations the zeta machinery needs:
Hadamard products (coefficientwise, external or convolution flavored, and
the partial variant over a shared variable block), the limit functional on
monomial-free strand forms, ordered-cell decomposition of exponent space,
coefficient-base projection, and separable chain series carrying one
coefficient sequence per axis together with the forward and inverse chain
transforms that exchange strict-chain generating series with their
compressed normal forms.
"""

from __future__ import annotations

import csv
import io
import json
import re
from fractions import Fraction

from .egseq import EGSeq, _solve_exact
from .errors import (
    BaseMismatch,
    FitFailed,
    NotLimitNormal,
    ParseError,
    SupportViolation,
    VariableMismatch,
)
from .locring import L_MINUS_1, LocRat, parse_locrat
from .motclass import Atom, ConvNode, SymbolicClass, augment, conv, conv0, conv1
from .realize import count_realization, symbolic_realization

# Default total-degree truncation bounds by variable count.
DEFAULT_BOUNDS = {1: 12, 2: 8, 3: 6}


def default_bound(nvars):
    return DEFAULT_BOUNDS.get(nvars, 6)


def _L_pow(real, e):
    """Scalar image of the Tate power L^e (q^e under counting)."""
    return real.scalars.from_locrat(LocRat.L(e))


def _Lm1_pow(real, e):
    return real.scalars.pow(real.scalars.from_locrat(L_MINUS_1), e)


def _check_same_shape(a, b):
    if a.vars != b.vars:
        raise VariableMismatch(
            "variable lists differ: %s vs %s" % (list(a.vars), list(b.vars))
        )
    if a.real.tag != b.real.tag or a.real.q != b.real.q:
        raise ValueError("operands live over different realizations")


# ---------------------------------------------------------------------------
# truncated tables
# ---------------------------------------------------------------------------


class TruncSeries:
    """Total-degree truncated series.

    Entries of total degree beyond the bound are dropped at construction
    (truncation is part of the data, not an error) and zero coefficients
    are never stored.
    """

    __slots__ = ("real", "vars", "bound", "entries")

    def __init__(self, real, vars, bound, entries=()):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise VariableMismatch("duplicate variable names: %s" % list(vars))
        bound = int(bound)
        if bound < 0:
            raise ValueError("bound must be >= 0")
        V = real.coeffs
        items = entries.items() if isinstance(entries, dict) else entries
        merged = {}
        for exp, val in items:
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(vars):
                raise VariableMismatch(
                    "exponent %s does not match %d variables" % (list(exp), len(vars))
                )
            if any(e < 0 for e in exp):
                raise ValueError("negative exponent %s" % (exp,))
            if sum(exp) > bound:
                continue
            if exp in merged:
                merged[exp] = V.add(merged[exp], val)
            else:
                merged[exp] = val
        self.real = real
        self.vars = vars
        self.bound = bound
        self.entries = {e: v for e, v in merged.items() if not V.is_zero(v)}

    @classmethod
    def zero(cls, real, vars, bound):
        return cls(real, vars, bound, ())

    def coeff(self, exp):
        exp = tuple(int(e) for e in exp)
        if len(exp) != len(self.vars):
            raise VariableMismatch("exponent arity %d, series arity %d" % (len(exp), len(self.vars)))
        return self.entries.get(exp, self.real.coeffs.zero)

    def support(self):
        return sorted(self.entries)

    def is_zero(self):
        return not self.entries

    def add(self, other):
        _check_same_shape(self, other)
        bound = min(self.bound, other.bound)
        out = dict(self.entries)
        V = self.real.coeffs
        for e, v in other.entries.items():
            out[e] = V.add(out[e], v) if e in out else v
        return TruncSeries(self.real, self.vars, bound, out)

    def neg(self):
        return self.map_coeffs(self.real.coeffs.neg)

    def sub(self, other):
        return self.add(other.neg())

    def scale(self, s):
        V = self.real.coeffs
        return self.map_coeffs(lambda v: V.scale(s, v))

    def map_coeffs(self, fn):
        return TruncSeries(
            self.real, self.vars, self.bound, {e: fn(v) for e, v in self.entries.items()}
        )

    def truncate(self, bound):
        return TruncSeries(self.real, self.vars, bound, self.entries)

    def with_vars(self, names):
        """Relabel the variables (same arity, same exponents)."""
        names = tuple(names)
        if len(names) != len(self.vars):
            raise VariableMismatch("relabel needs %d names" % len(self.vars))
        return TruncSeries(self.real, names, self.bound, self.entries)

    def permuted(self, order):
        """Reorder variables: position i of the result is variable order[i]."""
        order = tuple(order)
        if sorted(order) != list(range(len(self.vars))):
            raise VariableMismatch("not a permutation: %s" % (list(order),))
        vars2 = tuple(self.vars[i] for i in order)
        ent = {tuple(e[i] for i in order): v for e, v in self.entries.items()}
        return TruncSeries(self.real, vars2, self.bound, ent)

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        if (
            self.real.tag != other.real.tag
            or self.real.q != other.real.q
            or self.vars != other.vars
            or self.bound != other.bound
        ):
            return False
        if set(self.entries) != set(other.entries):
            return False
        V = self.real.coeffs
        return all(V.eq(v, other.entries[e]) for e, v in self.entries.items())

    def agrees_with(self, other, through=None):
        """Entrywise equality up to total degree `through` (default: the
        smaller bound)."""
        _check_same_shape(self, other)
        if through is None:
            through = min(self.bound, other.bound)
        V = self.real.coeffs
        keys = {e for e in self.entries if sum(e) <= through}
        keys |= {e for e in other.entries if sum(e) <= through}
        return all(V.eq(self.coeff(e), other.coeff(e)) for e in keys)

    def __repr__(self):
        return "TruncSeries(vars=%s, bound=%d, %d entries)" % (
            list(self.vars),
            self.bound,
            len(self.entries),
        )


def extend_const(a, names):
    """Extend by directions the coefficients do not depend on.

    The result, over a.vars + names, has entry c at (e, u) for every u
    with total degree within the bound whenever a has entry c at e.
    """
    names = tuple(names)
    vars2 = a.vars + names
    if len(set(vars2)) != len(vars2):
        raise VariableMismatch("extension names collide with existing variables")
    k = len(names)
    ent = {}

    def tails(room):
        stack = [((), room)]
        while stack:
            prefix, rem = stack.pop()
            if len(prefix) == k:
                yield prefix
                continue
            for u in range(rem + 1):
                stack.append((prefix + (u,), rem - u))

    for e, v in a.entries.items():
        for tail in tails(a.bound - sum(e)):
            ent[e + tail] = v
    return TruncSeries(a.real, vars2, a.bound, ent)


def monomial_substitute(a, new_vars, images, bound=None):
    """Substitute each variable by a monomial in fresh variables.

    images[i] is the exponent vector over new_vars replacing variable i;
    exponents map linearly and colliding entries merge.
    """
    new_vars = tuple(new_vars)
    images = tuple(tuple(int(x) for x in img) for img in images)
    if len(images) != len(a.vars):
        raise VariableMismatch("need one image per variable")
    for img in images:
        if len(img) != len(new_vars):
            raise VariableMismatch("image arity does not match the new variables")
    if bound is None:
        bound = a.bound
    V = a.real.coeffs
    ent = {}
    for e, v in a.entries.items():
        out = [0] * len(new_vars)
        for i, ei in enumerate(e):
            for j, w in enumerate(images[i]):
                out[j] += ei * w
        key = tuple(out)
        if sum(key) > bound:
            continue
        ent[key] = V.add(ent[key], v) if key in ent else v
    return TruncSeries(a.real, new_vars, bound, ent)


# ---------------------------------------------------------------------------
# Hadamard products
# ---------------------------------------------------------------------------


def hadamard_ext(a, b):
    """Coefficientwise product, coefficients multiplying externally.

    Truncated operands multiply entrywise down to the smaller bound;
    closed operands must be sums of single-factor monomial-free strands,
    where the product is again such a strand (or zero when the two ray
    supports only share the origin).
    """
    if isinstance(a, ClosedSeries) and isinstance(b, ClosedSeries):
        return _closed_hadamard(a, b, a.real.coeffs.mul)
    if isinstance(a, ClosedSeries) or isinstance(b, ClosedSeries):
        raise TypeError("mixed closed/truncated Hadamard operands; expand first")
    _check_same_shape(a, b)
    bound = min(a.bound, b.bound)
    V = a.real.coeffs
    ent = {}
    for e, va in a.entries.items():
        if sum(e) > bound:
            continue
        vb = b.entries.get(e)
        if vb is not None:
            ent[e] = V.mul(va, vb)
    return TruncSeries(a.real, a.vars, bound, ent)


def hadamard_conv(a, b, kind=None):
    """Coefficientwise product in the convolution flavor.

    kind None is the full convolution (kind 0 minus kind 1); 0 and 1 pick
    one flavor.  Needs class coefficients: counted values have already
    forgotten the action data a convolution depends on.
    """
    fn = {None: conv, 0: conv0, 1: conv1}[kind]
    if isinstance(a, ClosedSeries) and isinstance(b, ClosedSeries):
        if a.real.tag != "symbolic":
            raise TypeError("convolution products need class coefficients")
        return _closed_hadamard(a, b, fn)
    if isinstance(a, ClosedSeries) or isinstance(b, ClosedSeries):
        raise TypeError("mixed closed/truncated Hadamard operands; expand first")
    if a.real.tag != "symbolic":
        raise TypeError("convolution products need class coefficients")
    _check_same_shape(a, b)
    bound = min(a.bound, b.bound)
    ent = {}
    for e, va in a.entries.items():
        if sum(e) > bound:
            continue
        vb = b.entries.get(e)
        if vb is not None:
            ent[e] = fn(va, vb)
    return TruncSeries(a.real, a.vars, bound, ent)


def _primitive(vec):
    from math import gcd

    g = 0
    for x in vec:
        g = gcd(g, x)
    return g, tuple(x // g for x in vec)


def _closed_hadamard(a, b, mulfn):
    _check_same_shape(a, b)
    from math import gcd

    out = []
    for sa in a.strands:
        for sb in b.strands:
            for s in (sa, sb):
                if any(s.b) or len(s.factors) != 1 or s.support is not None:
                    raise NotImplementedError(
                        "closed Hadamard products cover single-factor "
                        "monomial-free unrestricted strands; expand instead"
                    )
            m1, n1 = sa.factors[0]
            m2, n2 = sb.factors[0]
            l1, p1 = _primitive(n1)
            l2, p2 = _primitive(n2)
            if p1 != p2:
                continue  # the two ray supports only meet at the origin
            lc = l1 * l2 // gcd(l1, l2)
            m = m1 * (lc // l1) + m2 * (lc // l2)
            nv = tuple(lc * x for x in p1)
            out.append(Strand(mulfn(sa.coeff, sb.coeff), (0,) * len(a.vars), [(m, nv)]))
    return ClosedSeries(a.real, a.vars, out)


def v_hadamard(a, b):
    """Partial Hadamard product over the variables the operands share.

    Variables are matched by name and must appear in the same relative
    order on both sides.  Coefficients multiply externally; the result is
    indexed by a's own variables, then b's own, then the shared block.
    With no shared names this is the external product of series; with all
    names shared it is the full Hadamard product.
    """
    if a.real.tag != b.real.tag or a.real.q != b.real.q:
        raise ValueError("operands live over different realizations")
    shared = tuple(v for v in a.vars if v in set(b.vars))
    if tuple(v for v in b.vars if v in set(a.vars)) != shared:
        raise VariableMismatch(
            "shared variables appear in different orders: %s" % (list(shared),)
        )
    a_only = tuple(i for i, v in enumerate(a.vars) if v not in set(shared))
    b_only = tuple(i for i, v in enumerate(b.vars) if v not in set(shared))
    a_shared = tuple(a.vars.index(v) for v in shared)
    b_shared = tuple(b.vars.index(v) for v in shared)
    vars2 = (
        tuple(a.vars[i] for i in a_only)
        + tuple(b.vars[i] for i in b_only)
        + shared
    )
    bound = min(a.bound, b.bound)
    V = a.real.coeffs
    ent = {}
    for ea, va in a.entries.items():
        key_a = tuple(ea[i] for i in a_shared)
        for eb, vb in b.entries.items():
            if tuple(eb[i] for i in b_shared) != key_a:
                continue
            exp = (
                tuple(ea[i] for i in a_only)
                + tuple(eb[i] for i in b_only)
                + key_a
            )
            if sum(exp) > bound:
                continue
            v = V.mul(va, vb)
            ent[exp] = V.add(ent[exp], v) if exp in ent else v
    return TruncSeries(a.real, vars2, bound, ent)


# ---------------------------------------------------------------------------
# ordered cells
# ---------------------------------------------------------------------------


class CellSpec:
    """Ordered cell of exponent space: which axes are tied, and how the
    tied groups compare.

    order lists the axes group by group (ascending inside each group);
    breaks holds the cumulative group sizes.  The cell contains exactly
    the points whose axes, grouped by equal value in increasing value
    order, produce this grouping.
    """

    __slots__ = ("order", "breaks")

    def __init__(self, order, breaks):
        self.order = tuple(order)
        self.breaks = tuple(breaks)
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("order must be a permutation of the axes")
        if not self.breaks or self.breaks[-1] != len(self.order):
            raise ValueError("breaks must end at the axis count")
        prev = 0
        for b in self.breaks:
            if b <= prev:
                raise ValueError("breaks must be strictly increasing")
            prev = b

    @classmethod
    def from_point(cls, exp):
        by_val = {}
        for i, x in enumerate(exp):
            by_val.setdefault(x, []).append(i)
        order = []
        breaks = []
        for val in sorted(by_val):
            order.extend(sorted(by_val[val]))
            breaks.append(len(order))
        return cls(order, breaks)

    def groups(self):
        out = []
        lo = 0
        for b in self.breaks:
            out.append(self.order[lo:b])
            lo = b
        return out

    def masks(self, nvars=None):
        """One 0/1 vector per group: the exponent contribution of the
        group's common value."""
        if nvars is None:
            nvars = len(self.order)
        out = []
        for grp in self.groups():
            m = [0] * nvars
            for i in grp:
                m[i] = 1
            out.append(tuple(m))
        return out

    def contains(self, exp):
        return CellSpec.from_point(exp) == self

    def __eq__(self, other):
        if not isinstance(other, CellSpec):
            return NotImplemented
        return self.order == other.order and self.breaks == other.breaks

    def __hash__(self):
        return hash((self.order, self.breaks))

    def __repr__(self):
        return "CellSpec(%s)" % " < ".join(
            " = ".join(str(i) for i in grp) for grp in self.groups()
        )


def cell_decompose(a):
    """Split a truncated series along the ordered cells of its support.

    The parts use the same variables and bound; they sum to the input and
    their supports partition it.
    """
    parts = {}
    for e, v in a.entries.items():
        spec = CellSpec.from_point(e)
        parts.setdefault(spec, {})[e] = v
    return {
        spec: TruncSeries(a.real, a.vars, a.bound, ent) for spec, ent in parts.items()
    }


# ---------------------------------------------------------------------------
# coefficient-base projection
# ---------------------------------------------------------------------------


def project(a, i):
    """Push the coefficients forward to factor i of a product base.

    Class coefficients are retagged onto the named factor (the class data
    itself is unchanged: pushforwards along projections keep the fiber
    classes).  Counted coefficients already carry total masses, so the
    projection is the identity on values.
    """
    if a.real.tag == "count":
        return a
    base = a.real.coeffs.zero.base
    parts = base.split("*")
    if not (0 <= i < len(parts)):
        raise BaseMismatch("base %r has no factor %d" % (base, i))
    real2 = symbolic_realization(parts[i])

    def retag(c):
        return SymbolicClass(c.terms, parts[i])

    if isinstance(a, TruncSeries):
        return TruncSeries(real2, a.vars, a.bound, {e: retag(v) for e, v in a.entries.items()})
    if isinstance(a, ClosedSeries):
        return ClosedSeries(
            real2,
            a.vars,
            [Strand(retag(s.coeff), s.b, s.factors, s.support) for s in a.strands],
        )
    raise TypeError("project expects a series")


# ---------------------------------------------------------------------------
# closed (rational) forms
# ---------------------------------------------------------------------------


class Strand:
    """One rational building block:

        coeff * X^b * prod_j  L^{m_j} X^{n_j} / (1 - L^{m_j} X^{n_j})

    with every n_j a nonzero exponent vector.  An optional lattice
    restriction (period, residue) keeps only expansion exponents e with
    e_i = residue_i (mod period_i) componentwise; a zero period entry pins
    the coordinate to the residue exactly.
    """

    __slots__ = ("coeff", "b", "factors", "support")

    def __init__(self, coeff, b, factors, support=None):
        b = tuple(int(x) for x in b)
        if any(x < 0 for x in b):
            raise ValueError("monomial exponent must be nonnegative")
        fs = []
        for m, nv in factors:
            nv = tuple(int(x) for x in nv)
            if len(nv) != len(b):
                raise VariableMismatch("factor exponent arity differs from the monomial")
            if any(x < 0 for x in nv):
                raise ValueError("factor exponents must be nonnegative")
            if not any(nv):
                raise ValueError("open factor needs a nonzero exponent vector")
            fs.append((int(m), nv))
        fs.sort(key=lambda f: (f[1], f[0]))
        if support is not None:
            period, residue = support
            period = tuple(int(x) for x in period)
            residue = tuple(int(x) for x in residue)
            if len(period) != len(b) or len(residue) != len(b):
                raise VariableMismatch("support arity differs from the monomial")
            if any(p < 0 for p in period):
                raise ValueError("support periods must be >= 0")
            residue = tuple(
                r % p if p > 0 else r for p, r in zip(period, residue)
            )
            if any(r < 0 for r in residue):
                raise ValueError("pinned support residues must be >= 0")
            if all(p == 1 for p in period):
                support = None
            else:
                support = (period, residue)
        self.coeff = coeff
        self.b = b
        self.factors = tuple(fs)
        self.support = support

    def key(self):
        return (self.b, self.factors, self.support)

    def admits(self, exp):
        if self.support is None:
            return True
        period, residue = self.support
        for x, p, r in zip(exp, period, residue):
            if p == 0:
                if x != r:
                    return False
            elif x % p != r:
                return False
        return True

    def __repr__(self):
        return "Strand(b=%s, factors=%s, support=%s)" % (
            list(self.b),
            [(m, list(n)) for m, n in self.factors],
            self.support,
        )


class ClosedSeries:
    """Finite sum of strands over a fixed variable list."""

    __slots__ = ("real", "vars", "strands")

    def __init__(self, real, vars, strands=()):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise VariableMismatch("duplicate variable names: %s" % list(vars))
        V = real.coeffs
        merged = {}
        for s in strands:
            if len(s.b) != len(vars):
                raise VariableMismatch("strand arity differs from the variable list")
            k = s.key()
            if k in merged:
                merged[k] = V.add(merged[k], s.coeff)
            else:
                merged[k] = s.coeff
        out = []
        for k in sorted(merged):
            c = merged[k]
            if not V.is_zero(c):
                out.append(Strand(c, k[0], k[1], k[2]))
        self.real = real
        self.vars = vars
        self.strands = tuple(out)

    def is_zero(self):
        return not self.strands

    def add(self, other):
        _check_same_shape(self, other)
        return ClosedSeries(self.real, self.vars, self.strands + other.strands)

    def neg(self):
        V = self.real.coeffs
        return ClosedSeries(
            self.real,
            self.vars,
            [Strand(V.neg(s.coeff), s.b, s.factors, s.support) for s in self.strands],
        )

    def sub(self, other):
        return self.add(other.neg())

    def scale(self, sc):
        V = self.real.coeffs
        return ClosedSeries(
            self.real,
            self.vars,
            [Strand(V.scale(sc, s.coeff), s.b, s.factors, s.support) for s in self.strands],
        )

    def __eq__(self, other):
        if not isinstance(other, ClosedSeries):
            return NotImplemented
        if (
            self.real.tag != other.real.tag
            or self.real.q != other.real.q
            or self.vars != other.vars
            or len(self.strands) != len(other.strands)
        ):
            return False
        V = self.real.coeffs
        return all(
            sa.key() == sb.key() and V.eq(sa.coeff, sb.coeff)
            for sa, sb in zip(self.strands, other.strands)
        )

    def classify(self):
        """int / ssr / sr by the worst twist exponent of any open factor."""
        has_zero = False
        has_pos = False
        for s in self.strands:
            for m, _ in s.factors:
                if m > 0:
                    has_pos = True
                elif m == 0:
                    has_zero = True
        if has_pos:
            return "sr"
        if has_zero:
            return "ssr"
        return "int"

    def expand(self, bound):
        V = self.real.coeffs
        ent = {}
        for s in self.strands:
            for exp, val in _strand_terms(self.real, s, bound):
                ent[exp] = V.add(ent[exp], val) if exp in ent else val
        return TruncSeries(self.real, self.vars, bound, ent)

    def lim_infty(self):
        return lim_infty(self)

    def __repr__(self):
        return "ClosedSeries(vars=%s, %d strands)" % (list(self.vars), len(self.strands))


def _strand_terms(real, strand, bound):
    V = real.coeffs
    out = []
    factors = strand.factors

    def rec(i, exp, mtot):
        if sum(exp) > bound:
            return
        if i == len(factors):
            if strand.admits(exp):
                out.append((exp, V.scale(_L_pow(real, mtot), strand.coeff)))
            return
        m, nv = factors[i]
        k = 1
        while True:
            exp2 = tuple(e + k * x for e, x in zip(exp, nv))
            if sum(exp2) > bound:
                break
            rec(i + 1, exp2, mtot + m * k)
            k += 1

    rec(0, strand.b, 0)
    return out


def classify(s):
    """int / ssr / sr classification of a closed form."""
    return s.classify()


def lim_infty(a):
    """Value at infinity of a closed form along every variable at once.

    Defined on sums of monomial-free unrestricted strands, where each
    open factor contributes -1; linear; a strand with a leftover monomial
    or a lattice restriction has no limit in this calculus.
    """
    if not isinstance(a, ClosedSeries):
        raise NotLimitNormal("the limit functional is defined on closed forms")
    V = a.real.coeffs
    total = V.zero
    for s in a.strands:
        if s.support is not None:
            raise NotLimitNormal("restricted strand has no limit: %r" % (s,))
        num = sum(s.b) + sum(sum(n) for _, n in s.factors)
        den = sum(sum(n) for _, n in s.factors)
        if num > den:
            raise NotLimitNormal("strand with a leftover monomial has no limit: %r" % (s,))
        if num < den:
            continue
        val = s.coeff if len(s.factors) % 2 == 0 else V.neg(s.coeff)
        total = V.add(total, val)
    return total


# ---------------------------------------------------------------------------
# fitting counted coefficient streams
# ---------------------------------------------------------------------------


def strand_fit(real, samples, ratios=None, period=1, max_deg=3, dom_min=1, stable_from=None):
    """Exact per-residue exponential-polynomial fit of a coefficient
    stream; every supplied sample must be reproduced (FitFailed if not).

    The default ratio menu is nonpositive q-powers, widening with the
    per-residue sample budget up to q^0 .. q^-8 (the fit keeps at least
    one held-out sample per residue beyond the unknowns it solves for).
    """
    if ratios is None:
        if real.tag != "count":
            raise FitFailed("the default ratio menu needs a counted realization")
        q = Fraction(real.q)
        counts = {}
        for n in samples:
            counts[n % period] = counts.get(n % period, 0) + 1
        per_res = min(counts.get(r, 0) for r in range(period))
        span = max(1, min(8, per_res - 2))
        ratios = [q**j for j in range(0, -span - 1, -1)]
    return EGSeq.fit(
        real,
        samples,
        ratios,
        period=period,
        max_deg=max_deg,
        dom_min=dom_min,
        stable_from=stable_from,
    )


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def _single_candidate_modes(q, Q, m, N):
    """Period-Q mode table of L^m T^N/(1 - L^m T^N) under counting."""
    modes = [[] for _ in range(Q)]
    for r in range(0, Q, N):
        modes[r] = [(q ** (m * Q // N), (q ** (m * r // N),))]
    return modes


def _pair_candidate(real, Q, f1, f2, hi):
    """Counted expansion of a two-factor strand, refit as a period-Q
    sequence (exact, validated on every sample)."""
    q = Fraction(real.q)
    (m1, N1), (m2, N2) = f1, f2
    vals = {n: Fraction(0) for n in range(1, hi + 1)}
    k1 = 1
    while N1 * k1 + N2 <= hi:
        base = q ** (m1 * k1)
        k2 = 1
        while N1 * k1 + N2 * k2 <= hi:
            vals[N1 * k1 + N2 * k2] += base * q ** (m2 * k2)
            k2 += 1
        k1 += 1
    ratios = [q ** (m1 * Q // N1)]
    r2 = q ** (m2 * Q // N2)
    if r2 not in ratios:
        ratios.append(r2)
    return EGSeq.fit(real, vals, ratios, period=Q, max_deg=2, dom_min=1, stable_from=1)


def closed_from_fit(seq, var="T", steps=None, m_span=8):
    """Recover a validated closed form from a fitted counted stream.

    Solves for the stream as an exact combination of expansions of
    strands with one or two open factors L^m T^N/(1 - L^m T^N), N running
    over the divisors of the stream's period and -m_span <= m <= -1.  The
    reconstruction is validated against the stream well past its stable
    threshold; failure to represent raises FitFailed.
    """
    real = seq.real
    if real.tag != "count":
        raise FitFailed("closed-form recovery runs over the count realization")
    q = Fraction(real.q)
    Q = seq.period
    if steps is None:
        steps = _divisors(Q)
    for N in steps:
        if Q % N:
            raise ValueError("steps must divide the stream period")

    target_ratios = set()
    for r in range(Q):
        for ratio, coeffs in seq.modes[r]:
            if any(c != 0 for c in coeffs):
                target_ratios.add(ratio)

    singles = []
    for N in steps:
        for m in range(-m_span, 0):
            singles.append((m, N))
    pairs = []
    for i in range(len(singles)):
        for j in range(i, len(singles)):
            pairs.append((singles[i], singles[j]))

    def single_ok(mN):
        m, N = mN
        return q ** (m * Q // N) in target_ratios

    hi = max(8 * Q, seq.stable_start + 4 * Q, 16)

    def assemble(use_singles, use_pairs):
        cands = []
        for m, N in use_singles:
            cands.append((("single", m, N), _single_candidate_modes(q, Q, m, N)))
        for f1, f2 in use_pairs:
            fitted = _pair_candidate(real, Q, f1, f2, hi)
            cands.append((("pair", f1, f2), fitted.modes))
        return cands

    def solve(cands):
        coords = {}
        for _, modes in cands:
            for r in range(Q):
                for ratio, coeffs in modes[r]:
                    for e, c in enumerate(coeffs):
                        if c != 0:
                            coords.setdefault((r, ratio, e), len(coords))
        for r in range(Q):
            for ratio, coeffs in seq.modes[r]:
                for e, c in enumerate(coeffs):
                    if c != 0:
                        coords.setdefault((r, ratio, e), len(coords))
        if not coords:
            return []
        rows = [[Fraction(0)] * len(cands) for _ in coords]
        rhs = [Fraction(0)] * len(coords)
        for col, (_, modes) in enumerate(cands):
            for r in range(Q):
                for ratio, coeffs in modes[r]:
                    for e, c in enumerate(coeffs):
                        if c != 0:
                            rows[coords[(r, ratio, e)]][col] += c
        for r in range(Q):
            for ratio, coeffs in seq.modes[r]:
                for e, c in enumerate(coeffs):
                    if c != 0:
                        rhs[coords[(r, ratio, e)]] += c
        return _solve_exact(rows, rhs)

    pruned_singles = [s for s in singles if single_ok(s)]
    pruned_pairs = [(f1, f2) for f1, f2 in pairs if single_ok(f1) and single_ok(f2)]
    cands = assemble(pruned_singles, pruned_pairs)
    sol = solve(cands)
    if sol is None:
        cands = assemble(singles, pairs)
        sol = solve(cands)
    if sol is None:
        raise FitFailed("stream is not in the one/two-factor dictionary")

    strands = []
    for alpha, (tag, *rest) in zip(sol, (k for k, _ in cands)):
        if alpha == 0:
            continue
        if tag == "single":
            m, N = rest
            strands.append(Strand(alpha, (0,), [(m, (N,))]))
        else:
            f1, f2 = rest
            strands.append(Strand(alpha, (0,), [(f1[0], (f1[1],)), (f2[0], (f2[1],))]))
    closed = ClosedSeries(real, (var,), strands)

    lo = max(1, seq.dom_min)
    table = closed.expand(hi)
    for n in range(lo, hi + 1):
        if table.coeff((n,)) != seq.value(n):
            raise FitFailed(
                "dictionary reconstruction disagrees with the stream at n=%d" % n
            )
    return closed


# ---------------------------------------------------------------------------
# separable chain series
# ---------------------------------------------------------------------------


class Slot:
    """One axis of a separable series: the value stream plus its
    action-forgetting companion (underlying plain classes).

    With class coefficients the companion is derived; counted values
    carry no action data, so it must be supplied.
    """

    __slots__ = ("seq", "aug")

    def __init__(self, seq, aug=None):
        if aug is None:
            if seq.real.tag != "symbolic":
                raise ValueError("counted slots need an explicit companion stream")
            aug = seq.map_values(augment)
        self.seq = seq
        self.aug = aug

    def scale(self, s):
        return Slot(self.seq.scale(s), self.aug.scale(s))


class SeparableSeries:
    """Sum-free separable block: the coefficient at an admissible exponent
    is the ordered external product of one stream value per axis.

    region "chain": the axis values are strictly increasing positive
    integers; region "orthant": independent positive integers.  masks[j]
    converts axis value w_j into output exponents: the exponent of a point
    (w_1, .., w_eta) is sum_j w_j * masks[j].
    """

    __slots__ = ("real", "vars", "masks", "slots", "region")

    def __init__(self, real, vars, masks, slots, region="chain"):
        vars = tuple(vars)
        masks = tuple(tuple(int(x) for x in m) for m in masks)
        slots = tuple(slots)
        if region not in ("chain", "orthant"):
            raise ValueError("region must be 'chain' or 'orthant'")
        if not slots or len(masks) != len(slots):
            raise ValueError("need one mask per slot, at least one slot")
        for m in masks:
            if len(m) != len(vars):
                raise VariableMismatch("mask arity differs from the variable list")
            if not any(m) or any(x < 0 for x in m):
                raise ValueError("masks must be nonzero and nonnegative")
        self.real = real
        self.vars = vars
        self.masks = masks
        self.slots = slots
        self.region = region

    def value(self, w):
        """Coefficient at the axis point w (admissibility is the caller's
        concern; reading off the region is meaningful and used)."""
        if len(w) != len(self.slots):
            raise VariableMismatch("need one value per axis")
        V = self.real.coeffs
        out = None
        for wj, slot in zip(w, self.slots):
            v = slot.seq.value(wj)
            out = v if out is None else V.mul(out, v)
        return out

    def expand(self, bound):
        V = self.real.coeffs
        eta = len(self.slots)
        weights = [sum(m) for m in self.masks]
        ent = {}

        def future_min(j, w):
            if self.region == "chain":
                return sum(weights[i] * (w + (i - j)) for i in range(j + 1, eta))
            return sum(weights[i] for i in range(j + 1, eta))

        def rec(j, wprev, exp, val):
            if j == eta:
                ent[exp] = V.add(ent[exp], val) if exp in ent else val
                return
            lo = max(self.slots[j].seq.dom_min, 1)
            if self.region == "chain" and j > 0:
                lo = max(lo, wprev + 1)
            w = lo
            while True:
                exp2 = tuple(e + w * x for e, x in zip(exp, self.masks[j]))
                if sum(exp2) + future_min(j, w) > bound:
                    break
                v = self.slots[j].seq.value(w)
                val2 = v if val is None else V.mul(val, v)
                rec(j + 1, w, exp2, val2)
                w += 1

        rec(0, 0, (0,) * len(self.vars), None)
        return TruncSeries(self.real, self.vars, bound, ent)

    def scale(self, s):
        slots = (self.slots[0].scale(s),) + self.slots[1:]
        return SeparableSeries(self.real, self.vars, self.masks, slots, self.region)

    def phi(self):
        """Forward chain transform, normalizing a strict chain into
        compressed per-axis data: the first axis is rescaled by
        (L-1)^(1-eta) and every later axis becomes the backward difference
        of its action-forgetting companion."""
        eta = len(self.slots)
        if eta == 1:
            return self
        if self.region != "chain":
            raise SupportViolation("the chain transform needs a chain region")
        first = self.slots[0].scale(_Lm1_pow(self.real, 1 - eta))
        rest = []
        for slot in self.slots[1:]:
            d = slot.aug.shift(-1).sub(slot.aug)
            rest.append(Slot(d, d) if self.real.tag == "count" else Slot(d))
        return SeparableSeries(self.real, self.vars, self.masks, (first,) + tuple(rest), "chain")

    def phi_inv(self, tail_shift=0):
        """Inverse chain transform: the first axis is rescaled by
        (L-1)^(eta-1) and every later axis becomes the open tail sum of
        its action-forgetting companion.  Inverts phi on chains whose
        later-axis companions decay (no ratio-1 part); a non-decaying
        companion raises TailNotSummable.

        tail_shift moves the tail start: 0 sums the companion over
        l > w, k over l > w + k in general.  Nonzero shifts exist solely
        so callers can demonstrate that only shift 0 inverts phi."""
        eta = len(self.slots)
        if eta == 1:
            return self
        if self.region != "chain":
            raise SupportViolation("the chain transform needs a chain region")
        first = self.slots[0].scale(_Lm1_pow(self.real, eta - 1))
        rest = []
        for slot in self.slots[1:]:
            t = slot.aug.tail_sum()
            if tail_shift:
                t = t.shift(tail_shift)
            rest.append(Slot(t, t) if self.real.tag == "count" else Slot(t))
        return SeparableSeries(self.real, self.vars, self.masks, (first,) + tuple(rest), "chain")

    def __repr__(self):
        return "SeparableSeries(vars=%s, axes=%d, region=%s)" % (
            list(self.vars),
            len(self.slots),
            self.region,
        )


# ---------------------------------------------------------------------------
# parsing class text
# ---------------------------------------------------------------------------

_ATOM_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _norm_atom_table(atoms):
    reg = {}
    for name, spec in (atoms or {}).items():
        if isinstance(spec, Atom):
            reg[name] = (spec.order, spec.base)
        else:
            order, base = spec
            reg[name] = (int(order), base)
    return reg


def _split_top(src, sep):
    """Split on sep at paren depth 0."""
    parts = []
    depth = 0
    last = 0
    i = 0
    L = len(src)
    s = len(sep)
    while i < L:
        ch = src[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced ')'", position=i)
        elif depth == 0 and src.startswith(sep, i):
            parts.append(src[last:i])
            i += s
            last = i
            continue
        i += 1
    if depth != 0:
        raise ParseError("unbalanced '('", position=L)
    parts.append(src[last:])
    return parts


def _parse_factor(tok, reg, base):
    tok = tok.strip()
    if not tok:
        raise ParseError("empty factor")
    aug = False
    if tok.endswith("'"):
        aug = True
        tok = tok[:-1]
    if tok.startswith("(") and tok.endswith(")"):
        inner = tok[1:-1]
        for kind, op in ((0, " *0 "), (1, " *1 ")):
            sides = _split_top(inner, op)
            if len(sides) == 2:
                left = _parse_factor_list(sides[0], reg, base)
                right = _parse_factor_list(sides[1], reg, base)
                return ConvNode(kind, left, right, aug)
            if len(sides) > 2:
                raise ParseError("convolution takes exactly two operands")
        raise ParseError("parenthesized factor is not a convolution: %r" % tok)
    if not _ATOM_RE.match(tok):
        raise ParseError("bad atom token %r" % tok)
    order, atom_base = reg.get(tok, (1, base))
    return Atom(tok, order, atom_base, aug)


def _parse_factor_list(src, reg, base):
    src = src.strip()
    if src == "1":
        return ()
    return tuple(_parse_factor(tok, reg, base) for tok in _split_top(src, " x "))


def _parse_body(body, reg, base):
    body = body.strip()
    if body == "1":
        return (), False
    if body.startswith("(") and body.endswith(")'"):
        inner = body[1:-2]
        depth = 0
        wraps = True
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth < 0:
                    wraps = False
                    break
        if wraps and depth == 0:
            has_conv = any(
                len(_split_top(inner, op)) > 1 for op in (" *0 ", " *1 ")
            )
            if not has_conv:
                return _parse_factor_list(inner, reg, base), True
    return _parse_factor_list(body, reg, base), False


def parse_class(text, atoms=None, base="pt"):
    """Parse the rendered form of a symbolic class.

    atoms maps name -> Atom or (order, base); the text itself does not
    carry orders, so names missing from the table parse as order-1 atoms
    over the class base.  Round-trips with SymbolicClass.render given the
    table the serializer writes alongside.
    """
    src = text.strip()
    if src == "0":
        return SymbolicClass.zero(base)
    reg = _norm_atom_table(atoms)
    terms = []
    i = 0
    n = len(src)
    while True:
        if i >= n or src[i] != "[":
            raise ParseError("expected '[' to open a coefficient", position=i)
        try:
            j = src.index("]", i + 1)
        except ValueError:
            raise ParseError("unterminated coefficient", position=i)
        coeff = parse_locrat(src[i + 1 : j])
        if j + 1 >= n or src[j + 1] != "*":
            raise ParseError("expected '*' after the coefficient", position=j + 1)
        k = j + 2
        depth = 0
        end = n
        m = k
        while m < n:
            ch = src[m]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and src.startswith(" + ", m):
                end = m
                break
            m += 1
        factors, aug_term = _parse_body(src[k:end], reg, base)
        terms.append((factors, aug_term, coeff))
        if end == n:
            break
        i = end + 3
    return SymbolicClass(tuple(terms), base)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _real_to_dict(real):
    if real.tag == "count":
        return {"tag": "count", "q": real.q}
    return {"tag": "symbolic", "base": real.coeffs.zero.base}


def _real_from_dict(d):
    if d["tag"] == "count":
        return count_realization(d["q"])
    return symbolic_realization(d.get("base", "pt"))


def _collect_atoms(values):
    reg = {}

    def visit(f):
        if isinstance(f, ConvNode):
            for sub in f.left + f.right:
                visit(sub)
            return
        prev = reg.get(f.name)
        cur = (f.order, f.base)
        if prev is not None and prev != cur:
            raise ValueError("atom %r appears with conflicting data" % f.name)
        reg[f.name] = cur

    for c in values:
        for factors, _, _ in c.terms:
            for f in factors:
                visit(f)
    return [
        {"name": name, "order": reg[name][0], "base": reg[name][1]}
        for name in sorted(reg)
    ]


def series_to_dict(s):
    d = {
        "vars": list(s.vars),
        "realization": _real_to_dict(s.real),
    }
    V = s.real.coeffs
    if isinstance(s, TruncSeries):
        d["mode"] = "trunc"
        d["bound"] = s.bound
        d["entries"] = [
            {"exp": list(e), "coeff": V.render(s.entries[e])} for e in sorted(s.entries)
        ]
        if s.real.tag == "symbolic":
            d["atoms"] = _collect_atoms(s.entries.values())
        return d
    if isinstance(s, ClosedSeries):
        d["mode"] = "closed"
        d["strands"] = [
            {
                "coeff": V.render(st.coeff),
                "b": list(st.b),
                "factors": [{"m": m, "n": list(n)} for m, n in st.factors],
                "support": (
                    None
                    if st.support is None
                    else {"period": list(st.support[0]), "residue": list(st.support[1])}
                ),
            }
            for st in s.strands
        ]
        if s.real.tag == "symbolic":
            d["atoms"] = _collect_atoms(st.coeff for st in s.strands)
        return d
    raise TypeError("series_to_dict expects a series")


def series_from_dict(d):
    real = _real_from_dict(d["realization"])
    vars = tuple(d["vars"])
    if real.tag == "count":
        def parse_coeff(text):
            return Fraction(text)
    else:
        base = real.coeffs.zero.base
        table = {a["name"]: (a["order"], a["base"]) for a in d.get("atoms", [])}

        def parse_coeff(text):
            return parse_class(text, table, base)

    if d["mode"] == "trunc":
        entries = {tuple(e["exp"]): parse_coeff(e["coeff"]) for e in d["entries"]}
        return TruncSeries(real, vars, d["bound"], entries)
    if d["mode"] == "closed":
        strands = []
        for st in d["strands"]:
            sup = st.get("support")
            strands.append(
                Strand(
                    parse_coeff(st["coeff"]),
                    tuple(st["b"]),
                    [(f["m"], tuple(f["n"])) for f in st["factors"]],
                    None if sup is None else (tuple(sup["period"]), tuple(sup["residue"])),
                )
            )
        return ClosedSeries(real, vars, strands)
    raise ValueError("unknown series mode %r" % d.get("mode"))


def series_to_json(s):
    return json.dumps(series_to_dict(s), sort_keys=True, separators=(",", ": "), indent=1)


def series_from_json(text):
    return series_from_dict(json.loads(text))


def series_to_csv(s):
    """CSV table of a truncated series: one row per entry, exponents then
    the rendered coefficient.  Closed forms should be expanded first."""
    if not isinstance(s, TruncSeries):
        raise TypeError("CSV export covers truncated series; expand closed forms first")
    V = s.real.coeffs
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(s.vars) + ["coeff"])
    for e in sorted(s.entries):
        w.writerow(list(e) + [V.render(s.entries[e])])
    return buf.getvalue()
