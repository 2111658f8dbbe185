"""Jet loci of polynomial germs, their counting routes, and the series
built from them.

A level-n jet of a polynomial f is a tuple of truncated power series (one
per variable, vanishing at the origin unless a free base point is asked
for); the objects of interest are the loci

    exact hit:    f(phi(t)) = t^n  mod t^{n+1}
    order beyond: ord f(phi(t)) > n

together with the root-of-unity action phi(t) -> phi(xi t), which puts
weight j on the t^j jet coefficient.  This module provides

  * jet_set: the locus as a GeomSet (equations + action data), suitable
    for twisted point counts and symbolic invariance checks;
  * three independent counting routes - honest enumeration over F_q,
    a vectorized histogram of packed value digits, and closed forms for
    recognized shapes (monomials x^a, sums of distinct linear variables) -
    kept separate so the test suite can compare them on overlap;
  * generating series: zeta_trunc / zeta_closed for one function,
    multizeta_trunc / multizeta_separable for an ordered family with
    order conditions on the trailing functions, sum_zeta_pullback for a
    direct sum f(x) + g(y) on a product space, with diagnostic splits of
    each coefficient by the two leading orders;
  * evaluators for user-supplied resolution data (dl_eval, cone sums,
    cone_euler, validate_cone) and nearby_cycles as minus the limit of a
    diagonal substitution.

Counting here is exact integer arithmetic throughout; normalized series
coefficients are Fractions (count realization) or classes with localized
scalars (symbolic realization).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .errors import (
    BudgetExceeded,
    ConeNotDecomposed,
    FitFailed,
    MotzetaError,
    NotLimitNormal,
    VariableMismatch,
)
from .geomset import GeomSet, mu_n, point, torus, twisted_count
from .locring import L_MINUS_1, LocRat
from .motclass import Atom, SymbolicClass
from .poly import Poly, parse_poly
from .series import ClosedSeries, Slot, SeparableSeries, Strand, TruncSeries, lim_infty
from .egseq import EGSeq

# Enumeration guards: candidates for one direct count, rows for one
# histogram table.  Overridable per call; the defaults keep q=13 level-6
# tables (4.8M rows) legal and q^10-style enumerations illegal.
DIRECT_BUDGET = 2_000_000
HIST_BUDGET = 6_000_000

_CHUNK = 1 << 19


def _as_poly(f):
    if isinstance(f, Poly):
        return f
    return parse_poly(f)


def _is_prime(n):
    if n < 2:
        return False
    for p in range(2, int(math.isqrt(n)) + 1):
        if n % p == 0:
            return False
    return True


def _require_prime(q, who):
    if not _is_prime(q):
        raise MotzetaError("%s needs a prime q, got %d" % (who, q))


# ---------------------------------------------------------------------------
# jet presentations
# ---------------------------------------------------------------------------


def jet_coeff_polys(f, n, with_base=False):
    """Coefficient polynomials c_0..c_n of f(phi(t)) mod t^{n+1}.

    Jet coordinates are named v_j for variable v; with_base adds the free
    constant coordinate v_0.
    """
    f = _as_poly(f)
    return f.compose_jet(n, with_base=with_base)


def jet_set(f, n, exact=True, action_order=None, base="origin"):
    """The level-n jet locus of f as a GeomSet.

    exact=True carves out f(phi) = t^n mod t^{n+1}; exact=False carves out
    ord f(phi) > n.  The action has order n for exact loci (weight j on
    the t^j coefficient) and is trivial for order-beyond loci unless
    action_order overrides.  base "origin" pins jets at 0; base "free"
    adds the constant coefficients as weight-0 coordinates.
    """
    f = _as_poly(f)
    if n < 1:
        raise ValueError("jet order must be >= 1")
    if base not in ("origin", "free"):
        raise ValueError("base must be 'origin' or 'free'")
    with_base = base == "free"
    cs = jet_coeff_polys(f, n, with_base=with_base)
    coords = []
    weights = []
    base_coords = []
    for v in sorted(f.vars):
        lo = 0 if with_base else 1
        for j in range(lo, n + 1):
            name = "%s_%d" % (v, j)
            coords.append(name)
            weights.append(j)
            if j == 0:
                base_coords.append(name)
    eqs = []
    for j in range(0, n):
        if not cs[j].is_zero():
            eqs.append(cs[j])
    if exact:
        eqs.append(cs[n] - 1)
        order = n if action_order is None else action_order
    else:
        if not cs[n].is_zero():
            eqs.append(cs[n])
        order = 1 if action_order is None else action_order
    return GeomSet(
        tuple(coords),
        tuple(eqs),
        (),
        order,
        tuple(weights),
        base_coords=tuple(base_coords),
    )


def jet_count(f, n, q, s=0, budget=None):
    """Twisted point count of the exact-hit jet locus; the honest oracle.

    Enumerates the GeomSet presentation coordinatewise (cost up to q^{dn}
    candidates), so it is only for desk-scale cross-checks.
    """
    f = _as_poly(f)
    gs = jet_set(f, n)
    return twisted_count(gs, q, g_exp=s, budget=budget)


# ---------------------------------------------------------------------------
# direct counting over prime fields (independent of the GeomSet machinery)
# ---------------------------------------------------------------------------


def _value_digits(f, jets, n, q):
    """Digits c_0..c_n of f(phi) mod t^{n+1} mod q.

    jets: var -> list of level coefficients (c_1.., ints mod q).
    """
    out = [0] * (n + 1)
    for e, c in f.terms.items():
        term = [0] * (n + 1)
        term[0] = c % q
        for v, x in zip(f.vars, e):
            js = jets[v]
            for _ in range(x):
                new = [0] * (n + 1)
                for i in range(n + 1):
                    if term[i] == 0:
                        continue
                    for j in range(1, min(len(js), n - i) + 1):
                        if js[j - 1]:
                            new[i + j] = (new[i + j] + term[i] * js[j - 1]) % q
                term = new
        for m in range(n + 1):
            out[m] = (out[m] + term[m]) % q
    if not f.vars and f.terms:
        out[0] = f.constant_term() % q
    return out


def jet_count_direct(f, n, q, level=None, target="exact", budget=None):
    """Brute-force jet count over F_q (q prime), no GeomSet involved.

    target "exact": f(phi) = t^n mod t^{n+1}; "ordgt": ord f(phi) > n.
    Level defaults to n; larger levels enumerate the extra free digits.
    """
    f = _as_poly(f)
    _require_prime(q, "jet_count_direct")
    if level is None:
        level = n
    if level < n:
        raise ValueError("level must be at least the jet order")
    d = len(f.vars)
    cap = budget if budget is not None else DIRECT_BUDGET
    if q ** (d * level) > cap:
        raise BudgetExceeded(
            "direct enumeration of %d^%d jets exceeds the budget" % (q, d * level)
        )
    want = [0] * (n + 1)
    if target == "exact":
        want[n] = 1
    elif target != "ordgt":
        raise ValueError("target must be 'exact' or 'ordgt'")
    count = 0
    vars_ = sorted(f.vars)
    for flat in itertools.product(range(q), repeat=d * level):
        jets = {
            v: list(flat[i * level : (i + 1) * level]) for i, v in enumerate(vars_)
        }
        if _value_digits(f, jets, n, q) == want:
            count += 1
    return count


# ---------------------------------------------------------------------------
# histogram tables (vectorized route)
# ---------------------------------------------------------------------------


class JetTable:
    """Histogram of the value digits of f over all level-`level` jets.

    Keys pack the digits (c_1, .., c_level) of f(phi) with digit j at
    place level-j, so prescribing a prefix c_1..c_j is one contiguous key
    range.  q must be prime; the constant digit c_0 is stored separately
    (it is the same for every jet).
    """

    __slots__ = ("f", "q", "level", "dim", "const", "ukeys", "counts")

    def __init__(self, f, level, q, budget=None):
        f = _as_poly(f)
        _require_prime(q, "JetTable")
        d = len(f.vars)
        if d == 0:
            raise ValueError("need at least one variable")
        total = q ** (d * level)
        cap = budget if budget is not None else HIST_BUDGET
        if total > cap:
            raise BudgetExceeded(
                "histogram of %d^%d jets exceeds the budget" % (q, d * level)
            )
        self.f = f
        self.q = q
        self.level = level
        self.dim = d
        self.const = f.constant_term() % q
        vars_ = sorted(f.vars)
        places = {}
        for i, v in enumerate(vars_):
            for j in range(1, level + 1):
                # digit of coordinate (v, j) sits at index-place i*level+(j-1)
                places[(v, j)] = q ** (i * level + (j - 1))
        pieces_k = []
        pieces_c = []
        for lo in range(0, total, _CHUNK):
            idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
            keys = self._chunk_keys(idx, places)
            uk, uc = np.unique(keys, return_counts=True)
            pieces_k.append(uk)
            pieces_c.append(uc)
        allk = np.concatenate(pieces_k)
        allc = np.concatenate(pieces_c)
        order = np.argsort(allk, kind="stable")
        allk = allk[order]
        allc = allc[order]
        uk, start = np.unique(allk, return_index=True)
        sums = np.add.reduceat(allc, start)
        self.ukeys = uk
        self.counts = sums.astype(np.int64)

    def _chunk_keys(self, idx, places):
        q, level = self.q, self.level
        digits = {
            vj: ((idx // place) % q).astype(np.int64) for vj, place in places.items()
        }
        acc = [None] * (level + 1)
        for e, c in self.f.terms.items():
            term = [None] * (level + 1)
            term[0] = np.full(idx.shape, c % q, dtype=np.int64)
            for v, x in zip(self.f.vars, e):
                for _ in range(x):
                    new = [None] * (level + 1)
                    for i in range(level + 1):
                        if term[i] is None:
                            continue
                        for j in range(1, level + 1 - i):
                            prod = (term[i] * digits[(v, j)]) % q
                            if new[i + j] is None:
                                new[i + j] = prod
                            else:
                                new[i + j] = (new[i + j] + prod) % q
                    term = new
            for m in range(level + 1):
                if term[m] is not None:
                    if acc[m] is None:
                        acc[m] = term[m].copy()
                    else:
                        acc[m] = (acc[m] + term[m]) % q
        keys = np.zeros(idx.shape, dtype=np.int64)
        for j in range(1, level + 1):
            if acc[j] is not None:
                keys += acc[j] * (q ** (level - j))
        return keys

    # -- queries --------------------------------------------------------------

    def _range_total(self, lo, hi):
        a = np.searchsorted(self.ukeys, lo, side="left")
        b = np.searchsorted(self.ukeys, hi, side="left")
        return int(self.counts[a:b].sum())

    def prefix_count(self, digits):
        """Jets whose value has the prescribed digits c_1..c_j (c_0 must
        vanish for the prescription to be consistent with a jet hit)."""
        j = len(digits)
        if j > self.level:
            raise ValueError("prefix longer than the table level")
        if self.const != 0:
            return 0
        lo = 0
        for i, dig in enumerate(digits, start=1):
            lo += (dig % self.q) * (self.q ** (self.level - i))
        return self._range_total(lo, lo + self.q ** (self.level - j))

    def exact_count(self, n):
        return self.prefix_count((0,) * (n - 1) + (1,))

    def ordgt_count(self, n):
        return self.prefix_count((0,) * n)


def _pack_complement(table, target_digits):
    """Keys of (target - value) digitwise mod q over the table's unique
    keys, plus the leading-order index of each unique value (level+1 for
    the zero value)."""
    q, level = table.q, table.level
    keys = table.ukeys
    comp = np.zeros(keys.shape, dtype=np.int64)
    lead = np.full(keys.shape, level + 1, dtype=np.int64)
    for j in range(1, level + 1):
        place = q ** (level - j)
        dig = (keys // place) % q
        comp += ((target_digits[j - 1] - dig) % q) * place
        first = (dig != 0) & (lead == level + 1)
        lead[first] = j
    return comp, lead


def histogram_pair_counts(f, g, n, q, budget=None):
    """Level-n jet pairs (phi, psi) with f(phi) + g(psi) = t^n mod t^{n+1},
    split by the two leading orders, plus the opposite-leading pair count.

    Returns {"total", "A1", "A2", "A3", "A3_by_l", "Bpair"}:
      A1    - both orders exactly n,
      A2    - orders differ (one exact hit, one beyond n),
      A3    - common order l < n (A3_by_l gives each l),
      Bpair - pairs with f(phi) = t^n and g(psi) = -t^n exactly.
    """
    f, g = _as_poly(f), _as_poly(g)
    tf = JetTable(f, n, q, budget=budget)
    tg = JetTable(g, n, q, budget=budget)
    out = {"total": 0, "A1": 0, "A2": 0, "A3": 0, "A3_by_l": {}, "Bpair": 0}
    if (tf.const + tg.const) % q == 0 and len(tg.ukeys):
        target = [0] * n
        target[n - 1] = 1
        comp, lead_f = _pack_complement(tf, target)
        pos = np.searchsorted(tg.ukeys, comp)
        clip = np.minimum(pos, len(tg.ukeys) - 1)
        ok = (pos < len(tg.ukeys)) & (tg.ukeys[clip] == comp)
        pos = clip
        if ok.any():
            _, lead_g_all = _pack_complement(tg, [0] * n)
            pairs = tf.counts[ok] * tg.counts[pos[ok]]
            lf = lead_f[ok]
            lg = lead_g_all[pos[ok]]
            total = int(pairs.sum())
            a1 = int(pairs[(lf == n) & (lg == n)].sum())
            a2 = int(pairs[(lf != lg)].sum())
            a3 = 0
            by_l = {}
            for l in range(1, n):
                cl = int(pairs[(lf == l) & (lg == l)].sum())
                if cl:
                    by_l[l] = cl
                    a3 += cl
            # the three cases are exhaustive for a sum hitting t^n exactly
            assert total == a1 + a2 + a3
            out.update(total=total, A1=a1, A2=a2, A3=a3, A3_by_l=by_l)
    if tf.const % q == 0 and tg.const % q == 0:
        bf = tf.exact_count(n)
        bg = tg.prefix_count((0,) * (n - 1) + ((-1) % q,))
        out["Bpair"] = bf * bg
    return out


def direct_pair_counts(f, g, n, q, budget=None):
    """Pure-Python counterpart of histogram_pair_counts (bucket join over
    explicit jet enumeration); same return shape."""
    f, g = _as_poly(f), _as_poly(g)
    _require_prime(q, "direct_pair_counts")
    cap = budget if budget is not None else DIRECT_BUDGET
    if q ** (len(f.vars) * n) + q ** (len(g.vars) * n) > cap:
        raise BudgetExceeded("direct pair enumeration exceeds the budget")

    def buckets(h):
        vars_ = sorted(h.vars)
        d = len(vars_)
        out = {}
        for flat in itertools.product(range(q), repeat=d * n):
            jets = {v: list(flat[i * n : (i + 1) * n]) for i, v in enumerate(vars_)}
            digs = _value_digits(h, jets, n, q)
            if digs[0] != 0:
                return {}
            key = tuple(digs[1:])
            out[key] = out.get(key, 0) + 1
        return out

    bf = buckets(f)
    bg = buckets(g)
    out = {"total": 0, "A1": 0, "A2": 0, "A3": 0, "A3_by_l": {}, "Bpair": 0}

    def lead(key):
        for i, dig in enumerate(key, start=1):
            if dig:
                return i
        return n + 1

    target = (0,) * (n - 1) + (1,)
    for key, cf in bf.items():
        comp = tuple((t - k) % q for t, k in zip(target, key))
        cg = bg.get(comp)
        if not cg:
            continue
        pairs = cf * cg
        out["total"] += pairs
        lf, lg = lead(key), lead(comp)
        if lf == n and lg == n:
            out["A1"] += pairs
        elif lf != lg:
            out["A2"] += pairs
        else:
            out["A3"] += pairs
            out["A3_by_l"][lf] = out["A3_by_l"].get(lf, 0) + pairs
    neg = (0,) * (n - 1) + ((-1) % q,)
    out["Bpair"] = bf.get(target, 0) * bg.get(neg, 0)
    return out


# ---------------------------------------------------------------------------
# closed-form counting for recognized shapes
# ---------------------------------------------------------------------------


def classify_shape(f):
    """("monomial", var, a) for a monic one-variable power; ("linsum",
    coeff tuple) for a sum of distinct degree-one variables; else
    ("generic", None)."""
    f = _as_poly(f)
    mono = f.as_monomial()
    if mono is not None:
        c, v, e = mono
        if c == 1 and e >= 1:
            return ("monomial", v, e)
    if f.vars and f.terms and len(f.terms) == len(f.vars):
        coeffs = []
        seen = set()
        for e, c in sorted(f.terms.items()):
            if sum(e) != 1 or c == 0:
                break
            i = next(i for i, x in enumerate(e) if x)
            if i in seen:
                break
            seen.add(i)
            coeffs.append(c)
        else:
            if len(seen) == len(f.vars):
                return ("linsum", tuple(coeffs))
    return ("generic", None)


def mono_exact_count(a, n, q, level):
    """Level-`level` jets phi with phi^a = t^n mod t^{n+1}; prime-to-q a."""
    if level < n or math.gcd(a, q) != 1:
        raise ValueError("need level >= n and a invertible mod q")
    if n % a:
        return 0
    return math.gcd(a, q - 1) * q ** (level - n // a)


def mono_ordgt_count(a, n, q, level):
    """Level-`level` jets phi with ord phi^a > n."""
    need = n // a
    if level < need or math.gcd(a, q) != 1:
        raise ValueError("level too small or a not invertible mod q")
    return q ** (level - need)


def fermat_affine_counts(a, b, q):
    """(#{u^a + v^b = 0}, #{u^a + v^b = 1}, #{v^b = -1}) over (F_q^*)^2,
    resp. F_q^* for the last; by direct enumeration."""
    pow_a = [pow(u, a, q) for u in range(1, q)]
    pow_b = [pow(v, b, q) for v in range(1, q)]
    f0 = sum(1 for x in pow_a for y in pow_b if (x + y) % q == 0)
    f1 = sum(1 for x in pow_a for y in pow_b if (x + y) % q == 1)
    negb = sum(1 for y in pow_b if (y + 1) % q == 0)
    return f0, f1, negb


def monomial_pair_counts(a, b, n, q):
    """Closed-form counterpart of histogram_pair_counts for the pair
    (x^a, y^b): the zero set and each leading coefficient reduce to root
    counts, and every condition above the leading position is linear in a
    fresh coordinate pair and contributes a factor q."""
    _require_prime(q, "monomial_pair_counts")
    if math.gcd(a * b, q) != 1:
        raise ValueError("exponents must be invertible mod q")
    f0, f1, negb = fermat_affine_counts(a, b, q)
    ga = math.gcd(a, q - 1)
    gb = math.gcd(b, q - 1)
    out = {"total": 0, "A1": 0, "A2": 0, "A3": 0, "A3_by_l": {}, "Bpair": 0}
    if n % a == 0 and n % b == 0:
        out["A1"] = f1 * q ** (2 * n - n // a - n // b)
        out["Bpair"] = ga * negb * q ** (2 * n - n // a - n // b)
    if n % a == 0:
        out["A2"] += ga * q ** (2 * n - n // a - n // b)
    if n % b == 0:
        out["A2"] += gb * q ** (2 * n - n // b - n // a)
    step = a * b // math.gcd(a, b)
    for l in range(step, n, step):
        cl = f0 * q ** (n + l - l // a - l // b)
        if cl:
            out["A3_by_l"][l] = cl
            out["A3"] += cl
    out["total"] = out["A1"] + out["A2"] + out["A3"]
    return out


# ---------------------------------------------------------------------------
# per-axis counters with route selection
# ---------------------------------------------------------------------------


class AxisCounts:
    """Exact-hit and order-beyond counts for one function at one prime.

    Routes: "closed" (recognized shapes), "hist", "direct", or "auto"
    (closed if available, else the cheapest enumeration within budget).
    Counts at a level above the constrained depth append free digits, one
    factor q per free coordinate.
    """

    def __init__(self, f, q, budget=None):
        self.f = _as_poly(f)
        _require_prime(q, "AxisCounts")
        self.q = q
        self.dim = len(self.f.vars)
        self.budget = budget
        self.shape = classify_shape(self.f)
        if self.shape[0] == "monomial" and math.gcd(self.shape[2], q) != 1:
            self.shape = ("generic", None)
        if self.shape[0] == "linsum" and any(
            c % q == 0 for c in self.shape[1]
        ):
            self.shape = ("generic", None)
        self._tables = {}

    def _closed(self, kind, n, level):
        tag = self.shape[0]
        if tag == "monomial":
            a = self.shape[2]
            if kind == "exact":
                return mono_exact_count(a, n, self.q, level)
            return mono_ordgt_count(a, n, self.q, level)
        if tag == "linsum":
            if level < n:
                raise ValueError("level must be >= n")
            return self.q ** (self.dim * level - n)
        return None

    def _table(self, level):
        t = self._tables.get(level)
        if t is None:
            t = JetTable(self.f, level, self.q, budget=self.budget)
            self._tables[level] = t
        return t

    def _count(self, kind, n, level, route):
        if level is None:
            level = n
        if route in ("auto", "closed"):
            try:
                c = self._closed(kind, n, level)
            except ValueError:
                c = None
            if c is not None:
                return c
            if route == "closed":
                raise FitFailed("no closed count for this shape")
        pad = self.q ** (self.dim * (level - n)) if level > n else 1
        cost = self.q ** (self.dim * n)
        cap_h = self.budget if self.budget is not None else HIST_BUDGET
        cap_d = self.budget if self.budget is not None else DIRECT_BUDGET
        if route == "hist" or (route == "auto" and cost <= cap_h):
            t = self._table(n)
            base = t.exact_count(n) if kind == "exact" else t.ordgt_count(n)
            return base * pad
        if route == "direct" or (route == "auto" and cost <= cap_d):
            base = jet_count_direct(
                self.f, n, self.q, target=kind, budget=self.budget
            )
            return base * pad
        raise BudgetExceeded("no counting route fits the budget at n=%d" % n)

    def exact(self, n, level=None, route="auto"):
        return self._count("exact", n, level, route)

    def ordgt(self, n, level=None, route="auto"):
        return self._count("ordgt", n, level, route)


# ---------------------------------------------------------------------------
# symbolic per-axis data
# ---------------------------------------------------------------------------


def shape_atom(f):
    """The leading-locus atom of a recognized shape: mu_a for x^a (a > 1),
    the unit class otherwise; None for unrecognized shapes."""
    shape = classify_shape(_as_poly(f))
    if shape[0] == "monomial":
        a = shape[2]
        if a > 1:
            return Atom("mu%d" % a, a)
        return None
    if shape[0] == "linsum":
        return None
    raise FitFailed("no symbolic stream for shape %r" % (shape[0],))


def _exact_class(f, n):
    """Normalized exact-hit class at level n: count class times L^{-n d}."""
    shape = classify_shape(_as_poly(f))
    if shape[0] == "monomial":
        a = shape[2]
        if n % a:
            return SymbolicClass.zero()
        cls = (
            SymbolicClass.from_atom(Atom("mu%d" % a, a), base="pt")
            if a > 1
            else SymbolicClass.unit()
        )
        return cls.scale(LocRat.L(-(n // a)))
    if shape[0] == "linsum":
        return SymbolicClass.unit().scale(LocRat.L(-n))
    raise FitFailed("no symbolic stream for shape %r" % (shape[0],))


def _ordgt_class(f, n):
    shape = classify_shape(_as_poly(f))
    if shape[0] == "monomial":
        return SymbolicClass.unit().scale(LocRat.L(-(n // shape[2])))
    if shape[0] == "linsum":
        return SymbolicClass.unit().scale(LocRat.L(-n))
    raise FitFailed("no symbolic stream for shape %r" % (shape[0],))


def _lead_slot(f, real):
    """Slot for the exact-hit stream of f, normalized by L^{-nd}.

    Monomial x^a: value(a*t) = [leading locus] * L^{-t}; linear sums have
    period 1 with the unit class.  Normalizing at the own level makes the
    trailing-level padding cancel (validated against the direct route).
    """
    f = _as_poly(f)
    shape = classify_shape(f)
    S = real.scalars
    if real.tag == "symbolic":
        if shape[0] == "monomial":
            a = shape[2]
            ratio = S.from_locrat(LocRat.L(-1))
            atom = shape_atom(f)
            cls = (
                SymbolicClass.from_atom(atom, base="pt")
                if atom is not None
                else SymbolicClass.unit()
            )
            return Slot(EGSeq.single_residue(real, a, 0, ratio, cls))
        if shape[0] == "linsum":
            ratio = S.from_locrat(LocRat.L(-1))
            return Slot(
                EGSeq.single_residue(real, 1, 0, ratio, SymbolicClass.unit())
            )
        raise FitFailed("no symbolic stream for shape %r" % (shape[0],))
    q = real.q
    ratio = Fraction(1, q)
    if shape[0] == "monomial":
        a = shape[2]
        if math.gcd(a, q) != 1:
            raise FitFailed("exponent shares a factor with q")
        g = Fraction(math.gcd(a, q - 1))
        seq = EGSeq.single_residue(real, a, 0, ratio, g)
        aug = EGSeq.single_residue(real, a, 0, ratio, Fraction(1))
        return Slot(seq, aug)
    if shape[0] == "linsum":
        seq = EGSeq.single_residue(real, 1, 0, ratio, Fraction(1))
        return Slot(seq, seq)
    raise FitFailed("no count stream for shape %r" % (shape[0],))


def _trail_slot(f, real):
    """Slot for the order-beyond stream of f, normalized by L^{-nd}:
    value(n) = L^{-floor(n/a)} for x^a, L^{-n} for linear sums.  The
    companion stream equals the value stream (the trailing conditions do
    not see the action on the first factor)."""
    f = _as_poly(f)
    shape = classify_shape(f)
    S = real.scalars
    if shape[0] == "monomial":
        a = shape[2]
        if real.tag == "symbolic":
            ratio = S.from_locrat(LocRat.L(-1))
            one = SymbolicClass.unit()
            seq = EGSeq(real, a, [[(ratio, (one,))] for _ in range(a)])
            return Slot(seq)
        if math.gcd(a, real.q) != 1:
            raise FitFailed("exponent shares a factor with q")
        ratio = Fraction(1, real.q)
        seq = EGSeq(real, a, [[(ratio, (Fraction(1),))] for _ in range(a)])
        return Slot(seq, seq)
    if shape[0] == "linsum":
        if real.tag == "symbolic":
            ratio = S.from_locrat(LocRat.L(-1))
            seq = EGSeq.single_residue(real, 1, 0, ratio, SymbolicClass.unit())
            return Slot(seq)
        ratio = Fraction(1, real.q)
        seq = EGSeq.single_residue(real, 1, 0, ratio, Fraction(1))
        return Slot(seq, seq)
    raise FitFailed("no order-beyond stream for shape %r" % (shape[0],))


# ---------------------------------------------------------------------------
# zeta series
# ---------------------------------------------------------------------------


def _default_vars(r):
    return tuple("TUV"[:r]) if r <= 3 else tuple("T%d" % i for i in range(1, r + 1))


def zeta_trunc(f, D, real, var="T", mode="auto", base="origin", budget=None):
    """Truncated zeta series: coefficient at n is the exact-hit class of
    level-n jets normalized by L^{-nd}, through degree D."""
    f = _as_poly(f)
    d = len(f.vars)
    ent = {}
    if real.tag == "symbolic":
        if base != "origin":
            raise MotzetaError("symbolic zeta is local at the origin")
        for n in range(1, D + 1):
            c = _exact_class(f, n)
            if not c.is_zero():
                ent[(n,)] = c
        return TruncSeries(real, (var,), D, ent)
    q = real.q
    if base == "global":
        _require_prime(q, "global zeta")
        total = {}
        for b in itertools.product(range(q), repeat=d):
            if _eval_point(f, b, q) != 0:
                continue
            fb = _shift_poly(f, dict(zip(sorted(f.vars), b)))
            ax = AxisCounts(fb, q, budget=budget)
            for n in range(1, D + 1):
                total[n] = total.get(n, 0) + ax.exact(n, route=mode)
        for n, c in sorted(total.items()):
            if c:
                ent[(n,)] = Fraction(c, q ** (d * n))
        return TruncSeries(real, (var,), D, ent)
    ax = AxisCounts(f, q, budget=budget)
    route = mode
    for n in range(1, D + 1):
        c = ax.exact(n, route=route)
        if c:
            ent[(n,)] = Fraction(c, q ** (d * n))
    return TruncSeries(real, (var,), D, ent)


def _eval_point(f, b, q):
    val = 0
    vars_ = sorted(f.vars)
    pos = {v: i for i, v in enumerate(vars_)}
    for e, c in f.terms.items():
        t = c % q
        for v, x in zip(f.vars, e):
            t = (t * pow(b[pos[v]], x, q)) % q
        val = (val + t) % q
    return val


def _shift_poly(f, shift):
    """f with each variable v replaced by v + shift[v] (integer shifts)."""
    out = Poly.const(0)
    for e, c in f.terms.items():
        term = Poly.const(c)
        for v, x in zip(f.vars, e):
            term = term * ((Poly.var(v) + Poly.const(shift.get(v, 0))) ** x)
        out = out + term
    return out


def zeta_closed(f, real, var="T"):
    """Closed zeta series for recognized shapes.

    x^a contributes one strand: leading-locus class times
    L^{-k} T^{a k} summed over k >= 1; a sum of distinct linear variables
    behaves like x^1.  Unrecognized shapes raise FitFailed (fit a
    truncation instead).
    """
    f = _as_poly(f)
    shape = classify_shape(f)
    if shape[0] == "monomial":
        a = shape[2]
    elif shape[0] == "linsum":
        a = 1
    else:
        raise FitFailed("no closed zeta for shape %r" % (shape[0],))
    if real.tag == "symbolic":
        atom = shape_atom(f)
        coeff = (
            SymbolicClass.from_atom(atom, base="pt")
            if atom is not None
            else SymbolicClass.unit()
        )
    else:
        q = real.q
        if shape[0] == "monomial":
            if math.gcd(a, q) != 1:
                raise MotzetaError("exponent shares a factor with q")
            coeff = Fraction(math.gcd(a, q - 1))
        else:
            coeff = Fraction(1)
    return ClosedSeries(real, (var,), (Strand(coeff, (0,), ((-1, (a,)),)),))


def multizeta_separable(fs, real, vars=None):
    """The ordered-family zeta as a separable chain block: first axis the
    exact-hit stream, trailing axes the order-beyond streams (all
    normalized at their own level; level padding cancels against the
    normalization, which the direct route validates)."""
    fs = tuple(_as_poly(f) for f in fs)
    if not fs:
        raise ValueError("need at least one function")
    r = len(fs)
    if vars is None:
        vars = _default_vars(r)
    slots = [_lead_slot(fs[0], real)]
    for f in fs[1:]:
        slots.append(_trail_slot(f, real))
    masks = tuple(
        tuple(1 if j == i else 0 for j in range(r)) for i in range(r)
    )
    return SeparableSeries(real, tuple(vars), masks, tuple(slots), region="chain")


def multizeta_trunc(fs, D, real, vars=None, mode="auto", budget=None):
    """Truncated ordered-family zeta: coefficient at a strict chain
    n_1 < .. < n_r is the class of the family locus at level |n|,
    normalized by L^{-|n| d}."""
    fs = tuple(_as_poly(f) for f in fs)
    r = len(fs)
    if vars is None:
        vars = _default_vars(r)
    if r == 0:
        raise ValueError("need at least one function")
    if mode not in ("auto", "separable", "axes"):
        raise ValueError("mode must be auto|separable|axes")
    if mode in ("auto", "separable"):
        try:
            return multizeta_separable(fs, real, vars).expand(D)
        except FitFailed:
            if mode == "separable":
                raise
    if real.tag == "symbolic":
        raise FitFailed("no symbolic streams for these shapes")
    q = real.q
    axes = [AxisCounts(f, q, budget=budget) for f in fs]
    dtot = sum(ax.dim for ax in axes)
    ent = {}

    def rec(i, prev, used, exps):
        if i == r:
            lvl = used
            c = axes[0].exact(exps[0], level=lvl)
            for ax, n in zip(axes[1:], exps[1:]):
                c *= ax.ordgt(n, level=lvl)
            if c:
                ent[tuple(exps)] = Fraction(c, q ** (dtot * lvl))
            return
        lo = prev + 1
        n = lo
        while used + n + _chain_min(r - i - 1, n) <= D:
            rec(i + 1, n, used + n, exps + [n])
            n += 1

    def _chain_min(k, n):
        return sum(n + j + 1 for j in range(k))

    rec(0, 0, 0, [])
    return TruncSeries(real, tuple(vars), D, ent)


def multizeta_direct(fs, D, real, vars=None, budget=None):
    """Definitional route: enumerate the full product of level-|n| jets
    and test the family conditions jointly.  Exponential; oracle only."""
    fs = tuple(_as_poly(f) for f in fs)
    r = len(fs)
    if vars is None:
        vars = _default_vars(r)
    q = real.q
    _require_prime(q, "multizeta_direct")
    dims = [len(f.vars) for f in fs]
    dtot = sum(dims)
    cap = budget if budget is not None else DIRECT_BUDGET
    ent = {}

    def count_chain(exps):
        lvl = sum(exps)
        if q ** (dtot * lvl) > cap:
            raise BudgetExceeded("family enumeration exceeds the budget")
        cnt = 0
        for flat in itertools.product(range(q), repeat=dtot * lvl):
            ok = True
            off = 0
            for i, f in enumerate(fs):
                vars_ = sorted(f.vars)
                jets = {
                    v: list(flat[off + k * lvl : off + (k + 1) * lvl])
                    for k, v in enumerate(vars_)
                }
                off += dims[i] * lvl
                digs = _value_digits(f, jets, exps[i], q)
                want = [0] * (exps[i] + 1)
                if i == 0:
                    want[exps[0]] = 1
                if digs != want:
                    ok = False
                    break
            if ok:
                cnt += 1
        return cnt

    def rec(i, prev, used, exps):
        if i == r:
            c = count_chain(exps)
            if c:
                ent[tuple(exps)] = Fraction(c, q ** (dtot * used))
            return
        n = prev + 1
        while used + n + sum(n + j + 1 for j in range(r - i - 1)) <= D:
            rec(i + 1, n, used + n, exps + [n])
            n += 1

    rec(0, 0, 0, [])
    return TruncSeries(real, tuple(vars), D, ent)


def sum_zeta_pullback(f, g, D, real, var="S", mode="auto", split=False, budget=None):
    """Zeta series of the direct sum f(x) + g(y) restricted to the product
    base point, in one variable; the caller substitutes the variable by a
    monomial when embedding into a larger exponent space.

    split=True additionally returns the per-coefficient decomposition by
    leading orders: A1 (both orders n), A2 (orders differ), A3 (common
    order below n), and Bpair (opposite exact hits), all normalized the
    same way.
    """
    f, g = _as_poly(f), _as_poly(g)
    if set(f.vars) & set(g.vars):
        raise VariableMismatch("summands must use disjoint variables")
    dtot = len(f.vars) + len(g.vars)
    if real.tag == "symbolic":
        if split:
            raise MotzetaError("symbolic splits are not provided")
        h = f.direct_sum(g)
        ent = {}
        for n in range(1, D + 1):
            c = _exact_class(h, n)
            if not c.is_zero():
                ent[(n,)] = c
        return TruncSeries(real, (var,), D, ent)
    q = real.q
    sf, sg = classify_shape(f), classify_shape(g)
    ent = {}
    splits = {"A1": {}, "A2": {}, "A3": {}, "Bpair": {}}
    for n in range(1, D + 1):
        use = mode
        if use == "auto":
            cap = budget if budget is not None else HIST_BUDGET
            cost = max(q ** (len(f.vars) * n), q ** (len(g.vars) * n))
            if (
                sf[0] == "monomial"
                and sg[0] == "monomial"
                and math.gcd(sf[2] * sg[2], q) == 1
            ):
                use = "strata"
            elif cost <= cap:
                use = "hist"
            else:
                use = "direct"
        if use == "strata":
            c = monomial_pair_counts(sf[2], sg[2], n, q)
        elif use == "hist":
            c = histogram_pair_counts(f, g, n, q, budget=budget)
        elif use == "direct":
            c = direct_pair_counts(f, g, n, q, budget=budget)
        else:
            raise ValueError("mode must be auto|strata|hist|direct")
        den = q ** (dtot * n)
        if c["total"]:
            ent[(n,)] = Fraction(c["total"], den)
        for k in splits:
            if c[k]:
                splits[k][(n,)] = Fraction(c[k], den)
    out = TruncSeries(real, (var,), D, ent)
    if not split:
        return out
    parts = {
        k: TruncSeries(real, (var,), D, v) for k, v in splits.items()
    }
    return out, parts


# ---------------------------------------------------------------------------
# resolution-data evaluators
# ---------------------------------------------------------------------------


class Stratum:
    """One stratum of supplied resolution data: its label set, the class
    atom of its cover, and per-member multiplicity vectors and twists."""

    __slots__ = ("labels", "atom", "N", "nu")

    def __init__(self, labels, atom, N, nu):
        self.labels = tuple(str(x) for x in labels)
        self.atom = atom
        self.N = tuple(tuple(int(x) for x in row) for row in N)
        self.nu = tuple(int(x) for x in nu)
        k = len(self.labels)
        if len(self.N) != k or len(self.nu) != k:
            raise ValueError("need one multiplicity row and twist per member")
        if k == 0:
            raise ValueError("empty stratum")
        width = len(self.N[0])
        for row in self.N:
            if len(row) != width:
                raise ValueError("ragged multiplicity rows")
            if any(x < 0 for x in row):
                raise ValueError("multiplicities must be >= 0")
            if not any(row):
                raise ValueError("every member needs a positive multiplicity")
        if any(v < 1 for v in self.nu):
            raise ValueError("twists must be >= 1")

    @property
    def width(self):
        return len(self.N[0])


class ResolutionData:
    __slots__ = ("strata",)

    def __init__(self, strata):
        self.strata = tuple(strata)
        if not self.strata:
            raise ValueError("need at least one stratum")
        w = self.strata[0].width
        if any(s.width != w for s in self.strata):
            raise ValueError("strata disagree on the output arity")

    @property
    def width(self):
        return self.strata[0].width


def parse_resolution(obj):
    """Resolution data from JSON-shaped input: a list of
    {"I": [...labels], "atom": {"name":…, "order":…} | "unit" | null,
     "N": [[...]], "nu": [...]}."""
    strata = []
    for d in obj:
        spec = d.get("atom")
        if spec in (None, "unit", "pt"):
            atom = None
        elif isinstance(spec, str):
            if spec.startswith("mu") and spec[2:].isdigit():
                atom = Atom(spec, int(spec[2:]))
            else:
                atom = Atom(spec, 1)
        else:
            atom = Atom(str(spec["name"]), int(spec.get("order", 1)))
        strata.append(Stratum(d["I"], atom, d["N"], d["nu"]))
    return ResolutionData(strata)


def standard_atom_sets(names):
    """Binding table for the builtin atom names: mu<k>, unit/pt, torus."""
    table = {}
    for name in names:
        if name in ("unit", "pt"):
            table[name] = point()
        elif name == "torus":
            table[name] = torus()
        elif name.startswith("mu") and name[2:].isdigit():
            table[name] = mu_n(int(name[2:]))
        else:
            raise MotzetaError("no builtin presentation for atom %r" % name)
    return table


def _stratum_coeff(st, real, binding):
    kexp = len(st.labels) - 1
    if real.tag == "symbolic":
        cls = (
            SymbolicClass.from_atom(st.atom, base="pt")
            if st.atom is not None
            else SymbolicClass.unit()
        )
        scal = LocRat.from_int(1)
        for _ in range(kexp):
            scal = scal * L_MINUS_1
        return cls.scale(scal)
    q = real.q
    if st.atom is None:
        base = Fraction(1)
    else:
        table = binding or {}
        gs = table.get(st.atom.name)
        if gs is None:
            gs = standard_atom_sets([st.atom.name])[st.atom.name]
        base = Fraction(twisted_count(gs, q, 0))
    return base * Fraction(q - 1) ** kexp


def _cone_for(stratum_index, cone, k):
    if cone is None:
        return None
    if isinstance(cone, ConePieces):
        return cone
    if isinstance(cone, (list, tuple)):
        return cone[stratum_index]
    raise ValueError("cone must be a ConePieces or a per-stratum list")


class ConePieces:
    """A lattice set given as disjoint relatively open unimodular
    simplicial pieces: each piece lists integer generators and an open
    flag per generator (closed flags attach the face spanned without
    that generator's positivity); origin=True adds the single point 0."""

    __slots__ = ("pieces", "origin")

    def __init__(self, pieces, origin=False):
        norm = []
        for gens, flags in pieces:
            gens = tuple(tuple(int(x) for x in g) for g in gens)
            flags = tuple(bool(b) for b in flags)
            if len(gens) != len(flags) or not gens:
                raise ConeNotDecomposed("piece needs generators with flags")
            for g in gens:
                if all(x == 0 for x in g):
                    raise ConeNotDecomposed("zero generator")
                if any(x < 0 for x in g):
                    raise ConeNotDecomposed("generators must be nonnegative")
            norm.append((gens, flags))
        self.pieces = tuple(norm)
        self.origin = bool(origin)

    @classmethod
    def from_json(cls, obj):
        pieces = [
            (p["gens"], p.get("open", [True] * len(p["gens"])))
            for p in obj.get("pieces", [])
        ]
        return cls(pieces, origin=obj.get("origin", False))

    def to_json(self):
        return {
            "pieces": [
                {"gens": [list(g) for g in gens], "open": list(flags)}
                for gens, flags in self.pieces
            ],
            "origin": self.origin,
        }


def dl_eval(res, real, mode="closed", vars=None, D=None, cone=None, binding=None):
    """Evaluate supplied resolution data to a zeta series.

    Without a cone the lattice sum runs over the full positive orthant of
    each stratum and closes into one product of geometric factors per
    stratum (mode "closed"), or a truncated lattice sum (mode "trunc",
    needs D).  With a cone the sum runs over the supplied pieces; closed
    mode requires an explicit decomposition and raises ConeNotDecomposed
    otherwise.
    """
    if not isinstance(res, ResolutionData):
        res = parse_resolution(res)
    r = res.width
    if vars is None:
        vars = _default_vars(r)
    if mode == "closed":
        strands = []
        for si, st in enumerate(res.strata):
            coeff = _stratum_coeff(st, real, binding)
            pieces = _cone_for(si, cone, len(st.labels))
            if pieces is None:
                factors = tuple(
                    (-st.nu[i], st.N[i]) for i in range(len(st.labels))
                )
                strands.append(Strand(coeff, (0,) * r, factors))
                continue
            if not isinstance(pieces, ConePieces):
                raise ConeNotDecomposed(
                    "closed mode needs an explicit piece decomposition"
                )
            for gens, flags in pieces.pieces:
                open_idx = [i for i, b in enumerate(flags) if b]
                closed_idx = [i for i, b in enumerate(flags) if not b]
                for sub in itertools.chain.from_iterable(
                    itertools.combinations(closed_idx, k)
                    for k in range(len(closed_idx) + 1)
                ):
                    chosen = sorted(open_idx + list(sub))
                    factors = []
                    for gi in chosen:
                        g = gens[gi]
                        nv = tuple(
                            sum(g[i] * st.N[i][j] for i in range(len(g)))
                            for j in range(r)
                        )
                        mv = -sum(g[i] * st.nu[i] for i in range(len(g)))
                        if not any(nv):
                            raise ConeNotDecomposed(
                                "a generator maps to exponent zero"
                            )
                        factors.append((mv, nv))
                    strands.append(Strand(coeff, (0,) * r, tuple(factors)))
            if pieces.origin:
                strands.append(Strand(coeff, (0,) * r, ()))
        return ClosedSeries(real, tuple(vars), tuple(strands))
    if mode != "trunc":
        raise ValueError("mode must be 'closed' or 'trunc'")
    if D is None:
        raise ValueError("trunc mode needs a degree bound D")
    V = real.coeffs
    S = real.scalars
    ent = {}

    def add(exp, val):
        if sum(exp) > D:
            return
        ent[exp] = V.add(ent[exp], val) if exp in ent else val

    for si, st in enumerate(res.strata):
        coeff = _stratum_coeff(st, real, binding)
        k = len(st.labels)

        def emit(kvec):
            exp = tuple(
                sum(kvec[i] * st.N[i][j] for i in range(k)) for j in range(r)
            )
            if sum(exp) > D:
                return False
            tw = -sum(kvec[i] * st.nu[i] for i in range(k))
            scal = S.from_locrat(LocRat.L(tw)) if real.tag == "symbolic" else Fraction(real.q) ** tw
            add(exp, V.scale(scal, coeff))

        pieces = _cone_for(si, cone, k)
        if pieces is None:

            def rec(i, kvec):
                if i == k:
                    emit(tuple(kvec))
                    return
                c = 1
                while True:
                    kvec.append(c)
                    exp_min = sum(
                        kvec[t] * sum(st.N[t]) for t in range(len(kvec))
                    ) + sum(sum(st.N[t]) for t in range(len(kvec), k))
                    if exp_min > D:
                        kvec.pop()
                        break
                    rec(i + 1, kvec)
                    kvec.pop()
                    c += 1

            rec(0, [])
        else:
            if not isinstance(pieces, ConePieces):
                raise ValueError("trunc mode needs ConePieces as well")
            for gens, flags in pieces.pieces:
                m = len(gens)

                def recp(i, cvec):
                    if i == m:
                        kvec = tuple(
                            sum(cvec[t] * gens[t][i2] for t in range(m))
                            for i2 in range(len(gens[0]))
                        )
                        emit(kvec)
                        return
                    c = 1 if flags[i] else 0
                    while True:
                        cvec.append(c)
                        kmin = [
                            sum(
                                cvec[t] * gens[t][i2]
                                for t in range(len(cvec))
                            )
                            + sum(
                                (1 if flags[t] else 0) * gens[t][i2]
                                for t in range(len(cvec), m)
                            )
                            for i2 in range(len(gens[0]))
                        ]
                        dmin = sum(
                            kmin[i2] * sum(st.N[i2][j] for j in range(r))
                            for i2 in range(len(kmin))
                        )
                        if dmin > D:
                            cvec.pop()
                            break
                        recp(i + 1, cvec)
                        cvec.pop()
                        c += 1

                recp(0, [])
            if pieces.origin:
                add((0,) * r, V.scale(S.one, coeff))
    return TruncSeries(real, tuple(vars), D, ent)


def cone_euler(spec):
    """Signed piece count of a relatively open decomposition: each open
    piece contributes (-1)^{number of generators}; the origin point adds
    +1.  Closed face flags mean the decomposition is not relatively open."""
    if not isinstance(spec, ConePieces):
        spec = ConePieces.from_json(spec)
    total = 1 if spec.origin else 0
    for gens, flags in spec.pieces:
        if not all(flags):
            raise ConeNotDecomposed(
                "euler evaluation needs relatively open pieces"
            )
        total += (-1) ** len(gens)
    return total


def _solve_in_piece(gens, flags, pt):
    """Exact coordinates of pt in the (independent) generator basis, or
    None when pt is outside the piece."""
    m = len(gens)
    dim = len(pt)
    rows = [[Fraction(gens[t][i]) for t in range(m)] for i in range(dim)]
    rhs = [Fraction(pt[i]) for i in range(dim)]
    piv = []
    r = 0
    for c in range(m):
        sel = next((i for i in range(r, dim) if rows[i][c] != 0), None)
        if sel is None:
            return None
        rows[r], rows[sel] = rows[sel], rows[r]
        rhs[r], rhs[sel] = rhs[sel], rhs[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        rhs[r] = rhs[r] * inv
        for i in range(dim):
            if i != r and rows[i][c] != 0:
                fac = rows[i][c]
                rows[i] = [x - fac * y for x, y in zip(rows[i], rows[r])]
                rhs[i] = rhs[i] - fac * rhs[r]
        piv.append(c)
        r += 1
    for i in range(r, dim):
        if rhs[i] != 0:
            return None
    coeffs = [rhs[i] for i in range(m)]
    for c, b in zip(coeffs, flags):
        if c.denominator != 1:
            return None
        if b and c < 1:
            return None
        if not b and c < 0:
            return None
    return coeffs


def validate_cone(spec, member, bound, dim=None):
    """Check the supplied decomposition against a membership predicate on
    every lattice point of the [0, bound]^dim box: each member must lie in
    exactly one piece (or be the origin with the origin flag), each
    non-member in none.  Raises ConeNotDecomposed with a witness."""
    if not isinstance(spec, ConePieces):
        spec = ConePieces.from_json(spec)
    if dim is None:
        if not spec.pieces:
            raise ValueError("dim is needed when there are no pieces")
        dim = len(spec.pieces[0][0][0])
    for pt in itertools.product(range(bound + 1), repeat=dim):
        hits = 0
        if spec.origin and not any(pt):
            hits += 1
        for gens, flags in spec.pieces:
            if _solve_in_piece(gens, flags, pt) is not None:
                hits += 1
        want = 1 if member(pt) else 0
        if hits != want:
            raise ConeNotDecomposed(
                "point %r covered %d times, membership %d" % (pt, hits, want)
            )
    return True


# ---------------------------------------------------------------------------
# nearby cycles
# ---------------------------------------------------------------------------


def diagonal_closed(s, var="T"):
    """Diagonal substitution of a closed series: every variable becomes
    the same one; factor exponent vectors collapse to their totals."""
    if not isinstance(s, ClosedSeries):
        raise NotLimitNormal("diagonal substitution needs a closed series")
    strands = []
    for st in s.strands:
        b = (sum(st.b),)
        factors = tuple((m, (sum(nv),)) for m, nv in st.factors)
        strands.append(Strand(st.coeff, b, factors))
    return ClosedSeries(s.real, (var,), tuple(strands))


def nearby_cycles(s, var="T"):
    """Minus the limit of the diagonal substitution; closed input only."""
    if not isinstance(s, ClosedSeries):
        raise NotLimitNormal(
            "nearby cycles need a closed series; fit a closed form first"
        )
    val = lim_infty(diagonal_closed(s, var))
    return s.real.coeffs.neg(val)


# ---------------------------------------------------------------------------
# prime selection
# ---------------------------------------------------------------------------


def default_q(orders=(), avoid=()):
    """Smallest prime q with every listed order dividing q-1 and q
    coprime to every listed integer."""
    need = 1
    for o in orders:
        need = need * o // math.gcd(need, o)
    q = 2
    while True:
        if (
            _is_prime(q)
            and (q - 1) % need == 0
            and all(math.gcd(q, a) == 1 for a in avoid if a)
        ):
            return q
        q += 1


def required_orders(fs):
    """Action orders and characteristic exclusions for a family of
    recognized shapes (used for automatic prime selection)."""
    orders = set()
    avoid = set()
    for f in fs:
        f = _as_poly(f)
        shape = classify_shape(f)
        if shape[0] == "monomial":
            orders.add(shape[2])
            avoid.add(shape[2])
        elif shape[0] == "linsum":
            for c in shape[1]:
                avoid.add(abs(c))
        else:
            for e, c in f.terms.items():
                avoid.add(abs(c))
                orders.add(max(sum(e), 1))
                avoid.add(max(sum(e), 1))
    return sorted(orders), sorted(avoid)
