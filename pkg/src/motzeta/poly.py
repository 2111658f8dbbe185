"""Multivariate integer polynomials over named variables.

One representation serves three jobs: CLI input parsing, equations of
geometric presentations, and the coefficient-extraction polynomials produced
by composing a polynomial with truncated jet expansions of its variables.

Variables are lowercase identifiers [a-z][a-z0-9]*.  Terms map exponent
vectors to integer coefficients; the variable tuple is kept sorted so equal
polynomials compare equal structurally.
"""

from __future__ import annotations

from .errors import ParseError, UnknownToken, VariableMismatch


class Poly:
    __slots__ = ("vars", "terms")

    def __init__(self, vars=(), terms=None):
        vars = tuple(vars)
        terms = {tuple(e): c for e, c in (terms or {}).items() if c != 0}
        # Keep variables sorted and drop unused ones for canonical form.
        used = [i for i in range(len(vars)) if any(e[i] for e in terms)]
        if len(used) != len(vars) or list(vars) != sorted(vars):
            kept = sorted(used, key=lambda i: vars[i])
            new_vars = tuple(vars[i] for i in kept)
            new_terms = {}
            for e, c in terms.items():
                ne = tuple(e[i] for i in kept)
                new_terms[ne] = new_terms.get(ne, 0) + c
            vars, terms = new_vars, {e: c for e, c in new_terms.items() if c}
        self.vars = vars
        self.terms = terms

    @classmethod
    def const(cls, c):
        return cls((), {(): c} if c else {})

    @classmethod
    def var(cls, name, exp=1):
        if exp == 0:
            return cls.const(1)
        return cls((name,), {(exp,): 1})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.vars == other.vars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def _aligned(self, other):
        av = sorted(set(self.vars) | set(other.vars))
        index = {v: i for i, v in enumerate(av)}
        k = len(av)

        def remap(p):
            pos = [index[v] for v in p.vars]
            out = {}
            for e, c in p.terms.items():
                ne = [0] * k
                for i, x in enumerate(e):
                    ne[pos[i]] = x
                out[tuple(ne)] = c
            return out

        return av, remap(self), remap(other)

    def __add__(self, other):
        if isinstance(other, int):
            other = Poly.const(other)
        av, a, b = self._aligned(other)
        for e, c in b.items():
            w = a.get(e, 0) + c
            if w:
                a[e] = w
            else:
                a.pop(e, None)
        return Poly(av, a)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = Poly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return Poly(self.vars, {e: c * other for e, c in self.terms.items()})
        av, a, b = self._aligned(other)
        out = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                w = out.get(e, 0) + c1 * c2
                if w:
                    out[e] = w
                else:
                    out.pop(e, None)
        return Poly(av, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative polynomial power")
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def total_degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def constant_term(self):
        key = (0,) * len(self.vars)
        return self.terms.get(key, 0)

    def as_monomial(self):
        """Return (coeff, var, exp) when this is c*v^e in one variable."""
        if len(self.terms) != 1 or len(self.vars) != 1:
            return None
        (e,), c = next(iter(self.terms.items()))
        return (c, self.vars[0], e)

    def rename(self, mapping):
        return Poly(tuple(mapping.get(v, v) for v in self.vars), self.terms)

    def direct_sum(self, other):
        """f(x) + g(y) on disjoint variable sets."""
        overlap = set(self.vars) & set(other.vars)
        if overlap:
            raise VariableMismatch(
                "direct sum needs disjoint variables; shared: %s"
                % ", ".join(sorted(overlap))
            )
        return self + other

    def render(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda t: (-sum(t), t)):
            c = self.terms[e]
            factors = []
            for v, x in zip(self.vars, e):
                if x == 1:
                    factors.append(v)
                elif x > 1:
                    factors.append("%s^%d" % (v, x))
            body = "*".join(factors)
            if not body:
                body = str(abs(c))
            elif abs(c) != 1:
                body = "%d*%s" % (abs(c), body)
            parts.append(("-" if c < 0 else "+", body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += " %s %s" % (sign, body)
        return text

    def __repr__(self):
        return "Poly(%s)" % self.render()

    # -- composition with jet expansions -------------------------------------

    def compose_jet(self, depth, namer=None, with_base=False):
        """Coefficients of f(phi(t)) mod t^{depth+1} for generic jets.

        Each variable v is replaced by v_1*t + v_2*t^2 + ... + v_depth*t^depth
        (jet based at the origin).  Returns a list of Poly of length depth+1:
        entry m is the coefficient of t^m, a polynomial in the jet variables
        named namer(v, j) (default "v_j").  with_base adds a free constant
        coefficient v_0 to every jet (jets based at a variable point).
        """
        if namer is None:
            namer = lambda v, j: "%s_%d" % (v, j)

        def series_mul(a, b):
            out = [Poly.const(0)] * (depth + 1)
            for i in range(depth + 1):
                if a[i].is_zero():
                    continue
                for j in range(depth + 1 - i):
                    if b[j].is_zero():
                        continue
                    out[i + j] = out[i + j] + a[i] * b[j]
            return out

        jets = {}
        for v in self.vars:
            s = [Poly.const(0)] * (depth + 1)
            if with_base:
                s[0] = Poly.var(namer(v, 0))
            for j in range(1, depth + 1):
                s[j] = Poly.var(namer(v, j))
            jets[v] = s

        total = [Poly.const(0)] * (depth + 1)
        for e, c in self.terms.items():
            term = [Poly.const(0)] * (depth + 1)
            term[0] = Poly.const(c)
            for v, x in zip(self.vars, e):
                for _ in range(x):
                    term = series_mul(term, jets[v])
            for m in range(depth + 1):
                total[m] = total[m] + term[m]
        return total


# --- parsing (the CLI expression grammar) ------------------------------------


def _tokenize(src):
    tokens = []
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(src) and src[j].isdigit():
                j += 1
            tokens.append(("int", int(src[i:j]), i))
            i = j
        elif "a" <= ch <= "z":
            j = i + 1
            while j < len(src) and (src[j].isdigit() or "a" <= src[j] <= "z"):
                j += 1
            tokens.append(("ident", src[i:j], i))
            i = j
        elif ch in "+-*^()":
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise UnknownToken("unknown character %r" % ch, i)
    tokens.append(("end", None, len(src)))
    return tokens


def parse_poly(src):
    """Parse an integer polynomial expression.

    Grammar: variables [a-z][a-z0-9]*, integer literals, +, -, *, ^ with
    ^ binding tightest and right-associative, and parentheses.  Raises
    ParseError carrying the offending position.
    """
    tokens = _tokenize(src)
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def expect(kind):
        tok = peek()
        if tok[0] != kind:
            raise ParseError("expected %s, found %r" % (kind, tok[1]), tok[2])
        return advance()

    def parse_atom():
        tok = peek()
        if tok[0] == "int":
            advance()
            return Poly.const(tok[1])
        if tok[0] == "ident":
            advance()
            return Poly.var(tok[1])
        if tok[0] == "(":
            advance()
            inner = parse_expr()
            expect(")")
            return inner
        raise ParseError("expected a value, found %r" % (tok[1],), tok[2])

    def parse_power():
        base = parse_atom()
        if peek()[0] == "^":
            op = advance()
            tok = peek()
            if tok[0] != "int":
                raise ParseError(
                    "expected an integer exponent after '^', found %r" % (tok[1],),
                    tok[2],
                )
            # Right-associative exponent chains fold in the integers.
            exps = [advance()[1]]
            while peek()[0] == "^":
                advance()
                t2 = peek()
                if t2[0] != "int":
                    raise ParseError(
                        "expected an integer exponent after '^', found %r"
                        % (t2[1],),
                        t2[2],
                    )
                exps.append(advance()[1])
            e = exps[-1]
            for x in reversed(exps[:-1]):
                e = x**e
            del op
            return base**e
        return base

    def parse_unary():
        neg = False
        while peek()[0] in ("+", "-"):
            if advance()[0] == "-":
                neg = not neg
        p = parse_power()
        return -p if neg else p

    def parse_term():
        p = parse_unary()
        while peek()[0] == "*":
            advance()
            p = p * parse_unary()
        return p

    def parse_expr():
        p = parse_term()
        while peek()[0] in ("+", "-"):
            if advance()[0] == "+":
                p = p + parse_term()
            else:
                p = p - parse_term()
        return p

    out = parse_expr()
    tok = peek()
    if tok[0] != "end":
        raise ParseError("unexpected %r" % (tok[1],), tok[2])
    return out
