"""Finite fields F_{p^m} with exact arithmetic and roots of unity.

Prime fields use plain integers mod p.  Extensions use coefficient tuples
modulo a fixed irreducible polynomial, found deterministically from a seeded
search so repeated runs agree.  Multiplicative generators come from factoring
p^m - 1 (cyclotomic split, then trial division plus Pollard rho).
"""

from __future__ import annotations

import math
import random

from .locring import _cyclotomic


def _is_probable_prime(n):
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n, rng):
    if n % 2 == 0:
        return 2
    while True:
        x = rng.randrange(2, n)
        y, c, d = x, rng.randrange(1, n), 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d


def factor_int(n):
    """Prime factorization as a sorted list of (prime, exponent)."""
    out = {}
    rng = random.Random(0xFAC70B ^ n)
    stack = [n]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if _is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        f = None
        for p in range(2, 10000):
            if m % p == 0:
                f = p
                break
        if f is None:
            f = _pollard_rho(m, rng)
        stack.append(f)
        stack.append(m // f)
    return sorted(out.items())


def _factor_q_minus_1(p, m):
    """Prime factors of p^m - 1, split along cyclotomic values first."""
    primes = set()
    for d in range(1, m + 1):
        if m % d:
            continue
        val = _cyclotomic(d).eval_at(p)
        v = int(val)
        if v > 1:
            primes.update(f for f, _ in factor_int(v))
    return sorted(primes)


class Field:
    """F_{p^m}.  Elements are ints for m=1, coefficient tuples for m>1."""

    def __init__(self, p, m=1):
        if not _is_probable_prime(p):
            raise ValueError("characteristic must be prime, got %d" % p)
        self.p = p
        self.m = m
        self.order = p**m
        if m == 1:
            self.zero = 0
            self.one = 1
            self.modulus = None
        else:
            self.modulus = self._find_irreducible()
            self.zero = (0,) * m
            self.one = (1,) + (0,) * (m - 1)
        self._generator = None

    # -- construction ---------------------------------------------------------

    def _poly_mulmod(self, a, b):
        p, m, mod = self.p, self.m, self.modulus
        out = [0] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        out[i + j] = (out[i + j] + x * y) % p
        # Reduce by the monic modulus of degree m.
        for i in range(2 * m - 2, m - 1, -1):
            c = out[i]
            if c:
                out[i] = 0
                for j in range(m):
                    out[i - m + j] = (out[i - m + j] - c * mod[j]) % p
        return tuple(out[:m])

    def _find_irreducible(self):
        # Deterministic seeded search; Rabin's test: x^(p^m) = x mod f and
        # gcd(x^(p^(m/r)) - x, f) = 1 for each prime r | m.
        p, m = self.p, self.m
        rng = random.Random((p << 20) ^ m ^ 0x1E55)

        def polymod(a, f):
            a = list(a)
            df = len(f) - 1
            while len(a) - 1 >= df:
                c = a[-1]
                k = len(a) - 1 - df
                if c:
                    for j in range(df + 1):
                        a[k + j] = (a[k + j] - c * f[j]) % p
                a.pop()
            # strip trailing zeros so callers see the true degree
            while a and a[-1] == 0:
                a.pop()
            return a

        def polymulmod(a, b, f):
            out = [0] * (len(a) + len(b) - 1) if a and b else [0]
            for i, x in enumerate(a):
                if x:
                    for j, y in enumerate(b):
                        if y:
                            out[i + j] = (out[i + j] + x * y) % p
            return polymod(out, f)

        def polypowmod_x(q, f):
            # x^q mod f by square and multiply.
            result = [1]
            base = polymod([0, 1], f)
            e = q
            while e:
                if e & 1:
                    result = polymulmod(result, base, f)
                base = polymulmod(base, base, f)
                e >>= 1
            return result

        def polysub(a, b):
            out = [0] * max(len(a), len(b))
            for i, x in enumerate(a):
                out[i] = x
            for i, x in enumerate(b):
                out[i] = (out[i] - x) % p
            while out and out[-1] == 0:
                out.pop()
            return out

        def polygcd(a, b):
            a, b = list(a), list(b)
            while b and b[-1] == 0:
                b.pop()
            while b:
                # a mod b with b made monic
                inv = pow(b[-1], p - 2, p)
                bm = [(c * inv) % p for c in b]
                r = polymod(a, bm)
                a, b = b, r
            return a

        mfac = [r for r, _ in factor_int(m)]
        while True:
            f = [rng.randrange(p) for _ in range(m)] + [1]
            if f[0] == 0:
                continue
            xq = polypowmod_x(p**m, f)
            if polysub(xq, [0, 1]):
                continue
            ok = True
            for r in mfac:
                xqr = polypowmod_x(p ** (m // r), f)
                g = polygcd(f, polysub(xqr, [0, 1]))
                if len(g) - 1 > 0:
                    ok = False
                    break
            if ok:
                return tuple(f[:m])

    # -- arithmetic -----------------------------------------------------------

    def add(self, a, b):
        if self.m == 1:
            return (a + b) % self.p
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def sub(self, a, b):
        if self.m == 1:
            return (a - b) % self.p
        return tuple((x - y) % self.p for x, y in zip(a, b))

    def neg(self, a):
        if self.m == 1:
            return (-a) % self.p
        return tuple((-x) % self.p for x in a)

    def mul(self, a, b):
        if self.m == 1:
            return (a * b) % self.p
        return self._poly_mulmod(a, b)

    def scale(self, c, a):
        """Multiply by an integer scalar."""
        c %= self.p
        if self.m == 1:
            return (c * a) % self.p
        return tuple((c * x) % self.p for x in a)

    def pow(self, a, e):
        if e < 0:
            return self.pow(self.inv(a), -e)
        out, base = self.one, a
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def inv(self, a):
        if a == self.zero:
            raise ZeroDivisionError("inverse of zero field element")
        return self.pow(a, self.order - 2)

    def from_int(self, c):
        c %= self.p
        if self.m == 1:
            return c
        return (c,) + (0,) * (self.m - 1)

    def is_zero(self, a):
        return a == self.zero

    def frob(self, a, q):
        """Frobenius x -> x^q."""
        return self.pow(a, q)

    def elements(self):
        if self.m == 1:
            return list(range(self.p))
        out = [self.zero]
        g = self.generator()
        x = self.one
        for _ in range(self.order - 1):
            out.append(x)
            x = self.mul(x, g)
        return out

    # -- multiplicative structure ----------------------------------------------

    def generator(self):
        if self._generator is not None:
            return self._generator
        primes = _factor_q_minus_1(self.p, self.m)
        n = self.order - 1
        rng = random.Random((self.p << 24) ^ self.m ^ 0x6E6)
        while True:
            if self.m == 1:
                cand = rng.randrange(2, self.p)
            else:
                cand = tuple(rng.randrange(self.p) for _ in range(self.m))
                if cand == self.zero:
                    continue
            if all(self.pow(cand, n // r) != self.one for r in primes):
                self._generator = cand
                return cand

    def root_of_unity(self, n):
        """A fixed primitive n-th root of unity; requires n | p^m - 1."""
        if (self.order - 1) % n:
            raise ValueError(
                "no %d-th roots of unity in F_%d" % (n, self.order)
            )
        return self.pow(self.generator(), (self.order - 1) // n)


def multiplicative_order(q, n):
    """Smallest M >= 1 with q^M = 1 mod n (q, n coprime)."""
    if n == 1:
        return 1
    if math.gcd(q, n) != 1:
        raise ValueError("q and n must be coprime")
    m, x = 1, q % n
    while x != 1:
        x = (x * q) % n
        m += 1
    return m


_FIELD_CACHE = {}


def get_field(p, m=1):
    key = (p, m)
    if key not in _FIELD_CACHE:
        _FIELD_CACHE[key] = Field(p, m)
    return _FIELD_CACHE[key]


def splitting_field(q, n):
    """The field F_{q^M} containing the n-th roots of unity, for prime q."""
    M = multiplicative_order(q, n) if n > 1 else 1
    return get_field(q, M)
