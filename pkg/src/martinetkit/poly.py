"""Exact sparse polynomials over the rationals in three variables x, y, z.

Terms are stored as a dict mapping exponent triples to nonzero Fractions.
One variable may optionally be marked as Laurent, in which case its
exponents are allowed to be negative (needed for blow-up pullbacks).

Variables are referred to by 1-based index (1 = x, 2 = y, 3 = z) or by
name ('x', 'y', 'z', 'x1', 'x2', 'x3').
"""
from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd as _igcd
from numbers import Rational

__all__ = [
    "Poly",
    "ParseError",
    "UnknownVariableError",
    "NegativeExponentError",
    "NotDivisibleError",
    "parse",
    "diff",
    "substitute",
    "divide_exact",
    "divmod_poly",
    "gcd",
    "squarefree_part",
    "var_index",
    "VAR_NAMES",
]

VAR_NAMES = ("x", "y", "z")
_ALIASES = {"x": 0, "y": 1, "z": 2, "x1": 0, "x2": 1, "x3": 2}


class NotDivisibleError(ArithmeticError):
    """Raised by divide_exact when the quotient is not a polynomial."""


def var_index(v) -> int:
    """Return the 0-based slot for a 1-based index or a variable name."""
    if isinstance(v, str):
        try:
            return _ALIASES[v]
        except KeyError:
            raise ValueError(f"unknown variable {v!r}") from None
    if isinstance(v, int) and 1 <= v <= 3:
        return v - 1
    raise ValueError(f"variable index must be 1, 2 or 3, got {v!r}")


def _grlex_key(e):
    return (e[0] + e[1] + e[2], e)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    raise TypeError(f"coefficient must be rational, got {type(c).__name__}")


class Poly:
    """Immutable sparse polynomial with rational coefficients."""

    __slots__ = ("_terms", "_laurent", "_hash", "_num")

    def __init__(self, terms=None, laurent_var=None):
        clean = {}
        if terms:
            for e, c in terms.items():
                c = _as_fraction(c)
                if c:
                    e = tuple(int(k) for k in e)
                    if len(e) != 3:
                        raise ValueError("exponent tuples must have length 3")
                    clean[e] = c
        if laurent_var is not None:
            laurent_var = var_index(laurent_var) + 1
        for e in clean:
            for i in range(3):
                if e[i] < 0 and laurent_var != i + 1:
                    raise NegativeExponentError(
                        f"negative exponent in {VAR_NAMES[i]} outside a Laurent context")
        self._terms = clean
        self._laurent = laurent_var
        self._hash = None
        self._num = None

    # construction helpers
    @classmethod
    def const(cls, c, laurent_var=None) -> Poly:
        return cls({(0, 0, 0): c}, laurent_var)

    @classmethod
    def zero(cls, laurent_var=None) -> Poly:
        return cls({}, laurent_var)

    @classmethod
    def one(cls, laurent_var=None) -> Poly:
        return cls.const(1, laurent_var)

    @classmethod
    def var(cls, v, power=1, laurent_var=None) -> Poly:
        e = [0, 0, 0]
        e[var_index(v)] = power
        return cls({tuple(e): 1}, laurent_var)

    @classmethod
    def monomial(cls, exps, coef=1, laurent_var=None) -> Poly:
        return cls({tuple(exps): coef}, laurent_var)

    # basic accessors
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def laurent_var(self):
        return self._laurent

    def items(self):
        """Terms in descending graded-lex order."""
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(e == (0, 0, 0) for e in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((0, 0, 0), Fraction(0))

    def is_laurent(self) -> bool:
        """True if some exponent is actually negative."""
        return any(min(e) < 0 for e in self._terms)

    def degree(self) -> int:
        """Total degree (-1 for the zero polynomial)."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def degree_in(self, v) -> int:
        i = var_index(v)
        if not self._terms:
            return -1
        return max(e[i] for e in self._terms)

    def min_exponent(self, v) -> int:
        i = var_index(v)
        if not self._terms:
            return 0
        return min(e[i] for e in self._terms)

    def variables(self) -> tuple:
        """1-based indices of the variables that actually occur."""
        return tuple(i + 1 for i in range(3) if any(e[i] for e in self._terms))

    def leading_term(self):
        """(exponent, coefficient) of the graded-lex leading term."""
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        e = max(self._terms, key=_grlex_key)
        return e, self._terms[e]

    def with_laurent(self, v) -> Poly:
        """Same polynomial, tagged as Laurent in v (or untagged for None)."""
        return Poly(self._terms, v)

    def _join_laurent(self, other: Poly):
        a, b = self._laurent, other._laurent
        if a is None:
            return b
        if b is None or a == b:
            return a
        raise ValueError(f"incompatible Laurent variables {VAR_NAMES[a - 1]} and {VAR_NAMES[b - 1]}")

    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Rational)):
            return Poly.const(other)
        return NotImplemented

    # ring operations
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        lv = self._join_laurent(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly(out, lv)

    __radd__ = __add__

    def __neg__(self):
        return Poly({e: -c for e, c in self._terms.items()}, self._laurent)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        lv = self._join_laurent(other)
        out = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(out, lv)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # only division by a nonzero rational constant is a polynomial operation
        if isinstance(other, Poly):
            if not other.is_constant() or other.is_zero():
                return NotImplemented
            other = other.constant_value()
        if isinstance(other, (int, Rational)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            inv = Fraction(1) / Fraction(other)
            return Poly({e: c * inv for e, c in self._terms.items()}, self._laurent)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            if isinstance(n, int) and len(self._terms) == 1:
                # negative power of a monomial stays inside the Laurent ring
                (e, c), = self._terms.items()
                return Poly({tuple(k * n for k in e): Fraction(c) ** n}, self._laurent)
            raise ValueError("only nonnegative integer powers of non-monomials")
        result = Poly.one(self._laurent)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self._terms == other._terms
        if isinstance(other, (int, Rational)):
            return self._terms == Poly.const(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # calculus and composition
    def diff(self, v) -> Poly:
        i = var_index(v)
        out = {}
        for e, c in self._terms.items():
            k = e[i]
            if k:
                ne = list(e)
                ne[i] = k - 1
                out[tuple(ne)] = c * k
        return Poly(out, self._laurent)

    def gradient(self):
        return tuple(self.diff(i) for i in (1, 2, 3))

    def subs(self, images) -> Poly:
        """Compose with three image polynomials: p(images[0], images[1], images[2])."""
        images = [img if isinstance(img, Poly) else Poly.const(img) for img in images]
        if len(images) != 3:
            raise ValueError("need exactly three images")
        lv = None
        for img in images:
            lv = img._join_laurent(Poly({}, lv))
        cache = [{}, {}, {}]

        def power(i, k):
            if k not in cache[i]:
                cache[i][k] = images[i] ** k
            return cache[i][k]

        result = Poly.zero(lv)
        for e, c in self._terms.items():
            term = Poly.const(c, lv)
            for i in range(3):
                if e[i]:
                    term = term * power(i, e[i])
            result = result + term
        return result

    def shift(self, v, k: int) -> Poly:
        """Multiply by the monomial v^k (k may be negative)."""
        i = var_index(v)
        out = {}
        for e, c in self._terms.items():
            ne = list(e)
            ne[i] += k
            out[tuple(ne)] = c
        lv = self._laurent
        if lv is None and any(ne[i] < 0 for ne in out):
            lv = i + 1
        return Poly(out, lv)

    # numeric evaluation
    def __call__(self, x, y, z):
        return self.evaluate((x, y, z))

    def evaluate(self, p) -> float:
        """Double precision value at the point p."""
        x, y, z = (float(v) for v in p)
        if self._num is None:
            self._num = [(float(c), e[0], e[1], e[2]) for e, c in self._terms.items()]
        if self._laurent is not None and (x, y, z)[self._laurent - 1] == 0.0 and self.is_laurent():
            raise ZeroDivisionError(f"pole: Laurent variable {VAR_NAMES[self._laurent - 1]} is zero")
        s = 0.0
        for c, a, b, d in self._num:
            s += c * x ** a * y ** b * z ** d
        return s

    def evaluate_exact(self, p) -> Fraction:
        """Exact rational value at a point given by rationals (floats convert exactly)."""
        q = [Fraction(v) for v in p]
        s = Fraction(0)
        for e, c in self._terms.items():
            t = c
            for i in range(3):
                if e[i]:
                    if q[i] == 0 and e[i] < 0:
                        raise ZeroDivisionError("pole at evaluation point")
                    t *= q[i] ** e[i]
            s += t
        return s

    # normalization
    def primitive(self) -> Poly:
        """Integer coefficients with unit content and positive leading coefficient."""
        if not self._terms:
            return self
        den = reduce(lambda a, b: a * b // _igcd(a, b), (c.denominator for c in self._terms.values()))
        nums = [int(c * den) for c in self._terms.values()]
        g = reduce(_igcd, (abs(n) for n in nums))
        _, lc = self.leading_term()
        sign = 1 if lc > 0 else -1
        scale = Fraction(den * sign, g)
        return Poly({e: c * scale for e, c in self._terms.items()}, self._laurent)

    def monic(self) -> Poly:
        _, lc = self.leading_term()
        return self / lc

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        lv = "" if self._laurent is None else f", laurent={VAR_NAMES[self._laurent - 1]}"
        return f"Poly('{format_poly(self)}'{lv})"


# ---------------------------------------------------------------- printing

def _format_monomial(e) -> str:
    parts = []
    for name, k in zip(VAR_NAMES, e):
        if k == 1:
            parts.append(name)
        elif k:
            parts.append(f"{name}^{k}")
    return "*".join(parts)


def _format_coef(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def format_poly(p: Poly) -> str:
    if p.is_zero():
        return "0"
    out = []
    for idx, (e, c) in enumerate(p.items()):
        neg = c < 0
        a = -c if neg else c
        mono = _format_monomial(e)
        if not mono:
            body = _format_coef(a)
        elif a == 1:
            body = mono
        else:
            body = f"{_format_coef(a)}*{mono}"
        if idx == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


# ----------------------------------------------------------------- parsing

class ParseError(ValueError):
    """Syntax error in a polynomial expression, with the byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class UnknownVariableError(ParseError):
    pass


class NegativeExponentError(ParseError):
    def __init__(self, message, offset=None):
        if offset is None:
            ValueError.__init__(self, message)
            self.message = message
            self.offset = None
        else:
            super().__init__(message, offset)


def _tokenize(text: str):
    """Yield (kind, value, byte_offset). Kinds: num, name, op, end."""
    data = text.encode("utf-8")
    i, n = 0, len(data)
    tokens = []
    while i < n:
        ch = data[i:i + 1]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and data[j:j + 1].isdigit():
                j += 1
            tokens.append(("num", int(data[i:j]), i))
            i = j
        elif ch.isalpha() or ch == b"_":
            j = i
            while j < n and (data[j:j + 1].isalnum() or data[j:j + 1] == b"_"):
                j += 1
            tokens.append(("name", data[i:j].decode("utf-8"), i))
            i = j
        elif ch in (b"+", b"-", b"*", b"/", b"^", b"(", b")"):
            tokens.append(("op", ch.decode(), i))
            i += 1
        else:
            raise ParseError(f"unexpected character {data[i:i + 1].decode('utf-8', 'replace')!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := ('+'|'-') unary | power
    # power  := atom ('^' exponent)?
    # atom   := number | name | '(' expr ')'

    def __init__(self, text, laurent_var):
        self.toks = _tokenize(text)
        self.pos = 0
        self.laurent = None if laurent_var is None else var_index(laurent_var) + 1

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", off)

    def parse(self) -> Poly:
        kind, _, off = self.peek()
        if kind == "end":
            raise ParseError("empty expression", off)
        p = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", off)
        return p

    def expr(self):
        p = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                q = self.term()
                p = p + q if val == "+" else p - q
            else:
                return p

    def term(self):
        p = self.unary()
        while True:
            kind, val, off = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                q_off = self.peek()[2]
                q = self.unary()
                if val == "*":
                    p = p * q
                else:
                    if not q.is_constant():
                        raise ParseError("division by a non-constant expression", q_off)
                    if q.is_zero():
                        raise ParseError("division by zero", q_off)
                    p = p / q.constant_value()
            elif kind in ("num", "name") or (kind == "op" and val == "("):
                raise ParseError("missing operator (use '*' for products)", off)
            else:
                return p

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            p = self.unary()
            return -p if val == "-" else p
        return self.power()

    def power(self):
        base_off = self.peek()[2]
        p = self.atom()
        kind, val, off = self.peek()
        if kind == "op" and val == "^":
            self.take()
            neg = False
            kind, val, off = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                neg = val == "-"
                kind, val, off = self.peek()
            if kind != "num":
                raise ParseError("exponent must be an integer literal", off)
            self.take()
            k = -val if neg else val
            if k < 0:
                if len(p.terms) != 1:
                    raise ParseError("negative exponent of a non-monomial", off)
                if self.laurent is None:
                    raise NegativeExponentError("negative exponent in non-Laurent context", off)
                (e, _), = p.terms.items()
                for i in range(3):
                    if e[i] and i + 1 != self.laurent:
                        raise NegativeExponentError(
                            f"negative exponent of {VAR_NAMES[i]}, which is not the Laurent variable", base_off)
            p = p ** k
        return p

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Poly.const(val, self.laurent)
        if kind == "name":
            if val not in _ALIASES:
                raise UnknownVariableError(f"unknown variable {val!r}", off)
            return Poly.var(_ALIASES[val] + 1, laurent_var=self.laurent)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "end":
            raise ParseError("unexpected end of input", off)
        raise ParseError(f"unexpected token {val!r}", off)


def parse(text: str, laurent_var=None) -> Poly:
    """Parse a polynomial expression over x, y, z (or x1, x2, x3).

    >>> str(parse("y^2 - x^2*(x+z)"))
    '-x^3 - x^2*z + y^2'
    """
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    p = _Parser(text, laurent_var).parse()
    if laurent_var is None:
        return p
    return p.with_laurent(laurent_var)


# ------------------------------------------------------ functional aliases

def diff(p: Poly, v) -> Poly:
    return p.diff(v)


def substitute(p: Poly, images) -> Poly:
    return p.subs(images)


# ---------------------------------------------------------------- division

def _divide_ordinary(p: Poly, q: Poly) -> Poly:
    # single-divisor division in graded-lex order; a leading term that q's
    # leading term cannot divide would end up in the remainder, so fail fast
    eq, cq = q.leading_term()
    rem = dict(p.terms)
    quot = {}
    qterms = q.terms
    while rem:
        e = max(rem, key=_grlex_key)
        c = rem[e]
        m = (e[0] - eq[0], e[1] - eq[1], e[2] - eq[2])
        if min(m) < 0:
            raise NotDivisibleError(f"{q} does not divide {p}")
        f = c / cq
        quot[m] = f
        for e2, c2 in qterms.items():
            t = (m[0] + e2[0], m[1] + e2[1], m[2] + e2[2])
            s = rem.get(t, 0) - f * c2
            if s:
                rem[t] = s
            else:
                rem.pop(t, None)
    return Poly(quot)


def divmod_poly(p: Poly, q: Poly):
    """Quotient and remainder of p by q in graded-lex order.

    For a single divisor the remainder is unique, so it serves as a normal
    form modulo the principal ideal (q).
    """
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if p.is_laurent() or q.is_laurent():
        raise ValueError("divmod_poly is defined for ordinary polynomials only")
    eq, cq = q.leading_term()
    rem = dict(p.terms)
    quot, out = {}, {}
    qterms = q.terms
    while rem:
        e = max(rem, key=_grlex_key)
        c = rem.pop(e)
        m = (e[0] - eq[0], e[1] - eq[1], e[2] - eq[2])
        if min(m) < 0:
            out[e] = c
            continue
        f = c / cq
        quot[m] = f
        for e2, c2 in qterms.items():
            t = (m[0] + e2[0], m[1] + e2[1], m[2] + e2[2])
            if t == e:
                continue
            s = rem.get(t, 0) - f * c2
            if s:
                rem[t] = s
            else:
                rem.pop(t, None)
    return Poly(quot), Poly(out)


def divide_exact(p: Poly, q: Poly) -> Poly:
    """Return r with q*r == p exactly, or raise NotDivisibleError."""
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    lv = p._join_laurent(q)
    if p.is_zero():
        return Poly.zero(lv)
    if lv is None:
        return _divide_ordinary(p, q)
    # the Laurent variable is a unit: strip its lowest power from both sides,
    # divide the parts it does not divide, then put the power back
    kp = p.min_exponent(lv)
    kq = q.min_exponent(lv)
    r = _divide_ordinary(p.shift(lv, -kp).with_laurent(None), q.shift(lv, -kq).with_laurent(None))
    return r.shift(lv, kp - kq).with_laurent(lv)


def divides(q: Poly, p: Poly) -> bool:
    try:
        divide_exact(p, q)
    except NotDivisibleError:
        return False
    return True


# --------------------------------------------------------------------- gcd
# Polynomials are viewed as univariate in a main variable v with
# coefficients in the ring of the remaining variables.

def _coeffs_in(p: Poly, i: int) -> dict:
    """Map k -> coefficient of v^k (v = slot i) as a Poly free of v."""
    out = {}
    for e, c in p.terms.items():
        k = e[i]
        ne = list(e)
        ne[i] = 0
        out.setdefault(k, {})[tuple(ne)] = c
    return {k: Poly(t) for k, t in out.items()}


def _deg_in(p: Poly, i: int) -> int:
    return max(e[i] for e in p.terms) if p.terms else -1


def _lc_in(p: Poly, i: int) -> Poly:
    d = _deg_in(p, i)
    return Poly({tuple(0 if j == i else e[j] for j in range(3)): c
                 for e, c in p.terms.items() if e[i] == d})


def _content_in(p: Poly, i: int) -> Poly:
    return reduce(_gcd, _coeffs_in(p, i).values(), Poly.zero())


def _prem(a: Poly, b: Poly, i: int) -> Poly:
    """Pseudo-remainder of a by b with respect to slot i."""
    db = _deg_in(b, i)
    lb = _lc_in(b, i)
    r = a
    da = _deg_in(r, i)
    delta = da - db + 1
    while not r.is_zero() and _deg_in(r, i) >= db:
        dr = _deg_in(r, i)
        lr = _lc_in(r, i)
        e = [0, 0, 0]
        e[i] = dr - db
        r = lb * r - lr * Poly.monomial(e) * b
        delta -= 1
    if delta > 0:
        r = lb ** delta * r
    return r


def _subresultant_last(a: Poly, b: Poly, i: int) -> Poly:
    """Last nonzero term of the subresultant PRS of a, b in slot i."""
    if _deg_in(a, i) < _deg_in(b, i):
        a, b = b, a
    g = Poly.one()
    hh = Poly.one()
    while True:
        d = _deg_in(a, i) - _deg_in(b, i)
        r = _prem(a, b, i)
        if r.is_zero():
            return b
        if _deg_in(r, i) == 0:
            return r
        a, b = b, divide_exact(r, g * hh ** d)
        g = _lc_in(a, i)
        if d == 0:
            pass
        elif d == 1:
            hh = g
        else:
            hh = divide_exact(g ** d, hh ** (d - 1))


def _gcd(p: Poly, q: Poly) -> Poly:
    if p.is_zero():
        return q.primitive()
    if q.is_zero():
        return p.primitive()
    if p.is_constant() or q.is_constant():
        return Poly.one()
    vs = sorted(set(p.variables()) | set(q.variables()))
    i = vs[-1] - 1
    if _deg_in(p, i) <= 0:
        return _gcd(p, _content_in(q, i))
    if _deg_in(q, i) <= 0:
        return _gcd(_content_in(p, i), q)
    cp = _content_in(p, i)
    cq = _content_in(q, i)
    pp = divide_exact(p, cp)
    qq = divide_exact(q, cq)
    c = _gcd(cp, cq)
    last = _subresultant_last(pp, qq, i)
    if _deg_in(last, i) <= 0:
        g = Poly.one()
    else:
        g = divide_exact(last, _content_in(last, i))
    return (c * g).primitive()


def gcd(p: Poly, q: Poly) -> Poly:
    """Greatest common divisor, primitive with positive graded-lex leading coefficient."""
    if p.is_laurent() or q.is_laurent():
        raise ValueError("gcd is defined for ordinary polynomials only")
    return _gcd(p.with_laurent(None), q.with_laurent(None))


def gcd_many(polys) -> Poly:
    return reduce(gcd, polys, Poly.zero())


def squarefree_part(p: Poly) -> Poly:
    """Product of the distinct irreducible factors of p, normalized."""
    if p.is_zero():
        raise ValueError("squarefree part of the zero polynomial is undefined")
    g = gcd_many([p, p.diff(1), p.diff(2), p.diff(3)])
    return divide_exact(p.with_laurent(None), g).primitive()
