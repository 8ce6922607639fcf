"""Sparse multivariate polynomials over R or C.

Coefficients are stored as Python complex numbers keyed by exponent tuples.
Evaluation sums the terms in sorted-key order with ``math.fsum`` applied to
the real and imaginary parts separately, so results are reproducible
bit-for-bit.

Gradients follow the conjugation convention: over C the gradient vector holds
the complex conjugates of the partial derivatives.
"""
from __future__ import annotations

import enum
import math
import re
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, ParseError


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, value) -> "Field":
        if isinstance(value, Field):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown field tag {value!r}; expected 'real' or 'complex'") from None


def _as_point(pt, nvars: int) -> np.ndarray:
    arr = np.asarray(pt)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != nvars:
        raise InputError(f"point has {arr.shape[-1]} coordinates, polynomial has {nvars} variables")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    return arr


class Polynomial:
    """Immutable sparse polynomial ``sum c_a x^a`` in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_keys", "_exps", "_coefs", "_partials", "_abs_coefs")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], complex] | None = None):
        if int(nvars) != nvars or nvars < 0:
            raise InputError("nvars must be a non-negative integer")
        nvars = int(nvars)
        clean: dict[tuple[int, ...], complex] = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(a) for a in exp)
            if len(exp) != nvars:
                raise InputError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
            if any(a < 0 for a in exp):
                raise InputError(f"negative exponent in {exp}")
            c = complex(coef)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise InputError(f"non-finite coefficient {coef!r}")
            c = clean.get(exp, 0j) + c
            clean[exp] = c
        self.nvars = nvars
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self._keys = tuple(sorted(self.terms))
        self._exps = None
        self._coefs = None
        self._abs_coefs = None
        self._partials = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, value, nvars: int) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise InputError(f"variable index {index} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1.0})

    @classmethod
    def monomial(cls, exponents: Sequence[int], coef=1.0) -> "Polynomial":
        return cls(len(exponents), {tuple(exponents): coef})

    # -- basic properties -------------------------------------------------
    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._keys), default=-1)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0 for c in self.terms.values())

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._keys}) <= 1

    def constant_term(self) -> complex:
        return self.terms.get((0,) * self.nvars, 0j)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple((k, self.terms[k]) for k in self._keys)))

    def __repr__(self):
        return f"Polynomial({self.nvars}, {format_polynomial(self)!r})"

    def __str__(self):
        return format_polynomial(self)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise InputError(f"arity mismatch: {self.nvars} vs {other.nvars} variables")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Polynomial.constant(other, self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0j) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise InputError("polynomial powers must be non-negative integers")
        out = Polynomial.constant(1.0, self.nvars)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: c.conjugate() for e, c in self.terms.items()})

    # -- variable manipulation -------------------------------------------
    def diff(self, index: int) -> "Polynomial":
        """Exact partial derivative with respect to variable ``index``."""
        terms = {}
        for e, c in self.terms.items():
            a = e[index]
            if a:
                ne = list(e)
                ne[index] = a - 1
                terms[tuple(ne)] = c * a
        return Polynomial(self.nvars, terms)

    @property
    def partials(self) -> tuple["Polynomial", ...]:
        if self._partials is None:
            self._partials = tuple(self.diff(i) for i in range(self.nvars))
        return self._partials

    def permute(self, order: Sequence[int]) -> "Polynomial":
        """New polynomial whose variable ``j`` is old variable ``order[j]``."""
        if sorted(order) != list(range(self.nvars)):
            raise InputError(f"{order} is not a permutation of {self.nvars} variables")
        return Polynomial(self.nvars, {tuple(e[i] for i in order): c for e, c in self.terms.items()})

    def insert_variables(self, position: int, count: int = 1) -> "Polynomial":
        """Embed into more variables; the new ones (absent) sit at ``position``."""
        pad = (0,) * count
        return Polynomial(self.nvars + count,
                          {e[:position] + pad + e[position:]: c for e, c in self.terms.items()})

    def fix_variable(self, index: int, value) -> "Polynomial":
        """Substitute a constant for variable ``index`` and drop it."""
        terms: dict[tuple[int, ...], complex] = {}
        value = complex(value)
        for e, c in self.terms.items():
            ne = e[:index] + e[index + 1:]
            terms[ne] = terms.get(ne, 0j) + c * value ** e[index]
        return Polynomial(self.nvars - 1, terms)

    def shift(self, offsets: Sequence) -> "Polynomial":
        """Return p(x + offsets)."""
        if len(offsets) != self.nvars:
            raise InputError("shift vector length must equal nvars")
        subs = [Polynomial.variable(i, self.nvars) + complex(a) if a else Polynomial.variable(i, self.nvars)
                for i, a in enumerate(offsets)]
        return self.compose(subs)

    def compose(self, polys: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute ``polys[i]`` for variable ``i``."""
        if len(polys) != self.nvars:
            raise InputError("compose needs one polynomial per variable")
        m = polys[0].nvars if polys else 0
        out = Polynomial.zero(m)
        for e, c in self.terms.items():
            term = Polynomial.constant(c, m)
            for p, a in zip(polys, e):
                if a:
                    term = term * p ** a
            out = out + term
        return out

    # -- evaluation -------------------------------------------------------
    def _compiled(self):
        if self._exps is None:
            self._exps = np.array(self._keys, dtype=np.int64).reshape(len(self._keys), self.nvars)
            coefs = np.array([self.terms[k] for k in self._keys], dtype=complex)
            self._coefs = coefs.real.copy() if self.is_real else coefs
            self._abs_coefs = np.abs(coefs)
        return self._exps, self._coefs

    def _monomials(self, pts: np.ndarray) -> np.ndarray:
        exps, _ = self._compiled()
        k = pts.shape[0]
        if exps.shape[0] == 0:
            return np.zeros((k, 0), dtype=pts.dtype)
        dmax = int(exps.max()) if exps.size else 0
        # powers[k, i, a] = pts[k, i] ** a by repeated multiplication
        powers = np.empty((k, self.nvars, dmax + 1), dtype=pts.dtype)
        powers[:, :, 0] = 1.0
        for a in range(1, dmax + 1):
            powers[:, :, a] = powers[:, :, a - 1] * pts
        mons = np.ones((k, exps.shape[0]), dtype=pts.dtype)
        for i in range(self.nvars):
            mons = mons * powers[:, i, exps[:, i]]
        return mons

    def evaluate_many(self, points) -> np.ndarray:
        """Evaluate at each row of a (k, nvars) array."""
        pts = _as_point(points, self.nvars)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        _, coefs = self._compiled()
        terms = self._monomials(pts) * coefs
        if np.iscomplexobj(terms):
            return np.array([complex(math.fsum(r.real), math.fsum(r.imag)) for r in terms])
        return np.array([math.fsum(r) for r in terms], dtype=float)

    def magnitude_many(self, points) -> np.ndarray:
        """Sum of |c_a||x^a|: the roundoff scale of an evaluation."""
        pts = _as_point(points, self.nvars)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        self._compiled()
        return np.abs(self._monomials(pts)) @ self._abs_coefs if self.terms else np.zeros(pts.shape[0])

    def __call__(self, *coords):
        if len(coords) == 1 and np.ndim(coords[0]) >= 1:
            coords = coords[0]
        return evaluate(self, coords)


def evaluate(p: Polynomial, pt):
    """Value of ``p`` at ``pt``; a float when everything is real, else complex."""
    pts = _as_point(pt, p.nvars)
    if pts.ndim != 1:
        raise InputError("evaluate takes a single point; use Polynomial.evaluate_many")
    value = p.evaluate_many(pts.reshape(1, -1))[0]
    return complex(value) if np.iscomplexobj(value) else float(value)


def magnitude(p: Polynomial, pt) -> float:
    pts = _as_point(pt, p.nvars)
    return float(p.magnitude_many(pts.reshape(1, -1))[0])


def raw_partials(p: Polynomial, pt) -> np.ndarray:
    """Unconjugated partial derivatives at ``pt``."""
    pts = _as_point(pt, p.nvars).reshape(1, -1)
    out = [d.evaluate_many(pts)[0] if not d.is_zero else 0.0 for d in p.partials]
    dtype = complex if any(isinstance(v, complex) or np.iscomplexobj(v) for v in out) else float
    return np.array(out, dtype=dtype)


def grad(p: Polynomial, pt, field: Field | str = Field.REAL) -> np.ndarray:
    """Gradient vector; over C, the conjugated partials."""
    field = Field.parse(field)
    d = raw_partials(p, pt)
    if field is Field.COMPLEX:
        return np.conj(d.astype(complex))
    if np.iscomplexobj(d):
        if np.any(d.imag != 0):
            raise InputError("real gradient requested at a point with complex partials")
        d = d.real
    return d


def finite_diff_grad(p: Polynomial, pt, h: float = 1e-5) -> np.ndarray:
    """Central-difference partials, unconjugated.

    Steps move along the real axis of each coordinate; complex values are
    differenced as complex numbers, which recovers the holomorphic partial.
    """
    if not h > 0:
        raise InputError("finite-difference step must be positive")
    x = _as_point(pt, p.nvars)
    out = []
    for i in range(p.nvars):
        step = np.zeros(p.nvars)
        step[i] = h
        fp = evaluate(p, x + step)
        fm = evaluate(p, x - step)
        out.append((fp - fm) / (2 * h))
    dtype = complex if any(isinstance(v, complex) for v in out) else float
    return np.array(out, dtype=dtype)


def homogenize(f: Polynomial, d: int | None = None) -> Polynomial:
    """Homogenization with the new variable x0 placed first."""
    deg = f.degree
    if d is None:
        d = max(deg, 0)
    if d < deg:
        raise InputError(f"homogenization degree {d} is below deg f = {deg}")
    return Polynomial(f.nvars + 1, {(d - sum(e),) + e: c for e, c in f.terms.items()})


def chart_at_infinity(f: Polynomial) -> Polynomial:
    """f~(y0, y1, ..., y_{n-1}, 1): the chart centred at (0:...:0:1)."""
    if f.is_zero:
        raise InputError("chart at infinity of the zero polynomial")
    return homogenize(f, f.degree).fix_variable(f.nvars, 1.0)


# -- text format ------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*^(),])|(?P<bad>\S))"
)
_INDEXED = re.compile(r"^([A-Za-z_]+?)(\d+)$")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "bad":
            raise ParseError(f"unexpected character {value!r}", text, *_line_col(text, start))
        tokens.append((kind, "^" if value == "**" else value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def variable_names(*texts: str) -> list[str]:
    """Infer an ordered variable list from polynomial texts.

    Indexed names sharing a prefix (x1, x2, ...) sort numerically; anything
    else sorts alphabetically.
    """
    names = set()
    for text in texts:
        names.update(v for k, v, _ in _tokenize(text) if k == "name")
    def key(name):
        m = _INDEXED.match(name)
        return (m.group(1), int(m.group(2)), "") if m else (name, -1, name)
    return sorted(names, key=key)


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.index = {v: k for k, v in enumerate(variables)}
        self.n = len(variables)

    def error(self, message, tok=None):
        tok = tok or self.tokens[self.i]
        raise ParseError(message, self.text, *_line_col(self.text, tok[2]))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] not in ("op",):
            self.error(f"expected {value!r}", tok)
        return tok

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            self.error("empty polynomial text")
        p = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self) -> Polynomial:
        sign = 1
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        p = self.term()
        if sign < 0:
            p = -p
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            p = p * self.factor()
        return p

    def factor(self) -> Polynomial:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return -self.factor()
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("expected a non-negative integer exponent", tok)
            base = base ** int(tok[1])
        return base

    def atom(self) -> Polynomial:
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Polynomial.constant(float(value), self.n)
        if kind == "name":
            if value not in self.index:
                self.error(f"unknown variable {value!r}", tok)
            return Polynomial.variable(self.index[value], self.n)
        if kind == "op" and value == "(":
            inner = self.expr()
            if self.peek()[0] == "op" and self.peek()[1] == ",":
                comma = self.take()
                imag = self.expr()
                self.expect(")")
                for part in (inner, imag):
                    if part.degree > 0 or not part.is_real:
                        self.error("complex pair entries must be real constants", comma)
                return Polynomial.constant(complex(inner.constant_term().real, imag.constant_term().real), self.n)
            self.expect(")")
            return inner
        self.error(f"unexpected token {value!r}" if value else "unexpected end of input", tok)


def parse_polynomial(text: str, variables: Sequence[str] | None = None) -> Polynomial:
    """Parse ``coeff * x1^a1 * ... + ...``; coefficients may be ``(re, im)`` pairs."""
    if variables is None:
        variables = variable_names(text)
    return _Parser(text, list(variables)).parse()


def default_names(nvars: int) -> list[str]:
    return [f"x{i + 1}" for i in range(nvars)]


def _fmt_real(x: float) -> str:
    return repr(float(x))


def format_polynomial(p: Polynomial, variables: Sequence[str] | None = None) -> str:
    """Canonical printer; ``parse_polynomial`` inverts it exactly."""
    names = list(variables) if variables is not None else default_names(p.nvars)
    if len(names) != p.nvars:
        raise InputError("need one name per variable")
    if p.is_zero:
        return "0"
    keys = sorted(p.terms, key=lambda e: (-sum(e), tuple(-a for a in e)))
    parts = []
    for k, e in enumerate(keys):
        c = p.terms[e]
        mono = " * ".join(n if a == 1 else f"{n}^{a}" for n, a in zip(names, e) if a)
        if c.imag == 0:
            neg = math.copysign(1.0, c.real) < 0
            coef = _fmt_real(abs(c.real))
            body = f"{coef} * {mono}" if mono else coef
            if k == 0:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append((" - " if neg else " + ") + body)
        else:
            coef = f"({_fmt_real(c.real)}, {_fmt_real(c.imag)})"
            body = f"{coef} * {mono}" if mono else coef
            parts.append(body if k == 0 else " + " + body)
    return "".join(parts)


def poly_from_terms(nvars: int, items: Iterable[tuple[Sequence[int], complex]]) -> Polynomial:
    return Polynomial(nvars, {tuple(e): c for e, c in items})
