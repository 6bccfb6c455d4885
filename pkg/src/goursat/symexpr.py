"""Exact rational-function expressions over a coordinate chart.

Every :class:`Expression` is stored as a single reduced quotient of two
integer polynomials (sympy's sparse fraction field over QQ), so two
expressions are mathematically equal exactly when their normal forms are
syntactically equal.

Expression text grammar (the exchange format of the CLI documents)::

    expr    ::= term (("+" | "-") term)*
    term    ::= unary (("*" | "/") unary)*
    unary   ::= ("+" | "-") unary | power
    power   ::= atom (("^" | "**") exponent)?
    exponent::= ("+" | "-")? INTEGER | "(" ("+" | "-")? INTEGER ")"
    atom    ::= INTEGER | IDENT | "(" expr ")"
    INTEGER ::= [0-9]+
    IDENT   ::= [A-Za-z_][A-Za-z0-9_]*

A rational literal ``p/q`` is simply an integer division.  Only integer
exponents are accepted; anything else is a :class:`ParseError`.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

import gmpy2
from gmpy2 import mpq
from sympy import QQ
from sympy.polys.fields import FracField

__all__ = [
    "POLE",
    "Chart",
    "ChartMismatchError",
    "Coordinate",
    "Expression",
    "NormalizationError",
    "ParseError",
    "PointSampler",
    "RationalPoint",
    "UnknownIdentifierError",
    "differentiate",
    "evaluate",
    "is_zero",
    "parse",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Scalar = Union[int, Fraction, "gmpy2.mpq"]


class ParseError(ValueError):
    """Malformed expression text; ``position`` is a 0-based column."""

    def __init__(self, message: str, position: int | None = None, source: str | None = None):
        self.message = message
        self.position = position
        self.source = source
        where = "" if position is None else f" at position {position}"
        super().__init__(f"{message}{where}")


class UnknownIdentifierError(ParseError):
    pass


class ChartMismatchError(ValueError):
    pass


class NormalizationError(RuntimeError):
    """Normal form and sampled evaluation disagree about vanishing."""


class _Pole:
    __slots__ = ()

    def __repr__(self) -> str:
        return "POLE"

    def __bool__(self) -> bool:
        return False


POLE = _Pole()


@dataclass(frozen=True)
class Coordinate:
    name: str
    index: int


class Chart:
    """Ordered, named coordinates of a patch of R^n.

    Charts are interned by their name tuple, so equal charts are identical
    objects and share one fraction field.
    """

    _cache: dict[tuple[str, ...], "Chart"] = {}

    __slots__ = ("names", "field", "coordinates", "_position")

    def __new__(cls, names: Iterable[str]) -> "Chart":
        names = tuple(names)
        cached = cls._cache.get(names)
        if cached is not None:
            return cached
        if not names:
            raise ValueError("a chart needs at least one coordinate")
        for name in names:
            if not isinstance(name, str) or not _IDENT.match(name):
                raise ValueError(f"invalid coordinate name {name!r}")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names}")
        self = object.__new__(cls)
        self.names = names
        self.field = FracField(names, QQ)
        self.coordinates = tuple(Coordinate(n, i) for i, n in enumerate(names))
        self._position = {n: i for i, n in enumerate(names)}
        cls._cache[names] = self
        return self

    @property
    def dim(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return f"Chart({list(self.names)!r})"

    def __reduce__(self):
        return (Chart, (self.names,))

    def index(self, name: str | Coordinate) -> int:
        if isinstance(name, Coordinate):
            if name.index >= self.dim or self.names[name.index] != name.name:
                raise ChartMismatchError(f"{name} does not belong to {self}")
            return name.index
        try:
            return self._position[name]
        except KeyError:
            raise ChartMismatchError(f"{name!r} is not a coordinate of {self}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._position

    def coordinate(self, name: str | int) -> "Expression":
        i = name if isinstance(name, int) else self.index(name)
        return Expression(self, self.field.gens[i])

    def gens(self) -> tuple["Expression", ...]:
        return tuple(Expression(self, g) for g in self.field.gens)

    def const(self, value: Scalar) -> "Expression":
        return Expression(self, self.field.ground_new(_to_mpq(value)))

    def zero(self) -> "Expression":
        return Expression(self, self.field.zero)

    def one(self) -> "Expression":
        return Expression(self, self.field.one)

    def extended(self, extra: Sequence[str]) -> "Chart":
        return Chart(self.names + tuple(extra))

    def fresh_names(self, stem: str, count: int) -> list[str]:
        """``count`` names ``stem1, stem2, ...`` not clashing with this chart."""
        prefix = stem
        while any(n.startswith(prefix) for n in self.names):
            prefix = "_" + prefix
        return [f"{prefix}{i}" for i in range(1, count + 1)]


def _to_mpq(value: Scalar):
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return mpq(value)
    if type(value) is type(mpq(0)):
        return value
    raise TypeError(f"not an exact rational scalar: {value!r}")


def _compile(poly) -> tuple:
    # sparse monomials: ((index, exponent), ...) per term
    out = []
    for monom, coeff in poly.terms():
        out.append((tuple((i, e) for i, e in enumerate(monom) if e), coeff))
    return tuple(out)


def _poly_eval(terms: tuple, values: Sequence) -> "gmpy2.mpq":
    total = mpq(0)
    for monom, coeff in terms:
        t = coeff
        for i, e in monom:
            t = t * values[i] ** e if e > 1 else t * values[i]
        total += t
    return total


class Expression:
    """Immutable exact rational function of a chart's coordinates."""

    __slots__ = ("chart", "value", "_compiled", "_hash", "_free")

    def __init__(self, chart: Chart, value):
        self.chart = chart
        self.value = value
        self._compiled = None
        self._hash = None
        self._free = None

    # -- construction -----------------------------------------------------

    def _coerce(self, other) -> "Expression":
        if isinstance(other, Expression):
            if other.chart is not self.chart:
                raise ChartMismatchError(f"{self.chart} vs {other.chart}")
            return other
        return self.chart.const(other)

    def _wrap(self, value) -> "Expression":
        return Expression(self.chart, value)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        return self._wrap(self.value + self._coerce(other).value)

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.value - self._coerce(other).value)

    def __rsub__(self, other):
        return self._wrap(self._coerce(other).value - self.value)

    def __mul__(self, other):
        return self._wrap(self.value * self._coerce(other).value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if not other.value:
            raise ZeroDivisionError("division by the zero expression")
        return self._wrap(self.value / other.value)

    def __rtruediv__(self, other):
        if not self.value:
            raise ZeroDivisionError("division by the zero expression")
        return self._wrap(self._coerce(other).value / self.value)

    def __neg__(self):
        return self._wrap(-self.value)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n <= 0 and not self.value:
            raise ZeroDivisionError("non-positive power of zero")
        return self._wrap(self.value**n)

    def __eq__(self, other) -> bool:
        if isinstance(other, Expression):
            return self.chart is other.chart and self.value == other.value
        try:
            return self.value == self.chart.field.ground_new(_to_mpq(other))
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.chart.names, str(self)))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.value)

    # -- structure --------------------------------------------------------

    @property
    def numerator(self) -> "Expression":
        return self._wrap(self.chart.field.new(self.value.numer, self.chart.field.ring.one))

    @property
    def denominator(self) -> "Expression":
        return self._wrap(self.chart.field.new(self.value.denom, self.chart.field.ring.one))

    def is_polynomial(self) -> bool:
        return self.value.denom == 1

    def is_constant(self) -> bool:
        return self.value.numer.is_ground and self.value.denom.is_ground

    def constant(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return _frac(self.value.numer.LC / self.value.denom.LC) if self.value else Fraction(0)

    def free_indices(self) -> frozenset[int]:
        if self._free is None:
            self._free = free_indices(self.value)
        return self._free

    def free_names(self) -> tuple[str, ...]:
        return tuple(self.chart.names[i] for i in sorted(self.free_indices()))

    def size(self) -> int:
        """Node count of the printed tree; used for deterministic tie-breaking."""
        total = 0
        for poly in (self.value.numer, self.value.denom):
            if poly == 1:
                continue
            for monom, coeff in poly.terms():
                total += 1 + sum(1 for e in monom if e) + sum(e - 1 for e in monom if e > 1)
                if abs(coeff) != 1 or not any(monom):
                    total += 1
        return max(total, 1)

    def sort_key(self) -> tuple:
        return (self.size(), str(self))

    # -- calculus and substitution ---------------------------------------

    def diff(self, coordinate: str | int | Coordinate) -> "Expression":
        i = coordinate if isinstance(coordinate, int) else self.chart.index(coordinate)
        return self._wrap(self.value.diff(self.chart.field.gens[i]))

    def lift(self, chart: Chart) -> "Expression":
        """Re-express over a chart containing all of this chart's names."""
        if chart is self.chart:
            return self
        missing = [n for n in self.free_names() if n not in chart]
        if missing:
            raise ChartMismatchError(f"{missing} not in {chart}")
        return Expression(chart, self.value.set_field(chart.field))

    def compose(self, mapping: Mapping[str, "Expression"], target: Chart) -> "Expression":
        """Substitute ``mapping[name]`` (expressions over ``target``) for coordinates.

        Coordinates absent from ``mapping`` must exist in ``target``.
        """
        images = []
        for name in self.chart.names:
            img = mapping.get(name)
            if img is None:
                img = target.coordinate(name)
            elif img.chart is not target:
                raise ChartMismatchError(f"image of {name} lives on {img.chart}")
            images.append(img.value)
        num = _compose_poly(self.value.numer, images, target)
        den = _compose_poly(self.value.denom, images, target)
        if not den:
            raise ZeroDivisionError(f"substitution makes the denominator of {self} vanish")
        return Expression(target, num / den)

    # -- evaluation -------------------------------------------------------

    def _terms(self):
        if self._compiled is None:
            self._compiled = (_compile(self.value.numer), _compile(self.value.denom))
        return self._compiled

    def eval_mpq(self, values: Sequence):
        """Evaluate at chart-ordered mpq values; returns ``POLE`` at a pole."""
        num_terms, den_terms = self._terms()
        den = _poly_eval(den_terms, values)
        if not den:
            return POLE
        return _poly_eval(num_terms, values) / den

    def __call__(self, point: "RationalPoint"):
        return evaluate(self, point)

    # -- printing ---------------------------------------------------------

    def __str__(self) -> str:
        return _format(self.value, self.chart.names)

    def __repr__(self) -> str:
        return f"Expression({str(self)!r})"

    def to_sympy(self):
        return self.value.as_expr()


def free_indices(value) -> frozenset[int]:
    """Indices of the generators a raw field element depends on."""
    used = set()
    for poly in (value.numer, value.denom):
        for monom in poly.itermonoms():
            used.update(i for i, e in enumerate(monom) if e)
    return frozenset(used)


def _compose_poly(poly, images, target: Chart):
    field = target.field
    total = field.zero
    for monom, coeff in poly.terms():
        term = field.ground_new(coeff)
        for img, e in zip(images, monom):
            if e:
                term *= img**e
        total += term
    return total


def _frac(value) -> Fraction:
    value = mpq(value)
    return Fraction(int(value.numerator), int(value.denominator))


def _format_monomial(monom, names) -> str:
    parts = []
    for name, e in zip(names, monom):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def _format_poly(poly, names) -> tuple[str, int]:
    """Text of a polynomial and its number of terms."""
    terms = sorted(poly.terms(), key=lambda t: (sum(t[0]), t[0]), reverse=True)
    if not terms:
        return "0", 0
    out = []
    for k, (monom, coeff) in enumerate(terms):
        coeff = mpq(coeff)
        negative = coeff < 0
        mag = -coeff if negative else coeff
        body = _format_monomial(monom, names)
        if not body:
            text = _format_scalar(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_format_scalar(mag)}*{body}"
        if k == 0:
            out.append(f"-{text}" if negative else text)
        else:
            out.append(f" - {text}" if negative else f" + {text}")
    return "".join(out), len(terms)


def _format_scalar(value) -> str:
    value = mpq(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _format(value, names) -> str:
    num, nterms = _format_poly(value.numer, names)
    if value.denom == 1:
        return num
    den, dterms = _format_poly(value.denom, names)
    single = dterms == 1 and "*" not in den and "/" not in den and not den.startswith("-")
    if not single:
        den = f"({den})"
    if nterms > 1 or "/" in num:
        num = f"({num})"
    return f"{num}/{den}"


# ---------------------------------------------------------------------------
# parsing


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    src_len = len(src)
    while pos < src_len:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ParseError(f"unexpected character {src[bad]!r}", bad, src)
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            tokens.append(("int", m.group(1), start))
        elif m.group(2) is not None:
            tokens.append(("ident", m.group(2), start))
        else:
            tokens.append(("op", m.group(3), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, chart: Chart):
        self.src = src
        self.chart = chart
        self.field = chart.field
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], self.src)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            shown = tok[1] or "end of input"
            raise ParseError(f"expected {value!r}, found {shown!r}", tok[2], self.src)

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        value = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op[1] == "*":
                value = value * rhs
            else:
                if not rhs:
                    raise ParseError("division by zero", op[2], self.src)
                value = value / rhs
        return value

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            value = self.unary()
            return -value if tok[1] == "-" else value
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.take()
            n = self.exponent()
            if n <= 0 and not base:
                raise ParseError("non-positive power of zero", tok[2], self.src)
            return base**n
        return base

    def exponent(self) -> int:
        paren = False
        if self.peek()[1] == "(":
            self.take()
            paren = True
        sign = 1
        if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1 if self.take()[1] == "-" else 1
        tok = self.take()
        if tok[0] != "int":
            raise ParseError("exponents must be integer literals", tok[2], self.src)
        if paren:
            self.expect(")")
        return sign * int(tok[1])

    def atom(self):
        tok = self.take()
        kind, text, pos = tok
        if kind == "int":
            return self.field.ground_new(mpq(int(text)))
        if kind == "ident":
            if text not in self.chart:
                raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.src)
            return self.field.gens[self.chart.index(text)]
        if text == "(":
            value = self.expr()
            self.expect(")")
            return value
        shown = text or "end of input"
        raise ParseError(f"unexpected {shown!r}", pos, self.src)


def _as_chart(chart) -> Chart:
    if isinstance(chart, Chart):
        return chart
    return Chart(c.name if isinstance(c, Coordinate) else c for c in chart)


def parse(src: str, chart: Chart | Sequence[str] | Sequence[Coordinate]) -> Expression:
    chart = _as_chart(chart)
    if isinstance(src, (int, Fraction)):
        return chart.const(src)
    if not isinstance(src, str):
        raise ParseError(f"expected expression text, got {type(src).__name__}")
    return Expression(chart, _Parser(src, chart).parse())


def differentiate(e: Expression, c: str | int | Coordinate) -> Expression:
    return e.diff(c)


# ---------------------------------------------------------------------------
# points and evaluation


class RationalPoint:
    """A point of a chart with exact rational coordinates."""

    __slots__ = ("chart", "values", "_mpq")

    def __init__(self, chart: Chart, values: Sequence[Scalar]):
        if len(values) != chart.dim:
            raise ChartMismatchError(f"point has {len(values)} coordinates, chart has {chart.dim}")
        self.chart = chart
        self._mpq = tuple(_to_mpq(v) for v in values)
        self.values = tuple(_frac(v) for v in self._mpq)

    @classmethod
    def from_mapping(cls, chart: Chart, values: Mapping[str, Scalar]) -> "RationalPoint":
        return cls(chart, [values.get(n, 0) for n in chart.names])

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalPoint) and self.chart is other.chart and self.values == other.values

    def __hash__(self) -> int:
        return hash((self.chart.names, self.values))

    def as_dict(self) -> dict[str, str]:
        return {n: str(v) for n, v in zip(self.chart.names, self.values)}

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={v}" for n, v in zip(self.chart.names, self.values))
        return f"RationalPoint({inner})"


def evaluate(e: Expression, p: RationalPoint):
    """Exact value of ``e`` at ``p`` as a Fraction, or ``POLE``."""
    if p.chart is not e.chart:
        raise ChartMismatchError(f"{p.chart} vs {e.chart}")
    value = e.eval_mpq(p._mpq)
    return POLE if value is POLE else _frac(value)


class PointSampler:
    """Deterministic stream of random rational points of a chart.

    Numerators are uniform in ``[-max_num, max_num]`` and denominators in
    ``[1, max_den]``.
    """

    def __init__(self, chart: Chart, seed: int = 0, max_num: int = 50, max_den: int = 10):
        self.chart = chart
        self.rng = random.Random(f"{seed}:{','.join(chart.names)}")
        self.max_num = max_num
        self.max_den = max_den

    def draw(self) -> RationalPoint:
        rng = self.rng
        vals = [
            Fraction(rng.randint(-self.max_num, self.max_num), rng.randint(1, self.max_den))
            for _ in range(self.chart.dim)
        ]
        return RationalPoint(self.chart, vals)

    def __iter__(self) -> Iterator[RationalPoint]:
        while True:
            yield self.draw()


class SamplingError(RuntimeError):
    """Every sampled point hit a pole within the retry budget."""


def regular_points(
    exprs: Sequence[Expression],
    chart: Chart,
    count: int,
    seed: int = 0,
    retries: int = 32,
) -> list[RationalPoint]:
    """``count`` sampled points at which no expression in ``exprs`` has a pole."""
    sampler = PointSampler(chart, seed)
    dens = [e for e in exprs if not e.is_polynomial()]
    points = []
    misses = 0
    while len(points) < count:
        p = sampler.draw()
        if any(d.denominator.eval_mpq(p._mpq) == 0 for d in dens):
            misses += 1
            if misses > retries:
                raise SamplingError(f"{misses} sampled points hit poles (retry budget {retries})")
            continue
        points.append(p)
    return points


_GUARD_SEED = 0x5EED


def is_zero(e: Expression, samples: int = 8) -> bool:
    """True iff ``e`` is identically zero.

    The normal form decides; a nonzero normal form that vanishes at every
    one of ``samples`` random points raises :class:`NormalizationError`.
    """
    if not e.value:
        return True
    if samples <= 0 or e.is_constant():
        return False
    sampler = PointSampler(e.chart, _GUARD_SEED)
    hits = 0
    tries = 0
    while hits < samples and tries < samples * 8:
        tries += 1
        value = e.eval_mpq(sampler.draw()._mpq)
        if value is POLE:
            continue
        if value:
            return False
        hits += 1
    raise NormalizationError(f"nonzero normal form {e} vanished at {hits} sampled points")
