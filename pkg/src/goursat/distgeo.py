"""Vector fields, distributions, brackets, derived flags and Cauchy bundles."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .linalg import Echelon, rank_mpq, relations
from .symexpr import (
    Chart,
    ChartMismatchError,
    Expression,
    RationalPoint,
    is_zero,
    parse,
    regular_points,
)

__all__ = [
    "Distribution",
    "DerivedFlag",
    "PointSampleConfig",
    "RankCertificate",
    "RegularityError",
    "VectorField",
    "cauchy_bundle",
    "coordinate_field",
    "derived_bundle",
    "derived_flag",
    "generic_rank",
    "intersect",
    "is_integrable",
    "lie_bracket",
    "pushforward",
    "same_span",
]

log = logging.getLogger(__name__)


class RegularityError(RuntimeError):
    """A rank that should be generically constant was not."""

    def __init__(self, message: str, points: Sequence[RationalPoint] = ()):
        super().__init__(message)
        self.points = tuple(points)


@dataclass(frozen=True)
class PointSampleConfig:
    samples: int = 12
    seed: int = 0
    retries: int = 32

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be at least 1")
        if self.retries < 0:
            raise ValueError("retry budget must be non-negative")


DEFAULT_SAMPLING = PointSampleConfig()


class VectorField:
    """``sum_i coeffs[i] * d/d(chart[i])``."""

    __slots__ = ("chart", "coeffs", "_key")

    def __init__(self, chart: Chart, coeffs: Sequence[Expression]):
        coeffs = tuple(coeffs)
        if len(coeffs) != chart.dim:
            raise ChartMismatchError(f"{len(coeffs)} coefficients for a {chart.dim}-dimensional chart")
        for c in coeffs:
            if c.chart is not chart:
                raise ChartMismatchError(f"coefficient {c} is not over {chart}")
        self.chart = chart
        self.coeffs = coeffs
        self._key = None

    @classmethod
    def from_raw(cls, chart: Chart, values: Sequence) -> "VectorField":
        return cls(chart, [Expression(chart, v) for v in values])

    @classmethod
    def from_mapping(cls, chart: Chart, mapping: Mapping[str, Expression | str]) -> "VectorField":
        coeffs = [chart.zero()] * chart.dim
        for name, value in mapping.items():
            if isinstance(value, str):
                value = parse(value, chart)
            elif not isinstance(value, Expression):
                value = chart.const(value)
            coeffs[chart.index(name)] = value
        return cls(chart, coeffs)

    @property
    def raw(self) -> list:
        return [c.value for c in self.coeffs]

    def __call__(self, f: Expression) -> Expression:
        """Directional derivative ``X(f)``."""
        if f.chart is not self.chart:
            raise ChartMismatchError(f"{f.chart} vs {self.chart}")
        return Expression(self.chart, _apply(self, f))

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, [-a for a in self.coeffs])

    def scale(self, f) -> "VectorField":
        return VectorField(self.chart, [a * f for a in self.coeffs])

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorField) and self.chart is other.chart and self.raw == other.raw

    def __hash__(self) -> int:
        return hash(tuple(str(c) for c in self.coeffs))

    def is_zero(self) -> bool:
        return all(is_zero(c) for c in self.coeffs)

    def at(self, p: RationalPoint) -> list:
        """Coefficient values at ``p`` (mpq, or POLE entries)."""
        return [c.eval_mpq(p._mpq) for c in self.coeffs]

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.coeffs) if c.value]

    def lift(self, chart: Chart) -> "VectorField":
        coeffs = [chart.zero()] * chart.dim
        for name, c in zip(self.chart.names, self.coeffs):
            coeffs[chart.index(name)] = c.lift(chart)
        return VectorField(chart, coeffs)

    def __str__(self) -> str:
        out = ""
        for name, c in zip(self.chart.names, self.coeffs):
            if not c.value:
                continue
            text = str(c)
            neg = text.startswith("-") and " " not in text
            if neg:
                text = text[1:]
            if " " in text and not text.startswith("("):
                text = f"({text})"
            body = f"d{name}" if text == "1" else f"{text}*d{name}"
            if not out:
                out = f"-{body}" if neg else body
            else:
                out += f" - {body}" if neg else f" + {body}"
        return out or "0"

    def __repr__(self) -> str:
        return f"VectorField({self})"

    def to_mapping(self) -> dict[str, str]:
        return {n: str(c) for n, c in zip(self.chart.names, self.coeffs) if c.value}


def coordinate_field(chart: Chart, name: str) -> VectorField:
    return VectorField.from_mapping(chart, {name: chart.one()})


def _same_chart(a, b):
    if a.chart is not b.chart:
        raise ChartMismatchError(f"{a.chart} vs {b.chart}")


def _apply(X: VectorField, f: Expression):
    """Raw value of ``X(f)``."""
    gens = X.chart.field.gens
    total = X.chart.field.zero
    value = f.value
    for i in f.free_indices():
        a = X.coeffs[i].value
        if a:
            total += a * value.diff(gens[i])
    return total


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    _same_chart(X, Y)
    out = []
    for xi, yi in zip(X.coeffs, Y.coeffs):
        out.append(_apply(X, yi) - _apply(Y, xi))
    return VectorField.from_raw(X.chart, out)


@dataclass(frozen=True)
class RankCertificate:
    witness: RationalPoint | None
    points: tuple[RationalPoint, ...]
    ranks: tuple[int, ...]
    singular_points: tuple[RationalPoint, ...] = ()

    def as_dict(self) -> dict:
        return {
            "witness": None if self.witness is None else self.witness.as_dict(),
            "sampled_ranks": list(self.ranks),
            "singular_points": [p.as_dict() for p in self.singular_points],
        }


def sample_points(chart: Chart, exprs: Iterable[Expression], cfg: PointSampleConfig, count: int | None = None):
    return regular_points(list(exprs), chart, count or cfg.samples, cfg.seed, cfg.retries)


def generic_rank(vfs: Sequence[VectorField], cfg: PointSampleConfig = DEFAULT_SAMPLING):
    """Maximum exact rank of the coefficient matrix over sampled points."""
    if not vfs:
        raise ValueError("generic_rank needs at least one vector field")
    chart = vfs[0].chart
    for v in vfs:
        _same_chart(v, vfs[0])
    points = sample_points(chart, (c for v in vfs for c in v.coeffs), cfg)
    ranks = tuple(rank_mpq([v.at(p) for v in vfs]) for p in points)
    best = max(ranks)
    witness = points[ranks.index(best)]
    singular = tuple(p for p, r in zip(points, ranks) if r < best)
    for p in singular:
        log.info("rank drops to below %d at %s", best, p)
    return best, RankCertificate(witness, tuple(points), ranks, singular)


class Distribution:
    """An ordered list of generators with certified generic rank.

    Generators are kept exactly as given.  ``basis`` lists the indices of a
    greedily chosen independent subset, and ``echelon`` holds the canonical
    reduced form of the span, used for membership and equality tests.
    """

    def __init__(
        self,
        chart: Chart,
        generators: Sequence[VectorField],
        cfg: PointSampleConfig = DEFAULT_SAMPLING,
        label: str | None = None,
    ):
        self.chart = chart
        self.generators = tuple(generators)
        for g in self.generators:
            if g.chart is not chart:
                raise ChartMismatchError(f"generator {g} is not over {chart}")
        self.cfg = cfg
        self.label = label
        ech = Echelon(chart.field, chart.dim)
        basis = []
        for i, g in enumerate(self.generators):
            if ech.add(g.raw):
                basis.append(i)
        self.echelon = ech
        self.basis = tuple(basis)
        self.rank = ech.rank
        if self.generators:
            sampled, cert = generic_rank(self.generators, cfg)
            if sampled != self.rank:
                raise RegularityError(
                    f"sampled rank {sampled} differs from symbolic rank {self.rank}", cert.points
                )
        else:
            cert = RankCertificate(None, (), ())
        self.certificate = cert
        self._structure = None
        self._cauchy = None

    @classmethod
    def from_fields(cls, generators: Sequence[VectorField], cfg=DEFAULT_SAMPLING, chart: Chart | None = None, label=None):
        if chart is None:
            if not generators:
                raise ValueError("cannot infer the chart of an empty generator list")
            chart = generators[0].chart
        return cls(chart, generators, cfg, label)

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def basis_fields(self) -> tuple[VectorField, ...]:
        return tuple(self.generators[i] for i in self.basis)

    def canonical_fields(self) -> tuple[VectorField, ...]:
        return tuple(VectorField.from_raw(self.chart, r) for r in self.echelon.rows)

    def contains(self, v: VectorField) -> bool:
        return self.echelon.contains(v.raw)

    def residual(self, v: VectorField) -> list:
        return self.echelon.reduce(v.raw)

    def contains_distribution(self, other: "Distribution") -> bool:
        return all(self.echelon.contains(r) for r in other.echelon.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and self.chart is other.chart and self.echelon.key() == other.echelon.key()

    def __hash__(self) -> int:
        return hash((self.chart.names, self.rank, tuple(self.echelon.pivots)))

    def is_full(self) -> bool:
        return self.rank == self.chart.dim

    def with_generators(self, extra: Sequence[VectorField], label=None) -> "Distribution":
        return Distribution(self.chart, self.generators + tuple(extra), self.cfg, label)

    def structure_functions(self) -> dict[tuple[int, int], list]:
        """Residuals of basis brackets modulo this distribution.

        Keys are pairs (a, b), a < b, of positions in ``basis``; values are
        full-length raw vectors vanishing on the pivot columns, i.e. the
        components of the bracket along the completing coordinate fields.
        """
        if self._structure is None:
            fields = self.basis_fields
            out = {}
            for a, b in combinations(range(len(fields)), 2):
                out[(a, b)] = self.echelon.reduce(lie_bracket(fields[a], fields[b]).raw)
            self._structure = out
        return self._structure

    def __repr__(self) -> str:
        name = f"{self.label}: " if self.label else ""
        return f"<Distribution {name}rank {self.rank} on {self.chart.dim}-dim chart>"

    def __str__(self) -> str:
        return "{" + ", ".join(str(g) for g in self.generators) + "}"


def same_span(a: Distribution, b: Distribution) -> bool:
    return a == b


@dataclass
class DerivedFlag:
    levels: tuple[Distribution, ...]
    stabilized: Distribution

    @property
    def length(self) -> int:
        return len(self.levels) - 1

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(d.rank for d in self.levels)

    def __getitem__(self, i: int) -> Distribution:
        return self.levels[i]

    def __len__(self) -> int:
        return len(self.levels)


def _new_brackets(D: Distribution, skip_pairs_below: int = 0):
    """Brackets of basis pairs, skipping pairs inside the first positions."""
    fields = D.basis_fields
    for a, b in combinations(range(len(fields)), 2):
        if b < skip_pairs_below:
            continue
        yield lie_bracket(fields[a], fields[b])


def derived_bundle(D: Distribution, cfg: PointSampleConfig | None = None, _old_basis: int = 0) -> Distribution:
    """``D + [D, D]``; brackets already in the span are not appended."""
    cfg = cfg or D.cfg
    ech = D.echelon.copy()
    extra = []
    for br in _new_brackets(D, _old_basis):
        if ech.add(br.raw):
            extra.append(br)
    if not extra:
        return D
    return Distribution(D.chart, D.generators + tuple(extra), cfg)


def derived_flag(D: Distribution, cfg: PointSampleConfig | None = None) -> DerivedFlag:
    cfg = cfg or D.cfg
    levels = [D]
    old = 0
    while True:
        cur = levels[-1]
        nxt = derived_bundle(cur, cfg, old)
        if nxt.rank == cur.rank:
            return DerivedFlag(tuple(levels), nxt)
        if nxt.rank < cur.rank:
            raise RegularityError("derived bundle lost rank", nxt.certificate.points)
        # pairs among the old basis were bracketed already
        old = len(cur.basis)
        levels.append(nxt)


def cauchy_bundle(D: Distribution, cfg: PointSampleConfig | None = None) -> Distribution:
    """Sections ``X`` of ``D`` with ``[X, D]`` inside ``D``."""
    if D._cauchy is not None:
        return D._cauchy
    cfg = cfg or D.cfg
    fields = D.basis_fields
    comp = D.echelon.complement()
    if not comp or not fields:
        D._cauchy = D
        return D
    r = len(fields)
    K = D.chart.field
    struct = D.structure_functions()
    # column i: c^k_{ij} for all j, k
    columns = []
    for i in range(r):
        col = []
        for j in range(r):
            if i == j:
                col.extend([K.zero] * len(comp))
                continue
            v = struct[(i, j)] if i < j else struct[(j, i)]
            sign = 1 if i < j else -1
            col.extend(sign * v[k] for k in comp)
        columns.append(col)
    rels = relations(K, columns, len(columns[0]))
    gens = []
    for rel in rels:
        vec = [K.zero] * D.dim
        for c, f in zip(rel, fields):
            if c:
                for idx, a in enumerate(f.raw):
                    if a:
                        vec[idx] += c * a
        gens.append(VectorField.from_raw(D.chart, vec))
    ch = Distribution(D.chart, gens, cfg)
    D._cauchy = ch
    return ch


def intersect(A: Distribution, B: Distribution, cfg: PointSampleConfig | None = None) -> Distribution:
    _same_chart(A, B)
    cfg = cfg or A.cfg
    K = A.chart.field
    fields = A.basis_fields
    residuals = [B.echelon.reduce(f.raw) for f in fields]
    rels = relations(K, residuals, A.dim) if fields else []
    gens = []
    for rel in rels:
        vec = [K.zero] * A.dim
        for c, f in zip(rel, fields):
            if c:
                for idx, a in enumerate(f.raw):
                    if a:
                        vec[idx] += c * a
        gens.append(VectorField.from_raw(A.chart, vec))
    return Distribution(A.chart, gens, cfg)


def is_integrable(D: Distribution, cfg: PointSampleConfig | None = None) -> bool:
    for vec in D.structure_functions().values():
        for a in vec:
            if a and not is_zero(Expression(D.chart, a)):
                return False
    return True


def pushforward(
    D: Distribution,
    forward: Mapping[str, Expression],
    inverse: Mapping[str, Expression],
    target: Chart,
    cfg: PointSampleConfig | None = None,
) -> Distribution:
    """Image of ``D`` under the coordinate change ``y = forward(x)``.

    ``forward`` maps each target name to an expression over ``D.chart``;
    ``inverse`` maps each source name to an expression over ``target``.
    """
    cfg = cfg or D.cfg
    missing = [n for n in target.names if n not in forward]
    if missing:
        raise ValueError(f"forward map lacks {missing}")
    gens = []
    for g in D.generators:
        coeffs = [g(forward[n]).compose(inverse, target) for n in target.names]
        gens.append(VectorField(target, coeffs))
    return Distribution(target, gens, cfg)
