"""First integrals of integrable distributions by bounded rational ansatz."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .distgeo import DEFAULT_SAMPLING, Distribution, PointSampleConfig, sample_points
from .linalg import rank_mpq
from .symexpr import POLE, Expression, RationalPoint, is_zero

__all__ = [
    "AnsatzConfig",
    "IntegrationError",
    "InvariantRejection",
    "InvariantSet",
    "first_integrals",
    "verify_invariants",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnsatzConfig:
    num_degree: int = 3
    den_degree: int = 2
    support: tuple[str, ...] | None = None
    samples: int = 12

    def __post_init__(self):
        if self.num_degree < 0 or self.den_degree < 0:
            raise ValueError("ansatz degrees must be non-negative")


@dataclass
class InvariantSet:
    distribution: Distribution
    functions: tuple[Expression, ...]
    points: tuple[RationalPoint, ...]
    searched: int = 0  # number of ansatz solves that were needed
    discarded: tuple[Expression, ...] = ()

    accepted = True

    @property
    def rank(self) -> int:
        return len(self.functions)


@dataclass
class InvariantRejection:
    reason: str
    items: list[dict] = field(default_factory=list)
    partial: tuple[Expression, ...] = ()

    accepted = False


class IntegrationError(RuntimeError):
    """The ansatz did not produce a complete set of invariants."""

    def __init__(self, message: str, distribution: Distribution, partial: Sequence[Expression], missing: int):
        super().__init__(message)
        self.distribution = distribution
        self.partial = tuple(partial)
        self.missing = missing
        self.level: str | None = None


def _gradient_rows(funcs, p: RationalPoint):
    rows = []
    for f in funcs:
        row = [f.diff(i).eval_mpq(p._mpq) for i in range(f.chart.dim)]
        if any(v is POLE for v in row):
            return None
        rows.append(row)
    return rows


class _Selector:
    """Greedy independent subset by Jacobian rank at witness points."""

    def __init__(self, points):
        self.points = points
        self.funcs: list[Expression] = []
        self.grads: list[list] = [[] for _ in points]

    def try_add(self, f: Expression) -> bool:
        new = []
        for p, rows in zip(self.points, self.grads):
            row = [f.diff(i).eval_mpq(p._mpq) for i in range(f.chart.dim)]
            new.append(None if any(v is POLE for v in row) else row)
        target = len(self.funcs) + 1
        for p, rows, row in zip(self.points, self.grads, new):
            if row is not None and rank_mpq(rows + [row]) == target:
                break
        else:
            return False
        for rows, row in zip(self.grads, new):
            rows.append(row if row is not None else [0] * f.chart.dim)
        self.funcs.append(f)
        return True


def _annihilates(D: Distribution, f: Expression):
    for g in D.generators:
        r = g(f)
        if not is_zero(r):
            return g, r
    return None


def _harvest(D: Distribution) -> list[int]:
    used = set()
    for row in D.echelon.rows:
        used.update(i for i, a in enumerate(row) if a)
    return [i for i in range(D.dim) if i not in used]


def _poly_fields(D: Distribution):
    """Basis fields with denominators cleared, as polynomial coefficient lists."""
    ring = D.chart.field.ring
    out = []
    for f in D.basis_fields:
        den = ring.one
        for c in f.raw:
            if c:
                den = den.lcm(c.denom)
        coeffs = []
        for c in f.raw:
            if c:
                num, rem = (c.numer * den).div(c.denom)
                coeffs.append(num)
            else:
                coeffs.append(ring.zero)
        out.append(coeffs)
    return out


def _apply_poly(coeffs, poly, gens):
    total = poly.ring.zero
    for i, c in enumerate(coeffs):
        if c:
            d = poly.diff(gens[i])
            if d:
                total += c * d
    return total


def _tdeg(p) -> int:
    return max((sum(m) for m in p.itermonoms()), default=0)


def _denominators(D: Distribution, harvested: set[int], cfg: AnsatzConfig):
    ring = D.chart.field.ring
    gens = ring.gens
    base = {}
    for f in D.generators:
        for c in f.raw:
            if c and c.denom != 1:
                for fac, _ in c.denom.factor_list()[1]:
                    fac = fac.monic() if fac.LC < 0 else fac
                    base[str(fac)] = fac
    for i, g in enumerate(gens):
        base.setdefault(str(g), g)
    atoms = sorted(base.values(), key=lambda p: (_tdeg(p), str(p)))
    cands = {"1": ring.one}
    for d in range(1, cfg.den_degree + 1):
        for combo in combinations_with_replacement(atoms, d):
            p = ring.one
            for a in combo:
                p *= a
            if _tdeg(p) <= cfg.den_degree:
                cands.setdefault(str(p), p)
    return sorted(cands.values(), key=lambda p: (_tdeg(p), len(p), str(p)))


def _monomials(nvars: int, support: list[int], degree: int):
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(support, d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def _solve(D, fields, den, monos, ring):
    """Numerators ``N`` over ``monos`` with ``G(N/den) = 0`` for every field."""
    gens = ring.gens
    cols = {}
    dens = [_apply_poly(c, den, gens) for c in fields]
    for j, m in enumerate(monos):
        mp = ring.from_dict({m: 1})
        for gi, coeffs in enumerate(fields):
            val = den * _apply_poly(coeffs, mp, gens) - mp * dens[gi]
            for mono, c in val.terms():
                cols.setdefault((gi, mono), {})[j] = QQ.convert(c)
    if not cols:
        rows = {}
    else:
        rows = {i: r for i, r in enumerate(cols.values())}
    shape = (max(len(rows), 1), len(monos))
    M = DomainMatrix(rows, shape, QQ)
    out = []
    for vec in M.nullspace().to_list():
        poly = ring.from_dict({monos[j]: c for j, c in enumerate(vec) if c})
        if poly:
            poly = poly.primitive()[1]
            out.append(-poly if poly.LC < 0 else poly)
    return out


def first_integrals(
    D: Distribution, cfg: AnsatzConfig | None = None, sampling: PointSampleConfig | None = None
) -> InvariantSet:
    cfg = cfg or AnsatzConfig()
    sampling = sampling or D.cfg
    chart = D.chart
    r = chart.dim - D.rank
    pts = tuple(sample_points(chart, [c for g in D.generators for c in g.coeffs], sampling, cfg.samples))
    sel = _Selector(pts)
    harvested = _harvest(D)
    for i in harvested:
        sel.try_add(chart.coordinate(i))
    searched = 0
    if len(sel.funcs) < r:
        ring = chart.field.ring
        fields = _poly_fields(D)
        hset = set(harvested)
        support = list(range(chart.dim)) if cfg.support is None else [chart.index(n) for n in cfg.support]
        dens = _denominators(D, hset, cfg)
        done = False
        for deg in range(1, cfg.num_degree + 1):
            for den in dens:
                den_vars = {i for mono in den.itermonoms() for i, e in enumerate(mono) if e}
                monos = _monomials(chart.dim, support, deg)
                if den_vars <= hset:
                    monos = [m for m in monos if any(e and i not in hset for i, e in enumerate(m))]
                if not monos:
                    continue
                searched += 1
                sols = _solve(D, fields, den, monos, ring)
                K = chart.field
                cands = []
                for num in sols:
                    f = Expression(chart, K.new(num, den))
                    if not f.is_constant():
                        cands.append(f)
                for f in sorted(cands, key=lambda f: f.sort_key()):
                    if _annihilates(D, f) is not None:
                        continue
                    if sel.try_add(f) and len(sel.funcs) == r:
                        done = True
                        break
                if done:
                    break
            if done:
                break
    funcs = tuple(sel.funcs)
    if len(funcs) < r:
        raise IntegrationError(
            f"ansatz found {len(funcs)} of {r} invariants (numerator degree <= {cfg.num_degree}, "
            f"denominator degree <= {cfg.den_degree})",
            D, funcs, r - len(funcs),
        )
    for f in funcs:
        bad = _annihilates(D, f)
        if bad is not None:
            raise AssertionError(f"candidate {f} is not invariant: {bad[0]} gives {bad[1]}")
    return InvariantSet(D, funcs, pts, searched)


def verify_invariants(
    D: Distribution, candidates: Sequence[Expression], sampling: PointSampleConfig | None = None
):
    """Check user-supplied invariants; dependent extras are discarded."""
    sampling = sampling or D.cfg
    chart = D.chart
    r = chart.dim - D.rank
    items = []
    for f in candidates:
        if f.chart is not chart:
            items.append({"candidate": str(f), "error": "wrong chart"})
            continue
        for g in D.generators:
            val = g(f)
            if not is_zero(val):
                pts = sample_points(chart, [val], sampling, 1)
                items.append({
                    "candidate": str(f),
                    "generator": str(g),
                    "value": str(val),
                    "witness_point": pts[0].as_dict(),
                    "value_at_witness": str(val(pts[0])),
                })
                break
    if items:
        return InvariantRejection(f"{len(items)} candidate(s) are not invariant", items)
    pts = tuple(sample_points(chart, [c for g in D.generators for c in g.coeffs] + list(candidates), sampling))
    sel = _Selector(pts)
    discarded = []
    for f in candidates:
        if not sel.try_add(f):
            discarded.append(f)
    if len(sel.funcs) < r:
        return InvariantRejection(
            f"only {len(sel.funcs)} independent invariants supplied, {r} needed",
            [{"candidate": str(f), "error": "dependent on earlier candidates"} for f in discarded],
            tuple(sel.funcs),
        )
    return InvariantSet(D, tuple(sel.funcs), pts, 0, tuple(discarded))
