"""Polar matrices, singular varieties, Weber structures and resolvent bundles."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from sympy.polys.matrices import DomainMatrix

from .distgeo import (
    DEFAULT_SAMPLING,
    Distribution,
    PointSampleConfig,
    RegularityError,
    VectorField,
    cauchy_bundle,
    derived_bundle,
    is_integrable,
)
from .linalg import Echelon, rank_mpq, relations
from .symexpr import POLE, Chart, Expression, PointSampler, RationalPoint, is_zero

__all__ = [
    "CriteriaDisagreementError",
    "PolarMatrix",
    "Quotient",
    "SingularVariety",
    "WeberReport",
    "degree",
    "polar_matrix",
    "quotient_by_cauchy",
    "resolvent_bundle",
    "singular_variety",
]

log = logging.getLogger(__name__)


class CriteriaDisagreementError(RuntimeError):
    """The three equivalent integrability tests gave different answers."""


@dataclass
class Quotient:
    """Representatives of ``D / Ch D`` with the Cauchy bundle they complement."""

    base: Distribution
    cauchy: Distribution
    representatives: tuple[VectorField, ...]
    positions: tuple[int, ...]  # indices into base.basis_fields

    @property
    def rank(self) -> int:
        return len(self.representatives)

    def lift(self, coefficients: Sequence) -> VectorField:
        """The section ``sum_a coefficients[a] * representatives[a]``."""
        chart = self.base.chart
        vec = [chart.field.zero] * chart.dim
        for c, rep in zip(coefficients, self.representatives):
            c = c.value if isinstance(c, Expression) else c
            if c:
                for i, a in enumerate(rep.raw):
                    if a:
                        vec[i] += c * a
        return VectorField.from_raw(chart, vec)


def quotient_by_cauchy(D: Distribution, cfg: PointSampleConfig | None = None, cauchy: Distribution | None = None) -> Quotient:
    cfg = cfg or D.cfg
    ch = cauchy if cauchy is not None else cauchy_bundle(D, cfg)
    ech = ch.echelon.copy()
    reps, pos = [], []
    for p, f in enumerate(D.basis_fields):
        if ech.add(f.raw):
            reps.append(f)
            pos.append(p)
    return Quotient(D, ch, tuple(reps), tuple(pos))


@dataclass
class PolarMatrix:
    """``sigma(E)[k][b] = sum_a e^a c^k_{ab}`` over quotient representatives.

    ``structure[k][a][b]`` holds the raw structure functions over the base
    chart, rows ``k`` running over the coordinate fields that complete the
    base distribution to a frame.  ``entries`` is the same matrix with the
    symbolic point spelled out over ``param_chart``.
    """

    quotient: Quotient
    rows: tuple[int, ...]
    structure: list
    param_chart: Chart
    e_names: tuple[str, ...]
    entries: tuple[tuple[Expression, ...], ...]
    witness_points: tuple[RationalPoint, ...] = ()

    @property
    def base(self) -> Distribution:
        return self.quotient.base

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), self.quotient.rank)

    def at_line(self, line: Sequence) -> list[list]:
        """Raw base-chart entries of ``sigma`` at ``e = line``."""
        K = self.base.chart.field
        vals = [(l.value if isinstance(l, Expression) else K.ground_new(_mpq(l))) for l in line]
        n = self.quotient.rank
        out = []
        for ck in self.structure:
            row = []
            for b in range(n):
                s = K.zero
                for a in range(n):
                    if vals[a] and ck[a][b]:
                        s += vals[a] * ck[a][b]
                row.append(s)
            out.append(row)
        return out

    def as_strings(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.entries]


def _mpq(v):
    from .symexpr import _to_mpq

    return _to_mpq(v)


def polar_matrix(
    D: Distribution, cfg: PointSampleConfig | None = None, quotient: Quotient | None = None, modulo_cauchy: bool = True
) -> PolarMatrix:
    """Polar matrix of ``D``, taken on its quotient by the Cauchy bundle.

    With ``modulo_cauchy=False`` every basis field of ``D`` is a column.

    The frame completion is the set of coordinate fields at the non-pivot
    columns of the canonical echelon, which is the greedy completion by
    coordinate fields in index order.
    """
    cfg = cfg or D.cfg
    if quotient is None:
        quotient = quotient_by_cauchy(D, cfg, None if modulo_cauchy else Distribution(D.chart, [], cfg))
    q = quotient
    comp = tuple(D.echelon.complement())
    K = D.chart.field
    n = q.rank
    struct = D.structure_functions()
    pos = q.positions
    c = [[[K.zero] * n for _ in range(n)] for _ in comp]
    for a in range(n):
        for b in range(a + 1, n):
            i, j = pos[a], pos[b]
            vec = struct[(i, j)] if i < j else [-x for x in struct[(j, i)]]
            for r, k in enumerate(comp):
                c[r][a][b] = vec[k]
                c[r][b][a] = -vec[k]
    e_names = tuple(D.chart.fresh_names("e", n))
    pchart = D.chart.extended(e_names)
    evars = pchart.field.gens[D.dim :]
    lifted = [[[Expression(D.chart, v).lift(pchart).value for v in row] for row in ck] for ck in c]
    entries = []
    for r in range(len(comp)):
        row = []
        for b in range(n):
            s = pchart.field.zero
            for a in range(n):
                if lifted[r][a][b]:
                    s += evars[a] * lifted[r][a][b]
            row.append(Expression(pchart, s))
        entries.append(tuple(row))
    pts = tuple(D.certificate.points)
    return PolarMatrix(q, comp, c, pchart, e_names, tuple(entries), pts)


def _eval_rank(raw_rows, chart: Chart, points) -> int:
    best = 0
    for p in points:
        vals = []
        ok = True
        for row in raw_rows:
            r = []
            for a in row:
                v = Expression(chart, a).eval_mpq(p._mpq) if a else 0
                if v is POLE:
                    ok = False
                    break
                r.append(v)
            if not ok:
                break
            vals.append(r)
        if ok:
            best = max(best, rank_mpq(vals) if vals else 0)
    return best


def degree(pm: PolarMatrix, line: Sequence, points: Sequence[RationalPoint] | None = None) -> int:
    """Rank of ``sigma(E)`` at the given line, maximised over base points."""
    if all((not l.value) if isinstance(l, Expression) else l == 0 for l in line):
        raise ValueError("the zero vector does not define a line")
    if len(line) != pm.quotient.rank:
        raise ValueError(f"line has {len(line)} entries, expected {pm.quotient.rank}")
    raw = pm.at_line(line)
    return _eval_rank(raw, pm.base.chart, points or pm.witness_points)


@dataclass
class SingularVariety:
    polar: PolarMatrix
    generic_rank: int
    equations: tuple[Expression, ...]
    kind: str  # "all", "hyperplane" or "unclassified"
    linear_form: tuple[Expression, ...] = ()
    bhat: tuple[tuple[Expression, ...], ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def is_linear(self) -> bool:
        return self.kind in ("all", "hyperplane")

    @property
    def rank(self) -> int | None:
        return len(self.bhat) if self.is_linear else None

    def bhat_fields(self) -> tuple[VectorField, ...]:
        return tuple(self.polar.quotient.lift(v) for v in self.bhat)


def _param_points(pm: PolarMatrix, cfg: PointSampleConfig):
    sampler = PointSampler(pm.param_chart, cfg.seed)
    exprs = [e for row in pm.entries for e in row if not e.is_polynomial()]
    out, misses = [], 0
    while len(out) < cfg.samples:
        p = sampler.draw()
        if any(e.denominator.eval_mpq(p._mpq) == 0 for e in exprs):
            misses += 1
            if misses > cfg.retries:
                raise RegularityError("polar matrix sampling exhausted its retry budget")
            continue
        out.append(p)
    return out


def _det(rows, field):
    n = len(rows)
    if n == 0:
        return field.one
    dom = field.to_domain()
    M = DomainMatrix([[dom.convert(x) for x in r] for r in rows], (n, n), dom)
    return M.det()


def singular_variety(pm: PolarMatrix, cfg: PointSampleConfig | None = None) -> SingularVariety:
    cfg = cfg or pm.base.cfg
    n = pm.quotient.rank
    base = pm.base.chart
    K = base.field
    pts = _param_points(pm, cfg)
    ranks = []
    for p in pts:
        m = [[e.eval_mpq(p._mpq) for e in row] for row in pm.entries]
        ranks.append(rank_mpq(m) if m else 0)
    g = max(ranks) if ranks else 0
    if g == 0:
        basis = tuple(tuple(base.one() if i == j else base.zero() for j in range(n)) for i in range(n))
        return SingularVariety(pm, 0, (), "all", (), basis, ("every line has degree 0",))
    PK = pm.param_chart.field
    minors = []
    nrows = len(pm.rows)
    for rs in combinations(range(nrows), g):
        for cs in combinations(range(n), g):
            sub = [[pm.entries[r][c].value for c in cs] for r in rs]
            d = _det(sub, PK)
            if d:
                minors.append(d)
    equations = tuple(Expression(pm.param_chart, m) for m in minors)
    nb = base.dim
    gcd = None
    for m in minors:
        num = m.numer
        gcd = num if gcd is None else gcd.gcd(num)
    _, factors = gcd.factor_list()
    efactors = []
    for f, mult in factors:
        if any(any(mono[nb:]) for mono in f.itermonoms()):
            efactors.append((f, mult))
    if len(efactors) != 1:
        return SingularVariety(pm, g, equations, "unclassified", notes=(f"{len(efactors)} distinct factors in the parameters",))
    f, _ = efactors[0]
    if any(sum(mono[nb:]) != 1 for mono in f.itermonoms()):
        return SingularVariety(pm, g, equations, "unclassified", notes=("common factor is not linear in the parameters",))
    # coefficient of e^a as a base polynomial
    coeffs = [K.zero] * n
    for mono, c in f.terms():
        a = next(i for i, e in enumerate(mono[nb:]) if e)
        coeffs[a] += K.new(K.ring.from_dict({mono[:nb]: c}))
    rels = relations(K, [[c] for c in coeffs], 1)
    bhat = tuple(tuple(Expression(base, x) for x in rel) for rel in rels)
    form = tuple(Expression(base, c) for c in coeffs)
    sv = SingularVariety(pm, g, equations, "hyperplane", form, bhat)
    for vec in bhat:
        if degree(pm, vec) >= g:
            log.warning("hyperplane direction %s has generic degree", vec)
            return SingularVariety(pm, g, equations, "unclassified", notes=("hyperplane failed sampled validation",))
    return sv


@dataclass
class WeberReport:
    base: Distribution
    is_weber: bool
    cauchy_rank: int | None = None
    q: int | None = None
    quotient_rank: int | None = None
    variety: SingularVariety | None = None
    bhat: tuple[VectorField, ...] = ()
    resolvent: Distribution | None = None
    criteria: dict[str, bool] = field(default_factory=dict)
    diagnostics: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def integrable(self) -> bool:
        return bool(self.is_weber and self.criteria.get("resolvent_integrable"))

    def as_dict(self) -> dict:
        out = {
            "is_weber": self.is_weber,
            "cauchy_rank": self.cauchy_rank,
            "q": self.q,
            "quotient_rank": self.quotient_rank,
            "criteria": dict(self.criteria),
            "diagnostics": list(self.diagnostics),
            "notes": list(self.notes),
        }
        if self.resolvent is not None:
            out["singular_subbundle"] = [str(f) for f in self.bhat]
            out["resolvent"] = [str(f) for f in self.resolvent.generators]
        return out


def _sigma_on(pm: PolarMatrix, vec):
    return pm.at_line(vec)


def _degree_one(pm: PolarMatrix, bhat) -> bool:
    """Whether every line of B-hat has polar rank exactly one."""
    mats = [_sigma_on(pm, v) for v in bhat]
    rows, cols = pm.shape
    if all(not x for m in mats for r in m for x in r):
        return False
    base = pm.base.chart
    for k, l in combinations(range(rows), 2):
        for b, c in combinations(range(cols), 2):
            for i in range(len(mats)):
                for j in range(i, len(mats)):
                    si, sj = mats[i], mats[j]
                    if i == j:
                        t = si[k][b] * si[l][c] - si[k][c] * si[l][b]
                    else:
                        t = si[k][b] * sj[l][c] + sj[k][b] * si[l][c] - si[k][c] * sj[l][b] - sj[k][c] * si[l][b]
                    if t and not is_zero(Expression(base, t)):
                        return False
    return True


def _delta_vanishes(pm: PolarMatrix, bhat) -> bool:
    base = pm.base.chart
    n = pm.quotient.rank
    for ck in pm.structure:
        for i, j in combinations(range(len(bhat)), 2):
            s = base.field.zero
            for a in range(n):
                ea = bhat[i][a].value
                if not ea:
                    continue
                for b in range(n):
                    fb = bhat[j][b].value
                    if fb and ck[a][b]:
                        s += ea * fb * ck[a][b]
            if s and not is_zero(Expression(base, s)):
                return False
    return True


def resolvent_bundle(V: Distribution, cfg: PointSampleConfig | None = None) -> WeberReport:
    """Weber-structure test and resolvent bundle of ``V``."""
    cfg = cfg or V.cfg
    ch = cauchy_bundle(V, cfg)
    c = ch.rank
    dim = V.dim
    q = dim - V.rank
    diag = []
    top = derived_bundle(V, cfg)
    if top.rank != dim:
        diag.append(f"derived bundle has rank {top.rank}, not the full dimension {dim}")
    if V.rank != c + q + 1:
        diag.append(f"rank {V.rank} is not c + q + 1 = {c + q + 1}")
    if q < 2:
        diag.append(f"q = {q} is below 2")
    if diag:
        return WeberReport(V, False, c, q, V.rank - c, diagnostics=tuple(diag))
    quo = quotient_by_cauchy(V, cfg, ch)
    pm = polar_matrix(V, cfg, quo)
    sv = singular_variety(pm, cfg)
    if sv.kind != "hyperplane" or len(sv.bhat) != q:
        diag.append(f"singular variety is {sv.kind}" + ("" if sv.rank is None else f" of rank {sv.rank}") + f", expected a rank-{q} linear variety")
        return WeberReport(V, False, c, q, quo.rank, sv, diagnostics=tuple(diag))
    bhat = sv.bhat_fields()
    R = Distribution(V.chart, bhat + ch.generators, cfg)
    crit = {
        "resolvent_integrable": is_integrable(R, cfg),
        "degree_one": _degree_one(pm, sv.bhat),
        "delta_vanishes": _delta_vanishes(pm, sv.bhat),
    }
    notes = []
    if q >= 3:
        if len(set(crit.values())) != 1:
            raise CriteriaDisagreementError(f"criteria disagree: {crit}")
    else:
        notes.append("q = 2: criteria agreement is not asserted; integrability decided directly")
    return WeberReport(V, True, c, q, quo.rank, sv, bhat, R, crit, (), tuple(notes))
