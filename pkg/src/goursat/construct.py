"""Contact systems in coordinates and the construction of contact coordinates.

Chart naming for a generated system of type ``tau``: the independent
variable is ``x``; chains are numbered ``1..P`` in order of increasing
order, and chain ``a`` of order ``k`` owns ``za, za_1, ..., za_k``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from sympy.polys.matrices import DomainMatrix

from .distgeo import (
    DEFAULT_SAMPLING,
    Distribution,
    PointSampleConfig,
    VectorField,
    coordinate_field,
    lie_bracket,
    sample_points,
)
from .firstint import AnsatzConfig, IntegrationError, InvariantSet, first_integrals, verify_invariants
from .linalg import rank_mpq, solve_particular
from .signature import Analysis, GoursatVerdict, TypeVector, analyze, is_goursat_bundle
from .symexpr import POLE, Chart, Expression, RationalPoint, is_zero, parse

__all__ = [
    "ConstructionError",
    "ContactTransformation",
    "IntegrationNeeded",
    "Filtration",
    "FiltrationLevel",
    "PrologationSystem",
    "VerificationResult",
    "build_filtration",
    "chain_names",
    "contact_coordinates",
    "generate_contact_system",
    "select_fundamental_functions",
    "total_derivative_operator",
    "verify_equivalence",
]

log = logging.getLogger(__name__)


class ConstructionError(RuntimeError):
    def __init__(self, message: str, level: str | None = None, detail=None):
        super().__init__(message)
        self.level = level
        self.detail = detail


class IntegrationNeeded(RuntimeError):
    """One or more filtration levels could not be integrated by the ansatz."""

    def __init__(self, failures: list[IntegrationError], levels: list["FiltrationLevel"]):
        labels = ", ".join(f.level for f in failures)
        super().__init__(f"integration needed for {labels}")
        self.failures = failures
        self.levels = levels

    def resume_stub(self) -> dict:
        """A resume document listing what was found and what is missing."""
        inv = {}
        detail = {}
        for lv in self.levels:
            if lv.invariants is not None:
                inv[lv.label] = [str(f) for f in lv.invariants.functions]
        for f in self.failures:
            inv[f.level] = [str(g) for g in f.partial]
            detail[f.level] = {
                "generators": [g.to_mapping() for g in f.distribution.generators],
                "missing": f.missing,
            }
        return {"format": 1, "invariants": inv, "unsolved": detail}


def chain_orders(tau: Sequence[int]) -> list[int]:
    """Order of each chain, ascending."""
    return [l for l, q in enumerate(TypeVector(tau), start=1) for _ in range(q)]


def chain_names(tau: Sequence[int]) -> list[list[str]]:
    """``names[a][l]`` is the coordinate of chain ``a+1`` at order ``l``."""
    return [[f"z{a}" if l == 0 else f"z{a}_{l}" for l in range(k + 1)] for a, k in enumerate(chain_orders(tau), start=1)]


@dataclass
class PrologationSystem:
    tau: TypeVector
    chart: Chart
    distribution: Distribution
    chains: list[list[str]]

    @property
    def generators(self):
        return self.distribution.generators


def generate_contact_system(tau: Sequence[int], cfg: PointSampleConfig = DEFAULT_SAMPLING) -> PrologationSystem:
    tau = TypeVector(tau)
    chains = chain_names(tau)
    chart = Chart(["x"] + [n for ch in chains for n in ch])
    drift = {"x": chart.one()}
    for ch in chains:
        for lo, hi in zip(ch, ch[1:]):
            drift[lo] = chart.coordinate(hi)
    gens = [VectorField.from_mapping(chart, drift)]
    gens += [coordinate_field(chart, ch[-1]) for ch in chains]
    return PrologationSystem(tau, chart, Distribution(chart, gens, cfg, label=f"C{tau}"), chains)


# ---------------------------------------------------------------------------
# filtration


@dataclass
class FiltrationLevel:
    label: str
    distribution: Distribution
    expected_invariants: int
    invariants: InvariantSet | None = None

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "rank": self.distribution.rank,
            "expected_invariants": self.expected_invariants,
            "invariants": None if self.invariants is None else [str(f) for f in self.invariants.functions],
        }


@dataclass
class Filtration:
    analysis: Analysis
    tau: TypeVector
    levels: list[FiltrationLevel]
    integrations: int = 0

    def level(self, label: str) -> FiltrationLevel:
        for lv in self.levels:
            if lv.label == label:
                return lv
        raise KeyError(label)

    @property
    def top_label(self) -> str:
        return self.levels[-1].label

    def labels(self) -> list[str]:
        return [lv.label for lv in self.levels]


def filtration_levels(verdict: GoursatVerdict) -> list[FiltrationLevel]:
    """The integrable bundles whose invariants the construction needs."""
    an = verdict.analysis
    sig = an.signature
    k, dim = an.k, an.V.dim
    m = sig.ms
    levels = []
    for j in range(1, k):
        levels.append(FiltrationLevel(f"ch{j}_{j - 1}", an.intersections[j], dim - m[j - 1] + 1))
        levels.append(FiltrationLevel(f"ch{j}", an.cauchy[j], dim - sig.chis[j]))
    dk = sig.velocity[-1]
    if dk > 1:
        levels.append(FiltrationLevel("resolvent", verdict.weber.resolvent, dk + 1))
    else:
        pk, pk1 = verdict.pi
        levels.append(FiltrationLevel(f"pi{k}", pk, 2))
        levels.append(FiltrationLevel(f"pi{k + 1}", pk1, 1))
    for lv in levels:
        if lv.distribution.chart.dim - lv.distribution.rank != lv.expected_invariants:
            raise ConstructionError(
                f"level {lv.label} has rank {lv.distribution.rank}; "
                f"{lv.expected_invariants} invariants expected on {dim} dimensions",
                lv.label,
            )
    return levels


def build_filtration(
    V,
    verdict: GoursatVerdict | None = None,
    cfg: PointSampleConfig | None = None,
    ansatz: AnsatzConfig | None = None,
    supplied: Mapping[str, Sequence[Expression | str]] | None = None,
) -> Filtration:
    """Assemble the filtration and integrate every level.

    ``supplied`` maps level labels to user-provided invariants, which are
    verified instead of searched for.  Every level is attempted; if any
    fails, :class:`IntegrationNeeded` lists all of them.
    """
    if verdict is None:
        verdict = is_goursat_bundle(V, cfg)
    if not verdict.accepted:
        raise ConstructionError("distribution is not a Goursat bundle")
    an = verdict.analysis
    cfg = cfg or an.V.cfg
    ansatz = ansatz or AnsatzConfig()
    supplied = supplied or {}
    levels = filtration_levels(verdict)
    count = 0
    failures = []
    for lv in levels:
        D = lv.distribution
        if lv.label in supplied:
            cands = [c if isinstance(c, Expression) else parse(c, D.chart) for c in supplied[lv.label]]
            res = verify_invariants(D, cands, cfg)
            if not res.accepted:
                raise ConstructionError(f"supplied invariants for {lv.label} rejected: {res.reason}", lv.label, res)
            lv.invariants = res
            continue
        try:
            lv.invariants = first_integrals(D, ansatz, cfg)
        except IntegrationError as exc:
            exc.level = lv.label
            failures.append(exc)
            continue
        count += lv.invariants.searched
    if failures:
        raise IntegrationNeeded(failures, levels)
    return Filtration(an, verdict.tau, levels, count)


# ---------------------------------------------------------------------------
# fundamental functions


def _jacobian_rank(funcs: Sequence[Expression], points: Sequence[RationalPoint]) -> int:
    if not funcs:
        return 0
    grads = [[f.diff(i) for i in range(f.chart.dim)] for f in funcs]
    best = 0
    for p in points:
        rows = []
        for g in grads:
            vals = [d.eval_mpq(p._mpq) for d in g]
            if any(v is POLE for v in vals):
                break
            rows.append(vals)
        else:
            best = max(best, rank_mpq(rows))
    return best


def _witness(chart: Chart, funcs, cfg: PointSampleConfig, count=None):
    return sample_points(chart, funcs, cfg, count)


def total_derivative_operator(V: Distribution, x: Expression) -> VectorField:
    """``X`` in ``V`` with ``X(x) = 1``.

    The first generator with constant nonzero ``G(x)`` is preferred; then the
    first with any nonzero ``G(x)``; otherwise a particular solution over the
    function field.
    """
    vals = [g(x) for g in V.generators]
    for g, v in zip(V.generators, vals):
        if v.value and v.is_constant():
            return g.scale(1 / v)
    for g, v in zip(V.generators, vals):
        if v.value:
            return g.scale(1 / v)
    raise ConstructionError(f"no section X of V satisfies X({x}) = 1")


@dataclass
class FundamentalFunctions:
    x: Expression
    X: VectorField
    tops: list[tuple[int, Expression]]  # (order, chain top) in chain order


def select_fundamental_functions(
    F: Filtration, tau: Sequence[int] | None = None, cfg: PointSampleConfig | None = None
) -> FundamentalFunctions:
    tau = TypeVector(tau or F.tau)
    an = F.analysis
    V = an.V
    cfg = cfg or V.cfg
    k = tau.k
    top = F.levels[-1].invariants.functions
    funcs = [f for lv in F.levels for f in lv.invariants.functions]
    pts = _witness(V.chart, funcs + [c for g in V.generators for c in g.coeffs], cfg)
    # independent variable: prefer a constant X(x) = 1 solution
    ordered = sorted(top, key=lambda f: f.sort_key())
    x = None
    for f in ordered:
        if any(g(f).value and g(f).is_constant() for g in V.generators):
            x = f
            break
    if x is None:
        for f in ordered:
            if any(g(f).value for g in V.generators):
                x = f
                break
    if x is None:
        raise ConstructionError("no top-level invariant admits X(x) = 1", F.top_label)
    X = total_derivative_operator(V, x)
    if F.levels[-1].label == "resolvent":
        order_k_pool = top
    else:
        order_k_pool = F.level(f"pi{k}").invariants.functions
    chosen: dict[int, list[Expression]] = {}
    selected = [x]
    picks = []
    for f in sorted(order_k_pool, key=lambda f: f.sort_key()):
        if len(picks) == tau[k - 1]:
            break
        if _jacobian_rank(selected + picks + [f], pts) == len(selected) + len(picks) + 1:
            picks.append(f)
    if len(picks) != tau[k - 1]:
        raise ConstructionError(f"found {len(picks)} of {tau[k - 1]} order-{k} chain tops", F.top_label)
    chosen[k] = picks
    for j in range(k - 1, 0, -1):
        if not tau[j - 1]:
            continue
        # everything the higher chains contribute down to order k_z - j
        S = [x]
        for kz, tops in chosen.items():
            for z in tops:
                g = z
                S.append(g)
                for _ in range(kz - j):
                    g = X(g)
                    S.append(g)
        pool = F.level(f"ch{j}_{j - 1}").invariants.functions
        picks = []
        for f in sorted(pool, key=lambda f: f.sort_key()):
            if len(picks) == tau[j - 1]:
                break
            if _jacobian_rank(S + picks + [f], pts) == len(S) + len(picks) + 1:
                picks.append(f)
        if len(picks) != tau[j - 1]:
            raise ConstructionError(
                f"found {len(picks)} of {tau[j - 1]} independent order-{j} chain tops", f"ch{j}_{j - 1}"
            )
        chosen[j] = picks
    tops = [(j, z) for j in sorted(chosen) for z in chosen[j]]
    return FundamentalFunctions(x, X, tops)


# ---------------------------------------------------------------------------
# contact coordinates


@dataclass
class ContactTransformation:
    tau: TypeVector
    source: Chart
    components: list[tuple[str, Expression]]  # (target name, function)
    X: VectorField | None = None
    certificate: "VerificationResult | None" = None

    @property
    def target(self) -> Chart:
        return generate_contact_system(self.tau).chart

    def function(self, name: str) -> Expression:
        for n, f in self.components:
            if n == name:
                return f
        raise KeyError(name)

    def chain(self, a: int) -> list[Expression]:
        names = chain_names(self.tau)[a - 1]
        return [self.function(n) for n in names]

    def as_dict(self) -> dict:
        out = {
            "format": 1,
            "type": list(self.tau),
            "source_chart": list(self.source.names),
            "map": [[n, str(f)] for n, f in self.components],
        }
        if self.X is not None:
            out["total_derivative"] = self.X.to_mapping()
        if self.certificate is not None:
            out["certificate"] = self.certificate.as_dict()
        return out


def contact_coordinates(
    V: Distribution, F: Filtration, tau: Sequence[int] | None = None, cfg: PointSampleConfig | None = None,
    fundamental: FundamentalFunctions | None = None,
) -> ContactTransformation:
    cfg = cfg or V.cfg
    tau = TypeVector(tau or F.tau)
    ff = fundamental or select_fundamental_functions(F, tau, cfg)
    X = ff.X
    names = chain_names(tau)
    comps = [("x", ff.x)]
    for (order, top), chain in zip(ff.tops, names):
        g = top
        comps.append((chain[0], g))
        for l in range(1, order + 1):
            g = X(g)
            comps.append((chain[l], g))
    funcs = [f for _, f in comps]
    if len(funcs) != V.dim:
        raise ConstructionError(f"{len(funcs)} contact coordinates for a {V.dim}-dimensional chart")
    pts = _witness(V.chart, funcs, cfg)
    r = _jacobian_rank(funcs, pts)
    if r != V.dim:
        # find the first prefix that loses rank
        bad = None
        for i in range(1, len(funcs) + 1):
            if _jacobian_rank(funcs[:i], pts) < i:
                bad = comps[i - 1][0]
                break
        raise ConstructionError(f"contact coordinates are dependent (Jacobian rank {r} < {V.dim}); first dependent: {bad}", bad)
    return ContactTransformation(tau, V.chart, comps, X)


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationResult:
    accepted: bool
    points: tuple[RationalPoint, ...]
    jacobian_rank: int | None = None
    determinant: Expression | None = None
    failure: str | None = None
    failing_point: RationalPoint | None = None
    chain_identities: bool | None = None
    residual: dict | None = None  # a direction in one span but not the other

    def as_dict(self) -> dict:
        out = {
            "accepted": self.accepted,
            "witness_points": [p.as_dict() for p in self.points],
        }
        if self.jacobian_rank is not None:
            out["jacobian_rank"] = self.jacobian_rank
        if self.chain_identities is not None:
            out["chain_identities"] = self.chain_identities
        if self.determinant is not None:
            out["jacobian_determinant"] = str(self.determinant)
        if self.failure:
            out["failure"] = self.failure
        if self.failing_point is not None:
            out["failing_point"] = self.failing_point.as_dict()
        if self.residual is not None:
            out["residual"] = self.residual
        return out


def jacobian_determinant(T: ContactTransformation) -> Expression:
    chart = T.source
    K = chart.field
    dom = K.to_domain()
    rows = [[dom.convert(f.diff(i).value) for i in range(chart.dim)] for _, f in T.components]
    return Expression(chart, DomainMatrix(rows, (chart.dim, chart.dim), dom).det())


def verify_equivalence(
    V: Distribution,
    T: ContactTransformation,
    cfg: PointSampleConfig | None = None,
    determinant: bool = False,
) -> VerificationResult:
    """Check ``T_* V = C(tau)`` by exact rank tests at sampled points."""
    cfg = cfg or V.cfg
    target = generate_contact_system(T.tau, cfg)
    tchart = target.chart
    if len(T.components) != V.dim or tchart.dim != V.dim:
        raise ValueError(f"map has {len(T.components)} components, chart has {V.dim}, type needs {tchart.dim}")
    order = {n: i for i, n in enumerate(tchart.names)}
    if sorted(order.get(n, -1) for n, _ in T.components) != list(range(tchart.dim)):
        raise ValueError("map components do not name every contact coordinate exactly once")
    funcs = [None] * tchart.dim
    for n, f in T.components:
        if f.chart is not V.chart:
            raise ValueError(f"component {n} is not over the source chart")
        funcs[order[n]] = f
    pushed = [[g(f) for f in funcs] for g in V.generators]
    exprs = funcs + [e for row in pushed for e in row]
    pts = _witness(V.chart, exprs, cfg)
    grads = [[f.diff(i) for i in range(V.dim)] for f in funcs]
    m0 = V.rank
    for p in pts:
        J = [[d.eval_mpq(p._mpq) for d in g] for g in grads]
        jr = rank_mpq(J)
        if jr != V.dim:
            return VerificationResult(False, tuple(pts), jr, failure=f"Jacobian rank {jr} < {V.dim}", failing_point=p)
        image = [f.eval_mpq(p._mpq) for f in funcs]
        ip = RationalPoint(tchart, image)
        A = [[e.eval_mpq(p._mpq) for e in row] for row in pushed]
        B = [g.at(ip) for g in target.generators]
        if any(v is POLE for row in B for v in row):
            return VerificationResult(False, tuple(pts), jr, failure="image point is a pole of the contact system", failing_point=p)
        ra, rb, rab = rank_mpq(A), rank_mpq(B), rank_mpq(A + B)
        if not (ra == rb == rab == m0):
            return VerificationResult(
                False, tuple(pts), jr,
                failure=f"pushed-forward span differs from C{T.tau} (ranks {ra}, {rb}, joint {rab})",
                failing_point=p,
                residual=_residual(A, B, tchart, V, target),
            )
    chains = _chain_identities(T, V) if T.X is not None else None
    det = jacobian_determinant(T) if determinant else None
    return VerificationResult(True, tuple(pts), V.dim, det, chain_identities=chains)


def _residual(A, B, tchart, V, target) -> dict | None:
    rb = rank_mpq(B)
    for i, row in enumerate(A):
        if rank_mpq(B + [row]) > rb:
            vec = {n: str(Fraction(v)) for n, v in zip(tchart.names, row) if v}
            return {"source": "pushed generator", "generator": str(V.generators[i]), "vector": vec}
    ra = rank_mpq(A)
    for i, row in enumerate(B):
        if rank_mpq(A + [row]) > ra:
            vec = {n: str(Fraction(v)) for n, v in zip(tchart.names, row) if v}
            return {"source": "contact generator", "generator": str(target.generators[i]), "vector": vec}
    return None


def _chain_identities(T: ContactTransformation, V: Distribution) -> bool:
    X = T.X
    if not is_zero(X(T.function("x")) - 1):
        return False
    for chain in chain_names(T.tau):
        fs = [T.function(n) for n in chain]
        for lo, hi in zip(fs, fs[1:]):
            if not is_zero(X(lo) - hi):
                return False
    return True
