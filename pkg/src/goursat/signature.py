"""Derived types, type vectors and the Goursat-bundle recognition test."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .distgeo import (
    DEFAULT_SAMPLING,
    DerivedFlag,
    Distribution,
    PointSampleConfig,
    cauchy_bundle,
    derived_flag,
    intersect,
    is_integrable,
    lie_bracket,
)
from .linalg import Echelon
from .singvar import WeberReport, resolvent_bundle

__all__ = [
    "Analysis",
    "DerivedTypeSignature",
    "GoursatVerdict",
    "TypeVector",
    "analyze",
    "derived_type",
    "is_goursat_bundle",
    "matches_partial_prolongation",
    "pi_bundles",
    "predicted_derived_type",
]


class TypeVector(tuple):
    """``<rho_1, ..., rho_k>``: rho_l chains of order l; the last entry is positive."""

    def __new__(cls, entries: Sequence[int]):
        entries = tuple(int(x) for x in entries)
        if not entries:
            raise ValueError("a type vector needs at least one entry")
        if any(x < 0 for x in entries):
            raise ValueError(f"negative entry in {entries}")
        if entries[-1] < 1:
            raise ValueError(f"last entry of {entries} must be positive")
        return super().__new__(cls, entries)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, int]]) -> "TypeVector":
        """From ``[(q_1, k_1), ..., (q_t, k_t)]`` with strictly increasing orders."""
        orders = [k for _, k in pairs]
        if orders != sorted(set(orders)) or any(q < 1 or k < 1 for q, k in pairs):
            raise ValueError(f"invalid pair form {pairs}")
        top = orders[-1]
        entries = [0] * top
        for q, k in pairs:
            entries[k - 1] = q
        return cls(entries)

    @classmethod
    def parse(cls, text: str) -> "TypeVector":
        text = text.strip().strip("<>⟨⟩[]()")
        return cls(int(x) for x in text.replace(";", ",").split(",") if x.strip())

    @property
    def k(self) -> int:
        return len(self)

    @property
    def P(self) -> int:
        return sum(self)

    @property
    def t(self) -> int:
        return sum(1 for x in self if x)

    def pairs(self) -> list[tuple[int, int]]:
        return [(q, l) for l, q in enumerate(self, start=1) if q]

    @property
    def dim(self) -> int:
        return 1 + sum(q * (l + 1) for q, l in self.pairs())

    def __str__(self) -> str:
        return "<" + ",".join(str(x) for x in self) + ">"

    def __repr__(self) -> str:
        return f"TypeVector({list(self)})"


@dataclass(frozen=True)
class DerivedTypeSignature:
    pairs: tuple[tuple[int, int], ...]
    intersections: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        ms = self.ms
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError(f"ranks {ms} are not strictly increasing")

    @classmethod
    def from_lists(cls, pairs, intersections=None) -> "DerivedTypeSignature":
        return cls(tuple((int(m), int(c)) for m, c in pairs), dict(intersections or {}))

    @property
    def k(self) -> int:
        return len(self.pairs) - 1

    @property
    def ms(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.pairs)

    @property
    def chis(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.pairs)

    @property
    def velocity(self) -> tuple[int, ...]:
        ms = self.ms
        return tuple(ms[j] - ms[j - 1] for j in range(1, len(ms)))

    @property
    def acceleration(self) -> tuple[int, ...]:
        v = self.velocity
        if not v:
            return ()
        return tuple(v[i] - v[i - 1] for i in range(1, len(v))) + (v[-1],)

    @property
    def deceleration(self) -> tuple[int, ...]:
        a = self.acceleration
        if not a:
            return ()
        return tuple(-x for x in a[:-1]) + (a[-1],)

    def as_lists(self) -> list[list[int]]:
        return [list(p) for p in self.pairs]

    def as_dict(self) -> dict:
        return {
            "derived_type": self.as_lists(),
            "intersections": {str(i): r for i, r in sorted(self.intersections.items())},
            "velocity": list(self.velocity),
            "acceleration": list(self.acceleration),
            "deceleration": list(self.deceleration),
        }


def predicted_derived_type(tau: Sequence[int]) -> DerivedTypeSignature:
    tau = TypeVector(tau)
    k, P = tau.k, tau.P
    d2 = {j: -tau[j - 2] for j in range(2, k + 1)}
    m = [1 + (1 + l) * P + sum((l + 1 - j) * d2[j] for j in range(2, l + 1)) for l in range(k + 1)]
    chi = [2 * m[j] - m[j + 1] - 1 for j in range(k)] + [m[k]]
    inter = {i: m[i - 1] - 1 for i in range(1, k)}
    return DerivedTypeSignature(tuple(zip(m, chi)), inter)


def matches_partial_prolongation(sig: DerivedTypeSignature):
    """``(ok, tau, violation)``; ``violation`` names the first failed equation."""
    dec = sig.deceleration
    if not dec:
        return False, None, "derived length 0 has no deceleration"
    try:
        tau = TypeVector(dec)
    except ValueError as exc:
        return False, None, f"deceleration {list(dec)} is not a type vector: {exc}"
    pred = predicted_derived_type(tau)
    for j, (have, want) in enumerate(zip(sig.ms, pred.ms)):
        if have != want:
            return False, tau, f"m_{j} = {have}, expected {want}"
    for j, (have, want) in enumerate(zip(sig.chis, pred.chis)):
        if have != want:
            rule = f"2*m_{j} - m_{j + 1} - 1" if j < sig.k else f"m_{j}"
            return False, tau, f"chi^{j} = {have}, expected {rule} = {want}"
    for i, want in pred.intersections.items():
        have = sig.intersections.get(i)
        if have is not None and have != want:
            return False, tau, f"chi^{i}_{i - 1} = {have}, expected m_{i - 1} - 1 = {want}"
    return True, tau, None


@dataclass
class Analysis:
    """A distribution with its derived flag, Cauchy bundles and intersections."""

    V: Distribution
    flag: DerivedFlag
    cauchy: tuple[Distribution, ...]
    intersections: dict[int, Distribution]
    signature: DerivedTypeSignature

    @property
    def k(self) -> int:
        return self.flag.length


def analyze(V: Distribution, cfg: PointSampleConfig | None = None) -> Analysis:
    cfg = cfg or V.cfg
    flag = derived_flag(V, cfg)
    ch = tuple(cauchy_bundle(L, cfg) for L in flag.levels)
    inter = {i: intersect(flag[i - 1], ch[i], cfg) for i in range(1, flag.length)}
    pairs = tuple((L.rank, c.rank) for L, c in zip(flag.levels, ch))
    sig = DerivedTypeSignature(pairs, {i: d.rank for i, d in inter.items()})
    return Analysis(V, flag, ch, inter, sig)


def derived_type(V: Distribution, cfg: PointSampleConfig | None = None) -> DerivedTypeSignature:
    return analyze(V, cfg).signature


def _bracket_closure(A: Distribution, B: Distribution, cfg) -> Distribution:
    """``A + [A, B]`` built from basis brackets."""
    ech = A.echelon.copy()
    extra = []
    for a in A.basis_fields:
        for b in B.basis_fields:
            br = lie_bracket(a, b)
            if ech.add(br.raw):
                extra.append(br)
    return Distribution(A.chart, A.generators + tuple(extra), cfg)


def pi_bundles(V, cfg: PointSampleConfig | None = None):
    """The pair ``(Pi^k, Pi^{k+1})`` used when the last velocity is 1.

    ``Pi^k`` adjoins to ``Ch V^(k-1)_{k-2}`` its brackets with ``V^(k-2)``,
    and ``Pi^{k+1}`` adjoins to ``Pi^k`` its brackets with ``V^(k-1)``.
    """
    an = V if isinstance(V, Analysis) else analyze(V, cfg)
    cfg = cfg or an.V.cfg
    k = an.k
    if k < 2:
        raise ValueError("the Pi bundles need derived length at least 2")
    base = an.intersections[k - 1]
    pk = _bracket_closure(base, an.flag[k - 2], cfg)
    pk1 = _bracket_closure(pk, an.flag[k - 1], cfg)
    pk.label, pk1.label = f"pi{k}", f"pi{k + 1}"
    return pk, pk1


@dataclass
class ConditionResult:
    name: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"condition": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class GoursatVerdict:
    accepted: bool
    tau: TypeVector | None
    signature: DerivedTypeSignature | None
    conditions: list[ConditionResult] = field(default_factory=list)
    weber: WeberReport | None = None
    pi: tuple[Distribution, Distribution] | None = None
    analysis: Analysis | None = None
    message: str = ""

    def failed(self) -> list[ConditionResult]:
        return [c for c in self.conditions if not c.passed]

    def as_dict(self) -> dict:
        out = {
            "accepted": self.accepted,
            "type": None if self.tau is None else list(self.tau),
            "message": self.message,
            "conditions": [c.as_dict() for c in self.conditions],
        }
        if self.weber is not None:
            out["weber"] = self.weber.as_dict()
        if self.pi is not None:
            out["pi_bundles"] = {d.label: [str(f) for f in d.canonical_fields()] for d in self.pi}
        return out


def is_goursat_bundle(V, cfg: PointSampleConfig | None = None) -> GoursatVerdict:
    an = V if isinstance(V, Analysis) else analyze(V, cfg)
    cfg = cfg or an.V.cfg
    sig = an.signature
    k = an.k
    if k <= 1:
        return GoursatVerdict(False, None, sig, analysis=an, message=f"derived length {k} is not greater than 1")
    conds = []

    def finish(msg=""):
        ok = all(c.passed for c in conds)
        return GoursatVerdict(ok, tau if ok else None, sig, conds, weber, pi, an, msg)

    weber, pi = None, None
    ok, tau, why = matches_partial_prolongation(sig)
    conds.append(ConditionResult("i.rank_equations", ok, why or f"matches the type {tau}"))
    full = an.flag[k].is_full()
    conds.append(ConditionResult("i.top_is_tangent_bundle", full, f"rank of V^({k}) is {an.flag[k].rank} on a {an.V.dim}-dimensional chart"))
    if not (ok and full):
        return finish("derived type is not that of a partial prolongation")
    for i in range(1, k):
        d = an.intersections[i]
        integ = is_integrable(d, cfg)
        conds.append(ConditionResult(f"ii.intersection_{i}_{i - 1}_integrable", integ, f"rank {d.rank}"))
    if not all(c.passed for c in conds):
        return finish("an intersection bundle is not integrable")
    dk = sig.velocity[-1]
    if dk > 1:
        weber = resolvent_bundle(an.flag[k - 1], cfg)
        conds.append(ConditionResult("iii.weber_structure", weber.is_weber, "; ".join(weber.diagnostics) or f"singular sub-bundle of rank {weber.q}"))
        if weber.is_weber:
            rank_ok = len(weber.bhat) == dk
            conds.append(ConditionResult("iii.singular_rank", rank_ok, f"rank {len(weber.bhat)}, expected {dk}"))
            conds.append(ConditionResult("iii.resolvent_integrable", weber.criteria["resolvent_integrable"], f"resolvent rank {weber.resolvent.rank}"))
    else:
        pk, pk1 = pi_bundles(an, cfg)
        pi = (pk, pk1)
        m = sig.ms
        for d, want, name in ((pk, m[k - 1] - 1, f"pi{k}"), (pk1, m[k] - 1, f"pi{k + 1}")):
            conds.append(ConditionResult(f"iii.{name}_rank", d.rank == want, f"rank {d.rank}, expected {want}"))
            conds.append(ConditionResult(f"iii.{name}_integrable", is_integrable(d, cfg), ""))
    return finish("" if all(c.passed for c in conds) else "final condition failed")
