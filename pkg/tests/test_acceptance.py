"""One test per acceptance criterion; the terminal summary prints PASS/FAIL per criterion."""

import json
import time

import pytest
from click.testing import CliRunner

from goursat import (
    ContactTransformation,
    DerivedTypeSignature,
    analyze,
    build_filtration,
    contact_coordinates,
    derived_type,
    generate_contact_system,
    is_goursat_bundle,
    load_problem,
    load_transformation,
    matches_partial_prolongation,
    parse,
    predicted_derived_type,
    pushforward,
    resolvent_bundle,
    verify_equivalence,
)
from goursat.cli import main
from goursat.distgeo import VectorField, cauchy_bundle
from goursat.symexpr import Chart, is_zero

from conftest import FIXTURES, load_distribution
from oracles import all_taus

import test_properties as props


def cli(*args):
    res = CliRunner().invoke(main, [str(a) for a in args])
    return res.exit_code, json.loads(res.output)


def fx(name):
    return FIXTURES / name


def test_criterion_1_rational6_end_to_end():
    t0 = time.perf_counter()
    code, rep = cli("analyze", fx("rational6.yaml"))
    assert code == 0 and rep["derived_type"] == [[3, 0], [5, 3], [6, 6]]
    code, rep = cli("recognize", fx("rational6.yaml"))
    assert code == 0 and rep["verdict"]["type"] == [1, 1]
    code, rep = cli("construct", fx("rational6.yaml"))
    cert = rep["transformation"]["certificate"]
    assert code == 0 and cert["accepted"] and len(cert["witness_points"]) >= 12
    code, rep = cli("verify", fx("rational6.yaml"), fx("phi.yaml"))
    assert code == 0 and rep["certificate"]["accepted"]
    chart = load_problem(fx("rational6.yaml")).chart
    _, comps = load_transformation(fx("phi.yaml"), chart)
    stated = {"x": "x5 - 1/x1", "z1": "x6", "z1_1": "1/x1", "z2": "x4", "z2_1": "1 + x3", "z2_2": "(1 + x2*x6)/x6"}
    assert dict(comps) == {n: parse(t, chart) for n, t in stated.items()}
    assert time.perf_counter() - t0 < 10


def _marino_fields(C):
    M1 = VectorField.from_mapping(C, {"t": "1", "x1": "x2", "x2": "x3"})
    M2 = VectorField.from_mapping(C, {"x1": "x3", "x2": "x1", "x4": "1"})
    M3 = VectorField.from_mapping(C, {"x3": "1"})
    return M1, M2, M3


def test_criterion_2_marino():
    t0 = time.perf_counter()
    V = load_distribution("marino")
    assert derived_type(V).as_lists() == [[3, 0], [5, 2], [7, 7]]
    top = analyze(V).flag[1]
    rep = resolvent_bundle(top)
    C = V.chart
    M1, M2, M3 = _marino_fields(C)
    x1, x2 = parse("x1", C), parse("x2", C)
    ch = cauchy_bundle(top)
    stated = ch.with_generators([M2.scale(x1) - M1.scale(x2), M1 + M3.scale(x1)])
    assert rep.variety.is_linear and rep.variety.rank == 2
    assert ch.with_generators(rep.bhat) == stated
    assert rep.criteria["resolvent_integrable"]
    verdict = is_goursat_bundle(V)
    assert verdict.accepted and list(verdict.tau) == [0, 2]
    assert time.perf_counter() - t0 < 10


def test_criterion_3_prolonged_marino():
    t0 = time.perf_counter()
    V = load_distribution("prolonged_marino")
    sig = derived_type(V)
    assert sig.as_lists() == [[3, 0], [5, 2], [7, 4], [9, 7], [10, 10]]
    assert list(sig.deceleration) == [0, 0, 1, 1]
    T = contact_coordinates(V, build_filtration(V))
    C = V.chart
    assert [T.function(n) for n in ("z2", "z2_1", "z2_2", "z2_3", "z2_4")] == [parse(s, C) for s in ("x4", "v1", "v2", "v3", "u2")]
    X = T.X
    assert is_zero(X(T.function("x")) - 1)
    z1 = ["z1", "z1_1", "z1_2", "z1_3"]
    for lo, hi in zip(z1, z1[1:]):
        assert is_zero(X(T.function(lo)) - T.function(hi))
    tau, comps = load_transformation(fx("psi.yaml"), C)
    res = verify_equivalence(V, ContactTransformation(tau, C, comps), determinant=True)
    assert res.accepted
    stated = parse("-(-1 + v2 + v1^3)^3", C)
    assert res.determinant in (stated, -stated)
    assert time.perf_counter() - t0 < 60


def test_criterion_4_round_trip():
    t0 = time.perf_counter()
    taus = all_taus(4, 4) + [(0,) * (k - 1) + (1,) for k in (5, 6)]
    assert len(taus) >= 60
    for tau in taus:
        V = generate_contact_system(tau).distribution
        sig = derived_type(V)
        assert sig == predicted_derived_type(tau), tau
        if len(tau) >= 2:
            verdict = is_goursat_bundle(V)
            assert verdict.accepted and tuple(verdict.tau) == tau, tau
        else:
            ok, got, _ = matches_partial_prolongation(sig)
            assert ok and tuple(got) == tau
    assert time.perf_counter() - t0 < 300


@pytest.mark.parametrize("name", ["rational6", "marino", "prolonged_marino", "weber_perturbed", "weber_q2"])
def test_criterion_5_invariance(name, coordinate_changes):
    V = load_distribution(name)
    change = coordinate_changes[name]
    target = Chart(change["target_chart"])
    fwd = {n: parse(t, V.chart) for n, t in change["forward"].items()}
    inv = {n: parse(t, target) for n, t in change["inverse"].items()}
    W = pushforward(V, fwd, inv, target)
    assert derived_type(W) == derived_type(V)
    a, b = is_goursat_bundle(V), is_goursat_bundle(W)
    assert a.accepted == b.accepted and a.tau == b.tau
    assert [c.passed for c in a.conditions] == [c.passed for c in b.conditions]


def _weber_levels(V):
    an = analyze(V)
    for j in range(an.k):
        rep = resolvent_bundle(an.flag[j])
        if rep.is_weber:
            yield rep


def test_criterion_6_criteria_agree():
    checked = 0
    taus = [t for t in all_taus(4, 6) if t[-1] >= 3]
    corpus = [generate_contact_system(t).distribution for t in taus]
    corpus += [load_distribution(n) for n in ("marino", "prolonged_marino", "weber_perturbed", "c03_twisted")]
    for V in corpus:
        for rep in _weber_levels(V):
            assert len(set(rep.criteria.values())) == 1, (V, rep.criteria)
            checked += 1
    assert checked >= len(taus) + 3


def test_criterion_7_bracket_identities():
    props.test_bracket_antisymmetry()
    props.test_jacobi_identity()
    props.test_leibniz_and_linearity()


def test_criterion_7_finite_differences():
    props.test_derivative_matches_finite_difference()


def test_criterion_7_normalization():
    for name in props.CORPUS:
        props.test_normalization_idempotent_on_corpus(name)
    props.test_normalization_idempotent_on_stored_maps()
    props.test_print_parse_identity()


def test_criterion_8_negative_controls():
    sig = DerivedTypeSignature.from_lists([[3, 0], [5, 1], [6, 6]])
    ok, _, violation = matches_partial_prolongation(sig)
    assert not ok and violation
    code, rep = cli("verify", fx("prolonged_marino.yaml"), fx("psi_corrupted.yaml"))
    cert = rep["certificate"]
    assert code == 1 and not cert["accepted"]
    assert cert["failing_point"] and set(cert["failing_point"]) == set(load_problem(fx("prolonged_marino.yaml")).chart.names)
