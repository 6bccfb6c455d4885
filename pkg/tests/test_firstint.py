import pytest

from goursat import (
    AnsatzConfig,
    Chart,
    Distribution,
    IntegrationError,
    InvariantRejection,
    InvariantSet,
    VectorField,
    build_filtration,
    cauchy_bundle,
    derived_flag,
    first_integrals,
    is_goursat_bundle,
    parse,
    verify_invariants,
)
from goursat.distgeo import coordinate_field, sample_points, DEFAULT_SAMPLING
from goursat.linalg import rank_mpq
from goursat.symexpr import is_zero

from conftest import load_distribution


def jac_rank(funcs, chart, count=6):
    pts = sample_points(chart, funcs, DEFAULT_SAMPLING, count)
    return max(rank_mpq([[f.diff(i)(p) for i in range(chart.dim)] for f in funcs]) for p in pts)


def test_coordinate_harvesting():
    C = Chart(["x", "x1", "x2", "x3", "x4", "x5"])
    D = Distribution(C, [coordinate_field(C, "x3"), coordinate_field(C, "x4")])
    inv = first_integrals(D)
    assert [str(f) for f in inv.functions] == ["x", "x1", "x2", "x5"]
    assert inv.searched == 0


def test_cauchy_invariants_rational6(rational6):
    ch1 = cauchy_bundle(derived_flag(rational6)[1])
    inv = first_integrals(ch1)
    assert inv.rank == 3
    C = rational6.chart
    paper = [parse(t, C) for t in ("x3", "x4", "x5 - 1/x1")]
    assert jac_rank(list(inv.functions), C) == 3
    assert jac_rank(list(inv.functions) + paper, C) == 3
    for f in inv.functions:
        assert all(is_zero(g(f)) for g in ch1.generators)


def test_prolonged_marino_level_contains_z1(prolonged_marino):
    F = build_filtration(prolonged_marino)
    funcs = {str(f) for f in F.level("ch3_2").invariants.functions}
    target = parse("x1 - v1*x2", prolonged_marino.chart)
    assert str(target) in funcs


def test_ansatz_exhaustion_returns_partial(rational6):
    ch1 = cauchy_bundle(derived_flag(rational6)[1])
    with pytest.raises(IntegrationError) as info:
        first_integrals(ch1, AnsatzConfig(num_degree=3, den_degree=0))
    err = info.value
    assert err.missing == 1
    assert sorted(str(f) for f in err.partial) == ["x3", "x4"]


def test_soundness_is_checked_on_every_result(marino):
    v = is_goursat_bundle(marino)
    R = v.weber.resolvent
    with pytest.raises(IntegrationError) as info:
        first_integrals(R)
    for f in info.value.partial:
        assert all(is_zero(g(f)) for g in R.generators)
    assert [str(f) for f in info.value.partial] == ["x1^3 - 3*x1*x2*x3 + x2^3 + x3^3"]


def test_determinism(rational6):
    ch1 = cauchy_bundle(derived_flag(rational6)[1])
    a = [str(f) for f in first_integrals(ch1).functions]
    b = [str(f) for f in first_integrals(ch1).functions]
    assert a == b


def test_verify_supplied_invariants(rational6):
    ch1 = cauchy_bundle(derived_flag(rational6)[1])
    C = rational6.chart
    res = verify_invariants(ch1, [parse(t, C) for t in ("x5 - 1/x1", "x3", "x4")])
    assert isinstance(res, InvariantSet) and res.accepted and res.rank == 3


def test_verify_rejects_non_invariant():
    C = Chart(["x1", "x2"])
    D = Distribution(C, [coordinate_field(C, "x1")])
    res = verify_invariants(D, [parse("x1", C)])
    assert isinstance(res, InvariantRejection) and not res.accepted
    item = res.items[0]
    assert item["candidate"] == "x1" and item["generator"] == "dx1" and item["value"] == "1"
    assert set(item["witness_point"]) == {"x1", "x2"}


def test_verify_discards_dependent_candidates():
    C = Chart(["x", "y"])
    D = Distribution(C, [coordinate_field(C, "y")])
    res = verify_invariants(D, [parse("x", C), parse("x^2", C)])
    assert res.accepted and [str(f) for f in res.functions] == ["x"]
    assert [str(f) for f in res.discarded] == ["x^2"]


def test_verify_incomplete_set_is_rejected():
    C = Chart(["x", "y", "z"])
    D = Distribution(C, [coordinate_field(C, "z")])
    res = verify_invariants(D, [parse("x", C), parse("2*x", C)])
    assert not res.accepted and res.items[0]["error"] == "dependent on earlier candidates"


def test_ansatz_config_validation():
    with pytest.raises(ValueError):
        AnsatzConfig(num_degree=-1)


def test_rational_invariant_with_coordinate_denominator():
    C = Chart(["x", "y"])
    D = Distribution(C, [VectorField.from_mapping(C, {"x": "x", "y": "y"})])
    (f,) = first_integrals(D).functions
    assert is_zero(D.generators[0](f))
    assert not f.is_constant()
