import pytest
import sympy as sp

from goursat import (
    Chart,
    Distribution,
    PointSampleConfig,
    VectorField,
    cauchy_bundle,
    coordinate_field,
    derived_bundle,
    derived_flag,
    generate_contact_system,
    generic_rank,
    intersect,
    is_integrable,
    lie_bracket,
    parse,
    pushforward,
    same_span,
)
from goursat.linalg import rank_mpq
from goursat.symexpr import RationalPoint

from oracles import bracket, field

XY = Chart(["x", "y"])
M7 = Chart(["t", "x1", "x2", "x3", "x4", "u1", "u2"])
DRIFT = {"t": "1", "x1": "x2 + u2*x3", "x2": "x3 + u2*x1", "x3": "u1", "x4": "u2"}


def vf(chart, mapping):
    return VectorField.from_mapping(chart, mapping)


def span_of(chart, *mappings):
    return Distribution(chart, [vf(chart, m) for m in mappings])


def test_bracket_of_coordinate_fields():
    assert lie_bracket(coordinate_field(XY, "x"), coordinate_field(XY, "y")).is_zero()


def test_bracket_leibniz():
    br = lie_bracket(coordinate_field(XY, "x"), vf(XY, {"y": "x"}))
    assert br == coordinate_field(XY, "y")


def test_marino_drift_bracket_against_sympy():
    X = vf(M7, DRIFT)
    br = lie_bracket(X, coordinate_field(M7, "u1"))
    assert br == vf(M7, {"x3": "-1"})
    xs = sp.symbols(list(M7.names))
    ref = bracket(field(M7.names, DRIFT), field(M7.names, {"u1": 1}), xs)
    assert [str(c) for c in br.coeffs] == [str(c) for c in ref]


def test_generic_rank_duplicates():
    dx = coordinate_field(XY, "x")
    assert generic_rank([dx, dx])[0] == 1


def test_generic_rank_rational6(rational6):
    rank, cert = generic_rank(list(rational6.generators))
    assert rank == 3
    assert cert.witness in cert.points
    assert not cert.singular_points


def test_generic_rank_proportional_fields():
    assert generic_rank([vf(XY, {"x": "x"}), coordinate_field(XY, "x")])[0] == 1


def test_rank_drop_locus_by_hand():
    gens = [vf(XY, {"y": "x"}), coordinate_field(XY, "x")]
    assert generic_rank(gens)[0] == 2
    ranks = [rank_mpq([g.at(RationalPoint.from_mapping(XY, {"x": a, "y": 1})) for g in gens]) for a in (0, 1, 2)]
    assert ranks == [1, 2, 2]


def test_derived_bundle_of_integrable():
    D = Distribution(XY, [coordinate_field(XY, "x"), coordinate_field(XY, "y")])
    D1 = derived_bundle(D)
    assert D1.rank == D.rank and D1 == D
    assert derived_flag(D).length == 0


def test_derived_bundle_rational6(rational6):
    assert derived_bundle(rational6).rank == 5


def test_derived_bundle_contact():
    C1 = generate_contact_system([1]).distribution
    D1 = derived_bundle(C1)
    assert D1.rank == 3 and D1.is_full()


@pytest.mark.parametrize(
    "name, ranks",
    [("rational6", (3, 5, 6)), ("marino", (3, 5, 7)), ("prolonged_marino", (3, 5, 7, 9, 10))],
)
def test_derived_flag_ranks(request, name, ranks):
    flag = derived_flag(request.getfixturevalue(name))
    assert flag.ranks == ranks
    assert flag.length == len(ranks) - 1
    assert flag.stabilized


def test_generators_stored_verbatim(rational6):
    flag = derived_flag(rational6)
    assert flag[0].generators == rational6.generators
    for lo, hi in zip(flag.levels, flag.levels[1:]):
        assert hi.generators[: len(lo.generators)] == lo.generators


def test_cauchy_rational6(rational6):
    flag = derived_flag(rational6)
    assert cauchy_bundle(flag[0]).rank == 0
    ch1 = cauchy_bundle(flag[1])
    C = rational6.chart
    assert ch1 == span_of(C, {"x5": "1", "x1": "-x1^2"}, {"x2": "1"}, {"x6": "1"})


def test_cauchy_of_integrable_is_itself():
    D = span_of(Chart(["a", "b", "c"]), {"a": "1", "b": "c"}, {"c": "1", "b": "a"})
    assert is_integrable(D)
    assert cauchy_bundle(D) == D
    E = span_of(D.chart, {"a": "1", "b": "c"}, {"c": "1"})
    assert not is_integrable(E)
    assert cauchy_bundle(E).rank == 0


def test_intersect_with_itself(rational6):
    assert intersect(rational6, rational6) == rational6


def test_intersection_rational6(rational6):
    flag = derived_flag(rational6)
    got = intersect(flag[0], cauchy_bundle(flag[1]))
    assert got.rank == 2
    assert got == span_of(rational6.chart, {"x5": "1", "x1": "-x1^2"}, {"x2": "1"})


def test_intersection_prolonged_marino(prolonged_marino):
    flag = derived_flag(prolonged_marino)
    got = intersect(flag[2], cauchy_bundle(flag[3]))
    assert got.rank == 6
    C = prolonged_marino.chart
    expected = cauchy_bundle(flag[2]).with_generators([vf(C, {"v2": "1"}), vf(C, {"x1": "v1", "x2": "1"})])
    assert got == expected


def test_integrability_basic():
    assert is_integrable(Distribution(XY, [coordinate_field(XY, "x"), coordinate_field(XY, "y")]))
    assert not is_integrable(generate_contact_system([1]).distribution)


def test_membership_and_residual(rational6):
    g = rational6.generators
    combo = g[0].scale(parse("x3", rational6.chart)) + g[1]
    assert rational6.contains(combo)
    assert not rational6.contains(coordinate_field(rational6.chart, "x4"))


def test_same_span_ignores_presentation(rational6):
    g = rational6.generators
    other = Distribution(rational6.chart, [g[2], g[1] + g[2], g[0].scale(parse("x1", rational6.chart))])
    assert same_span(rational6, other)


def test_pushforward_simple_shear():
    UV = Chart(["u", "v"])
    D = Distribution(XY, [vf(XY, {"x": "1", "y": "2*x"})])
    W = pushforward(D, {"u": parse("x", XY), "v": parse("y - x^2", XY)}, {"x": parse("u", UV), "y": parse("v + u^2", UV)}, UV)
    assert W == Distribution(UV, [coordinate_field(UV, "u")])


def test_empty_distribution():
    D = Distribution(XY, [])
    assert D.rank == 0 and is_integrable(D)


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        PointSampleConfig(samples=0)
