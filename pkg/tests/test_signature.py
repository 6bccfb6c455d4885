import pytest

from goursat import (
    DerivedTypeSignature,
    TypeVector,
    analyze,
    derived_type,
    generate_contact_system,
    is_goursat_bundle,
    matches_partial_prolongation,
    pi_bundles,
    predicted_derived_type,
)
from goursat import Distribution, VectorField, first_integrals, is_integrable
from goursat.distgeo import coordinate_field

from conftest import load_distribution
from oracles import all_taus, derived_ranks, field, predicted, syms


def vf(chart, mapping):
    return VectorField.from_mapping(chart, mapping)


def test_type_vector_forms():
    t = TypeVector([0, 0, 1, 1])
    assert (t.k, t.P, t.t, t.dim) == (4, 2, 2, 10)
    assert t.pairs() == [(1, 3), (1, 4)]
    assert TypeVector.from_pairs(t.pairs()) == t
    assert TypeVector.parse("<0,0,1,1>") == t
    assert str(t) == "<0,0,1,1>"


@pytest.mark.parametrize("bad", [[], [1, 0], [0], [-1, 2]])
def test_type_vector_rejects(bad):
    with pytest.raises(ValueError):
        TypeVector(bad)


def test_signature_difference_vectors():
    sig = DerivedTypeSignature.from_lists([[3, 0], [5, 2], [7, 4], [9, 7], [10, 10]])
    assert sig.velocity == (2, 2, 2, 1)
    assert sig.acceleration == (0, 0, -1, 1)
    assert sig.deceleration == (0, 0, 1, 1)


def test_signature_needs_increasing_ranks():
    with pytest.raises(ValueError):
        DerivedTypeSignature.from_lists([[3, 0], [3, 3]])


@pytest.mark.parametrize(
    "name, lists, inter, dec",
    [
        ("rational6", [[3, 0], [5, 3], [6, 6]], {1: 2}, (1, 1)),
        ("marino", [[3, 0], [5, 2], [7, 7]], {1: 2}, (0, 2)),
        ("prolonged_marino", [[3, 0], [5, 2], [7, 4], [9, 7], [10, 10]], {1: 2, 2: 4, 3: 6}, (0, 0, 1, 1)),
    ],
)
def test_derived_type_of_fixtures(name, lists, inter, dec):
    sig = derived_type(load_distribution(name))
    assert sig.as_lists() == lists
    assert sig.intersections == inter
    assert sig.deceleration == dec


def test_predicted_11():
    sig = predicted_derived_type([1, 1])
    assert sig.ms == (3, 5, 6) and sig.chis == (0, 3, 6) and sig.intersections == {1: 2}
    assert sig == derived_type(load_distribution("rational6"))


def test_predicted_02():
    sig = predicted_derived_type([0, 2])
    assert sig.ms == (3, 5, 7) and sig.chis == (0, 2, 7)
    assert sig.as_lists() == derived_type(load_distribution("marino")).as_lists()


@pytest.mark.parametrize("k", range(1, 7))
def test_predicted_classical_chain(k):
    tau = [0] * (k - 1) + [1]
    sig = predicted_derived_type(tau)
    assert sig.ms == tuple(j + 2 for j in range(k + 1))
    assert sig.chis[:-1] == tuple(range(k))
    names = ["x"] + [f"z{l}" for l in range(k + 1)]
    xs = syms(names)
    drift = {"x": 1, **{f"z{l}": f"z{l + 1}" for l in range(k)}}
    ranks = derived_ranks([field(names, drift), field(names, {f"z{k}": 1})], xs, [3] * len(names))
    assert tuple(ranks) == sig.ms


@pytest.mark.parametrize("tau", all_taus(3, 3))
def test_predicted_ranks_match_chain_count(tau):
    assert list(predicted_derived_type(tau).ms) == predicted(tau)


def test_deceleration_arithmetic_on_accepted():
    for name in ["rational6", "marino", "prolonged_marino"]:
        v = is_goursat_bundle(load_distribution(name))
        sig = v.signature
        k = sig.k
        for l in range(1, k):
            assert v.tau[l - 1] == sig.chis[l] - sig.intersections[l]
        assert v.tau[k - 1] == sig.velocity[-1]
        if sig.velocity[-1] == 1:
            assert sig.chis[k - 1] == sig.ms[k - 1] - 2


def test_matches_partial_prolongation():
    ok, tau, why = matches_partial_prolongation(derived_type(load_distribution("rational6")))
    assert ok and tau == (1, 1) and why is None
    ok, tau, _ = matches_partial_prolongation(DerivedTypeSignature.from_lists([[3, 0], [5, 2], [7, 4], [9, 7], [10, 10]]))
    assert ok and tau == (0, 0, 1, 1)


def test_negative_signature_names_the_equation():
    ok, tau, why = matches_partial_prolongation(DerivedTypeSignature.from_lists([[3, 0], [5, 1], [6, 6]]))
    assert not ok
    assert tau == (1, 1)
    assert why == "chi^1 = 1, expected 2*m_1 - m_2 - 1 = 3"


def test_pi_bundles_rational6(rational6):
    pk, pk1 = pi_bundles(rational6)
    C = rational6.chart
    hand = Distribution(C, [vf(C, {"x5": "1", "x1": "-x1^2"}), coordinate_field(C, "x2"), coordinate_field(C, "x6"), coordinate_field(C, "x3")])
    assert pk == hand
    assert pk.label == "pi2" and pk1.label == "pi3"
    assert is_integrable(pk) and is_integrable(pk1)
    inv = first_integrals(pk)
    assert sorted(map(str, inv.functions)) == ["(x1*x5 - 1)/x1", "x4"]


def test_pi_bundles_prolonged_marino(prolonged_marino):
    an = analyze(prolonged_marino)
    pk, _ = pi_bundles(an)
    C = prolonged_marino.chart
    from goursat import cauchy_bundle

    assert pk.rank == 8
    assert pk == cauchy_bundle(an.flag[3]).with_generators([coordinate_field(C, "v1")])


def test_pi_bundle_of_jet_space():
    S = generate_contact_system([0, 1])
    an = analyze(S.distribution)
    pk, pk1 = pi_bundles(an)
    C = S.chart
    assert pk.rank == an.signature.ms[1] - 1 == 2
    assert pk == Distribution(C, [coordinate_field(C, "z1_1"), coordinate_field(C, "z1_2")])
    assert pk1.rank == an.signature.ms[2] - 1


def test_recognize_fixtures():
    for name, tau in [("rational6", (1, 1)), ("marino", (0, 2)), ("prolonged_marino", (0, 0, 1, 1))]:
        v = is_goursat_bundle(load_distribution(name))
        assert v.accepted and v.tau == tau
        assert all(c.passed for c in v.conditions)
    v = is_goursat_bundle(load_distribution("marino"))
    assert v.weber is not None and v.weber.integrable
    assert [c.name for c in v.conditions][-1] == "iii.resolvent_integrable"


def test_derived_length_one_is_rejected():
    v = is_goursat_bundle(generate_contact_system([1]).distribution)
    assert not v.accepted and "derived length 1" in v.message


def test_right_ranks_but_nonintegrable_resolvent():
    v = is_goursat_bundle(load_distribution("c03_twisted"))
    assert v.signature.as_lists() == predicted_derived_type([0, 3]).as_lists()
    assert not v.accepted and v.tau is None
    assert [c.name for c in v.failed()] == ["iii.resolvent_integrable"]
    assert v.weber.criteria == {"resolvent_integrable": False, "degree_one": False, "delta_vanishes": False}


def test_hilbert_cartan_fails_rank_equations():
    from goursat import Chart

    C = Chart(["x", "y", "p", "q", "z"])
    V = Distribution(C, [vf(C, {"x": "1", "y": "p", "p": "q", "z": "q^2"}), coordinate_field(C, "q")])
    v = is_goursat_bundle(V)
    assert v.signature.as_lists() == [[2, 0], [3, 0], [5, 5]]
    assert not v.accepted
    assert [c.name for c in v.failed()] == ["i.rank_equations"]
    assert "deceleration [-1, 2]" in v.failed()[0].detail
