import pytest

from goursat import Chart, generate_contact_system, load_problem, load_resume, load_transformation, parse
from goursat.documents import DocumentError, ProblemDocument, dump_yaml, problem_to_dict

from conftest import FIXTURES

BASE = "format: 1\nchart: [x, y, z]\n"


def test_problem_round_trip():
    S = generate_contact_system([0, 1, 1])
    doc = ProblemDocument(S.chart, list(S.generators), name="c")
    again = load_problem(dump_yaml(problem_to_dict(doc)))
    assert again.chart.names == S.chart.names
    assert again.generators[0].coeffs == S.generators[0].coeffs


def test_list_form_generators():
    doc = load_problem(BASE + 'generators:\n  - ["1", "0", "y"]\n')
    assert str(doc.generators[0].coeffs[2]) == "y"


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("chart: [x]\ngenerators: [{x: '1'}]\n", "format"),
        ("format: 2\nchart: [x]\ngenerators: [{x: '1'}]\n", "format"),
        (BASE + "generators: []\n", "non-empty"),
        (BASE + "generators: [{w: '1'}]\n", "unknown coordinate"),
        (BASE + "generators: [['1', '0']]\n", "2 coefficients for 3"),
        (BASE + "generators: [{x: '1 +'}]\n", "generators[0].x"),
        ("format: 1\nchart: [x, x]\ngenerators: [{x: '1'}]\n", "chart"),
        (BASE + "generators: [{x: '1'}]\nsampling: {samples: 0}\n", "samples"),
        (BASE + "generators: [{x: '1'}]\nansatz: {num_degree: -1}\n", "num_degree"),
        (BASE + "generators: [{x: '1'}]\ninvariants: {ch1: ['x +* y']}\n", "invariants.ch1[0]"),
        ("format: 1\nchart: [x\n", "malformed"),
    ],
)
def test_problem_schema_errors(text, fragment):
    with pytest.raises(DocumentError) as info:
        load_problem(text)
    assert fragment in str(info.value)


def test_transformation_documents():
    chart = load_problem(FIXTURES / "rational6.yaml").chart
    tau, comps = load_transformation(FIXTURES / "phi.yaml", chart)
    assert list(tau) == [1, 1]
    assert comps[0] == ("x", parse("x5 - 1/x1", chart))
    with pytest.raises(DocumentError):
        load_transformation(FIXTURES / "phi_truncated.yaml", chart)
    with pytest.raises(DocumentError) as info:
        load_transformation("format: 1\ntype: [1, 0]\nmap: {}\n", chart)
    assert "type" in str(info.value)
    with pytest.raises(DocumentError):
        load_transformation("format: 1\ntype: [1, 1]\nsource_chart: [a]\nmap: {}\n", chart)


def test_mapping_form_transformation():
    chart = Chart(["a", "b", "c"])
    tau, comps = load_transformation("format: 1\ntype: [1]\nmap: {x: a, z1: b, z1_1: c}\n", chart)
    assert [n for n, _ in comps] == ["x", "z1", "z1_1"]


def test_resume_documents():
    inv = load_resume(FIXTURES / "rational6_resume.yaml")
    assert inv["pi3"] == ["x5 - 1/x1"]
    for bad in ["format: 1\n", "format: 1\ninvariants: {ch1: x}\n", "invariants: {}\n"]:
        with pytest.raises(DocumentError):
            load_resume(bad)


def test_overrides_leave_original_untouched():
    doc = load_problem(FIXTURES / "rational6.yaml")
    new = doc.with_overrides(seed=5, num_degree=1)
    assert new.sampling.seed == 5 and new.ansatz.num_degree == 1
    assert doc.sampling.seed == 0
