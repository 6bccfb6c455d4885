"""YAML problem, transformation and resume documents.

Problem document (``format: 1``)::

    format: 1
    name: optional label
    chart: [x1, x2, ...]             # ordered coordinate names
    generators:                      # non-empty
      - {x3: "(1 + x2*x6)/x6", x5: "1"}   # coordinate -> coefficient
      - ["0", "1", "0", ...]              # or one entry per coordinate
    invariants:                      # optional, keyed by filtration level
      ch1_0: ["x3", "x5 - 1/x1"]
    sampling: {seed: 0, samples: 12, retries: 32}      # optional
    ansatz: {num_degree: 3, den_degree: 2}             # optional

Transformation document::

    format: 1
    type: [1, 1]
    source_chart: [x1, ...]          # optional, checked when present
    map:                             # list of pairs, or a mapping
      - [x, "x5 - 1/x1"]
      - [z1, "x6"]

Resume document: ``format: 1`` plus an ``invariants`` mapping as above.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .distgeo import PointSampleConfig, VectorField
from .firstint import AnsatzConfig
from .signature import TypeVector
from .symexpr import Chart, Expression, ParseError, parse

__all__ = [
    "DocumentError",
    "ProblemDocument",
    "dump_yaml",
    "load_problem",
    "load_resume",
    "load_transformation",
    "problem_to_dict",
]


class DocumentError(ValueError):
    """Schema or parse error in an input document."""


def _load_yaml(source) -> Any:
    """``source`` is a Path, YAML text, or already-loaded data."""
    if isinstance(source, Path):
        try:
            text = source.read_text()
        except OSError as exc:
            raise DocumentError(f"cannot read {source}: {exc.strerror}") from None
    elif isinstance(source, str):
        text = source
    else:
        return source
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DocumentError(f"malformed YAML: {exc}") from None


def _check_format(data, what: str):
    if not isinstance(data, dict):
        raise DocumentError(f"{what} must be a mapping")
    if data.get("format") != 1:
        raise DocumentError(f"{what} needs 'format: 1'")


def _expr(text, chart: Chart, where: str) -> Expression:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise DocumentError(f"{where}: expected an expression string, got {text!r}")
    try:
        return parse(str(text), chart)
    except ParseError as exc:
        raise DocumentError(f"{where}: {exc} in {text!r}") from None


@dataclass
class ProblemDocument:
    chart: Chart
    generators: list[VectorField]
    name: str = ""
    invariants: dict[str, list[str]] = field(default_factory=dict)
    sampling: PointSampleConfig = field(default_factory=PointSampleConfig)
    ansatz: AnsatzConfig = field(default_factory=AnsatzConfig)

    def with_overrides(self, seed=None, samples=None, num_degree=None, den_degree=None) -> "ProblemDocument":
        s, a = self.sampling, self.ansatz
        if seed is not None:
            s = replace(s, seed=seed)
        if samples is not None:
            s = replace(s, samples=samples)
        if num_degree is not None:
            a = replace(a, num_degree=num_degree)
        if den_degree is not None:
            a = replace(a, den_degree=den_degree)
        return replace(self, sampling=s, ansatz=a)


def _int_field(d: dict, key: str, default: int, where: str, minimum: int = 0) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise DocumentError(f"{where}.{key} must be an integer >= {minimum}")
    return v


def load_problem(source) -> ProblemDocument:
    data = _load_yaml(source)
    _check_format(data, "problem document")
    names = data.get("chart")
    if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
        raise DocumentError("chart must be a non-empty list of coordinate names")
    try:
        chart = Chart(names)
    except ValueError as exc:
        raise DocumentError(f"chart: {exc}") from None
    gens_data = data.get("generators")
    if not isinstance(gens_data, list) or not gens_data:
        raise DocumentError("generators must be a non-empty list")
    gens = []
    for i, g in enumerate(gens_data):
        where = f"generators[{i}]"
        if isinstance(g, dict):
            coeffs = [chart.zero()] * chart.dim
            for name, text in g.items():
                if name not in chart:
                    raise DocumentError(f"{where}: unknown coordinate {name!r}")
                coeffs[chart.index(name)] = _expr(text, chart, f"{where}.{name}")
        elif isinstance(g, list):
            if len(g) != chart.dim:
                raise DocumentError(f"{where}: {len(g)} coefficients for {chart.dim} coordinates")
            coeffs = [_expr(t, chart, f"{where}[{j}]") for j, t in enumerate(g)]
        else:
            raise DocumentError(f"{where}: expected a mapping or a list")
        gens.append(VectorField(chart, coeffs))
    inv = data.get("invariants") or {}
    if not isinstance(inv, dict):
        raise DocumentError("invariants must map level labels to expression lists")
    invariants = {}
    for label, exprs in inv.items():
        if not isinstance(exprs, list):
            raise DocumentError(f"invariants.{label} must be a list")
        for j, t in enumerate(exprs):
            _expr(t, chart, f"invariants.{label}[{j}]")
        invariants[str(label)] = [str(t) for t in exprs]
    samp = data.get("sampling") or {}
    ans = data.get("ansatz") or {}
    if not isinstance(samp, dict) or not isinstance(ans, dict):
        raise DocumentError("sampling and ansatz must be mappings")
    sampling = PointSampleConfig(
        samples=_int_field(samp, "samples", 12, "sampling", 1),
        seed=_int_field(samp, "seed", 0, "sampling"),
        retries=_int_field(samp, "retries", 32, "sampling"),
    )
    ansatz = AnsatzConfig(
        num_degree=_int_field(ans, "num_degree", 3, "ansatz"),
        den_degree=_int_field(ans, "den_degree", 2, "ansatz"),
    )
    return ProblemDocument(chart, gens, str(data.get("name", "")), invariants, sampling, ansatz)


def problem_to_dict(doc: ProblemDocument) -> dict:
    out = {"format": 1}
    if doc.name:
        out["name"] = doc.name
    out["chart"] = list(doc.chart.names)
    out["generators"] = [g.to_mapping() for g in doc.generators]
    if doc.invariants:
        out["invariants"] = doc.invariants
    return out


def load_transformation(source, chart: Chart):
    """``(tau, [(name, Expression), ...])`` from a transformation document."""
    data = _load_yaml(source)
    _check_format(data, "transformation document")
    try:
        tau = TypeVector(data.get("type") or [])
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"type: {exc}") from None
    src = data.get("source_chart")
    if src is not None and list(src) != list(chart.names):
        raise DocumentError(f"source_chart {src} does not match the problem chart {list(chart.names)}")
    raw = data.get("map")
    if isinstance(raw, dict):
        pairs = list(raw.items())
    elif isinstance(raw, list) and all(isinstance(p, list) and len(p) == 2 for p in raw):
        pairs = [tuple(p) for p in raw]
    else:
        raise DocumentError("map must be a mapping or a list of [name, expression] pairs")
    if len(pairs) != chart.dim or tau.dim != chart.dim:
        raise DocumentError(
            f"map has {len(pairs)} components and type {tau} needs {tau.dim}, but the chart has {chart.dim} coordinates"
        )
    comps = [(str(n), _expr(t, chart, f"map.{n}")) for n, t in pairs]
    return tau, comps


def load_resume(source) -> dict[str, list[str]]:
    data = _load_yaml(source)
    _check_format(data, "resume document")
    inv = data.get("invariants")
    if not isinstance(inv, dict):
        raise DocumentError("resume document needs an 'invariants' mapping")
    out = {}
    for label, exprs in inv.items():
        if not isinstance(exprs, list) or not all(isinstance(e, (str, int)) for e in exprs):
            raise DocumentError(f"invariants.{label} must be a list of expressions")
        out[str(label)] = [str(e) for e in exprs]
    return out


def dump_yaml(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=100)
