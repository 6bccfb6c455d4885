"""Command-line interface: ``goursat analyze|recognize|construct|verify|generate``.

Reports are JSON on stdout.  Exit codes: 0 accepted or constructed,
1 rejected, 2 input error, 3 integration needed (a resume stub is included
in the report).
"""

from __future__ import annotations

import functools
import json
import sys
import time
from pathlib import Path

import click

from .construct import (
    ConstructionError,
    ContactTransformation,
    IntegrationNeeded,
    build_filtration,
    contact_coordinates,
    generate_contact_system,
    verify_equivalence,
)
from .distgeo import Distribution, RegularityError
from .documents import (
    DocumentError,
    ProblemDocument,
    dump_yaml,
    load_problem,
    load_resume,
    load_transformation,
    problem_to_dict,
)
from .signature import TypeVector, analyze, is_goursat_bundle
from .symexpr import SamplingError

EXIT_OK, EXIT_REJECTED, EXIT_INPUT, EXIT_INTEGRATION = 0, 1, 2, 3


class _Run:
    def __init__(self, timings: bool):
        self.timings = timings
        self.marks = {}
        self.t0 = time.perf_counter()

    def mark(self, name: str):
        self.marks[name] = round(time.perf_counter() - self.t0, 3)


def _emit(report: dict, run: _Run | None = None) -> None:
    if run is not None and run.timings:
        report.setdefault("run", {})["timings"] = dict(run.marks)
    click.echo(json.dumps(report, indent=2))


def _fail_input(message: str):
    _emit({"error": "input", "message": message})
    sys.exit(EXIT_INPUT)


def common_options(f):
    @click.option("--seed", type=int, default=None, help="Sampling seed (overrides the document).")
    @click.option("--samples", type=click.IntRange(min=1), default=None, help="Witness points per rank test.")
    @click.option("--ansatz-num-degree", type=click.IntRange(min=0), default=None, help="Numerator degree bound.")
    @click.option("--ansatz-den-degree", type=click.IntRange(min=0), default=None, help="Denominator degree bound.")
    @click.option("--timings", is_flag=True, help="Include wall-clock timings in the report.")
    @functools.wraps(f)
    def wrapper(*args, seed, samples, ansatz_num_degree, ansatz_den_degree, timings, **kw):
        opts = dict(seed=seed, samples=samples, num_degree=ansatz_num_degree, den_degree=ansatz_den_degree)
        return f(*args, opts=opts, run=_Run(timings), **kw)

    return wrapper


def _load(path: str, opts: dict) -> tuple[ProblemDocument, Distribution]:
    try:
        doc = load_problem(Path(path)).with_overrides(**opts)
        V = Distribution(doc.chart, doc.generators, doc.sampling, label=doc.name or None)
    except DocumentError as exc:
        _fail_input(str(exc))
    except (RegularityError, SamplingError) as exc:
        _fail_input(f"distribution is not regular at the sampled points: {exc}")
    return doc, V


def _meta(doc: ProblemDocument, command: str) -> dict:
    return {
        "command": command,
        "name": doc.name,
        "chart": list(doc.chart.names),
        "seed": doc.sampling.seed,
        "samples": doc.sampling.samples,
    }


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Recognise partial prolongations of contact systems and build contact coordinates."""


@main.command("analyze")
@click.argument("document", type=click.Path(dir_okay=False))
@common_options
def cmd_analyze(document, opts, run):
    """Derived type of the distribution in DOCUMENT."""
    doc, V = _load(document, opts)
    an = analyze(V)
    run.mark("analysis")
    report = _meta(doc, "analyze")
    report.update(an.signature.as_dict())
    report["derived_length"] = an.k
    report["flag_ranks"] = list(an.flag.ranks)
    _emit(report, run)
    sys.exit(EXIT_OK)


def _recognize(V: Distribution):
    verdict = is_goursat_bundle(V)
    return verdict


@main.command("recognize")
@click.argument("document", type=click.Path(dir_okay=False))
@common_options
def cmd_recognize(document, opts, run):
    """Decide whether DOCUMENT describes a Goursat bundle."""
    doc, V = _load(document, opts)
    verdict = _recognize(V)
    run.mark("recognition")
    report = _meta(doc, "recognize")
    report.update(verdict.signature.as_dict())
    report["verdict"] = verdict.as_dict()
    _emit(report, run)
    sys.exit(EXIT_OK if verdict.accepted else EXIT_REJECTED)


@main.command("construct")
@click.argument("document", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the transformation document here.")
@click.option("--resume", type=click.Path(dir_okay=False), default=None, help="Resume document with supplied invariants.")
@click.option("--determinant", is_flag=True, help="Also compute the symbolic Jacobian determinant.")
@common_options
def cmd_construct(document, out, resume, determinant, opts, run):
    """Build and verify contact coordinates for DOCUMENT."""
    doc, V = _load(document, opts)
    supplied = dict(doc.invariants)
    if resume:
        try:
            supplied.update(load_resume(Path(resume)))
        except DocumentError as exc:
            _fail_input(str(exc))
    report = _meta(doc, "construct")
    verdict = _recognize(V)
    run.mark("recognition")
    report.update(verdict.signature.as_dict())
    report["verdict"] = verdict.as_dict()
    if not verdict.accepted:
        _emit(report, run)
        sys.exit(EXIT_REJECTED)
    try:
        F = build_filtration(V, verdict, doc.sampling, doc.ansatz, supplied)
    except IntegrationNeeded as exc:
        run.mark("integration")
        report["status"] = "integration_needed"
        report["message"] = str(exc)
        report["resume"] = exc.resume_stub()
        _emit(report, run)
        sys.exit(EXIT_INTEGRATION)
    except ConstructionError as exc:
        report["status"] = "rejected"
        report["message"] = str(exc)
        _emit(report, run)
        sys.exit(EXIT_REJECTED)
    run.mark("integration")
    report["filtration"] = [lv.as_dict() for lv in F.levels]
    report["integrations"] = F.integrations
    try:
        T = contact_coordinates(V, F, cfg=doc.sampling)
    except ConstructionError as exc:
        report["status"] = "rejected"
        report["message"] = str(exc)
        _emit(report, run)
        sys.exit(EXIT_REJECTED)
    cert = verify_equivalence(V, T, doc.sampling, determinant=determinant)
    T.certificate = cert
    run.mark("verification")
    report["status"] = "constructed" if cert.accepted else "rejected"
    report["transformation"] = T.as_dict()
    if out:
        Path(out).write_text(dump_yaml(T.as_dict()))
    _emit(report, run)
    sys.exit(EXIT_OK if cert.accepted else EXIT_REJECTED)


@main.command("verify")
@click.argument("document", type=click.Path(dir_okay=False))
@click.argument("transformation", type=click.Path(dir_okay=False))
@click.option("--determinant", is_flag=True, help="Also compute the symbolic Jacobian determinant.")
@common_options
def cmd_verify(document, transformation, determinant, opts, run):
    """Check that TRANSFORMATION carries DOCUMENT to its contact system."""
    doc, V = _load(document, opts)
    try:
        tau, comps = load_transformation(Path(transformation), doc.chart)
        T = ContactTransformation(tau, doc.chart, comps)
        cert = verify_equivalence(V, T, doc.sampling, determinant=determinant)
    except (DocumentError, ValueError) as exc:
        _fail_input(str(exc))
    run.mark("verification")
    report = _meta(doc, "verify")
    report["type"] = list(tau)
    report["certificate"] = cert.as_dict()
    _emit(report, run)
    sys.exit(EXIT_OK if cert.accepted else EXIT_REJECTED)


@main.command("generate")
@click.argument("tau")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the document here instead of stdout.")
def cmd_generate(tau, out):
    """Problem document for the partial prolongation of type TAU (e.g. 0,0,1,1)."""
    try:
        tv = TypeVector.parse(tau)
    except ValueError as exc:
        _fail_input(f"invalid type vector {tau!r}: {exc}")
    system = generate_contact_system(tv)
    doc = ProblemDocument(system.chart, list(system.generators), name=f"C{tv}")
    text = dump_yaml(problem_to_dict(doc))
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
