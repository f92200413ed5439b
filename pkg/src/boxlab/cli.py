"""Command-line interface.

Exit codes: 0 success, 1 a check failed, 2 unreadable input or bad
arguments, 3 the input box is invalid (or signaling where NS is required),
4 any other contract violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import sys
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from . import __version__
from .box import BoxError, BoxTable, MalformedTableError, SignalingError, format_fraction, is_fully_nonsignaling, validate_box
from .catalog import (
    LAYOUT_2X2,
    LAYOUT_ABCD,
    IsotropicSpec,
    Label,
    alpha_q,
    anti_pr_box,
    b_in_for_labels,
    b_rst,
    flag_pair,
    local_deterministic_vertices,
    lrns_product_vertices,
    ns_extremal_vertices_2x2,
    pr_box,
)
from .clp import FAMILIES, family, run_suite
from .cost import MODELS, CostProblem, default_model, local_model, nonlocal_cost, verify_certificate
from .discrimination import (
    DiscriminationScenario,
    conclusive_distinguish,
    corollary_alpha_bound,
    helstrom_lower_bound,
    maxflags_formula,
    perfect_distinguish_search,
    theorem1_bound,
    universal_bound_sweep,
)
from .io import BoxFormatError, box_to_dict, certificate_from_dict, dumps_box, loads_box
from .transforms import ComparingOperation, apply_o, comparing_apply, twirl

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_INVALID, EXIT_CONTRACT = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def decimal(value: Fraction) -> str:
    """Display-only decimal with 15 significant digits."""
    value = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = 15
        d = Decimal(value.numerator) / Decimal(value.denominator)
    return format(d, "f")


def parse_alpha(text: str) -> Fraction:
    if text.strip().lower() == "aq":
        return alpha_q()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise CliError(f"bad rational {text!r}", EXIT_PARSE) from None


def parse_labels(text: str) -> list[Label]:
    try:
        return [Label.parse(t) for t in text.split(",") if t.strip()]
    except BoxError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None


# ----------------------------------------------------------------------------
# output plumbing


@dataclass
class RunManifest:
    command: list[str]
    seed: int | None = None
    model: str | None = None
    version: str = __version__
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    extra: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        data = {
            "command": self.command,
            "seed": self.seed,
            "model": self.model,
            "version": self.version,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
        }
        if self.extra:
            data["extra"] = dict(sorted(self.extra.items()))
        return data


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


class Writer:
    """Single funnel for stdout and files so that emitted bytes are
    deterministic and every output is digested into the manifest."""

    def __init__(self, manifest: RunManifest, stdout):
        self.manifest = manifest
        self.stdout = stdout
        self._stdout_bytes = []

    def line(self, text: str = "") -> None:
        self.stdout.write(text + "\n")
        self._stdout_bytes.append((text + "\n").encode())

    def file(self, path, text: str) -> None:
        data = text.encode()
        Path(path).write_bytes(data)
        self.manifest.outputs[str(path)] = _digest(data)

    def read_input(self, path) -> str:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from None
        self.manifest.inputs[str(path)] = _digest(data)
        return data.decode()

    def finish(self, manifest_path) -> None:
        self.manifest.outputs["<stdout>"] = _digest(b"".join(self._stdout_bytes))
        if manifest_path:
            text = json.dumps(self.manifest.to_json(), indent=1, sort_keys=True) + "\n"
            Path(manifest_path).write_bytes(text.encode())


def _load_box(writer: Writer, path) -> BoxTable:
    text = writer.read_input(path)
    try:
        return loads_box(text)
    except MalformedTableError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INVALID) from None
    except BoxFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None


def _require_valid(box: BoxTable, path, ns: bool = True) -> None:
    report = validate_box(box)
    if not report:
        v = report.violations[0]
        raise CliError(f"{path}: invalid box ({v.kind} at inputs {v.inputs}: {v.value})", EXIT_INVALID)
    if ns:
        result = is_fully_nonsignaling(box)
        if not result:
            w = result.witness
            raise CliError(f"{path}: box is signaling (subsystems {w.senders} -> {w.receivers})", EXIT_INVALID)


def _emit_box(writer: Writer, box: BoxTable, out) -> None:
    text = dumps_box(box, indent=1)
    if out:
        writer.file(out, text + "\n")
    else:
        writer.line(text)


# ----------------------------------------------------------------------------
# box families


def make_box(spec: str) -> BoxTable:
    """pr | apr | brst:rst | iso:rst:alpha | flag:j:n | bin:labels[:alpha[:beta]]"""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "pr" and len(parts) == 1:
            return pr_box()
        if kind == "apr" and len(parts) == 1:
            return anti_pr_box()
        if kind == "brst" and len(parts) == 2:
            return b_rst(Label.parse(parts[1]))
        if kind == "iso" and len(parts) == 3:
            return IsotropicSpec(Label.parse(parts[1]), parse_alpha(parts[2])).box()
        if kind == "flag" and len(parts) == 3:
            return flag_pair(int(parts[1]), int(parts[2]))
        if kind == "bin" and 2 <= len(parts) <= 4:
            labels = parse_labels(parts[1])
            alpha = parse_alpha(parts[2]) if len(parts) > 2 else Fraction(1)
            beta = parse_alpha(parts[3]) if len(parts) > 3 else Fraction(1)
            return b_in_for_labels(labels, alpha, beta)
    except ValueError as exc:
        raise CliError(f"bad family spec {spec!r}: {exc}", EXIT_PARSE) from None
    raise CliError(f"unknown family spec {spec!r}", EXIT_PARSE)


# ----------------------------------------------------------------------------
# commands


def cmd_box(args, w: Writer) -> int:
    if args.action == "make":
        _emit_box(w, make_box(args.family), args.out)
        return EXIT_OK
    box = _load_box(w, args.input)
    if args.action == "validate":
        report = validate_box(box)
        if not report:
            for v in report.violations[:20]:
                w.line(f"violation {v.kind} inputs={v.inputs} outputs={v.outputs} value={format_fraction(v.value)}")
            return EXIT_INVALID
        ns = is_fully_nonsignaling(box)
        w.line("valid" + ("" if ns else ", signaling"))
        return EXIT_OK if ns else EXIT_CHECK
    # show
    w.line(f"layout: {box.layout}")
    table = box_to_dict(box)["table"]
    for xs in box.layout.joint_inputs():
        row = table[",".join(map(str, xs))]
        cells = " ".join(f"{k}:{v}" for k, v in row.items())
        w.line(f"x={','.join(map(str, xs))}  {cells}")
    return EXIT_OK


def _model_for(tag: str, box: BoxTable):
    if tag == "auto":
        return default_model(box.layout)
    vs = local_model(tag, box.layout)
    if not vs.layout.compatible(box.layout):
        raise CliError(f"model {tag} is for layout {vs.layout}, box has {box.layout}", EXIT_CONTRACT)
    return vs


def cmd_cost(args, w: Writer) -> int:
    box = _load_box(w, args.input)
    _require_valid(box, args.input)
    model = _model_for(args.model, box)
    w.manifest.model = model.kind if args.model == "auto" else args.model
    cert = nonlocal_cost(CostProblem(box, model))
    report = verify_certificate(box, cert, model)
    if not report:
        for issue in report.issues:
            w.line(f"certificate issue {issue.kind}: {issue.detail}")
        return EXIT_CHECK
    w.line(f"{format_fraction(cert.p)}")
    w.line(f"decimal {decimal(cert.p)}")
    if args.emit_cert:
        w.file(args.emit_cert, json.dumps(cert.to_json(), indent=1) + "\n")
    return EXIT_OK


def _sweep(args, w: Writer) -> int:
    alpha = parse_alpha(args.alpha)
    w.manifest.model = args.model
    w.manifest.extra["alpha"] = format_fraction(alpha)
    result = universal_bound_sweep(args.k, alpha, args.aggregation, args.model)
    buf = _io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["ensemble-labels", "C", "bound", "bound-decimal"])
    for row in result.rows:
        out.writerow([" ".join(map(str, row.labels)), format_fraction(row.cost),
                      format_fraction(row.bound), decimal(row.bound)])
    for name, value in (("min", result.min_bound), ("max", result.max_bound)):
        out.writerow([name, "", format_fraction(value), decimal(value)])
    if args.out:
        w.file(args.out, buf.getvalue())
    else:
        for line in buf.getvalue().splitlines():
            w.line(line)
    w.line(f"aggregate ({args.aggregation}) {format_fraction(result.aggregate)} {decimal(result.aggregate)}")
    w.line(f"min {format_fraction(result.min_bound)} max {format_fraction(result.max_bound)}")
    return EXIT_OK


def cmd_bound(args, w: Writer) -> int:
    if args.formula == "sweep":
        return _sweep(args, w)
    if args.formula == "maxflags":
        c = parse_alpha(args.cost)
        value = maxflags_formula(c)
        w.line(f"{format_fraction(value)}")
        w.line(f"decimal {decimal(value)}")
        return EXIT_OK
    labels = parse_labels(args.labels)
    alpha = parse_alpha(args.alpha)
    w.manifest.model = args.model
    if args.formula == "alpha":
        report = corollary_alpha_bound(labels, alpha, model=args.model)
    else:
        beta = parse_alpha(args.beta)
        scen = DiscriminationScenario.uniform(labels, alpha, beta)
        report = theorem1_bound(scen, args.model)
    w.line(f"{format_fraction(report.bound)}")
    w.line(f"decimal {decimal(report.bound)}")
    w.line(f"cost {format_fraction(report.cost_used)} formula {report.formula} model {report.model}")
    if report.success_bound is not None and report.success_bound != report.bound:
        w.line(f"success-bound {format_fraction(report.success_bound)}")
    return EXIT_OK


def cmd_distinguish(args, w: Writer) -> int:
    a = _load_box(w, args.a)
    b = _load_box(w, args.b)
    _require_valid(a, args.a)
    _require_valid(b, args.b)
    if args.mode == "helstrom":
        res = helstrom_lower_bound(a, b)
        w.line(f"{format_fraction(res.bound)}")
        w.line(f"measurement {','.join(map(str, res.measurement))}")
        w.line(f"distance {format_fraction(res.distance)}")
        return EXIT_OK
    if args.mode == "perfect":
        strat = perfect_distinguish_search(a, b)
        if strat is None:
            w.line("none")
            return EXIT_CHECK
        w.line(f"{format_fraction(strat.success_probability)}")
        w.line(f"measurement {','.join(map(str, strat.measurement))}")
        w.line("first " + " ".join(",".join(map(str, o)) for o in sorted(strat.partition[0])))
        return EXIT_OK
    res = conclusive_distinguish(a, b)
    if res is None:
        w.line("none")
        return EXIT_CHECK
    w.line(f"{format_fraction(res.probability)}")
    w.line(f"measurement {','.join(map(str, res.measurement))}")
    w.line("outcomes " + " ".join(",".join(map(str, o)) for o in sorted(res.outcomes)))
    return EXIT_OK


def cmd_vertices(args, w: Writer) -> int:
    layout = LAYOUT_2X2 if args.scenario == "2222" else LAYOUT_ABCD
    if args.kind == "local":
        vs = local_deterministic_vertices(layout)
    elif args.kind == "ns":
        if args.scenario != "2222":
            raise CliError("NS vertices are only enumerated for the 2222 scenario", EXIT_CONTRACT)
        vs = ns_extremal_vertices_2x2()
    else:
        if args.scenario != "abcd":
            raise CliError("LR_ns product vertices need the abcd scenario", EXIT_CONTRACT)
        vs = lrns_product_vertices(layout)
    text = "".join(json.dumps(box_to_dict(v)) + "\n" for v in vs)
    if args.out:
        w.file(args.out, text)
    else:
        for line in text.splitlines():
            w.line(line)
    return EXIT_OK


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"expected 'i,j', got {text!r}", EXIT_PARSE) from None
    return i, j


def cmd_transform(args, w: Writer) -> int:
    box = _load_box(w, args.input)
    _require_valid(box, args.input, ns=False)
    acted = _parse_pair(args.acted) if args.acted else None
    if args.op == "twirl":
        image = twirl(box, acted)
    elif args.op == "o-rot":
        if not args.label:
            raise CliError("o-rot needs --label rst", EXIT_PARSE)
        image = apply_o(parse_labels(args.label)[0], box, acted)
    else:
        if not args.measure or not args.partition:
            raise CliError("compare needs --measure i,j and --partition", EXIT_PARSE)
        try:
            blocks = json.loads(args.partition)
        except json.JSONDecodeError as exc:
            raise CliError(f"bad partition JSON: {exc}", EXIT_PARSE) from None
        op = ComparingOperation.of(_parse_pair(args.measure), blocks)
        image = comparing_apply(op, box)
    _emit_box(w, image, args.out)
    return EXIT_OK


def cmd_verify(args, w: Writer) -> int:
    if args.suite == "certificate":
        if not (args.input and args.cert):
            raise CliError("certificate suite needs --in and --cert", EXIT_PARSE)
        box = _load_box(w, args.input)
        _require_valid(box, args.input)
        model = _model_for(args.model, box)
        w.manifest.model = args.model
        try:
            cert = certificate_from_dict(json.loads(w.read_input(args.cert)), box.probs.shape)
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.cert}: not JSON: {exc}", EXIT_PARSE) from None
        report = verify_certificate(box, cert, model)
        data = {"passed": report.ok, "issues": [{"kind": i.kind, "detail": i.detail} for i in report.issues]}
    else:
        w.manifest.seed = args.seed
        names = FAMILIES if args.op == "all" else (args.op,)
        suites = [run_suite(family(name), args.trials, args.seed) for name in names]
        data = {"passed": all(s.ok for s in suites), "suites": [s.to_json() for s in suites]}
    text = json.dumps(data, indent=1, sort_keys=True) + "\n"
    if args.out:
        w.file(args.out, text)
    else:
        for line in text.splitlines():
            w.line(line)
    w.line("pass" if data["passed"] else "fail")
    return EXIT_OK if data["passed"] else EXIT_CHECK


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boxlab", description="Exact non-signaling box toolkit")
    p.add_argument("--version", action="version", version=f"boxlab {__version__}")
    p.add_argument("--manifest", help="write a run manifest (JSON) to this path")
    sub = p.add_subparsers(dest="command", required=True)

    box = sub.add_parser("box", help="show, validate or make boxes")
    box_sub = box.add_subparsers(dest="action", required=True)
    for name in ("show", "validate"):
        q = box_sub.add_parser(name)
        q.add_argument("--in", dest="input", required=True)
    q = box_sub.add_parser("make")
    q.add_argument("--family", required=True, help="pr|apr|brst:rst|iso:rst:alpha|flag:j:n|bin:labels[:alpha[:beta]]")
    q.add_argument("--out")
    box.set_defaults(func=cmd_box)

    cost = sub.add_parser("cost", help="non-locality cost of a box")
    cost.add_argument("--in", dest="input", required=True)
    cost.add_argument("--model", default="auto", choices=MODELS + ("auto",))
    cost.add_argument("--emit-cert")
    cost.set_defaults(func=cmd_cost)

    def sweep_args(q):
        q.add_argument("--k", type=int, required=True)
        q.add_argument("--alpha", default="1")
        q.add_argument("--model", default="lrns576", choices=("det256", "lrns576"))
        q.add_argument("--aggregation", default="min", choices=("min", "max"))
        q.add_argument("--out")

    bound = sub.add_parser("bound", help="discrimination bounds")
    bound_sub = bound.add_subparsers(dest="formula", required=True)
    for name in ("theorem1", "alpha"):
        q = bound_sub.add_parser(name)
        q.add_argument("--labels", required=True, help="comma-separated rst labels")
        q.add_argument("--alpha", default="1")
        q.add_argument("--beta", default="1")
        q.add_argument("--model", default="lrns576", choices=("det256", "lrns576"))
    q = bound_sub.add_parser("maxflags")
    q.add_argument("--cost", required=True)
    sweep_args(bound_sub.add_parser("sweep"))
    bound.set_defaults(func=cmd_bound)

    sweep = sub.add_parser("sweep", help="same as 'bound sweep'")
    sweep_args(sweep)
    sweep.set_defaults(func=cmd_bound, formula="sweep")

    dist = sub.add_parser("distinguish", help="distinguish two boxes")
    dist.add_argument("--a", required=True)
    dist.add_argument("--b", required=True)
    dist.add_argument("--mode", default="helstrom", choices=("helstrom", "perfect", "conclusive"))
    dist.set_defaults(func=cmd_distinguish)

    vert = sub.add_parser("vertices", help="enumerate vertex sets as JSONL")
    vert.add_argument("--scenario", required=True, choices=("2222", "abcd"))
    vert.add_argument("--kind", required=True, choices=("local", "ns", "lrns"))
    vert.add_argument("--out")
    vert.set_defaults(func=cmd_vertices)

    tr = sub.add_parser("transform", help="apply an operation to a box")
    tr.add_argument("--op", required=True, choices=("twirl", "o-rot", "compare"))
    tr.add_argument("--in", dest="input", required=True)
    tr.add_argument("--label")
    tr.add_argument("--acted", help="acted subsystem pair 'i,j' for twirl and o-rot")
    tr.add_argument("--measure")
    tr.add_argument("--partition", help="JSON list of blocks of [a, b] outcome pairs")
    tr.add_argument("--out")
    tr.set_defaults(func=cmd_transform)

    ver = sub.add_parser("verify", help="CLP property suites or certificate checks")
    ver.add_argument("--suite", default="clp", choices=("clp", "certificate"))
    ver.add_argument("--op", default="all", choices=FAMILIES + ("all",))
    ver.add_argument("--trials", type=int, default=100)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--in", dest="input")
    ver.add_argument("--cert")
    ver.add_argument("--model", default="auto", choices=MODELS + ("auto",))
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    writer = Writer(RunManifest(["boxlab"] + argv), stdout)
    try:
        code = args.func(args, writer)
    except CliError as exc:
        print(f"boxlab: {exc}", file=stderr)
        return exc.code
    except SignalingError as exc:
        print(f"boxlab: {exc}", file=stderr)
        return EXIT_INVALID
    except MalformedTableError as exc:
        print(f"boxlab: {exc}", file=stderr)
        return EXIT_INVALID
    except (BoxError, ValueError, NotImplementedError) as exc:
        print(f"boxlab: {exc}", file=stderr)
        return EXIT_CONTRACT
    writer.finish(args.manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
