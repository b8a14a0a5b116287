"""Command-line interface: plan, validate, explain, report, serve.

``plan`` prints the suggested-test tree as indented text and can write the
canonical JSON document; ``report`` renders the figures and CSV extracts
next to it; ``serve`` runs the session service for the browser client.
Errors print a diagnostic per line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BeliefPlanError, ModelError
from .model_io import compile_network, load_model
from .planner import PlanConfig, build_tree
from .treedoc import (
    evaluation_to_doc,
    node_at,
    parse_node_path,
    plan_document,
    render_text,
    to_json,
)

DEFAULT_DEPTH = 5


def _parse_evidence(pairs: list[str]) -> dict[str, str]:
    evidence: dict[str, str] = {}
    for pair in pairs:
        var, sep, value = pair.partition("=")
        if not sep or not var or not value:
            raise ModelError([f"evidence must look like VAR=VALUE, got {pair!r}"])
        evidence[var] = value
    return evidence


def _load(path: str, depth: int, evidence_pairs: list[str]):
    doc = load_model(path)
    net, model = compile_network(doc)
    config = PlanConfig(max_depth=depth, evidence=_parse_evidence(evidence_pairs))
    return net, model, config


def _cmd_plan(args) -> int:
    net, model, config = _load(args.model, args.depth, args.evidence)
    root = build_tree(net, model, config)
    sys.stdout.write(render_text(root))
    if args.out:
        doc = plan_document(root, config.max_depth, config.evidence)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(to_json(doc))
        print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    doc = load_model(args.model)
    compile_network(doc)  # frame/domain errors surface here
    print(
        f"ok: {len(doc.tests)} tests, {len(doc.symptoms)} symptoms, "
        f"{len(doc.diagnosis.frame)} diagnoses, {len(doc.treatments)} treatments, "
        f"{len(doc.rules)} rules"
    )
    return 0


def _cmd_explain(args) -> int:
    net, model, config = _load(args.model, args.depth, args.evidence)
    node = node_at(build_tree(net, model, config), parse_node_path(args.node))
    if node.kind == "contradiction":
        print("contradiction: the evidence on this path is fully conflicting")
        return 0
    print(f"selected: {node.selected}  (MaxU {node.max_u_selected:.4f})")
    print("candidates (MaxU, higher is better):")
    for candidate, value in sorted(node.explanation.items(), key=lambda kv: -kv[1]):
        marker = " <- selected" if candidate == node.selected else ""
        print(f"  {candidate:>12}  {value:12.4f}{marker}")
    for ev in (evaluation_to_doc(node.details[t]) for t in node.details):
        print(
            f"  {ev['test']}: cost {ev['cost']}, P(+)={ev['p_positive']:.4f}, "
            f"MaxU(+)={ev['max_u_positive']:.4f}, MaxU(-)={ev['max_u_negative']:.4f}"
        )
    print("treatment ranking:")
    for treatment, eu in node.ranking.entries:
        print(f"  {treatment:>12}  {eu:12.4f}")
    return 0


def _cmd_report(args) -> int:
    from .report import write_report  # matplotlib import deferred to here

    net, model, config = _load(args.model, args.depth, args.evidence)
    root = build_tree(net, model, config)
    written = write_report(root, args.outdir, config.max_depth, config.evidence)
    for name, path in written.items():
        print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    from .service import SessionManager, start_server

    manager = SessionManager()
    for name in ("minimal", "waste_disposal"):
        manager.register_bundled(name)
    for path in args.models:
        name = manager.register_file(path)
        print(f"registered model {name!r} from {path}")
    server = start_server(manager, host=args.host, port=args.port)
    host, port = server.server_address
    print(f"serving v1 session API on http://{host}:{port}/ (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        server.server_close()
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefplan",
        description="Belief-function decision support: plan tests, explain choices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_depth=True):
        p.add_argument("model", help="path to a model YAML file")
        if with_depth:
            p.add_argument("--depth", type=int, default=DEFAULT_DEPTH,
                           help=f"plan tree depth (default {DEFAULT_DEPTH})")
            p.add_argument("--evidence", action="append", default=[], metavar="VAR=VALUE",
                           help="evidence already in hand; repeatable")

    p_plan = sub.add_parser("plan", help="print the suggested-test tree")
    common(p_plan)
    p_plan.add_argument("--out", help="also write the canonical JSON tree document here")
    p_plan.set_defaults(func=_cmd_plan)

    p_validate = sub.add_parser("validate", help="check a model file and summarize it")
    common(p_validate, with_depth=False)
    p_validate.set_defaults(func=_cmd_validate)

    p_explain = sub.add_parser("explain", help="why a node suggests what it does")
    common(p_explain)
    p_explain.add_argument("--node", default="", metavar="PATH",
                           help="outcome path from the root, e.g. '+,-' (default: root)")
    p_explain.set_defaults(func=_cmd_explain)

    p_report = sub.add_parser("report", help="figures + CSV extracts of the plan")
    common(p_report)
    p_report.add_argument("--outdir", default="beliefplan-report",
                          help="directory for the rendered artifacts")
    p_report.set_defaults(func=_cmd_report)

    p_serve = sub.add_parser("serve", help="run the local session service")
    p_serve.add_argument("models", nargs="*", help="extra model files to register")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8741)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        for line in exc.diagnostics:
            print(f"error: {line}", file=sys.stderr)
        return 2
    except BeliefPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
