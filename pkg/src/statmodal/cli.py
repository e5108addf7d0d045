"""Command-line front end.

    statmodal eval  MODEL WORLD FORMULA   evaluate one formula
    statmodal check MODEL CHECKS          run a file of named checks
    statmodal report MODEL WORLD          confusion / fairness quantities

Exit status: 0 when everything holds, 1 when some check fails, 2 on any
error (bad input, parse failure, adapter trouble).  `--json` switches the
report to a machine-readable document on stdout; `--trace` includes the
full evaluation tree; `--seed N` overrides every seeded transform in the
model file.

Verdicts that involve a knowledge operator are always annotated with the
number of accessible worlds: the universe is only what the model file
declares, and a vacuous "knows" is worth seeing.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import yaml

from .config import load_model
from .divergence import Distance
from .errors import ParseError, StatModalError
from .evaluate import TraceNode, Verdict, evaluate, evaluate_all
from .model import DistributionalModel
from .parser import parse_formula
from .report import (confusion_quantities, fairness_quantities,
                     render_decimal, render_quantity)
from .templates import CONFUSION_KINDS, build_template


def exact_str(value) -> str:
    if isinstance(value, Distance):
        root = value.exact_value()
        return str(root) if root is not None else value.render()
    return str(Fraction(value))


def _quantity_entries(node: TraceNode | None) -> list[dict]:
    """Flatten a trace into its measured quantities, outermost first."""
    if node is None:
        return []
    out = []
    if node.quantity is not None:
        out.append({
            "decimal": render_decimal(node.quantity),
            "exact": exact_str(node.quantity),
            "formula": node.formula,
            "world": node.world,
        })
    for child in node.children:
        out.extend(_quantity_entries(child))
    return out


def _knowledge_notes(node: TraceNode | None) -> list[str]:
    if node is None:
        return []
    out = []
    if node.note and "accessible world" in node.note:
        out.append(f"{node.formula} on '{node.world}': {node.note}")
    for child in node.children:
        out.extend(_knowledge_notes(child))
    return out


def _trace_json(node: TraceNode | None):
    if node is None:
        return None
    entry = {
        "formula": node.formula,
        "holds": node.holds,
        "world": node.world,
    }
    if node.quantity is not None:
        entry["exact"] = exact_str(node.quantity)
        entry["decimal"] = render_decimal(node.quantity)
    if node.note:
        entry["note"] = node.note
    if node.children:
        entry["children"] = [_trace_json(c) for c in node.children]
    return entry


def _print_trace(node: TraceNode, indent: int = 0) -> None:
    mark = "true " if node.holds else "false"
    line = f"{'  ' * indent}{mark} {node.formula}  [{node.world}]"
    if node.quantity is not None:
        line += f"  = {render_quantity(node.quantity)}"
    if node.note:
        line += f"  ({node.note})"
    print(line)
    for child in node.children:
        _print_trace(child, indent + 1)


def _check_json(name: str, verdict: Verdict, want_trace: bool) -> dict:
    entry = {
        "formula": verdict.formula,
        "holds": verdict.holds,
        "name": name,
        "quantities": _quantity_entries(verdict.trace),
        "universe_relative": verdict.universe_relative,
        "world": verdict.world,
    }
    if verdict.failing_world is not None:
        entry["failing_world"] = verdict.failing_world
    if want_trace:
        entry["trace"] = _trace_json(verdict.trace)
    return entry


def _print_check_text(name: str | None, verdict: Verdict,
                      want_trace: bool) -> None:
    word = "true" if verdict.holds else "false"
    head = f"check {name}: " if name is not None else ""
    where = verdict.world
    if verdict.failing_world is not None:
        where += f"; fails on '{verdict.failing_world}'"
    print(f"{head}{word}  [{where}]  {verdict.formula}")
    for entry in _quantity_entries(verdict.trace):
        print(f"  quantity {entry['formula']} on '{entry['world']}': "
              f"{entry['exact']} ({entry['decimal']})")
    for note in _knowledge_notes(verdict.trace):
        print(f"  knowledge {note}")
    if want_trace and verdict.trace is not None:
        print("  trace:")
        _print_trace(verdict.trace, indent=2)


def _evaluate_named(model: DistributionalModel, world: str, formula) -> Verdict:
    if world == "all":
        return evaluate_all(model, formula, trace=True)
    return evaluate(model, world, formula, trace=True)


def cmd_eval(args) -> int:
    model = load_model(args.model, seed=args.seed)
    formula = parse_formula(args.formula, model)
    verdict = _evaluate_named(model, args.world, formula)
    if args.json:
        doc = _check_json(None, verdict, args.trace)
        del doc["name"]
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        _print_check_text(None, verdict, args.trace)
    return 0 if verdict.holds else 1


def _load_checks(path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read checks file: {exc}", path=str(path))
    except yaml.YAMLError as exc:
        raise ParseError(f"bad YAML: {exc}", path=str(path))
    if isinstance(doc, dict) and "checks" in doc:
        doc = doc["checks"]
    if not isinstance(doc, list) or not doc:
        raise ParseError("a checks file is a non-empty list of checks",
                         path=str(path))
    seen = set()
    checks = []
    for i, raw in enumerate(doc):
        if not isinstance(raw, dict):
            raise ParseError(f"check #{i + 1} is not a mapping",
                             path=str(path))
        raw = dict(raw)
        name = raw.pop("name", None)
        world = raw.pop("world", None)
        if not isinstance(name, str) or not name:
            raise ParseError(f"check #{i + 1} needs a name", path=str(path))
        if name in seen:
            raise ParseError(f"duplicate check name {name!r}",
                             path=str(path))
        seen.add(name)
        if not isinstance(world, str) or not world:
            raise ParseError(f"check {name!r} needs a world (or \"all\")",
                             path=str(path))
        formula = raw.pop("formula", None)
        template = raw.pop("template", None)
        if raw:
            raise ParseError(f"check {name!r}: unknown key(s) "
                             f"{sorted(raw)}", path=str(path))
        if (formula is None) == (template is None):
            raise ParseError(f"check {name!r} needs exactly one of "
                             f"'formula' or 'template'", path=str(path))
        if formula is not None and not isinstance(formula, str):
            raise ParseError(f"check {name!r}: formula must be a string",
                             path=str(path))
        if template is not None and not isinstance(template, dict):
            raise ParseError(f"check {name!r}: template must be a mapping",
                             path=str(path))
        checks.append({"name": name, "world": world, "formula": formula,
                       "template": template})
    return checks


def _template_formula(raw: dict, model: DistributionalModel):
    spec = dict(raw)
    params = spec.pop("params", None)
    if params is not None:
        if not isinstance(params, dict):
            raise ParseError("template params must be a mapping")
        overlap = set(params) & set(spec)
        if overlap:
            raise ParseError(f"template params repeat key(s) "
                             f"{sorted(overlap)}")
        spec.update(params)
    return build_template(spec, model)


def cmd_check(args) -> int:
    model = load_model(args.model, seed=args.seed)
    checks = _load_checks(args.checks)
    if args.only:
        wanted = set(args.only)
        known = {c["name"] for c in checks}
        missing = wanted - known
        if missing:
            raise ParseError(f"--only names unknown check(s) "
                             f"{sorted(missing)}")
        checks = [c for c in checks if c["name"] in wanted]
    results = []
    for check in checks:
        if check["formula"] is not None:
            formula = parse_formula(check["formula"], model)
        else:
            formula = _template_formula(check["template"], model)
        verdict = _evaluate_named(model, check["world"], formula)
        results.append((check["name"], verdict))
    all_hold = all(v.holds for _, v in results)
    if args.json:
        doc = {
            "checks": [_check_json(name, verdict, args.trace)
                       for name, verdict in results],
            "holds": all_hold,
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for name, verdict in results:
            _print_check_text(name, verdict, args.trace)
        passed = sum(1 for _, v in results if v.holds)
        print(f"{passed} of {len(results)} check(s) hold")
    return 0 if all_hold else 1


def _rat_cell(value) -> str:
    if value is None:
        return "undefined"
    return render_quantity(value)


def _rat_json(value):
    if value is None:
        return None
    return {"decimal": render_decimal(value), "exact": exact_str(value)}


def cmd_report(args) -> int:
    model = load_model(args.model, seed=args.seed)
    world = model.world(args.world)
    labels = [args.label] if args.label else sorted(model.labels)
    doc = {"world": args.world}
    confusion_out = []
    for label in labels:
        rep = confusion_quantities(model, world, label)
        confusion_out.append(rep)
    if args.json:
        doc["confusion"] = {
            rep.label: {kind: _rat_json(rep.quantities[kind])
                        for kind in CONFUSION_KINDS}
            for rep in confusion_out
        }
    else:
        for rep in confusion_out:
            print(f"label {rep.label} on '{args.world}':")
            for kind in CONFUSION_KINDS:
                print(f"  {kind:<12} {_rat_cell(rep.quantities[kind])}")
    if args.groups:
        g0, g1 = args.groups
        rep = fairness_quantities(model, world, g0, g1)
        if args.json:
            doc["fairness"] = {
                "group0": g0,
                "group1": g1,
                "independence": _rat_json(rep.independence),
                "separation": {lab: _rat_json(v)
                               for lab, v in rep.separation.items()},
                "sufficiency": {lab: _rat_json(v)
                                for lab, v in rep.sufficiency.items()},
            }
        else:
            print(f"groups {g0} vs {g1} on '{args.world}':")
            print(f"  independence (TV of predictions): "
                  f"{_rat_cell(rep.independence)}")
            for lab in sorted(rep.separation):
                print(f"  separation at actual '{lab}': "
                      f"{_rat_cell(rep.separation[lab])}")
            for lab in sorted(rep.sufficiency):
                print(f"  sufficiency at predicted '{lab}': "
                      f"{_rat_cell(rep.sufficiency[lab])}")
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statmodal",
        description="Check probabilistic and epistemic properties of "
                    "datasets and classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")
        p.add_argument("--seed", type=int, default=None,
                       help="override every seeded transform")

    p_eval = sub.add_parser("eval", help="evaluate one formula on a world")
    p_eval.add_argument("model", help="model file (YAML)")
    p_eval.add_argument("world", help="world name, or \"all\"")
    p_eval.add_argument("formula", help="formula text")
    p_eval.add_argument("--trace", action="store_true",
                        help="include the evaluation tree")
    common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_check = sub.add_parser("check", help="run a file of named checks")
    p_check.add_argument("model", help="model file (YAML)")
    p_check.add_argument("checks", help="checks file (YAML)")
    p_check.add_argument("--only", action="append", metavar="NAME",
                         help="run only the named check (repeatable)")
    p_check.add_argument("--trace", action="store_true",
                         help="include evaluation trees")
    common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_report = sub.add_parser(
        "report", help="confusion and fairness quantities for a world")
    p_report.add_argument("model", help="model file (YAML)")
    p_report.add_argument("world", help="world name")
    p_report.add_argument("--label", default=None,
                          help="one label (default: all)")
    p_report.add_argument("--groups", nargs=2, metavar=("G0", "G1"),
                          default=None, help="two group names "
                          "(prefix ! complements)")
    common(p_report)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StatModalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
