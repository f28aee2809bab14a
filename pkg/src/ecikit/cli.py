"""Command-line interface.

Exit codes: 0 holds / pass, 1 fails / counterexample found, 2 usage or
input error, 3 vacuous / not found.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Optional, Sequence

from . import consistency, dag as dagmod, gcomp, lab
from .eci import StatementError, format_statement, parse_statement, evaluate
from .model import ModelError, load_model, validate_model, dump_model
from .verdict import Outcome, Verdict, conjoin

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_VACUOUS = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _exit_for(v: Verdict) -> int:
    return {Outcome.HOLDS: EXIT_OK, Outcome.FAILS: EXIT_FAIL, Outcome.VACUOUS: EXIT_VACUOUS}[v.outcome]


def _verdict_text(v: Verdict) -> list[str]:
    lines = [f"{v.label or 'verdict'}: {v.outcome.value.upper()} (max discrepancy {v.discrepancy:.3g})"]
    w = v.witness
    if w is not None:
        lines.append(f"  witness ({w.kind}) over {', '.join(w.left) or '()'}:")
        lines.append(f"    a: regime {w.regime_a} given {w.given_a} -> {[round(x, 6) for x in w.table_a]}")
        lines.append(f"    b: regime {w.regime_b} given {w.given_b} -> {[round(x, 6) for x in w.table_b]}")
    if v.missing:
        lines.append(f"  skipped {len(v.missing)} context(s) with absent regimes")
    return lines


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) in (None, ""):
            raise UsageError(f"{args.command} needs --{n.replace('_', '-')}")


def cmd_validate(args) -> tuple[int, dict, list[str]]:
    if not args.model and not args.dag:
        raise UsageError("validate needs --model or --dag")
    problems: list[str] = []
    if args.model:
        problems += [str(d) for d in validate_model(load_model(args.model))]
    if args.dag:
        problems += dagmod.validate_dag(dagmod.load_dag(args.dag))
    text = problems or ["valid"]
    return (EXIT_FAIL if problems else EXIT_OK), {"diagnostics": problems, "valid": not problems}, text


def cmd_eval(args):
    _need(args, "model", "stmt")
    model = load_model(args.model)
    stmt = parse_statement(args.stmt)
    v = evaluate(model, stmt, args.tol)
    return _exit_for(v), {"statement": format_statement(stmt, model), "verdict": v.to_dict()}, _verdict_text(v)


def cmd_dc(args):
    _need(args, "model")
    model = load_model(args.model)
    targets = [args.target] if args.target else list(model.targets)
    parts = [consistency.check_distributional_consistency(model, t, args.tol) for t in targets]
    v = conjoin(parts, "distributional consistency")
    text = [line for p in parts for line in _verdict_text(p)]
    return _exit_for(v), {"verdict": v.to_dict()}, text


def _lemma_ids(args) -> list[consistency.LemmaId]:
    if not args.lemma:
        return list(consistency.LemmaId)
    return [consistency.LemmaId(x.strip()) for x in args.lemma.split(",") if x.strip()]


def cmd_lemma(args):
    _need(args, "model", "lemma")
    model = load_model(args.model)
    dag = dagmod.load_dag(args.dag) if args.dag else None
    reports = []
    for lemma in _lemma_ids(args):
        for b in consistency.admissible_bindings(model, lemma, dag):
            reports.append(consistency.check_lemma(model, lemma, b, args.tol))
    failures = [r for r in reports if not r.implication_ok]
    active = [r for r in reports if r.premise.holds]
    text = [f"{len(reports)} instance(s), {len(active)} with a true premise, {len(failures)} implication failure(s)"]
    for r in failures:
        text.append(f"  {r.lemma.value} {r.binding.to_dict()}: premise holds, conclusion fails")
        text += ["  " + line for line in _verdict_text(r.conclusion)]
    code = EXIT_FAIL if failures else (EXIT_OK if active else EXIT_VACUOUS)
    data = {
        "instances": len(reports),
        "premise_holds": len(active),
        "failures": [r.to_dict() for r in failures],
    }
    return code, data, text


def cmd_suite(args):
    config = consistency.GeneratorConfig(kind=args.kind)
    rep = consistency.run_suite(config, _lemma_ids(args), args.trials, args.seed, args.tol)
    text = [f"{'lemma':<20} {'instances':>9} {'premise':>8} {'vacuous':>8} {'failures':>8}"]
    for l in rep.lemmas:
        c = rep.counts[l]
        text.append(f"{l.value:<20} {c.instances:>9} {c.premise_holds:>8} {c.vacuous:>8} {c.implication_failures:>8}")
    text.append(f"induction disagreements: {rep.induction_disagreements}")
    return (EXIT_FAIL if rep.total_failures else EXIT_OK), rep.to_dict(), text


def cmd_dsep(args):
    _need(args, "dag", "stmt")
    g = dagmod.load_dag(args.dag)
    stmt = parse_statement(args.stmt)
    X = list(stmt.left)
    Y = list(stmt.independent) + [dagmod.indicator_name(t.target) for t in stmt.group]
    Z = list(stmt.given) + [dagmod.indicator_name(t.target) for t in stmt.context]
    sep = dagmod.d_separated(g, X, Y, Z)
    text = [f"{', '.join(X)} and {', '.join(Y) or '{}'} are {'d-separated' if sep else 'd-connected'} given {', '.join(Z) or '{}'}"]
    return (EXIT_OK if sep else EXIT_FAIL), {"X": X, "Y": Y, "Z": Z, "d_separated": sep}, text


def cmd_markov(args):
    _need(args, "model", "dag")
    model = load_model(args.model)
    g = dagmod.load_dag(args.dag)
    verdicts = dagmod.verify_local_markov(model, g, args.tol)
    v = conjoin(verdicts, "local Markov")
    text = [f"{p.outcome.value.upper():8} {p.label}" for p in verdicts]
    return _exit_for(v), {"verdict": v.to_dict()}, text


def cmd_gcomp(args):
    _need(args, "model", "x0", "x1")
    model = load_model(args.model)
    x0 = _label(model, gcomp.SequentialProblem.infer(model, 0, 0).X0, args.x0)
    x1 = _label(model, gcomp.SequentialProblem.infer(model, 0, 0).X1, args.x1)
    prob = gcomp.SequentialProblem.infer(model, x0, x1)
    rep = gcomp.verify_identification(prob, args.tol)
    cond = gcomp.check_corrected_condition(prob, args.tol)
    text = [
        f"g-formula      P({prob.Y}) = {[round(x, 9) for x in rep.g]}",
        f"interventional P({prob.Y}) = {[round(x, 9) for x in rep.interventional]}",
        f"distance {rep.distance:.3g}: {'PASS' if rep.passed else 'FAIL'}",
    ] + _verdict_text(cond)
    return (EXIT_OK if rep.passed else EXIT_FAIL), {"identification": rep.to_dict(), "condition": cond.to_dict()}, text


def _label(model, name, raw: str):
    decl = model.decl(name)
    return decl.domain[decl.index(raw)]


LAB_TASKS = ("fat-hand", "contextual", "EQ13")


def cmd_lab(args):
    _need(args, "lemma")
    task = args.lemma
    if task == "fat-hand":
        model = lab.build_fat_hand_model()
        v = evaluate(model, "Y _||_ F(T) | T", args.tol)
        sep = dagmod.d_separated(lab.fat_hand_dag(), {"F_T"}, {"Y"}, {"T"})
        ok = v.holds and not sep
        if args.out:
            dump_model(model, args.out)
        text = _verdict_text(v) + [f"d_separated(F_T, Y | T) = {sep}", "unfaithful" if ok else "not demonstrated"]
        return (EXIT_OK if ok else EXIT_FAIL), {"verdict": v.to_dict(), "d_separated": sep, "certified": ok}, text
    if task == "contextual":
        rep = lab.contextual_demo()
        text = _verdict_text(rep.checked) + _verdict_text(rep.full) + [f"certified: {rep.certified}"]
        return (EXIT_OK if rep.certified else EXIT_FAIL), rep.to_dict(), text
    budget = args.trials if args.trials is not None else 100_000
    config = lab.SearchConfig(lemma=task, budget=budget, seed=args.seed, tol=args.tol)
    found = lab.search_eq13_counterexample(config) if task == "EQ13" else lab.search_vi_counterexample(config)
    if isinstance(found, lab.NotFound):
        return EXIT_VACUOUS, found.to_dict(), [f"no counterexample in {found.trials} trial(s)"]
    if args.out:
        found.dump(args.out)
    text = [f"counterexample after {found.trials} trial(s)"] + [f"  {k}: {v}" for k, v in found.certificate.items()]
    return EXIT_FAIL, found.to_dict(), text


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "eval": cmd_eval,
    "dc": cmd_dc,
    "lemma": cmd_lemma,
    "suite": cmd_suite,
    "dsep": cmd_dsep,
    "markov": cmd_markov,
    "gcomp": cmd_gcomp,
    "lab": cmd_lab,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", help="model file (JSON)")
    common.add_argument("--dag", help="augmented DAG file (JSON)")
    common.add_argument("--stmt", help="statement text")
    common.add_argument("--lemma", help="lemma id(s), comma separated; for lab also EQ13, fat-hand, contextual")
    common.add_argument("--target", help="intervention target")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--trials", type=int)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--x0", help="value of the first treatment (gcomp)")
    common.add_argument("--x1", help="value of the second treatment (gcomp)")
    common.add_argument("--kind", choices=("structural", "random"), default="structural", help="suite generator")
    common.add_argument("--out", help="write a lab finding here")
    parser = _Parser(prog="ecikit", description="Check decision-theoretic independence statements on finite models.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        if args.command == "suite" and args.trials is None:
            args.trials = 200
        code, data, text = COMMANDS[args.command](args)
    except (UsageError, StatementError, ModelError, dagmod.DagError, consistency.BindingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    if args.format == "structured":
        print(json.dumps({"command": args.command, "exit": code, **data}, indent=2, sort_keys=True, default=str), file=out)
    else:
        print("\n".join(text), file=out)
    return code


def main() -> None:
    sys.exit(run())
