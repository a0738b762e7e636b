"""Command-line entry point: ``safesec validate|analyze|recommend``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import kb as K
from .catalog import MissingIntent
from .codesign import analyze_consequences
from .dsl import ArityError, FactSyntaxError, parse, parse_files, render_fact, render_term
from .export import SCHEMA_VERSION, delta_facts, solutions_json, to_dot
from .reach import compute_reachable
from .safety import asil_of, derive_avoidance, goal_verdicts
from .security import all_pthreats, derive_mitigated, derive_threats, sort_threats
from .solutions import CandidateExplosion, Options, enumerate_solutions, gather_candidates, report

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_CAP = 0, 1, 2, 3
BUILTIN_PREFIX = "builtin:"


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def load_corpus(name: str = "headlamp") -> K.KnowledgeBase:
    """A bundled corpus (``headlamp`` or ``headlamp_dsl``)."""
    from importlib.resources import files

    res = files("safesec") / "data" / f"{name}.facts"
    return parse(res.read_text(encoding="utf-8"), f"{BUILTIN_PREFIX}{name}")


def _load(paths: list) -> K.KnowledgeBase:
    try:
        kbs = [load_corpus(p[len(BUILTIN_PREFIX):]) for p in paths if p.startswith(BUILTIN_PREFIX)]
        files = [p for p in paths if not p.startswith(BUILTIN_PREFIX)]
        facts = set(parse_files(files).facts) if files else set()
    except (FactSyntaxError, ArityError) as exc:
        raise _Fail(EXIT_PARSE, f"parse error: {exc}") from None
    except (OSError, FileNotFoundError) as exc:
        raise _Fail(EXIT_PARSE, f"cannot read input: {exc}") from None
    for kb in kbs:
        facts |= kb.facts
    return K.KnowledgeBase(frozenset(facts))


def _load_valid(paths: list) -> K.KnowledgeBase:
    kb = _load(paths)
    diags = K.validate(kb)
    for d in diags:
        if d.is_error:
            print(d, file=sys.stderr)
    if K.errors(diags):
        raise _Fail(EXIT_INVALID, "input has validation errors")
    return kb


def _names(values) -> set:
    out = set()
    for v in values or ():
        out.update(x for x in v.split(",") if x)
    return out


# --------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    kb = _load(args.paths)
    diags = K.validate(kb)
    for d in diags:
        print(d, file=sys.stderr)
    n_err = len(K.errors(diags))
    print(f"{len(kb)} facts, {n_err} errors, {len(diags) - n_err} warnings", file=sys.stderr)
    return EXIT_INVALID if n_err else EXIT_OK


def _tuple_term(attrs) -> str:
    return render_term(tuple(attrs))


def _safety_view(kb: K.KnowledgeBase) -> dict:
    av = derive_avoidance(kb)
    verdicts = goal_verdicts(kb, av.controls)
    return {
        "asil": {h: asil_of(kb, h) for h in sorted(kb.hazards)},
        "avoided": sorted((a.failure, a.by_instance, a.attrs.attrs()) for a in av.avoided),
        "avoided_mcs": sorted((m, a.attrs()) for m, a in av.avoided_mcs),
        "tolerated": sorted((f, a.attrs()) for f, a in av.tolerated),
        "controlled": sorted((c.hazard, c.attrs.attrs()) for c in av.controls),
        "goals": {g: (list(c.attrs.attrs()) if c else None) for g, c in verdicts.items()},
    }


def _analyze_safety(kb, fmt) -> str:
    v = _safety_view(kb)
    if fmt == "json":
        return json.dumps({"schema_version": SCHEMA_VERSION, **v}, indent=2, sort_keys=True)
    lines = [f"asil({h},{a})." for h, a in v["asil"].items()]
    lines += [f"avoided({f},[{i},{','.join(a)}])." for f, i, a in v["avoided"]]
    lines += [f"avoidedMCS({m},{_tuple_term(a)})." for m, a in v["avoided_mcs"]]
    lines += [f"tol({f},{_tuple_term(a)})." for f, a in v["tolerated"]]
    lines += [f"ctl({h},{_tuple_term(a)})." for h, a in v["controlled"]]
    for g, via in v["goals"].items():
        lines.append(f"satisfied({g},{_tuple_term(via)})." if via else f"unsatisfied({g}).")
    return "\n".join(lines)


def _analyze_security(kb, fmt) -> str:
    reach = compute_reachable(kb)
    pthreats = sort_threats(all_pthreats(kb))
    threats = sort_threats(derive_threats(kb, reach))
    mitigated = derive_mitigated(kb, threats)
    realized_ids = {(t.id, t.target) for t in threats}
    unrealized = [p for p in pthreats if (p.id, p.target) not in realized_ids]
    if fmt == "json":
        from .solutions import threat_dict

        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "pthreats": [threat_dict(t) for t in pthreats],
            "threats": [dict(threat_dict(t), mitigated=t.key in mitigated) for t in threats],
            "unrealized": [threat_dict(t) for t in unrealized],
        }, indent=2, sort_keys=True)
    lines = [render_fact(t) for t in pthreats] + [render_fact(t) for t in threats]
    lines += [f"mitigated([{t.id},{render_term(t.path)}])." for t in threats if t.key in mitigated]
    lines.append(f"% {len(threats)} threats, {len(unrealized)} unrealized potential threats, "
                 f"{len(mitigated)} mitigated")
    return "\n".join(lines)


def _analyze_codesign(kb, fmt) -> str:
    rep = analyze_consequences(kb)
    new = sort_threats(rep.new_pthreats)
    realized = sort_threats(rep.realized_new)
    unrealized = sort_threats(rep.unrealized)
    faults = sorted(rep.new_faults, key=lambda x: x[0].id)
    warns = sorted(rep.cascading, key=lambda w: (w.instance, w.hazard, w.component))
    if fmt == "json":
        from .solutions import threat_dict

        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "new_pthreats": [threat_dict(t) for t in new],
            "realized": [threat_dict(t) for t in realized],
            "unrealized": [threat_dict(t) for t in unrealized],
            "new_faults": [{"fault": ft.id, "locus": ft.locus, "failure": fl.id, "type": fl.ftype}
                           for ft, fl, _ in faults],
            "cascading": [{"instance": w.instance, "hazard": w.hazard, "component": w.component,
                           "flows": list(w.flows)} for w in warns],
        }, indent=2, sort_keys=True)
    lines = [render_fact(t) for t in new] + [render_fact(t) for t in realized]
    for triple in faults:
        lines += [render_fact(f) for f in triple]
    lines += [f"cascading({w.instance},{w.hazard},{w.component},{render_term(w.flows)})."
              for w in warns]
    lines += [f"% warning: {w}" for w in warns]
    lines.append(f"% {len(new)} new potential threats ({len(unrealized)} unrealized), "
                 f"{len(realized)} realized, {len(faults)} new faults, {len(warns)} cascading warnings")
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    kb = _load_valid(args.paths)
    fmt = "json" if args.format == "json" else "facts"
    view = {"safety": _analyze_safety, "security": _analyze_security,
            "codesign": _analyze_codesign}[args.which]
    print(view(kb, fmt))
    return EXIT_OK


def cmd_recommend(args) -> int:
    kb = _load_valid(args.paths)
    explore_saf = _names(args.explore_safety) | kb.explore_safety
    explore_sec = _names(args.explore_security) | kb.explore_security
    opts = Options(max_solutions=args.max_solutions, require_all_goals=args.require_goals,
                   require_all_mitigated=args.require_mitigation, candidate_cap=args.cap)
    try:
        candidates, warnings = gather_candidates(kb, explore_saf, explore_sec)
        sols = enumerate_solutions(kb, options=opts, candidates=candidates)
    except CandidateExplosion as exc:
        raise _Fail(EXIT_CAP, str(exc)) from None
    except (MissingIntent, KeyError, ValueError) as exc:
        raise _Fail(EXIT_INVALID, str(exc).strip("'\"")) from None
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(candidates)} candidates, {len(sols)} solutions", file=sys.stderr)

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    if args.format == "json":
        text = solutions_json([report(s) for s in sols], warnings)
        if out_dir:
            (out_dir / "solutions.json").write_text(text + "\n", encoding="utf-8")
        else:
            print(text)
        return EXIT_OK

    for n, sol in enumerate(sols, 1):
        label = "; ".join(c.label() for c in sol.candidates) or "no patterns"
        if args.format == "dot":
            text = to_dot(sol.kb, f"solution{n}")
            suffix = "dot"
        else:
            goals = ",".join(sorted(sol.satisfied_goals)) or "none"
            text = (f"% solution {n}: {label}\n% satisfied goals: {goals}; "
                    f"mitigated {len(sol.mitigated_threats)}/{len(sol.threats)} threats\n"
                    + delta_facts(sol))
            suffix = "facts"
        if out_dir:
            (out_dir / f"solution{n}.{suffix}").write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text if args.format == "dot" else text + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="safesec",
                                description="Safety and security pattern reasoning over .facts models.")
    sub = p.add_subparsers(dest="command", required=True)
    paths_help = f"fact files; {BUILTIN_PREFIX}headlamp names the bundled corpus"

    v = sub.add_parser("validate", help="check a model for structural errors")
    v.add_argument("paths", nargs="+", help=paths_help)
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="derive safety, security or co-design facts")
    a.add_argument("which", choices=("safety", "security", "codesign"))
    a.add_argument("paths", nargs="+", help=paths_help)
    a.add_argument("--format", choices=("facts", "json"), default="facts")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("recommend", help="enumerate pattern recommendations")
    r.add_argument("paths", nargs="+", help=paths_help)
    r.add_argument("--explore-safety", action="append", metavar="NAMES",
                   help="comma-separated safety patterns to explore (repeatable)")
    r.add_argument("--explore-security", action="append", metavar="NAMES",
                   help="comma-separated security patterns to explore (repeatable)")
    r.add_argument("--require-goals", action="store_true", help="keep only solutions meeting every safety goal")
    r.add_argument("--require-mitigation", action="store_true", help="keep only solutions mitigating every threat")
    r.add_argument("--max-solutions", type=int, default=50)
    r.add_argument("--cap", type=int, default=24, help="maximum candidate count without --require-goals")
    r.add_argument("--format", choices=("facts", "json", "dot"), default="facts")
    r.add_argument("--out-dir", help="write one file per solution here instead of stdout")
    r.set_defaults(func=cmd_recommend)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
