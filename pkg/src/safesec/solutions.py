"""Enumeration of consistent pattern-recommendation choices.

Every candidate is independently in or out; a choice survives when

* C1: no (pattern, placement) is chosen twice,
* C2: each failure gets at most one safety pattern,
* C3: each (pattern, placement) carries at most one security pattern.

Choices are produced smallest first, then in lexicographic order of
candidate indices, so the output is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from . import kb as K
from .catalog import (Candidate, catalog_for, fresh_id, instance_id, instantiate_safety,
                      instantiate_security)
from .codesign import ConsequenceReport, analyze_consequences
from .reach import compute_reachable
from .safety import (candidate_safety_patterns, check_goals, derive_avoidance, goal_verdicts,
                     stub_patterns)
from .security import candidate_security_patterns, derive_mitigated, derive_threats, intercepts

DEFAULT_CAP = 24
DEFAULT_MAX_SOLUTIONS = 50


class CandidateExplosion(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(
            f"{count} candidates exceed the cap of {cap}; narrow the explore sets, "
            f"raise the cap, or require all goals to prune the search")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Options:
    max_solutions: int = DEFAULT_MAX_SOLUTIONS
    require_all_goals: bool = False
    require_all_mitigated: bool = False
    candidate_cap: int = DEFAULT_CAP


@dataclass(frozen=True)
class Chosen:
    candidate: Candidate
    counter: int
    instance: K.PatternInstance


@dataclass(frozen=True)
class Solution:
    chosen: tuple  # Chosen, in candidate order
    delta: K.KnowledgeBase
    satisfied_goals: frozenset
    mitigated_threats: frozenset  # threat keys
    threats: frozenset  # every realized threat, including consequences
    residual: ConsequenceReport
    assumptions: tuple
    kb: K.KnowledgeBase = field(repr=False, compare=False, default=None)

    @property
    def candidates(self) -> tuple:
        return tuple(c.candidate for c in self.chosen)

    @property
    def unmitigated(self) -> list:
        return sorted((t for t in self.threats if t.key not in self.mitigated_threats),
                      key=lambda t: (t.id, t.path))


# --------------------------------------------------------------------------
# Constraints


def conflicts(a: Candidate, b: Candidate) -> bool:
    if a.key == b.key:  # C1, and C3 for security candidates
        return True
    return a.kind == b.kind == "safety" and a.reason == b.reason  # C2


def admissible(choice: Iterable[Candidate]) -> bool:
    choice = list(choice)
    return not any(conflicts(x, y) for i, x in enumerate(choice) for y in choice[i + 1:])


def admissible_choices(candidates: list) -> Iterator[tuple]:
    """Index tuples of admissible choices, by size then lexicographically."""
    n = len(candidates)
    clash = [[conflicts(candidates[i], candidates[j]) for j in range(n)] for i in range(n)]

    def extend(prefix: list, start: int, size: int):
        if len(prefix) == size:
            yield tuple(prefix)
            return
        for i in range(start, n - (size - len(prefix)) + 1):
            if any(clash[i][j] for j in prefix):
                continue
            prefix.append(i)
            yield from extend(prefix, i + 1, size)
            prefix.pop()

    for size in range(n + 1):
        yield from extend([], 0, size)


# --------------------------------------------------------------------------
# Instantiation


def _instantiate(kb: K.KnowledgeBase, cand: Candidate, ctr: int):
    tpl = catalog_for(kb)[cand.template]
    if cand.kind == "safety":
        return instantiate_safety(tpl, cand.placement[0], ctr, kb)
    return instantiate_security(tpl, cand.placement, ctr, kb)


def _fresh_ids(kb: K.KnowledgeBase, cand: Candidate, ctr: int) -> set:
    tpl = catalog_for(kb)[cand.template]
    slots = [s.name for s in tpl.roles] + [s.name for s in tpl.inputs + tpl.internals + tpl.outputs]
    return {fresh_id(s, ctr) for s in slots} | {instance_id(cand.kind, ctr)}


def build_delta(kb: K.KnowledgeBase, choice: Iterable[Candidate]) -> tuple:
    """Instantiate ``choice`` in order with one shared counter.

    Counters whose fresh ids would clash with ids already in ``kb`` are skipped.
    Returns ``(chosen, delta)``.
    """
    taken = set(kb.element_ids)
    ctr = 1
    chosen, delta = [], K.KnowledgeBase()
    for cand in choice:
        while _fresh_ids(kb, cand, ctr) & taken:
            ctr += 1
        inst, _, part = _instantiate(kb, cand, ctr)
        delta = K.merge(delta, part)
        taken |= _fresh_ids(kb, cand, ctr)
        chosen.append(Chosen(cand, ctr, inst))
        ctr += 1
    return tuple(chosen), delta


def evaluate(kb: K.KnowledgeBase, choice: Iterable[Candidate]) -> Solution:
    """Apply a choice and derive everything from the merged knowledge base."""
    chosen, delta = build_delta(kb, choice)
    merged = K.merge(kb, delta)
    goals = check_goals(merged, derive_avoidance(merged).controls)
    reach = compute_reachable(merged)
    residual = analyze_consequences(merged, reach)
    threats = derive_threats(merged, reach) | residual.realized_new
    mitigated = derive_mitigated(merged, threats)
    assumptions = tuple(sorted((a for a in delta.facts if isinstance(a, K.Assumption)), key=repr))
    return Solution(chosen, delta, goals, mitigated, frozenset(threats), residual, assumptions, merged)


# --------------------------------------------------------------------------
# Enumeration


def gather_candidates(kb: K.KnowledgeBase, explore_saf, explore_sec) -> tuple:
    """(candidates, warnings). Explored stubs are skipped with a warning."""
    warnings = [f"pattern {n!r} has no intent and is skipped; add a safetyIntent fact to explore it"
                for n in stub_patterns(kb, explore_saf)]
    cands = candidate_safety_patterns(kb, explore_saf, skip_stubs=True)
    if explore_sec:
        cands += candidate_security_patterns(kb, derive_threats(kb), explore_sec)
    return cands, warnings


class _Screen:
    """Cheap pre-checks for the opt-in filters, cached per safety sub-choice."""

    def __init__(self, kb: K.KnowledgeBase):
        self.kb = kb
        self.all_goals = frozenset(kb.goals)
        self.base_threats = derive_threats(kb)
        self._safety: dict = {}

    def _safety_view(self, saf: tuple) -> tuple:
        if saf not in self._safety:
            merged = K.merge(self.kb, build_delta(self.kb, saf)[1])
            goals = check_goals(merged, derive_avoidance(merged).controls)
            extra = analyze_consequences(merged).realized_new
            self._safety[saf] = (goals, self.base_threats | extra)
        return self._safety[saf]

    def passes(self, choice: tuple, opts: Options) -> bool:
        saf = tuple(c for c in choice if c.kind == "safety")
        goals, threats = self._safety_view(saf)
        if opts.require_all_goals and goals != self.all_goals:
            return False
        if opts.require_all_mitigated:
            cat = catalog_for(self.kb)
            sec = [c for c in choice if c.kind == "security"]
            for t in threats:
                if not any(intercepts(self.kb, cat[c.template], c.placement, t) for c in sec):
                    return False
        return True


def enumerate_solutions(kb: K.KnowledgeBase, explore_saf=(), explore_sec=(),
                        options: Optional[Options] = None, candidates: Optional[list] = None) -> list:
    opts = options or Options()
    if candidates is None:
        candidates, _ = gather_candidates(kb, explore_saf, explore_sec)
    if len(candidates) > opts.candidate_cap and not opts.require_all_goals:
        raise CandidateExplosion(len(candidates), opts.candidate_cap)
    screen = _Screen(kb)
    out = []
    for idx in admissible_choices(candidates):
        if len(out) >= opts.max_solutions:
            break
        choice = tuple(candidates[i] for i in idx)
        if not screen.passes(choice, opts):
            continue
        sol = evaluate(kb, choice)
        if opts.require_all_goals and sol.satisfied_goals != frozenset(kb.goals):
            continue
        if opts.require_all_mitigated and len(sol.mitigated_threats) != len(sol.threats):
            continue
        out.append(sol)
    return out


# --------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class GoalVerdict:
    goal: str
    hazard: str
    satisfied: bool
    required: tuple  # (asil, op, silent, safe) tokens
    via: Optional[tuple]  # control attrs that justify it


@dataclass(frozen=True)
class SolutionReport:
    instances: tuple  # dicts
    goals: tuple  # GoalVerdict
    mitigated: tuple
    unmitigated: tuple
    new_threats: tuple
    unrealized_new: tuple
    new_faults: tuple
    warnings: tuple
    assumptions: tuple

    def as_dict(self) -> dict:
        return {
            "instances": list(self.instances),
            "goals": [dict(goal=g.goal, hazard=g.hazard, satisfied=g.satisfied,
                           required=list(g.required), via=list(g.via) if g.via else None)
                      for g in self.goals],
            "mitigated": list(self.mitigated),
            "unmitigated": list(self.unmitigated),
            "new_threats": list(self.new_threats),
            "unrealized_new_threats": list(self.unrealized_new),
            "new_faults": list(self.new_faults),
            "warnings": list(self.warnings),
            "assumptions": list(self.assumptions),
        }


def threat_dict(t: K.ThreatRecord) -> dict:
    return {"id": t.id, "target": t.target, "target_hw": t.target_hw, "type": t.ttype,
            "severity": t.severity, "path": list(t.path) if t.path is not None else None}


def report(solution: Solution) -> SolutionReport:
    from .safety import asil_of

    kb = solution.kb
    cat = catalog_for(kb)
    instances = []
    for ch in solution.chosen:
        inst = ch.instance
        tpl = cat[inst.name]
        d = {"id": inst.id, "pattern": inst.name, "kind": inst.kind,
             "placement": list(ch.candidate.placement), "counter": ch.counter,
             "roles": {s.name: e for s, e in zip(tpl.roles, inst.components)}}
        if ch.candidate.kind == "safety":
            d["failure"] = ch.candidate.reason
        instances.append(d)

    verdicts = goal_verdicts(kb, derive_avoidance(kb).controls)
    goals = []
    for gid, ctl in verdicts.items():
        g = kb.goals[gid]
        need = asil_of(kb, g.hazard) if g.hazard in kb.hazards or g.hazard in kb.asil_overrides else "?"
        goals.append(GoalVerdict(gid, g.hazard, ctl is not None,
                                 (need,) + tuple(s.token for s in g.slots),
                                 ctl.attrs.attrs() if ctl is not None else None))

    by_key = {t.key: t for t in solution.threats}
    mitigated = [threat_dict(by_key[k]) for k in sorted(solution.mitigated_threats, key=repr)]
    res = solution.residual
    return SolutionReport(
        instances=tuple(instances),
        goals=tuple(goals),
        mitigated=tuple(mitigated),
        unmitigated=tuple(threat_dict(t) for t in solution.unmitigated),
        new_threats=tuple(threat_dict(t) for t in sorted(res.realized_new, key=lambda t: (t.id, t.target, t.path))),
        unrealized_new=tuple(threat_dict(t) for t in sorted(res.unrealized, key=lambda t: (t.id, t.target))),
        new_faults=tuple({"fault": ft.id, "locus": ft.locus, "failure": fl.id, "type": fl.ftype}
                         for ft, fl, _ in sorted(res.new_faults, key=lambda x: x[0].id)),
        warnings=tuple(str(w) for w in sorted(res.cascading, key=lambda w: (w.instance, w.hazard, w.component))),
        assumptions=tuple(f"{a.pattern}: {a.kind}({', '.join(a.subjects)})" for a in solution.assumptions),
    )
