"""Avoidance, tolerance, hazard control and goal satisfaction."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product
from typing import Iterable, Optional

from . import kb as K
from .catalog import MissingIntent, catalog_for, Candidate
from .kb import IntentTuple, ToleranceLevel, asil_rank

_QUANT_RANK = {"never": 0, "most": 1, "all": 2}


def hazard_asil(severity: str, exposure: str, controllability: str) -> str:
    """ISO 26262 risk graph: S+E+C of 10 is D, 9 C, 8 B, 7 A, anything less QM."""
    if severity not in K.SEVERITY_CLASSES or exposure not in K.EXPOSURE_CLASSES \
            or controllability not in K.CONTROL_CLASSES:
        raise ValueError(f"class out of range: {severity},{exposure},{controllability}")
    s, e, c = int(severity[1]), int(exposure[1]), int(controllability[1])
    if s == 0:
        return "qm"
    return {10: "d", 9: "c", 8: "b", 7: "a"}.get(s + e + c, "qm")


def asil_of(kb: K.KnowledgeBase, hazard: str) -> str:
    if hazard in kb.asil_overrides:
        return kb.asil_overrides[hazard]
    hz = kb.hazards[hazard]
    return hazard_asil(hz.severity, hz.exposure, hz.controllability)


def tolerance_leq(a: ToleranceLevel, b: ToleranceLevel) -> bool:
    """True when ``b`` guarantees at least what ``a`` asks for.

    never is the bottom; most(X) sits below all(X); different X never compare.
    """
    if a == b or a.quantifier == "never":
        return True
    return a.quantifier == "most" and b.quantifier == "all" and a.count == b.count


def min_tolerance(a: ToleranceLevel, b: ToleranceLevel) -> ToleranceLevel:
    if a.quantifier == "never" or b.quantifier == "never":
        return K.NEVER
    q = min(a.quantifier, b.quantifier, key=_QUANT_RANK.__getitem__)
    return ToleranceLevel(q, min(a.count, b.count))


def _meet(x: IntentTuple, y: IntentTuple) -> IntentTuple:
    return IntentTuple(
        x.fail_types | y.fail_types,
        min(x.asil, y.asil, key=asil_rank),
        *(min_tolerance(a, b) for a, b in zip(x.slots, y.slots)),
    )


def min_intent(attrs: Iterable[IntentTuple]) -> IntentTuple:
    attrs = list(attrs)
    if not attrs:
        raise ValueError("min_intent needs at least one intent")
    return reduce(_meet, attrs)


def meets(intent: IntentTuple, asil: str, slots: tuple) -> bool:
    """Does ``intent`` reach ``asil`` and each required tolerance slot?"""
    return asil_rank(intent.asil) >= asil_rank(asil) and all(
        tolerance_leq(req, got) for req, got in zip(slots, intent.slots))


# --------------------------------------------------------------------------
# Derived facts


@dataclass(frozen=True)
class AvoidanceFact:
    failure: str
    by_instance: str
    attrs: IntentTuple


@dataclass(frozen=True)
class ControlFact:
    hazard: str
    attrs: IntentTuple


@dataclass(frozen=True)
class Avoidance:
    avoided: frozenset  # AvoidanceFact
    avoided_mcs: frozenset  # (mcs id, IntentTuple)
    tolerated: frozenset  # (fault id, IntentTuple)
    controls: frozenset  # ControlFact

    @property
    def avoided_failures(self) -> frozenset:
        return frozenset(a.failure for a in self.avoided)

    def controlled(self) -> frozenset:
        return frozenset(c.hazard for c in self.controls)


def _options(items: dict, keys) -> list:
    return [sorted(items.get(k, ()), key=str) for k in keys]


def _selections(opts: list) -> set:
    """min_intent of every way to pick one option per entry."""
    if not opts or any(not o for o in opts):
        return set()
    return {min_intent(sel) for sel in product(*opts)}


def neglected_mcs(kb: K.KnowledgeBase, mcs: str) -> bool:
    """An MCS is dropped when one of its failures is only caused by neglected faults."""
    cs = kb.cut_sets.get(mcs)
    if cs is None:
        return False
    for fl in cs.failures:
        faults = kb.faults_of(fl)
        if faults and all(f in kb.neglected for f in faults):
            return True
    return False


def derive_avoidance(kb: K.KnowledgeBase) -> Avoidance:
    cat = catalog_for(kb)
    by_failure: dict = {}
    avoided = set()
    for inst in kb.safety_instances:
        tpl = cat.get(inst.name)
        if tpl is None or tpl.intent is None:
            continue
        target = tpl.target_of(inst)
        for fault in kb.faults.values():
            if fault.locus != target:
                continue
            for fl in kb.failures_of(fault.id):
                failure = kb.failures.get(fl)
                if failure is not None and failure.ftype in tpl.intent.fail_types:
                    avoided.add(AvoidanceFact(fl, inst.id, tpl.intent))
                    by_failure.setdefault(fl, set()).add(tpl.intent)

    avoided_mcs = set()
    by_mcs: dict = {}
    for cs in kb.cut_sets.values():
        for fl in cs.failures:
            for attrs in by_failure.get(fl, ()):
                avoided_mcs.add((cs.id, attrs))
                by_mcs.setdefault(cs.id, set()).add(attrs)

    tolerated = set()
    for fault in kb.faults:
        fls = kb.failures_of(fault)
        for attrs in _selections(_options(by_failure, fls)):
            tolerated.add((fault, attrs))

    controls = set()
    for hz in kb.hazards:
        mcs_ids = [m for m in kb.hazard_cut_sets(hz) if not neglected_mcs(kb, m)]
        for attrs in _selections(_options(by_mcs, mcs_ids)):
            controls.add(ControlFact(hz, attrs))

    return Avoidance(frozenset(avoided), frozenset(avoided_mcs), frozenset(tolerated),
                     frozenset(controls))


def goal_verdicts(kb: K.KnowledgeBase, controls) -> dict:
    """goal id -> the strongest control fact that satisfies it, or None."""
    out = {}
    for gid, goal in sorted(kb.goals.items()):
        if goal.hazard not in kb.hazards and goal.hazard not in kb.asil_overrides:
            out[gid] = None
            continue
        need = asil_of(kb, goal.hazard)
        ok = [c for c in controls if c.hazard == goal.hazard and meets(c.attrs, need, goal.slots)]
        ok.sort(key=lambda c: (-asil_rank(c.attrs.asil), str(c.attrs)))
        out[gid] = ok[0] if ok else None
    return out


def check_goals(kb: K.KnowledgeBase, controls) -> frozenset:
    return frozenset(g for g, c in goal_verdicts(kb, controls).items() if c is not None)


# --------------------------------------------------------------------------
# Candidates


def stub_patterns(kb: K.KnowledgeBase, explore) -> list:
    """Explored safety patterns that cannot be used because they lack an intent."""
    cat = catalog_for(kb)
    return sorted(n for n in explore if n in cat and cat[n].kind == "safety" and cat[n].intent is None)


def candidate_safety_patterns(kb: K.KnowledgeBase, explore, skip_stubs: bool = False) -> list:
    """One candidate per (failure, pattern, faulty element)."""
    cat = catalog_for(kb)
    templates = []
    for name in sorted(explore):
        if name not in cat:
            raise KeyError(f"unknown pattern {name!r}")
        tpl = cat[name]
        if tpl.kind != "safety":
            raise ValueError(f"{name} is not a safety pattern")
        if tpl.intent is None:
            if skip_stubs:
                continue
            raise MissingIntent(f"pattern {name!r} has no safetyIntent")
        templates.append(tpl)

    out = set()
    for fid, failure in sorted(kb.failures.items()):
        hazards = [h for h in kb.hazards_of_failure(fid) if h in kb.hazards or h in kb.asil_overrides]
        if not hazards:
            continue
        weakest = min((asil_of(kb, h) for h in hazards), key=asil_rank)
        loci = sorted({kb.faults[f].locus for f in kb.faults_of(fid)
                       if f in kb.faults and f not in kb.neglected})
        for tpl in templates:
            if failure.ftype not in tpl.intent.fail_types:
                continue
            if asil_rank(tpl.intent.asil) < asil_rank(weakest):
                continue
            for locus in loci:
                out.add(Candidate("safety", tpl.name, (locus,), fid))
    return sorted(out, key=Candidate.sort_key)


def required_attrs(kb: K.KnowledgeBase, goal: str) -> Optional[tuple]:
    g = kb.goals.get(goal)
    if g is None:
        return None
    return (asil_of(kb, g.hazard),) + g.slots
