"""Cross-effects between placed safety and security patterns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import kb as K
from .catalog import BUS, PROTECTED, catalog_for
from .reach import compute_reachable
from .security import SEVERITY_MAP, TYPE_MAP, instance_placement, realize


@dataclass(frozen=True)
class CascadeWarning:
    """A placed security pattern sits on a flow feeding a hazard-linked component."""

    instance: str
    hazard: str
    component: str
    flows: tuple

    def __str__(self) -> str:
        return (f"{self.instance} may cascade into {self.hazard} via {self.component} "
                f"(flows {', '.join(self.flows)}); review manually")


@dataclass(frozen=True)
class ConsequenceReport:
    new_pthreats: frozenset = frozenset()
    realized_new: frozenset = frozenset()
    new_faults: frozenset = frozenset()  # (Fault, Failure, FaultTrigger)
    cascading: frozenset = frozenset()  # CascadeWarning
    unrealized: frozenset = frozenset()  # new potential threats no intruder reaches

    def is_empty(self) -> bool:
        return not (self.new_pthreats or self.new_faults or self.cascading)


def _hazard_link(kb: K.KnowledgeBase, element: str) -> list:
    """(failure, hazards) for every fault on ``element`` that leads somewhere."""
    out = []
    for fault in sorted(kb.faults.values(), key=lambda f: f.id):
        if fault.locus != element:
            continue
        for fl in kb.failures_of(fault.id):
            hz = kb.hazards_of_failure(fl)
            if hz and fl in kb.failures:
                out.append((fl, hz))
    return out


def safety_to_security(kb: K.KnowledgeBase) -> frozenset:
    """Potential threats on the checkers of safety patterns guarding a faulty target.

    The threat id is the instance id; its type and severity come from the
    guarded failure and the worst linked hazard.
    """
    cat = catalog_for(kb)
    out = set()
    for inst in kb.safety_instances:
        tpl = cat.get(inst.name)
        if tpl is None:
            continue
        target = tpl.target_of(inst)
        links = _hazard_link(kb, target)
        if not links:
            continue
        attrs = set()
        for fl, hazards in links:
            sev = max(kb.hazards[h].severity for h in hazards if h in kb.hazards) \
                if any(h in kb.hazards for h in hazards) else None
            if sev is not None:
                attrs.add((TYPE_MAP[kb.failures[fl].ftype], SEVERITY_MAP[sev]))
        default_host = kb.host_of.get(target)
        if target in kb.channels:
            default_host = kb.host_of.get(kb.channels[target].source)
        for checker in tpl.checkers_of(inst):
            host = kb.host_of.get(checker, default_host)
            if host is None:
                continue
            for ttype, sev in sorted(attrs):
                out.add(K.ThreatRecord(inst.id, checker, host, ttype, sev, provenance=K.DERIVED))
    return frozenset(out)


def failure_id_for(instance: str) -> str:
    return f"fl_{instance}"


def security_to_safety(kb: K.KnowledgeBase) -> frozenset:
    """A fault on each security pattern's checker that may raise an erroneous failure."""
    cat = catalog_for(kb)
    out = set()
    for inst in kb.security_instances:
        tpl = cat.get(inst.name)
        if tpl is None:
            continue
        for checker in tpl.checkers_of(inst)[:1]:
            fl = failure_id_for(inst.id)
            out.add((K.Fault(inst.id, checker, provenance=K.DERIVED),
                     K.Failure(fl, "err", provenance=K.DERIVED),
                     K.FaultTrigger(inst.id, fl, provenance=K.DERIVED)))
    return frozenset(out)


def guarded_channels(kb: K.KnowledgeBase, inst: K.PatternInstance) -> list:
    tpl = catalog_for(kb).get(inst.name)
    if tpl is None:
        return []
    placement = instance_placement(tpl, inst)
    if tpl.roles_of(BUS):
        unit, bus = placement
        on_unit = set(kb.deployed_on.get(unit, ()))
        return sorted(c for c in kb.deployed_on.get(bus, ())
                      if c in kb.channels and ({kb.channels[c].source, kb.channels[c].sink} & on_unit))
    if tpl.roles_of(PROTECTED):
        (protected,) = placement
        mine = set(inst.channels)
        return sorted(c.id for c in kb.incoming(protected) if c.id not in mine)
    return []


def cascading_failures(kb: K.KnowledgeBase, new_faults=None) -> frozenset:
    """Warnings for flows that pass a security pattern before reaching a faulty component.

    Every component fed from the guarded channel onwards along a declared
    flow is checked, not only the last one.
    """
    if new_faults is None:
        new_faults = security_to_safety(kb)
    causes = {ft.id for ft, _, _ in new_faults}
    found: dict = {}
    for inst in kb.security_instances:
        if inst.id not in causes:
            continue
        guarded = set(guarded_channels(kb, inst))
        if not guarded:
            continue
        for flow in sorted(kb.flows.values(), key=lambda f: f.id):
            hits = [i for i, c in enumerate(flow.channels) if c in guarded]
            if not hits:
                continue
            for c in flow.channels[hits[0]:]:
                ch = kb.channels.get(c)
                if ch is None or ch.sink not in kb.components:
                    continue
                for _, hazards in _hazard_link(kb, ch.sink):
                    for hz in hazards:
                        found.setdefault((inst.id, hz, ch.sink), set()).add(flow.id)
    return frozenset(CascadeWarning(i, h, c, tuple(sorted(fl))) for (i, h, c), fl in found.items())


def analyze_consequences(kb: K.KnowledgeBase, reach=None) -> ConsequenceReport:
    if reach is None:
        reach = compute_reachable(kb)
    pthreats = safety_to_security(kb)
    realized = realize(pthreats, reach)
    hit_pairs = {(t.id, t.target) for t in realized}
    unrealized = frozenset(p for p in pthreats if (p.id, p.target) not in hit_pairs)
    faults = security_to_safety(kb)
    return ConsequenceReport(pthreats, realized, faults, cascading_failures(kb, faults), unrealized)


def consequence_kb(report: ConsequenceReport) -> K.KnowledgeBase:
    """The new safety facts of a report as a knowledge base, ready to merge."""
    facts = [f for triple in report.new_faults for f in triple]
    facts += list(report.new_pthreats)
    return K.KnowledgeBase.of(facts)


def closure(kb: K.KnowledgeBase, max_rounds: Optional[int] = None) -> tuple:
    """Feed consequences back until nothing new appears. Returns (kb, rounds)."""
    limit = max_rounds if max_rounds is not None else len(kb.instances) + 1
    rounds = 0
    while rounds < limit + 1:
        rounds += 1
        extra = consequence_kb(analyze_consequences(kb))
        new = extra.facts - kb.facts
        if not new:
            return kb, rounds
        kb = kb.with_facts(new)
    return kb, rounds
