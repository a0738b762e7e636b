"""Potential threats, their realization by intruder paths, and mitigation."""

from __future__ import annotations

from typing import Iterable, Optional

from . import kb as K
from .catalog import BUS, PROTECTED, Candidate, MissingIntent, PatternTemplate, catalog_for
from .reach import compute_reachable, index_reach

TYPE_MAP = {"err": "int", "loss": "ava"}
SEVERITY_MAP = {"s3": "sev", "s2": "maj", "s1": "mod", "s0": "neg"}


def _severity(kb: K.KnowledgeBase, hazards: Iterable[str]) -> Optional[str]:
    classes = [kb.hazards[h].severity for h in hazards if h in kb.hazards]
    return SEVERITY_MAP[max(classes)] if classes else None


def failure_threat_attrs(kb: K.KnowledgeBase, failure: str) -> Optional[tuple]:
    """(threat type, severity) for a hazard-linked failure, else None."""
    fl = kb.failures.get(failure)
    if fl is None:
        return None
    sev = _severity(kb, kb.hazards_of_failure(failure))
    if sev is None:
        return None
    return TYPE_MAP[fl.ftype], sev


def derive_pthreats(kb: K.KnowledgeBase) -> frozenset:
    """One potential threat per hazard-linked failure and faulty element.

    The worst severity among the hazards reached decides the threat
    severity. Neglected faults still count here.
    """
    out = set()
    for fid in kb.failures:
        attrs = failure_threat_attrs(kb, fid)
        if attrs is None:
            continue
        for fault in kb.faults_of(fid):
            if fault not in kb.faults:
                continue
            locus = kb.faults[fault].locus
            host = kb.host_of.get(locus)
            if host is not None:
                out.add(K.ThreatRecord(fid, locus, host, *attrs, provenance=K.DERIVED))
    return frozenset(out)


def all_pthreats(kb: K.KnowledgeBase) -> frozenset:
    given = {t for t in kb.given_threats if not t.realized}
    return derive_pthreats(kb) | given


def realize(pthreats: Iterable, reach) -> frozenset:
    """Cartesian realization: one threat per potential threat and path to its host."""
    idx = index_reach(reach)
    out = set()
    for pt in pthreats:
        for path in idx.get((pt.target, pt.target_hw), ()):
            out.add(K.ThreatRecord(pt.id, pt.target, pt.target_hw, pt.ttype, pt.severity,
                                   path, provenance=K.DERIVED))
    return frozenset(out)


def derive_threats(kb: K.KnowledgeBase, reach=None) -> frozenset:
    if reach is None:
        reach = compute_reachable(kb)
    given = {t for t in kb.given_threats if t.realized}
    return realize(all_pthreats(kb), reach) | given


def sort_threats(threats: Iterable) -> list:
    return sorted(threats, key=lambda t: (t.id, t.target, t.target_hw, t.path or ()))


# --------------------------------------------------------------------------
# Interception


def adjacent(path: tuple, a: str, b: str) -> bool:
    return any({x, y} == {a, b} for x, y in zip(path, path[1:]))


def intercepts(kb: K.KnowledgeBase, template: PatternTemplate, placement: tuple, threat) -> bool:
    """Would ``template`` placed at ``placement`` stop ``threat``?"""
    if template.threat_types is None or threat.ttype not in template.threat_types:
        return False
    if template.roles_of(BUS):
        unit, bus = placement
        return threat.path is not None and adjacent(threat.path, unit, bus)
    if template.roles_of(PROTECTED):
        (protected,) = placement
        return kb.host_of.get(protected) == threat.target_hw
    return False


def instance_placement(template: PatternTemplate, inst: K.PatternInstance) -> tuple:
    roles = template.role_map(inst)
    if template.roles_of(BUS):
        return (roles[template.roles_of(PROTECTED)[0]], roles[template.roles_of(BUS)[0]])
    return (roles[template.roles_of(PROTECTED)[0]],)


def mitigators(kb: K.KnowledgeBase, threat) -> list:
    cat = catalog_for(kb)
    out = []
    for inst in kb.security_instances:
        tpl = cat.get(inst.name)
        if tpl is not None and intercepts(kb, tpl, instance_placement(tpl, inst), threat):
            out.append(inst.id)
    return sorted(out)


def derive_mitigated(kb: K.KnowledgeBase, threats: Iterable) -> frozenset:
    """Keys of the threats stopped by some placed security pattern."""
    return frozenset(t.key for t in threats if mitigators(kb, t))


# --------------------------------------------------------------------------
# Candidates


def _touches(kb: K.KnowledgeBase, unit: str, bus: str) -> bool:
    on_unit = kb.deployed_on.get(unit, ())
    for c in kb.deployed_on.get(bus, ()):
        ch = kb.channels.get(c)
        if ch is not None and (ch.source in on_unit or ch.sink in on_unit):
            return True
    return False


def candidate_security_patterns(kb: K.KnowledgeBase, threats: Iterable, explore) -> list:
    """Candidates merged per (pattern, placement); ``reason`` holds the threat keys covered.

    Firewalls go on every unit/bus attachment that some threat path crosses.
    Security monitors protect the targeted component when it is one.
    """
    cat = catalog_for(kb)
    threats = [t for t in threats if t.realized]
    found: dict = {}
    for name in sorted(explore):
        if name not in cat:
            raise KeyError(f"unknown pattern {name!r}")
        tpl = cat[name]
        if tpl.kind != "security":
            raise ValueError(f"{name} is not a security pattern")
        if tpl.threat_types is None:
            raise MissingIntent(f"pattern {name!r} has no securityIntent")
        for t in threats:
            if t.ttype not in tpl.threat_types:
                continue
            if tpl.roles_of(BUS):
                for x, y in zip(t.path, t.path[1:]):
                    unit, bus = (y, x) if kb.is_bus(x) else (x, y)
                    if kb.is_bus(bus) and not kb.is_bus(unit) and _touches(kb, unit, bus):
                        found.setdefault((name, (unit, bus)), set()).add(t.key)
            elif tpl.roles_of(PROTECTED) and t.target in kb.components:
                found.setdefault((name, (t.target,)), set()).add(t.key)

    out = []
    for (name, placement) in found:
        tpl = cat[name]
        keys = frozenset(t.key for t in threats if intercepts(kb, tpl, placement, t))
        out.append(Candidate("security", name, placement, keys))
    return sorted(out, key=Candidate.sort_key)
