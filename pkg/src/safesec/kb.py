"""Typed fact store for architectures, safety/security analysis results and
pattern instances.

A :class:`KnowledgeBase` is an immutable set of fact records. Every record
type below houses exactly one predicate of the fact language; lookup views
(``kb.channels``, ``kb.host_of`` ...) are computed lazily and cached.

Provenance (``user`` / ``derived`` / ``generated``) rides along on each record
but is excluded from equality, so two knowledge bases holding the same facts
compare equal regardless of where the facts came from.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Union

USER = "user"
DERIVED = "derived"
GENERATED = "generated"

IDENT_RE = re.compile(r"^[a-z][a-zA-Z0-9_]*$")
GENERATED_PREFIX = "nu"

HW_KINDS = ("ecu", "can", "interface", "wireless", "switch", "actuator")
BUS_KINDS = frozenset({"can", "wireless"})
NODE_HOST_KINDS = frozenset({"ecu", "interface", "switch"})
PUBLIC_KINDS = frozenset({"interface", "ecu", "wireless"})

FAILURE_TYPES = ("err", "loss")
THREAT_TYPES = ("con", "int", "ava")
THREAT_SEVERITIES = ("neg", "mod", "maj", "sev")
ASILS = ("qm", "a", "b", "c", "d")
SEVERITY_CLASSES = ("s0", "s1", "s2", "s3")
EXPOSURE_CLASSES = ("e1", "e2", "e3", "e4")
CONTROL_CLASSES = ("c1", "c2", "c3")
ASSUMPTION_KINDS = ("are_independent", "are_decoupled", "are_verified", "have_policies")


def is_generated_id(ident: str) -> bool:
    return ident.startswith(GENERATED_PREFIX)


def asil_rank(level: str) -> int:
    return ASILS.index(level)


# --------------------------------------------------------------------------
# Tolerance levels and intents


_TOL_RE = re.compile(r"^(all|most)([1-9][0-9]*)fail$")


@dataclass(frozen=True, order=True)
class ToleranceLevel:
    """``never``, ``most(X)`` or ``all(X)``.

    ``quantifier`` is one of ``"never"``, ``"most"``, ``"all"``; ``count`` is
    0 for ``never`` and X >= 1 otherwise.
    """

    quantifier: str
    count: int = 0

    def __post_init__(self) -> None:
        if self.quantifier == "never":
            if self.count != 0:
                raise ValueError("never carries no failure count")
        elif self.quantifier in ("most", "all"):
            if self.count < 1:
                raise ValueError(f"{self.quantifier} needs a count >= 1, got {self.count}")
        else:
            raise ValueError(f"unknown tolerance quantifier {self.quantifier!r}")

    @classmethod
    def never(cls) -> "ToleranceLevel":
        return cls("never")

    @classmethod
    def all(cls, count: int) -> "ToleranceLevel":
        return cls("all", count)

    @classmethod
    def most(cls, count: int) -> "ToleranceLevel":
        return cls("most", count)

    @classmethod
    def from_token(cls, token: str) -> "ToleranceLevel":
        if token == "never":
            return cls.never()
        m = _TOL_RE.match(token)
        if not m:
            raise ValueError(f"not a tolerance token: {token!r}")
        return cls(m.group(1), int(m.group(2)))

    @property
    def token(self) -> str:
        if self.quantifier == "never":
            return "never"
        return f"{self.quantifier}{self.count}fail"

    def __str__(self) -> str:
        return self.token


NEVER = ToleranceLevel.never()


@dataclass(frozen=True)
class IntentTuple:
    """What a safety pattern guarantees: covered failure types, the ASIL it is
    fit for, and its fail-operational / fail-silent / fail-safe levels."""

    fail_types: frozenset
    asil: str
    fail_op: ToleranceLevel
    fail_silent: ToleranceLevel
    fail_safe: ToleranceLevel

    def __post_init__(self) -> None:
        if not self.fail_types:
            raise ValueError("an intent must cover at least one failure type")
        if self.asil not in ASILS:
            raise ValueError(f"unknown ASIL {self.asil!r}")

    @property
    def slots(self) -> tuple:
        return (self.fail_op, self.fail_silent, self.fail_safe)

    def attrs(self) -> tuple:
        """The ``[ASIL, op, silent, safe]`` attribute list as tokens."""
        return (self.asil,) + tuple(s.token for s in self.slots)

    def __str__(self) -> str:
        return "[" + ",".join(self.attrs()) + "]"


# --------------------------------------------------------------------------
# Fact records


def _prov() -> str:
    return field(default=USER, compare=False, repr=False)


@dataclass(frozen=True)
class Component:
    id: str
    provenance: str = _prov()


@dataclass(frozen=True)
class SubComponent:
    child: str
    parent: str
    provenance: str = _prov()


@dataclass(frozen=True)
class Channel:
    id: str
    source: str
    sink: str
    provenance: str = _prov()


@dataclass(frozen=True)
class InformationFlow:
    id: str
    channels: tuple
    provenance: str = _prov()


@dataclass(frozen=True)
class HardwareUnit:
    id: str
    kind: str
    provenance: str = _prov()

    @property
    def is_bus(self) -> bool:
        return self.kind in BUS_KINDS


@dataclass(frozen=True)
class Public:
    hw: str
    provenance: str = _prov()


@dataclass(frozen=True)
class Deployment:
    element: str
    host: str
    provenance: str = _prov()


@dataclass(frozen=True)
class Fault:
    id: str
    locus: str
    provenance: str = _prov()


@dataclass(frozen=True)
class Failure:
    id: str
    ftype: str
    provenance: str = _prov()


@dataclass(frozen=True)
class FaultTrigger:
    fault: str
    failure: str
    provenance: str = _prov()


@dataclass(frozen=True)
class Hazard:
    id: str
    system: str
    severity: str
    exposure: str
    controllability: str
    provenance: str = _prov()


@dataclass(frozen=True)
class MinimalCutSet:
    id: str
    failures: frozenset
    provenance: str = _prov()


@dataclass(frozen=True)
class McsToHazard:
    mcs_list: tuple
    hazard: str
    provenance: str = _prov()


@dataclass(frozen=True)
class SafetyGoal:
    id: str
    hazard: str
    fail_op: ToleranceLevel
    fail_silent: ToleranceLevel
    fail_safe: ToleranceLevel
    provenance: str = _prov()

    @property
    def slots(self) -> tuple:
        return (self.fail_op, self.fail_silent, self.fail_safe)


@dataclass(frozen=True)
class AsilOverride:
    hazard: str
    level: str
    provenance: str = _prov()


@dataclass(frozen=True)
class Neglect:
    """A fault the safety analysis deliberately neglects (judged too unlikely).

    Cut sets containing a failure that only neglected faults can trigger do
    not constrain hazard control. Security reasoning ignores this marker.
    """

    fault: str
    provenance: str = _prov()


@dataclass(frozen=True)
class ThreatRecord:
    """A potential threat (``path is None``) or a realized threat.

    Paths are read target-first: ``path[0]`` is the target hardware and
    ``path[-1]`` the public entry point.
    """

    id: str
    target: str
    target_hw: str
    ttype: str
    severity: str
    path: Optional[tuple] = None
    provenance: str = _prov()

    @property
    def realized(self) -> bool:
        return self.path is not None

    @property
    def key(self) -> tuple:
        return (self.id, self.path)

    def potential(self) -> "ThreatRecord":
        return ThreatRecord(self.id, self.target, self.target_hw, self.ttype,
                            self.severity, None, self.provenance)


@dataclass(frozen=True)
class PatternInstance:
    """One placed pattern. Components and channels are positional and line
    up with the template's role and channel slots."""

    id: str
    name: str
    kind: str  # "safety" | "security"
    components: tuple
    inputs: tuple = ()
    internals: tuple = ()
    outputs: tuple = ()
    provenance: str = _prov()

    @property
    def generated(self) -> bool:
        return self.provenance == GENERATED

    @property
    def channels(self) -> tuple:
        return self.inputs + self.internals + self.outputs


@dataclass(frozen=True)
class TemplateDecl:
    """Structure row for a user-declared pattern (``safetyPattern(idpat, ...)``)."""

    kind: str
    name: str
    components: tuple
    inputs: tuple = ()
    internals: tuple = ()
    outputs: tuple = ()
    provenance: str = _prov()


@dataclass(frozen=True)
class Assumption:
    pattern: str
    kind: str
    subjects: tuple
    provenance: str = _prov()


@dataclass(frozen=True)
class SafetyIntentDecl:
    name: str
    intent: IntentTuple
    provenance: str = _prov()


@dataclass(frozen=True)
class SecurityIntentDecl:
    name: str
    threat_types: frozenset
    provenance: str = _prov()


@dataclass(frozen=True)
class Explore:
    kind: str  # "safety" | "security"
    name: str
    provenance: str = _prov()


@dataclass(frozen=True)
class ExtensionFact:
    """Fact with an unrecognized predicate, kept verbatim for round-trips."""

    predicate: str
    args: tuple
    provenance: str = _prov()


Fact = Union[
    Component, SubComponent, Channel, InformationFlow, HardwareUnit, Public,
    Deployment, Fault, Failure, FaultTrigger, Hazard, MinimalCutSet, McsToHazard,
    SafetyGoal, AsilOverride, Neglect, ThreatRecord, PatternInstance, TemplateDecl,
    Assumption, SafetyIntentDecl, SecurityIntentDecl, Explore, ExtensionFact,
]

# Record types whose ``id`` must be unique within its category.
_IDENTIFIED = {
    Component: "component",
    Channel: "channel",
    InformationFlow: "flow",
    HardwareUnit: "hardware unit",
    Fault: "fault",
    Failure: "failure",
    Hazard: "hazard",
    MinimalCutSet: "minimal cut set",
    SafetyGoal: "safety goal",
    PatternInstance: "pattern instance",
}


def identity(fact) -> Optional[tuple]:
    """Category key a fact must be unique under, or None for pure relations."""
    cat = _IDENTIFIED.get(type(fact))
    if cat is not None:
        return (cat, fact.id)
    if isinstance(fact, Deployment):
        return ("deployment", fact.element)
    if isinstance(fact, AsilOverride):
        return ("asil", fact.hazard)
    if isinstance(fact, SafetyIntentDecl):
        return ("safety intent", fact.name)
    if isinstance(fact, SecurityIntentDecl):
        return ("security intent", fact.name)
    if isinstance(fact, TemplateDecl):
        return ("template", fact.name)
    return None


class IdCollision(ValueError):
    """Two knowledge bases define the same id differently."""

    def __init__(self, category: str, ident: str, left, right):
        super().__init__(f"{category} {ident!r} defined differently: {left} vs {right}")
        self.category = category
        self.ident = ident


# --------------------------------------------------------------------------
# Knowledge base


@dataclass(frozen=True)
class KnowledgeBase:
    facts: frozenset = frozenset()

    @classmethod
    def of(cls, facts: Iterable) -> "KnowledgeBase":
        return cls(frozenset(facts))

    def __iter__(self) -> Iterator:
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def with_facts(self, facts: Iterable) -> "KnowledgeBase":
        """Add facts, keeping the provenance of any already present."""
        return KnowledgeBase(self.facts | (frozenset(facts) - self.facts))

    def _of(self, cls) -> list:
        return sorted((f for f in self.facts if type(f) is cls), key=repr)

    def _index(self, cls) -> dict:
        out = {}
        for f in self._of(cls):
            out.setdefault(f.id, f)
        return out

    # architecture ------------------------------------------------------
    @cached_property
    def components(self) -> dict:
        return self._index(Component)

    @cached_property
    def subcomponents(self) -> list:
        return self._of(SubComponent)

    @cached_property
    def channels(self) -> dict:
        return self._index(Channel)

    @cached_property
    def flows(self) -> dict:
        return self._index(InformationFlow)

    @cached_property
    def hardware(self) -> dict:
        return self._index(HardwareUnit)

    @cached_property
    def public(self) -> frozenset:
        return frozenset(f.hw for f in self._of(Public))

    @cached_property
    def deployments(self) -> list:
        return self._of(Deployment)

    @cached_property
    def host_of(self) -> dict:
        out = {}
        for d in self.deployments:
            out.setdefault(d.element, d.host)
        return out

    @cached_property
    def deployed_on(self) -> dict:
        out: dict = {}
        for d in self.deployments:
            out.setdefault(d.host, []).append(d.element)
        return out

    def parent_of(self, component: str) -> Optional[str]:
        for s in self.subcomponents:
            if s.child == component:
                return s.parent
        return None

    def incoming(self, component: str) -> list:
        return [c for c in self.channels.values() if c.sink == component]

    def outgoing(self, component: str) -> list:
        return [c for c in self.channels.values() if c.source == component]

    def is_bus(self, hw: str) -> bool:
        unit = self.hardware.get(hw)
        return unit is not None and unit.is_bus

    # safety ------------------------------------------------------------
    @cached_property
    def faults(self) -> dict:
        return self._index(Fault)

    @cached_property
    def failures(self) -> dict:
        return self._index(Failure)

    @cached_property
    def triggers(self) -> list:
        return self._of(FaultTrigger)

    @cached_property
    def hazards(self) -> dict:
        return self._index(Hazard)

    @cached_property
    def cut_sets(self) -> dict:
        return self._index(MinimalCutSet)

    @cached_property
    def mcs_links(self) -> list:
        return self._of(McsToHazard)

    @cached_property
    def goals(self) -> dict:
        return self._index(SafetyGoal)

    @cached_property
    def asil_overrides(self) -> dict:
        return {f.hazard: f.level for f in self._of(AsilOverride)}

    @cached_property
    def neglected(self) -> frozenset:
        return frozenset(f.fault for f in self._of(Neglect))

    def faults_of(self, failure: str) -> list:
        return [t.fault for t in self.triggers if t.failure == failure]

    def failures_of(self, fault: str) -> list:
        return [t.failure for t in self.triggers if t.fault == fault]

    def hazard_cut_sets(self, hazard: str) -> list:
        """Every MCS id linked to ``hazard`` over all ``lmcs2hz`` facts."""
        seen: list = []
        for link in self.mcs_links:
            if link.hazard == hazard:
                for m in link.mcs_list:
                    if m not in seen:
                        seen.append(m)
        return seen

    def hazards_of_failure(self, failure: str) -> list:
        """Hazards reachable from ``failure`` through MCS membership."""
        out: list = []
        for link in self.mcs_links:
            for m in link.mcs_list:
                mcs = self.cut_sets.get(m)
                if mcs is not None and failure in mcs.failures and link.hazard not in out:
                    out.append(link.hazard)
        return sorted(out)

    # security ----------------------------------------------------------
    @cached_property
    def given_threats(self) -> list:
        """User-supplied pThreat/threat facts."""
        return self._of(ThreatRecord)

    # patterns ----------------------------------------------------------
    @cached_property
    def instances(self) -> dict:
        return self._index(PatternInstance)

    @cached_property
    def safety_instances(self) -> list:
        return [p for p in self.instances.values() if p.kind == "safety"]

    @cached_property
    def security_instances(self) -> list:
        return [p for p in self.instances.values() if p.kind == "security"]

    @cached_property
    def assumptions(self) -> list:
        return self._of(Assumption)

    @cached_property
    def safety_intents(self) -> dict:
        return {f.name: f.intent for f in self._of(SafetyIntentDecl)}

    @cached_property
    def security_intents(self) -> dict:
        return {f.name: f.threat_types for f in self._of(SecurityIntentDecl)}

    @cached_property
    def template_decls(self) -> dict:
        return {f.name: f for f in self._of(TemplateDecl)}

    @cached_property
    def explore_safety(self) -> frozenset:
        return frozenset(f.name for f in self._of(Explore) if f.kind == "safety")

    @cached_property
    def explore_security(self) -> frozenset:
        return frozenset(f.name for f in self._of(Explore) if f.kind == "security")

    @cached_property
    def extensions(self) -> list:
        return self._of(ExtensionFact)

    @cached_property
    def element_ids(self) -> frozenset:
        """All ids that name an architecture element or analysis record."""
        ids = set()
        for f in self.facts:
            key = identity(f)
            if key is not None and key[0] in _IDENTIFIED.values():
                ids.add(key[1])
        return frozenset(ids)


# --------------------------------------------------------------------------
# Merge


def merge(base: KnowledgeBase, delta: KnowledgeBase) -> KnowledgeBase:
    """Union of two fact sets.

    Facts already in ``base`` keep their provenance; new facts keep the
    provenance they carry in ``delta``. Raises :class:`IdCollision` when the
    same id is defined differently on the two sides.
    """
    if not delta.facts:
        return base
    defined = {}
    for f in base.facts:
        key = identity(f)
        if key is not None:
            defined.setdefault(key, f)
    for f in delta.facts:
        key = identity(f)
        if key is None or f in base.facts:
            continue
        other = defined.get(key)
        if other is not None and other != f:
            raise IdCollision(key[0], key[1], other, f)
    return base.with_facts(delta.facts)


def retag(kb: KnowledgeBase, provenance: str) -> KnowledgeBase:
    """Copy of ``kb`` with every fact's provenance set to ``provenance``."""
    from dataclasses import replace

    return KnowledgeBase(frozenset(replace(f, provenance=provenance) for f in kb.facts))


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True, order=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        return f"{self.severity}: [{self.code}] {self.message}"


def _subcp_cycles(kb: KnowledgeBase) -> list:
    graph: dict = {}
    for s in kb.subcomponents:
        graph.setdefault(s.child, set()).add(s.parent)
    cycles = []
    seen_cycles = set()
    state: dict = {}

    def visit(node, stack):
        state[node] = 1
        stack.append(node)
        for nxt in sorted(graph.get(node, ())):
            if state.get(nxt) == 1:
                cyc = stack[stack.index(nxt):]
                key = frozenset(cyc)
                if key not in seen_cycles:
                    seen_cycles.add(key)
                    cycles.append(cyc + [nxt])
            elif nxt not in state:
                visit(nxt, stack)
        stack.pop()
        state[node] = 2

    for node in sorted(graph):
        if node not in state:
            visit(node, [])
    return cycles


def validate(kb: KnowledgeBase) -> list:
    """Structural checks. Returns diagnostics sorted errors-first."""
    from .catalog import catalog_for  # deferred: catalog depends on this module

    diags: list = []

    def err(code, msg):
        diags.append(Diagnostic("error", code, msg))

    def warn(code, msg):
        diags.append(Diagnostic("warning", code, msg))

    # duplicate definitions inside one kb
    defined: dict = {}
    for f in sorted(kb.facts, key=repr):
        key = identity(f)
        if key is None:
            continue
        if key in defined and defined[key] != f:
            err("duplicate-id", f"{key[0]} {key[1]!r} is defined more than once")
        defined.setdefault(key, f)

    comps, chans, hw = kb.components, kb.channels, kb.hardware
    for s in kb.subcomponents:
        for ident in (s.child, s.parent):
            if ident not in comps:
                err("dangling", f"subcp({s.child},{s.parent}) names unknown component {ident!r}")
    for cyc in _subcp_cycles(kb):
        err("subcp-cycle", "sub-component cycle: " + " -> ".join(cyc))

    for ch in chans.values():
        for ident in (ch.source, ch.sink):
            if ident not in comps:
                err("dangling", f"channel {ch.id!r} names unknown component {ident!r}")
        if ch.source == ch.sink:
            if ch.provenance == GENERATED:
                warn("self-channel", f"generated channel {ch.id!r} loops on {ch.source!r}")
            else:
                err("self-channel", f"channel {ch.id!r} connects {ch.source!r} to itself")

    for fl in kb.flows.values():
        if not fl.channels:
            err("empty-flow", f"information flow {fl.id!r} has no channels")
            continue
        for c in fl.channels:
            if c not in chans:
                warn("flow-unknown-channel", f"information flow {fl.id!r} names unknown channel {c!r}")
        for a, b in zip(fl.channels, fl.channels[1:]):
            if a in chans and b in chans and chans[a].sink != chans[b].source:
                warn("flow-not-chained",
                     f"information flow {fl.id!r}: {a!r} ends at {chans[a].sink!r} "
                     f"but {b!r} starts at {chans[b].source!r}")

    for h in sorted(kb.public):
        if h not in hw:
            err("dangling", f"public({h}) names unknown hardware unit")
        elif hw[h].kind not in PUBLIC_KINDS:
            warn("public-kind", f"hardware unit {h!r} of kind {hw[h].kind} is marked public")

    for d in kb.deployments:
        if d.host not in hw:
            err("dangling", f"dep({d.element},{d.host}) names unknown hardware unit")
            continue
        kind = hw[d.host].kind
        if d.element in chans:
            if kind not in BUS_KINDS:
                err("bad-deployment", f"channel {d.element!r} deployed on {kind} {d.host!r}")
        elif d.element in comps:
            if kind not in NODE_HOST_KINDS:
                err("bad-deployment", f"component {d.element!r} deployed on {kind} {d.host!r}")
        else:
            err("dangling", f"dep({d.element},{d.host}) names unknown component or channel")

    hosts: dict = {}
    for d in kb.deployments:
        hosts.setdefault(d.element, set()).add(d.host)
    for element, hs in sorted(hosts.items()):
        if len(hs) > 1:
            err("bad-deployment", f"{element!r} deployed on several units: {sorted(hs)}")

    for ft in kb.faults.values():
        if ft.locus not in comps and ft.locus not in chans:
            err("dangling", f"fault {ft.id!r} is located on unknown element {ft.locus!r}")
    for t in kb.triggers:
        if t.fault not in kb.faults:
            err("dangling", f"ft2fl({t.fault},{t.failure}) names unknown fault")
        if t.failure not in kb.failures:
            err("dangling", f"ft2fl({t.fault},{t.failure}) names unknown failure")
    for m in kb.cut_sets.values():
        if not m.failures:
            err("empty-mcs", f"minimal cut set {m.id!r} is empty")
        for f in sorted(m.failures):
            if f not in kb.failures:
                err("dangling", f"minimal cut set {m.id!r} names unknown failure {f!r}")
    for link in kb.mcs_links:
        if link.hazard not in kb.hazards:
            err("dangling", f"lmcs2hz names unknown hazard {link.hazard!r}")
        for m in link.mcs_list:
            if m not in kb.cut_sets:
                err("dangling", f"lmcs2hz for {link.hazard!r} names unknown cut set {m!r}")
    for hz in kb.hazards.values():
        if hz.system not in comps:
            err("dangling", f"hazard {hz.id!r} names unknown system {hz.system!r}")
    for g in kb.goals.values():
        if g.hazard not in kb.hazards:
            err("dangling", f"safety goal {g.id!r} names unknown hazard {g.hazard!r}")
    for h in kb.asil_overrides:
        if h not in kb.hazards:
            err("dangling", f"asil({h},...) names unknown hazard")
    for ft in sorted(kb.neglected):
        if ft not in kb.faults:
            err("dangling", f"neglect({ft}) names unknown fault")

    catalog = catalog_for(kb)
    for inst in kb.instances.values():
        tpl = catalog.get(inst.name)
        if tpl is None:
            err("unknown-pattern", f"pattern instance {inst.id!r} uses unknown pattern {inst.name!r}")
            continue
        if tpl.kind != inst.kind:
            err("pattern-kind", f"{inst.name} is a {tpl.kind} pattern, used as {inst.kind}")
        if tpl.has_structure and (
            len(inst.components) != len(tpl.roles)
            or len(inst.inputs) != len(tpl.inputs)
            or len(inst.internals) != len(tpl.internals)
            or len(inst.outputs) != len(tpl.outputs)
        ):
            err("pattern-shape", f"pattern instance {inst.id!r} does not match the {inst.name} structure")
        known = set(comps) | set(chans) | set(hw)
        for e in inst.components + inst.channels:
            if e not in known:
                err("dangling", f"pattern instance {inst.id!r} names unknown element {e!r}")

    for a in kb.assumptions:
        if a.kind not in ASSUMPTION_KINDS:
            warn("assumption-kind", f"unknown assumption kind {a.kind!r}")

    for x in kb.extensions:
        warn("unknown-predicate", f"unrecognized predicate {x.predicate}/{len(x.args)} kept as extension fact")

    return sorted(set(diags))


def errors(diags: Iterable) -> list:
    return [d for d in diags if d.is_error]
