"""Pattern templates and their instantiation into architecture deltas."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

from . import kb as K
from .kb import IntentTuple, ToleranceLevel

# Channel endpoint placeholders resolved at instantiation time.
IN = "$in"  # source(s) feeding the target
OUT = "$out"  # original sink(s) of the target's output
HW_SIDE = "$hw"  # firewall: component on the protected unit
BUS_SIDE = "$bus"  # firewall: component across the bus

TARGET, REDUNDANT, CHECKER, BUS, PROTECTED = "target", "redundant", "checker", "bus", "protected"

_CHECKER_NAME = re.compile(r"^(fd|mon|ckr|chk|wd|fw|vot)")


class MissingIntent(LookupError):
    pass


class UnknownTarget(LookupError):
    pass


class BadPlacement(ValueError):
    pass


@dataclass(frozen=True)
class RoleSlot:
    name: str
    category: str


@dataclass(frozen=True)
class ChannelSlot:
    name: str
    source: str
    sink: str


@dataclass(frozen=True)
class PatternTemplate:
    name: str
    kind: str
    roles: tuple = ()
    inputs: tuple = ()
    internals: tuple = ()
    outputs: tuple = ()
    intent: Optional[IntentTuple] = None  # safety patterns
    threat_types: Optional[frozenset] = None  # security patterns
    assumption_rules: tuple = ()  # (kind, role names)
    has_structure: bool = True

    @property
    def has_intent(self) -> bool:
        return self.intent is not None if self.kind == "safety" else self.threat_types is not None

    def roles_of(self, category: str) -> list:
        return [r.name for r in self.roles if r.category == category]

    @property
    def multiplicity(self) -> Counter:
        return Counter(r.category for r in self.roles)

    @property
    def channel_counts(self) -> tuple:
        return (len(self.inputs), len(self.internals), len(self.outputs))

    def role_map(self, inst: K.PatternInstance) -> dict:
        return {slot.name: el for slot, el in zip(self.roles, inst.components)}

    def target_of(self, inst: K.PatternInstance) -> Optional[str]:
        names = self.roles_of(TARGET) or self.roles_of(PROTECTED)
        return self.role_map(inst).get(names[0]) if names else None

    def checkers_of(self, inst: K.PatternInstance) -> list:
        m = self.role_map(inst)
        return [m[r] for r in self.roles_of(CHECKER) if r in m]


def _roles(*pairs) -> tuple:
    return tuple(RoleSlot(n, c) for n, c in pairs)


def _chans(*triples) -> tuple:
    return tuple(ChannelSlot(*t) for t in triples)


def _intent(types, asil, op, silent, safe) -> IntentTuple:
    tol = ToleranceLevel.from_token
    return IntentTuple(frozenset(types), asil, tol(op), tol(silent), tol(safe))


DUAL_SELF_CHECKING_PAIR_FS = PatternTemplate(
    name="dualSelfCheckingPairFS",
    kind="safety",
    roles=_roles(("pr1", TARGET), ("se1", REDUNDANT), ("fd1", CHECKER),
                 ("pr2", REDUNDANT), ("se2", REDUNDANT), ("fd2", CHECKER)),
    inputs=_chans(("inp1", IN, "pr1"), ("inp2", IN, "se1"), ("inp3", IN, "pr2"), ("inp4", IN, "se2")),
    internals=_chans(("int1", "pr1", "fd1"), ("int2", "se1", "fd1"), ("int3", "pr2", "fd2"),
                     ("int4", "se2", "fd2"), ("int5", "fd1", "fd2")),
    outputs=_chans(("out1", "fd1", OUT), ("out2", "fd2", OUT), ("fs", "fd2", OUT)),
    intent=_intent(["err"], "d", "all1fail", "never", "all2fail"),
    assumption_rules=(("are_independent", ("pr1", "se1", "pr2", "se2")),
                      ("are_decoupled", ("pr1", "se1", "pr2", "se2")),
                      ("are_verified", ("fd1", "fd2"))),
)

# fail-silent is most1fail: plausibility checks catch only most failures
MONITOR_ACTUATOR = PatternTemplate(
    name="monitorActuator",
    kind="safety",
    roles=_roles(("pr", TARGET), ("mon", CHECKER)),
    inputs=_chans(("inp1", IN, "pr"), ("inp2", IN, "mon")),
    internals=_chans(("int1", "pr", "mon"), ("shut", "mon", "pr")),
    outputs=_chans(("out", "pr", OUT)),
    intent=_intent(["err"], "b", "never", "most1fail", "never"),
    assumption_rules=(("are_verified", ("mon",)),),
)

HETEROGENEOUS_DUPLEX_FS = PatternTemplate(
    name="heterogeneousDuplexFS",
    kind="safety",
    roles=_roles(("pr", TARGET), ("se", REDUNDANT), ("fd", CHECKER)),
    inputs=_chans(("inp1", IN, "pr"), ("inp2", IN, "se"), ("inp3", IN, "fd")),
    internals=_chans(("int1", "pr", "fd"), ("int2", "se", "fd")),
    outputs=_chans(("out", "fd", OUT), ("fs", "fd", OUT)),
    intent=_intent(["err"], "d", "all1fail", "never", "all2fail"),
    assumption_rules=(("are_independent", ("pr", "se")),
                      ("are_decoupled", ("pr", "se")),
                      ("are_verified", ("fd",))),
)

FIREWALL = PatternTemplate(
    name="firewall",
    kind="security",
    roles=_roles(("bus", BUS), ("pr", PROTECTED), ("fw", CHECKER)),
    inputs=_chans(("inp1", HW_SIDE, "fw"), ("inp2", BUS_SIDE, "fw")),
    outputs=_chans(("out1", "fw", BUS_SIDE), ("out2", "fw", HW_SIDE)),
    threat_types=frozenset({"ava", "int"}),
    assumption_rules=(("are_verified", ("fw",)), ("have_policies", ("fw",))),
)

SECURITY_MONITOR = PatternTemplate(
    name="securityMonitor",
    kind="security",
    roles=_roles(("pr", PROTECTED), ("mon", CHECKER)),
    inputs=_chans(("inp1", IN, "pr"), ("inp2", IN, "mon")),
    internals=_chans(("int1", "pr", "mon"), ("shut", "mon", "pr")),
    outputs=_chans(("out", "pr", OUT)),
    threat_types=frozenset({"int"}),
    assumption_rules=(("are_verified", ("mon",)), ("have_policies", ("mon",))),
)

# Generic shape used when a pattern has an intent but no declared structure:
# the target plus one redundant and one checker component.
GENERIC_ROLES = _roles(("pr", TARGET), ("red", REDUNDANT), ("ckr", CHECKER))
GENERIC_CHANNELS = (
    _chans(("inp", IN, "red")),
    _chans(("int", "red", "ckr")),
    _chans(("out", "ckr", OUT)),
)

STUB_NAMES = ("acceptanceVoting", "homogeneousDuplex", "simplex", "tmr", "watchdog")


def _stub(name: str) -> PatternTemplate:
    return PatternTemplate(name, "safety", GENERIC_ROLES, *GENERIC_CHANNELS, has_structure=False)


def builtin_catalog() -> list:
    """The five fully specified templates followed by the intent-less stubs."""
    return [DUAL_SELF_CHECKING_PAIR_FS, MONITOR_ACTUATOR, HETEROGENEOUS_DUPLEX_FS,
            FIREWALL, SECURITY_MONITOR] + [_stub(n) for n in STUB_NAMES]


_BUILTIN = {t.name: t for t in builtin_catalog()}


def _template_from_decl(decl: K.TemplateDecl, base: Optional[PatternTemplate]) -> PatternTemplate:
    roles = []
    for i, name in enumerate(decl.components):
        if i == 0:
            cat = TARGET if decl.kind == "safety" else PROTECTED
        elif _CHECKER_NAME.match(name):
            cat = CHECKER
        else:
            cat = REDUNDANT
        roles.append(RoleSlot(name, cat))
    consumers = [r.name for r in roles[1:]] or [roles[0].name]
    checkers = [r.name for r in roles if r.category == CHECKER] or [roles[-1].name]
    feeders = [r.name for r in roles if r.category != CHECKER] or [roles[0].name]
    inputs = tuple(ChannelSlot(c, IN, consumers[i % len(consumers)]) for i, c in enumerate(decl.inputs))
    internals = tuple(ChannelSlot(c, feeders[i % len(feeders)], checkers[i % len(checkers)])
                      for i, c in enumerate(decl.internals))
    outputs = tuple(ChannelSlot(c, checkers[0], OUT) for c in decl.outputs)
    kwargs = dict(roles=tuple(roles), inputs=inputs, internals=internals, outputs=outputs,
                  has_structure=True)
    if base is not None:
        return replace(base, **kwargs)
    return PatternTemplate(decl.name, decl.kind, **kwargs)


@lru_cache(maxsize=64)
def catalog_for(kb: K.KnowledgeBase) -> dict:
    """Built-in templates extended and overridden by the kb's declarations."""
    cat = dict(_BUILTIN)
    for name, decl in kb.template_decls.items():
        if name not in cat or not cat[name].has_structure:
            cat[name] = _template_from_decl(decl, cat.get(name))
    for name, intent in kb.safety_intents.items():
        base = cat.get(name) or _stub(name)
        cat[name] = replace(base, intent=intent)
    for name, types in kb.security_intents.items():
        base = cat.get(name) or PatternTemplate(name, "security", has_structure=False)
        cat[name] = replace(base, threat_types=types)
    return cat


def lookup(name: str, kb: Optional[K.KnowledgeBase] = None) -> PatternTemplate:
    cat = catalog_for(kb) if kb is not None else _BUILTIN
    try:
        return cat[name]
    except KeyError:
        raise KeyError(f"unknown pattern {name!r}") from None


# --------------------------------------------------------------------------
# Candidates


@dataclass(frozen=True)
class Candidate:
    """A possible placement of one pattern.

    Safety candidates address one failure (``reason`` is its id); security
    candidates address a set of threats (``reason`` holds their keys).
    ``placement`` is ``(target,)`` or, for firewalls, ``(unit, bus)``.
    """

    kind: str
    template: str
    placement: tuple
    reason: object = field(default=None)

    @property
    def key(self) -> tuple:
        return (self.template, self.placement)

    def sort_key(self) -> tuple:
        r = self.reason
        r = sorted(map(repr, r)) if isinstance(r, frozenset) else [str(r)]
        return (0 if self.kind == "safety" else 1, self.template, self.placement, r)

    def label(self) -> str:
        where = ",".join(self.placement)
        if self.kind == "safety":
            return f"{self.template}@{where} for {self.reason}"
        return f"{self.template}@({where})"


# --------------------------------------------------------------------------
# Instantiation


def fresh_id(slot: str, ctr: int) -> str:
    """``nu`` + capitalised slot name + counter; ``_`` separates trailing digits."""
    sep = "_" if slot[-1].isdigit() else ""
    return f"nu{slot[0].upper()}{slot[1:]}{sep}{ctr}"


def instance_id(kind: str, ctr: int) -> str:
    return f"nuSafPat{ctr}" if kind == "safety" else f"nuSecPat{ctr}"


def _cycle(items: list, i: int, fallback: str) -> str:
    return items[i % len(items)] if items else fallback


def _build(template: PatternTemplate, inst_id: str, elements: dict, ctr: int,
           endpoints: dict, host: Optional[str], parent: Optional[str], kb: K.KnowledgeBase):
    """Shared tail of both instantiation functions."""
    g = K.GENERATED
    facts = []
    fresh_components = []
    for slot in template.roles:
        if slot.name not in elements:
            ident = fresh_id(slot.name, ctr)
            elements[slot.name] = ident
            fresh_components.append(ident)
            facts.append(K.Component(ident, provenance=g))
            if parent is not None:
                facts.append(K.SubComponent(ident, parent, provenance=g))
            if host is not None and ident not in kb.host_of:
                facts.append(K.Deployment(ident, host, provenance=g))

    def resolve(end: str, i: int, as_source: bool) -> str:
        if end in endpoints:
            return _cycle(endpoints[end], i, endpoints["$self"][0])
        el = elements[end]
        ch = kb.channels.get(el)
        if ch is not None:
            return ch.source if as_source else ch.sink
        return el

    groups = []
    for slots in (template.inputs, template.internals, template.outputs):
        ids = []
        for i, slot in enumerate(slots):
            ident = fresh_id(slot.name, ctr)
            ids.append(ident)
            facts.append(K.Channel(ident, resolve(slot.source, i, True),
                                   resolve(slot.sink, i, False), provenance=g))
        groups.append(tuple(ids))

    inst = K.PatternInstance(inst_id, template.name, template.kind,
                             tuple(elements[s.name] for s in template.roles),
                             *groups, provenance=g)
    assumptions = [K.Assumption(template.name, kind, tuple(elements[r] for r in roles), provenance=g)
                   for kind, roles in template.assumption_rules]
    facts.append(inst)
    facts.extend(assumptions)
    return inst, assumptions, K.KnowledgeBase.of(facts)


def _require_intent(template: PatternTemplate) -> None:
    if not template.has_intent:
        raise MissingIntent(f"pattern {template.name!r} has no intent; supply a "
                            f"{template.kind}Intent fact to use it")


def instantiate_safety(template: PatternTemplate, target: str, ctr: int, kb: K.KnowledgeBase,
                       inst_id: Optional[str] = None):
    """Place a safety pattern on a faulty component or channel.

    Returns ``(instance, assumptions, delta)``. Fresh components are
    co-deployed on the target's unit unless the kb already deploys them.
    Input channels tap the target's existing input sources and output
    channels feed the sinks of the target's original outputs; the original
    channels stay in place.
    """
    if template.kind != "safety":
        raise BadPlacement(f"{template.name} is not a safety pattern")
    _require_intent(template)
    if target not in kb.components and target not in kb.channels:
        raise UnknownTarget(f"no component or channel named {target!r}")

    ch = kb.channels.get(target)
    if ch is not None:
        sources, sinks, anchor = [ch.source], [ch.sink], ch.source
        host, parent = None, kb.parent_of(ch.source)
    else:
        sources = sorted({c.source for c in kb.incoming(target)})
        sinks = sorted({c.sink for c in kb.outgoing(target)})
        anchor = target
        host, parent = kb.host_of.get(target), kb.parent_of(target)
        if host is not None and kb.is_bus(host):
            host = None

    target_role = template.roles_of(TARGET)[0]
    endpoints = {IN: sources, OUT: sinks, "$self": [anchor]}
    return _build(template, inst_id or instance_id("safety", ctr), {target_role: target}, ctr,
                  endpoints, host, parent, kb)


def instantiate_security(template: PatternTemplate, placement, ctr: int, kb: K.KnowledgeBase,
                         inst_id: Optional[str] = None):
    """Place a security pattern.

    Firewalls take ``(unit, bus)`` and sit on that attachment; security
    monitors take the protected component (or a 1-tuple holding it).
    """
    if template.kind != "security":
        raise BadPlacement(f"{template.name} is not a security pattern")
    _require_intent(template)
    if isinstance(placement, str):
        placement = (placement,)
    placement = tuple(placement)
    ident = inst_id or instance_id("security", ctr)

    if template.roles_of(BUS):
        if len(placement) != 2:
            raise BadPlacement(f"{template.name} needs a (unit, bus) placement, got {placement}")
        unit, bus = placement
        if unit not in kb.hardware or kb.is_bus(unit):
            raise BadPlacement(f"{unit!r} is not a hardware node")
        if not kb.is_bus(bus):
            raise BadPlacement(f"{bus!r} is not a bus (can or wireless)")
        on_unit = {e for e in kb.deployed_on.get(unit, ()) if e in kb.components}
        on_bus = [kb.channels[c] for c in kb.deployed_on.get(bus, ()) if c in kb.channels]
        hw_side, bus_side = set(), set()
        for c in on_bus:
            if c.source in on_unit:
                hw_side.add(c.source)
                bus_side.add(c.sink)
            if c.sink in on_unit:
                hw_side.add(c.sink)
                bus_side.add(c.source)
        if not hw_side:
            raise BadPlacement(f"no component on {unit!r} uses bus {bus!r}")
        bus_side -= on_unit
        endpoints = {HW_SIDE: sorted(hw_side), BUS_SIDE: sorted(bus_side) or sorted(hw_side),
                     "$self": sorted(hw_side)}
        elements = {template.roles_of(BUS)[0]: bus, template.roles_of(PROTECTED)[0]: unit}
        return _build(template, ident, elements, ctr, endpoints, unit, None, kb)

    protected = template.roles_of(PROTECTED)
    if len(placement) != 1 or not protected:
        raise BadPlacement(f"no placement rule for {template.name} at {placement}")
    (target,) = placement
    if target not in kb.components:
        raise BadPlacement(f"{template.name} must protect a component, got {target!r}")
    host = kb.host_of.get(target)
    endpoints = {IN: sorted({c.source for c in kb.incoming(target)}),
                 OUT: sorted({c.sink for c in kb.outgoing(target)}), "$self": [target]}
    return _build(template, ident, {protected[0]: target}, ctr, endpoints, host,
                  kb.parent_of(target), kb)
