"""Reader and writer for ``.facts`` files.

Grammar (whitespace-insensitive, ``%`` starts a comment)::

    file  := (fact '.')*
    fact  := ident | ident '(' term (',' term)* ')'
    term  := ident | integer | '_' | '[' [term (',' term)*] ']'

Recognized predicates map onto :mod:`safesec.kb` records; anything else is
kept as an :class:`~safesec.kb.ExtensionFact`. ``_`` is only meaningful in
extension facts, except for the internal-channel slot of ``securityPattern``
where it stands for "no internal channels".
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable

from . import kb as K

TEMPLATE_ID = "idpat"


class Anon:
    """The anonymous term ``_``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "_"


ANON = Anon()


class FactSyntaxError(SyntaxError):
    def __init__(self, msg: str, line: int, column: int, source: str = "<facts>"):
        super().__init__(f"{source}:{line}:{column}: {msg}")
        self.lineno = line
        self.offset = column
        self.filename = source
        self.reason = msg


class ArityError(ValueError):
    """A recognized predicate used with the wrong shape."""

    def __init__(self, predicate: str, expected: str, line: int = 0, source: str = "<facts>"):
        where = f"{source}:{line}: " if line else ""
        super().__init__(f"{where}{predicate}: expected {expected}")
        self.predicate = predicate
        self.expected = expected
        self.line = line


# --------------------------------------------------------------------------
# Tokenizer / term parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<ident>[a-z][a-zA-Z0-9_]*)
  | (?P<var>[A-Z_][a-zA-Z0-9_]*)
  | (?P<int>-?[0-9]+)
  | (?P<punct>[()\[\],.])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, source: str):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise FactSyntaxError(f"unexpected character {text[pos]!r}", line, col, source)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            yield kind, value, line, col
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = m.start() + value.rindex("\n") + 1
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str, source: str):
        self.source = source
        self.tokens = list(_tokenize(text, source))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise FactSyntaxError(msg, tok[2], tok[3], self.source)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "eof":
            self.fail(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def facts(self):
        out = []
        while self.peek()[0] != "eof":
            tok = self.take()
            if tok[0] != "ident":
                self.fail(f"expected a predicate name, found {tok[1]!r}", tok)
            args: tuple = ()
            if self.peek()[1] == "(":
                self.take()
                args = self.terms(")")
            self.expect(".")
            out.append((tok[1], args, tok[2]))
        return out

    def terms(self, close):
        items = []
        if self.peek()[1] == close and close == "]":
            self.take()
            return tuple(items)
        while True:
            items.append(self.term())
            tok = self.take()
            if tok[1] == close:
                return tuple(items)
            if tok[1] != ",":
                self.fail(f"expected ',' or {close!r}, found {tok[1] or 'end of input'!r}", tok)

    def term(self):
        tok = self.take()
        kind, value = tok[0], tok[1]
        if kind == "ident":
            return value
        if kind == "int":
            return int(value)
        if kind == "var":
            if value == "_":
                return ANON
            self.fail(f"variables are not allowed in facts: {value!r}", tok)
        if value == "[":
            return self.terms("]")
        self.fail(f"expected a term, found {value or 'end of input'!r}", tok)


def parse_terms(text: str, source: str = "<facts>") -> list:
    """Raw ``(predicate, args, line)`` triples without interpretation."""
    return _Parser(text, source).facts()


# --------------------------------------------------------------------------
# Interpretation


class _Shape(Exception):
    pass


def _ident(t) -> str:
    if isinstance(t, str):
        return t
    raise _Shape


def _ident_list(t) -> tuple:
    if isinstance(t, tuple):
        return tuple(_ident(x) for x in t)
    raise _Shape


def _choice(t, options) -> str:
    if isinstance(t, str) and t in options:
        return t
    raise _Shape


def _tol(t) -> K.ToleranceLevel:
    try:
        return K.ToleranceLevel.from_token(_ident(t))
    except ValueError:
        raise _Shape from None


def _n(args, n):
    if len(args) != n:
        raise _Shape
    return args


def _unpack(t, n) -> tuple:
    if not isinstance(t, tuple) or len(t) != n:
        raise _Shape
    return t


def _channel_slot(t) -> tuple:
    if t is ANON:
        return ()
    return _ident_list(t)


def _hw(kind):
    def conv(args):
        (ident,) = _n(args, 1)
        return K.HardwareUnit(_ident(ident), kind)
    return conv


def _conv_hz(args):
    ident, attrs = _n(args, 2)
    system, sev, exp, ctl = _unpack(attrs, 4)
    return K.Hazard(_ident(ident), _ident(system), _choice(sev, K.SEVERITY_CLASSES),
                    _choice(exp, K.EXPOSURE_CLASSES), _choice(ctl, K.CONTROL_CLASSES))


def _conv_sg(args):
    ident, attrs = _n(args, 2)
    hz, op, silent, safe = _unpack(attrs, 4)
    return K.SafetyGoal(_ident(ident), _ident(hz), _tol(op), _tol(silent), _tol(safe))


def _conv_threat_attrs(attrs):
    target, hw, ttype, sev = _unpack(attrs, 4)
    return _ident(target), _ident(hw), _choice(ttype, K.THREAT_TYPES), _choice(sev, K.THREAT_SEVERITIES)


def _conv_pthreat(args):
    ident, attrs = _n(args, 2)
    return K.ThreatRecord(_ident(ident), *_conv_threat_attrs(attrs))


def _conv_threat(args):
    head, attrs = _n(args, 2)
    ident, path = _unpack(head, 2)
    path = _ident_list(path)
    if not path:
        raise _Shape
    return K.ThreatRecord(_ident(ident), *_conv_threat_attrs(attrs), path=path)


def _pattern_body(body, kind):
    if not isinstance(body, tuple):
        raise _Shape
    if kind == "security" and len(body) == 4:
        name, comps, inp, out = body
        internal = ()
    else:
        name, comps, inp, internal, out = _unpack(body, 5)
    return (_ident(name), _ident_list(comps), _channel_slot(inp),
            _channel_slot(internal), _channel_slot(out))


def _pattern(kind):
    def conv(args):
        ident, body = _n(args, 2)
        ident = _ident(ident)
        name, comps, inp, internal, out = _pattern_body(body, kind)
        if ident == TEMPLATE_ID:
            return K.TemplateDecl(kind, name, comps, inp, internal, out)
        return K.PatternInstance(ident, name, kind, comps, inp, internal, out)
    return conv


def _conv_safety_intent(args):
    name, attrs = _n(args, 2)
    types, asil, op, silent, safe = _unpack(attrs, 5)
    types = frozenset(_choice(t, K.FAILURE_TYPES) for t in _ident_list(types))
    if not types:
        raise _Shape
    return K.SafetyIntentDecl(_ident(name), K.IntentTuple(
        types, _choice(asil, K.ASILS), _tol(op), _tol(silent), _tol(safe)))


def _conv_security_intent(args):
    name, attrs = _n(args, 2)
    (types,) = _unpack(attrs, 1)
    types = frozenset(_choice(t, K.THREAT_TYPES) for t in _ident_list(types))
    if not types:
        raise _Shape
    return K.SecurityIntentDecl(_ident(name), types)


def _conv_ft(args):
    ident, locus = _n(args, 2)
    (locus,) = _unpack(locus, 1)
    return K.Fault(_ident(ident), _ident(locus))


def _conv_fl(args):
    ident, ftype = _n(args, 2)
    (ftype,) = _unpack(ftype, 1)
    return K.Failure(_ident(ident), _choice(ftype, K.FAILURE_TYPES))


def _conv_mcs(args):
    ident, failures = _n(args, 2)
    return K.MinimalCutSet(_ident(ident), frozenset(_ident_list(failures)))


def _conv_if(args):
    ident, chans = _n(args, 2)
    return K.InformationFlow(_ident(ident), _ident_list(chans))


def _simple(cls, n):
    def conv(args):
        return cls(*(_ident(a) for a in _n(args, n)))
    return conv


def _conv_assumption(args):
    pat, kind, subjects = _n(args, 3)
    return K.Assumption(_ident(pat), _ident(kind), _ident_list(subjects))


# predicate -> (shape shown in errors, converter)
SHAPES = {
    "cp": ("cp(ID)", _simple(K.Component, 1)),
    "subcp": ("subcp(ID,PARENT)", _simple(K.SubComponent, 2)),
    "ch": ("ch(ID,SOURCE,SINK)", _simple(K.Channel, 3)),
    "if": ("if(ID,[CH,...])", _conv_if),
    "dep": ("dep(ELEMENT,HW)", _simple(K.Deployment, 2)),
    "public": ("public(HW)", _simple(K.Public, 1)),
    "hz": ("hz(ID,[SYSTEM,s0..s3,e1..e4,c1..c3])", _conv_hz),
    "ft": ("ft(ID,[LOCUS])", _conv_ft),
    "fl": ("fl(ID,[err|loss])", _conv_fl),
    "ft2fl": ("ft2fl(FAULT,FAILURE)", _simple(K.FaultTrigger, 2)),
    "mcs": ("mcs(ID,[FAILURE,...])", _conv_mcs),
    "lmcs2hz": ("lmcs2hz([MCS,...],HAZARD)",
                lambda a: K.McsToHazard(_ident_list(_n(a, 2)[0]), _ident(a[1]))),
    "sg": ("sg(ID,[HAZARD,OP,SILENT,SAFE])", _conv_sg),
    "asil": ("asil(HAZARD,qm|a|b|c|d)",
             lambda a: K.AsilOverride(_ident(_n(a, 2)[0]), _choice(a[1], K.ASILS))),
    "neglect": ("neglect(FAULT)", _simple(K.Neglect, 1)),
    "pThreat": ("pThreat(ID,[TARGET,HW,con|int|ava,neg|mod|maj|sev])", _conv_pthreat),
    "threat": ("threat([ID,[HW,...]],[TARGET,HW,TYPE,SEVERITY])", _conv_threat),
    "safetyPattern": ("safetyPattern(ID,[NAME,[CP,...],[INP,...],[INT,...],[OUT,...]])",
                      _pattern("safety")),
    "securityPattern": ("securityPattern(ID,[NAME,[CP,...],[INP,...],[INT,...]|_,[OUT,...]])",
                        _pattern("security")),
    "safetyIntent": ("safetyIntent(NAME,[[TYPE,...],ASIL,OP,SILENT,SAFE])", _conv_safety_intent),
    "securityIntent": ("securityIntent(NAME,[[TYPE,...]])", _conv_security_intent),
    "exploreSafPat": ("exploreSafPat(NAME)", lambda a: K.Explore("safety", _ident(_n(a, 1)[0]))),
    "exploreSecPat": ("exploreSecPat(NAME)", lambda a: K.Explore("security", _ident(_n(a, 1)[0]))),
    "assumption": ("assumption(PATTERN,KIND,[ELEMENT,...])", _conv_assumption),
}
for _kind in K.HW_KINDS:
    SHAPES[_kind] = (f"{_kind}(ID)", _hw(_kind))


def _contains_anon(t) -> bool:
    if t is ANON:
        return True
    return isinstance(t, tuple) and any(_contains_anon(x) for x in t)


def _provenance(fact) -> str:
    primary = None
    if isinstance(fact, K.Deployment):
        primary = fact.element
    elif isinstance(fact, K.Assumption):
        return K.GENERATED if any(K.is_generated_id(s) for s in fact.subjects) else K.USER
    elif hasattr(fact, "id"):
        primary = fact.id
    if primary is not None and K.is_generated_id(primary):
        return K.GENERATED
    return K.USER


def interpret(predicate: str, args: tuple, line: int = 0, source: str = "<facts>"):
    """Turn one raw fact into a kb record."""
    if predicate not in SHAPES:
        return K.ExtensionFact(predicate, args)
    shape, conv = SHAPES[predicate]
    try:
        if predicate != "securityPattern" and _contains_anon(args):
            raise _Shape
        fact = conv(args)
    except (_Shape, ValueError):
        raise ArityError(predicate, shape, line, source) from None
    from dataclasses import replace

    return replace(fact, provenance=_provenance(fact))


def parse(text: str, source: str = "<facts>") -> K.KnowledgeBase:
    return K.KnowledgeBase.of(interpret(p, a, line, source) for p, a, line in parse_terms(text, source))


def parse_file(path) -> K.KnowledgeBase:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), str(path))


def parse_files(paths: Iterable) -> K.KnowledgeBase:
    """Union of several files. Conflicting ids surface in :func:`validate`."""
    facts: set = set()
    for p in paths:
        facts |= parse_file(p).facts
    return K.KnowledgeBase(frozenset(facts))


# --------------------------------------------------------------------------
# Rendering


def render_term(t) -> str:
    if t is ANON:
        return "_"
    if isinstance(t, tuple):
        return "[" + ",".join(render_term(x) for x in t) + "]"
    return str(t)


def _lst(items) -> tuple:
    return tuple(items)


def to_terms(fact) -> tuple:
    """``(predicate, args)`` for a kb record."""
    f = fact
    if isinstance(f, K.Component):
        return "cp", (f.id,)
    if isinstance(f, K.SubComponent):
        return "subcp", (f.child, f.parent)
    if isinstance(f, K.Channel):
        return "ch", (f.id, f.source, f.sink)
    if isinstance(f, K.InformationFlow):
        return "if", (f.id, _lst(f.channels))
    if isinstance(f, K.HardwareUnit):
        return f.kind, (f.id,)
    if isinstance(f, K.Public):
        return "public", (f.hw,)
    if isinstance(f, K.Deployment):
        return "dep", (f.element, f.host)
    if isinstance(f, K.Hazard):
        return "hz", (f.id, (f.system, f.severity, f.exposure, f.controllability))
    if isinstance(f, K.Fault):
        return "ft", (f.id, (f.locus,))
    if isinstance(f, K.Failure):
        return "fl", (f.id, (f.ftype,))
    if isinstance(f, K.FaultTrigger):
        return "ft2fl", (f.fault, f.failure)
    if isinstance(f, K.MinimalCutSet):
        return "mcs", (f.id, tuple(sorted(f.failures)))
    if isinstance(f, K.McsToHazard):
        return "lmcs2hz", (_lst(f.mcs_list), f.hazard)
    if isinstance(f, K.SafetyGoal):
        return "sg", (f.id, (f.hazard,) + tuple(s.token for s in f.slots))
    if isinstance(f, K.AsilOverride):
        return "asil", (f.hazard, f.level)
    if isinstance(f, K.Neglect):
        return "neglect", (f.fault,)
    if isinstance(f, K.ThreatRecord):
        attrs = (f.target, f.target_hw, f.ttype, f.severity)
        if f.path is None:
            return "pThreat", (f.id, attrs)
        return "threat", ((f.id, _lst(f.path)), attrs)
    if isinstance(f, (K.PatternInstance, K.TemplateDecl)):
        ident = f.id if isinstance(f, K.PatternInstance) else TEMPLATE_ID
        pred = "safetyPattern" if f.kind == "safety" else "securityPattern"
        return pred, (ident, (f.name, _lst(f.components), _lst(f.inputs),
                              _lst(f.internals), _lst(f.outputs)))
    if isinstance(f, K.SafetyIntentDecl):
        i = f.intent
        return "safetyIntent", (f.name, (tuple(sorted(i.fail_types)),) + i.attrs())
    if isinstance(f, K.SecurityIntentDecl):
        return "securityIntent", (f.name, (tuple(sorted(f.threat_types)),))
    if isinstance(f, K.Explore):
        return ("exploreSafPat" if f.kind == "safety" else "exploreSecPat"), (f.name,)
    if isinstance(f, K.Assumption):
        return "assumption", (f.pattern, f.kind, _lst(f.subjects))
    if isinstance(f, K.ExtensionFact):
        return f.predicate, f.args
    raise TypeError(f"not a fact record: {f!r}")


def render_fact(fact) -> str:
    pred, args = to_terms(fact)
    if not args:
        return f"{pred}."
    return f"{pred}(" + ",".join(render_term(a) for a in args) + ")."


def _sort_key(fact):
    pred, args = to_terms(fact)
    return (pred, render_term(args))


def render(kb: K.KnowledgeBase) -> str:
    """One fact per line, ordered by predicate then arguments."""
    lines = [render_fact(f) for f in sorted(kb.facts, key=_sort_key)]
    return "\n".join(lines) + ("\n" if lines else "")
