"""JSON and Graphviz DOT output."""

from __future__ import annotations

import json

from . import kb as K
from .dsl import render

SCHEMA_VERSION = 1


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(kb: K.KnowledgeBase, name: str = "architecture") -> str:
    """Components as boxes, hardware as shaded boxes, generated elements dashed.

    Channels are edges labelled with their id and, if deployed, their bus.
    """
    gen = K.GENERATED
    lines = [f"digraph {_q(name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    for hw in sorted(kb.hardware.values(), key=lambda h: h.id):
        style = "filled" + (",dashed" if hw.provenance == gen else "")
        pub = ",peripheries=2" if hw.id in kb.public else ""
        lines.append(f"  {_q('hw:' + hw.id)} [label={_q(hw.id + ' (' + hw.kind + ')')},"
                     f" style={_q(style)}, fillcolor=lightgray{pub}];")
    for cp in sorted(kb.components.values(), key=lambda c: c.id):
        style = ',style="dashed"' if cp.provenance == gen else ""
        lines.append(f"  {_q(cp.id)} [label={_q(cp.id)}{style}];")
    for ch in sorted(kb.channels.values(), key=lambda c: c.id):
        host = kb.host_of.get(ch.id)
        label = ch.id + (f" @{host}" if host else "")
        style = ',style="dashed"' if ch.provenance == gen else ""
        lines.append(f"  {_q(ch.source)} -> {_q(ch.sink)} [label={_q(label)}{style}];")
    for dep in sorted(kb.deployments, key=lambda d: (d.element, d.host)):
        if dep.element in kb.components and dep.host in kb.hardware:
            lines.append(f"  {_q(dep.element)} -> {_q('hw:' + dep.host)}"
                         f" [style=dotted, arrowhead=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def solutions_json(reports: list, warnings: list = ()) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "warnings": list(warnings),
           "solutions": [r.as_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True)


def delta_facts(solution) -> str:
    return render(solution.delta)
