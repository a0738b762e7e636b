"""Intruder reachability over the hardware topology.

An intruder starts on any public hardware unit. From a node (ECU,
interface, switch) it can move onto a bus that some component on the node
writes to; from a bus it can move onto any node hosting a component that
reads from that bus. Every simple path is kept, target-first.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .kb import KnowledgeBase


@dataclass(frozen=True)
class BusIo:
    writes: frozenset  # (component, bus)
    reads: frozenset  # (component, bus)


@dataclass(frozen=True, order=True)
class ReachFact:
    subject: str
    host: str
    path: tuple  # path[0] == host, path[-1] is public


def derive_bus_io(kb: KnowledgeBase) -> BusIo:
    writes, reads = set(), set()
    for dep in kb.deployments:
        ch = kb.channels.get(dep.element)
        if ch is None or not kb.is_bus(dep.host):
            continue
        writes.add((ch.source, dep.host))
        reads.add((ch.sink, dep.host))
    return BusIo(frozenset(writes), frozenset(reads))


def hop_graph(kb: KnowledgeBase) -> dict:
    """Successor map over hardware units induced by bus IO."""
    io = derive_bus_io(kb)
    succ = defaultdict(set)
    for cp, bus in io.writes:
        host = kb.host_of.get(cp)
        if host is not None and not kb.is_bus(host):
            succ[host].add(bus)
    for cp, bus in io.reads:
        host = kb.host_of.get(cp)
        if host is not None and not kb.is_bus(host):
            succ[bus].add(host)
    return {k: sorted(v) for k, v in succ.items()}


def _subjects(kb: KnowledgeBase, unit: str) -> list:
    """Components on a node, or channels on a bus."""
    pool = kb.channels if kb.is_bus(unit) else kb.components
    return sorted(e for e in kb.deployed_on.get(unit, ()) if e in pool)


def reachable_paths(kb: KnowledgeBase) -> dict:
    """Map hardware unit -> sorted list of simple intruder paths ending there.

    Computed as a least fixpoint: each round extends the paths found in the
    previous round by one hop.
    """
    succ = hop_graph(kb)
    frontier = {(h,) for h in kb.public if h in kb.hardware}
    found: set = set(frontier)
    while frontier:
        step = set()
        for path in frontier:
            for nxt in succ.get(path[0], ()):
                if nxt not in path:
                    step.add((nxt,) + path)
        frontier = step - found
        found |= frontier
    out = defaultdict(list)
    for path in found:
        out[path[0]].append(path)
    return {unit: sorted(paths) for unit, paths in out.items()}


def compute_reachable(kb: KnowledgeBase) -> frozenset:
    facts = set()
    for unit, paths in reachable_paths(kb).items():
        for subject in _subjects(kb, unit):
            facts.update(ReachFact(subject, unit, p) for p in paths)
    return frozenset(facts)


def index_reach(reach) -> dict:
    """(subject, host) -> sorted paths."""
    idx = defaultdict(list)
    for r in reach:
        idx[(r.subject, r.host)].append(r.path)
    return {k: sorted(v) for k, v in idx.items()}
