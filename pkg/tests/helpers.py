"""Shared generators and independent oracles for the property tests."""

from __future__ import annotations

import random
from itertools import combinations

from safesec import kb as K

NODE_KINDS = ("ecu", "interface", "switch")
BUS_KINDS = ("can", "wireless")


def random_topology(rng: random.Random, max_units: int = 12, max_channels: int = 15) -> K.KnowledgeBase:
    n_units = rng.randint(1, max_units)
    facts, nodes, buses = [], [], []
    for i in range(n_units):
        kind = rng.choice(NODE_KINDS + BUS_KINDS)
        ident = f"h{i}"
        facts.append(K.HardwareUnit(ident, kind))
        (buses if kind in BUS_KINDS else nodes).append(ident)
    comps = []
    for i, node in enumerate(nodes):
        for j in range(rng.randint(0, 2)):
            c = f"c{i}x{j}"
            comps.append(c)
            facts += [K.Component(c), K.Deployment(c, node)]
    # a few undeployed components
    for j in range(rng.randint(0, 2)):
        c = f"u{j}"
        comps.append(c)
        facts.append(K.Component(c))
    if len(comps) >= 2:
        for k in range(rng.randint(0, max_channels)):
            src, dst = rng.sample(comps, 2)
            ch = f"k{k}"
            facts.append(K.Channel(ch, src, dst))
            if buses and rng.random() < 0.85:
                facts.append(K.Deployment(ch, rng.choice(buses)))
    units = nodes + buses
    for u in rng.sample(units, rng.randint(0, min(3, len(units)))):
        facts.append(K.Public(u))
    return K.KnowledgeBase.of(facts)


def dfs_reach_oracle(kb: K.KnowledgeBase) -> set:
    """Exhaustive DFS over the bipartite node/bus graph, written from scratch."""
    hw = {f.id: f.kind for f in kb if isinstance(f, K.HardwareUnit)}
    host = {f.element: f.host for f in kb if isinstance(f, K.Deployment)}
    chans = [f for f in kb if isinstance(f, K.Channel)]
    is_bus = lambda u: hw.get(u) in BUS_KINDS  # noqa: E731
    adj = {u: set() for u in hw}
    for ch in chans:
        bus = host.get(ch.id)
        if bus is None or not is_bus(bus):
            continue
        s, t = host.get(ch.source), host.get(ch.sink)
        if s is not None and s in hw and not is_bus(s):
            adj[s].add(bus)
        if t is not None and t in hw and not is_bus(t):
            adj[bus].add(t)
    publics = [f.hw for f in kb if isinstance(f, K.Public) and f.hw in hw]
    paths = set()

    def walk(trail):
        paths.add(tuple(reversed(trail)))
        for nxt in adj[trail[-1]]:
            if nxt not in trail:
                walk(trail + [nxt])

    for p in publics:
        walk([p])
    out = set()
    for path in paths:
        unit = path[0]
        for elem, h in host.items():
            if h != unit:
                continue
            if is_bus(unit) and any(c.id == elem for c in chans):
                out.add((elem, unit, path))
            if not is_bus(unit) and K.Component(elem) in kb.facts:
                out.add((elem, unit, path))
    return out


def independent_admissible(choice) -> bool:
    seen_keys, seen_failures = set(), set()
    for c in choice:
        key = (c.template, c.placement)
        if key in seen_keys:
            return False
        seen_keys.add(key)
        if c.kind == "safety":
            if c.reason in seen_failures:
                return False
            seen_failures.add(c.reason)
    return True


def brute_force_choices(candidates: list) -> list:
    """Every subset by mask, filtered, sorted by size then index order."""
    n = len(candidates)
    out = []
    for mask in range(1 << n):
        idx = tuple(i for i in range(n) if mask >> i & 1)
        if independent_admissible([candidates[i] for i in idx]):
            out.append(idx)
    out.sort(key=lambda t: (len(t), t))
    return out


def all_combinations(n: int):
    for k in range(n + 1):
        yield from combinations(range(n), k)
