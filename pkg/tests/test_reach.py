import random

from hypothesis import given, settings, strategies as st

from safesec import kb as K
from safesec.reach import compute_reachable, derive_bus_io, reachable_paths

from helpers import dfs_reach_oracle, random_topology


def _facts(reach):
    return {(r.subject, r.host, r.path) for r in reach}


def test_bus_io_headlamp(headlamp):
    io = derive_bus_io(headlamp)
    assert ("gw", "can2") in io.writes
    assert ("bdCtl", "can2") in io.reads
    assert ("navig", "can1") in io.writes and ("cell", "wl") in io.writes


def test_bus_io_empty():
    io = derive_bus_io(K.KnowledgeBase())
    assert io.writes == frozenset() and io.reads == frozenset()


def test_headlamp_paths(headlamp):
    paths = reachable_paths(headlamp)
    assert ("ecu2", "can2", "ecu3", "can3", "int3") in paths["ecu2"]
    assert len(paths["ecu2"]) == 3
    assert len(paths["can2"]) == 3
    assert "ecu1" not in paths
    facts = _facts(compute_reachable(headlamp))
    assert ("bcps", "can2", ("can2", "ecu3", "can3", "int3")) in facts
    assert not any(s == "cam" for s, _, _ in facts)


def test_paths_are_simple_and_alternate(headlamp):
    for r in compute_reachable(headlamp):
        assert len(set(r.path)) == len(r.path)
        assert r.path[0] == r.host and r.path[-1] in headlamp.public
        kinds = [headlamp.is_bus(h) for h in r.path]
        assert all(a != b for a, b in zip(kinds, kinds[1:]))


def test_matches_dfs_oracle_on_random_topologies():
    rng = random.Random(2024)
    for _ in range(200):
        kb = random_topology(rng)
        assert _facts(compute_reachable(kb)) == dfs_reach_oracle(kb)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_adding_public_unit_is_monotone(seed):
    rng = random.Random(seed)
    kb = random_topology(rng)
    before = compute_reachable(kb)
    units = sorted(kb.hardware)
    extra = K.merge(kb, K.KnowledgeBase.of([K.Public(rng.choice(units))]))
    assert before <= compute_reachable(extra)
