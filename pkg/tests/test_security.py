import itertools

from safesec import kb as K
from safesec.catalog import Candidate, lookup
from safesec.dsl import parse
from safesec.reach import compute_reachable, reachable_paths
from safesec.security import (SEVERITY_MAP, TYPE_MAP, candidate_security_patterns, derive_mitigated,
                              derive_pthreats, derive_threats)
from safesec.solutions import evaluate


def _fw(unit, bus):
    return Candidate("security", "firewall", (unit, bus), frozenset())


def test_maps():
    assert TYPE_MAP == {"err": "int", "loss": "ava"}
    assert "con" not in TYPE_MAP.values()
    order = ["neg", "mod", "maj", "sev"]
    assert [order.index(SEVERITY_MAP[s]) for s in ("s0", "s1", "s2", "s3")] == [0, 1, 2, 3]


def test_headlamp_pthreats(headlamp):
    got = {(t.id, t.target, t.target_hw, t.ttype, t.severity) for t in derive_pthreats(headlamp)}
    assert got == {("fl1", "bdCtl", "ecu2", "int", "sev"), ("fl2", "bcps", "can2", "ava", "sev"),
                   ("fl3", "cam", "ecu1", "int", "mod")}


def test_no_mcs_link_no_pthreat():
    kb = parse("cp(a). ecu(e). dep(a,e). ft(f,[a]). fl(l,[err]). ft2fl(f,l).")
    assert derive_pthreats(kb) == frozenset()


def test_six_threats(headlamp):
    threats = derive_threats(headlamp)
    assert len(threats) == 6
    assert {(t.target, t.target_hw) for t in threats} == {("bdCtl", "ecu2"), ("bcps", "can2")}
    assert {t.path[-1] for t in threats} == {"int1", "int2", "int3"}
    assert not any(t.target == "cam" for t in threats)


def test_cartesian_law(headlamp):
    paths = reachable_paths(headlamp)
    expected = sum(len(paths.get(p.target_hw, ())) for p in derive_pthreats(headlamp))
    assert len(derive_threats(headlamp)) == expected


def test_no_public_units_no_threats(headlamp):
    kb = K.KnowledgeBase(frozenset(f for f in headlamp if not isinstance(f, K.Public)))
    assert derive_threats(kb) == frozenset()


def test_candidates(headlamp):
    threats = derive_threats(headlamp)
    cands = candidate_security_patterns(headlamp, threats, {"firewall", "securityMonitor"})
    fw = {c.placement: c.reason for c in cands if c.template == "firewall"}
    assert len(fw) == 9
    assert fw[("ecu3", "can2")] == frozenset(t.key for t in threats)
    mon = [c for c in cands if c.template == "securityMonitor"]
    assert [c.placement for c in mon] == [("bdCtl",)]
    assert all(k[0] == "fl1" for k in mon[0].reason)


def test_con_threat_gets_no_firewall():
    kb = parse("cp(a). cp(b). ecu(e1). ecu(e2). can(b1). dep(a,e1). dep(b,e2). ch(k,a,b). dep(k,b1). "
               "public(e1). threat([t1,[e2,b1,e1]],[b,e2,con,sev]).")
    cands = candidate_security_patterns(kb, derive_threats(kb), {"firewall", "securityMonitor"})
    assert cands == []


def _oracle_mitigated(threats, unit, bus):
    return {t.key for t in threats if t.ttype in ("ava", "int") and any(
        {x, y} == {unit, bus} for x, y in zip(t.path, t.path[1:]))}


def test_firewall_mitigation(headlamp):
    threats = derive_threats(headlamp)
    assert derive_mitigated(headlamp, threats) == frozenset()
    for unit, bus in [("ecu3", "can2"), ("ecu4", "can1"), ("int3", "can3")]:
        kb = evaluate(headlamp, [_fw(unit, bus)]).kb
        assert derive_mitigated(kb, threats) == _oracle_mitigated(threats, unit, bus)
    kb = evaluate(headlamp, [_fw("ecu3", "can2")]).kb
    assert len(derive_mitigated(kb, threats)) == 6
    kb = evaluate(headlamp, [_fw("ecu4", "can1")]).kb
    got = derive_mitigated(kb, threats)
    assert len(got) == 4 and all(k[1][-1] in ("int1", "int2") for k in got)


def test_mitigation_monotone_and_on_path(headlamp):
    threats = derive_threats(headlamp)
    cands = candidate_security_patterns(headlamp, threats, {"firewall", "securityMonitor"})
    for a, b in itertools.combinations(cands, 2):
        one = derive_mitigated(evaluate(headlamp, [a]).kb, threats)
        both = derive_mitigated(evaluate(headlamp, [a, b]).kb, threats)
        assert one <= both
        if a.template == "firewall":
            for key in one:
                assert any({x, y} == set(a.placement) for x, y in zip(key[1], key[1][1:]))


def test_monitor_mitigates_int_on_host(headlamp):
    threats = derive_threats(headlamp)
    mon = Candidate("security", "securityMonitor", ("bdCtl",), frozenset())
    got = derive_mitigated(evaluate(headlamp, [mon]).kb, threats)
    assert got == {t.key for t in threats if t.target_hw == "ecu2" and t.ttype == "int"}
    assert lookup("securityMonitor").threat_types == {"int"}
