import pytest

from safesec import kb as K
from safesec.catalog import (FIREWALL, HETEROGENEOUS_DUPLEX_FS, MONITOR_ACTUATOR, BadPlacement,
                             MissingIntent, UnknownTarget, builtin_catalog, catalog_for, fresh_id,
                             instantiate_safety, instantiate_security, lookup)
from safesec.dsl import parse


def test_builtin_names_and_stubs():
    names = [t.name for t in builtin_catalog()]
    assert names[:5] == ["dualSelfCheckingPairFS", "monitorActuator", "heterogeneousDuplexFS",
                         "firewall", "securityMonitor"]
    assert len(names) == 10
    assert lookup("watchdog").intent is None
    assert lookup("firewall").threat_types == frozenset({"ava", "int"})


def test_intents_match_catalog_values():
    dual = lookup("dualSelfCheckingPairFS").intent
    assert dual.attrs() == ("d", "all1fail", "never", "all2fail")
    assert lookup("monitorActuator").intent.attrs() == ("b", "never", "most1fail", "never")
    assert lookup("heterogeneousDuplexFS").intent.attrs() == ("d", "all1fail", "never", "all2fail")
    assert lookup("securityMonitor").threat_types == frozenset({"int"})


def test_structure_shapes():
    dual = lookup("dualSelfCheckingPairFS")
    assert dual.multiplicity == {"target": 1, "redundant": 3, "checker": 2}
    assert dual.channel_counts == (4, 5, 3)
    assert lookup("monitorActuator").channel_counts == (2, 2, 1)


def test_fresh_id_separator():
    assert fresh_id("mon", 1) == "nuMon1"
    assert fresh_id("se1", 2) == "nuSe1_2"


def test_monitor_actuator_on_cam(headlamp):
    inst, assumptions, delta = instantiate_safety(MONITOR_ACTUATOR, "cam", 1, headlamp)
    assert inst.id == "nuSafPat1"
    assert inst.components == ("cam", "nuMon1")
    assert set(inst.channels) == {"nuInp1_1", "nuInp2_1", "nuInt1_1", "nuShut1", "nuOut1"}
    assert [a.kind for a in assumptions] == ["are_verified"]
    assert delta.host_of["nuMon1"] == "ecu1"
    assert all(K.is_generated_id(e) for e in delta.element_ids)
    merged = K.merge(headlamp, delta)
    assert K.errors(K.validate(merged)) == []


def test_hetero_duplex_wiring(headlamp):
    inst, _, delta = instantiate_safety(HETEROGENEOUS_DUPLEX_FS, "bdCtl", 3, headlamp)
    chans = delta.channels
    # inputs tap the target's input sources, outputs feed its original sinks
    assert {chans[c].source for c in inst.inputs} <= {"gw", "hlSwt"}
    assert {chans[c].sink for c in inst.outputs} == {"ps"}
    assert {chans[c].sink for c in inst.internals} == {"nuFd3"}


def test_unknown_target_and_missing_intent(headlamp):
    with pytest.raises(UnknownTarget):
        instantiate_safety(MONITOR_ACTUATOR, "nothing", 1, headlamp)
    with pytest.raises(MissingIntent):
        instantiate_safety(lookup("watchdog"), "cam", 1, headlamp)


def test_user_intent_enables_stub(headlamp):
    kb = K.merge(headlamp, parse("safetyIntent(watchdog,[[err,loss],b,never,all1fail,never])."))
    tpl = catalog_for(kb)["watchdog"]
    inst, _, delta = instantiate_safety(tpl, "cam", 1, kb)
    assert inst.components == ("cam", "nuRed1", "nuCkr1")
    assert K.errors(K.validate(K.merge(kb, delta))) == []


def test_firewall_placement(headlamp):
    inst, assumptions, delta = instantiate_security(FIREWALL, ("ecu3", "can2"), 1, headlamp)
    assert inst.components == ("can2", "ecu3", "nuFw1")
    assert delta.host_of["nuFw1"] == "ecu3"
    ends = {(c.source, c.sink) for c in delta.channels.values()}
    assert ends == {("gw", "nuFw1"), ("bdCtl", "nuFw1"), ("nuFw1", "bdCtl"), ("nuFw1", "gw")}
    assert {a.kind for a in assumptions} == {"are_verified", "have_policies"}


def test_firewall_bad_placement(headlamp):
    with pytest.raises(BadPlacement):
        instantiate_security(FIREWALL, ("ecu3", "ecu2"), 1, headlamp)
    with pytest.raises(BadPlacement):
        instantiate_security(FIREWALL, ("ecu1", "can2"), 1, headlamp)


def test_security_monitor(headlamp):
    inst, _, delta = instantiate_security(lookup("securityMonitor"), "bdCtl", 2, headlamp)
    assert inst.components == ("bdCtl", "nuMon2")
    assert delta.host_of["nuMon2"] == "ecu2"


def test_user_declared_template_validates():
    kb = parse("cp(a). cp(b). ch(k,a,b). ecu(e). dep(a,e). dep(b,e). "
               "safetyPattern(idpat,[myPat,[pr,se,fd],[i1,i2],[n1],[o1]]). "
               "safetyIntent(myPat,[[err],c,all1fail,never,never]). "
               "ft(f1,[a]). fl(l1,[err]). ft2fl(f1,l1).")
    tpl = catalog_for(kb)["myPat"]
    assert [r.category for r in tpl.roles] == ["target", "redundant", "checker"]
    inst, _, delta = instantiate_safety(tpl, "a", 1, kb)
    merged = K.merge(kb, delta)
    assert K.errors(K.validate(merged)) == []
