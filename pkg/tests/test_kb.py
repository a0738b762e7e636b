import pytest
from hypothesis import given, settings, strategies as st

from safesec import kb as K
from safesec.dsl import parse


def codes(diags, severity=None):
    return [d.code for d in diags if severity is None or d.severity == severity]


def test_headlamp_validates_with_flow_warning(headlamp):
    diags = K.validate(headlamp)
    assert K.errors(diags) == []
    assert "flow-unknown-channel" in codes(diags, "warning")
    assert any("cmps" in d.message for d in diags)


def test_empty_kb_is_clean():
    assert K.validate(K.KnowledgeBase()) == []


def test_subcp_cycle_is_one_error():
    kb = parse("cp(a). cp(b). subcp(a,b). subcp(b,a).")
    errs = K.errors(K.validate(kb))
    assert [d.code for d in errs] == ["subcp-cycle"]


def test_dangling_and_bad_deployment():
    kb = parse("cp(a). ch(c1,a,zz). can(b1). ecu(e1). dep(a,b1). dep(c1,e1).")
    errs = codes(K.errors(K.validate(kb)))
    assert "dangling" in errs
    assert errs.count("bad-deployment") == 2


def test_non_chaining_flow_warns():
    kb = parse("cp(a). cp(b). cp(c). ch(x,a,b). ch(y,a,c). if(f,[x,y]).")
    diags = K.validate(kb)
    assert K.errors(diags) == []
    assert "flow-not-chained" in codes(diags, "warning")


def test_unusual_public_kind_warns():
    kb = parse("can(b). public(b).")
    assert "public-kind" in codes(K.validate(kb), "warning")


def test_merge_identity_and_identical_duplicates(headlamp):
    assert K.merge(headlamp, K.KnowledgeBase()) == headlamp
    dup = parse("cp(bdCtl).")
    merged = K.merge(headlamp, dup)
    assert len(merged) == len(headlamp)


def test_merge_collision():
    base = parse("cp(a). cp(b). ch(c,a,b).")
    with pytest.raises(K.IdCollision):
        K.merge(base, parse("cp(a). cp(b). ch(c,b,a)."))


def test_merge_keeps_base_provenance():
    base = parse("cp(a).")
    delta = K.retag(parse("cp(a). cp(nuX)."), K.GENERATED)
    merged = K.merge(base, delta)
    prov = {f.id: f.provenance for f in merged}
    assert prov == {"a": K.USER, "nuX": K.GENERATED}


def test_merge_with_firewall_delta(headlamp):
    from safesec.catalog import FIREWALL, instantiate_security

    _, _, delta = instantiate_security(FIREWALL, ("ecu3", "can2"), 1, headlamp)
    merged = K.merge(headlamp, delta)
    assert len(merged.security_instances) == 1
    assert K.errors(K.validate(merged)) == []


def test_generated_ids():
    assert K.is_generated_id("nuFd1")
    assert not K.is_generated_id("navig")


def test_tolerance_tokens():
    assert K.ToleranceLevel.from_token("all2fail") == K.ToleranceLevel.all(2)
    assert K.ToleranceLevel.from_token("most1fail").token == "most1fail"
    with pytest.raises(ValueError):
        K.ToleranceLevel.from_token("all0fail")
    with pytest.raises(ValueError):
        K.ToleranceLevel("all", 0)


_small = st.sets(st.sampled_from([f"cp(c{i})." for i in range(6)] + ["ecu(e1).", "can(b1).",
                                                                       "dep(c1,e1).", "public(e1)."]))


@settings(max_examples=60, deadline=None)
@given(_small, _small, _small)
def test_merge_associative(a, b, c):
    ka, kb_, kc = (parse(" ".join(sorted(x))) for x in (a, b, c))
    assert K.merge(K.merge(ka, kb_), kc) == K.merge(ka, K.merge(kb_, kc))
    assert K.merge(ka, K.KnowledgeBase()) == ka
    assert K.merge(K.KnowledgeBase(), ka) == ka
