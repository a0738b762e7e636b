"""Random fact-file generator covering every recognized predicate."""

from __future__ import annotations

import random

TOL = ["never", "all1fail", "all2fail", "most1fail", "most3fail"]


def _id(rng, prefix="x"):
    return prefix + rng.choice(["", "nu"]) * 0 + "".join(rng.choice("abcdXY19_") for _ in range(rng.randint(0, 4)))


def _ids(rng, n=None, prefix="x"):
    n = rng.randint(1, 4) if n is None else n
    return "[" + ",".join(_id(rng, prefix) for _ in range(n)) + "]"


def _fact(rng) -> str:
    i = lambda p="x": _id(rng, p)  # noqa: E731
    kinds = [
        lambda: f"cp({i('c')}).",
        lambda: f"subcp({i('c')},{i('c')}).",
        lambda: f"ch({i('k')},{i('c')},{i('c')}).",
        lambda: f"if({i('f')},{_ids(rng, prefix='k')}).",
        lambda: f"{rng.choice(['ecu', 'can', 'interface', 'wireless', 'switch', 'actuator'])}({i('h')}).",
        lambda: f"public({i('h')}).",
        lambda: f"dep({i('c')},{i('h')}).",
        lambda: f"hz({i('hz')},[{i('c')},s{rng.randint(0, 3)},e{rng.randint(1, 4)},c{rng.randint(1, 3)}]).",
        lambda: f"ft({i('ft')},[{i('c')}]).",
        lambda: f"fl({i('fl')},[{rng.choice(['err', 'loss'])}]).",
        lambda: f"ft2fl({i('ft')},{i('fl')}).",
        lambda: f"mcs({i('m')},{_ids(rng, prefix='fl')}).",
        lambda: f"lmcs2hz({_ids(rng, prefix='m')},{i('hz')}).",
        lambda: f"sg({i('sg')},[{i('hz')},{rng.choice(TOL)},{rng.choice(TOL)},{rng.choice(TOL)}]).",
        lambda: f"asil({i('hz')},{rng.choice(['qm', 'a', 'b', 'c', 'd'])}).",
        lambda: f"neglect({i('ft')}).",
        lambda: f"pThreat({i('pt')},[{i('c')},{i('h')},{rng.choice(['con', 'int', 'ava'])},"
                f"{rng.choice(['neg', 'mod', 'maj', 'sev'])}]).",
        lambda: f"threat([{i('pt')},{_ids(rng, prefix='h')}],[{i('c')},{i('h')},int,sev]).",
        lambda: f"safetyPattern({i('nuSafPat')},[{i('p')},{_ids(rng)},{_ids(rng)},{_ids(rng)},{_ids(rng)}]).",
        lambda: f"securityPattern({i('nuSecPat')},[firewall,{_ids(rng)},{_ids(rng)},_,{_ids(rng)}]).",
        lambda: f"safetyPattern(idpat,[{i('p')},{_ids(rng)},{_ids(rng)},{_ids(rng)},{_ids(rng)}]).",
        lambda: f"safetyIntent({i('p')},[[err],{rng.choice('abcd')},{rng.choice(TOL)},{rng.choice(TOL)},"
                f"{rng.choice(TOL)}]).",
        lambda: f"securityIntent({i('p')},[[ava,int]]).",
        lambda: f"exploreSafPat({i('p')}).",
        lambda: f"exploreSecPat({i('p')}).",
        lambda: f"assumption({i('p')},{rng.choice(['are_independent', 'are_verified'])},{_ids(rng)}).",
        lambda: f"custom{rng.randint(0, 3)}({i()},[{i()},{rng.randint(-5, 50)}],_).",
        lambda: "marker.",
    ]
    return rng.choice(kinds)()


def random_fact_file(rng: random.Random, max_facts: int = 40) -> str:
    lines = [_fact(rng) for _ in range(rng.randint(0, max_facts))]
    if rng.random() < 0.5:
        lines.insert(0, "% generated")
    return "\n".join(lines) + "\n"
