"""Acceptance criteria, one test each; every test prints a single status line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` to see just the lines.
"""
import json
import random
import time

import networkx as nx
import pytest

from kleenefc.alphabet import acceptor_equal
from kleenefc.expressions import (ConnectedExpression, Duct, cables_to_pairings, check_consistent_pairing,
                                  check_equal_choice, der, pairings_to_cables, parse_regex, part_a,
                                  regex_acceptor)
from kleenefc.nets import find_s_cover, has_distributed_choice, is_free_choice, reachability_graph
from kleenefc.products import (SUBSET, check_conflict_equivalent, check_consistent_matchings,
                               check_ps_live, check_product_moves, check_same_source, decompose_union,
                               direct_product_closure_check, globals_to_matchings, matchings_to_globals,
                               run_graph, union_combine)
from kleenefc.transforms import (net_to_psglobals, net_to_sce, pssac_to_scecables, psglobals_to_net,
                                 scecables_to_pssac)

from generators import corpus, random_paired_ce
from oracles import LANGS, ps_words

P = parse_regex


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        status = "EXCLUDED" if ok is None else "PASS" if ok else "FAIL"
        with capsys.disabled():
            print(f"\ncriterion {n}: {status}: {detail}")
    return emit


def lang(name):
    return regex_acceptor(P(LANGS[name]))


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def isomorphic(acc1, acc2):
    def graph(acc):
        g = nx.MultiDiGraph()
        for q in acc.states:
            g.add_node(q, mark=(q == acc.initial, q in acc.accepting))
        for p, a, q in acc.edges:
            g.add_edge(p, q, label=a)
        return g

    def same_labels(x, y):
        return sorted(d["label"] for d in x.values()) == sorted(d["label"] for d in y.values())

    return nx.is_isomorphic(graph(acc1), graph(acc2), node_match=lambda x, y: x == y, edge_match=same_labels)


# ------------------------------------------------------------------ 1

def test_criterion_1_example_languages(data, report):
    cases = [("fig1.net.json", "L_s"), ("fig1-product.net.json", "L_p"),
             ("fig3-product.net.json", "L_3"), ("fig3.net.json", "L_4")]
    results = []
    for net, name in cases:
        v, dt = timed(lambda: acceptor_equal(reachability_graph(data(net)), lang(name)))
        results.append((name, bool(v), dt))
    ok = all(v and dt < 1 for _, v, dt in results)
    report(1, ok, ", ".join(f"{n} {'equal' if v else 'DIFFERENT'} in {dt:.3f}s" for n, v, dt in results))
    assert ok


# ------------------------------------------------------------------ 2

def test_criterion_2_structural_checkers(data, report):
    def run():
        fig1, fig3 = data("fig1.net.json"), data("fig3.net.json")
        dc1, dc3 = has_distributed_choice(fig1), has_distributed_choice(fig3)
        covers = [find_s_cover(s) for s in (fig1, fig3)]
        return {
            "fig1.net.json fails distributed choice": not dc1 and dc1.witness[2] in {("r2", "s3"), ("r3", "s2")},
            "fig3.net.json passes distributed choice": bool(dc3),
            "both free choice": bool(is_free_choice(fig1.net)) and bool(is_free_choice(fig3.net)),
            "S-cover split": all(c.places(1) == {"r1", "r2", "r3"} and c.places(2) == {"s1", "s2", "s3"}
                                 for c in covers),
        }, dc1.witness[2]
    (checks, witness), dt = timed(run)
    ok = all(checks.values()) and dt < 1
    report(2, ok, f"witness {witness}, " + ", ".join(k for k, v in checks.items() if v) + f" in {dt:.3f}s")
    assert ok


# ------------------------------------------------------------------ 3

def test_criterion_3_closure_counterexamples(al, report):
    (v4, vp), dt = timed(lambda: (direct_product_closure_check(lang("L_4"), al, 3),
                                  direct_product_closure_check(lang("L_p"), al, 3)))
    w4 = "".join(v4.witness or ())
    wp = "".join(vp.witness or ())
    ok = w4 == "ab" and wp == "abe" and dt < 1
    # "ac" is strictly shorter than "abe" and also certified: projections "ac" and "a" both occur
    # in L_p (via "ace" and the single "a"), and "ac" is not in L_p
    report(3, ok, f"L_4 gives {w4!r} (expected 'ab'); L_p gives {wp!r} (expected 'abe'; the shortest "
                  f"certified counterexample is 'ac') in {dt:.3f}s")
    assert ok


# ------------------------------------------------------------------ 4

def _round_trips(data):
    systems = corpus()
    nets = [data(n) for n in ("fig1.net.json", "fig3.net.json", "fig1-product.net.json",
                              "fig3-product.net.json")]
    nets += [psglobals_to_net(ps) for ps in systems]
    res = {}

    # (a) net -> PS-globals -> net
    res["a"] = [i for i, n in enumerate(nets)
                if not isomorphic(reachability_graph(n), reachability_graph(psglobals_to_net(net_to_psglobals(n))))]

    # (b) globals -> matchings on live same-source systems; failures confirmed by the word oracle
    b_inputs = [data(n) for n in ("d.ps.json", "c.ps.json", "b-prime.ps.json", "a-prime.ps.json")] + systems
    b_fail = []
    for i, ps in enumerate(b_inputs):
        assert check_same_source(ps) and check_ps_live(ps)
        m = globals_to_matchings(ps)
        v = acceptor_equal(run_graph(m), run_graph(ps))
        structural = all(check_conflict_equivalent(m, a) for a in ps.alphabet.global_letters) \
            and check_consistent_matchings(m)
        if not (v and structural):
            w = "".join(v.witness) if not v else None
            if w is not None:
                n = len(w)
                lhs = ps_words(json.loads(json.dumps(ps.to_json())), n)
                rhs = ps_words(json.loads(json.dumps(m.to_json())), n)
                assert (w in lhs) != (w in rhs)  # the oracle agrees the languages differ
            name = ["D", "C", "B'", "A'"][i] if i < 4 else f"corpus #{i - 4}"
            b_fail.append(f"{name} (witness {w!r})" if w is not None else name)
    res["b"] = b_fail

    # (c) matchings -> globals
    c_inputs = [data("l4.ps.json"), data("a.ps.json")] + [globals_to_matchings(ps) for ps in systems]
    c_fail = []
    for i, m in enumerate(c_inputs):
        g = matchings_to_globals(m)
        if not (acceptor_equal(run_graph(g), run_graph(m)) and check_same_source(g) and check_product_moves(g)):
            c_fail.append(i)
    res["c"] = c_fail

    # (d) decompose_union / union_combine; product acceptance is the subset of final tuples
    d_inputs = [data("d.ps.json"), data("b-prime.ps.json")] + systems
    d_fail = []
    for i, ps in enumerate(d_inputs):
        sub = ps if ps.mode == SUBSET else ps.with_(mode=SUBSET, subset_finals=ps.final_states)
        if not acceptor_equal(run_graph(union_combine(decompose_union(sub))), run_graph(ps)):
            d_fail.append(i)
    res["d"] = d_fail

    # (e) pairings <-> cables at the relation level
    rng = random.Random(20261015)
    paired = [x for x in data("pairings.sce.txt").summands]
    while len(paired) < 52:
        e = random_paired_ce(rng)
        if check_equal_choice(e) and check_consistent_pairing(e):
            paired.append(e)
    e_fail = []
    for i, e in enumerate(paired):
        c = pairings_to_cables(e)
        if cables_to_pairings(c).pairings != e.pairings or not acceptor_equal(c.acceptor(), e.acceptor()):
            e_fail.append(i)
    res["e"] = e_fail
    return res, len(systems)


def test_criterion_4_round_trips(data, report):
    (res, n), dt = timed(lambda: _round_trips(data))
    ok = not any(res.values()) and dt < 60 and n >= 50
    parts = [f"({k}) {'ok' if not v else 'fails on ' + ', '.join(map(str, v))}" for k, v in res.items()]
    report(4, ok, f"{n} generated systems plus the worked examples; " + "; ".join(parts) + f"; {dt:.1f}s")
    assert ok


# ------------------------------------------------------------------ 5

def test_criterion_5_pipelines(data, report):
    def run():
        d = data("d.ps.json")
        back = scecables_to_pssac(pssac_to_scecables(d))
        first = acceptor_equal(run_graph(back), run_graph(d)) and acceptor_equal(run_graph(back), lang("L_s"))
        alt = net_to_sce(data("fig3.net.json"), route="pairings")
        second = acceptor_equal(alt.acceptor(), lang("L_4"))
        return bool(first), bool(second)
    (first, second), dt = timed(run)
    ok = first and second and dt < 5
    report(5, ok, f"D through sums of expressions and back {'keeps' if first else 'LOSES'} L_s; "
                  f"pairings route on fig3.net.json {'gives' if second else 'MISSES'} L_4; {dt:.2f}s")
    assert ok


# ------------------------------------------------------------------ 6

def test_criterion_6_derivative_truths(al, report):
    checks = {}
    checks["Der_a(ab+ac)"] = der(P("ab+ac"), "a") == {P("b"), P("c")}
    checks["Der_a(a(b+c))"] = der(P("a(b+c)"), "a") == {P("b+c")}
    for r in ("(ab+ac)*", "(ad+ae)*", "(ab+ac)*a", "(ad+ae)*a"):
        checks[f"Part_a({r})"] = part_a(P(r), "a") == {frozenset({P(r)})}
    r1, s1 = P("(ab+ac)*"), P("(ad+ae)*")
    r2, r3, s2, s3 = P("b(ab+ac)*"), P("c(ab+ac)*"), P("d(ad+ae)*"), P("e(ad+ae)*")
    d, dp = frozenset({r1}), frozenset({s1})
    e = ConnectedExpression(al, (r1, s1), cables={"a": {(Duct(d, {r2}), Duct(dp, {s2})),
                                                        (Duct(d, {r3}), Duct(dp, {s3}))}})
    steps = {t for a, t in e.steps(e.components) if a == "a"}
    checks["cable-restricted Der_a"] = steps == {(r2, s2), (r3, s3)} and (r2, s3) not in steps
    ok = all(checks.values())
    report(6, ok, ", ".join(f"{k} {'ok' if v else 'WRONG'}" for k, v in checks.items()))
    assert ok


# ------------------------------------------------------------------ 7

def test_criterion_7_excluded(report):
    report(7, None, "excluded: the universal non-expressibility and hierarchy claims are not "
                    "machine-checked; criteria 1 and 3 carry the certified substitutes")
    pytest.skip("universal claims are not decidable by enumeration")
