import networkx as nx
import pytest
from hypothesis import HealthCheck, given, settings

from kleenefc.alphabet import (MissingAnnotation, PreconditionViolated, VerificationFailed,
                               acceptor_equal, acceptor_language_bounded)
from kleenefc.expressions import (ConnectedExpression, Duct, check_equal_source, check_product_derivatives,
                                  parse_regex, regex_acceptor)
from kleenefc.nets import (has_distributed_choice, is_free_choice, is_live, reachability_graph)
from kleenefc.products import (PRODUCT, SUBSET, ProductSystem, SequentialSystem, check_consistent_matchings,
                               check_product_moves, check_same_source, decompose_union, run_graph)
from kleenefc.transforms import (DIRECTIONS, cecables_to_psglobals, net_expression_pipeline, net_to_psglobals,
                                 net_to_sce, psglobals_to_cecables, psglobals_to_net, psmatsac_to_scepairings,
                                 pssac_to_scecables, run_conversion, sce_to_net, scecables_to_pssac,
                                 scepairings_to_psmatsac, state_elimination, to_acceptor, unverified)

from conftest import words
from generators import corpus, live_cluster_system, randoms
from oracles import LANGS

P = parse_regex


def lang(name):
    return regex_acceptor(P(LANGS[name]))


def labelled_graph(acc):
    g = nx.MultiDiGraph()
    for q in acc.states:
        g.add_node(q, start=q == acc.initial, accepting=q in acc.accepting)
    for p, a, q in acc.edges:
        g.add_edge(p, q, label=a)
    return g


def isomorphic(acc1, acc2):
    return nx.is_isomorphic(labelled_graph(acc1), labelled_graph(acc2),
                            node_match=lambda x, y: x == y,
                            edge_match=lambda x, y: sorted(d["label"] for d in x.values()) ==
                            sorted(d["label"] for d in y.values()))


# --------------------------------------------------------------- nets <-> PS

def test_psglobals_to_net_fig1(data):
    net = psglobals_to_net(data("d.ps.json"))
    fig1 = data("fig1.net.json")
    assert net.net.places == fig1.net.places
    assert {(t.label, t.pre, t.post) for t in net.net.transitions} == \
        {(t.label, t.pre, t.post) for t in fig1.net.transitions}
    assert net.initial == fig1.initial and net.finals == fig1.finals
    assert is_free_choice(net.net)


def test_psglobals_to_net_fig3(data):
    net = psglobals_to_net(data("b-prime.ps.json"))
    assert acceptor_equal(reachability_graph(net), lang("L_4"))
    assert is_free_choice(net.net) and has_distributed_choice(net)


def test_single_global_gives_one_transition(al):
    comps = tuple(SequentialSystem(frozenset({p + "0", p + "1"}), p + "0", frozenset({p + "1"}),
                                   frozenset({(p + "0", "a", p + "1")})) for p in "pq")
    ps = ProductSystem(al, comps, globals={"a": {(("p0", "a", "p1"), ("q0", "a", "q1"))}})
    (t,) = psglobals_to_net(ps).net.transitions
    assert t.pre == {"p0", "q0"} and t.post == {"p1", "q1"}


def test_psglobals_to_net_needs_globals(data):
    with pytest.raises(MissingAnnotation):
        psglobals_to_net(data("a.ps.json"))


def test_net_to_psglobals_fig1(data):
    ps = net_to_psglobals(data("fig1.net.json"))
    d = data("d.ps.json")
    assert ps.mode == SUBSET and ps.subset_finals == d.subset_finals
    assert ps.globals == d.globals
    assert [c.moves for c in ps.components] == [c.moves for c in d.components]
    assert check_same_source(ps)


def test_net_to_psglobals_fig3(data):
    ps = net_to_psglobals(data("fig3.net.json"))
    assert check_product_moves(ps) and check_same_source(ps)
    m = run_conversion("globals-to-matchings", ps)
    assert m.ok and check_consistent_matchings(m.output)


def test_net_round_trip_is_isomorphic(data):
    for name in ("fig1.net.json", "fig3.net.json", "fig1-product.net.json"):
        sys = data(name)
        back = psglobals_to_net(net_to_psglobals(sys))
        assert isomorphic(reachability_graph(sys), reachability_graph(back))


def test_idle_net(data):
    ps = net_to_psglobals(data("empty.net.json"))
    assert acceptor_language_bounded(run_graph(ps), 3) == words("")


# ------------------------------------------------------------ CE <-> PS

def cabled_loop(al):
    r1, s1 = P("(ab+ac)*"), P("(ad+ae)*")
    r2, r3, s2, s3 = P("b(ab+ac)*"), P("c(ab+ac)*"), P("d(ad+ae)*"), P("e(ad+ae)*")
    d, dp = frozenset({r1}), frozenset({s1})
    two = {"a": {(Duct(d, {r2}), Duct(dp, {s2})), (Duct(d, {r3}), Duct(dp, {s3}))}}
    four = {"a": {(Duct(d, {x}), Duct(dp, {y})) for x in (r2, r3) for y in (s2, s3)}}
    return ConnectedExpression(al, (r1, s1), cables=two), ConnectedExpression(al, (r1, s1), cables=four)


def test_cecables_to_psglobals(al, data):
    two, four = cabled_loop(al)
    ps2 = cecables_to_psglobals(two)
    assert ps2.mode == PRODUCT and check_same_source(ps2) and not check_product_moves(ps2)
    assert acceptor_equal(run_graph(ps2), two.acceptor())
    one = data("d.ps.json").with_(subset_finals=frozenset({("r1", "s1")}))
    assert acceptor_equal(run_graph(ps2), run_graph(one))
    ps4 = cecables_to_psglobals(four)
    assert check_product_moves(ps4) and acceptor_equal(run_graph(ps4), four.acceptor())


def test_cecables_trivial(al):
    e = ConnectedExpression(al, (P("a"), P("a")),
                            cables={"a": {(Duct({P("a")}, {P("1")}), Duct({P("a")}, {P("1")}))}})
    ps = cecables_to_psglobals(e)
    assert [len(c.states) for c in ps.components] == [2, 2]
    assert sum(len(g) for g in ps.globals.values()) == 1


def test_psglobals_to_cecables(data):
    c = data("c.ps.json")
    e = psglobals_to_cecables(c)
    assert acceptor_equal(e.acceptor(), run_graph(c))
    assert acceptor_equal(e.acceptor(), lang("L_p"))
    assert check_equal_source(e)


def test_psglobals_to_cecables_preconditions(data):
    with pytest.raises(PreconditionViolated):
        psglobals_to_cecables(data("d.ps.json"))  # subset acceptance
    with pytest.raises(MissingAnnotation):
        psglobals_to_cecables(data("a.ps.json"))


def test_self_loops_give_stars(al):
    comps = (SequentialSystem(frozenset({"p"}), "p", frozenset({"p"}), frozenset({("p", "a", "p"), ("p", "b", "p")})),
             SequentialSystem(frozenset({"q"}), "q", frozenset({"q"}), frozenset({("q", "a", "q")})))
    ps = ProductSystem(al, comps, globals={"a": {(("p", "a", "p"), ("q", "a", "q"))}})
    e = psglobals_to_cecables(ps)
    assert e.components == (P("(a+b)*"), P("a*"))
    assert len(e.cables["a"]) == 1


def test_state_elimination_language():
    comp = SequentialSystem(frozenset({"x", "y"}), "x", frozenset({"x"}),
                            frozenset({("x", "a", "y"), ("y", "b", "x"), ("y", "c", "y")}))
    r = state_elimination(comp, lambda m: m[1])
    assert acceptor_equal(regex_acceptor(r), regex_acceptor(P("(ac*b)*")))


def test_decomposed_parts_give_expected_summands(data):
    parts = decompose_union(data("d.ps.json"))
    got = {tuple(str(s) for s in psglobals_to_cecables(p).components) for p in parts}
    assert got == {("(ab+ac)*", "(ad+ae)*"), ("(ab+ac)*a", "(ad+ae)*a")}


# --------------------------------------------------------------- SCE level

def test_scecables_to_pssac(data):
    ps = scecables_to_pssac(data("ls.sce.txt"))
    assert ps.mode == SUBSET and check_same_source(ps)
    assert acceptor_equal(run_graph(ps), lang("L_s"))


def test_pssac_to_scecables(data):
    e = pssac_to_scecables(data("d.ps.json"))
    assert {tuple(str(s) for s in x.components) for x in e.summands} == \
        {("(ab+ac)*", "(ad+ae)*"), ("(ab+ac)*a", "(ad+ae)*a")}
    assert all(check_equal_source(x) for x in e.summands)
    b = pssac_to_scecables(data("b-prime.ps.json"))
    assert len(b.summands) == 2
    assert all(check_product_derivatives(x) for x in b.summands)
    assert acceptor_equal(b.acceptor(), lang("L_4"))


def test_single_final_gives_single_summand(data):
    d = data("d.ps.json")
    one = d.with_(subset_finals=frozenset({("r1", "s1")}))
    assert len(pssac_to_scecables(one).summands) == 1


def test_pairing_pipelines(data):
    e = psmatsac_to_scepairings(data("l4.ps.json"))
    assert len(e.summands) == 2 and all(x.pairings is not None for x in e.summands)
    assert acceptor_equal(e.acceptor(), lang("L_4"))
    ps = scepairings_to_psmatsac(data("pairings.sce.txt"))
    assert ps.mode == SUBSET and ps.matchings is not None
    assert acceptor_equal(run_graph(ps), data("pairings.sce.txt").acceptor())


def test_net_expression_pipeline(data):
    e, back = net_expression_pipeline(data("fig1.net.json"))
    assert acceptor_equal(e.acceptor(), lang("L_s"))
    assert acceptor_equal(reachability_graph(back), lang("L_s"))
    fig3 = data("fig3.net.json")
    cables = net_to_sce(fig3)
    pairings = net_to_sce(fig3, route="pairings")
    assert acceptor_equal(cables.acceptor(), lang("L_4"))
    assert acceptor_equal(pairings.acceptor(), lang("L_4"))
    assert acceptor_equal(reachability_graph(sce_to_net(cables)), lang("L_4"))


def test_empty_net_pipeline(data):
    e = net_to_sce(data("empty.net.json"))
    assert acceptor_language_bounded(e.acceptor(), 3) == words("")


# ----------------------------------------------------------------- reports

def test_reports(data):
    rep = run_conversion("net-to-ps", data("fig1.net.json"))
    assert rep.ok and rep.language_equal is True
    props = {p.name: (p.source_verdict, p.target_verdict) for p in rep.properties}
    assert props["free-choice -> same-source"] == ("yes", "yes")
    assert props["distributed-choice -> product-moves"] == ("no", "no")
    js = rep.to_json()
    assert set(js) >= {"input_hash", "direction", "properties", "language_equal", "witness"}
    assert run_conversion("net-to-ps", data("fig1.net.json")).input_hash == rep.input_hash


def test_report_on_language_change():
    rep = run_conversion("globals-to-matchings", corpus()[21])
    assert not rep.ok and rep.language_equal is False
    assert rep.to_json()["witness"] == "ac"


def test_report_propagates_other_errors(data):
    with pytest.raises(MissingAnnotation):
        run_conversion("ps-to-ce", data("a.ps.json"))  # no globals to read cables from
    assert run_conversion("ps-to-ce", data("d.ps.json")).ok  # subset acceptance falls back to sums


def test_unverified_skips_certification(data):
    ps = data("c.ps.json")
    with unverified():
        e = psglobals_to_cecables(ps)
    assert acceptor_equal(e.acceptor(), run_graph(ps))


def test_to_acceptor_dispatch(data):
    for name, l in (("fig1.net.json", "L_s"), ("d.ps.json", "L_s"), ("ls.sce.txt", "L_s"),
                    ("l4.ps.json", "L_4")):
        assert acceptor_equal(to_acceptor(data(name)), lang(l))


def test_every_direction_is_listed():
    assert set(DIRECTIONS) >= {"net-to-ps", "ps-to-net", "globals-to-matchings", "matchings-to-globals",
                               "ce-to-ps", "ps-to-ce", "sce-to-ps", "ps-to-sce", "pairings-to-cables",
                               "cables-to-pairings", "net-to-sce", "sce-to-net"}


def test_verification_failure_is_raised(al, monkeypatch):
    """A construction that changes the language is reported, never silently accepted."""
    import kleenefc.transforms as tf
    two, _ = cabled_loop(al)
    monkeypatch.setattr(tf, "run_graph", lambda ps: regex_acceptor(P("b")))
    with pytest.raises(VerificationFailed):
        tf.psglobals_to_cecables(cecables_to_psglobals(two))


# ------------------------------------------------------------- invariants

SETTINGS = settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(randoms())
def test_ps_net_ps_round_trip(rng):
    ps = live_cluster_system(rng)
    net = psglobals_to_net(ps)
    assert is_free_choice(net.net)
    back = psglobals_to_net(net_to_psglobals(net))
    assert isomorphic(reachability_graph(net), reachability_graph(back))


@SETTINGS
@given(randoms())
def test_product_moves_give_distributed_choice(rng):
    ps = live_cluster_system(rng, product_moves=True)
    net = psglobals_to_net(ps)
    assert has_distributed_choice(net) and is_live(net)
    assert acceptor_equal(reachability_graph(net), run_graph(ps))


@SETTINGS
@given(randoms())
def test_sce_round_trip(rng):
    ps = live_cluster_system(rng)
    e = pssac_to_scecables(ps) if ps.mode == SUBSET else pssac_to_scecables(ps.with_(
        mode=SUBSET, subset_finals=ps.final_states))
    assert acceptor_equal(e.acceptor(), run_graph(ps))
    assert acceptor_equal(run_graph(scecables_to_pssac(e)), run_graph(ps))
