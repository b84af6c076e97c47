import json
from itertools import product

import pytest
from hypothesis import HealthCheck, given, settings

from kleenefc.alphabet import (DistributedAlphabet, MissingAnnotation, PreconditionViolated,
                               acceptor_equal, acceptor_language_bounded, union_acceptor)
from kleenefc.expressions import parse_regex, regex_acceptor
from kleenefc.products import (PRODUCT, SUBSET, ProductSystem, SequentialSystem, check_conflict_equivalent,
                               check_consistent_matchings, check_matching_wellformed, check_product_moves,
                               check_ps_live, check_same_source, compartments, decompose_union,
                               direct_product_closure_check, globals_to_matchings, matchings_to_globals,
                               run_graph, union_combine)

from conftest import words
from generators import cluster_system, live_cluster_system, randoms
from oracles import LANGS, closure_counterexample, project, ps_words, raw, regex_words, shuffle_words


def chain(word, tag):
    """Sequential system accepting exactly `word`."""
    states = [f"{tag}{n}" for n in range(len(word) + 1)]
    moves = {(states[n], x, states[n + 1]) for n, x in enumerate(word)}
    return SequentialSystem(frozenset(states), states[0], frozenset([states[-1]]), frozenset(moves))


def regex_lang(name):
    return regex_acceptor(parse_regex(LANGS[name]))


# -------------------------------------------------------------- run graphs

@pytest.mark.parametrize("name, lang", [("d.ps.json", "L_s"), ("l4.ps.json", "L_4"),
                                        ("c.ps.json", "L_p"), ("b-prime.ps.json", "L_4")])
def test_run_graph_languages(data, name, lang):
    acc = run_graph(data(name))
    assert acceptor_equal(acc, regex_lang(lang))
    assert {"".join(w) for w in acceptor_language_bounded(acc, 6)} == ps_words(raw(name), 6)


def test_empty_system_accepts_empty_word(al):
    comps = tuple(SequentialSystem(frozenset({p}), p, frozenset({p}), frozenset()) for p in "pq")
    assert acceptor_language_bounded(run_graph(ProductSystem(al, comps)), 3) == words("")


def test_total_globals_are_vacuous(data):
    """Restricting to all local move tuples changes nothing."""
    for name in ("a.ps.json", "l4.ps.json"):
        ps = data(name)
        total = {a: frozenset(product(*(sorted(m for m in ps.components[i - 1].moves if m[1] == a)
                                        for i in ps.locs(a))))
                 for a in ps.alphabet.global_letters}
        assert acceptor_equal(run_graph(ps), run_graph(ps.with_(globals=total, matchings=None)))


def test_validation(al):
    comps = (chain("ab", "p"), chain("ad", "q"))
    with pytest.raises(ValueError):
        ProductSystem(al, comps[:1])
    with pytest.raises(ValueError):
        ProductSystem(al, comps, SUBSET, {("p0", "q0")})  # not final locally
    with pytest.raises(ValueError):
        ProductSystem(al, comps, globals={"a": {(("p0", "a", "p1"), ("q0", "a", "q9"))}})
    with pytest.raises(ValueError):
        ProductSystem(al, (chain("ad", "p"), comps[1]))  # d is not a letter of location 1


def test_ps_json_round_trip(data):
    for name in ("d.ps.json", "a.ps.json"):
        ps = data(name)
        assert ProductSystem.from_json(ps.to_json()).to_json() == ps.to_json()


# ------------------------------------------------------------- matchings

def test_matching_checks(data):
    a = data("a.ps.json")
    assert check_matching_wellformed(a, "a")
    assert check_conflict_equivalent(a, "a")
    assert check_consistent_matchings(a)
    assert check_consistent_matchings(data("l4.ps.json"))
    with pytest.raises(MissingAnnotation):
        check_matching_wellformed(data("d.ps.json"), "a")


def test_matching_wellformed_failures(data):
    a = data("a.ps.json")
    assert not check_matching_wellformed(a.with_(matchings={"a": set()}), "a")  # r1, s1 uncovered
    twice = {"a": {("r1", "s1"), ("r1", "s2")}}
    assert not check_matching_wellformed(a.with_(matchings=twice), "a")


def test_conflict_equivalence_failure(al):
    p = SequentialSystem(frozenset({"p", "p2"}), "p", frozenset({"p"}),
                         frozenset({("p", "a", "p2"), ("p", "b", "p2")}))
    q = SequentialSystem(frozenset({"q", "q2"}), "q", frozenset({"q"}), frozenset({("q", "a", "q2")}))
    ps = ProductSystem(al, (p, q), matchings={"a": {("p", "q")}})
    v = check_conflict_equivalent(ps, "a")
    assert not v and v.witness == ("p", "q", "b")


def test_consistency_failure(al):
    # after a local d, component 2 sits in q1 which is not matched with r1
    r = SequentialSystem(frozenset({"r1", "r2"}), "r1", frozenset({"r1"}), frozenset({("r1", "a", "r2")}))
    s = SequentialSystem(frozenset({"s1", "s2", "s3"}), "s1", frozenset({"s1"}),
                         frozenset({("s1", "d", "s2"), ("s1", "a", "s3"), ("s2", "a", "s3")}))
    ps = ProductSystem(al, (r, s), matchings={"a": {("r1", "s1")}})
    v = check_consistent_matchings(ps)
    assert not v
    assert v.witness is not None


def test_consistency_vacuous(al):
    ps = ProductSystem(al, (chain("b", "p"), chain("d", "q")), matchings={"a": set()})
    assert check_consistent_matchings(ps)


# ------------------------------------------------------ globals, compartments

def test_same_source(data, al):
    assert check_same_source(data("d.ps.json"))
    comps = (SequentialSystem(frozenset({"p", "q", "q2"}), "p", frozenset({"p"}),
                              frozenset({("p", "a", "q"), ("q", "a", "q2")})),
             SequentialSystem(frozenset({"r", "r2", "s"}), "r", frozenset({"r"}),
                              frozenset({("r", "a", "s"), ("r2", "a", "s")})))
    clash = {"a": {(("p", "a", "q"), ("r", "a", "s")), (("p", "a", "q"), ("r2", "a", "s"))}}
    v = check_same_source(ProductSystem(al, comps, globals=clash))
    assert not v and v.witness is not None
    single = {"a": {(("p", "a", "q"), ("r", "a", "s"))}}
    assert check_same_source(ProductSystem(al, comps, globals=single))
    with pytest.raises(MissingAnnotation):
        check_same_source(data("a.ps.json"))


def test_compartments(data):
    (ca,) = compartments(data("a-prime.ps.json"), "a")
    assert len(ca.members) == 4
    assert ca.post == ca.postdecomp == {(r, s) for r in ("r2", "r3") for s in ("s2", "s3")}
    (cc,) = compartments(data("c.ps.json"), "a")
    assert cc.post == {("r2", "s2"), ("r3", "s3")} and cc.post < cc.postdecomp


def test_compartments_split_by_pre_state(al):
    comps = (SequentialSystem(frozenset({"p", "q"}), "p", frozenset({"p"}),
                              frozenset({("p", "a", "q"), ("q", "a", "p")})),
             SequentialSystem(frozenset({"r", "s"}), "r", frozenset({"r"}),
                              frozenset({("r", "a", "s"), ("s", "a", "r")})))
    glob = {"a": {(("p", "a", "q"), ("r", "a", "s")), (("q", "a", "p"), ("s", "a", "r"))}}
    ps = ProductSystem(al, comps, globals=glob)
    assert len(compartments(ps, "a")) == 2
    assert check_product_moves(ps)


def test_product_moves(data):
    assert check_product_moves(data("a-prime.ps.json"))
    v = check_product_moves(data("d.ps.json"))
    assert not v and v.witness == ("r2", "s3")


def test_liveness(data, al):
    assert check_ps_live(data("d.ps.json"))
    comps = (SequentialSystem(frozenset({"p", "q"}), "p", frozenset({"p"}), frozenset({("q", "a", "p")})),
             SequentialSystem(frozenset({"r", "s"}), "r", frozenset({"r"}), frozenset({("s", "a", "r")})))
    never = ProductSystem(al, comps, globals={"a": {(("q", "a", "p"), ("s", "a", "r"))}})
    assert not check_ps_live(never)
    with pytest.raises(MissingAnnotation):
        check_ps_live(data("a.ps.json"))


# --------------------------------------------------------- union decomposition

def test_decompose_union(data):
    d = data("d.ps.json")
    parts = decompose_union(d)
    assert len(parts) == 2 and all(p.mode == PRODUCT for p in parts)
    assert acceptor_equal(union_acceptor([run_graph(p) for p in parts]), regex_lang("L_s"))
    b = data("l4.ps.json")
    assert acceptor_equal(union_acceptor([run_graph(p) for p in decompose_union(b)]), regex_lang("L_4"))
    one = d.with_(subset_finals=frozenset({("r1", "s1")}))
    (only,) = decompose_union(one)
    assert acceptor_equal(run_graph(only), run_graph(one))


def test_union_combine(data):
    d = data("d.ps.json")
    combined = union_combine(decompose_union(d))
    assert combined.mode == SUBSET
    assert acceptor_equal(run_graph(combined), regex_lang("L_s"))
    a = data("a-prime.ps.json")
    assert acceptor_equal(run_graph(union_combine([a, a])), run_graph(a))


def test_union_of_direct_products():
    """Two direct products over ({c,a},{c,b}); their union is no direct product."""
    al = DistributedAlphabet((("c", "a"), ("c", "b")))
    first = ProductSystem(al, (chain("ca", "x"), chain("cb", "y")))
    second = ProductSystem(al, (chain("caa", "x"), chain("cbb", "y")))
    both = union_combine([first, second])
    dist = [{"c", "a"}, {"c", "b"}]
    expected = shuffle_words([{"ca"}, {"cb"}], dist, 5) | shuffle_words([{"caa"}, {"cbb"}], dist, 5)
    assert {"".join(w) for w in acceptor_language_bounded(run_graph(both), 5)} == expected
    assert expected == {"cab", "cba", "caabb", "cabab", "cabba", "cbaab", "cbaba", "cbbaa"}
    v = direct_product_closure_check(run_graph(both), al, 4)
    assert not v
    assert "".join(v.witness) == closure_counterexample(expected, dist, 4) == "caab"


# ------------------------------------------------------- globals <-> matchings

def test_globals_to_matchings(data):
    d = data("d.ps.json")
    m = globals_to_matchings(d)
    assert m.matchings == {"a": {("r1", "s1")}}
    assert m.components == d.components
    assert check_conflict_equivalent(m, "a")
    ap = globals_to_matchings(data("a-prime.ps.json"))
    assert ap.matchings == {"a": {("r1", "s1")}} and check_conflict_equivalent(ap, "a")


def test_globals_to_matchings_singletons(al):
    comps = (chain("ab", "p"), chain("ad", "q"))
    ps = ProductSystem(al, comps, globals={"a": {(("p0", "a", "p1"), ("q0", "a", "q1"))}})
    assert globals_to_matchings(ps).matchings == {"a": {("p0", "q0")}}


def test_matchings_to_globals(data):
    b_prime = matchings_to_globals(data("l4.ps.json"))
    assert b_prime.globals == data("b-prime.ps.json").globals
    assert check_same_source(b_prime) and check_product_moves(b_prime)
    assert acceptor_equal(run_graph(b_prime), regex_lang("L_4"))
    a_prime = matchings_to_globals(data("a.ps.json"))
    assert a_prime.globals == data("a-prime.ps.json").globals


def test_matchings_to_globals_single(al):
    ps = ProductSystem(al, (chain("ab", "p"), chain("ad", "q")), matchings={"a": {("p0", "q0")}})
    assert matchings_to_globals(ps).globals == {"a": {(("p0", "a", "p1"), ("q0", "a", "q1"))}}


def test_matchings_to_globals_checks_first(al):
    r = SequentialSystem(frozenset({"r1", "r2"}), "r1", frozenset({"r1"}), frozenset({("r1", "a", "r2")}))
    s = SequentialSystem(frozenset({"s1", "s2", "s3"}), "s1", frozenset({"s1"}),
                         frozenset({("s1", "d", "s2"), ("s1", "a", "s3"), ("s2", "a", "s3")}))
    with pytest.raises(PreconditionViolated):
        matchings_to_globals(ProductSystem(al, (r, s), matchings={"a": {("r1", "s1")}}))


# ------------------------------------------------------------ closure checks

def test_closure_counterexamples(al):
    for name, expected in (("L_4", "ab"), ("L_3", None)):
        words_ = regex_words(LANGS[name], "abcde", 6)
        assert closure_counterexample(words_, [set("abc"), set("ade")], 3) == expected
    v = direct_product_closure_check(regex_lang("L_4"), al, 3)
    assert not v and v.witness == ("a", "b")
    assert direct_product_closure_check(regex_lang("L_3"), al, 6)


def test_lp_witnesses(al):
    """The shortest witness for L_p is "ac"; "abe" (via abd and ace) is one too."""
    lp = regex_words(LANGS["L_p"], "abcde", 6)
    dist = [set("abc"), set("ade")]
    assert closure_counterexample(lp, dist, 3) == "ac"
    assert "abe" not in lp
    assert project("abe", dist[0]) == project("abd", dist[0]) and "abd" in lp
    assert project("abe", dist[1]) == project("ace", dist[1]) and "ace" in lp
    v = direct_product_closure_check(regex_lang("L_p"), al, 3)
    assert "".join(v.witness) == "ac"


# ------------------------------------------------------------- invariants

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(randoms())
def test_union_round_trip(rng):
    ps = cluster_system(rng, subset=True)
    back = union_combine(decompose_union(ps))
    assert acceptor_equal(run_graph(back), run_graph(ps))


@SETTINGS
@given(randoms())
def test_same_source_input_gives_conflict_equivalent_matchings(rng):
    ps = cluster_system(rng)
    assert check_same_source(ps)
    m = globals_to_matchings(ps)
    for a in ps.alphabet.global_letters:
        assert check_matching_wellformed(m, a)
        assert check_conflict_equivalent(m, a)


@SETTINGS
@given(randoms())
def test_live_product_moves_input_keeps_language(rng):
    ps = live_cluster_system(rng, product_moves=True)
    m = globals_to_matchings(ps)
    assert check_consistent_matchings(m)
    assert acceptor_equal(run_graph(m), run_graph(ps))


@SETTINGS
@given(randoms())
def test_matchings_to_globals_obligations(rng):
    ps = globals_to_matchings(live_cluster_system(rng, product_moves=True))
    g = matchings_to_globals(ps)
    assert check_same_source(g) and check_product_moves(g)
    assert acceptor_equal(run_graph(g), run_graph(ps))


@SETTINGS
@given(randoms())
def test_run_graph_matches_oracle(rng):
    ps = cluster_system(rng)
    data = json.loads(json.dumps(ps.to_json()))
    assert {"".join(w) for w in acceptor_language_bounded(run_graph(ps), 5)} == ps_words(data, 5)
