"""Labelled 1-bounded net systems.

Markings are frozensets of places. Firing into an already marked place is a
hard error: the library only deals with 1-bounded nets.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, islice, product

import networkx as nx

from .alphabet import (DistributedAlphabet, FiniteAcceptor, KleeneError, PreconditionViolated,
                       Verdict, YES, explore, max_states, ExplorationLimit)


class NotEnabled(KleeneError):
    pass


class BoundViolation(KleeneError):
    pass


class UnknownNode(KleeneError):
    pass


class NotSDecomposable(KleeneError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


@dataclass(frozen=True)
class Transition:
    id: str
    label: str
    pre: frozenset
    post: frozenset

    def __post_init__(self):
        object.__setattr__(self, "pre", frozenset(self.pre))
        object.__setattr__(self, "post", frozenset(self.post))
        if not self.pre or not self.post:
            raise ValueError(f"transition {self.id} needs nonempty pre- and post-set")


@dataclass(frozen=True)
class LabelledNet:
    alphabet: DistributedAlphabet
    places: frozenset
    transitions: tuple

    def __post_init__(self):
        object.__setattr__(self, "places", frozenset(self.places))
        ts = tuple(sorted(self.transitions, key=lambda t: t.id))
        object.__setattr__(self, "transitions", ts)
        ids = [t.id for t in ts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate transition ids")
        if set(ids) & self.places:
            raise ValueError("places and transitions must be disjoint")
        for t in ts:
            if t.label not in self.alphabet.letters:
                raise ValueError(f"transition {t.id}: label {t.label!r} not in the alphabet")
            if not (t.pre | t.post) <= self.places:
                raise ValueError(f"transition {t.id} touches unknown places")

    @cached_property
    def by_id(self) -> dict:
        return {t.id: t for t in self.transitions}

    @cached_property
    def place_post(self) -> dict:
        out = {p: set() for p in self.places}
        for t in self.transitions:
            for p in t.pre:
                out[p].add(t)
        return out

    @cached_property
    def place_pre(self) -> dict:
        out = {p: set() for p in self.places}
        for t in self.transitions:
            for p in t.post:
                out[p].add(t)
        return out

    def transition(self, t) -> Transition:
        if isinstance(t, Transition):
            return t
        try:
            return self.by_id[t]
        except KeyError:
            raise UnknownNode(f"no transition {t!r}") from None


@dataclass(frozen=True)
class NetSystem:
    net: LabelledNet
    initial: frozenset
    finals: frozenset

    def __post_init__(self):
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "finals", frozenset(frozenset(m) for m in self.finals))
        for m in (self.initial, *self.finals):
            if not m <= self.net.places:
                raise ValueError(f"marking {sorted(m)} mentions unknown places")

    @property
    def alphabet(self):
        return self.net.alphabet

    def to_json(self) -> dict:
        return {
            "alphabet": self.alphabet.to_json(),
            "places": sorted(self.net.places),
            "transitions": [{"id": t.id, "label": t.label, "pre": sorted(t.pre),
                             "post": sorted(t.post)} for t in self.net.transitions],
            "initial": sorted(self.initial),
            "finals": sorted(sorted(m) for m in self.finals),
        }

    @classmethod
    def from_json(cls, data) -> "NetSystem":
        alphabet = DistributedAlphabet.from_json(data["alphabet"])
        ts = [Transition(t["id"], t["label"], t["pre"], t["post"]) for t in data["transitions"]]
        net = LabelledNet(alphabet, frozenset(data["places"]), tuple(ts))
        return cls(net, frozenset(data["initial"]), frozenset(frozenset(m) for m in data["finals"]))


def enabled(net: LabelledNet, marking, t) -> bool:
    return net.transition(t).pre <= marking


def fire(sys, marking, t) -> frozenset:
    net = sys.net if isinstance(sys, NetSystem) else sys
    t = net.transition(t)
    marking = frozenset(marking)
    if not t.pre <= marking:
        raise NotEnabled(f"{t.id} is not enabled at {sorted(marking)}")
    rest = marking - t.pre
    clash = rest & t.post
    if clash:
        raise BoundViolation(f"firing {t.id} at {sorted(marking)} puts a second token on "
                             f"{sorted(clash)}")
    return rest | t.post


def _successors(net):
    def succ(m):
        for t in net.transitions:
            if t.pre <= m:
                yield t, fire(net, m, t)
    return succ


def marking_graph(sys: NetSystem) -> nx.MultiDiGraph:
    """Reachable markings with one edge per transition occurrence (key = transition id)."""
    g = nx.MultiDiGraph()
    succ = _successors(sys.net)
    g.add_node(sys.initial)
    queue = deque([sys.initial])
    limit = max_states()
    while queue:
        m = queue.popleft()
        for t, m2 in succ(m):
            if m2 not in g:
                if g.number_of_nodes() >= limit:
                    raise ExplorationLimit(f"more than {limit} reachable markings")
                queue.append(m2)
            g.add_edge(m, m2, key=t.id, label=t.label)
    return g


def reachability_graph(sys: NetSystem) -> FiniteAcceptor:
    succ = _successors(sys.net)

    def labelled(m):
        for t, m2 in succ(m):
            yield t.label, m2

    return explore([sys.initial], labelled, lambda m: m in sys.finals, sys.alphabet.letters)


@dataclass(frozen=True)
class Cluster:
    places: frozenset
    transitions: frozenset   # transition ids

    def nodes(self):
        return self.places | self.transitions


def cluster_of(net: LabelledNet, x) -> Cluster:
    if x not in net.places and x not in net.by_id:
        raise UnknownNode(f"{x!r} is neither a place nor a transition")
    places, trans = set(), set()
    stack = [x]
    while stack:
        y = stack.pop()
        if y in net.places:
            if y in places:
                continue
            places.add(y)
            stack.extend(t.id for t in net.place_post[y])
        else:
            if y in trans:
                continue
            trans.add(y)
            stack.extend(net.by_id[y].pre)
    return Cluster(frozenset(places), frozenset(trans))


def clusters(net: LabelledNet) -> list:
    seen = set()
    out = []
    for x in sorted(net.places) + [t.id for t in net.transitions]:
        if x in seen:
            continue
        c = cluster_of(net, x)
        seen |= c.nodes()
        out.append(c)
    return out


def is_free_choice(net) -> Verdict:
    net = net.net if isinstance(net, NetSystem) else net
    for c in clusters(net):
        pres = {net.by_id[t].pre for t in c.transitions}
        if len(pres) > 1:
            return Verdict(False, c)
    return YES


@dataclass(frozen=True)
class SCover:
    components: tuple   # ((places, transition ids), ...) for locations 1..k

    @property
    def k(self):
        return len(self.components)

    def places(self, i):
        return self.components[i - 1][0]

    def transitions(self, i):
        return self.components[i - 1][1]

    def marking_as_tuple(self, marking) -> tuple:
        out = []
        for i, (places, _) in enumerate(self.components, 1):
            here = sorted(set(marking) & places)
            if len(here) != 1:
                raise PreconditionViolated(
                    f"marking {sorted(marking)} marks {len(here)} places of component {i}")
            out.append(here[0])
        return tuple(out)

    @staticmethod
    def tuple_as_marking(tup) -> frozenset:
        return frozenset(tup)

    def local(self, net, t, i) -> tuple:
        """t[i]: the (pre, post) place pair of t inside component i."""
        t = net.transition(t)
        places = self.places(i)
        (p,) = t.pre & places
        (q,) = t.post & places
        return p, q


def _valid_component(net, initial, places, trans) -> bool:
    if not places:
        return False
    for t in trans:
        t = net.by_id[t]
        if len(t.pre & places) != 1 or len(t.post & places) != 1:
            return False
    for p in places:
        adj = {t.id for t in net.place_pre[p] | net.place_post[p]}
        if not adj <= trans:
            return False
    if len(initial & places) != 1:
        return False
    g = nx.Graph()
    g.add_nodes_from(places)
    g.add_nodes_from(("t", t) for t in trans)
    for t in trans:
        t = net.by_id[t]
        for p in (t.pre | t.post) & places:
            g.add_edge(p, ("t", t.id))
    return nx.is_connected(g)


EXHAUSTIVE_PLACE_LIMIT = 20
_MAX_ALTERNATIVES = 256


def _component_options(net, initial, trans, candidate, forced):
    """Valid S-components for one location: the full candidate set if it
    works, else forced places plus subsets of the rest, smallest first."""
    if _valid_component(net, initial, candidate, trans):
        yield candidate
        return
    optional = sorted(candidate - forced)
    if len(optional) > EXHAUSTIVE_PLACE_LIMIT:
        return
    for size in range(len(optional) + 1):
        for sub in combinations(optional, size):
            places = forced | frozenset(sub)
            if _valid_component(net, initial, places, trans):
                yield places


def find_s_cover(sys: NetSystem, allow_idle=False) -> SCover:
    """S-cover with T_i = λ⁻¹(Σ_i) for every location.

    A location without transitions is rejected unless allow_idle is set; it
    then receives one isolated, initially marked place of its own.
    """
    net = sys.net
    k = sys.alphabet.k
    trans = []
    for i in range(1, k + 1):
        sigma = sys.alphabet.component(i)
        t_i = frozenset(t.id for t in net.transitions if t.label in sigma)
        if not t_i and not allow_idle:
            raise NotSDecomposable(f"no transitions carry letters of location {i}", i)
        trans.append(t_i)
    adjacent = {p: {t.id for t in net.place_pre[p] | net.place_post[p]} for p in net.places}
    owners = {p: {i for i in range(k) if adjacent[p] and adjacent[p] <= trans[i]} for p in net.places}
    isolated = sorted(p for p in net.places if not adjacent[p] and p in sys.initial)
    options = []
    for i in range(k):
        if not trans[i]:
            if not isolated:
                raise NotSDecomposable(f"location {i + 1} has no transitions and no idle place", i + 1)
            options.append([frozenset([isolated.pop(0)])])
            continue
        candidate = frozenset(p for p in net.places if i in owners[p])
        forced = frozenset(p for p in candidate if owners[p] == {i})
        opts = list(islice(_component_options(net, sys.initial, trans[i], candidate, forced),
                           _MAX_ALTERNATIVES))
        if not opts:
            raise NotSDecomposable(f"no S-component found for location {i + 1}", i + 1)
        options.append(opts)
    best = None
    for combo in product(*options):
        covered = frozenset().union(*combo)
        if covered == net.places:
            return SCover(tuple(zip(combo, trans)))
        if best is None:
            best = covered
    missing = sorted(net.places - best)
    raise NotSDecomposable(f"places {missing} are in no S-component")


@dataclass(frozen=True)
class PostAnalysis:
    letter: str
    locations: tuple
    post: frozenset        # {π(t)}
    projections: dict      # i -> C_a[i]
    postdecomp: frozenset


def pi(net, cover: SCover, t) -> tuple:
    t = net.transition(t)
    locs = sorted(net.alphabet.loc(t.label))
    out = []
    for i in locs:
        (q,) = t.post & cover.places(i)
        out.append(q)
    return tuple(out)


def cluster_post_analysis(net, cover: SCover, c: Cluster, a) -> PostAnalysis:
    net = net.net if isinstance(net, NetSystem) else net
    locs = tuple(sorted(net.alphabet.loc(a)))
    ts = [net.by_id[t] for t in sorted(c.transitions) if net.by_id[t].label == a]
    post = frozenset(pi(net, cover, t) for t in ts)
    projections = {i: frozenset(tup[j] for tup in post) for j, i in enumerate(locs)}
    if post:
        decomp = frozenset(product(*(sorted(projections[i]) for i in locs)))
    else:
        decomp = frozenset()
    return PostAnalysis(a, locs, post, projections, decomp)


def has_distributed_choice(sys: NetSystem, cover: SCover | None = None) -> Verdict:
    net = sys.net
    if not is_free_choice(net):
        raise PreconditionViolated("distributed choice is defined for free choice nets")
    cover = cover or find_s_cover(sys)
    for c in clusters(net):
        for a in sorted({net.by_id[t].label for t in c.transitions}):
            pa = cluster_post_analysis(net, cover, c, a)
            missing = sorted(pa.postdecomp - pa.post)
            if missing:
                return Verdict(False, (c, a, missing[0]))
    return YES


def finals_as_tuples(sys: NetSystem, cover: SCover) -> frozenset:
    return frozenset(cover.marking_as_tuple(m) for m in sys.finals)


def finals_product_condition(sys: NetSystem, cover: SCover | None = None) -> Verdict:
    cover = cover or find_s_cover(sys)
    finals = finals_as_tuples(sys, cover)
    per_loc = [sorted({g[i] for g in finals}) for i in range(cover.k)]
    if not finals:
        return YES
    for tup in product(*per_loc):
        if tup not in finals:
            return Verdict(False, tup)
    return YES


def is_live(sys: NetSystem) -> Verdict:
    """Every transition stays re-enableable from every reachable marking.

    Equivalent to: every bottom strongly connected component of the marking
    graph enables every transition somewhere.
    """
    g = marking_graph(sys)
    cond = nx.condensation(g)
    for node in cond.nodes:
        if cond.out_degree(node):
            continue
        members = cond.nodes[node]["members"]
        for t in sys.net.transitions:
            if not any(t.pre <= m for m in members):
                m = min(members, key=lambda m: sorted(m))
                return Verdict(False, (sorted(m), t.id))
    return YES
