"""Sequential systems and product systems over a distributed alphabet.

A product state is a k-tuple of local states. A local move is a triple
(p, a, q). A global a-move is a tuple of local a-moves ordered by the
locations of a. Matchings and globals are dicts from letters to sets of
tuples; a system without globals behaves as if globals(a) were the full
product of local a-moves.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property
from itertools import product

import networkx as nx

from .alphabet import (DistributedAlphabet, FiniteAcceptor, MissingAnnotation,
                       PreconditionViolated, Verdict, YES, acceptor_equal, explore,
                       project_acceptor, shuffle_acceptor, max_states, ExplorationLimit)

PRODUCT = "product"
SUBSET = "subset"


@dataclass(frozen=True)
class SequentialSystem:
    states: frozenset
    initial: object
    finals: frozenset
    moves: frozenset

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "moves", frozenset(tuple(m) for m in self.moves))
        if self.initial not in self.states:
            raise ValueError(f"initial state {self.initial!r} is not a state")
        if not self.finals <= self.states:
            raise ValueError("final states must be states")
        for p, _, q in self.moves:
            if p not in self.states or q not in self.states:
                raise ValueError(f"move {(p, q)} leaves the state set")

    @cached_property
    def out(self) -> dict:
        out: dict = {}
        for m in sorted(self.moves):
            out.setdefault(m[0], []).append(m)
        return out

    def moves_from(self, p, a=None) -> list:
        return [m for m in self.out.get(p, []) if a is None or m[1] == a]

    def labels_from(self, p) -> frozenset:
        return frozenset(m[1] for m in self.out.get(p, []))

    def pre_states(self, a) -> frozenset:
        return frozenset(p for p, b, _ in self.moves if b == a)

    def acceptor(self) -> FiniteAcceptor:
        return FiniteAcceptor(self.states, self.initial, self.moves, self.finals)


def _freeze_rel(rel):
    if rel is None:
        return None
    return {a: frozenset(tuple(tuple(x) if isinstance(x, list) else x for x in t) for t in ts)
            for a, ts in rel.items()}


@dataclass(frozen=True, eq=False)
class ProductSystem:
    alphabet: DistributedAlphabet
    components: tuple
    mode: str = PRODUCT
    subset_finals: frozenset = frozenset()
    matchings: dict | None = None
    globals: dict | None = None
    initials: frozenset | None = None   # several initial product states, see union_combine

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "subset_finals", frozenset(tuple(g) for g in self.subset_finals))
        object.__setattr__(self, "matchings", _freeze_rel(self.matchings))
        glob = self.globals
        if glob is not None:
            glob = {a: frozenset(tuple(tuple(m) for m in g) for g in gs) for a, gs in glob.items()}
        object.__setattr__(self, "globals", glob)
        if self.initials is not None:
            object.__setattr__(self, "initials", frozenset(tuple(r) for r in self.initials))
        if len(self.components) != self.alphabet.k:
            raise ValueError("need one sequential system per location")
        if self.mode not in (PRODUCT, SUBSET):
            raise ValueError(f"unknown acceptance mode {self.mode!r}")
        for i, comp in enumerate(self.components, 1):
            for p, a, q in comp.moves:
                if a not in self.alphabet.component(i):
                    raise ValueError(f"component {i}: move label {a!r} not in Σ_{i}")
        if self.mode == SUBSET:
            for g in self.subset_finals:
                if len(g) != self.alphabet.k or any(
                        g[i] not in c.finals for i, c in enumerate(self.components)):
                    raise ValueError(f"subset final {g} is not in the product of local finals")
        if self.globals is not None:
            for a, gs in self.globals.items():
                locs = sorted(self.alphabet.loc(a))
                if not locs:
                    raise ValueError(f"globals for unknown letter {a!r}")
                for g in gs:
                    if len(g) != len(locs):
                        raise ValueError(f"global {g} has wrong arity for {a!r}")
                    for i, m in zip(locs, g):
                        if m[1] != a or m not in self.components[i - 1].moves:
                            raise ValueError(f"global {g}: {m} is not a local {a}-move of "
                                             f"component {i}")
        if self.matchings is not None:
            for a, ts in self.matchings.items():
                n = len(self.alphabet.loc(a))
                if any(len(t) != n for t in ts):
                    raise ValueError(f"matching tuple of wrong arity for {a!r}")
        if self.initials is not None:
            for r in self.initials:
                if len(r) != self.alphabet.k or any(
                        p not in c.states for p, c in zip(r, self.components)):
                    raise ValueError(f"initial product state {r} is invalid")

    @property
    def k(self):
        return self.alphabet.k

    @cached_property
    def initial_states(self) -> tuple:
        if self.initials is not None:
            return tuple(sorted(self.initials))
        return (tuple(c.initial for c in self.components),)

    def is_final(self, state) -> bool:
        if self.mode == SUBSET:
            return state in self.subset_finals
        return all(p in c.finals for p, c in zip(state, self.components))

    @cached_property
    def final_states(self) -> frozenset:
        if self.mode == SUBSET:
            return self.subset_finals
        return frozenset(product(*(sorted(c.finals) for c in self.components)))

    def locs(self, a) -> tuple:
        return tuple(sorted(self.alphabet.loc(a)))

    def local_moves(self, a) -> list:
        """Per location of a, the sorted local a-moves."""
        return [sorted(m for m in self.components[i - 1].moves if m[1] == a)
                for i in self.locs(a)]

    def global_moves(self, a) -> frozenset:
        """The move relation ⇒_a: globals(a) for global letters when present,
        else every combination of local a-moves."""
        if self.globals is not None and self.alphabet.is_global(a):
            return self.globals.get(a, frozenset())
        return frozenset(product(*self.local_moves(a)))

    def all_global_moves(self) -> list:
        return [(a, g) for a in self.alphabet.sorted_letters() for g in sorted(self.global_moves(a))]

    @cached_property
    def _index(self) -> dict:
        """letter -> pre-state tuple -> list of globals."""
        out = {}
        for a in self.alphabet.sorted_letters():
            by_pre = {}
            for g in sorted(self.global_moves(a)):
                by_pre.setdefault(tuple(m[0] for m in g), []).append(g)
            out[a] = by_pre
        return out

    def steps(self, state):
        """Yield (letter, global move, next state) from a product state."""
        for a in self.alphabet.sorted_letters():
            locs = self.locs(a)
            pre = tuple(state[i - 1] for i in locs)
            for g in self._index[a].get(pre, ()):
                nxt = list(state)
                for i, m in zip(locs, g):
                    nxt[i - 1] = m[2]
                yield a, g, tuple(nxt)

    def with_(self, **changes) -> "ProductSystem":
        return replace(self, **changes)

    def to_json(self) -> dict:
        out = {
            "alphabet": self.alphabet.to_json(),
            "components": [{"states": sorted(c.states), "initial": c.initial,
                            "finals": sorted(c.finals),
                            "moves": [list(m) for m in sorted(c.moves)]}
                           for c in self.components],
            "acceptance": ({"mode": SUBSET, "finals": [list(g) for g in sorted(self.subset_finals)]}
                           if self.mode == SUBSET else {"mode": PRODUCT}),
        }
        if self.matchings is not None:
            out["matchings"] = {a: [list(t) for t in sorted(ts)]
                                for a, ts in sorted(self.matchings.items())}
        if self.globals is not None:
            out["globals"] = {a: [[list(m) for m in g] for g in sorted(gs)]
                              for a, gs in sorted(self.globals.items())}
        if self.initials is not None:
            out["initials"] = [list(r) for r in sorted(self.initials)]
        return out

    @classmethod
    def from_json(cls, data) -> "ProductSystem":
        alphabet = DistributedAlphabet.from_json(data["alphabet"])
        comps = tuple(SequentialSystem(frozenset(c["states"]), c["initial"], frozenset(c["finals"]),
                                       frozenset(tuple(m) for m in c["moves"]))
                      for c in data["components"])
        acc = data.get("acceptance", {"mode": PRODUCT})
        mode = acc.get("mode", PRODUCT)
        finals = frozenset(tuple(g) for g in acc.get("finals", [])) if mode == SUBSET else frozenset()
        matchings = data.get("matchings")
        if matchings is not None:
            matchings = {a: frozenset(tuple(t) for t in ts) for a, ts in matchings.items()}
        glob = data.get("globals")
        if glob is not None:
            glob = {a: frozenset(tuple(tuple(m) for m in g) for g in gs) for a, gs in glob.items()}
        initials = data.get("initials")
        if initials is not None:
            initials = frozenset(tuple(r) for r in initials)
        return cls(alphabet, comps, mode, finals, matchings, glob, initials)


def run_graph(ps: ProductSystem) -> FiniteAcceptor:
    def successors(state):
        for a, _, nxt in ps.steps(state):
            yield a, nxt

    return explore(list(ps.initial_states), successors, ps.is_final, ps.alphabet.letters)


def _explore_with_words(ps: ProductSystem):
    """Reachable product states with their shortlex-least access words."""
    words = {}
    queue = deque()
    for r in ps.initial_states:
        if r not in words:
            words[r] = ()
            queue.append(r)
    limit = max_states()
    while queue:
        r = queue.popleft()
        for a, _, nxt in ps.steps(r):
            if nxt not in words:
                words[nxt] = words[r] + (a,)
                if len(words) > limit:
                    raise ExplorationLimit(f"more than {limit} product states")
                queue.append(nxt)
    return words


def reachable_states(ps: ProductSystem) -> dict:
    return _explore_with_words(ps)


def _need(ps, attr):
    if getattr(ps, attr) is None:
        raise MissingAnnotation(f"the system carries no {attr}")


def check_matching_wellformed(ps: ProductSystem, a) -> Verdict:
    _need(ps, "matchings")
    tuples = ps.matchings.get(a, frozenset())
    locs = ps.locs(a)
    for j, i in enumerate(locs):
        pre = ps.components[i - 1].pre_states(a)
        proj = [t[j] for t in tuples]
        if set(proj) != pre:
            missing = sorted(pre - set(proj)) or sorted(set(proj) - pre)
            return Verdict(False, (i, missing[0]), "projection differs from the pre-states")
        if len(proj) != len(set(proj)):
            dup = sorted(p for p in set(proj) if proj.count(p) > 1)[0]
            return Verdict(False, (i, dup), "state in two tuples")
    return YES


def check_conflict_equivalent(ps: ProductSystem, a) -> Verdict:
    _need(ps, "matchings")
    locs = ps.locs(a)
    for t in sorted(ps.matchings.get(a, ())):
        labels = [ps.components[i - 1].labels_from(p) for i, p in zip(locs, t)]
        for x in range(len(t)):
            for y in range(len(t)):
                diff = sorted(labels[x] - labels[y])
                if diff:
                    return Verdict(False, (t[x], t[y], diff[0]))
    return YES


def check_consistent_matchings(ps: ProductSystem) -> Verdict:
    _need(ps, "matchings")
    words = _explore_with_words(ps)
    for r in sorted(words, key=lambda r: (len(words[r]), words[r])):
        for a in ps.alphabet.global_letters:
            locs = ps.locs(a)
            if all(ps.components[i - 1].moves_from(r[i - 1], a) for i in locs):
                proj = tuple(r[i - 1] for i in locs)
                if proj not in ps.matchings.get(a, frozenset()):
                    return Verdict(False, (words[r], a, proj))
    return YES


def pre_set(ps, a, g) -> frozenset:
    return frozenset((i, m[0]) for i, m in zip(ps.locs(a), g))


def check_same_source(ps: ProductSystem) -> Verdict:
    """Globals sharing a pre-state share all pre-states.

    Local-letter moves count as one-location globals, so a state offering a
    local move and a synchronisation at once violates the property.
    """
    _need(ps, "globals")
    owner = {}
    for a, g in ps.all_global_moves():
        pre = pre_set(ps, a, g)
        for x in pre:
            seen = owner.setdefault(x, (pre, (a, g)))
            if seen[0] != pre:
                return Verdict(False, (seen[1], (a, g)))
    return YES


@dataclass(frozen=True)
class Compartment:
    letter: str
    pre: tuple
    members: frozenset
    locations: tuple

    @cached_property
    def post(self) -> frozenset:
        return frozenset(tuple(m[2] for m in g) for g in self.members)

    @cached_property
    def projections(self) -> tuple:
        return tuple(frozenset(t[j] for t in self.post) for j in range(len(self.locations)))

    @cached_property
    def postdecomp(self) -> frozenset:
        return frozenset(product(*(sorted(p) for p in self.projections)))


def compartments(ps: ProductSystem, a) -> list:
    if not check_same_source(ps):
        raise PreconditionViolated("compartments need the same source property")
    by_pre = {}
    for g in ps.global_moves(a):
        by_pre.setdefault(tuple(m[0] for m in g), set()).add(g)
    return [Compartment(a, pre, frozenset(gs), ps.locs(a)) for pre, gs in sorted(by_pre.items())]


def check_product_moves(ps: ProductSystem) -> Verdict:
    for a in ps.alphabet.sorted_letters():
        for c in compartments(ps, a):
            missing = sorted(c.postdecomp - c.post)
            if missing:
                return Verdict(False, missing[0])
    return YES


def _bottom_sccs(ps: ProductSystem):
    g = nx.DiGraph()
    for r in ps.initial_states:
        g.add_node(r)
    for r in list(_explore_with_words(ps)):
        g.add_node(r)
        for _, _, nxt in ps.steps(r):
            g.add_edge(r, nxt)
    cond = nx.condensation(g)
    return [cond.nodes[n]["members"] for n in cond.nodes if cond.out_degree(n) == 0]


def check_ps_live(ps: ProductSystem) -> Verdict:
    _need(ps, "globals")
    bottoms = _bottom_sccs(ps)
    for a, g in ps.all_global_moves():
        locs = ps.locs(a)
        pre = tuple(m[0] for m in g)
        for members in bottoms:
            if not any(tuple(r[i - 1] for i in locs) == pre for r in members):
                return Verdict(False, (a, g))
    return YES


def decompose_union(ps: ProductSystem) -> list:
    if ps.mode != SUBSET:
        raise PreconditionViolated("decompose_union needs subset acceptance")
    out = []
    for g in sorted(ps.subset_finals):
        comps = tuple(replace(c, finals=frozenset([g[i]])) for i, c in enumerate(ps.components))
        out.append(replace(ps, components=comps, mode=PRODUCT, subset_finals=frozenset()))
    return out


def _same_structure(systems) -> bool:
    first = systems[0]
    for s in systems[1:]:
        if s.initials != first.initials or s.globals != first.globals \
                or s.matchings != first.matchings:
            return False
        for c1, c2 in zip(first.components, s.components):
            if (c1.states, c1.initial, c1.moves) != (c2.states, c2.initial, c2.moves):
                return False
    return True


def _tag(p, j):
    return f"{p}#{j}"


def union_combine(systems) -> ProductSystem:
    """Subset-acceptance system whose language is the union of the inputs'.

    Summands sharing components, initial state and annotations are merged by
    uniting their final tuples. Otherwise component states are tagged with the
    summand index and the result starts from one initial tuple per summand.
    """
    systems = list(systems)
    if not systems:
        raise ValueError("need at least one system")
    alphabet = systems[0].alphabet
    for s in systems:
        if s.alphabet != alphabet:
            raise PreconditionViolated("all summands must share the distribution")
        if s.initials is not None and len(s.initials) != 1:
            raise PreconditionViolated("summands must have a single initial state")
    if _same_structure(systems):
        base = systems[0]
        finals = frozenset().union(*(s.final_states for s in systems))
        comps = tuple(replace(c, finals=frozenset(g[i] for g in finals) if finals else frozenset())
                      for i, c in enumerate(base.components))
        return replace(base, components=comps, mode=SUBSET, subset_finals=finals)
    comps = []
    for i in range(alphabet.k):
        states, finals, moves = set(), set(), set()
        for j, s in enumerate(systems, 1):
            c = s.components[i]
            states |= {_tag(p, j) for p in c.states}
            finals |= {_tag(p, j) for p in c.finals}
            moves |= {(_tag(p, j), a, _tag(q, j)) for p, a, q in c.moves}
        comps.append(SequentialSystem(frozenset(states), _tag(systems[0].components[i].initial, 1),
                                      frozenset(finals), frozenset(moves)))
    finals = frozenset(tuple(_tag(p, j) for p in g)
                       for j, s in enumerate(systems, 1) for g in s.final_states)
    initials = frozenset(tuple(_tag(p, j) for p in s.initial_states[0])
                         for j, s in enumerate(systems, 1))
    glob = None
    if any(s.globals is not None for s in systems):
        glob = {}
        for j, s in enumerate(systems, 1):
            for a in alphabet.global_letters:
                for g in s.global_moves(a):
                    glob.setdefault(a, set()).add(tuple((_tag(p, j), b, _tag(q, j)) for p, b, q in g))
    match = None
    if any(s.matchings is not None for s in systems):
        match = {}
        for j, s in enumerate(systems, 1):
            for a, ts in (s.matchings or {}).items():
                match.setdefault(a, set()).update(tuple(_tag(p, j) for p in t) for t in ts)
    return ProductSystem(alphabet, tuple(comps), SUBSET, finals, match, glob, initials)


def summand_of_states(ps: ProductSystem) -> list:
    """For a multi-initial system: per component, state -> index of the initial
    tuple it is reachable from (None if ambiguous or unreachable)."""
    out = []
    for i, comp in enumerate(ps.components):
        owner = {}
        for j, r in enumerate(ps.initial_states):
            stack = [r[i]]
            seen = set()
            while stack:
                p = stack.pop()
                if p in seen:
                    continue
                seen.add(p)
                owner.setdefault(p, set()).add(j)
                stack.extend(m[2] for m in comp.moves_from(p))
        out.append({p: (next(iter(js)) if len(js) == 1 else None) for p, js in owner.items()})
    return out


def merge_initials(ps: ProductSystem, complete_compartments=True) -> ProductSystem:
    """Equivalent system with a single initial product state.

    Before its first synchronisation a component may still belong to any
    summand, so it is tracked as the set of candidate local states (a subset
    construction over local letters). A global move commits its participants
    to concrete states. Only globals enabled at reachable product states are
    kept. With complete_compartments, compartments at uncommitted states are
    closed under recombination using targets of different summands: such moves
    lead to states from which no final tuple is reachable, so the language is
    unchanged while the product moves property is restored.
    """
    if len(ps.initial_states) == 1:
        return ps
    alphabet = ps.alphabet
    k = ps.k
    summand = summand_of_states(ps)

    def name(x):
        if isinstance(x, frozenset):
            return "{" + ",".join(sorted(x)) + "}"
        return x

    def local_succ(i, x, a):
        comp = ps.components[i]
        if isinstance(x, frozenset):
            nxt = frozenset(m[2] for p in x for m in comp.moves_from(p, a))
            if not nxt:
                return []
            if len(nxt) == 1:
                return [next(iter(nxt))]
            return [nxt]
        return [m[2] for m in comp.moves_from(x, a)]

    def members(x):
        return x if isinstance(x, frozenset) else frozenset([x])

    start = tuple(frozenset(r[i] for r in ps.initial_states) for i in range(k))
    start = tuple(next(iter(x)) if len(x) == 1 else x for x in start)

    def steps(state):
        for a in alphabet.sorted_letters():
            locs = ps.locs(a)
            if len(locs) == 1:
                i = locs[0] - 1
                for y in local_succ(i, state[i], a):
                    nxt = list(state)
                    nxt[i] = y
                    yield a, None, tuple(nxt)
                continue
            for g in sorted(ps.global_moves(a)):
                if all(m[0] in members(state[i - 1]) for i, m in zip(locs, g)):
                    nxt = list(state)
                    for i, m in zip(locs, g):
                        nxt[i - 1] = m[2]
                    yield a, g, tuple(nxt)

    seen = {start}
    queue = deque([start])
    edges = []
    while queue:
        r = queue.popleft()
        for a, g, nxt in steps(r):
            edges.append((r, a, g, nxt))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)

    states = [set() for _ in range(k)]
    moves = [set() for _ in range(k)]
    glob = {}
    for r, a, g, nxt in edges:
        locs = ps.locs(a)
        tup = tuple((name(r[i - 1]), a, name(nxt[i - 1])) for i in locs)
        for (i, m) in zip(locs, tup):
            moves[i - 1].add(m)
        if len(locs) > 1:
            glob.setdefault(a, set()).add(tup)
    for r in seen:
        for i in range(k):
            states[i].add(name(r[i]))

    if complete_compartments:
        for a, gs in list(glob.items()):
            by_pre = {}
            for g in gs:
                by_pre.setdefault(tuple(m[0] for m in g), set()).add(g)
            locs = ps.locs(a)
            for pre, members_ in by_pre.items():
                targets = [sorted({g[j][2] for g in members_}) for j in range(len(locs))]
                for combo in product(*targets):
                    owners = {summand[i - 1].get(q) for i, q in zip(locs, combo)}
                    if len(owners) > 1:
                        g = tuple((p, a, q) for p, q in zip(pre, combo))
                        if g not in gs:
                            gs.add(g)
                            for i, m in zip(locs, g):
                                moves[i - 1].add(m)

    def is_final(r):
        return any(all(g[i] in members(r[i]) for i in range(k)) for g in ps.final_states)

    finals = frozenset(tuple(name(x) for x in r) for r in seen if is_final(r))
    comps = []
    for i in range(k):
        comp_finals = frozenset(g[i] for g in finals)
        comps.append(SequentialSystem(frozenset(states[i]), name(start[i]), comp_finals,
                                      frozenset(moves[i])))
    has_globals = ps.globals is not None
    out = ProductSystem(alphabet, tuple(comps), SUBSET, finals,
                        None, glob if has_globals else None, None)
    if not has_globals:
        # a plain product would reintroduce mixed combinations at any state
        out = replace(out, globals={a: frozenset(v) for a, v in glob.items()})
    return out


def _matchings_from_globals(ps, glob):
    out = {}
    for a in ps.alphabet.global_letters:
        out[a] = frozenset(tuple(m[0] for m in g) for g in glob.get(a, ()))
    return out


def globals_to_matchings(ps: ProductSystem) -> ProductSystem:
    _need(ps, "globals")
    match = _matchings_from_globals(ps, {a: ps.global_moves(a) for a in ps.alphabet.global_letters})
    return replace(ps, matchings=match, globals=None)


def matchings_to_globals(ps: ProductSystem, check=True) -> ProductSystem:
    _need(ps, "matchings")
    if check:
        for a in ps.alphabet.global_letters:
            for checker in (check_matching_wellformed, check_conflict_equivalent):
                v = checker(ps, a)
                if not v:
                    raise PreconditionViolated(f"{checker.__name__} fails for {a!r}: {v.witness}")
        v = check_consistent_matchings(ps)
        if not v:
            raise PreconditionViolated(f"matchings are not consistent: {v.witness}")
    glob = {}
    for a in ps.alphabet.global_letters:
        locs = ps.locs(a)
        gs = set()
        for t in sorted(ps.matchings.get(a, ())):
            per = [ps.components[i - 1].moves_from(p, a) for i, p in zip(locs, t)]
            gs.update(product(*per))
        glob[a] = frozenset(gs)
    return replace(ps, globals=glob, matchings=None)


def direct_product_closure(acc: FiniteAcceptor, alphabet: DistributedAlphabet) -> FiniteAcceptor:
    """Acceptor for the shuffle of the projections of L onto each Σ_i."""
    parts = [project_acceptor(acc, alphabet.component(i)) for i in range(1, alphabet.k + 1)]
    return shuffle_acceptor(parts, alphabet)


def direct_product_closure_check(acc: FiniteAcceptor, alphabet: DistributedAlphabet, n: int) -> Verdict:
    """Shortlex-least word of length ≤ n in the closure but not in L.

    The closure always contains L, so a missing word certifies that L is not
    a direct product language.
    """
    closure = direct_product_closure(acc, alphabet)
    start = (frozenset([closure.initial]), frozenset([acc.initial]))
    layer = {start: ()}
    seen = {start}
    letters = alphabet.sorted_letters()
    for length in range(n + 1):
        for (c, l), w in sorted(layer.items(), key=lambda kv: kv[1]):
            if c & closure.accepting and not l & acc.accepting:
                return Verdict(False, w)
        if length == n:
            break
        nxt = {}
        for (c, l), w in sorted(layer.items(), key=lambda kv: kv[1]):
            for a in letters:
                c2 = closure.step(c, a)
                if not c2:
                    continue
                pair = (c2, acc.step(l, a))
                if pair not in seen:
                    seen.add(pair)
                    nxt[pair] = w + (a,)
        layer = nxt
    return Verdict(True, note=f"closed up to length {n}")


def language_equal(ps1, ps2) -> Verdict:
    return acceptor_equal(run_graph(ps1), run_graph(ps2))
