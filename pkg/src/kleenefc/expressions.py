"""Regular expressions with Antimirov derivatives, and connected expressions.

Regex values are immutable and always normalized: concatenation is
right-associated, 1·s = s·1 = s, 0·s = s·0 = 0, sums are flattened, drop 0
and are deduplicated and sorted. A normalized regex is identified by its
printed form, which makes equality and hashing cheap.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import combinations, product

import networkx as nx

from .alphabet import (DistributedAlphabet, FiniteAcceptor, KleeneError, PreconditionViolated,
                       Verdict, YES, explore, acceptor_language_bounded, union_acceptor)


class ParseError(KleeneError):
    def __init__(self, message, pos=None):
        super().__init__(message if pos is None else f"{message} at offset {pos}")
        self.pos = pos


class MalformedPairing(KleeneError):
    pass


class MalformedCables(KleeneError):
    pass


# ---------------------------------------------------------------- regex AST

class Regex:
    __slots__ = ("_s", "_h", "nullable", "first")

    def _init(self, s, nullable, first):
        self._s = s
        self._h = hash((type(self).__name__, s))
        self.nullable = nullable
        self.first = first

    def __eq__(self, other):
        return type(other) is type(self) and other._s == self._s

    def __hash__(self):
        return self._h

    def __lt__(self, other):
        return (len(self._s), self._s) < (len(other._s), other._s)

    def __str__(self):
        return self._s

    def __repr__(self):
        return f"<{self._s}>"


class Zero(Regex):
    __slots__ = ()

    def __init__(self):
        self._init("0", False, frozenset())


class One(Regex):
    __slots__ = ()

    def __init__(self):
        self._init("1", True, frozenset())


_BARE = re.compile(r"[A-Za-z2-9]\Z")


def _letter_text(name):
    if _BARE.match(name):
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


class Sym(Regex):
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name
        self._init(_letter_text(name), False, frozenset([name]))


class Cat(Regex):
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left, self.right = left, right
        text = _wrap(left, Sum) + _wrap(right, Sum)
        first = left.first | right.first if left.nullable else left.first
        self._init(text, left.nullable and right.nullable, first)


class Sum(Regex):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = terms
        self._init("+".join(t._s for t in terms), any(t.nullable for t in terms),
                   frozenset().union(*(t.first for t in terms)))


class Star(Regex):
    __slots__ = ("body",)

    def __init__(self, body):
        self.body = body
        self._init(_wrap(body, (Sum, Cat)) + "*", True, body.first)


def _wrap(r, kinds):
    return f"({r._s})" if isinstance(r, kinds) else r._s


ZERO = Zero()
ONE = One()


def sym(name) -> Regex:
    return Sym(name)


def cat(left, right) -> Regex:
    if isinstance(left, Zero) or isinstance(right, Zero):
        return ZERO
    if isinstance(left, One):
        return right
    if isinstance(right, One):
        return left
    if isinstance(left, Cat):
        return cat(left.left, cat(left.right, right))
    return Cat(left, right)


def cat_all(*parts) -> Regex:
    out = ONE
    for p in reversed(parts):
        out = cat(p, out)
    return out


def alt(*terms) -> Regex:
    flat = {}
    for t in terms:
        for u in (t.terms if isinstance(t, Sum) else (t,)):
            if not isinstance(u, Zero):
                flat[u._s] = u
    if not flat:
        return ZERO
    if len(flat) == 1:
        return next(iter(flat.values()))
    return Sum(tuple(flat[k] for k in sorted(flat)))


def star(body) -> Regex:
    return Star(body)


def letters_of(s) -> frozenset:
    if isinstance(s, Sym):
        return frozenset([s.name])
    if isinstance(s, Cat):
        return letters_of(s.left) | letters_of(s.right)
    if isinstance(s, Sum):
        return frozenset().union(*(letters_of(t) for t in s.terms))
    if isinstance(s, Star):
        return letters_of(s.body)
    return frozenset()


def rename(s, mapping) -> Regex:
    """Replace letters by mapping[name] (letters missing from mapping are kept)."""
    if isinstance(s, Sym):
        return sym(mapping.get(s.name, s.name))
    if isinstance(s, Cat):
        return cat(rename(s.left, mapping), rename(s.right, mapping))
    if isinstance(s, Sum):
        return alt(*(rename(t, mapping) for t in s.terms))
    if isinstance(s, Star):
        return star(rename(s.body, mapping))
    return s


def width(s) -> int:
    """Alphabetic width: number of letter occurrences."""
    if isinstance(s, Sym):
        return 1
    if isinstance(s, Cat):
        return width(s.left) + width(s.right)
    if isinstance(s, Sum):
        return sum(width(t) for t in s.terms)
    if isinstance(s, Star):
        return width(s.body)
    return 0


# ------------------------------------------------------------- derivatives

@lru_cache(maxsize=None)
def der(s: Regex, a) -> frozenset:
    """Antimirov partial derivatives Der_a(s)."""
    if isinstance(s, Sym):
        return frozenset([ONE]) if s.name == a else frozenset()
    if isinstance(s, Sum):
        return frozenset().union(*(der(t, a) for t in s.terms))
    if isinstance(s, Cat):
        out = {cat(d, s.right) for d in der(s.left, a)}
        if s.left.nullable:
            out |= der(s.right, a)
        return frozenset(out - {ZERO})
    if isinstance(s, Star):
        return frozenset(cat(d, s) for d in der(s.body, a)) - {ZERO}
    return frozenset()


der_a = der


def der_set(ds, a) -> frozenset:
    return frozenset().union(*(der(d, a) for d in ds)) if ds else frozenset()


def der_word(s, w) -> frozenset:
    current = frozenset([s]) if isinstance(s, Regex) else frozenset(s)
    for a in w:
        current = der_set(current, a)
    return current


def init(ds) -> frozenset:
    if isinstance(ds, Regex):
        return ds.first
    return frozenset().union(*(d.first for d in ds)) if ds else frozenset()


@lru_cache(maxsize=None)
def all_derivatives(s: Regex) -> frozenset:
    """Der(s): every derivative reachable by some word, s included."""
    letters = sorted(letters_of(s))
    seen = {s}
    stack = [s]
    while stack:
        d = stack.pop()
        for a in letters:
            for d2 in der(d, a):
                if d2 not in seen:
                    seen.add(d2)
                    stack.append(d2)
    return frozenset(seen)


def sites(s, a) -> frozenset:
    return frozenset(d for d in all_derivatives(s) if a in d.first)


def regex_acceptor(s: Regex, letters=()) -> FiniteAcceptor:
    letters = sorted(set(letters) | letters_of(s))

    def successors(d):
        for a in letters:
            for d2 in sorted(der(d, a)):
                yield a, d2

    return explore([s], successors, lambda d: d.nullable, letters)


def nullable_in(ds) -> bool:
    return any(d.nullable for d in ds)


# ----------------------------------------------------------------- Part_a

def _subst(block, old, new):
    return frozenset(new if d == old else d for d in block)


def _part_raw(s, a) -> list:
    if isinstance(s, Sym):
        return [frozenset([s])] if s.name == a else []
    if isinstance(s, Star):
        blocks = [frozenset(cat(d, s) for d in b) for b in _part_raw(s.body, a)]
        target = cat(s.body, s)
        return [_subst(b, target, s) for b in blocks]
    if isinstance(s, Cat):
        left = [frozenset(cat(d, s.right) for d in b) for b in _part_raw(s.left, a)]
        right = _part_raw(s.right, a)
        if s.left.nullable and not s.right.nullable:
            right = [_subst(b, s.right, s) for b in right]
        return left + right
    if isinstance(s, Sum):
        if a not in s.first:
            return [b for t in s.terms for b in _part_raw(t, a)]
        derivs = der(s, a)
        blocks, merged = [], {s}
        for t in s.terms:
            for b in _part_raw(t, a):
                if t in b and t not in derivs:
                    merged |= b - {t}
                else:
                    blocks.append(b)
        return blocks + [frozenset(merged)]
    return []


@lru_cache(maxsize=None)
def part_a(s: Regex, a) -> frozenset:
    """Partition of the a-sites of s into blocks.

    The recursive rules produce blocks that may mention derivatives of
    subterms which are not derivatives of s, or overlap after substitution.
    The result is restricted to the actual a-sites, overlapping blocks are
    merged and any a-site left out becomes a singleton block.
    """
    wanted = sites(s, a)
    blocks = [set(b & wanted) for b in _part_raw(s, a)]
    blocks = [b for b in blocks if b]
    g = nx.Graph()
    g.add_nodes_from(wanted)
    for b in blocks:
        b = sorted(b)
        g.add_edges_from(zip(b, b[1:]))
    return frozenset(frozenset(c) for c in nx.connected_components(g))


def block_of(s, a, d):
    for b in part_a(s, a):
        if d in b:
            return b
    return None


@dataclass(frozen=True)
class Duct:
    block: frozenset
    effect: frozenset

    def __post_init__(self):
        object.__setattr__(self, "block", frozenset(self.block))
        object.__setattr__(self, "effect", frozenset(self.effect))


def ducts_a(s, a) -> frozenset:
    out = set()
    for b in part_a(s, a):
        effects = sorted(der_set(b, a))
        for size in range(1, len(effects) + 1):
            for e in combinations(effects, size):
                out.add(Duct(b, frozenset(e)))
    return frozenset(out)


# --------------------------------------------------- bounded semantic checks

def _prefix_walk(s, n):
    """(x, Der_x(s)) for all words x of length ≤ n with a nonempty derivative set."""
    letters = sorted(letters_of(s))
    out = []
    stack = [((), frozenset([s]))]
    while stack:
        x, ds = stack.pop()
        out.append((x, ds))
        if len(x) == n:
            continue
        for a in letters:
            nxt = der_set(ds, a)
            if nxt:
                stack.append((x + (a,), nxt))
    return out


def _accepted_suffixes(ds, n, letters):
    out = set()
    stack = [((), frozenset(ds))]
    while stack:
        y, cur = stack.pop()
        if nullable_in(cur):
            out.add(y)
        if len(y) == n:
            continue
        for b in letters:
            nxt = der_set(cur, b)
            if nxt:
                stack.append((y + (b,), nxt))
    return out


def _relativized_check(s, a, n, hit_effects, all_effects):
    letters = sorted(letters_of(s))
    if n < 1:
        return YES
    right = _accepted_suffixes(all_effects, n - 1, letters)
    for x, ds in sorted(_prefix_walk(s, n - 1), key=lambda p: (len(p[0]), p[0])):
        effects = hit_effects(ds)
        if effects is None:
            continue
        m = n - 1 - len(x)
        left = _accepted_suffixes(effects, m, letters)
        want = {y for y in right if len(y) <= m}
        missing = sorted(want - left, key=lambda y: (len(y), y))
        if missing:
            return Verdict(False, x + (a,) + missing[0])
    return YES


def check_bifurcates(s, block, a, n) -> Verdict:
    """Bounded test that L^D_a = Pref^D_a(L)·a·Suf^D_a(L) up to length n."""
    block = frozenset(block) & all_derivatives(s)

    def hit(ds):
        h = ds & block
        return der_set(h, a) if h else None

    return _relativized_check(s, a, n, hit, der_set(block, a))


def check_funnels(s, duct: Duct, a, n) -> Verdict:
    block = duct.block & all_derivatives(s)
    effect = duct.effect

    def hit(ds):
        h = ds & block
        return der_set(h, a) & effect if h else None

    return _relativized_check(s, a, n, hit, der_set(block, a) & effect)


# ------------------------------------------------------ connected expressions

def _blocks_tuple(t):
    return tuple(frozenset(b) for b in t)


@dataclass(frozen=True, eq=False)
class ConnectedExpression:
    """fsync(s_1, ..., s_k), or the constant 0 when components is None."""

    alphabet: DistributedAlphabet
    components: tuple | None
    pairings: dict | None = None
    cables: dict | None = None

    def __post_init__(self):
        if self.components is not None:
            comps = tuple(self.components)
            object.__setattr__(self, "components", comps)
            if len(comps) != self.alphabet.k:
                raise ValueError(f"fsync needs {self.alphabet.k} components, got {len(comps)}")
            for i, s in enumerate(comps, 1):
                extra = letters_of(s) - self.alphabet.component(i)
                if extra:
                    raise ValueError(f"component {i} uses letters {sorted(extra)} outside Σ_{i}")
        if self.pairings is not None:
            object.__setattr__(self, "pairings", {
                a: frozenset(_blocks_tuple(t) for t in ts) for a, ts in self.pairings.items()})
        if self.cables is not None:
            object.__setattr__(self, "cables", {
                a: frozenset(tuple(cs) for cs in c) for a, c in self.cables.items()})

    @property
    def is_zero(self):
        return self.components is None

    def locs(self, a):
        return tuple(sorted(self.alphabet.loc(a)))

    def steps(self, state):
        """(letter, next state) pairs of the derivative relation."""
        for a in self.alphabet.sorted_letters():
            locs = self.locs(a)
            if len(locs) > 1 and self.cables is not None:
                for cable in sorted(self.cables.get(a, ()), key=_cable_key):
                    if all(state[i - 1] in d.block for i, d in zip(locs, cable)):
                        choices = [sorted(der(state[i - 1], a) & d.effect) for i, d in zip(locs, cable)]
                        for combo in product(*choices):
                            yield a, _replace_at(state, locs, combo)
            else:
                choices = [sorted(der(state[i - 1], a)) for i in locs]
                for combo in product(*choices):
                    yield a, _replace_at(state, locs, combo)

    def acceptor(self) -> FiniteAcceptor:
        if self.is_zero:
            return FiniteAcceptor(frozenset([0]), 0, frozenset(), frozenset(), self.alphabet.letters)
        return explore([self.components], self.steps, lambda st: all(r.nullable for r in st),
                       self.alphabet.letters)

    def reachable(self) -> dict:
        """Reachable derivative tuples with their shortlex-least access words."""
        if self.is_zero:
            return {}
        words = {self.components: ()}
        frontier = [self.components]
        while frontier:
            nxt = []
            for st in frontier:
                for a, st2 in self.steps(st):
                    if st2 not in words:
                        words[st2] = words[st] + (a,)
                        nxt.append(st2)
            frontier = nxt
        return words

    def plain(self) -> "ConnectedExpression":
        return replace(self, pairings=None, cables=None)


def _replace_at(state, locs, values):
    out = list(state)
    for i, v in zip(locs, values):
        out[i - 1] = v
    return tuple(out)


def _block_key(b):
    return sorted(b)


def _cable_key(c):
    return [(sorted(d.block), sorted(d.effect)) for d in c]


@dataclass(frozen=True, eq=False)
class SumExpression:
    alphabet: DistributedAlphabet
    summands: tuple

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))
        for e in self.summands:
            if e.alphabet != self.alphabet:
                raise ValueError("summands must share the distribution")

    def acceptor(self) -> FiniteAcceptor:
        return union_acceptor([e.acceptor() for e in self.summands])


def fsync(alphabet, *components, pairings=None, cables=None) -> ConnectedExpression:
    comps = tuple(parse_regex(c) if isinstance(c, str) else c for c in components)
    return ConnectedExpression(alphabet, comps, pairings, cables)


def expression_acceptor(e) -> FiniteAcceptor:
    if isinstance(e, Regex):
        return regex_acceptor(e)
    return e.acceptor()


def ce_language_bounded(e, n) -> set:
    return acceptor_language_bounded(expression_acceptor(e), n)


def default_bound(e) -> int:
    """2·(number of reachable derivative tuples) + 2."""
    summands = e.summands if isinstance(e, SumExpression) else (e,)
    return 2 * sum(len(x.reachable()) for x in summands) + 2


# ----------------------------------------------------------- well-formedness

def check_pairing_wellformed(e: ConnectedExpression) -> Verdict:
    if e.pairings is None:
        raise MalformedPairing("the expression carries no pairings")
    for a in e.alphabet.global_letters:
        tuples = e.pairings.get(a, frozenset())
        locs = e.locs(a)
        for j, i in enumerate(locs):
            blocks = part_a(e.components[i - 1], a)
            used = [t[j] for t in tuples]
            if set(used) != set(blocks):
                bad = sorted(set(used) ^ set(blocks), key=_block_key)[0]
                return Verdict(False, (a, i, sorted(map(str, bad))),
                               "pairing projection differs from Part_a")
            if len(used) != len(set(used)):
                return Verdict(False, (a, i), "block in two pairing tuples")
    return YES


def _require_pairing(e):
    v = check_pairing_wellformed(e)
    if not v:
        raise MalformedPairing(f"pairing is not well formed ({v.note}): {v.witness}")


def check_cables_wellformed(e: ConnectedExpression) -> Verdict:
    if e.cables is None:
        raise MalformedCables("the expression carries no cables")
    for a in sorted(e.cables):
        if not e.alphabet.is_global(a):
            return Verdict(False, a, "cables given for a local letter")
    for a in e.alphabet.global_letters:
        cables = e.cables.get(a, frozenset())
        locs = e.locs(a)
        for j, i in enumerate(locs):
            s = e.components[i - 1]
            blocks = part_a(s, a)
            ducts = set()
            for c in cables:
                if len(c) != len(locs):
                    return Verdict(False, (a, c), "cable of wrong arity")
                d = c[j]
                if d.block not in blocks:
                    return Verdict(False, (a, i, sorted(map(str, d.block))), "pre-block not in Part_a")
                if not d.effect or not d.effect <= der_set(d.block, a):
                    return Verdict(False, (a, i, sorted(map(str, d.effect))), "effect outside Der_a(block)")
                ducts.add(d)
            appearing = {d.block for d in ducts}
            missing = sorted(set(blocks) - appearing, key=_block_key)
            if missing:
                return Verdict(False, (a, i, sorted(map(str, missing[0]))), "block in no cable")
            for d1, d2 in combinations(sorted(ducts, key=lambda d: (_block_key(d.block), sorted(d.effect))), 2):
                if d1.block == d2.block and d1.effect & d2.effect:
                    return Verdict(False, (a, i, sorted(map(str, d1.effect & d2.effect))),
                                   "ducts with one pre-block have overlapping effects")
    return YES


def _require_cables(e):
    v = check_cables_wellformed(e)
    if not v:
        raise MalformedCables(f"cables are not well formed ({v.note}): {v.witness}")


# --------------------------------------------------------------- checkers

def check_equal_choice(e: ConnectedExpression) -> Verdict:
    _require_pairing(e)
    for a in e.alphabet.global_letters:
        for t in sorted(e.pairings.get(a, ()), key=lambda t: [_block_key(b) for b in t]):
            inits = {init(b) for b in t}
            if len(inits) > 1:
                return Verdict(False, (a, [sorted(map(str, b)) for b in t]))
    return YES


def check_consistent_pairing(e: ConnectedExpression) -> Verdict:
    _require_pairing(e)
    words = e.plain().reachable()
    for st in sorted(words, key=lambda st: (len(words[st]), words[st])):
        for a in e.alphabet.global_letters:
            locs = e.locs(a)
            if all(a in st[i - 1].first for i in locs):
                ok = any(all(st[i - 1] in t[j] for j, i in enumerate(locs))
                         for t in e.pairings.get(a, ()))
                if not ok:
                    return Verdict(False, (words[st], a, tuple(str(st[i - 1]) for i in locs)))
    return YES


def _implicit_local_cables(e):
    out = []
    for a in e.alphabet.sorted_letters():
        locs = e.locs(a)
        if len(locs) == 1:
            s = e.components[locs[0] - 1]
            for b in part_a(s, a):
                out.append((a, (Duct(b, der_set(b, a)),)))
    return out


def _all_cables(e):
    out = []
    for a in e.alphabet.global_letters:
        for c in sorted(e.cables.get(a, ()), key=_cable_key):
            out.append((a, c))
    return out + _implicit_local_cables(e)


def check_equal_source(e: ConnectedExpression) -> Verdict:
    """Cables sharing a pre-block have the same pre-blocks.

    Local letters contribute one implicit full-effect cable per block.
    """
    _require_cables(e)
    owner = {}
    for a, c in _all_cables(e):
        pre = frozenset((i, d.block) for i, d in zip(e.locs(a), c))
        for x in pre:
            seen = owner.setdefault(x, (pre, a, c))
            if seen[0] != pre:
                return Verdict(False, ((seen[1], _show_cable(seen[2])), (a, _show_cable(c))))
    return YES


def _show_cable(c):
    return tuple((sorted(map(str, d.block)), sorted(map(str, d.effect))) for d in c)


def es_compartments(e, a) -> dict:
    by_pre = {}
    for c in e.cables.get(a, ()):
        by_pre.setdefault(tuple(d.block for d in c), set()).add(c)
    return by_pre


def check_product_derivatives(e: ConnectedExpression) -> Verdict:
    _require_cables(e)
    for a in e.alphabet.global_letters:
        for pre, cs in sorted(es_compartments(e, a).items(), key=lambda kv: [_block_key(b) for b in kv[0]]):
            post = {tuple(d.effect for d in c) for c in cs}
            per = [sorted({t[j] for t in post}, key=sorted) for j in range(len(pre))]
            for combo in product(*per):
                if combo not in post:
                    return Verdict(False, (a, tuple(sorted(map(str, x)) for x in combo)))
    return YES


def check_action_live(e: ConnectedExpression) -> Verdict:
    if e.cables is not None:
        _require_cables(e)
    words = e.reachable()
    g = nx.DiGraph()
    g.add_nodes_from(words)
    enabled = {}
    for st in words:
        for a, st2 in e.steps(st):
            g.add_edge(st, st2)
            enabled.setdefault(st, set()).add(a)
    cond = nx.condensation(g)
    for n in cond.nodes:
        if cond.out_degree(n):
            continue
        members = cond.nodes[n]["members"]
        here = set().union(*(enabled.get(st, set()) for st in members))
        missing = sorted(e.alphabet.letters - here)
        if missing:
            st = min(members, key=lambda st: (len(words[st]), words[st]))
            return Verdict(False, (words[st], missing[0]))
    return YES


# ------------------------------------------------------------- conversions

def pairings_to_cables(e: ConnectedExpression) -> ConnectedExpression:
    for checker in (check_equal_choice, check_consistent_pairing):
        v = checker(e)
        if not v:
            raise PreconditionViolated(f"{checker.__name__} fails: {v.witness}")
    cables = {}
    for a in e.alphabet.global_letters:
        out = set()
        for t in e.pairings.get(a, ()):
            choices = [[Duct(b, frozenset([d])) for d in sorted(der_set(b, a))] for b in t]
            out.update(product(*choices))
        cables[a] = frozenset(out)
    return replace(e, pairings=None, cables=cables)


def cables_to_pairings(e: ConnectedExpression) -> ConnectedExpression:
    _require_cables(e)
    pairings = {a: frozenset(tuple(d.block for d in c) for c in e.cables.get(a, ()))
                for a in e.alphabet.global_letters}
    return replace(e, pairings=pairings, cables=None)


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r'\s*(?:(?P<q>"(?:[^"\\]|\\.)*")|(?P<w>fsync)\b|(?P<c>[A-Za-z0-9])|(?P<p>[()*+;,]))')


def _tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        start = m.start(m.lastgroup)
        if m.group("q"):
            out.append(("sym", re.sub(r"\\(.)", r"\1", m.group("q")[1:-1]), start))
        elif m.group("w"):
            out.append(("fsync", "fsync", start))
        elif m.group("c"):
            ch = m.group("c")
            if ch == "0":
                out.append(("zero", ch, start))
            elif ch == "1":
                out.append(("one", ch, start))
            else:
                out.append(("sym", ch, start))
        else:
            out.append((m.group("p"), m.group("p"), start))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def regex(self):
        terms = [self.concat()]
        while self.peek() == "+":
            self.take()
            terms.append(self.concat())
        return alt(*terms)

    def concat(self):
        parts = [self.starred()]
        while self.peek() in ("sym", "zero", "one", "("):
            parts.append(self.starred())
        return cat_all(*parts)

    def starred(self):
        r = self.atom()
        while self.peek() == "*":
            self.take()
            r = star(r)
        return r

    def atom(self):
        kind, value, pos = self.take()
        if kind == "sym":
            return sym(value)
        if kind == "zero":
            return ZERO
        if kind == "one":
            return ONE
        if kind == "(":
            r = self.regex()
            self.take(")")
            return r
        raise ParseError(f"unexpected {value or 'end of input'!r}", pos)

    def ce(self):
        if self.peek() == "zero":
            self.take()
            return None
        self.take("fsync")
        self.take("(")
        comps = [self.regex()]
        while self.peek() in (";", ","):
            self.take()
            comps.append(self.regex())
        self.take(")")
        return tuple(comps)

    def sce(self):
        out = [self.ce()]
        while self.peek() == "+":
            self.take()
            out.append(self.ce())
        return out

    def done(self):
        if self.peek() != "end":
            tok = self.toks[self.i]
            raise ParseError(f"trailing input {tok[1]!r}", tok[2])


def parse_regex(text) -> Regex:
    p = _Parser(text)
    r = p.regex()
    p.done()
    return r


def parse_sce(text, alphabet: DistributedAlphabet, annotations=None) -> SumExpression:
    p = _Parser(text)
    parts = p.sce()
    p.done()
    annotations = annotations or [{} for _ in parts]
    if len(annotations) != len(parts):
        raise ParseError(f"{len(parts)} summands but {len(annotations)} annotation entries")
    summands = []
    for comps, ann in zip(parts, annotations):
        e = ConnectedExpression(alphabet, comps)
        summands.append(annotate(e, ann) if comps is not None else e)
    return SumExpression(alphabet, tuple(summands))


def parse_ce(text, alphabet, annotation=None) -> ConnectedExpression:
    sce = parse_sce(text, alphabet, [annotation or {}])
    if len(sce.summands) != 1:
        raise ParseError("expected a single connected expression")
    return sce.summands[0]


def format_ce(e: ConnectedExpression) -> str:
    if e.is_zero:
        return "0"
    return "fsync(" + "; ".join(str(s) for s in e.components) + ")"


def format_sce(e) -> str:
    if isinstance(e, ConnectedExpression):
        return format_ce(e)
    return " + ".join(format_ce(x) for x in e.summands) if e.summands else "0"


def canonical_member(block) -> str:
    return str(min(block))


def _resolve_block(e, i, a, text):
    d = parse_regex(text)
    b = block_of(e.components[i - 1], a, d)
    if b is None:
        raise MalformedPairing(f"{text!r} is not an {a}-site of component {i}")
    return b


def annotate(e: ConnectedExpression, ann: dict) -> ConnectedExpression:
    """Attach pairings/cables given in sidecar form (blocks named by any member)."""
    pairings = cables = None
    if "pairings" in ann:
        pairings = {}
        for a, ts in ann["pairings"].items():
            locs = e.locs(a)
            pairings[a] = frozenset(tuple(_resolve_block(e, i, a, x) for i, x in zip(locs, t)) for t in ts)
    if "cables" in ann:
        cables = {}
        for a, cs in ann["cables"].items():
            locs = e.locs(a)
            out = set()
            for c in cs:
                if len(c) != len(locs):
                    raise MalformedCables(f"cable for {a!r} has {len(c)} ducts, expected {len(locs)}")
                ducts = []
                for i, d in zip(locs, c):
                    try:
                        b = _resolve_block(e, i, a, d["block"])
                    except MalformedPairing as exc:
                        raise MalformedCables(str(exc)) from None
                    ducts.append(Duct(b, frozenset(parse_regex(x) for x in d["effect"])))
                out.add(tuple(ducts))
            cables[a] = frozenset(out)
    return replace(e, pairings=pairings, cables=cables)


def annotation_json(e: ConnectedExpression) -> dict:
    out = {}
    if e.pairings is not None:
        out["pairings"] = {a: sorted([canonical_member(b) for b in t] for t in ts)
                           for a, ts in sorted(e.pairings.items())}
    if e.cables is not None:
        out["cables"] = {a: sorted(([{"block": canonical_member(d.block),
                                     "effect": sorted(map(str, d.effect))} for d in c] for c in cs),
                                   key=lambda c: [(d["block"], d["effect"]) for d in c])
                         for a, cs in sorted(e.cables.items())}
    return out


def sidecar_json(e) -> dict:
    summands = e.summands if isinstance(e, SumExpression) else (e,)
    return {"alphabet": summands[0].alphabet.to_json() if summands else None,
            "summands": [annotation_json(x) for x in summands]}
