"""Distributed alphabets, words, projection, shuffle and the finite-acceptor oracle.

Every other module compiles its objects to a :class:`FiniteAcceptor`; language
questions are then answered here, exactly, by subset construction.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Callable, Hashable, Iterable, Iterator, Sequence

Word = tuple  # tuple of letters; () is the empty word

DEFAULT_MAX_STATES = 1_000_000


class KleeneError(Exception):
    """Base class for all library errors."""


class ExplorationLimit(KleeneError):
    pass


class PreconditionViolated(KleeneError):
    pass


class MissingAnnotation(KleeneError):
    pass


class VerificationFailed(KleeneError):
    def __init__(self, message, witness=None, report=None):
        super().__init__(message)
        self.witness = witness
        self.report = report


def max_states() -> int:
    raw = os.environ.get("KLEENEFC_MAX_STATES")
    if not raw:
        return DEFAULT_MAX_STATES
    return int(float(raw))


@dataclass(frozen=True)
class Verdict:
    """Outcome of a checker. Truthy when the property holds."""

    ok: bool
    witness: object = None
    note: str = ""

    def __bool__(self):
        return self.ok


YES = Verdict(True)


@dataclass(frozen=True)
class DistributedAlphabet:
    components: tuple

    def __post_init__(self):
        comps = tuple(frozenset(c) for c in self.components)
        if not comps:
            raise ValueError("a distribution needs at least one component")
        for i, c in enumerate(comps, 1):
            if not c:
                raise ValueError(f"component {i} of the distribution is empty")
            for a in c:
                if not isinstance(a, str) or not a:
                    raise ValueError(f"letters must be nonempty strings, got {a!r}")
        object.__setattr__(self, "components", comps)

    @property
    def k(self) -> int:
        return len(self.components)

    @cached_property
    def letters(self) -> frozenset:
        return frozenset().union(*self.components)

    @cached_property
    def _loc(self) -> dict:
        return {a: frozenset(i for i, c in enumerate(self.components, 1) if a in c)
                for a in self.letters}

    def loc(self, a) -> frozenset:
        return self._loc.get(a, frozenset())

    def component(self, i: int) -> frozenset:
        return self.components[i - 1]

    def is_global(self, a) -> bool:
        return len(self.loc(a)) > 1

    def is_local(self, a) -> bool:
        return len(self.loc(a)) == 1

    @cached_property
    def global_letters(self) -> tuple:
        return tuple(sorted(a for a in self.letters if self.is_global(a)))

    def sorted_letters(self) -> tuple:
        return tuple(sorted(self.letters))

    def to_json(self) -> dict:
        return {"distribution": [sorted(c) for c in self.components]}

    @classmethod
    def from_json(cls, data) -> "DistributedAlphabet":
        if isinstance(data, dict):
            data = data.get("distribution")
        if not isinstance(data, list) or not all(isinstance(c, list) for c in data):
            raise ValueError("alphabet must be {'distribution': [[letters], ...]}")
        return cls(tuple(data))


def locations(alphabet: DistributedAlphabet, a) -> frozenset:
    return alphabet.loc(a)


def project(w: Sequence, delta: Iterable) -> Word:
    delta = set(delta)
    return tuple(x for x in w if x in delta)


def as_word(w) -> Word:
    """Accept 'abd', ('a','b','d') or ['a','b','d']."""
    if isinstance(w, str):
        return tuple(w)
    return tuple(w)


def format_word(w: Sequence) -> str:
    if not w:
        return "ε"
    if all(len(x) == 1 for x in w):
        return "".join(w)
    return " ".join(w)


def shortlex(words: Iterable) -> list:
    return sorted(words, key=lambda w: (len(w), tuple(w)))


@dataclass(frozen=True)
class FiniteAcceptor:
    states: frozenset
    initial: Hashable
    edges: frozenset
    accepting: frozenset
    letters: frozenset = field(default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "edges", frozenset(self.edges))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        letters = frozenset(self.letters) | {a for _, a, _ in self.edges}
        object.__setattr__(self, "letters", letters)
        if self.initial not in self.states:
            raise ValueError("initial state is not a state")
        if not self.accepting <= self.states:
            raise ValueError("accepting states must be states")
        for p, _, q in self.edges:
            if p not in self.states or q not in self.states:
                raise ValueError(f"edge endpoint outside states: {(p, q)}")

    @cached_property
    def succ(self) -> dict:
        out: dict = {}
        for p, a, q in self.edges:
            out.setdefault(p, {}).setdefault(a, set()).add(q)
        return out

    def step(self, states: Iterable, a) -> frozenset:
        out = set()
        for p in states:
            out |= self.succ.get(p, {}).get(a, set())
        return frozenset(out)

    def accepts(self, w) -> bool:
        current = frozenset([self.initial])
        for a in as_word(w):
            current = self.step(current, a)
            if not current:
                return False
        return bool(current & self.accepting)


def explore(initials: Sequence, successors: Callable, accepting: Callable,
            letters: Iterable = ()) -> FiniteAcceptor:
    """Build an acceptor by breadth-first search.

    successors(state) yields (letter, next_state) pairs. With more than one
    initial state a synthetic start state copies their outgoing edges.
    """
    limit = max_states()
    seen = set()
    queue = deque()
    for s in initials:
        if s not in seen:
            seen.add(s)
            queue.append(s)
    edges = set()
    while queue:
        s = queue.popleft()
        for a, t in successors(s):
            edges.add((s, a, t))
            if t not in seen:
                seen.add(t)
                if len(seen) > limit:
                    raise ExplorationLimit(
                        f"more than {limit} states (raise KLEENEFC_MAX_STATES)")
                queue.append(t)
    acc = {s for s in seen if accepting(s)}
    initials = list(dict.fromkeys(initials))
    if len(initials) == 1:
        return FiniteAcceptor(frozenset(seen), initials[0], frozenset(edges), frozenset(acc), letters)
    start = ("<start>",)
    extra = {(start, a, t) for s in initials for (p, a, t) in edges if p == s}
    if any(s in acc for s in initials):
        acc.add(start)
    return FiniteAcceptor(frozenset(seen) | {start}, start, frozenset(edges | extra),
                          frozenset(acc), letters)


def acceptor_language_bounded(acc: FiniteAcceptor, n: int) -> set:
    """All accepted words of length at most n, by breadth-first exploration."""
    out = set()
    layer = {(): frozenset([acc.initial])}
    letters = sorted(acc.letters)
    for length in range(n + 1):
        nxt = {}
        for w, states in layer.items():
            if states & acc.accepting:
                out.add(w)
            if length == n:
                continue
            for a in letters:
                t = acc.step(states, a)
                if t:
                    nxt[w + (a,)] = t
        layer = nxt
    return out


def determinize(acc: FiniteAcceptor) -> FiniteAcceptor:
    letters = sorted(acc.letters)
    start = frozenset([acc.initial])

    def successors(s):
        for a in letters:
            t = acc.step(s, a)
            if t:
                yield a, t

    return explore([start], successors, lambda s: bool(s & acc.accepting), acc.letters)


def acceptor_equal(acc1: FiniteAcceptor, acc2: FiniteAcceptor) -> Verdict:
    """Exact language equality; the witness is the shortlex-least distinguishing word."""
    letters = sorted(acc1.letters | acc2.letters)
    start = (frozenset([acc1.initial]), frozenset([acc2.initial]))
    seen = {start: ()}
    queue = deque([start])
    limit = max_states()
    while queue:
        pair = queue.popleft()
        w = seen[pair]
        if bool(pair[0] & acc1.accepting) != bool(pair[1] & acc2.accepting):
            return Verdict(False, w)
        for a in letters:
            nxt = (acc1.step(pair[0], a), acc2.step(pair[1], a))
            if not nxt[0] and not nxt[1]:
                continue
            if nxt not in seen:
                seen[nxt] = w + (a,)
                if len(seen) > limit:
                    raise ExplorationLimit(f"more than {limit} states in equality check")
                queue.append(nxt)
    return YES


def acceptor_from_words(words: Iterable, letters: Iterable = ()) -> FiniteAcceptor:
    """Prefix-tree acceptor for a finite language."""
    words = [as_word(w) for w in words]
    states = {()}
    edges = set()
    for w in words:
        for i in range(len(w)):
            states.add(w[:i + 1])
            edges.add((w[:i], w[i], w[:i + 1]))
    return FiniteAcceptor(frozenset(states), (), frozenset(edges), frozenset(words), letters)


def union_acceptor(accs: Sequence[FiniteAcceptor]) -> FiniteAcceptor:
    if not accs:
        return FiniteAcceptor(frozenset([0]), 0, frozenset(), frozenset())
    if len(accs) == 1:
        return accs[0]
    tagged_states = {(j, s) for j, acc in enumerate(accs) for s in acc.states}
    edges = {((j, p), a, (j, q)) for j, acc in enumerate(accs) for p, a, q in acc.edges}
    accepting = {(j, s) for j, acc in enumerate(accs) for s in acc.accepting}
    start = ("<union>",)
    edges |= {(start, a, (j, q)) for j, acc in enumerate(accs)
              for p, a, q in acc.edges if p == acc.initial}
    if any(acc.initial in acc.accepting for acc in accs):
        accepting.add(start)
    letters = frozenset().union(*(acc.letters for acc in accs))
    return FiniteAcceptor(frozenset(tagged_states | {start}), start, frozenset(edges),
                          frozenset(accepting), letters)


def project_acceptor(acc: FiniteAcceptor, delta: Iterable) -> FiniteAcceptor:
    """Acceptor for the image of the language under projection onto delta."""
    delta = frozenset(delta)
    eps: dict = {}
    for p, a, q in acc.edges:
        if a not in delta:
            eps.setdefault(p, set()).add(q)

    def closure(s):
        seen = set(s)
        stack = list(s)
        while stack:
            p = stack.pop()
            for q in eps.get(p, ()):
                if q not in seen:
                    seen.add(q)
                    stack.append(q)
        return frozenset(seen)

    start = closure([acc.initial])

    def successors(s):
        for a in sorted(delta):
            t = acc.step(s, a)
            if t:
                yield a, closure(t)

    return explore([start], successors, lambda s: bool(s & acc.accepting), delta)


def shuffle_acceptor(accs: Sequence[FiniteAcceptor], alphabet: DistributedAlphabet) -> FiniteAcceptor:
    """Synchronized product: acceptor i moves exactly on the letters of Σ_i."""
    if len(accs) != alphabet.k:
        raise ValueError("need one acceptor per location")
    letters = alphabet.sorted_letters()
    start = tuple(frozenset([acc.initial]) for acc in accs)

    def successors(state):
        for a in letters:
            nxt = list(state)
            for i in alphabet.loc(a):
                nxt[i - 1] = accs[i - 1].step(state[i - 1], a)
                if not nxt[i - 1]:
                    break
            else:
                yield a, tuple(nxt)

    def accepting(state):
        return all(s & acc.accepting for s, acc in zip(state, accs))

    return explore([start], successors, accepting, alphabet.letters)


def _shuffle_words(languages, alphabet, n) -> Iterator[Word]:
    prefixes = []
    for lang in languages:
        pre = set()
        for w in lang:
            w = as_word(w)
            pre.update(w[:i] for i in range(len(w) + 1))
        prefixes.append(pre)
    langs = [{as_word(w) for w in lang} for lang in languages]
    letters = alphabet.sorted_letters()

    def walk(w, projs):
        if all(p in lang for p, lang in zip(projs, langs)):
            yield w
        if len(w) == n:
            return
        for a in letters:
            nxt = list(projs)
            for i in alphabet.loc(a):
                nxt[i - 1] = projs[i - 1] + (a,)
                if nxt[i - 1] not in prefixes[i - 1]:
                    break
            else:
                yield from walk(w + (a,), tuple(nxt))

    start = tuple(() for _ in languages)
    if all(() in p for p in prefixes):
        yield from walk((), start)


def shuffle_bounded(languages: Sequence, alphabet: DistributedAlphabet, n: int) -> set:
    """{w ∈ Σ^≤n | w↓Σ_i ∈ L_i for all i}.

    Each language is either a finite word set (filtered enumeration with
    prefix pruning) or a FiniteAcceptor over Σ_i (product of acceptors).
    """
    if len(languages) != alphabet.k:
        raise ValueError("need one language per location")
    if all(isinstance(lang, FiniteAcceptor) for lang in languages):
        return acceptor_language_bounded(shuffle_acceptor(languages, alphabet), n)
    if any(isinstance(lang, FiniteAcceptor) for lang in languages):
        raise TypeError("mix of acceptors and word sets")
    return set(_shuffle_words(languages, alphabet, n))


def brute_force_words(letters: Iterable, n: int) -> Iterator[Word]:
    letters = sorted(letters)
    for length in range(n + 1):
        yield from product(letters, repeat=length)
