"""ω-automata: parsing, bounded run tracking, lasso acceptance, unrolling.

Dead runs (no successor for the current letter) impose no obligation, so an
incomplete automaton accepts universally on words where every run dies.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError, ParseError, ResourceError

SEMANTICS = ("NBA", "UCA", "kUCA")


@dataclass(frozen=True)
class OmegaAutomaton:
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    initial: frozenset
    transitions: frozenset  # of (q, letter, q')
    accepting: frozenset
    semantics: str = "NBA"
    k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "transitions", frozenset(tuple(t) for t in self.transitions))
        if len(set(self.states)) != len(self.states):
            raise InputError("duplicate automaton state")
        known = set(self.states)
        for q in self.initial | self.accepting:
            if q not in known:
                raise InputError(f"undeclared state {q!r}")
        for q, a, r in self.transitions:
            if q not in known or r not in known:
                raise InputError(f"transition {q} -{a}-> {r} uses an undeclared state")
            if a not in self.alphabet:
                raise InputError(f"transition {q} -{a}-> {r} uses undeclared letter {a!r}")
        if self.semantics not in SEMANTICS:
            raise InputError(f"unknown semantics {self.semantics!r}")
        if self.semantics == "kUCA" and (self.k is None or self.k < 0):
            raise InputError("kUCA semantics needs k >= 0")
        succ: dict = {}
        for q, a, r in sorted(self.transitions):
            succ.setdefault((q, a), []).append(r)
        object.__setattr__(self, "_succ", {key: tuple(v) for key, v in succ.items()})
        object.__setattr__(self, "_index", {q: n for n, q in enumerate(self.states)})

    def successors(self, q: str, letter: str) -> tuple[str, ...]:
        return self._succ.get((q, letter), ())

    def index(self, q: str) -> int:
        return self._index[q]

    def with_semantics(self, semantics: str, k: int | None = None) -> "OmegaAutomaton":
        return OmegaAutomaton(self.alphabet, self.states, self.initial, self.transitions,
                              self.accepting, semantics, k)

    def letters_between(self, q: str, r: str) -> tuple[str, ...]:
        return tuple(a for a in self.alphabet if r in self.successors(q, a))

    def edges(self) -> list[tuple[str, str]]:
        """Distinct (source, target) pairs in state order."""
        pairs = {(q, r) for q, _, r in self.transitions}
        return sorted(pairs, key=lambda e: (self.index(e[0]), self.index(e[1])))

    def reachable_from(self, sources: Iterable[str], min_steps: int = 0) -> set[str]:
        """States reachable from ``sources`` in at least ``min_steps`` (0 or 1) steps."""
        start = set(sources)
        frontier = deque(start)
        seen = set(start) if min_steps == 0 else set()
        visited = set(start)
        while frontier:
            q = frontier.popleft()
            for a in self.alphabet:
                for r in self.successors(q, a):
                    seen.add(r)
                    if r not in visited:
                        visited.add(r)
                        frontier.append(r)
        return seen

    def to_text(self) -> str:
        lines = [f"semantics = {self.semantics}" + (f" {self.k}" if self.semantics == "kUCA" else ""),
                 f"alphabet = {', '.join(self.alphabet)}",
                 f"states = {', '.join(self.states)}",
                 f"initial = {', '.join(q for q in self.states if q in self.initial)}",
                 f"accepting = {', '.join(q for q in self.states if q in self.accepting)}"]
        for q, r in self.edges():
            lines.append(f"{q} -{','.join(self.letters_between(q, r))}-> {r}")
        return "\n".join(lines) + "\n"


_EDGE = re.compile(r"^\s*(?P<src>[^\s-]+)\s*-(?P<letters>[^>]*?)->\s*(?P<dst>\S+)\s*$")


def parse_automaton(text: str, alphabet: Sequence[str] | None = None,
                    first_line: int = 1) -> OmegaAutomaton:
    """Parse the line-oriented automaton format.

    Keys: ``semantics`` (``NBA``, ``UCA`` or ``kUCA <k>``), ``alphabet``,
    ``states``, ``initial``, ``accepting``; every other nonblank line is a
    transition ``q -a,b-> r``.
    """
    keys: dict[str, tuple[str, int]] = {}
    edges = []
    for n, raw in enumerate(text.splitlines(), start=first_line):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            m = _EDGE.match(line)
            if not m:
                raise ParseError(f"malformed transition {line!r}", line=n)
            letters = [a.strip() for a in m.group("letters").split(",") if a.strip()]
            if not letters:
                raise ParseError(f"transition without letters {line!r}", line=n)
            edges.append((m.group("src"), letters, m.group("dst"), n))
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value' or a transition, got {line!r}", line=n)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in keys:
            raise ParseError(f"duplicate key {key!r}", line=n)
        keys[key] = (value, n)

    def items(key):
        value = keys.get(key, ("", 0))[0]
        return [s.strip() for s in value.split(",") if s.strip()]

    sem_text, sem_line = keys.get("semantics", ("NBA", 0))
    parts = sem_text.split()
    semantics, k = parts[0] if parts else "NBA", None
    if semantics.upper() == "KUCA":
        semantics = "kUCA"
        if len(parts) != 2 or not parts[1].isdigit():
            raise ParseError("kUCA semantics needs an integer bound, e.g. 'kUCA 2'", line=sem_line)
        k = int(parts[1])
    elif semantics.upper() in ("NBA", "UCA") and len(parts) == 1:
        semantics = semantics.upper()
    else:
        raise ParseError(f"unknown semantics {sem_text!r}", line=sem_line)

    states = items("states")
    if not states:
        seen = []
        for src, _, dst, _ in edges:
            for q in (src, dst):
                if q not in seen:
                    seen.append(q)
        states = seen
    letters = items("alphabet") or list(alphabet or [])
    if not letters:
        for _, ls, _, _ in edges:
            for a in ls:
                if a not in letters:
                    letters.append(a)
    known_states, known_letters = set(states), set(letters)
    transitions = set()
    for src, ls, dst, n in edges:
        for q in (src, dst):
            if q not in known_states:
                raise ParseError(f"undeclared state {q!r}", line=n)
        for a in ls:
            if a not in known_letters:
                raise ParseError(f"undeclared letter {a!r}", line=n)
            transitions.add((src, a, dst))
    for key in ("initial", "accepting"):
        for q in items(key):
            if q not in known_states:
                raise ParseError(f"undeclared state {q!r} in {key}", line=keys[key][1])
    return OmegaAutomaton(tuple(letters), tuple(states), frozenset(items("initial")),
                          frozenset(transitions), frozenset(items("accepting")), semantics, k)


# ---------------------------------------------------------------------------
# Bounded run tracking
# ---------------------------------------------------------------------------

RunFront = dict  # state -> maximal accepting-visit count, saturated at k+1


def initial_front(aut: OmegaAutomaton, k: int) -> RunFront:
    return {q: min(k + 1, 1 if q in aut.accepting else 0) for q in aut.states if q in aut.initial}


def advance_front(aut: OmegaAutomaton, front: RunFront, letter: str, k: int) -> RunFront:
    """One letter of subset-with-counters tracking, keeping per-state maxima."""
    new: RunFront = {}
    for q, c in front.items():
        for r in aut.successors(q, letter):
            c2 = min(k + 1, c + 1) if r in aut.accepting else c
            if c2 > new.get(r, -1):
                new[r] = c2
    return new


def prefix_respects_k(aut: OmegaAutomaton, prefix: Sequence[str], k: int | None = None) -> bool:
    """True iff no run on ``prefix`` visits accepting states more than k times.

    The run is read as ``q0 --prefix[0]--> q1 ...``; the initial state counts
    when accepting.
    """
    if k is None:
        k = aut.k
    if k is None:
        raise InputError("prefix_respects_k needs a bound k")
    front = initial_front(aut, k)
    if any(c > k for c in front.values()):
        return False
    for a in prefix:
        front = advance_front(aut, front, a, k)
        if any(c > k for c in front.values()):
            return False
    return True


def max_accepting_visits(aut: OmegaAutomaton, prefix: Sequence[str], cap: int) -> int:
    """Largest accepting-visit count over runs on ``prefix`` (saturated at cap+1)."""
    front = initial_front(aut, cap)
    best = max(front.values(), default=0)
    for a in prefix:
        front = advance_front(aut, front, a, cap)
        best = max(best, max(front.values(), default=0))
    return best


def enumerate_run_counts(aut: OmegaAutomaton, word: Sequence[str]) -> list[int]:
    """Accepting-visit counts of every full run on ``word`` (brute force)."""
    counts = []

    def rec(q, pos, c):
        if pos == len(word):
            counts.append(c)
            return
        for r in aut.successors(q, word[pos]):
            rec(r, pos + 1, c + (1 if r in aut.accepting else 0))

    for q in aut.states:
        if q in aut.initial:
            rec(q, 0, 1 if q in aut.accepting else 0)
    return counts


# ---------------------------------------------------------------------------
# Lasso acceptance
# ---------------------------------------------------------------------------


def _lasso_graph(aut: OmegaAutomaton, stem, loop):
    word = list(stem) + list(loop)
    if not loop:
        raise InputError("lasso loop must be nonempty")
    n = len(word)

    def nxt(pos):
        return pos + 1 if pos + 1 < n else len(stem)

    start = [(q, 0) for q in aut.states if q in aut.initial]
    graph: dict = {}
    frontier = deque(start)
    seen = set(start)
    while frontier:
        node = frontier.popleft()
        q, pos = node
        succ = [(r, nxt(pos)) for r in aut.successors(q, word[pos])]
        graph[node] = succ
        for s in succ:
            if s not in seen:
                seen.add(s)
                frontier.append(s)
    return graph


def lasso_accepts_buchi(aut: OmegaAutomaton, stem: Sequence[str], loop: Sequence[str]) -> bool:
    """Some run on stem·loop^ω visits accepting states infinitely often."""
    graph = _lasso_graph(aut, stem, loop)
    for node in graph:
        if node[0] not in aut.accepting:
            continue
        # does node reach itself?
        frontier = deque(graph[node])
        seen = set(graph[node])
        while frontier:
            m = frontier.popleft()
            if m == node:
                return True
            for s in graph.get(m, ()):
                if s not in seen:
                    seen.add(s)
                    frontier.append(s)
    return False


def lasso_accepts_cobuchi(aut: OmegaAutomaton, stem: Sequence[str], loop: Sequence[str]) -> bool:
    """Every run on stem·loop^ω visits accepting states finitely often.

    Decided via strongly connected components: every reachable cyclic
    component must avoid accepting states.
    """
    graph = _lasso_graph(aut, stem, loop)
    for comp in _sccs(graph):
        cyclic = len(comp) > 1 or any(n in graph.get(n, ()) for n in comp)
        if cyclic and any(q in aut.accepting for q, _ in comp):
            return False
    return True


def _sccs(graph):
    index, low, stack, on_stack, out = {}, {}, [], set(), []
    counter = [0]

    def strong(v):
        # iterative Tarjan
        work = [(v, iter(graph.get(v, ())))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)

    for v in graph:
        if v not in index:
            strong(v)
    return out


# ---------------------------------------------------------------------------
# Unrolling and triplets
# ---------------------------------------------------------------------------


def primed(q: str) -> str:
    return q + "'"


def unroll(aut: OmegaAutomaton) -> OmegaAutomaton:
    """Unroll the simple cycles through accepting states once.

    Every state reachable (in one or more steps) from an accepting state gets
    a primed copy; edges leaving accepting states are redirected into the
    primed copies, which mirror the original transitions among themselves.
    Only primed accepting states stay accepting.
    """
    reach = aut.reachable_from(aut.accepting, min_steps=1)
    copies = [q for q in aut.states if q in reach]
    names = set(aut.states)
    for q in copies:
        if primed(q) in names:
            raise InputError(f"state name {primed(q)!r} clashes with the primed copy of {q!r}")
    transitions = set()
    for q, a, r in aut.transitions:
        if q in aut.accepting:
            transitions.add((q, a, primed(r)))
        else:
            transitions.add((q, a, r))
        if q in reach and r in reach:
            transitions.add((primed(q), a, primed(r)))
    accepting = {primed(q) for q in copies if q in aut.accepting}
    return OmegaAutomaton(aut.alphabet, aut.states + tuple(primed(q) for q in copies),
                          aut.initial, frozenset(transitions), frozenset(accepting),
                          aut.semantics, aut.k)


@dataclass(frozen=True)
class Triplet:
    """Consecutive edges ``q --first--> middle --second--> last``."""

    first: str
    middle: str
    last: str
    first_letters: tuple[str, ...]
    second_letters: tuple[str, ...]

    def __str__(self):
        return (f"({self.first}, {self.middle}, {self.last}) via "
                f"{{{','.join(self.first_letters)}}} then {{{','.join(self.second_letters)}}}")


def enumerate_triplets(aut: OmegaAutomaton, cap: int = 10_000):
    """Simple paths initial -> accepting with their triplets, in DFS order."""
    out = []
    order = {q: n for n, q in enumerate(aut.states)}
    succ = {q: sorted({r for (p, _, r) in aut.transitions if p == q}, key=order.get)
            for q in aut.states}

    def dfs(path, on_path):
        q = path[-1]
        if q in aut.accepting and len(path) > 1:
            out.append(tuple(path))
            if len(out) > cap:
                raise ResourceError(f"more than {cap} simple paths; raise the cap")
            return
        for r in succ[q]:
            if r not in on_path:
                on_path.add(r)
                path.append(r)
                dfs(path, on_path)
                path.pop()
                on_path.discard(r)

    for q0 in aut.states:
        if q0 in aut.initial:
            if q0 in aut.accepting:
                out.append((q0,))
            dfs([q0], {q0})
    result = []
    for path in out:
        trips = [Triplet(path[t], path[t + 1], path[t + 2],
                         aut.letters_between(path[t], path[t + 1]),
                         aut.letters_between(path[t + 1], path[t + 2]))
                 for t in range(len(path) - 2)]
        result.append((path, trips))
    return result
