"""Discrete-time systems, labelings, traces and the counter extension."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InputError, LabelingError, UnsupportedError
from .poly import FiniteSet, Polynomial, SemialgebraicSet, _as_tuple, rational


class StateWarning(UserWarning):
    """Emitted when a successor leaves the declared state set."""


@dataclass(frozen=True)
class DynamicalSystem:
    """System ``(X, X0, f)`` with polynomial or finite-table dynamics.

    Exactly one of ``dynamics`` (one polynomial per variable) and ``table``
    (state tuple -> state tuple) is given.  Finite-table systems use
    :class:`FiniteSet` for ``state_set`` and ``initial_set``.
    """

    variables: tuple[str, ...]
    state_set: object
    initial_set: object
    dynamics: Mapping[str, Polynomial] | None = None
    table: Mapping[tuple, tuple] | None = None
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if (self.dynamics is None) == (self.table is None):
            raise InputError("give exactly one of polynomial dynamics or a finite table")
        if self.dynamics is not None:
            missing = set(self.variables) - set(self.dynamics)
            if missing:
                raise InputError(f"no update polynomial for {sorted(missing)}")
            dyn = {v: self.dynamics[v].with_variables(self.variables) for v in self.variables}
            object.__setattr__(self, "dynamics", dyn)
        else:
            n = len(self.variables)
            tab = {_as_tuple(k, n): _as_tuple(v, n) for k, v in self.table.items()}
            if not isinstance(self.state_set, FiniteSet):
                raise InputError("finite-table systems need an enumerated state set")
            states = self.state_set.points
            if set(tab) != set(states):
                raise InputError("table must define a successor for every enumerated state")
            bad = [v for v in tab.values() if v not in states]
            if bad:
                raise InputError(f"table maps outside the state set: {bad[0]}")
            if not self.initial_set.points <= states:
                raise InputError("initial states must be enumerated states")
            object.__setattr__(self, "table", tab)

    @property
    def is_finite(self) -> bool:
        return self.table is not None

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def states(self) -> list[tuple]:
        if not self.is_finite:
            raise UnsupportedError("only finite-table systems enumerate their states")
        return self.state_set.sorted_points()

    def initial_states(self) -> list[tuple]:
        if not self.is_finite:
            raise UnsupportedError("only finite-table systems enumerate their states")
        return self.initial_set.sorted_points()

    def successor(self, state: tuple) -> tuple:
        """f(state) without domain checks; exact on rational input."""
        if self.is_finite:
            return self.table[_as_tuple(state, self.dimension)]
        point = dict(zip(self.variables, state))
        return tuple(self.dynamics[v].evaluate(point) for v in self.variables)

    def successor_array(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if self.is_finite:
            out = np.empty_like(pts)
            for r, row in enumerate(pts):
                out[r] = [float(v) for v in self.table[tuple(rational(v) for v in row)]]
            return out
        cols = [self.dynamics[v].compile(self.variables)(pts) for v in self.variables]
        return np.stack(cols, axis=1)

    def step(self, state) -> tuple:
        state = _as_tuple(state, self.dimension)
        if not self.state_set.contains(state):
            raise DomainError(f"state {state} is outside the state set")
        nxt = self.successor(state)
        if not self.state_set.contains(nxt):
            msg = f"successor {nxt} of {state} leaves the state set"
            if self.strict:
                raise DomainError(msg)
            warnings.warn(msg, StateWarning, stacklevel=2)
        return nxt

    def simulate(self, x0, horizon: int) -> list[tuple]:
        """Exact trajectory ``(x0, f(x0), ..., f^horizon(x0))``."""
        if horizon < 1:
            raise InputError("horizon must be at least 1")
        seq = [_as_tuple(x0, self.dimension)]
        for _ in range(horizon):
            seq.append(self.step(seq[-1]))
        return seq

    def simulate_array(self, x0: np.ndarray, horizon: int) -> np.ndarray:
        """Float trajectories for many initial points: shape (horizon+1, N, n)."""
        pts = np.asarray(x0, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.empty((horizon + 1,) + pts.shape)
        out[0] = pts
        for t in range(horizon):
            out[t + 1] = self.successor_array(out[t])
        return out


def count_visits(seq: Sequence, region) -> int:
    return sum(1 for s in seq if region.contains(s))


def first_fixed_point(seq: Sequence) -> int | None:
    """Index of the first state equal to its successor in ``seq`` (lasso detector)."""
    for t in range(len(seq) - 1):
        if seq[t] == seq[t + 1]:
            return t
    return None


@dataclass(frozen=True)
class Labeling:
    """Letter regions partitioning the state set.

    ``regions`` maps letters to sets; finite systems may pass ``state_letters``
    (state -> letter) instead, which is converted to finite regions.
    """

    alphabet: tuple[str, ...]
    regions: Mapping[str, object]

    @classmethod
    def from_states(cls, variables, state_letters: Mapping, alphabet=None) -> "Labeling":
        n = len(tuple(variables))
        groups: dict[str, set] = {}
        for s, a in state_letters.items():
            groups.setdefault(a, set()).add(_as_tuple(s, n))
        alphabet = tuple(alphabet) if alphabet else tuple(sorted(groups))
        regions = {a: FiniteSet(tuple(variables), frozenset(groups.get(a, ()))) for a in alphabet}
        return cls(alphabet, regions)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        unknown = set(self.regions) - set(self.alphabet)
        if unknown:
            raise InputError(f"regions given for undeclared letters {sorted(unknown)}")

    def letters_at(self, point) -> list[str]:
        return [a for a in self.alphabet if a in self.regions and self.regions[a].contains(point)]

    def label(self, point) -> str:
        hits = self.letters_at(point)
        if len(hits) != 1:
            what = "no region" if not hits else f"several regions {hits}"
            raise LabelingError(f"state {point} lies in {what}")
        return hits[0]

    def label_array(self, points: np.ndarray) -> np.ndarray:
        """Index into ``alphabet`` per point; -1 where unlabeled, -2 where overlapping."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.full(len(pts), -1, dtype=int)
        for k, a in enumerate(self.alphabet):
            region = self.regions[a]
            if isinstance(region, FiniteSet):
                mask = np.array([region.contains(tuple(rational(v) for v in row)) for row in pts])
            else:
                mask = region.contains_array(pts)
            out[mask & (out >= 0)] = -2
            out[mask & (out == -1)] = k
        return out

    def validate_partition(self, points: np.ndarray) -> None:
        idx = self.label_array(points)
        if (idx == -2).any():
            bad = np.asarray(points)[idx == -2][0]
            raise LabelingError(f"label regions overlap at {bad.tolist()}")
        if (idx == -1).any():
            bad = np.asarray(points)[idx == -1][0]
            raise LabelingError(f"no label region contains {bad.tolist()}")


def label_trace(seq: Sequence, lab: Labeling) -> list[str]:
    return [lab.label(s) for s in seq]


@dataclass(frozen=True)
class CounterSystem:
    """System plus a region that may be visited at most ``bound`` times."""

    base: DynamicalSystem
    visit_set: object
    bound: int

    def __post_init__(self):
        if self.bound < 0:
            raise InputError("visit bound k must be nonnegative")

    def with_bound(self, k: int) -> "CounterSystem":
        return CounterSystem(self.base, self.visit_set, k)

    def initial_counter(self, x0) -> int:
        return 1 if self.visit_set.contains(x0) else 0


def extend_with_counter(cs: CounterSystem) -> DynamicalSystem:
    """Explicit finite system over states ``(x..., i)`` with i saturating at k+1."""
    base = cs.base
    if not base.is_finite:
        raise UnsupportedError(
            "explicit counter extension needs a finite-table system; polynomial systems "
            "handle the counter inside condition generation"
        )
    top = cs.bound + 1
    counter = "counter" if "counter" not in base.variables else "counter_"
    states, table, initial = [], {}, []
    for x, i in itertools.product(base.states(), range(top + 1)):
        s = x + (Fraction(i),)
        states.append(s)
        fx = base.table[x]
        j = min(top, i + 1) if cs.visit_set.contains(fx) else i
        table[s] = fx + (Fraction(j),)
    for x0 in base.initial_states():
        initial.append(x0 + (Fraction(cs.initial_counter(x0)),))
    variables = base.variables + (counter,)
    return DynamicalSystem(
        variables,
        FiniteSet(variables, frozenset(states)),
        FiniteSet(variables, frozenset(initial)),
        table=table,
    )


def polynomial_system(variables, updates: Mapping[str, str | Polynomial], state_set, initial_set,
                      strict: bool = False) -> DynamicalSystem:
    """Convenience constructor parsing update expressions."""
    from .poly import parse_poly

    dyn = {v: (p if isinstance(p, Polynomial) else parse_poly(p, variables))
           for v, p in updates.items()}
    return DynamicalSystem(tuple(variables), state_set, initial_set, dynamics=dyn, strict=strict)


def finite_system(states, table: Mapping, initial, variables=("x",)) -> DynamicalSystem:
    variables = tuple(variables)
    n = len(variables)
    pts = frozenset(_as_tuple(s, n) for s in states)
    return DynamicalSystem(
        variables,
        FiniteSet(variables, pts),
        FiniteSet(variables, frozenset(_as_tuple(s, n) for s in initial)),
        table=table,
    )


def interval_set(var: str, lo, hi, lo_open: bool = False, hi_open: bool = False,
                 variables=None) -> SemialgebraicSet:
    """``{lo <= var <= hi}`` with optional open ends."""
    variables = tuple(variables) if variables else (var,)
    x = Polynomial.var(var, variables)
    return SemialgebraicSet(variables, ((x - rational(lo), lo_open), (rational(hi) - x, hi_open)))
