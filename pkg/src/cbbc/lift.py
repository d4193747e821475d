"""State-triplet barriers and their lifting to a product CBBC with k = 0.

Pipeline: unroll the automaton once, enumerate simple paths from an initial
state to an accepting state, cut each path at the first triplet that admits
a classic barrier, merge barriers sharing a middle state, split the states
into a left part and a right part, and build a piecewise certificate that
is then checked against the product conditions.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .automata import OmegaAutomaton, Triplet, enumerate_triplets, unroll
from .certify import (CertificateCandidate, CheckConfig, CheckReport, Condition, ConditionSystem,
                      Domain, ExtremumPiece, Piece, PolyPiece, TablePiece, Term, _meet,
                      check_certificate, constant_piece, product_cbbc_conditions, sample_points,
                      shift_piece)
from .cegis import CegisConfig, synthesize
from .errors import InputError, LiftError
from .model import DynamicalSystem, Labeling
from .poly import SemialgebraicSet, bound_on_box, format_number, rational

log = logging.getLogger(__name__)


@dataclass
class TripletBarrier:
    triplet: Triplet
    barrier: CertificateCandidate | None
    status: str                        # found | not-found
    note: str = ""

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass
class MergedBarrier:
    middle: str
    piece: Piece
    sources: list[TripletBarrier]
    how: str                           # single | max | min


@dataclass
class LiftResult:
    status: str                        # success | inconclusive | failed
    unrolled: OmegaAutomaton
    cuts: dict = field(default_factory=dict)          # path tuple -> TripletBarrier
    uncut: list = field(default_factory=list)         # [(path, [TripletBarrier, ...])]
    merged: list[MergedBarrier] = field(default_factory=list)
    left: tuple = ()
    right: tuple = ()
    shift: Fraction | None = None
    left_value: Fraction | None = None
    displayed: tuple | None = None    # (max of B_i over a_i, min of B_i over b_i)
    candidate: CertificateCandidate | None = None
    report: CheckReport | None = None
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == "success"


def _union_regions(lab: Labeling, letters):
    missing = [a for a in letters if a not in lab.regions]
    if missing:
        raise InputError(f"no label region for letters {missing}")
    return [lab.regions[a] for a in sorted(letters)]


def triplet_conditions(system: DynamicalSystem, lab: Labeling, triplet: Triplet) -> ConditionSystem:
    """Classic barrier conditions with X0 := first-letter regions, Xu := second-letter regions."""
    X = system.state_set
    conds = []
    for a, region in zip(sorted(triplet.first_letters), _union_regions(lab, triplet.first_letters)):
        conds.append(Condition("init", f"init: B(x) <= 0 on X_{a}", Domain(_meet(X, region)),
                               (Term(1, ()),)))
    for b, region in zip(sorted(triplet.second_letters),
                         _union_regions(lab, triplet.second_letters)):
        conds.append(Condition("unsafe", f"unsafe: B(x) > 0 on X_{b}", Domain(_meet(X, region)),
                               (Term(1, ()),), strict=True))
    conds.append(Condition("decrease", "decrease: B(f(x)) - B(x) <= 0 on X", Domain(X),
                           (Term(1, (), True), Term(-1, ()))))
    return ConditionSystem("classic", "state", system, conds, ())


def find_barrier(system, lab, triplet: Triplet, cfg: CegisConfig, degrees) -> TripletBarrier:
    common = set(triplet.first_letters) & set(triplet.second_letters)
    if common:
        shared = ",".join(sorted(common))
        return TripletBarrier(triplet, None, "not-found",
                              f"the edges ({triplet.first},{triplet.middle}) and "
                              f"({triplet.middle},{triplet.last}) share the label {shared}")
    conds = triplet_conditions(system, lab, triplet)
    tried = []
    for d in degrees:
        run_cfg = CegisConfig(**{**cfg.__dict__, "degree": d})
        res = synthesize(conds, run_cfg)
        tried.append(f"degree {d}: {res.message or res.status}")
        if res.success:
            return TripletBarrier(triplet, res.candidate, "found")
    return TripletBarrier(triplet, None, "not-found", "; ".join(tried))


def find_triplet_barriers(system, lab, unrolled: OmegaAutomaton, cfg: CegisConfig | None = None,
                          degrees=(1, 2), cap: int = 10_000, threads: int = 1):
    """Per simple path, the first triplet (in path order) that admits a classic barrier.

    Returns ``(cuts, uncut)`` with ``cuts`` mapping path tuples to the chosen
    barrier and ``uncut`` listing paths with every attempted triplet.
    """
    cfg = cfg or CegisConfig()
    if system.is_finite:
        degrees = (None,)
    paths = enumerate_triplets(unrolled, cap)
    cache: dict = {}

    def attempt(t: Triplet) -> TripletBarrier:
        key = (t.first, t.middle, t.last)
        if key not in cache:
            cache[key] = find_barrier(system, lab, t, cfg, degrees)
        return cache[key]

    distinct = {}
    for _, triplets in paths:
        for t in triplets:
            distinct.setdefault((t.first, t.middle, t.last), t)
    if threads > 1 and len(distinct) > 1:
        with ThreadPoolExecutor(threads) as pool:
            for key, tb in zip(distinct, pool.map(
                    lambda t: find_barrier(system, lab, t, cfg, degrees), distinct.values())):
                cache[key] = tb
    cuts, uncut = {}, []
    for path, triplets in paths:
        tried = []
        for t in triplets:
            tb = attempt(t)
            tried.append(tb)
            if tb.found:
                cuts[tuple(path)] = tb
                break
        else:
            uncut.append((tuple(path), tried))
    return cuts, uncut


def _barrier_piece(tb: TripletBarrier, variables) -> Piece:
    cand = tb.barrier
    if cand.table is not None:
        return TablePiece.from_dict(variables, {x: v for (x, _), v in cand.table.items()})
    return cand.piece(())


def merge_shared_middle(cuts: dict, variables) -> tuple[list[MergedBarrier], list[TripletBarrier]]:
    """One barrier per middle state: max on a shared incoming edge, min on a shared outgoing
    edge; groups with neither are dropped (returned second)."""
    groups: dict[str, list[TripletBarrier]] = {}
    for tb in cuts.values():
        group = groups.setdefault(tb.triplet.middle, [])
        if all((g.triplet.first, g.triplet.last) != (tb.triplet.first, tb.triplet.last)
               for g in group):
            group.append(tb)
    merged, dropped = [], []
    for middle in sorted(groups):
        group = groups[middle]
        pieces = tuple(_barrier_piece(tb, variables) for tb in group)
        if len(group) == 1:
            merged.append(MergedBarrier(middle, pieces[0], group, "single"))
        elif len({tb.triplet.first for tb in group}) == 1:
            merged.append(MergedBarrier(middle, ExtremumPiece("max", pieces), group, "max"))
        elif len({tb.triplet.last for tb in group}) == 1:
            merged.append(MergedBarrier(middle, ExtremumPiece("min", pieces), group, "min"))
        else:
            dropped.extend(group)
    return merged, dropped


def partition_states(unrolled: OmegaAutomaton, paths, middles) -> tuple[tuple, tuple]:
    """Left part: every state that is, or precedes, a surviving middle state on some path."""
    middles = set(middles)
    left = set()
    for path in paths:
        cut_at = next((n for n, q in enumerate(path) if q in middles and 0 < n < len(path) - 1),
                      None)
        if cut_at is None:
            raise LiftError(f"path {' -> '.join(path)} has no surviving cut")
        left.update(path[: cut_at + 1])
    if left & set(unrolled.accepting):
        raise LiftError("an accepting state fell into the left part")
    order = list(unrolled.states)
    right = [q for q in order if q not in left]
    return tuple(q for q in order if q in left), tuple(right)


def _region_max(piece: Piece, system: DynamicalSystem, region, after_step: bool,
                cfg: CheckConfig, depth: int = 10):
    """Upper bound of ``piece`` (at f(x) when ``after_step``) over ``X & region``.

    Finite sets are enumerated exactly; boxes use interval bisection; otherwise
    the sampled maximum plus a 1e-6 safety margin is returned.
    """
    vs = system.variables
    dom = _meet(system.state_set, region)
    if system.is_finite:
        vals = []
        for x in system.states():
            if dom.contains(x):
                y = system.successor(x) if after_step else x
                vals.append(piece.evaluate(dict(zip(vs, y))))
        return max(vals) if vals else None, True
    box = dom.bounding_box() if isinstance(dom, SemialgebraicSet) else None
    if box is not None and not after_step and isinstance(piece, PolyPiece):
        return bound_on_box(piece.poly, box, depth).upper, True
    if box is not None and after_step and isinstance(piece, PolyPiece):
        composed = piece.poly.compose(system.dynamics)
        return bound_on_box(composed, box, depth).upper, True
    pts = sample_points(system, cfg.grid, cfg.random_points, cfg.seed)
    mask = dom.contains_array(pts)
    if not mask.any():
        return None, False
    p = pts[mask]
    if after_step:
        p = system.successor_array(p)
    return Fraction(float(piece.eval_array(p, vs).max())) + Fraction(1, 10**6), False


def _region_min(piece: Piece, system, region, cfg: CheckConfig, depth: int = 10):
    vs = system.variables
    dom = _meet(system.state_set, region)
    if system.is_finite:
        vals = [piece.evaluate(dict(zip(vs, x))) for x in system.states() if dom.contains(x)]
        return (min(vals) if vals else None), True
    box = dom.bounding_box() if isinstance(dom, SemialgebraicSet) else None
    if box is not None and isinstance(piece, PolyPiece):
        return bound_on_box(piece.poly, box, depth).lower, True
    pts = sample_points(system, cfg.grid, cfg.random_points, cfg.seed)
    mask = dom.contains_array(pts)
    if not mask.any():
        return None, False
    return Fraction(float(piece.eval_array(pts[mask], vs).min())) - Fraction(1, 10**6), False


def lift_to_cbbc(system, lab, unrolled: OmegaAutomaton, merged: list[MergedBarrier], left, right,
                 cfg: CheckConfig | None = None):
    """Piecewise product certificate for k = 0.

    With ``delta = -max_i max_{x in X_{a_i}} B_i(f(x)) > 0`` and ``s = delta / 2``:
    middle states get ``B_i(x) + s``, the other left states ``s - delta`` and the
    right states ``s``.  Returns ``(candidate, s, left value, displayed constants)``.
    """
    cfg = cfg or CheckConfig()
    vs = system.variables
    worst_next = None
    disp_left, disp_right = None, None
    for mb in merged:
        for tb in mb.sources:
            for a in sorted(tb.triplet.first_letters):
                hi, _ = _region_max(mb.piece, system, lab.regions[a], True, cfg)
                if hi is not None:
                    worst_next = hi if worst_next is None else max(worst_next, hi)
                own, _ = _region_max(_barrier_piece(tb, vs), system, lab.regions[a], False, cfg)
                if own is not None:
                    disp_left = own if disp_left is None else max(disp_left, own)
            for b in sorted(tb.triplet.second_letters):
                low, _ = _region_min(_barrier_piece(tb, vs), system, lab.regions[b], cfg)
                if low is not None:
                    disp_right = low if disp_right is None else min(disp_right, low)
    if worst_next is None:
        delta = Fraction(2)
    else:
        delta = -rational(worst_next)
    if delta <= 0:
        raise LiftError(f"barriers do not decrease strictly into the middle states: "
                        f"max B(f(x)) over the incoming regions is {format_number(-delta, True)}")
    s = delta / 2
    left_value = s - delta
    middle_pieces = {mb.middle: shift_piece(mb.piece, s) for mb in merged}
    pieces = {}
    for q in unrolled.states:
        i = unrolled.index(q)
        if q in middle_pieces:
            piece = middle_pieces[q]
        elif q in left:
            piece = constant_piece(left_value, vs)
        else:
            piece = constant_piece(s, vs)
        for l in (0, 1):
            pieces[(i, l)] = piece
    cand = CertificateCandidate("product", vs, ("i", "l"), pieces=pieces,
                                provenance="lifted from state-triplet barriers")
    return cand, s, left_value, (disp_left, disp_right)


def lift(system: DynamicalSystem, lab: Labeling, aut: OmegaAutomaton,
         cegis_cfg: CegisConfig | None = None, check_cfg: CheckConfig | None = None,
         degrees=(1, 2), cap: int = 10_000, threads: int = 1) -> LiftResult:
    """Run the whole state-triplet pipeline and check the lifted certificate at k = 0."""
    unrolled = unroll(aut).with_semantics("kUCA", 0)
    paths = [tuple(p) for p, _ in enumerate_triplets(unrolled, cap)]
    if not paths:
        vs = system.variables
        pieces = {(unrolled.index(q), l): constant_piece(-1, vs)
                  for q in unrolled.states for l in (0, 1)}
        cand = CertificateCandidate("product", vs, ("i", "l"), pieces=pieces,
                                    provenance="no accepting state is reachable")
        report = check_certificate(cand, product_cbbc_conditions(system, lab, unrolled, 0),
                                   "sampled", 0, check_cfg)
        status = "success" if report.passed else "failed"
        return LiftResult(status, unrolled, candidate=cand, report=report,
                          left=tuple(unrolled.states), message="no simple path reaches acceptance")
    cuts, uncut = find_triplet_barriers(system, lab, unrolled, cegis_cfg, degrees, cap, threads)
    result = LiftResult("inconclusive", unrolled, cuts, uncut)
    if uncut:
        lines = []
        for path, tried in uncut:
            reasons = "; ".join(f"({t.triplet.first},{t.triplet.middle},{t.triplet.last}): "
                                f"{t.note or 'no barrier'}" for t in tried)
            lines.append(f"cannot cut path {' -> '.join(path)} [{reasons}]")
        result.message = "\n".join(lines)
        return result
    merged, dropped = merge_shared_middle(cuts, system.variables)
    result.merged = merged
    try:
        left, right = partition_states(unrolled, paths, [m.middle for m in merged])
        cand, s, lv, disp = lift_to_cbbc(system, lab, unrolled, merged, left, right, check_cfg)
    except LiftError as exc:
        result.status = "failed"
        result.message = str(exc)
        if dropped:
            result.message += f" ({len(dropped)} barriers dropped while merging)"
        return result
    result.left, result.right = left, right
    result.shift, result.left_value, result.displayed = s, lv, disp
    result.candidate = cand
    conds = product_cbbc_conditions(system, lab, unrolled, 0)
    report = check_certificate(cand, conds, "sampled", 0, check_cfg)
    result.report = report
    result.status = "success" if report.passed else "failed"
    if not report.passed:
        result.message = "lifted certificate failed the product check"
    return result
