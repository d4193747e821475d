"""Command-line entry point: ``cbbc synthesize|check|simulate|lift|emit-sos``.

Exit codes
  0  success / pass
  1  input error (bad file, bad flag, signature mismatch, x0 outside X0)
  2  inconclusive (synthesis or lifting found nothing; never a refutation)
  3  check failed (counterexamples printed)
  4  check unknown (certified mode could not decide a region)
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from fractions import Fraction

import numpy as np

from .automata import max_accepting_visits, prefix_respects_k, unroll
from .cegis import CegisConfig, escalate_k, synthesize
from .certify import CheckConfig, check_certificate
from .errors import CbbcError, InputError, LabelingError, ResourceError, SolverError
from .formats import (Problem, load_problem, margin_table, margin_table_text,
                      parse_point, report_json, report_text, write_certificate)
from .lift import lift
from .model import count_visits, label_trace
from .poly import FiniteSet, format_number, format_point
from .sosout import emit_sos_cbbc, emit_sos_product

EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE, EXIT_FAIL, EXIT_UNKNOWN = 0, 1, 2, 3, 4
SEED_ENV = "CBBC_SEED"

log = logging.getLogger("cbbc")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; that code means 'inconclusive' here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _emit(args, title, fields, check=None, margins=None):
    if args.json:
        sys.stdout.write(report_json(title, fields, check, margins))
    else:
        extra = margin_table_text(*margins) if margins else ""
        sys.stdout.write(report_text(title, fields, check, extra))


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}")


def _state_names(prob: Problem, unrolled=False):
    if prob.automaton is None:
        return None
    aut = unroll(prob.automaton) if unrolled else prob.automaton
    return aut.states


# ---------------------------------------------------------------------------
# synthesize
# ---------------------------------------------------------------------------


def _cegis_config(args, prob: Problem) -> CegisConfig:
    over = {k: v for k, v in prob.cegis.items() if k in CegisConfig.__dataclass_fields__}
    cfg = CegisConfig(**over)
    if args.table:
        cfg.degree = None
    elif args.degree is not None:
        cfg.degree = args.degree
    if args.rounds is not None:
        cfg.rounds = args.rounds
    if args.samples is not None:
        cfg.samples = args.samples
    cfg.seed = args.seed
    cfg.threads = args.threads
    if cfg.degree is None and not prob.system.is_finite:
        raise InputError("table certificates need a finite-table system")
    return cfg


def _clash(prob: Problem, seed: int):
    """A point of X0 & Xu, if sampling finds one (classic barriers cannot exist then)."""
    x0, xu = prob.system.initial_set, prob.unsafe
    if isinstance(x0, FiniteSet):
        both = sorted(p for p in x0.points if xu.contains(p))
        return both[0] if both else None
    from .certify import sample_points

    pts = sample_points(prob.system, 201, 2000, seed)
    mask = x0.contains_array(pts) & (xu.contains_array(pts) if not isinstance(xu, FiniteSet)
                                     else np.zeros(len(pts), bool))
    if mask.any():
        return tuple(Fraction(repr(float(v))) for v in pts[mask][0])
    return None


def cmd_synthesize(args) -> int:
    prob = load_problem(args.problem)
    cfg = _cegis_config(args, prob)
    fields = {"problem": args.problem, "mode": prob.mode,
              "degree": "table" if cfg.degree is None else cfg.degree, "seed": cfg.seed}
    if prob.mode == "classic":
        hit = _clash(prob, cfg.seed)
        if hit is not None:
            fields["status"] = "inconclusive"
            fields["diagnosis"] = (f"initial and unsafe sets overlap at x={format_point(hit)}; "
                                   "no barrier certificate can separate them")
            _emit(args, "synthesize", fields)
            return EXIT_INCONCLUSIVE
    k = args.k if args.k is not None else prob.default_k()
    k_max = args.k_max if args.k_max is not None else prob.cegis.get("k_max")
    t0 = time.perf_counter()
    if prob.mode == "classic":
        res, k = synthesize(prob.conditions(), cfg), None
        attempts = [res]
    elif k is not None and (k_max is None or args.k is not None):
        res = synthesize(prob.conditions(k), cfg)
        attempts = [res]
    else:
        k_max = 4 if k_max is None else k_max
        k_min = prob.cegis.get("k_min", 0) if k is None else k
        esc = escalate_k(prob.conditions, k_max, cfg, k_min)
        attempts = esc.attempts
        res = esc.result if esc.success else attempts[-1]
        k = esc.k
    fields["elapsed_s"] = f"{time.perf_counter() - t0:.3f}"
    fields["attempts"] = "; ".join(f"k={a.k}: {a.status}" for a in attempts)
    if not res.success:
        fields["status"] = "inconclusive"
        fields["diagnosis"] = res.message or "no certificate found within the budget"
        _emit(args, "synthesize", fields, res.report)
        return EXIT_INCONCLUSIVE
    cand = res.candidate
    fields["status"] = "success"
    fields["k"] = k
    fields["rounds"] = len(res.rounds)
    fields["certificate"] = str(cand.polynomial) if cand.polynomial is not None else \
        f"{cand.kind} ({len(cand.table or cand.pieces or ())} entries)"
    text = write_certificate(cand, _state_names(prob), k=k)
    if args.out:
        _write(args.out, text)
        fields["written"] = args.out
    _emit(args, "synthesize", fields, res.report)
    if not args.out and not args.json:
        sys.stdout.write("-- certificate --\n" + text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    prob = load_problem(args.problem)
    with open(args.certificate, encoding="utf-8") as fh:
        text = fh.read()
    from .formats import certificate_mentions_unrolled, parse_certificate

    unrolled = certificate_mentions_unrolled(text)
    aut = prob.automaton
    if unrolled:
        if aut is None:
            raise InputError("an unrolled certificate needs a problem with an [automaton]")
        aut = unroll(aut)
    cert = parse_certificate(text, aut)
    cand = cert.candidate
    if cand.signature != prob.signature:
        raise InputError(f"certificate signature {cand.signature!r} does not match the "
                         f"problem ({prob.signature!r})")
    if cand.variables != prob.system.variables:
        raise InputError(f"certificate variables {cand.variables} differ from the problem's "
                         f"{prob.system.variables}")
    if unrolled:
        from .certify import product_cbbc_conditions

        k = args.k if args.k is not None else (cert.k if cert.k is not None else 0)
        conds = product_cbbc_conditions(prob.system, prob.labeling,
                                        aut.with_semantics("kUCA", k), k)
    else:
        k = args.k if args.k is not None else prob.default_k()
        if k is None:
            k = cert.k
        elif cert.k is not None and cert.k != k:
            raise InputError(f"certificate was built for k={cert.k} but k={k} was requested")
        conds = prob.conditions(k)
    cfg = CheckConfig(grid=args.grid, random_points=args.random, seed=args.seed,
                      threads=args.threads, depth=args.depth)
    report = check_certificate(cand, conds, args.mode, Fraction(args.tolerance), cfg)
    margins = None
    if args.margins:
        cols, rows = margin_table(cand, conds, args.margins)
        margins = ([c.split(":")[0] for c in cols], rows)
    fields = {"problem": args.problem, "certificate": args.certificate,
              "signature": cand.signature, "k": k}
    _emit(args, "check", fields, report, margins)
    return {"pass": EXIT_OK, "fail": EXIT_FAIL, "unknown": EXIT_UNKNOWN}[report.verdict]


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _trace_stats(prob: Problem, seq, k):
    """(label list or None, visit count, prefix verdict or None)."""
    if prob.mode == "cbbc":
        return None, count_visits(seq, prob.visit), None
    if prob.mode == "classic":
        return None, count_visits(seq, prob.unsafe), None
    labels = label_trace(seq, prob.labeling)
    visits = max_accepting_visits(prob.automaton, labels, len(labels) + 1)
    ok = None if k is None else prefix_respects_k(prob.automaton, labels, k)
    return labels, visits, ok


def _sample_initial(prob: Problem, n: int, seed: int) -> np.ndarray:
    system = prob.system
    box = system.initial_set.bounding_box()
    if box is None:
        raise InputError("sampling initial states needs a bounded initial set")
    vs = system.variables
    lo = np.array([float(box[v].lower) for v in vs])
    hi = np.array([float(box[v].upper) for v in vs])
    rng = np.random.default_rng(seed)
    out = np.empty((0, len(vs)))
    while len(out) < n:
        cand = lo + (hi - lo) * rng.random((2 * n, len(vs)))
        out = np.concatenate([out, cand[system.initial_set.contains_array(cand)]])
    return out[:n]


def _simulate_many(args, prob: Problem, k) -> int:
    system = prob.system
    fields = {"problem": args.problem, "mode": prob.mode, "horizon": args.horizon}
    if system.is_finite:
        starts = system.initial_states()
        counts = []
        for x0 in starts:
            seq = system.simulate(x0, args.horizon)
            counts.append(_trace_stats(prob, seq, k)[1])
        fields["initial_states"] = len(starts)
        fields["sampling"] = "exhaustive"
    else:
        pts = _sample_initial(prob, args.samples, args.seed)
        traj = system.simulate_array(pts, args.horizon)
        if prob.mode in ("cbbc", "classic"):
            region = prob.visit if prob.mode == "cbbc" else prob.unsafe
            hits = np.stack([region.contains_array(traj[t]) for t in range(args.horizon + 1)])
            counts = hits.sum(axis=0).tolist()
        else:
            lab = prob.labeling
            letters = np.stack([lab.label_array(traj[t]) for t in range(args.horizon + 1)])
            if (letters < 0).any():
                raise LabelingError("some sampled state has no unique label")
            counts = []
            for col in letters.T:
                word = [lab.alphabet[j] for j in col]
                counts.append(max_accepting_visits(prob.automaton, word, len(word) + 1))
        fields["initial_states"] = len(pts)
        fields["sampling"] = f"uniform over X0, seed {args.seed}"
    fields["max_visits"] = max(counts) if counts else 0
    fields["min_visits"] = min(counts) if counts else 0
    if k is not None:
        fields["k"] = k
        fields["all_within_k"] = "yes" if fields["max_visits"] <= k else "no"
    _emit(args, "simulate", fields)
    return EXIT_OK


def cmd_simulate(args) -> int:
    prob = load_problem(args.problem)
    system = prob.system
    k = args.k if args.k is not None else prob.default_k()
    if args.x0 is None:
        return _simulate_many(args, prob, k)
    x0 = parse_point(args.x0 if "," not in args.x0 else f"({args.x0})", system.dimension)
    if not system.initial_set.contains(x0) and not args.anywhere:
        raise InputError(f"x0 = {format_point(x0)} is outside the initial set (use --anywhere)")
    if not system.state_set.contains(x0):
        raise InputError(f"x0 = {format_point(x0)} is outside the state set")
    seq = system.simulate(x0, args.horizon)
    labels, visits, ok = _trace_stats(prob, seq, k)
    rows = []
    region = prob.visit if prob.mode == "cbbc" else prob.unsafe
    running = 0
    front_counts = []
    if labels is not None:
        for t in range(len(labels)):
            front_counts.append(max_accepting_visits(prob.automaton, labels[:t + 1],
                                                     len(labels) + 1))
    for t, x in enumerate(seq):
        row = {"t": t, "x": format_point(x), "x_decimal": format_number(x[0], True)
               if len(x) == 1 else ", ".join(format_number(v, True) for v in x)}
        if labels is not None:
            row["label"] = labels[t]
            row["accepting_visits"] = front_counts[t]
        else:
            inside = region.contains(x)
            running += inside
            row["inside"] = "yes" if inside else "no"
            row["visits"] = running
        rows.append(row)
    fields = {"problem": args.problem, "mode": prob.mode, "x0": format_point(x0),
              "horizon": args.horizon, "visits": visits}
    if k is not None:
        fields["k"] = k
        fields["prefix_respects_k"] = "yes" if (ok if ok is not None else visits <= k) else "no"
    if args.json:
        fields["trace"] = rows
        _emit(args, "simulate", fields)
    else:
        lines = []
        for r in rows:
            extra = (f"label {r['label']}  accepting visits {r['accepting_visits']}"
                     if "label" in r else f"in region {r['inside']:<3}  visits {r['visits']}")
            lines.append(f"  t={r['t']:<4} x={r['x_decimal']:<18} {extra}")
        _emit(args, "simulate", fields)
        sys.stdout.write("trace:\n" + "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# lift
# ---------------------------------------------------------------------------


def cmd_lift(args) -> int:
    prob = load_problem(args.problem)
    if prob.automaton is None:
        raise InputError("lift needs a problem with an [automaton] section")
    aut = prob.automaton
    note = None
    if aut.semantics != "NBA":
        # same structure, read as the NBA of the complement
        note = f"{aut.semantics} structure read as an NBA"
        aut = aut.with_semantics("NBA", None)
    top = args.degree if args.degree is not None else (prob.cegis.get("degree") or 2)
    cfg = CegisConfig(**{k: v for k, v in prob.cegis.items()
                         if k in CegisConfig.__dataclass_fields__})
    cfg.seed, cfg.threads = args.seed, args.threads
    check_cfg = CheckConfig(seed=args.seed, threads=args.threads)
    res = lift(prob.system, prob.labeling, aut, cfg, check_cfg,
               degrees=tuple(range(1, top + 1)), threads=args.threads)
    fields = {"problem": args.problem, "status": res.status,
              "unrolled_states": ", ".join(res.unrolled.states)}
    if note:
        fields["note"] = note
    for n, (path, tb) in enumerate(sorted(res.cuts.items())):
        t = tb.triplet
        fields[f"cut_{n}"] = (f"path {' -> '.join(path)} cut at ({t.first},{t.middle},{t.last}) "
                              f"by B = {tb.barrier.polynomial}")
    for m in res.merged:
        fields[f"merged_{m.middle}"] = f"{m.how}: {m.piece}"
    if res.left or res.right:
        fields["left"] = ", ".join(res.left)
        fields["right"] = ", ".join(res.right)
    if res.shift is not None:
        fields["shift"] = str(res.shift)
    if res.displayed is not None:
        fields["displayed_constants"] = ", ".join(str(v) for v in res.displayed)
    if res.message:
        fields["diagnosis"] = res.message
    if res.candidate is not None and args.out and res.success:
        _write(args.out, write_certificate(res.candidate, res.unrolled.states, unrolled=True, k=0))
        fields["written"] = args.out
    _emit(args, "lift", fields, res.report)
    if res.success and not args.out and not args.json:
        sys.stdout.write("-- certificate --\n"
                         + write_certificate(res.candidate, res.unrolled.states, unrolled=True, k=0))
    return EXIT_OK if res.success else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# emit-sos
# ---------------------------------------------------------------------------


def cmd_emit_sos(args) -> int:
    prob = load_problem(args.problem)
    degree = args.degree if args.degree is not None else (prob.cegis.get("degree") or 2)
    k = args.k if args.k is not None else prob.default_k()
    if prob.mode == "cbbc":
        prog = emit_sos_cbbc(prob.counter_system(k), degree, args.multiplier_degree,
                             overrides=prob.sos)
    elif prob.mode == "classic":
        from .model import CounterSystem

        prog = emit_sos_cbbc(CounterSystem(prob.system, prob.unsafe, 0), degree,
                             args.multiplier_degree, overrides=prob.sos)
        prog.notes.append("classic barrier: k = 0 with the unsafe set as the visit set")
    else:
        if k is None:
            raise InputError("no bound k for the automaton: pass --k")
        prog = emit_sos_product(prob.system, prob.labeling, prob.kuca(k), degree,
                                args.multiplier_degree, k)
    text = prog.to_text()
    if args.out:
        _write(args.out, text)
        sys.stderr.write(f"wrote {len(prog.constraints)} constraints to {args.out}\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cbbc", description="co-Buchi barrier certificate toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    threads = os.cpu_count() or 1

    def common(sp, seed=True):
        sp.add_argument("problem", help="problem file")
        sp.add_argument("--json", action="store_true", help="machine-readable report")
        sp.add_argument("--threads", type=int, default=threads,
                        help="worker threads (default: available cores)")
        if seed:
            sp.add_argument("--seed", type=int, default=None,
                            help=f"random seed (default: ${SEED_ENV} or 0)")
        sp.add_argument("--k", type=int, default=None, help="visit bound k")

    sp = sub.add_parser("synthesize", help="search for a certificate by CEGIS")
    common(sp)
    sp.add_argument("--degree", type=int, default=None)
    sp.add_argument("--table", action="store_true", help="table certificate (finite systems)")
    sp.add_argument("--k-max", type=int, default=None, help="escalate k up to this bound")
    sp.add_argument("--rounds", type=int, default=None)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--out", default=None, help="certificate output file")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("check", help="check a certificate against a problem")
    common(sp)
    sp.add_argument("certificate", help="certificate file")
    sp.add_argument("--mode", choices=("sampled", "certified"), default="sampled")
    sp.add_argument("--tolerance", default="0")
    sp.add_argument("--grid", type=int, default=2001)
    sp.add_argument("--random", type=int, default=10_000)
    sp.add_argument("--depth", type=int, default=12, help="bisection depth per dimension")
    sp.add_argument("--margins", type=int, default=0, metavar="N",
                    help="print decrease-condition values on an N-point grid")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="simulate traces and count visits")
    common(sp)
    sp.add_argument("--x0", default=None, help="initial state (comma-separated coordinates)")
    sp.add_argument("--horizon", type=int, default=20)
    sp.add_argument("--anywhere", action="store_true", help="allow x0 outside X0")
    sp.add_argument("--samples", type=int, default=1000,
                    help="number of sampled initial states when --x0 is absent")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("lift", help="lift state-triplet barriers to a CBBC")
    common(sp)
    sp.add_argument("--degree", type=int, default=None, help="largest triplet barrier degree")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_lift)

    sp = sub.add_parser("emit-sos", help="write the SOS program as a .sosp document")
    common(sp, seed=False)
    sp.add_argument("--degree", type=int, default=None)
    sp.add_argument("--multiplier-degree", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_emit_sos)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if hasattr(args, "tolerance"):
            try:
                args.tolerance = str(Fraction(args.tolerance))
            except (ValueError, ZeroDivisionError):
                raise InputError(f"bad tolerance {args.tolerance!r}")
        return args.func(args)
    except (SolverError, ResourceError) as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (CbbcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
