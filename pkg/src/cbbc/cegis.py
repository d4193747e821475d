"""Counterexample-guided synthesis of polynomial (or table) certificates.

Each round solves a linear program over the template coefficients that
maximizes the smallest normalized slack over the current sample set, then
asks the sampled checker for counterexamples and adds them to the samples.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .certify import (CertificateCandidate, CheckConfig, CheckReport, ConditionSystem,
                      check_certificate, check_finite)
from .errors import InputError, SolverError, UnsupportedError
from .poly import Polynomial, SemialgebraicSet, monomial_basis, rational

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------


class PolynomialTemplate:
    """All monomials up to ``degree`` in the state variables and index names.

    State variables enter through ``u = (x - center) / half`` so the linear
    programs stay well conditioned; :meth:`to_candidate` undoes the scaling
    exactly.
    """

    def __init__(self, variables, index_names, degree: int, signature: str, box=None):
        if degree < 0:
            raise InputError("template degree must be nonnegative")
        self.variables = tuple(variables)
        self.index_names = tuple(index_names)
        self.degree = degree
        self.signature = signature
        self.all_vars = self.variables + self.index_names
        self.basis = monomial_basis(self.all_vars, degree)
        self.center, self.half = [], []
        for v in self.variables:
            if box is not None and v in box:
                lo, hi = rational(box[v].lower), rational(box[v].upper)
                self.center.append((lo + hi) / 2)
                self.half.append(max((hi - lo) / 2, Fraction(1)) if hi == lo else (hi - lo) / 2)
            else:
                self.center.append(Fraction(0))
                self.half.append(Fraction(1))
        self._exps = np.array([next(iter(m.terms)) for m in self.basis], dtype=float)

    @property
    def size(self) -> int:
        return len(self.basis)

    def features(self, pts: np.ndarray, idx: tuple) -> np.ndarray:
        n = len(pts)
        cols = [(pts[:, d] - float(self.center[d])) / float(self.half[d])
                for d in range(len(self.variables))]
        cols += [np.full(n, float(i)) for i in idx]
        z = np.stack(cols, axis=1) if cols else np.zeros((n, 0))
        return np.prod(z[:, None, :] ** self._exps[None, :, :], axis=2)

    def to_candidate(self, coeffs) -> CertificateCandidate:
        subst = {}
        for d, v in enumerate(self.variables):
            subst[v] = (Polynomial.var(v, self.all_vars) - self.center[d]) * (1 / self.half[d])
        for v in self.index_names:
            subst[v] = Polynomial.var(v, self.all_vars)
        total = Polynomial.constant(0, self.all_vars)
        for c, m in zip(coeffs, self.basis):
            if c:
                total = total + m.compose(subst) * c
        return CertificateCandidate(self.signature, self.variables, self.index_names,
                                    polynomial=total)


class TableTemplate:
    """One free value per (enumerated state, index) pair."""

    def __init__(self, states, indices, variables, index_names, signature: str):
        self.variables = tuple(variables)
        self.index_names = tuple(index_names)
        self.signature = signature
        self.keys = [(s, tuple(i)) for s in states for i in indices]
        self._pos = {key: n for n, key in enumerate(self.keys)}

    @property
    def size(self) -> int:
        return len(self.keys)

    def features(self, pts: np.ndarray, idx: tuple) -> np.ndarray:
        out = np.zeros((len(pts), self.size))
        for r, row in enumerate(pts):
            key = (tuple(rational(float(v)) for v in row), tuple(idx))
            out[r, self._pos[key]] = 1.0
        return out

    def to_candidate(self, coeffs) -> CertificateCandidate:
        table = {key: c for key, c in zip(self.keys, coeffs)}
        return CertificateCandidate(self.signature, self.variables, self.index_names, table=table)


def make_template(conds: ConditionSystem, degree: int | None = None):
    system = conds.system
    if system.is_finite and degree is None:
        return TableTemplate(system.states(), conds.indices(), system.variables,
                             conds.index_names, conds.signature)
    if degree is None:
        raise InputError("polynomial synthesis needs a template degree")
    box = None if system.is_finite else system.state_set.bounding_box()
    return PolynomialTemplate(system.variables, conds.index_names, degree, conds.signature, box)


# ---------------------------------------------------------------------------
# LP assembly
# ---------------------------------------------------------------------------


@dataclass
class Rows:
    le: np.ndarray      # rows a with a.c <= 0
    gt: np.ndarray      # rows a with a.c > 0

    @property
    def count(self) -> int:
        return len(self.le) + len(self.gt)


def assemble_rows(template, conds: ConditionSystem, pts: np.ndarray,
                  fpts: np.ndarray | None = None) -> Rows:
    """Linear constraints on the template coefficients from the sample points."""
    system = conds.system
    if fpts is None:
        fpts = system.successor_array(pts)
    le, gt = [], []
    for cond in conds.conditions:
        mask = cond.domain.mask(system, pts, fpts)
        if not mask.any():
            continue
        p, fp = pts[mask], fpts[mask]
        row = np.zeros((len(p), template.size))
        for t in cond.terms:
            row += t.sign * template.features(fp if t.successor else p, t.index)
        (gt if cond.strict else le).append(row)
    m = template.size
    le_rows = np.concatenate(le) if le else np.zeros((0, m))
    gt_rows = np.concatenate(gt) if gt else np.zeros((0, m))
    return Rows(le_rows, gt_rows)


def _normalize(rows: np.ndarray, eps_pos: float | None = None):
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > 1e-12
    rows, norms = rows[keep], norms[keep]
    rhs = None if eps_pos is None else eps_pos / norms
    return rows / norms[:, None], rhs


@dataclass
class LpSolution:
    coeffs: np.ndarray
    slack: float
    phase: str


def solve_lp(rows: Rows, size: int, bound: float = 1e3, eps_pos: float = 1e-6) -> LpSolution | None:
    """Maximize the minimum normalized slack; fall back to a margin-free program.

    Phase ``margin``: ``a.c + t <= 0`` and ``a.c >= eps/|a| + t`` with ``t <= 1``.
    Phase ``strict``: ``a.c <= 0`` and ``a.c >= t``; success needs ``t > 0``.  It is
    preferred whenever the margin program only reaches a negligible slack, since
    it can put a zero of the certificate exactly on a closed boundary.
    Phase ``relaxed``: ``a.c <= 0`` and ``a.c >= 0`` maximizing the mean strict-row
    value; strictness is then left to the exact falsifier.
    Returns ``None`` when neither phase finds a solution.
    """
    le, _ = _normalize(rows.le)
    gt, gt_rhs = _normalize(rows.gt, eps_pos)
    n = size + 1
    cost = np.zeros(n)
    cost[-1] = -1.0
    bounds = [(-bound, bound)] * size + [(None, 1.0)]

    def run(le_slack: bool, gt_rhs_vec):
        a_ub, b_ub = [], []
        if len(le):
            a_ub.append(np.hstack([le, np.full((len(le), 1), 1.0 if le_slack else 0.0)]))
            b_ub.append(np.zeros(len(le)))
        if len(gt):
            a_ub.append(np.hstack([-gt, np.ones((len(gt), 1))]))
            b_ub.append(-gt_rhs_vec)
        if not a_ub:
            return np.zeros(size), 1.0
        res = linprog(cost, A_ub=np.vstack(a_ub), b_ub=np.concatenate(b_ub), bounds=bounds,
                      method="highs")
        if res.status != 0:
            if res.status in (2, 3):
                return None
            raise SolverError(f"linear program failed: {res.message}")
        return res.x[:size], float(res.x[-1])

    margin = run(True, gt_rhs if gt_rhs is not None else np.zeros(0))
    if margin is not None and margin[1] >= 1e-7:
        return LpSolution(margin[0], margin[1], "margin")
    strict = run(False, np.zeros(len(gt)))
    if strict is not None and strict[1] > 1e-12:
        return LpSolution(strict[0], strict[1], "strict")
    if margin is not None and margin[1] >= -1e-9:
        return LpSolution(margin[0], margin[1], "margin")
    if len(gt):
        # closed relaxation: a.c >= 0 on strict rows, maximize their mean value
        a_ub = [-gt] + ([le] if len(le) else [])
        res = linprog(-gt.mean(axis=0), A_ub=np.vstack(a_ub), b_ub=np.zeros(len(gt) + len(le)),
                      bounds=[(-bound, bound)] * size, method="highs")
        if res.status == 0 and -res.fun > 1e-9:
            return LpSolution(res.x, float((gt @ res.x).min()), "relaxed")
    return None


def normalized(coeffs) -> np.ndarray:
    """Scale so the largest coefficient magnitude is 1.

    Every condition is homogeneous in the certificate (``<= 0`` and ``> 0``), so a
    positive rescaling never changes validity.
    """
    c = np.asarray(coeffs, dtype=float)
    top = np.abs(c).max() if c.size else 0.0
    return c / top if top > 0 else c


def rationalize(coeffs, max_den: int = 10**9) -> list[Fraction]:
    return [Fraction(float(c)).limit_denominator(max_den) for c in coeffs]


# ---------------------------------------------------------------------------
# CEGIS loop
# ---------------------------------------------------------------------------


@dataclass
class CegisConfig:
    degree: int | None = 2
    samples: int = 200
    rounds: int = 50
    seed: int = 0
    coeff_bound: float = 1e3
    eps_pos: float = 1e-6
    falsifier_grid: int = 201
    falsifier_random: int = 10_000
    validate_grid: int = 2001
    validate_random: int = 5000
    max_added: int = 32
    threads: int = 1
    time_limit: float | None = None


@dataclass
class RoundInfo:
    round: int
    samples: int
    slack: float | None
    phase: str | None
    counterexamples: int


@dataclass
class CegisResult:
    status: str                       # success | inconclusive
    candidate: CertificateCandidate | None
    k: int | None
    rounds: list[RoundInfo] = field(default_factory=list)
    report: CheckReport | None = None
    message: str = ""
    elapsed: float = 0.0

    @property
    def success(self) -> bool:
        return self.status == "success"


def initial_samples(conds: ConditionSystem, n: int) -> np.ndarray:
    """Uniform grid over the state box plus the corners of every bounded domain set."""
    system = conds.system
    box = system.state_set.bounding_box()
    vs = system.variables
    per_dim = max(2, int(round(n ** (1 / len(vs)))))
    axes = [np.linspace(float(box[v].lower), float(box[v].upper), per_dim) for v in vs]
    pts = [np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(vs))]
    for cond in conds.conditions:
        for s in (cond.domain.region, cond.domain.exclude):
            if isinstance(s, SemialgebraicSet):
                b = s.bounding_box()
                if b is not None:
                    corners = itertools.product(*[(float(b[v].lower), float(b[v].upper))
                                                  for v in vs])
                    pts.append(np.array(list(corners), dtype=float))
    out = np.concatenate(pts)
    lo = np.array([float(box[v].lower) for v in vs])
    hi = np.array([float(box[v].upper) for v in vs])
    out = np.clip(out, lo, hi)
    return np.unique(out, axis=0)


def _synthesize_finite(conds: ConditionSystem, cfg: CegisConfig, k) -> CegisResult:
    template = make_template(conds, cfg.degree)
    system = conds.system
    pts = np.array([[float(v) for v in s] for s in system.states()])
    rows = assemble_rows(template, conds, pts)
    sol = solve_lp(rows, template.size, cfg.coeff_bound, cfg.eps_pos)
    info = [RoundInfo(1, len(pts), None if sol is None else sol.slack,
                      None if sol is None else sol.phase, 0)]
    if sol is None:
        return CegisResult("inconclusive", None, k, info, message="linear program infeasible")
    options = [rationalize(normalized(sol.coeffs), den) for den in (1, 10, 100, 10**3, 10**6, 10**9)]
    for coeffs in options + [[Fraction(float(c)) for c in sol.coeffs]]:
        cand = template.to_candidate(coeffs)
        report = check_finite(cand, conds, 0)
        info[-1].counterexamples = len(report.counterexamples)
        if report.passed:
            cand.provenance = "synthesized (table" + ("" if k is None else f", k={k}") + ")"
            return CegisResult("success", cand, k, info, report)
    return CegisResult("inconclusive", None, k, info, report,
                       message="rationalized solution failed the exact check")


def synthesize(conds: ConditionSystem, cfg: CegisConfig | None = None) -> CegisResult:
    """Run CEGIS for a fixed condition system (fixed k)."""
    cfg = cfg or CegisConfig()
    start = time.monotonic()
    k = conds.k
    system = conds.system
    if system.is_finite:
        res = _synthesize_finite(conds, cfg, k)
        res.elapsed = time.monotonic() - start
        return res
    if system.state_set.bounding_box() is None:
        raise UnsupportedError("synthesis needs a bounded state set")
    template = make_template(conds, cfg.degree)
    pts = initial_samples(conds, cfg.samples)
    rounds: list[RoundInfo] = []
    last_report = None
    for r in range(1, cfg.rounds + 1):
        if cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit:
            break
        rows = assemble_rows(template, conds, pts)
        sol = solve_lp(rows, template.size, cfg.coeff_bound, cfg.eps_pos)
        if sol is None:
            rounds.append(RoundInfo(r, len(pts), None, None, 0))
            return CegisResult("inconclusive", None, k, rounds, last_report,
                               "no coefficients satisfy the sampled conditions",
                               time.monotonic() - start)
        cand = _best_rational(template, sol.coeffs, rows)
        check_cfg = CheckConfig(grid=cfg.falsifier_grid, random_points=cfg.falsifier_random,
                                seed=cfg.seed + r, threads=cfg.threads)
        report = check_certificate(cand, conds, "sampled", 0, check_cfg)
        last_report = report
        rounds.append(RoundInfo(r, len(pts), sol.slack, sol.phase, len(report.counterexamples)))
        log.info("round %d: %d samples, slack %.3g (%s), %d counterexamples", r, len(pts),
                 sol.slack, sol.phase, len(report.counterexamples))
        if not report.counterexamples:
            final = validate(cand, conds, cfg)
            if final.passed:
                cand.provenance = (f"synthesized (degree {cfg.degree}"
                                   + ("" if k is None else f", k={k}") + f", round {r})")
                return CegisResult("success", cand, k, rounds, final, "",
                                   time.monotonic() - start)
            report = final
        new = np.array([[float(v) for v in c.point] for c in report.counterexamples[:cfg.max_added]])
        if len(new) == 0:
            break
        pts = np.unique(np.concatenate([pts, new]), axis=0)
    return CegisResult("inconclusive", None, k, rounds, last_report,
                       "round budget exhausted", time.monotonic() - start)


def _best_rational(template, coeffs, rows: Rows):
    """Rational coefficients; prefer short denominators that keep every sampled row satisfied."""
    coeffs = normalized(coeffs)
    le, _ = _normalize(rows.le)
    gt, _ = _normalize(rows.gt)
    for den in (10, 100, 10**3, 10**4, 10**6):
        c = rationalize(coeffs, den)
        v = np.array([float(x) for x in c])
        if (not len(le) or (le @ v).max() <= 0) and (not len(gt) or (gt @ v).min() > 0):
            return template.to_candidate(c)
    return template.to_candidate(rationalize(coeffs))


def validate(cand: CertificateCandidate, conds: ConditionSystem, cfg: CegisConfig) -> CheckReport:
    """Independent final check with a fresh falsifier seed and a dense grid."""
    check_cfg = CheckConfig(grid=cfg.validate_grid, random_points=cfg.validate_random,
                            seed=cfg.seed + 10_007, threads=cfg.threads)
    return check_certificate(cand, conds, "sampled", 0, check_cfg)


@dataclass
class EscalationResult:
    status: str
    k: int | None
    result: CegisResult | None
    attempts: list[CegisResult]

    @property
    def success(self) -> bool:
        return self.status == "success"


def escalate_k(build: Callable[[int], ConditionSystem], k_max: int,
               cfg: CegisConfig | None = None, k_min: int = 0) -> EscalationResult:
    """Try k = k_min, k_min+1, ... k_max and stop at the first success."""
    cfg = cfg or CegisConfig()
    attempts = []
    for k in range(k_min, k_max + 1):
        res = synthesize(build(k), cfg)
        attempts.append(res)
        log.info("k=%d: %s %s", k, res.status, res.message)
        if res.success:
            return EscalationResult("success", k, res, attempts)
    return EscalationResult("inconclusive", None, None, attempts)
