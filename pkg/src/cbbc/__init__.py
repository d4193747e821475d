"""Co-Buchi barrier certificates: finite-visit and automaton verification for
discrete-time polynomial and finite-table systems."""

from .automata import (OmegaAutomaton, Triplet, advance_front, enumerate_triplets,
                       initial_front, lasso_accepts_buchi, lasso_accepts_cobuchi,
                       parse_automaton, prefix_respects_k, unroll)
from .cegis import CegisConfig, CegisResult, escalate_k, synthesize
from .certify import (CertificateCandidate, CheckConfig, CheckReport, ConditionSystem,
                      cbbc_conditions, check_certificate, check_finite, classic_conditions,
                      product_cbbc_conditions)
from .errors import CbbcError, DomainError, InputError, LabelingError, LiftError, ParseError
from .formats import load_certificate, load_problem, parse_certificate, parse_problem
from .lift import LiftResult, lift
from .model import (CounterSystem, DynamicalSystem, Labeling, extend_with_counter,
                    finite_system, interval_set, polynomial_system)
from .poly import FiniteSet, Polynomial, SemialgebraicSet, parse_poly
from .sosout import SosProgram, emit_sos_cbbc, emit_sos_product

__all__ = [
    "OmegaAutomaton", "Triplet", "advance_front", "enumerate_triplets", "initial_front",
    "lasso_accepts_buchi", "lasso_accepts_cobuchi", "parse_automaton", "prefix_respects_k",
    "unroll", "CegisConfig", "CegisResult", "escalate_k", "synthesize",
    "CertificateCandidate", "CheckConfig", "CheckReport", "ConditionSystem",
    "cbbc_conditions", "check_certificate", "check_finite", "classic_conditions",
    "product_cbbc_conditions", "CbbcError", "DomainError", "InputError", "LabelingError",
    "LiftError", "ParseError", "load_certificate", "load_problem", "parse_certificate",
    "parse_problem", "LiftResult", "lift", "CounterSystem", "DynamicalSystem", "Labeling",
    "extend_with_counter", "finite_system", "interval_set", "polynomial_system", "FiniteSet",
    "Polynomial", "SemialgebraicSet", "parse_poly", "SosProgram", "emit_sos_cbbc",
    "emit_sos_product",
]

__version__ = "0.1.0"
