"""Inclusion rules and behavioural plausibility checks.

A converged model with alternative-specific constants and well-signed
time/cost coefficients is included; everything else is excluded under a
single label with precedence nonconvergence, then positive sign, then
missing ASCs.  Statistical insignificance is recorded but never excludes
a model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from logitlab.dataset import DataDictionary
from logitlab.engine.bfgs import EstimationResult
from logitlab.metrics import SIGNIFICANCE_T, core_terms
from logitlab.specdsl.expr import param_names
from logitlab.specdsl.parser import UtilitySpec

INCLUDED = "included"
EXCLUDED_NO_ASC = "excluded_no_asc"
EXCLUDED_NONCONVERGENCE = "excluded_nonconvergence"
EXCLUDED_POSITIVE_SIGN = "excluded_positive_sign"


@dataclass(frozen=True)
class ValidationReport:
    has_asc: bool
    converged: bool
    sign_violations: tuple[dict, ...]  # {parameter, estimate}
    insignificant_core: tuple[str, ...]
    exclusion: str
    notes: str = ""

    @property
    def included(self) -> bool:
        return self.exclusion == INCLUDED


@dataclass(frozen=True)
class BatchPartition:
    included: tuple
    excluded: tuple


def _asc_flags(spec: UtilitySpec) -> tuple[bool, bool]:
    """(has_asc, unidentified): free ASCs present; full unfixed ASC set."""
    used: dict[str, set[str]] = {}
    for alt in spec.alternatives:
        for name in param_names(spec.utilities[alt]):
            used.setdefault(name, set()).add(alt)

    free_ascs = []
    fixed_ascs = []
    alts_with_asc: set[str] = set()
    for p in spec.parameters:
        if p.role != "asc" or p.name not in used:
            continue
        alts_with_asc |= used[p.name]
        (fixed_ascs if p.fixed is not None else free_ascs).append(p.name)

    has_asc = bool(free_ascs)
    unidentified = (
        has_asc
        and not fixed_ascs
        and alts_with_asc == set(spec.alternatives)
    )
    return has_asc, unidentified


def check_model(
    result: EstimationResult, spec: UtilitySpec, dictionary: DataDictionary
) -> ValidationReport:
    """Apply the inclusion rules to one estimated spec.

    Sign and significance checks cover time/cost main effects only; the
    effective sign folds in any constant factors in the term.
    """
    has_asc, unidentified = _asc_flags(spec)

    violations: list[dict] = []
    weak: list[str] = []
    seen_violation: set[str] = set()
    seen_weak: set[str] = set()
    for term in core_terms(spec, dictionary):
        est = result.coefficient(term.parameter)
        if est * term.scale > 0.0 and term.parameter not in seen_violation:
            violations.append({"parameter": term.parameter, "estimate": est})
            seen_violation.add(term.parameter)
        t = result.t_ratio(term.parameter)
        if math.isfinite(t) and abs(t) < SIGNIFICANCE_T and term.parameter not in seen_weak:
            weak.append(term.parameter)
            seen_weak.add(term.parameter)

    if not result.converged:
        exclusion = EXCLUDED_NONCONVERGENCE
    elif violations:
        exclusion = EXCLUDED_POSITIVE_SIGN
    elif not has_asc:
        exclusion = EXCLUDED_NO_ASC
    else:
        exclusion = INCLUDED

    notes = []
    if unidentified:
        notes.append("unidentified_asc: full ASC set with no fixed reference")
    if not result.converged:
        notes.append(f"stopped on {result.convergence_reason}, hessian_pd={result.hessian_pd}")
    return ValidationReport(
        has_asc=has_asc,
        converged=result.converged,
        sign_violations=tuple(violations),
        insignificant_core=tuple(weak),
        exclusion=exclusion,
        notes="; ".join(notes),
    )


def batch_filter(reports: list[tuple[UtilitySpec, ValidationReport]]) -> BatchPartition:
    """Stable partition into included and excluded, labels preserved."""
    included = tuple(pair for pair in reports if pair[1].included)
    excluded = tuple(pair for pair in reports if not pair[1].included)
    return BatchPartition(included=included, excluded=excluded)
