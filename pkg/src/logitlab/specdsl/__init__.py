"""Utility-specification DSL: parse, serialize, analyze, bind.

A specification declares alternatives, parameters and one utility
expression per alternative.  The text format is line oriented::

    spec intercity_base
    alt car bus air rail
    param asc_car fixed 0
    param asc_bus
    param b_time generic
    param b_cost generic
    U(car) = asc_car + b_time*time_car + b_cost*cost_car
    U(bus) = asc_bus + b_time*time_bus + b_cost*cost_bus
    ...

Identifiers starting with ``asc_``, ``b_``, ``beta_`` or ``lambda_`` are
reserved for parameters and must be declared; anything else is a dataset
variable resolved at bind time.
"""

from logitlab.specdsl.expr import (
    Add,
    BoxCox,
    Call1,
    Const,
    Div,
    Expr,
    Mul,
    Neg,
    Param,
    Piecewise,
    Pow,
    Sub,
    Var,
    iter_nodes,
    param_names,
    var_names,
)
from logitlab.specdsl.parser import (
    DslSyntaxError,
    DuplicateParameter,
    ParameterDecl,
    SpecDslError,
    SpecInvariantError,
    UndeclaredParameter,
    UnknownFunction,
    UtilitySpec,
    PARAM_PREFIXES,
    parse_spec,
)
from logitlab.specdsl.serialize import serialize_spec
from logitlab.specdsl.analysis import SpecStats, UnknownVariable, analyze_structure
from logitlab.specdsl.binding import BoundModel, DomainViolation, MissingAlternative, bind

__all__ = [
    "Add", "BoxCox", "Call1", "Const", "Div", "Expr", "Mul", "Neg", "Param",
    "Piecewise", "Pow", "Sub", "Var", "iter_nodes", "param_names", "var_names",
    "DslSyntaxError", "DuplicateParameter", "ParameterDecl", "SpecDslError",
    "SpecInvariantError", "UndeclaredParameter", "UnknownFunction", "UtilitySpec",
    "PARAM_PREFIXES", "parse_spec", "serialize_spec",
    "SpecStats", "UnknownVariable", "analyze_structure",
    "BoundModel", "DomainViolation", "MissingAlternative", "bind",
]
