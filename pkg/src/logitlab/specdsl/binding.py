"""Bind a specification to a dataset for estimation.

Binding materializes every referenced column as a float array, resolves
the free-parameter layout (declaration order, fixed parameters dropped),
precomputes piecewise segment lengths, and runs the static domain checks
(log/sqrt/box-cox arguments that contain no free parameters must be in
range on every row where the alternative is available).

The expression evaluator is generic over the value algebra: plain numpy
arrays here, dual numbers in the estimation engine.  Anything passed as
``funcs`` just has to supply the elementwise functions below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Any, Callable, Mapping

import numpy as np

from logitlab.dataset import Dataset
from logitlab.specdsl.analysis import UnknownVariable
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
from logitlab.specdsl.parser import SpecDslError, UtilitySpec
from logitlab.specdsl.serialize import serialize_expr


class DomainViolation(SpecDslError):
    """log/sqrt/boxcox applied to out-of-range data."""


class MissingAlternative(SpecDslError):
    """Spec and dataset disagree on the set of alternatives."""


NUMPY_FUNCS = SimpleNamespace(
    log=np.log,
    exp=np.exp,
    sqrt=np.sqrt,
    expm1=np.expm1,
    pow=lambda x, c: np.power(x, c),
    scalar=lambda x: float(x),
)


def evaluate_expr(
    expr: Expr,
    columns: Mapping[str, Any],
    params: Mapping[str, Any],
    funcs: SimpleNamespace = NUMPY_FUNCS,
    segments: Mapping[tuple, Any] | None = None,
) -> Any:
    """Evaluate a tree over whatever algebra ``funcs`` implements.

    ``params`` values may be plain floats or dual numbers; columns are
    plain arrays.  ``segments`` maps (var, knots) to precomputed segment
    length arrays for piecewise nodes (see :func:`piecewise_segments`).
    """
    ev = lambda e: evaluate_expr(e, columns, params, funcs, segments)
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Param):
        return params[expr.name]
    if isinstance(expr, Mul):
        return ev(expr.left) * ev(expr.right)
    if isinstance(expr, Add):
        return ev(expr.left) + ev(expr.right)
    if isinstance(expr, Sub):
        return ev(expr.left) - ev(expr.right)
    if isinstance(expr, Div):
        return ev(expr.left) / ev(expr.right)
    if isinstance(expr, Neg):
        return -ev(expr.operand)
    if isinstance(expr, Call1):
        return getattr(funcs, expr.fn)(ev(expr.arg))
    if isinstance(expr, Pow):
        return funcs.pow(ev(expr.base), expr.exponent)
    if isinstance(expr, BoxCox):
        base = ev(expr.base)
        shape = params[expr.shape]
        # expm1 keeps (x^s - 1)/s accurate for small s; at s = 0 exactly,
        # fall back to the expansion log(x) + s*log(x)^2/2, which also has
        # the right derivative in s.
        logx = funcs.log(base)
        if funcs.scalar(shape) == 0.0:
            return logx + shape * (logx * logx * 0.5)
        return funcs.expm1(shape * logx) / shape
    if isinstance(expr, Piecewise):
        if segments is None:
            raise ValueError("piecewise node requires precomputed segments")
        segs = segments[(expr.var, expr.knots)]
        total = params[expr.params[0]] * segs[:, 0]
        for i, pname in enumerate(expr.params[1:], start=1):
            total = total + params[pname] * segs[:, i]
        return total
    if isinstance(expr, Var):
        return columns[expr.name]
    raise TypeError(f"not an expression node: {expr!r}")


def piecewise_segments(x: np.ndarray, knots: tuple[float, ...]) -> np.ndarray:
    """Per-row lengths of x's overlap with each knot segment.

    The first segment is unbounded below and the last unbounded above, so
    the columns always sum to x exactly and the spline is linear in the
    tails.
    """
    cols = [np.minimum(x, knots[0])]
    for lo, hi in zip(knots, knots[1:]):
        cols.append(np.clip(x - lo, 0.0, hi - lo))
    cols.append(np.maximum(x - knots[-1], 0.0))
    return np.column_stack(cols)


@dataclass(frozen=True)
class BoundModel:
    """A spec matched to a dataset, ready for likelihood evaluation.

    Arrays are aligned to ``alternatives`` (dataset order).  ``utilities``
    holds one expression per alternative in the same order.
    """

    spec: UtilitySpec
    dataset: Dataset
    alternatives: tuple[str, ...]
    utilities: tuple[Expr, ...]
    free_names: tuple[str, ...]
    start: np.ndarray  # aligned to free_names
    fixed: dict[str, float]
    columns: dict[str, np.ndarray]
    avail: np.ndarray  # (n_obs, n_alts) bool
    choice_idx: np.ndarray  # (n_obs,) int
    segments: dict[tuple, np.ndarray] = field(default_factory=dict)

    @property
    def n_obs(self) -> int:
        return int(self.avail.shape[0])

    @property
    def n_alts(self) -> int:
        return len(self.alternatives)

    @property
    def n_free(self) -> int:
        return len(self.free_names)

    def param_env(self, theta: np.ndarray, lift: Callable[[float, int], Any] | None = None) -> dict[str, Any]:
        """Map every parameter name to its value under ``theta``.

        ``lift(value, index)`` wraps free parameters (used to seed dual
        numbers); fixed parameters stay plain floats.
        """
        env: dict[str, Any] = dict(self.fixed)
        for i, name in enumerate(self.free_names):
            env[name] = lift(float(theta[i]), i) if lift else float(theta[i])
        return env

    def utility_values(self, expr: Expr, params: Mapping[str, Any], funcs=NUMPY_FUNCS) -> Any:
        return evaluate_expr(expr, self.columns, params, funcs, self.segments)

    def utility_matrix(self, theta: np.ndarray) -> np.ndarray:
        """(n_obs, n_alts) utilities; unavailable cells may be non-finite."""
        env = self.param_env(theta)
        out = np.empty((self.n_obs, self.n_alts))
        with np.errstate(all="ignore"):
            for j, expr in enumerate(self.utilities):
                out[:, j] = np.broadcast_to(self.utility_values(expr, env), (self.n_obs,))
        return out


def _domain_checks(spec, utilities, columns, fixed, avail, alternatives, segments):
    with np.errstate(all="ignore"):
        for j, alt in enumerate(alternatives):
            mask = avail[:, j]
            for node in iter_nodes(utilities[j]):
                if isinstance(node, Call1) and node.fn in ("log", "sqrt"):
                    base, strict = node.arg, node.fn == "log"
                elif isinstance(node, BoxCox):
                    base, strict = node.base, True
                else:
                    continue
                if param_names(base) - set(fixed):
                    continue  # depends on free parameters, checked at runtime
                vals = np.broadcast_to(
                    evaluate_expr(base, columns, fixed, NUMPY_FUNCS, segments),
                    (avail.shape[0],),
                )[mask]
                bad = ~(vals > 0) if strict else ~(vals >= 0)
                if bad.any():
                    kind = "non-positive" if strict else "negative"
                    raise DomainViolation(
                        f"utility of '{alt}' takes {node.fn if isinstance(node, Call1) else 'boxcox'}"
                        f" of {kind} values: {serialize_expr(base)}"
                    )


def bind(spec: UtilitySpec, dataset: Dataset) -> BoundModel:
    """Check a spec against a dataset and materialize it for estimation.

    Raises UnknownVariable, MissingAlternative or DomainViolation; never
    mutates its inputs.
    """
    dict_vars = set(dataset.dictionary.variable_names)
    for alt in spec.alternatives:
        unknown = sorted(var_names(spec.utilities[alt]) - dict_vars)
        if unknown:
            raise UnknownVariable(
                f"utility of '{alt}' references unknown variable '{unknown[0]}'"
            )

    spec_alts = set(spec.alternatives)
    data_alts = set(dataset.alternatives)
    if spec_alts - data_alts:
        extra = sorted(spec_alts - data_alts)[0]
        raise MissingAlternative(f"spec defines utility for '{extra}', not in dataset")
    if data_alts - spec_alts:
        missing = sorted(data_alts - spec_alts)[0]
        raise MissingAlternative(f"dataset alternative '{missing}' has no utility in spec")

    alternatives = dataset.alternatives
    utilities = tuple(spec.utilities[alt] for alt in alternatives)

    needed: set[str] = set()
    for expr in utilities:
        needed |= var_names(expr)
    columns = {
        name: np.asarray(dataset.column(name), dtype=float) for name in sorted(needed)
    }

    n = dataset.n_obs
    avail = np.empty((n, len(alternatives)), dtype=bool)
    choice_idx = np.empty(n, dtype=np.int64)
    alt_pos = {a: j for j, a in enumerate(alternatives)}
    for i, row in enumerate(dataset.rows):
        for a, j in alt_pos.items():
            avail[i, j] = row.availability[a]
        choice_idx[i] = alt_pos[row.choice]

    segments: dict[tuple, np.ndarray] = {}
    for expr in utilities:
        for node in iter_nodes(expr):
            if isinstance(node, Piecewise):
                key = (node.var, node.knots)
                if key not in segments:
                    segments[key] = piecewise_segments(columns[node.var], node.knots)

    fixed = {p.name: p.fixed for p in spec.parameters if p.fixed is not None}
    free = spec.free_parameters
    free_names = tuple(p.name for p in free)
    start = np.array([p.start for p in free], dtype=float)

    _domain_checks(spec, utilities, columns, fixed, avail, alternatives, segments)

    return BoundModel(
        spec=spec,
        dataset=dataset,
        alternatives=alternatives,
        utilities=utilities,
        free_names=free_names,
        start=start,
        fixed=fixed,
        columns=columns,
        avail=avail,
        choice_idx=choice_idx,
        segments=segments,
    )
