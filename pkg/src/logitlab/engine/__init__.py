"""MNL likelihood evaluation and maximum-likelihood estimation.

The kernel evaluates utilities through the generic expression walker in
the DSL package, once with plain arrays (values) and once with forward
mode dual numbers (exact gradients).  The optimizer is BFGS with an
Armijo backtracking line search; standard errors come from a finite
difference Hessian of the log-likelihood at the optimum.
"""

from logitlab.engine.dual import DUAL_FUNCS, Dual
from logitlab.engine.kernel import (
    NonFiniteUtility,
    log_likelihood,
    loglik_and_gradient,
    null_loglik,
    probabilities,
    probability_matrix,
)
from logitlab.engine.bfgs import EstimationResult, estimate

__all__ = [
    "DUAL_FUNCS",
    "Dual",
    "NonFiniteUtility",
    "log_likelihood",
    "loglik_and_gradient",
    "null_loglik",
    "probabilities",
    "probability_matrix",
    "EstimationResult",
    "estimate",
]
