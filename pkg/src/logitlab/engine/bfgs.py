"""Maximum-likelihood estimation via BFGS with backtracking.

Everything here is deterministic: fixed start values, fixed step policy,
no randomness, so repeated runs on the same inputs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from logitlab.engine.kernel import log_likelihood, loglik_and_gradient, null_loglik
from logitlab.specdsl.binding import BoundModel

ARMIJO_C = 1e-4
SHRINK = 0.5
MAX_BACKTRACKS = 60
HESSIAN_STEP = 1e-4  # relative FD step for std errors
PD_TOL = 1e-8  # relative eigenvalue floor for "positive definite"


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of one maximum-likelihood run.

    ``converged`` requires both the gradient criterion and a negative
    definite Hessian; ``convergence_reason`` records why iteration
    stopped, which is informative even for failed runs.  ``std_errors``
    and ``t_ratios`` are NaN when the Hessian is singular or indefinite.
    """

    names: tuple[str, ...]
    estimates: np.ndarray
    std_errors: np.ndarray
    t_ratios: np.ndarray
    loglik: float
    null_loglik: float
    iterations: int
    converged: bool
    convergence_reason: str  # gradient_tolerance | max_iterations | line_search_failure | non_finite
    hessian_pd: bool

    @property
    def n_free(self) -> int:
        return len(self.names)

    def coefficient(self, name: str) -> float:
        return float(self.estimates[self.names.index(name)])

    def t_ratio(self, name: str) -> float:
        return float(self.t_ratios[self.names.index(name)])

    def as_dict(self) -> dict:
        def clean(x: float) -> float | None:
            return None if not math.isfinite(x) else float(x)

        return {
            "parameters": [
                {
                    "name": name,
                    "estimate": clean(self.estimates[i]),
                    "std_error": clean(self.std_errors[i]),
                    "t_ratio": clean(self.t_ratios[i]),
                }
                for i, name in enumerate(self.names)
            ],
            "loglik": clean(self.loglik),
            "null_loglik": clean(self.null_loglik),
            "iterations": self.iterations,
            "converged": self.converged,
            "convergence_reason": self.convergence_reason,
            "hessian_pd": self.hessian_pd,
        }


def _fd_hessian(model: BoundModel, theta: np.ndarray) -> np.ndarray:
    """Central differences of the exact gradient, symmetrized."""
    k = len(theta)
    H = np.empty((k, k))
    for i in range(k):
        h = HESSIAN_STEP * max(1.0, abs(theta[i]))
        up = theta.copy()
        up[i] += h
        down = theta.copy()
        down[i] -= h
        _, g_up = loglik_and_gradient(model, up)
        _, g_down = loglik_and_gradient(model, down)
        H[:, i] = (g_up - g_down) / (2.0 * h)
    return 0.5 * (H + H.T)


def _curvature(model: BoundModel, theta: np.ndarray) -> tuple[bool, np.ndarray, np.ndarray]:
    """(hessian_pd, std_errors, t_ratios) at a candidate optimum."""
    k = len(theta)
    if k == 0:
        return True, np.empty(0), np.empty(0)
    H = _fd_hessian(model, theta)
    nan = np.full(k, np.nan)
    if not np.all(np.isfinite(H)):
        return False, nan, nan
    neg = -H
    eigs = np.linalg.eigvalsh(neg)
    if eigs[0] <= PD_TOL * max(eigs[-1], 1.0):
        return False, nan, nan
    cov = np.linalg.inv(neg)
    var = np.diag(cov).copy()
    var[var < 0] = np.nan
    se = np.sqrt(var)
    with np.errstate(all="ignore"):
        t = np.where(se > 0, theta / se, np.nan)
    return True, se, t


def estimate(
    model: BoundModel,
    max_iters: int = 500,
    grad_tol: float = 1e-6,
    start_override: np.ndarray | None = None,
) -> EstimationResult:
    """Maximize the log-likelihood from the spec's start values.

    The gradient criterion scales with model size: the stop threshold is
    ``grad_tol * max(1, |LL|/n_obs)``.
    """
    theta = np.array(model.start if start_override is None else start_override, dtype=float)
    k = len(theta)
    ll0 = null_loglik(model.dataset)
    ll, grad = loglik_and_gradient(model, theta)

    if not math.isfinite(ll):
        nan = np.full(k, np.nan)
        return EstimationResult(
            model.free_names, theta, nan, nan, ll, ll0, 0, False, "non_finite", False
        )

    B = np.eye(k)  # inverse Hessian approximation of -loglik
    reason = "max_iterations"
    iterations = 0
    for _ in range(max_iters):
        tol_eff = grad_tol * max(1.0, abs(ll) / max(model.n_obs, 1))
        if k == 0 or float(np.abs(grad).max(initial=0.0)) <= tol_eff:
            reason = "gradient_tolerance"
            break

        gf = -grad
        d = -B @ gf
        slope = float(gf @ d)
        if slope >= 0.0:  # stale curvature, restart from steepest ascent
            B = np.eye(k)
            d = -gf
            slope = float(gf @ d)

        alpha = 1.0
        new_ll = -math.inf
        new_theta = theta
        for _ in range(MAX_BACKTRACKS):
            cand = theta + alpha * d
            # Armijo test needs only the value; the dual pass runs once
            # after acceptance.
            cand_ll = log_likelihood(model, cand)
            if math.isfinite(cand_ll) and -cand_ll <= -ll + ARMIJO_C * alpha * slope:
                new_ll = cand_ll
                new_theta = cand
                break
            alpha *= SHRINK
        else:
            reason = "line_search_failure"
            break

        _, new_grad = loglik_and_gradient(model, new_theta)
        if not np.all(np.isfinite(new_grad)):
            reason = "non_finite"
            break

        s = new_theta - theta
        y = -(new_grad - grad)  # gradient change of -loglik
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y) + 1e-300):
            rho = 1.0 / sy
            I = np.eye(k)
            V = I - rho * np.outer(s, y)
            B = V @ B @ V.T + rho * np.outer(s, s)

        theta, ll, grad = new_theta, new_ll, new_grad
        iterations += 1

    hessian_pd, se, t = _curvature(model, theta)
    converged = reason == "gradient_tolerance" and hessian_pd
    return EstimationResult(
        names=model.free_names,
        estimates=theta,
        std_errors=se,
        t_ratios=t,
        loglik=ll,
        null_loglik=ll0,
        iterations=iterations,
        converged=converged,
        convergence_reason=reason,
        hessian_pd=hessian_pd,
    )
