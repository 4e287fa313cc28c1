"""MNL choice probabilities, log-likelihood and exact gradient.

Utilities are evaluated for every row at once; unavailable alternatives
are masked out before the softmax, so their probabilities are exactly
zero and whatever the expressions produced on those rows (often NaN,
e.g. log of a zeroed attribute) never propagates.

The log-likelihood returns ``-inf`` instead of raising when a wild
parameter step drives utilities non-finite or the chosen probability
underflows; the optimizer treats that as a rejected step.
"""

from __future__ import annotations

import math

import numpy as np

from logitlab.dataset import Dataset
from logitlab.engine.dual import DUAL_FUNCS, Dual
from logitlab.specdsl.binding import BoundModel


class NonFiniteUtility(Exception):
    """An expression evaluated to NaN or infinity where it matters."""


def _check_theta(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise NonFiniteUtility("parameter vector contains non-finite values")
    return theta


def probability_matrix(V: np.ndarray, avail: np.ndarray) -> np.ndarray:
    """Row-wise softmax over available alternatives, exact 0 elsewhere.

    Utilities are shifted by the row max over available alternatives
    before exponentiation.  Rows with non-finite available utilities
    come out as NaN; callers decide whether that is an error or a
    rejected optimization step.
    """
    with np.errstate(all="ignore"):
        masked = np.where(avail, V, -np.inf)
        shift = masked.max(axis=1, keepdims=True)
        expV = np.where(avail, np.exp(masked - shift), 0.0)
        return expV / expV.sum(axis=1, keepdims=True)


def probabilities(model: BoundModel, theta, row_index: int) -> dict[str, float]:
    """Choice probabilities for one row, keyed by alternative."""
    theta = _check_theta(theta)
    V = model.utility_matrix(theta)[row_index : row_index + 1]
    avail = model.avail[row_index : row_index + 1]
    if not np.all(np.isfinite(V[avail])):
        raise NonFiniteUtility(f"non-finite utility in row {row_index}")
    P = probability_matrix(V, avail)[0]
    return {alt: float(P[j]) for j, alt in enumerate(model.alternatives)}


def log_likelihood(model: BoundModel, theta) -> float:
    """Sum of log chosen-probabilities; -inf when evaluation breaks down."""
    theta = _check_theta(theta)
    V = model.utility_matrix(theta)
    return _loglik_from_utilities(V, model.avail, model.choice_idx)


def _loglik_from_utilities(V, avail, choice_idx) -> float:
    if not np.all(np.isfinite(V[avail])):
        return -math.inf
    P = probability_matrix(V, avail)
    chosen = P[np.arange(V.shape[0]), choice_idx]
    if np.any(chosen <= 0.0):
        return -math.inf
    return float(np.log(chosen).sum())


def loglik_and_gradient(model: BoundModel, theta) -> tuple[float, np.ndarray]:
    """Log-likelihood and its exact gradient via dual-number evaluation.

    The gradient slot is NaN-filled when the log-likelihood is -inf.
    """
    theta = _check_theta(theta)
    n, J, k = model.n_obs, model.n_alts, model.n_free
    V = np.empty((n, J))
    G = np.zeros((n, J, k))
    env = model.param_env(theta, lift=lambda v, i: Dual.seed(v, i, k))
    with np.errstate(all="ignore"):
        for j, expr in enumerate(model.utilities):
            res = model.utility_values(expr, env, DUAL_FUNCS)
            if isinstance(res, Dual):
                V[:, j] = np.broadcast_to(res.val, (n,))
                G[:, j, :] = np.broadcast_to(res.grad, (n, k))
            else:
                V[:, j] = np.broadcast_to(res, (n,))

    ll = _loglik_from_utilities(V, model.avail, model.choice_idx)
    if not math.isfinite(ll):
        return ll, np.full(k, np.nan)

    P = probability_matrix(V, model.avail)
    G = np.where(model.avail[:, :, None], G, 0.0)
    chosen_G = G[np.arange(n), model.choice_idx, :]
    grad = (chosen_G - np.einsum("nj,njk->nk", P, G)).sum(axis=0)
    if not np.all(np.isfinite(grad)):
        return -math.inf, np.full(k, np.nan)
    return ll, grad


def null_loglik(dataset: Dataset) -> float:
    """Log-likelihood of equal shares over each row's available set.

    fsum keeps the result exact up to one rounding, so a dataset with a
    constant availability count reproduces -n*log(count) bit-for-bit.
    """
    return -math.fsum(
        math.log(sum(row.availability.values())) for row in dataset.rows
    )
