"""Output statistics, the matching cost and its primal-dual form.

The mode is implied by the prior's shape. Unigram statistics average the
posterior pairs; bigram statistics average outer products of consecutive
posterior pairs over the ``T - 1`` adjacent positions.

The saddle function is

    L(theta, V) = <P_LM * V, stats(theta)> + <P_LM, ln(-V)>,

which is linear in the statistics, so the sample average sits outside any
logarithm. For fixed ``theta`` it is maximized at ``V = -1 / stats`` with
value ``J(theta) - 1``.
"""

from __future__ import annotations

import numpy as np

from priormatch.errors import DomainError, InvalidInputError
from priormatch.model import ModelParams, as_inputs, posterior, posterior_jacobian
from priormatch.prior import validate_prior

STATS_FLOOR = 1e-300


def _mode(prior: np.ndarray) -> str:
    return "unigram" if prior.shape == (2,) else "bigram"


def _sequence(inputs, min_len: int) -> np.ndarray:
    x = as_inputs(inputs)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] < min_len:
        raise InvalidInputError(f"need at least {min_len} input points, got {x.shape[0]}")
    return x


def _check_duals(duals, shape) -> np.ndarray:
    V = np.asarray(duals, dtype=float)
    if V.shape != shape:
        raise InvalidInputError(f"dual variables must have shape {shape}, got {V.shape}")
    if not np.all(V < 0):
        raise DomainError(f"dual variables must be strictly negative, got {V.tolist()}")
    return V


def unigram_stats(params: ModelParams, inputs) -> np.ndarray:
    """Mean posterior pair over the sequence."""
    x = _sequence(inputs, 1)
    return posterior(params, x).mean(axis=0)


def bigram_stats(params: ModelParams, inputs) -> np.ndarray:
    """Mean of ``p_{t-1} p_t^T`` over ``t = 2..T``.

    ``inputs`` must be in generation order.
    """
    x = _sequence(inputs, 2)
    p = posterior(params, x)
    return p[:-1].T @ p[1:] / (x.shape[0] - 1)


def output_stats(params: ModelParams, inputs, prior) -> np.ndarray:
    """Statistics shaped like ``prior``."""
    prior = np.asarray(prior)
    if _mode(prior) == "unigram":
        return unigram_stats(params, inputs)
    return bigram_stats(params, inputs)


def cost_J(prior, stats) -> float:
    """Cross-entropy ``-sum(prior * ln(stats))`` with ``0 ln 0 = 0``.

    Returns ``inf`` when a statistic is exactly zero under positive prior
    mass.
    """
    prior = validate_prior(prior)
    stats = np.asarray(stats, dtype=float)
    if stats.shape != prior.shape:
        raise InvalidInputError(f"stats shape {stats.shape} does not match prior shape {prior.shape}")
    if np.any(stats < 0):
        raise InvalidInputError("stats must be non-negative")
    mask = prior > 0
    if np.any(stats[mask] == 0.0):
        return float("inf")
    return float(-np.sum(prior[mask] * np.log(np.maximum(stats[mask], STATS_FLOOR))))


def cost(params: ModelParams, inputs, prior) -> float:
    """``cost_J`` of the classifier's statistics on ``inputs``."""
    prior = validate_prior(prior)
    return cost_J(prior, output_stats(params, inputs, prior))


def dual_optimum(stats) -> np.ndarray:
    """Maximizer of the saddle function over ``V``: ``-1 / stats``."""
    s = np.asarray(stats, dtype=float)
    if not np.all(s > 0):
        raise DomainError(f"dual optimum needs strictly positive statistics, got {s.tolist()}")
    return -1.0 / s


def lagrangian(params: ModelParams, duals, inputs, prior) -> float:
    prior = validate_prior(prior)
    V = _check_duals(duals, prior.shape)
    stats = output_stats(params, inputs, prior)
    return float(np.sum(prior * V * stats) + np.sum(prior * np.log(-V)))


def grad_theta(params: ModelParams, duals, batch, prior) -> np.ndarray:
    """Gradient of the saddle function with respect to ``(w_a, w_b)``.

    For the bigram case this is the exact chain rule through both factors
    of ``p_{t-1}^T M p_t`` with ``M = P_LM * V``; each factor carries its
    own posterior Jacobian.
    """
    prior = validate_prior(prior)
    V = _check_duals(duals, prior.shape)
    M = prior * V
    if _mode(prior) == "unigram":
        x = _sequence(batch, 1)
        J = posterior_jacobian(params, x)  # (T, 2, 2)
        return np.einsum("k,tkw->w", M, J) / x.shape[0]

    x = _sequence(batch, 2)
    p = posterior(params, x)
    J = posterior_jacobian(params, x)
    prev_p, cur_p = p[:-1], p[1:]
    prev_J, cur_J = J[:-1], J[1:]
    # d/dw [q^T M p] = (M p)^T dq/dw + (q^T M) dp/dw
    left = np.einsum("ij,tj,tiw->w", M, cur_p, prev_J)
    right = np.einsum("ti,ij,tjw->w", prev_p, M, cur_J)
    return (left + right) / (x.shape[0] - 1)


def grad_dual(params: ModelParams, duals, batch, prior) -> np.ndarray:
    """Gradient with respect to ``V``: ``P_LM * stats + P_LM / V``."""
    prior = validate_prior(prior)
    V = _check_duals(duals, prior.shape)
    stats = output_stats(params, batch, prior)
    return prior * stats + prior / V
