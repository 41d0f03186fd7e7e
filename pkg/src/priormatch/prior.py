"""Label priors: unigram frequencies, Markov transitions and bigram joints.

Priors are plain numpy arrays. A unigram prior has shape ``(2,)`` and a
bigram prior ``(2, 2)`` with ``P_LM[i, j] = p(y_{t-1}=i, y_t=j)``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from priormatch.errors import InvalidInputError, NoSteadyStateError

# Config files carry rounded decimals; anything further off is rejected.
RENORM_TOL = 1e-9


def _as_labels(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise InvalidInputError(f"labels must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise InvalidInputError("labels must be 0 or 1")
    return arr.astype(np.int64)


def _normalized(p: np.ndarray, what: str, axis=None) -> np.ndarray:
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidInputError(f"{what} must be finite and non-negative, got {p.tolist()}")
    total = p.sum(axis=axis, keepdims=axis is not None)
    if np.any(np.abs(total - 1.0) > RENORM_TOL):
        raise InvalidInputError(f"{what} must sum to 1, got sum {np.ravel(total).tolist()}")
    return p / total


def validate_unigram(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise InvalidInputError(f"unigram prior must have shape (2,), got {p.shape}")
    return _normalized(p, "unigram prior")


def validate_transition(trans) -> np.ndarray:
    P = np.asarray(trans, dtype=float)
    if P.shape != (2, 2):
        raise InvalidInputError(f"transition matrix must be 2x2, got shape {P.shape}")
    return _normalized(P, "transition rows", axis=1)


def validate_bigram(P_LM) -> np.ndarray:
    P = np.asarray(P_LM, dtype=float)
    if P.shape != (2, 2):
        raise InvalidInputError(f"bigram prior must be 2x2, got shape {P.shape}")
    return _normalized(P, "bigram prior")


def validate_prior(prior) -> np.ndarray:
    """Dispatch on shape: ``(2,)`` is unigram, ``(2, 2)`` is bigram."""
    arr = np.asarray(prior, dtype=float)
    if arr.shape == (2,):
        return validate_unigram(arr)
    if arr.shape == (2, 2):
        return validate_bigram(arr)
    raise InvalidInputError(f"prior must have shape (2,) or (2, 2), got {arr.shape}")


def unigram_from_labels(labels) -> np.ndarray:
    """Empirical label frequencies ``(count0 / T, count1 / T)``."""
    y = _as_labels(labels)
    if y.size == 0:
        raise InvalidInputError("cannot estimate a unigram prior from an empty sequence")
    p1 = y.sum() / y.size
    return np.array([1.0 - p1, p1])


def steady_state(trans) -> np.ndarray:
    """Stationary distribution of a 2-state chain.

    Uses the closed form ``(P[1,0], P[0,1]) / (P[0,1] + P[1,0])``.

    Raises
    ------
    NoSteadyStateError
        If the chain never switches state (no unique stationary
        distribution) or always switches (periodic).
    """
    P = validate_transition(trans)
    switch = P[0, 1] + P[1, 0]
    if switch == 0.0:
        raise NoSteadyStateError(
            f"transition matrix {P.tolist()} never leaves its start state; every distribution is stationary"
        )
    if P[0, 0] == 0.0 and P[1, 1] == 0.0:
        raise NoSteadyStateError(f"transition matrix {P.tolist()} is periodic")
    return np.array([P[1, 0], P[0, 1]]) / switch


def bigram_from_transition(trans) -> np.ndarray:
    """Joint pair distribution ``diag(pi) @ P`` under the stationary chain."""
    P = validate_transition(trans)
    pi = steady_state(P)
    return pi[:, None] * P


def bigram_from_labels(labels) -> np.ndarray:
    """Empirical adjacent-pair frequencies over the ``T - 1`` pairs."""
    y = _as_labels(labels)
    if y.size < 2:
        raise InvalidInputError("a bigram prior needs at least two labels")
    counts = np.zeros((2, 2))
    np.add.at(counts, (y[:-1], y[1:]), 1.0)
    return counts / (y.size - 1)


def load_prior_file(path) -> tuple[str, np.ndarray]:
    """Read ``{"unigram": [...]}`` or ``{"transition": [[...], [...]]}``.

    Returns the key found and the validated array.
    """
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON: {exc}") from exc
    keys = [k for k in ("unigram", "transition") if k in spec]
    if len(keys) != 1:
        raise InvalidInputError(f"{path}: expected exactly one of 'unigram' or 'transition'")
    if keys[0] == "unigram":
        return "unigram", validate_unigram(spec["unigram"])
    return "transition", validate_transition(spec["transition"])
