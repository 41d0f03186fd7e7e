"""Two-weight log-linear binary classifier.

The class-0 logit is ``gamma * w_a * x_a`` and the class-1 logit is
``gamma * w_b * x_b``; the posterior is their softmax. ``gamma`` is a fixed
scale and never trained.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from priormatch.errors import InvalidInputError

DEFAULT_GAMMA = 10.0


@dataclass(frozen=True)
class ModelParams:
    w_a: float
    w_b: float
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        for name in ("w_a", "w_b", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (np.isfinite(self.w_a) and np.isfinite(self.w_b)):
            raise InvalidInputError(f"weights must be finite, got ({self.w_a}, {self.w_b})")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError(f"gamma must be a positive finite number, got {self.gamma}")

    @property
    def theta(self) -> np.ndarray:
        """Trainable weights as an array ``[w_a, w_b]``."""
        return np.array([self.w_a, self.w_b], dtype=float)

    def with_theta(self, theta) -> "ModelParams":
        return ModelParams(float(theta[0]), float(theta[1]), self.gamma)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        try:
            return cls(float(d["w_a"]), float(d["w_b"]), float(d.get("gamma", DEFAULT_GAMMA)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad model parameters {d!r}: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"model file is not valid JSON: {exc}") from exc


def as_inputs(x) -> np.ndarray:
    """Validate inputs; accepts one point ``(2,)`` or a sequence ``(T, 2)``."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (2,) or arr.ndim > 2:
        raise InvalidInputError(f"inputs must have shape (2,) or (T, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("inputs contain non-finite values")
    return arr


def _logit_gap(params: ModelParams, x: np.ndarray) -> np.ndarray:
    # logit0 - logit1
    return params.gamma * (params.w_a * x[..., 0] - params.w_b * x[..., 1])


def _sigmoid(z):
    # exp of a non-positive argument only; avoids overflow for large |z|
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def posterior(params: ModelParams, x) -> np.ndarray:
    """Class posteriors ``[p(0|x), p(1|x)]``.

    Parameters
    ----------
    params : ModelParams
    x : array_like, shape (2,) or (T, 2)

    Returns
    -------
    ndarray, shape (2,) or (T, 2)
        Rows sum to one.
    """
    x = as_inputs(x)
    z = _logit_gap(params, x)
    p0 = _sigmoid(z)
    # p1 from the mirrored sigmoid keeps tiny tail probabilities accurate
    p1 = _sigmoid(-z)
    return np.stack([p0, p1], axis=-1)


def predict(params: ModelParams, x) -> np.ndarray | int:
    """Hard label: 0 when ``p(0|x) >= 0.5``, else 1."""
    # thresholding the rounded posterior (not the raw logit gap) keeps the
    # label consistent with what posterior() reports when p0 rounds to 0.5
    labels = np.where(posterior(params, x)[..., 0] >= 0.5, 0, 1)
    if labels.ndim == 0:
        return int(labels)
    return labels


def posterior_jacobian(params: ModelParams, x) -> np.ndarray:
    """Derivative of the posterior pair with respect to ``(w_a, w_b)``.

    Rows index the class, columns the weight. For one point this is
    ``gamma * p0 * p1 * [[x_a, -x_b], [-x_a, x_b]]``; for a sequence the
    result has shape ``(T, 2, 2)``.
    """
    x = as_inputs(x)
    p = posterior(params, x)
    scale = params.gamma * p[..., 0] * p[..., 1]
    xa, xb = x[..., 0], x[..., 1]
    X = np.stack(
        [np.stack([xa, -xb], axis=-1), np.stack([-xa, xb], axis=-1)],
        axis=-2,
    )
    return scale[..., None, None] * X
