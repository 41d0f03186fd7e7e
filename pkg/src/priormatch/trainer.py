"""Stochastic primal-dual training, a supervised baseline and evaluation.

Each primal-dual step draws one contiguous window of ``batch_len`` inputs,
evaluates both gradients of the saddle function at the current point, then
descends in ``theta`` and ascends in ``V`` simultaneously. Dual entries are
projected back to ``<= -dual_clamp_eps`` after every step.

The inner loop is compiled with numba; its per-step gradients are the same
quantities as ``objective.grad_theta`` / ``objective.grad_dual`` (the test
suite checks one against the other).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numba
import numpy as np

from priormatch.errors import InvalidInputError, NumericalError
from priormatch.model import DEFAULT_GAMMA, ModelParams, as_inputs, posterior, predict
from priormatch.objective import cost
from priormatch.prior import validate_prior

TRACE_HEADER = ("step", "J_train", "J_val", "error", "w_a", "w_b")


@dataclass
class Hyperparams:
    lr_theta: float = 1e-6
    lr_dual: float = 1e-4
    batch_len: int = 10
    max_steps: int = 2_000_000
    eval_every: int = 10_000
    patience: int = 20
    dual_clamp_eps: float = 1e-6
    seed: int = 0
    # supervised baseline
    sup_lr: float = 0.02
    sup_batch: int = 100
    sup_max_steps: int = 50_000
    sup_eval_every: int = 1_000
    sup_patience: int = 10

    def __post_init__(self):
        # lr_theta = 0 is allowed: it turns the method into pure dual ascent
        if not (self.lr_theta >= 0 and self.lr_dual > 0 and self.sup_lr > 0):
            raise InvalidInputError("learning rates must be positive (lr_theta may be zero)")
        if self.dual_clamp_eps <= 0:
            raise InvalidInputError("dual_clamp_eps must be positive")
        for name in ("batch_len", "eval_every", "sup_batch", "sup_eval_every"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be at least 1")
        for name in ("max_steps", "patience", "sup_max_steps", "sup_patience"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise InvalidInputError(f"unknown hyperparameters: {sorted(unknown)}")
        kwargs = {}
        for k, v in d.items():
            default = getattr(cls, k)
            try:
                # ints may arrive as "2e6" from key=value files
                kwargs[k] = int(float(v)) if isinstance(default, int) else float(v)
            except (TypeError, ValueError) as exc:
                raise InvalidInputError(f"hyperparameter {k}={v!r}: {exc}") from exc
        return cls(**kwargs)


def load_hyperparams(path) -> Hyperparams:
    """Read a JSON object or ``key = value`` lines (``#`` starts a comment)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            return Hyperparams.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON: {exc}") from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        values[k.strip()] = v.strip()
    return Hyperparams.from_dict(values)


@dataclass
class TraceRow:
    step: int
    J_train: float
    J_val: float
    error: float
    w_a: float
    w_b: float


@dataclass
class TrainTrace:
    rows: list[TraceRow] = field(default_factory=list)
    best_step: int = 0

    def append(self, row: TraceRow) -> None:
        if self.rows and row.step <= self.rows[-1].step:
            raise ValueError("trace steps must be strictly increasing")
        self.rows.append(row)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for r in self.rows:
                w.writerow([r.step] + [repr(float(getattr(r, k))) for k in TRACE_HEADER[1:]])


# ---------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True)
def _post0(gamma, wa, wb, xa, xb):
    z = gamma * (wa * xa - wb * xb)
    if z >= 0.0:
        e = math.exp(-z)
        return 1.0 / (1.0 + e), e / (1.0 + e)
    e = math.exp(z)
    return e / (1.0 + e), 1.0 / (1.0 + e)


@numba.njit(cache=True)
def _unigram_steps(x, prior, starts, n, lr_t, lr_v, eps, gamma, w, V):
    for s in starts:
        m0 = prior[0] * V[0]
        m1 = prior[1] * V[1]
        ga = 0.0
        gb = 0.0
        s0 = 0.0
        s1 = 0.0
        for t in range(s, s + n):
            p0, p1 = _post0(gamma, w[0], w[1], x[t, 0], x[t, 1])
            c = gamma * p0 * p1 * (m0 - m1)
            ga += c * x[t, 0]
            gb -= c * x[t, 1]
            s0 += p0
            s1 += p1
        gv0 = prior[0] * s0 / n + prior[0] / V[0]
        gv1 = prior[1] * s1 / n + prior[1] / V[1]
        w[0] -= lr_t * ga / n
        w[1] -= lr_t * gb / n
        V[0] = min(V[0] + lr_v * gv0, -eps)
        V[1] = min(V[1] + lr_v * gv1, -eps)


@numba.njit(cache=True)
def _bigram_steps(x, prior, starts, n, lr_t, lr_v, eps, gamma, w, V):
    M = np.empty((2, 2))
    S = np.empty((2, 2))
    for s in starts:
        for i in range(2):
            for j in range(2):
                M[i, j] = prior[i, j] * V[i, j]
                S[i, j] = 0.0
        ga = 0.0
        gb = 0.0
        q0, q1 = _post0(gamma, w[0], w[1], x[s, 0], x[s, 1])
        cq = gamma * q0 * q1
        for t in range(s + 1, s + n):
            p0, p1 = _post0(gamma, w[0], w[1], x[t, 0], x[t, 1])
            cp = gamma * p0 * p1
            S[0, 0] += q0 * p0
            S[0, 1] += q0 * p1
            S[1, 0] += q1 * p0
            S[1, 1] += q1 * p1
            # q^T M p, differentiated through q (previous) and p (current);
            # d(p0)/dw = cp * (x_a, -x_b) and d(p1)/dw = -d(p0)/dw
            a = (M[0, 0] * p0 + M[0, 1] * p1) - (M[1, 0] * p0 + M[1, 1] * p1)
            b = (q0 * M[0, 0] + q1 * M[1, 0]) - (q0 * M[0, 1] + q1 * M[1, 1])
            ga += a * cq * x[t - 1, 0] + b * cp * x[t, 0]
            gb -= a * cq * x[t - 1, 1] + b * cp * x[t, 1]
            q0 = p0
            q1 = p1
            cq = cp
        k = n - 1
        w[0] -= lr_t * ga / k
        w[1] -= lr_t * gb / k
        for i in range(2):
            for j in range(2):
                g = prior[i, j] * S[i, j] / k + prior[i, j] / V[i, j]
                V[i, j] = min(V[i, j] + lr_v * g, -eps)


def spdg_steps(inputs, prior, starts, hyper: Hyperparams, w, V, gamma=DEFAULT_GAMMA) -> None:
    """Run one primal-dual update per window start, modifying ``w`` and ``V``
    in place."""
    x = np.ascontiguousarray(inputs, dtype=float)
    prior = np.ascontiguousarray(prior, dtype=float)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    n = hyper.batch_len
    if starts.size and (starts.min() < 0 or starts.max() + n > len(x)):
        raise InvalidInputError("a window would run past the end of the sequence")
    kernel = _unigram_steps if prior.shape == (2,) else _bigram_steps
    kernel(x, prior, starts, n, hyper.lr_theta, hyper.lr_dual, hyper.dual_clamp_eps, float(gamma), w, V)


def init_state(prior_shape, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Weights uniform on [-0.1, 0.1]; duals in (-2, -1]."""
    w = rng.uniform(-0.1, 0.1, size=2)
    V = -1.0 - np.abs(rng.random(prior_shape))
    return w, V


# ---------------------------------------------------------------------------
# evaluation


def evaluate_error(params: ModelParams, inputs, labels) -> tuple[float, bool]:
    """Fraction of wrong hard predictions, and whether swapping the two
    labels would do better (reported only, never applied)."""
    x = as_inputs(inputs)
    y = np.asarray(labels)
    if x.ndim != 2 or len(x) == 0:
        raise InvalidInputError("need a non-empty (T, 2) input sequence")
    if y.shape != (len(x),):
        raise InvalidInputError(f"{len(x)} inputs but labels have shape {y.shape}")
    err = float(np.mean(predict(params, x) != y))
    return err, (1.0 - err) < err


# ---------------------------------------------------------------------------
# training loops


def spdg_train(
    inputs,
    prior,
    hyper: Hyperparams | None = None,
    val_inputs=None,
    val_labels=None,
    gamma: float = DEFAULT_GAMMA,
) -> tuple[ModelParams, np.ndarray, TrainTrace]:
    """Unsupervised training against ``prior`` (shape (2,) or (2, 2)).

    Early stopping watches the label-free cost on ``val_inputs`` (the
    training inputs when none are given). ``val_labels`` only feed the
    ``error`` column of the trace.

    Returns
    -------
    params : ModelParams
        Weights with the best validation cost seen.
    duals : ndarray
        Dual variables at that same evaluation.
    trace : TrainTrace
    """
    hyper = hyper or Hyperparams()
    prior = validate_prior(prior)
    x = as_inputs(inputs)
    if x.ndim != 2:
        raise InvalidInputError("inputs must be a (T, 2) sequence")
    n = hyper.batch_len
    if prior.shape == (2, 2) and n < 2:
        raise InvalidInputError("bigram training needs batch_len >= 2")
    if n > len(x):
        raise InvalidInputError(f"batch_len {n} exceeds the {len(x)} training inputs")
    xv = x if val_inputs is None else as_inputs(val_inputs)

    rng = np.random.default_rng(hyper.seed)
    w, V = init_state(prior.shape, rng)
    trace = TrainTrace()

    def record(step):
        params = ModelParams(w[0], w[1], gamma)
        err = math.nan if val_labels is None else evaluate_error(params, xv, val_labels)[0]
        j_val = cost(params, xv, prior)
        trace.append(TraceRow(step, cost(params, x, prior), j_val, err, w[0], w[1]))
        return j_val

    best_j = record(0)
    best = (w.copy(), V.copy(), 0)
    stale = 0
    step = 0
    while step < hyper.max_steps:
        k = min(hyper.eval_every, hyper.max_steps - step)
        starts = rng.integers(0, len(x) - n + 1, size=k)
        spdg_steps(x, prior, starts, hyper, w, V, gamma)
        step += k
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(V))):
            raise NumericalError(f"non-finite parameters at step {step}")
        j_val = record(step)
        if j_val < best_j:
            best_j, best, stale = j_val, (w.copy(), V.copy(), step), 0
        else:
            stale += 1
            if stale > hyper.patience:
                break
    trace.best_step = best[2]
    return ModelParams(best[0][0], best[0][1], gamma), best[1], trace


def supervised_loss(params: ModelParams, inputs, labels) -> float:
    """Mean negative log posterior of the true labels."""
    x = as_inputs(inputs)
    y = np.asarray(labels)
    z = params.gamma * (params.w_a * x[:, 0] - params.w_b * x[:, 1])
    signed = np.where(y == 0, z, -z)
    return float(np.mean(np.logaddexp(0.0, -signed)))


def supervised_grad(params: ModelParams, inputs, labels) -> np.ndarray:
    """Gradient of ``supervised_loss`` with respect to ``(w_a, w_b)``."""
    x = as_inputs(inputs)
    y = np.asarray(labels)
    p0 = posterior(params, x)[:, 0]
    r = (y == 0).astype(float) - p0
    g = params.gamma * np.stack([r * x[:, 0], -r * x[:, 1]], axis=1).mean(axis=0)
    return -g


def supervised_train(
    inputs,
    labels,
    hyper: Hyperparams | None = None,
    val_inputs=None,
    val_labels=None,
    gamma: float = DEFAULT_GAMMA,
) -> ModelParams:
    """Maximum-likelihood baseline by mini-batch SGD.

    Keeps the weights with the lowest validation loss (training loss when
    no validation data is given).
    """
    hyper = hyper or Hyperparams()
    x = as_inputs(inputs)
    y = np.asarray(labels)
    if x.ndim != 2 or len(x) == 0:
        raise InvalidInputError("need a non-empty (T, 2) input sequence")
    if y.shape != (len(x),):
        raise InvalidInputError(f"{len(x)} inputs but {y.size} labels")
    if val_inputs is None:
        xv, yv = x, y
    else:
        xv, yv = as_inputs(val_inputs), np.asarray(val_labels)

    rng = np.random.default_rng(hyper.seed)
    w, _ = init_state((2,), rng)
    params = ModelParams(w[0], w[1], gamma)
    best_loss, best = supervised_loss(params, xv, yv), params
    stale = 0
    step = 0
    while step < hyper.sup_max_steps:
        k = min(hyper.sup_eval_every, hyper.sup_max_steps - step)
        for _ in range(k):
            idx = rng.integers(0, len(x), size=min(hyper.sup_batch, len(x)))
            w = w - hyper.sup_lr * supervised_grad(params, x[idx], y[idx])
            params = ModelParams(w[0], w[1], gamma)
        step += k
        loss = supervised_loss(params, xv, yv)
        if loss < best_loss:
            best_loss, best, stale = loss, params, 0
        else:
            stale += 1
            if stale > hyper.sup_patience:
                break
    return best
