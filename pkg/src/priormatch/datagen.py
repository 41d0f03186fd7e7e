"""Synthetic labelled sequences with isotropic Gaussian emissions.

Labels are either i.i.d. draws from a unigram prior or a first-order Markov
chain started from its stationary distribution. Splits are contiguous
ranges in the order train | validation | test, so adjacent-pair statistics
survive within each split.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from priormatch.errors import InvalidInputError
from priormatch.prior import steady_state, validate_transition, validate_unigram

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_SIZES = (50000, 5000, 5000)
CONTROL_UNIGRAM = (0.692, 0.308)
FLAGSHIP_TRANSITION = ((0.6, 0.4), (0.9, 0.1))
BENCHMARK_TRANSITIONS = (
    ((0.1, 0.9), (0.8, 0.2)),
    ((0.6, 0.4), (0.9, 0.1)),
    ((0.2, 0.8), (0.5, 0.5)),
    ((0.3, 0.7), (0.4, 0.6)),
    ((0.4, 0.6), (0.1, 0.9)),
    ((0.5, 0.5), (0.7, 0.3)),
    ((0.7, 0.3), (0.8, 0.2)),
    ((0.8, 0.2), (0.4, 0.6)),
    ((0.5, 0.5), (0.4, 0.6)),
    ((0.9, 0.1), (0.3, 0.7)),
)


@dataclass(frozen=True)
class EmissionSpec:
    mu0: tuple[float, float]
    mu1: tuple[float, float]
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidInputError(f"sigma2 must be positive, got {self.sigma2}")
        for name in ("mu0", "mu1"):
            mu = getattr(self, name)
            if len(mu) != 2 or not np.all(np.isfinite(mu)):
                raise InvalidInputError(f"{name} must be a finite 2-vector, got {mu!r}")

    def to_dict(self) -> dict:
        return {"mu0": list(self.mu0), "mu1": list(self.mu1), "sigma2": self.sigma2}

    @classmethod
    def from_dict(cls, d: dict) -> "EmissionSpec":
        try:
            return cls(tuple(map(float, d["mu0"])), tuple(map(float, d["mu1"])), float(d["sigma2"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad emission spec {d!r}: {exc}") from exc


DEFAULT_EMISSION = EmissionSpec(mu0=(-0.504, -0.264), mu1=(1.646, 0.181), sigma2=0.4)


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray | None = None
    splits: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        if self.inputs.ndim != 2 or self.inputs.shape[1] != 2:
            raise InvalidInputError(f"inputs must have shape (T, 2), got {self.inputs.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self.inputs),):
                raise InvalidInputError("inputs and labels must have equal length")

    def __len__(self):
        return len(self.inputs)

    def part(self, name: str) -> tuple[np.ndarray, np.ndarray | None]:
        """Inputs and labels of one split."""
        if name not in self.splits:
            raise InvalidInputError(f"dataset has no split named {name!r}")
        lo, hi = self.splits[name]
        labels = None if self.labels is None else self.labels[lo:hi]
        return self.inputs[lo:hi], labels


def sample_labels_iid(p, T: int, seed) -> np.ndarray:
    """``T`` independent labels with ``P(label = 1) = p[1]``."""
    p = validate_unigram(p)
    if T < 1:
        raise InvalidInputError(f"T must be at least 1, got {T}")
    rng = np.random.default_rng(seed)
    return (rng.random(T) < p[1]).astype(np.int64)


def sample_labels_markov(trans, T: int, seed, initial: int | None = None) -> np.ndarray:
    """Markov chain labels; the first label is drawn from the steady state
    unless ``initial`` forces it."""
    P = validate_transition(trans)
    if T < 2:
        raise InvalidInputError(f"T must be at least 2, got {T}")
    rng = np.random.default_rng(seed)
    u = rng.random(T)
    y = np.empty(T, dtype=np.int64)
    if initial is None:
        pi = steady_state(P)
        y[0] = int(u[0] >= pi[0])
    elif initial in (0, 1):
        y[0] = initial
    else:
        raise InvalidInputError(f"initial state must be 0 or 1, got {initial!r}")
    stay0 = P[:, 0]
    for t in range(1, T):
        y[t] = int(u[t] >= stay0[y[t - 1]])
    return y


def sample_emissions(labels, spec: EmissionSpec, seed) -> np.ndarray:
    """Draw ``x_t ~ N(mu_{y_t}, sigma2 * I)`` independently given the labels."""
    y = np.asarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise InvalidInputError("labels must be a non-empty 1-D sequence")
    rng = np.random.default_rng(seed)
    means = np.where(y[:, None] == 0, np.asarray(spec.mu0), np.asarray(spec.mu1))
    return means + np.sqrt(spec.sigma2) * rng.standard_normal((y.size, 2))


def split_dataset(data: Dataset, sizes=DEFAULT_SIZES) -> Dataset:
    """Mark contiguous train/val/test ranges of the given sizes."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != 3 or any(s < 0 for s in sizes):
        raise InvalidInputError(f"sizes must be three non-negative counts, got {sizes}")
    if sum(sizes) != len(data):
        raise InvalidInputError(f"sizes {sizes} sum to {sum(sizes)}, dataset has {len(data)} points")
    bounds = np.cumsum((0,) + sizes)
    splits = {name: (int(bounds[i]), int(bounds[i + 1])) for i, name in enumerate(SPLIT_NAMES)}
    return Dataset(data.inputs, data.labels, splits)


def generate(
    T: int,
    seed: int,
    emission: EmissionSpec = DEFAULT_EMISSION,
    transition=None,
    unigram=None,
    sizes=None,
) -> Dataset:
    """Labels (Markov if ``transition`` is given, else i.i.d.) plus emissions.

    Labels and emissions use independent child streams of ``seed``.
    """
    if (transition is None) == (unigram is None):
        raise InvalidInputError("give exactly one of transition or unigram")
    label_seed, emit_seed = np.random.SeedSequence(seed).spawn(2)
    if transition is not None:
        labels = sample_labels_markov(transition, T, label_seed)
    else:
        labels = sample_labels_iid(unigram, T, label_seed)
    data = Dataset(sample_emissions(labels, emission, emit_seed), labels)
    return split_dataset(data, sizes if sizes is not None else (T, 0, 0))


def split_marks(data: Dataset) -> list[str]:
    marks = [""] * len(data)
    for name, (lo, hi) in data.splits.items():
        marks[lo:hi] = [name] * (hi - lo)
    return marks


def save_csv(data: Dataset, path) -> None:
    """Write ``x_a,x_b,label,split`` rows; floats use shortest round-trip repr."""
    marks = split_marks(data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_a", "x_b", "label", "split"])
        for i, (xa, xb) in enumerate(data.inputs):
            label = "" if data.labels is None else int(data.labels[i])
            w.writerow([repr(float(xa)), repr(float(xb)), label, marks[i]])


def load_csv(path) -> tuple[Dataset, bool]:
    """Read a dataset CSV.

    Returns the dataset and whether every split occupies a single contiguous
    range. Non-contiguous (shuffled) splits are loaded with the split
    spanning its first to last row; callers needing adjacency must refuse
    them.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    xs, labels, marks = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["x_a", "x_b", "label", "split"]:
            raise InvalidInputError(f"{path}: expected header x_a,x_b,label,split, got {reader.fieldnames}")
        for row in reader:
            try:
                xs.append((float(row["x_a"]), float(row["x_b"])))
            except ValueError as exc:
                raise InvalidInputError(f"{path}: bad number on line {reader.line_num}") from exc
            labels.append(row["label"])
            marks.append(row["split"])
    if not xs:
        raise InvalidInputError(f"{path}: no data rows")
    have_labels = all(lab != "" for lab in labels)
    y = np.array([int(lab) for lab in labels]) if have_labels else None
    splits, contiguous = {}, True
    for name in SPLIT_NAMES:
        idx = [i for i, m in enumerate(marks) if m == name]
        if idx:
            splits[name] = (idx[0], idx[-1] + 1)
            contiguous &= idx[-1] + 1 - idx[0] == len(idx)
    unknown = set(marks) - set(SPLIT_NAMES)
    if unknown:
        raise InvalidInputError(f"{path}: unknown split marks {sorted(unknown)}")
    return Dataset(np.array(xs), y, splits), contiguous


def save_spec(path, **spec) -> None:
    Path(path).write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")
