"""Experiment configuration and the ten-chain benchmark suite."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from priormatch import datagen
from priormatch.datagen import Dataset, EmissionSpec
from priormatch.errors import InvalidInputError, PriorMatchError
from priormatch.model import ModelParams
from priormatch.objective import cost
from priormatch.prior import (
    bigram_from_labels,
    bigram_from_transition,
    steady_state,
    unigram_from_labels,
    validate_transition,
    validate_unigram,
)
from priormatch.trainer import Hyperparams, evaluate_error, spdg_train, supervised_train

MODES = ("unigram", "bigram")
PRIOR_SOURCES = ("transition", "unigram", "empirical")
REPORT_HEADER = ("dataset", "ptrans", "sup_err", "unsup_err", "gap", "swap", "seconds")
OUT_ENV = "PRIORMATCH_OUT"


def default_out_dir() -> str:
    return os.environ.get(OUT_ENV, "runs")


@dataclass
class ExperimentConfig:
    mode: str = "bigram"
    prior_source: str = "transition"
    transition: list | None = field(default_factory=lambda: [list(r) for r in datagen.FLAGSHIP_TRANSITION])
    unigram: list | None = None
    emission: EmissionSpec = datagen.DEFAULT_EMISSION
    sizes: tuple[int, int, int] = datagen.DEFAULT_SIZES
    hyper: Hyperparams = field(default_factory=Hyperparams)
    seed: int = 0
    out_dir: str = field(default_factory=default_out_dir)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.prior_source not in PRIOR_SOURCES:
            raise InvalidInputError(f"prior_source must be one of {PRIOR_SOURCES}, got {self.prior_source!r}")
        if (self.transition is None) == (self.unigram is None):
            raise InvalidInputError("give exactly one of 'transition' or 'unigram' to generate labels")
        if self.prior_source == "transition" and self.transition is None:
            raise InvalidInputError("prior_source 'transition' needs a transition matrix")
        if self.prior_source == "unigram":
            if self.unigram is None:
                raise InvalidInputError("prior_source 'unigram' needs a unigram vector")
            if self.mode == "bigram":
                raise InvalidInputError("a unigram vector cannot serve as a bigram prior")
        if self.transition is not None:
            self.transition = validate_transition(self.transition).tolist()
        if self.unigram is not None:
            self.unigram = validate_unigram(self.unigram).tolist()
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) != 3 or any(s < 0 for s in self.sizes) or self.sizes[0] < 1:
            raise InvalidInputError(f"sizes must be three counts with a non-empty training split, got {self.sizes}")

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "prior_source": self.prior_source,
            "transition": self.transition,
            "unigram": self.unigram,
            "emission": self.emission.to_dict(),
            "sizes": list(self.sizes),
            "hyper": self.hyper.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("out_dir") is None:
            d.pop("out_dir", None)
        unknown = set(d) - {"mode", "prior_source", "transition", "unigram", "emission", "sizes", "hyper", "seed", "out_dir"}
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        if "emission" in d:
            d["emission"] = EmissionSpec.from_dict(d["emission"])
        if "hyper" in d:
            d["hyper"] = Hyperparams.from_dict(d["hyper"])
        if "unigram" in d and d["unigram"] is not None and "transition" not in d:
            d["transition"] = None
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON: {exc}") from exc


def generate_dataset(config: ExperimentConfig) -> Dataset:
    return datagen.generate(
        config.total,
        config.seed,
        config.emission,
        transition=config.transition,
        unigram=config.unigram if config.transition is None else None,
        sizes=config.sizes,
    )


def resolve_prior(config: ExperimentConfig, train_labels=None) -> np.ndarray:
    """Training prior for ``config.mode`` from the configured source."""
    if config.prior_source == "empirical":
        if train_labels is None:
            raise InvalidInputError("an empirical prior needs labelled training data")
        if config.mode == "bigram":
            return bigram_from_labels(train_labels)
        return unigram_from_labels(train_labels)
    if config.prior_source == "unigram":
        return np.asarray(config.unigram, dtype=float)
    if config.mode == "bigram":
        return bigram_from_transition(config.transition)
    return steady_state(config.transition)


def _nonempty(data: Dataset, name: str) -> bool:
    lo, hi = data.splits.get(name, (0, 0))
    return hi > lo


@dataclass
class PairResult:
    supervised: ModelParams | None
    unsupervised: ModelParams
    duals: np.ndarray
    trace: object
    sup_err: float
    unsup_err: float
    swap: bool
    J: float


def run_pair(config: ExperimentConfig, data: Dataset, prior, supervised: bool = True) -> PairResult:
    """Supervised baseline and unsupervised primal-dual run on one dataset.

    Test error is measured on the test split (validation when there is no
    test split).
    """
    x_tr, y_tr = data.part("train")
    x_val, y_val = data.part("val") if _nonempty(data, "val") else (None, None)
    x_te, y_te = data.part("test" if _nonempty(data, "test") else "train")

    sup = None
    sup_err = float("nan")
    if supervised:
        if y_tr is None:
            raise InvalidInputError("supervised training needs labels")
        sup = supervised_train(x_tr, y_tr, config.hyper, x_val, y_val)
        if y_te is not None:
            sup_err = evaluate_error(sup, x_te, y_te)[0]

    unsup, duals, trace = spdg_train(x_tr, prior, config.hyper, x_val, y_val)
    unsup_err, swap = (float("nan"), False) if y_te is None else evaluate_error(unsup, x_te, y_te)
    return PairResult(sup, unsup, duals, trace, sup_err, unsup_err, swap, cost(unsup, data.inputs, prior))


def suite_configs(base: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    """The ten printed chains followed by the unigram control."""
    runs = []
    for i, P in enumerate(datagen.BENCHMARK_TRANSITIONS, start=1):
        cfg = ExperimentConfig(
            mode="bigram",
            prior_source="transition",
            transition=[list(r) for r in P],
            emission=base.emission,
            sizes=base.sizes,
            hyper=base.hyper,
            seed=base.seed + i,
            out_dir=base.out_dir,
        )
        runs.append((f"SynData{i}", cfg))
    control = ExperimentConfig(
        mode="unigram",
        prior_source="unigram",
        transition=None,
        unigram=list(datagen.CONTROL_UNIGRAM),
        emission=base.emission,
        sizes=base.sizes,
        hyper=base.hyper,
        seed=base.seed,
        out_dir=base.out_dir,
    )
    runs.append(("Unigram", control))
    return runs


def suite_row(name: str, config: ExperimentConfig) -> dict:
    start = time.perf_counter()
    ptrans = json.dumps(config.transition) if config.transition is not None else f"unigram{json.dumps(config.unigram)}"
    row = {"dataset": name, "ptrans": ptrans.replace(" ", "")}
    try:
        data = generate_dataset(config)
        res = run_pair(config, data, resolve_prior(config, data.part("train")[1]))
        row.update(sup_err=res.sup_err, unsup_err=res.unsup_err, gap=abs(res.unsup_err - res.sup_err), swap=res.swap)
    except PriorMatchError as exc:
        row.update(sup_err=float("nan"), unsup_err=float("nan"), gap=float("nan"), swap=False, failure=str(exc))
    row["seconds"] = time.perf_counter() - start
    return row


def _suite_row_star(args):
    return suite_row(*args)


def run_suite(base: ExperimentConfig, workers: int = 1) -> list[dict]:
    """Rows in dataset order regardless of completion order."""
    jobs = suite_configs(base)
    if workers <= 1:
        return [suite_row(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_suite_row_star, jobs))


def write_report(rows: list[dict], path, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in rows:
            w.writerow(
                [
                    r["dataset"],
                    r["ptrans"],
                    f"{r['sup_err']:.6f}",
                    f"{r['unsup_err']:.6f}",
                    f"{r['gap']:.6f}",
                    "true" if r["swap"] else "false",
                    f"{r['seconds']:.3f}" if timing else "",
                ]
            )
