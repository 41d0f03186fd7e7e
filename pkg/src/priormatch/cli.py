"""Command-line entry point: ``priormatch datagen|train|suite|surface|cipher``.

Settings come from an optional JSON config file and are overridden by
flags. Errors print one ``error[<reason>]: <message>`` line to stderr and
exit with 2 (invalid input), 3 (I/O) or 4 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from priormatch import cipher, datagen
from priormatch.errors import InvalidInputError, NumericalError, PriorMatchError
from priormatch.experiments import (
    ExperimentConfig,
    default_out_dir,
    generate_dataset,
    resolve_prior,
    run_pair,
    run_suite,
    write_report,
)
from priormatch.model import ModelParams, predict
from priormatch.objective import cost, dual_optimum, output_stats
from priormatch.prior import bigram_from_labels, unigram_from_labels
from priormatch.surface import GridSpec, primal_dual_surface, primal_surface
from priormatch.trainer import Hyperparams, evaluate_error, load_hyperparams, supervised_train

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4
SPEC_NAME = "spec.json"
DATA_NAME = "data.csv"


def _matrix(text: str) -> list[list[float]]:
    """``"0.6,0.4;0.9,0.1"`` -> ``[[0.6, 0.4], [0.9, 0.1]]``."""
    try:
        return [[float(v) for v in row.split(",")] for row in text.split(";")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad matrix {text!r}: {exc}") from exc


def _vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}: {exc}") from exc


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment config (flags override --config)")
    g.add_argument("--config", type=Path, help="JSON experiment config")
    g.add_argument("--mode", choices=("unigram", "bigram"))
    g.add_argument("--prior-source", choices=("transition", "unigram", "empirical"))
    g.add_argument("--transition", type=_matrix, help='e.g. "0.6,0.4;0.9,0.1"')
    g.add_argument("--unigram", type=_vector, help='e.g. "0.692,0.308"')
    g.add_argument("--sizes", type=_vector, help="train,val,test counts")
    g.add_argument("--seed", type=int)
    g.add_argument("--hyper", type=Path, help="hyperparameter file (JSON or key = value lines)")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one hyperparameter")
    g.add_argument("--out", type=Path, help="output directory")


def _build_config(args, base: dict | None = None) -> ExperimentConfig:
    d = dict(base or {})
    if args.config is not None:
        d.update(json.loads(args.config.read_text()))
    if args.transition is not None:
        d["transition"], d["unigram"] = args.transition, None
    if args.unigram is not None:
        d["unigram"] = args.unigram
        if args.transition is None:
            d["transition"] = None
    for key, flag in (("mode", "mode"), ("prior_source", "prior_source"), ("seed", "seed")):
        if getattr(args, flag) is not None:
            d[key] = getattr(args, flag)
    if args.sizes is not None:
        d["sizes"] = [int(s) for s in args.sizes]
    hyper = dict(d.get("hyper", {}))
    if args.hyper is not None:
        hyper.update(load_hyperparams(args.hyper).to_dict())
    for item in args.set:
        if "=" not in item:
            raise InvalidInputError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        hyper[k.strip()] = v.strip()
    d["hyper"] = Hyperparams.from_dict(hyper).to_dict()
    d["out_dir"] = str(args.out) if args.out is not None else d.get("out_dir") or default_out_dir()
    return ExperimentConfig.from_dict(d)


def _dataset_config(args) -> ExperimentConfig:
    """Config from the spec file written next to the dataset, then flags."""
    spec_path = Path(args.dataset).parent / SPEC_NAME
    base = {}
    if spec_path.exists():
        base = json.loads(spec_path.read_text()).get("config") or {}
    # outputs land beside the dataset unless --out says otherwise
    base.setdefault("out_dir", str(Path(args.dataset).parent))
    return _build_config(args, base)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------


def cmd_datagen(args) -> int:
    config = _build_config(args)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = generate_dataset(config)
    datagen.save_csv(data, out / DATA_NAME)
    _write_json(out / SPEC_NAME, {"config": config.to_dict(), "rows": len(data), "splits": data.splits})
    freq = unigram_from_labels(data.labels)
    print(f"rows={len(data)} " + " ".join(f"{k}={hi - lo}" for k, (lo, hi) in data.splits.items()))
    print(f"label_freq={np.round(freq, 4).tolist()}")
    if len(data) >= 2:
        print(f"empirical_bigram={np.round(bigram_from_labels(data.labels), 4).tolist()}")
    print(f"wrote {out / DATA_NAME}")
    return EXIT_OK


def cmd_train(args) -> int:
    data, contiguous = datagen.load_csv(args.dataset)
    config = _dataset_config(args)
    if config.mode == "bigram" and not contiguous:
        raise InvalidInputError(
            "bigram training needs splits in original time order; this dataset's split marks are "
            "interleaved (shuffled), which destroys adjacent-label statistics"
        )
    if "train" not in data.splits:
        raise InvalidInputError(f"{args.dataset}: no rows marked 'train'")
    prior = resolve_prior(config, data.part("train")[1])
    do_sup = not args.unsupervised_only and data.labels is not None
    if args.supervised_only and data.labels is None:
        raise InvalidInputError("supervised training needs labels in the dataset")

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.supervised_only:
        x_tr, y_tr = data.part("train")
        val = data.part("val") if "val" in data.splits else (None, None)
        sup = supervised_train(x_tr, y_tr, config.hyper, *val)
        _save_model(out / "model_supervised.json", sup, "supervised", cost(sup, data.inputs, prior))
        x_te, y_te = data.part("test" if "test" in data.splits else "train")
        err, swap = evaluate_error(sup, x_te, y_te)
        print(f"mode={config.mode} sup_err={err:.4f} swap={str(swap).lower()} J={cost(sup, data.inputs, prior):.10f}")
        return EXIT_OK

    res = run_pair(config, data, prior, supervised=do_sup)
    if not np.isfinite(res.J):
        raise NumericalError(f"unsupervised model has non-finite cost {res.J}")
    _save_model(out / "model_unsupervised.json", res.unsupervised, "unsupervised", res.J)
    res.trace.to_csv(out / "trace.csv")
    parts = [f"mode={config.mode}"]
    if res.supervised is not None:
        _save_model(out / "model_supervised.json", res.supervised, "supervised", cost(res.supervised, data.inputs, prior))
        parts += [f"sup_err={res.sup_err:.4f}"]
    parts += [f"unsup_err={res.unsup_err:.4f}"]
    if res.supervised is not None:
        parts += [f"gap={abs(res.unsup_err - res.sup_err):.4f}"]
    parts += [f"swap={str(res.swap).lower()}", f"J={res.J:.10f}", f"best_step={res.trace.best_step}"]
    print(" ".join(parts))
    if config.mode == "unigram":
        majority = int(np.argmax(prior))
        x_te = data.part("test" if "test" in data.splits else "train")[0]
        share = float(np.mean(predict(res.unsupervised, x_te) == majority))
        print(f"note: unigram prior; {share:.1%} of test predictions are the majority class {majority}")
    return EXIT_OK


def _save_model(path: Path, params: ModelParams, trained_by: str, J: float) -> None:
    d = params.to_dict()
    d.update(trained_by=trained_by, J=J)
    _write_json(path, d)


def cmd_suite(args) -> int:
    config = _build_config(args)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_suite(config, workers=args.workers)
    path = out / "report.csv"
    write_report(rows, path, timing=not args.no_timing)
    for r in rows:
        if "failure" in r:
            print(f"warning: {r['dataset']} failed: {r['failure']}", file=sys.stderr)
        print(f"{r['dataset']:>10} sup={r['sup_err']:.4f} unsup={r['unsup_err']:.4f} gap={r['gap']:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_surface(args) -> int:
    try:
        model_dict = json.loads(Path(args.model).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{args.model}: not valid JSON: {exc}") from exc
    params = ModelParams.from_dict(model_dict)
    data, contiguous = datagen.load_csv(args.dataset)
    config = _dataset_config(args)
    if config.mode == "bigram" and not contiguous:
        raise InvalidInputError("bigram surfaces need inputs in original time order")
    prior = resolve_prior(config, data.part("train")[1] if "train" in data.splits else data.labels)
    lo, hi, n = args.grid
    grid = GridSpec(lo, hi, int(n), lo, hi, int(n))
    if args.surface_mode == "primal":
        surf = primal_surface(params, data.inputs, prior, grid)
    else:
        if model_dict.get("trained_by") != "supervised":
            raise InvalidInputError(
                "primal-dual surfaces are anchored at the supervised optimum; pass a model written by "
                "'train' with trained_by=supervised"
            )
        V0 = dual_optimum(output_stats(params, data.inputs, prior))
        surf = primal_dual_surface(params, V0, data.inputs, prior, grid, seed=args.surface_seed)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    surf.to_csv(out)
    print(f"anchor_J={cost(params, data.inputs, prior):.10f} cells={surf.z.size} wrote {out}")
    return EXIT_OK


def cmd_cipher(args) -> int:
    text = sys.stdin.read() if args.input in (None, "-") else Path(args.input).read_text()
    if args.action == "encrypt":
        sys.stdout.write(cipher.shift_encrypt(text, args.shift))
    elif args.action == "decrypt":
        sys.stdout.write(cipher.shift_decrypt(text, args.shift))
    else:
        ref = cipher.load_reference(args.reference)
        shift, scores = cipher.crack_shift(text, ref, metric=args.metric)
        print(f"shift={shift}")
        print("scores=" + ",".join(f"{s:.6f}" for s in scores))
        sys.stdout.write(cipher.shift_decrypt(text, shift))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="priormatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="synthesize a labelled dataset")
    _add_config_flags(p)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="supervised baseline and unsupervised primal-dual training")
    p.add_argument("--dataset", required=True, type=Path)
    _add_config_flags(p)
    only = p.add_mutually_exclusive_group()
    only.add_argument("--supervised-only", action="store_true")
    only.add_argument("--unsupervised-only", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("suite", help="ten printed transition matrices plus the unigram control")
    _add_config_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("surface", help="export a cost-surface grid as CSV")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--surface-mode", choices=("primal", "primal-dual"), default="primal")
    p.add_argument("--grid", type=_vector, default=[-5.0, 5.0, 81], help="lo,hi,n for both axes")
    p.add_argument("--surface-seed", type=int, default=0)
    p.add_argument("--output", "-o", required=True, type=Path)
    _add_config_flags(p)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("cipher", help="Caesar shift cipher demo")
    p.add_argument("action", choices=("encrypt", "decrypt", "crack"))
    p.add_argument("input", nargs="?", help="text file; '-' or omitted reads stdin")
    p.add_argument("--shift", type=int, default=3)
    p.add_argument("--reference", type=Path, help="LETTER,frequency file (default: bundled English)")
    p.add_argument("--metric", choices=("chi2", "kl"), default="chi2")
    p.set_defaults(func=cmd_cipher)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "grid", None) is not None and len(args.grid) != 3:
            raise InvalidInputError("--grid expects lo,hi,n")
        return args.func(args)
    except NumericalError as exc:
        print(f"error[{exc.reason}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PriorMatchError as exc:
        print(f"error[{exc.reason}]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except json.JSONDecodeError as exc:
        print(f"error[invalid-input]: bad JSON: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"error[io]: {exc.strerror or exc}{where}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
