"""Command line driver for the whole pipeline.

One binary, eleven subcommands: ingest raw records, split, train, evaluate
a model or a whole multi-seed suite, run the venue-bias report, generate
synthetic data, reproduce the synthetic scoreboard, recommend, inspect
coefficients, and serve the HTTP API.

Every run first prints the resolved configuration as a JSON line, so logs
record exactly what was executed.  Options resolve in three layers: built-in
defaults, then a JSON config file (``--config``), then explicit flags.
Failures exit nonzero with a one-line JSON error object on stderr; the exit
code distinguishes usage errors, I/O errors, file-format mismatches, and
invalid values.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bias import format_report_table, pairwise_bias_report, report_payload
from .dataset import (DatasetFormatError, IngestConfig, atomic_write_bytes,
                      build_features, canonical_json_bytes, ingest,
                      load_dataset, read_records, save_dataset,
                      stratified_split)
from .defaults import (DEFAULT_ALPHA, DEFAULT_CLIP_FLOOR, DEFAULT_CV_FOLDS,
                       DEFAULT_PERMUTATIONS, DEFAULT_TRAIN_FRACTION,
                       DEFAULT_VENUES, HYPERPARAMETER_GRID)
from .evaluation import (eval_payload, evaluate_factual, evaluate_suite,
                         factual_score_matrix_entry, format_eval_table)
from .learners import TrainConfig, predict_outcome_matrix, train
from .service import (ModelFormatError, check_fingerprint,
                      coefficients_response, load_model, recommend_response,
                      save_model, serve)
from .synth import (DEFAULT_VENUE_LAW_SEED, SynthParams, benchmark_payload,
                    format_benchmark_table, generate, run_benchmark,
                    to_dataset)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_INVALID = 5

GRID_HELP = ("grids default to the 45 values 0.001-0.009, 0.01-0.09, "
             "0.1-0.9, 1-9, 10-90 (steps 0.001/0.01/0.1/1/10); override "
             "with config keys lambda_grid / c_grid")


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems as machine-readable JSON."""

    def error(self, message):
        _print_error("usage", message, EXIT_USAGE)
        raise SystemExit(EXIT_USAGE)


def _print_error(kind: str, message, exit_code: int) -> None:
    sys.stderr.write(json.dumps(
        {"error": kind, "message": str(message), "exit_code": exit_code},
        sort_keys=True) + "\n")


def parse_seeds(text: str) -> tuple[int, ...]:
    """Seed lists: "0..9" (inclusive range), "0,3,7", or a single integer."""
    text = text.strip()
    try:
        if ".." in text:
            lo_text, hi_text = text.split("..", 1)
            lo, hi = int(lo_text), int(hi_text)
            if hi < lo:
                raise ValueError(f"empty seed range {text!r}")
            return tuple(range(lo, hi + 1))
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ValueError(f"cannot parse seeds {text!r}: expected N, "
                         f"N..M, or a comma list") from exc


def parse_name_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


_GRID = list(HYPERPARAMETER_GRID)

# Per-subcommand option defaults; config files may override any key listed
# here and nothing else.
_DEFAULTS: dict[str, dict] = {
    "ingest": {"input": None, "venues": list(DEFAULT_VENUES), "year": None,
               "out": None},
    "split": {"data": None, "train_fraction": DEFAULT_TRAIN_FRACTION,
              "seed": 0, "out_train": None, "out_test": None},
    "train": {"train": None, "learner": "t", "weighting": "ipw",
              "folds": DEFAULT_CV_FOLDS, "seed": 0, "out": None,
              "lambda_grid": _GRID, "c_grid": _GRID,
              "clip_floor": DEFAULT_CLIP_FLOOR, "target_transform": "log1p"},
    "eval": {"model": None, "test": None, "report": None},
    "eval-suite": {"data": None, "seeds": "0..9",
                   "train_fraction": DEFAULT_TRAIN_FRACTION,
                   "folds": DEFAULT_CV_FOLDS,
                   "clip_floor": DEFAULT_CLIP_FLOOR,
                   "lambda_grid": _GRID, "c_grid": _GRID, "out": None},
    "mmd": {"data": None, "permutations": DEFAULT_PERMUTATIONS,
            "alpha": DEFAULT_ALPHA, "seed": 0, "out": None},
    "synth": {"seed": 0, "n": 10000, "d": 16, "out": None},
    "synth-bench": {"seeds": "0..9", "n": 10000, "d": 16,
                    "train_fraction": DEFAULT_TRAIN_FRACTION,
                    "folds": DEFAULT_CV_FOLDS,
                    "law_seed": DEFAULT_VENUE_LAW_SEED,
                    "lambda_grid": _GRID, "c_grid": _GRID, "out": None},
    "recommend": {"model": None, "fields": None},
    "coefficients": {"model": None, "venue": None, "top": 30},
    "serve": {"model": None, "bind": "127.0.0.1:8355"},
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="venuelift",
                     description="venue recommendation pipeline")
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON file overriding option defaults")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common],
                       help="read raw JSONL records into a dataset file")
    p.add_argument("--input", required=True, metavar="PATH")
    p.add_argument("--venues", metavar="LIST",
                   help=f"comma list (default: {','.join(DEFAULT_VENUES)})")
    p.add_argument("--year", type=int, metavar="N",
                   help="keep papers from this year only (default: all)")
    p.add_argument("--out", required=True, metavar="PATH")

    p = sub.add_parser("split", parents=[common],
                       help="stratified train/test split")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--train-fraction", type=float, metavar="F",
                   help=f"(default: {DEFAULT_TRAIN_FRACTION})")
    p.add_argument("--seed", type=int, metavar="N", help="(default: 0)")
    p.add_argument("--out-train", required=True, metavar="PATH")
    p.add_argument("--out-test", required=True, metavar="PATH")

    p = sub.add_parser("train", parents=[common], epilog=GRID_HELP,
                       help="fit learners plus propensity model")
    p.add_argument("--train", required=True, metavar="PATH")
    p.add_argument("--learner", choices=("t", "s"), help="(default: t)")
    p.add_argument("--weighting", choices=("ipw", "uniform"),
                   help="(default: ipw)")
    p.add_argument("--folds", type=int, metavar="K",
                   help=f"CV folds (default: {DEFAULT_CV_FOLDS})")
    p.add_argument("--seed", type=int, metavar="N", help="(default: 0)")
    p.add_argument("--out", required=True, metavar="MODEL")

    p = sub.add_parser("eval", parents=[common],
                       help="factual rank correlation on a test set")
    p.add_argument("--model", required=True, metavar="MODEL")
    p.add_argument("--test", required=True, metavar="PATH")
    p.add_argument("--report", required=True, metavar="PATH")

    p = sub.add_parser("eval-suite", parents=[common], epilog=GRID_HELP,
                       help="multi-seed factual evaluation of all methods")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--seeds", metavar="SPEC", help="(default: 0..9)")
    p.add_argument("--train-fraction", type=float, metavar="F",
                   help=f"(default: {DEFAULT_TRAIN_FRACTION})")
    p.add_argument("--folds", type=int, metavar="K",
                   help=f"(default: {DEFAULT_CV_FOLDS})")
    p.add_argument("--out", metavar="PATH", help="write JSON results here")

    p = sub.add_parser("mmd", parents=[common],
                       help="venue-pair selection-bias permutation tests")
    p.add_argument("--data", required=True, metavar="PATH")
    p.add_argument("--permutations", type=int, metavar="B",
                   help=f"(default: {DEFAULT_PERMUTATIONS})")
    p.add_argument("--alpha", type=float, metavar="A",
                   help=f"(default: {DEFAULT_ALPHA})")
    p.add_argument("--seed", type=int, metavar="N", help="(default: 0)")
    p.add_argument("--out", metavar="PATH", help="write JSON report here")

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic two-venue dataset")
    p.add_argument("--seed", type=int, metavar="N", help="(default: 0)")
    p.add_argument("--n", type=int, metavar="N", help="(default: 10000)")
    p.add_argument("--d", type=int, metavar="D", help="(default: 16)")
    p.add_argument("--out", required=True, metavar="PATH")

    p = sub.add_parser("synth-bench", parents=[common], epilog=GRID_HELP,
                       help="counterfactual scoreboard on synthetic data")
    p.add_argument("--seeds", metavar="SPEC", help="(default: 0..9)")
    p.add_argument("--n", type=int, metavar="N", help="(default: 10000)")
    p.add_argument("--d", type=int, metavar="D", help="(default: 16)")
    p.add_argument("--train-fraction", type=float, metavar="F",
                   help=f"(default: {DEFAULT_TRAIN_FRACTION})")
    p.add_argument("--folds", type=int, metavar="K",
                   help=f"(default: {DEFAULT_CV_FOLDS})")
    p.add_argument("--law-seed", type=int, metavar="N",
                   help=f"venue outcome-law seed "
                        f"(default: {DEFAULT_VENUE_LAW_SEED})")
    p.add_argument("--out", metavar="PATH", help="write JSON results here")

    p = sub.add_parser("recommend", parents=[common],
                       help="score one paper across venues")
    p.add_argument("--model", required=True, metavar="MODEL")
    p.add_argument("--fields", required=True, metavar="LIST",
                   help="comma list of field-of-study names")

    p = sub.add_parser("coefficients", parents=[common],
                       help="top feature weights for one venue")
    p.add_argument("--model", required=True, metavar="MODEL")
    p.add_argument("--venue", required=True, metavar="V")
    p.add_argument("--top", type=int, metavar="K", help="(default: 30)")

    p = sub.add_parser("serve", parents=[common],
                       help="run the what-if HTTP service")
    p.add_argument("--model", required=True, metavar="MODEL")
    p.add_argument("--bind", metavar="HOST:PORT",
                   help="(default: 127.0.0.1:8355)")

    return parser


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Defaults, then config-file values, then explicit flags."""
    resolved = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        if not isinstance(overrides, dict):
            raise ValueError(f"{config_path}: config must be a JSON object")
        unknown = sorted(set(overrides) - set(defaults))
        if unknown:
            raise ValueError(f"{config_path}: unknown config keys {unknown}")
        resolved.update(overrides)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _write_json(path, payload) -> None:
    atomic_write_bytes(path, canonical_json_bytes(payload))


def _cmd_ingest(cfg: dict) -> None:
    venues = cfg["venues"]
    if isinstance(venues, str):
        venues = parse_name_list(venues)
    papers = ingest(read_records(cfg["input"]),
                    IngestConfig(venues=tuple(venues), year=cfg["year"]))
    dataset = build_features(papers)
    save_dataset(dataset, cfg["out"])
    _emit({"out": cfg["out"], "papers": len(dataset),
           "venue_counts": dataset.venue_counts(),
           "n_features": len(dataset.vocabulary)})


def _cmd_split(cfg: dict) -> None:
    dataset = load_dataset(cfg["data"])
    train_set, test_set = stratified_split(dataset, cfg["train_fraction"],
                                           cfg["seed"])
    save_dataset(train_set, cfg["out_train"])
    save_dataset(test_set, cfg["out_test"])
    _emit({"out_train": cfg["out_train"], "out_test": cfg["out_test"],
           "n_train": len(train_set), "n_test": len(test_set)})


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        learner_kind=cfg["learner"].upper(),
        weighting=cfg["weighting"],
        lambda_grid=tuple(cfg["lambda_grid"]),
        cv_folds=cfg["folds"],
        target_transform=cfg["target_transform"],
        seed=cfg["seed"],
        propensity_c_grid=tuple(cfg["c_grid"]),
        propensity_clip_floor=cfg["clip_floor"],
    )


def _cmd_train(cfg: dict) -> None:
    train_set = load_dataset(cfg["train"])
    model = train(train_set, _train_config(cfg))
    save_model(model, cfg["out"])
    _emit({"out": cfg["out"], "learner_kind": model.learner_kind,
           "weighting": model.config.weighting,
           "per_venue_lambda": model.per_venue_lambda,
           "propensity_c": None if model.propensity is None
           else model.propensity.chosen_c,
           "training_ipw_loss": model.diagnostics["training_ipw_loss"],
           "n_train": model.diagnostics["n_train"]})


def _cmd_eval(cfg: dict) -> None:
    model = load_model(cfg["model"]).model
    test_set = load_dataset(cfg["test"])
    if test_set.vocabulary.fields != model.vocabulary.fields:
        raise ValueError("test dataset vocabulary does not match the model")
    fingerprint_match = check_fingerprint(model, test_set)
    scores = factual_score_matrix_entry(
        predict_outcome_matrix(model, test_set.X), test_set)
    evaluation = evaluate_factual(scores, test_set)
    payload = {
        "total_rho": evaluation.total_rho,
        "per_venue_rho": evaluation.per_venue_rho,
        "omitted_venues": evaluation.omitted_venues,
        "n_test": evaluation.n_test,
        "trained_on_this_dataset": fingerprint_match,
    }
    _write_json(cfg["report"], payload)
    _emit({"report": cfg["report"], **payload})


def _cmd_eval_suite(cfg: dict) -> None:
    dataset = load_dataset(cfg["data"])
    reports = evaluate_suite(dataset,
                             seeds=parse_seeds(cfg["seeds"]),
                             train_fraction=cfg["train_fraction"],
                             lambda_grid=tuple(cfg["lambda_grid"]),
                             c_grid=tuple(cfg["c_grid"]),
                             cv_folds=cfg["folds"],
                             clip_floor=cfg["clip_floor"])
    print(format_eval_table(reports))
    if cfg["out"]:
        _write_json(cfg["out"], eval_payload(reports))


def _cmd_mmd(cfg: dict) -> None:
    dataset = load_dataset(cfg["data"])
    report = pairwise_bias_report(dataset, permutations=cfg["permutations"],
                                  alpha=cfg["alpha"], seed=cfg["seed"])
    print(format_report_table(report))
    if cfg["out"]:
        _write_json(cfg["out"], report_payload(report))


def _cmd_synth(cfg: dict) -> None:
    dataset = to_dataset(generate(SynthParams(n=cfg["n"], d=cfg["d"],
                                              seed=cfg["seed"])))
    save_dataset(dataset, cfg["out"])
    _emit({"out": cfg["out"], "papers": len(dataset),
           "venue_counts": dataset.venue_counts()})


def _cmd_synth_bench(cfg: dict) -> None:
    report = run_benchmark(parse_seeds(cfg["seeds"]), n=cfg["n"], d=cfg["d"],
                           train_fraction=cfg["train_fraction"],
                           lambda_grid=tuple(cfg["lambda_grid"]),
                           c_grid=tuple(cfg["c_grid"]),
                           cv_folds=cfg["folds"],
                           venue_law_seed=cfg["law_seed"])
    print(format_benchmark_table(report))
    if cfg["out"]:
        _write_json(cfg["out"], benchmark_payload(report))


def _cmd_recommend(cfg: dict) -> None:
    model = load_model(cfg["model"]).model
    _emit(recommend_response(model, parse_name_list(cfg["fields"])))


def _cmd_coefficients(cfg: dict) -> None:
    model = load_model(cfg["model"]).model
    _emit(coefficients_response(model, cfg["venue"], cfg["top"]))


def _cmd_serve(cfg: dict) -> None:
    serve(cfg["model"], cfg["bind"])


_HANDLERS = {
    "ingest": _cmd_ingest,
    "split": _cmd_split,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "eval-suite": _cmd_eval_suite,
    "mmd": _cmd_mmd,
    "synth": _cmd_synth,
    "synth-bench": _cmd_synth_bench,
    "recommend": _cmd_recommend,
    "coefficients": _cmd_coefficients,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        resolved = _resolve(args, _DEFAULTS[args.command])
        _emit({"command": args.command, "resolved_config": resolved})
        _HANDLERS[args.command](resolved)
        return EXIT_OK
    except OSError as exc:
        _print_error("io", exc, EXIT_IO)
        return EXIT_IO
    except (DatasetFormatError, ModelFormatError) as exc:
        _print_error("format", exc, EXIT_FORMAT)
        return EXIT_FORMAT
    except (ValueError, KeyError) as exc:
        _print_error("invalid", exc, EXIT_INVALID)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
