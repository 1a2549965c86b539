"""Command-line entry point: extract, train, eval, crossval, classify.

Machine-readable results go to stdout (or ``--out``) as JSON; tables for
humans go to stderr. Exit codes: 0 success (or benign verdict), 1 phishing
verdict, 2 I/O or usage error, 3 bad data, 4 training diverged, 5 model
file incompatible.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import dataset as ds
from .dqn_agent import AgentConfig, classify, classify_batch, train
from .errors import DataError, MalformedUrl, ModelFileError, NonFiniteLoss
from .metrics import PUBLISHED_MEASURES, evaluate, format_table, mean_report, side_by_side
from .neuralnet import load_model, save_params
from .url_lexer import (
    FEATURE_NAMES,
    HostEvidence,
    MissingEvidencePolicy,
    extract_features,
    load_evidence_cache,
    parse_url,
)

DEFAULT_SEED = 42
EXIT_OK, EXIT_PHISHING, EXIT_IO, EXIT_DATA, EXIT_DIVERGED, EXIT_MODEL = range(6)

# CLI flag -> AgentConfig field
_AGENT_FLAGS = {
    "episodes": "episodes",
    "gamma": "gamma",
    "epsilon_start": "epsilon_start",
    "epsilon_end": "epsilon_end",
    "epsilon_decay_steps": "epsilon_decay_steps",
    "batch_size": "batch_size",
    "capacity": "replay_capacity",
    "target_sync": "target_sync_every",
    "learn_start": "learn_start",
    "learning_rate": "learning_rate",
}

log = logging.getLogger("phishdqn")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phishdqn", description="Deep Q-learning phishing URL classifier")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus=True, model=False):
        if corpus:
            p.add_argument("--corpus", required=True, help="url,label CSV")
        p.add_argument("--evidence", help="JSON-lines evidence cache")
        if model:
            p.add_argument("--model", required=True, help="model file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, help=f"random seed (default: $PHISHDQN_SEED or {DEFAULT_SEED})")
        p.add_argument("--on-parse-error", choices=["skip", "suspicious"], default="skip")
        p.add_argument("--missing-evidence", choices=["benign", "suspicious", "error"], default="benign")

    def agent(p):
        p.add_argument("--config", help="JSON file with agent config fields")
        p.add_argument("--episodes", type=_positive_int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--epsilon-start", type=float)
        p.add_argument("--epsilon-end", type=float)
        p.add_argument("--epsilon-decay-steps", type=_positive_int)
        p.add_argument("--batch-size", type=_positive_int)
        p.add_argument("--capacity", type=_positive_int)
        p.add_argument("--target-sync", type=_positive_int)
        p.add_argument("--learn-start", type=_nonneg_int)
        p.add_argument("--learning-rate", type=float)

    p = sub.add_parser("extract", help="write the 14 features of every corpus row as CSV")
    common(p)
    p.add_argument("--mask-out", help="evidence-mask sidecar (default: <out>.mask.csv)")

    p = sub.add_parser("train", help="train on a stratified split and write a model file")
    common(p, model=True)
    agent(p)
    p.add_argument("--split-ratio", type=float, default=0.8)

    p = sub.add_parser("eval", help="score a model on a corpus")
    common(p, model=True)

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    common(p)
    agent(p)
    p.add_argument("--folds", type=int, default=2)

    p = sub.add_parser("classify", help="classify one URL; exit 0 benign, 1 phishing")
    common(p, corpus=False, model=True)
    p.add_argument("url")
    return parser


def resolve_seed(args, file_config: dict) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in file_config:
        return int(file_config["seed"])
    env = os.environ.get("PHISHDQN_SEED")
    if env:
        return int(env)
    return DEFAULT_SEED


def agent_config(args) -> AgentConfig:
    file_config = {}
    if getattr(args, "config", None):
        file_config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(file_config, dict):
            raise ValueError("config file must hold a JSON object")
    merged = dict(file_config)
    for flag, name in _AGENT_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[name] = value
    merged["seed"] = resolve_seed(args, file_config)
    return AgentConfig.from_dict(merged)


def _policy(args) -> MissingEvidencePolicy:
    return MissingEvidencePolicy(args.missing_evidence)


def _load_vectorized(args) -> ds.VectorizedDataset:
    records = ds.load_csv(args.corpus)
    data = ds.vectorize(records, args.evidence, _policy(args), args.on_parse_error)
    for idx, url, reason in data.skipped:
        log.warning("skipped row %d (%r): %s", idx, url, reason)
    return data


def _emit(args, doc: dict) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def training_meta(config: AgentConfig) -> dict:
    return {
        "seed": config.seed,
        "episodes": config.episodes,
        "gamma": config.gamma,
        "epsilon_schedule": {
            "kind": "linear",
            "start": config.epsilon_start,
            "end": config.epsilon_end,
            "decay_steps": config.epsilon_decay_steps,
        },
        "config": config.to_dict(),
    }


def cmd_extract(args) -> int:
    if not args.out:
        raise ValueError("extract needs --out")
    data = _load_vectorized(args)
    mask_out = args.mask_out or f"{args.out}.mask.csv"
    ds.write_feature_csv(data, args.out, mask_out)
    defaulted = [0] * len(FEATURE_NAMES)
    for fv, _ in data.samples:
        for i, observed in enumerate(fv.evidence_mask):
            defaulted[i] += not observed
    summary = {
        "seed": resolve_seed(args, {}),
        "rows": len(data),
        "skipped": len(data.skipped),
        "skipped_rows": [{"row": i, "url": u, "reason": r} for i, u, r in data.skipped],
        "defaulted_slots": dict(zip(FEATURE_NAMES, defaulted)),
        "features_out": args.out,
        "mask_out": mask_out,
    }
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def _score(params, data: ds.VectorizedDataset):
    predictions, _ = classify_batch(params, data.features)
    return evaluate(predictions.tolist(), data.labels.tolist())


def cmd_train(args) -> int:
    config = agent_config(args)
    data = _load_vectorized(args)
    plan = ds.split(data, args.split_ratio, config.seed)
    train_set, test_set = data.subset(plan.train_indices), data.subset(plan.test_indices)
    params, stats = train(train_set, config)
    meta = training_meta(config)
    meta["split"] = {"ratio": args.split_ratio, "train": len(plan.train_indices), "test": len(plan.test_indices)}
    save_params(params, args.model, training_meta=meta)
    test_report = _score(params, test_set)
    print(side_by_side(test_report.to_dict()), file=sys.stderr)
    _emit(args, {
        "seed": config.seed,
        "config": config.to_dict(),
        "split": meta["split"],
        "skipped": len(data.skipped),
        "training": stats.to_dict(),
        "train_report": _score(params, train_set).to_dict(),
        "test_report": test_report.to_dict(),
    })
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = _load_vectorized(args)
    rep = _score(model.params, data)
    print(side_by_side(rep.to_dict()), file=sys.stderr)
    _emit(args, {
        "seed": resolve_seed(args, {}),
        "rows": len(data),
        "skipped": len(data.skipped),
        "report": rep.to_dict(),
    })
    return EXIT_OK


def cmd_crossval(args) -> int:
    config = agent_config(args)
    data = _load_vectorized(args)
    plans = ds.kfold(data, args.folds, config.seed)
    seen = set()
    disjoint = True
    folds, reports = [], []
    for i, plan in enumerate(plans):
        test_ids = set(plan.test_indices)
        disjoint = disjoint and not (seen & test_ids)
        seen |= test_ids
        params, stats = train(data.subset(plan.train_indices), config)
        rep = _score(params, data.subset(plan.test_indices))
        reports.append(rep)
        folds.append({
            "fold": i,
            "train_size": len(plan.train_indices),
            "test_size": len(plan.test_indices),
            "final_greedy_train_accuracy": stats.episode_greedy_accuracy[-1],
            "report": rep.to_dict(),
        })
    mean = mean_report(reports)
    n_phish = int(data.labels.sum())
    majority = max(n_phish, len(data) - n_phish) / len(data)
    rows = {f"fold {f['fold']}": f["report"] for f in folds}
    rows["mean"] = mean
    rows["published"] = PUBLISHED_MEASURES
    print(format_table(rows), file=sys.stderr)
    _emit(args, {
        "seed": config.seed,
        "config": config.to_dict(),
        "k": args.folds,
        "folds": folds,
        "folds_disjoint": disjoint,
        "folds_cover_dataset": seen == set(range(len(data))),
        "mean": mean,
        "majority_baseline_accuracy": majority,
        "published": PUBLISHED_MEASURES,
    })
    return EXIT_OK


def cmd_classify(args) -> int:
    model = load_model(args.model)
    evidence = HostEvidence()
    if args.evidence:
        evidence = load_evidence_cache(args.evidence).get(args.url, HostEvidence())
    fv = extract_features(parse_url(args.url), evidence, _policy(args))
    label, q_phish = classify(model.params, fv)
    _emit(args, {
        "url": args.url,
        "label": label,
        "q_phishing": q_phish,
        "features": fv.as_dict(),
        "evidence_mask": dict(zip(FEATURE_NAMES, fv.evidence_mask)),
    })
    return EXIT_PHISHING if label else EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "crossval": cmd_crossval,
    "classify": cmd_classify,
}


def _fail(code: int, exc: Exception) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, MalformedUrl):
        doc["url"] = exc.raw
    sys.stdout.write(json.dumps(doc) + "\n")
    print(f"phishdqn: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ModelFileError as exc:
        return _fail(EXIT_MODEL, exc)
    except NonFiniteLoss as exc:
        return _fail(EXIT_DIVERGED, exc)
    except DataError as exc:
        return _fail(EXIT_DATA, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except ValueError as exc:
        # bad config values are usage errors
        parser.print_usage(sys.stderr)
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":
    sys.exit(main())
