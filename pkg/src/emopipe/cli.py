"""Experiment runner CLI.

Subcommands: ``synth`` (generate a corpus), ``extract`` (features to CSV),
``evaluate`` (one task/signals/classifier cell), ``ablate`` (the 4x4
signals-by-classifier grid with shared folds), ``convert-check`` (validate
PSR1 files).

Configuration resolves in order: built-in defaults, then a flat
``key = value`` config file (--config), then ``EMOPIPE_<KEY>`` environment
variables, then explicit command-line flags.  Every emitted report embeds the
fully resolved experiment config and its hash, so a run can be reproduced
from its own report.  Exit codes: 0 success, 2 validation error, 3 data
error, 4 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__, dataio, evaluation, hjorth, kernels, synth
from .errors import DataError, EmopipeError, ValidationError
from .model import Band, SignalKind, Task, standard_groups

ENV_PREFIX = "EMOPIPE_"
SIGNAL_ORDER = ("eeg", "eog", "emg")
COMBOS = (("eeg",), ("eeg", "eog"), ("eeg", "emg"), ("eeg", "eog", "emg"))
CLASSIFIERS = ("knn", "cart", "rf", "ens")

CONFIG_KEYS = (
    "data_dir",
    "labels",
    "task",
    "signals",
    "classifier",
    "bands",
    "window_seconds",
    "filter_order",
    "cv_folds",
    "threshold",
    "seed",
    "complexity",
    "split",
)

DEFAULTS = {
    "task": "arousal2",
    "signals": "eeg",
    "classifier": "ens",
    "bands": "theta:4-8,alpha:8-13,beta:13-30,gamma:30-43",
    "window_seconds": "10.0",
    "filter_order": "8",
    "cv_folds": "10",
    "threshold": "5.0",
    "complexity": "paper",
    "split": "trial",
}


def _parse_bands(text: str):
    bands = []
    for token in text.split(","):
        token = token.strip()
        try:
            name, edges = token.split(":")
            low, high = edges.split("-")
            bands.append(Band(name.strip(), float(low), float(high)))
        except ValueError as exc:
            raise ValidationError(
                f"bad band spec {token!r}; expected name:low-high"
            ) from exc
    if not bands:
        raise ValidationError("empty band list")
    return tuple(bands)


def _parse_signals(text: str) -> tuple[str, ...]:
    tokens = tuple(t.strip().lower() for t in text.split(",") if t.strip())
    for t in tokens:
        if t not in SIGNAL_ORDER:
            raise ValidationError(f"unknown signal {t!r}; choose from {SIGNAL_ORDER}")
    if "eeg" not in tokens:
        raise ValidationError("signals must include eeg")
    return tuple(s for s in SIGNAL_ORDER if s in tokens)


def combo_token(signals) -> str:
    return "-".join(s for s in SIGNAL_ORDER if s in signals)


@dataclass(frozen=True)
class RunConfig:
    data_dir: str
    labels: str
    task: Task
    signals: tuple[str, ...]
    classifier: str
    bands: tuple[Band, ...]
    window_seconds: float
    filter_order: int
    cv_folds: int
    threshold: float
    seed: int | None
    complexity: str
    split: str

    def to_flat(self) -> dict:
        """Canonical string form of every key; round-trips through a config file."""
        return {
            "data_dir": self.data_dir,
            "labels": self.labels,
            "task": self.task.value,
            "signals": ",".join(self.signals),
            "classifier": self.classifier,
            "bands": ",".join(
                f"{b.name}:{b.low_hz:g}-{b.high_hz:g}" for b in self.bands
            ),
            "window_seconds": repr(self.window_seconds),
            "filter_order": str(self.filter_order),
            "cv_folds": str(self.cv_folds),
            "threshold": repr(self.threshold),
            "seed": "" if self.seed is None else str(self.seed),
            "complexity": self.complexity,
            "split": self.split,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_flat(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _read_config_file(path) -> dict:
    values = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"{path}:{line_no}: expected key = value")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValidationError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def resolve_config(args) -> RunConfig:
    flat = dict(DEFAULTS)
    if getattr(args, "config", None):
        flat.update(_read_config_file(args.config))
    for key in CONFIG_KEYS:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            flat[key] = env
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            flat[key] = str(value)

    missing = [k for k in ("data_dir", "labels") if not flat.get(k)]
    if missing:
        raise ValidationError(f"missing required config keys: {', '.join(missing)}")
    try:
        task = Task(flat["task"])
    except ValueError:
        raise ValidationError(
            f"unknown task {flat['task']!r}; choose from "
            f"{[t.value for t in Task]}"
        ) from None
    classifier = flat["classifier"]
    if classifier not in CLASSIFIERS:
        raise ValidationError(f"unknown classifier {classifier!r}; choose from {CLASSIFIERS}")
    complexity = flat["complexity"]
    if complexity not in hjorth.COMPLEXITY_FORMS:
        raise ValidationError(f"complexity must be one of {hjorth.COMPLEXITY_FORMS}")
    split = flat["split"]
    if split not in ("trial", "subject"):
        raise ValidationError("split must be 'trial' or 'subject'")
    try:
        window_seconds = float(flat["window_seconds"])
        filter_order = int(flat["filter_order"])
        cv_folds = int(flat["cv_folds"])
        threshold = float(flat["threshold"])
        seed = int(flat["seed"]) if flat.get("seed") not in (None, "") else None
    except ValueError as exc:
        raise ValidationError(f"bad numeric config value: {exc}") from exc
    if filter_order < 1:
        raise ValidationError(f"filter_order must be >= 1, got {filter_order}")
    if cv_folds < 2:
        raise ValidationError(f"cv_folds must be >= 2, got {cv_folds}")
    if not (1.0 < threshold < 9.0):
        raise ValidationError(f"threshold must be in (1, 9), got {threshold}")
    return RunConfig(
        data_dir=flat["data_dir"],
        labels=flat["labels"],
        task=task,
        signals=_parse_signals(flat["signals"]),
        classifier=classifier,
        bands=_parse_bands(flat["bands"]),
        window_seconds=window_seconds,
        filter_order=filter_order,
        cv_folds=cv_folds,
        threshold=threshold,
        seed=seed,
        complexity=complexity,
        split=split,
    )


def _check_inputs(config: RunConfig) -> None:
    """Enumerate every missing input before any work starts."""
    problems = []
    data_dir = Path(config.data_dir)
    if not data_dir.is_dir():
        problems.append(f"data directory not found: {data_dir}")
    elif not dataio.recording_paths(data_dir):
        problems.append(f"no .psr1 recordings in {data_dir}")
    if not Path(config.labels).is_file():
        problems.append(f"labels file not found: {config.labels}")
    if problems:
        raise DataError("; ".join(problems))


def _groups_for(recordings, signals):
    groups = standard_groups(recordings[0].channel_names)
    selected = []
    for token in signals:
        kind = SignalKind(token)
        if kind not in groups:
            raise DataError(f"recordings carry no {token} channels")
        selected.append(groups[kind])
    return selected


def _extract(config: RunConfig, recordings, signals):
    groups = _groups_for(recordings, signals)
    window = hjorth.WindowSpec(length_seconds=config.window_seconds)
    return hjorth.extract_features(
        recordings,
        groups,
        config.bands,
        window,
        order=config.filter_order,
        complexity_form=config.complexity,
    )


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        n_subjects=args.subjects,
        n_trials=args.trials,
        n_seconds=args.seconds,
        noise_sigma=args.noise,
        low_amplitude=args.low_amp,
        high_amplitude=args.high_amp,
        background_amplitude=args.background_amp,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    recordings, labels = synth.generate_corpus(spec)
    for rec in recordings:
        dataio.write_recording(rec, out / f"rec_s{rec.subject_id:03d}_t{rec.trial_id:02d}.psr1")
    dataio.write_labels(labels, out / "labels.csv")
    print(f"wrote {len(recordings)} recordings and labels.csv to {out}")
    return 0


def cmd_extract(args) -> int:
    config = resolve_config(args)
    _check_inputs(config)
    recordings = dataio.load_recordings(config.data_dir)
    dataio.read_labels(config.labels)  # validate early
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    features = _extract(config, recordings, config.signals)
    path = out / f"features_{combo_token(config.signals)}.csv"
    dataio.write_features(features, path)
    print(f"wrote {features.n_rows} x {features.n_features} features to {path}")
    return 0


def _report_payload(config: RunConfig, report) -> dict:
    return {
        "config": config.to_flat(),
        "config_hash": config.config_hash(),
        "report": report.to_dict(),
    }


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _evaluate_cell(config, features, labels, classifier, folds, metadata):
    dataset = evaluation.dataset_from_features(
        features, labels, config.task, config.threshold
    )
    return evaluation.run_experiment(
        dataset,
        config.task,
        classifier,
        seed=config.seed,
        n_folds=config.cv_folds,
        split=config.split,
        folds=folds,
        metadata=metadata,
    )


def cmd_evaluate(args) -> int:
    config = resolve_config(args)
    if args.features:
        features = dataio.read_features(args.features)
        labels = dataio.read_labels(config.labels)
    else:
        _check_inputs(config)
        recordings = dataio.load_recordings(config.data_dir)
        labels = dataio.read_labels(config.labels)
        features = _extract(config, recordings, config.signals)
    combo = combo_token(config.signals)
    metadata = {
        "signals": combo,
        "backend": kernels.BACKEND,
        "n_features": features.n_features,
        "n_samples": features.n_rows,
    }
    report = _evaluate_cell(config, features, labels, config.classifier, None, metadata)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"report_{config.task.value}_{combo}_{config.classifier}.json"
    _write_json(_report_payload(config, report), path)
    label = "+".join(s.upper() for s in config.signals) + "+" + config.classifier.upper()
    print(f"{label}  {report.summary_row()}")
    print(f"report written to {path}")
    return 0


def cmd_ablate(args) -> int:
    config = resolve_config(args)
    _check_inputs(config)
    recordings = dataio.load_recordings(config.data_dir)
    labels = dataio.read_labels(config.labels)
    # one extraction over the union of signals; each combo is a column subset
    union = ("eeg", "eog", "emg")
    union_features = _extract(config, recordings, union)
    groups = {g.kind: g for g in _groups_for(recordings, union)}

    dataset = evaluation.dataset_from_features(
        union_features, labels, config.task, config.threshold
    )
    if config.split == "subject":
        folds = evaluation.subject_kfold(dataset.subjects, config.cv_folds, config.seed)
    else:
        folds = evaluation.stratified_kfold(dataset.y, config.cv_folds, config.seed)
    shared_hash = evaluation.fold_hash(folds)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cells = [(combo, clf) for combo in COMBOS for clf in CLASSIFIERS]

    def run_cell(cell):
        combo, clf = cell
        channels = [
            i for token in combo for i in groups[SignalKind(token)].channel_indices
        ]
        features = union_features.select_channels(channels)
        metadata = {
            "signals": combo_token(combo),
            "backend": kernels.BACKEND,
            "n_features": features.n_features,
            "n_samples": features.n_rows,
        }
        report = _evaluate_cell(config, features, labels, clf, folds, metadata)
        path = out / f"report_{config.task.value}_{combo_token(combo)}_{clf}.json"
        _write_json(_report_payload(config, report), path)
        return report

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(run_cell, cells))
    else:
        reports = [run_cell(c) for c in cells]

    combined = {
        "config": config.to_flat(),
        "config_hash": config.config_hash(),
        "fold_hash": shared_hash,
        "cells": [
            {
                "signals": combo_token(combo),
                "classifier": clf,
                "report": report.to_dict(),
            }
            for (combo, clf), report in zip(cells, reports)
        ],
    }
    combined_path = out / f"ablation_{config.task.value}.json"
    _write_json(combined, combined_path)

    width = max(len("+".join(c).upper()) + 1 + len(k.upper()) for c, k in cells)
    for (combo, clf), report in zip(cells, reports):
        label = "+".join(s.upper() for s in combo) + "+" + clf.upper()
        print(f"{label:<{width}}  {report.summary_row()}")
    print(f"combined report written to {combined_path}")
    return 0


def cmd_convert_check(args) -> int:
    paths = []
    for target in args.paths:
        p = Path(target)
        if p.is_dir():
            paths.extend(dataio.recording_paths(p))
        else:
            paths.append(p)
    if not paths:
        raise DataError("no PSR1 files to check")
    failures = 0
    for path in paths:
        try:
            rec = dataio.read_recording(path)
        except EmopipeError as exc:
            failures += 1
            print(f"FAIL {path}: {exc}")
        else:
            print(
                f"OK   {path}: subject {rec.subject_id} trial {rec.trial_id} "
                f"{rec.n_channels}ch x {rec.n_samples} @ {rec.sampling_rate:g}Hz"
            )
    if args.labels:
        try:
            labels = dataio.read_labels(args.labels)
            print(f"OK   {args.labels}: {len(labels)} label rows")
        except EmopipeError as exc:
            failures += 1
            print(f"FAIL {args.labels}: {exc}")
    print(f"{len(paths)} files checked, {failures} failures")
    if failures:
        raise DataError(f"{failures} file(s) failed validation")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser, require_seed: bool) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--data-dir", dest="data_dir", help="directory of .psr1 recordings")
    parser.add_argument("--labels", help="labels CSV path")
    parser.add_argument("--task", choices=[t.value for t in Task])
    parser.add_argument("--signals", help="comma list from eeg,eog,emg (eeg required)")
    parser.add_argument("--classifier", choices=CLASSIFIERS)
    parser.add_argument("--bands", help="name:low-high comma list")
    parser.add_argument("--window-seconds", dest="window_seconds", type=float)
    parser.add_argument("--filter-order", dest="filter_order", type=int)
    parser.add_argument("--cv-folds", dest="cv_folds", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--seed", type=int, required=require_seed)
    parser.add_argument("--complexity", choices=hjorth.COMPLEXITY_FORMS)
    parser.add_argument("--split", choices=["trial", "subject"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emopipe",
        description="Band-pass + Hjorth + bagging-ensemble emotion classification pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic PSR1 corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=16)
    p.add_argument("--trials", type=int, default=8, help="trials per subject")
    p.add_argument("--seconds", type=float, default=60.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--low-amp", dest="low_amp", type=float, default=0.15)
    p.add_argument("--high-amp", dest="high_amp", type=float, default=0.33)
    p.add_argument("--background-amp", dest="background_amp", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract a feature CSV for one signal combination")
    _add_config_flags(p, require_seed=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="run one (task, signals, classifier) cell")
    _add_config_flags(p, require_seed=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features", help="pre-extracted feature CSV (skips extraction)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the 4 signal combos x 4 classifiers grid")
    _add_config_flags(p, require_seed=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("convert-check", help="validate PSR1 files (and optionally a labels CSV)")
    p.add_argument("paths", nargs="+", help="PSR1 files or directories")
    p.add_argument("--labels", help="labels CSV to validate as well")
    p.set_defaults(func=cmd_convert_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmopipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
