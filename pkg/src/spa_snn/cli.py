"""Command-line harness: train | eval | forecast | inspect.

Every run is configured by an optional JSON config file plus flag overrides;
unknown config keys are rejected up front.  Exit status is 0 on success and
nonzero with a categorized line on stderr otherwise.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .dataio import (
    CheckpointError,
    DatasetError,
    IdxFormatError,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
)
from . import pipeline


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--dataset", choices=["mnist", "emnist-letters"])
    p.add_argument("--dataset-dir", dest="dataset_dir")
    p.add_argument("--neurons", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--passes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--spa", choices=["on", "off"])
    p.add_argument("--checkpoint")
    p.add_argument("--ckpt-every", dest="ckpt_every", type=int)
    p.add_argument("--metrics-out", dest="metrics_out")
    p.add_argument("--record-traces", dest="record_traces", action="store_true", default=None)
    p.add_argument("--label-samples", dest="label_samples", type=int)
    p.add_argument("--eval-samples", dest="eval_samples", type=int)
    p.add_argument("--log-every", dest="log_every", type=int, default=0,
                   help="print a progress line every N samples")


_OVERRIDE_KEYS = [
    "dataset", "dataset_dir", "neurons", "samples", "passes", "seed",
    "checkpoint", "ckpt_every", "metrics_out", "record_traces",
    "label_samples", "eval_samples",
]


def _build_config(args) -> RunConfig:
    try:
        values = RunConfig.from_file(args.config).to_dict() if args.config else {}
        for key in _OVERRIDE_KEYS:
            val = getattr(args, key, None)
            if val is not None:
                values[key] = val
        if args.spa is not None:
            values["spa_enabled"] = args.spa == "on"
        return RunConfig.from_dict(values)
    except ConfigError:
        raise
    except OSError as exc:
        raise ConfigError(str(exc)) from exc


def _load_split(cfg: RunConfig, split: str):
    if not cfg.dataset_dir:
        raise CliError("data", "no --dataset-dir given and config sets none", 3)
    return load_dataset(cfg.dataset, split, cfg.dataset_dir)


def cmd_train(args) -> int:
    cfg = _build_config(args)
    train_ds = _load_split(cfg, "train")
    result = pipeline.train(cfg, train_ds, log_every=args.log_every)
    save_checkpoint(result.checkpoint, cfg.checkpoint)
    pipeline.write_metrics(result.rows, cfg.metrics_out)
    pipeline.write_timings(result.rows, cfg.metrics_out)
    if cfg.record_traces:
        pipeline.write_traces(result.traces, _traces_path(cfg))
    print(f"trained {len(result.rows)} samples  "
          f"online accuracy {result.online_accuracy:.4f}")
    print(f"checkpoint -> {cfg.checkpoint}")
    print(f"metrics    -> {cfg.metrics_out}")
    return 0


def _traces_path(cfg: RunConfig) -> str:
    p = Path(cfg.metrics_out)
    return str(p.with_name(p.stem + "_traces" + p.suffix))


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint or "checkpoint.spk")
    cfg = RunConfig.from_dict(ckpt.config)
    # orchestration-only overrides; simulation params stay as trained
    for key in ("dataset_dir", "label_samples", "eval_samples"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.neurons is not None and args.neurons != cfg.neurons:
        raise CheckpointError(
            f"checkpoint/config mismatch: trained with {cfg.neurons} neurons, "
            f"--neurons says {args.neurons}"
        )
    if args.dataset is not None and args.dataset != cfg.dataset:
        raise CheckpointError(
            f"checkpoint/config mismatch: trained on {cfg.dataset!r}, "
            f"--dataset says {args.dataset!r}"
        )
    label_ds = _load_split(cfg, "train")
    test_ds = _load_split(cfg, "test")
    report = pipeline.evaluate(
        ckpt, label_ds, test_ds,
        label_samples=cfg.label_samples, eval_samples=cfg.eval_samples,
        log_every=args.log_every,
    )
    print(report.text())
    report_path = args.report_out or "eval_report.txt"
    Path(report_path).write_text(report.text() + "\n")
    confusion_path = args.confusion_out or "eval_confusion.csv"
    with open(confusion_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["true\\predicted"] + list(range(test_ds.n_classes)))
        for t in range(test_ds.n_classes):
            w.writerow([t] + list(report.confusion[t]))
    print(f"report    -> {report_path}")
    print(f"confusion -> {confusion_path}")
    return 0


def cmd_forecast(args) -> int:
    interval_ms = 500.0
    if args.checkpoint and Path(args.checkpoint).exists():
        cfg = RunConfig.from_dict(load_checkpoint(args.checkpoint).config)
        interval_ms = cfg.sample_ms + cfg.rest_ms
    traces_file = args.traces
    if not Path(traces_file).exists():
        raise CliError("data", f"trace file {traces_file} not found "
                               "(train with --record-traces first)", 3)
    traces = pipeline.read_traces(traces_file)
    records = pipeline.forecast_report(traces, interval_ms)
    out = args.out or "forecast_report.csv"
    pipeline.write_forecast_records(records, out)
    for r in records:
        if "error" in r:
            print(f"{r['observable']}: not fitted ({r['error']})")
        else:
            verdict = "pass" if r["pass"] else "fail"
            print(f"{r['observable']}  horizon {r['horizon_ms']:g} ms  "
                  f"e {r['e']:.4g}  e_bar {r['e_bar']:.4g}  {verdict}")
    print(f"records -> {out}")
    return 0


def cmd_inspect(args) -> int:
    ckpt = load_checkpoint(args.checkpoint or "checkpoint.spk")
    cfg = ckpt.config
    w = ckpt.weights
    assigned = int((ckpt.assignments >= 0).sum())
    print(f"checkpoint version {ckpt.version}")
    print(f"samples seen       {ckpt.samples_seen}")
    print(f"neurons            {cfg['neurons']}  dataset {cfg['dataset']}")
    print(f"spa                {'on' if cfg['spa_enabled'] else 'off'}  seed {cfg['seed']}")
    print(f"weights            {w.shape[0]}x{w.shape[1]}  "
          f"mean {w.mean():.4f}  max {w.max():.4f}")
    print(f"theta              mean {ckpt.theta.mean():.4f} mV  max {ckpt.theta.max():.4f} mV")
    print(f"assignments        {assigned}/{len(ckpt.assignments)} neurons labelled")
    if assigned:
        hist = np.bincount(ckpt.assignments[ckpt.assignments >= 0])
        print(f"label histogram    {list(hist)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spa-snn",
        description="Stochastic spiking-network trainer and evaluator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="unsupervised STDP training run")
    _add_common_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="assign neuron labels and score the test split")
    _add_common_flags(p_eval)
    p_eval.add_argument("--report-out", dest="report_out")
    p_eval.add_argument("--confusion-out", dest="confusion_out")
    p_eval.set_defaults(func=cmd_eval)

    p_fc = sub.add_parser("forecast", help="fit recorded observables and check forecast error bounds")
    p_fc.add_argument("--traces", required=True, help="trace CSV from train --record-traces")
    p_fc.add_argument("--checkpoint", help="checkpoint supplying the recording interval")
    p_fc.add_argument("--out", help="output records CSV")
    p_fc.set_defaults(func=cmd_forecast)

    p_ins = sub.add_parser("inspect", help="print a checkpoint summary")
    p_ins.add_argument("--checkpoint", required=True)
    p_ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, IdxFormatError, FileNotFoundError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 3
    except CheckpointError as exc:
        print(f"error: checkpoint: {exc}", file=sys.stderr)
        return 4
    except CliError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
