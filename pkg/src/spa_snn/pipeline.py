"""Training, neuron labelling, classification and diagnostics emission.

Training is a single sequential pass (or several) over the sample stream:
normalize incoming weights, present the sample, log one metrics row.  The
metrics CSV holds only deterministic columns; per-sample wall times go to a
sidecar file so reruns with the same seed produce byte-identical metrics.

Decoding follows the two-layer convention: after training, every excitatory
neuron is assigned the class it spiked most for over a labelled stream
(learning frozen), and a sample is classified as the class whose assigned
neurons spiked most on average.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dataio import Checkpoint, Dataset, save_checkpoint
from .forecast import (
    ForecastWindow,
    NotOuLikeError,
    check_bound,
    forecast_mse,
    realized_forecast_mse,
)
from .network import RATE_BOOST, Network, encode_poisson, run_sample

TRACE_OBSERVABLES = ("membrane_potential", "conductance", "spike_rate")


def present(net: Network, image) -> "SampleResult":
    """Encode one image with the network's generator and present it, with
    rate-boosted re-encoding on undershoot."""
    c = net.config

    def encode(attempt: int):
        rate = c.max_rate_hz * (1.0 + RATE_BOOST) ** attempt
        return encode_poisson(image, c.sample_ms, c.dt_ms, rate, net.rng)

    return run_sample(net, encode(0), reencode=encode)


def assignments_from_tallies(tallies: np.ndarray) -> np.ndarray:
    """Argmax class per neuron (ties to the lowest class index); neurons
    that never spiked get -1."""
    assignments = np.argmax(tallies, axis=1).astype(np.int64)
    assignments[tallies.sum(axis=1) == 0] = -1
    return assignments


def assign_labels(net: Network, dataset: Dataset, indices) -> np.ndarray:
    """Accumulate spike counts per class over a labelled stream (learning
    must already be frozen) and assign each neuron its argmax class."""
    tallies = np.zeros((net.n, dataset.n_classes))
    for i in indices:
        res = present(net, dataset.images[i])
        tallies[:, dataset.labels[i]] += res.counts
    return assignments_from_tallies(tallies)


def predict_class(counts: np.ndarray, assignments: np.ndarray, n_classes: int) -> tuple:
    """Predicted class for one response vector: argmax of the mean spike
    count over the neurons assigned to each class.

    When every assigned neuron stayed silent the prediction falls back to
    the class with the most assigned neurons (flagged), ties to the lowest
    index; with no assignments at all the fallback is class 0.
    """
    scores = np.full(n_classes, -np.inf)
    members = np.zeros(n_classes, dtype=np.int64)
    for cls in range(n_classes):
        mask = assignments == cls
        members[cls] = int(mask.sum())
        if members[cls]:
            scores[cls] = counts[mask].mean()
    if not members.any():
        return 0, True
    if np.nanmax(scores) <= 0.0:
        return int(np.argmax(members)), True
    return int(np.argmax(scores)), False


def classify(net: Network, assignments: np.ndarray, image, n_classes: int) -> int:
    """Present a sample and decode it with the given neuron assignments."""
    res = present(net, image)
    predicted, _ = predict_class(res.counts, assignments, n_classes)
    return predicted


@dataclass
class MetricsRow:
    sample_index: int
    cumulative_accuracy: float
    spikes: int
    wall_ms: float
    ckpt_marker: int = 0


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    rows: list
    traces: dict  # observable -> list of per-sample values
    online_accuracy: float


def train(config: RunConfig, dataset: Dataset, log_every: int = 0) -> TrainResult:
    """Run the unsupervised training loop and return the final checkpoint
    plus per-sample metrics.

    The online accuracy column scores each sample against the neuron->class
    tallies accumulated so far (before the sample's own label is added), so
    it starts near chance and converges as neurons specialize.
    """
    config.validate()
    net = Network(config)
    net.learning_enabled = True
    n_stream = min(config.samples, len(dataset)) if config.samples > 0 else len(dataset)
    n_total = config.samples * config.passes
    tallies = np.zeros((net.n, dataset.n_classes))
    rows: list = []
    traces = {name: [] for name in TRACE_OBSERVABLES} if config.record_traces else {}
    correct = 0
    for s in range(n_total):
        i = s % n_stream
        image = dataset.images[i]
        label = int(dataset.labels[i])

        t0 = time.perf_counter()
        res = present(net, image)
        wall_ms = (time.perf_counter() - t0) * 1000.0

        predicted, _ = predict_class(res.counts, assignments_from_tallies(tallies),
                                     dataset.n_classes)
        correct += int(predicted == label)
        tallies[:, label] += res.counts

        marker = 0
        if config.ckpt_every and (s + 1) % config.ckpt_every == 0:
            save_checkpoint(snapshot(net, samples_seen=s + 1), config.checkpoint)
            marker = 1
        rows.append(MetricsRow(
            sample_index=s,
            cumulative_accuracy=correct / (s + 1),
            spikes=int(res.counts.sum()),
            wall_ms=wall_ms,
            ckpt_marker=marker,
        ))
        if config.record_traces:
            traces["membrane_potential"].append(res.mean_membrane)
            traces["conductance"].append(res.mean_conductance)
            traces["spike_rate"].append(float(res.counts.sum()))
        if log_every and (s + 1) % log_every == 0:
            print(f"sample {s + 1}/{n_total}  online acc {correct / (s + 1):.4f}  "
                  f"spikes {int(res.counts.sum())}")
    ckpt = snapshot(net, samples_seen=n_total)
    return TrainResult(checkpoint=ckpt, rows=rows, traces=traces,
                       online_accuracy=correct / max(n_total, 1))


def snapshot(net: Network, samples_seen: int, assignments: np.ndarray | None = None) -> Checkpoint:
    if assignments is None:
        assignments = np.full(net.n, -1, dtype=np.int64)
    return Checkpoint(
        config=net.config.to_dict(),
        weights=net.W.copy(),
        theta=net.theta.copy(),
        assignments=assignments,
        rng_state=net.rng.bit_generator.state,
        samples_seen=samples_seen,
    )


def restore(ckpt: Checkpoint) -> Network:
    """Rebuild a network from a checkpoint, learning frozen."""
    config = RunConfig.from_dict(ckpt.config)
    net = Network(config)
    net.W[:] = ckpt.weights
    net.theta[:] = ckpt.theta
    net.rng.bit_generator.state = ckpt.rng_state
    net.learning_enabled = False
    return net


@dataclass
class EvalReport:
    accuracy: float
    n_correct: int
    n_samples: int
    confusion: np.ndarray  # confusion[true, predicted]
    assignments: np.ndarray
    fallbacks: int = 0
    lines: list = field(default_factory=list)

    def text(self) -> str:
        out = [
            f"samples        {self.n_samples}",
            f"correct        {self.n_correct}",
            f"accuracy       {self.accuracy:.4f}",
            f"fallback preds {self.fallbacks}",
            f"assigned       {(self.assignments >= 0).sum()}/{len(self.assignments)} neurons",
        ]
        out.extend(self.lines)
        return "\n".join(out)


def evaluate(ckpt: Checkpoint, label_ds: Dataset, test_ds: Dataset,
             label_samples: int = 10000, eval_samples: int = 0,
             log_every: int = 0) -> EvalReport:
    """Assign neuron labels on the tail of the labelled stream, then classify
    the test split.  The checkpoint itself is never modified."""
    net = restore(ckpt)
    n_label = min(label_samples, len(label_ds))
    label_indices = range(len(label_ds) - n_label, len(label_ds))
    assignments = assign_labels(net, label_ds, label_indices)

    n_eval = len(test_ds) if eval_samples == 0 else min(eval_samples, len(test_ds))
    confusion = np.zeros((test_ds.n_classes, test_ds.n_classes), dtype=np.int64)
    correct = 0
    fallbacks = 0
    for i in range(n_eval):
        res = present(net, test_ds.images[i])
        predicted, fell_back = predict_class(res.counts, assignments, test_ds.n_classes)
        fallbacks += int(fell_back)
        truth = int(test_ds.labels[i])
        confusion[truth, predicted] += 1
        correct += int(predicted == truth)
        if log_every and (i + 1) % log_every == 0:
            print(f"eval {i + 1}/{n_eval}  acc {correct / (i + 1):.4f}")
    return EvalReport(
        accuracy=correct / max(n_eval, 1),
        n_correct=correct,
        n_samples=n_eval,
        confusion=confusion,
        assignments=assignments,
        fallbacks=fallbacks,
    )


# ---------------------------------------------------------------------------
# CSV emission


def write_metrics(rows, path) -> None:
    """Deterministic metrics columns only; wall times go to a sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample_index", "cumulative_accuracy", "spikes", "ckpt_marker"])
        for r in rows:
            w.writerow([r.sample_index, f"{r.cumulative_accuracy:.6f}", r.spikes, r.ckpt_marker])


def timings_path(metrics_path) -> Path:
    p = Path(metrics_path)
    return p.with_name(p.stem + "_timings" + p.suffix)


def write_timings(rows, metrics_path) -> None:
    with open(timings_path(metrics_path), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample_index", "wall_ms"])
        for r in rows:
            w.writerow([r.sample_index, f"{r.wall_ms:.3f}"])


def write_traces(traces: dict, path) -> None:
    names = list(TRACE_OBSERVABLES)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample_index"] + names)
        for i in range(len(traces[names[0]])):
            w.writerow([i] + [f"{traces[name][i]:.9g}" for name in names])


def read_traces(path) -> dict:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        names = [c for c in reader.fieldnames if c != "sample_index"]
        out = {name: [] for name in names}
        for row in reader:
            for name in names:
                out[name].append(float(row[name]))
    return {name: np.asarray(vals) for name, vals in out.items()}


def forecast_report(traces: dict, interval_ms: float, horizons=(1, 5, 20)) -> list:
    """Fit each recorded observable on the first half of its window, then
    compare realized one-shot forecast errors on the second half against the
    model MSE at each horizon.  Unfittable observables yield a record with
    an empty horizon list rather than failing the run."""
    records = []
    for name, series in traces.items():
        split = len(series) // 2
        if split < 10:
            records.append({"observable": name, "error": "window too short"})
            continue
        try:
            win = ForecastWindow.from_series(name, series[:split], interval_ms)
        except (NotOuLikeError, ValueError) as exc:
            records.append({"observable": name, "error": str(exc)})
            continue
        for h in horizons:
            if len(series) - split <= h:
                continue
            e_model = forecast_mse(win, h * interval_ms)
            e_real = realized_forecast_mse(win, series[split:], horizon_steps=h)
            chk = check_bound(e_real, e_model, observable=name, horizon=h * interval_ms)
            records.append({
                "observable": name,
                "sample_index": split - 1,
                "horizon_ms": h * interval_ms,
                "e": e_real,
                "e_bar": e_model,
                "pass": chk.passed,
            })
    return records


def write_forecast_records(records, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample_index", "observable", "horizon_ms", "e", "e_bar", "pass"])
        for r in records:
            if "error" in r:
                w.writerow(["", r["observable"], "", "", "", f"error: {r['error']}"])
            else:
                w.writerow([r["sample_index"], r["observable"], f"{r['horizon_ms']:.6g}",
                            f"{r['e']:.9g}", f"{r['e_bar']:.9g}",
                            "pass" if r["pass"] else "fail"])
