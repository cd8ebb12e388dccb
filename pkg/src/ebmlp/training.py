"""Shared training-loop plumbing: options, batching, per-step traces."""

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrainOptions:
    """Knobs shared by both trainers. ``reads`` overrides the sampler's
    configured read count when set; ``use_sampled_hidden`` switches the
    negative phase to the sampled-k estimator (see ebm.negative_phase)."""

    steps: int = 20
    batch_size: int = 5
    lr: float = 0.1
    seed: int = 0
    reads: int = None
    use_sampled_hidden: bool = False

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1 or self.lr < 0:
            raise ValueError("steps must be >= 0, batch_size >= 1, lr >= 0")


def as_batch_arrays(batch):
    """Normalize a batch to (X, Y) float64 arrays of shape (B, N), (B, M).

    Accepts an (X, Y) array pair or a sequence of (x, y) example pairs;
    scalar or 1-d labels become single-output columns.
    """
    if isinstance(batch, tuple) and len(batch) == 2 and not isinstance(batch[0], tuple):
        x, y = batch
    else:
        pairs = list(batch)
        if not pairs:
            raise ValueError("empty batch")
        x = [p[0] for p in pairs]
        y = [p[1] for p in pairs]
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 0:
        y = y.reshape(1, 1)
    elif y.ndim == 1:
        y = y.reshape(x.shape[0], -1) if x.shape[0] == y.shape[0] else y.reshape(1, -1)
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError(f"batch arrays disagree: inputs {x.shape}, labels {y.shape}")
    return x, y


def batch_indices(n_examples, batch_size, rng):
    """Endless batch iterator: reshuffle each epoch, yield index arrays."""
    while True:
        order = rng.permutation(n_examples)
        for start in range(0, n_examples, batch_size):
            yield order[start : start + batch_size]


@dataclass
class TrainingTrace:
    """Per-step metrics. Row 0 is the pre-training state; row t is after
    update t. Train metrics are evaluated on the full training set, test
    accuracy on the held-out set (None when no test set was given)."""

    steps: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    ebm_loglik: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)
    kl_nats: list = field(default_factory=list)
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def append(self, step, train_loss, ebm_loglik, test_accuracy, kl=None):
        self.steps.append(int(step))
        self.train_loss.append(None if train_loss is None else float(train_loss))
        self.ebm_loglik.append(None if ebm_loglik is None else float(ebm_loglik))
        self.test_accuracy.append(None if test_accuracy is None else float(test_accuracy))
        self.kl_nats.append(None if kl is None else float(kl))

    def to_csv(self, path, header_comment=None):
        """Write the trace with the documented column order. Missing values
        are empty cells; floats use repr so reruns are byte-identical. An
        optional `# ...` first line records run identifiers."""
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["step", "train_loss", "ebm_loglik_estimate", "test_accuracy", "kl_nats"])
            for i, step in enumerate(self.steps):
                writer.writerow(
                    [
                        step,
                        _cell(self.train_loss[i]),
                        _cell(self.ebm_loglik[i]),
                        _cell(self.test_accuracy[i]),
                        _cell(self.kl_nats[i]),
                    ]
                )


def _cell(value):
    return "" if value is None else repr(float(value))


def read_trace_csv(path):
    """Inverse of TrainingTrace.to_csv, for the summarize command."""
    trace = TrainingTrace()
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            trace.append(
                int(row["step"]),
                _parse(row["train_loss"]),
                _parse(row["ebm_loglik_estimate"]),
                _parse(row["test_accuracy"]),
                _parse(row.get("kl_nats", "")),
            )
    return trace


def _parse(cell):
    return None if cell in (None, "") else float(cell)
