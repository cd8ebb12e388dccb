"""Feedforward view of the shared parameter container: sigmoid MLP forward
pass, cross-entropy loss, analytic backpropagation, and ADAM training.

Gradients returned here are descent directions on the loss; the energy-based
trainer in :mod:`ebmlp.ebm` returns ascent directions on the log-likelihood
and negates before the optimizer, so both modules feed ADAM the same way.
"""

import numpy as np

from .core import adam_update, AdamState, rng_from_seed, sigmoid
from .models import EbmModel, GradientSet
from .training import as_batch_arrays, batch_indices, TrainingTrace, TrainOptions

# Sigmoid outputs within float rounding of 0 or 1 would make the loss
# infinite; the clamp bounds the loss without touching the gradient path.
LOSS_CLAMP = 1e-12


def forward(model, x, return_hidden=False):
    """z = sigmoid(W2 sigmoid(W1 x + b) + c).

    Accepts a single input vector or a batch with one row per example and
    returns the matching shape. Entries are strictly inside (0, 1).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2d = np.atleast_2d(x)
    if x2d.shape[1] != model.n_visible:
        raise ValueError(f"input has {x2d.shape[1]} features, model expects {model.n_visible}")
    h = sigmoid(x2d @ model.w1.T + model.b)
    z = sigmoid(h @ model.w2.T + model.c)
    if single:
        h, z = h[0], z[0]
    return (z, h) if return_hidden else z


def cross_entropy(y, z):
    """Sigmoid cross-entropy -sum_j [y_j log z_j + (1-y_j) log(1-z_j)].

    Row-wise sum over outputs; a batch input returns the batch mean.
    z is clamped to [1e-12, 1 - 1e-12] before the logs.
    """
    y = np.asarray(y, dtype=np.float64)
    z = np.clip(np.asarray(z, dtype=np.float64), LOSS_CLAMP, 1.0 - LOSS_CLAMP)
    if y.shape != z.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs z {z.shape}")
    per_example = -(y * np.log(z) + (1.0 - y) * np.log1p(-z)).sum(axis=-1)
    return float(np.mean(per_example))


def mean_cross_entropy(model, inputs, labels):
    """Batch-mean cross-entropy of the forward pass against labels."""
    labels = np.asarray(labels, dtype=np.float64).reshape(np.atleast_2d(inputs).shape[0], -1)
    return cross_entropy(labels, np.atleast_2d(forward(model, inputs)))


def grad_backprop(model, batch):
    """Descent gradient of the batch-mean cross-entropy.

    With h = sigmoid(W1 x + b) and d = z - y: the W2 block averages
    outer(d, h), the c block averages d, and the W1/b blocks propagate
    d through W2 and the hidden sigmoid derivative h(1-h).
    """
    x, y = as_batch_arrays(batch)
    n = x.shape[0]
    z, h = forward(model, x, return_hidden=True)
    d = z - y
    dh = (d @ model.w2) * h * (1.0 - h)
    return GradientSet(dh.T @ x / n, d.T @ h / n, dh.mean(axis=0), d.mean(axis=0))


def predict(model, x):
    """Thresholds each output at 0.5; exactly 0.5 resolves to 0."""
    return (np.atleast_2d(forward(model, x)) > 0.5).astype(np.uint8)


def accuracy(model, dataset):
    """Exact-match fraction of predict() against dataset labels."""
    labels = np.asarray(dataset.labels, dtype=np.uint8).reshape(len(dataset), -1)
    return float(np.mean(np.all(predict(model, dataset.inputs) == labels, axis=1)))


def train_mlp(model, train_set, options=None, test_set=None):
    """ADAM descent on the backpropagation gradient.

    The model is updated in place. Trace layout matches train_ebm (row 0 is
    the pre-training state) and the batch sequence drawn for a given seed is
    identical to train_ebm's, so runs of the two trainers are comparable.
    """
    from . import ebm as ebm_view

    options = options or TrainOptions()
    opt = AdamState.for_params(model.params(), lr=options.lr)
    batch_rng = rng_from_seed([options.seed, 0x6A7C4])
    stream = batch_indices(len(train_set), options.batch_size, batch_rng)
    labels = np.asarray(train_set.labels, dtype=np.float64).reshape(len(train_set), -1)

    trace = TrainingTrace(seed=options.seed, metadata={"trainer": "mlp", "lr": options.lr})

    def record(step):
        view = EbmModel(model.w1, model.w2, model.b, model.c)
        loss = mean_cross_entropy(model, train_set.inputs, labels)
        loglik = ebm_view.mean_log_likelihood(view, train_set)
        acc = None if test_set is None else accuracy(model, test_set)
        trace.append(step, loss, loglik, acc)

    record(0)
    for step in range(1, options.steps + 1):
        idx = next(stream)
        grad = grad_backprop(model, (train_set.inputs[idx], labels[idx]))
        model.set_params(adam_update(opt, model.params(), grad.as_param_dict()))
        record(step)
    return trace
