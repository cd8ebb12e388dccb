"""Experiment tracks, trial aggregation, and the runtime benchmark.

Three training tracks share one protocol and differ only in how gradients
are produced: "classical1" is the backprop MLP, "classical2" the EBM with
Gibbs sampling, "quantum-sim" the EBM with the simulated annealer standing
in for quantum hardware. Trials are independent runs with derived seeds;
their traces and the aggregate summary land in the output directory as
plain CSV/JSON.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._accel import available_backends
from ._kernels import gibbs_block
from .bqm import bqm_to_ising, bqm_to_text, build_conditional_bqm, clamp_to_hardware, ising_to_text
from .core import derive_seed, rng_from_seed
from .data import load_standard_split, make_binary_task
from .ebm import train_ebm
from .equivalence import run_equivalence_experiment
from .mlp import train_mlp
from .models import EbmModel, MlpModel
from .samplers import GibbsSampler, SamplerConfig, SimAnnealSampler
from .training import TrainOptions

TRACKS = ("classical1", "classical2", "quantum-sim")
ALL_TRACKS = TRACKS + ("equivalence", "bench")

SUMMARY_SCHEMA_VERSION = 1

# Success rule constants: a trial counts as successful when the mean test
# accuracy over the last SUCCESS_WINDOW recorded steps reaches
# SUCCESS_FLOOR and beats the pre-training accuracy by SUCCESS_GAIN.
SUCCESS_WINDOW = 5
SUCCESS_FLOOR = 0.65
SUCCESS_GAIN = 0.10

ACCURACY_TARGET = 0.70


@dataclass
class RunConfig:
    """Everything a track run needs; the CLI fills this from the config
    file plus flag overrides, library callers construct it directly."""

    track: str = "classical1"
    data_dir: str = "data"
    class_a: int = 0
    class_b: int = 1
    train_count: int = 20
    n_hidden: int = 32
    batch_size: int = 5
    lr: float = 0.1
    steps: int = 20
    trials: int = 5
    seed: int = 0
    output_dir: str = "runs"
    beta_eff: float = 16.0
    reads: int = 1000
    burn_in: int = 100
    thin: int = 1
    anneal_sweeps: int = 1000
    anneal_beta_start: float = 0.1
    anneal_schedule: str = "geometric"
    beta_sim: float = None
    backend: str = None
    use_sampled_hidden: bool = False
    init_std: float = 0.01
    sizes: tuple = (10, 100, 1000, 10000)

    def __post_init__(self):
        if self.track not in ALL_TRACKS:
            raise ValueError(f"unknown track {self.track!r}; choose from {ALL_TRACKS}")
        for name in ("train_count", "n_hidden", "batch_size", "trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.steps < 0 or self.lr <= 0:
            raise ValueError("steps must be >= 0 and lr positive")
        self.sizes = tuple(int(s) for s in self.sizes)
        if any(s < 1 for s in self.sizes):
            raise ValueError("benchmark sizes must be positive")

    def sampler_config(self, seed):
        return SamplerConfig(
            beta_eff=self.beta_eff,
            reads=self.reads,
            burn_in=self.burn_in,
            thin=self.thin,
            anneal_sweeps=self.anneal_sweeps,
            anneal_beta_start=self.anneal_beta_start,
            anneal_schedule=self.anneal_schedule,
            beta_sim=self.beta_sim,
            seed=seed,
            backend=self.backend,
        )

    def train_options(self, seed):
        return TrainOptions(
            steps=self.steps,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=seed,
            reads=self.reads,
            use_sampled_hidden=self.use_sampled_hidden,
        )


@dataclass
class TrialSummary:
    trial: int
    seed: int
    final_accuracy: float = None
    steps_to_target: int = None  # first step index with accuracy > 0.70; None if never
    success: bool = False
    failed: bool = False
    error: str = ""

    def as_dict(self):
        return asdict(self)


def steps_to_target(accuracies, target=ACCURACY_TARGET):
    """First step index whose test accuracy exceeds `target` (step 0 is the
    pre-training evaluation); None when the run never exceeds it."""
    for i, acc in enumerate(accuracies):
        if acc is not None and acc > target:
            return i
    return None


def success_rule(accuracies):
    """Mean accuracy over the final SUCCESS_WINDOW steps must reach
    SUCCESS_FLOOR and beat the step-0 accuracy by SUCCESS_GAIN."""
    if not accuracies or accuracies[0] is None:
        return False
    tail = [a for a in accuracies[-SUCCESS_WINDOW:] if a is not None]
    if not tail:
        return False
    mean_tail = sum(tail) / len(tail)
    return mean_tail >= SUCCESS_FLOOR and (mean_tail - accuracies[0]) >= SUCCESS_GAIN


def load_task(config):
    """Build the binary classification task the config describes."""
    train_images, train_labels, test_images, test_labels = load_standard_split(config.data_dir)
    return make_binary_task(
        train_images,
        train_labels,
        test_images,
        test_labels,
        config.class_a,
        config.class_b,
        config.train_count,
        config.seed,
    )


def initial_models(config, seed, n_features):
    """Shared Gaussian initialization: every track starts from the same
    parameters at the same trial seed, so tracks differ only in training."""
    rng = rng_from_seed([seed, 0x1B17])
    mlp_model = MlpModel.init_gaussian(n_features, config.n_hidden, 1, rng, std=config.init_std)
    ebm_model = EbmModel(mlp_model.w1.copy(), mlp_model.w2.copy(), mlp_model.b.copy(), mlp_model.c.copy())
    return mlp_model, ebm_model


def run_trial(config, trial_index, train_set, test_set):
    """One independent trial; returns (trace, TrialSummary)."""
    seed = config.seed + trial_index
    options = config.train_options(seed)
    mlp_model, ebm_model = initial_models(config, seed, train_set.n_features)
    sampler_seed = derive_seed(seed, 0x5EED)
    if config.track == "classical1":
        trace = train_mlp(mlp_model, train_set, options, test_set)
    elif config.track == "classical2":
        sampler = GibbsSampler(config.sampler_config(sampler_seed))
        trace = train_ebm(ebm_model, train_set, sampler, options, test_set)
    elif config.track == "quantum-sim":
        sampler = SimAnnealSampler(config.sampler_config(sampler_seed))
        trace = train_ebm(ebm_model, train_set, sampler, options, test_set)
    else:
        raise ValueError(f"track {config.track!r} is not a training track")
    accs = trace.test_accuracy
    summary = TrialSummary(
        trial=trial_index,
        seed=seed,
        final_accuracy=accs[-1],
        steps_to_target=steps_to_target(accs),
        success=success_rule(accs),
    )
    return trace, summary


def summarize_trials(summaries):
    """Aggregate row per the tables: mean accuracy over successful trials,
    median steps-to-70% over trials that reached it, success rate in %."""
    if not summaries:
        raise ValueError("at least one trial required")
    ok = [s for s in summaries if s.success and not s.failed]
    reached = [s.steps_to_target for s in summaries if not s.failed and s.steps_to_target is not None]
    return {
        "n_trials": len(summaries),
        "n_failed": sum(1 for s in summaries if s.failed),
        "mean_successful_accuracy": (sum(s.final_accuracy for s in ok) / len(ok)) if ok else None,
        "median_steps_to_70": float(np.median(reached)) if reached else None,
        "success_rate_percent": 100.0 * len(ok) / len(summaries),
    }


def run_track(config, train_set=None, test_set=None, progress=None):
    """Run all trials of a training track and write outputs.

    A trial that raises is marked failed and the run continues. Writes
    trace_<trial>.csv per trial plus summary.json into the output
    directory; returns (traces, summaries, aggregate).
    """
    if config.track not in TRACKS:
        raise ValueError(f"run_track handles {TRACKS}, not {config.track!r}")
    if train_set is None or test_set is None:
        train_set, test_set = load_task(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    traces, summaries = [], []
    for trial in range(config.trials):
        try:
            trace, summary = run_trial(config, trial, train_set, test_set)
        except Exception as exc:  # noqa: BLE001 - trial isolation is the contract
            trace = None
            summary = TrialSummary(trial=trial, seed=config.seed + trial, failed=True, error=f"{type(exc).__name__}: {exc}")
        else:
            trace.to_csv(out / f"trace_{trial}.csv", header_comment=f"track={config.track} trial={trial} seed={summary.seed}")
        traces.append(trace)
        summaries.append(summary)
        if progress is not None:
            progress(trial, summary)
    aggregate = summarize_trials(summaries)
    payload = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "track": config.track,
        "config": _config_dict(config),
        "trials": [s.as_dict() for s in summaries],
        "aggregate": aggregate,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return traces, summaries, aggregate


def _config_dict(config):
    d = asdict(config)
    d["sizes"] = list(d["sizes"])
    return d


def run_equivalence(config, train_set=None, test_set=None):
    """Equivalence track: lockstep training plus report files in the
    output directory (equivalence.csv / equivalence.json)."""
    if train_set is None or test_set is None:
        train_set, test_set = load_task(config)
    sampler = GibbsSampler(config.sampler_config(derive_seed(config.seed, 0x5EED)))
    report = run_equivalence_experiment(
        train_set,
        test_set,
        n_hidden=config.n_hidden,
        options=config.train_options(config.seed),
        sampler=sampler,
        init_std=config.init_std,
    )
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "equivalence.csv")
    report.to_json(out / "equivalence.json")
    return report


def write_bqm_dump(model, x, beta_eff, path):
    """Dump the annealer-programming pipeline for one clamped input: BQM
    coefficients, exact Ising conversion, and the hardware-clamped Ising
    with its clip report."""
    bqm = build_conditional_bqm(model, x, beta_eff)
    ising = bqm_to_ising(bqm)
    clamped, report = clamp_to_hardware(ising)
    lines = [
        f"# conditional BQM at beta_eff={beta_eff!r} over {bqm.n} variables (k first, y last)",
        bqm_to_text(bqm).rstrip("\n"),
        "# exact Ising conversion",
        ising_to_text(ising).rstrip("\n"),
        f"# after hardware clamp: {len(report)} coefficients clipped, max shift {report.max_shift!r}",
        ising_to_text(clamped).rstrip("\n"),
        "",
    ]
    Path(path).write_text("\n".join(lines))


def _median_time(stmt, repeats, target=0.005, max_reps=100000):
    """Median per-call seconds over `repeats` calibrated measurements."""
    stmt()  # warm-up: first call may compile
    t0 = time.perf_counter()
    stmt()
    once = time.perf_counter() - t0
    reps = max(1, min(max_reps, math.ceil(target / max(once, 1e-9))))
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(reps):
            stmt()
        samples.append((time.perf_counter() - t0) / reps)
    return float(np.median(samples)), reps


def bench_runtime(sizes=(10, 100, 1000, 10000), repeats=21, seed=0, backends=None, batch=1024, reads=1, burn_in=0):
    """Wall-clock scaling of the two per-example classical operations.

    One hidden and one output unit, visible width swept. "mlp_matmul"
    times the forward pass's matrix work for a batch of inputs;
    "gibbs_conditional" times conditioning the sampler on a batch of
    inputs (the visible-width-dependent clamp W1 x + b) plus the Gibbs
    reads drawn from it. Sweeps cost the same at every width, so the
    defaults keep the sweep budget minimal; raising reads/burn_in only
    shifts the whole series up. Returns rows of dicts; medians are
    wall-clock and vary between machines and runs, so only their
    ordering is meaningful.
    """
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise ValueError("benchmark sizes must be positive")
    if backends is None:
        backends = available_backends()
    rng = rng_from_seed([seed, 0xBE7C])
    rows = []
    for n in sizes:
        w1 = rng.normal(scale=0.01, size=(1, n))
        w2 = rng.normal(scale=0.01, size=(1, 1))
        b = np.zeros(1)
        c = np.zeros(1)
        inputs = rng.random((batch, n))

        def mlp_stmt():
            return (inputs @ w1.T) @ w2.T

        median, reps = _median_time(mlp_stmt, repeats, target=0.02)
        rows.append({"component": "mlp_matmul", "backend": "numpy", "size": n, "median_seconds": median, "reps": reps})
        for backend in backends:

            def gibbs_stmt():
                a_rows = inputs @ w1.T + b
                return gibbs_block(a_rows, w2, c, reads, burn_in, 1, seed, backend=backend)

            median, reps = _median_time(gibbs_stmt, repeats, target=0.02)
            rows.append({"component": "gibbs_conditional", "backend": backend, "size": n, "median_seconds": median, "reps": reps})
    return rows


BENCH_COLUMNS = ("component", "backend", "size", "median_seconds", "reps")


def write_bench_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in BENCH_COLUMNS) + "\n")


def monotone_components(rows):
    """Map (component, backend) -> bool: medians nondecreasing in size."""
    series = {}
    for row in rows:
        series.setdefault((row["component"], row["backend"]), []).append((row["size"], row["median_seconds"]))
    result = {}
    for key, points in series.items():
        points.sort()
        medians = [m for _, m in points]
        result[key] = all(a <= b for a, b in zip(medians, medians[1:]))
    return result
