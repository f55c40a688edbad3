"""Seeded multi-trial benchmark harness.

Within a trial every landmark method sees the same sampled landmark
blocks, so method comparisons isolate the embedding step. Per-trial
randomness is derived from (base_seed, m, trial) alone; running methods
in a different order, or trials in parallel, cannot change any metric.

Wall time is recorded in two columns: the embedding-plus-kmeans step
alone, and the end-to-end time including landmark block construction.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .datagen import DataMatrix, SyntheticSpec, make_dataset, read_csv, read_libsvm
from .embedding import (
    METHODS,
    RankPolicy,
    adaptive_nystrom_sc,
    exact_sc,
    fowlkes_nystrom_sc,
    li_nystrom_sc,
)
from .errors import InvalidArgumentError, NyscError
from .kernel import (
    KernelConfig,
    build_dense_kernel,
    build_nystrom_factors,
    nystrom_reconstruct,
    resolved_dense_cap,
    sample_landmarks_uniform,
)
from .kmeans import KMeansConfig
from .metrics import eigenvector_alignment, f_score, nmi

# stable stream offsets so each consumer of randomness inside a trial has
# its own deterministic seed regardless of execution order
_STREAM_LANDMARKS = 0
_STREAM_KMEANS = {name: i + 1 for i, name in enumerate(METHODS)}


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one benchmark run."""

    dataset: SyntheticSpec | str
    methods: tuple
    m_values: tuple
    k: int
    sigma: float
    gamma: float = 1e-2
    trials: int = 50
    base_seed: int = 0
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    compute_alignment: bool = False
    compute_eta: bool = False
    dense_cap: int | None = None

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InvalidArgumentError(f"unknown methods {unknown}, expected subset of {METHODS}")
        if not self.methods:
            raise InvalidArgumentError("methods must be nonempty")
        if self.trials < 1:
            raise InvalidArgumentError(f"trials must be >= 1, got {self.trials}")
        landmark_methods = [m for m in self.methods if m != "exact"]
        if landmark_methods and not self.m_values:
            raise InvalidArgumentError("m_values must be nonempty for landmark methods")
        if any(int(m) < 1 for m in self.m_values):
            raise InvalidArgumentError(f"m_values must be positive, got {self.m_values}")


@dataclass
class TrialRecord:
    """Outcome of one (method, m, trial) cell."""

    method: str
    m: int | None
    trial: int
    f_score: float | None = None
    nmi: float | None = None
    alignment: float | None = None
    rank: int | None = None
    embed_seconds: float | None = None
    total_seconds: float | None = None
    eta: float | None = None
    failed: bool = False
    error: str | None = None


@dataclass(frozen=True)
class AggregateRow:
    """Mean/stddev summary over the successful trials of one cell."""

    method: str
    m: int | None
    count: int
    failures: int
    f_mean: float | None
    f_std: float | None
    nmi_mean: float | None
    nmi_std: float | None
    alignment_mean: float | None
    alignment_std: float | None
    rank_mean: float | None
    rank_std: float | None
    embed_mean: float | None
    total_mean: float | None


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list
    aggregates: list


def load_dataset(source: SyntheticSpec | str | Path) -> DataMatrix:
    """Resolve an ExperimentSpec dataset: synthetic recipe or file path."""
    if isinstance(source, SyntheticSpec):
        return make_dataset(source)
    path = Path(source)
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return read_libsvm(path)


def derive_seed(base_seed: int, m: int, trial: int, stream: int) -> int:
    """Deterministic child seed for one randomness consumer of one trial."""
    return int(np.random.SeedSequence([base_seed, m, trial, stream]).generate_state(1)[0])


def _orthonormal_columns(embedding) -> np.ndarray:
    """Basis for the embedding span; orthogonalizes non-orthogonal methods."""
    if embedding.orthonormal:
        return embedding.vectors
    q, _ = np.linalg.qr(embedding.vectors)
    return q


def _score_record(record: TrialRecord, labels, k, clusters, embedding, reference):
    if labels is not None:
        record.f_score = f_score(labels, clusters.labels, k)
        record.nmi = nmi(labels, clusters.labels)
    if reference is not None:
        record.alignment = eigenvector_alignment(
            _orthonormal_columns(embedding), reference
        )
    record.rank = embedding.rank


def _run_trial(data: DataMatrix, spec: ExperimentSpec, m: int, trial: int,
               reference, dense=None, baseline=None) -> list:
    """All landmark methods for one (m, trial) cell, sharing the factors."""
    config = KernelConfig(spec.sigma)
    records = []
    seed = derive_seed(spec.base_seed, m, trial, _STREAM_LANDMARKS)
    t0 = time.perf_counter()
    indices = sample_landmarks_uniform(data.n, m, seed)
    factors = build_nystrom_factors(data.samples, indices, config)
    factor_seconds = time.perf_counter() - t0
    for method in spec.methods:
        if method == "exact":
            continue
        record = TrialRecord(method=method, m=m, trial=trial)
        kseed = derive_seed(spec.base_seed, m, trial, _STREAM_KMEANS[method])
        try:
            start = time.perf_counter()
            if method == "proposed":
                clusters, embedding = adaptive_nystrom_sc(
                    factors, spec.k, policy=RankPolicy(gamma=spec.gamma),
                    seed=kseed, kmeans_config=spec.kmeans)
            elif method == "fowlkes":
                clusters, embedding = fowlkes_nystrom_sc(
                    factors, spec.k, seed=kseed, kmeans_config=spec.kmeans)
            else:
                clusters, embedding = li_nystrom_sc(
                    factors, spec.k, seed=kseed, kmeans_config=spec.kmeans)
            record.embed_seconds = time.perf_counter() - start
            record.total_seconds = record.embed_seconds + factor_seconds
            _score_record(record, data.labels, spec.k, clusters, embedding, reference)
            if method == "proposed" and spec.compute_eta and dense is not None:
                approx = nystrom_reconstruct(factors, l=embedding.rank,
                                             dense_cap=data.n)
                record.eta = analysis.perturbation_report(
                    dense.matrix, approx, baseline=baseline).eta
        except NyscError as exc:
            record.failed = True
            record.error = f"{type(exc).__name__}: {exc}"
        records.append(record)
    return records


def _run_exact_trial(data: DataMatrix, spec: ExperimentSpec, trial: int,
                     reference) -> TrialRecord:
    record = TrialRecord(method="exact", m=None, trial=trial)
    kseed = derive_seed(spec.base_seed, 0, trial, _STREAM_KMEANS["exact"])
    try:
        start = time.perf_counter()
        clusters, embedding = exact_sc(data.samples, KernelConfig(spec.sigma),
                                       spec.k, seed=kseed, kmeans_config=spec.kmeans,
                                       dense_cap=spec.dense_cap)
        record.embed_seconds = time.perf_counter() - start
        record.total_seconds = record.embed_seconds
        _score_record(record, data.labels, spec.k, clusters, embedding, reference)
    except NyscError as exc:
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def _reference_embedding(data: DataMatrix, spec: ExperimentSpec):
    """Exact top-k eigenvectors for alignment scoring, when tractable."""
    cap = resolved_dense_cap(spec.dense_cap)
    if data.n > cap:
        return None
    _, embedding = exact_sc(data.samples, KernelConfig(spec.sigma), spec.k,
                            seed=spec.base_seed, dense_cap=spec.dense_cap)
    return embedding.vectors


def _trial_cell(args):
    data, spec, m, trial, reference = args
    return _run_trial(data, spec, m, trial, reference)


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Execute the full benchmark grid and aggregate the results.

    threads > 1 distributes (m, trial) cells over processes; metric
    values are identical either way because all randomness is derived
    from the cell coordinates.
    """
    data = load_dataset(spec.dataset)
    if data.labels is not None and spec.k != data.k:
        raise InvalidArgumentError(
            f"spec.k={spec.k} does not match the dataset's {data.k} labeled clusters"
        )
    reference = _reference_embedding(data, spec) if spec.compute_alignment else None
    dense = baseline = None
    if spec.compute_eta and data.n <= resolved_dense_cap(spec.dense_cap):
        dense = build_dense_kernel(data.samples, KernelConfig(spec.sigma),
                                   dense_cap=spec.dense_cap)
        baseline = analysis.perturbation_baseline(dense.matrix)

    records = []
    if "exact" in spec.methods:
        for trial in range(spec.trials):
            records.append(_run_exact_trial(data, spec, trial, reference))
    landmark_methods = [m for m in spec.methods if m != "exact"]
    if landmark_methods:
        cells = [(m, t) for m in spec.m_values for t in range(spec.trials)]
        # the eta diagnostic needs the dense kernel, which is too large to
        # ship to worker processes; it forces the sequential path
        if spec.compute_eta:
            threads = 1
        if threads > 1:
            tasks = [(data, spec, m, t, reference) for m, t in cells]
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for cell_records in pool.map(_trial_cell, tasks):
                    records.extend(cell_records)
        else:
            for m, t in cells:
                records.extend(_run_trial(data, spec, m, t, reference,
                                          dense=dense, baseline=baseline))
    return ExperimentResult(spec=spec, records=records,
                            aggregates=aggregate(records))


def _stats(values):
    values = [v for v in values if v is not None]
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def aggregate(records) -> list:
    """Group records by (method, m) and summarize the successful ones."""
    cells = {}
    for record in records:
        cells.setdefault((record.method, record.m), []).append(record)
    rows = []
    for (method, m), group in sorted(cells.items(),
                                     key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        good = [r for r in group if not r.failed]
        f_mean, f_std = _stats([r.f_score for r in good])
        n_mean, n_std = _stats([r.nmi for r in good])
        a_mean, a_std = _stats([r.alignment for r in good])
        r_mean, r_std = _stats([float(r.rank) for r in good if r.rank is not None])
        e_mean, _ = _stats([r.embed_seconds for r in good])
        t_mean, _ = _stats([r.total_seconds for r in good])
        rows.append(AggregateRow(
            method=method, m=m, count=len(good), failures=len(group) - len(good),
            f_mean=f_mean, f_std=f_std, nmi_mean=n_mean, nmi_std=n_std,
            alignment_mean=a_mean, alignment_std=a_std,
            rank_mean=r_mean, rank_std=r_std,
            embed_mean=e_mean, total_mean=t_mean,
        ))
    return rows


def timing_profile(spec: ExperimentSpec) -> list:
    """Wall-time aggregates with a discarded warm-up pass, single process.

    Runs the same grid as run_experiment but prepends one untimed trial
    so allocator and library warm-up never pollutes the first cell.
    """
    data = load_dataset(spec.dataset)
    if spec.m_values:
        warm = [m for m in spec.m_values][:1]
        for m in warm:
            _run_trial(data, spec, m, trial=0, reference=None)
    records = []
    if "exact" in spec.methods:
        _run_exact_trial(data, spec, trial=0, reference=None)
        for trial in range(spec.trials):
            records.append(_run_exact_trial(data, spec, trial, None))
    if any(m != "exact" for m in spec.methods):
        for m in spec.m_values:
            for trial in range(spec.trials):
                records.extend(_run_trial(data, spec, m, trial, reference=None))
    return aggregate(records)


def records_as_dicts(records) -> list:
    return [asdict(r) for r in records]
