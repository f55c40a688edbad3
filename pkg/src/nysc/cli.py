"""Command line interface.

Subcommands:
  generate  write a synthetic dataset as CSV
  cluster   cluster one dataset and report scores
  bench     multi-trial benchmark over methods and landmark counts
  verify    numerical checks of the truncation identity and the
            degree-perturbation bound, with pass/fail lines

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 a verified
invariant failed. All non-timing outputs are bit-reproducible for a
fixed seed; every file output gets a JSON manifest next to it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, analysis, bench, plots
from .datagen import (
    DEFAULT_BLOB_STDDEV,
    DEFAULT_CIRCLE_FACTOR,
    DEFAULT_NOISE,
    DataMatrix,
    SyntheticSpec,
    make_dataset,
    write_csv,
)
from .embedding import (
    METHODS,
    RankPolicy,
    adaptive_nystrom_sc,
    determine_rank,
    exact_sc,
    fowlkes_nystrom_sc,
    li_nystrom_sc,
)
from .errors import InvalidArgumentError, NyscError, SizeLimitError
from .kernel import (
    KernelConfig,
    build_dense_kernel,
    build_nystrom_factors,
    nystrom_reconstruct,
    sample_landmarks_uniform,
)
from .kmeans import KMeansConfig
from .linalg import sym_evd
from .metrics import f_score, nmi

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VIOLATION = 3

_IDENTITY_TOL = 1e-8
_BOUND_TOL = 1.0 + 1e-8
_ETA_SAFE = 0.1
_EMPIRICAL_FACTOR = 1.5


class CliUsageError(Exception):
    """Bad flag combination discovered after parsing."""


@dataclass
class RunManifest:
    """Provenance record written next to every file output."""

    command: str
    params: dict
    base_seed: int | None
    version: str
    dataset_fingerprint: str | None
    created_at: str

    def write(self, output_path: Path) -> Path:
        path = Path(str(output_path) + ".manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _fingerprint(data: DataMatrix) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(data.samples).tobytes())
    if data.labels is not None:
        digest.update(np.ascontiguousarray(data.labels).tobytes())
    return digest.hexdigest()


def _manifest(args, command: str, data: DataMatrix | None) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items())
              if k != "func" and not callable(v)}
    return RunManifest(
        command=command,
        params={k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()},
        base_seed=getattr(args, "seed", None),
        version=__version__,
        dataset_fingerprint=None if data is None else _fingerprint(data),
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def _parse_int_list(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise CliUsageError(f"expected a comma-separated integer list, got {text!r}") from exc
    if not values:
        raise CliUsageError(f"expected a nonempty integer list, got {text!r}")
    return values


def _parse_float_list(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise CliUsageError(f"expected a comma-separated float list, got {text!r}") from exc
    if not values:
        raise CliUsageError(f"expected a nonempty float list, got {text!r}")
    return values


def _add_synthetic_flags(parser, default_n=2000):
    parser.add_argument("--shape", choices=("moons", "circles", "blobs"),
                        help="synthetic dataset shape (alternative to --input)")
    parser.add_argument("--n", type=int, default=default_n,
                        help="synthetic sample count")
    parser.add_argument("--data-seed", type=int, default=0,
                        help="seed for synthetic data generation")
    parser.add_argument("--noise", type=float, default=DEFAULT_NOISE)
    parser.add_argument("--factor", type=float, default=DEFAULT_CIRCLE_FACTOR,
                        help="inner/outer radius ratio for circles")
    parser.add_argument("--stddev", type=float, default=DEFAULT_BLOB_STDDEV,
                        help="per-cluster spread for blobs")
    parser.add_argument("--blobs-k", type=int, default=3,
                        help="number of blob clusters")


def _synthetic_spec(args) -> SyntheticSpec:
    return SyntheticSpec(shape=args.shape, n=args.n, seed=args.data_seed,
                         noise=args.noise, factor=args.factor, stddev=args.stddev,
                         k=args.blobs_k if args.shape == "blobs" else None)


def _dataset_from_args(args) -> tuple:
    """Returns (DataMatrix, dataset descriptor for the ExperimentSpec)."""
    if getattr(args, "input", None):
        if args.shape:
            raise CliUsageError("pass either --input or --shape, not both")
        source = str(args.input)
        return bench.load_dataset(source), source
    if not args.shape:
        raise CliUsageError("either --input or --shape is required")
    spec = _synthetic_spec(args)
    return make_dataset(spec), spec


def _emit_record(record: dict, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "csv":
        writer = csv.writer(stream)
        keys = sorted(record)
        writer.writerow(keys)
        writer.writerow([_csv_value(record[k]) for k in keys])
    else:
        stream.write(json.dumps(record, sort_keys=True) + "\n")


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _write_records(path: Path, records: list, fmt: str) -> None:
    keys = sorted({k for r in records for k in r})
    with path.open("w", newline="") as fh:
        if fmt == "csv":
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for record in records:
                writer.writerow({k: _csv_value(record.get(k)) for k in keys})
        else:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def cmd_generate(args) -> int:
    if not args.shape:
        raise CliUsageError("--shape is required")
    data = make_dataset(_synthetic_spec(args))
    out = Path(args.out)
    write_csv(out, data)
    manifest = _manifest(args, "generate", data)
    manifest.write(out)
    print(f"wrote {data.n} samples ({data.d} features, "
          f"{data.k if data.k is not None else 'no'} clusters) to {out}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    data = bench.load_dataset(str(args.input))
    config = KernelConfig(args.sigma)
    kcfg = KMeansConfig(max_iter=args.max_iter, restarts=args.restarts)
    method = args.method
    if method != "exact" and args.m is None:
        raise CliUsageError(f"--m is required for method {method!r}")
    start = time.perf_counter()
    if method == "exact":
        try:
            clusters, embedding = exact_sc(
                data.samples, config, args.k, seed=_child_seed(args.seed, 1),
                kmeans_config=kcfg, dense_cap=args.dense_cap)
        except SizeLimitError as exc:
            raise SizeLimitError(
                f"{exc}; for data this large run --method proposed with --m landmarks"
            ) from exc
    else:
        indices = sample_landmarks_uniform(data.n, args.m, _child_seed(args.seed, 0))
        factors = build_nystrom_factors(data.samples, indices, config)
        seed = _child_seed(args.seed, 1)
        if method == "proposed":
            clusters, embedding = adaptive_nystrom_sc(
                factors, args.k, policy=RankPolicy(gamma=args.gamma),
                seed=seed, kmeans_config=kcfg)
        elif method == "fowlkes":
            clusters, embedding = fowlkes_nystrom_sc(factors, args.k, seed=seed,
                                                     kmeans_config=kcfg)
        else:
            clusters, embedding = li_nystrom_sc(factors, args.k, seed=seed,
                                                kmeans_config=kcfg)
    wall = time.perf_counter() - start
    record = {
        "method": method, "n": data.n, "k": args.k, "m": args.m,
        "sigma": args.sigma, "gamma": args.gamma if method == "proposed" else None,
        "rank": embedding.rank, "seed": args.seed,
        "f_score": None, "nmi": None,
        "wall_time_seconds": wall,
    }
    if data.labels is not None:
        record["f_score"] = f_score(data.labels, clusters.labels, args.k)
        record["nmi"] = nmi(data.labels, clusters.labels)
    if args.out:
        out = Path(args.out)
        with out.open("w", newline="") as fh:
            fh.write("label\n")
            for label in clusters.labels:
                fh.write(f"{int(label)}\n")
        _manifest(args, "cluster", data).write(out)
    _emit_record(record, args.format)
    return EXIT_OK


def _child_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def _format_cell(value, width, digits=4):
    if value is None:
        return " " * (width - 1) + "-"
    if isinstance(value, float):
        return f"{value:>{width}.{digits}f}"
    return f"{value:>{width}}"


def print_aggregate_table(aggregates, stream=None) -> None:
    stream = stream or sys.stdout
    header = (f"{'method':<10}{'m':>6}{'runs':>6}{'fail':>6}"
              f"{'f_mean':>9}{'f_std':>8}{'nmi_mean':>9}{'nmi_std':>8}"
              f"{'align':>9}{'rank':>8}{'embed_s':>10}{'total_s':>10}")
    stream.write(header + "\n")
    stream.write("-" * len(header) + "\n")
    for row in aggregates:
        stream.write(
            f"{row.method:<10}"
            + _format_cell(row.m if row.m is not None else None, 6)
            + _format_cell(row.count, 6)
            + _format_cell(row.failures, 6)
            + _format_cell(row.f_mean, 9)
            + _format_cell(row.f_std, 8)
            + _format_cell(row.nmi_mean, 9)
            + _format_cell(row.nmi_std, 8)
            + _format_cell(row.alignment_mean, 9)
            + _format_cell(row.rank_mean, 8, digits=1)
            + _format_cell(row.embed_mean, 10, digits=5)
            + _format_cell(row.total_mean, 10, digits=5)
            + "\n"
        )


def cmd_bench(args) -> int:
    data, dataset = _dataset_from_args(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise CliUsageError(f"unknown methods {bad}; choose from {METHODS}")
    m_values = _parse_int_list(args.m_values) if args.m_values else ()
    if any(m != "exact" for m in methods) and not m_values:
        raise CliUsageError("--m-values is required for landmark methods")
    k = args.k if args.k is not None else data.k
    if k is None:
        raise CliUsageError("--k is required when the dataset has no labels")
    spec = bench.ExperimentSpec(
        dataset=dataset, methods=methods, m_values=m_values, k=k,
        sigma=args.sigma, gamma=args.gamma, trials=args.trials,
        base_seed=args.seed,
        kmeans=KMeansConfig(max_iter=args.max_iter, restarts=args.restarts),
        compute_alignment=args.alignment, compute_eta=args.eta,
        dense_cap=args.dense_cap,
    )
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    if args.timing:
        aggregates = bench.timing_profile(spec)
        records = []
    else:
        result = bench.run_experiment(spec, threads=threads)
        aggregates = result.aggregates
        records = bench.records_as_dicts(result.records)
    if args.out and records:
        out = Path(args.out)
        _write_records(out, records, args.format)
        _manifest(args, "bench", data).write(out)
    print_aggregate_table(aggregates)
    if args.figures:
        saved = [plots.save_metric_figure(aggregates, "f", args.figures),
                 plots.save_metric_figure(aggregates, "nmi", args.figures),
                 plots.save_time_figure(aggregates, args.figures)]
        if args.alignment:
            saved.append(plots.save_metric_figure(aggregates, "alignment", args.figures))
        print("figures: " + ", ".join(str(p) for p in saved))
    failures = sum(row.failures for row in aggregates)
    if failures:
        print(f"note: {failures} trial(s) failed and were excluded from the means",
              file=sys.stderr)
    return EXIT_OK


def _check(description: str, ok: bool, lines: list) -> bool:
    lines.append(f"[{'PASS' if ok else 'FAIL'}] {description}")
    return ok


def cmd_verify(args) -> int:
    if args.theorem == 1:
        return _verify_truncation(args)
    return _verify_perturbation(args)


def _verify_truncation(args) -> int:
    rng = np.random.default_rng(args.seed)
    n, m = args.n, args.m
    if not 1 <= m <= n:
        raise CliUsageError(f"need 1 <= m <= n, got m={m}, n={n}")
    worst_gap = 0.0
    worst_error = 0.0
    records = []
    last_reports = None
    for trial in range(args.trials):
        data = rng.normal(size=(n, 2))
        kernel = build_dense_kernel(data, KernelConfig(args.sigma),
                                    dense_cap=args.dense_cap).matrix
        indices = sample_landmarks_uniform(n, m, _child_seed(args.seed, trial + 1))
        reports = analysis.theorem1_reports(kernel, indices)
        last_reports = reports
        for report in reports:
            worst_gap = max(worst_gap, report.identity_gap)
            worst_error = max(worst_error, report.normalized_error)
            records.append({"trial": trial, **asdict(report)})
    lines = []
    ok = _check(f"truncation identity holds: max gap {worst_gap:.3e} <= {_IDENTITY_TOL:g}",
                worst_gap <= _IDENTITY_TOL, lines)
    ok &= _check(f"truncation error bound holds: max error {worst_error:.9f} <= 1",
                 worst_error <= _BOUND_TOL, lines)
    if args.gammas:
        data = np.random.default_rng(args.seed).normal(size=(n, 2))
        kernel = build_dense_kernel(data, KernelConfig(args.sigma),
                                    dense_cap=args.dense_cap).matrix
        rows = analysis.sweep_gamma(kernel, m, _parse_float_list(args.gammas),
                                    trials=args.trials, seed=args.seed)
        print(f"{'gamma':>10}{'mean_l':>10}{'mean_err':>12}{'max_err':>12}")
        for row in rows:
            print(f"{row.gamma:>10.4g}{row.mean_rank:>10.2f}"
                  f"{row.mean_error:>12.4e}{row.max_error:>12.4e}")
        if args.figures:
            print(f"figure: {plots.save_gamma_figure(rows, args.figures)}")
    if args.out:
        out = Path(args.out)
        _write_records(out, records, args.format)
        _manifest(args, "verify", None).write(out)
    if args.figures and last_reports:
        print(f"figure: {plots.save_truncation_figure(last_reports, args.figures)}")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_VIOLATION


def _verify_perturbation(args) -> int:
    data, _ = _dataset_from_args(args)
    dense = build_dense_kernel(data.samples, KernelConfig(args.sigma),
                               dense_cap=args.dense_cap)
    baseline = analysis.perturbation_baseline(dense.matrix)
    m_values = _parse_int_list(args.m_values) if args.m_values else (40, 80, 160, 320)
    config = KernelConfig(args.sigma)
    rows = []
    records = []
    bound_ok = True
    bound_checked = 0
    for m in m_values:
        etas, errs, bounds = [], [], []
        for trial in range(args.trials):
            seed = bench.derive_seed(args.seed, m, trial, 0)
            indices = sample_landmarks_uniform(data.n, m, seed)
            factors = build_nystrom_factors(data.samples, indices, config)
            evd = sym_evd(factors.inner)
            l = determine_rank(evd, RankPolicy(gamma=args.gamma, min_rank=1))
            approx = nystrom_reconstruct(factors, l=l, dense_cap=args.dense_cap)
            report = analysis.perturbation_report(dense.matrix, approx, baseline=baseline)
            etas.append(report.eta)
            bounds.append(report.bound)
            if report.normalized_err is not None:
                errs.append(report.normalized_err)
                if report.eta <= _ETA_SAFE:
                    bound_checked += 1
                    if report.normalized_err > _EMPIRICAL_FACTOR * report.bound:
                        bound_ok = False
            records.append({"m": m, "trial": trial, "l": l, **asdict(report)})
        rows.append((m, float(np.mean(etas)), float(np.mean(errs)) if errs else None,
                     float(np.mean(bounds))))
    print(f"{'m':>6}{'mean_eta':>12}{'mean_err':>12}{'mean_bound':>12}")
    for m, eta, err, bound in rows:
        err_text = f"{err:>12.4e}" if err is not None else f"{'-':>12}"
        print(f"{m:>6}{eta:>12.4e}{err_text}{bound:>12.4e}")
    lines = []
    ok = _check("degree perturbation stays contractive: mean eta < 1 at every m",
                all(eta < 1.0 for _, eta, _, _ in rows), lines)
    ok &= _check(
        f"observed error within {_EMPIRICAL_FACTOR:g}x of the bound on "
        f"{bound_checked} small-eta trial(s)", bound_ok, lines)
    if args.out:
        out = Path(args.out)
        _write_records(out, records, args.format)
        _manifest(args, "verify", data).write(out)
    if args.figures:
        points = [(m, eta, err) for m, eta, err, _ in rows]
        print(f"figure: {plots.save_perturbation_figure(points, args.figures)}")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nysc",
        description="Spectral clustering with adaptive-rank landmark acceleration",
    )
    parser.add_argument("--version", action="version", version=f"nysc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    _add_synthetic_flags(gen)
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=cmd_generate)

    cluster = sub.add_parser("cluster", help="cluster one dataset and report scores")
    cluster.add_argument("--input", required=True, help="CSV or sparse text dataset")
    cluster.add_argument("--method", required=True, choices=METHODS)
    cluster.add_argument("--k", type=int, required=True, help="number of clusters")
    cluster.add_argument("--sigma", type=float, required=True, help="kernel bandwidth")
    cluster.add_argument("--m", type=int, help="number of landmarks")
    cluster.add_argument("--gamma", type=float, default=1e-2,
                         help="spectrum truncation threshold")
    cluster.add_argument("--seed", type=int, default=0)
    cluster.add_argument("--max-iter", type=int, default=10)
    cluster.add_argument("--restarts", type=int, default=1)
    cluster.add_argument("--dense-cap", type=int, default=None)
    cluster.add_argument("--out", help="write cluster labels to this CSV path")
    cluster.add_argument("--format", choices=("json", "csv"), default="json")
    cluster.set_defaults(func=cmd_cluster)

    bench_p = sub.add_parser("bench", help="multi-trial benchmark")
    bench_p.add_argument("--input", help="CSV or sparse text dataset")
    _add_synthetic_flags(bench_p)
    bench_p.add_argument("--methods", default="proposed",
                         help="comma-separated subset of " + ",".join(METHODS))
    bench_p.add_argument("--m-values", help="comma-separated landmark counts")
    bench_p.add_argument("--k", type=int, help="number of clusters "
                         "(defaults to the dataset's labels)")
    bench_p.add_argument("--sigma", type=float, required=True)
    bench_p.add_argument("--gamma", type=float, default=1e-2)
    bench_p.add_argument("--trials", type=int, default=50)
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--max-iter", type=int, default=10)
    bench_p.add_argument("--restarts", type=int, default=1)
    bench_p.add_argument("--alignment", action="store_true",
                         help="score subspace alignment against the exact embedding")
    bench_p.add_argument("--eta", action="store_true",
                         help="record the degree perturbation of each trial (dense)")
    bench_p.add_argument("--timing", action="store_true",
                         help="timing mode: warm-up pass, single thread")
    bench_p.add_argument("--threads", type=int, default=0,
                         help="worker processes for trials; 0 = all cores")
    bench_p.add_argument("--dense-cap", type=int, default=None)
    bench_p.add_argument("--out", help="write per-trial records here")
    bench_p.add_argument("--figures", help="directory for rendered figures")
    bench_p.add_argument("--format", choices=("json", "csv"), default="json")
    bench_p.set_defaults(func=cmd_bench)

    verify = sub.add_parser("verify", help="numerical invariant checks")
    verify.add_argument("--theorem", type=int, choices=(1, 2), required=True)
    verify.add_argument("--input", help="dataset for the perturbation suite")
    _add_synthetic_flags(verify, default_n=1500)
    verify.add_argument("--m", type=int, default=20,
                        help="landmark count for the truncation suite")
    verify.add_argument("--m-values", help="landmark counts for the perturbation suite")
    verify.add_argument("--sigma", type=float, default=1.0)
    verify.add_argument("--gamma", type=float, default=1e-2)
    verify.add_argument("--gammas", help="optional threshold sweep, comma separated")
    verify.add_argument("--trials", type=int, default=10)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--dense-cap", type=int, default=None)
    verify.add_argument("--out", help="write per-trial reports here")
    verify.add_argument("--figures", help="directory for rendered figures")
    verify.add_argument("--format", choices=("json", "csv"), default="json")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 for --help/--version
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except NyscError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
