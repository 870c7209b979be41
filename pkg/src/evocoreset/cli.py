"""Cross-validation harness and the ``coreset`` command line."""

import argparse
import csv
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .baselines import run_selector
from .classifier import RidgeClassifier
from .data import MISSING_POLICIES, DatasetError, load_csv, make_folds, split_fold
from .evocore import run_fold, scale_split
from .metrics import f1_score

METHODS = ("evocore", "giga", "frank-wolfe", "mp", "omp", "stagewise", "random")
DEFAULT_METHODS = METHODS[:-1]
DISPLAY_NAMES = {
    "evocore": "EvoCore",
    "giga": "GIGA",
    "frank-wolfe": "Frank-Wolfe",
    "mp": "Matching Pursuit",
    "omp": "Ortho Pursuit",
    "stagewise": "Forward Stagewise",
    "random": "Stratified Random",
}
RESULT_COLUMNS = ("method", "fold", "size", "train_f1", "test_f1", "status")
SUMMARY_COLUMNS = ("method", "metric", "mean", "sem", "n")
SUMMARY_METRICS = ("size", "test_f1", "train_f1")
PARETO_COLUMNS = ("size", "train_error", "val_f1")


def fmt(value):
    """Locale-independent, 6 significant digits."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".6g")


@dataclass
class ExperimentConfig:
    data: str
    label: str
    folds: int = 10
    seed: int = 42
    alpha: float = 1.0
    methods: tuple = DEFAULT_METHODS
    val_fraction: float = 1 / 9
    out: str = "coreset-results"
    missing_policy: str = "mean-impute"
    delimiter: str = ","
    jobs: int = 0
    verbose: bool = False

    def __post_init__(self):
        if isinstance(self.methods, str):
            self.methods = tuple(m.strip() for m in self.methods.split(",") if m.strip())
        self.methods = tuple(self.methods)
        if self.folds < 2:
            raise ValueError(f"folds must be at least 2, got {self.folds}")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = sorted(set(self.methods) - set(METHODS))
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 <= self.val_fraction < 1:
            raise ValueError(f"val_fraction must be in [0, 1), got {self.val_fraction}")
        if self.missing_policy not in MISSING_POLICIES:
            raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}")


@dataclass
class FoldRow:
    method: str
    fold: int
    size: int = 0
    train_f1: float = math.nan
    test_f1: float = math.nan
    fit_time_s: float = math.nan
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"


@dataclass
class SummaryRow:
    method: str
    metric: str
    mean: float
    sem: float
    n: int


@dataclass
class RunReport:
    rows: list
    summary: list
    timing: list
    paretos: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(r.ok for r in self.rows)


def sem(values):
    """Standard error of the mean with the n-1 sample deviation; 0 for n = 1."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def summarize(rows, metrics=SUMMARY_METRICS):
    """Mean and s.e.m. of each metric per method, over successful folds."""
    out = []
    methods = list(dict.fromkeys(r.method for r in rows))
    for method in methods:
        good = [r for r in rows if r.method == method and r.ok]
        for metric in metrics:
            values = [getattr(r, metric) for r in good]
            mean = float(np.mean(values)) if values else math.nan
            out.append(SummaryRow(method, metric, mean, sem(values) if values else math.nan,
                                  len(values)))
    return out


def emit_pareto(archive, val_scores, path):
    """Write ``size, train_error, val_f1`` per archive member, smallest first.

    Floats are written with ``repr`` so reading the file back gives the
    exact fitness values.
    """
    if len(archive) == 0:
        raise ValueError("archive is empty")
    rows = sorted(
        ((f.size, f.error, v) for (_, f), v in zip(archive.entries, val_scores)),
        key=lambda r: (r[0], r[1]),
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PARETO_COLUMNS)
        for size, error, val in rows:
            w.writerow((int(size), repr(float(error)), repr(float(val))))
    return path


def read_pareto(path):
    with open(path, newline="") as fh:
        return [(int(r["size"]), float(r["train_error"]), float(r["val_f1"]))
                for r in csv.DictReader(fh)]


def _fallback_budget(n_train):
    return math.ceil(0.05 * n_train)


def evaluate_fold(dataset, plan, fold, config):
    """Run every requested method on one fold.

    Returns ``(rows, pareto)`` where ``pareto`` is ``(archive, val_scores)``
    for EvoCore or ``None``. Failures are captured per method.
    """
    seed = config.seed + fold
    split = split_fold(plan, fold, config.val_fraction, seed)
    L = dataset.class_count
    y = dataset.labels
    y_tr, y_te = y[split.train_idx], y[split.test_idx]
    rows = []
    pareto = None
    budget = None

    if "evocore" in config.methods:
        try:
            result = run_fold(dataset, split, config.alpha, seed, verbose=config.verbose)
            rows.append(FoldRow("evocore", fold, result.size, result.train_f1, result.test_f1,
                                result.fit_time_seconds))
            pareto = (result.archive, result.val_scores)
            budget = result.size
        except Exception as exc:  # reported per cell, the run goes on
            rows.append(FoldRow("evocore", fold, status=f"failed: {exc}"))

    baselines = [m for m in config.methods if m != "evocore"]
    if baselines:
        X_tr, _, X_te = scale_split(dataset, split)
        if budget is None:
            budget = _fallback_budget(y_tr.size)
        budget = min(max(budget, L), y_tr.size)
    for method in baselines:
        try:
            start = time.perf_counter()
            out = run_selector(method, X_tr, y_tr, budget, L, seed)
            idx = out.indices
            model = RidgeClassifier(alpha=config.alpha, class_count=L).fit(X_tr[idx], y_tr[idx])
            elapsed = time.perf_counter() - start
            rows.append(FoldRow(method, fold, int(idx.size),
                                f1_score(y_tr, model.predict(X_tr), L),
                                f1_score(y_te, model.predict(X_te), L), elapsed))
        except Exception as exc:
            rows.append(FoldRow(method, fold, status=f"failed: {exc}"))
    return rows, pareto


def _evaluate_fold_job(args):
    return evaluate_fold(*args)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _versions():
    import scipy
    import sklearn

    return {
        "evocoreset": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
    }


def write_artifacts(report, config, dataset):
    os.makedirs(config.out, exist_ok=True)
    order = {m: i for i, m in enumerate(config.methods)}
    rows = sorted(report.rows, key=lambda r: (order[r.method], r.fold))
    _write_rows(
        os.path.join(config.out, "results.csv"), RESULT_COLUMNS,
        [(r.method, r.fold, r.size if r.ok else "", fmt(r.train_f1) if r.ok else "",
          fmt(r.test_f1) if r.ok else "", r.status) for r in rows],
    )
    _write_rows(
        os.path.join(config.out, "summary.csv"), SUMMARY_COLUMNS,
        [(s.method, s.metric, fmt(s.mean), fmt(s.sem), s.n) for s in report.summary],
    )
    _write_rows(
        os.path.join(config.out, "timings.csv"), ("method", "fold", "fit_time_s"),
        [(r.method, r.fold, fmt(r.fit_time_s) if r.ok else "") for r in rows],
    )
    _write_rows(
        os.path.join(config.out, "timing_summary.csv"), SUMMARY_COLUMNS,
        [(s.method, s.metric, fmt(s.mean), fmt(s.sem), s.n) for s in report.timing],
    )
    for fold, (archive, scores) in sorted(report.paretos.items()):
        emit_pareto(archive, scores, os.path.join(config.out, f"pareto_fold{fold}.csv"))
    with open(os.path.join(config.out, "run_meta.txt"), "w") as fh:
        fh.write(f"dataset_name={dataset.name}\n")
        fh.write(f"samples={dataset.n_samples}\nfeatures={dataset.n_features}\n")
        fh.write(f"classes={dataset.class_count}\n")
        for f in fields(config):
            value = getattr(config, f.name)
            if f.name == "methods":
                value = ",".join(value)
            fh.write(f"{f.name}={value}\n")
        fh.write("fold_seeds=" + ",".join(str(config.seed + k) for k in range(config.folds)) + "\n")
        for name, version in _versions().items():
            fh.write(f"version.{name}={version}\n")
        fh.write("note=least-angle regression (LAR) is not implemented and has no rows\n")
        fh.write("note=fit times are wall-clock and live in timings.csv only\n")


def format_table(report, folds):
    """Plain-text table of mean +/- s.e.m. per method."""
    cells = {(s.method, s.metric): s for s in report.summary + report.timing}
    methods = list(dict.fromkeys(s.method for s in report.summary))
    header = f"{'method':<20}{'size':>20}{'test F1':>20}{'train F1':>20}{'fit time (s)':>20}"
    lines = ["# LAR omitted (not implemented)", header]
    for m in methods:
        parts = []
        for metric in ("size", "test_f1", "train_f1", "fit_time_s"):
            s = cells[(m, metric)]
            form = ".2f" if metric in ("size", "fit_time_s") else ".3f"
            parts.append(f"{format(s.mean, form)} ± {format(s.sem, form)}".rjust(20))
        note = ""
        n = cells[(m, "size")].n
        if n < folds:
            note = f"  (n={n} of {folds} folds)"
        elif n == 1:
            note = "  (single fold: s.e.m. set to 0)"
        lines.append(f"{DISPLAY_NAMES[m]:<20}" + "".join(parts) + note)
    return "\n".join(lines)


def run_experiment(config, dataset=None, write=True):
    """k-fold comparison of the requested methods on one dataset.

    Baselines run at the coreset size EvoCore picked on the same fold, or
    at 5% of the training partition when EvoCore is not requested.
    """
    if dataset is None:
        dataset = load_csv(config.data, config.label, config.missing_policy, config.delimiter)
    plan = make_folds(dataset, config.folds, config.seed)
    jobs = config.jobs or os.cpu_count() or 1
    tasks = [(dataset, plan, fold, config) for fold in range(config.folds)]
    if jobs > 1 and config.folds > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, config.folds)) as pool:
            results = list(pool.map(_evaluate_fold_job, tasks))
    else:
        results = [evaluate_fold(*t) for t in tasks]

    rows, paretos = [], {}
    for fold, (fold_rows, pareto) in enumerate(results):
        rows.extend(fold_rows)
        if pareto is not None:
            paretos[fold] = pareto
    order = {m: i for i, m in enumerate(config.methods)}
    rows.sort(key=lambda r: (order[r.method], r.fold))
    report = RunReport(rows, summarize(rows), summarize(rows, ("fit_time_s",)), paretos)
    if write:
        write_artifacts(report, config, dataset)
    return report


# -- command line -----------------------------------------------------------

CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment, dashes equal underscores."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "label_column":
                key = "label"
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _coerce(values):
    types = {"folds": int, "seed": int, "jobs": int, "alpha": float, "val_fraction": float}
    out = {}
    for key, value in values.items():
        if key in types:
            value = types[key](value)
        elif key == "verbose" and isinstance(value, str):
            value = value.lower() in ("1", "true", "yes", "on")
        out[key] = value
    return out


def _add_data_args(p):
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--label", help="label column name or zero-based index")
    p.add_argument("--folds", type=int, help="number of cross-validation folds (default 10)")
    p.add_argument("--seed", type=int, help="root random seed (default 42)")
    p.add_argument("--alpha", type=float, help="ridge penalty (default 1.0)")
    p.add_argument("--val-fraction", dest="val_fraction", type=float,
                   help="share of non-test samples held out for validation (default 1/9)")
    p.add_argument("--missing-policy", dest="missing_policy", choices=MISSING_POLICIES)
    p.add_argument("--delimiter", help="CSV delimiter (default ,)")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--verbose", action="store_true", default=None,
                   help="print per-generation progress to stderr")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="coreset", description="Evolutionary coreset discovery with greedy baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="k-fold comparison of EvoCore and the baselines")
    _add_data_args(run)
    run.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    run.add_argument("--out", help="output directory (default coreset-results)")
    run.add_argument("--jobs", type=int, help="parallel folds (default: all CPUs)")

    evo = sub.add_parser("evolve", help="evolve coresets on one split and write its Pareto front")
    _add_data_args(evo)
    evo.add_argument("--fold", type=int, default=0, help="fold used as test set (default 0)")
    evo.add_argument("--out", help="output directory (default coreset-results)")

    base = sub.add_parser("baseline", help="run one greedy selector on one split")
    _add_data_args(base)
    base.add_argument("--method", required=True, choices=[m for m in METHODS if m != "evocore"])
    base.add_argument("--budget", type=int, required=True, help="maximum coreset size")
    base.add_argument("--fold", type=int, default=0, help="fold used as test set (default 0)")
    return parser


def config_from_args(args):
    values = read_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    missing = [k for k in ("data", "label") if k not in values]
    if missing:
        raise ValueError("missing required setting(s): " + ", ".join("--" + k for k in missing))
    return ExperimentConfig(**_coerce(values))


def _single_split(config, fold):
    dataset = load_csv(config.data, config.label, config.missing_policy, config.delimiter)
    if not 0 <= fold < config.folds:
        raise ValueError(f"--fold must be in [0, {config.folds})")
    plan = make_folds(dataset, config.folds, config.seed)
    return dataset, split_fold(plan, fold, config.val_fraction, config.seed + fold)


def cmd_run(config):
    report = run_experiment(config)
    print(format_table(report, config.folds))
    for r in report.rows:
        if not r.ok:
            print(f"{r.method} fold {r.fold}: {r.status}", file=sys.stderr)
    print(f"artifacts written to {config.out}")
    return 0 if report.ok else 1


def cmd_evolve(config, fold):
    dataset, split = _single_split(config, fold)
    result = run_fold(dataset, split, config.alpha, config.seed + fold, verbose=config.verbose)
    os.makedirs(config.out, exist_ok=True)
    path = emit_pareto(result.archive, result.val_scores,
                       os.path.join(config.out, f"pareto_fold{fold}.csv"))
    print(f"archive size   {len(result.archive)}")
    print(f"chosen size    {result.size}")
    print(f"train F1       {fmt(result.train_f1)}")
    print(f"validation F1  {fmt(result.val_f1)}")
    print(f"test F1        {fmt(result.test_f1)}")
    print(f"fit time (s)   {result.fit_time_seconds:.2f}")
    print(f"indices        {' '.join(map(str, result.sample_indices))}")
    print(f"pareto front   {path}")
    return 0


def cmd_baseline(config, method, budget, fold):
    dataset, split = _single_split(config, fold)
    L = dataset.class_count
    y = dataset.labels
    X_tr, _, X_te = scale_split(dataset, split)
    y_tr, y_te = y[split.train_idx], y[split.test_idx]
    out = run_selector(method, X_tr, y_tr, budget, L, config.seed + fold)
    model = RidgeClassifier(alpha=config.alpha, class_count=L).fit(X_tr[out.indices],
                                                                  y_tr[out.indices])
    print(f"method         {method}")
    print(f"size           {out.size}")
    print(f"train F1       {fmt(f1_score(y_tr, model.predict(X_tr), L))}")
    print(f"test F1        {fmt(f1_score(y_te, model.predict(X_te), L))}")
    if out.residual_norm:
        print(f"final residual {fmt(out.residual_norm[-1])}")
    print(f"indices        {' '.join(map(str, split.train_idx[out.indices]))}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "evolve":
            return cmd_evolve(config, args.fold)
        return cmd_baseline(config, args.method, args.budget, args.fold)
    except (ValueError, FileNotFoundError, DatasetError) as exc:
        print(f"coreset: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
