"""Open-set evaluation: openness, metrics, and the leave-P-class-out
cross-validation protocol.

Each protocol iteration removes every instance of P randomly chosen
labels from the cross-validation pool and injects them into every fold's
test set with ground truth UNKNOWN; stratified N-fold CV runs on the
remaining classes.  Min-max normalization is fitted on each fold's
training split only.  All sampling flows through seed streams derived
from (master_seed, p, purpose, iteration), so runs are reproducible and
fold evaluations can execute in parallel without changing results.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .baselines import TwoStepModel, fit_envelope
from .classifiers import (
    LINEAR_SVM,
    CLASSIFIER_KINDS,
    LinearSvmParams,
    LocalClassifierCache,
    make_classifier_factory,
)
from .core import (
    EUCLIDEAN,
    METRICS,
    RELATIVE,
    SOFTENING_MODES,
    SofteningConfig,
    classify_batch,
    train_galaxy,
)
from .dataset import UNKNOWN_LABEL, LabeledDataset

GALAXY = "galaxy"
H_GALAXY = "h-galaxy"
OVR = "ovr"
TWO_STEP = "two-step"
METHOD_NAMES = (GALAXY, H_GALAXY, OVR, TWO_STEP)

DEFAULT_DELTA_GRID = tuple(round(-0.5 + 0.1 * i, 1) for i in range(11))

_COMBO_STREAM = 0
_FOLD_STREAM = 1
_ENUMERATION_LIMIT = 1_000_000


# ---------------------------------------------------------------------------
# measures


def openness(unseen_count: int, total_labels: int) -> float:
    """Fraction of evaluation labels that are unseen in training."""
    if total_labels < 1:
        raise ValueError("total_labels must be positive")
    if not 0 <= unseen_count < total_labels:
        raise ValueError(
            f"unseen count must be in [0, {total_labels}); leaving every label "
            "out is a clustering scenario, not classification"
        )
    return unseen_count / total_labels


@dataclass(frozen=True)
class NormalizationStats:
    """Per-attribute min/max fitted on a training split."""

    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.minimum.shape[0]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {self.minimum.shape[0]}")
        span = self.maximum - self.minimum
        out = (X - self.minimum) / np.where(span == 0.0, 1.0, span)
        constant = span == 0.0
        if constant.any():
            out[:, constant] = 0.0
        return out


def fit_min_max(X) -> NormalizationStats:
    X = np.asarray(X, dtype=np.float64)
    return NormalizationStats(X.min(axis=0), X.max(axis=0))


def min_max_normalize(train: LabeledDataset, test: LabeledDataset | None = None):
    """Normalize each attribute to [0, 1] using training statistics only.

    Constant attributes map to 0.0; test values may fall outside [0, 1].
    Returns (train', test', stats); test' is None when no test set given.
    """
    stats = fit_min_max(train.features)
    train_n = LabeledDataset(stats.apply(train.features), train.labels)
    test_n = None
    if test is not None:
        if test.d != train.d:
            raise ValueError(f"dimension mismatch: train d={train.d}, test d={test.d}")
        test_n = LabeledDataset(stats.apply(test.features), test.labels)
    return train_n, test_n, stats


def _paired(truths, preds) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truths, dtype=object).ravel()
    p = np.asarray(preds, dtype=object).ravel()
    if t.size != p.size:
        raise ValueError(f"{t.size} truths but {p.size} predictions")
    if t.size == 0:
        raise ValueError("cannot score an empty prediction set")
    return t, p


def weighted_f_measure(truths, preds) -> float:
    """Support-weighted mean of per-label F1 over labels present in the
    ground truth (UNKNOWN counts as a label when present)."""
    t, p = _paired(truths, preds)
    both = np.concatenate([t, p])
    labels, inverse = np.unique(both, return_inverse=True)
    k = len(labels)
    ti, pi = inverse[: t.size], inverse[t.size :]
    cm = np.bincount(ti * k + pi, minlength=k * k).reshape(k, k)
    row = cm.sum(axis=1)
    col = cm.sum(axis=0)
    num = 0.0
    den = 0
    for i in range(k):
        support = int(row[i])
        if support == 0:
            continue
        tp = int(cm[i, i])
        fp = int(col[i]) - tp
        fn = support - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        num += support * f1
        den += support
    return num / den


def rejection_f_measure(truths, preds) -> float:
    """Binary F1 of the UNKNOWN decision; 0 when degenerate."""
    t, p = _paired(truths, preds)
    t_un = t == UNKNOWN_LABEL
    p_un = p == UNKNOWN_LABEL
    tp = int(np.sum(t_un & p_un))
    fp = int(np.sum(~t_un & p_un))
    fn = int(np.sum(t_un & ~p_un))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


# ---------------------------------------------------------------------------
# protocol planning


@dataclass(frozen=True)
class LpcoConfig:
    """Leave-P-class-out settings: P labels held out per iteration, at most
    alpha iterations of N-fold CV."""

    p: int
    n_folds: int = 5
    alpha: int = 10
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("p must be >= 1; run a closed-set evaluation for openness 0")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")


@dataclass(frozen=True)
class FoldPlan:
    p: int
    iteration: int
    combination: tuple[str, ...]
    fold: int
    train_ids: np.ndarray
    test_ids: np.ndarray


def _stream(master_seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, *path]))


def _sample_combinations(labels: tuple[str, ...], p: int, alpha: int, rng: np.random.Generator):
    total = math.comb(len(labels), p)
    take = min(alpha, total)
    if total <= _ENUMERATION_LIMIT:
        combos = list(itertools.combinations(labels, p))
        order = rng.permutation(total)
        return [combos[i] for i in order[:take]]
    chosen: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    while len(chosen) < take:
        pick = rng.choice(len(labels), size=p, replace=False)
        comb = tuple(sorted(labels[i] for i in pick))
        if comb not in seen:
            seen.add(comb)
            chosen.append(comb)
    return chosen


def plan_protocol(
    data: LabeledDataset,
    p: int,
    n_folds: int,
    alpha: int,
    master_seed: int,
) -> list[FoldPlan]:
    """Fold manifests for one openness level; p = 0 plans a single
    closed-set iteration with no held-out labels."""
    labels = data.label_set
    if not 0 <= p < len(labels):
        raise ValueError(f"cannot hold out {p} of {len(labels)} labels")
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    if p == 0:
        combos: list[tuple[str, ...]] = [()]
    else:
        combos = _sample_combinations(labels, p, alpha, _stream(master_seed, p, _COMBO_STREAM))
    by_label = data.indices_by_label
    plans: list[FoldPlan] = []
    for it, comb in enumerate(combos):
        held = set(comb)
        held_ids = (
            np.sort(np.concatenate([by_label[l] for l in comb]))
            if comb
            else np.empty(0, dtype=np.int64)
        )
        pool_labels = [l for l in labels if l not in held]
        rng = _stream(master_seed, p, _FOLD_STREAM, it)
        fold_tests: list[list[np.ndarray]] = [[] for _ in range(n_folds)]
        for l in pool_labels:
            ids = by_label[l]
            if len(ids) < n_folds:
                raise ValueError(
                    f"class {l!r} has {len(ids)} instances but {n_folds} folds were "
                    "requested; lower the fold count or supply more data"
                )
            perm = ids[rng.permutation(len(ids))]
            for f, part in enumerate(np.array_split(perm, n_folds)):
                fold_tests[f].append(part)
        pool_ids = np.sort(np.concatenate([by_label[l] for l in pool_labels]))
        for f in range(n_folds):
            test_pool = np.sort(np.concatenate(fold_tests[f]))
            train_ids = np.setdiff1d(pool_ids, test_pool, assume_unique=True)
            test_ids = np.sort(np.concatenate([test_pool, held_ids]))
            plans.append(FoldPlan(p, it, comb, f, train_ids, test_ids))
    return plans


def _fold_truths(data: LabeledDataset, plan: FoldPlan) -> np.ndarray:
    truths = data.labels[plan.test_ids].copy()
    if plan.combination:
        held = set(plan.combination)
        mask = np.fromiter((l in held for l in truths), bool, count=truths.size)
        truths[mask] = UNKNOWN_LABEL
    return truths


def _run_plans(fn: Callable, plans: Sequence[FoldPlan], threads: int | None):
    workers = os.cpu_count() or 1 if threads is None else threads
    if workers <= 1 or len(plans) <= 1:
        return [fn(plan) for plan in plans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, plans))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class FoldRecord:
    iteration: int
    combination: tuple[str, ...]
    fold: int
    f_measure: float
    rejection_f: float


@dataclass(frozen=True)
class SweepPoint:
    delta: float
    mean_f: float
    std_f: float
    mean_rejection_f: float
    std_rejection_f: float


@dataclass(frozen=True)
class MethodResult:
    method: str
    p: int
    openness: float
    mean_f: float
    std_f: float
    mean_rejection_f: float
    std_rejection_f: float
    folds: tuple[FoldRecord, ...]
    delta_star: float | None = None
    sweep: tuple[SweepPoint, ...] = ()


@dataclass(frozen=True)
class ManifestRow:
    p: int
    iteration: int
    combination: tuple[str, ...]
    fold: int
    train_ids: np.ndarray
    test_ids: np.ndarray


@dataclass(frozen=True)
class EvaluationReport:
    config: dict
    results: tuple[MethodResult, ...]
    manifest: tuple[ManifestRow, ...]

    def result_for(self, p: int, method: str) -> MethodResult:
        for r in self.results:
            if r.p == p and r.method == method:
                return r
        raise KeyError(f"no result for p={p}, method={method!r}")

    def to_json_dict(self) -> dict:
        results = []
        for r in self.results:
            entry = {
                "method": r.method,
                "p": r.p,
                "openness": r.openness,
                "mean_f": r.mean_f,
                "std_f": r.std_f,
                "mean_rej_f": r.mean_rejection_f,
                "std_rej_f": r.std_rejection_f,
                "folds": [
                    {
                        "iteration": fr.iteration,
                        "combination": list(fr.combination),
                        "fold": fr.fold,
                        "f_measure": fr.f_measure,
                        "rejection_f": fr.rejection_f,
                    }
                    for fr in r.folds
                ],
            }
            if r.delta_star is not None:
                entry["delta_star"] = r.delta_star
            if r.sweep:
                entry["sweep"] = [asdict(pt) for pt in r.sweep]
            results.append(entry)
        return {"report_version": 1, "config": self.config, "results": results}


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _method_result(
    method: str,
    p: int,
    total_labels: int,
    records: list[FoldRecord],
    delta_star: float | None = None,
    sweep: tuple[SweepPoint, ...] = (),
) -> MethodResult:
    mean_f, std_f = _mean_std([r.f_measure for r in records])
    mean_r, std_r = _mean_std([r.rejection_f for r in records])
    return MethodResult(
        method,
        p,
        openness(p, total_labels),
        mean_f,
        std_f,
        mean_r,
        std_r,
        tuple(records),
        delta_star,
        sweep,
    )


# ---------------------------------------------------------------------------
# generic protocol runner

MethodFactory = Callable[[LabeledDataset], Callable[[np.ndarray], np.ndarray]]


def leave_p_class_out_cv(
    data: LabeledDataset,
    cfg: LpcoConfig,
    method_factory: MethodFactory,
    method_name: str = "method",
    threads: int | None = 1,
) -> EvaluationReport:
    """Run the protocol for one method.

    ``method_factory`` receives a normalized training dataset and returns
    a predictor mapping a normalized test matrix to predicted labels.
    """
    plans = plan_protocol(data, cfg.p, cfg.n_folds, cfg.alpha, cfg.master_seed)

    def run(plan: FoldPlan) -> FoldRecord:
        train = data.subset(plan.train_ids)
        stats = fit_min_max(train.features)
        predict = method_factory(LabeledDataset(stats.apply(train.features), train.labels))
        preds = np.asarray(predict(stats.apply(data.features[plan.test_ids])), dtype=object)
        truths = _fold_truths(data, plan)
        return FoldRecord(
            plan.iteration,
            plan.combination,
            plan.fold,
            weighted_f_measure(truths, preds),
            rejection_f_measure(truths, preds),
        )

    records = _run_plans(run, plans, threads)
    result = _method_result(method_name, cfg.p, len(data.label_set), records)
    config = {
        "p_values": [cfg.p],
        "n_folds": cfg.n_folds,
        "alpha": cfg.alpha,
        "master_seed": cfg.master_seed,
        "methods": [method_name],
    }
    manifest = tuple(
        ManifestRow(pl.p, pl.iteration, pl.combination, pl.fold, pl.train_ids, pl.test_ids)
        for pl in plans
    )
    return EvaluationReport(config, (result,), manifest)


# ---------------------------------------------------------------------------
# multi-method benchmark


@dataclass(frozen=True)
class MethodSettings:
    """What to evaluate and how the methods are parameterized."""

    methods: tuple[str, ...] = METHOD_NAMES
    softening_mode: str = RELATIVE
    delta: float = -0.3
    delta_grid: tuple[float, ...] = DEFAULT_DELTA_GRID
    local_kind: str = LINEAR_SVM
    svm_params: LinearSvmParams = LinearSvmParams()
    quantile: float = 0.95
    metric: str = EUCLIDEAN

    def __post_init__(self) -> None:
        unknown = set(self.methods) - set(METHOD_NAMES)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHOD_NAMES}")
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.softening_mode not in SOFTENING_MODES:
            raise ValueError(f"unknown softening mode {self.softening_mode!r}")
        if H_GALAXY in self.methods and not self.delta_grid:
            raise ValueError("h-galaxy needs a nonempty delta grid")
        if self.local_kind not in CLASSIFIER_KINDS:
            raise ValueError(f"unknown local classifier {self.local_kind!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unsupported metric {self.metric!r}")
        if not 0.0 < self.quantile <= 1.0:
            raise ValueError("quantile must be in (0, 1]")

    def deltas_to_evaluate(self) -> tuple[float, ...]:
        deltas: set[float] = set()
        if GALAXY in self.methods:
            deltas.add(self.delta)
        if H_GALAXY in self.methods:
            deltas.update(self.delta_grid)
        return tuple(sorted(deltas))


@dataclass(frozen=True)
class _FoldEval:
    plan: FoldPlan
    method_metrics: dict[str, tuple[float, float]]
    delta_metrics: dict[float, tuple[float, float]]


def _bench_fold(data: LabeledDataset, plan: FoldPlan, st: MethodSettings) -> _FoldEval:
    train = data.subset(plan.train_ids)
    stats = fit_min_max(train.features)
    train_ds = LabeledDataset(stats.apply(train.features), train.labels)
    X_test = stats.apply(data.features[plan.test_ids])
    truths = _fold_truths(data, plan)

    def pair(preds) -> tuple[float, float]:
        return weighted_f_measure(truths, preds), rejection_f_measure(truths, preds)

    factory = make_classifier_factory(st.local_kind, st.svm_params, st.metric)
    method_metrics: dict[str, tuple[float, float]] = {}
    base = None
    if OVR in st.methods or TWO_STEP in st.methods:
        base = factory(train_ds)
    if OVR in st.methods:
        method_metrics[OVR] = pair(base.predict_many(X_test))
    if TWO_STEP in st.methods:
        center, radius = fit_envelope(train_ds.features, st.quantile, st.metric)
        two = TwoStepModel(center, radius, st.quantile, st.metric, base)
        method_metrics[TWO_STEP] = pair(two.predict_many(X_test))

    delta_metrics: dict[float, tuple[float, float]] = {}
    deltas = st.deltas_to_evaluate()
    if deltas:
        galaxy = train_galaxy(train_ds, SofteningConfig(st.softening_mode, 0.0), st.metric)
        cache = LocalClassifierCache(train_ds, factory)
        if base is not None and len(train_ds.label_set) >= 2:
            cache.prime(train_ds.label_set, base)
        for delta in deltas:
            preds = classify_batch(galaxy, X_test, cache, SofteningConfig(st.softening_mode, delta))
            delta_metrics[delta] = pair(preds)
    return _FoldEval(plan, method_metrics, delta_metrics)


def _records_from(evals: list[_FoldEval], get) -> list[FoldRecord]:
    return [
        FoldRecord(ev.plan.iteration, ev.plan.combination, ev.plan.fold, *get(ev))
        for ev in evals
    ]


def _aggregate_methods(
    p: int,
    total_labels: int,
    st: MethodSettings,
    evals: list[_FoldEval],
) -> list[MethodResult]:
    results = []
    for method in sorted(st.methods):
        if method in (OVR, TWO_STEP):
            records = _records_from(evals, lambda ev, m=method: ev.method_metrics[m])
            results.append(_method_result(method, p, total_labels, records))
        elif method == GALAXY:
            records = _records_from(evals, lambda ev: ev.delta_metrics[st.delta])
            results.append(_method_result(method, p, total_labels, records))
        else:  # h-galaxy: pick the grid delta with the best mean f-measure
            sweep = []
            for delta in st.delta_grid:
                mean_f, std_f = _mean_std([ev.delta_metrics[delta][0] for ev in evals])
                mean_r, std_r = _mean_std([ev.delta_metrics[delta][1] for ev in evals])
                sweep.append(SweepPoint(delta, mean_f, std_f, mean_r, std_r))
            best = max(range(len(sweep)), key=lambda i: (sweep[i].mean_f, -sweep[i].delta))
            delta_star = sweep[best].delta
            records = _records_from(evals, lambda ev: ev.delta_metrics[delta_star])
            results.append(
                _method_result(method, p, total_labels, records, delta_star, tuple(sweep))
            )
    return results


def run_benchmark(
    data: LabeledDataset,
    p_values: Sequence[int],
    settings: MethodSettings = MethodSettings(),
    n_folds: int = 5,
    alpha: int = 10,
    master_seed: int = 0,
    threads: int | None = 1,
    config_extra: dict | None = None,
) -> EvaluationReport:
    """Evaluate every requested method at every openness level.

    Within a fold the methods share the trained one-vs-rest model and the
    per-subset local classifiers, so sweeping the softening grid costs
    little beyond re-thresholding; results are identical to evaluating
    each method in isolation.
    """
    total = len(data.label_set)
    p_list = sorted(set(int(p) for p in p_values))
    for p in p_list:
        if not 0 <= p < total:
            raise ValueError(f"cannot hold out {p} of {total} labels")
    if not p_list:
        raise ValueError("at least one hold-out count is required")
    results: list[MethodResult] = []
    manifest: list[ManifestRow] = []
    for p in p_list:
        plans = plan_protocol(data, p, n_folds, alpha, master_seed)
        evals = _run_plans(lambda plan: _bench_fold(data, plan, settings), plans, threads)
        results.extend(_aggregate_methods(p, total, settings, evals))
        manifest.extend(
            ManifestRow(pl.p, pl.iteration, pl.combination, pl.fold, pl.train_ids, pl.test_ids)
            for pl in plans
        )
    config = {
        "p_values": p_list,
        "n_folds": n_folds,
        "alpha": alpha,
        "master_seed": master_seed,
        "settings": asdict(settings),
    }
    if config_extra:
        config.update(config_extra)
    return EvaluationReport(config, tuple(results), tuple(manifest))


@dataclass(frozen=True)
class DeltaSweepResult:
    delta_star: float
    points: tuple[SweepPoint, ...]


def delta_sweep(
    data: LabeledDataset,
    cfg: LpcoConfig,
    grid: Sequence[float] = DEFAULT_DELTA_GRID,
    settings: MethodSettings | None = None,
    threads: int | None = 1,
) -> DeltaSweepResult:
    """Mean f-measure across the protocol for every softening value; the
    winner is the grid point with the best mean (ties to the smallest)."""
    if len(grid) == 0:
        raise ValueError("delta grid must be nonempty")
    base = settings or MethodSettings()
    st = MethodSettings(
        methods=(H_GALAXY,),
        softening_mode=base.softening_mode,
        delta=base.delta,
        delta_grid=tuple(float(d) for d in grid),
        local_kind=base.local_kind,
        svm_params=base.svm_params,
        quantile=base.quantile,
        metric=base.metric,
    )
    report = run_benchmark(
        data,
        [cfg.p],
        st,
        n_folds=cfg.n_folds,
        alpha=cfg.alpha,
        master_seed=cfg.master_seed,
        threads=threads,
    )
    result = report.result_for(cfg.p, H_GALAXY)
    assert result.delta_star is not None
    return DeltaSweepResult(result.delta_star, result.sweep)
