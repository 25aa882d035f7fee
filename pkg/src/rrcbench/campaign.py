"""Benchmark campaigns: configuration, outer cross-validation, result records.

A campaign runs every (dataset, repetition, outer fold) as one task. Inside a
task each classifier kind is tuned and evaluated as raw, beta-SCM and
truncated-normal-SCM on the outer test fold. Tasks may run in a process pool;
results are merged in task order so the output does not depend on scheduling.
"""

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import pandas as pd

from .baseclf import ClassifierKind, predict_supports, train
from .core import Dataset, SeededRng, apply_normalization, decide_batch, normalize_features, stratified_kfold
from .datasets import SYNTHETIC_PREFIX, cfs_select, dataset_name, load_dataset
from .evaluation import (
    CRITERIA,
    DEFAULT_BETAS,
    DEFAULT_GAMMAS,
    DEFAULT_NEIGHBOURS,
    INNER_FOLDS,
    GridSearchResult,
    LossReport,
    evaluate_predictions,
    tune_raw,
    tune_scm,
)
from .rrc import MeanMode, Variant
from .scm import build_scm, corrected_posteriors
from .validation import check_gamma, check_knn_neighbours

RAW = "raw"
VARIANTS = (RAW, Variant.BETA.value, Variant.TRUNCNORM.value)
LOSS_COLUMNS = ("zero_one", "ma_fdr", "ma_fnr", "ma_f1", "mi_fdr", "mi_fnr", "mi_f1")  # CRITERIA order
COLUMN_CRITERIA = dict(zip(LOSS_COLUMNS, CRITERIA))
RESULT_COLUMNS = ("dataset", "kind", "variant", "rep", "fold", "beta", "gamma", "K") + LOSS_COLUMNS + ("millis",)
RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"

_LIST_KEYS = {"dataset", "kind", "variant", "beta", "gamma", "k"}
_SCALAR_KEYS = {
    "repetitions", "folds", "inner_folds", "seed", "output", "feature_selection",
    "workers", "rrc_mean", "timings", "class_attribute",
}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class CampaignConfig:
    datasets: Tuple[str, ...]
    seed: int
    kinds: Tuple[str, ...] = (ClassifierKind.NEAREST_CENTROID.value,)
    variants: Tuple[str, ...] = VARIANTS
    betas: Tuple[float, ...] = DEFAULT_BETAS
    gammas: Tuple[float, ...] = DEFAULT_GAMMAS
    ks: Tuple[int, ...] = DEFAULT_NEIGHBOURS
    repetitions: int = 10
    folds: int = 5
    inner_folds: int = INNER_FOLDS
    output: Path = Path("results")
    feature_selection: bool = False
    workers: int = 1
    rrc_mean: str = MeanMode.MOMENT.value
    timings: bool = True
    class_attribute: Optional[str] = None


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    kind: str
    variant: str
    rep: int
    fold: int
    beta: Optional[float]
    gamma: Optional[float]
    k: Optional[int]
    losses: LossReport
    millis: int

    def as_row(self) -> List[str]:
        def cell(value) -> str:
            return "" if value is None else repr(value)
        return [
            self.dataset, self.kind, self.variant, str(self.rep), str(self.fold),
            cell(self.beta), cell(self.gamma), cell(self.k),
            *(repr(v) for v in self.losses.as_tuple()),
            str(self.millis),
        ]


@dataclass
class CampaignOutcome:
    records: List[ResultRecord] = field(default_factory=list)
    failures: List[Tuple[str, str]] = field(default_factory=list)  # (dataset, kind)

    @property
    def ok(self) -> bool:
        return not self.failures


# ── Configuration ──────────────────────────────────────────────────────────────

def _parse_bool(key: str, value: str) -> bool:
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ValueError(f"'{key}' must be a boolean, got '{value}'.")


def _parse_int(key: str, value, minimum: int) -> int:
    try:
        number = int(str(value).strip())
    except ValueError:
        raise ValueError(f"'{key}' must be an integer, got '{value}'.") from None
    if number < minimum:
        raise ValueError(f"'{key}' must be at least {minimum}, got {number}.")
    return number


def _parse_floats(key: str, values: Sequence[str]) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in values)
    except ValueError:
        raise ValueError(f"'{key}' values must be numbers, got {list(values)}.") from None


def _read_pairs(text: str) -> Dict[str, List[str]]:
    """`key = value` lines; `#` comments; repeated keys and commas build lists."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(stripped)
        if not isinstance(raw, dict):
            raise ValueError("A JSON campaign config must be an object.")
        pairs: Dict[str, List[str]] = {}
        for key, value in raw.items():
            values = value if isinstance(value, list) else [value]
            pairs[str(key).lower()] = [str(v).lower() if isinstance(v, bool) else str(v) for v in values]
        return pairs

    pairs = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"Config line {line_no}: expected 'key = value', got '{line}'.")
        key, value = (part.strip() for part in line.split("=", 1))
        pairs.setdefault(key.lower(), []).extend(v.strip() for v in value.split(",") if v.strip())
    return pairs


def parse_config(text: str, base_dir: Optional[Path] = None) -> CampaignConfig:
    """Build a CampaignConfig; relative dataset paths are resolved against `base_dir`."""
    try:
        pairs = _read_pairs(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON config: {e}") from e
    unknown = set(pairs) - _LIST_KEYS - _SCALAR_KEYS
    if unknown:
        raise ValueError(f"Unknown config key(s): {', '.join(sorted(unknown))}.")
    for key in _SCALAR_KEYS & set(pairs):
        if len(pairs[key]) != 1:
            raise ValueError(f"'{key}' takes exactly one value, got {pairs[key]}.")
    if "seed" not in pairs:
        raise ValueError("'seed' is mandatory.")
    if not pairs.get("dataset"):
        raise ValueError("At least one 'dataset' is required.")

    datasets = []
    for source in pairs["dataset"]:
        if not source.startswith(SYNTHETIC_PREFIX) and base_dir is not None and not Path(source).is_absolute():
            source = str(Path(base_dir) / source)
        datasets.append(source)
    names = [dataset_name(source) for source in datasets]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise ValueError(f"Datasets must have distinct names, {', '.join(duplicates)} appear(s) more than once.")

    options: Dict[str, object] = {"datasets": tuple(datasets), "seed": _parse_int("seed", pairs["seed"][0], 0)}
    if "kind" in pairs:
        options["kinds"] = tuple(_choice("kind", v, ClassifierKind) for v in pairs["kind"])
    if "variant" in pairs:
        variants = tuple(v.lower() for v in pairs["variant"])
        bad = [v for v in variants if v not in VARIANTS]
        if bad:
            raise ValueError(f"Unknown variant(s) {bad}; choose from {', '.join(VARIANTS)}.")
        options["variants"] = variants
    if "beta" in pairs:
        betas = _parse_floats("beta", pairs["beta"])
        if any(b < 0 for b in betas):
            raise ValueError(f"'beta' values must be non-negative, got {betas}.")
        options["betas"] = betas
    if "gamma" in pairs:
        gammas = _parse_floats("gamma", pairs["gamma"])
        for gamma in gammas:
            check_gamma(gamma)
        options["gammas"] = gammas
    if "k" in pairs:
        ks = tuple(_parse_int("k", v, 1) for v in pairs["k"])
        for k in ks:
            check_knn_neighbours(k)
        options["ks"] = ks
    for key, minimum in (("repetitions", 1), ("folds", 2), ("inner_folds", 2), ("workers", 1)):
        if key in pairs:
            options[key] = _parse_int(key, pairs[key][0], minimum)
    for key in ("feature_selection", "timings"):
        if key in pairs:
            options[key] = _parse_bool(key, pairs[key][0])
    if "rrc_mean" in pairs:
        options["rrc_mean"] = _choice("rrc_mean", pairs["rrc_mean"][0], MeanMode)
    if "output" in pairs:
        options["output"] = Path(pairs["output"][0])
    if "class_attribute" in pairs:
        options["class_attribute"] = pairs["class_attribute"][0]
    return CampaignConfig(**options)


def _choice(key: str, value: str, choices) -> str:
    value = value.strip().lower()
    allowed = [c.value for c in choices]
    if value not in allowed:
        raise ValueError(f"Unknown {key} '{value}'; choose from {', '.join(allowed)}.")
    return value


def load_config(path: Path) -> CampaignConfig:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"Config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


# ── Execution ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FoldTask:
    name: str
    dataset: Dataset
    rep: int
    fold: int
    config: CampaignConfig


def _evaluate_variant(
    kind: ClassifierKind,
    variant: str,
    train_set: Dataset,
    test_set: Dataset,
    rng: SeededRng,
    config: CampaignConfig,
) -> Tuple[GridSearchResult, LossReport]:
    mean_mode = MeanMode(config.rrc_mean)
    if variant == RAW:
        tuning = tune_raw(kind, train_set, rng.spawn("tune"), config.ks, config.inner_folds)
        model = train(kind, train_set, tuning.k or 1)
        posteriors = predict_supports(model, test_set.features)
    else:
        tuning = tune_scm(
            kind, train_set, Variant(variant), rng.spawn("tune"),
            config.betas, config.gammas, config.ks, config.inner_folds, mean_mode,
        )
        scm = build_scm(
            kind, train_set, Variant(variant), tuning.beta, tuning.gamma or 0.5, tuning.k or 1,
            rng.spawn("bank"), mean_mode,
        )
        posteriors = corrected_posteriors(scm, test_set.features)
    losses = evaluate_predictions(test_set.labels, decide_batch(posteriors), train_set.class_count)
    return tuning, losses


def run_fold(task: FoldTask) -> Tuple[List[ResultRecord], List[Tuple[str, str]]]:
    """Records of one outer fold for every kind and variant, plus the (dataset, kind) pairs that failed."""
    config = task.config
    outer_rng = SeededRng(config.seed, ("outer", task.name, task.rep))
    train_rows, test_rows = stratified_kfold(task.dataset, config.folds, outer_rng)[task.fold]
    train_set, scaling = normalize_features(task.dataset.subset(train_rows))
    test_set = apply_normalization(task.dataset.subset(test_rows), scaling)
    if config.feature_selection:
        selected = cfs_select(train_set)
        train_set, test_set = train_set.select_features(selected), test_set.select_features(selected)

    records: List[ResultRecord] = []
    failures: List[Tuple[str, str]] = []
    for kind_name in config.kinds:
        kind = ClassifierKind(kind_name)
        task_rng = SeededRng(config.seed, (task.name, task.rep, task.fold, kind.value))
        try:
            for variant in config.variants:
                start = time.perf_counter()
                tuning, losses = _evaluate_variant(kind, variant, train_set, test_set, task_rng.spawn(variant), config)
                millis = int(round((time.perf_counter() - start) * 1000)) if config.timings else 0
                records.append(ResultRecord(
                    dataset=task.name, kind=kind.value, variant=variant, rep=task.rep, fold=task.fold,
                    beta=tuning.beta, gamma=tuning.gamma, k=tuning.k, losses=losses, millis=millis,
                ))
        except Exception:
            logging.exception("%s/%s failed on repetition %d, fold %d", task.name, kind.value, task.rep, task.fold)
            failures.append((task.name, kind.value))
    return records, failures


def _load_all(config: CampaignConfig, outcome: CampaignOutcome) -> List[Tuple[str, Dataset]]:
    loaded = []
    for source in config.datasets:
        try:
            dataset = load_dataset(source, class_attribute=config.class_attribute)
        except (OSError, ValueError) as e:
            logging.error("Skipping dataset %s: %s", source, e)
            outcome.failures.extend((dataset_name(source), kind) for kind in config.kinds)
            continue
        loaded.append((dataset_name(source), dataset))
    return loaded


def _tasks(config: CampaignConfig, loaded: Sequence[Tuple[str, Dataset]]) -> List[FoldTask]:
    return [
        FoldTask(name, dataset, rep, fold, config)
        for name, dataset in loaded
        for rep in range(config.repetitions)
        for fold in range(config.folds)
    ]


def run_campaign(config: CampaignConfig, output: Optional[Path] = None) -> CampaignOutcome:
    """Run every task, stream records to `results.csv` and write `summary.json`.

    Records of a (dataset, kind) pair with any failed fold are dropped from the
    outputs.
    """
    output = Path(output or config.output)
    output.mkdir(parents=True, exist_ok=True)
    outcome = CampaignOutcome()
    loaded = _load_all(config, outcome)
    tasks = _tasks(config, loaded)
    logging.info("Running %d fold task(s) over %d dataset(s) with %d worker(s)",
                 len(tasks), len(loaded), config.workers)

    collected: List[ResultRecord] = []
    results_path = output / RESULTS_FILE
    with open(results_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for records, failures in _execute(tasks, config.workers):
            for failure in failures:
                if failure not in outcome.failures:
                    outcome.failures.append(failure)
            collected.extend(records)
            if not failures:
                writer.writerows(r.as_row() for r in records)
                f.flush()

    failed: Set[Tuple[str, str]] = set(outcome.failures)
    outcome.records = [r for r in collected if (r.dataset, r.kind) not in failed]
    if failed:
        # rewrite without the partially streamed records of failed pairs
        write_results(outcome.records, results_path)
    write_summary(outcome, config, output / SUMMARY_FILE)
    logging.info("Results written to %s", results_path)
    return outcome


def _execute(tasks: Sequence[FoldTask], workers: int) -> Iterable[Tuple[List[ResultRecord], List[Tuple[str, str]]]]:
    if workers <= 1:
        for task in tasks:
            yield run_fold(task)
        return
    with ProcessPoolExecutor(max_workers=workers) as executor:
        yield from executor.map(run_fold, tasks)


def write_results(records: Sequence[ResultRecord], path: Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        writer.writerows(r.as_row() for r in records)
    return path


def read_results(path: Path) -> pd.DataFrame:
    """Results CSV as a DataFrame; accepts the file or its directory."""
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_FILE
    if not path.exists():
        raise FileNotFoundError(f"Results file not found: {path}")
    return pd.read_csv(path, dtype={"dataset": str, "kind": str, "variant": str}, float_precision="round_trip")


def mean_losses(results: pd.DataFrame) -> pd.DataFrame:
    """Mean of every loss column per (dataset, kind, variant)."""
    return results.groupby(["dataset", "kind", "variant"], sort=True)[list(LOSS_COLUMNS)].mean().reset_index()


def write_summary(outcome: CampaignOutcome, config: CampaignConfig, path: Path) -> Path:
    frame = pd.DataFrame(
        [{"dataset": r.dataset, "kind": r.kind, "variant": r.variant, **dict(zip(LOSS_COLUMNS, r.losses.as_tuple()))}
         for r in outcome.records],
        columns=["dataset", "kind", "variant", *LOSS_COLUMNS],
    )
    means = mean_losses(frame)
    summary = {
        "seed": config.seed,
        "repetitions": config.repetitions,
        "folds": config.folds,
        "records": len(outcome.records),
        "failures": [list(f) for f in outcome.failures],
        "mean_losses": means.to_dict(orient="records"),
    }
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path

