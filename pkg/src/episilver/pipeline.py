"""End-to-end orchestration: ingest through evaluation, with a manifest.

Every run writes a manifest recording the resolved configuration, a
hash of it, all derived seeds and per-stage counts, so any reported
number can be traced back to its inputs. Dataset, model and report
files are byte-identical across runs with the same configuration.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import evaluation, features, models
from .corpus import ingest_files
from .errors import ConfigError, DataError, PipelineError
from .labeling import (
    EpidemicClass,
    LabeledExample,
    Ruleset,
    build_silver_dataset,
    default_ruleset,
    load_ruleset,
    match_rules,
    resolve_label,
    sample_negatives,
    write_dataset_tsv,
)

DEFAULT_CLASSES = (
    EpidemicClass.CHOLERA,
    EpidemicClass.EBOLA,
    EpidemicClass.MERS,
    EpidemicClass.SWINE_FLU,
)

MODEL_KINDS = ("logistic", "svm", "tree")


@dataclass(frozen=True)
class PipelineConfig:
    inputs: tuple[str, ...]
    out_dir: str
    ruleset_path: str | None = None
    included_classes: tuple[EpidemicClass, ...] = DEFAULT_CLASSES
    policy: str = "exclude"
    ratio: float = 0.75
    master_seed: int = 0
    model_kinds: tuple[str, ...] = MODEL_KINDS
    require_lang: str | None = "en"
    mask_keywords: bool = False
    threads: int = 1
    max_iter: int = 1000
    strength: float = 1.0
    tol: float = 1e-4
    tree_max_depth: int = 150

    def __post_init__(self):
        if not self.inputs:
            raise ConfigError("no input paths")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(f"ratio {self.ratio} outside (0, 1)")
        if not self.included_classes:
            raise ConfigError("included class list is empty")
        for cls in self.included_classes:
            if cls is EpidemicClass.NON_EPIDEMIC:
                raise ConfigError("the non-epidemic class is always implied; "
                                  "include only epidemic classes")
        for kind in self.model_kinds:
            if kind not in MODEL_KINDS:
                raise ConfigError(f"unknown model kind {kind!r}")
        paths = [str(Path(p)) for p in self.inputs] + [str(Path(self.out_dir))]
        if len(set(paths)) != len(paths):
            raise ConfigError("input and output paths must be distinct")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def as_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "out_dir": self.out_dir,
            "ruleset_path": self.ruleset_path,
            "included_classes": [c.label for c in self.included_classes],
            "policy": self.policy,
            "ratio": self.ratio,
            "master_seed": self.master_seed,
            "model_kinds": list(self.model_kinds),
            "require_lang": self.require_lang,
            "mask_keywords": self.mask_keywords,
            "threads": self.threads,
            "max_iter": self.max_iter,
            "strength": self.strength,
            "tol": self.tol,
            "tree_max_depth": self.tree_max_depth,
        }


def derive_seed(master: int, stage: str) -> int:
    """Stable per-stage seed from the master seed."""
    digest = hashlib.sha256(f"{master}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def config_hash(config: PipelineConfig) -> str:
    canonical = json.dumps(config.as_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
    except OSError as exc:
        raise DataError(str(exc), stage=name) from exc


@dataclass
class RunResult:
    manifest: dict
    out_dir: Path
    reports: dict[str, evaluation.EvalReport] = field(default_factory=dict)

    @property
    def dataset_path(self) -> Path:
        return self.out_dir / "dataset.tsv"


def _train_one(kind: str, config: PipelineConfig, X_train, y_train):
    if kind == "tree":
        hp = models.TreeHyperparams(
            max_depth=config.tree_max_depth,
            seed=derive_seed(config.master_seed, "tree"),
        )
        return models.train_decision_tree(X_train, y_train, hp)
    hp = models.LinearHyperparams(
        strength=config.strength, max_iter=config.max_iter, tol=config.tol
    )
    if kind == "logistic":
        return models.train_logistic(X_train, y_train, hp)
    return models.train_linear_svm(X_train, y_train, hp)


def run_pipeline(config: PipelineConfig) -> RunResult:
    """Execute ingest -> label -> balance -> split -> features -> train
    -> evaluate, writing dataset, model, report and manifest files."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = {
        "master": config.master_seed,
        "negatives": derive_seed(config.master_seed, "negatives"),
        "split": derive_seed(config.master_seed, "split"),
        "tree": derive_seed(config.master_seed, "tree"),
    }
    manifest: dict = {
        "config": config.as_dict(),
        "config_sha256": config_hash(config),
        "seeds": seeds,
        "stages": {},
        "artifacts": {},
        "timings": {},
    }
    timings = manifest["timings"]

    with _stage("config"):
        if config.ruleset_path is None:
            ruleset: Ruleset = default_ruleset()
        else:
            ruleset = load_ruleset(config.ruleset_path)

    t0 = time.perf_counter()
    with _stage("ingest"):
        docs, stats = ingest_files(
            config.inputs, config.require_lang, config.threads
        )
        manifest["stages"]["ingest"] = stats.as_dict()
    timings["ingest"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("label"):
        included = set(config.included_classes)
        positives: dict[EpidemicClass, list[LabeledExample]] = {
            cls: [] for cls in config.included_classes
        }
        negative_pool = []
        matched_counts: dict[str, int] = {}
        ambiguous = 0
        unmatched = 0
        for doc in docs:
            rules = match_rules(ruleset, doc.text)
            label = resolve_label(rules, config.policy)
            if label is None:
                if rules:
                    ambiguous += 1
                else:
                    unmatched += 1
                    negative_pool.append(doc)
                continue
            matched_counts[label.label] = matched_counts.get(label.label, 0) + 1
            if label in included:
                positives[label].append(
                    LabeledExample(id=doc.id, text=doc.text, label=label)
                )
        manifest["stages"]["label"] = {
            "matched": matched_counts,
            "ambiguous_excluded": ambiguous,
            "unmatched": unmatched,
        }
    timings["label"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("balance"):
        n_needed = sum(len(v) for v in positives.values())
        negatives = sample_negatives(
            negative_pool, ruleset, n_needed, seeds["negatives"]
        )
        dataset = build_silver_dataset(positives, negatives, seed=seeds["negatives"])
        manifest["stages"]["dataset"] = {
            "class_counts": {c.label: n for c, n in dataset.class_counts.items()},
            "total": dataset.total,
            "negatives_sampled": len(negatives),
        }
        dataset_path = out_dir / "dataset.tsv"
        write_dataset_tsv(dataset, dataset_path)
        manifest["artifacts"]["dataset"] = dataset_path.name
    timings["balance"] = time.perf_counter() - t0

    with _stage("split"):
        labels = [ex.label for ex in dataset.examples]
        split = models.stratified_split(labels, config.ratio, seeds["split"])
        manifest["stages"]["split"] = {
            "train": len(split.train),
            "validation": len(split.validation),
            "ratio": config.ratio,
        }

    t0 = time.perf_counter()
    with _stage("features"):
        train_texts = [dataset.examples[i].text for i in split.train]
        exclude = None
        if config.mask_keywords:
            from .labeling import match_classes

            exclude = lambda token: bool(match_classes(ruleset, token))  # noqa: E731
        tfidf = features.fit_tfidf(train_texts, exclude=exclude)
        checksum = features.idf_checksum(tfidf)
        X_train = [features.transform(tfidf, t) for t in train_texts]
        X_val = [
            features.transform(tfidf, dataset.examples[i].text)
            for i in split.validation
        ]
        y_train = [dataset.examples[i].label for i in split.train]
        y_val = [dataset.examples[i].label for i in split.validation]
        tfidf_path = out_dir / "tfidf.json"
        features.save_tfidf(tfidf, tfidf_path)
        manifest["stages"]["features"] = {
            "vocabulary_size": tfidf.dim,
            "train_documents": tfidf.doc_count,
            "masked_keywords": config.mask_keywords,
        }
        manifest["artifacts"]["tfidf"] = tfidf_path.name
    timings["features"] = time.perf_counter() - t0

    class_order = tuple(sorted(set(labels)))
    result = RunResult(manifest=manifest, out_dir=out_dir)
    manifest["stages"]["models"] = {}
    manifest["stages"]["eval"] = {}
    for kind in config.model_kinds:
        t0 = time.perf_counter()
        with _stage("train"):
            model = _train_one(kind, config, X_train, y_train)
            model_path = out_dir / f"model-{kind}.json"
            models.save_model(model, model_path, checksum)
            manifest["artifacts"][f"model-{kind}"] = model_path.name
            manifest["stages"]["models"][kind] = {
                "classes": [c.label for c in model.class_order],
                "iterations": getattr(model, "n_iter", None),
            }
        timings[f"train-{kind}"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        with _stage("evaluate"):
            pred = models.predict(model, X_val)
            report = evaluation.build_report(kind, y_val, pred, class_order)
            result.reports[kind] = report
            (out_dir / f"report-{kind}.tsv").write_bytes(
                evaluation.render_report(report, "tsv")
            )
            (out_dir / f"report-{kind}.json").write_bytes(
                evaluation.render_report(report, "json")
            )
            (out_dir / f"confusion-{kind}.csv").write_bytes(
                evaluation.render_confusion_csv(report)
            )
            manifest["artifacts"][f"report-{kind}"] = f"report-{kind}.json"
            manifest["stages"]["eval"][kind] = {
                "weighted_f1": report.weighted_f1,
                "accuracy": report.accuracy,
            }
        timings[f"eval-{kind}"] = time.perf_counter() - t0

    with _stage("manifest"):
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
    return result
