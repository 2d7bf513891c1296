"""fraudctl: reproducible fraud-detection experiments from a single JSON config.

Commands:
    gen-synth   write a synthetic labeled dataset (features.csv, labels.csv)
    train       fit the standardizer and train the contrastive encoder
    score       embed and score data against the training reference set
    baseline    fit and score one of: kmeans, iforest, autoencoder
    eval        compute per-model metrics, ROC exports, and a comparison table

All randomness is derived from one master seed: each component's seed is a
64-bit hash of (master_seed, component_name), so reruns with the same config
and seed are byte-identical (wall-clock fields excluded). Exit codes: 0 ok,
2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .augment import AugmentConfig
from .baselines import (
    autoencoder_fit,
    autoencoder_score,
    iforest_fit,
    iforest_score,
    kmeans_fit,
    kmeans_score,
    save_baseline,
)
from .contrastive import ContrastiveConfig, train
from .data import (
    SynthConfig,
    StandardizationParams,
    fit_standardizer,
    generate_synthetic,
    load_csv,
    load_labels_csv,
    split_indices,
    transform,
    write_features_csv,
    write_labels_csv,
)
from .errors import ConfigError, DataError, FraudctlError, NumericError
from .metrics import (
    comparison_table,
    contamination_threshold,
    export_roc,
    report_from_decisions,
    roc_auc,
)
from .nn import MlpSpec, embed, load_model, save_model
from .scoring import RULES, choose_threshold, decide, score_all, subsample_reference
from .util import derive_seed, sha256_csv_excluding, sha256_file

BASELINES = ("kmeans", "iforest", "autoencoder")
CONTRASTIVE_NAME = "contrastive"


@dataclass
class ExperimentConfig:
    """Fully resolved experiment settings, with all component seeds derived."""

    seed: int
    out_dir: Path
    config_dir: Path
    snapshot: dict
    # data source: exactly one of synth / csv
    synth: SynthConfig | None
    data_csv: Path | None
    data_labels: Path | None
    data_schema: dict[str, str] | None
    standardize: bool
    train_frac: float
    augment: AugmentConfig
    layer_dims: list[int] | None
    projection_dims: list[int] | None
    projection_default: bool
    use_projection_head: bool
    contrastive: ContrastiveConfig
    rule: str
    contamination: float
    max_reference_size: int | None
    kmeans_k: int
    kmeans_max_iter: int
    iforest_n_trees: int
    iforest_subsample: int
    ae_layer_dims: list[int] | None
    ae_epochs: int
    ae_batch_size: int
    ae_learning_rate: float


def _section(obj: dict, key: str, allowed: set[str]) -> dict:
    sec = obj.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(
            f"unknown keys in config section {key!r}: {sorted(unknown)}"
        )
    return sec


def load_config(
    path: str | Path,
    seed_override: int | None = None,
    out_override: str | Path | None = None,
) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Paths inside the file resolve relative to the file's directory; --out
    resolves relative to the caller's working directory.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    known_top = {
        "seed", "out_dir", "data", "standardize", "train_frac", "augment",
        "model", "contrastive", "scoring", "baselines",
    }
    unknown = set(obj) - known_top
    if unknown:
        raise ConfigError(f"{path}: unknown top-level config keys: {sorted(unknown)}")

    config_dir = path.parent.resolve()
    seed = int(obj.get("seed", 0)) if seed_override is None else int(seed_override)
    if out_override is not None:
        out_dir = Path(out_override).resolve()
    else:
        out_dir = (config_dir / str(obj.get("out_dir", "out"))).resolve()

    data = _section(obj, "data", {"synth", "csv", "labels", "schema"})
    synth = None
    data_csv = data_labels = None
    data_schema = None
    if "synth" in data and "csv" in data:
        raise ConfigError("data source must be either 'synth' or 'csv', not both")
    if "synth" in data:
        synth_sec = data["synth"] if isinstance(data["synth"], dict) else None
        if synth_sec is None:
            raise ConfigError("data.synth must be an object")
        allowed = {
            "n_normal", "n_fraud", "n_features", "fraud_shift", "fraud_scale",
            "n_fraud_modes", "n_latent", "factor_scale", "n_normal_modes",
            "normal_spread",
        }
        unknown = set(synth_sec) - allowed
        if unknown:
            raise ConfigError(
                f"unknown keys in data.synth: {sorted(unknown)} "
                "(component seeds derive from the master seed)"
            )
        defaults = SynthConfig()
        synth = SynthConfig(
            n_normal=int(synth_sec.get("n_normal", defaults.n_normal)),
            n_fraud=int(synth_sec.get("n_fraud", defaults.n_fraud)),
            n_features=int(synth_sec.get("n_features", defaults.n_features)),
            fraud_shift=float(synth_sec.get("fraud_shift", defaults.fraud_shift)),
            fraud_scale=float(synth_sec.get("fraud_scale", defaults.fraud_scale)),
            n_fraud_modes=int(synth_sec.get("n_fraud_modes", defaults.n_fraud_modes)),
            n_latent=int(synth_sec.get("n_latent", defaults.n_latent)),
            factor_scale=float(synth_sec.get("factor_scale", defaults.factor_scale)),
            n_normal_modes=int(synth_sec.get("n_normal_modes", defaults.n_normal_modes)),
            normal_spread=float(synth_sec.get("normal_spread", defaults.normal_spread)),
            seed=derive_seed(seed, "synth"),
        )
        synth.validate()
    elif "csv" in data:
        data_csv = (config_dir / str(data["csv"])).resolve()
        if "labels" in data:
            data_labels = (config_dir / str(data["labels"])).resolve()
        if "schema" in data:
            if not isinstance(data["schema"], dict):
                raise ConfigError("data.schema must map column names to roles")
            data_schema = {str(k): str(v) for k, v in data["schema"].items()}
    else:
        synth = SynthConfig(seed=derive_seed(seed, "synth"))

    aug_sec = _section(
        obj, "augment", {"noise_std", "scale_jitter", "mask_prob", "amount_features"}
    )
    augment = AugmentConfig(
        noise_std=float(aug_sec.get("noise_std", 0.1)),
        scale_jitter=float(aug_sec.get("scale_jitter", 0.2)),
        mask_prob=float(aug_sec.get("mask_prob", 0.1)),
        amount_features=tuple(int(i) for i in aug_sec.get("amount_features", ())),
        seed=derive_seed(seed, "augment"),
    )
    augment.validate()

    model_sec = _section(
        obj, "model", {"layer_dims", "projection_dims", "use_projection_head"}
    )
    layer_dims = model_sec.get("layer_dims")
    if layer_dims is not None:
        layer_dims = [int(d) for d in layer_dims]
    # projection_dims: absent -> default head; null or [] -> no head.
    if "projection_dims" not in model_sec:
        projection_dims, default_head = None, True
    elif model_sec["projection_dims"] in (None, []):
        projection_dims, default_head = None, False
    else:
        projection_dims = [int(d) for d in model_sec["projection_dims"]]
        default_head = False
    use_head = bool(model_sec.get("use_projection_head", True))

    con_sec = _section(
        obj, "contrastive",
        {"temperature", "batch_size", "epochs", "loss_variant", "learning_rate"},
    )
    con_defaults = ContrastiveConfig()
    contrastive = ContrastiveConfig(
        temperature=float(con_sec.get("temperature", con_defaults.temperature)),
        batch_size=int(con_sec.get("batch_size", con_defaults.batch_size)),
        epochs=int(con_sec.get("epochs", con_defaults.epochs)),
        loss_variant=str(con_sec.get("loss_variant", con_defaults.loss_variant)),
        learning_rate=float(con_sec.get("learning_rate", con_defaults.learning_rate)),
        seed=derive_seed(seed, "train"),
    )
    contrastive.validate()

    score_sec = _section(
        obj, "scoring", {"rule", "contamination", "max_reference_size"}
    )
    rule = str(score_sec.get("rule", "low_mean"))
    if rule not in RULES:
        raise ConfigError(f"unknown rule {rule!r}; valid rules: {', '.join(RULES)}")
    contamination = float(score_sec.get("contamination", 0.1))
    if not 0.0 < contamination < 1.0:
        raise ConfigError(f"contamination must be in (0, 1), got {contamination}")
    max_ref = score_sec.get("max_reference_size")
    if max_ref is not None:
        max_ref = int(max_ref)

    base_sec = _section(obj, "baselines", {"kmeans", "iforest", "autoencoder"})
    km = _section(base_sec, "kmeans", {"k", "max_iter"})
    iforest = _section(base_sec, "iforest", {"n_trees", "subsample_size"})
    ae = _section(
        base_sec, "autoencoder", {"layer_dims", "epochs", "batch_size", "learning_rate"}
    )

    train_frac = float(obj.get("train_frac", 0.8))
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must be in (0, 1), got {train_frac}")

    snapshot = {
        "seed": seed,
        "out_dir": str(out_dir),
        "data": data,
        "standardize": bool(obj.get("standardize", True)),
        "train_frac": train_frac,
        "augment": aug_sec,
        "model": model_sec,
        "contrastive": con_sec,
        "scoring": score_sec,
        "baselines": base_sec,
    }
    ae_dims = ae.get("layer_dims")
    return ExperimentConfig(
        seed=seed,
        out_dir=out_dir,
        config_dir=config_dir,
        snapshot=snapshot,
        synth=synth,
        data_csv=data_csv,
        data_labels=data_labels,
        data_schema=data_schema,
        standardize=bool(obj.get("standardize", True)),
        train_frac=train_frac,
        augment=augment,
        layer_dims=layer_dims,
        projection_dims=projection_dims,
        projection_default=default_head,
        use_projection_head=use_head,
        contrastive=contrastive,
        rule=rule,
        contamination=contamination,
        max_reference_size=max_ref,
        kmeans_k=int(km.get("k", 8)),
        kmeans_max_iter=int(km.get("max_iter", 100)),
        iforest_n_trees=int(iforest.get("n_trees", 100)),
        iforest_subsample=int(iforest.get("subsample_size", 256)),
        ae_layer_dims=[int(d) for d in ae_dims] if ae_dims is not None else None,
        ae_epochs=int(ae.get("epochs", 30)),
        ae_batch_size=int(ae.get("batch_size", 128)),
        ae_learning_rate=float(ae.get("learning_rate", 1e-3)),
    )


def _load_features(cfg: ExperimentConfig) -> tuple[np.ndarray, list[str]]:
    """Feature matrix for the configured source. Labels are never read here."""
    if cfg.synth is not None:
        X, _ = generate_synthetic(cfg.synth)
        return X, [f"f{j}" for j in range(X.shape[1])]
    table = _load_csv_features(cfg, cfg.data_csv)
    return table.features, table.feature_names


def _load_csv_features(cfg: ExperimentConfig, path: Path):
    if path is None or not path.is_file():
        raise DataError(f"no such data file: {path}")
    if cfg.data_schema is not None:
        schema = cfg.data_schema
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if header is None:
            raise DataError(f"{path}: empty file")
        schema = {col: ("label" if col == "label" else "numeric") for col in header}
    return load_csv(path, schema)


def _model_spec(cfg: ExperimentConfig, d: int) -> MlpSpec:
    layer_dims = cfg.layer_dims or [d, 64, 64, 32]
    if layer_dims[0] != d:
        raise ConfigError(
            f"model.layer_dims[0]={layer_dims[0]} does not match the "
            f"{d} standardized features"
        )
    if not cfg.use_projection_head:
        projection = None
    elif cfg.projection_default:
        projection = [layer_dims[-1], 32, 16]
    else:
        projection = cfg.projection_dims
    return MlpSpec(layer_dims=tuple(layer_dims),
                   projection_dims=tuple(projection) if projection else None)


def _ae_dims(cfg: ExperimentConfig, d: int) -> list[int]:
    if cfg.ae_layer_dims is not None:
        return cfg.ae_layer_dims
    # Match the contrastive encoder's hidden capacity; the bottleneck must
    # stay well below the input width or reconstruction error stops
    # discriminating.
    return [d, 64, max(1, min(32, d // 3))]


def _standardizer_path(cfg: ExperimentConfig) -> Path:
    return cfg.out_dir / "standardizer.json"


def _prepare_split(
    cfg: ExperimentConfig, X: np.ndarray, names: list[str], fit: bool
) -> tuple[np.ndarray, np.ndarray, StandardizationParams | None, np.ndarray, np.ndarray]:
    """Split, then standardize with parameters fit on the training rows."""
    tr_idx, te_idx = split_indices(len(X), cfg.train_frac, derive_seed(cfg.seed, "split"))
    if not cfg.standardize:
        return X[tr_idx], X[te_idx], None, tr_idx, te_idx
    if fit:
        params = fit_standardizer(X[tr_idx], names)
    else:
        spath = _standardizer_path(cfg)
        if not spath.is_file():
            raise DataError(
                f"standardizer not found at {spath}; run 'fraudctl train' first"
            )
        params = StandardizationParams.load(spath)
    return transform(X[tr_idx], params), transform(X[te_idx], params), params, tr_idx, te_idx


class _Manifest:
    """Collects artifact hashes and timings for one command run."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.t0 = time.perf_counter()
        self.entries: list[dict] = []

    def add(self, path: Path, hash_excludes: list[str] | None = None) -> Path:
        rel = str(path.relative_to(self.cfg.out_dir))
        if hash_excludes:
            digest = sha256_csv_excluding(path, hash_excludes)
            self.entries.append(
                {"path": rel, "sha256": digest, "hash_excludes": hash_excludes}
            )
        else:
            self.entries.append({"path": rel, "sha256": sha256_file(path)})
        return path

    def write(self) -> Path:
        obj = {
            "format_version": 1,
            "command": self.command,
            "library_version": __version__,
            "seed": self.cfg.seed,
            "config": self.cfg.snapshot,
            "wall_seconds": time.perf_counter() - self.t0,
            "artifacts": self.entries,
        }
        path = self.cfg.out_dir / f"run_manifest_{self.command.replace('-', '_')}.json"
        path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
        return path


def verify_manifest(path: str | Path) -> bool:
    """Re-hash every artifact listed in a manifest; True when all match."""
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    out_dir = path.parent
    for entry in obj["artifacts"]:
        target = out_dir / entry["path"]
        if not target.is_file():
            return False
        excludes = entry.get("hash_excludes")
        digest = (
            sha256_csv_excluding(target, excludes) if excludes else sha256_file(target)
        )
        if digest != entry["sha256"]:
            return False
    return True


def _write_scores_csv(
    path: Path,
    indices: np.ndarray,
    scores: np.ndarray,
    decisions: np.ndarray,
    rule: str,
    threshold: float,
    mean_sim: np.ndarray | None = None,
    std_sim: np.ndarray | None = None,
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample_index", "mean_sim", "std_sim", "score", "is_fraud", "rule", "threshold"]
        )
        for i in range(len(indices)):
            writer.writerow(
                [
                    int(indices[i]),
                    repr(float(mean_sim[i])) if mean_sim is not None else "",
                    repr(float(std_sim[i])) if std_sim is not None else "",
                    repr(float(scores[i])),
                    int(decisions[i]),
                    rule,
                    repr(float(threshold)),
                ]
            )


def _read_scores_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sample_index, score, is_fraud) columns of a score CSV."""
    if not path.is_file():
        raise DataError(f"no such score file: {path}")
    indices, scores, decisions = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"sample_index", "score", "is_fraud"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"{path}: missing score CSV columns {sorted(required)}")
        for row in reader:
            indices.append(int(row["sample_index"]))
            scores.append(float(row["score"]))
            decisions.append(bool(int(row["is_fraud"])))
    return np.asarray(indices), np.asarray(scores), np.asarray(decisions)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen_synth(cfg: ExperimentConfig) -> list[Path]:
    if cfg.synth is None:
        raise ConfigError("gen-synth requires a synthetic data source in the config")
    manifest = _Manifest(cfg, "gen-synth")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    X, y = generate_synthetic(cfg.synth)
    names = [f"f{j}" for j in range(X.shape[1])]
    features = cfg.out_dir / "features.csv"
    labels = cfg.out_dir / "labels.csv"
    write_features_csv(features, X, names)
    write_labels_csv(labels, y)
    manifest.add(features)
    manifest.add(labels)
    return [features, labels, manifest.write()]


def cmd_train(cfg: ExperimentConfig) -> list[Path]:
    manifest = _Manifest(cfg, "train")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    X, names = _load_features(cfg)
    X_train, _, params, _, _ = _prepare_split(cfg, X, names, fit=True)
    outputs = []
    if params is not None:
        params.save(_standardizer_path(cfg))
        outputs.append(manifest.add(_standardizer_path(cfg)))
    spec = _model_spec(cfg, X_train.shape[1])
    model, log = train(X_train, spec, cfg.augment, cfg.contrastive)
    model_path = cfg.out_dir / "model.json"
    log_path = cfg.out_dir / "train_log.csv"
    save_model(model, model_path)
    log.to_csv(log_path)
    outputs.append(manifest.add(model_path))
    # Wall-clock column excluded from the content hash.
    outputs.append(manifest.add(log_path, hash_excludes=["seconds"]))
    outputs.append(manifest.write())
    return outputs


def cmd_score(
    cfg: ExperimentConfig,
    model_path: Path | None = None,
    data_path: Path | None = None,
) -> list[Path]:
    manifest = _Manifest(cfg, "score")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    model = load_model(model_path or cfg.out_dir / "model.json")
    X, names = _load_features(cfg)
    X_train, X_test, params, tr_idx, te_idx = _prepare_split(cfg, X, names, fit=False)

    if data_path is not None:
        table = _load_csv_features(cfg, Path(data_path))
        query = transform(table.features, params) if params is not None else table.features
        q_indices = np.arange(len(query))
    else:
        query, q_indices = X_test, te_idx

    reference = X_train
    if cfg.max_reference_size is not None:
        reference = subsample_reference(
            reference, cfg.max_reference_size, derive_seed(cfg.seed, "reference")
        )
    emb_ref = embed(model, reference)
    emb_query = embed(model, query)
    self_ref = query.shape == reference.shape and np.array_equal(query, reference)
    stats = score_all(emb_query, emb_ref, query_is_reference=self_ref)

    threshold = choose_threshold(stats, cfg.contamination, rule=cfg.rule)
    decisions = np.array(
        [decide(s, threshold, cfg.rule).is_fraud for s in stats], dtype=bool
    )
    scores = np.array([s.score for s in stats])
    path = cfg.out_dir / f"scores_{CONTRASTIVE_NAME}.csv"
    _write_scores_csv(
        path, q_indices, scores, decisions, cfg.rule, threshold,
        mean_sim=np.array([s.mean_sim for s in stats]),
        std_sim=np.array([s.std_sim for s in stats]),
    )
    manifest.add(path)
    return [path, manifest.write()]


def cmd_baseline(cfg: ExperimentConfig, which: str) -> list[Path]:
    if which == "vae":
        raise ConfigError("variational autoencoder baseline not implemented; see docs")
    if which not in BASELINES:
        raise ConfigError(
            f"unknown baseline {which!r}; valid: {', '.join(BASELINES)}"
        )
    manifest = _Manifest(cfg, f"baseline-{which}")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    X, names = _load_features(cfg)
    X_train, X_test, _, _, te_idx = _prepare_split(cfg, X, names, fit=not _standardizer_path(cfg).is_file())

    if which == "kmeans":
        model = kmeans_fit(
            X_train, cfg.kmeans_k, derive_seed(cfg.seed, "kmeans"), cfg.kmeans_max_iter
        )
        scores = kmeans_score(model, X_test)
    elif which == "iforest":
        model = iforest_fit(
            X_train, cfg.iforest_n_trees, cfg.iforest_subsample,
            derive_seed(cfg.seed, "iforest"),
        )
        scores = iforest_score(model, X_test)
    else:
        model = autoencoder_fit(
            X_train, _ae_dims(cfg, X_train.shape[1]), epochs=cfg.ae_epochs,
            seed=derive_seed(cfg.seed, "autoencoder"),
            batch_size=cfg.ae_batch_size, learning_rate=cfg.ae_learning_rate,
        )
        scores = autoencoder_score(model, X_test)

    model_path = cfg.out_dir / f"{which}.json"
    save_baseline(model, model_path)
    threshold = contamination_threshold(scores, cfg.contamination)
    decisions = scores > threshold
    path = cfg.out_dir / f"scores_{which}.csv"
    _write_scores_csv(path, te_idx, scores, decisions, "high_score", threshold)
    manifest.add(model_path)
    manifest.add(path)
    return [model_path, path, manifest.write()]


def _labels_for_eval(cfg: ExperimentConfig, labels_path: Path | None) -> np.ndarray:
    if labels_path is not None:
        return load_labels_csv(labels_path)
    if cfg.synth is not None:
        default = cfg.out_dir / "labels.csv"
        if not default.is_file():
            raise DataError(
                f"labels file {default} not found; run 'fraudctl gen-synth' first "
                "or pass --labels"
            )
        return load_labels_csv(default)
    if cfg.data_labels is not None:
        return load_labels_csv(cfg.data_labels)
    table = _load_csv_features(cfg, cfg.data_csv)
    if table.labels is None:
        raise DataError("no labels available: set data.labels or pass --labels")
    return table.labels


def cmd_eval(
    cfg: ExperimentConfig,
    score_paths: list[Path] | None = None,
    labels_path: Path | None = None,
) -> list[Path]:
    manifest = _Manifest(cfg, "eval")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    labels = _labels_for_eval(cfg, labels_path)
    if score_paths is None:
        score_paths = [
            Path(p) for p in sorted(glob.glob(str(cfg.out_dir / "scores_*.csv")))
        ]
    if not score_paths:
        raise DataError(f"no score files found under {cfg.out_dir}")

    outputs: list[Path] = []
    reports = []
    for spath in score_paths:
        name = spath.stem
        name = name[len("scores_"):] if name.startswith("scores_") else name
        indices, scores, decisions = _read_scores_csv(Path(spath))
        if indices.size == 0:
            raise DataError(f"{spath}: score file has no rows")
        if indices.max(initial=-1) >= len(labels):
            raise DataError(
                f"{spath}: sample_index {int(indices.max())} out of range for "
                f"{len(labels)} labels"
            )
        y = labels[indices]
        with open(spath, newline="", encoding="utf-8") as fh:
            first = next(csv.DictReader(fh), None)
        rule = first["rule"] if first else ""
        threshold = float(first["threshold"]) if first else float("nan")
        report = report_from_decisions(scores, y, decisions, name, rule, threshold)
        reports.append(report)
        rpath = cfg.out_dir / f"metrics_{name}.json"
        report.save(rpath)
        outputs.append(manifest.add(rpath))
        curve = roc_auc(scores, y)
        cpath = cfg.out_dir / f"roc_{name}.csv"
        export_roc(curve, cpath)
        outputs.append(manifest.add(cpath))

    table = comparison_table(reports)
    tpath = cfg.out_dir / "comparison.txt"
    tpath.write_text(table, encoding="utf-8")
    outputs.append(manifest.add(tpath))
    outputs.append(manifest.write())
    print(table, end="")
    return outputs


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraudctl",
        description="Reproducible unsupervised fraud-detection experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="override the output directory")

    common(sub.add_parser("gen-synth", help="write a synthetic labeled dataset"))
    common(sub.add_parser("train", help="train the contrastive encoder"))
    p_score = sub.add_parser("score", help="score data against the training reference")
    common(p_score)
    p_score.add_argument("--model", default=None, help="model file override")
    p_score.add_argument("--data", default=None, help="score this CSV instead of the test split")
    p_base = sub.add_parser("baseline", help="fit and score a baseline detector")
    p_base.add_argument("which", help="one of: " + ", ".join(BASELINES))
    common(p_base)
    p_eval = sub.add_parser("eval", help="metrics, ROC exports, comparison table")
    common(p_eval)
    p_eval.add_argument("--scores", nargs="+", default=None, help="score CSV overrides")
    p_eval.add_argument("--labels", default=None, help="labels CSV override")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        if args.command == "gen-synth":
            cmd_gen_synth(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "score":
            cmd_score(
                cfg,
                model_path=Path(args.model) if args.model else None,
                data_path=Path(args.data) if args.data else None,
            )
        elif args.command == "baseline":
            cmd_baseline(cfg, args.which)
        elif args.command == "eval":
            cmd_eval(
                cfg,
                score_paths=[Path(p) for p in args.scores] if args.scores else None,
                labels_path=Path(args.labels) if args.labels else None,
            )
    except ConfigError as exc:
        print(f"fraudctl: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"fraudctl: data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"fraudctl: numeric failure: {exc}", file=sys.stderr)
        return 4
    except FraudctlError as exc:
        print(f"fraudctl: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
