"""Data ingestion, standardization, synthetic data generation, and splitting.

Features flow through the pipeline as plain float64 (N, D) arrays. Labels,
when present, travel as a parallel int vector and are consumed only by the
evaluation side; no training function in this package accepts them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LABEL = "label"
_ROLES = (NUMERIC, CATEGORICAL, LABEL)


@dataclass
class RawTable:
    """A parsed transaction table: numeric matrix with categoricals one-hot expanded.

    Attributes:
        features: (N, D) float64 matrix, one row per transaction.
        feature_names: column names after one-hot expansion ("col=value").
        labels: optional (N,) int vector with 0 = normal, 1 = fraud. Used
            only for evaluation, never for training.
        categories: observed category values per categorical column, in the
            encoding order. Pass back into load_csv to encode new files
            consistently.
    """

    features: np.ndarray
    feature_names: list[str]
    labels: np.ndarray | None = None
    categories: dict[str, list[str]] = field(default_factory=dict)


def load_csv(
    path: str | Path,
    schema: dict[str, str],
    categories: dict[str, list[str]] | None = None,
) -> RawTable:
    """Load a headered CSV into a RawTable.

    Args:
        path: CSV file with a header row, comma separators, '.' decimals.
        schema: column name -> role, role in {"numeric", "categorical", "label"}.
            At most one label column; label values must be 0 or 1.
        categories: optional fixed category sets (from a previous load). When
            given, an unseen category value is an error; when omitted, the
            categories of each categorical column are learned from this file
            in sorted order.

    Missing values are not supported: an empty cell is an error.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    for col, role in schema.items():
        if role not in _ROLES:
            raise ConfigError(f"unknown column role {role!r} for column {col!r}")
    label_cols = [c for c, r in schema.items() if r == LABEL]
    if len(label_cols) > 1:
        raise ConfigError(f"more than one label column declared: {label_cols}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = list(reader)

    for col in header:
        if col not in schema:
            raise ConfigError(f"{path}: column {col!r} not declared in schema")
    for col in schema:
        if col not in header:
            raise DataError(f"{path}: declared column {col!r} missing from header")

    n_cols = len(header)
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise DataError(
                f"{path}: row arity mismatch at data row {i + 1}: "
                f"expected {n_cols} fields, got {len(row)}"
            )

    # Column-wise parse, preserving header order.
    numeric_data: dict[str, np.ndarray] = {}
    cat_values: dict[str, list[str]] = {}
    labels: np.ndarray | None = None
    for j, col in enumerate(header):
        raw = [row[j].strip() for row in rows]
        role = schema[col]
        if role == NUMERIC:
            vals = np.empty(len(raw))
            for i, cell in enumerate(raw):
                try:
                    vals[i] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} in numeric "
                        f"column {col!r}, data row {i + 1}"
                    ) from None
            if not np.all(np.isfinite(vals)):
                raise DataError(f"{path}: non-finite value in column {col!r}")
            numeric_data[col] = vals
        elif role == CATEGORICAL:
            if any(cell == "" for cell in raw):
                raise DataError(f"{path}: empty value in categorical column {col!r}")
            cat_values[col] = raw
        else:
            lab = np.empty(len(raw), dtype=np.int64)
            for i, cell in enumerate(raw):
                if cell not in ("0", "1"):
                    raise DataError(
                        f"{path}: label value {cell!r} at data row {i + 1} "
                        "is not 0 or 1"
                    )
                lab[i] = int(cell)
            labels = lab

    out_categories: dict[str, list[str]] = {}
    columns: list[np.ndarray] = []
    names: list[str] = []
    for col in header:
        role = schema[col]
        if role == NUMERIC:
            columns.append(numeric_data[col])
            names.append(col)
        elif role == CATEGORICAL:
            raw = cat_values[col]
            if categories is not None and col in categories:
                cats = list(categories[col])
                unseen = sorted(set(raw) - set(cats))
                if unseen:
                    raise DataError(
                        f"{path}: unseen categories {unseen} in column {col!r}"
                    )
            else:
                cats = sorted(set(raw))
            out_categories[col] = cats
            index = {c: k for k, c in enumerate(cats)}
            onehot = np.zeros((len(raw), len(cats)))
            for i, cell in enumerate(raw):
                onehot[i, index[cell]] = 1.0
            for k, cat in enumerate(cats):
                columns.append(onehot[:, k])
                names.append(f"{col}={cat}")

    if columns:
        features = np.column_stack(columns) if rows else np.empty((0, len(names)))
    else:
        features = np.empty((len(rows), 0))
    return RawTable(
        features=features, feature_names=names, labels=labels, categories=out_categories
    )


@dataclass
class StandardizationParams:
    """Per-feature centering/scaling parameters for retained (non-constant) features.

    means[i] and stds[i] describe the retained feature feature_names[i];
    retained_indices[i] is its column position in the original matrix.
    Constant input columns are dropped and listed in dropped_features.
    """

    feature_names: list[str]
    means: np.ndarray
    stds: np.ndarray
    dropped_features: list[str]
    retained_indices: list[int]

    @property
    def n_original(self) -> int:
        return len(self.feature_names) + len(self.dropped_features)

    def to_json(self) -> str:
        return json.dumps(
            {
                "feature_names": self.feature_names,
                "means": [float(m) for m in self.means],
                "stds": [float(s) for s in self.stds],
                "dropped_features": self.dropped_features,
                "retained_indices": self.retained_indices,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "StandardizationParams":
        obj = json.loads(text)
        return cls(
            feature_names=list(obj["feature_names"]),
            means=np.asarray(obj["means"], dtype=float),
            stds=np.asarray(obj["stds"], dtype=float),
            dropped_features=list(obj["dropped_features"]),
            retained_indices=[int(i) for i in obj["retained_indices"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "StandardizationParams":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def fit_standardizer(
    table: np.ndarray, feature_names: list[str] | None = None
) -> StandardizationParams:
    """Fit per-column mean and population standard deviation.

    Constant columns (max equals min) are dropped and recorded by name.
    The population (1/N) form is used so that the fitting set's transformed
    variance is exactly 1.
    """
    X = _as_matrix(table)
    n, d = X.shape
    if n < 2:
        raise DataError(f"need at least 2 rows to fit a standardizer, got {n}")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(d)]
    if len(feature_names) != d:
        raise ConfigError(
            f"{len(feature_names)} feature names for {d} columns"
        )

    constant = np.ptp(X, axis=0) == 0.0
    if constant.all():
        raise DataError("all features are constant; nothing to standardize")
    retained = [j for j in range(d) if not constant[j]]
    dropped = [feature_names[j] for j in range(d) if constant[j]]
    sub = X[:, retained]
    return StandardizationParams(
        feature_names=[feature_names[j] for j in retained],
        means=sub.mean(axis=0),
        stds=sub.std(axis=0),  # population form, ddof=0
        dropped_features=dropped,
        retained_indices=retained,
    )


def transform(table: np.ndarray, params: StandardizationParams) -> np.ndarray:
    """Standardize a matrix laid out like the fitting data: (x - mean) / std.

    Dropped (constant-at-fit-time) columns are removed from the output.
    """
    X = _as_matrix(table)
    if X.shape[1] != params.n_original:
        raise DataError(
            f"dimension mismatch: matrix has {X.shape[1]} columns, "
            f"standardizer was fit on {params.n_original}"
        )
    return (X[:, params.retained_indices] - params.means) / params.stds


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic transaction dataset: a correlated Gaussian mixture plus fraud clusters.

    Normal samples come from a mixture of n_normal_modes Gaussian components
    sharing a factor-structured covariance: n_latent correlated directions of
    standard deviation factor_scale plus unit ambient noise, mimicking the
    correlated feature groups of real transaction tables. Mode centers sit at
    +-normal_spread per latent factor (a single mode sits at the origin).

    Each fraud mode anchors to one normal mode and displaces its center by
    +-fraud_shift per feature (random sign pattern per mode), breaking the
    normal correlation structure; the cluster's spread is the normal
    covariance scaled by fraud_scale. fraud_shift=0 with fraud_scale=1
    therefore reproduces the anchored normal component exactly. The seed
    fully determines the output, including the final row shuffle.
    """

    n_normal: int = 2000
    n_fraud: int = 200
    n_features: int = 10
    fraud_shift: float = 1.6
    fraud_scale: float = 0.4
    n_fraud_modes: int = 2
    n_latent: int = 3
    factor_scale: float = 3.0
    n_normal_modes: int = 1
    normal_spread: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_fraud < 1:
            raise ConfigError("fraud count must be >= 1")
        if self.n_normal < 1:
            raise ConfigError("normal count must be >= 1")
        if self.n_fraud >= self.n_normal:
            raise ConfigError(
                f"fraud must be the minority class: n_fraud={self.n_fraud} "
                f">= n_normal={self.n_normal}"
            )
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        if self.n_fraud_modes < 1:
            raise ConfigError("n_fraud_modes must be >= 1")
        if not 1 <= self.n_latent <= self.n_features:
            raise ConfigError(
                f"n_latent must be in [1, n_features], got {self.n_latent}"
            )
        if self.factor_scale < 0:
            raise ConfigError("factor_scale must be >= 0")
        if self.n_normal_modes < 1:
            raise ConfigError("n_normal_modes must be >= 1")
        if self.normal_spread < 0:
            raise ConfigError("normal_spread must be >= 0")
        if self.fraud_shift < 0:
            raise ConfigError("fraud_shift must be >= 0")
        if self.fraud_scale <= 0:
            raise ConfigError("fraud_scale must be > 0")


def _even_counts(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if m < extra else 0) for m in range(parts)]


def generate_synthetic(cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Generate (features, labels) per the config; bit-reproducible per seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    d, r = cfg.n_features, cfg.n_latent

    basis, _ = np.linalg.qr(rng.standard_normal((d, r)))
    loadings = cfg.factor_scale * basis
    if cfg.n_normal_modes == 1:
        centers_z = np.zeros((1, r))
    else:
        centers_z = cfg.normal_spread * rng.choice(
            [-1.0, 1.0], size=(cfg.n_normal_modes, r)
        )

    normal_blocks = [
        (centers_z[m] + rng.standard_normal((count, r))) @ loadings.T
        + rng.standard_normal((count, d))
        for m, count in enumerate(_even_counts(cfg.n_normal, cfg.n_normal_modes))
    ]

    fraud_blocks = []
    for count in _even_counts(cfg.n_fraud, cfg.n_fraud_modes):
        if cfg.n_normal_modes == 1:
            anchor_z = centers_z[0]  # nothing to choose, draw no randomness
        else:
            anchor_z = centers_z[rng.integers(cfg.n_normal_modes)]
        anchor = anchor_z @ loadings.T
        signs = rng.choice([-1.0, 1.0], size=d)
        center = anchor + cfg.fraud_shift * signs
        fraud_blocks.append(
            center
            + cfg.fraud_scale
            * (rng.standard_normal((count, r)) @ loadings.T
               + rng.standard_normal((count, d)))
        )

    X = np.vstack([b for b in normal_blocks + fraud_blocks if len(b)])
    y = np.concatenate(
        [np.zeros(cfg.n_normal, dtype=np.int64), np.ones(cfg.n_fraud, dtype=np.int64)]
    )
    perm = rng.permutation(len(X))
    return X[perm], y[perm]


def split_indices(n: int, train_frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive train/test index split; indices sorted ascending."""
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must be in (0, 1), got {train_frac}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(train_frac * n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(
    table: np.ndarray,
    labels: np.ndarray | None,
    train_frac: float,
    seed: int,
) -> tuple[tuple[np.ndarray, np.ndarray | None], tuple[np.ndarray, np.ndarray | None]]:
    """Split rows (and any parallel labels) into (train, test) deterministically."""
    X = _as_matrix(table)
    tr, te = split_indices(len(X), train_frac, seed)
    y_tr = labels[tr] if labels is not None else None
    y_te = labels[te] if labels is not None else None
    return (X[tr], y_tr), (X[te], y_te)


def write_features_csv(path: str | Path, X: np.ndarray, names: list[str]) -> None:
    """Write a feature matrix as CSV with full round-trip float precision."""
    X = _as_matrix(X)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in X:
            writer.writerow([repr(float(v)) for v in row])


def write_labels_csv(path: str | Path, labels: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for v in labels:
            writer.writerow([int(v)])


def load_labels_csv(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such labels file: {path}")
    table = load_csv(path, {"label": LABEL})
    assert table.labels is not None
    return table.labels


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("matrix contains NaN or Inf entries")
    return X
