"""Random-forest classifier over the bid screens, built from scratch.

Binary CART trees with Gini impurity, grown to purity on bootstrap resamples,
with a random feature subset (``mtry``) drawn at every split. Probabilities
are the fraction of trees whose leaf majority votes class 1, so every
prediction is a multiple of 1/n_trees. Rows may carry missing features
(NaN): during growth they follow the branch holding the majority of the
node's non-missing rows, and prediction routes them the same way.

Internally the feature columns are rearranged into sorted-name order before
any randomness is consumed, which makes fitted models independent of the
column order the caller happened to use.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

DEFAULT_FEATURES = ("SPD", "CV", "RD", "RDNORM", "DIFFP")
MODEL_FORMAT = "tetravale-forest"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    mtry: int | None = None  # None: floor(sqrt(n_features))
    min_node_size: int = 1

    def validate(self, n_features: int) -> int:
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.min_node_size < 1:
            raise ValidationError("min_node_size must be >= 1")
        mtry = self.mtry if self.mtry is not None else max(1, int(math.isqrt(n_features)))
        if not 1 <= mtry <= n_features:
            raise ValidationError(f"mtry must be in 1..{n_features}, got {mtry}")
        return mtry


@dataclass
class LabeledDataset:
    features: np.ndarray  # shape (n, p), NaN marks missing
    labels: np.ndarray  # shape (n,), values in {0, 1}
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.feature_names = tuple(self.feature_names)
        if self.features.ndim != 2 or len(self.labels) != len(self.features):
            raise ValidationError("features must be (n, p) with one label per row")
        if self.features.shape[1] != len(self.feature_names):
            raise ValidationError("one feature name per column required")
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise ValidationError(f"labels must be 0 or 1, found {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.labels)


def train_test_split(
    data: LabeledDataset, train_fraction: float, seed
) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint cover of the rows; train gets floor(fraction * N) of them."""
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must be strictly between 0 and 1")
    n = len(data)
    if n == 0:
        raise ValidationError("cannot split an empty dataset")
    order = np.random.default_rng(seed).permutation(n)
    cut = int(train_fraction * n)
    train_idx, test_idx = order[:cut], order[cut:]
    return (
        LabeledDataset(data.features[train_idx], data.labels[train_idx], data.feature_names),
        LabeledDataset(data.features[test_idx], data.labels[test_idx], data.feature_names),
    )


# A tree is a dict-of-arrays structure kept simple on purpose: children
# indices, split feature (-1 marks a leaf), threshold, where missing rows go,
# and the leaf's majority vote.


@dataclass
class DecisionTree:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    missing_left: list[bool] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    vote: list[int] = field(default_factory=list)

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.missing_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.vote.append(0)
        return len(self.feature) - 1

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator, mtry: int, min_node_size: int) -> "DecisionTree":
        self._grow(X, y, np.arange(len(y)), rng, mtry, min_node_size)
        return self

    def _grow(self, X, y, idx, rng, mtry, min_node_size) -> int:
        node = self._new_node()
        labels = y[idx]
        ones = int(labels.sum())
        # majority vote; exact ties go to class 0
        self.vote[node] = 1 if 2 * ones > len(labels) else 0
        if ones in (0, len(labels)) or len(labels) <= min_node_size:
            return node
        split = _best_split(X, y, idx, rng, mtry)
        if split is None:
            return node
        feat, thr, missing_left = split
        values = X[idx, feat]
        missing = np.isnan(values)
        go_left = values <= thr
        go_left[missing] = missing_left
        left_idx, right_idx = idx[go_left], idx[~go_left]
        self.feature[node] = feat
        self.threshold[node] = thr
        self.missing_left[node] = missing_left
        self.left[node] = self._grow(X, y, left_idx, rng, mtry, min_node_size)
        self.right[node] = self._grow(X, y, right_idx, rng, mtry, min_node_size)
        return node

    def _sealed(self):
        arrays = getattr(self, "_arrays", None)
        if arrays is None:
            arrays = (
                np.array(self.feature, dtype=int),
                np.array(self.threshold, dtype=float),
                np.array(self.missing_left, dtype=bool),
                np.array(self.left, dtype=int),
                np.array(self.right, dtype=int),
                np.array(self.vote, dtype=int),
            )
            self._arrays = arrays
        return arrays

    def predict_votes(self, X: np.ndarray) -> np.ndarray:
        """Route every row to its leaf at once, level by level."""
        feature, threshold, missing_left, left, right, vote = self._sealed()
        node = np.zeros(len(X), dtype=int)
        while True:
            feat = feature[node]
            active = np.nonzero(feat >= 0)[0]
            if len(active) == 0:
                return vote[node]
            at = node[active]
            values = X[active, feat[active]]
            go_left = values <= threshold[at]
            missing = np.isnan(values)
            go_left[missing] = missing_left[at][missing]
            node[active] = np.where(go_left, left[at], right[at])

    def root_split(self) -> tuple[int, float] | None:
        if not self.feature or self.feature[0] < 0:
            return None
        return self.feature[0], self.threshold[0]


def _gini_pair(n1_left, n_left, n1_right, n_right) -> np.ndarray:
    """Weighted Gini of a binary split, vectorized over candidate cuts."""
    with np.errstate(invalid="ignore", divide="ignore"):
        p_left = np.where(n_left > 0, n1_left / n_left, 0.0)
        p_right = np.where(n_right > 0, n1_right / n_right, 0.0)
    g_left = 2 * p_left * (1 - p_left)
    g_right = 2 * p_right * (1 - p_right)
    total = n_left + n_right
    return (n_left * g_left + n_right * g_right) / total


def _best_split(X, y, idx, rng, mtry):
    """Lowest-Gini (feature, midpoint threshold, missing branch) over mtry features."""
    n_features = X.shape[1]
    chosen = rng.choice(n_features, size=mtry, replace=False)
    best = None
    best_gini = np.inf
    labels = y[idx]
    n_missing_total = None
    for feat in chosen:
        values = X[idx, feat]
        missing = np.isnan(values)
        present = ~missing
        v = values[present]
        if len(v) < 2:
            continue
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = labels[present][order]
        boundaries = np.nonzero(sv[:-1] < sv[1:])[0]
        if len(boundaries) == 0:
            continue
        ones_cum = np.cumsum(sy)
        n_left = boundaries + 1.0
        n_right = len(v) - n_left
        ones_left = ones_cum[boundaries].astype(float)
        ones_right = ones_cum[-1] - ones_left
        # missing rows join whichever side holds more non-missing rows
        n_miss = int(missing.sum())
        if n_miss:
            ones_miss = int(labels[missing].sum())
            to_left = n_left >= n_right
            n_left = n_left + np.where(to_left, n_miss, 0)
            ones_left = ones_left + np.where(to_left, ones_miss, 0)
            n_right = n_right + np.where(to_left, 0, n_miss)
            ones_right = ones_right + np.where(to_left, 0, ones_miss)
        else:
            to_left = None
        ginis = _gini_pair(ones_left, n_left, ones_right, n_right)
        pick = int(np.argmin(ginis))
        if ginis[pick] < best_gini:
            best_gini = ginis[pick]
            cut = boundaries[pick]
            threshold = (sv[cut] + sv[cut + 1]) / 2
            missing_left = bool(to_left[pick]) if n_miss else bool(cut + 1 >= len(v) - cut - 1)
            best = (int(feat), float(threshold), missing_left)
    return best


@dataclass
class DecisionForest:
    trees: list[DecisionTree]
    feature_names: tuple[str, ...]  # training column order; trees index the sorted order
    params: ForestParams
    mtry: int
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, features, feature_names=None):
        """Fraction of trees voting class 1; a single row yields a float."""
        X, single = self._arrange(features, feature_names)
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += tree.predict_votes(X)
        probs = votes / self.n_trees
        return float(probs[0]) if single else probs

    def _arrange(self, features, feature_names):
        """Reorder input columns to the sorted order the trees were grown on."""
        X = np.asarray(features, dtype=float)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValidationError(
                f"expected {len(self.feature_names)} features per row, got shape {X.shape}"
            )
        names = tuple(feature_names) if feature_names is not None else self.feature_names
        canonical = tuple(sorted(self.feature_names))
        if sorted(names) != list(canonical):
            raise ValidationError(f"model was trained on features {self.feature_names}")
        if names != canonical:
            X = X[:, [names.index(f) for f in canonical]]
        return X, single

    def to_json(self) -> str:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "feature_names": list(self.feature_names),
            "params": {
                "n_trees": self.params.n_trees,
                "mtry": self.mtry,
                "min_node_size": self.params.min_node_size,
            },
            "seed": self.seed,
            "trees": [
                {
                    "feature": t.feature,
                    "threshold": t.threshold,
                    "missing_left": t.missing_left,
                    "left": t.left,
                    "right": t.right,
                    "vote": t.vote,
                }
                for t in self.trees
            ],
        }
        return json.dumps(payload, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DecisionForest":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"not a forest model file: {exc}") from exc
        if payload.get("format") != MODEL_FORMAT:
            raise ValidationError(f"unknown model format: {payload.get('format')!r}")
        if payload.get("version") != MODEL_VERSION:
            raise ValidationError(f"unsupported model version: {payload.get('version')!r}")
        trees = [
            DecisionTree(
                feature=t["feature"],
                threshold=t["threshold"],
                missing_left=t["missing_left"],
                left=t["left"],
                right=t["right"],
                vote=t["vote"],
            )
            for t in payload["trees"]
        ]
        params = ForestParams(
            n_trees=payload["params"]["n_trees"],
            mtry=payload["params"]["mtry"],
            min_node_size=payload["params"]["min_node_size"],
        )
        return cls(
            trees=trees,
            feature_names=tuple(payload["feature_names"]),
            params=params,
            mtry=payload["params"]["mtry"],
            seed=payload["seed"],
        )


def fit(train: LabeledDataset, params: ForestParams = ForestParams(), seed=0) -> DecisionForest:
    """Grow the ensemble: one bootstrap resample and one tree per member."""
    if len(train) == 0:
        raise ValidationError("cannot fit on an empty dataset")
    mtry = params.validate(train.features.shape[1])
    classes = set(np.unique(train.labels))
    if len(classes) == 1:
        warnings.warn(
            f"training labels contain a single class ({classes.pop()}); "
            "every prediction will be that class",
            stacklevel=2,
        )
    # Trees are grown on name-sorted columns so a column permutation of the
    # same data yields the same ensemble; the original order is kept for
    # arranging prediction input.
    order = np.argsort(train.feature_names)
    X = train.features[:, order]
    y = train.labels
    n = len(y)
    trees = []
    for seq in np.random.SeedSequence(seed).spawn(params.n_trees):
        rng = np.random.default_rng(seq)
        sample = rng.integers(0, n, size=n)
        trees.append(
            DecisionTree().fit(X[sample], y[sample], rng, mtry, params.min_node_size)
        )
    return DecisionForest(
        trees=trees, feature_names=train.feature_names, params=params, mtry=mtry, seed=seed
    )


@dataclass(frozen=True)
class ClassificationResult:
    probabilities: tuple[float, ...]
    labels: tuple[int, ...]  # 1 = suspicious
    threshold: float


def classify(forest: DecisionForest, features, threshold: float = 0.5, feature_names=None) -> ClassificationResult:
    """Label rows suspicious wherever the cartel probability meets the threshold."""
    if not 0 <= threshold <= 1:
        raise ValidationError(f"threshold must be in [0, 1], got {threshold}")
    probs = np.atleast_1d(forest.predict_proba(features, feature_names))
    labels = (probs >= threshold).astype(int)
    return ClassificationResult(
        probabilities=tuple(float(p) for p in probs),
        labels=tuple(int(v) for v in labels),
        threshold=threshold,
    )


def accuracy(predicted, truth) -> float:
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise ValidationError(f"length mismatch: {len(predicted)} predictions vs {len(truth)} truths")
    return sum(p == t for p, t in zip(predicted, truth)) / len(truth)


def confusion_matrix(predicted, truth) -> dict[str, int]:
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise ValidationError(f"length mismatch: {len(predicted)} predictions vs {len(truth)} truths")
    pairs = list(zip(predicted, truth))
    return {
        "tp": sum(p == 1 and t == 1 for p, t in pairs),
        "fp": sum(p == 1 and t == 0 for p, t in pairs),
        "fn": sum(p == 0 and t == 1 for p, t in pairs),
        "tn": sum(p == 0 and t == 0 for p, t in pairs),
    }


def load_training_csv(text: str) -> LabeledDataset:
    """Read a labeled screens CSV: a `cartel` column plus the five screens.

    Accepts ',' or ';' delimiters (sniffed from the header line); extra
    columns are ignored; empty/NA screen cells become missing values.
    Non-binary labels are rejected with their row numbers.
    """
    lines = text.strip().splitlines()
    if not lines:
        raise ValidationError("empty training CSV")
    delimiter = ";" if lines[0].count(";") > lines[0].count(",") else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    fields = [f.strip() for f in reader.fieldnames or []]
    missing_cols = [c for c in ("cartel", *DEFAULT_FEATURES) if c not in fields]
    if missing_cols:
        raise ValidationError(f"training CSV lacks columns: {', '.join(missing_cols)}")
    rows, labels, bad_rows = [], [], []
    for line_no, record in enumerate(reader, start=2):
        raw_label = (record.get("cartel") or "").strip()
        if raw_label not in ("0", "1"):
            bad_rows.append(f"row {line_no}: cartel={raw_label!r}")
            continue
        labels.append(int(raw_label))
        rows.append(
            [_parse_feature(record.get(name), name, line_no) for name in DEFAULT_FEATURES]
        )
    if bad_rows:
        raise ValidationError("non-binary cartel labels: " + "; ".join(bad_rows))
    if not rows:
        raise ValidationError("training CSV holds no data rows")
    return LabeledDataset(np.array(rows, dtype=float), np.array(labels), DEFAULT_FEATURES)


def _parse_feature(raw: str | None, name: str, line_no: int) -> float:
    text = (raw or "").strip()
    if text in ("", "NA", "NaN", "nan"):
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"row {line_no}: column {name} is not numeric: {text!r}") from None


# Synthetic two-cluster screens for demos and the accuracy gate. The
# collusive cluster mimics a close pair of low bids with the covers parked
# far above: tiny DIFFP/RD/RDNORM and low CV against a high SPD. The
# competitive cluster spaces bids roughly evenly.
_CLUSTERS = {
    1: {"SPD": (0.30, 0.08), "CV": (0.02, 0.01), "RD": (0.40, 0.25), "RDNORM": (0.25, 0.15), "DIFFP": (0.006, 0.004)},
    0: {"SPD": (0.16, 0.06), "CV": (0.10, 0.03), "RD": (1.40, 0.50), "RDNORM": (1.10, 0.35), "DIFFP": (0.05, 0.02)},
}


def synthetic_training_data(n_rows: int, seed) -> LabeledDataset:
    """Draw labeled screen vectors from the two documented Gaussian clusters."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n_rows)
    columns = []
    for name in DEFAULT_FEATURES:
        mean = np.array([_CLUSTERS[int(v)][name][0] for v in labels])
        sd = np.array([_CLUSTERS[int(v)][name][1] for v in labels])
        columns.append(np.abs(rng.normal(mean, sd)))
    return LabeledDataset(np.column_stack(columns), labels, DEFAULT_FEATURES)
