"""Classifiers over sparse TF-IDF vectors, plus stratified splitting.

All three trainers are deterministic: the linear models run full-batch
gradient descent with Armijo backtracking from zero initialization, and
the tree isolates its randomness in per-node feature sampling driven by
one seed. That makes every reported number exactly reproducible.

Objectives (summed over samples, weights penalized, bias free):
  logistic:      sum_i -log softmax(x_i W + b)[y_i]  +  ||W||^2 / (2 s)
  squared hinge: sum_i max(0, 1 - y_i (x_i w + b))^2 +  ||w||^2 / (2 s)
where s is the regularization strength (higher s = weaker penalty).
"""

from __future__ import annotations

import json
import math
import random
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import (
    DataError,
    DegenerateLabelsError,
    DivergenceError,
    ShapeError,
    StratificationError,
)
from .features import SparseVector
from .labeling import EpidemicClass

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 80
GAIN_EPSILON = 1e-12


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    ratio: float
    seed: int


def stratified_split(
    labels: Sequence[EpidemicClass], ratio: float, seed: int
) -> DatasetSplit:
    """Per-class shuffle with the seed; first ceil(ratio * n_c) to train.

    Keeps every class's train fraction within one sample of the ratio.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio {ratio} outside (0, 1)")
    by_class: dict[EpidemicClass, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    for cls, members in by_class.items():
        if len(members) < 2:
            raise StratificationError(
                f"class {cls.label} has {len(members)} member(s); need at least 2"
            )
    rng = random.Random(seed)
    train: list[int] = []
    validation: list[int] = []
    for cls in sorted(by_class):
        members = list(by_class[cls])
        rng.shuffle(members)
        n_train = math.ceil(ratio * len(members))
        train.extend(members[:n_train])
        validation.extend(members[n_train:])
    return DatasetSplit(
        train=tuple(sorted(train)),
        validation=tuple(sorted(validation)),
        ratio=ratio,
        seed=seed,
    )


def to_csr(vectors: Sequence[SparseVector], dim: int | None = None) -> sparse.csr_matrix:
    """Stack sparse vectors into a CSR matrix, validating dimensions."""
    if dim is None:
        if not vectors:
            raise DataError("cannot infer dimension from an empty vector list")
        dim = vectors[0].dim
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for vec in vectors:
        if vec.dim != dim:
            raise ShapeError(f"vector dimension {vec.dim} != expected {dim}")
        for idx, value in vec.entries:
            indices.append(idx)
            data.append(value)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(len(vectors), dim),
    )


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under large scores."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def logistic_loss_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: sparse.csr_matrix,
    y_idx: np.ndarray,
    strength: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed multinomial cross-entropy + L2; returns (loss, gW, gb)."""
    n = X.shape[0]
    scores = X @ weights + bias
    row_max = scores.max(axis=1, keepdims=True)
    lse = row_max[:, 0] + np.log(np.exp(scores - row_max).sum(axis=1))
    loss = float((lse - scores[np.arange(n), y_idx]).sum())
    loss += 0.5 / strength * float((weights * weights).sum())
    probs = np.exp(scores - lse[:, None])
    probs[np.arange(n), y_idx] -= 1.0
    grad_w = np.asarray(X.T @ probs) + weights / strength
    grad_b = probs.sum(axis=0)
    return loss, grad_w, grad_b


def squared_hinge_loss_grad(
    w: np.ndarray,
    b: float,
    X: sparse.csr_matrix,
    y_pm: np.ndarray,
    strength: float,
) -> tuple[float, np.ndarray, float]:
    """Summed squared hinge + L2 for one binary problem (labels +-1)."""
    margins = X @ w + b
    slack = np.maximum(0.0, 1.0 - y_pm * margins)
    loss = float(slack @ slack) + 0.5 / strength * float(w @ w)
    coeff = -2.0 * slack * y_pm
    grad_w = np.asarray(X.T @ coeff) + w / strength
    grad_b = float(coeff.sum())
    return loss, grad_w, grad_b


def _descend(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    theta: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, list[float], int]:
    """Full-batch gradient descent with Armijo backtracking line search.

    The accepted step must satisfy f(theta - t g) <= f(theta) - c t |g|^2,
    so the recorded loss history is non-increasing by construction. Stops
    at max_iter, at gradient norm <= tol, or when no acceptable step
    exists (numerically converged).
    """
    loss, grad = value_and_grad(theta)
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite initial loss {loss}")
    history = [loss]
    step = 1.0
    iterations = 0
    for _ in range(max_iter):
        gnorm_sq = float(grad @ grad)
        if math.sqrt(gnorm_sq) <= tol:
            break
        step = min(step * 2.0, 1e6)
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            trial = theta - step * grad
            trial_loss, trial_grad = value_and_grad(trial)
            if math.isfinite(trial_loss) and trial_loss <= loss - ARMIJO_C * step * gnorm_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        theta, loss, grad = trial, trial_loss, trial_grad
        history.append(loss)
        iterations += 1
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}")
    return theta, history, iterations


@dataclass(frozen=True, slots=True)
class LinearHyperparams:
    strength: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-4
    seed: int = 0

    def as_dict(self) -> dict:
        return {
            "strength": self.strength, "max_iter": self.max_iter,
            "tol": self.tol, "seed": self.seed,
        }


@dataclass
class LinearModel:
    kind: str  # "logistic" or "svm"
    weights: np.ndarray  # (dim, n_classes)
    bias: np.ndarray  # (n_classes,)
    class_order: tuple[EpidemicClass, ...]
    hyperparams: LinearHyperparams
    dim: int
    n_iter: int = 0
    # one history per optimization run: a single run for the multinomial
    # objective, one per class for one-vs-rest
    loss_histories: tuple[tuple[float, ...], ...] = field(
        default=(), repr=False, compare=False)


def _class_setup(y: Sequence[EpidemicClass]) -> tuple[tuple[EpidemicClass, ...], np.ndarray]:
    order = tuple(sorted(set(y)))
    if len(order) < 2:
        raise DegenerateLabelsError(
            f"need at least 2 distinct classes, got {len(order)}"
        )
    index = {cls: i for i, cls in enumerate(order)}
    return order, np.array([index[label] for label in y], dtype=np.intp)


def _check_training_input(X: Sequence[SparseVector], y: Sequence[EpidemicClass]) -> None:
    if len(X) == 0 or len(X) != len(y):
        raise DataError(f"bad training input: {len(X)} vectors, {len(y)} labels")


def train_logistic(
    X: Sequence[SparseVector],
    y: Sequence[EpidemicClass],
    hyperparams: LinearHyperparams | None = None,
) -> LinearModel:
    """Multinomial (softmax) logistic regression, zero-initialized."""
    hp = hyperparams or LinearHyperparams()
    _check_training_input(X, y)
    class_order, y_idx = _class_setup(y)
    mat = to_csr(X)
    dim, n_classes = mat.shape[1], len(class_order)

    def packed(theta: np.ndarray) -> tuple[float, np.ndarray]:
        w = theta[: dim * n_classes].reshape(dim, n_classes)
        b = theta[dim * n_classes:]
        loss, gw, gb = logistic_loss_grad(w, b, mat, y_idx, hp.strength)
        return loss, np.concatenate([gw.ravel(), gb])

    theta0 = np.zeros(dim * n_classes + n_classes)
    theta, history, n_iter = _descend(packed, theta0, hp.max_iter, hp.tol)
    return LinearModel(
        kind="logistic",
        weights=theta[: dim * n_classes].reshape(dim, n_classes),
        bias=theta[dim * n_classes:],
        class_order=class_order,
        hyperparams=hp,
        dim=dim,
        n_iter=n_iter,
        loss_histories=(tuple(history),),
    )


def train_linear_svm(
    X: Sequence[SparseVector],
    y: Sequence[EpidemicClass],
    hyperparams: LinearHyperparams | None = None,
) -> LinearModel:
    """One-vs-rest squared-hinge linear SVM; prediction is argmax margin."""
    hp = hyperparams or LinearHyperparams()
    _check_training_input(X, y)
    class_order, y_idx = _class_setup(y)
    mat = to_csr(X)
    dim = mat.shape[1]
    weights = np.zeros((dim, len(class_order)))
    bias = np.zeros(len(class_order))
    histories: list[tuple[float, ...]] = []
    total_iter = 0
    for c in range(len(class_order)):
        y_pm = np.where(y_idx == c, 1.0, -1.0)

        def packed(theta: np.ndarray) -> tuple[float, np.ndarray]:
            loss, gw, gb = squared_hinge_loss_grad(
                theta[:dim], theta[dim], mat, y_pm, hp.strength
            )
            return loss, np.append(gw, gb)

        theta, history, n_iter = _descend(
            packed, np.zeros(dim + 1), hp.max_iter, hp.tol
        )
        weights[:, c] = theta[:dim]
        bias[c] = theta[dim]
        histories.append(tuple(history))
        total_iter += n_iter
    return LinearModel(
        kind="svm",
        weights=weights,
        bias=bias,
        class_order=class_order,
        hyperparams=hp,
        dim=dim,
        n_iter=total_iter,
        loss_histories=tuple(histories),
    )


@dataclass(frozen=True, slots=True)
class TreeHyperparams:
    max_depth: int = 150
    seed: int = 0
    criterion: str = "entropy"

    def as_dict(self) -> dict:
        return {
            "max_depth": self.max_depth, "seed": self.seed,
            "criterion": self.criterion,
        }


@dataclass(frozen=True, slots=True)
class TreeNode:
    """Internal node when leaf_class < 0, else a leaf."""

    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    leaf_class: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.leaf_class >= 0


@dataclass
class TreeModel:
    nodes: tuple[TreeNode, ...]
    class_order: tuple[EpidemicClass, ...]
    hyperparams: TreeHyperparams
    dim: int


def entropy_bits(counts: np.ndarray) -> float:
    """Shannon entropy in bits of a count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _row_entropy(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    p = counts / totals[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -terms.sum(axis=1)


def _column_values(
    X_csc: sparse.csc_matrix, feature: int, rows: np.ndarray
) -> np.ndarray:
    """Values of one feature for the given (sorted) sample rows; absent = 0."""
    start, end = X_csc.indptr[feature], X_csc.indptr[feature + 1]
    col_rows = X_csc.indices[start:end]
    col_vals = X_csc.data[start:end]
    values = np.zeros(len(rows))
    if len(col_rows):
        pos = np.searchsorted(rows, col_rows)
        ok = pos < len(rows)
        ok[ok] &= rows[pos[ok]] == col_rows[ok]
        values[pos[ok]] = col_vals[ok]
    return values


def _best_threshold(
    values: np.ndarray, y_node: np.ndarray, n_classes: int, parent_entropy: float
) -> tuple[float, float] | None:
    """Best (gain, threshold) for one feature, or None if unsplittable.

    Candidate thresholds are midpoints between consecutive distinct
    observed values. Ties keep the lowest threshold.
    """
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sy = y_node[order]
    cut = np.nonzero(sv[1:] != sv[:-1])[0]
    if cut.size == 0:
        return None
    n = len(values)
    one_hot = np.zeros((n, n_classes))
    one_hot[np.arange(n), sy] = 1.0
    cum = one_hot.cumsum(axis=0)
    left = cum[cut]
    right = cum[-1] - left
    n_left = (cut + 1).astype(np.float64)
    n_right = n - n_left
    child = (n_left * _row_entropy(left, n_left)
             + n_right * _row_entropy(right, n_right)) / n
    gains = parent_entropy - child
    best = int(np.argmax(gains))
    threshold = (sv[cut[best]] + sv[cut[best] + 1]) / 2.0
    return float(gains[best]), threshold


def train_decision_tree(
    X: Sequence[SparseVector],
    y: Sequence[EpidemicClass],
    hyperparams: TreeHyperparams | None = None,
) -> TreeModel:
    """Greedy entropy tree sampling floor(sqrt(dim)) features per node.

    Nodes stop at purity, at max_depth, or when no sampled split has
    positive information gain. Leaves take the majority class, ties to
    the lowest class index. Node ids are assigned in preorder (parent,
    left subtree, right subtree), which also fixes the feature-sampling
    sequence for a given seed.
    """
    hp = hyperparams or TreeHyperparams()
    _check_training_input(X, y)
    class_order, y_idx = _class_setup(y)
    mat = to_csr(X).tocsc()
    dim = mat.shape[1]
    n_classes = len(class_order)
    n_features = max(1, math.isqrt(dim))
    rng = random.Random(hp.seed)
    nodes: list[TreeNode] = []

    def build(rows: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(TreeNode())  # placeholder, replaced below
        counts = np.bincount(y_idx[rows], minlength=n_classes)
        majority = int(np.argmax(counts))
        parent_entropy = entropy_bits(counts)
        if depth >= hp.max_depth or parent_entropy == 0.0 or len(rows) < 2:
            nodes[node_id] = TreeNode(leaf_class=majority)
            return node_id
        candidates = sorted(rng.sample(range(dim), n_features))
        best_gain = 0.0
        best_feature = -1
        best_threshold = 0.0
        best_values: np.ndarray | None = None
        for feature in candidates:
            values = _column_values(mat, feature, rows)
            found = _best_threshold(values, y_idx[rows], n_classes, parent_entropy)
            if found is None:
                continue
            gain, threshold = found
            if gain > best_gain + GAIN_EPSILON:
                best_gain = gain
                best_feature = feature
                best_threshold = threshold
                best_values = values
        if best_feature < 0:
            nodes[node_id] = TreeNode(leaf_class=majority)
            return node_id
        mask = best_values <= best_threshold
        left_id = build(rows[mask], depth + 1)
        right_id = build(rows[~mask], depth + 1)
        nodes[node_id] = TreeNode(
            feature=best_feature, threshold=best_threshold,
            left=left_id, right=right_id,
        )
        return node_id

    build(np.arange(len(X)), 0)
    return TreeModel(
        nodes=tuple(nodes), class_order=class_order, hyperparams=hp, dim=dim
    )


def _argmax_rows(scores: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum: ties break to the lowest
    # class index by construction.
    return scores.argmax(axis=1)


def predict(
    model: LinearModel | TreeModel, X: Sequence[SparseVector]
) -> list[EpidemicClass]:
    """Argmax of class scores (linear) or routed leaf class (tree)."""
    if isinstance(model, TreeModel):
        return _predict_tree(model, X)
    mat = to_csr(X, model.dim)
    scores = mat @ model.weights + model.bias
    return [model.class_order[i] for i in _argmax_rows(scores)]


def predict_proba(model: LinearModel, X: Sequence[SparseVector]) -> np.ndarray:
    if model.kind != "logistic":
        raise DataError(f"probabilities undefined for model kind {model.kind!r}")
    mat = to_csr(X, model.dim)
    return softmax(np.asarray(mat @ model.weights + model.bias))


def _predict_tree(model: TreeModel, X: Sequence[SparseVector]) -> list[EpidemicClass]:
    out = []
    for vec in X:
        if vec.dim != model.dim:
            raise ShapeError(f"vector dimension {vec.dim} != model {model.dim}")
        values = dict(vec.entries)
        node = model.nodes[0]
        while not node.is_leaf:
            x = values.get(node.feature, 0.0)
            node = model.nodes[node.left if x <= node.threshold else node.right]
        out.append(model.class_order[node.leaf_class])
    return out


MODEL_FORMAT_VERSION = 1


def save_model(
    model: LinearModel | TreeModel, path: str | Path, tfidf_checksum: str
) -> None:
    """Persist a trained model with the feature-model checksum it expects."""
    doc: dict = {
        "format_version": MODEL_FORMAT_VERSION,
        "classes": [c.label for c in model.class_order],
        "dim": model.dim,
        "hyperparams": model.hyperparams.as_dict(),
        "tfidf_sha256": tfidf_checksum,
    }
    if isinstance(model, TreeModel):
        doc["kind"] = "tree"
        doc["nodes"] = [
            {"leaf": n.leaf_class} if n.is_leaf else {
                "feature": n.feature, "threshold": n.threshold,
                "left": n.left, "right": n.right,
            }
            for n in model.nodes
        ]
    else:
        doc["kind"] = model.kind
        doc["bias"] = model.bias.tolist()
        rows = []
        for c in range(len(model.class_order)):
            col = model.weights[:, c]
            nz = np.nonzero(col)[0]
            rows.append({"indices": nz.tolist(), "values": col[nz].tolist()})
        doc["weights"] = rows
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> tuple[LinearModel | TreeModel, str]:
    """Load a persisted model; returns (model, expected tfidf checksum)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version")
    class_order = tuple(EpidemicClass.from_label(t) for t in doc["classes"])
    dim = doc["dim"]
    checksum = doc["tfidf_sha256"]
    if doc["kind"] == "tree":
        hp = TreeHyperparams(**doc["hyperparams"])
        nodes = tuple(
            TreeNode(leaf_class=n["leaf"]) if "leaf" in n else TreeNode(
                feature=n["feature"], threshold=n["threshold"],
                left=n["left"], right=n["right"],
            )
            for n in doc["nodes"]
        )
        return TreeModel(
            nodes=nodes, class_order=class_order, hyperparams=hp, dim=dim
        ), checksum
    hp = LinearHyperparams(**doc["hyperparams"])
    weights = np.zeros((dim, len(class_order)))
    for c, row in enumerate(doc["weights"]):
        weights[row["indices"], c] = row["values"]
    return LinearModel(
        kind=doc["kind"], weights=weights, bias=np.array(doc["bias"]),
        class_order=class_order, hyperparams=hp, dim=dim,
    ), checksum
