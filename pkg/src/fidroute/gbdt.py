"""Gradient-boosted regression trees, built from scratch on numpy.

Squared-error objective: gradient = prediction - label, hessian = 1. Each
round fits one depth-limited tree to the residuals with exact greedy split
search over all features and midpoint thresholds between consecutive distinct
sorted values. Split gain is (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam))/2,
accepted only if it exceeds min_gain and both children hold at least
min_child_weight samples; leaf weight is -G/(H+lam).

Rows are put into a canonical lexicographic order before training so the
fitted model is exactly invariant under permutations of the input rows.
Ties in split search break toward the lowest feature index, then the lowest
threshold.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ValidationError

MODEL_FORMAT_VERSION = 1

DEFAULT_PARAMS = {
    "rounds": 200,
    "max_depth": 6,
    "eta": 0.1,
    "lambda_reg": 1.0,
    "min_child_weight": 1,
    "min_gain": 0.0,
}


@dataclass
class TreeNode:
    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None


@dataclass
class GbdtModel:
    base_score: float
    trees: list[TreeNode]
    eta: float
    feature_width: int
    params: dict = field(default_factory=dict)
    training_mse: list[float] = field(default_factory=list)


def train(X, y, params: dict | None = None) -> GbdtModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"need matching 2-D features and 1-D labels, got {X.shape} / {y.shape}")
    if X.shape[0] < 2:
        raise ValidationError(f"need at least 2 training rows, got {X.shape[0]}")
    if np.isnan(X).any() or np.isnan(y).any():
        raise ValidationError("NaN in features or labels")
    p = dict(DEFAULT_PARAMS)
    p.update(params or {})
    if not 0.0 < p["eta"] <= 1.0:
        raise ValidationError(f"eta must be in (0,1], got {p['eta']}")
    if p["rounds"] < 0 or p["max_depth"] < 1:
        raise ValidationError("rounds must be >= 0 and max_depth >= 1")

    # canonical row order: permuting the input rows must not change the model
    order = np.lexsort(np.vstack([y[None, :], X.T[::-1]]))
    Xc, yc = X[order], y[order]
    n = Xc.shape[0]

    base = float(np.mean(yc))
    pred = np.full(n, base)
    trees: list[TreeNode] = []
    mse_per_round: list[float] = []
    for _ in range(p["rounds"]):
        grad = pred - yc
        root, leaf_pred = _build_tree(Xc, grad, p)
        trees.append(root)
        pred = pred + p["eta"] * leaf_pred
        mse_per_round.append(float(np.mean((pred - yc) ** 2)))
    return GbdtModel(
        base_score=base,
        trees=trees,
        eta=p["eta"],
        feature_width=X.shape[1],
        params=p,
        training_mse=mse_per_round,
    )


def _build_tree(X: np.ndarray, grad: np.ndarray, p: dict) -> tuple[TreeNode, np.ndarray]:
    leaf_pred = np.empty(X.shape[0])

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        g = grad[idx]
        split = _best_split(X[idx], g, p) if depth < p["max_depth"] else None
        if split is None:
            w = -float(g.sum()) / (len(idx) + p["lambda_reg"])
            leaf_pred[idx] = w
            return TreeNode(weight=w)
        f, thr = split
        left_mask = X[idx, f] < thr
        node = TreeNode(feature_index=f, threshold=thr)
        node.left = build(idx[left_mask], depth + 1)
        node.right = build(idx[~left_mask], depth + 1)
        return node

    root = build(np.arange(X.shape[0]), 0)
    return root, leaf_pred


def _best_split(Xn: np.ndarray, g: np.ndarray, p: dict) -> tuple[int, float] | None:
    n = Xn.shape[0]
    mcw = p["min_child_weight"]
    if n < 2 * mcw or n < 2:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    gs = np.cumsum(g[order], axis=0)
    lam = p["lambda_reg"]

    gl = gs[:-1]                                # prefix sums: split after row i
    hl = np.arange(1, n, dtype=np.float64)[:, None]
    gtot = gs[-1]
    gain = 0.5 * (gl**2 / (hl + lam) + (gtot - gl) ** 2 / (n - hl + lam) - gtot**2 / (n + lam))
    valid = xs[:-1] < xs[1:]
    if mcw > 1:
        counts = hl[:, 0]
        valid &= ((counts >= mcw) & (n - counts >= mcw))[:, None]
    gain = np.where(valid, gain, -np.inf)

    # first max over (feature, position) gives the lowest feature index, then
    # the lowest threshold
    flat = np.ravel(gain.T)
    best = int(np.argmax(flat))
    best_gain = flat[best]
    if not best_gain > p["min_gain"]:
        return None
    f, pos = divmod(best, n - 1)
    thr = float((xs[pos, f] + xs[pos + 1, f]) / 2.0)
    return f, thr


def _tree_predict(node: TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.weight
        return
    mask = X[idx, node.feature_index] < node.threshold
    _tree_predict(node.left, X, idx[mask], out)
    _tree_predict(node.right, X, idx[~mask], out)


def predict(m: GbdtModel, x) -> float | np.ndarray:
    """Clamped prediction; accepts one feature vector or a 2-D batch."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = arr[None, :] if single else arr
    if X.shape[1] != m.feature_width:
        raise ValidationError(f"feature width mismatch: model {m.feature_width}, input {X.shape[1]}")
    total = np.full(X.shape[0], m.base_score)
    buf = np.empty(X.shape[0])
    idx = np.arange(X.shape[0])
    for tree in m.trees:
        _tree_predict(tree, X, idx, buf)
        total += m.eta * buf
    total = np.clip(total, 0.0, 1.0)
    return float(total[0]) if single else total


def _node_to_obj(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"w": node.weight}
    return {
        "f": node.feature_index,
        "t": node.threshold,
        "l": _node_to_obj(node.left),
        "r": _node_to_obj(node.right),
    }


def _node_from_obj(obj: dict) -> TreeNode:
    if "w" in obj:
        return TreeNode(weight=float(obj["w"]))
    return TreeNode(
        feature_index=int(obj["f"]),
        threshold=float(obj["t"]),
        left=_node_from_obj(obj["l"]),
        right=_node_from_obj(obj["r"]),
    )


def save_model(m: GbdtModel, path: str) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "base_score": m.base_score,
        "eta": m.eta,
        "feature_width": m.feature_width,
        "params": m.params,
        "training_mse": m.training_mse,
        "trees": [_node_to_obj(t) for t in m.trees],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str) -> GbdtModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, OSError) as exc:
        raise DataError(f"malformed model file {path}: {exc}") from exc
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model version {doc.get('version')!r} in {path}")
    try:
        return GbdtModel(
            base_score=float(doc["base_score"]),
            trees=[_node_from_obj(t) for t in doc["trees"]],
            eta=float(doc["eta"]),
            feature_width=int(doc["feature_width"]),
            params=dict(doc.get("params", {})),
            training_mse=[float(v) for v in doc.get("training_mse", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model file {path}: {exc}") from exc


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    r2: float | None  # None when the truths have zero variance


def compute_metrics(predictions, truths) -> MetricsReport:
    yh = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(truths, dtype=np.float64)
    if yh.shape != y.shape or y.ndim != 1 or len(y) == 0:
        raise ValidationError(f"need equal non-empty 1-D arrays, got {yh.shape} / {y.shape}")
    err = yh - y
    mse = float(np.mean(err**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = None if ss_tot == 0.0 else 1.0 - float(np.sum(err**2)) / ss_tot
    return MetricsReport(
        mae=float(np.mean(np.abs(err))), mse=mse, rmse=float(np.sqrt(mse)), r2=r2
    )


def fidelity_vs_length_table(model: GbdtModel, records, t, lmax: int = 100) -> list[tuple[int, float, float]]:
    """Rows of (path length, mean measured fidelity, mean predicted fidelity),
    sorted by length. Plot-ready companion to the evaluation metrics."""
    from .dataset import features_matrix  # local import: dataset builds on gbdt's types

    if not records:
        raise ValidationError("need at least one record")
    X, y = features_matrix(records, t, lmax)
    yh = predict(model, X)
    rows = []
    lengths = np.array([len(r.path) for r in records])
    for length in sorted(set(lengths.tolist())):
        sel = lengths == length
        rows.append((int(length), float(y[sel].mean()), float(yh[sel].mean())))
    return rows
