"""Four binary classifiers on (PC1, PC2): logistic, linear SVM, KNN, MLP.

Labels are the strings "high" / "low"; internally high maps to 1 (or +1
for the SVM).  All trainers are deterministic given data order,
hyperparameters, and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DivergenceError, InvalidK, TrainingDataError

HIGH = "high"
LOW = "low"


@dataclass(frozen=True)
class ClassifierModel:
    kind: str  # logistic | svm | knn | mlp
    parameters: dict
    parameter_count: int


def _check_data(X, y):
    X = np.asarray(X, dtype=float)
    y = list(y)
    if X.shape[0] != len(y) or X.shape[0] < 2:
        raise TrainingDataError("need at least 2 samples")
    if len(set(y)) < 2:
        raise TrainingDataError("training data must contain both classes")
    return X, np.array([1.0 if lbl == HIGH else 0.0 for lbl in y])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(w, b, X, y01):
    """Mean binary cross-entropy and its gradient."""
    p = _sigmoid(X @ w + b)
    eps = 1e-12
    loss = -np.mean(y01 * np.log(p + eps) + (1 - y01) * np.log(1 - p + eps))
    diff = p - y01
    return loss, X.T @ diff / len(y01), float(diff.mean())


def train_logistic(data, labels, epochs: int = 2000,
                   learning_rate: float = 0.1) -> ClassifierModel:
    X, y01 = _check_data(data, labels)
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        loss, gw, gb = logistic_loss_grad(w, b, X, y01)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became {loss}")
        w -= learning_rate * gw
        b -= learning_rate * gb
    return ClassifierModel(
        kind="logistic",
        parameters={"weights": w.tolist(), "bias": b},
        parameter_count=w.size + 1,
    )


def svm_loss_grad(w, b, X, ypm, reg):
    """L2-regularized mean hinge loss and a subgradient."""
    margins = ypm * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    loss = 0.5 * reg * float(w @ w) + float(hinge.mean())
    active = (margins < 1.0).astype(float)
    gw = reg * w - X.T @ (ypm * active) / len(ypm)
    gb = -float((ypm * active).mean())
    return loss, gw, gb


def train_svm(data, labels, epochs: int = 2000, learning_rate: float = 0.1,
              regularization: float = 1e-2) -> ClassifierModel:
    X, y01 = _check_data(data, labels)
    ypm = 2.0 * y01 - 1.0
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        loss, gw, gb = svm_loss_grad(w, b, X, ypm, regularization)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became {loss}")
        w -= learning_rate * gw
        b -= learning_rate * gb
    return ClassifierModel(
        kind="svm",
        parameters={"weights": w.tolist(), "bias": b},
        parameter_count=w.size + 1,
    )


def train_knn(data, labels, k: int = 3) -> ClassifierModel:
    X, _ = _check_data(data, labels)
    if k % 2 == 0:
        raise InvalidK("k must be odd")
    if k > X.shape[0]:
        raise InvalidK(f"k={k} exceeds sample count {X.shape[0]}")
    return ClassifierModel(
        kind="knn",
        parameters={"samples": X.tolist(), "labels": list(labels), "k": k},
        parameter_count=X.shape[0] * 3,  # 2 coordinates + 1 label per sample
    )


def knn_predict(stored_X, stored_labels, k: int, x) -> str:
    stored_X = np.asarray(stored_X, dtype=float)
    if k % 2 == 0:
        raise InvalidK("k must be odd")
    if k > stored_X.shape[0]:
        raise InvalidK(f"k={k} exceeds sample count {stored_X.shape[0]}")
    d = np.linalg.norm(stored_X - np.asarray(x, dtype=float), axis=1)
    # stable sort: distance ties resolve to the lower sample index
    nearest = np.argsort(d, kind="stable")[:k]
    votes = sum(1 for i in nearest if stored_labels[i] == HIGH)
    return HIGH if votes * 2 > k else LOW


def _mlp_init(n_in, hidden_width, seed):
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.uniform(-0.5, 0.5, size=(n_in, hidden_width)),
        "b1": rng.uniform(-0.5, 0.5, size=hidden_width),
        "W2": rng.uniform(-0.5, 0.5, size=(hidden_width, 1)),
        "b2": rng.uniform(-0.5, 0.5, size=1),
    }


def mlp_forward(params, X):
    h = np.tanh(X @ params["W1"] + params["b1"])
    p = _sigmoid((h @ params["W2"] + params["b2"]).ravel())
    return h, p


def mlp_loss_grad(params, X, y01):
    """Mean cross-entropy and full-batch backprop gradients."""
    h, p = mlp_forward(params, X)
    eps = 1e-12
    loss = -np.mean(y01 * np.log(p + eps) + (1 - y01) * np.log(1 - p + eps))
    n = len(y01)
    dz2 = (p - y01)[:, None] / n
    grads = {
        "W2": h.T @ dz2,
        "b2": dz2.sum(axis=0),
    }
    dh = dz2 @ params["W2"].T
    dz1 = dh * (1.0 - h * h)
    grads["W1"] = X.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


def train_mlp(data, labels, hidden_width: int = 8, epochs: int = 2000,
              learning_rate: float = 0.1, seed: int = 0) -> ClassifierModel:
    if hidden_width < 2:
        raise ValueError("hidden_width must be >= 2")
    X, y01 = _check_data(data, labels)
    params = _mlp_init(X.shape[1], hidden_width, seed)
    for _ in range(epochs):
        loss, grads = mlp_loss_grad(params, X, y01)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became {loss}")
        for key in params:
            params[key] = params[key] - learning_rate * grads[key]
    count = sum(v.size for v in params.values())
    return ClassifierModel(
        kind="mlp",
        parameters={k: v.tolist() for k, v in params.items()},
        parameter_count=count,
    )


def predict(model: ClassifierModel, X) -> List[str]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.kind in ("logistic", "svm"):
        w = np.asarray(model.parameters["weights"])
        b = model.parameters["bias"]
        score = X @ w + b
        return [HIGH if s >= 0 else LOW for s in score]
    if model.kind == "knn":
        p = model.parameters
        return [knn_predict(p["samples"], p["labels"], p["k"], x) for x in X]
    if model.kind == "mlp":
        params = {k: np.asarray(v) for k, v in model.parameters.items()}
        _, prob = mlp_forward(params, X)
        return [HIGH if v >= 0.5 else LOW for v in prob]
    raise ValueError(f"unknown classifier kind {model.kind!r}")


def evaluate(model: ClassifierModel, X, labels):
    """Accuracy plus 2x2 confusion counts keyed (true, predicted)."""
    labels = list(labels)
    if not labels:
        raise TrainingDataError("evaluation data is empty")
    preds = predict(model, X)
    confusion = {(t, p): 0 for t in (HIGH, LOW) for p in (HIGH, LOW)}
    for t, p in zip(labels, preds):
        confusion[(t, p)] += 1
    correct = confusion[(HIGH, HIGH)] + confusion[(LOW, LOW)]
    return correct / len(labels), confusion
