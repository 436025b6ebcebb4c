"""Desk-scale squeeze and relabel stages.

The original-data stand-in is a Gaussian mixture with class means on the
unit sphere. The teacher is a small tanh MLP trained by minibatch SGD; its
designated hidden layer doubles as the feature extractor, and per-feature
mean/variance of that layer over the training set are stored on the model
as the normalization-statistics analog used during synthesis. Relabeling is
temperature softmax over teacher logits; students are fresh MLPs trained on
the synthetic set and scored on held-out real data.

All forward/backward passes are explicit numpy so input gradients can be
verified against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError, TrainingError
from .matrix import Rng, as_matrix, rng_normal


@dataclass
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    n_classes: int
    split: str = "train"

    def __post_init__(self):
        self.points = as_matrix(self.points, "points")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.shape[0] != self.points.shape[0]:
            raise DimensionError(
                f"LabeledDataset: {self.points.shape[0]} points vs {self.labels.shape} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ParameterError(
                f"LabeledDataset: labels must lie in [0, {self.n_classes})")
        if self.split == "train":
            present = np.unique(self.labels)
            if present.size != self.n_classes:
                missing = sorted(set(range(self.n_classes)) - set(present.tolist()))
                raise ParameterError(f"LabeledDataset: train split missing classes {missing}")

    def __len__(self):
        return self.points.shape[0]


@dataclass
class SoftLabels:
    probs: np.ndarray
    temperature: float

    def __post_init__(self):
        self.probs = as_matrix(self.probs, "probs")
        if np.any(self.probs < 0):
            raise ParameterError("SoftLabels: negative probability")
        sums = self.probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ParameterError("SoftLabels: rows must sum to 1")


@dataclass
class TeacherModel:
    """Tanh MLP with a designated hidden feature layer and stored feature
    statistics. weights[l] maps activation l to pre-activation l+1; the last
    layer is linear (logits)."""
    weights: list
    biases: list
    feature_layer: int
    feature_mean: np.ndarray | None = None
    feature_var: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n_hidden = len(self.weights) - 1
        if n_hidden < 1:
            raise ParameterError("TeacherModel: need at least one hidden layer")
        if not 1 <= self.feature_layer <= n_hidden:
            raise ParameterError(
                f"TeacherModel: feature_layer must be a hidden layer in [1, {n_hidden}]")
        if self.feature_var is not None and np.any(np.asarray(self.feature_var) < 0):
            raise ParameterError("TeacherModel: negative stored feature variance")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def feature_dim(self) -> int:
        return self.weights[self.feature_layer - 1].shape[1]

    def hidden_sizes(self) -> tuple:
        return tuple(w.shape[1] for w in self.weights[:-1])


def softmax(z: np.ndarray) -> np.ndarray:
    """Row softmax with max subtraction."""
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def gen_mixture(n_classes: int, dim: int, n_per_class: int, spread: float,
                seed: int):
    """Gaussian mixture with class means on the unit sphere.

    Means are a fixed +/- canonical-basis frame passed through a seeded
    random rotation, so inter-mean geometry is identical across seeds.
    Returns seeded (train, test) splits, 80/20 per class.
    """
    if n_classes < 2:
        raise ParameterError(f"gen_mixture: need n_classes >= 2, got {n_classes}")
    if dim < 2:
        raise ParameterError(f"gen_mixture: need dim >= 2, got {dim}")
    if n_classes > 2 * dim:
        raise ParameterError(
            f"gen_mixture: frame supports at most 2*dim={2 * dim} classes, got {n_classes}")
    if n_per_class < 10:
        raise ParameterError(f"gen_mixture: need n_per_class >= 10, got {n_per_class}")
    if spread < 0:
        raise ParameterError(f"gen_mixture: spread must be >= 0, got {spread}")
    rng = Rng(seed)
    frame = np.zeros((n_classes, dim))
    for c in range(n_classes):
        frame[c, c % dim] = 1.0 if c < dim else -1.0
    q, r = np.linalg.qr(rng_normal(rng.split(0), dim, dim))
    q = q * np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
    means = frame @ q.T

    n_train = int(n_per_class * 0.8)
    train_pts, train_lbl, test_pts, test_lbl = [], [], [], []
    for c in range(n_classes):
        noise = rng_normal(rng.split(1).split(c), n_per_class, dim, 0.0, spread)
        pts = means[c][None, :] + noise
        order = rng.split(2).split(c).generator.permutation(n_per_class)
        train_pts.append(pts[order[:n_train]])
        test_pts.append(pts[order[n_train:]])
        train_lbl.append(np.full(n_train, c, dtype=np.int64))
        test_lbl.append(np.full(n_per_class - n_train, c, dtype=np.int64))
    train = LabeledDataset(np.vstack(train_pts), np.concatenate(train_lbl),
                           n_classes, "train")
    test = LabeledDataset(np.vstack(test_pts), np.concatenate(test_lbl),
                          n_classes, "test")
    return train, test


def init_mlp(dim: int, hidden_sizes, n_classes: int, seed: int):
    """Seeded Gaussian init scaled by 1/sqrt(fan_in); zero biases."""
    rng = Rng(seed)
    sizes = [dim] + list(hidden_sizes) + [n_classes]
    weights, biases = [], []
    for l in range(len(sizes) - 1):
        scale = 1.0 / np.sqrt(sizes[l])
        weights.append(rng_normal(rng.split(l), sizes[l], sizes[l + 1], 0.0, scale))
        biases.append(np.zeros(sizes[l + 1]))
    return weights, biases


def forward_activations(model: TeacherModel, x):
    """All layer activations: [input, tanh hidden..., logits]."""
    x = as_matrix(x, "X")
    if x.shape[1] != model.input_dim:
        raise DimensionError(
            f"forward: input dim {x.shape[1]} != model dim {model.input_dim}")
    acts = [x]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        acts.append(np.tanh(acts[-1] @ w + b))
    acts.append(acts[-1] @ model.weights[-1] + model.biases[-1])
    return acts


def teacher_logits(model: TeacherModel, x) -> np.ndarray:
    return forward_activations(model, x)[-1]


def extract_features(model: TeacherModel, x) -> np.ndarray:
    """Activation of the designated hidden layer."""
    return forward_activations(model, x)[model.feature_layer]


def input_gradient(model: TeacherModel, acts, dlogits=None, dfeatures=None):
    """Backpropagate upstream gradients to the input.

    `dlogits` enters at the output layer, `dfeatures` at the feature layer;
    either may be None. `acts` comes from forward_activations on the same
    input.
    """
    n_hidden = len(model.weights) - 1
    g = dlogits @ model.weights[-1].T if dlogits is not None else None
    for layer in range(n_hidden, 0, -1):
        if layer == model.feature_layer and dfeatures is not None:
            g = dfeatures if g is None else g + dfeatures
        if g is None:
            g = np.zeros_like(acts[layer])
        g = (g * (1.0 - acts[layer] ** 2)) @ model.weights[layer - 1].T
    return g if g is not None else np.zeros_like(acts[0])


def extract_features_vjp(model: TeacherModel, x, upstream) -> np.ndarray:
    """Gradient of <upstream, features(x)> with respect to x."""
    acts = forward_activations(model, x)
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != acts[model.feature_layer].shape:
        raise DimensionError(
            f"vjp: upstream shape {upstream.shape} != features "
            f"{acts[model.feature_layer].shape}")
    return input_gradient(model, acts, dfeatures=upstream)


def _cross_entropy_and_dlogits(logits, targets):
    """Mean cross-entropy and its logits gradient. Integer targets are
    treated as hard labels, a matrix as a row-stochastic soft distribution."""
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    if targets.ndim == 1:
        loss = -float(log_probs[np.arange(n), targets].mean())
        onehot = np.zeros_like(logits)
        onehot[np.arange(n), targets] = 1.0
        dlogits = (np.exp(log_probs) - onehot) / n
    else:
        loss = -float((targets * log_probs).sum(axis=1).mean())
        dlogits = (np.exp(log_probs) - targets) / n
    return loss, dlogits


def _sgd_train(points, targets, dim, hidden_sizes, n_classes, epochs, lr,
               seed, batch_size):
    weights, biases = init_mlp(dim, hidden_sizes, n_classes, seed)
    model = TeacherModel(weights, biases, feature_layer=len(hidden_sizes))
    n = points.shape[0]
    shuffle = Rng(seed).split(1000)
    for epoch in range(epochs):
        order = shuffle.split(epoch).generator.permutation(n)
        for lo in range(0, n, batch_size):
            ix = order[lo:lo + batch_size]
            acts = forward_activations(model, points[ix])
            tgt = targets[ix]
            loss, dlogits = _cross_entropy_and_dlogits(acts[-1], tgt)
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged at epoch {epoch}")
            g = dlogits
            for layer in range(len(model.weights) - 1, -1, -1):
                dw = acts[layer].T @ g
                db = g.sum(axis=0)
                if layer > 0:  # propagate through pre-update weights
                    g = (g @ model.weights[layer].T) * (1.0 - acts[layer] ** 2)
                model.weights[layer] -= lr * dw
                model.biases[layer] -= lr * db
    return model


def model_accuracy(model: TeacherModel, data: LabeledDataset) -> float:
    pred = teacher_logits(model, data.points).argmax(axis=1)
    return float(np.mean(pred == data.labels))


def squeeze_train(train: LabeledDataset, hidden_sizes=(32,), epochs: int = 30,
                  lr: float = 0.1, seed: int = 0, batch_size: int = 32) -> TeacherModel:
    """Train the teacher and store feature-layer statistics.

    After SGD finishes, one pass over the training set records per-feature
    mean and population variance of the feature layer; synthesis matches
    batch statistics against these.
    """
    if epochs < 1:
        raise ParameterError(f"squeeze_train: need epochs >= 1, got {epochs}")
    if lr < 0:
        raise ParameterError(f"squeeze_train: lr must be >= 0, got {lr}")
    model = _sgd_train(train.points, train.labels, train.points.shape[1],
                       hidden_sizes, train.n_classes, epochs, lr, seed, batch_size)
    feats = extract_features(model, train.points)
    model.feature_mean = feats.mean(axis=0)
    model.feature_var = feats.var(axis=0)
    model.meta = {"epochs": epochs, "lr": lr, "seed": seed,
                  "train_accuracy": model_accuracy(model, train)}
    return model


def relabel(model: TeacherModel, synthetic, temperature: float = 1.0) -> SoftLabels:
    """Soft labels = softmax(teacher logits / temperature)."""
    if temperature <= 0:
        raise ParameterError(f"relabel: temperature must be > 0, got {temperature}")
    points = getattr(synthetic, "points", synthetic)
    logits = teacher_logits(model, points)
    return SoftLabels(softmax(logits / temperature), temperature)


def evaluate_student(points, labels, test: LabeledDataset, hidden_sizes=(32,),
                     epochs: int = 60, lr: float = 0.1, seed: int = 0,
                     batch_size: int = 32) -> float:
    """Train a fresh student on (points, labels) and return its top-1
    accuracy on the test split. `labels` may be hard class ids or
    SoftLabels; epochs=0 scores the seeded initialization as-is."""
    if epochs < 0:
        raise ParameterError(f"evaluate_student: need epochs >= 0, got {epochs}")
    points = as_matrix(points, "points")
    if isinstance(labels, SoftLabels):
        targets = labels.probs
        if targets.shape[0] != points.shape[0]:
            raise DimensionError("evaluate_student: soft labels do not match points")
        n_classes = targets.shape[1]
    else:
        targets = np.asarray(labels, dtype=np.int64)
        if targets.shape[0] != points.shape[0]:
            raise DimensionError("evaluate_student: labels do not match points")
        n_classes = test.n_classes
    if epochs == 0:
        weights, biases = init_mlp(points.shape[1], hidden_sizes, n_classes, seed)
        model = TeacherModel(weights, biases, feature_layer=len(hidden_sizes))
    else:
        model = _sgd_train(points, targets, points.shape[1], hidden_sizes,
                           n_classes, epochs, lr, seed, batch_size)
    return model_accuracy(model, test)
