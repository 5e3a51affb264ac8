"""Multilayer perceptron classifier for encoded rasters.

Architecture: flattened pixels -> 64 relu -> 64 relu -> dropout ->
128 relu -> dropout -> linear class scores -> softmax. Dropout is inverted
(activations scaled by 1/(1-rate) at train time) so inference needs no
rescaling. Training is plain mini-batch gradient descent with momentum on
the cross-entropy loss; everything is float64 numpy and bit-reproducible
from the seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import as_rng, check_labels

DEFAULT_HIDDEN = (64, 64, 128)
DEFAULT_DROPOUT = 0.4


@dataclass
class TrainConfig:
    """Optimizer settings; the seed drives shuffling and dropout masks."""

    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    input_divisor: float = 255.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.input_divisor <= 0:
            raise ValueError("input_divisor must be > 0")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "seed": self.seed,
            "input_divisor": self.input_divisor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def _dropout_layers(n_hidden: int) -> tuple[int, ...]:
    # dropout follows the second and third hidden layers of the stock
    # architecture; generalized as "every hidden layer past the first"
    return tuple(range(1, n_hidden))


class MlpModel:
    """Weight container with forward/backward passes."""

    def __init__(self, n_inputs: int, n_classes: int, hidden_sizes=DEFAULT_HIDDEN,
                 dropout: float = DEFAULT_DROPOUT, seed: int = 0):
        if n_inputs < 1 or n_classes < 2:
            raise ValueError("need n_inputs >= 1 and n_classes >= 2")
        if not 0 <= dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        self.n_inputs = int(n_inputs)
        self.n_classes = int(n_classes)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.dropout = float(dropout)
        self.dropout_layers = _dropout_layers(len(self.hidden_sizes))
        self.seed = seed
        rng = as_rng(seed)
        sizes = [self.n_inputs, *self.hidden_sizes, self.n_classes]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpModel":
        m = MlpModel.__new__(MlpModel)
        m.n_inputs, m.n_classes = self.n_inputs, self.n_classes
        m.hidden_sizes, m.dropout = self.hidden_sizes, self.dropout
        m.dropout_layers, m.seed = self.dropout_layers, self.seed
        m.weights = [w.copy() for w in self.weights]
        m.biases = [b.copy() for b in self.biases]
        return m

    def forward(self, X: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None):
        """Return (scores, probs, cache); dropout masks are drawn only when training."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"input width {X.shape[1]} != model input {self.n_inputs}")
        if training and self.dropout > 0 and rng is None:
            raise ValueError("training-mode forward needs an rng for dropout masks")
        a = X
        activations = [X]
        masks: list[np.ndarray | None] = []
        n_hidden = len(self.hidden_sizes)
        for layer in range(n_hidden):
            z = a @ self.weights[layer] + self.biases[layer]
            a = np.maximum(z, 0.0)
            mask = None
            if training and self.dropout > 0 and layer in self.dropout_layers:
                keep = 1.0 - self.dropout
                mask = (rng.random(a.shape) < keep) / keep
                a = a * mask
            masks.append(mask)
            activations.append(a)
        scores = a @ self.weights[-1] + self.biases[-1]
        shifted = scores - scores.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)
        return scores, probs, {"activations": activations, "masks": masks}

    def backward(self, cache: dict, dscores: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(scores).

        Returns (weight grads, bias grads, d(loss)/d(input)).
        """
        activations = cache["activations"]
        masks = cache["masks"]
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        grads_w[-1] = activations[-1].T @ dscores
        grads_b[-1] = dscores.sum(axis=0)
        d_act = dscores @ self.weights[-1].T
        for layer in range(len(self.hidden_sizes) - 1, -1, -1):
            if masks[layer] is not None:
                d_act = d_act * masks[layer]
            # post-dropout activations are 0 exactly where relu or the mask
            # zeroed them, so this gate is the correct relu derivative
            d_act = d_act * (activations[layer + 1] > 0)
            grads_w[layer] = activations[layer].T @ d_act
            grads_b[layer] = d_act.sum(axis=0)
            d_act = d_act @ self.weights[layer].T
        return grads_w, grads_b, d_act


def forward(model: MlpModel, inputs, training: bool = False, dropout_seed=None):
    """Class scores and softmax probabilities for normalized inputs."""
    rng = as_rng(dropout_seed) if training else None
    scores, probs, _ = model.forward(inputs, training=training, rng=rng)
    return scores, probs


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    picked = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.clip(picked, 1e-12, None))))


def train(model: MlpModel, inputs: np.ndarray, labels: np.ndarray,
          config: TrainConfig) -> dict:
    """Fit the model in place; returns per-epoch loss/accuracy history.

    Inputs must already be normalized (the classifier wrapper divides raw
    pixels by the configured divisor before calling this).
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = check_labels(labels, X.shape[0], "labels")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if y.max() >= model.n_classes:
        raise ValueError(f"label {y.max()} outside the model's {model.n_classes} classes")
    shuffle_rng, drop_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(2)
    )
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    history = {"loss": [], "accuracy": []}
    n = X.shape[0]
    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        epoch_hits = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb, yb = X[idx], y[idx]
            scores, probs, cache = model.forward(xb, training=True, rng=drop_rng)
            loss = cross_entropy(probs, yb)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            dscores = probs.copy()
            dscores[np.arange(len(yb)), yb] -= 1.0
            dscores /= len(yb)
            grads_w, grads_b, _ = model.backward(cache, dscores)
            for layer in range(model.n_layers):
                vel_w[layer] = config.momentum * vel_w[layer] - config.learning_rate * grads_w[layer]
                vel_b[layer] = config.momentum * vel_b[layer] - config.learning_rate * grads_b[layer]
                model.weights[layer] += vel_w[layer]
                model.biases[layer] += vel_b[layer]
            epoch_loss += loss * len(yb)
            epoch_hits += int(np.sum(scores.argmax(axis=1) == yb))
        history["loss"].append(epoch_loss / n)
        history["accuracy"].append(epoch_hits / n)
    return history


def loss_and_param_grads(model: MlpModel, x: np.ndarray, label: int):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray([label] * x.shape[0])
    _, probs, cache = model.forward(x, training=False)
    loss = cross_entropy(probs, y)
    dscores = probs.copy()
    dscores[np.arange(len(y)), y] -= 1.0
    dscores /= len(y)
    gw, gb, _ = model.backward(cache, dscores)
    return loss, gw, gb


def grad_check(model: MlpModel, x, label: int, epsilon: float = 1e-4,
               max_per_array: int = 6, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples a few coordinates of every weight matrix and bias vector,
    perturbs them by +/- epsilon and compares the loss slope against
    backpropagation. Dropout is off. Error is
    |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
    """
    rng = as_rng(seed)
    _, gw, gb = loss_and_param_grads(model, x, label)
    x2 = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray([label] * x2.shape[0])

    def loss_at() -> float:
        _, probs, _ = model.forward(x2, training=False)
        return cross_entropy(probs, y)

    worst = 0.0
    for params, grads in ((model.weights, gw), (model.biases, gb)):
        for arr, grad in zip(params, grads):
            flat = arr.reshape(-1)
            n_coords = min(max_per_array, flat.size)
            coords = rng.choice(flat.size, size=n_coords, replace=False)
            for c in coords:
                orig = flat[c]
                flat[c] = orig + epsilon
                up = loss_at()
                flat[c] = orig - epsilon
                down = loss_at()
                flat[c] = orig
                numeric = (up - down) / (2.0 * epsilon)
                analytic = grad.reshape(-1)[c]
                err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
                worst = max(worst, err)
    return worst


def saliency(model: MlpModel, x, class_index: int):
    """Gradient of the pre-softmax class score with respect to the input.

    Returns (gradient, |gradient| scaled to [0, 1]), both shaped like the
    input. Dropout is off; for a model with no hidden layers the gradient is
    exactly the class's weight column.
    """
    arr = np.asarray(x, dtype=np.float64)
    flat = np.atleast_2d(arr.reshape(1, -1) if arr.ndim != 2 else arr)
    if not 0 <= class_index < model.n_classes:
        raise ValueError(f"class {class_index} outside 0..{model.n_classes - 1}")
    _, _, cache = model.forward(flat, training=False)
    dscores = np.zeros((flat.shape[0], model.n_classes))
    dscores[:, class_index] = 1.0
    _, _, d_input = model.backward(cache, dscores)
    grad = d_input.reshape(arr.shape)
    peak = np.abs(grad).max()
    norm = np.abs(grad) / peak if peak > 0 else np.zeros_like(grad)
    return grad, norm


def _flatten_images(X, divisor: float) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim > 2:
        arr = arr.reshape(arr.shape[0], -1)
    return arr / divisor


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style wrapper: raw images in, class predictions out.

    Accepts (n, H, W, C) uint8 stacks, lists of CpcrImage pixels, or already
    flat (n, d) arrays; pixels are divided by ``input_divisor`` and flattened
    row-major. Deterministic for fixed seeds.
    """

    def __init__(self, hidden_sizes=DEFAULT_HIDDEN, dropout=DEFAULT_DROPOUT,
                 epochs=50, batch_size=32, learning_rate=0.01, momentum=0.9,
                 seed=0, input_divisor=255.0):
        self.hidden_sizes = hidden_sizes
        self.dropout = dropout
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.seed = seed
        self.input_divisor = input_divisor

    def _as_inputs(self, X) -> np.ndarray:
        if isinstance(X, (list, tuple)) and X and hasattr(X[0], "pixels"):
            X = np.stack([img.pixels for img in X])
        return _flatten_images(X, self.input_divisor)

    def fit(self, X, y):
        inputs = self._as_inputs(X)
        y = np.asarray(y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("training data must contain at least 2 classes")
        self.model_ = MlpModel(
            n_inputs=inputs.shape[1],
            n_classes=len(self.classes_),
            hidden_sizes=self.hidden_sizes,
            dropout=self.dropout,
            seed=self.seed,
        )
        self.history_ = train(
            self.model_, inputs, y_idx,
            TrainConfig(
                epochs=self.epochs, batch_size=self.batch_size,
                learning_rate=self.learning_rate, momentum=self.momentum,
                seed=self.seed, input_divisor=self.input_divisor,
            ),
        )
        self.n_features_in_ = inputs.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("MlpClassifier must be fitted first")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        scores, _ = forward(self.model_, self._as_inputs(X))
        return scores

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        _, probs = forward(self.model_, self._as_inputs(X))
        return probs

    def predict(self, X) -> np.ndarray:
        # argmax takes the lowest class index on ties
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def saliency_map(self, image, class_index: int):
        """Per-pixel score gradient for one image, shaped like the image."""
        self._check_fitted()
        arr = image.pixels if hasattr(image, "pixels") else np.asarray(image)
        flat = _flatten_images(arr, self.input_divisor)
        grad, norm = saliency(self.model_, flat, class_index)
        return grad.reshape(arr.shape), norm.reshape(arr.shape)
