"""Deterministic multinomial logistic classifier over per-point features.

Stands in for a deep segmentation backbone so the annotation loop runs at
desk scale. Features per point: x, y, z, range, intensity, z/range, plus a
bias column. Training is full-batch gradient descent on mean cross-entropy
(ignore-id-0 rows dropped), with seed-determined initialization, so fixed
inputs always give bitwise-identical weights on one platform.

Objectives:

- ``al``    — minimize mean CE over the annotated rows (fresh weights).
- ``asfda`` — same loss, but trained from a source-pretrained model.
- ``ada``   — minimize mean CE over source rows plus mean CE over
  annotated rows (equal weight), from a source-pretrained model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import EmptyTrainingSetError, MalformedFileError, UsageError
from .lidar_io import IGNORE_ID, PointCloud
from .strategies import Predictions

FEATURE_DIM = 7  # x, y, z, range, intensity, z/range, bias
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 200

OBJECTIVES = ("al", "asfda", "ada")


def featurize(cloud: PointCloud) -> np.ndarray:
    """(N, 7) float64 feature rows; z/range is 0 at the origin."""
    xyz = cloud.xyz.astype(np.float64)
    rng = np.sqrt((xyz**2).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        z_over_range = np.where(rng > 0.0, xyz[:, 2] / np.where(rng > 0.0, rng, 1.0), 0.0)
    return np.column_stack(
        (
            xyz,
            rng,
            cloud.intensity.astype(np.float64),
            z_over_range,
            np.ones(len(cloud)),
        )
    )


@dataclass(frozen=True)
class ToyModel:
    """Softmax-linear point classifier: weights (K, FEATURE_DIM).

    ``feature_shift``/``feature_scale`` standardize features before the
    linear map; they are fitted once on the first real fit and frozen when
    warm-starting so that a 0-epoch refit is exactly the identity.
    """

    weights: np.ndarray
    class_count: int
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0
    fitted: bool = False
    feature_shift: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.shape != (self.class_count, FEATURE_DIM):
            raise UsageError(
                f"weights must be ({self.class_count}, {FEATURE_DIM}), got {w.shape}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def fresh(
        class_count: int,
        seed: int = 0,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        epochs: int = DEFAULT_EPOCHS,
    ) -> "ToyModel":
        """Untrained model with small seed-determined random weights."""
        rng = np.random.default_rng(seed)
        weights = rng.normal(0.0, 0.01, size=(class_count, FEATURE_DIM))
        return ToyModel(
            weights=weights,
            class_count=class_count,
            learning_rate=learning_rate,
            epochs=epochs,
            seed=seed,
        )

    def _standardize(self, features: np.ndarray) -> np.ndarray:
        if self.feature_shift is None:
            return features
        out = (features - self.feature_shift) / self.feature_scale
        out[:, -1] = 1.0  # bias column stays 1
        return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    weights: np.ndarray, features: np.ndarray, label_idx: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. ``weights``.

    ``label_idx`` holds 0-based class indices. Uses log-sum-exp for the
    loss and max-shifted softmax for the probabilities.
    """
    logits = features @ weights.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    n = features.shape[0]
    picked = shifted[np.arange(n), label_idx]
    loss = float((log_norm - picked).mean())
    probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
    probs[np.arange(n), label_idx] -= 1.0
    grad = probs.T @ features / n
    return loss, grad


def _drop_ignored(features: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = labels != IGNORE_ID
    return features[keep], labels[keep]


def fit(
    model: ToyModel,
    features: np.ndarray,
    labels: np.ndarray,
    objective: str = "al",
    source: tuple[np.ndarray, np.ndarray] | None = None,
) -> ToyModel:
    """Train ``model`` on labeled feature rows; returns a new model.

    Rows with ignore id 0 are dropped. ``objective="ada"`` requires
    ``source`` (features, labels) and minimizes the sum of the two mean
    losses. Training loss never ends above its starting value; this is
    asserted.
    """
    if objective not in OBJECTIVES:
        raise UsageError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if objective == "ada" and source is None:
        raise UsageError("objective 'ada' requires source data")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    features, labels = _drop_ignored(features, labels)
    if labels.size and labels.max() > model.class_count:
        raise UsageError("training labels exceed the model's class count")
    src = None
    if objective == "ada" and source is not None:
        src_f, src_l = _drop_ignored(
            np.asarray(source[0], dtype=np.float64), np.asarray(source[1])
        )
        src = (src_f, src_l - 1)
    if features.shape[0] == 0 and (src is None or src[0].shape[0] == 0):
        raise EmptyTrainingSetError("every training row carries the ignore id")

    if model.fitted and model.feature_shift is not None:
        shift, scale = model.feature_shift, model.feature_scale
    else:
        pool = features if src is None else np.vstack((features, src[0]))
        shift = pool.mean(axis=0)
        scale = pool.std(axis=0)
        scale = np.where(scale > 1e-12, scale, 1.0)
        shift[-1], scale[-1] = 0.0, 1.0  # leave the bias column alone

    def standardize(f: np.ndarray) -> np.ndarray:
        return (f - shift) / scale

    x_target = standardize(features)
    y_target = labels - 1
    x_source = standardize(src[0]) if src is not None else None

    weights = model.weights.copy()
    initial_loss = None
    for _ in range(model.epochs):
        grad = np.zeros_like(weights)
        loss = 0.0
        if x_target.shape[0]:
            l_t, g_t = loss_and_grad(weights, x_target, y_target)
            loss += l_t
            grad += g_t
        if x_source is not None and x_source.shape[0]:
            l_s, g_s = loss_and_grad(weights, x_source, src[1])
            loss += l_s
            grad += g_s
        if initial_loss is None:
            initial_loss = loss
        weights -= model.learning_rate * grad
    if model.epochs > 0:
        final_loss = 0.0
        if x_target.shape[0]:
            final_loss += loss_and_grad(weights, x_target, y_target)[0]
        if x_source is not None and x_source.shape[0]:
            final_loss += loss_and_grad(weights, x_source, src[1])[0]
        assert initial_loss is None or final_loss <= initial_loss + 1e-12, (
            f"training loss rose from {initial_loss} to {final_loss}"
        )
    return replace(
        model,
        weights=weights,
        fitted=True,
        feature_shift=np.array(shift),
        feature_scale=np.array(scale),
    )


def predict_proba(model: ToyModel, cloud: PointCloud) -> Predictions:
    """Softmax class probabilities for every point of ``cloud``."""
    features = model._standardize(featurize(cloud))
    if features.shape[1] != model.weights.shape[1]:
        raise UsageError("feature dimensionality does not match the model")
    probs = _softmax(features @ model.weights.T)
    return Predictions(probs=probs, source="toy-learner")


def predict_labels(model: ToyModel, cloud: PointCloud) -> np.ndarray:
    """1-based argmax class per point."""
    from . import kernels

    return kernels.argmax_labels(predict_proba(model, cloud).probs)


def save_model(model: ToyModel, path) -> None:
    """Text checkpoint with 17-significant-digit decimals for exact resume."""
    lines = [
        "toymodel 1",
        f"class_count {model.class_count}",
        f"feature_dim {FEATURE_DIM}",
        f"learning_rate {model.learning_rate!r}",
        f"epochs {model.epochs}",
        f"seed {model.seed}",
        f"fitted {int(model.fitted)}",
    ]

    def fmt(arr):
        return " ".join(f"{v:.17g}" for v in np.asarray(arr).ravel())

    if model.feature_shift is not None:
        lines.append("feature_shift " + fmt(model.feature_shift))
        lines.append("feature_scale " + fmt(model.feature_scale))
    for row in model.weights:
        lines.append("w " + fmt(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> ToyModel:
    """Inverse of :func:`save_model`."""
    text = Path(path).read_text(encoding="utf-8")
    fields: dict[str, str] = {}
    rows: list[list[float]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "w":
            rows.append([float(v) for v in rest.split()])
        else:
            fields[key] = rest
    try:
        class_count = int(fields["class_count"])
        model = ToyModel(
            weights=np.array(rows, dtype=np.float64),
            class_count=class_count,
            learning_rate=float(fields["learning_rate"]),
            epochs=int(fields["epochs"]),
            seed=int(fields["seed"]),
            fitted=bool(int(fields["fitted"])),
            feature_shift=(
                np.array([float(v) for v in fields["feature_shift"].split()])
                if "feature_shift" in fields
                else None
            ),
            feature_scale=(
                np.array([float(v) for v in fields["feature_scale"].split()])
                if "feature_scale" in fields
                else None
            ),
        )
    except (KeyError, ValueError) as exc:
        raise MalformedFileError(f"{path}: invalid model checkpoint: {exc}") from exc
    return model
