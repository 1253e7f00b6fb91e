"""Single-hidden-layer sigmoid network trained by back-propagation.

The classification head uses one linear output per class read through a
softmax (argmax prediction, ties to the lowest class index); the regression
head is a single linear output whose target is min-max scaled to [0, 1]
over the training range and unscaled at prediction time.  Optimization is
mini-batch Adam; the hot epoch loop lives in syncprobe.kernels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import kernels
from .dataset import LabeledDataset, kfold, standardize
from .errors import DataFormatError, NumericalError, ValidationError

MODEL_FORMAT_VERSION = 1

HEADS = ("regression", "classification")


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 50
    epochs: int = 2000
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    early_stop_tol: float = 1e-6
    early_stop_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("hidden, epochs and batch_size must be >= 1")


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    head: str
    classes: np.ndarray | None = None  # class label values, ascending
    target_scale: tuple[float, float] | None = None  # (lo, hi) of raw targets
    manifest: dict = field(default_factory=dict)

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            w1=self.w1.copy(), b1=self.b1.copy(),
            w2=self.w2.copy(), b2=self.b2.copy(),
            head=self.head,
            classes=None if self.classes is None else self.classes.copy(),
            target_scale=self.target_scale,
            manifest=dict(self.manifest),
        )


def init_model(
    n_inputs: int, hidden: int, head: str, seed: int = 0, n_outputs: int | None = None
) -> MlpModel:
    """Symmetric scaled-uniform init (variance 1/fan_in), zero biases."""
    if head not in HEADS:
        raise ValidationError(f"head must be one of {HEADS}")
    if n_inputs < 1 or hidden < 1:
        raise ValidationError("n_inputs and hidden must be >= 1")
    if n_outputs is None:
        n_outputs = 1 if head == "regression" else 3
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(3.0 / n_inputs)
    lim2 = np.sqrt(3.0 / hidden)
    return MlpModel(
        w1=rng.uniform(-lim1, lim1, size=(hidden, n_inputs)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-lim2, lim2, size=(n_outputs, hidden)),
        b2=np.zeros(n_outputs),
        head=head,
    )


def _raw_forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    hidden = expit(x @ model.w1.T + model.b1)
    return hidden @ model.w2.T + model.b2


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """User-facing output: class probabilities, or the unscaled regression value."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.n_inputs:
        raise ValidationError(f"expected {model.n_inputs} input features, got {x.shape[1]}")
    out = _raw_forward(model, x)
    if model.head == "classification":
        shifted = out - out.max(axis=1, keepdims=True)
        ez = np.exp(shifted)
        return ez / ez.sum(axis=1, keepdims=True)
    if model.target_scale is not None:
        lo, hi = model.target_scale
        out = lo + out * (hi - lo)
    return out[:, 0]


def _encode_targets(model: MlpModel, targets: np.ndarray):
    """Network-space targets; returns (encoded (N, K), updated model)."""
    if model.head == "classification":
        classes = np.unique(targets)
        if len(classes) != model.w2.shape[0]:
            raise ValidationError(
                f"model has {model.w2.shape[0]} outputs but {len(classes)} classes found"
            )
        onehot = np.zeros((len(targets), len(classes)))
        onehot[np.arange(len(targets)), np.searchsorted(classes, targets)] = 1.0
        return onehot, replace_classes(model, classes)
    lo, hi = float(np.min(targets)), float(np.max(targets))
    if hi == lo:
        hi = lo + 1.0
    scaled = ((targets - lo) / (hi - lo))[:, None]
    model = model.copy()
    model.target_scale = (lo, hi)
    return scaled, model


def replace_classes(model: MlpModel, classes: np.ndarray) -> MlpModel:
    model = model.copy()
    model.classes = np.asarray(classes, dtype=float)
    return model


def train(
    model: MlpModel,
    features: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
) -> tuple[MlpModel, list[float]]:
    """Mini-batch Adam with early stopping; returns (new model, loss history).

    Features are expected standardized.  Classification targets are raw
    label values (any finite set); regression targets raw s values.
    """
    features = np.ascontiguousarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(features) != len(targets):
        raise ValidationError("features/targets length mismatch")
    y, model = _encode_targets(model, targets)
    y = np.ascontiguousarray(y)
    head = (
        kernels.HEAD_CLASSIFICATION if model.head == "classification"
        else kernels.HEAD_REGRESSION
    )

    n = len(features)
    rng = np.random.default_rng(config.seed)
    moments = [np.zeros_like(a) for a in (model.w1, model.b1, model.w2, model.b2)]
    velocities = [np.zeros_like(a) for a in (model.w1, model.b1, model.w2, model.b2)]
    full_batch = config.batch_size >= n

    history: list[float] = []
    best = np.inf
    stale = 0
    step = 0
    for epoch in range(config.epochs):
        order = np.arange(n) if full_batch else rng.permutation(n)
        loss, step = kernels.train_epoch(
            model.w1, model.b1, model.w2, model.b2,
            *moments, *velocities,
            features, y, np.ascontiguousarray(order, dtype=np.int64),
            min(config.batch_size, n),
            config.learning_rate, config.beta1, config.beta2, config.eps,
            step, head,
        )
        if not np.isfinite(loss):
            raise NumericalError(
                f"training diverged at epoch {epoch} (lr={config.learning_rate})"
            )
        history.append(float(loss))
        if loss < best - config.early_stop_tol:
            best = loss
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break
    model.manifest = {
        "config": {k: getattr(config, k) for k in TrainConfig.__dataclass_fields__},
        "epochs_run": len(history),
        "final_loss": history[-1],
    }
    return model, history


def gradient_check(model: MlpModel, x: np.ndarray, y_encoded: np.ndarray,
                   step: float = 1e-5) -> float:
    """Max relative deviation of analytic vs central-difference gradients."""
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=float)
    y = np.ascontiguousarray(np.atleast_2d(y_encoded), dtype=float)
    head = (
        kernels.HEAD_CLASSIFICATION if model.head == "classification"
        else kernels.HEAD_REGRESSION
    )
    params = (model.w1, model.b1, model.w2, model.b2)
    _, *grads = kernels.loss_and_grads(*params, x, y, head)

    worst = 0.0
    for p, g in zip(params, grads):
        flat_p = p.reshape(-1)
        flat_g = np.asarray(g).reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            lp = kernels.loss_and_grads(*params, x, y, head)[0]
            flat_p[i] = orig - step
            lm = kernels.loss_and_grads(*params, x, y, head)[0]
            flat_p[i] = orig
            fd = (lp - lm) / (2.0 * step)
            dev = abs(flat_g[i] - fd) / max(1e-12, abs(flat_g[i]) + abs(fd))
            worst = max(worst, dev)
    return worst


def predict_class(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Predicted class label values (argmax, ties to the lowest index)."""
    if model.head != "classification" or model.classes is None:
        raise ValidationError("predict_class requires a trained classification model")
    probs = forward(model, features)
    return model.classes[np.argmax(probs, axis=1)]


def classify_error(model: MlpModel, features: np.ndarray, labels: np.ndarray) -> float:
    """Failure rate P = misclassified / total."""
    if len(features) == 0:
        raise ValidationError("empty test set")
    pred = predict_class(model, features)
    return float(np.mean(pred != np.asarray(labels, dtype=float)))


def confusion_matrix(model: MlpModel, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Counts indexed [true, predicted] over model.classes."""
    pred = predict_class(model, features)
    labels = np.asarray(labels, dtype=float)
    k = len(model.classes)
    cm = np.zeros((k, k), dtype=int)
    ti = np.searchsorted(model.classes, labels)
    pi = np.searchsorted(model.classes, pred)
    np.add.at(cm, (ti, pi), 1)
    return cm


def regress_nme(model: MlpModel, features: np.ndarray, targets: np.ndarray) -> float:
    """Normalized mean error: mean |prediction - truth| / truth."""
    targets = np.asarray(targets, dtype=float)
    if np.any(targets <= 0):
        raise ValidationError("NME requires strictly positive true values")
    pred = forward(model, features)
    return float(np.mean(np.abs(pred - targets) / targets))


@dataclass
class EvalReport:
    metric: str  # "P" or "NME"
    value: float
    fold_values: list[float] | None = None
    std: float | None = None
    confusion: np.ndarray | None = None


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(fold,)).generate_state(1)[0])


def fit_on_dataset(
    train_ds: LabeledDataset,
    test_ds: LabeledDataset,
    config: TrainConfig,
    target: str,
    head: str,
) -> tuple[MlpModel, float]:
    """Standardize on train, fit, and score one split; returns (model, metric)."""
    x_train, x_test, _scaler = standardize(train_ds.features(), test_ds.features())
    y_train = train_ds.label_array(target)
    y_test = test_ds.label_array(target)
    n_outputs = 1 if head == "regression" else len(np.unique(y_train))
    model = init_model(x_train.shape[1], config.hidden, head, config.seed, n_outputs)
    model, _ = train(model, x_train, y_train, config)
    if head == "classification":
        return model, classify_error(model, x_test, y_test)
    return model, regress_nme(model, x_test, y_test)


def cross_validate(
    ds: LabeledDataset,
    k: int,
    config: TrainConfig,
    target: str = "s",
    head: str = "regression",
) -> EvalReport:
    """k-fold cross-validation; mean/std over folds are the error bars."""
    if k < 2:
        raise ValidationError("k must be >= 2")
    fold_values = []
    for fold, (train_ds, test_ds) in enumerate(kfold(ds, k, seed=config.seed)):
        cfg = replace(config, seed=_fold_seed(config.seed, fold))
        _, metric = fit_on_dataset(train_ds, test_ds, cfg, target, head)
        fold_values.append(metric)
    return EvalReport(
        metric="P" if head == "classification" else "NME",
        value=float(np.mean(fold_values)),
        fold_values=fold_values,
        std=float(np.std(fold_values)),
    )


def weight_profile(model: MlpModel) -> np.ndarray:
    """Mean absolute input-to-hidden weight per input bin."""
    return np.mean(np.abs(model.w1), axis=0)


def save_model(model: MlpModel, path: str | Path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "head": model.head,
        "shapes": {
            "w1": list(model.w1.shape), "b1": list(model.b1.shape),
            "w2": list(model.w2.shape), "b2": list(model.b2.shape),
        },
        "weights": {
            "w1": model.w1.tolist(), "b1": model.b1.tolist(),
            "w2": model.w2.tolist(), "b2": model.b2.tolist(),
        },
        "classes": None if model.classes is None else model.classes.tolist(),
        "target_scale": None if model.target_scale is None else list(model.target_scale),
        "manifest": model.manifest,
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_model(path: str | Path) -> MlpModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON ({exc})") from exc
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version")
    weights = payload["weights"]
    model = MlpModel(
        w1=np.array(weights["w1"]), b1=np.array(weights["b1"]),
        w2=np.array(weights["w2"]), b2=np.array(weights["b2"]),
        head=payload["head"],
        classes=None if payload["classes"] is None else np.array(payload["classes"]),
        target_scale=(
            None if payload["target_scale"] is None else tuple(payload["target_scale"])
        ),
        manifest=payload["manifest"],
    )
    for name, shape in payload["shapes"].items():
        if list(getattr(model, name).shape) != shape:
            raise DataFormatError(f"{path}: shape mismatch for {name}")
    return model
