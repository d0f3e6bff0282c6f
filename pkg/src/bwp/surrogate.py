"""Small fully-connected network mapping (x, y, W, L) to (g_i, g_p).

Hidden layers use ReLU, the output layer is affine.  Inputs and targets are
standardized with statistics of the training split, and the loss is the
mean squared error on the standardized targets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ROOM_AREAS, ROOM_ASPECT_RATIOS, DEFAULT_RESOLUTION, room_grid_eval
from .core import QuadratureConfig
from .geometry import RoomSpec
from .propagation import Scenario

MODEL_HEADER = "bwp-mlp v1"
DEFAULT_SIZES = (4, 30, 30, 2)
INPUTS = ("x", "y", "width", "length")
OUTPUTS = ("g_i", "g_p")


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class MlpModel:
    sizes: tuple[int, ...]
    weights: list[np.ndarray]  # weights[k] has shape (sizes[k], sizes[k+1])
    biases: list[np.ndarray]
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError("need at least an input and an output layer")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("layer count does not match sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[k], self.sizes[k + 1]) or b.shape != (self.sizes[k + 1],):
                raise ValueError(f"layer {k} has wrong shape")
        for name, n in (("x_mean", self.sizes[0]), ("x_std", self.sizes[0]),
                        ("y_mean", self.sizes[-1]), ("y_std", self.sizes[-1])):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (n,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be {n} finite values")
            setattr(self, name, v)
        if np.any(self.x_std <= 0) or np.any(self.y_std <= 0):
            raise ValueError("normalization scales must be positive")

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.x_mean.copy(), self.x_std.copy(), self.y_mean.copy(), self.y_std.copy())


def init_model(sizes=DEFAULT_SIZES, seed: int = 0, zero_output: bool = True) -> MlpModel:
    """Fan-in scaled uniform weights, zero biases, identity normalization.

    With ``zero_output`` the last layer starts at zero, so an untrained model
    predicts the training mean and the hidden layers learn only the residual.
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        lim = math.sqrt(6.0 / n_in)
        weights.append(rng.uniform(-lim, lim, (n_in, n_out)))
        biases.append(np.zeros(n_out))
    if zero_output:
        weights[-1][:] = 0.0
    return MlpModel(tuple(sizes), weights, biases, np.zeros(sizes[0]), np.ones(sizes[0]),
                    np.zeros(sizes[-1]), np.ones(sizes[-1]))


def _as_batch(model: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != model.sizes[0]:
        raise ValueError(f"expected inputs with {model.sizes[0]} columns, got shape {x.shape}")
    return x, single


def _forward_norm(weights, biases, xn):
    acts = [xn]
    h = xn
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if k == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def forward(model: MlpModel, x) -> np.ndarray:
    """Denormalized predictions, shape ``(n, outputs)`` (or ``(outputs,)`` for one row)."""
    x, single = _as_batch(model, x)
    xn = (x - model.x_mean) / model.x_std
    out = _forward_norm(model.weights, model.biases, xn)[-1] * model.y_std + model.y_mean
    return out[0] if single else out


def loss_and_grads(model: MlpModel, xn: np.ndarray, yn: np.ndarray):
    """MSE on normalized data and its gradients by backpropagation."""
    acts = _forward_norm(model.weights, model.biases, xn)
    diff = acts[-1] - yn
    loss = float(np.mean(diff * diff))
    delta = 2.0 * diff / diff.size
    gw, gb = [None] * len(model.weights), [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k].T) * (acts[k] > 0)
    return loss, gw, gb


def gradient_check(model: MlpModel, xn: np.ndarray, yn: np.ndarray, step: float = 1e-5) -> float:
    """Largest relative gap between backprop and central finite differences."""
    _, gw, gb = loss_and_grads(model, xn, yn)
    worst = 0.0
    for params, grads in ((model.weights, gw), (model.biases, gb)):
        for p, g in zip(params, grads):
            flat, gflat = p.reshape(-1), g.reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + step
                up = loss_and_grads(model, xn, yn)[0]
                flat[i] = keep - step
                down = loss_and_grads(model, xn, yn)[0]
                flat[i] = keep
                num = (up - down) / (2.0 * step)
                scale = max(abs(num), abs(gflat[i]), 1e-8)
                worst = max(worst, abs(num - gflat[i]) / scale)
    return worst


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray   # (n, 4): x, y, width, length in meters
    targets: np.ndarray  # (n, 2): g_i, g_p

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.targets.ndim != 2 or len(self.inputs) != len(self.targets):
            raise ValueError("inputs and targets must be 2-D with matching row counts")

    def __len__(self):
        return len(self.inputs)


def generate_dataset(areas=ROOM_AREAS, aspect_ratios=ROOM_ASPECT_RATIOS, scenario: Scenario | None = None,
                     resolution: float = DEFAULT_RESOLUTION, quad: QuadratureConfig | None = None,
                     *, rooms=None, min_cells: int = 100, threads: int = 1) -> Dataset:
    """Label every UE cell of every room with the quadrature result.

    ``rooms`` may replace the area/AR product with explicit ``RoomSpec``s.
    """
    if scenario is None:
        raise ValueError("a scenario is required")
    if rooms is None:
        rooms = [RoomSpec.from_area(a, ar) for a in areas for ar in aspect_ratios]
    xs, ys = [], []
    for room in rooms:
        grid = room_grid_eval(room, scenario, resolution, quad, min_cells=min_cells, threads=threads)
        for r in grid.results:
            xs.append((r.ue[0], r.ue[1], room.width, room.length))
            ys.append((r.g_i, r.g_p))
    return Dataset(np.array(xs, dtype=float), np.array(ys, dtype=float))


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 1500
    seed: int = 0
    val_fraction: float = 0.2
    momentum: float = 0.9
    sizes: tuple[int, ...] = DEFAULT_SIZES

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.batch_size > 0 and self.epochs > 0):
            raise ValueError("learning rate, batch size and epochs must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    val_rmse: tuple[float, ...] = ()
    train_rmse: tuple[float, ...] = ()
    n_train: int = 0
    n_val: int = 0


def split_indices(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle into (train, validation); validation is empty when ``n < 2``."""
    perm = np.random.default_rng([seed, 1]).permutation(n)
    n_val = int(round(n * val_fraction)) if n > 1 else 0
    n_val = min(max(n_val, 1 if n > 1 else 0), n - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def rmse(model: MlpModel, data_x: np.ndarray, data_y: np.ndarray) -> tuple[float, ...]:
    if len(data_x) == 0:
        return tuple(math.nan for _ in range(model.sizes[-1]))
    err = forward(model, data_x) - data_y
    return tuple(float(v) for v in np.sqrt(np.mean(err * err, axis=0)))


def train(dataset: Dataset, cfg: TrainConfig | None = None, model: MlpModel | None = None
          ) -> tuple[MlpModel, TrainReport]:
    """Mini-batch gradient descent with momentum on the standardized MSE.

    Initialization, split and shuffling draw from independent streams of
    ``cfg.seed``, so equal inputs give bit-identical models.
    """
    cfg = cfg or TrainConfig()
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    tr, va = split_indices(len(dataset), cfg.val_fraction, cfg.seed)
    x_tr, y_tr = dataset.inputs[tr], dataset.targets[tr]
    model = model.copy() if model is not None else init_model(cfg.sizes, cfg.seed)
    if x_tr.shape[1] != model.sizes[0] or y_tr.shape[1] != model.sizes[-1]:
        raise ValueError("dataset width does not match the model")
    model.x_mean, model.y_mean = x_tr.mean(axis=0), y_tr.mean(axis=0)
    model.x_std = _safe_std(x_tr)
    model.y_std = _safe_std(y_tr)
    xn = (x_tr - model.x_mean) / model.x_std
    yn = (y_tr - model.y_mean) / model.y_std

    rng = np.random.default_rng([cfg.seed, 2])
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    report = TrainReport(n_train=len(tr), n_val=len(va))
    n = len(xn)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, gw, gb = loss_and_grads(model, xn[idx], yn[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} at epoch {epoch}; lower the learning rate")
            total += loss * len(idx)
            for k in range(len(model.weights)):
                vel_w[k] = cfg.momentum * vel_w[k] - cfg.learning_rate * gw[k]
                vel_b[k] = cfg.momentum * vel_b[k] - cfg.learning_rate * gb[k]
                model.weights[k] += vel_w[k]
                model.biases[k] += vel_b[k]
        report.losses.append(total / n)
    report.train_rmse = rmse(model, x_tr, y_tr)
    report.val_rmse = rmse(model, dataset.inputs[va], dataset.targets[va])
    return model, report


def _safe_std(a: np.ndarray) -> np.ndarray:
    s = a.std(axis=0)
    return np.where(s > 0, s, 1.0)


# ---------------------------------------------------------------------------
# model file


def dumps_model(model: MlpModel) -> str:
    def row(v):
        return " ".join(repr(float(x)) for x in np.ravel(v))

    lines = [MODEL_HEADER, "sizes " + " ".join(str(s) for s in model.sizes)]
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"weights {k}")
        lines.extend(row(r) for r in w)
        lines.append(f"bias {k}")
        lines.append(row(b))
    for name in ("x_mean", "x_std", "y_mean", "y_std"):
        lines.append(f"{name} {row(getattr(model, name))}")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> MlpModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != MODEL_HEADER:
        raise ValueError(f"not a {MODEL_HEADER!r} file")
    pos = 1

    def take(prefix):
        nonlocal pos
        if pos >= len(lines) or not lines[pos].startswith(prefix):
            raise ValueError(f"expected {prefix!r} on model line {pos + 1}")
        rest = lines[pos][len(prefix):].split()
        pos += 1
        return rest

    def floats(tokens, n):
        vals = np.array([float(t) for t in tokens])
        if vals.size != n:
            raise ValueError(f"expected {n} values on model line {pos}")
        return vals

    sizes = tuple(int(t) for t in take("sizes"))
    weights, biases = [], []
    for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        take(f"weights {k}")
        weights.append(np.array([floats(take(""), n_out) for _ in range(n_in)]))
        take(f"bias {k}")
        biases.append(floats(take(""), n_out))
    norms = {}
    for name, n in (("x_mean", sizes[0]), ("x_std", sizes[0]), ("y_mean", sizes[-1]), ("y_std", sizes[-1])):
        norms[name] = floats(take(name + " "), n)
    return MlpModel(sizes, weights, biases, **norms)


def save_model(model: MlpModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> MlpModel:
    return loads_model(Path(path).read_text())
