"""Loss, optimizer, metrics, and the canonical-vs-rotated training protocol."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dataset import SceneDataset
from .errors import ConfigError, DivergenceError, FormatError
from .grid import LabelMap, SphericalGrid, make_grid
from .nn import ops
from .nn.autodiff import ComputationRecord, backward, zero_grads
from .nn.model import HourglassConfig, HourglassModel
from .rotation import haar_rotation, rotate_featuremap_array, rotate_labels_nearest

ORIENTATIONS = ("c", "3d")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    train_orientation: str = "c"
    eval_orientation: str = "c"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        for name in ("train_orientation", "eval_orientation"):
            if getattr(self, name) not in ORIENTATIONS:
                raise ConfigError(f"{name} must be 'c' or '3d', got {getattr(self, name)!r}")


# ---------------------------------------------------------------------------
# loss

def weighted_cross_entropy(logits: np.ndarray, labels: np.ndarray, rec: ComputationRecord | None = None):
    """Quadrature-area-weighted softmax cross-entropy, averaged over the batch.

    logits (N, K, 2B, 2B) or (K, 2B, 2B); labels matching without the class
    axis.  Returns the loss Node (use ``.value`` for the float).
    """
    z = logits
    y = labels
    if z.ndim == 3:
        z = z[None]
        y = y[None]
    from .nn.autodiff import Node

    node = z if isinstance(z, Node) else Node(np.asarray(z, dtype=np.float64))
    return ops.weighted_cross_entropy_op(rec, node, np.asarray(y))


# ---------------------------------------------------------------------------
# optimizer

def adam_init(params: dict) -> dict:
    return {
        "t": 0,
        "m": {name: np.zeros_like(p.value) for name, p in params.items()},
        "v": {name: np.zeros_like(p.value) for name, p in params.items()},
    }


def adam_step(params: dict, grads: dict, state: dict, hyper: TrainConfig) -> dict:
    """Standard bias-corrected first/second-moment update; mutates in place."""
    state["t"] += 1
    t = state["t"]
    b1, b2 = hyper.beta1, hyper.beta2
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads[name]
        m = state["m"][name]
        v = state["v"][name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.value -= hyper.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + hyper.eps)
    return state


# ---------------------------------------------------------------------------
# metrics

@dataclass
class EvalReport:
    per_class_iou_area: np.ndarray
    per_class_iou_nodes: np.ndarray
    miou_area: float
    miou_nodes: float
    pixel_accuracy: float
    sample_count: int

    def lines(self) -> list[str]:
        out = [
            f"miou_w={self.miou_area:.6f}",
            f"miou_u={self.miou_nodes:.6f}",
            f"pixel_acc={self.pixel_accuracy:.6f}",
            f"samples={self.sample_count}",
        ]
        for c, (a, u) in enumerate(zip(self.per_class_iou_area, self.per_class_iou_nodes)):
            out.append(f"iou_class{c}_w={a:.6f} iou_class{c}_u={u:.6f}")
        return out


class IoUAccumulator:
    """Confusion-matrix accumulation in quadrature area and in node counts."""

    def __init__(self, num_classes: int, grid: SphericalGrid):
        self.C = num_classes
        self.area_w = grid.area_weights.ravel()
        self.conf_area = np.zeros(num_classes * num_classes)
        self.conf_nodes = np.zeros(num_classes * num_classes)
        self.samples = 0

    def update(self, pred: np.ndarray, gt: np.ndarray) -> None:
        idx = (gt.ravel() * self.C + pred.ravel()).astype(np.int64)
        self.conf_area += np.bincount(idx, weights=self.area_w, minlength=self.C * self.C)
        self.conf_nodes += np.bincount(idx, minlength=self.C * self.C)
        self.samples += 1

    @staticmethod
    def _iou(conf: np.ndarray, C: int) -> np.ndarray:
        conf = conf.reshape(C, C)
        inter = np.diag(conf)
        union = conf.sum(axis=0) + conf.sum(axis=1) - inter
        iou = np.full(C, np.nan)
        present = union > 0
        iou[present] = inter[present] / union[present]
        return iou

    def report(self) -> EvalReport:
        iou_a = self._iou(self.conf_area, self.C)
        iou_n = self._iou(self.conf_nodes, self.C)
        conf_n = self.conf_nodes.reshape(self.C, self.C)
        acc = float(np.diag(conf_n).sum() / max(conf_n.sum(), 1.0))
        return EvalReport(
            per_class_iou_area=iou_a,
            per_class_iou_nodes=iou_n,
            miou_area=float(np.nanmean(iou_a)),
            miou_nodes=float(np.nanmean(iou_n)),
            pixel_accuracy=acc,
            sample_count=self.samples,
        )


def mean_iou(pred: LabelMap, gt: LabelMap, grid: SphericalGrid, num_classes: int) -> EvalReport:
    """Single-pair report; use :class:`IoUAccumulator` to pool across samples."""
    acc = IoUAccumulator(num_classes, grid)
    acc.update(pred.labels, gt.labels)
    return acc.report()


# ---------------------------------------------------------------------------
# training loop

@dataclass
class Checkpoint:
    version: int
    model_cfg: HourglassConfig
    train_cfg: TrainConfig
    arrays: dict  # parameter and buffer tensors
    adam_m: dict
    adam_v: dict
    adam_t: int
    rng_state: np.ndarray  # packed PCG64 states (shuffle, rotation)
    epoch: int


def pack_rng_state(*rngs) -> np.ndarray:
    out = []
    for rng in rngs:
        st = rng.bit_generator.state
        s = st["state"]["state"]
        inc = st["state"]["inc"]
        mask = (1 << 64) - 1
        out.extend(
            [s & mask, (s >> 64) & mask, inc & mask, (inc >> 64) & mask, st["has_uint32"], st["uinteger"]]
        )
    return np.array(out, dtype=np.uint64)


def unpack_rng_state(packed: np.ndarray) -> list[np.random.Generator]:
    rngs = []
    for i in range(0, len(packed), 6):
        chunk = [int(v) for v in packed[i : i + 6]]
        rng = np.random.default_rng(0)
        rng.bit_generator.state = {
            "bit_generator": "PCG64",
            "state": {"state": chunk[0] | (chunk[1] << 64), "inc": chunk[2] | (chunk[3] << 64)},
            "has_uint32": chunk[4],
            "uinteger": chunk[5],
        }
        rngs.append(rng)
    return rngs


def _load_batch(dataset: SceneDataset, indices, orientation: str, rot_rng) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for i in indices:
        if orientation == "3d":
            rot = haar_rotation(rot_rng)
            x, y = dataset.render(int(i), rot)
        else:
            x, y = dataset.load(int(i))
        xs.append(x)
        ys.append(y)
    return np.stack(xs), np.stack(ys)


def train(model_cfg: HourglassConfig, train_cfg: TrainConfig, dataset: SceneDataset, log=None):
    """Deterministic training run; returns (Checkpoint, log line list)."""
    if dataset.B != model_cfg.B_in:
        raise ConfigError(f"dataset bandlimit {dataset.B} != model B_in {model_cfg.B_in}")
    model = HourglassModel(model_cfg, seed=train_cfg.seed)
    state = adam_init(model.params)
    shuffle_rng = np.random.default_rng([1, train_cfg.seed])
    rot_rng = np.random.default_rng([2, train_cfg.seed])
    n = len(dataset)
    lines = []
    for epoch in range(1, train_cfg.epochs + 1):
        t0 = time.perf_counter()
        perm = shuffle_rng.permutation(n)
        total_loss = 0.0
        batches = 0
        acc = IoUAccumulator(model_cfg.num_classes, make_grid(model_cfg.B_in))
        for start in range(0, n, train_cfg.batch_size):
            idx = perm[start : start + train_cfg.batch_size]
            x, y = _load_batch(dataset, idx, train_cfg.train_orientation, rot_rng)
            rec = ComputationRecord()
            logits = model.forward(x, rec, training=True)
            loss = ops.weighted_cross_entropy_op(rec, logits, y)
            if not np.isfinite(loss.value):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            grads = backward(rec, 1.0)
            adam_step(model.params, grads, state, train_cfg)
            zero_grads(model.params)
            total_loss += float(loss.value)
            batches += 1
            pred = np.argmax(logits.value, axis=1)
            for b in range(pred.shape[0]):
                acc.update(pred[b], y[b])
        rep = acc.report()
        line = (
            f"epoch={epoch} loss={total_loss / batches:.6f} "
            f"miou_w={rep.miou_area:.4f} miou_u={rep.miou_nodes:.4f} "
            f"seconds={time.perf_counter() - t0:.2f}"
        )
        lines.append(line)
        if log is not None:
            log(line)
    ckpt = Checkpoint(
        version=1,
        model_cfg=model_cfg,
        train_cfg=train_cfg,
        arrays={k: v.copy() for k, v in model.state_arrays().items()},
        adam_m={k: v.copy() for k, v in state["m"].items()},
        adam_v={k: v.copy() for k, v in state["v"].items()},
        adam_t=state["t"],
        rng_state=pack_rng_state(shuffle_rng, rot_rng),
        epoch=train_cfg.epochs,
    )
    return ckpt, lines


def model_from_checkpoint(ckpt: Checkpoint) -> HourglassModel:
    model = HourglassModel(ckpt.model_cfg, seed=0)
    model.load_arrays(ckpt.arrays)
    return model


def evaluate(
    ckpt_or_model,
    dataset: SceneDataset,
    orientation: str = "c",
    seed: int = 0,
    chunk: int = 8,
) -> EvalReport:
    """Inference-mode evaluation; in 3d mode every sample gets a Haar
    rotation seeded by its index (exact re-render when the dataset allows,
    spectral input + nearest-node label rotation otherwise)."""
    if orientation not in ORIENTATIONS:
        raise ConfigError(f"orientation must be 'c' or '3d', got {orientation!r}")
    model = ckpt_or_model if isinstance(ckpt_or_model, HourglassModel) else model_from_checkpoint(ckpt_or_model)
    cfg = model.cfg
    grid = make_grid(cfg.B_in)
    acc = IoUAccumulator(cfg.num_classes, grid)
    n = len(dataset)
    for start in range(0, n, chunk):
        xs, ys = [], []
        for i in range(start, min(start + chunk, n)):
            if orientation == "3d":
                rot = haar_rotation(np.random.default_rng([seed, i]))
                try:
                    x, y = dataset.render(i, rot)
                except FormatError:  # no generator info: rotate stored sample instead
                    x0, y0 = dataset.load(i)
                    x = rotate_featuremap_array(x0, cfg.B_in, rot)
                    y = rotate_labels_nearest(y0, grid, rot)
            else:
                x, y = dataset.load(i)
            xs.append(x)
            ys.append(y)
        logits = model.forward(np.stack(xs), None, training=False).value
        pred = np.argmax(logits, axis=1)
        for b in range(pred.shape[0]):
            acc.update(pred[b], ys[b])
    return acc.report()
