"""Training loop, evaluation and checkpoint plumbing."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .classifier import LossWeights, cross_entropy_l2, total_loss
from .config import RunConfig
from .data import Dataset, read_checkpoint, save_checkpoint
from .encoders import DialogueFeatures
from .errors import CheckpointError, DataError, DivergenceError, DomainError
from .metrics import accuracy, weighted_f1
from .model import HauclModel
from .noise import NoiseSource, spawn_streams
from .optim import Adam
from .tensor import Tensor, no_grad

log = logging.getLogger(__name__)


@dataclass
class BatchLoss:
    total: Tensor
    ce: Tensor
    g: Tensor | float
    cl: Tensor | float
    preds: list[np.ndarray] | None = None


def _mean(values: Sequence) -> Tensor | float:
    acc = values[0]
    for v in values[1:]:
        acc = acc + v
    return acc * (1.0 / len(values))


def batch_loss(model: HauclModel, dialogues: Sequence[DialogueFeatures], noise=None) -> BatchLoss:
    """Objective for a batch: cross-entropy averaged over all utterances,
    autoencoder and contrastive terms averaged over dialogues."""
    cfg = model.config
    outs = [model.forward(dlg, noise) for dlg in dialogues]
    ce = cross_entropy_l2(
        [o.probs for o in outs],
        [dlg.labels for dlg in dialogues],
        model.named_params().values(),
        cfg.lam,
    )
    g1 = _mean([o.loss_g_view1 for o in outs])
    g2 = _mean([o.loss_g_view2 for o in outs])
    cl = _mean([o.loss_cl for o in outs])
    weights = LossWeights(lam_g=cfg.lam_g, lam_cl=cfg.lam_cl, lam=cfg.lam)
    total = total_loss(ce, g1, g2, cl, weights)
    return BatchLoss(total, ce, (g1 + g2) * 0.5, cl, [o.preds for o in outs])


def _value(x) -> float:
    return x.item() if isinstance(x, Tensor) else float(x)


def predict(model: HauclModel, dialogues: Sequence[DialogueFeatures]) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode predictions and labels over all utterances."""
    preds, labels = [], []
    with no_grad():
        for dlg in dialogues:
            preds.append(model.forward(dlg, None).preds)
            labels.append(dlg.labels)
    return np.concatenate(preds), np.concatenate(labels)


def evaluate(model: HauclModel, dataset: Dataset) -> dict[str, float]:
    preds, labels = predict(model, dataset.dialogues)
    return {"acc": accuracy(preds, labels), "wf1": weighted_f1(preds, labels, dataset.classes)}


def check_compatible(model: HauclModel, dataset: Dataset) -> None:
    if dataset.dims != model.dims:
        raise DataError(f"dataset dims {dataset.dims} do not match model dims {model.dims}")
    if dataset.classes != model.num_classes:
        raise DataError(f"dataset has {dataset.classes} classes, model has {model.num_classes}")
    if dataset.num_speakers > model.num_speakers:
        raise DataError(f"dataset has {dataset.num_speakers} speakers, model supports {model.num_speakers}")


def format_epoch(epoch: int, stats: dict[str, float]) -> str:
    return (
        f"epoch={epoch} loss={stats['loss']:.6f} l_ce={stats['l_ce']:.6f} l_g={stats['l_g']:.6f} "
        f"l_cl={stats['l_cl']:.6f} acc={stats['acc']:.4f} wf1={stats['wf1']:.4f}"
    )


def train(
    config: RunConfig,
    dataset: Dataset,
    emit: Callable[[str], None] | None = None,
) -> tuple[HauclModel, list[dict[str, float]]]:
    """Train a fresh model; ``emit`` receives one ``key=value`` line per epoch."""
    if len(dataset) == 0:
        raise DataError("training set has no dialogues")
    streams = spawn_streams(config.seed)
    model = HauclModel(config, dataset.dims, dataset.classes, dataset.num_speakers, streams["init"])
    noise = NoiseSource.from_streams(streams)
    params = model.named_params()
    opt = Adam(params, lr=config.lr)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = streams["data"].permutation(len(dataset))
        sums = {"loss": 0.0, "l_ce": 0.0, "l_g": 0.0, "l_cl": 0.0}
        for start in range(0, len(order), config.batch_size):
            batch = [dataset.dialogues[i] for i in order[start:start + config.batch_size]]
            try:
                loss = batch_loss(model, batch, noise)
            except DomainError as exc:
                raise DivergenceError(f"numerical breakdown at epoch {epoch}: {exc}") from exc
            value = loss.total.item()
            if not math.isfinite(value):
                raise DivergenceError(f"non-finite loss {value} at epoch {epoch}")
            opt.zero_grad()
            loss.total.backward()
            opt.step()
            for key, part in (("loss", loss.total), ("l_ce", loss.ce), ("l_g", loss.g), ("l_cl", loss.cl)):
                sums[key] += _value(part) * len(batch)
        stats = {k: v / len(dataset) for k, v in sums.items()}
        stats.update(evaluate(model, dataset))
        stats["epoch"] = epoch
        history.append(stats)
        line = format_epoch(epoch, stats)
        log.debug(line)
        if emit is not None:
            emit(line)
    return model, history


def checkpoint_meta(model: HauclModel) -> dict:
    # file paths describe a run, not the model
    config = {k: v for k, v in model.config.to_dict().items() if k not in ("data", "checkpoint")}
    return {
        "config": config,
        "dims": model.dims,
        "classes": model.num_classes,
        "num_speakers": model.num_speakers,
    }


def save_model(model: HauclModel, path) -> None:
    save_checkpoint(model.named_params(), path, checkpoint_meta(model))


def load_model(path) -> HauclModel:
    arrays, meta = read_checkpoint(path)
    try:
        config = RunConfig.from_dict(meta["config"])
        model = HauclModel(config, meta["dims"], int(meta["classes"]), int(meta["num_speakers"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: checkpoint metadata is incomplete or invalid: {exc}") from exc
    model.load_arrays(arrays)
    return model
