"""Accuracy and support-weighted F1."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def _pair(preds, labels) -> tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if preds.shape != labels.shape:
        raise DimensionError(f"{preds.size} predictions for {labels.size} labels")
    if preds.size == 0:
        raise DimensionError("no predictions to score")
    return preds, labels


def confusion_matrix(preds, labels, num_classes: int) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    preds, labels = _pair(preds, labels)
    if np.any(labels < 0) or np.any(labels >= num_classes) or np.any(preds < 0) or np.any(preds >= num_classes):
        raise IndexError(f"class ids must lie in [0, {num_classes})")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def accuracy(preds, labels) -> float:
    preds, labels = _pair(preds, labels)
    return float(np.mean(preds == labels))


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def per_class_f1(cm: np.ndarray) -> np.ndarray:
    tp = np.diag(cm).astype(np.float64)
    precision = _ratio(tp, cm.sum(axis=0))
    recall = _ratio(tp, cm.sum(axis=1))
    return _ratio(2 * precision * recall, precision + recall)


def weighted_f1(preds, labels, num_classes: int) -> float:
    cm = confusion_matrix(preds, labels, num_classes)
    support = cm.sum(axis=1)
    return float(np.dot(support, per_class_f1(cm)) / support.sum())
