"""Finite-difference verification of analytic gradients.

Two passes:

* every primitive op on random inputs, so a broken backward rule is named
  directly;
* the full training objective of a tiny model, parameter by parameter, with
  all random draws frozen.

Relative error is ``|analytic - numeric| / max(1, |numeric|)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .config import RunConfig
from .data import generate_synthetic
from .model import HauclModel
from .noise import FrozenNoise, NoiseSource, spawn_streams
from .tensor import Tensor, no_grad
from .train import batch_loss

STEP = 1e-4


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    worst_index: tuple = ()


@dataclass
class GradcheckReport:
    ops: list[CheckResult] = field(default_factory=list)
    params: list[CheckResult] = field(default_factory=list)

    def worst(self) -> CheckResult:
        return max(self.ops + self.params, key=lambda r: r.max_rel_err)

    def failures(self, tol: float) -> list[CheckResult]:
        return [r for r in self.ops + self.params if not r.max_rel_err < tol]


def rel_err(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))


def numeric_grad(f: Callable[[], float], x: np.ndarray, h: float = STEP) -> np.ndarray:
    """Central differences of ``f`` w.r.t. ``x``, perturbing ``x`` in place."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f()
        x[idx] = orig - h
        fm = f()
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * h)
    return g


def check_function(name: str, fn: Callable[..., Tensor], inputs: Sequence[np.ndarray], h: float = STEP) -> CheckResult:
    """Compare gradients of ``sum(fn(*inputs) * w)`` for a fixed random ``w``."""
    leaves = [Tensor(x, requires_grad=True) for x in inputs]
    out = fn(*leaves)
    w = Tensor(np.random.default_rng(len(name)).uniform(0.5, 1.5, out.shape))
    (out * w).sum().backward()
    worst, where = 0.0, ()
    for k, leaf in enumerate(leaves):
        arr = leaf.data

        def f():
            with no_grad():
                return float((fn(*[Tensor(l.data) for l in leaves]) * w).sum().item())

        num = numeric_grad(f, arr, h)
        ana = leaf.grad if leaf.grad is not None else np.zeros_like(arr)
        err = rel_err(ana, num)
        if err.size and err.max() > worst:
            worst, where = float(err.max()), (k, np.unravel_index(err.argmax(), err.shape))
    return CheckResult(name, worst, where)


def _op_cases(rng: np.random.Generator) -> list[tuple[str, Callable, list[np.ndarray]]]:
    def u(*shape, lo=-2.0, hi=2.0):
        return rng.uniform(lo, hi, shape)

    def away_from_zero(*shape):
        x = u(*shape)
        return np.where(np.abs(x) < 0.05, 0.5, x)

    def off_bounds(*shape):
        x = u(*shape)
        return np.where(np.abs(np.abs(x) - 1.0) < 0.05, 0.5, x)

    idx = (np.array([0, 2, 2]), np.array([1, 0, 1]))
    mask = np.array([[True, False, True, True], [False, True, True, True], [True, True, True, False]])
    keep = rng.random((3, 4)) >= 0.3
    return [
        ("add", T.add, [u(3, 4), u(4)]),
        ("sub", T.sub, [u(3, 1), u(3, 4)]),
        ("mul", T.mul, [u(3, 4), u(1, 4)]),
        ("div", T.div, [u(3, 4), u(3, 4, lo=0.5, hi=2.0)]),
        ("matmul", T.matmul, [u(3, 4), u(4, 2)]),
        ("pow", lambda a: T.power(a, 3.0), [u(3, 4)]),
        ("exp", T.exp, [u(3, 4)]),
        ("log", T.log, [u(3, 4, lo=0.2, hi=2.0)]),
        ("sqrt", T.sqrt, [u(3, 4, lo=0.2, hi=2.0)]),
        ("relu", T.relu, [away_from_zero(3, 4)]),
        ("sigmoid", T.sigmoid, [u(3, 4)]),
        ("tanh", T.tanh, [u(3, 4)]),
        ("softplus", T.softplus, [u(3, 4)]),
        ("clip", lambda a: T.clip(a, -1.0, 1.0), [off_bounds(3, 4)]),
        ("sum", lambda a: T.tsum(a, axis=1, keepdims=True), [u(3, 4)]),
        ("mean", lambda a: T.mean(a, axis=0), [u(3, 4)]),
        ("reshape", lambda a: T.reshape(a, (4, 3)), [u(3, 4)]),
        ("transpose", T.transpose, [u(3, 4)]),
        ("getitem", lambda a: T.getitem(a, idx), [u(3, 4)]),
        ("concat", lambda a, b: T.concat([a, b], axis=1), [u(3, 2), u(3, 4)]),
        ("softmax", lambda a: T.softmax(a, axis=1), [u(3, 4)]),
        ("logsumexp", lambda a: T.masked_logsumexp(a, mask, axis=1), [u(3, 4)]),
        ("reciprocal", T.safe_reciprocal, [u(3, 4, lo=0.5, hi=2.0)]),
        ("dropout", lambda a: T.dropout(a, 0.3, True, mask=keep), [u(3, 4)]),
    ]


def check_ops(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check_function(name, fn, inputs) for name, fn, inputs in _op_cases(rng)]


TINY = dict(d=8, d_z=8, d_h=8, d_gru=4, dropout=0.4, soft_incidence=True)


def tiny_setup(config: RunConfig | None = None, num_utterances: int = 4, seed: int = 0):
    """A tiny model and one synthetic dialogue (C=3, S=2)."""
    config = config or RunConfig(**TINY, seed=seed)
    ds = generate_synthetic(
        classes=3, num_speakers=2, num_dialogues=1, len_range=(num_utterances, num_utterances),
        dims={"t": 5, "a": 4, "v": 3}, inertia=0.5, seed=seed,
    )
    streams = spawn_streams(config.seed)
    model = HauclModel(config, ds.dims, ds.classes, ds.num_speakers, streams["init"])
    return model, ds, FrozenNoise(NoiseSource.from_streams(streams))


def check_model(model: HauclModel, dialogues, noise: FrozenNoise, h: float = STEP) -> list[CheckResult]:
    """Per-parameter check of the full objective with frozen noise."""
    params = model.named_params()
    for p in params.values():
        p.grad = None
    batch_loss(model, dialogues, noise).total.backward()
    noise.rewind()
    analytic = {k: (p.grad if p.grad is not None else np.zeros_like(p.data)) for k, p in params.items()}

    def f() -> float:
        noise.rewind()
        with no_grad():
            return batch_loss(model, dialogues, noise).total.item()

    results = []
    for name, p in params.items():
        num = numeric_grad(f, p.data, h)
        err = rel_err(analytic[name], num)
        results.append(CheckResult(name, float(err.max()), np.unravel_index(err.argmax(), err.shape)))
    for p in params.values():
        p.grad = None
    return results


def run_gradcheck(config: RunConfig | None = None, num_utterances: int = 4, seed: int = 0) -> GradcheckReport:
    model, ds, noise = tiny_setup(config, num_utterances, seed)
    return GradcheckReport(ops=check_ops(seed), params=check_model(model, ds.dialogues, noise))
