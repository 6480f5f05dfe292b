"""Unimodal encoders and speaker embedding.

Acoustic and visual features get a per-modality affine map to width ``d``.
Textual features first run through a single-layer bidirectional GRU over
the dialogue (hidden size ``h`` per direction) and the concatenated states
are mapped to ``d``. A learned speaker vector is then added to each of the
three modality rows of an utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import DimensionError, EmptyDialogueError
from .hypergraph import MODALITIES
from .init import linear, uniform
from .params import ParamGroup
from .tensor import Tensor


@dataclass
class DialogueFeatures:
    """One dialogue: per-utterance raw modality vectors, speakers and labels."""

    text: np.ndarray
    audio: np.ndarray
    visual: np.ndarray
    speakers: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.text = np.atleast_2d(np.asarray(self.text, dtype=np.float64))
        self.audio = np.atleast_2d(np.asarray(self.audio, dtype=np.float64))
        self.visual = np.atleast_2d(np.asarray(self.visual, dtype=np.float64))
        self.speakers = np.asarray(self.speakers, dtype=np.int64).reshape(-1)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        n = len(self.speakers)
        if n == 0:
            raise EmptyDialogueError("dialogue has no utterances")
        for name in ("text", "audio", "visual", "labels"):
            if len(getattr(self, name)) != n:
                raise DimensionError(
                    f"{name} has {len(getattr(self, name))} rows but the dialogue has {n} utterances"
                )

    def __len__(self) -> int:
        return len(self.speakers)

    @property
    def dims(self) -> dict[str, int]:
        return {"t": self.text.shape[1], "a": self.audio.shape[1], "v": self.visual.shape[1]}

    def modality(self, m: str) -> np.ndarray:
        return {"t": self.text, "a": self.audio, "v": self.visual}[m]


@dataclass
class EncoderParams(ParamGroup):
    W_a: Tensor
    b_a: Tensor
    W_v: Tensor
    b_v: Tensor
    # GRU, per direction: input weights (d_t, 3h), recurrent weights (h, 3h),
    # gate order [reset | update | candidate]
    gru_f_Wi: Tensor
    gru_f_Wh: Tensor
    gru_f_bi: Tensor
    gru_f_bh: Tensor
    gru_b_Wi: Tensor
    gru_b_Wh: Tensor
    gru_b_bi: Tensor
    gru_b_bh: Tensor
    W_t: Tensor
    b_t: Tensor
    W_s: Tensor
    b_s: Tensor

    @property
    def hidden(self) -> int:
        return self.gru_f_Wh.shape[0]


def init_encoder(
    dims: dict[str, int], d: int, num_speakers: int, rng: np.random.Generator, hidden: int | None = None
) -> EncoderParams:
    h = hidden or max(1, d // 2)
    W_a, b_a = linear(dims["a"], d, rng)
    W_v, b_v = linear(dims["v"], d, rng)
    gru = {}
    for direction in ("f", "b"):
        # recurrent layers conventionally use 1/sqrt(hidden) for every tensor
        gru[f"gru_{direction}_Wi"] = uniform((dims["t"], 3 * h), h, rng)
        gru[f"gru_{direction}_Wh"] = uniform((h, 3 * h), h, rng)
        gru[f"gru_{direction}_bi"] = uniform((3 * h,), h, rng)
        gru[f"gru_{direction}_bh"] = uniform((3 * h,), h, rng)
    W_t, b_t = linear(2 * h, d, rng)
    W_s, b_s = linear(num_speakers, d, rng)
    return EncoderParams(W_a=W_a, b_a=b_a, W_v=W_v, b_v=b_v, W_t=W_t, b_t=b_t, W_s=W_s, b_s=b_s, **gru)


def gru_pass(X: Tensor, Wi: Tensor, Wh: Tensor, bi: Tensor, bh: Tensor, reverse: bool = False) -> Tensor:
    """Run a GRU over the rows of ``X`` and return the hidden state per row."""
    n = X.shape[0]
    h = Wh.shape[0]
    xs = X @ Wi + bi
    xs_rz, xs_n = xs[:, : 2 * h], xs[:, 2 * h:]
    state = Tensor(np.zeros((1, h)))
    states: list[Tensor | None] = [None] * n
    steps = range(n - 1, -1, -1) if reverse else range(n)
    for i in steps:
        gh = state @ Wh + bh
        rz = T.sigmoid(xs_rz[i:i + 1] + gh[:, : 2 * h])
        r, z = rz[:, :h], rz[:, h:]
        cand = T.tanh(xs_n[i:i + 1] + r * gh[:, 2 * h:])
        state = cand + z * (state - cand)
        states[i] = state
    return T.concat(states, axis=0)


def encode_modalities(dlg: DialogueFeatures, p: EncoderParams) -> Tensor:
    """Encoded node features ``(3N, d)`` in textual/acoustic/visual block order."""
    dims = dlg.dims
    expected = {"t": p.gru_f_Wi.shape[0], "a": p.W_a.shape[0], "v": p.W_v.shape[0]}
    if dims != expected:
        raise DimensionError(f"dialogue feature dims {dims} do not match encoder dims {expected}")
    text = Tensor(dlg.text)
    fwd = gru_pass(text, p.gru_f_Wi, p.gru_f_Wh, p.gru_f_bi, p.gru_f_bh)
    bwd = gru_pass(text, p.gru_b_Wi, p.gru_b_Wh, p.gru_b_bi, p.gru_b_bh, reverse=True)
    U_t = T.concat([fwd, bwd], axis=1) @ p.W_t + p.b_t
    U_a = Tensor(dlg.audio) @ p.W_a + p.b_a
    U_v = Tensor(dlg.visual) @ p.W_v + p.b_v
    blocks = {"t": U_t, "a": U_a, "v": U_v}
    return T.concat([blocks[m] for m in MODALITIES], axis=0)


def _check_speakers(speakers: np.ndarray, num_speakers: int) -> np.ndarray:
    speakers = np.asarray(speakers, dtype=np.int64)
    if np.any(speakers < 0) or np.any(speakers >= num_speakers):
        raise IndexError(f"speaker ids must lie in [0, {num_speakers}), got {speakers.tolist()}")
    return speakers


def speaker_embedding(speakers: np.ndarray, p: EncoderParams) -> Tensor:
    num_speakers = p.W_s.shape[0]
    speakers = _check_speakers(speakers, num_speakers)
    onehot = np.eye(num_speakers)[speakers]
    return Tensor(onehot) @ p.W_s + p.b_s


def embed_and_fuse_speakers(U: Tensor, speakers: np.ndarray, p: EncoderParams, enabled: bool = True) -> Tensor:
    n = len(speakers)
    if U.shape[0] != 3 * n:
        raise DimensionError(f"expected {3 * n} node rows for {n} utterances, got {U.shape[0]}")
    if not enabled:
        _check_speakers(speakers, p.W_s.shape[0])
        return U
    S = speaker_embedding(speakers, p)
    return U + T.concat([S, S, S], axis=0)
