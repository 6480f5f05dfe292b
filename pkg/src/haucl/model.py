"""The full two-view pipeline for one dialogue."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import tensor as T
from .classifier import HeadParams, classify, fuse_views, init_head
from .config import RunConfig
from .contrastive import contrastive_loss
from .encoders import (
    DialogueFeatures,
    EncoderParams,
    embed_and_fuse_speakers,
    encode_modalities,
    init_encoder,
)
from .errors import CheckpointError, DimensionError
from .hyperconv import ConvParams, conv_stack, init_conv
from .hypergraph import build_initial_incidence
from .params import ModelParams
from .tensor import Tensor
from .vhgae import LatentHeads, VhgaeOutput, init_heads, run_vhgae


@dataclass
class DialogueOutput:
    probs: Tensor
    preds: np.ndarray
    nodes_view1: Tensor
    nodes_view2: Tensor
    loss_g_view1: Tensor | float = 0.0
    loss_g_view2: Tensor | float = 0.0
    loss_cl: Tensor | float = 0.0
    vhgae_views: tuple[VhgaeOutput, ...] = ()


class HauclModel:
    """Parameters plus the forward pass.

    ``noise`` controls stochasticity: ``None`` is the deterministic eval path
    (no dropout, zero reparameterisation noise, noiseless thresholded decode,
    so both views coincide); a :class:`~haucl.noise.NoiseSource` gives the
    training path with independent draws for each view.
    """

    def __init__(
        self,
        config: RunConfig,
        dims: Mapping[str, int],
        num_classes: int,
        num_speakers: int,
        rng: np.random.Generator | None = None,
    ):
        self.config = config
        self.dims = dict(dims)
        self.num_classes = num_classes
        self.num_speakers = num_speakers
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        d = config.d
        self.encoder: EncoderParams = init_encoder(self.dims, d, num_speakers, rng, config.gru_dim)
        self.vhgae_conv: ConvParams = init_conv(d, rng)
        self.heads: LatentHeads = init_heads(d, config.latent_dim, rng)
        self.convs: list[ConvParams] = [init_conv(d, rng) for _ in range(config.layers)]
        self.head: HeadParams = init_head(d, config.head_dim, num_classes, rng)

    # -- parameters ---------------------------------------------------
    def named_params(self) -> ModelParams:
        out: ModelParams = {}
        out.update(self.encoder.named("encoder"))
        out.update(self.vhgae_conv.named("vhgae.conv"))
        out.update(self.heads.named("vhgae.heads"))
        for i, c in enumerate(self.convs):
            out.update(c.named(f"conv{i}"))
        out.update(self.head.named("head"))
        return out

    def load_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        """Copy checkpoint arrays into this model, checking names and shapes."""
        own = self.named_params()
        missing = set(own) - set(arrays)
        extra = set(arrays) - set(own)
        if missing or extra:
            raise CheckpointError(
                f"checkpoint parameters do not match the model (missing {sorted(missing)}, extra {sorted(extra)})"
            )
        for name, t in own.items():
            if arrays[name].shape != t.shape:
                raise DimensionError(f"parameter {name}: checkpoint shape {arrays[name].shape} vs model {t.shape}")
        for name, t in own.items():
            t.data = np.array(arrays[name], dtype=np.float64)

    # -- forward --------------------------------------------------------
    def node_features(self, dlg: DialogueFeatures, noise=None) -> Tensor:
        cfg = self.config
        U = encode_modalities(dlg, self.encoder)
        if noise is not None and cfg.dropout > 0:
            U = T.dropout(U, cfg.dropout, True, mask=noise.dropout_mask(U.shape, cfg.dropout))
        return embed_and_fuse_speakers(U, dlg.speakers, self.encoder, enabled=not cfg.no_speaker_embedding)

    def forward(self, dlg: DialogueFeatures, noise=None) -> DialogueOutput:
        cfg = self.config
        V = self.node_features(dlg, noise)
        H0 = build_initial_incidence(len(dlg)).incidence

        if cfg.no_vhgae_paths:
            X1, _ = conv_stack(V, H0, self.convs)
            probs, preds = classify(fuse_views(X1, X1), self.head)
            return DialogueOutput(probs, preds, X1, X1)

        views = []
        for _ in range(1 if noise is None else 2):
            out = run_vhgae(V, H0, self.vhgae_conv, self.heads, cfg.tau_gumbel, noise, hard=not cfg.soft_incidence)
            X, _ = conv_stack(V, out.H_new, self.convs)
            views.append((out, X))
        if len(views) == 1:
            views.append(views[0])
        (g1, X1), (g2, X2) = views
        loss_cl = 0.0 if cfg.no_contrastive else contrastive_loss(X1, X2, cfg.tau_cl)
        probs, preds = classify(fuse_views(X1, X2), self.head)
        return DialogueOutput(probs, preds, X1, X2, g1.loss_g, g2.loss_g, loss_cl, (g1, g2))
