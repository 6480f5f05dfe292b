"""Variational hypergraph autoencoder.

The encoder runs one hypergraph convolution over the input graph and maps
the resulting node and hyperedge embeddings to diagonal Gaussians. Latents
are drawn with the reparameterisation ``m = mu + sigma * delta``. The decoder
scores every (node, hyperedge) pair by the inner product of their latents,
turns each score ``s`` into two-class logits ``[s, 0]`` and applies
Gumbel-Softmax; the class-0 probability is the presence probability of that
incidence entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import DimensionError, ParameterError
from .hyperconv import ConvParams, hypergraph_conv
from .init import linear
from .params import ParamGroup
from .tensor import Tensor

GUMBEL_EPS = 1e-10
BCE_EPS = 1e-7


@dataclass
class LatentHeads(ParamGroup):
    node_W_mu: Tensor
    node_b_mu: Tensor
    node_W_1: Tensor
    node_b_1: Tensor
    node_W_sigma: Tensor
    node_b_sigma: Tensor
    node_W_2: Tensor
    node_b_2: Tensor
    edge_W_mu: Tensor
    edge_b_mu: Tensor
    edge_W_1: Tensor
    edge_b_1: Tensor
    edge_W_sigma: Tensor
    edge_b_sigma: Tensor
    edge_W_2: Tensor
    edge_b_2: Tensor


def init_heads(d: int, d_z: int, rng: np.random.Generator) -> LatentHeads:
    kw = {}
    for kind in ("node", "edge"):
        kw[f"{kind}_W_mu"], kw[f"{kind}_b_mu"] = linear(d, d_z, rng)
        kw[f"{kind}_W_1"], kw[f"{kind}_b_1"] = linear(d_z, d_z, rng)
        kw[f"{kind}_W_sigma"], kw[f"{kind}_b_sigma"] = linear(d, d_z, rng)
        kw[f"{kind}_W_2"], kw[f"{kind}_b_2"] = linear(d_z, d_z, rng)
    return LatentHeads(**kw)


@dataclass
class VhgaeOutput:
    H_new: Tensor
    presence_probs: Tensor
    mu_v: Tensor
    sigma_v: Tensor
    mu_e: Tensor
    sigma_e: Tensor
    loss_g: Tensor | None = None


def vhgae_encode(X: Tensor, H, conv: ConvParams) -> tuple[Tensor, Tensor]:
    return hypergraph_conv(X, H, conv)


def _head(x: Tensor, heads: LatentHeads, kind: str) -> tuple[Tensor, Tensor]:
    g = lambda name: getattr(heads, f"{kind}_{name}")  # noqa: E731
    if x.shape[1] != g("W_mu").shape[0]:
        raise DimensionError(f"latent head {kind}: input width {x.shape[1]} vs {g('W_mu').shape}")
    mu = T.relu(x @ g("W_mu") + g("b_mu")) @ g("W_1") + g("b_1")
    sigma = T.softplus(T.relu(x @ g("W_sigma") + g("b_sigma")) @ g("W_2") + g("b_2"))
    return mu, sigma


def latent_params(v: Tensor, eps: Tensor, heads: LatentHeads) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """``(mu_v, sigma_v, mu_e, sigma_e)`` for nodes and hyperedges."""
    mu_v, sigma_v = _head(v, heads, "node")
    mu_e, sigma_e = _head(eps, heads, "edge")
    return mu_v, sigma_v, mu_e, sigma_e


def sample_latent(mu: Tensor, sigma: Tensor, rng=None, delta: np.ndarray | None = None) -> Tensor:
    """Reparameterised draw. ``delta`` overrides the standard-normal noise.

    ``rng`` may be a numpy Generator or anything with a ``normal(shape)``
    method (see :mod:`haucl.noise`).
    """
    if delta is None:
        if rng is None:
            return mu
        delta = rng.standard_normal(mu.shape) if isinstance(rng, np.random.Generator) else rng.normal(mu.shape)
    return mu + sigma * Tensor(delta)


def gumbel_noise(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, GUMBEL_EPS, 1.0 - GUMBEL_EPS)
    return -np.log(-np.log(u))


def decode_incidence(
    m_v: Tensor,
    m_e: Tensor,
    tau: float,
    rng=None,
    hard: bool = True,
    gumbel: np.ndarray | None = None,
    repair: bool = True,
) -> tuple[Tensor, Tensor]:
    """Reconstruct an incidence matrix from node and hyperedge latents.

    Returns ``(H_new, presence_probs)``. ``gumbel`` supplies the ``(3N, M, 2)``
    Gumbel noise directly; otherwise it is drawn from ``rng``, and with
    neither the decode is noiseless. With ``hard`` the forward value is the
    thresholded matrix (``p >= 0.5``) and gradients flow to the probabilities.
    ``repair`` forces every all-zero row to keep its most probable entry.
    """
    if not tau > 0:
        raise ParameterError(f"Gumbel-Softmax temperature must be positive, got {tau}")
    if m_v.shape[1] != m_e.shape[1]:
        raise DimensionError(f"decode: latent widths differ, {m_v.shape} vs {m_e.shape}")
    scores = m_v @ m_e.T
    logits = T.stack([scores, Tensor(np.zeros(scores.shape))], axis=-1)
    if gumbel is None and rng is not None:
        shape = logits.shape
        u = rng.random(shape) if isinstance(rng, np.random.Generator) else rng.uniform(shape)
        gumbel = gumbel_noise(u)
    if gumbel is not None:
        logits = logits + Tensor(gumbel)
    probs = T.softmax(logits * (1.0 / tau), axis=-1)[..., 0]
    if not hard:
        return probs, probs
    hard_H = (probs.data >= 0.5).astype(np.float64)
    if repair:
        empty = np.flatnonzero(hard_H.sum(axis=1) == 0)
        if empty.size:
            hard_H[empty, probs.data[empty].argmax(axis=1)] = 1.0
    return T.straight_through(probs, hard_H), probs


def kl_standard_normal(mu: Tensor, sigma: Tensor) -> Tensor:
    """Mean over entries of ``KL(N(mu, sigma^2) || N(0, 1))``."""
    return T.mean((sigma * sigma + mu * mu - 1.0 - 2.0 * T.log(sigma)) * 0.5)


def bce(target: np.ndarray, probs: Tensor) -> Tensor:
    target = np.asarray(target, dtype=np.float64)
    if target.shape != probs.shape:
        raise DimensionError(f"bce: target {target.shape} vs probs {probs.shape}")
    p = T.clip(probs, BCE_EPS, 1.0 - BCE_EPS)
    ll = Tensor(target) * T.log(p) + Tensor(1.0 - target) * T.log(1.0 - p)
    return -T.mean(ll)


def vhgae_loss(out: VhgaeOutput, H_orig: np.ndarray) -> Tensor:
    return (
        kl_standard_normal(out.mu_v, out.sigma_v)
        + kl_standard_normal(out.mu_e, out.sigma_e)
        + bce(H_orig, out.presence_probs)
    )


def run_vhgae(
    X: Tensor,
    H: np.ndarray,
    conv: ConvParams,
    heads: LatentHeads,
    tau: float,
    noise=None,
    hard: bool = True,
) -> VhgaeOutput:
    """Encode, sample, decode and score one view. ``noise=None`` is the deterministic eval path."""
    v, eps = vhgae_encode(X, H, conv)
    mu_v, sigma_v, mu_e, sigma_e = latent_params(v, eps, heads)
    m_v = sample_latent(mu_v, sigma_v, noise)
    m_e = sample_latent(mu_e, sigma_e, noise)
    H_new, probs = decode_incidence(m_v, m_e, tau, noise, hard=hard)
    out = VhgaeOutput(H_new, probs, mu_v, sigma_v, mu_e, sigma_e)
    out.loss_g = vhgae_loss(out, H)
    return out
