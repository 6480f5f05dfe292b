from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haucl import vhgae as V
from haucl.errors import ParameterError
from haucl.gradcheck import check_function
from haucl.hyperconv import init_conv
from haucl.hypergraph import build_initial_incidence
from haucl.noise import NoiseSource
from haucl.tensor import Tensor


def _relu(x):
    return np.maximum(x, 0)


def _softplus(x):
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


def test_encode_shapes(rng):
    X = Tensor(rng.normal(size=(3, 5)))
    v, e = V.vhgae_encode(X, build_initial_incidence(1).incidence, init_conv(5, rng))
    assert v.shape == (3, 5) and e.shape == (4, 5)


def test_encode_equal_rows_identity_conv():
    from haucl.hyperconv import ConvParams

    c = np.array([0.5, 2.0])
    p = ConvParams(Tensor(np.eye(2)), Tensor(np.zeros(2)), Tensor(np.eye(2)), Tensor(np.zeros(2)))
    _, e = V.vhgae_encode(Tensor(np.tile(c, (6, 1))), build_initial_incidence(2).incidence, p)
    np.testing.assert_allclose(e.data, np.tile(c, (5, 1)))


def test_latent_params_zero_weights(rng):
    heads = V.init_heads(4, 3, rng)
    for t in heads.named("h").values():
        t.data[...] = 0.0
    mu_v, s_v, mu_e, s_e = V.latent_params(Tensor(rng.normal(size=(6, 4))), Tensor(rng.normal(size=(5, 4))), heads)
    for mu in (mu_v, mu_e):
        assert not mu.data.any()
    for s in (s_v, s_e):
        np.testing.assert_allclose(s.data, math.log(2), atol=1e-15)


def test_latent_params_scalar_oracle(rng):
    heads = V.init_heads(3, 2, rng)
    x = rng.normal(size=(2, 3))
    mu, sigma, _, _ = V.latent_params(Tensor(x), Tensor(x), heads)
    g = {k: t.data for k, t in heads.named("").items()}
    for i in range(2):
        for j in range(2):
            hidden_mu = [_relu(sum(x[i, k] * g[".node_W_mu"][k, h] for k in range(3)) + g[".node_b_mu"][h]) for h in range(2)]
            want_mu = sum(hidden_mu[h] * g[".node_W_1"][h, j] for h in range(2)) + g[".node_b_1"][j]
            hidden_s = [_relu(sum(x[i, k] * g[".node_W_sigma"][k, h] for k in range(3)) + g[".node_b_sigma"][h]) for h in range(2)]
            want_s = _softplus(sum(hidden_s[h] * g[".node_W_2"][h, j] for h in range(2)) + g[".node_b_2"][j])
            assert abs(mu.data[i, j] - want_mu) < 1e-12
            assert abs(sigma.data[i, j] - want_s) < 1e-12


@given(st.integers(0, 2 ** 32 - 1))
def test_sigma_strictly_positive(seed):
    rng = np.random.default_rng(seed)
    heads = V.init_heads(4, 4, rng)
    _, s_v, _, s_e = V.latent_params(Tensor(rng.normal(0, 5, (6, 4))), Tensor(rng.normal(0, 5, (5, 4))), heads)
    assert np.all(s_v.data > 0) and np.all(s_e.data > 0)


def test_sample_latent_zero_noise_and_zero_scale(rng):
    mu, sigma = Tensor(rng.normal(size=(3, 2))), Tensor(rng.uniform(0.1, 1, (3, 2)))
    np.testing.assert_array_equal(V.sample_latent(mu, sigma, delta=np.zeros((3, 2))).data, mu.data)
    np.testing.assert_array_equal(V.sample_latent(mu, sigma).data, mu.data)
    out = V.sample_latent(mu, Tensor(np.zeros((3, 2))), rng=np.random.default_rng(0))
    np.testing.assert_array_equal(out.data, mu.data)


def test_sample_latent_monte_carlo_mean():
    mu, sigma = Tensor(np.ones(10000)), Tensor(np.full(10000, 2.0))
    m = V.sample_latent(mu, sigma, rng=np.random.default_rng(3)).data.mean()
    assert abs(m - 1.0) <= 3 * 2 / 100


def test_sample_latent_gradient_flows_to_mu_and_sigma():
    mu, sigma = Tensor([0.5], requires_grad=True), Tensor([2.0], requires_grad=True)
    V.sample_latent(mu, sigma, delta=np.array([0.25])).sum().backward()
    assert mu.grad.tolist() == [1.0] and sigma.grad.tolist() == [0.25]


def test_decode_saturating_score():
    H, p = V.decode_incidence(Tensor([[10.0]]), Tensor([[10.0]]), 0.1, rng=np.random.default_rng(0))
    assert H.data.tolist() == [[1.0]] and p.data[0, 0] > 1 - 1e-12


def test_decode_tie_rule():
    gumbel = np.full((1, 1, 2), 0.3)
    H, p = V.decode_incidence(Tensor([[0.0]]), Tensor([[0.0]]), 0.1, gumbel=gumbel, repair=False)
    assert p.data[0, 0] == 0.5 and H.data[0, 0] == 1.0


def test_decode_rejects_bad_temperature():
    with pytest.raises(ParameterError):
        V.decode_incidence(Tensor([[1.0]]), Tensor([[1.0]]), 0.0)


@pytest.mark.parametrize("s", [-2.0, 0.0, 2.0])
def test_gumbel_marginal_matches_sigmoid(s):
    # one pair with score s: latents [sqrt|s|] and [sign * sqrt|s|]
    r = math.sqrt(abs(s))
    m_v, m_e = Tensor([[r]]), Tensor([[math.copysign(r, s) if s else 0.0]])
    rng = np.random.default_rng(11)
    draws = [V.decode_incidence(m_v, m_e, 1.0, rng=rng, repair=False)[0].data[0, 0] for _ in range(10000)]
    assert abs(np.mean(draws) - 1 / (1 + math.exp(-s))) <= 0.02


def test_noiseless_decode_thresholds_sign_of_score():
    m_v = Tensor([[1.0], [-1.0]])
    m_e = Tensor([[1.0], [0.5]])
    H, _ = V.decode_incidence(m_v, m_e, 0.1, repair=False)
    assert H.data.tolist() == [[1.0, 1.0], [0.0, 0.0]]


def test_repair_sets_argmax_entry():
    m_v = Tensor([[-1.0]])
    m_e = Tensor([[3.0], [1.0], [2.0]])
    H, _ = V.decode_incidence(m_v, m_e, 0.1)
    assert H.data.tolist() == [[0.0, 1.0, 0.0]]


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 2.0))
def test_hard_decode_binary_without_empty_rows(seed, tau):
    rng = np.random.default_rng(seed)
    m_v = Tensor(rng.normal(0, 2, (7, 3)))
    m_e = Tensor(rng.normal(0, 2, (5, 3)))
    H, p = V.decode_incidence(m_v, m_e, tau, rng=rng)
    assert set(np.unique(H.data)) <= {0.0, 1.0}
    assert np.all(H.data.sum(axis=1) >= 1)
    assert np.all((p.data >= 0) & (p.data <= 1))


def test_straight_through_gradient_reaches_probabilities(rng):
    m_v = Tensor(rng.normal(size=(3, 2)) * 0.1, requires_grad=True)
    m_e = Tensor(rng.normal(size=(4, 2)) * 0.1, requires_grad=True)
    H, _ = V.decode_incidence(m_v, m_e, 1.0, gumbel=np.zeros((3, 4, 2)))
    (H * Tensor(rng.normal(size=(3, 4)))).sum().backward()
    assert np.abs(m_v.grad).sum() > 0 and np.abs(m_e.grad).sum() > 0


def test_decode_determinism():
    out = []
    for _ in range(2):
        rng = np.random.default_rng(5)
        m_v, m_e = Tensor(rng.normal(size=(6, 3))), Tensor(rng.normal(size=(5, 3)))
        H, p = V.decode_incidence(m_v, m_e, 0.1, rng=rng)
        out.append(H.data.tobytes() + p.data.tobytes())
    assert out[0] == out[1]


def test_soft_decode_returns_probabilities(rng):
    H, p = V.decode_incidence(Tensor(rng.normal(size=(3, 2))), Tensor(rng.normal(size=(4, 2))), 0.5, hard=False)
    assert H is p


def test_kl_zero_at_prior():
    z = V.kl_standard_normal(Tensor(np.zeros((4, 3))), Tensor(np.ones((4, 3)))).item()
    assert abs(z) <= 1e-12


def test_kl_nonnegative_on_random_latents():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        mu = Tensor(rng.normal(0, 2, (2, 3)))
        sigma = Tensor(rng.uniform(0.05, 4.0, (2, 3)))
        assert V.kl_standard_normal(mu, sigma).item() >= 0


def test_kl_and_bce_scalar_oracle(rng):
    mu, sigma = rng.normal(size=(2, 2)), rng.uniform(0.2, 2, (2, 2))
    kl = sum(0.5 * (sigma[i, j] ** 2 + mu[i, j] ** 2 - 1 - math.log(sigma[i, j] ** 2)) for i in range(2) for j in range(2)) / 4
    assert abs(V.kl_standard_normal(Tensor(mu), Tensor(sigma)).item() - kl) < 1e-12
    target = np.array([[1.0, 0.0], [0.0, 1.0]])
    p = rng.uniform(0.05, 0.95, (2, 2))
    bce = -sum(target[i, j] * math.log(p[i, j]) + (1 - target[i, j]) * math.log(1 - p[i, j]) for i in range(2) for j in range(2)) / 4
    assert abs(V.bce(target, Tensor(p)).item() - bce) < 1e-12


def test_bce_perfect_reconstruction():
    H = build_initial_incidence(3).incidence
    assert V.bce(H, Tensor(H.copy())).item() <= 1e-6


def test_run_vhgae_outputs(rng):
    H = build_initial_incidence(3).incidence
    X = Tensor(rng.normal(size=(9, 4)))
    out = V.run_vhgae(X, H, init_conv(4, rng), V.init_heads(4, 4, rng), 0.1, NoiseSource.from_seed(0))
    assert out.H_new.shape == H.shape == out.presence_probs.shape
    assert out.mu_v.shape == (9, 4) and out.mu_e.shape == (6, 4)
    assert np.isfinite(out.loss_g.item())


def test_loss_g_gradient_with_frozen_noise(rng):
    H = build_initial_incidence(2).incidence
    X = rng.uniform(-1, 1, (6, 3))
    conv = init_conv(3, rng)
    heads = V.init_heads(3, 2, rng)
    delta_v, delta_e = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
    gumbel = V.gumbel_noise(rng.random((6, 5, 2)))
    names = list(heads.named("").keys())

    def fn(*weights):
        h = V.LatentHeads(*weights)
        v, e = V.vhgae_encode(Tensor(X), H, conv)
        mu_v, s_v, mu_e, s_e = V.latent_params(v, e, h)
        m_v = V.sample_latent(mu_v, s_v, delta=delta_v)
        m_e = V.sample_latent(mu_e, s_e, delta=delta_e)
        _, probs = V.decode_incidence(m_v, m_e, 1.0, gumbel=gumbel, hard=False)
        out = V.VhgaeOutput(probs, probs, mu_v, s_v, mu_e, s_e)
        return V.vhgae_loss(out, H)

    weights = [t.data.copy() for t in heads.named("").values()]
    assert len(weights) == len(names)
    assert check_function("loss_g", fn, weights).max_rel_err < 1e-5
