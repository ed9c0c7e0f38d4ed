import math

import numpy as np
import pytest
import torch

from foilgen import diffusion as D
from foilgen.denoiser import Denoiser

from conftest import TINY


def test_single_step_schedule():
    s = D.make_schedule(1, 0.1, 0.1)
    assert s.beta.tolist() == [0.1] and s.alpha.tolist() == [0.9] and s.alpha_bar.tolist() == [0.9]


def test_constant_beta_geometric():
    s = D.make_schedule(50, 0.03, 0.03)
    t = np.arange(1, 51)
    np.testing.assert_allclose(s.alpha_bar, 0.97**t, rtol=1e-13)


def test_default_schedule():
    s = D.make_schedule()
    assert s.total_steps == 1000 and s.beta[0] == 1e-4 and s.beta[-1] == 0.02
    assert np.array_equal(s.alpha, 1.0 - s.beta)
    assert np.all(np.diff(s.alpha_bar) < 0)
    assert np.abs(s.alpha_bar[1:] - s.alpha_bar[:-1] * s.alpha[1:]).max() <= 1e-12
    # direct product, independent of cumprod
    prod = 1.0
    for b in np.linspace(1e-4, 0.02, 1000):
        prod *= 1.0 - b
    assert s.alpha_bar[-1] < 1e-4 and abs(prod - s.alpha_bar[-1]) < 1e-15


@pytest.mark.parametrize("args", [(0, 1e-4, 0.02), (10, 0.0, 0.1), (10, 0.2, 0.1), (10, 0.1, 1.0)])
def test_schedule_invalid(args):
    with pytest.raises(D.InvalidRange):
        D.make_schedule(*args)


def test_forward_sample_trivial_cases():
    s = D.make_schedule(100)
    rng = np.random.default_rng(0)
    y0, eps = rng.standard_normal((2, 100)), rng.standard_normal((2, 100))
    ab = s.alpha_bar[49]
    np.testing.assert_array_equal(D.forward_sample(np.zeros_like(y0), 50, eps, s), math.sqrt(1 - ab) * eps)
    np.testing.assert_array_equal(D.forward_sample(y0, 50, np.zeros_like(eps), s), math.sqrt(ab) * y0)
    with pytest.raises(D.ShapeMismatch):
        D.forward_sample(y0, 50, eps[:, :10], s)
    with pytest.raises(D.DiffusionError):
        D.forward_sample(y0, 0, eps, s)


def test_forward_step_trivial():
    s = D.make_schedule(10)
    out = D.forward_step(np.zeros(5), 3, np.ones(5), s)
    np.testing.assert_allclose(out, math.sqrt(s.beta[2]))


def test_forward_works_on_tensors():
    s = D.make_schedule(10)
    out = D.forward_sample(torch.ones(2, 100), 5, torch.zeros(2, 100), s)
    assert isinstance(out, torch.Tensor)


def test_forward_marginal_moments():
    s = D.make_schedule(1000)
    rng = np.random.default_rng(1)
    n, t = 10_000, 300
    y0 = np.array([0.3, -0.7])
    draws = np.array([D.forward_sample(y0, t, rng.standard_normal(2), s) for _ in range(n)])
    ab = s.alpha_bar[t - 1]
    var = 1 - ab
    se_mean = math.sqrt(var / n)
    se_var = var * math.sqrt(2 / (n - 1))
    assert np.all(np.abs(draws.mean(0) - math.sqrt(ab) * y0) < 3 * se_mean)
    assert np.all(np.abs(draws.var(0, ddof=1) - var) < 3 * se_var)


def test_markov_chain_matches_closed_form():
    s = D.make_schedule(40, 1e-3, 0.2)
    rng = np.random.default_rng(2)
    n = 10_000
    y = np.full(n, 0.5)
    for t in range(1, 41):
        y = D.forward_step(y, t, rng.standard_normal(n), s)
    ab = s.alpha_bar[-1]
    assert abs(y.mean() - math.sqrt(ab) * 0.5) < 3 * math.sqrt((1 - ab) / n)
    assert abs(y.var(ddof=1) - (1 - ab)) < 3 * (1 - ab) * math.sqrt(2 / (n - 1))


def test_reverse_inverts_single_step():
    s = D.make_schedule(1, 0.3, 0.3)
    rng = np.random.default_rng(3)
    y0, eps = rng.standard_normal((2, 100)), rng.standard_normal((2, 100))
    yt = D.forward_sample(y0, 1, eps, s)
    back = D.reverse_step(yt, 1, eps, np.zeros_like(eps), s)
    assert np.abs(back - y0).max() <= 1e-10


def test_reverse_zero_eps():
    s = D.make_schedule(10)
    y = np.linspace(-1, 1, 200).reshape(2, 100)
    out = D.reverse_step(y, 5, np.zeros_like(y), np.zeros_like(y), s)
    np.testing.assert_allclose(out, y / math.sqrt(s.alpha[4]), rtol=1e-15)


def test_reverse_suppresses_noise_at_t1():
    s = D.make_schedule(10)
    y = np.ones((2, 100))
    a = D.reverse_step(y, 1, np.zeros_like(y), np.full_like(y, 5.0), s)
    b = D.reverse_step(y, 1, np.zeros_like(y), None, s)
    assert np.array_equal(a, b)


def test_reverse_shape_mismatch():
    s = D.make_schedule(10)
    with pytest.raises(D.ShapeMismatch):
        D.reverse_step(np.zeros((2, 100)), 3, np.zeros((2, 99)), None, s)


def test_guidance_identities():
    rng = np.random.default_rng(4)
    c, u = rng.standard_normal((2, 100)), rng.standard_normal((2, 100))
    assert np.array_equal(D.guided_epsilon(c, u, 0.0), u)
    assert np.array_equal(D.guided_epsilon(c, u, 1.0), c)
    np.testing.assert_array_equal(D.guided_epsilon(c, np.zeros_like(c), 2.0), 2 * c)
    with pytest.raises(D.ShapeMismatch):
        D.guided_epsilon(c, u[:1], 2.0)


def test_guidance_config_validation():
    with pytest.raises(ValueError):
        D.GuidanceConfig(scale=-1)
    with pytest.raises(ValueError):
        D.GuidanceConfig(uncond_drop_prob=1.5)


@pytest.fixture(scope="module")
def tiny_model():
    return Denoiser(TINY, (20, 1e-3, 0.2), "drag_coefficient", 0.01, 0.002, seed=1)


def test_sample_deterministic_and_clamped(tiny_model):
    s = D.make_schedule(20, 1e-3, 0.2)
    a = D.sample(tiny_model, s, None, seed=7, count=3)
    b = D.sample(tiny_model, s, None, seed=7, count=3)
    assert a.shape == (3, 2, 100) and np.array_equal(a, b)
    assert np.all(np.abs(a) <= 1.0)
    assert not np.array_equal(a, D.sample(tiny_model, s, None, seed=8, count=3))


def test_sample_independent_of_batching(tiny_model):
    s = D.make_schedule(20, 1e-3, 0.2)
    targets = [0.01, 0.012, 0.014, 0.016]
    full = D.sample(tiny_model, s, targets, seed=3)
    one = D.sample(tiny_model, s, targets, seed=3, batch_size=1)
    np.testing.assert_allclose(full, one, atol=1e-5)


def test_sample_conditional_changes_output(tiny_model):
    s = D.make_schedule(20, 1e-3, 0.2)
    a = D.sample(tiny_model, s, [0.01, 0.01], seed=3)
    b = D.sample(tiny_model, s, [0.02, 0.02], seed=3)
    assert not np.array_equal(a, b)


def test_sample_schedule_mismatch(tiny_model):
    with pytest.raises(D.ScheduleMismatch):
        D.sample(tiny_model, D.make_schedule(21, 1e-3, 0.2), None, count=1)


def test_sample_count_validation(tiny_model):
    s = D.make_schedule(20, 1e-3, 0.2)
    with pytest.raises(ValueError):
        D.sample(tiny_model, s, None, count=0)
    with pytest.raises(ValueError):
        D.sample(tiny_model, s, [0.1, 0.2], count=3)
