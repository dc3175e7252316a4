import numpy as np
import pytest
from conftest import quadratic_problem

from asadmm.models import GgflModel, build_ggfl, synthetic_instance
from asadmm.problem import full_gradient
from asadmm.sampler import (AnchorState, Sampler, SamplerConfig, batch_size, draw_direction,
                            refresh_anchor)


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


@pytest.mark.parametrize("mode", ["plain", "svrg_anchor", "minibatch"])
def test_single_component_is_exact(mode):
    p, _ = quadratic_problem(0, N=1)
    x_hat, x_bar = np.ones(p.n1), -np.ones(p.n1)
    anchor, _ = refresh_anchor(AnchorState(), p, x_bar)
    d = draw_direction(SamplerConfig(mode=mode), anchor, p, x_hat, 0, _rng())
    np.testing.assert_allclose(d.d, full_gradient(p, x_hat), rtol=1e-14, atol=1e-14)


def test_full_minibatch_cancels_anchor():
    p, _ = quadratic_problem(1, N=6)
    x_hat, x_bar = np.full(p.n1, 0.3), np.full(p.n1, -2.0)
    anchor, _ = refresh_anchor(AnchorState(), p, x_bar)
    cfg = SamplerConfig(mode="minibatch", batch_c=100.0)
    d = draw_direction(cfg, anchor, p, x_hat, 0, _rng())
    np.testing.assert_allclose(d.d, full_gradient(p, x_hat), rtol=1e-13, atol=1e-14)
    assert sorted(d.sample_indices.tolist()) == list(range(6))


def test_svrg_unbiased_monte_carlo():
    p, _ = quadratic_problem(2, N=5)
    rng = np.random.default_rng(0)
    x_hat, x_bar = rng.normal(size=(2, p.n1))
    anchor, _ = refresh_anchor(AnchorState(), p, x_bar)
    g = _rng(3)
    ds = np.array([draw_direction(SamplerConfig(), anchor, p, x_hat, 0, g).d for _ in range(10_000)])
    se = ds.std(axis=0, ddof=1) / np.sqrt(len(ds))
    assert np.all(np.abs(ds.mean(axis=0) - full_gradient(p, x_hat)) <= 4 * se)


def test_batch_size_examples():
    assert batch_size(SamplerConfig(batch_c=1, batch_rho=1), 0, 50) == 1
    assert batch_size(SamplerConfig(batch_c=1, batch_rho=1), 10**6, 50) == 50
    assert batch_size(SamplerConfig(batch_c=2, batch_rho=1.5), 3, 100) == 16
    assert batch_size(SamplerConfig(batch_c=2, batch_rho=1.5), 3, 10) == 10
    with pytest.raises(ValueError):
        batch_size(SamplerConfig(), -1, 5)


def test_batch_size_nondecreasing():
    cfg = SamplerConfig(batch_c=0.7, batch_rho=1.3)
    sizes = [batch_size(cfg, k, 40) for k in range(100)]
    assert sizes[0] >= 1 and max(sizes) == 40
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))


def test_refresh_anchor_logistic():
    ds, _ = synthetic_instance(0, 80, 6, 0.5)
    p = build_ggfl(GgflModel(ds))
    a1, c1 = refresh_anchor(AnchorState(), p, np.zeros(6))
    np.testing.assert_array_equal(a1.anchor_full_grad, full_gradient(p, np.zeros(6)))
    assert a1.valid and c1 == 80
    a2, c2 = refresh_anchor(a1, p, np.zeros(6))
    assert a2 is a1 and c2 == 0
    x = np.linspace(-1, 1, 6)
    a3, _ = refresh_anchor(a1, p, x)
    h = 1e-6
    fd = np.array([(p.f_value(x + h * e) - p.f_value(x - h * e)) / (2 * h) for e in np.eye(6)])
    assert np.linalg.norm(a3.anchor_full_grad - fd) <= 1e-6 * np.linalg.norm(fd)


def test_anchored_mode_needs_valid_anchor():
    p, _ = quadratic_problem(0)
    with pytest.raises(ValueError):
        draw_direction(SamplerConfig(), AnchorState(), p, np.zeros(p.n1), 0, _rng())


def test_minibatch_draws_without_replacement_and_cost():
    p, _ = quadratic_problem(0, N=30)
    anchor, _ = refresh_anchor(AnchorState(), p, np.zeros(p.n1))
    cfg = SamplerConfig(mode="minibatch", batch_c=7)
    d = draw_direction(cfg, anchor, p, np.ones(p.n1), 0, _rng())
    assert len(set(d.sample_indices.tolist())) == 7
    assert d.components_used == 14 and d.anchored
    plain = draw_direction(SamplerConfig(mode="plain"), anchor, p, np.ones(p.n1), 0, _rng())
    assert plain.components_used == 1 and not plain.anchored


def test_sampler_threshold_and_determinism():
    p, _ = quadratic_problem(0, n1=6, N=10)
    s = Sampler(SamplerConfig(rng_seed=5), p)
    assert s.threshold == 6
    assert s.prepare(0, 6, np.zeros(6)) == 0 and not s.anchored
    assert s.prepare(1, 7, np.zeros(6)) == 10 and s.anchored
    assert s.prepare(2, 7, np.zeros(6)) == 0  # same anchor point: no refresh
    a = Sampler(SamplerConfig(mode="plain", rng_seed=9), p)
    b = Sampler(SamplerConfig(mode="plain", rng_seed=9), p)
    ia = [a.draw(np.ones(6)).sample_indices[0] for _ in range(50)]
    ib = [b.draw(np.ones(6)).sample_indices[0] for _ in range(50)]
    assert ia == ib and len(set(ia)) > 1


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(mode="bogus")
    with pytest.raises(ValueError):
        SamplerConfig(batch_c=0)
    with pytest.raises(ValueError):
        SamplerConfig(batch_rho=0.5)
    with pytest.raises(ValueError):
        SamplerConfig(anchor_threshold=-1)
