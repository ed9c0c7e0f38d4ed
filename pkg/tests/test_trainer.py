import numpy as np
import pytest
import torch

from foilgen import diffusion as D
from foilgen.denoiser import NULL_SPEC, Denoiser
from foilgen.trainer import (
    DatasetTooSmall,
    EmptyBatch,
    NonFiniteLoss,
    TrainConfig,
    TrainingSet,
    condition_stats,
    train,
    training_loss,
)

from conftest import TINY
from gradcheck import gradient_check

SCHED = D.make_schedule(50, 1e-3, 0.2)


def test_config_validation():
    for bad in (dict(steps=0), dict(batch_size=0), dict(learning_rate=0.0), dict(uncond_drop_prob=2.0)):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


def test_training_set_validation(fixture_samples):
    with pytest.raises(ValueError):
        TrainingSet(fixture_samples, "drag_coefficient")
    with pytest.raises(ValueError):
        TrainingSet(fixture_samples[:, :, :50])
    ts = TrainingSet(fixture_samples, "max_camber", np.arange(16.0))
    assert len(ts) == 16 and len(ts.fingerprint()) == 64


def test_loss_matches_explicit_loop(fixture_samples):
    model = Denoiser(TINY, SCHED.params(), "max_thickness", 0.12, 0.04, seed=2)
    specs = [model.spec(v) for v in np.linspace(0.06, 0.2, 8)]
    batch = fixture_samples[:8]
    with torch.no_grad():
        loss = float(training_loss(model, batch, specs, np.random.default_rng(11), SCHED, 0.3))
    # replay the same draws one sample at a time
    rng = np.random.default_rng(11)
    t = rng.integers(1, SCHED.total_steps + 1, size=8)
    eps = rng.standard_normal(batch.shape)
    drop = rng.random(8) < 0.3
    total = 0.0
    for i in range(8):
        y_t = D.forward_sample(batch[i], int(t[i]), eps[i], SCHED)
        pred = model.predict_noise(y_t, int(t[i]), NULL_SPEC if drop[i] else specs[i])
        total += float(np.mean((eps[i] - pred) ** 2))
    assert loss == pytest.approx(total / 8, rel=1e-5)


@pytest.mark.parametrize("p, expect_all_null", [(1.0, True), (0.0, False)])
def test_dropout_extremes(fixture_samples, p, expect_all_null):
    model = Denoiser(TINY, SCHED.params(), "max_camber", 0.02, 0.01, seed=0)
    specs = [model.spec(0.02)] * 8
    seen = []
    training_loss(model, fixture_samples[:8], specs, np.random.default_rng(0), SCHED, p, on_condition=seen.extend)
    nulls = [s.is_null for s in seen]
    assert all(nulls) if expect_all_null else not any(nulls)


def test_empty_batch():
    model = Denoiser(TINY, SCHED.params(), seed=0)
    with pytest.raises(EmptyBatch):
        training_loss(model, np.zeros((0, 2, 100)), [], np.random.default_rng(0), SCHED)


def test_nonfinite_loss(fixture_samples):
    model = Denoiser(TINY, SCHED.params(), seed=0)
    bad = fixture_samples[:2].copy()
    bad[0, 0, 0] = np.inf
    with pytest.raises(NonFiniteLoss):
        training_loss(model, bad, [NULL_SPEC] * 2, np.random.default_rng(0), SCHED)


def test_dataset_too_small(fixture_samples):
    with pytest.raises(DatasetTooSmall):
        train(TrainingSet(fixture_samples[:4]), TrainConfig(steps=1, batch_size=8), TINY, SCHED)


def test_train_deterministic_and_stats(fixture_samples):
    vals = np.linspace(0.008, 0.016, 16)
    ts = TrainingSet(fixture_samples, "drag_coefficient", vals)
    cfg = TrainConfig(steps=5, batch_size=4, seed=9)
    a = train(ts, cfg, TINY, SCHED)
    b = train(ts, cfg, TINY, SCHED)
    sa, sb = a.net.state_dict(), b.net.state_dict()
    assert all(torch.equal(sa[k], sb[k]) for k in sa)
    assert abs(a.cond_mean - np.mean(vals)) <= 1e-9
    assert abs(a.cond_std - np.std(vals)) <= 1e-9
    assert a.training_meta["dataset_fingerprint"] == ts.fingerprint()
    assert a.training_meta["steps"] == 5


def test_train_records(fixture_samples):
    recs = []
    train(TrainingSet(fixture_samples), TrainConfig(steps=6, batch_size=8, window=3), TINY, SCHED, on_record=recs.append)
    assert [r.step for r in recs] == list(range(1, 7))
    assert all(np.isfinite(r.loss) for r in recs)
    assert recs[-1].window_mean == pytest.approx(np.mean([r.loss for r in recs[-3:]]))


def test_holdout_reduces_training_set(fixture_samples):
    m = train(TrainingSet(fixture_samples), TrainConfig(steps=1, batch_size=4, holdout=0.25), TINY, SCHED)
    assert m.training_meta["dataset_size"] == 16
    with pytest.raises(DatasetTooSmall):
        train(TrainingSet(fixture_samples), TrainConfig(steps=1, batch_size=16, holdout=0.25), TINY, SCHED)


def test_constant_condition_std_falls_back():
    assert condition_stats(np.full(5, 0.3)) == (0.3, 1.0)


def test_gradient_check_small():
    model = Denoiser(TINY, SCHED.params(), "lift_coefficient", 0.0, 1.0, seed=5)
    err = gradient_check(model, n_params=40, seed=1)
    assert np.mean(err <= 1e-3) >= 0.99
