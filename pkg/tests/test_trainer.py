import time
from dataclasses import replace

import numpy as np
import pytest

from src.autoencoder.network import AEParams, Gradients, encode, init_kaiming
from src.autoencoder.trainer import AdamState, PlateauScheduler, adam_step, encode_song, train
from src.config.settings import AEConfig, TrainConfig
from src.errors import DivergenceError, TrainingDivergedError
from src.models.features import BarTensor, FeatureKind
from src.models.results import StopReason


def scalar_params(value: float) -> AEParams:
    """A parameter set whose only non-empty tensor is a single scalar"""
    params = init_kaiming(AEConfig(d_ls=1, feature_dim=4, seed=0))
    tensors = {name: np.zeros_like(t) for name, t in params.tensors().items()}
    tensors["enc_fc_b"] = np.array([value])
    return AEParams(**tensors)


def scalar_grads(params: AEParams, value: float) -> Gradients:
    tensors = {name: np.zeros_like(t) for name, t in params.tensors().items()}
    tensors["enc_fc_b"] = np.array([value])
    return Gradients(**tensors)


def test_adam_zero_gradient_leaves_params_unchanged():
    params = init_kaiming(AEConfig(d_ls=2, feature_dim=4, seed=0))
    grads = Gradients(**{name: np.zeros_like(t) for name, t in params.tensors().items()})

    updated, state = adam_step(params, grads, AdamState.zeros_like(params), lr=1e-3)

    assert state.step == 1
    for name in AEParams.names():
        assert np.array_equal(getattr(updated, name), getattr(params, name))


def test_adam_first_step_closed_form():
    params = scalar_params(0.0)
    config = TrainConfig()

    updated, _ = adam_step(params, scalar_grads(params, 1.0), AdamState.zeros_like(params), lr=0.01, config=config)

    assert updated.enc_fc_b[0] == pytest.approx(-0.01 / (1 + config.eps), rel=1e-12)


def test_adam_minimizes_square():
    params = scalar_params(1.0)
    state = AdamState.zeros_like(params)
    for _ in range(100):
        params, state = adam_step(params, scalar_grads(params, 2 * params.enc_fc_b[0]), state, lr=0.1)

    assert abs(params.enc_fc_b[0]) < 0.05
    assert state.step == 100


def test_adam_rejects_non_finite_gradient():
    params = scalar_params(0.0)

    with pytest.raises(DivergenceError):
        adam_step(params, scalar_grads(params, np.nan), AdamState.zeros_like(params), lr=0.1)


def test_scheduler_on_flat_losses():
    scheduler = PlateauScheduler(TrainConfig())
    lrs = []
    stopped_at = None
    for epoch in range(1, 1001):
        lrs.append(scheduler.lr)
        scheduler.step(1.0)
        if scheduler.should_stop:
            stopped_at = epoch
            break

    assert scheduler.plateau_epochs == [21, 41, 61, 81]
    assert stopped_at == 101
    assert lrs[20] == 1e-3  # epoch 21 still runs at lr0
    assert lrs[21] == pytest.approx(1e-4)
    assert lrs[41] == pytest.approx(1e-5)
    assert min(lrs) == pytest.approx(1e-5)


def test_scheduler_resets_on_improvement():
    scheduler = PlateauScheduler(TrainConfig())
    losses = [1.0] + [1.0] * 15 + [0.5] + [0.5] * 19

    for value in losses:
        scheduler.step(value)

    assert scheduler.best_epoch == 17
    assert scheduler.plateau_epochs == []
    assert scheduler.lr == 1e-3


def test_train_on_zero_bars_drives_loss_down():
    tensor = BarTensor(bars=np.zeros((16, 96, 4)), feature_kind=FeatureKind.LOG_MEL, norm_min=0.0, norm_max=0.0)

    _, report = train(tensor, AEConfig(d_ls=2, feature_dim=4, seed=3), TrainConfig(seed=3))

    assert report.best_loss < 1e-3
    assert report.best_loss < 0.05 * report.loss_history[0]


def test_song_sized_epoch_fits_training_budget(rng):
    """100 bars of 80 bins, d_ls 32: 1000 epochs must fit in five minutes (0.3 s each, 2x slack here)"""
    tensor = BarTensor(bars=rng.uniform(size=(100, 96, 80)), feature_kind=FeatureKind.LOG_MEL, norm_min=0.0,
                       norm_max=1.0)  # fmt: skip
    epochs = 5

    started = time.perf_counter()
    _, report = train(tensor, AEConfig(d_ls=32, feature_dim=80), TrainConfig(max_epochs=epochs))
    elapsed = time.perf_counter() - started

    assert report.epochs_trained == epochs
    assert elapsed / epochs < 0.6


@pytest.mark.parametrize("seed", [0, 1])
def test_train_learns_two_templates(two_template_tensor, seed):
    config = TrainConfig(lr0=0.01, lr_min=1e-4, max_epochs=500, seed=seed)

    params, report = train(two_template_tensor, AEConfig(d_ls=2, feature_dim=8, seed=seed), config)

    assert report.best_loss < 0.1 * report.loss_history[0]
    assert report.best_loss <= report.loss_history[0]
    assert params.is_finite()


def test_train_report_invariants(two_template_tensor):
    config = TrainConfig(lr0=0.01, lr_min=1e-3, max_epochs=60, plateau_patience=5, early_stop_patience=15, seed=4)

    _, report = train(two_template_tensor, AEConfig(d_ls=2, feature_dim=8, seed=4), config)

    assert len(report.loss_history) == len(report.lr_history) == report.epochs_trained <= 60
    assert all(a >= b for a, b in zip(report.lr_history, report.lr_history[1:]))
    assert min(report.lr_history) >= config.lr_min
    assert report.best_loss == min(report.loss_history)
    assert report.loss_history[report.best_epoch - 1] == report.best_loss
    if report.stop_reason is StopReason.EARLY_STOP:
        tail = report.loss_history[-config.early_stop_patience :]
        assert min(tail) >= min(report.loss_history[: -config.early_stop_patience])
    else:
        assert report.stop_reason is StopReason.MAX_EPOCHS


def test_train_is_reproducible(two_template_tensor):
    config = TrainConfig(lr0=0.01, max_epochs=15, seed=8)
    ae_config = AEConfig(d_ls=2, feature_dim=8, seed=8)

    params_a, report_a = train(two_template_tensor, ae_config, config)
    params_b, report_b = train(two_template_tensor, ae_config, config)

    assert report_a.model_dump_json() == report_b.model_dump_json()
    for name in AEParams.names():
        assert np.array_equal(getattr(params_a, name), getattr(params_b, name))


def test_train_returns_best_epoch_params(two_template_tensor):
    config = TrainConfig(lr0=0.03, max_epochs=40, seed=2)
    ae_config = AEConfig(d_ls=2, feature_dim=8, seed=2)

    params, report = train(two_template_tensor, ae_config, config)
    # training is deterministic, so stopping at the best epoch replays the same trajectory
    replay, _ = train(two_template_tensor, ae_config, replace(config, max_epochs=report.best_epoch))

    for name in AEParams.names():
        assert np.array_equal(getattr(params, name), getattr(replay, name))


def test_train_divergence_carries_partial_report(two_template_tensor, mocker):
    mocker.patch("src.autoencoder.trainer.forward", side_effect=DivergenceError("boom"))

    with pytest.raises(TrainingDivergedError) as excinfo:
        train(two_template_tensor, AEConfig(d_ls=2, feature_dim=8), TrainConfig(max_epochs=5))

    assert excinfo.value.report.stop_reason is StopReason.DIVERGED
    assert excinfo.value.report.loss_history == []


def test_encode_song_columns(two_template_tensor):
    params = init_kaiming(AEConfig(d_ls=3, feature_dim=8, seed=1))

    latents = encode_song(params, two_template_tensor, batch_size=3)

    assert latents.Z.shape == (3, 10)
    assert np.allclose(latents.Z[:, 0], latents.Z[:, 2])
    assert np.allclose(latents.Z[:, 1], encode(params, two_template_tensor.bars[1:2])[0])


def test_encode_song_of_zero_bars_gives_equal_columns():
    params = init_kaiming(AEConfig(d_ls=3, feature_dim=4, seed=1))
    tensor = BarTensor(bars=np.zeros((5, 96, 4)), feature_kind=FeatureKind.MEL, norm_min=0.0, norm_max=0.0)

    Z = encode_song(params, tensor).Z

    assert np.allclose(Z, Z[:, :1])
