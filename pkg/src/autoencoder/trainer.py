import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.autoencoder.network import AEParams, Gradients, backward, encode, forward, init_kaiming, loss
from src.config.settings import AEConfig, TrainConfig
from src.errors import DivergenceError, ShapeMismatchError, TrainingDivergedError
from src.models.features import BarTensor, LatentMatrix
from src.models.results import StopReason, TrainReport

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: AEParams) -> "AdamState":
        tensors = params.tensors()
        return cls(
            first_moment={name: np.zeros_like(t) for name, t in tensors.items()},
            second_moment={name: np.zeros_like(t) for name, t in tensors.items()},
        )


def adam_step(
    params: AEParams, grads: Gradients, state: AdamState, lr: float, config: TrainConfig | None = None
) -> tuple[AEParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state"""
    config = config or TrainConfig()
    if not grads.is_finite():
        raise DivergenceError("Non-finite gradient")

    step = state.step + 1
    correction1 = 1.0 - config.beta1**step
    correction2 = 1.0 - config.beta2**step
    updated, first, second = {}, {}, {}
    for name, value in params.tensors().items():
        if value.shape != state.first_moment[name].shape:
            raise ShapeMismatchError(f"Adam state for {name} has shape {state.first_moment[name].shape}")
        grad = getattr(grads, name)
        first[name] = config.beta1 * state.first_moment[name] + (1.0 - config.beta1) * grad
        second[name] = config.beta2 * state.second_moment[name] + (1.0 - config.beta2) * grad**2
        m_hat = first[name] / correction1
        v_hat = second[name] / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return AEParams(**updated), AdamState(first_moment=first, second_moment=second, step=step)


@dataclass
class PlateauScheduler:
    """Learning-rate plateau rule and early stopping, driven by epoch losses.

    The running best is updated on strict improvement only. After
    `plateau_patience` stagnant epochs the rate is divided (floored at lr_min)
    and the plateau counter restarts; after `early_stop_patience` stagnant
    epochs training stops.
    """

    config: TrainConfig
    lr: float = field(init=False)
    best_loss: float = field(default=math.inf, init=False)
    best_epoch: int = field(default=0, init=False)
    epoch: int = field(default=0, init=False)
    plateau_counter: int = field(default=0, init=False)
    stale_epochs: int = field(default=0, init=False)
    plateau_epochs: list[int] = field(default_factory=list, init=False)

    def __post_init__(self):
        self.lr = self.config.lr0

    def step(self, epoch_loss: float) -> bool:
        """Record one epoch; returns True when this epoch became the best so far"""
        self.epoch += 1
        improved = epoch_loss < self.best_loss
        if improved:
            self.best_loss = epoch_loss
            self.best_epoch = self.epoch
            self.plateau_counter = 0
            self.stale_epochs = 0
            return True

        self.plateau_counter += 1
        self.stale_epochs += 1
        if self.should_stop:
            return False
        if self.plateau_counter >= self.config.plateau_patience:
            self.lr = max(self.lr / self.config.lr_divisor, self.config.lr_min)
            self.plateau_counter = 0
            self.plateau_epochs.append(self.epoch)
            logger.debug(f"Loss plateau at epoch {self.epoch}, learning rate now {self.lr:g}")
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale_epochs >= self.config.early_stop_patience


def _epoch_order(seed: int, epoch: int, num_bars: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    return rng.permutation(num_bars)


def _close_report(report: TrainReport, scheduler: PlateauScheduler, reason: StopReason) -> None:
    report.stop_reason = reason
    report.best_epoch = scheduler.best_epoch or None
    report.best_loss = scheduler.best_loss if scheduler.best_epoch else None
    report.plateau_epochs = list(scheduler.plateau_epochs)


def train(
    tensor: BarTensor, ae_config: AEConfig, train_config: TrainConfig | None = None
) -> tuple[AEParams, TrainReport]:
    """Fit the autoencoder to the bars of one song; returns the best-epoch parameters"""
    train_config = train_config or TrainConfig()
    if tensor.num_bars < 2:
        raise ValueError(f"Training needs at least 2 bars, got {tensor.num_bars}")
    if ae_config.feature_dim != tensor.feature_dim:
        raise ShapeMismatchError(f"AE built for F={ae_config.feature_dim}, tensor has F={tensor.feature_dim}")

    params = init_kaiming(ae_config)
    state = AdamState.zeros_like(params)
    scheduler = PlateauScheduler(train_config)
    report = TrainReport()
    best_params = params.copy()

    logger.info(
        f"Training on {tensor.num_bars} bars (F={tensor.feature_dim}, d_ls={ae_config.d_ls}), "
        f"up to {train_config.max_epochs} epochs"
    )
    for epoch in range(1, train_config.max_epochs + 1):
        lr = scheduler.lr
        order = _epoch_order(train_config.seed, epoch, tensor.num_bars)
        batch_losses = []
        try:
            for start in range(0, tensor.num_bars, train_config.batch_size):
                batch = tensor.bars[order[start : start + train_config.batch_size]]
                _, reconstructions, tape = forward(params, batch)
                batch_losses.append(loss(batch, reconstructions))
                params, state = adam_step(params, backward(params, tape, batch), state, lr, train_config)
        except DivergenceError as e:
            _close_report(report, scheduler, StopReason.DIVERGED)
            raise TrainingDivergedError(f"Training diverged at epoch {epoch}: {e}", report) from e

        epoch_loss = float(np.mean(batch_losses))
        if not math.isfinite(epoch_loss):
            _close_report(report, scheduler, StopReason.DIVERGED)
            raise TrainingDivergedError(f"Non-finite loss at epoch {epoch}", report)

        report.loss_history.append(epoch_loss)
        report.lr_history.append(lr)
        if scheduler.step(epoch_loss):
            best_params = params.copy()
        logger.debug(f"Epoch {epoch}: loss={epoch_loss:.6g} lr={lr:g}")

        if scheduler.should_stop:
            _close_report(report, scheduler, StopReason.EARLY_STOP)
            break
    else:
        _close_report(report, scheduler, StopReason.MAX_EPOCHS)

    logger.info(
        f"Training stopped ({report.stop_reason.value}) after {report.epochs_trained} epochs, "
        f"best loss {report.best_loss:.6g} at epoch {report.best_epoch}"
    )
    return best_params, report


def encode_song(params: AEParams, tensor: BarTensor, batch_size: int = 64) -> LatentMatrix:
    """d_ls x B matrix whose column b encodes bar b"""
    if tensor.feature_dim != params.feature_dim:
        raise ShapeMismatchError(f"Params expect F={params.feature_dim}, tensor has F={tensor.feature_dim}")
    latents = [
        encode(params, tensor.bars[start : start + batch_size]) for start in range(0, tensor.num_bars, batch_size)
    ]
    return LatentMatrix(Z=np.concatenate(latents, axis=0).T)
