import logging
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from src.autoencoder import layers
from src.config.settings import AEConfig
from src.errors import DivergenceError, ShapeMismatchError
from src.models.features import BAR_FRAMES

logger = logging.getLogger(__name__)

CONV1_MAPS = 4
CONV2_MAPS = 16
POOLED_FRAMES = BAR_FRAMES // 4  # two 2x2 pools

_CHECKPOINT_MAGIC = b"SSAE"
_CHECKPOINT_HEADER = struct.Struct("<4sIIqI")


@dataclass
class _ParameterSet:
    enc_conv1_w: np.ndarray  # (4, 1, 3, 3)
    enc_conv1_b: np.ndarray
    enc_conv2_w: np.ndarray  # (16, 4, 3, 3)
    enc_conv2_b: np.ndarray
    enc_fc_w: np.ndarray  # (d_ls, 16 * 24 * F/4)
    enc_fc_b: np.ndarray
    dec_fc_w: np.ndarray  # (16 * 24 * F/4, d_ls)
    dec_fc_b: np.ndarray
    dec_tconv1_w: np.ndarray  # (16, 4, 3, 3), input channels first
    dec_tconv1_b: np.ndarray
    dec_tconv2_w: np.ndarray  # (4, 1, 3, 3)
    dec_tconv2_b: np.ndarray

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.names()}

    @property
    def d_ls(self) -> int:
        return int(self.enc_fc_w.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.enc_fc_w.shape[1] // (CONV2_MAPS * POOLED_FRAMES) * 4)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(t)) for t in self.tensors().values())

    def copy(self):
        return type(self)(**{name: t.copy() for name, t in self.tensors().items()})


class AEParams(_ParameterSet):
    """Weights and biases of the single-song convolutional autoencoder"""


class Gradients(_ParameterSet):
    pass


def parameter_shapes(feature_dim: int, d_ls: int) -> dict[str, tuple[int, ...]]:
    flat = CONV2_MAPS * POOLED_FRAMES * (feature_dim // 4)
    return {
        "enc_conv1_w": (CONV1_MAPS, 1, 3, 3),
        "enc_conv1_b": (CONV1_MAPS,),
        "enc_conv2_w": (CONV2_MAPS, CONV1_MAPS, 3, 3),
        "enc_conv2_b": (CONV2_MAPS,),
        "enc_fc_w": (d_ls, flat),
        "enc_fc_b": (d_ls,),
        "dec_fc_w": (flat, d_ls),
        "dec_fc_b": (flat,),
        "dec_tconv1_w": (CONV2_MAPS, CONV1_MAPS, 3, 3),
        "dec_tconv1_b": (CONV1_MAPS,),
        "dec_tconv2_w": (CONV1_MAPS, 1, 3, 3),
        "dec_tconv2_b": (1,),
    }


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    if name.startswith(("enc_conv", "dec_tconv")):
        in_channels = shape[0] if name.startswith("dec_tconv") else shape[1]
        return in_channels * 9
    return shape[1]  # fully connected: input width


def init_kaiming(config: AEConfig) -> AEParams:
    """Uniform Kaiming init: weights on +-sqrt(6 / fan_in), biases on +-1 / sqrt(fan_in)"""
    rng = np.random.default_rng(config.seed)
    shapes = parameter_shapes(config.feature_dim, config.d_ls)
    tensors = {}
    for name in AEParams.names():
        if not name.endswith("_w"):
            continue
        fan_in = _fan_in(name, shapes[name])
        weight_bound = np.sqrt(6.0 / fan_in)
        bias_bound = 1.0 / np.sqrt(fan_in)
        bias_name = name[:-2] + "_b"
        tensors[name] = rng.uniform(-weight_bound, weight_bound, size=shapes[name])
        tensors[bias_name] = rng.uniform(-bias_bound, bias_bound, size=shapes[bias_name])
    logger.debug(f"Initialized autoencoder F={config.feature_dim}, d_ls={config.d_ls}, seed={config.seed}")
    return AEParams(**tensors)


@dataclass
class Tape:
    """Activations cached by forward() for backward()"""

    x: np.ndarray  # N, 1, 96, F
    conv1_pre: np.ndarray
    pool1_argmax: np.ndarray
    pool1_out: np.ndarray
    conv2_pre: np.ndarray
    pool2_argmax: np.ndarray
    encoded_flat: np.ndarray
    latents: np.ndarray
    dec_fc_pre: np.ndarray
    tconv1_in: np.ndarray
    tconv1_pre: np.ndarray
    tconv2_in: np.ndarray
    reconstructions: np.ndarray  # N, 96, F


def _as_batch(params: AEParams, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    expected = (BAR_FRAMES, params.feature_dim)
    if batch.ndim != 3 or batch.shape[1:] != expected:
        raise ShapeMismatchError(f"Expected bars shaped N x {expected[0]} x {expected[1]}, got {batch.shape}")
    return batch[:, None, :, :]


def _encode(params: AEParams, x: np.ndarray):
    conv1_pre = layers.conv2d_forward(x, params.enc_conv1_w, params.enc_conv1_b)
    pool1_out, pool1_argmax = layers.maxpool2x2_forward(layers.relu(conv1_pre))
    conv2_pre = layers.conv2d_forward(pool1_out, params.enc_conv2_w, params.enc_conv2_b)
    pool2_out, pool2_argmax = layers.maxpool2x2_forward(layers.relu(conv2_pre))
    encoded_flat = pool2_out.reshape(x.shape[0], -1)
    latents = layers.linear_forward(encoded_flat, params.enc_fc_w, params.enc_fc_b)  # no activation
    return conv1_pre, pool1_argmax, pool1_out, conv2_pre, pool2_argmax, encoded_flat, latents


def encode(params: AEParams, batch: np.ndarray) -> np.ndarray:
    """Latent vectors (N x d_ls) of a stack of bars"""
    latents = _encode(params, _as_batch(params, batch))[-1]
    if not np.all(np.isfinite(latents)):
        raise DivergenceError("Non-finite latent values")
    return latents


def forward(params: AEParams, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray, Tape]:
    """Encode then decode a stack of bars. Returns (latents, reconstructions, tape)."""
    x = _as_batch(params, batch)
    conv1_pre, pool1_argmax, pool1_out, conv2_pre, pool2_argmax, encoded_flat, latents = _encode(params, x)

    dec_fc_pre = layers.linear_forward(latents, params.dec_fc_w, params.dec_fc_b)
    tconv1_in = layers.relu(dec_fc_pre).reshape(x.shape[0], CONV2_MAPS, POOLED_FRAMES, params.feature_dim // 4)
    tconv1_pre = layers.conv_transpose2d_forward(tconv1_in, params.dec_tconv1_w, params.dec_tconv1_b)
    tconv2_in = layers.relu(tconv1_pre)
    reconstructions = layers.conv_transpose2d_forward(tconv2_in, params.dec_tconv2_w, params.dec_tconv2_b)[:, 0]

    if not (np.all(np.isfinite(latents)) and np.all(np.isfinite(reconstructions))):
        raise DivergenceError("Non-finite activation in the autoencoder forward pass")

    tape = Tape(
        x=x,
        conv1_pre=conv1_pre,
        pool1_argmax=pool1_argmax,
        pool1_out=pool1_out,
        conv2_pre=conv2_pre,
        pool2_argmax=pool2_argmax,
        encoded_flat=encoded_flat,
        latents=latents,
        dec_fc_pre=dec_fc_pre,
        tconv1_in=tconv1_in,
        tconv1_pre=tconv1_pre,
        tconv2_in=tconv2_in,
        reconstructions=reconstructions,
    )
    return latents, reconstructions, tape


def loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean squared error over every entry of the batch"""
    x, x_hat = np.asarray(x), np.asarray(x_hat)
    if x.shape != x_hat.shape:
        raise ShapeMismatchError(f"Loss inputs differ in shape: {x.shape} vs {x_hat.shape}")
    return float(np.mean((x_hat - x) ** 2))


def backward(params: AEParams, tape: Tape, x: np.ndarray) -> Gradients:
    """Exact gradient of loss(x, forward(params, x)) with respect to every parameter"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != tape.reconstructions.shape or x.shape[2] != params.feature_dim:
        raise ShapeMismatchError(f"Tape holds {tape.reconstructions.shape} reconstructions, got targets {x.shape}")
    batch = x.shape[0]

    grad_out = (2.0 / x.size) * (tape.reconstructions - x)[:, None, :, :]
    grad_tconv2_in, g_tconv2_w, g_tconv2_b = layers.conv_transpose2d_backward(
        grad_out, tape.tconv2_in, params.dec_tconv2_w
    )
    grad_tconv1_pre = layers.relu_backward(grad_tconv2_in, tape.tconv1_pre)
    grad_tconv1_in, g_tconv1_w, g_tconv1_b = layers.conv_transpose2d_backward(
        grad_tconv1_pre, tape.tconv1_in, params.dec_tconv1_w
    )
    grad_dec_fc_pre = layers.relu_backward(grad_tconv1_in.reshape(batch, -1), tape.dec_fc_pre)
    grad_latents, g_dec_fc_w, g_dec_fc_b = layers.linear_backward(grad_dec_fc_pre, tape.latents, params.dec_fc_w)

    grad_flat, g_enc_fc_w, g_enc_fc_b = layers.linear_backward(grad_latents, tape.encoded_flat, params.enc_fc_w)
    grad_pool2 = grad_flat.reshape(batch, CONV2_MAPS, POOLED_FRAMES, params.feature_dim // 4)
    grad_conv2_pre = layers.relu_backward(layers.maxpool2x2_backward(grad_pool2, tape.pool2_argmax), tape.conv2_pre)
    grad_pool1, g_conv2_w, g_conv2_b = layers.conv2d_backward(grad_conv2_pre, tape.pool1_out, params.enc_conv2_w)
    grad_conv1_pre = layers.relu_backward(layers.maxpool2x2_backward(grad_pool1, tape.pool1_argmax), tape.conv1_pre)
    _, g_conv1_w, g_conv1_b = layers.conv2d_backward(grad_conv1_pre, tape.x, params.enc_conv1_w, input_grad=False)

    return Gradients(
        enc_conv1_w=g_conv1_w,
        enc_conv1_b=g_conv1_b,
        enc_conv2_w=g_conv2_w,
        enc_conv2_b=g_conv2_b,
        enc_fc_w=g_enc_fc_w,
        enc_fc_b=g_enc_fc_b,
        dec_fc_w=g_dec_fc_w,
        dec_fc_b=g_dec_fc_b,
        dec_tconv1_w=g_tconv1_w,
        dec_tconv1_b=g_tconv1_b,
        dec_tconv2_w=g_tconv2_w,
        dec_tconv2_b=g_tconv2_b,
    )


def save_checkpoint(params: AEParams, path: str | Path, seed: int = 0, epoch: int = 0) -> None:
    """Header (F, d_ls, seed, epoch) then every tensor as little-endian float32, row-major"""
    with open(path, "wb") as f:
        f.write(_CHECKPOINT_HEADER.pack(_CHECKPOINT_MAGIC, params.feature_dim, params.d_ls, seed, epoch))
        for tensor in params.tensors().values():
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> tuple[AEParams, dict]:
    data = Path(path).read_bytes()
    if len(data) < _CHECKPOINT_HEADER.size:
        raise ShapeMismatchError(f"{path} is too short to be a checkpoint")
    magic, feature_dim, d_ls, seed, epoch = _CHECKPOINT_HEADER.unpack_from(data)
    if magic != _CHECKPOINT_MAGIC:
        raise ShapeMismatchError(f"{path} is not an autoencoder checkpoint")

    tensors = {}
    offset = _CHECKPOINT_HEADER.size
    for name, shape in parameter_shapes(feature_dim, d_ls).items():
        count = int(np.prod(shape))
        if offset + 4 * count > len(data):
            raise ShapeMismatchError(f"{path} is truncated at {name}")
        values = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        tensors[name] = values.reshape(shape).astype(np.float64)
        offset += 4 * count
    if offset != len(data):
        raise ShapeMismatchError(f"{path} has {len(data) - offset} trailing bytes")
    return AEParams(**tensors), {"feature_dim": feature_dim, "d_ls": d_ls, "seed": seed, "epoch": epoch}
