"""Forward and backward passes of the layer types used by the autoencoder.

Arrays are NCHW float64. Every backward function returns gradients in the
shapes of the corresponding forward inputs.

The 3x3 convolutions run as im2col / col2im: the nine taps are gathered into
one contiguous column matrix laid out channel-major (C, 3, 3, N, H, W), so
each layer costs one matrix product plus nine slice copies.
"""

import numpy as np

# 2x2 block offsets (row, col) in argmax order
_POOL_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))


def _swap_nc(x: np.ndarray) -> np.ndarray:
    """NCHW <-> CNHW, contiguous"""
    return np.ascontiguousarray(x.transpose(1, 0, 2, 3))


def _im2col(padded: np.ndarray, height: int, width: int, stride: int = 1) -> np.ndarray:
    """(C, N, H', W') -> (C, 3, 3, N, H, W): the 3x3 neighbourhood of every output position"""
    channels, batch = padded.shape[:2]
    cols = np.empty((channels, 3, 3, batch, height, width))
    for ki in range(3):
        for kj in range(3):
            cols[:, ki, kj] = padded[:, :, ki : ki + stride * height : stride, kj : kj + stride * width : stride]
    return cols


def _col2im(cols: np.ndarray, padded_shape: tuple[int, ...], stride: int = 1) -> np.ndarray:
    """Adjoint of _im2col: scatter-add the columns back onto a (C, N, H', W') canvas"""
    height, width = cols.shape[4:]
    padded = np.zeros(padded_shape)
    for ki in range(3):
        for kj in range(3):
            padded[:, :, ki : ki + stride * height : stride, kj : kj + stride * width : stride] += cols[:, ki, kj]
    return padded


def _pad_channels_first(x: np.ndarray) -> np.ndarray:
    return np.pad(_swap_nc(x), ((0, 0), (0, 0), (1, 1), (1, 1)))


def conv2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding 1 (output keeps the spatial size).

    weight: (C_out, C_in, 3, 3)
    """
    batch, in_channels, height, width = x.shape
    cols = _im2col(_pad_channels_first(x), height, width).reshape(in_channels * 9, -1)
    out = weight.reshape(weight.shape[0], -1) @ cols + bias[:, None]
    return _swap_nc(out.reshape(-1, batch, height, width))


def conv2d_backward(
    grad_out: np.ndarray, x: np.ndarray, weight: np.ndarray, input_grad: bool = True
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients w.r.t. (x, weight, bias); the x gradient is None when `input_grad` is off"""
    batch, in_channels, height, width = x.shape
    out_channels = weight.shape[0]
    padded = _pad_channels_first(x)
    cols = _im2col(padded, height, width).reshape(in_channels * 9, -1)
    grad_mat = _swap_nc(grad_out).reshape(out_channels, -1)

    grad_weight = (grad_mat @ cols.T).reshape(weight.shape)
    grad_bias = grad_mat.sum(axis=1)
    if not input_grad:
        return None, grad_weight, grad_bias

    grad_cols = (weight.reshape(out_channels, -1).T @ grad_mat).reshape(in_channels, 3, 3, batch, height, width)
    grad_padded = _col2im(grad_cols, padded.shape)
    return _swap_nc(grad_padded[:, :, 1:-1, 1:-1]), grad_weight, grad_bias


def conv_transpose2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 transposed convolution, stride 2, padding 1, output padding 1 (doubles H and W).

    weight: (C_in, C_out, 3, 3); input pixel (i, j) spreads onto outputs (2i + ki - 1, 2j + kj - 1).
    """
    batch, in_channels, height, width = x.shape
    out_channels = weight.shape[1]
    x_mat = _swap_nc(x).reshape(in_channels, -1)
    cols = (weight.reshape(in_channels, -1).T @ x_mat).reshape(out_channels, 3, 3, batch, height, width)
    canvas = _col2im(cols, (out_channels, batch, 2 * height + 1, 2 * width + 1), stride=2)
    return _swap_nc(canvas[:, :, 1:, 1:] + bias[:, None, None, None])


def conv_transpose2d_backward(
    grad_out: np.ndarray, x: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    batch, in_channels, height, width = x.shape
    out_channels = weight.shape[1]
    grad_canvas = np.zeros((out_channels, batch, 2 * height + 1, 2 * width + 1))
    grad_canvas[:, :, 1:, 1:] = grad_out.transpose(1, 0, 2, 3)
    cols = _im2col(grad_canvas, height, width, stride=2).reshape(out_channels * 9, -1)
    x_mat = _swap_nc(x).reshape(in_channels, -1)

    grad_x = (weight.reshape(in_channels, -1) @ cols).reshape(in_channels, batch, height, width)
    grad_weight = (x_mat @ cols.T).reshape(weight.shape)
    return _swap_nc(grad_x), grad_weight, grad_out.sum(axis=(0, 2, 3))


def maxpool2x2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling, stride 2. Returns the output and the argmax (first index wins ties)."""
    quadrants = [x[:, :, r::2, c::2] for r, c in _POOL_OFFSETS]
    out = np.maximum(np.maximum(quadrants[0], quadrants[1]), np.maximum(quadrants[2], quadrants[3]))
    argmax = np.full(out.shape, 3, dtype=np.int8)
    for k in (2, 1, 0):
        argmax[quadrants[k] == out] = k
    return out, argmax


def maxpool2x2_backward(grad_out: np.ndarray, argmax: np.ndarray) -> np.ndarray:
    batch, channels, out_h, out_w = grad_out.shape
    grad_x = np.empty((batch, channels, 2 * out_h, 2 * out_w))
    for k, (r, c) in enumerate(_POOL_OFFSETS):
        grad_x[:, :, r::2, c::2] = np.where(argmax == k, grad_out, 0.0)
    return grad_x


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(grad_out: np.ndarray, pre_activation: np.ndarray) -> np.ndarray:
    return grad_out * (pre_activation > 0)


def linear_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """weight: (out_features, in_features)"""
    return x @ weight.T + bias


def linear_backward(
    grad_out: np.ndarray, x: np.ndarray, weight: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return grad_out @ weight, grad_out.T @ x, grad_out.sum(axis=0)
