"""
Trainable layers with hand-derived backward passes.

Every layer caches what its backward pass needs during forward(); calling
backward() without a cached forward raises MissingCacheError. Gradients
land in ``layer.grads`` under the same names as ``layer.arrays()``.
"""
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.exceptions import MissingCacheError, ShapeError
from app.models import Activation
from neural.params import Conv1dParams, DenseParams, GruParams, LstmParams

SeedLike = Union[int, Sequence[int]]


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == Activation.RELU else z


def _activation_grad(z: np.ndarray, upstream: np.ndarray, activation: Activation) -> np.ndarray:
    return upstream * (z > 0) if activation == Activation.RELU else upstream


def _require_finite(name: str, *arrays: np.ndarray):
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise FloatingPointError(f"non-finite values in {name}; training is diverging")


# ------------------------------------------------------------ functional ops


def dense_forward(params: DenseParams, X: np.ndarray) -> np.ndarray:
    if X.ndim != 2 or X.shape[1] != params.W.shape[0]:
        raise ShapeError(f"dense input {X.shape} does not match weights {params.W.shape}")
    return _activate(X @ params.W + params.b, params.activation)


def lstm_step(params: LstmParams, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    h_t, c_t, _ = _lstm_step(params, x_t, h_prev, c_prev)
    return h_t, c_t


def _lstm_step(params: LstmParams, x_t, h_prev, c_prev):
    if x_t.shape[1] != params.W_xf.shape[0] or h_prev.shape[1] != params.hidden or c_prev.shape != h_prev.shape:
        raise ShapeError(f"lstm step got x {x_t.shape}, h {h_prev.shape}, c {c_prev.shape} for hidden {params.hidden}")
    f = sigmoid(x_t @ params.W_xf + h_prev @ params.W_hf + params.b_f)
    i = sigmoid(x_t @ params.W_xi + h_prev @ params.W_hi + params.b_i)
    o = sigmoid(x_t @ params.W_xo + h_prev @ params.W_ho + params.b_o)
    g = np.tanh(x_t @ params.W_xc + h_prev @ params.W_hc + params.b_c)
    c_t = f * c_prev + i * g
    tanh_c = np.tanh(c_t)
    h_t = tanh_c * o
    _require_finite("lstm cell state", c_t)
    return h_t, c_t, (x_t, h_prev, c_prev, f, i, o, g, tanh_c)


def gru_step(params: GruParams, x_t: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    return _gru_step(params, x_t, h_prev)[0]


def _gru_step(params: GruParams, x_t, h_prev):
    if x_t.shape[1] != params.W_xu.shape[0] or h_prev.shape[1] != params.hidden:
        raise ShapeError(f"gru step got x {x_t.shape}, h {h_prev.shape} for hidden {params.hidden}")
    u = sigmoid(x_t @ params.W_xu + h_prev @ params.W_hu + params.b_u)
    r = sigmoid(x_t @ params.W_xr + h_prev @ params.W_hr + params.b_r)
    candidate = np.tanh(x_t @ params.W_xh + (r * h_prev) @ params.W_hh + params.b_h)
    h_t = u * h_prev + (1.0 - u) * candidate
    _require_finite("gru hidden state", h_t)
    return h_t, (x_t, h_prev, u, r, candidate)


def _as_channels(x: np.ndarray) -> np.ndarray:
    return x[:, None, :] if x.ndim == 2 else x


def conv1d_forward(params: Conv1dParams, x: np.ndarray) -> np.ndarray:
    """Valid-mode cross-correlation plus per-kernel bias: (N, T) or (N, C, T) -> (N, K, T - k + 1)"""
    return _activate(_conv1d_scores(params, _as_channels(x))[0], params.activation)


def _conv1d_scores(params: Conv1dParams, x: np.ndarray):
    if x.ndim != 3 or x.shape[1] != params.kernels.shape[1]:
        raise ShapeError(f"conv input {x.shape} does not match kernels {params.kernels.shape}")
    if x.shape[2] < params.kernel_size:
        raise ShapeError(f"input length {x.shape[2]} is shorter than kernel size {params.kernel_size}")
    windows = sliding_window_view(x, params.kernel_size, axis=2)  # N, C, T', k
    z = np.einsum("nctk,ock->not", windows, params.kernels) + params.biases[None, :, None]
    return z, windows


def dropout_mask(shape: Tuple[int, ...], rate: float, seed: SeedLike) -> np.ndarray:
    keep = np.random.default_rng(seed).random(shape) >= rate
    return keep / (1.0 - rate)


def dropout_apply(x: np.ndarray, rate: float, training: bool, seed: SeedLike) -> np.ndarray:
    """Inverted dropout; identity at inference or for rate 0"""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    return x * dropout_mask(x.shape, rate, seed)


# ------------------------------------------------------------------ layers


class Layer:
    kind = "layer"

    def __init__(self):
        self.grads: Dict[str, np.ndarray] = {}
        self._cache = None

    def arrays(self) -> Dict[str, np.ndarray]:
        return {}

    def forward(self, X: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dY: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cached(self):
        if self._cache is None:
            raise MissingCacheError(f"{self.kind} layer: backward() called before forward()")
        return self._cache

    def clear(self):
        self._cache = None


class Dense(Layer):
    kind = "dense"

    def __init__(self, params: DenseParams):
        super().__init__()
        self.params = params

    def arrays(self):
        return self.params.arrays()

    def forward(self, X, training=False):
        if X.ndim != 2 or X.shape[1] != self.params.W.shape[0]:
            raise ShapeError(f"dense input {X.shape} does not match weights {self.params.W.shape}")
        Z = X @ self.params.W + self.params.b
        self._cache = (X, Z)
        return _activate(Z, self.params.activation)

    def backward(self, dY):
        X, Z = self._cached()
        dZ = _activation_grad(Z, dY, self.params.activation)
        self.grads = {"W": X.T @ dZ, "b": dZ.sum(axis=0)}
        return dZ @ self.params.W.T


class LSTM(Layer):
    """Unrolled LSTM over (N, T, in); zero initial states for every window"""
    kind = "lstm"

    def __init__(self, params: LstmParams, return_sequences: bool = False):
        super().__init__()
        self.params = params
        self.return_sequences = return_sequences

    def arrays(self):
        return self.params.arrays()

    def forward(self, X, training=False):
        if X.ndim != 3:
            raise ShapeError(f"lstm expects (N, T, in), got {X.shape}")
        n, steps, _ = X.shape
        h = np.zeros((n, self.params.hidden))
        c = np.zeros((n, self.params.hidden))
        outputs, caches = [], []
        for t in range(steps):
            h, c, cache = _lstm_step(self.params, X[:, t, :], h, c)
            outputs.append(h)
            caches.append(cache)
        self._cache = caches
        return np.stack(outputs, axis=1) if self.return_sequences else h

    def backward(self, dY):
        caches = self._cached()
        p = self.params
        steps = len(caches)
        grads = {name: np.zeros_like(array) for name, array in p.arrays().items()}
        dX = np.zeros((caches[0][0].shape[0], steps, p.W_xf.shape[0]))
        dh_next = np.zeros((caches[0][0].shape[0], p.hidden))
        dc_next = np.zeros_like(dh_next)

        for t in reversed(range(steps)):
            x, h_prev, c_prev, f, i, o, g, tanh_c = caches[t]
            if self.return_sequences:
                dh = dY[:, t, :] + dh_next
            else:
                dh = dh_next + (dY if t == steps - 1 else 0.0)
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
            dz = {
                "f": dc * c_prev * f * (1.0 - f),
                "i": dc * g * i * (1.0 - i),
                "o": do * o * (1.0 - o),
                "c": dc * i * (1.0 - g ** 2),
            }
            dc_next = dc * f
            dh_next = np.zeros_like(dh)
            dx = np.zeros_like(x)
            for gate, dzg in dz.items():
                grads[f"W_x{gate}"] += x.T @ dzg
                grads[f"W_h{gate}"] += h_prev.T @ dzg
                grads[f"b_{gate}"] += dzg.sum(axis=0)
                dx += dzg @ getattr(p, f"W_x{gate}").T
                dh_next += dzg @ getattr(p, f"W_h{gate}").T
            dX[:, t, :] = dx
        self.grads = grads
        return dX


class GRU(Layer):
    """Unrolled GRU over (N, T, in); zero initial state for every window"""
    kind = "gru"

    def __init__(self, params: GruParams, return_sequences: bool = False):
        super().__init__()
        self.params = params
        self.return_sequences = return_sequences

    def arrays(self):
        return self.params.arrays()

    def forward(self, X, training=False):
        if X.ndim != 3:
            raise ShapeError(f"gru expects (N, T, in), got {X.shape}")
        n, steps, _ = X.shape
        h = np.zeros((n, self.params.hidden))
        outputs, caches = [], []
        for t in range(steps):
            h, cache = _gru_step(self.params, X[:, t, :], h)
            outputs.append(h)
            caches.append(cache)
        self._cache = caches
        return np.stack(outputs, axis=1) if self.return_sequences else h

    def backward(self, dY):
        caches = self._cached()
        p = self.params
        steps = len(caches)
        grads = {name: np.zeros_like(array) for name, array in p.arrays().items()}
        dX = np.zeros((caches[0][0].shape[0], steps, p.W_xu.shape[0]))
        dh_next = np.zeros((caches[0][0].shape[0], p.hidden))

        for t in reversed(range(steps)):
            x, h_prev, u, r, cand = caches[t]
            if self.return_sequences:
                dh = dY[:, t, :] + dh_next
            else:
                dh = dh_next + (dY if t == steps - 1 else 0.0)
            dz_h = dh * (1.0 - u) * (1.0 - cand ** 2)
            dz_u = dh * (h_prev - cand) * u * (1.0 - u)
            d_rh = dz_h @ p.W_hh.T
            dz_r = d_rh * h_prev * r * (1.0 - r)

            grads["W_xh"] += x.T @ dz_h
            grads["W_hh"] += (r * h_prev).T @ dz_h
            grads["b_h"] += dz_h.sum(axis=0)
            grads["W_xu"] += x.T @ dz_u
            grads["W_hu"] += h_prev.T @ dz_u
            grads["b_u"] += dz_u.sum(axis=0)
            grads["W_xr"] += x.T @ dz_r
            grads["W_hr"] += h_prev.T @ dz_r
            grads["b_r"] += dz_r.sum(axis=0)

            dX[:, t, :] = dz_u @ p.W_xu.T + dz_r @ p.W_xr.T + dz_h @ p.W_xh.T
            dh_next = dh * u + d_rh * r + dz_u @ p.W_hu.T + dz_r @ p.W_hr.T
        self.grads = grads
        return dX


class Conv1d(Layer):
    kind = "conv1d"

    def __init__(self, params: Conv1dParams):
        super().__init__()
        self.params = params

    def arrays(self):
        return self.params.arrays()

    def forward(self, X, training=False):
        X = _as_channels(X)
        Z, windows = _conv1d_scores(self.params, X)
        self._cache = (X.shape, windows, Z)
        return _activate(Z, self.params.activation)

    def backward(self, dY):
        x_shape, windows, Z = self._cached()
        dZ = _activation_grad(Z, dY, self.params.activation)
        kernels = self.params.kernels
        self.grads = {
            "kernels": np.einsum("not,nctk->ock", dZ, windows),
            "biases": dZ.sum(axis=(0, 2)),
        }
        dX = np.zeros(x_shape)
        out_len = Z.shape[2]
        for j in range(self.params.kernel_size):
            dX[:, :, j:j + out_len] += np.einsum("not,oc->nct", dZ, kernels[:, :, j])
        return dX


class Dropout(Layer):
    """Inverted dropout whose mask depends only on (seed, epoch, batch)"""
    kind = "dropout"

    def __init__(self, rate: float = 0.0, seed: int = 0):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.seed = seed
        self.key: Tuple[int, ...] = (0, 0)

    def forward(self, X, training=False):
        if not training or self.rate == 0.0:
            self._cache = None if not training else np.ones(X.shape)
            return X
        mask = dropout_mask(X.shape, self.rate, (self.seed, *self.key))
        self._cache = mask
        return X * mask

    def backward(self, dY):
        if self._cache is None:
            return dY
        return dY * self._cache


class Reshape(Layer):
    """Pure shape change, e.g. (N, T) -> (N, T, 1) for recurrent input"""
    kind = "reshape"

    def __init__(self, shape: Tuple[int, ...]):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, X, training=False):
        self._cache = X.shape
        return X.reshape((X.shape[0],) + self.shape)

    def backward(self, dY):
        return dY.reshape(self._cached())


class Flatten(Layer):
    kind = "flatten"

    def forward(self, X, training=False):
        self._cache = X.shape
        return X.reshape(X.shape[0], -1)

    def backward(self, dY):
        return dY.reshape(self._cached())
