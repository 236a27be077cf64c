"""
Predictor assembly: wiring of the five families on top of the layer kit
"""
from pathlib import Path
from typing import List, Union

import numpy as np

from app.exceptions import ShapeError
from app.logger import logger
from app.models import Activation, Family, ModelDescriptor
from neural.layers import GRU, LSTM, Conv1d, Dense, Dropout, Flatten, Layer, Reshape
from neural.network import Network
from neural.params import (
    Conv1dParams, DenseParams, GruParams, LstmParams, ParameterSet,
    load_parameters, save_parameters,
)


class Model:
    """A descriptor, its network and the seed it was initialised with"""

    def __init__(self, descriptor: ModelDescriptor, network: Network, seed: int):
        self.descriptor = descriptor
        self.network = network
        self.seed = seed

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Single-shot forecast of all T_y steps, dropout disabled"""
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim != 2 or inputs.shape[1] != self.descriptor.input_len:
            raise ShapeError(f"expected inputs of shape (N, {self.descriptor.input_len}), got {inputs.shape}")
        return self.network.forward(inputs, training=False)

    def parameters(self) -> ParameterSet:
        return self.network.parameters()

    @property
    def parameter_count(self) -> int:
        return self.network.parameter_count


def _conv_output_len(descriptor: ModelDescriptor) -> int:
    return descriptor.input_len - descriptor.layers * (descriptor.kernel_size - 1)


def _recurrent_layers(descriptor: ModelDescriptor, rng: np.random.Generator) -> List[Layer]:
    layers: List[Layer] = [Reshape((descriptor.input_len, 1))]
    n_in = 1
    for index in range(descriptor.layers):
        last = index == descriptor.layers - 1
        if descriptor.family == Family.LSTM:
            layers.append(LSTM(LstmParams.create(n_in, descriptor.units, rng), return_sequences=not last))
        else:
            layers.append(GRU(GruParams.create(n_in, descriptor.units, rng), return_sequences=not last))
        n_in = descriptor.units
    return layers


def build_model(descriptor: ModelDescriptor, seed: int = 0, dropout_rate: float = 0.0) -> Model:
    """
    linear: one affine map T_x -> T_y.
    ffn:    dense(relu) stack, dropout, linear readout.
    lstm/gru: recurrent stack over the window, last hidden state, dropout, readout.
    cnn1d:  valid conv(relu) stack, flatten, dense(T_y, relu), dropout, readout.
    """
    if descriptor.output_len < 1:
        raise ShapeError("output length must be at least 1")
    rng = np.random.default_rng(seed)
    t_x, t_y = descriptor.input_len, descriptor.output_len
    family = Family(descriptor.family)

    if family == Family.LINEAR:
        layers: List[Layer] = [Dense(DenseParams.create(t_x, t_y, Activation.IDENTITY, rng))]
    elif family == Family.FFN:
        layers = []
        n_in = t_x
        for _ in range(descriptor.layers):
            layers.append(Dense(DenseParams.create(n_in, descriptor.units, Activation.RELU, rng)))
            n_in = descriptor.units
        layers += [Dropout(dropout_rate, seed), Dense(DenseParams.create(n_in, t_y, Activation.IDENTITY, rng))]
    elif family in (Family.LSTM, Family.GRU):
        layers = _recurrent_layers(descriptor, rng)
        layers += [
            Dropout(dropout_rate, seed),
            Dense(DenseParams.create(descriptor.units, t_y, Activation.IDENTITY, rng)),
        ]
    else:
        out_len = _conv_output_len(descriptor)
        if out_len < 1:
            raise ShapeError(
                f"cnn1d input length {t_x} is shorter than {descriptor.layers} kernel(s) of size {descriptor.kernel_size}"
            )
        layers = [Reshape((1, t_x))]
        channels = 1
        for _ in range(descriptor.layers):
            layers.append(Conv1d(Conv1dParams.create(channels, descriptor.kernels, descriptor.kernel_size,
                                                     Activation.RELU, rng)))
            channels = descriptor.kernels
        layers += [
            Flatten(),
            Dense(DenseParams.create(channels * out_len, t_y, Activation.RELU, rng)),
            Dropout(dropout_rate, seed),
            Dense(DenseParams.create(t_y, t_y, Activation.IDENTITY, rng)),
        ]

    model = Model(descriptor, Network(layers), seed)
    logger.debug(f"Built {family.value} model with {model.parameter_count} parameters")
    return model


def init_params(descriptor: ModelDescriptor, seed: int = 0) -> ParameterSet:
    """Glorot-uniform weights and zero biases for a descriptor"""
    return build_model(descriptor, seed).parameters()


def save_model(model: Model, path: Union[str, Path]) -> Path:
    header = {"descriptor": model.descriptor.model_dump(mode="json"), "seed": model.seed}
    return save_parameters(path, model.parameters(), header)


def load_model(path: Union[str, Path]) -> Model:
    params, header = load_parameters(path)
    if "descriptor" not in header:
        raise ValueError(f"{path} has no model descriptor header")
    model = build_model(ModelDescriptor(**header["descriptor"]), int(header.get("seed", 0)))
    model.parameters().assign(params)
    return model
