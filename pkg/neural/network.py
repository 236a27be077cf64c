"""
Sequential stack of layers with a flat parameter view
"""
from typing import List, Optional, Tuple

import numpy as np

from app.exceptions import MissingCacheError, ShapeError
from neural.layers import Dropout, Layer
from neural.params import ParameterSet


class Network:
    """Layers applied in order; gradients flow back through all of them"""

    def __init__(self, layers: List[Layer]):
        self.layers = layers
        self._input_shape: Optional[Tuple[int, ...]] = None

    def forward(self, X: np.ndarray, training: bool = False, key: Tuple[int, int] = (0, 0)) -> np.ndarray:
        """Forward pass; `key` = (epoch, batch index) selects the dropout masks"""
        out = np.asarray(X, dtype=np.float64)
        for layer in self.layers:
            if isinstance(layer, Dropout):
                layer.key = key
            out = layer.forward(out, training=training)
        self._input_shape = np.shape(X)
        return out

    def backward(self, dY: np.ndarray) -> np.ndarray:
        if self._input_shape is None:
            raise MissingCacheError("network backward() called before forward()")
        grad = dY
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def clear(self):
        self._input_shape = None
        for layer in self.layers:
            layer.clear()

    def _named(self, source: str) -> ParameterSet:
        named = []
        for index, layer in enumerate(self.layers):
            arrays = layer.arrays() if source == "arrays" else layer.grads
            for name in layer.arrays():
                named.append((f"{index}.{layer.kind}.{name}", arrays[name]))
        return ParameterSet(named)

    def parameters(self) -> ParameterSet:
        return self._named("arrays")

    def gradients(self) -> ParameterSet:
        missing = [i for i, layer in enumerate(self.layers) if layer.arrays() and not layer.grads]
        if missing:
            raise MissingCacheError(f"no gradients for layer(s) {missing}; run backward() first")
        return self._named("grads")

    @property
    def parameter_count(self) -> int:
        return self.parameters().size

    def set_dropout(self, rate: float, seed: int):
        for layer in self.layers:
            if isinstance(layer, Dropout):
                if not 0.0 <= rate < 1.0:
                    raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
                layer.rate = rate
                layer.seed = seed

    def snapshot(self) -> ParameterSet:
        return self.parameters().copy()

    def restore(self, snapshot: ParameterSet):
        self.parameters().assign(snapshot)


def backward(network: Network, inputs: np.ndarray, loss_gradient: np.ndarray) -> ParameterSet:
    """Gradients of every parameter, given dLoss/dOutput of the last forward pass on `inputs`"""
    if network._input_shape is None:
        raise MissingCacheError("no cached forward pass")
    if tuple(network._input_shape) != tuple(np.shape(inputs)):
        raise ShapeError(f"cached forward pass was on {network._input_shape}, not {np.shape(inputs)}")
    network.backward(loss_gradient)
    return network.gradients()
