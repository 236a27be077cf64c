"""
Parameter containers, initialization and the ParameterSet document format
"""
import json
from collections import OrderedDict
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Tuple, Union

import numpy as np

from app.models import Activation

PARAMS_FORMAT = "channelbench.parameter-set"
PARAMS_FORMAT_VERSION = 1


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class _Arrays:
    """Mixin: expose the ndarray fields of a parameter dataclass by name"""

    def arrays(self) -> Dict[str, np.ndarray]:
        return OrderedDict(
            (f.name, getattr(self, f.name))
            for f in fields(self)
            if isinstance(getattr(self, f.name), np.ndarray)
        )


@dataclass
class DenseParams(_Arrays):
    W: np.ndarray
    b: np.ndarray
    activation: Activation = Activation.IDENTITY

    @classmethod
    def create(cls, n_in: int, n_out: int, activation: Activation, rng: np.random.Generator) -> "DenseParams":
        return cls(
            W=glorot_uniform(rng, (n_in, n_out), n_in, n_out),
            b=np.zeros(n_out),
            activation=activation,
        )


LSTM_GATES = ("f", "i", "o", "c")
GRU_GATES = ("u", "r", "h")


@dataclass
class LstmParams(_Arrays):
    W_xf: np.ndarray
    W_xi: np.ndarray
    W_xo: np.ndarray
    W_xc: np.ndarray
    W_hf: np.ndarray
    W_hi: np.ndarray
    W_ho: np.ndarray
    W_hc: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def hidden(self) -> int:
        return int(self.W_hf.shape[0])

    @classmethod
    def create(cls, n_in: int, hidden: int, rng: np.random.Generator) -> "LstmParams":
        parts = {}
        for gate in LSTM_GATES:
            parts[f"W_x{gate}"] = glorot_uniform(rng, (n_in, hidden), n_in, hidden)
        for gate in LSTM_GATES:
            parts[f"W_h{gate}"] = glorot_uniform(rng, (hidden, hidden), hidden, hidden)
        for gate in LSTM_GATES:
            parts[f"b_{gate}"] = np.zeros(hidden)
        return cls(**parts)


@dataclass
class GruParams(_Arrays):
    W_xu: np.ndarray
    W_xr: np.ndarray
    W_xh: np.ndarray
    W_hu: np.ndarray
    W_hr: np.ndarray
    W_hh: np.ndarray
    b_u: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    @property
    def hidden(self) -> int:
        return int(self.W_hu.shape[0])

    @classmethod
    def create(cls, n_in: int, hidden: int, rng: np.random.Generator) -> "GruParams":
        parts = {}
        for gate in GRU_GATES:
            parts[f"W_x{gate}"] = glorot_uniform(rng, (n_in, hidden), n_in, hidden)
        for gate in GRU_GATES:
            parts[f"W_h{gate}"] = glorot_uniform(rng, (hidden, hidden), hidden, hidden)
        for gate in GRU_GATES:
            parts[f"b_{gate}"] = np.zeros(hidden)
        return cls(**parts)


@dataclass
class Conv1dParams(_Arrays):
    # kernels: (num_kernels, in_channels, kernel_size); a 2-D array means one input channel
    kernels: np.ndarray
    biases: np.ndarray
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        if self.kernels.ndim == 2:
            self.kernels = self.kernels[:, None, :]
        self.biases = np.asarray(self.biases, dtype=np.float64)

    @property
    def kernel_size(self) -> int:
        return int(self.kernels.shape[2])

    @classmethod
    def create(cls, in_channels: int, num_kernels: int, kernel_size: int,
               activation: Activation, rng: np.random.Generator) -> "Conv1dParams":
        fan_in = in_channels * kernel_size
        fan_out = num_kernels * kernel_size
        return cls(
            kernels=glorot_uniform(rng, (num_kernels, in_channels, kernel_size), fan_in, fan_out),
            biases=np.zeros(num_kernels),
            activation=activation,
        )


class ParameterSet(Mapping):
    """
    Ordered name -> array map over a network's trainable arrays.

    The arrays are the live ones, so in-place updates reach the network.
    """

    def __init__(self, arrays: Optional[Mapping[str, np.ndarray]] = None):
        self._arrays: "OrderedDict[str, np.ndarray]" = OrderedDict(arrays or {})

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    @property
    def size(self) -> int:
        return int(sum(a.size for a in self._arrays.values()))

    def copy(self) -> "ParameterSet":
        return ParameterSet((name, array.copy()) for name, array in self._arrays.items())

    def assign(self, other: Mapping[str, np.ndarray]):
        """Copy values from `other` into these arrays, in place"""
        if list(other.keys()) != list(self._arrays.keys()):
            raise KeyError("parameter names do not match")
        for name, array in self._arrays.items():
            if other[name].shape != array.shape:
                raise ValueError(f"shape mismatch for '{name}': {other[name].shape} vs {array.shape}")
            array[...] = other[name]

    def to_document(self, header: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        return {
            "format": PARAMS_FORMAT,
            "version": PARAMS_FORMAT_VERSION,
            "header": header or {},
            "arrays": [
                {"name": name, "shape": list(array.shape), "data": [float(v) for v in array.ravel()]}
                for name, array in self._arrays.items()
            ],
        }

    def to_json(self, header: Optional[Dict[str, Any]] = None) -> str:
        # float repr round-trips exactly, so the text is byte-stable
        return json.dumps(self.to_document(header), separators=(",", ":"), sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Tuple["ParameterSet", Dict[str, Any]]:
        document = json.loads(text)
        if document.get("format") != PARAMS_FORMAT:
            raise ValueError(f"not a parameter-set document: {document.get('format')!r}")
        if document.get("version") != PARAMS_FORMAT_VERSION:
            raise ValueError(f"unsupported parameter-set version {document.get('version')}")
        arrays = OrderedDict(
            (entry["name"], np.array(entry["data"], dtype=np.float64).reshape(entry["shape"]))
            for entry in document["arrays"]
        )
        return cls(arrays), document.get("header", {})


def save_parameters(path: Union[str, Path], params: ParameterSet, header: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(params.to_json(header), encoding="utf-8")
    return path


def load_parameters(path: Union[str, Path]) -> Tuple[ParameterSet, Dict[str, Any]]:
    return ParameterSet.from_json(Path(path).read_text(encoding="utf-8"))
