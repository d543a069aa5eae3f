# core/precision.py
from dataclasses import dataclass
from enum import Enum

import ml_dtypes
import numpy as np

from .exceptions import ConfigurationError


class GraphPrecision(str, Enum):
    BINARY64 = 'binary64'
    BINARY32 = 'binary32'


class SystemPrecision(str, Enum):
    BINARY64 = 'binary64'
    BINARY32 = 'binary32'
    BFLOAT16_STORAGE = 'bfloat16_storage'


_GRAPH_DTYPES = {
    GraphPrecision.BINARY64: np.dtype(np.float64),
    GraphPrecision.BINARY32: np.dtype(np.float32),
}

_SYSTEM_DTYPES = {
    SystemPrecision.BINARY64: np.dtype(np.float64),
    SystemPrecision.BINARY32: np.dtype(np.float32),
    SystemPrecision.BFLOAT16_STORAGE: np.dtype(ml_dtypes.bfloat16),
}


@dataclass(frozen=True)
class PrecisionPair:
    """Graph (descriptor) precision and linear-system storage precision"""
    graph_precision: GraphPrecision = GraphPrecision.BINARY64
    system_precision: SystemPrecision = SystemPrecision.BINARY64

    def __post_init__(self):
        object.__setattr__(self, 'graph_precision', GraphPrecision(self.graph_precision))
        object.__setattr__(self, 'system_precision', SystemPrecision(self.system_precision))
        if self.storage_dtype.itemsize > self.graph_dtype.itemsize:
            raise ConfigurationError(
                f"System precision {self.system_precision.value} is wider than "
                f"graph precision {self.graph_precision.value}"
            )

    @property
    def graph_dtype(self) -> np.dtype:
        return _GRAPH_DTYPES[self.graph_precision]

    @property
    def storage_dtype(self) -> np.dtype:
        return _SYSTEM_DTYPES[self.system_precision]

    @property
    def compute_dtype(self) -> np.dtype:
        """Dtype system-precision arithmetic runs in; bfloat16 widens to binary32"""
        if self.system_precision is SystemPrecision.BFLOAT16_STORAGE:
            return np.dtype(np.float32)
        return self.storage_dtype

    @property
    def label(self) -> str:
        return PRECISION_LABELS_BY_PAIR.get(
            (self.graph_precision, self.system_precision),
            f"{self.graph_precision.value}/{self.system_precision.value}",
        )


PRECISION_PRESETS = {
    'fp64': PrecisionPair(GraphPrecision.BINARY64, SystemPrecision.BINARY64),
    'fp32': PrecisionPair(GraphPrecision.BINARY32, SystemPrecision.BINARY32),
    'fp32-bf16': PrecisionPair(GraphPrecision.BINARY32, SystemPrecision.BFLOAT16_STORAGE),
}

PRECISION_LABELS_BY_PAIR = {
    (pair.graph_precision, pair.system_precision): label
    for label, pair in PRECISION_PRESETS.items()
}


def precision_from_label(label: str) -> PrecisionPair:
    try:
        return PRECISION_PRESETS[label]
    except KeyError:
        raise ConfigurationError(
            f"Unknown precision '{label}', expected one of {sorted(PRECISION_PRESETS)}"
        ) from None


def narrow(values: np.ndarray, dtype: np.dtype) -> np.ndarray:
    """Store values at a (possibly narrower) precision, rounding to nearest even"""
    dtype = np.dtype(dtype)
    if dtype == np.dtype(ml_dtypes.bfloat16):
        # bfloat16 storage only pairs with binary32 graphs
        return np.asarray(values, dtype=np.float32).astype(dtype)
    return np.asarray(values).astype(dtype, copy=False)


def widen(values: np.ndarray, dtype: np.dtype) -> np.ndarray:
    """Widen stored values to an arithmetic dtype"""
    return np.asarray(values).astype(dtype, copy=False)
