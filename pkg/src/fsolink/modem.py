"""Square M-QAM constellations, one-hot encoding, and DC-bias handling."""

from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class Constellation:
    """Gray-labeled square QAM alphabet normalized to unit average symbol energy.

    ``points[i]`` is the complex amplitude transmitted for symbol index ``i``
    (row-major over the I/Q grid); ``labels[i]`` is its Gray-code bit label.
    """

    order: int
    points: np.ndarray  # complex128, shape (M,)
    labels: np.ndarray  # int64, shape (M,)

    @property
    def min_distance(self) -> float:
        side = int(np.sqrt(self.order))
        return 2.0 / np.sqrt(2.0 * (self.order - 1) / 3.0) if side > 1 else 0.0


@dataclass(frozen=True)
class SymbolFrame:
    """One frame of transmit symbols: indices, one-hot targets, mapped samples."""

    indices: np.ndarray     # int64, shape (N,)
    one_hot: np.ndarray     # float64, shape (N, M)
    tx_samples: np.ndarray  # complex128, shape (N,)

    @classmethod
    def build(cls, indices, constellation: Constellation) -> "SymbolFrame":
        indices = np.asarray(indices, dtype=np.int64)
        return cls(
            indices=indices,
            one_hot=encode_one_hot(indices, constellation.order),
            tx_samples=map_symbols(indices, constellation),
        )


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


def build_qam(order: int) -> Constellation:
    """Build a square M-QAM constellation with Gray labeling and E[|point|^2] = 1.

    Index i addresses the grid row-major: i = row * sqrt(M) + col, with the
    in-phase level increasing with col and the quadrature level with row.
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; expected one of {SUPPORTED_ORDERS}")
    side = int(np.sqrt(order))
    levels = np.arange(-side + 1, side, 2, dtype=np.float64)
    # Raw average energy of the +/-1, +/-3, ... grid is 2(M-1)/3.
    scale = np.sqrt(2.0 * (order - 1) / 3.0)
    points = (levels[None, :] + 1j * levels[:, None]).reshape(-1) / scale

    rows, cols = np.divmod(np.arange(order), side)
    bits_per_axis = side.bit_length() - 1
    labels = (_gray(rows) << bits_per_axis) | _gray(cols)
    return Constellation(order=order, points=points, labels=labels)


def encode_one_hot(indices, order: int) -> np.ndarray:
    """Encode symbol indices as an N x M one-hot matrix."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= order):
        raise ValueError(f"symbol index out of range 0..{order - 1}")
    out = np.zeros((indices.shape[0], order), dtype=np.float64)
    out[np.arange(indices.shape[0]), indices] = 1.0
    return out


def map_symbols(indices, constellation: Constellation) -> np.ndarray:
    """Map symbol indices onto constellation points."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= constellation.order):
        raise ValueError(f"symbol index out of range 0..{constellation.order - 1}")
    return constellation.points[indices]


def add_dc_bias(samples, bias: float = 1.0) -> np.ndarray:
    """Add a real DC offset so the transmitted intensity is positive."""
    if bias < 0:
        raise ValueError("bias must be >= 0")
    return np.asarray(samples, dtype=np.complex128) + bias
