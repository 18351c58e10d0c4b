"""Siamese encoder: one shared weight set mapping thermogram tensors to embeddings."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import GradTape, Tensor
from .errors import ConfigError, ContractError, DimensionError, FormatError

MODEL_MAGIC = b"TVM1"

# Spatially: 64 -> conv5 -> 60 -> pool2 -> 30 -> conv3 -> 28 -> pool2 -> 14
# -> conv3 -> 12 -> pool2 -> 6. A first 3x3 kernel would leave an odd size at
# the second pool, which the strict pooling op rejects.
DEFAULT_BLOCKS = ((8, 5, 2), (16, 3, 2), (32, 3, 2))


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture of the encoder; both towers of a pair share one instance."""

    input_size: int = 64
    conv_blocks: tuple[tuple[int, int, int], ...] = DEFAULT_BLOCKS  # (out_channels, kernel, pool)
    embedding_dim: int = 64
    seed: int = 0


def spatial_trace(config: EncoderConfig) -> list[tuple[int, int]]:
    """(channels, side) after each conv/pool stage; raises ConfigError if degenerate."""
    if config.input_size < 1:
        raise ConfigError(f"input_size must be positive, got {config.input_size}")
    if config.embedding_dim < 2:
        raise ConfigError(f"embedding_dim must be at least 2, got {config.embedding_dim}")
    if not config.conv_blocks:
        raise ConfigError("at least one conv block is required")
    side = config.input_size
    channels = 1
    trace = []
    for i, (out_ch, k, pool) in enumerate(config.conv_blocks):
        if out_ch < 1 or k < 1 or pool < 1:
            raise ConfigError(f"block {i}: channels, kernel and pool must be positive")
        if k > side:
            raise ConfigError(f"block {i}: kernel {k} exceeds spatial size {side}")
        side = side - k + 1
        if pool > 1:
            if side % pool:
                raise ConfigError(f"block {i}: size {side} not divisible by pool {pool}")
            side //= pool
        if side < 1:
            raise ConfigError(f"block {i}: spatial size collapsed to {side}")
        channels = out_ch
        trace.append((channels, side))
    return trace


def flat_features(config: EncoderConfig) -> int:
    channels, side = spatial_trace(config)[-1]
    return channels * side * side


def parameter_count(config: EncoderConfig) -> int:
    """Total number of scalar parameters for the given architecture."""
    count = 0
    c_in = 1
    for out_ch, k, _pool in config.conv_blocks:
        count += out_ch * c_in * k * k + out_ch
        c_in = out_ch
    count += config.embedding_dim * flat_features(config) + config.embedding_dim
    return count


@dataclass(frozen=True)
class ModelParams:
    """The single shared weight set realizing both Siamese towers.

    Tensor order is kernels/bias per conv block, then the dense weights and
    bias. Arrays are treated as immutable; training replaces them wholesale.
    """

    config: EncoderConfig
    tensors: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        for i, t in enumerate(self.tensors):
            if not np.all(np.isfinite(t)):
                raise ContractError(f"parameter tensor {i} contains non-finite values")


def build_encoder(config: EncoderConfig) -> ModelParams:
    """Initialize parameters with scaled-uniform fan-in draws from the seeded generator."""
    spatial_trace(config)
    rng = np.random.default_rng(config.seed)
    tensors: list[np.ndarray] = []
    c_in = 1
    for out_ch, k, _pool in config.conv_blocks:
        bound = 1.0 / np.sqrt(c_in * k * k)
        tensors.append(rng.uniform(-bound, bound, size=(out_ch, c_in, k, k)))
        tensors.append(np.zeros(out_ch))
        c_in = out_ch
    n_flat = flat_features(config)
    bound = 1.0 / np.sqrt(n_flat)
    tensors.append(rng.uniform(-bound, bound, size=(config.embedding_dim, n_flat)))
    tensors.append(np.zeros(config.embedding_dim))
    return ModelParams(config=config, tensors=tuple(tensors))


def forward_embedding(param_tensors: Sequence[Tensor], config: EncoderConfig, x: Tensor) -> Tensor:
    """Run one tower over an input tensor; param_tensors may live on a tape."""
    t = x
    i = 0
    for _out_ch, _k, pool in config.conv_blocks:
        t = ad.conv2d(t, param_tensors[i], param_tensors[i + 1], stride=1)
        i += 2
        t = ad.relu(t)
        if pool > 1:
            t = ad.max_pool2d(t, pool)
    t = ad.reshape(t, (t.data.size,))
    return ad.dense(t, param_tensors[i], param_tensors[i + 1])


def embed(params: ModelParams, x) -> np.ndarray:
    """Embed one preprocessed input of shape 1 x S x S into a feature vector."""
    arr = np.asarray(x, dtype=np.float64)
    s = params.config.input_size
    if arr.shape != (1, s, s):
        raise DimensionError(f"embed: expected input of shape (1, {s}, {s}), got {arr.shape}")
    tensors = [Tensor(t) for t in params.tensors]
    return forward_embedding(tensors, params.config, Tensor(arr)).data


def euclidean_distance(a, b) -> float:
    """Euclidean distance between two embeddings."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise DimensionError(f"distance: embedding shapes {av.shape} and {bv.shape} differ")
    d = av - bv
    return float(np.sqrt(np.dot(d, d)))


def watch_params(tape: GradTape, params: ModelParams) -> list[Tensor]:
    """Register every parameter tensor on a tape for a training step."""
    return [tape.watch(t) for t in params.tensors]


def sgd_step(params: ModelParams, grads: Sequence[np.ndarray | None], lr: float) -> ModelParams:
    """One plain SGD update p <- p - lr * g; returns fresh parameters."""
    if lr < 0:
        raise ContractError("sgd_step: learning rate must be non-negative")
    if len(grads) != len(params.tensors):
        raise ContractError(f"sgd_step: {len(grads)} gradients for {len(params.tensors)} tensors")
    updated = []
    for i, (p, g) in enumerate(zip(params.tensors, grads)):
        if g is None:
            raise ContractError(f"sgd_step: missing gradient for parameter tensor {i}")
        g = np.asarray(g)
        if g.shape != p.shape:
            raise ContractError(f"sgd_step: gradient shape {g.shape} != parameter shape {p.shape}")
        updated.append(p - lr * g)
    return ModelParams(config=params.config, tensors=tuple(updated))


def serialize_params(params: ModelParams) -> bytes:
    """Little-endian binary encoding of config and parameter tensors."""
    cfg = params.config
    parts = [MODEL_MAGIC]
    parts.append(struct.pack("<IIQI", cfg.input_size, cfg.embedding_dim,
                             cfg.seed, len(cfg.conv_blocks)))
    for out_ch, k, pool in cfg.conv_blocks:
        parts.append(struct.pack("<III", out_ch, k, pool))
    parts.append(struct.pack("<I", len(params.tensors)))
    for t in params.tensors:
        parts.append(struct.pack("<I", t.ndim))
        parts.append(struct.pack(f"<{t.ndim}I", *t.shape))
        parts.append(t.astype("<f8").tobytes())
    return b"".join(parts)


def params_fingerprint(params: ModelParams) -> bytes:
    """32-byte hash binding galleries to the model that produced their embeddings."""
    return hashlib.sha256(serialize_params(params)).digest()


def save_params(params: ModelParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_params(params))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(f"model file truncated while reading {what}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def deserialize_params(blob: bytes) -> ModelParams:
    r = _Reader(blob)
    magic = r.take(4, "magic")
    if magic != MODEL_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MODEL_MAGIC!r}")
    input_size, embedding_dim, seed, n_blocks = r.unpack("<IIQI", "header")
    blocks = tuple(r.unpack("<III", f"conv block {i}") for i in range(n_blocks))
    config = EncoderConfig(input_size=input_size, conv_blocks=blocks,
                           embedding_dim=embedding_dim, seed=seed)
    try:
        spatial_trace(config)
    except ConfigError as e:
        raise FormatError(f"invalid stored config: {e}") from None

    (n_tensors,) = r.unpack("<I", "tensor count")
    tensors = []
    for i in range(n_tensors):
        (ndim,) = r.unpack("<I", f"tensor {i} rank")
        shape = r.unpack(f"<{ndim}I", f"tensor {i} shape")
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        raw = r.take(8 * count, f"tensor {i} data")
        tensors.append(np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
    if r.pos != len(blob):
        raise FormatError(f"{len(blob) - r.pos} trailing bytes after tensor data")

    params = ModelParams(config=config, tensors=tuple(tensors))
    _check_tensor_shapes(params)
    return params


def _check_tensor_shapes(params: ModelParams) -> None:
    cfg = params.config
    expected: list[tuple[str, tuple[int, ...]]] = []
    c_in = 1
    for out_ch, k, _pool in cfg.conv_blocks:
        expected.append(("conv kernels", (out_ch, c_in, k, k)))
        expected.append(("conv bias", (out_ch,)))
        c_in = out_ch
    expected.append(("dense weights", (cfg.embedding_dim, flat_features(cfg))))
    expected.append(("dense bias", (cfg.embedding_dim,)))
    if len(params.tensors) != len(expected):
        raise FormatError(f"expected {len(expected)} parameter tensors, found {len(params.tensors)}")
    for t, (name, shape) in zip(params.tensors, expected):
        if t.shape != shape:
            raise FormatError(
                f"{name} has shape {t.shape}, but embedding_dim/conv_blocks declare {shape}")


def load_params(path) -> ModelParams:
    with open(path, "rb") as fh:
        return deserialize_params(fh.read())
