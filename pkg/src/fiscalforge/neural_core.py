"""Small feed-forward networks with hand-written backprop.

Two network flavours share one flat float64 parameter layout (weights
then biases, layer by layer): an allocation actor whose output head is
a normalized-exponential map onto the simplex, and a scalar critic with
a linear head. The flat layout doubles as the genome the evolutionary
refiner crosses over and mutates, so flatten/unflatten must round-trip
losslessly.

Hidden activations are tanh. Everything is float64 and pure: forward
and backward are functions of (params, input) only.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArtifactError, ContractError, NumericError, ShapeError

__all__ = [
    "MlpSpec",
    "ActorPolicy",
    "init_params",
    "forward_actor",
    "forward_critic",
    "backward",
    "flatten",
    "unflatten",
    "save_checkpoint",
    "load_checkpoint",
    "export_json",
]

SIMPLEX = "simplex"
LINEAR = "linear"

_CKPT_MAGIC = b"FFPK"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    output_head: str

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ContractError("input_dim and output_dim must be positive")
        if len(self.hidden_dims) < 1 or any(h < 1 for h in self.hidden_dims):
            raise ContractError("at least one positive hidden layer is required")
        if self.output_head not in (SIMPLEX, LINEAR):
            raise ContractError(f"unknown output head {self.output_head!r}")

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) per layer, input to output."""
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    def param_count(self) -> int:
        return sum(out * inp + out for out, inp in self.layer_shapes())


def init_params(spec: MlpSpec, seed: int) -> np.ndarray:
    """Uniform fan-balanced weight init, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    chunks = []
    for out, inp in spec.layer_shapes():
        limit = np.sqrt(6.0 / (inp + out))
        chunks.append(rng.uniform(-limit, limit, size=out * inp))
        chunks.append(np.zeros(out))
    return np.concatenate(chunks)


def unflatten(params: np.ndarray, spec: MlpSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    """Flat vector -> [(W, b)] views, read-only by convention."""
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1 or params.size != spec.param_count():
        raise ShapeError(
            f"parameter vector of length {params.size} does not match "
            f"spec count {spec.param_count()}"
        )
    layers = []
    pos = 0
    for out, inp in spec.layer_shapes():
        w = params[pos : pos + out * inp].reshape(out, inp)
        pos += out * inp
        b = params[pos : pos + out]
        pos += out
        layers.append((w, b))
    return layers


def flatten(layers: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Inverse of unflatten: concatenate W then b per layer."""
    chunks = []
    for w, b in layers:
        chunks.append(np.asarray(w, dtype=np.float64).ravel())
        chunks.append(np.asarray(b, dtype=np.float64).ravel())
    return np.concatenate(chunks)


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cached(params, spec, x):
    """Batched forward pass; returns (output, per-layer activation cache)."""
    layers = unflatten(params, spec)
    cache = []
    a = x
    for w, b in layers[:-1]:
        h = np.tanh(a @ w.T + b)
        cache.append((a, h))
        a = h
    w, b = layers[-1]
    logits = a @ w.T + b
    y = _softmax_rows(logits) if spec.output_head == SIMPLEX else logits
    cache.append((a, y))
    return y, cache


def forward_batch(params: np.ndarray, spec: MlpSpec, x: np.ndarray) -> np.ndarray:
    """Forward over a (batch, input_dim) matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ShapeError(f"expected input of shape (n, {spec.input_dim}), got {x.shape}")
    return _forward_cached(params, spec, x)[0]


def forward_actor(params: np.ndarray, spec: MlpSpec, state: np.ndarray) -> np.ndarray:
    """Simplex-head forward pass for one state; output sums to 1."""
    if spec.output_head != SIMPLEX:
        raise ContractError("forward_actor requires a simplex output head")
    y = forward_batch(params, spec, np.asarray(state, dtype=np.float64)[None, :])[0]
    if not np.all(np.isfinite(y)):
        raise NumericError("actor produced a non-finite allocation")
    return y


def forward_critic(
    params: np.ndarray, spec: MlpSpec, state: np.ndarray, action: np.ndarray
) -> float:
    """Linear-head scalar value of a (state, action) pair."""
    if spec.output_head != LINEAR or spec.output_dim != 1:
        raise ContractError("forward_critic requires a scalar linear head")
    x = np.concatenate([np.asarray(state, float), np.asarray(action, float)])[None, :]
    q = float(forward_batch(params, spec, x)[0, 0])
    if not np.isfinite(q):
        raise NumericError("critic produced a non-finite value")
    return q


def vjp_batch(
    params: np.ndarray, spec: MlpSpec, x: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vector-Jacobian product of the forward map over a batch.

    upstream is d(objective)/d(output), shape (batch, output_dim).
    Returns (flat parameter gradient, gradient w.r.t. the input rows).
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ShapeError(f"expected input of shape (n, {spec.input_dim}), got {x.shape}")
    if upstream.shape != (x.shape[0], spec.output_dim):
        raise ShapeError(
            f"upstream gradient shape {upstream.shape} does not match "
            f"({x.shape[0]}, {spec.output_dim})"
        )
    _, cache = _forward_cached(params, spec, x)
    layers = unflatten(params, spec)

    a_prev, y = cache[-1]
    if spec.output_head == SIMPLEX:
        # Through the normalized-exponential head: dz = y * (u - <u, y>).
        g = y * (upstream - (upstream * y).sum(axis=1, keepdims=True))
    else:
        g = upstream

    grads: list[tuple[np.ndarray, np.ndarray]] = []
    w_last, _ = layers[-1]
    grads.append((g.T @ a_prev, g.sum(axis=0)))
    g_prev = g @ w_last

    for idx in range(len(layers) - 2, -1, -1):
        a_in, h = cache[idx]
        g = g_prev * (1.0 - h * h)
        w, _ = layers[idx]
        grads.append((g.T @ a_in, g.sum(axis=0)))
        g_prev = g @ w

    grads.reverse()
    return flatten(grads), g_prev


def backward(
    params: np.ndarray, spec: MlpSpec, x: np.ndarray, upstream: np.ndarray
) -> np.ndarray:
    """Exact parameter gradient of the forward map for a single input."""
    x = np.asarray(x, dtype=np.float64)[None, :]
    upstream = np.asarray(upstream, dtype=np.float64)[None, :]
    return vjp_batch(params, spec, x, upstream)[0]


@dataclass(frozen=True)
class ActorPolicy:
    """A deployable allocation policy: spec plus flat parameters."""

    spec: MlpSpec
    params: np.ndarray

    def act(self, state: np.ndarray) -> np.ndarray:
        return forward_actor(self.params, self.spec, state)


# -- checkpoint persistence --------------------------------------------------

_HEAD_CODES = {LINEAR: 0, SIMPLEX: 1}
_HEAD_NAMES = {v: k for k, v in _HEAD_CODES.items()}


def save_checkpoint(path: str | Path, spec: MlpSpec, params: np.ndarray) -> None:
    """Binary little-endian checkpoint: dims header + flat float64 params."""
    params = np.asarray(params, dtype=np.float64)
    if params.size != spec.param_count():
        raise ShapeError("parameter vector does not match spec")
    header = struct.pack(
        f"<4sIBII{len(spec.hidden_dims)}IIQ",
        _CKPT_MAGIC,
        _CKPT_VERSION,
        _HEAD_CODES[spec.output_head],
        spec.input_dim,
        len(spec.hidden_dims),
        *spec.hidden_dims,
        spec.output_dim,
        params.size,
    )
    Path(path).write_bytes(header + params.astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[MlpSpec, np.ndarray]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ArtifactError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        magic, version, head, input_dim, n_hidden = struct.unpack_from("<4sIBII", blob)
        if magic != _CKPT_MAGIC:
            raise ArtifactError(f"{path}: not a parameter checkpoint")
        if version != _CKPT_VERSION:
            raise ArtifactError(f"{path}: unsupported checkpoint version {version}")
        offset = struct.calcsize("<4sIBII")
        hidden = struct.unpack_from(f"<{n_hidden}I", blob, offset)
        offset += 4 * n_hidden
        output_dim, count = struct.unpack_from("<IQ", blob, offset)
        offset += struct.calcsize("<IQ")
        params = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(
            np.float64
        )
        spec = MlpSpec(input_dim, hidden, output_dim, _HEAD_NAMES[head])
    except ArtifactError:
        raise
    except (struct.error, ValueError, KeyError, ContractError) as exc:
        raise ArtifactError(f"{path}: corrupt checkpoint ({exc})") from exc
    if params.size != spec.param_count() or offset + 8 * count != len(blob):
        raise ArtifactError(f"{path}: checkpoint payload does not match its header")
    return spec, params


def export_json(path: str | Path, spec: MlpSpec, params: np.ndarray) -> None:
    """Human-inspectable mirror of the binary checkpoint."""
    doc = {
        "input_dim": spec.input_dim,
        "hidden_dims": list(spec.hidden_dims),
        "output_dim": spec.output_dim,
        "output_head": spec.output_head,
        "params": [float(v) for v in np.asarray(params, dtype=np.float64)],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
