"""Fully connected networks and checkpoint serialization.

An Mlp is a stack of affine layers with a hidden activation between them and
an optional output activation. Weights start Xavier-uniform (limit
sqrt(6 / (fan_in + fan_out))), biases at zero, drawn from a seeded generator
so construction is reproducible.

Checkpoints are a flat binary format:

    header   8 bytes magic "RCFGANCK", uint32 version, uint32 zero (16 bytes)
    record   uint32 name length, name utf-8, uint32 rank,
             uint64 * rank dims, float64 little-endian payload

Round-tripping is bit exact: float64 in, the same float64 out.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("tanh", "identity")

CHECKPOINT_MAGIC = b"RCFGANCK"
CHECKPOINT_VERSION = 1


@dataclass
class MlpSpec:
    """Architecture description: layer widths and activation choices."""

    layer_dims: list
    hidden_activation: str = "relu"
    output_activation: str = "tanh"
    init_seed: int = 0

    def __post_init__(self):
        dims = list(self.layer_dims)
        if len(dims) < 2:
            raise ValueError(f"layer_dims needs at least input and output, "
                             f"got {dims}")
        if any(int(d) < 1 for d in dims):
            raise ValueError(f"layer widths must be positive, got {dims}")
        self.layer_dims = [int(d) for d in dims]
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"hidden_activation must be one of "
                             f"{HIDDEN_ACTIVATIONS}, got {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output_activation must be one of "
                             f"{OUTPUT_ACTIVATIONS}, got {self.output_activation!r}")

    @property
    def num_params(self):
        dims = self.layer_dims
        return sum(dims[i] * dims[i + 1] + dims[i + 1]
                   for i in range(len(dims) - 1))


class Mlp:
    """Parameters plus forward pass for one fully connected network."""

    def __init__(self, spec):
        self.spec = spec
        rng = np.random.default_rng(spec.init_seed)
        self.weights = []
        self.biases = []
        dims = spec.layer_dims
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.weights.append(Tensor(w, requires_grad=True))
            self.biases.append(Tensor(np.zeros(fan_out), requires_grad=True))

    def forward(self, x):
        """Map a (batch, in_dim) tensor to (batch, out_dim)."""
        x = ad.as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.spec.layer_dims[0]:
            raise ad.ShapeError(
                f"forward expects (batch, {self.spec.layer_dims[0]}), "
                f"got {x.shape}")
        hidden = ad.relu if self.spec.hidden_activation == "relu" else ad.tanh
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = ad.bias_add(ad.matmul(x, w), b)
            if i < last:
                x = hidden(x)
        if self.spec.output_activation == "tanh":
            x = ad.tanh(x)
        return x

    def parameters(self):
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def state_dict(self):
        state = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            state[f"layers.{i}.weight"] = w.data
            state[f"layers.{i}.bias"] = b.data
        return state

    def load_state_dict(self, state):
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            for tensor, key in ((w, f"layers.{i}.weight"), (b, f"layers.{i}.bias")):
                if key not in state:
                    raise KeyError(f"checkpoint is missing {key}")
                arr = np.asarray(state[key], dtype=np.float64)
                if arr.shape != tensor.data.shape:
                    raise ValueError(f"{key}: shape {arr.shape} does not match "
                                     f"model shape {tensor.data.shape}")
                tensor.data = np.ascontiguousarray(arr)


def build_default_nets(data_dim, latent_dim, hidden=128,
                       generator_output="identity", seed=0):
    """Critic, generator, and t-net with the default desk-scale shapes.

    Critic maps data to the latent space through three hidden layers and a
    tanh output (its embedding must stay bounded). The generator mirrors it.
    The t-net is a three layer stack at the latent width used by the
    scale-mixture frequency sampler.
    """
    critic = Mlp(MlpSpec([data_dim, hidden, hidden, hidden, latent_dim],
                         hidden_activation="relu", output_activation="tanh",
                         init_seed=seed))
    generator = Mlp(MlpSpec([latent_dim, hidden, hidden, hidden, data_dim],
                            hidden_activation="relu",
                            output_activation=generator_output,
                            init_seed=seed + 1))
    tnet = Mlp(MlpSpec([latent_dim, latent_dim, latent_dim, latent_dim],
                       hidden_activation="relu", output_activation="identity",
                       init_seed=seed + 2))
    return critic, generator, tnet


# ---------------------------------------------------------------------------
# checkpoint io

class CheckpointError(ValueError):
    """Malformed checkpoint file."""


def save_tensors(path, named_arrays):
    """Write a name -> float64 array mapping to ``path``."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, 0))
        for name, arr in named_arrays.items():
            arr = np.asarray(arr, dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_tensors(path):
    """Read a checkpoint written by save_tensors. Bit-exact round trip."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version, _ = struct.unpack_from("<II", blob, 8)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    out = {}
    offset = 16
    total = len(blob)
    while offset < total:
        if offset + 4 > total:
            raise CheckpointError(f"{path}: truncated record header")
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if offset + name_len > total:
            raise CheckpointError(f"{path}: truncated tensor name")
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        if offset + 4 > total:
            raise CheckpointError(f"{path}: truncated rank for {name!r}")
        (rank,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if offset + 8 * rank > total:
            raise CheckpointError(f"{path}: truncated dims for {name!r}")
        dims = struct.unpack_from(f"<{rank}Q" if rank else "<", blob, offset)
        offset += 8 * rank
        count = 1
        for dim in dims:
            count *= dim
        nbytes = count * 8
        if offset + nbytes > total:
            raise CheckpointError(f"{path}: truncated payload for {name!r}")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        out[name] = arr.reshape(dims).astype(np.float64)
        offset += nbytes
    return out


def save_checkpoint(path, nets):
    """Serialize several named Mlps, e.g. {"critic": critic, ...}."""
    flat = {}
    for net_name, net in nets.items():
        for key, arr in net.state_dict().items():
            flat[f"{net_name}.{key}"] = arr
    save_tensors(path, flat)


def load_checkpoint(path, nets):
    """Restore Mlps serialized by save_checkpoint (in place)."""
    flat = load_tensors(path)
    for net_name, net in nets.items():
        prefix = f"{net_name}."
        state = {key[len(prefix):]: arr for key, arr in flat.items()
                 if key.startswith(prefix)}
        if not state:
            raise CheckpointError(f"{path}: no tensors for network {net_name!r}")
        net.load_state_dict(state)
