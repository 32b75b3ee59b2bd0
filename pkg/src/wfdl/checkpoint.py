"""Self-describing checkpoint container.

Layout (all integers little-endian)::

    b"WFDL-CHECKPOINT 1\\n"
    <header: one line of JSON with sorted keys, terminated by b"\\n">
    <tensor payload: raw bytes of every tensor, concatenated>

The header holds the architecture, loss and optimizer settings, the seed, and
a ``tensors`` list of ``{name, dtype, shape, offset, nbytes}`` entries in
payload order: model parameters in network order, then the optimizer's first
moments (``optim.m.<name>``) and second moments (``optim.v.<name>``). Given
identical contents the file is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .loss import LossConfig
from .model import ArchConfig, AutoencoderParams
from .optim import RAdamHyper, RAdamState

MAGIC = b"WFDL-CHECKPOINT 1\n"


def save_checkpoint(path, params: AutoencoderParams, state: RAdamState | None = None,
                    loss: LossConfig | None = None, hyper: RAdamHyper | None = None,
                    seed: int = 0) -> None:
    named = list(params.tensors.items())
    if state is not None:
        named += [(f"optim.m.{k}", v) for k, v in state.m.items()]
        named += [(f"optim.v.{k}", v) for k, v in state.v.items()]
    entries, chunks, offset = [], [], 0
    for name, arr in named:
        arr = np.ascontiguousarray(arr)
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        entries.append({"name": name, "dtype": arr.dtype.str.replace(">", "<").replace("=", "<"),
                        "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    loss = loss or LossConfig()
    header = {
        "arch": params.config.to_dict(),
        "loss": {"kind": loss.kind, "weight_mode": loss.weight_mode,
                 "channel_reduction": loss.channel_reduction},
        "optimizer": None if hyper is None else {
            "learning_rate": hyper.learning_rate, "beta1": hyper.beta1, "beta2": hyper.beta2,
            "weight_decay": hyper.weight_decay, "epsilon": hyper.epsilon,
        },
        "optimizer_step": None if state is None else state.step,
        "seed": seed,
        "tensors": entries,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    Path(path).write_bytes(MAGIC + blob + b"".join(chunks))


def load_checkpoint(path) -> dict:
    """Read a checkpoint; returns a dict with ``params``, ``state``, ``loss``,
    ``hyper`` and ``seed``."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ValueError(f"{path} is not a checkpoint file")
    end = raw.index(b"\n", len(MAGIC))
    header = json.loads(raw[len(MAGIC):end])
    payload = memoryview(raw)[end + 1:]
    tensors = {}
    for e in header["tensors"]:
        buf = payload[e["offset"]:e["offset"] + e["nbytes"]]
        tensors[e["name"]] = np.frombuffer(buf, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    params = {k: v for k, v in tensors.items() if not k.startswith("optim.")}
    state = None
    if header["optimizer_step"] is not None:
        state = RAdamState(
            header["optimizer_step"],
            {k: tensors[f"optim.m.{k}"] for k in params},
            {k: tensors[f"optim.v.{k}"] for k in params},
        )
    return {
        "params": AutoencoderParams(ArchConfig.from_dict(header["arch"]), params),
        "state": state,
        "loss": LossConfig(**header["loss"]),
        "hyper": None if header["optimizer"] is None else RAdamHyper(**header["optimizer"]),
        "seed": header["seed"],
    }
