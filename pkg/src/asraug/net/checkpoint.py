"""Self-describing checkpoint container.

Layout: magic "ACKPT001", a u64 length-prefixed JSON header (format
version, model config, charset, scalar optimizer state, RNG provenance,
tensor directory), then the tensors as little-endian float32 in header
order. Byte output is a pure function of the contents, so identical
runs produce identical checkpoint files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import CorruptFile, ShapeMismatch
from ..text import Charset
from .network import ModelConfig, param_shapes
from .novograd import OptimizerState

MAGIC = b"ACKPT001"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model_config: ModelConfig
    charset: Charset
    params: dict
    opt_state: OptimizerState = field(default_factory=OptimizerState)
    rng_info: dict = field(default_factory=dict)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    tensors = []
    arrays = []
    for name in sorted(ckpt.params):
        arr = np.ascontiguousarray(ckpt.params[name], dtype="<f4")
        tensors.append({"kind": "param", "name": name, "shape": list(arr.shape)})
        arrays.append(arr)
    for name in sorted(ckpt.opt_state.m):
        arr = np.ascontiguousarray(ckpt.opt_state.m[name], dtype="<f4")
        tensors.append({"kind": "opt_m", "name": name, "shape": list(arr.shape)})
        arrays.append(arr)
    meta = {
        "format_version": FORMAT_VERSION,
        "model_config": asdict(ckpt.model_config),
        "charset": "".join(ckpt.charset.chars),
        "optimizer": {"step": ckpt.opt_state.step,
                      "v": {k: float(v)
                            for k, v in sorted(ckpt.opt_state.v.items())}},
        "rng": ckpt.rng_info,
        "tensors": tensors,
    }
    header = json.dumps(meta, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for arr in arrays:
            fh.write(arr.tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise CorruptFile("bad checkpoint magic %r" % data[:8])
    (header_len,) = struct.unpack("<Q", data[8:16])
    try:
        meta = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile("unreadable checkpoint header: %s" % exc) from exc
    if meta.get("format_version") != FORMAT_VERSION:
        raise CorruptFile("unsupported checkpoint format version %r"
                          % meta.get("format_version"))

    raw = dict(meta["model_config"])
    for key in ("block_channels", "block_kernels", "epilogue_channels"):
        raw[key] = tuple(raw[key])
    cfg = ModelConfig(**raw).validate()
    charset = Charset(meta["charset"])
    expected = param_shapes(cfg, len(charset))

    params: dict = {}
    opt = OptimizerState(step=int(meta["optimizer"]["step"]),
                         v={k: float(v)
                            for k, v in meta["optimizer"]["v"].items()})
    offset = 16 + header_len
    for entry in meta["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(data):
            raise CorruptFile("checkpoint truncated in tensor %r" % entry["name"])
        arr = np.frombuffer(data[offset:end], dtype="<f4").reshape(shape)
        offset = end
        if entry["kind"] == "param":
            name = entry["name"]
            if name not in expected:
                raise ShapeMismatch("unexpected parameter %r in checkpoint" % name)
            if shape != expected[name]:
                raise ShapeMismatch("parameter %r has shape %s, expected %s"
                                    % (name, shape, expected[name]))
            params[name] = arr.astype(np.float64)
        elif entry["kind"] == "opt_m":
            opt.m[entry["name"]] = arr.astype(np.float64)
        else:
            raise CorruptFile("unknown tensor kind %r" % entry["kind"])
    missing = set(expected) - set(params)
    if missing:
        raise ShapeMismatch("checkpoint is missing parameters: %s"
                            % sorted(missing))
    return Checkpoint(model_config=cfg, charset=charset, params=params,
                      opt_state=opt, rng_info=meta.get("rng", {}))
