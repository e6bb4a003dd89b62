"""Binary model files.

Layout (little-endian)::

    b"LSDM"  u32 version  u32 kind  u32 ndims  u32 dims[ndims]  f64 params[...]

kind: 1 fixed, 2 noise, 3 noise+class. dims: fixed ``[d_z]``; noise
``[d_z, d_eps, hidden]``; noise+class appends ``[n_classes, d_eps_y, hidden_y]``.
Parameters follow ``DirectionModel.params()`` order, each array row-major.
A JSON sidecar (same stem, ``.json``) carries the run config and seed.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .models import ClassDirectionNet, DirectionModel, FixedDirection, NoiseDirectionNet

MAGIC = b"LSDM"
VERSION = 1
KIND_CODES = {"fixed": 1, "noise": 2, "noise+class": 3}


class ModelFormatError(ValueError):
    pass


def _dims(model: DirectionModel) -> list[int]:
    if model.kind == "fixed":
        return [model.z_part.dim]
    dims = list(model.z_part.dims)
    if model.y_part is not None:
        dims += list(model.y_part.dims)
    return dims


def to_bytes(model: DirectionModel) -> bytes:
    dims = _dims(model)
    head = MAGIC + struct.pack(f"<III{len(dims)}I", VERSION, KIND_CODES[model.kind], len(dims), *dims)
    body = np.concatenate([p.reshape(-1) for p in model.params()]).astype("<f8").tobytes()
    return head + body


def from_bytes(buf: bytes) -> DirectionModel:
    if buf[:4] != MAGIC:
        raise ModelFormatError("not an LSDM model file")
    try:
        version, code, ndims = struct.unpack_from("<III", buf, 4)
        if version != VERSION:
            raise ModelFormatError(f"unsupported model version {version}")
        dims = struct.unpack_from(f"<{ndims}I", buf, 16)
    except struct.error as exc:
        raise ModelFormatError(f"truncated header: {exc}") from None
    kinds = {v: k for k, v in KIND_CODES.items()}
    if code not in kinds:
        raise ModelFormatError(f"unknown model kind code {code}")
    kind = kinds[code]
    values = np.frombuffer(buf, dtype="<f8", offset=16 + 4 * ndims).astype(np.float64)

    if kind == "fixed":
        if ndims != 1:
            raise ModelFormatError("fixed model needs one dim")
        model = DirectionModel(kind, FixedDirection(np.zeros(dims[0]) + 1.0, normalize=False))
    else:
        if ndims != (3 if kind == "noise" else 6):
            raise ModelFormatError(f"bad dim count {ndims} for kind {kind}")
        z_net = NoiseDirectionNet(dims[0], dims[1], dims[2])
        y_net = ClassDirectionNet(dims[3], dims[4], dims[5]) if kind == "noise+class" else None
        model = DirectionModel(kind, z_net, y_net)
    shapes = [p.shape for p in model.params()]
    need = sum(int(np.prod(s)) for s in shapes)
    if values.size != need:
        raise ModelFormatError(f"expected {need} parameters, found {values.size}")
    out, at = [], 0
    for s in shapes:
        k = int(np.prod(s))
        out.append(values[at: at + k].reshape(s).copy())
        at += k
    model.set_params(out)
    if kind == "fixed":
        # stored theta is already unit norm; keep renormalising on future steps
        model.z_part.normalize = True
    return model


def save_model(path, model: DirectionModel, config: dict | None = None) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(model))
    side = {"kind": model.kind, "dims": _dims(model), "format_version": VERSION}
    if config is not None:
        side["config"] = config
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path


def load_model(path) -> DirectionModel:
    return from_bytes(Path(path).read_bytes())
