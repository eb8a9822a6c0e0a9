"""Versioned binary model files.

Layout, all integers little-endian::

    magic        8 bytes  b"GATEMDL\\0"
    version      uint32
    header_len   uint32
    header       JSON (utf-8)
    masks        R blocks of V*V uint8, row-major
    arrays       float64 '<f8', row-major, in header order
    checksum     32 bytes, SHA-256 of everything above

A JSON sidecar ``<path>.json`` mirrors the header for inspection; loading
never reads it.
"""

import hashlib
import json
import struct

import numpy as np

from .core import Architecture
from .exceptions import ModelFileError
from .gate import GATE
from .graphs import NeighborhoodMap
from .regate import ReGATE

__all__ = ["FORMAT_VERSION", "save_model", "load_model", "model_bytes"]

MAGIC = b"GATEMDL\0"
FORMAT_VERSION = 1
_DIGEST = 32


def _header(model):
    arch = model.arch_
    names = sorted(model.params_)
    return {
        "format_version": FORMAT_VERSION,
        "byte_order": "little",
        "estimator": type(model).__name__,
        "supervised": isinstance(model, ReGATE),
        "V": arch.n_nodes,
        "K": arch.n_components,
        "R": arch.n_factors,
        "M": arch.n_layers,
        "k_nn": [nb.k for nb in model.neighborhoods_],
        "neighbors": [[list(n) for n in nb.neighbors] for nb in model.neighborhoods_],
        "hidden": arch.hidden,
        "dense_hidden": arch.dense_hidden,
        "decoder_variant": arch.decoder,
        "activations": list(arch.activations),
        "positive_gcn_weights": arch.positive_gcn_weights,
        "n_masks": len(arch.masks),
        "params": _json_params(model.get_params()),
        "arrays": [{"name": n, "shape": list(model.params_[n].shape)} for n in names]
        + [{"name": "__distance__", "shape": list(model.distance_.shape)}],
        "loss_curve": [float(x) for x in model.loss_curve_],
        "n_epochs_run": int(model.n_epochs_),
    }


def _json_params(params):
    out = {}
    for k, v in params.items():
        if isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, np.integer):
            v = int(v)
        elif isinstance(v, np.floating):
            v = float(v)
        out[k] = v
    return out


def model_bytes(model):
    """The exact bytes :func:`save_model` writes for ``model``."""
    header = _header(model)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(blob)), blob]
    for mask in model.arch_.masks:
        parts.append(np.ascontiguousarray(mask, dtype=np.uint8).tobytes())
    for spec in header["arrays"]:
        arr = model.distance_ if spec["name"] == "__distance__" else model.params_[spec["name"]]
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest(), header


def save_model(model, path):
    """Write ``model`` to ``path`` plus a ``path + '.json'`` header sidecar."""
    if not hasattr(model, "params_"):
        raise ModelFileError("cannot save an unfitted model")
    data, header = model_bytes(model)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
        with open(f"{path}.json", "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ModelFileError(f"cannot write model to {path}: {exc}") from exc


def load_model(path):
    """Read a model written by :func:`save_model`; returns a fitted estimator."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read model {path}: {exc}") from exc
    if len(data) < len(MAGIC) + 8 + _DIGEST or data[:len(MAGIC)] != MAGIC:
        raise ModelFileError(f"{path} is not a model file")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelFileError(f"{path}: checksum mismatch (truncated or corrupted)")
    version, header_len = struct.unpack_from("<II", body, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    offset = len(MAGIC) + 8
    header = json.loads(body[offset:offset + header_len].decode("utf-8"))
    offset += header_len

    V = header["V"]
    masks = []
    for _ in range(header["n_masks"]):
        chunk = body[offset:offset + V * V]
        masks.append(np.frombuffer(chunk, dtype=np.uint8).reshape(V, V).astype(bool))
        offset += V * V
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        n_bytes = 8 * int(np.prod(shape))
        arr = np.frombuffer(body[offset:offset + n_bytes], dtype="<f8").reshape(shape)
        arrays[spec["name"]] = arr.astype(np.float64)
        offset += n_bytes
    if offset != len(body):
        raise ModelFileError(f"{path}: payload length does not match header")

    params = dict(header["params"])
    if isinstance(params.get("activations"), list):
        params["activations"] = tuple(params["activations"])
    if isinstance(params.get("n_neighbors"), list):
        params["n_neighbors"] = tuple(params["n_neighbors"])
    cls = ReGATE if header["supervised"] else GATE
    model = cls(**params)
    model.distance_ = arrays.pop("__distance__")
    model.params_ = arrays
    model.n_nodes_ = V
    model.n_features_in_ = V * (V - 1) // 2
    model.neighborhoods_ = [
        NeighborhoodMap(tuple(tuple(n) for n in nbrs), k)
        for nbrs, k in zip(header["neighbors"], header["k_nn"])]
    model.arch_ = Architecture(
        n_nodes=V, n_components=header["K"], n_factors=header["R"],
        n_layers=header["M"], hidden=header["hidden"],
        activations=tuple(header["activations"]), decoder=header["decoder_variant"],
        dense_hidden=header["dense_hidden"],
        positive_gcn_weights=header["positive_gcn_weights"], masks=tuple(masks))
    model.loss_curve_ = list(header["loss_curve"])
    model.n_epochs_ = header["n_epochs_run"]
    return model

