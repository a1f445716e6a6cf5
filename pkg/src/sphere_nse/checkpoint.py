"""Checkpoint files: a JSON document with a header and base64 payloads.

Layout::

    {"header": {"version", "kernel", "eps", "N", "nu", "omega", "tau",
                "scheme", "t", "t0", "step", "seed", "T"},
     "config": {...resolved run config...},
     "alpha": "<base64 little-endian float64, 2N values>",
     "points": "<base64 little-endian float64, N x 3 values>"}

Points are stored so a resumed run rebuilds bitwise-identical operators.
"""

import base64
import json
import os

import numpy as np

from .errors import FormatError

CHECKPOINT_VERSION = 1
HEADER_KEYS = ("version", "kernel", "eps", "N", "nu", "omega", "tau", "scheme",
               "t", "t0", "step", "seed", "T")


def _encode(a):
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(s, shape):
    try:
        a = np.frombuffer(base64.b64decode(s, validate=True), dtype="<f8")
    except (ValueError, TypeError) as exc:
        raise FormatError(f"bad checkpoint payload: {exc}") from None
    if a.size != int(np.prod(shape)):
        raise FormatError(f"payload has {a.size} values, expected {int(np.prod(shape))}")
    return a.astype(float).reshape(shape)


def write_checkpoint(path, state, config):
    """Write ``state`` (a :class:`SolverState`) with its :class:`RunConfig`.

    The file is written to a temporary name first and then renamed.
    """
    zk = state.ops.zonal
    header = {
        "version": CHECKPOINT_VERSION,
        "kernel": config.data["kernel"],
        "eps": float(zk.eps),
        "N": len(state.ops.ps),
        "nu": config.nu,
        "omega": config.omega,
        "tau": config.tau,
        "scheme": config.data["scheme"],
        "t": float(state.t),
        "t0": float(state.t0),
        "step": int(state.step),
        "seed": config.seed,
        "T": config.T,
    }
    doc = {
        "header": header,
        "config": config.to_dict(),
        "alpha": _encode(state.alpha),
        "points": _encode(state.ops.ps.points),
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)
    return path


def read_checkpoint(path):
    """Return ``(header, config_mapping, alpha, points)``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a checkpoint ({exc})") from None
    if not isinstance(doc, dict) or not {"header", "config", "alpha", "points"} <= doc.keys():
        raise FormatError(f"{path}: missing checkpoint sections")
    header = doc["header"]
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"{path}: header lacks {missing}")
    if header["version"] != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {header['version']}")
    n = int(header["N"])
    return header, doc["config"], _decode(doc["alpha"], (2 * n,)), _decode(doc["points"], (n, 3))
