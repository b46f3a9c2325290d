"""Deterministic model and result serialization.

All artifacts are written atomically (temp file + rename) and are
byte-identical across reruns with the same inputs: JSON floats use 17
significant digits with sorted keys, CSV floats use shortest round-trip
``repr``, line endings are LF, and every CSV carries a provenance footer
(model hash, seed, package version).
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .models import AlRnn, PiecewiseModel, ShallowPlrnn, StandardPlrnn
from .planar import Map2D

__all__ = [
    "PACKAGE_VERSION",
    "atomic_write",
    "dumps_json17",
    "save_model",
    "load_model",
    "model_from_dict",
    "model_sha256",
    "write_csv",
    "provenance_footer",
]

PACKAGE_VERSION = "0.1.0"


def atomic_write(path: str | Path, data: str | bytes) -> None:
    """Write a file via temp-and-rename so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _json_fragment(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x!r}")
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(
            pad_in + _json_fragment(v, indent, level + 1) for v in obj
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            if not isinstance(k, str):
                raise ValueError(f"JSON object keys must be strings, got {k!r}")
            items.append(
                pad_in + json.dumps(k) + ": " + _json_fragment(obj[k], indent, level + 1)
            )
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise ValueError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_json17(obj, *, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats and sorted keys."""
    return _json_fragment(obj, indent, 0) + "\n"


def model_from_dict(d: dict) -> PiecewiseModel:
    """Build any model variant from its JSON dictionary."""
    if not isinstance(d, dict):
        raise ValueError(f"model document must be an object, got {type(d).__name__}")
    variant = d.get("variant")
    try:
        if variant == "standard":
            return StandardPlrnn(
                A=np.asarray(d["A"], dtype=float),
                W=np.asarray(d["W"], dtype=float),
                h1=np.asarray(d["h1"], dtype=float),
            )
        if variant == "shallow":
            return ShallowPlrnn(
                A=np.asarray(d["A"], dtype=float),
                W1=np.asarray(d["W1"], dtype=float),
                W2=np.asarray(d["W2"], dtype=float),
                h1=np.asarray(d["h1"], dtype=float),
                h2=np.asarray(d["h2"], dtype=float),
            )
        if variant == "almost-linear":
            return AlRnn(
                A=np.asarray(d["A"], dtype=float),
                W=np.asarray(d["W"], dtype=float),
                h1=np.asarray(d["h1"], dtype=float),
                P=int(d["P"]),
            )
        if variant == "general-2d":
            return Map2D(
                a_l=float(d["a_l"]), a_r=float(d["a_r"]),
                b_l=float(d["b_l"]), b_r=float(d["b_r"]),
                c=float(d["c"]), d=float(d["d"]),
                h1=float(d["h1"]), h2=float(d["h2"]),
            )
    except KeyError as exc:
        raise ValueError(f"model document is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid model document: {exc}") from exc
    raise ValueError(
        f"unknown model variant {variant!r}; expected one of "
        f"'standard', 'shallow', 'almost-linear', 'general-2d'"
    )


def load_model(path: str | Path) -> PiecewiseModel:
    """Read a model JSON file; raises ValueError on malformed input."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read model file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def save_model(model: PiecewiseModel, path: str | Path) -> None:
    atomic_write(path, dumps_json17(model.as_dict()))


def model_sha256(model: PiecewiseModel) -> str:
    """Content hash of the model's canonical JSON form."""
    return hashlib.sha256(
        dumps_json17(model.as_dict()).encode("utf-8")
    ).hexdigest()


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    *,
    footer: Sequence[str] = (),
) -> None:
    """Write a CSV with LF endings, a header row and '#'-prefixed footer."""
    lines = [",".join(_csv_cell(h) for h in header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    for note in footer:
        lines.append(f"# {note}")
    atomic_write(path, "\n".join(lines) + "\n")


def provenance_footer(
    model: PiecewiseModel, seed: int | None = None, **extra
) -> list[str]:
    """Standard footer: model hash, seed and package version, plus extras."""
    out = [f"model sha256: {model_sha256(model)}"]
    out.append(f"seed: {seed if seed is not None else 'none'}")
    out.append(f"version: {PACKAGE_VERSION}")
    for k in sorted(extra):
        out.append(f"{k}: {extra[k]}")
    return out
