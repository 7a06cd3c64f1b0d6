"""Binary container for fitted translators.

Layout (all integers little-endian):

    bytes 0..7    magic ``LINUDT01`` (last two bytes are the format version)
    bytes 8..11   uint32 length of the UTF-8 JSON header
    header        JSON: shapes, rank, mode, flags, config snapshot, and an
                  array manifest of {name, shape, dtype, offset, nbytes, crc32}
    arrays        raw ``<f4`` blobs, concatenated in manifest order; offsets
                  are relative to the start of this region and tile it exactly

The header is serialized with sorted keys and no whitespace, so saving the
same translator twice yields byte-identical files. Writes go through a
temp file and an atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from pathlib import Path
from typing import Any

import numpy as np

from .align import ORTHOGONAL, LatentMap
from .dataset import ImageShape
from .errors import ModelFormatError
from .pca import PcaBasis
from .translator import Translator, stored_orthogonality_tolerance

MAGIC = b"LINUDT01"
_HEADER_LEN = struct.Struct("<I")


def _array_payloads(translator: Translator) -> list[tuple[str, np.ndarray]]:
    return [
        ("mean_a", translator.basis_a.mean),
        ("components_a", translator.basis_a.components),
        ("eigenvalues_a", translator.basis_a.eigenvalues),
        ("mean_b", translator.basis_b.mean),
        ("components_b", translator.basis_b.components),
        ("eigenvalues_b", translator.basis_b.eigenvalues),
        ("map", translator.map.matrix),
    ]


def _shape_dict(shape: ImageShape) -> dict[str, int]:
    return {"height": shape.height, "width": shape.width, "channels": shape.channels}


def save(translator: Translator, path: str | Path) -> None:
    """Write a translator to disk; identical translators yield identical bytes."""
    path = Path(path)
    manifest = []
    blobs = []
    offset = 0
    for name, array in _array_payloads(translator):
        blob = np.ascontiguousarray(array, dtype="<f4").tobytes()
        manifest.append({
            "name": name,
            "shape": list(array.shape),
            "dtype": "<f4",
            "offset": offset,
            "nbytes": len(blob),
            "crc32": zlib.crc32(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    header = {
        "created": translator.created,
        "mode": translator.map.mode,
        "rank": translator.rank,
        "iterations_run": translator.map.iterations_run,
        "buddy_counts": list(translator.map.buddy_counts),
        "shape_a": _shape_dict(translator.basis_a.shape),
        "shape_b": _shape_dict(translator.basis_b.shape),
        "skew_aligned_a": translator.basis_a.skew_aligned,
        "skew_aligned_b": translator.basis_b.skew_aligned,
        "total_variance_a": translator.basis_a.total_variance,
        "total_variance_b": translator.basis_b.total_variance,
        "config": translator.config_snapshot,
        "arrays": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(_HEADER_LEN.pack(len(header_bytes)))
            fh.write(header_bytes)
            for blob in blobs:
                fh.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ModelFormatError(f"truncated model file: expected {n} bytes of {what}")
    return data


def load(path: str | Path) -> Translator:
    """Read a translator back, verifying checksums and structural invariants."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = _read_exact(fh, len(MAGIC), "magic")
        if magic[:6] != MAGIC[:6]:
            raise ModelFormatError(f"bad magic {magic!r}: not a model file")
        if magic != MAGIC:
            raise ModelFormatError(
                f"format version {magic[6:].decode('ascii', 'replace')} is not supported"
            )
        (header_len,) = _HEADER_LEN.unpack(_read_exact(fh, 4, "header length"))
        try:
            header = json.loads(_read_exact(fh, header_len, "header").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"unreadable header: {exc}") from exc
        arrays_region = fh.read()

    manifest = header.get("arrays")
    if not isinstance(manifest, list) or not manifest:
        raise ModelFormatError("header carries no array manifest")
    expected = 0
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest:
        if entry["offset"] != expected:
            raise ModelFormatError(
                f"array {entry['name']!r} at offset {entry['offset']}, expected {expected}"
            )
        expected += entry["nbytes"]
        if entry["dtype"] != "<f4":
            raise ModelFormatError(f"unsupported dtype {entry['dtype']!r}")
        blob = arrays_region[entry["offset"]:entry["offset"] + entry["nbytes"]]
        if len(blob) != entry["nbytes"]:
            raise ModelFormatError(f"truncated model file: array {entry['name']!r} is short")
        if zlib.crc32(blob) != entry["crc32"]:
            raise ModelFormatError(f"checksum mismatch on array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(blob, dtype="<f4").reshape(entry["shape"]).copy()
    if expected != len(arrays_region):
        raise ModelFormatError(
            f"arrays region holds {len(arrays_region)} bytes, manifest covers {expected}"
        )

    try:
        basis_a = _basis_from(header, arrays, "a")
        basis_b = _basis_from(header, arrays, "b")
        lmap = LatentMap(
            arrays["map"],
            header["mode"],
            iterations_run=int(header.get("iterations_run", 1)),
            buddy_counts=tuple(int(c) for c in header.get("buddy_counts", [])),
        )
        translator = Translator(
            basis_a=basis_a,
            basis_b=basis_b,
            map=lmap,
            created=header["created"],
            config_snapshot=header.get("config", {}),
        )
    except ModelFormatError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelFormatError(f"model file violates a structural invariant: {exc}") from exc

    if translator.rank != header["rank"]:
        raise ModelFormatError(
            f"declared rank {header['rank']} does not match arrays ({translator.rank})"
        )
    _validate_loaded(translator)
    return translator


def _basis_from(header: dict[str, Any], arrays: dict[str, np.ndarray], side: str) -> PcaBasis:
    shape = header[f"shape_{side}"]
    return PcaBasis(
        mean=arrays[f"mean_{side}"],
        components=arrays[f"components_{side}"],
        eigenvalues=np.maximum(arrays[f"eigenvalues_{side}"], 0.0),
        shape=ImageShape(shape["height"], shape["width"], shape["channels"]),
        total_variance=float(header[f"total_variance_{side}"]),
        skew_aligned=bool(header[f"skew_aligned_{side}"]),
    )


def _validate_loaded(translator: Translator) -> None:
    """Corruption defense: stored matrices must still look like what they claim."""
    tol = stored_orthogonality_tolerance(translator.rank)
    for side, basis in (("a", translator.basis_a), ("b", translator.basis_b)):
        err = basis.orthonormality_error()
        if err > tol:
            raise ModelFormatError(
                f"components_{side} lost orthonormality (error {err:.3e} > {tol:.3e})"
            )
    if translator.map.mode == ORTHOGONAL:
        err = translator.map.orthogonality_error()
        if err > tol:
            raise ModelFormatError(
                f"orthogonal map fails validation (error {err:.3e} > {tol:.3e})"
            )
