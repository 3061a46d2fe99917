"""Binary cache, CSV, and JSON artifact formats.

Kernel tables are cached as a fixed little-endian layout (magic, layout
version, d, t_max, then per-time float64 blocks).  CSV files carry a comment
header with the schema version, tool version, and config digest so
downstream consumers can validate provenance without re-reading the config.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .rw_kernel import KernelTable

SCHEMA_VERSION = 1
_MAGIC = b"PLKT"
_LAYOUT_VERSION = 1


def save_kernel_table(table: KernelTable, path) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _LAYOUT_VERSION, table.d, table.t_max))
        for t in range(table.t_max + 1):
            block = np.ascontiguousarray(table.slice(t), dtype="<f8")
            fh.write(block.tobytes())


def load_kernel_table(path) -> KernelTable:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ConfigError(f"{path}: not a kernel cache file")
        layout, d, t_max = struct.unpack("<III", fh.read(12))
        if layout != _LAYOUT_VERSION:
            raise ConfigError(
                f"{path}: layout version {layout} unsupported "
                f"(expected {_LAYOUT_VERSION})"
            )
        slices = []
        for t in range(t_max + 1):
            n = (2 * t + 1) ** d
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ConfigError(f"{path}: truncated block at t={t}")
            arr = np.frombuffer(buf, dtype="<f8").astype(np.float64)
            slices.append(arr.reshape((2 * t + 1,) * d))
    return KernelTable(d, t_max, slices)


def kernel_table_to_csv(table: KernelTable, path, digest: str = "") -> None:
    """Flat (t, z..., q) export for inspection; zeros are omitted."""
    with open(path, "w", newline="") as fh:
        fh.write(_header_comment(digest))
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"z{k}" for k in range(table.d)] + ["q"])
        for t in range(table.t_max + 1):
            s = table.slice(t)
            for idx in np.argwhere(s != 0.0):
                writer.writerow(
                    [t] + [int(i) - t for i in idx] + [repr(float(s[tuple(idx)]))]
                )


def _header_comment(digest: str) -> str:
    return (
        f"# polymer-lab schema={SCHEMA_VERSION} version={__version__} "
        f"digest={digest}\n"
    )


def write_csv(path, rows, digest: str = "") -> None:
    """Write dict rows with a provenance comment line before the header."""
    rows = list(rows)
    if not rows:
        raise ConfigError("write_csv needs at least one row")
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        fh.write(_header_comment(digest))
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_csv(path):
    """Read a CSV written by write_csv; returns (meta, rows)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# polymer-lab"):
            raise ConfigError(f"{path}: missing provenance header")
        meta = dict(
            kv.split("=", 1) for kv in first[1:].split() if "=" in kv
        )
        if int(meta.get("schema", -1)) != SCHEMA_VERSION:
            raise ConfigError(
                f"{path}: schema version {meta.get('schema')} unsupported"
            )
        rows = list(csv.DictReader(fh))
    return meta, rows


def write_json_summary(path, payload: dict, digest: str = "") -> None:
    out = {
        "schema": SCHEMA_VERSION,
        "tool_version": __version__,
        "config_digest": digest,
    }
    out.update(payload)
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    return str(obj)
