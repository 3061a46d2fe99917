"""Readers for the polymer-lab artifact formats.

The CSV contract: first line is a comment
``# polymer-lab schema=<int> version=<str> digest=<hex>`` followed by a
standard header row and data rows.  JSON summaries carry ``schema`` and
``config_digest`` keys.  Anything else is rejected.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

SCHEMA_VERSION = 1


class ArtifactError(Exception):
    """Malformed or incompatible input artifact."""


def read_csv(path):
    """Return (meta, rows) for a schema-tagged CSV; rows are string dicts."""
    path = Path(path)
    try:
        fh = open(path)
    except OSError as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    with fh:
        first = fh.readline()
        if not first.startswith("# polymer-lab"):
            raise ArtifactError(f"{path}: missing provenance header")
        meta = dict(kv.split("=", 1) for kv in first[1:].split() if "=" in kv)
        try:
            schema = int(meta.get("schema", "-1"))
        except ValueError:
            schema = -1
        if schema != SCHEMA_VERSION:
            raise ArtifactError(
                f"{path}: schema version {meta.get('schema')!r} unsupported "
                f"(expected {SCHEMA_VERSION})"
            )
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ArtifactError(f"{path}: no data rows")
    return meta, rows


def read_summary(path) -> dict:
    """Load and validate a JSON run summary."""
    path = Path(path)
    try:
        with open(path) as fh:
            js = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    if js.get("schema") != SCHEMA_VERSION:
        raise ArtifactError(
            f"{path}: schema version {js.get('schema')!r} unsupported"
        )
    if "config_digest" not in js:
        raise ArtifactError(f"{path}: missing config_digest")
    return js


def column(rows, name, cast=float):
    """Extract a typed column, raising on absent or blank-only columns."""
    if not rows:
        raise ArtifactError("no rows to extract from")
    if name not in rows[0]:
        raise ArtifactError(f"missing column {name!r}")
    out = []
    for row in rows:
        text = row[name]
        if text == "" or text is None:
            raise ArtifactError(f"blank value in column {name!r}")
        out.append(cast(text))
    return out
