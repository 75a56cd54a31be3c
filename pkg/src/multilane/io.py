"""Delimited output schemas and run manifests.

Every CSV starts with one comment line carrying the schema tag, the config
hash, and the seed, followed by a mandatory header row.  Float cells use
shortest round-trip formatting, so identical configurations produce
byte-identical bodies.  The manifest JSON (written next to each output)
carries the resolved configuration and timing; it is the only place a
timestamp appears.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .errors import IoError, SchemaMismatch

SCHEMAS = {
    "density.v1": ["t", "x", "lane", "rho"],
    "lanes.v1": ["t", "x", "lane", "rho", "R"],
    "field.v1": ["t", "x", "u"],
    "flux.v1": ["rho", "G", "Gprime_left", "Gprime_right", "Gpp"],
    "phase.v1": ["d", "r", "region", "inflexions", "sign_change"],
    "phase_curves.v1": ["d", "r_tilde1", "r_bar1", "r3", "r4"],
    "riemann.v1": ["v", "u_minus", "u_plus"],
    "manylane.v1": ["n", "sup_distance"],
}


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, schema: str, rows, meta: dict) -> None:
    """Write rows (iterable of tuples) under a registered schema."""
    if schema not in SCHEMAS:
        raise SchemaMismatch(f"unknown schema {schema!r}", schema=schema)
    header = SCHEMAS[schema]
    path = Path(path)
    try:
        with path.open("w") as fh:
            fh.write(f"# schema={schema} config={meta.get('config_hash', '')} "
                     f"seed={meta.get('seed', '')}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                if len(row) != len(header):
                    raise SchemaMismatch(
                        f"row width {len(row)} does not match schema {schema!r}",
                        schema=schema,
                    )
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}", path=str(path))


def read_csv(path) -> tuple[dict, dict]:
    """Read a schema-tagged CSV; returns (meta, columns).

    Columns parse to float arrays when possible and stay string arrays
    otherwise.  Raises SchemaMismatch on unknown or missing schema tags.
    """
    path = Path(path)
    try:
        raw = path.read_text().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}", path=str(path))
    if not raw or not raw[0].startswith("#"):
        raise SchemaMismatch("missing schema comment line", path=str(path))
    meta = {}
    for tok in raw[0].lstrip("# ").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            meta[k] = v
    schema = meta.get("schema")
    if schema not in SCHEMAS:
        raise SchemaMismatch(f"unknown schema {schema!r}", schema=schema)
    header = raw[1].split(",")
    if header != SCHEMAS[schema]:
        raise SchemaMismatch("header does not match schema", schema=schema,
                             header=header)
    body = [line.split(",") for line in raw[2:] if line]
    cols: dict = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in body]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return meta, cols


def require_columns(cols: dict, names: list[str], path="") -> None:
    for name in names:
        if name not in cols:
            raise SchemaMismatch(f"missing column {name!r}", column=name, path=str(path))


def write_manifest(out_path, command: str, config: dict, seed, schema: str,
                   wall_time_s: float) -> Path:
    from . import __version__

    payload = {
        "schema": schema,
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "wall_time_s": wall_time_s,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    path = Path(str(out_path) + ".manifest.json")
    try:
        path.write_text(json.dumps(payload, indent=2, default=str) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}", path=str(path))
    return path
