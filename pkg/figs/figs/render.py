"""Renderers for the four figure kinds.

A figure spec is a JSON document:

    {"kind": "phase_diagram" | "flux_family" | "second_derivative_zoom"
             | "manylane_convergence",
     "inputs": {...},            # CSV paths, kind-specific
     "out": "figure.png",
     "axes": {"x": [lo, hi], "y": [lo, hi]},   # optional
     "labels": [...]}                          # optional, flux families

Rendering is a pure function of the input CSVs; rerunning a spec reproduces
the same plot payload.  Unknown or mismatched schema versions fail loudly.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# Supported schema versions; anything else is a hard error.
EXPECTED_SCHEMAS = {
    "phase_diagram": {"grid": "phase.v1", "curves": "phase_curves.v1"},
    "flux_family": {"fluxes": "flux.v1"},
    "second_derivative_zoom": {"fluxes": "flux.v1"},
    "manylane_convergence": {"study": "manylane.v1"},
}

# region shading: concave white, one inflexion yellow, two pink
REGION_COLORS = {0: "#ffffff", 1: "#f5e26b", 2: "#f4b8c8"}


class SchemaError(RuntimeError):
    pass


def load_csv(path, expect_schema: str):
    """Schema-tagged CSV reader; returns (meta, columns)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError(f"{path}: missing schema comment line")
    meta = {}
    for tok in lines[0].lstrip("# ").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            meta[k] = v
    if meta.get("schema") != expect_schema:
        raise SchemaError(
            f"{path}: schema {meta.get('schema')!r} does not match expected {expect_schema!r}"
        )
    header = lines[1].split(",")
    body = [ln.split(",") for ln in lines[2:] if ln]
    cols = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in body]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return meta, cols


def _require(cols, names, path):
    for name in names:
        if name not in cols:
            raise SchemaError(f"{path}: missing column {name!r}")


def _apply_axes(ax, spec):
    axes = spec.get("axes") or {}
    if "x" in axes:
        ax.set_xlim(axes["x"])
    if "y" in axes:
        ax.set_ylim(axes["y"])


def render_phase_diagram(spec) -> plt.Figure:
    grid_path = spec["inputs"]["grid"]
    curves_path = spec["inputs"]["curves"]
    _, cols = load_csv(grid_path, "phase.v1")
    _require(cols, ["d", "r", "inflexions"], grid_path)
    _, cur = load_csv(curves_path, "phase_curves.v1")
    _require(cur, ["d", "r_tilde1"], curves_path)

    ds = np.unique(cols["d"])
    rs = np.unique(cols["r"])
    counts = np.full((rs.size, ds.size), np.nan)
    di = np.searchsorted(ds, cols["d"])
    ri = np.searchsorted(rs, cols["r"])
    counts[ri, di] = cols["inflexions"]

    fig, ax = plt.subplots(figsize=(8, 5))
    cmap = matplotlib.colors.ListedColormap([REGION_COLORS[k] for k in (0, 1, 2)])
    ax.pcolormesh(ds, rs, counts, cmap=cmap, vmin=-0.5, vmax=2.5, shading="nearest")
    for name, style in (("r_bar1", "b-"), ("r3", "g-"), ("r4", "g--"), ("r_tilde1", "k:")):
        if name in cur:
            mask = np.isfinite(cur[name])
            if mask.any():
                ax.plot(cur["d"][mask], cur[name][mask], style, lw=1.2, label=name)
    ax.set_xlim(ds.min(), ds.max())
    ax.set_ylim(rs.min(), rs.max())
    ax.set_xlabel("d")
    ax.set_ylabel("r")
    ax.set_title("inflexion count: white 0, yellow 1, pink 2")
    ax.legend(loc="upper right", fontsize=8)
    _apply_axes(ax, spec)
    return fig


def _load_flux_list(spec):
    paths = spec["inputs"]["fluxes"]
    if isinstance(paths, str):
        paths = [paths]
    labels = spec.get("labels") or [Path(p).stem for p in paths]
    out = []
    for path, label in zip(paths, labels):
        _, cols = load_csv(path, "flux.v1")
        _require(cols, ["rho", "G", "Gpp"], path)
        out.append((label, cols))
    return out


def render_flux_family(spec) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(8, 5))
    for label, cols in _load_flux_list(spec):
        ax.plot(cols["rho"], cols["G"], lw=1.1, label=label)
    ax.set_xlim(0.0, 2.0)
    ax.set_xlabel("rho")
    ax.set_ylabel("G")
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.legend(fontsize=8)
    _apply_axes(ax, spec)
    return fig


def render_second_derivative_zoom(spec) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(8, 5))
    for label, cols in _load_flux_list(spec):
        mask = np.isfinite(cols["Gpp"])
        ax.plot(cols["rho"][mask], cols["Gpp"][mask], lw=1.0, label=label)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("rho")
    ax.set_ylabel("G''")
    ax.legend(fontsize=8)
    _apply_axes(ax, spec)
    return fig


def render_manylane_convergence(spec) -> plt.Figure:
    path = spec["inputs"]["study"]
    _, cols = load_csv(path, "manylane.v1")
    _require(cols, ["n", "sup_distance"], path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(cols["n"], cols["sup_distance"], "o-")
    ax.set_xlabel("lanes n")
    ax.set_ylabel("sup distance to limit profile")
    _apply_axes(ax, spec)
    return fig


_RENDERERS = {
    "phase_diagram": render_phase_diagram,
    "flux_family": render_flux_family,
    "second_derivative_zoom": render_second_derivative_zoom,
    "manylane_convergence": render_manylane_convergence,
}


def render(spec) -> dict:
    """Render one figure spec (dict or JSON path); returns plot metadata."""
    if not isinstance(spec, dict):
        spec = json.loads(Path(spec).read_text())
    kind = spec.get("kind")
    if kind not in _RENDERERS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    fig = _RENDERERS[kind](spec)
    out = spec["out"]
    fig.savefig(out, dpi=spec.get("dpi", 150))
    ax = fig.axes[0]
    meta = {"out": str(out), "kind": kind,
            "xlim": list(ax.get_xlim()), "ylim": list(ax.get_ylim())}
    plt.close(fig)
    return meta
