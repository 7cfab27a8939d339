"""Delimited-text ingestion and deterministic tabular/plot-data output.

All file formats are plain text with ``#`` comments.  Column headers carry
units as ``name_unit`` suffixes (area_A2, fwhm_GHz, ...) so units travel
with the data.  Emitted bytes are deterministic for identical inputs:
fixed precision, no timestamps.
"""

from __future__ import annotations

import hashlib
import io as _io
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ParseError, SchemaMismatchError

_FLOAT_FMT = "{:.10g}"


def _tokenize(path):
    """Yield (line_number, tokens) for data lines; '#' starts a comment."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            yield lineno, line.replace(",", " ").split()


def read_columns(path, n_min: int = 2):
    """Read a whitespace/comma-delimited numeric table.

    Returns (header_tokens_or_None, 2-D array).  A first non-numeric line
    is treated as the header.  Raises ParseError with the line number on a
    malformed row.
    """
    header = None
    rows = []
    width = None
    for lineno, tokens in _tokenize(path):
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            if header is None and not rows:
                header = tokens
                continue
            raise ParseError(f"non-numeric value in {tokens}", path, lineno)
        if width is None:
            width = len(values)
            if width < n_min:
                raise ParseError(f"need >= {n_min} columns, got {width}", path, lineno)
        elif len(values) != width:
            raise ParseError(
                f"expected {width} columns, got {len(values)}", path, lineno)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", path)
    return header, np.array(rows)


def read_xy(path):
    """Two-column (x, y) file.  Returns (header, x, y)."""
    header, data = read_columns(path, n_min=2)
    return header, data[:, 0], data[:, 1]


def read_profile(path):
    """Depth-profile file: header row names the element columns, first
    column is z in nm.  Returns (z, {element: counts})."""
    header, data = read_columns(path, n_min=2)
    if header is None:
        raise ParseError("profile file needs a header row naming elements", path)
    names = header[1:]
    if len(names) != data.shape[1] - 1:
        raise ParseError(
            f"header names {len(names)} channels but file has {data.shape[1]-1}", path)
    return data[:, 0], {name: data[:, i + 1] for i, name in enumerate(names)}


def read_heightmap(path):
    """Height map as a plain matrix (pitch via CLI flag) or single-column
    raster preceded by a 'rows cols pitch_nm' header line.

    Returns (heights_2d, pitch_nm_or_None).
    """
    lines = list(_tokenize(path))
    if not lines:
        raise ParseError("empty height map", path)
    first_tokens = lines[0][1]
    if len(first_tokens) == 3 and all(len(line[1]) == 1 for line in lines[1:]):
        try:
            ny, nx = int(first_tokens[0]), int(first_tokens[1])
            pitch = float(first_tokens[2])
        except ValueError:
            raise ParseError("raster header must be 'rows cols pitch_nm'",
                             path, lines[0][0])
        values = []
        for lineno, tokens in lines[1:]:
            try:
                values.append(float(tokens[0]))
            except ValueError:
                raise ParseError(f"non-numeric height {tokens[0]!r}", path, lineno)
        if len(values) != ny * nx:
            raise ParseError(f"raster promises {ny*nx} values, found {len(values)}", path)
        return np.array(values).reshape(ny, nx), pitch
    header, data = read_columns(path, n_min=1)
    if header is not None:
        raise ParseError("matrix-format height map takes no header", path)
    return data, None


def file_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


@dataclass
class ResultTable:
    """Rectangular results with unit-annotated columns and provenance."""

    columns: list[str]
    rows: list[list] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row width {len(values)} != {len(self.columns)}")
        self.rows.append(list(values))

    def add_provenance(self, inputs=(), **params):
        self.provenance["tool_version"] = __version__
        for p in inputs:
            self.provenance[f"input:{p}"] = file_digest(p)
        for key, value in sorted(params.items()):
            self.provenance[f"param:{key}"] = value

    def _cell(self, v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return _FLOAT_FMT.format(v)
        return str(v)

    def to_csv(self) -> bytes:
        buf = _io.StringIO()
        for key, value in self.provenance.items():
            buf.write(f"# {key} = {self._cell(value)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(self._cell(v) for v in row) + "\n")
        return buf.getvalue().encode("utf-8")

    def column(self, name) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


_PLOT_SCHEMAS = {
    # plot kind -> columns that must be present (prefix match on unit suffix)
    "map": ("substrate", "film", "hkl", "area_A2"),
    "peak-fit": ("x", "y", "fit"),
    "profile": ("z_nm",),
    "timeseries": ("t_s",),
}


def emit_plot_data(table: ResultTable, kind: str) -> bytes:
    """Deterministic SVG plot-data for a result table.

    The drawing body contains only data-derived geometry at fixed
    precision, so identical inputs give identical bytes.
    """
    if kind not in _PLOT_SCHEMAS:
        raise SchemaMismatchError(f"unknown plot kind {kind!r}")
    needed = _PLOT_SCHEMAS[kind]
    missing = [c for c in needed if c not in table.columns]
    if missing:
        raise SchemaMismatchError(f"{kind} plot needs columns {missing}")
    if not table.rows:
        raise SchemaMismatchError("empty table")

    width, height = 640, 400
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']

    if kind == "map":
        areas = [r for r in table.column("area_A2")]
        labels = [f"{s}|{f}({p})" for s, f, p in zip(
            table.column("substrate"), table.column("film"), table.column("hkl"))]
        finite = [a for a in areas if a is not None]
        top = max(finite) if finite else 1.0
        bar_w = width / max(len(areas), 1)
        mins = table.column("is_min") if "is_min" in table.columns else [False] * len(areas)
        for i, (label, a, is_min) in enumerate(zip(labels, areas, mins)):
            x = _FLOAT_FMT.format(i * bar_w)
            if a is None:
                out.append(f'<text x="{x}" y="{height-5}" font-size="8">{label}:none</text>')
                continue
            h = (a / top) * (height - 40)
            y = _FLOAT_FMT.format(height - 20 - h)
            fill = "#d62728" if is_min else "#1f77b4"
            out.append(f'<rect x="{x}" y="{y}" width="{_FLOAT_FMT.format(bar_w*0.8)}"'
                       f' height="{_FLOAT_FMT.format(h)}" fill="{fill}"/>')
            out.append(f'<text x="{x}" y="{height-5}" font-size="8">{label}</text>')
    else:
        xcol = needed[0] if kind != "peak-fit" else "x"
        xs = table.column(xcol)
        series = [c for c in table.columns if c != xcol
                  and all(isinstance(v, (int, float)) and v is not None
                          for v in table.column(c))]
        xlo, xhi = min(xs), max(xs)
        xspan = (xhi - xlo) or 1.0
        allv = [v for c in series for v in table.column(c)]
        ylo, yhi = (min(allv), max(allv)) if allv else (0.0, 1.0)
        yspan = (yhi - ylo) or 1.0
        palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"]
        for si, name in enumerate(series):
            pts = " ".join(
                f"{_FLOAT_FMT.format((x-xlo)/xspan*(width-40)+20)},"
                f"{_FLOAT_FMT.format(height-20-(v-ylo)/yspan*(height-40))}"
                for x, v in zip(xs, table.column(name)))
            color = palette[si % len(palette)]
            out.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
            out.append(f'<text x="25" y="{15+10*si}" font-size="9" fill="{color}">{name}</text>')

    out.append("</svg>")
    return "\n".join(out).encode("utf-8")
