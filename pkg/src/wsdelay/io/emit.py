"""Result files.

All numbers are written with 17 significant digits (``%.17g``), which
round-trips IEEE doubles, using locale-independent formatting. Every file
starts with, or contains, ``format_version``. Output is a pure function of
the data, so identical runs give byte-identical files.

Files::

    delay.csv         E,tau,cumulative,count_estimate
    resonances.json   candidates, fits, counts in units of h and hbar
    plot/*.dat        two-column (or three-column for heat maps) series,
                      '#' comment header, blank line between heat-map rows
    report.txt        human-readable summary
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def fmt(x) -> str:
    return "%.17g" % float(x)


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def json_text(payload: dict) -> str:
    body = {"format_version": FORMAT_VERSION, **payload}
    return json.dumps(_plain(body), indent=2, sort_keys=True, allow_nan=False) + "\n"


def delay_csv(dp, quantum: float) -> str:
    lines = [f"# format_version = {FORMAT_VERSION}",
             f"# quantum = {fmt(quantum)}",
             "E,tau,cumulative,count_estimate"]
    for e, t, c in zip(dp.energy, dp.tau, dp.cumulative):
        lines.append(",".join((fmt(e), fmt(t), fmt(c), fmt(c / quantum))))
    return "\n".join(lines) + "\n"


def series_dat(columns: tuple[str, str], x, y) -> str:
    lines = [f"# format_version = {FORMAT_VERSION}", f"# {columns[0]} {columns[1]}"]
    lines += [f"{fmt(a)} {fmt(b)}" for a, b in zip(x, y)]
    return "\n".join(lines) + "\n"


def heatmap_dat(columns: tuple[str, str, str], x, y, z, max_side: int = 200) -> str:
    """gnuplot ``splot``-style grid: z has shape (len(x), len(y)); strided to max_side."""
    sx = max(1, int(np.ceil(len(x) / max_side)))
    sy = max(1, int(np.ceil(len(y) / max_side)))
    lines = [f"# format_version = {FORMAT_VERSION}", "# " + " ".join(columns)]
    for i in range(0, len(x), sx):
        for j in range(0, len(y), sy):
            lines.append(f"{fmt(x[i])} {fmt(y[j])} {fmt(z[i, j])}")
        lines.append("")
    return "\n".join(lines) + "\n"


def write_outputs(out_dir, files: dict[str, str]) -> list[Path]:
    """Write ``{relative path: text}`` under ``out_dir`` in sorted order.

    Errors surface as ``OSError`` naming the offending path.
    """
    root = Path(out_dir)
    written = []
    for rel in sorted(files):
        path = root / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(files[rel])
        except OSError as err:
            raise OSError(err.errno, f"cannot write {os.fspath(path)}: {err.strerror}",
                          os.fspath(path)) from err
        written.append(path)
    return written
