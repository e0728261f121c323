"""Deterministic on-disk formats for runs, scans, oracles and fits.

Numeric content is written with repr(), which round-trips doubles exactly,
so identical (config, seed) reproduce byte-identical files.  Every file
embeds the config hash: CSV files as a leading "# config_hash=..." comment,
JSON files as a top-level field.  All writes are atomic
(temp-file-then-rename in the target directory).
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

SERIES_HEADER = "sweep_index,chain_id,value"
HISTOGRAM_HEADER = "bin_left,bin_right,mass"
CORRELATION_HEADER = "lag,value,error"
SCAN_HEADER = "scan_value,observable,mean,error"


def atomic_write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows, cfg_hash):
    lines = [f"# config_hash={cfg_hash}", header]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_series_csv(path, series, cfg_hash):
    """(sweep_index, chain_id, value) rows ordered by chain then sweep."""
    rows = []
    b = series.chain_bounds
    for chain in range(series.n_chains):
        for s, v in enumerate(series.values[b[chain]:b[chain + 1]]):
            rows.append((str(s), str(chain), repr(float(v))))
    atomic_write_text(path, _csv_text(SERIES_HEADER, rows, cfg_hash))


def write_histogram_csv(path, hist, cfg_hash):
    rows = [(repr(float(l)), repr(float(r)), repr(float(m)))
            for l, r, m in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.masses)]
    atomic_write_text(path, _csv_text(HISTOGRAM_HEADER, rows, cfg_hash))


def write_correlation_csv(path, corr, cfg_hash):
    rows = [(str(int(n)), repr(float(v)), repr(float(e)))
            for n, v, e in zip(corr.lags, corr.values, corr.errors)]
    atomic_write_text(path, _csv_text(CORRELATION_HEADER, rows, cfg_hash))


def write_scan_csv(path, rows, cfg_hash):
    """rows: iterable of (scan_value, observable_name, mean, error)."""
    out = [(repr(float(v)), str(name), repr(float(m)), repr(float(e)))
           for v, name, m, e in rows]
    atomic_write_text(path, _csv_text(SCAN_HEADER, out, cfg_hash))


def write_json(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _read_csv(path, expected_header):
    cfg_hash = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "config_hash=" in line:
                    cfg_hash = line.split("config_hash=", 1)[1].strip()
                continue
            if line == expected_header:
                continue
            rows.append(line.split(","))
    return rows, cfg_hash


def read_series_csv(path):
    rows, cfg_hash = _read_csv(path, SERIES_HEADER)
    arr = np.array([[float(a), float(b), float(c)] for a, b, c in rows])
    return arr, cfg_hash


def read_correlation_csv(path):
    rows, cfg_hash = _read_csv(path, CORRELATION_HEADER)
    arr = np.array([[float(a), float(b), float(c)] for a, b, c in rows])
    return arr, cfg_hash


def read_histogram_csv(path):
    rows, cfg_hash = _read_csv(path, HISTOGRAM_HEADER)
    arr = np.array([[float(a), float(b), float(c)] for a, b, c in rows])
    return arr, cfg_hash


def read_scan_csv(path):
    rows, cfg_hash = _read_csv(path, SCAN_HEADER)
    out = [(float(v), name, float(m), float(e)) for v, name, m, e in rows]
    return out, cfg_hash


def read_xye_csv(path):
    """Generic 3-numeric-column reader for the fit subcommand."""
    cfg_hash = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "config_hash=" in line:
                    cfg_hash = line.split("config_hash=", 1)[1].strip()
                continue
            parts = line.split(",")
            try:
                rows.append([float(p) for p in parts[:3]])
            except ValueError:
                continue  # header line
    if not rows:
        raise ValueError(f"no numeric rows in {path}")
    return np.array(rows), cfg_hash
