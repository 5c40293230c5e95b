"""Delimited text formats shared by the CLI subcommands.

One wire format everywhere: comma-separated, UTF-8, '.' decimal, header
row, newline-terminated. Leading '#' lines carry the full run configuration
so any output can be reproduced from its own header.
"""

from __future__ import annotations

import csv

import numpy as np

from .scores import SIMPLEX_ATOL, validate_prob_matrix


class FileFormatError(ValueError):
    """A delimited input file failed validation."""


def config_header(config: dict) -> list[str]:
    """Render a run configuration as '# key=value' comment lines."""
    return [f"# {k}={config[k]}" for k in sorted(config)]


def read_config_header(path) -> dict:
    """Parse the '# key=value' lines at the top of an output file."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                out[key] = value
    return out


def write_probability_file(path, P, labels, ids=None, config=None) -> None:
    """Write an (id, label, p_0..p_{K-1}) table."""
    P = np.asarray(P, dtype=np.float64)
    labels = np.asarray(labels)
    n, K = P.shape
    if ids is None:
        ids = [str(i) for i in range(n)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if config:
            fh.write("\n".join(config_header(config)) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"] + [f"p_{k}" for k in range(K)])
        for i in range(n):
            writer.writerow([ids[i], int(labels[i])] + [repr(float(v)) for v in P[i]])


def read_probability_file(path):
    """Read and validate a probability file -> (ids, labels, P)."""
    ids, labels, rows = [], [], []
    with open(path, encoding="utf-8") as fh:
        lineno = 0
        header = None
        K = None
        for line in fh:
            lineno += 1
            if line.startswith("#") or not line.strip():
                continue
            fields = next(csv.reader([line]))
            if header is None:
                header = fields
                if len(header) < 4 or header[:2] != ["id", "label"]:
                    raise FileFormatError(
                        f"{path}:{lineno}: expected header 'id,label,p_0,...'")
                K = len(header) - 2
                if header[2:] != [f"p_{k}" for k in range(K)]:
                    raise FileFormatError(f"{path}:{lineno}: malformed probability columns")
                continue
            if len(fields) != K + 2:
                raise FileFormatError(
                    f"{path}:{lineno}: expected {K + 2} fields, got {len(fields)}")
            try:
                label = int(fields[1])
                probs = [float(v) for v in fields[2:]]
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from None
            if not 0 <= label < K:
                raise FileFormatError(f"{path}:{lineno}: label {label} out of range [0, {K})")
            total = sum(probs)
            if any(v < 0 or v > 1 for v in probs) or abs(total - 1.0) > SIMPLEX_ATOL:
                raise FileFormatError(
                    f"{path}:{lineno}: probabilities invalid (sum={total!r})")
            ids.append(fields[0])
            labels.append(label)
            rows.append(probs)
    if header is None or not rows:
        raise FileFormatError(f"{path}: no data rows")
    P = validate_prob_matrix(np.asarray(rows))
    return ids, np.asarray(labels, dtype=np.int64), P


def write_table(path, columns, rows, config=None) -> None:
    """Write a generic delimited table with an embedded config header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if config:
            fh.write("\n".join(config_header(config)) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
