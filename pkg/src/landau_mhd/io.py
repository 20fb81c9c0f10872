"""Persistence: binary field files, CSV series and samples, JSON records, key=value configs."""
import ast
import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

FIELD_MAGIC = b"LMHDFLD1"
_HEADER = struct.Struct("<8sqdq")     # magic, N, L, component count


def write_field(path, data, L):
    """Write physical samples ``data`` of shape ``(ncomp, N, N, N)`` or ``(N, N, N)``.

    Layout: a 32-byte header (magic, N as int64, L as float64, ncomp as
    int64) followed by little-endian float64 values, components interleaved
    per node and nodes in x-fastest order.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 3:
        data = data[None]
    ncomp, N = data.shape[0], data.shape[1]
    if data.shape[1:] != (N, N, N):
        raise ValueError(f"expected cubic samples, got shape {data.shape}")
    body = np.ascontiguousarray(np.transpose(data, (3, 2, 1, 0)), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FIELD_MAGIC, N, float(L), ncomp))
        fh.write(body.tobytes())
    return Path(path)


def read_field(path):
    """Inverse of :func:`write_field`; returns ``(data, L)`` with ``data`` as ``(ncomp, N, N, N)``."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, N, L, ncomp = _HEADER.unpack(head)
        if magic != FIELD_MAGIC:
            raise ValueError(f"{path}: not a field file")
        body = np.frombuffer(fh.read(), dtype="<f8")
    if body.size != N ** 3 * ncomp:
        raise ValueError(f"{path}: truncated ({body.size} of {N ** 3 * ncomp} values)")
    data = body.reshape(N, N, N, ncomp).transpose(3, 2, 1, 0)
    return np.ascontiguousarray(data, dtype=float), L


def write_point_samples(path, points, values, names):
    """CSV dump of point samples: columns ``x, y, z`` then one per name."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float).reshape(len(points), -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", *names])
        for p, v in zip(points, values):
            w.writerow([repr(float(a)) for a in (*p, *v)])
    return Path(path)


def write_series_long(path, series, append=False):
    """Append or write a :class:`NormSeries` as ``t, name, value`` rows."""
    path = Path(path)
    new = not (append and path.exists())
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(["t", "name", "value"])
        for t, name, value in series.rows_long():
            w.writerow([repr(float(t)), name, repr(float(value))])
    return path


def write_series_wide(path, series, names=None):
    """One row per time, one column per recorded quantity (plot-friendly)."""
    names = list(series.names) if names is None else list(names)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *names])
        cols = [series[n] for n in names]
        for i, t in enumerate(series.t):
            w.writerow([repr(float(t)), *(repr(float(c[i])) for c in cols)])
    return Path(path)


def read_series_long(path):
    """``{name: (t, value)}`` arrays from a long-format CSV."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["name"], []).append((float(row["t"]), float(row["value"])))
    return {k: tuple(np.array(c) for c in zip(*v)) for k, v in out.items()}


def write_sampled(path, f):
    """Sampled1D as ``s, value`` rows (``s`` the right cell edge)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "value"])
        for s, v in zip(f.nodes, f.values):
            w.writerow([repr(float(s)), repr(float(v))])
    return Path(path)


def read_sampled(path):
    from .weaklp import Sampled1D
    s, v = np.loadtxt(path, delimiter=",", skiprows=1, unpack=True, ndmin=2)
    return Sampled1D(s, v)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, (int, bool)):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def write_json(path, record):
    """Write ``record`` as indented JSON; fractions become ``"p/q"`` strings."""
    with open(path, "w") as fh:
        json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return Path(path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- configs

def _parse_value(text):
    text = text.strip()
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        low = text.lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        if low in ("none", "null"):
            return None
        return text


def parse_config(text, schema):
    """Parse ``key = value`` lines against a schema of defaults.

    Blank lines and ``#`` comments are ignored. Values are Python literals
    (numbers, strings, lists, tuples) or bare words. Keys are matched
    exactly against ``schema``; the result is a copy of ``schema`` with the
    given keys overridden and converted to the default's type where it is
    a scalar.

    Raises
    ------
    ConfigurationError
        Naming the offending key for unknown keys, malformed lines or values
        of the wrong type.
    """
    out = dict(schema)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in schema:
            raise ConfigurationError(f"unknown config key '{key}' (line {lineno})")
        out[key] = _coerce(key, _parse_value(value), schema[key])
    return out


def _coerce(key, value, default):
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, (list, tuple)):
            if not isinstance(value, (list, tuple)):
                value = (value,)
            return type(default)(value)
        return value
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"config key '{key}': cannot use {value!r} where a {type(default).__name__} is expected"
        ) from None


def load_config(path, schema):
    return parse_config(Path(path).read_text(), schema)


def format_config(cfg):
    """Inverse of :func:`parse_config` for round-tripping manifests."""
    return "".join(f"{k} = {v!r}\n" for k, v in sorted(cfg.items()))


def write_gnuplot(path, csv_name, columns, title, logscale=True):
    """Emit a gnuplot script plotting ``columns`` of a wide CSV against ``t``."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 't'",
    ]
    if logscale:
        lines.append("set logscale xy")
    plots = [f"'{csv_name}' using 't':'{c}' with lines" for c in columns]
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
