"""File formats and atomic output directories.

Rough path file (plain text, one record per line)::

    # roughdelay delayed rough path v1
    d <int>
    N <int>
    h <float>
    r <float>
    gamma <float>
    convention ito|stratonovich
    time_augmented 0|1
    K <int>
    t0 <float>
    k X[0..d) XX[0..d*d) XX(-r)[0..d*d)      <- column header
    <rows k = -K .. N-1>

Rows with ``k < 0`` are history intervals and carry ``nan`` areas. Floats are
written with ``repr`` so reading them back is bit-exact. The fine sample path
is not stored, so a reloaded path cannot be time-augmented again.
"""
from __future__ import annotations

import contextlib
import csv
import io as _io
import json
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .roughpath import DelayedRoughPath

MAGIC = "# roughdelay delayed rough path v1"
_HEADER_KEYS = ("d", "N", "h", "r", "gamma", "convention", "time_augmented", "K", "t0")


def _fmt(x):
    return repr(float(x))


def dumps_rough_path(rp):
    d, K, N = rp.dim, rp.delay_steps, rp.n_intervals
    lines = [MAGIC, f"d {d}", f"N {N}", f"h {_fmt(rp.h)}", f"r {_fmt(rp.r)}",
             f"gamma {_fmt(rp.gamma)}", f"convention {rp.convention}",
             f"time_augmented {int(rp.time_augmented)}", f"K {K}", f"t0 {_fmt(rp.t0)}"]
    cols = ["k"] + [f"X{i}" for i in range(d)]
    cols += [f"A{i}_{j}" for i in range(d) for j in range(d)]
    cols += [f"D{i}_{j}" for i in range(d) for j in range(d)]
    lines.append(" ".join(cols))
    nan_block = " ".join(["nan"] * (2 * d * d))
    for k in range(-K, N):
        row = [str(k)] + [_fmt(x) for x in rp.increments[K + k]]
        if k < 0:
            lines.append(" ".join(row) + " " + nan_block)
        else:
            row += [_fmt(x) for x in rp.area[k].ravel()]
            row += [_fmt(x) for x in rp.delayed_area[k].ravel()]
            lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def loads_rough_path(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ConfigError("not a roughdelay rough path file")
    head = {}
    for line, key in zip(lines[1:1 + len(_HEADER_KEYS)], _HEADER_KEYS):
        name, _, value = line.partition(" ")
        if name != key:
            raise ConfigError(f"expected header field {key!r}, found {name!r}")
        head[key] = value.strip()
    d, N, K = int(head["d"]), int(head["N"]), int(head["K"])
    body = lines[2 + len(_HEADER_KEYS):]
    if len(body) != K + N:
        raise ConfigError(f"expected {K + N} data rows, found {len(body)}")
    data = np.array([[float(x) for x in row.split()[1:]] for row in body])
    incr = data[:, :d]
    area = data[K:, d:d + d * d].reshape(N, d, d)
    delayed = data[K:, d + d * d:].reshape(N, d, d)
    return DelayedRoughPath(h=float(head["h"]), delay_steps=K, t0=float(head["t0"]),
                            increments=incr, area=area, delayed_area=delayed,
                            gamma=float(head["gamma"]), convention=head["convention"],
                            time_augmented=bool(int(head["time_augmented"])))


def write_rough_path(rp, path):
    Path(path).write_text(dumps_rough_path(rp))


def read_rough_path(path):
    return loads_rough_path(Path(path).read_text())


def csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, (int, str)) else _fmt(v) for v in row])
    return buf.getvalue()


def segment_csv(seg):
    """``t, m_a, zeta0_a_j, zeta1_a_j`` per node."""
    w, D = seg.zeta0.shape[1:]
    header = (["t"] + [f"m{a}" for a in range(w)]
              + [f"zeta0_{a}_{j}" for a in range(w) for j in range(D)]
              + [f"zeta1_{a}_{j}" for a in range(w) for j in range(D)])
    rows = [[t, *seg.values[n], *seg.zeta0[n].ravel(), *seg.zeta1[n].ravel()]
            for n, t in enumerate(seg.times)]
    return csv_text(header, rows)


def trajectory_csv(segments):
    """``segment, t, y_a, dy_a_j`` per node of every segment (joins repeated)."""
    w, D = segments[-1].zeta0.shape[1:]
    header = (["segment", "t"] + [f"y{a}" for a in range(w)]
              + [f"dy{a}_{j}" for a in range(w) for j in range(D)])
    rows = []
    for k, seg in enumerate(segments):
        coeff = seg.zeta0
        if coeff.shape[-1] < D:  # initial history on the plain path
            pad = np.zeros(coeff.shape[:-1] + (D - coeff.shape[-1],))
            coeff = np.concatenate([pad, coeff], axis=-1)
        for n, t in enumerate(seg.times):
            rows.append([k, t, *seg.values[n], *coeff[n].ravel()])
    return csv_text(header, rows)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_text(obj):
    """Deterministic JSON: sorted keys, non-finite numbers as ``null``."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


@contextlib.contextmanager
def atomic_output(out_dir):
    """Collect files in a scratch directory and move them into ``out_dir`` on success.

    On any exception nothing is placed in ``out_dir``.
    """
    out_dir = Path(out_dir)
    parent = out_dir.parent if str(out_dir.parent) else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".roughdelay-", dir=parent))
    try:
        yield scratch
        out_dir.mkdir(parents=True, exist_ok=True)
        for item in sorted(scratch.iterdir()):
            os.replace(item, out_dir / item.name)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
