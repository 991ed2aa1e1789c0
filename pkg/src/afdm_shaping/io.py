"""Waveform files, CSV tables, design sidecars and run manifests.

Every writer goes through :func:`atomic_write`, which writes a temporary file
in the destination directory and renames it into place.

Waveform file layout (little endian)::

    magic    16 bytes  b"AFDMWAVE" padded with NUL
    N        uint32
    L_P      uint32
    samples  N * L_P complex values as interleaved float64 (re, im)
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import struct
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

MAGIC = b"AFDMWAVE".ljust(16, b"\0")
_HEADER = struct.Struct("<16sII")


class WaveformFormatError(ValueError):
    """Raised when a waveform file is truncated or carries a bad header."""


def atomic_write(path, data):
    """Write ``data`` (bytes or str) to ``path`` via temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else bytes(data)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def encode_waveform(samples, n_subcarriers, oversampling):
    x = np.asarray(samples, dtype=complex).ravel()
    if len(x) != n_subcarriers * oversampling:
        raise ValueError(f"expected {n_subcarriers * oversampling} samples, got {len(x)}")
    body = np.empty(2 * len(x), dtype="<f8")
    body[0::2] = x.real
    body[1::2] = x.imag
    return _HEADER.pack(MAGIC, n_subcarriers, oversampling) + body.tobytes()


def decode_waveform(blob):
    """Parse waveform bytes into ``(samples, N, L_P)``."""
    if len(blob) < _HEADER.size:
        raise WaveformFormatError("file shorter than the header")
    magic, n, lp = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise WaveformFormatError("bad magic")
    if n == 0 or lp == 0:
        raise WaveformFormatError("empty waveform")
    expected = _HEADER.size + 16 * n * lp
    if len(blob) != expected:
        raise WaveformFormatError(f"expected {expected} bytes, got {len(blob)}")
    body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return body[0::2] + 1j * body[1::2], int(n), int(lp)


def write_waveform(path, samples, n_subcarriers, oversampling):
    return atomic_write(path, encode_waveform(samples, n_subcarriers, oversampling))


def read_waveform(path):
    return decode_waveform(Path(path).read_bytes())


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def csv_text(header, rows):
    """Render rows as CSV with a header line; floats use ``repr`` precision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    return atomic_write(path, csv_text(header, rows))


def read_csv(path):
    """Return ``(header, rows)`` with every cell as a string."""
    with open(path, newline="") as fh:
        r = list(csv.reader(fh))
    if not r:
        raise ValueError(f"{path}: empty CSV")
    return r[0], r[1:]


def _complex_list(x):
    return [[float(v.real), float(v.imag)] for v in np.asarray(x, dtype=complex)]


def design_to_dict(design, **meta):
    """JSON-ready description of a design vector."""
    return {
        "u": _complex_list(design.u),
        "b": _complex_list(design.b),
        "prechirp_index": [int(i) for i in design.prechirp_index],
        "reserved": [int(i) for i in design.partition.R],
        **meta,
    }


def design_from_dict(d, n_subcarriers):
    from .core import DesignVector, SubcarrierPartition

    def cplx(a):
        a = np.asarray(a, dtype=float)
        return a[:, 0] + 1j * a[:, 1]

    part = SubcarrierPartition(n_subcarriers, np.asarray(d["reserved"], dtype=int))
    return DesignVector(cplx(d["u"]), cplx(d["b"]), np.asarray(d["prechirp_index"], dtype=int), part)


def write_json(path, obj):
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def config_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(out_dir, command, config_text, seed, outputs, failures=(), extra=None):
    """Record what a run did; timestamps live only here."""
    from . import __version__

    manifest = {
        "command": command,
        "config_sha256": config_hash(config_text),
        "config": config_text,
        "seed": int(seed),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(str(p) for p in outputs),
        "failures": list(failures),
    }
    if extra:
        manifest.update(extra)
    return write_json(Path(out_dir) / "manifest.json", manifest)
