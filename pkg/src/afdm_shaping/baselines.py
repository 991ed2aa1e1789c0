"""Reference waveforms: conventional AFDM and single-sweep pre-chirp selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_random_state
from .constellation import bits_per_symbol, psk_modulate, random_bits
from .core import design_from_symbols, oversampled_basis


@dataclass(frozen=True)
class BaselineSpec:
    """Which reference waveform to draw.

    Parameters
    ----------
    kind : {"conventional", "gps_sweep"}
    order : int
        PSK order of the data symbols.
    seed : int
    """

    kind: str = "conventional"
    order: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("conventional", "gps_sweep"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")


def random_symbols(cfg, seed, order=8):
    """``N`` random PSK symbols; identical for a given seed whatever the partition."""
    rng = check_random_state(seed)
    bits = random_bits(rng, cfg.n_subcarriers * bits_per_symbol(order))
    return psk_modulate(bits, order)


def conventional_afdm(cfg, seed, order=8):
    """Conventional AFDM block with random data and a common pre-chirp.

    Every subcarrier uses the first alphabet element.  Reserved subcarriers
    of ``cfg.partition`` are loaded with random symbols too, so the result is
    both the conventional waveform and the optimizer's starting point.
    """
    x = random_symbols(cfg, seed, order)
    part = cfg.partition
    return design_from_symbols(cfg, x[part.D], x[part.R] if part.n_reserved else None)


def gps_sweep(cfg, data, alphabet=None):
    """Single ascending sweep of per-subcarrier pre-chirp selection.

    Parameters
    ----------
    cfg : AfdmConfig
    data : DesignVector
        Starting design (typically :func:`conventional_afdm`).
    alphabet : array_like, optional
        Candidate vertices; defaults to the configured octagon.

    Returns
    -------
    DesignVector
        Design with the selected pre-chirp indices.  Each subcarrier keeps the
        candidate giving the smallest oversampled PAPR of the full block, the
        incumbent included.
    """
    verts = cfg.alphabet if alphabet is None else np.asarray(alphabet, dtype=complex)
    basis = oversampled_basis(cfg)
    u = data.u.copy()
    index = data.prechirp_index.copy()
    v = data.b * u
    s = basis @ v
    for m in data.partition.D:
        if m == 0:
            continue
        col = basis[:, m] * data.b[m]
        cand = s[:, None] + col[:, None] * (verts[None, :] - u[m])
        pw = np.abs(cand) ** 2
        ratio = pw.max(0) / pw.mean(0)
        current = np.abs(s) ** 2
        best = int(np.argmin(ratio))
        if ratio[best] < current.max() / current.mean():
            s = cand[:, best]
            u[m] = verts[best]
            index[m] = best
    return data.copy(u=u, prechirp_index=index)


def baseline_design(cfg, spec):
    design = conventional_afdm(cfg, spec.seed, spec.order)
    if spec.kind == "gps_sweep":
        design = gps_sweep(cfg, design)
    return design
