"""AFDM signal model.

Chirp-subcarrier modulation matrices, symbol-rate and oversampled waveform
synthesis, the pre-chirp alphabet and the design-vector mapping.

Conventions
-----------
The DAFT matrix is ``A = diag(exp(-j2π c2 m²)) F diag(exp(-j2π c1 n²))`` with
the unitary DFT ``F``.  A transmit block carries symbols ``x`` through the
inverse transform::

    s[n] = 1/√N Σ_m x[m] exp(j2π (c1 n² + m n / N + c2,m m²))

Pre-chirp phases are folded into the design vector ``u`` so that the data
enter only through ``b`` (``b[m] = x[m]`` on data subcarriers, ``1`` on
reserved ones) and ``s = Φ u`` with ``Φ = Λ_c1 F^H diag(b)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_complex_vector, check_index_set

DEFAULT_DELTA = np.pi * 1e-4 * np.sqrt(2.0)


@dataclass(frozen=True)
class SubcarrierPartition:
    """Split of the chirp subcarriers into data (D) and reserved (R) sets.

    Parameters
    ----------
    n_subcarriers : int
        Number of chirp subcarriers ``N``.
    reserved : tuple of int
        Sorted reserved indices. Every other index carries data.
    """

    n_subcarriers: int
    reserved: tuple = ()

    def __post_init__(self):
        idx = check_index_set(self.reserved, self.n_subcarriers, name="reserved")
        object.__setattr__(self, "reserved", tuple(int(i) for i in idx))

    @classmethod
    def comb(cls, n_subcarriers, reserved_ratio):
        """Evenly spaced reserved comb with ``round(ratio * N)`` entries."""
        if not 0.0 <= reserved_ratio <= 1.0:
            raise ValueError(f"reserved_ratio must lie in [0, 1], got {reserved_ratio}")
        n_reserved = int(round(reserved_ratio * n_subcarriers))
        if n_reserved == 0:
            return cls(n_subcarriers, ())
        idx = np.round(np.linspace(0, n_subcarriers, n_reserved, endpoint=False))
        return cls(n_subcarriers, tuple(np.unique(idx.astype(int))))

    @classmethod
    def scattered(cls, n_subcarriers, reserved_ratio, seed=0):
        """Pseudo-random reserved set with ``round(ratio * N)`` entries.

        The set depends only on ``(N, |R|, seed)``.  Unlike a comb whose
        spacing divides ``N``, it does not leave the data and reserved parts
        with a common half-block (anti)periodicity that the reserved symbols
        cannot cancel.
        """
        if not 0.0 <= reserved_ratio <= 1.0:
            raise ValueError(f"reserved_ratio must lie in [0, 1], got {reserved_ratio}")
        n_reserved = int(round(reserved_ratio * n_subcarriers))
        rng = np.random.default_rng([int(seed), n_subcarriers, n_reserved])
        idx = rng.choice(n_subcarriers, n_reserved, replace=False)
        return cls(n_subcarriers, tuple(int(i) for i in np.sort(idx)))

    @classmethod
    def make(cls, n_subcarriers, reserved_ratio, placement="scattered", seed=0):
        """Reserved set by ``placement`` (``"scattered"`` or ``"comb"``)."""
        if placement == "scattered":
            return cls.scattered(n_subcarriers, reserved_ratio, seed)
        if placement == "comb":
            return cls.comb(n_subcarriers, reserved_ratio)
        raise ValueError(f"unknown placement {placement!r}")

    @property
    def R(self):
        return np.asarray(self.reserved, dtype=int)

    @property
    def D(self):
        mask = np.ones(self.n_subcarriers, dtype=bool)
        mask[self.R] = False
        return np.flatnonzero(mask)

    @property
    def data_mask(self):
        mask = np.ones(self.n_subcarriers, dtype=bool)
        mask[self.R] = False
        return mask

    @property
    def n_data(self):
        return self.n_subcarriers - len(self.reserved)

    @property
    def n_reserved(self):
        return len(self.reserved)


@dataclass(frozen=True)
class AfdmConfig:
    """Static description of an AFDM system.

    Parameters
    ----------
    n_subcarriers : int
        ``N``, must be even.
    c1 : float, optional
        Post-chirp parameter. ``2 N c1`` must be an integer. Defaults to
        ``21 / (2N)``.
    prechirp_size : int
        Size ``Q`` of the octagonal pre-chirp phase alphabet.
    phase_offset : float
        Common alphabet rotation ``φ0``.
    delta : float
        Small irrational rotation ``δ`` added to every alphabet phase.
    oversampling : int
        Oversampling factor ``L_P`` used for PAPR evaluation.
    symbol_duration : float
        Block duration ``T`` (normalized units).
    partition : SubcarrierPartition, optional
        Data/reserved split. Defaults to no reserved subcarriers.
    """

    n_subcarriers: int = 128
    c1: float | None = None
    prechirp_size: int = 8
    phase_offset: float = 0.0
    delta: float = DEFAULT_DELTA
    oversampling: int = 4
    symbol_duration: float = 1.0
    partition: SubcarrierPartition | None = field(default=None)

    def __post_init__(self):
        n = self.n_subcarriers
        if int(n) != n or n < 2 or n % 2:
            raise ValueError(f"n_subcarriers must be an even integer >= 2, got {n}")
        object.__setattr__(self, "n_subcarriers", int(n))
        if self.c1 is None:
            object.__setattr__(self, "c1", 21.0 / (2 * n))
        wraps = 2 * n * self.c1
        if abs(wraps - round(wraps)) > 1e-9 or wraps < 0:
            raise ValueError(f"2*N*c1 must be a non-negative integer, got {wraps}")
        if int(self.oversampling) != self.oversampling or self.oversampling < 1:
            raise ValueError("oversampling must be a positive integer")
        object.__setattr__(self, "oversampling", int(self.oversampling))
        if int(self.prechirp_size) != self.prechirp_size or self.prechirp_size < 1:
            raise ValueError("prechirp_size must be a positive integer")
        if self.symbol_duration <= 0:
            raise ValueError("symbol_duration must be positive")
        if self.partition is None:
            object.__setattr__(self, "partition", SubcarrierPartition(n, ()))
        elif self.partition.n_subcarriers != n:
            raise ValueError("partition size does not match n_subcarriers")

    @classmethod
    def create(cls, n_subcarriers=128, reserved_ratio=0.0, placement="scattered", placement_seed=0, **kwargs):
        """Build a config whose reserved set follows ``placement``.

        See :meth:`SubcarrierPartition.make`.
        """
        part = SubcarrierPartition.make(n_subcarriers, reserved_ratio, placement, placement_seed)
        return cls(n_subcarriers=n_subcarriers, partition=part, **kwargs)

    def with_reserved_ratio(self, reserved_ratio, placement="scattered", placement_seed=0):
        part = SubcarrierPartition.make(self.n_subcarriers, reserved_ratio, placement, placement_seed)
        return replace(self, partition=part)

    @property
    def n_wraps(self):
        """Number ``C = 2 N c1`` of frequency wraps within one block."""
        return int(round(2 * self.n_subcarriers * self.c1))

    @property
    def sample_period(self):
        return self.symbol_duration / self.n_subcarriers

    @property
    def c1_prime(self):
        """Continuous-time chirp rate ``c1 / Δt²``."""
        return self.c1 / self.sample_period**2

    @property
    def alphabet_phases(self):
        q = self.prechirp_size
        return self.phase_offset + self.delta + 2 * np.pi * np.arange(q) / q

    @property
    def alphabet(self):
        """Unit-modulus pre-chirp vertices shared by every subcarrier ``m >= 1``."""
        return np.exp(1j * self.alphabet_phases)


def build_prechirp_alphabet(cfg, m):
    """Admissible values of ``u[m]`` on a data subcarrier.

    Parameters
    ----------
    cfg : AfdmConfig
    m : int
        Subcarrier index.

    Returns
    -------
    ndarray of complex
        ``exp(j φ_ℓ)`` for ``ℓ = 0..Q-1``; the singleton ``[1]`` for ``m = 0``
        where the pre-chirp has no effect.
    """
    if not 0 <= m < cfg.n_subcarriers:
        raise ValueError(f"subcarrier index {m} outside [0, {cfg.n_subcarriers})")
    if m == 0:
        return np.array([1.0 + 0.0j])
    return cfg.alphabet


def prechirp_coefficients(cfg, prechirp_index):
    """Map per-subcarrier alphabet indices to ``c2,m`` values (0 at ``m = 0``)."""
    idx = np.asarray(prechirp_index, dtype=int)
    m = np.arange(cfg.n_subcarriers, dtype=float)
    c2 = np.zeros(cfg.n_subcarriers)
    nz = m > 0
    c2[nz] = cfg.alphabet_phases[idx[nz]] / (2 * np.pi * m[nz] ** 2)
    return c2


@dataclass
class DesignVector:
    """DAFT-domain design variable together with the symbols it carries.

    Attributes
    ----------
    u : ndarray, shape (N,)
        Design vector with ``||u||² = N``.  Entries on D are pre-chirp phase
        factors, entries on R are the free reserved symbols.
    b : ndarray, shape (N,)
        Data symbols on D and ones on R.
    prechirp_index : ndarray of int, shape (N,)
        Alphabet index per subcarrier (meaningful on D only).
    partition : SubcarrierPartition
    """

    u: np.ndarray
    b: np.ndarray
    prechirp_index: np.ndarray
    partition: SubcarrierPartition

    def __post_init__(self):
        n = self.partition.n_subcarriers
        self.u = check_complex_vector(self.u, n, name="u")
        self.b = check_complex_vector(self.b, n, name="b")
        self.prechirp_index = np.asarray(self.prechirp_index, dtype=int).reshape(n)

    @property
    def n_subcarriers(self):
        return self.partition.n_subcarriers

    @property
    def data_symbols(self):
        return self.b[self.partition.D]

    @property
    def effective_symbols(self):
        """DAFT-domain symbols ``b ⊙ u`` fed to the inverse transform."""
        return self.b * self.u

    def energy_error(self):
        n = self.n_subcarriers
        return abs(np.vdot(self.u, self.u).real - n) / n

    def copy(self, u=None, prechirp_index=None):
        return DesignVector(
            self.u.copy() if u is None else u,
            self.b.copy(),
            self.prechirp_index.copy() if prechirp_index is None else prechirp_index,
            self.partition,
        )


def design_from_symbols(cfg, symbols, reserved_symbols=None, prechirp_index=None):
    """Assemble a design vector from data symbols.

    Parameters
    ----------
    cfg : AfdmConfig
    symbols : array_like, shape (|D|,)
        Constellation points carried on the data subcarriers.
    reserved_symbols : array_like, shape (|R|,), optional
        Initial reserved entries; rescaled so that ``||u||² = N``.
    prechirp_index : array_like of int, shape (N,), optional
        Alphabet index per subcarrier; defaults to all zeros (common ``c2``).
    """
    part = cfg.partition
    n = cfg.n_subcarriers
    D, R = part.D, part.R
    symbols = check_complex_vector(symbols, len(D), name="symbols")
    if prechirp_index is None:
        prechirp_index = np.zeros(n, dtype=int)
    prechirp_index = np.asarray(prechirp_index, dtype=int)
    if prechirp_index.shape != (n,) or prechirp_index.min() < 0 or prechirp_index.max() >= cfg.prechirp_size:
        raise ValueError("prechirp_index must hold N integers in [0, Q)")
    vertices = cfg.alphabet[prechirp_index]
    u = vertices.astype(complex)
    if 0 in D:
        u[0] = 1.0
        prechirp_index = prechirp_index.copy()
        prechirp_index[0] = 0
    b = np.ones(n, dtype=complex)
    b[D] = symbols
    if len(R):
        if reserved_symbols is None:
            reserved_symbols = np.ones(len(R), dtype=complex)
        r = check_complex_vector(reserved_symbols, len(R), name="reserved_symbols")
        target = n - len(D)
        energy = np.vdot(r, r).real
        if energy <= 0:
            raise ValueError("reserved symbols carry no energy")
        u[R] = vertices[R] * r * np.sqrt(target / energy)
    return DesignVector(u, b, prechirp_index, part)


@functools.lru_cache(maxsize=16)
def _post_chirp(n, c1):
    k = np.arange(n, dtype=float)
    return np.exp(2j * np.pi * c1 * k**2)


def daft_matrix(cfg, c2=None):
    """Dense DAFT matrix ``A = Λ_c2 F Λ_c1`` (rows are subcarriers)."""
    n = cfg.n_subcarriers
    k = np.arange(n, dtype=float)
    c2 = np.zeros(n) if c2 is None else np.broadcast_to(np.asarray(c2, dtype=float), (n,))
    F = np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    return np.exp(-2j * np.pi * c2 * k**2)[:, None] * F * np.conj(_post_chirp(n, cfg.c1))[None, :]


def inverse_daft(cfg, v):
    """``Λ_c1 F^H v`` evaluated with an FFT."""
    n = cfg.n_subcarriers
    return _post_chirp(n, cfg.c1) * np.fft.ifft(v) * np.sqrt(n)


def forward_daft(cfg, s):
    """``F Λ_c1^H s``, the adjoint of :func:`inverse_daft`."""
    n = cfg.n_subcarriers
    return np.fft.fft(np.conj(_post_chirp(n, cfg.c1)) * s) / np.sqrt(n)


def synthesize(cfg, design):
    """Symbol-rate samples ``s = Φ u`` of one AFDM block."""
    _check_design(cfg, design)
    return inverse_daft(cfg, design.effective_symbols)


def wrap_times(cfg, m):
    """Frequency-wrapping instants ``t_{m,q}``, ``q = 1..C`` for subcarrier ``m``."""
    C = cfg.n_wraps
    if C == 0:
        return np.zeros(0)
    T, dt, c1p = cfg.symbol_duration, cfg.sample_period, cfg.c1_prime
    m = np.asarray(m, dtype=float)
    q = np.arange(1, C + 1, dtype=float)
    f0 = m[..., None] / T
    return (-f0 + np.sqrt(f0**2 + 4 * c1p * q / dt)) / (2 * c1p)


def wrap_index(cfg, m, t):
    """Number of wraps ``q`` experienced by subcarrier ``m`` at time ``t``.

    Returns the integer ``q`` with ``t_{m,q} <= t < t_{m,q+1}``.
    """
    if not 0.0 <= t < cfg.symbol_duration:
        raise ValueError(f"t={t} outside [0, T)")
    if not 0 <= m < cfg.n_subcarriers:
        raise ValueError(f"subcarrier index {m} outside [0, N)")
    return int(np.count_nonzero(wrap_times(cfg, m) <= t))


@functools.lru_cache(maxsize=16)
def _oversampled_basis(cfg_key):
    n, c1, lp, T, C = cfg_key
    dt = T / n
    c1p = c1 / dt**2
    t = np.arange(n * lp) * T / (n * lp)
    m = np.arange(n, dtype=float)
    if C:
        q = np.arange(1, C + 1, dtype=float)
        f0 = m[:, None] / T
        tmq = (-f0 + np.sqrt(f0**2 + 4 * c1p * q[None, :] / dt)) / (2 * c1p)
        wraps = np.zeros((n * lp, n))
        for j in range(C):
            wraps += t[:, None] >= tmq[None, :, j]
    else:
        wraps = np.zeros((n * lp, n))
    phase = c1p * t[:, None] ** 2 + m[None, :] * t[:, None] / T - wraps * t[:, None] / dt
    basis = np.exp(2j * np.pi * phase) / np.sqrt(n * lp)
    basis.setflags(write=False)
    return basis


def oversampled_basis(cfg):
    """Sampled chirp basis ``Λ_c1' (F_os ⊙ H)`` of shape ``(N L_P, N)``."""
    key = (cfg.n_subcarriers, cfg.c1, cfg.oversampling, cfg.symbol_duration, cfg.n_wraps)
    return _oversampled_basis(key)


def synthesize_oversampled(cfg, design):
    """``L_P``-fold oversampled samples ``Φ^(P) u``."""
    _check_design(cfg, design)
    return oversampled_basis(cfg) @ design.effective_symbols


class ModulationMatrices:
    """Dense modulation matrices for one data realization.

    Parameters
    ----------
    cfg : AfdmConfig
    b : array_like, shape (N,)
        Symbol vector (data on D, ones on R).
    c2 : array_like, optional
        Per-subcarrier pre-chirp coefficients used for ``A``.
    """

    def __init__(self, cfg, b, c2=None):
        n = cfg.n_subcarriers
        self.cfg = cfg
        self.b = check_complex_vector(b, n, name="b")
        self.A = daft_matrix(cfg, c2)
        k = np.arange(n)
        FH = np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
        self.Phi = _post_chirp(n, cfg.c1)[:, None] * FH * self.b[None, :]
        self.PhiP = oversampled_basis(cfg) * self.b[None, :]
        self.row_norms = np.sum(np.abs(self.PhiP) ** 2, axis=1)


def effective_spectral_efficiency(cfg, constellation_bits, prechirp_optimized, n_data=None):
    """Data symbols per transmitted resource once side information is counted.

    Parameters
    ----------
    cfg : AfdmConfig
    constellation_bits : int
        ``log2 |X|``.
    prechirp_optimized : bool
        Whether per-subcarrier pre-chirp indices have to be signalled.
    n_data : int, optional
        Overrides ``|D|`` from the partition.
    """
    if constellation_bits < 1:
        raise ValueError("constellation_bits must be >= 1")
    n_data = cfg.partition.n_data if n_data is None else int(n_data)
    side_bits = n_data * np.log2(cfg.prechirp_size) if prechirp_optimized else 0.0
    return n_data / (cfg.n_subcarriers + side_bits / constellation_bits)


def _check_design(cfg, design):
    if not isinstance(design, DesignVector):
        raise TypeError("expected a DesignVector")
    if design.n_subcarriers != cfg.n_subcarriers:
        raise ValueError(
            f"design has {design.n_subcarriers} subcarriers, config expects {cfg.n_subcarriers}"
        )
