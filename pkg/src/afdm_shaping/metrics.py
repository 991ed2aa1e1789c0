"""Ambiguity-function, ISL and PAPR metrics.

The cyclic ambiguity function of a block ``s`` at delay ``τ`` and normalized
Doppler ``μ`` is ``s^H J_τ D(μ) s`` with ``J_τ`` the cyclic delay-by-``τ``
permutation and ``D(μ) = diag(exp(-j2π μ k / N))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_complex_vector
from .core import DesignVector, ModulationMatrices, forward_daft, inverse_daft, oversampled_basis


@dataclass(frozen=True)
class LazSpec:
    """Low-ambiguity zone sampled on an integer-delay, uniform-Doppler grid.

    Parameters
    ----------
    tau_max : int
        Delays ``-tau_max..tau_max`` (cyclic).
    mu_min, mu_max : float
        Doppler span.
    n_mu : int
        Number of Doppler grid points ``L_μ``.
    weights : array_like, optional
        Nonnegative weights of shape ``(2 tau_max + 1, n_mu)``; unit weights by
        default.  The origin cell always gets weight zero.
    """

    tau_max: int = 8
    mu_min: float = -4.0
    mu_max: float = 4.0
    n_mu: int = 9
    weights: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.tau_max) != self.tau_max or self.tau_max < 0:
            raise ValueError("tau_max must be a non-negative integer")
        if int(self.n_mu) != self.n_mu or self.n_mu < 1:
            raise ValueError("n_mu must be a positive integer")
        if self.n_mu == 1 and self.mu_min != self.mu_max:
            raise ValueError("a single Doppler point needs mu_min == mu_max")
        if self.mu_max < self.mu_min:
            raise ValueError("mu_max must not be below mu_min")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (2 * self.tau_max + 1, self.n_mu) or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be nonnegative with shape (2*tau_max+1, n_mu)")
            object.__setattr__(self, "weights", tuple(map(tuple, w)))

    @property
    def taus(self):
        return np.arange(-self.tau_max, self.tau_max + 1)

    @property
    def mus(self):
        if self.n_mu == 1:
            return np.array([float(self.mu_min)])
        return np.linspace(self.mu_min, self.mu_max, self.n_mu)

    @property
    def mu_step(self):
        return 0.0 if self.n_mu == 1 else (self.mu_max - self.mu_min) / (self.n_mu - 1)

    @property
    def weight_matrix(self):
        if self.weights is None:
            w = np.ones((2 * self.tau_max + 1, self.n_mu))
        else:
            w = np.array(self.weights, dtype=float)
        w[self.origin_mask] = 0.0
        return w

    @property
    def origin_mask(self):
        mask = np.zeros((2 * self.tau_max + 1, self.n_mu), dtype=bool)
        mask[self.tau_max] = np.isclose(self.mus, 0.0, atol=1e-12)
        return mask

    @property
    def n_points(self):
        """``|A|``, the number of grid cells excluding the origin."""
        return (2 * self.tau_max + 1) * self.n_mu - int(self.origin_mask.sum())

    def points(self):
        """``(tau, mu, weight)`` rows for every cell other than the origin."""
        T, M = np.meshgrid(self.taus, self.mus, indexing="ij")
        keep = ~self.origin_mask
        return np.column_stack([T[keep], M[keep], self.weight_matrix[keep]])

    def doppler_kernel(self, n):
        """``E[q, k] = exp(-j2π μ_q k / N)``."""
        return np.exp(-2j * np.pi * np.outer(self.mus, np.arange(n)) / n)


@dataclass
class AfGrid:
    """Ambiguity values on a LAZ grid (rows: delays, columns: Doppler)."""

    values: np.ndarray
    laz: LazSpec

    def abs2(self):
        return np.abs(self.values) ** 2

    def rows(self):
        """``(tau, mu, re, im, abs2)`` rows in delay-major order."""
        T, M = np.meshgrid(self.laz.taus, self.laz.mus, indexing="ij")
        v = self.values
        return np.column_stack([T.ravel(), M.ravel(), v.real.ravel(), v.imag.ravel(), np.abs(v).ravel() ** 2])


def ambiguity(s, tau, mu):
    """Cyclic ambiguity ``s^H J_τ D(μ) s`` in O(N).

    Parameters
    ----------
    s : array_like
        Time samples of one block.
    tau : int
        Delay in samples, interpreted modulo ``N``.
    mu : float
        Normalized Doppler.
    """
    s = check_complex_vector(s, name="s")
    n = len(s)
    k = np.arange(n)
    return np.sum(np.conj(np.roll(s, -int(tau))) * np.exp(-2j * np.pi * mu * k / n) * s)


def _lag_products(s, taus):
    # P[i, k] = conj(s[k + tau_i]) s[k]
    n = len(s)
    idx = (np.arange(n)[None, :] + np.asarray(taus)[:, None]) % n
    return np.conj(s[idx]) * s[None, :]


def ambiguity_grid(s, laz):
    """Ambiguity values of ``s`` on every LAZ grid cell (origin included)."""
    s = check_complex_vector(s, name="s")
    E = laz.doppler_kernel(len(s))
    return AfGrid(_lag_products(s, laz.taus) @ E.T, laz)


def weighted_isl_samples(s, laz):
    """Weighted ISL of a time-domain block over the LAZ."""
    grid = ambiguity_grid(s, laz)
    return float(np.sum(laz.weight_matrix * grid.abs2()))


def _as_u(u, n):
    if isinstance(u, DesignVector):
        u = u.u
    return check_complex_vector(u, n, name="u")


class QuadFormCache:
    """Quadratic-form data shared by the ISL and PAPR computations.

    Holds ``Φ`` and ``Φ^(P)`` for one data realization.  The ISL matrices
    ``C_{τ,μ} = Φ^H U_{τ,μ} Φ`` are materialized on first access only; the
    optimizer works with the equivalent FFT-based products.  ``G_n`` is kept
    as the ``n``-th row of ``Φ^(P)``.

    Parameters
    ----------
    cfg : AfdmConfig
    laz : LazSpec
    b : array_like, shape (N,)
    """

    def __init__(self, cfg, laz, b):
        n = cfg.n_subcarriers
        self.cfg = cfg
        self.laz = laz
        self.b = check_complex_vector(b, n, name="b")
        self.unit_modulus = bool(np.allclose(np.abs(self.b), 1.0, rtol=0, atol=1e-12))
        self.PhiP = oversampled_basis(cfg) * self.b[None, :]
        self.row_norms = np.sum(np.abs(self.PhiP) ** 2, axis=1)
        self.R = (self.PhiP.conj().T @ self.PhiP) / (n * cfg.oversampling)
        self.weights = laz.weight_matrix
        self.E = laz.doppler_kernel(n)
        self._C = None
        self._Phi = None
        self._pgram_abs2 = None
        self._lam_J = {}

    @property
    def n(self):
        return self.cfg.n_subcarriers

    @property
    def Phi(self):
        if self._Phi is None:
            self._Phi = ModulationMatrices(self.cfg, self.b).Phi
        return self._Phi

    @property
    def C(self):
        """``C_{τ,μ}`` for every grid cell, shape ``(2τ_max+1, L_μ, N, N)``."""
        if self._C is None:
            n = self.n
            Phi = self.Phi
            k = np.arange(n)
            C = np.empty((len(self.laz.taus), len(self.laz.mus), n, n), dtype=complex)
            for i, tau in enumerate(self.laz.taus):
                shifted = np.roll(Phi, int(tau), axis=0)
                for q, mu in enumerate(self.laz.mus):
                    phase = np.exp(-2j * np.pi * mu * ((k - tau) % n) / n)
                    C[i, q] = Phi.conj().T @ (phase[:, None] * shifted)
            self._C = C
        return self._C

    def frobenius2(self):
        """``||C_{τ,μ}||_F²`` per grid cell."""
        if self.unit_modulus:
            return np.full(self.weights.shape, float(self.n))
        P = self.Phi @ self.Phi.conj().T
        n = self.n
        k = np.arange(n)
        out = np.empty(self.weights.shape)
        for i, tau in enumerate(self.laz.taus):
            idx = (k + tau) % n
            Ps = P[np.ix_(idx, idx)]
            for q, mu in enumerate(self.laz.mus):
                d = np.exp(-2j * np.pi * mu * k / n)
                out[i, q] = np.real(np.sum(np.conj(d)[:, None] * d[None, :] * Ps * P.T))
        return out

    def isl_bound(self, kind="gram"):
        """Upper bound on ``λ_max`` of the lifted ISL matrix.

        ``kind="trace"`` gives ``Σ w ||C||_F²``.  ``kind="gram"`` returns the
        exact value for unit-modulus ``b`` (the lifted vectors then have the
        Gram matrix ``tr(U_a^H U_b)``) and falls back to the trace bound
        otherwise.
        """
        if kind in self._lam_J:
            return self._lam_J[kind]
        w = self.weights
        if kind == "trace" or not self.unit_modulus:
            val = float(np.sum(w * self.frobenius2()))
        elif kind == "gram":
            pts = self.laz.points()
            pts = pts[pts[:, 2] > 0]
            n = self.n
            if len(pts) == 0:
                val = 0.0
            else:
                tau = np.mod(pts[:, 0].astype(int), n)
                mu = pts[:, 1]
                k = np.arange(n)
                same = tau[:, None] == tau[None, :]
                dmu = mu[None, :] - mu[:, None]
                gram = np.exp(-2j * np.pi * dmu[..., None] * k / n).sum(-1) * same
                sw = np.sqrt(pts[:, 2])
                val = float(np.linalg.eigvalsh(sw[:, None] * gram * sw[None, :])[-1])
        else:
            raise ValueError(f"unknown bound kind {kind!r}")
        self._lam_J[kind] = val
        return val

    def pgram_abs2(self):
        """``|φ_n^H φ_k|²`` for all oversampled rows (used by the PAPR bounds)."""
        if self._pgram_abs2 is None:
            G = self.PhiP @ self.PhiP.conj().T
            self._pgram_abs2 = np.abs(G) ** 2
        return self._pgram_abs2

    # fast products -------------------------------------------------------
    def synthesize(self, u):
        return inverse_daft(self.cfg, self.b * u)

    def adjoint(self, s):
        """``Φ^H s``."""
        return np.conj(self.b) * forward_daft(self.cfg, s)

    def ambiguity_values(self, u):
        return _lag_products(self.synthesize(u), self.laz.taus) @ self.E.T

    def oversampled(self, u):
        return self.PhiP @ u


def build_quadform_cache(cfg, laz, b, max_subcarriers=4096):
    """Precompute the ISL/PAPR quadratic-form data for one realization.

    Raises
    ------
    MemoryError
        If ``N`` exceeds ``max_subcarriers``.
    """
    if cfg.n_subcarriers > max_subcarriers:
        raise MemoryError(f"N={cfg.n_subcarriers} exceeds the configured cap of {max_subcarriers}")
    return QuadFormCache(cfg, laz, b)


def weighted_isl(u, cache, laz=None, method="auto"):
    """Weighted ISL ``Σ w |u^H C u|²`` over the LAZ.

    Parameters
    ----------
    u : DesignVector or array_like
    cache : QuadFormCache
    laz : LazSpec, optional
        Must match the cache's LAZ when given.
    method : {"auto", "quadform", "samples"}
        ``"quadform"`` evaluates the cached ``C`` matrices, ``"samples"``
        evaluates the ambiguity function of ``Φu``.  ``"auto"`` uses the
        matrices when they are already materialized.
    """
    if laz is not None and laz != cache.laz:
        raise ValueError("cache was built for a different LAZ")
    if isinstance(u, DesignVector) and not np.allclose(u.b, cache.b):
        raise ValueError("cache was built for different data symbols")
    u = _as_u(u, cache.n)
    if method == "auto":
        method = "quadform" if cache._C is not None else "samples"
    if method == "quadform":
        zeta = np.einsum("i,tqij,j->tq", u.conj(), cache.C, u)
    elif method == "samples":
        zeta = cache.ambiguity_values(u)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.sum(cache.weights * np.abs(zeta) ** 2))


@dataclass
class PaprReport:
    db: float
    peak: float
    average: float

    @property
    def ratio(self):
        return self.peak / self.average


def papr(u, cache):
    """Oversampled PAPR ``max_n p_n(u) / (u^H R u)``."""
    u = _as_u(u, cache.n)
    p = np.abs(cache.PhiP @ u) ** 2
    avg = float(np.real(np.vdot(u, cache.R @ u)))
    if avg <= 0:
        raise ValueError("zero average power")
    peak = float(p.max())
    return PaprReport(10 * np.log10(peak / avg), peak, avg)


def papr_samples(samples):
    """PAPR in dB of a block of (oversampled) time samples."""
    p = np.abs(check_complex_vector(samples, name="samples")) ** 2
    avg = p.mean()
    if avg <= 0:
        raise ValueError("zero average power")
    return float(10 * np.log10(p.max() / avg))


def ccdf(papr_samples_db, thresholds_db):
    """Empirical ``Pr(PAPR > γ)`` at each threshold."""
    x = np.asarray(papr_samples_db, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("ccdf needs at least one sample")
    g = np.asarray(thresholds_db, dtype=float)
    xs = np.sort(x)
    return 1.0 - np.searchsorted(xs, g, side="right") / x.size


def isl_db_vs_baseline(isl, baseline_isl):
    """ISL reduction in dB relative to a baseline value (positive is better)."""
    return float(10 * np.log10(baseline_isl / isl))
