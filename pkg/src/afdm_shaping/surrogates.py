"""Building blocks of the JIPD-MM iteration.

Majorization lemmas, the linear ISL and PAPR surrogates, the negative square
penalty, convex-hull projection and the projection/normalization update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from ._validation import check_complex_vector


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------
def lemma1_check(Y, Z, q0, q, tol=1e-10):
    """Evaluate both sides of the quadratic majorization lemma.

    For Hermitian ``Z ⪰ Y``::

        q^H Y q <= q^H Z q + 2 Re{q^H (Y - Z) q0} + q0^H (Z - Y) q0

    with equality at ``q = q0``.

    Returns
    -------
    lhs, rhs : float

    Raises
    ------
    ValueError
        If ``Z - Y`` is not positive semidefinite.
    """
    Y = np.asarray(Y, dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    diff = Z - Y
    scale = max(1.0, np.abs(Z).max(), np.abs(Y).max())
    if np.linalg.eigvalsh((diff + diff.conj().T) / 2)[0] < -tol * scale:
        raise ValueError("Z - Y is not positive semidefinite")
    q = np.asarray(q, dtype=complex)
    q0 = np.asarray(q0, dtype=complex)
    lhs = np.vdot(q, Y @ q).real
    rhs = np.vdot(q, Z @ q).real + 2 * np.vdot(q, (Y - Z) @ q0).real + np.vdot(q0, diff @ q0).real
    return float(lhs), float(rhs)


def lemma2_coeffs(x0, t, ell):
    """Quadratic majorant of ``x**ell`` on ``[0, t]`` touching at ``x0``.

    Parameters
    ----------
    x0 : float or ndarray
        Expansion points in ``[0, t)``.
    t : float
        Upper end of the interval.
    ell : int
        Power, at least 2.

    Returns
    -------
    alpha, beta, gamma : ndarray
        Coefficients of ``alpha x² + beta x + gamma``.
    """
    if ell < 2:
        raise ValueError("ell must be >= 2")
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < 0):
        raise ValueError("x0 must be nonnegative")
    if np.any(x0 >= t):
        raise ValueError("x0 must lie strictly below t")
    gap = t - x0
    num = t**ell - x0**ell - ell * x0 ** (ell - 1) * gap
    alpha = num / np.maximum(gap**2, 1e-30)
    if ell == 2:
        alpha = np.ones_like(x0)
    beta = ell * x0 ** (ell - 1) - 2 * alpha * x0
    gamma = alpha * x0**2 - (ell - 1) * x0**ell
    return alpha, beta, gamma


# ---------------------------------------------------------------------------
# ISL surrogate
# ---------------------------------------------------------------------------
@dataclass
class IslSurrogate:
    """Linear ISL surrogate at one iterate.

    ``d = gradient - curvature * u``, where ``gradient = H u`` with ``H`` the
    Hermitian part of ``Σ w ζ* C`` (half the Wirtinger gradient of the ISL)
    and ``curvature = λ_J ||u||² + λ_Q``.
    """

    d: np.ndarray
    gradient: np.ndarray
    curvature: float
    lam_J: float
    lam_Q: float
    zeta: np.ndarray
    value: float


def _shift_indices(n, taus):
    k = np.arange(n)
    plus = (k[None, :] + np.asarray(taus)[:, None]) % n
    minus = (k[None, :] - np.asarray(taus)[:, None]) % n
    return plus, minus


def isl_gradient(u, cache):
    """ISL value, ambiguity values, ``H u`` and the banded-kernel magnitudes."""
    n = cache.n
    taus = cache.laz.taus
    s = cache.synthesize(u)
    plus, minus = _shift_indices(n, taus)
    zeta = (np.conj(s[plus]) * s[None, :]) @ cache.E.T
    W = cache.weights
    value = float(np.sum(W * np.abs(zeta) ** 2))
    h = (W * np.conj(zeta)) @ cache.E
    hs = h * s[None, :]
    Ks = np.take_along_axis(hs, minus, axis=1).sum(0)
    KHs = (np.conj(h) * s[plus]).sum(0)
    Hu = 0.5 * (cache.adjoint(Ks) + cache.adjoint(KHs))
    return value, zeta, Hu, h, minus


def isl_linear_coeff(u, cache, bound="gram"):
    """Linear surrogate coefficient ``d`` of the weighted ISL at ``u``.

    Parameters
    ----------
    u : ndarray, shape (N,)
    cache : QuadFormCache
    bound : {"gram", "trace"}
        Bound used for the lifted quartic (see :meth:`QuadFormCache.isl_bound`).

    Returns
    -------
    IslSurrogate
    """
    u = check_complex_vector(u, cache.n, name="u")
    value, zeta, Hu, h, minus = isl_gradient(u, cache)
    lam_J = cache.isl_bound(bound)
    a = np.abs(h)
    col = a.sum(0).max()
    row = np.take_along_axis(a, minus, axis=1).sum(0).max()
    lam_Q = float(np.sqrt(col * row) * np.max(np.abs(cache.b)) ** 2)
    energy = np.vdot(u, u).real
    curvature = lam_J * energy + lam_Q
    return IslSurrogate(Hu - curvature * u, Hu, curvature, lam_J, lam_Q, zeta, value)


# ---------------------------------------------------------------------------
# PAPR surrogate
# ---------------------------------------------------------------------------
def initial_peak_bound(peak, factor=1.1):
    """Peak bound ``t_P`` set at the start of an iteration."""
    return factor * peak


def update_tP(t_P, new_peak, factor=1.1):
    """Enlarge ``t_P`` when the updated iterate exceeds it.

    Returns
    -------
    t_P : float
    recompute : bool
        Whether the iteration must be redone with the enlarged bound.
    """
    if new_peak > t_P:
        return factor * t_P, True
    return t_P, False


@dataclass
class PaprSurrogate:
    """Linear surrogate of the PAPR penalty ``(u^H Q_P1 u)²`` at one iterate.

    Powers are normalized by the peak threshold ``Γ_p`` so that the moment
    target is ``Γ_ℓ / Γ_p^ℓ``.  ``c = gradient - curvature * u`` where
    ``gradient = 2 ζ_P Σ_n ℓ p_n^{ℓ-1} G_n u`` coincides with the Wirtinger
    gradient of ``(M(u) - Γ_ℓ)²`` at ``u``.
    """

    c: np.ndarray
    gradient: np.ndarray
    curvature: float
    zeta: float
    moment: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    lam_L: float
    lam_P2: float
    lam_P3: float
    E1: float
    E2: float
    E3: float
    C0: float
    C1: float


def papr_linear_coeff(u, cache, t_P, gamma_p, gamma_ell, ell=16, bounds=True):
    """Linear surrogate coefficient ``c`` of the PAPR penalty at ``u``.

    Parameters
    ----------
    u : ndarray, shape (N,)
    cache : QuadFormCache
    t_P : float
        Peak bound in raw power units; must exceed every ``p_n(u)``.
    gamma_p : float
        Peak power threshold ``Γ_p`` (raw units).
    gamma_ell : float
        Moment target in normalized units (``Σ (p_n/Γ_p)^ℓ`` target).
    ell : int
    bounds : bool
        Compute the eigenvalue bounds (``λ_L``, ``λ_P2``, ``λ_P3``).  Without
        them ``curvature`` is ``nan`` and ``c`` equals ``gradient``.

    Raises
    ------
    ValueError
        If some ``p_n(u) >= t_P``; the caller should enlarge ``t_P``.
    """
    u = check_complex_vector(u, cache.n, name="u")
    n = cache.n
    y = cache.PhiP @ u / np.sqrt(gamma_p)
    p = np.abs(y) ** 2
    t = t_P / gamma_p
    alpha, beta, gam = lemma2_coeffs(p, t, ell)
    a = ell * p ** (ell - 1)
    moment = float(np.sum(p**ell))
    Ku = cache.PhiP.conj().T @ (a * y) / np.sqrt(gamma_p)
    energy = np.vdot(u, u).real
    rn = cache.row_norms / gamma_p
    shift = beta / (2 * alpha)
    E1 = gamma_ell - gam.sum()
    E2 = E1 + np.sum(beta**2 / (4 * alpha))
    if bounds:
        cI = shift / n
        lam_L = float(np.sum(alpha * (rn**2 + 2 * cI * rn + cI**2 * n)))
    else:
        lam_L = 0.0
    C0 = 2 * lam_L * energy**2 - np.sum(alpha * (p + shift) ** 2)
    C1 = C0 + np.sum(beta * (p + shift))
    E3 = E2 - C1
    # zeta = u^H Q_P1 u with Q_P1 = Σ a G - 2 λ_L u u^H - E3/N I
    zeta = float(np.sum(a * p) - 2 * lam_L * energy**2 - E3 * energy / n)
    gradient = 2 * zeta * Ku
    if not bounds:
        return PaprSurrogate(gradient.copy(), gradient, np.nan, zeta, moment, alpha, beta, gam,
                             lam_L, np.nan, np.nan, E1, E2, E3, C0, C1)
    # ||Q_P1||_F² from traces of X = Σ a G, B = 2 λ_L u u^H, c I
    X2 = float(a @ cache.pgram_abs2() @ a) / gamma_p**2
    trX = float(np.sum(a * rn))
    uXu = float(np.sum(a * p))
    B = 2 * lam_L
    cI = E3 / n
    lam_P2 = (X2 + B**2 * energy**2 + cI**2 * n - 2 * B * uXu - 2 * cI * trX + 2 * cI * B * energy)
    lam_P2 = float(max(lam_P2, 0.0))
    # Gershgorin on Σ a G, then drop the negative semidefinite rank-one terms
    K = (cache.PhiP.conj().T * a) @ cache.PhiP / gamma_p
    gersh = float(np.abs(K).sum(1).max())
    if zeta >= 0:
        lam_P3 = 2 * zeta * max(gersh - cI, 0.0)
    else:
        lam_P3 = 2 * abs(zeta) * (B * energy + cI)
    lam_P3 = float(max(lam_P3, 0.0))
    curvature = 2 * zeta * (B * energy + cI) + 2 * lam_P2 * energy + lam_P3
    return PaprSurrogate(gradient - curvature * u, gradient, float(curvature), zeta, moment, alpha, beta,
                         gam, lam_L, lam_P2, lam_P3, E1, E2, E3, C0, C1)


# ---------------------------------------------------------------------------
# discrete phases
# ---------------------------------------------------------------------------
def nsp_coeff(u, partition):
    """Negative-square-penalty coefficient: ``-u`` on D, zero on R."""
    u = check_complex_vector(u, partition.n_subcarriers, name="u")
    g = np.zeros_like(u)
    D = partition.D
    g[D] = -u[D]
    return g


def _hull_vertices(alphabet):
    pts = np.unique(np.round(np.asarray(alphabet, dtype=complex), 15))
    if len(pts) <= 2:
        return pts
    if np.allclose(np.abs(pts), np.abs(pts[0])):
        return pts[np.argsort(np.angle(pts))]
    xy = np.column_stack([pts.real, pts.imag])
    hull = ConvexHull(xy)
    return pts[hull.vertices]  # counter-clockwise in 2-D


def _project_segment(p, a, b):
    e = b - a
    t = np.clip(np.real(np.conj(e) * (p - a)) / np.abs(e) ** 2, 0.0, 1.0)
    return a + t * e


def project_convex_hull(p, alphabet):
    """Euclidean projection onto the convex polygon spanned by ``alphabet``.

    Parameters
    ----------
    p : complex or ndarray of complex
    alphabet : array_like of complex
        Polygon vertices (any order).  A singleton returns that point.
    """
    p_arr = np.asarray(p, dtype=complex)
    v = _hull_vertices(alphabet)
    if len(v) == 1:
        out = np.full(p_arr.shape, v[0])
    elif len(v) == 2:
        out = _project_segment(p_arr, v[0], v[1])
    else:
        a = v
        b = np.roll(v, -1)
        flat = p_arr.reshape(-1)
        e = (b - a)[None, :]
        cross = np.imag(np.conj(e) * (flat[:, None] - a[None, :]))
        inside = np.all(cross >= -1e-15, axis=1)
        feet = _project_segment(flat[:, None], a[None, :], b[None, :])
        best = feet[np.arange(len(flat)), np.argmin(np.abs(feet - flat[:, None]), axis=1)]
        out = np.where(inside, flat, best).reshape(p_arr.shape)
    return out if np.ndim(p) else complex(out)


def update_iterate(u, g, cfg, variable_set="rcs_plus_prechirp", curvature=1.0, fixed=None):
    """Projection/normalization update from the linear coefficient ``g``.

    The pre-projection point is ``-g / curvature``; D entries are projected
    onto their convex hulls (or held at ``fixed``) and the R entries are
    scaled so that ``||u||² = N``.

    Parameters
    ----------
    u : ndarray
        Current iterate (used for degenerate cases).
    g : ndarray
        Total linear coefficient.
    cfg : AfdmConfig
    variable_set : {"rcs_only", "rcs_plus_prechirp"}
    curvature : float
        Positive scale applied to the pre-projection point.
    fixed : ndarray, optional
        Values of the D entries in RCS-only mode (defaults to ``u``).
    """
    part = cfg.partition
    n = cfg.n_subcarriers
    D, R = part.D, part.R
    pre = -np.asarray(g, dtype=complex) / curvature
    new = np.empty(n, dtype=complex)
    if variable_set == "rcs_only":
        new[D] = (u if fixed is None else fixed)[D]
    elif variable_set == "rcs_plus_prechirp":
        new[D] = project_convex_hull(pre[D], cfg.alphabet)
        if len(D) and D[0] == 0:
            new[0] = 1.0
    else:
        raise ValueError(f"unknown variable_set {variable_set!r}")
    d_energy = float(np.sum(np.abs(new[D]) ** 2))
    if len(R) == 0:
        if d_energy > 0:
            new *= np.sqrt(n / d_energy)
        return new
    if d_energy > n:
        new[D] *= np.sqrt(n / d_energy)
        d_energy = float(n)
    r_pre = pre[R]
    r_energy = float(np.sum(np.abs(r_pre) ** 2))
    if r_energy < 1e-15 * n:
        r_pre = u[R]
        r_energy = float(np.sum(np.abs(r_pre) ** 2))
    if r_energy == 0:
        r_pre = np.ones(len(R), dtype=complex)
        r_energy = float(len(R))
    new[R] = np.sqrt((n - d_energy) / r_energy) * r_pre
    return new


def snap_discrete(u, cfg):
    """Replace D entries by their nearest alphabet vertex and renormalize R.

    Returns
    -------
    u_snapped : ndarray
    index : ndarray of int
        Alphabet index per subcarrier (zero on R and at ``m = 0``).
    """
    part = cfg.partition
    n = cfg.n_subcarriers
    D, R = part.D, part.R
    u = check_complex_vector(u, n, name="u").copy()
    verts = cfg.alphabet
    index = np.zeros(n, dtype=int)
    if len(D):
        k = np.argmin(np.abs(u[D][:, None] - verts[None, :]), axis=1)
        index[D] = k
        u[D] = verts[k]
        if D[0] == 0:
            u[0] = 1.0
            index[0] = 0
    if len(R):
        r_energy = float(np.sum(np.abs(u[R]) ** 2))
        target = n - len(D)
        if r_energy > 0:
            u[R] *= np.sqrt(target / r_energy)
        else:
            u[R] = np.sqrt(target / len(R))
    return u, index
