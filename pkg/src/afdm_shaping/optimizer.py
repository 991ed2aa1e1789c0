"""JIPD-MM waveform design loop.

Each iteration forms the linear surrogate coefficient of the active objective
terms (ISL, PAPR penalty, negative square penalty), takes the pre-projection
point, projects the data-subcarrier phases onto their convex hulls and
rescales the reserved entries onto the energy sphere.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DesignVector
from .metrics import QuadFormCache, papr
from .surrogates import (
    initial_peak_bound,
    isl_gradient,
    isl_linear_coeff,
    papr_linear_coeff,
    snap_discrete,
    update_iterate,
    update_tP,
)

logger = logging.getLogger(__name__)

MODES = ("af_shape", "papr_min", "joint")
VARIABLE_SETS = ("rcs_only", "rcs_plus_prechirp")
TRACE_FIELDS = ("iter", "isl", "papr_db", "rho", "omega", "t_p", "objective")


@dataclass
class OptimizerOptions:
    """Settings of :func:`run_jipd_mm`.

    Parameters
    ----------
    mode : {"af_shape", "papr_min", "joint"}
        Objective terms: ISL only, PAPR only (target 0 dB) or both.  In
        ``papr_min`` the returned design is the snapped iterate with the
        lowest PAPR, the starting design included.
    variable_set : {"rcs_only", "rcs_plus_prechirp"}
        Whether the data-subcarrier pre-chirp phases are optimized.
    gamma_db : float
        PAPR target ``Γ`` in joint mode.
    ell : int
        Even moment order of the peak approximation.
    max_iter : int
        Iteration cap ``r_max``.
    nsp_start : int
        First iteration with the negative square penalty active.
    stop_tol : float
        Relative objective change that ends the run.
    step : {"auto", "majorizer", "backtracking"}
        ``"majorizer"`` uses the closed-form eigenvalue bounds as curvature,
        ``"backtracking"`` halves/doubles the curvature so that the merit
        function never increases.  ``"auto"`` picks the majorizer for
        ``af_shape`` and backtracking otherwise.
    acceleration : {"auto", True, False}
        Squared-extrapolation wrapper around the base update; ``"auto"``
        enables it in the modes that carry the ISL term.
    isl_bound : {"gram", "trace"}
        Bound on the lifted ISL quartic.
    moment_budget : {"peak", "mean"}
        ``"peak"`` sets the moment target to ``Γ_p^ℓ`` so that meeting it
        bounds the peak; ``"mean"`` uses ``N L_P Γ_p^ℓ``.
    rho0, rho_span, rho_up, rho_down, rho_freeze
        Penalty continuation: relative weight start, range factor, growth when
        infeasible, decay when feasible, freeze count.
    omega0, omega_growth, omega_max
        NSP weight relative to the curvature: start, per-iteration growth and
        cap.  ``None`` selects mode-dependent defaults.
    polish_iter : int
        Extra RCS-only iterations after snapping when the joint-mode PAPR
        target is violated.
    max_backtrack : int
        Cap on curvature doublings per step and on extrapolation halvings.
    patience : int
        Consecutive small-change iterations required to stop.
    """

    mode: str = "af_shape"
    variable_set: str = "rcs_plus_prechirp"
    gamma_db: float = 0.0
    ell: int = 16
    max_iter: int = 600
    nsp_start: int = 0
    stop_tol: float = 1e-4
    step: str = "auto"
    acceleration: object = "auto"
    isl_bound: str = "gram"
    moment_budget: str = "peak"
    rho0: float = 1e-2
    rho_span: float = 1e4
    rho_up: float = 1.5
    rho_down: float = 1.2
    rho_freeze: int = 20
    omega0: float | None = None
    omega_growth: float | None = None
    omega_max: float | None = None
    polish_iter: int = 200
    max_backtrack: int = 60
    patience: int = 5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.variable_set not in VARIABLE_SETS:
            raise ValueError(f"variable_set must be one of {VARIABLE_SETS}, got {self.variable_set!r}")
        if self.ell < 2 or int(self.ell) != self.ell or self.ell % 2:
            raise ValueError("ell must be an even integer >= 2")
        if self.mode == "joint" and self.gamma_db <= 0:
            raise ValueError("joint mode needs a positive PAPR target")
        if self.step not in ("auto", "majorizer", "backtracking"):
            raise ValueError(f"unknown step policy {self.step!r}")
        if self.acceleration not in ("auto", True, False):
            raise ValueError("acceleration must be 'auto', True or False")
        if self.moment_budget not in ("peak", "mean"):
            raise ValueError("moment_budget must be 'peak' or 'mean'")
        if self.max_iter < 0 or self.nsp_start < 0:
            raise ValueError("iteration counts must be nonnegative")
        for name in ("rho0", "rho_span", "rho_up", "rho_down"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def step_policy(self):
        if self.step != "auto":
            return self.step
        return "majorizer" if self.mode == "af_shape" else "backtracking"

    @property
    def accelerate(self):
        if self.acceleration == "auto":
            return self.mode in ("af_shape", "joint")
        return bool(self.acceleration)

    @property
    def omega_schedule(self):
        if self.mode == "af_shape":
            defaults = (3e-3, 1.002, 0.1)
        else:
            defaults = (3e-3, 1.01, 3.0)
        given = (self.omega0, self.omega_growth, self.omega_max)
        return tuple(d if g is None else g for g, d in zip(given, defaults))

    def as_dict(self):
        return asdict(self)


@dataclass
class OptimizerState:
    """Mutable per-run quantities."""

    u: np.ndarray
    iteration: int = 0
    rho: float = 0.0
    rho_rel: float = 0.0
    omega: float = 0.0
    t_p: float = float("nan")
    curvature: float = float("nan")
    feasible_streak: int = 0
    rho_frozen: bool = False
    small_steps: int = 0
    objective: list = field(default_factory=list)


@dataclass
class DesignResult:
    """Outcome of one design run.

    ``trace`` holds one row of :data:`TRACE_FIELDS` per iteration, preceded by
    a row for the starting point and followed by a row for the returned
    (snapped and polished) design.  Those two rows carry NaN in the
    continuation columns.
    """

    design: DesignVector
    trace: list
    iterations: int
    converged: bool
    feasible: bool
    isl_initial: float
    isl_final: float
    papr_initial_db: float
    papr_final_db: float
    options: OptimizerOptions

    @property
    def isl_reduction_db(self):
        return float(10 * np.log10(self.isl_initial / self.isl_final))

    def trace_array(self):
        return np.array(self.trace, dtype=float).reshape(-1, len(TRACE_FIELDS))


class _Objective:
    """Merit function ``J/2 + ρ P(u) - ω Σ_D |u|²`` and its gradient."""

    def __init__(self, cfg, cache, opts, u0):
        self.cfg = cfg
        self.cache = cache
        self.opts = opts
        self.D = cfg.partition.D
        self.use_isl = opts.mode in ("af_shape", "joint")
        self.use_papr = opts.mode in ("papr_min", "joint")
        gamma_db = 0.0 if opts.mode == "papr_min" else opts.gamma_db
        self.gamma_db = gamma_db
        avg0 = float(np.real(np.vdot(u0, cache.R @ u0)))
        self.gamma_p = 10 ** (gamma_db / 10) * avg0
        n_lp = cfg.n_subcarriers * cfg.oversampling
        self.gamma_ell = 1.0 if opts.moment_budget == "peak" else float(n_lp)

    def moment(self, u):
        y = self.cache.PhiP @ u
        p = np.abs(y) ** 2 / self.gamma_p
        return float(np.sum(p**self.opts.ell)), y, p

    def penalty(self, u):
        m = self.moment(u)[0]
        return max(m - self.gamma_ell, 0.0) ** 2

    def isl(self, u):
        return float(np.sum(self.cache.weights * np.abs(self.cache.ambiguity_values(u)) ** 2))

    def merit(self, u, rho, omega):
        val = 0.0
        if self.use_isl:
            val += 0.5 * self.isl(u)
        if self.use_papr:
            val += rho * self.penalty(u)
        if omega:
            val -= omega * float(np.sum(np.abs(u[self.D]) ** 2))
        return val

    def parts(self, u, t_p, with_bounds):
        """Gradients and (optionally) majorizer curvatures of the active terms."""
        out = {"isl_grad": None, "isl_curv": 0.0, "papr_grad": None, "papr_curv": 0.0}
        if self.use_isl:
            if with_bounds:
                sur = isl_linear_coeff(u, self.cache, self.opts.isl_bound)
                out["isl_grad"], out["isl_curv"] = sur.gradient, sur.curvature
            else:
                out["isl_grad"] = isl_gradient(u, self.cache)[2]
        if self.use_papr:
            m = self.moment(u)[0]
            if m <= self.gamma_ell:
                out["papr_grad"] = np.zeros_like(u)
            else:
                sur = papr_linear_coeff(u, self.cache, t_p, self.gamma_p, self.gamma_ell,
                                        self.opts.ell, bounds=with_bounds)
                out["papr_grad"] = sur.gradient
                out["papr_curv"] = sur.curvature if with_bounds else 0.0
        return out


def _sup(x):
    return float(np.max(np.abs(x))) if x is not None and len(x) else 0.0


def run_jipd_mm(cfg, laz, init, options=None, cache=None):
    """Design one AFDM block.

    Parameters
    ----------
    cfg : AfdmConfig
        Configuration including the data/reserved partition.
    laz : LazSpec
    init : DesignVector
        Conventional-AFDM starting point carrying the data realization.
    options : OptimizerOptions, optional
    cache : QuadFormCache, optional
        Reused when already built for ``init.b``.

    Returns
    -------
    DesignResult
    """
    opts = OptimizerOptions() if options is None else options
    if init.n_subcarriers != cfg.n_subcarriers:
        raise ValueError("initial design does not match the configuration")
    if not np.array_equal(init.partition.R, cfg.partition.R):
        raise ValueError("initial design uses a different reserved set than the configuration")
    if opts.variable_set == "rcs_only" and cfg.partition.n_reserved == 0:
        raise ValueError("rcs_only needs at least one reserved subcarrier")
    if cache is None:
        cache = QuadFormCache(cfg, laz, init.b)
    u0 = init.u.copy()
    obj = _Objective(cfg, cache, opts, u0)
    policy = opts.step_policy
    w_rel0, w_growth, w_max = opts.omega_schedule
    joint_vars = opts.variable_set == "rcs_plus_prechirp" and cfg.partition.n_data > 0
    fixed = u0 if opts.variable_set == "rcs_only" else None

    state = OptimizerState(u=u0.copy(), rho_rel=opts.rho0 if opts.mode == "joint" else 1.0)
    isl0 = obj.isl(u0)
    papr0 = papr(u0, cache).db
    trace = []

    def peak(u):
        return float(np.max(np.abs(cache.PhiP @ u) ** 2))

    def base_step(u, rho, omega, grad, curv_bound):
        """One projected step; returns (new u, curvature used)."""
        m0 = obj.merit(u, rho, omega)
        if policy == "majorizer":
            kappa = curv_bound
            new = update_iterate(u, grad - kappa * u, cfg, opts.variable_set, kappa, fixed)
            return new, kappa
        kappa = state.curvature / 2 if np.isfinite(state.curvature) else 10 * max(_sup(grad), 1e-300)
        kappa = max(kappa, 1e-300)
        for _ in range(opts.max_backtrack):
            new = update_iterate(u, grad - kappa * u, cfg, opts.variable_set, kappa, fixed)
            if obj.merit(new, rho, omega) <= m0 + 1e-13 * abs(m0):
                return new, kappa
            kappa *= 2
        return u.copy(), kappa

    def assemble(u, rho, omega, t_p):
        parts = obj.parts(u, t_p, with_bounds=(policy == "majorizer"))
        grad = np.zeros_like(u)
        curv = 0.0
        if parts["isl_grad"] is not None:
            grad += parts["isl_grad"]
            curv += parts["isl_curv"]
        if parts["papr_grad"] is not None:
            grad += rho * parts["papr_grad"]
            curv += rho * parts["papr_curv"]
        if omega:
            grad[obj.D] -= omega * u[obj.D]
        return grad, curv, parts

    def full_step(u, rho, omega, t_p):
        grad, curv, _ = assemble(u, rho, omega, t_p)
        return base_step(u, rho, omega, grad, curv)

    def majorizer_step(u, rho, omega):
        """Majorizer step with the adaptive peak bound retry rule."""
        t_p = initial_peak_bound(peak(u))
        for _ in range(50):
            new, kappa = full_step(u, rho, omega, t_p)
            if not obj.use_papr:
                return new, kappa, t_p
            t_p, again = update_tP(t_p, peak(new))
            if not again:
                return new, kappa, t_p
        logger.warning("peak bound retries exhausted at iteration %d", state.iteration)
        return new, kappa, t_p

    def one_update(u, rho, omega):
        if policy == "majorizer":
            return majorizer_step(u, rho, omega)
        t_p = initial_peak_bound(peak(u))
        new, kappa = full_step(u, rho, omega, t_p)
        return new, kappa, t_p

    def record(r, u, rho, omega, t_p, merit):
        trace.append((r, obj.isl(u), papr(u, cache).db, rho, omega, t_p, merit))

    def iterate(u, r, omega, rho, variable_fixed=False):
        """Base update, optionally wrapped with squared extrapolation."""
        u1, kappa, t_p = one_update(u, rho, omega)
        state.curvature = kappa
        if not opts.accelerate:
            return u1, t_p
        u2, kappa2, _ = one_update(u1, rho, omega)
        state.curvature = kappa2
        r1 = u1 - u
        v = u2 - u1 - r1
        nv = np.linalg.norm(v)
        if nv == 0:
            return u2, t_p
        alpha = -np.linalg.norm(r1) / nv
        m_ref = obj.merit(u2, rho, omega)
        for _ in range(opts.max_backtrack):
            if alpha >= -1:
                return u2, t_p
            cand = u - 2 * alpha * r1 + alpha**2 * v
            cand = update_iterate(u, -cand, cfg, opts.variable_set, 1.0, fixed)
            if obj.merit(cand, rho, omega) <= m_ref:
                return cand, t_p
            alpha = (alpha - 1) / 2
        return u2, t_p

    def rho_value(u):
        if not obj.use_papr:
            return 0.0
        if not obj.use_isl:
            return 1.0
        isl_g = isl_gradient(u, cache)[2]
        m, y, p = obj.moment(u)
        if m <= obj.gamma_ell:
            return state.rho if state.rho > 0 else opts.rho0
        pg = papr_linear_coeff(u, cache, 1.1 * obj.gamma_p * p.max() + 1e-300, obj.gamma_p,
                               obj.gamma_ell, opts.ell, bounds=False).gradient
        return state.rho_rel * _sup(isl_g) / max(_sup(pg), 1e-300)

    def update_rho(u):
        if opts.mode != "joint" or state.rho_frozen:
            return
        lo, hi = opts.rho0 / opts.rho_span, opts.rho0 * opts.rho_span
        if papr(u, cache).db > obj.gamma_db:
            state.rho_rel = min(state.rho_rel * opts.rho_up, hi)
            state.feasible_streak = 0
        else:
            state.rho_rel = max(state.rho_rel / opts.rho_down, lo)
            state.feasible_streak += 1
            if state.feasible_streak >= opts.rho_freeze:
                state.rho_frozen = True

    u = state.u
    prev_merit = None
    converged = False
    r = 0
    nan = float("nan")
    trace.append((0, isl0, papr0, nan, nan, nan, nan))
    # papr_min returns the best snapped iterate, so stopping early never
    # hands back a block worse than the starting one
    keep_best = opts.mode == "papr_min"
    best = (papr0, init.u.copy(), init.prechirp_index.copy())
    for r in range(opts.max_iter):
        state.iteration = r
        rho = rho_value(u)
        state.rho = rho
        nsp_on = joint_vars and r >= opts.nsp_start
        if nsp_on:
            w_rel = min(w_rel0 * w_growth ** (r - opts.nsp_start), w_max)
            curv_ref = state.curvature
            if not np.isfinite(curv_ref):
                grad, curv, _ = assemble(u, rho, 0.0, initial_peak_bound(peak(u)))
                curv_ref = curv if policy == "majorizer" else 10 * max(_sup(grad), 1e-300)
            omega = w_rel * curv_ref
        else:
            w_rel = 0.0
            omega = 0.0
        state.omega = omega
        u_new, t_p = iterate(u, r, omega, rho)
        state.t_p = t_p
        merit = obj.merit(u_new, rho, omega)
        update_rho(u_new)
        u = u_new
        record(r + 1, u, rho, omega, t_p, merit)
        if keep_best:
            cand, cand_idx = snap_discrete(u, cfg) if joint_vars else (u, init.prechirp_index)
            cand_papr = papr(cand, cache).db
            if cand_papr < best[0]:
                best = (cand_papr, cand.copy(), cand_idx.copy())
        if prev_merit is not None:
            change = abs(merit - prev_merit) / max(abs(prev_merit), 1e-300)
            state.small_steps = state.small_steps + 1 if change < opts.stop_tol else 0
        prev_merit = merit
        schedules_done = (not nsp_on or w_rel >= w_max) and (opts.mode != "joint" or state.rho_frozen)
        if state.small_steps >= opts.patience and schedules_done:
            converged = True
            break
    iterations = r + 1 if opts.max_iter else 0

    index = init.prechirp_index.copy()
    if keep_best:
        _, u, index = best
    elif joint_vars:
        u, index = snap_discrete(u, cfg)
    if opts.mode == "joint" and papr(u, cache).db > obj.gamma_db and opts.polish_iter:
        u = _polish(cfg, obj, u, opts, state, cache)
    final = DesignVector(u, init.b.copy(), index, cfg.partition)
    papr_final = papr(u, cache).db
    feasible = True
    if opts.mode == "joint":
        feasible = papr_final <= obj.gamma_db + 0.05
    # closing row describes the returned (snapped, polished) design
    trace.append((iterations + 1, obj.isl(u), papr_final, nan, nan, nan, nan))
    return DesignResult(final, trace, iterations, converged, feasible, isl0, obj.isl(u), papr0,
                        papr_final, opts)


def _polish(cfg, obj, u, opts, state, cache):
    """RCS-only backtracking steps with the D phases frozen at their vertices."""
    fixed = u.copy()
    rho_rel = max(state.rho_rel, opts.rho0)
    kappa = np.nan
    for _ in range(opts.polish_iter):
        if papr(u, cache).db <= obj.gamma_db:
            break
        isl_g = isl_gradient(u, cache)[2]
        m, y, p = obj.moment(u)
        if m > obj.gamma_ell:
            pg = papr_linear_coeff(u, cache, 1.1 * obj.gamma_p * p.max(), obj.gamma_p, obj.gamma_ell,
                                   opts.ell, bounds=False).gradient
        else:
            pg = np.zeros_like(u)
        rho = rho_rel * _sup(isl_g) / max(_sup(pg), 1e-300)
        grad = isl_g + rho * pg
        m0 = obj.merit(u, rho, 0.0)
        kappa = kappa / 2 if np.isfinite(kappa) else 10 * max(_sup(grad), 1e-300)
        for _ in range(opts.max_backtrack):
            new = update_iterate(u, grad - kappa * u, cfg, "rcs_only", kappa, fixed)
            if obj.merit(new, rho, 0.0) <= m0:
                break
            kappa *= 2
        else:
            new = u
        u = new
        rho_rel = min(rho_rel * opts.rho_up, opts.rho0 * opts.rho_span)
    return u
