"""scikit-learn style front end: data symbols in, designed waveforms out."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_array, check_positive, check_random_state
from .baselines import gps_sweep
from .core import AfdmConfig, design_from_symbols, synthesize, synthesize_oversampled
from .metrics import LazSpec, build_quadform_cache, papr, weighted_isl
from .optimizer import MODES, VARIABLE_SETS, OptimizerOptions, run_jipd_mm

SOURCES = ("conventional", "gps") + MODES


class AfdmWaveformDesigner(TransformerMixin, BaseEstimator):
    """Design one AFDM block per row of data symbols.

    Parameters
    ----------
    n_subcarriers : int
    reserved_ratio : float
        Fraction of reserved subcarriers.
    placement : {"scattered", "comb"}
        Reserved-set layout, see ``SubcarrierPartition.make``.
    source : {"conventional", "gps", "af_shape", "papr_min", "joint"}
        Waveform source.  The last three run the MM design loop in that mode.
    variable_set : {"rcs_only", "rcs_plus_prechirp"}
    gamma_db : float
        PAPR target of the joint mode.
    max_iter : int
    tau_max, mu_min, mu_max, n_mu
        Low-ambiguity zone.
    oversampling : int
        ``L_P``.
    output : {"samples", "oversampled", "symbols"}
        What :meth:`transform` returns per row: the ``N`` time samples, the
        ``N L_P`` oversampled samples or the DAFT-domain vector ``b ⊙ u``.
    random_state : int or None
        Seeds the reserved-subcarrier initialization.

    Attributes
    ----------
    config_ : AfdmConfig
    laz_ : LazSpec
    n_features_in_ : int
        Number of data subcarriers ``|D|``.
    results_ : list
        One entry per transformed row: a ``DesignResult`` for optimized
        sources, the ``DesignVector`` otherwise.
    """

    def __init__(self, n_subcarriers=128, reserved_ratio=0.2, source="af_shape",
                 variable_set="rcs_plus_prechirp", gamma_db=0.0, max_iter=600, tau_max=8,
                 mu_min=-4.0, mu_max=4.0, n_mu=9, oversampling=4, output="samples",
                 placement="scattered", random_state=None):
        self.n_subcarriers = n_subcarriers
        self.reserved_ratio = reserved_ratio
        self.source = source
        self.variable_set = variable_set
        self.gamma_db = gamma_db
        self.max_iter = max_iter
        self.tau_max = tau_max
        self.mu_min = mu_min
        self.mu_max = mu_max
        self.n_mu = n_mu
        self.oversampling = oversampling
        self.output = output
        self.placement = placement
        self.random_state = random_state

    def _options(self):
        if self.source not in MODES:
            return None
        return OptimizerOptions(mode=self.source, variable_set=self.variable_set,
                                gamma_db=self.gamma_db, max_iter=self.max_iter)

    def fit(self, X=None, y=None):
        """Validate the parameters and build the static configuration.

        ``X`` is optional; when given its column count must equal ``|D|``.
        """
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.variable_set not in VARIABLE_SETS:
            raise ValueError(f"variable_set must be one of {VARIABLE_SETS}")
        if self.output not in ("samples", "oversampled", "symbols"):
            raise ValueError(f"unknown output {self.output!r}")
        if not 0 <= self.reserved_ratio < 1:
            raise ValueError("reserved_ratio must lie in [0, 1)")
        check_positive(self.max_iter, "max_iter", strict=False)
        self._options()
        self.config_ = AfdmConfig.create(self.n_subcarriers, self.reserved_ratio, self.placement,
                                         oversampling=self.oversampling)
        self.laz_ = LazSpec(self.tau_max, self.mu_min, self.mu_max, self.n_mu)
        self.n_features_in_ = self.config_.partition.n_data
        if X is not None:
            check_complex_array(X, self.n_features_in_)
        return self

    def design(self, X):
        """Run the configured source on each row and return the raw results."""
        check_is_fitted(self, "config_")
        X = check_complex_array(X, self.n_features_in_)
        cfg = self.config_
        rng = check_random_state(self.random_state)
        opts = self._options()
        out = []
        for row in X:
            n_r = cfg.partition.n_reserved
            r = np.exp(2j * np.pi * rng.random(n_r)) if n_r else None
            init = design_from_symbols(cfg, row, r)
            if opts is not None:
                out.append(run_jipd_mm(cfg, self.laz_, init, opts))
            elif self.source == "gps":
                out.append(gps_sweep(cfg, init))
            else:
                out.append(init)
        return out

    def transform(self, X):
        self.results_ = self.design(X)
        cfg = self.config_
        rows = []
        for res in self.results_:
            d = getattr(res, "design", res)
            if self.output == "samples":
                rows.append(synthesize(cfg, d))
            elif self.output == "oversampled":
                rows.append(synthesize_oversampled(cfg, d))
            else:
                rows.append(d.effective_symbols)
        return np.vstack(rows)

    def score(self, X, y=None):
        """Negative mean weighted ISL (dB) of the designed blocks."""
        check_is_fitted(self, "config_")
        vals = []
        for res in self.design(X):
            d = getattr(res, "design", res)
            cache = build_quadform_cache(self.config_, self.laz_, d.b)
            vals.append(10 * np.log10(weighted_isl(d.u, cache)))
        return -float(np.mean(vals))

    def papr_db(self):
        """PAPR of each block from the last :meth:`transform` call."""
        check_is_fitted(self, "results_")
        vals = []
        for res in self.results_:
            d = getattr(res, "design", res)
            vals.append(papr(d.u, build_quadform_cache(self.config_, self.laz_, d.b)).db)
        return np.array(vals)
