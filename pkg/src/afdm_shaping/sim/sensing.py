"""Matched-filter range-Doppler maps, CA-CFAR and two-target detection Monte Carlo."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.stats import beta as beta_dist

from .._validation import check_complex_vector
from .channel import shift_doppler


def range_doppler_map(s_ref, y, tau_grid, mu_grid):
    """``|(U_{τ,μ} s_ref)^H y|²`` on a delay/Doppler grid.

    Parameters
    ----------
    s_ref : array_like, shape (N,)
        Transmitted block.
    y : array_like, shape (N,)
        Received block.
    tau_grid : array_like of int
    mu_grid : array_like of float

    Returns
    -------
    ndarray, shape (len(tau_grid), len(mu_grid))
    """
    s = check_complex_vector(s_ref, name="s_ref")
    y = check_complex_vector(y, len(s), name="y")
    n = len(s)
    k = np.arange(n)
    taus = np.asarray(tau_grid, dtype=int)
    mus = np.asarray(mu_grid, dtype=float)
    Z = np.conj(s)[None, :] * y[(k[None, :] + taus[:, None]) % n]
    if np.allclose(mus, np.round(mus)):
        # integer Doppler: one inverse FFT per delay row
        full = np.fft.ifft(Z, axis=1) * n
        corr = full[:, np.mod(np.round(mus).astype(int), n)]
    else:
        corr = Z @ np.exp(2j * np.pi * np.outer(k, mus) / n)
    return np.abs(corr) ** 2


@dataclass(frozen=True)
class CfarConfig:
    """Cell-averaging CFAR window.

    Parameters
    ----------
    guard : int
        Guard cells on each side, per dimension.
    train : int
        Training cells beyond the guard band, per dimension.
    pfa : float
        Nominal false-alarm probability.
    """

    guard: int = 2
    train: int = 8
    pfa: float = 1e-3

    def __post_init__(self):
        if self.guard < 0 or self.train < 1:
            raise ValueError("need guard >= 0 and train >= 1")
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")

    @property
    def window(self):
        return 2 * (self.guard + self.train) + 1

    @property
    def n_train(self):
        return self.window**2 - (2 * self.guard + 1) ** 2

    def threshold_factor(self, pfa=None):
        pfa = self.pfa if pfa is None else pfa
        nt = self.n_train
        return nt * (pfa ** (-1.0 / nt) - 1.0)


def cfar_noise_level(rd_map, cfg):
    """Mean of the training cells around every cell (cyclic edges)."""
    m = np.asarray(rd_map, dtype=float)
    if min(m.shape) < cfg.window:
        raise ValueError("CFAR window exceeds the map")
    outer = uniform_filter(m, size=cfg.window, mode="wrap") * cfg.window**2
    g = 2 * cfg.guard + 1
    inner = uniform_filter(m, size=g, mode="wrap") * g**2
    return (outer - inner) / cfg.n_train


def ca_cfar(rd_map, cfg, pfa=None):
    """Boolean detection mask: cell > α · mean(training cells)."""
    level = cfar_noise_level(rd_map, cfg)
    return np.asarray(rd_map) > cfg.threshold_factor(pfa) * level


def clopper_pearson(k, n, level=0.95):
    """Exact binomial confidence interval."""
    a = (1 - level) / 2
    lo = beta_dist.ppf(a, k, n - k + 1) if k > 0 else 0.0
    hi = beta_dist.ppf(1 - a, k + 1, n - k) if k < n else 1.0
    return float(lo), float(hi)


@dataclass
class DetectionScenario:
    """Two-target sensing experiment.

    The strong target sits ``gap_db`` above the weak one.  SNR is the weak
    target's per-sample echo power over the noise variance.  Maps cover every
    cyclic delay and every integer Doppler bin.
    """

    strong_cell: tuple = (16, -1)
    weak_offset: tuple = (3, 2)
    gap_db: float = 10.0
    snr_db: tuple = tuple(range(-20, 1, 2))
    trials: int = 2000
    cfar: CfarConfig = field(default_factory=CfarConfig)
    roc_snr_db: float = -10.0
    roc_pfa: tuple = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
    exclusion: int = 3

    @property
    def weak_cell(self):
        return (self.strong_cell[0] + self.weak_offset[0], self.strong_cell[1] + self.weak_offset[1])


@dataclass
class DetectionResult:
    snr_db: np.ndarray
    pd: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    detections: np.ndarray
    trials: int
    roc_pfa: np.ndarray
    roc_pd: np.ndarray

    def rows(self):
        return np.column_stack([self.snr_db, self.pd, self.ci_lo, self.ci_hi])

    def roc_rows(self):
        return np.column_stack([self.roc_pfa, self.roc_pd])


def _trial_rng(seed, trial):
    return np.random.default_rng([int(seed), int(trial)])


def run_detection_mc(scenario, waveforms, seed=0):
    """Weak-target detection probability versus SNR plus ROC points.

    Parameters
    ----------
    scenario : DetectionScenario
    waveforms : sequence of ndarray
        Time-domain blocks with ``||s||² = N``, cycled over trials.
    seed : int
        Base seed; trial ``t`` draws from ``(seed, t)`` so that different
        waveform sources see identical target phases and noise.

    Returns
    -------
    DetectionResult
    """
    waves = [check_complex_vector(w, name="waveform") for w in waveforms]
    if not waves:
        raise ValueError("need at least one waveform")
    n = len(waves[0])
    taus = np.arange(n)
    mus = np.fft.fftfreq(n, 1.0 / n)
    mu_col = {int(m): i for i, m in enumerate(mus)}
    st, sm = scenario.strong_cell
    wt, wm = scenario.weak_cell
    strong_idx = (st % n, mu_col[int(sm)])
    weak_idx = (wt % n, mu_col[int(wm)])
    snrs = np.asarray(scenario.snr_db, dtype=float)
    hits = np.zeros(len(snrs), dtype=int)
    alpha = scenario.cfar.threshold_factor()
    roc_alphas = np.array([scenario.cfar.threshold_factor(p) for p in scenario.roc_pfa])
    roc_hits = np.zeros(len(roc_alphas), dtype=int)
    roc_fa = np.zeros(len(roc_alphas))
    keep = np.ones((n, n), dtype=bool)
    e = scenario.exclusion
    for (ti, mi) in (strong_idx, weak_idx):
        rows = np.arange(ti - e, ti + e + 1) % n
        cols = np.arange(mi - e, mi + e + 1) % n
        keep[np.ix_(rows, cols)] = False
    n_keep = keep.sum()
    gap = 10 ** (scenario.gap_db / 20)
    for t in range(scenario.trials):
        s = waves[t % len(waves)]
        rng = _trial_rng(seed, t)
        phases = np.exp(2j * np.pi * rng.random(2))
        noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        echo = gap * phases[0] * shift_doppler(s, st, sm) + phases[1] * shift_doppler(s, wt, wm)
        for i, snr in enumerate(snrs):
            amp = 10 ** (snr / 20)
            y = amp * echo + noise
            rd = range_doppler_map(s, y, taus, mus)
            level = cfar_noise_level(rd, scenario.cfar)
            hits[i] += rd[weak_idx] > alpha * level[weak_idx]
            if snr == scenario.roc_snr_db:
                ratio_w = rd[weak_idx] / level[weak_idx]
                roc_hits += ratio_w > roc_alphas
                ratio = rd[keep] / level[keep]
                roc_fa += (ratio[:, None] > roc_alphas[None, :]).sum(0) / n_keep
        if scenario.roc_snr_db not in snrs:
            y = 10 ** (scenario.roc_snr_db / 20) * echo + noise
            rd = range_doppler_map(s, y, taus, mus)
            level = cfar_noise_level(rd, scenario.cfar)
            roc_hits += rd[weak_idx] / level[weak_idx] > roc_alphas
            ratio = rd[keep] / level[keep]
            roc_fa += (ratio[:, None] > roc_alphas[None, :]).sum(0) / n_keep
    trials = scenario.trials
    ci = np.array([clopper_pearson(k, trials) for k in hits])
    return DetectionResult(snrs, hits / trials, ci[:, 0], ci[:, 1], hits, trials,
                           roc_fa / trials, roc_hits / trials)


def noise_only_false_alarm_rate(waveform, cfar, n_maps, seed=0, pfa=None):
    """Empirical CFAR false-alarm rate on noise-only matched-filter maps."""
    s = check_complex_vector(waveform, name="waveform")
    n = len(s)
    taus = np.arange(n)
    mus = np.fft.fftfreq(n, 1.0 / n)
    count = 0
    for t in range(n_maps):
        rng = _trial_rng(seed, t)
        y = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        count += int(ca_cfar(range_doppler_map(s, y, taus, mus), cfar, pfa).sum())
    return count / (n_maps * n * n)
