"""Link-level bit-error-rate Monte Carlo with PA nonlinearity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constellation import bits_per_symbol, psk_demodulate
from ..core import synthesize_oversampled
from .channel import ChannelRealization, doubly_selective_apply, random_channel
from .pa import RappPa, apply_ibo, rapp_amplify
from .receiver import effective_channel_matrix, mmse_receive


@dataclass
class BerScenario:
    """Settings of a BER sweep.

    Parameters
    ----------
    snr_db : sequence of float
        Per-sample Es/N0 grid at the receiver input.
    ibo_db : float or None
        PA input back-off; ``None`` means an ideal linear amplifier.
    smoothness : float
        Rapp smoothness factor.
    channel : {"awgn", "random", "fixed"}
        ``"random"`` draws a fresh doubly selective channel per frame,
        ``"fixed"`` reuses one representative realization for every frame.
    min_bits : int
        Bits simulated per SNR point (at least).
    min_errors : int
        Stop a point early once this many errors and ``min_bits`` are reached;
        0 disables early stopping.
    max_frames : int
        Hard cap on frames per SNR point.
    order : int
        PSK order of the data symbols.
    profile_db, cp_len, max_doppler
        Doubly selective channel parameters.
    """

    snr_db: tuple = tuple(range(0, 31, 3))
    ibo_db: float | None = 0.0
    smoothness: float = 2.0
    channel: str = "awgn"
    min_bits: int = 100_000
    min_errors: int = 0
    max_frames: int = 100_000
    order: int = 8
    profile_db: tuple = (0.0, -5.0, -10.0)
    cp_len: int = 16
    max_doppler: float = 2.0

    def __post_init__(self):
        if self.channel not in ("awgn", "random", "fixed"):
            raise ValueError(f"unknown channel kind {self.channel!r}")


@dataclass
class BerResult:
    snr_db: np.ndarray
    ber: np.ndarray
    bits: np.ndarray
    errors: np.ndarray

    def rows(self):
        return np.column_stack([self.snr_db, self.ber, self.bits, self.errors])

    def confidence(self, level=0.95):
        """Clopper-Pearson band per SNR point."""
        from .sensing import clopper_pearson

        return np.array([clopper_pearson(int(k), int(n), level) for k, n in zip(self.errors, self.bits)])


def transmit_samples(cfg, design, ibo_db=None, smoothness=2.0):
    """Symbol-rate samples after the PA, with unit mean power.

    The PA acts on the ``L_P``-fold oversampled block; every ``L_P``-th output
    sample scaled by ``sqrt(L_P)`` is kept.
    """
    lp = cfg.oversampling
    s_os = synthesize_oversampled(cfg, design)
    if ibo_db is not None:
        s_os, a_sat = apply_ibo(s_os, ibo_db)
        s_os = rapp_amplify(s_os, RappPa(a_sat, smoothness, ibo_db))
    x = np.sqrt(lp) * s_os[::lp]
    return x / np.sqrt(np.mean(np.abs(x) ** 2))


def _frame_channel(scenario, seed, frame):
    if scenario.channel == "awgn":
        return ChannelRealization.identity()
    key = [int(seed), 1, 0 if scenario.channel == "fixed" else int(frame)]
    return random_channel(np.random.default_rng(key), scenario.profile_db, scenario.cp_len,
                          scenario.max_doppler)


def run_ber_mc(scenario, cfg, designs, seed=0):
    """BER of one waveform source versus SNR.

    Parameters
    ----------
    scenario : BerScenario
    cfg : AfdmConfig
        Configuration matching the designs' partition.
    designs : sequence of DesignVector
        Transmitted blocks, cycled over frames.
    seed : int
        Frame ``f`` at SNR index ``i`` draws noise from ``(seed, 0, i, f)`` and
        its channel from ``(seed, 1, f)``, so sources compared under the same
        seed see the same impairments.

    Returns
    -------
    BerResult
    """
    designs = list(designs)
    if not designs:
        raise ValueError("need at least one design")
    k = bits_per_symbol(scenario.order)
    tx = [transmit_samples(cfg, d, scenario.ibo_db, scenario.smoothness) for d in designs]
    ref_bits = [psk_demodulate(d.data_symbols, scenario.order) for d in designs]
    n_data = [len(d.partition.D) for d in designs]
    snrs = np.asarray(scenario.snr_db, dtype=float)
    bits = np.zeros(len(snrs), dtype=np.int64)
    errors = np.zeros(len(snrs), dtype=np.int64)
    G_cache = {}
    for i, snr in enumerate(snrs):
        noise_var = 10 ** (-snr / 10)
        frame = 0
        while frame < scenario.max_frames:
            if bits[i] >= scenario.min_bits and (scenario.min_errors == 0 or errors[i] >= scenario.min_errors):
                break
            j = frame % len(designs)
            channel = _frame_channel(scenario, seed, frame)
            if scenario.channel == "random":
                G = effective_channel_matrix(cfg, designs[j], channel)
            else:
                if j not in G_cache:
                    G_cache[j] = effective_channel_matrix(cfg, designs[j], channel)
                G = G_cache[j]
            rng = np.random.default_rng([int(seed), 0, i, frame])
            y = doubly_selective_apply(tx[j], channel.with_noise(noise_var), rng)
            x_hat = mmse_receive(y, G, noise_var, designs[j].partition.D)
            est = psk_demodulate(x_hat, scenario.order)
            errors[i] += int(np.count_nonzero(est != ref_bits[j]))
            bits[i] += n_data[j] * k
            frame += 1
    return BerResult(snrs, errors / np.maximum(bits, 1), bits, errors)


def snr_at_ber(result, target=1e-3):
    """SNR where the BER curve crosses ``target`` (log-linear interpolation).

    Returns ``nan`` when the curve never crosses the target.
    """
    snr = np.asarray(result.snr_db, dtype=float)
    ber = np.asarray(result.ber, dtype=float)
    lb = np.log10(np.maximum(ber, 1e-12))
    lt = np.log10(target)
    for a in range(len(snr) - 1):
        if lb[a] >= lt >= lb[a + 1] and lb[a] != lb[a + 1]:
            w = (lb[a] - lt) / (lb[a] - lb[a + 1])
            return float(snr[a] + w * (snr[a + 1] - snr[a]))
    return float("nan")
