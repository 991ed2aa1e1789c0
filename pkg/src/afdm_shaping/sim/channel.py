"""Cyclic doubly selective channel."""

from dataclasses import dataclass, field

import numpy as np

from .._validation import check_complex_vector, check_random_state


@dataclass
class ChannelRealization:
    """Discrete paths ``(gain, delay, doppler)`` plus noise variance.

    Parameters
    ----------
    gains : array_like of complex
    delays : array_like of int
        Delays in samples.
    dopplers : array_like of float
        Normalized Doppler shifts.
    noise_var : float
    cp_len : int, optional
        Cyclic-prefix length bounding the delays.
    """

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    noise_var: float = 0.0
    cp_len: int | None = None

    def __post_init__(self):
        self.gains = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        self.delays = np.atleast_1d(np.asarray(self.delays, dtype=int))
        self.dopplers = np.atleast_1d(np.asarray(self.dopplers, dtype=float))
        if not (len(self.gains) == len(self.delays) == len(self.dopplers)):
            raise ValueError("gains, delays and dopplers must have equal length")
        if np.any(self.delays < 0):
            raise ValueError("delays must be nonnegative")
        if self.cp_len is not None and np.any(self.delays > self.cp_len):
            raise ValueError("path delay exceeds the cyclic prefix")
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")

    @classmethod
    def identity(cls, noise_var=0.0):
        return cls([1.0], [0], [0.0], noise_var)

    def with_noise(self, noise_var):
        return ChannelRealization(self.gains, self.delays, self.dopplers, noise_var, self.cp_len)

    def matrix(self, n):
        """Dense ``Σ h_k J_{τ_k} D(μ_k)``."""
        H = np.zeros((n, n), dtype=complex)
        k = np.arange(n)
        for h, tau, mu in zip(self.gains, self.delays, self.dopplers):
            rows = (k + tau) % n
            H[rows, k] += h * np.exp(-2j * np.pi * mu * k / n)
        return H


def shift_doppler(s, tau, mu):
    """``J_τ D(μ) s`` for the cyclic operators."""
    n = len(s)
    return np.roll(np.exp(-2j * np.pi * mu * np.arange(n) / n) * s, int(tau))


def doubly_selective_apply(s, channel, rng=None):
    """Pass ``s`` through the paths and add complex Gaussian noise."""
    s = check_complex_vector(s, name="s")
    if channel.cp_len is not None and np.any(channel.delays > channel.cp_len):
        raise ValueError("path delay exceeds the cyclic prefix")
    y = np.zeros_like(s)
    for h, tau, mu in zip(channel.gains, channel.delays, channel.dopplers):
        y += h * shift_doppler(s, tau, mu)
    if channel.noise_var > 0:
        rng = check_random_state(rng)
        y += np.sqrt(channel.noise_var / 2) * (rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s)))
    return y


def random_channel(rng, profile_db=(0.0, -5.0, -10.0), cp_len=16, max_doppler=2.0, noise_var=0.0,
                   normalize=True):
    """Draw a path realization with the given power profile.

    Delays are uniform integers in ``[0, cp_len - 1]``, Doppler shifts uniform
    in ``[-max_doppler, max_doppler]`` and gains circular Gaussian with
    variances following ``profile_db`` (scaled to unit total power when
    ``normalize``).
    """
    rng = check_random_state(rng)
    power = 10 ** (np.asarray(profile_db, dtype=float) / 10)
    if normalize:
        power = power / power.sum()
    k = len(power)
    gains = np.sqrt(power / 2) * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
    delays = rng.integers(0, cp_len, size=k)
    dopplers = rng.uniform(-max_doppler, max_doppler, size=k)
    return ChannelRealization(gains, delays, dopplers, noise_var, cp_len)
