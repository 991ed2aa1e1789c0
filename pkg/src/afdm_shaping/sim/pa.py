"""Memoryless Rapp power amplifier with input back-off."""

from dataclasses import dataclass

import numpy as np

from .._validation import check_complex_vector


@dataclass(frozen=True)
class RappPa:
    """AM-AM Rapp model.

    Parameters
    ----------
    a_sat : float
        Saturation amplitude.
    p : float
        Smoothness factor (>= 1).
    ibo_db : float, optional
        Back-off used to derive ``a_sat`` from the input power; informational
        when ``a_sat`` is given explicitly.
    """

    a_sat: float
    p: float = 2.0
    ibo_db: float | None = None

    def __post_init__(self):
        if not self.a_sat > 0:
            raise ValueError("a_sat must be positive")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    def gain(self, amplitude):
        r = np.asarray(amplitude, dtype=float) / self.a_sat
        return 1.0 / (1.0 + r ** (2 * self.p)) ** (1.0 / (2 * self.p))

    def __call__(self, samples):
        return rapp_amplify(samples, self)


def rapp_amplify(samples, pa):
    """Scale each sample by the Rapp gain; phases are untouched."""
    x = check_complex_vector(samples, name="samples")
    return x * pa.gain(np.abs(x))


def apply_ibo(samples, ibo_db):
    """Saturation amplitude giving the requested back-off for ``samples``.

    Returns
    -------
    samples : ndarray
        The input samples (unchanged).
    a_sat : float
        ``sqrt(P_in * 10**(ibo_db/10))`` with ``P_in`` the mean sample power.
    """
    x = check_complex_vector(samples, name="samples")
    p_in = float(np.mean(np.abs(x) ** 2))
    if p_in <= 0:
        raise ValueError("zero-power input")
    return x, float(np.sqrt(p_in * 10 ** (ibo_db / 10)))


def measured_ibo_db(samples, a_sat):
    p_in = float(np.mean(np.abs(np.asarray(samples)) ** 2))
    return float(10 * np.log10(a_sat**2 / p_in))
