"""PSK constellations with Gray labelling."""

import numpy as np

from ._validation import check_complex_vector


def gray_code(n_bits):
    k = np.arange(2**n_bits)
    return k ^ (k >> 1)


def psk_points(order, rotation=0.0):
    """Unit-modulus ``order``-PSK points; point ``k`` carries Gray label ``gray_code[k]``."""
    if order < 2 or order & (order - 1):
        raise ValueError("PSK order must be a power of two >= 2")
    return np.exp(1j * (rotation + 2 * np.pi * np.arange(order) / order))


def bits_per_symbol(order):
    return int(np.log2(order))


def psk_modulate(bits, order=8):
    """Map a bit array (length multiple of log2(order)) to PSK symbols."""
    k = bits_per_symbol(order)
    bits = np.asarray(bits, dtype=int).reshape(-1, k)
    labels = bits @ (1 << np.arange(k - 1, -1, -1))
    pos = np.empty(order, dtype=int)
    pos[gray_code(k)] = np.arange(order)
    return psk_points(order)[pos[labels]]


def psk_demodulate(symbols, order=8):
    """Hard nearest-point decisions returned as bits."""
    k = bits_per_symbol(order)
    z = check_complex_vector(symbols, name="symbols")
    idx = np.mod(np.round(np.angle(z) / (2 * np.pi / order)), order).astype(int)
    labels = gray_code(k)[idx]
    return ((labels[:, None] >> np.arange(k - 1, -1, -1)) & 1).reshape(-1)


def random_bits(rng, n):
    return rng.integers(0, 2, size=n)
