"""DAFT-domain linear MMSE receiver."""

import numpy as np

from .._validation import check_complex_vector
from ..core import _post_chirp


def effective_channel_matrix(cfg, design, channel):
    """``G = H Λ_c1 F^H diag(v)`` with the known pre-chirp phases on D.

    Reserved entries are unknown to the receiver and are treated as extra
    unit-phase symbols (``v[m] = 1`` on R).
    """
    n = cfg.n_subcarriers
    v = np.ones(n, dtype=complex)
    D = design.partition.D
    v[D] = design.u[D]
    basis = inverse_daft_matrix(cfg)
    return channel.matrix(n) @ (basis * v[None, :])


def inverse_daft_matrix(cfg):
    """Dense ``Λ_c1 F^H``."""
    n = cfg.n_subcarriers
    return _post_chirp(n, cfg.c1)[:, None] * np.fft.ifft(np.eye(n), axis=0) * np.sqrt(n)


def mmse_receive(y, G, noise_var, data_index=None):
    """Linear MMSE estimate ``(G^H G + σ² I)^{-1} G^H y``.

    Parameters
    ----------
    y : ndarray, shape (N,)
    G : ndarray, shape (N, N)
        Effective channel including the modulation.
    noise_var : float
    data_index : array_like of int, optional
        Entries to return (all by default).

    Raises
    ------
    numpy.linalg.LinAlgError
        If the system is singular (zero noise with rank-deficient ``G``).
    """
    y = check_complex_vector(y, G.shape[0], name="y")
    A = G.conj().T @ G + noise_var * np.eye(G.shape[1])
    x = np.linalg.solve(A, G.conj().T @ y)
    return x if data_index is None else x[np.asarray(data_index)]
