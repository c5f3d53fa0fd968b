"""Pure numpy implementations of the hot kernels.

Both kernels evaluate ``psi(theta, phi) = exp(-i phi P0) exp(i theta P2)
exp(i phi P0) psi0`` on the support of ``psi0``.  ``P0`` is diagonal
(``mu``) and ``P2`` is supplied through its eigen-decomposition per block:
block ``b`` occupies rows ``boff[b]:boff[b+1]`` and its eigenvector matrix
is stored row-major at ``vdata[voff[b]:voff[b+1]]``, with eigenvalues
``lam``.

The compiled module ``_kernels`` exposes the same two functions with the
same signatures.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rotate_batch", "loop_phase"]

_CHUNK = 2048


def _blocks(vdata, voff, boff):
    out = []
    for b in range(len(boff) - 1):
        lo, hi = int(boff[b]), int(boff[b + 1])
        d = hi - lo
        out.append((lo, hi, vdata[voff[b]:voff[b + 1]].reshape(d, d)))
    return out


def rotate_batch(vdata, voff, boff, lam, mu, psi0, thetas, phis):
    """Rotated states for every ``(theta_k, phi_k)``; shape ``(K, dim)``."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    out = np.empty((len(thetas), len(psi0)), dtype=complex)
    for lo, hi, V in _blocks(vdata, voff, boff):
        m = mu[lo:hi]
        v = np.exp(1j * np.outer(phis, m)) * psi0[lo:hi]
        w = v @ V.conj()
        w *= np.exp(1j * np.outer(thetas, lam[lo:hi]))
        out[:, lo:hi] = (w @ V.T) * np.exp(-1j * np.outer(phis, m))
    return out


def loop_phase(vdata, voff, boff, lam, mu, psi0, thetas, phis):
    """Accumulated ``-sum_k arg <psi_k|psi_{k+1}>`` along the samples.

    Returns
    -------
    total : float
        Unwrapped phase sum over consecutive samples.
    closure : complex
        ``<psi_0|psi_K>``.
    min_overlap : float
        Smallest ``|<psi_k|psi_{k+1}>|`` seen, a resolution diagnostic.
    """
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    K = len(thetas)
    total = 0.0
    min_ov = np.inf
    first = prev = None
    for start in range(0, K, _CHUNK):
        stop = min(K, start + _CHUNK)
        states = rotate_batch(vdata, voff, boff, lam, mu, psi0, thetas[start:stop], phis[start:stop])
        if first is None:
            first = states[0].copy()
        if prev is not None:
            states = np.vstack([prev[None, :], states])
        ov = np.einsum("ij,ij->i", states[:-1].conj(), states[1:])
        if len(ov):
            total -= float(np.sum(np.angle(ov)))
            min_ov = min(min_ov, float(np.min(np.abs(ov))))
        prev = states[-1]
    closure = complex(np.vdot(first, prev))
    return total, closure, min_ov
