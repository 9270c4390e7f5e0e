"""Hot loops, compiled with numba when available.

Set ``CLONER_LAB_DISABLE_NUMBA=1`` to force the pure-numpy path. Both paths
are always importable under explicit names so they can be benchmarked and
cross-checked against each other.
"""
import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

USE_NUMBA = njit is not None and os.environ.get("CLONER_LAB_DISABLE_NUMBA", "0") not in ("1", "true", "yes")
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# conditioned homodyne trajectories
# ---------------------------------------------------------------------------


def trajectory_numpy(mu0, C, K, sd, disp, tx, z):
    """Sequential homodyne outcomes and displaced target means for many trials.

    Args:
        mu0: (2N,) mean before any measurement.
        C: (m, 2N) measured quadrature combinations, in measurement order.
        K: (m, 2N) conditioning gain vectors ``V_{j-1} c_j / s_j^2``.
        sd: (m,) standard deviation of each outcome given the earlier ones.
        disp: (m, 2) target (X, P) shift per unit outcome.
        tx: index of the target X quadrature.
        z: (T, m) standard normal draws.

    Returns:
        (outcomes (T, m), target_means (T, 2))
    """
    T, m = z.shape
    mu = np.broadcast_to(mu0, (T, mu0.shape[0])).copy()
    out = np.empty((T, m))
    for j in range(m):
        noise = sd[j] * z[:, j]
        out[:, j] = mu @ C[j] + noise
        mu += noise[:, None] * K[j][None, :]
    target = mu[:, tx:tx + 2] + out @ disp
    return out, target


def fidelity_numpy(target, ref, W, f0):
    """``f0 * exp(-d^T W d / 2)`` for every row ``d = target - ref``."""
    d = target - ref
    return f0 * np.exp(-0.5 * np.einsum("ti,ij,tj->t", d, W, d))


def displacement_matrix_numpy(alpha, dim):
    """Fock matrix elements ``<m|D(alpha)|n>`` for ``m, n < dim`` by recurrence."""
    alpha = complex(alpha)
    D = np.zeros((dim, dim), complex)
    sq = np.sqrt(np.arange(dim))
    D[0, 0] = np.exp(-0.5 * abs(alpha) ** 2)
    for m in range(1, dim):
        D[m, 0] = alpha / sq[m] * D[m - 1, 0]
    for n in range(1, dim):
        D[0, n] = -np.conj(alpha) / sq[n] * D[0, n - 1]
        D[1:, n] = (sq[1:] * D[:-1, n - 1] - np.conj(alpha) * D[1:, n - 1]) / sq[n]
    return D


if njit is not None:

    @njit(cache=True, nogil=True)
    def _trajectory_nb(mu0, C, K, sd, disp, tx, z):
        T, m = z.shape
        n2 = mu0.shape[0]
        out = np.empty((T, m))
        target = np.empty((T, 2))
        mu = np.empty(n2)
        for t in range(T):
            for q in range(n2):
                mu[q] = mu0[q]
            tgx = 0.0
            tgp = 0.0
            for j in range(m):
                pred = 0.0
                for q in range(n2):
                    pred += C[j, q] * mu[q]
                noise = sd[j] * z[t, j]
                val = pred + noise
                out[t, j] = val
                for q in range(n2):
                    mu[q] += noise * K[j, q]
                tgx += disp[j, 0] * val
                tgp += disp[j, 1] * val
            target[t, 0] = mu[tx] + tgx
            target[t, 1] = mu[tx + 1] + tgp
        return out, target

    @njit(cache=True, nogil=True)
    def _fidelity_nb(target, ref, W, f0):
        T = target.shape[0]
        res = np.empty(T)
        for t in range(T):
            d0 = target[t, 0] - ref[0]
            d1 = target[t, 1] - ref[1]
            q = W[0, 0] * d0 * d0 + (W[0, 1] + W[1, 0]) * d0 * d1 + W[1, 1] * d1 * d1
            res[t] = f0 * np.exp(-0.5 * q)
        return res

    @njit(cache=True)
    def _displacement_nb(alpha, dim):
        D = np.zeros((dim, dim), np.complex128)
        ac = np.conj(alpha)
        D[0, 0] = np.exp(-0.5 * abs(alpha) ** 2)
        for m in range(1, dim):
            D[m, 0] = alpha / np.sqrt(m) * D[m - 1, 0]
        for n in range(1, dim):
            rn = np.sqrt(n)
            D[0, n] = -ac / rn * D[0, n - 1]
            for m in range(1, dim):
                D[m, n] = (np.sqrt(m) * D[m - 1, n - 1] - ac * D[m, n - 1]) / rn
        return D

    def trajectory_numba(mu0, C, K, sd, disp, tx, z):
        return _trajectory_nb(
            np.ascontiguousarray(mu0, np.float64), np.ascontiguousarray(C, np.float64),
            np.ascontiguousarray(K, np.float64), np.ascontiguousarray(sd, np.float64),
            np.ascontiguousarray(disp, np.float64), int(tx), np.ascontiguousarray(z, np.float64),
        )

    def fidelity_numba(target, ref, W, f0):
        return _fidelity_nb(
            np.ascontiguousarray(target, np.float64), np.ascontiguousarray(ref, np.float64),
            np.ascontiguousarray(W, np.float64), float(f0),
        )

    def displacement_matrix_numba(alpha, dim):
        return _displacement_nb(complex(alpha), int(dim))

else:  # pragma: no cover
    trajectory_numba = fidelity_numba = displacement_matrix_numba = None


if USE_NUMBA:
    trajectory = trajectory_numba
    trajectory_fidelity = fidelity_numba
    displacement_matrix = displacement_matrix_numba
else:
    trajectory = trajectory_numpy
    trajectory_fidelity = fidelity_numpy
    displacement_matrix = displacement_matrix_numpy
