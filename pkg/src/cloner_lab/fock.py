"""Truncated Fock-space brute force, used only to cross-check the Gaussian engine.

Supports up to three modes and photon-number cutoff 32. Two-mode
components are built block by block: a beam splitter conserves the total
photon number and an amplifier conserves the photon-number difference, so
each invariant block is exponentiated on its own (over a padded range for the
amplifier) and the result is truncated. Amplitude pushed above the cutoff is
lost and reported as leakage instead of being renormalised away.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from . import _kernels
from .network import build_asymmetric_cloner
from .quad_algebra import SQRT2, ClonerLabError

MAX_MODES = 3
MAX_CUTOFF = 32
LEAKAGE_BUDGET = 1e-4
SUPPORTED = ("beam_splitter", "phase_rotation", "displace", "amplifier")


class TruncationError(ClonerLabError):
    """Truncation leakage exceeds the oracle's error budget."""

    def __init__(self, message, leakage, required_cutoff=None):
        super().__init__(message)
        self.leakage = leakage
        self.required_cutoff = required_cutoff


class UnsupportedComponent(ClonerLabError):
    pass


@dataclass(frozen=True, eq=False)
class FockVector:
    amplitudes: np.ndarray
    cutoff: int

    @property
    def n_modes(self):
        return self.amplitudes.ndim

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    @property
    def leakage(self):
        """Probability lost above the cutoff."""
        return max(0.0, 1.0 - self.norm ** 2)


def coherent_amplitudes(alpha, cutoff):
    n = np.arange(cutoff + 1)
    alpha = complex(alpha)
    if alpha == 0:
        out = np.zeros(cutoff + 1, complex)
        out[0] = 1.0
        return out
    logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def product_fock(single_mode_amps, cutoff):
    psi = np.array(1.0 + 0j)
    for amp in single_mode_amps:
        psi = np.multiply.outer(psi, amp)
    return FockVector(psi, cutoff)


def coherent_fock(alphas, cutoff):
    return product_fock([coherent_amplitudes(a, cutoff) for a in alphas], cutoff)


def number_fock(occupations, cutoff):
    amps = []
    for n in occupations:
        v = np.zeros(cutoff + 1, complex)
        v[n] = 1.0
        amps.append(v)
    return product_fock(amps, cutoff)


# ---------------------------------------------------------------------------
# component matrices, indexed [n1_out, n2_out, n1_in, n2_in]
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def beam_splitter_tensor(theta, cutoff):
    """``U = exp(theta (a1 a2^dag - a1^dag a2))`` so ``a1 -> cos a1 - sin a2``."""
    d = cutoff + 1
    U = np.zeros((d, d, d, d), complex)
    for N in range(2 * cutoff + 1):
        n1 = np.arange(N + 1)
        gen = np.zeros((N + 1, N + 1))
        # a1 a2^dag : |n1, N-n1> -> sqrt(n1 (N-n1+1)) |n1-1, N-n1+1>
        amp = np.sqrt(n1[1:] * (N - n1[1:] + 1.0))
        gen[n1[1:] - 1, n1[1:]] += amp
        gen[n1[1:], n1[1:] - 1] -= amp
        block = expm(theta * gen)
        keep = n1[(n1 <= cutoff) & (N - n1 <= cutoff)]
        for i in keep:
            U[i, N - i, keep, N - keep] = block[i, keep]
    U.setflags(write=False)
    return U


@lru_cache(maxsize=64)
def amplifier_tensor(G, cutoff, pad=None):
    """``U = exp(r (a_s^dag a_i^dag - a_s a_i))`` with ``cosh r = G``."""
    d = cutoff + 1
    r = np.arccosh(G)
    pad = 4 * cutoff + 40 if pad is None else pad
    top = cutoff + pad
    U = np.zeros((d, d, d, d), complex)
    for D in range(-cutoff, cutoff + 1):
        # basis |t + D, t>, t = n_idler
        t = np.arange(max(0, -D), top + 1)
        ns = t + D
        gen = np.zeros((t.size, t.size))
        amp = np.sqrt((ns[:-1] + 1.0) * (t[:-1] + 1.0))
        gen[np.arange(1, t.size), np.arange(t.size - 1)] = amp
        gen[np.arange(t.size - 1), np.arange(1, t.size)] = -amp
        block = expm(r * gen)
        sel = np.flatnonzero((t <= cutoff) & (ns <= cutoff))
        for i in sel:
            U[ns[i], t[i], ns[sel], t[sel]] = block[i, sel]
    U.setflags(write=False)
    return U


def displacement_operator(beta, cutoff):
    return _kernels.displacement_matrix(complex(beta), cutoff + 1)


def _apply_single(psi, op, m):
    out = np.tensordot(op, psi, axes=([1], [m]))
    return np.moveaxis(out, 0, m)


def _apply_two(psi, U, m1, m2):
    out = np.tensordot(U, psi, axes=([2, 3], [m1, m2]))
    return np.moveaxis(out, [0, 1], [m1, m2])


def evolve_fock(state, network, cutoff=None):
    """Schrodinger-picture evolution of ``state`` through ``network``."""
    cutoff = state.cutoff if cutoff is None else cutoff
    if cutoff != state.cutoff:
        raise ValueError(f"state cutoff {state.cutoff} differs from requested {cutoff}")
    if cutoff > MAX_CUTOFF:
        raise ValueError(f"cutoff {cutoff} exceeds the supported maximum {MAX_CUTOFF}")
    if network.register_size > MAX_MODES or network.register_size != state.n_modes:
        raise ValueError("Fock oracle handles at most 3 modes and needs matching register sizes")
    psi = np.array(state.amplitudes, complex)
    d = cutoff + 1
    for comp in network.components:
        k, p, m = comp.kind, comp.params, comp.modes
        if k == "beam_splitter":
            psi = _apply_two(psi, beam_splitter_tensor(p["theta"], cutoff), *m)
        elif k == "amplifier":
            psi = _apply_two(psi, amplifier_tensor(p["gain"], cutoff), *m)
        elif k == "phase_rotation":
            psi = _apply_single(psi, np.diag(np.exp(1j * p["phi"] * np.arange(d))), m[0])
        elif k == "displace":
            psi = _apply_single(psi, displacement_operator(p["beta"], cutoff), m[0])
        else:
            raise UnsupportedComponent(
                f"{k} is not supported by the Fock oracle; decompose it into {', '.join(SUPPORTED)}"
            )
    return FockVector(psi, cutoff)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


def _lower(psi, k):
    """``a_k psi`` within the truncated space."""
    d = psi.shape[k]
    out = np.zeros_like(psi)
    src = [slice(None)] * psi.ndim
    dst = [slice(None)] * psi.ndim
    src[k] = slice(1, d)
    dst[k] = slice(0, d - 1)
    shape = [1] * psi.ndim
    shape[k] = d - 1
    out[tuple(dst)] = psi[tuple(src)] * np.sqrt(np.arange(1, d)).reshape(shape)
    return out


def mean_photons(state, mode):
    psi = state.amplitudes
    low = _lower(psi, mode)
    return float(np.vdot(low, low).real / np.vdot(psi, psi).real)


def quadrature_moments(state):
    """Normalised ``(mean, cov)`` of all quadratures, xpxp ordering."""
    psi = state.amplitudes
    m = psi.ndim
    nrm = np.vdot(psi, psi).real
    low = [_lower(psi, k) for k in range(m)]
    a = np.array([np.vdot(psi, l) for l in low]) / nrm
    ada = np.array([[np.vdot(low[j], low[k]) for k in range(m)] for j in range(m)]) / nrm
    aa = np.array([[np.vdot(psi, _lower(low[k], j)) for k in range(m)] for j in range(m)]) / nrm
    mean = np.empty(2 * m)
    mean[0::2] = SQRT2 * a.real
    mean[1::2] = SQRT2 * a.imag
    cov = np.empty((2 * m, 2 * m))
    for j in range(m):
        for k in range(m):
            # symmetrised <a_j^dag a_k> + delta/2
            sym = ada[j, k] + (0.5 if j == k else 0.0)
            xx = 0.5 * (aa[j, k] + np.conj(aa[j, k])) + sym.real
            pp = -0.5 * (aa[j, k] + np.conj(aa[j, k])) + sym.real
            xp = aa[j, k].imag + ada[j, k].imag
            cov[2 * j, 2 * k] = xx.real
            cov[2 * j + 1, 2 * k + 1] = pp.real
            cov[2 * j, 2 * k + 1] = xp
            cov[2 * k + 1, 2 * j] = xp
    cov -= np.outer(mean, mean)
    return mean, 0.5 * (cov + cov.T)


def fidelity_to_coherent_fock(state, mode, alpha):
    """``<alpha| rho_mode |alpha>`` by contracting the mode with ``<alpha|``."""
    bra = np.conj(coherent_amplitudes(alpha, state.cutoff))
    proj = np.tensordot(bra, state.amplitudes, axes=([0], [mode]))
    return float(np.sum(np.abs(proj) ** 2))


# ---------------------------------------------------------------------------
# cloner oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    fidelity: float
    leakage: float
    cutoff: int


def _clone_run(alpha, gamma, cutoff, clone):
    net = build_asymmetric_cloner(gamma)
    out = evolve_fock(coherent_fock([alpha, 0, 0], cutoff), net)
    return OracleResult(fidelity_to_coherent_fock(out, net[clone], alpha), out.leakage, cutoff)


def oracle_clone_run(alpha, gamma, cutoff=24, clone="S", budget=LEAKAGE_BUDGET):
    """Brute-force clone fidelity with its truncation leakage.

    Raises:
        TruncationError: leakage above ``budget``; ``required_cutoff`` names the
            smallest cutoff (up to 32) meeting it, or is ``None``.
    """
    if abs(alpha) > 1:
        raise ValueError("oracle supports |alpha| <= 1")
    if not 16 <= cutoff <= MAX_CUTOFF:
        raise ValueError(f"oracle cutoff must lie in [16, {MAX_CUTOFF}]")
    res = _clone_run(alpha, gamma, cutoff, clone)
    if res.leakage > budget:
        need = None
        for c in range(cutoff + 4, MAX_CUTOFF + 1, 4):
            if _clone_run(alpha, gamma, c, clone).leakage <= budget:
                need = c
                break
        hint = f"cutoff {need}" if need else f"a cutoff above {MAX_CUTOFF}"
        raise TruncationError(
            f"truncation leakage {res.leakage:.3g} exceeds {budget:g}; use {hint}",
            res.leakage, need,
        )
    return res


def oracle_clone_fidelity(alpha, gamma, cutoff=24, clone="S"):
    return oracle_clone_run(alpha, gamma, cutoff, clone).fidelity
