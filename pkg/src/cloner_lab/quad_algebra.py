"""Mode operators, symplectic maps and Gaussian states.

Conventions used throughout the package:

* ``A = (X + iP) / sqrt(2)``, ``[X, P] = i``, vacuum quadrature variance 1/2.
* Quadratures are ordered ``(X_0, P_0, X_1, P_1, ...)`` (xpxp ordering).

Two parallel pictures are kept. :class:`OperatorLinearForm` is the complex
Heisenberg picture (coefficients over the initial ``A_k`` and ``A_k^dag``),
:class:`GaussianMap` / :class:`GaussianState` the real quadrature picture.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT2 = np.sqrt(2.0)


class ClonerLabError(Exception):
    """Base class for errors raised by this package."""


class NotUnityGain(ClonerLabError):
    """The operator form does not transmit the signal with unit gain."""


class NonCommutingMeasurement(ClonerLabError):
    """A set of measured observables fails to commute pairwise."""


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def omega(n):
    """Symplectic form for ``n`` modes in xpxp ordering."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_residual(S):
    """Frobenius norm of ``S Omega S^T - Omega``."""
    S = np.asarray(S, dtype=float)
    om = omega(S.shape[0] // 2)
    return float(np.linalg.norm(S @ om @ S.T - om))


# ---------------------------------------------------------------------------
# complex picture
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorLinearForm:
    """``sum_k a_k A_k + sum_k b_k A_k^dag + scalar`` over initial modes."""

    a_coeffs: np.ndarray
    adag_coeffs: np.ndarray
    scalar: complex = 0j

    def __post_init__(self):
        a = _frozen(self.a_coeffs, complex)
        b = _frozen(self.adag_coeffs, complex)
        if a.ndim != 1 or a.shape != b.shape:
            raise ValueError("a_coeffs and adag_coeffs must be 1-d and of equal length")
        object.__setattr__(self, "a_coeffs", a)
        object.__setattr__(self, "adag_coeffs", b)
        object.__setattr__(self, "scalar", complex(self.scalar))

    @property
    def n_modes(self):
        return self.a_coeffs.shape[0]

    @classmethod
    def annihilation(cls, k, n):
        a = np.zeros(n, complex)
        a[k] = 1.0
        return cls(a, np.zeros(n, complex))

    @classmethod
    def creation(cls, k, n):
        return cls.annihilation(k, n).dagger()

    @classmethod
    def x(cls, k, n):
        """Position quadrature ``X_k = (A_k + A_k^dag)/sqrt(2)``."""
        return (cls.annihilation(k, n) + cls.creation(k, n)) * (1 / SQRT2)

    @classmethod
    def p(cls, k, n):
        """Momentum quadrature ``P_k = (A_k - A_k^dag)/(i sqrt(2))``."""
        return (cls.annihilation(k, n) - cls.creation(k, n)) * (1 / (1j * SQRT2))

    @classmethod
    def from_quadratures(cls, coeffs, scalar=0j):
        """Form ``sum_q coeffs[q] * R_q`` with ``R = (X_0, P_0, ...)``.

        ``coeffs`` may be complex.
        """
        c = np.asarray(coeffs, dtype=complex)
        cx, cp = c[0::2], c[1::2]
        return cls((cx - 1j * cp) / SQRT2, (cx + 1j * cp) / SQRT2, scalar)

    def quadrature_coeffs(self):
        """Complex coefficients over ``(X_0, P_0, ...)``; inverse of :meth:`from_quadratures`."""
        out = np.empty(2 * self.n_modes, complex)
        out[0::2] = (self.a_coeffs + self.adag_coeffs) / SQRT2
        out[1::2] = 1j * (self.a_coeffs - self.adag_coeffs) / SQRT2
        return out

    def dagger(self):
        return OperatorLinearForm(
            np.conj(self.adag_coeffs), np.conj(self.a_coeffs), np.conj(self.scalar)
        )

    def _check(self, other):
        if other.n_modes != self.n_modes:
            raise ValueError(
                f"register size mismatch: {self.n_modes} vs {other.n_modes}"
            )

    def __add__(self, other):
        if isinstance(other, OperatorLinearForm):
            self._check(other)
            return OperatorLinearForm(
                self.a_coeffs + other.a_coeffs,
                self.adag_coeffs + other.adag_coeffs,
                self.scalar + other.scalar,
            )
        return OperatorLinearForm(self.a_coeffs, self.adag_coeffs, self.scalar + complex(other))

    def __sub__(self, other):
        return self + (-1) * other if isinstance(other, OperatorLinearForm) else self + (-complex(other))

    def __mul__(self, c):
        c = complex(c)
        return OperatorLinearForm(c * self.a_coeffs, c * self.adag_coeffs, c * self.scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def distance(self, other):
        """Euclidean norm of the coefficient difference (scalar included)."""
        self._check(other)
        d = np.concatenate(
            [self.a_coeffs - other.a_coeffs, self.adag_coeffs - other.adag_coeffs,
             [self.scalar - other.scalar]]
        )
        return float(np.linalg.norm(d))

    def __repr__(self):
        return (
            f"OperatorLinearForm(a={np.round(self.a_coeffs, 6)}, "
            f"adag={np.round(self.adag_coeffs, 6)}, scalar={self.scalar:.6g})"
        )


def commutator(f, g):
    """``[f, g]`` from ``[A_j, A_k^dag] = delta_jk``; scalars drop out."""
    f._check(g)
    return complex(
        np.sum(f.a_coeffs * g.adag_coeffs) - np.sum(f.adag_coeffs * g.a_coeffs)
    )


def hermitian_parts(f):
    """Split ``f = X_f + i P_f`` with both parts Hermitian."""
    fd = f.dagger()
    return (f + fd) * 0.5, (f - fd) * (1 / 2j)


# ---------------------------------------------------------------------------
# real picture
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianMap:
    """Affine quadrature map ``r -> S r + d``."""

    symplectic: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        S = _frozen(self.symplectic, float)
        d = _frozen(self.displacement, float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2 or d.shape != (S.shape[0],):
            raise ValueError("symplectic must be 2N x 2N and displacement length 2N")
        object.__setattr__(self, "symplectic", S)
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self):
        return self.symplectic.shape[0] // 2

    @classmethod
    def identity(cls, n):
        return cls(np.eye(2 * n), np.zeros(2 * n))

    def residual(self):
        return symplectic_residual(self.symplectic)

    def output_forms(self):
        """Heisenberg output ``A'_j`` of every mode as operator forms."""
        S, d = self.symplectic, self.displacement
        n = self.n_modes
        forms = []
        for j in range(n):
            row = (S[2 * j] + 1j * S[2 * j + 1]) / SQRT2
            shift = (d[2 * j] + 1j * d[2 * j + 1]) / SQRT2
            forms.append(OperatorLinearForm.from_quadratures(row, shift))
        return forms


def compose(outer, inner):
    """Map applying ``inner`` first, then ``outer``."""
    if outer.n_modes != inner.n_modes:
        raise ValueError(f"register size mismatch: {outer.n_modes} vs {inner.n_modes}")
    S2, d2 = outer.symplectic, outer.displacement
    return GaussianMap(S2 @ inner.symplectic, S2 @ inner.displacement + d2)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First and second quadrature moments of an N-mode Gaussian state.

    ``collapsed`` holds modes that carry a homodyne-measured (zero-variance)
    direction; their covariance may be rank deficient.
    """

    mean: np.ndarray
    cov: np.ndarray
    collapsed: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        mean = _frozen(self.mean, float)
        cov = _frozen(self.cov, float)
        n2 = mean.shape[0]
        if mean.ndim != 1 or n2 % 2 or cov.shape != (n2, n2):
            raise ValueError("mean must have length 2N and cov shape 2N x 2N")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "collapsed", frozenset(self.collapsed))

    @property
    def n_modes(self):
        return self.mean.shape[0] // 2

    def uncertainty_min_eig(self):
        """Smallest eigenvalue of ``cov + (i/2) Omega``; >= 0 for physical states."""
        return float(np.linalg.eigvalsh(self.cov + 0.5j * omega(self.n_modes)).min())

    def is_physical(self, tol=1e-10):
        return self.uncertainty_min_eig() >= -tol

    def marginal(self, modes):
        if np.isscalar(modes):
            modes = [modes]
        idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
        return GaussianState(
            self.mean[idx], self.cov[np.ix_(idx, idx)],
            frozenset(i for i, m in enumerate(modes) if m in self.collapsed),
        )


def apply(gmap, state):
    """Push a Gaussian state through a Gaussian map."""
    if gmap.n_modes != state.n_modes:
        raise ValueError(f"register size mismatch: map {gmap.n_modes} vs state {state.n_modes}")
    S = gmap.symplectic
    cov = S @ state.cov @ S.T
    return GaussianState(S @ state.mean + gmap.displacement, 0.5 * (cov + cov.T), state.collapsed)


def _alpha_mean(alpha):
    alpha = complex(alpha)
    return np.array([SQRT2 * alpha.real, SQRT2 * alpha.imag])


def _squeezed_cov(r, angle):
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    return 0.5 * np.array(
        [[c - s * np.cos(angle), -s * np.sin(angle)],
         [-s * np.sin(angle), c + s * np.cos(angle)]]
    )


def make_state(kind, n_modes=1, *, alpha=None, nbar=0.0, r=0.0, angle=0.0):
    """Standard Gaussian states on ``n_modes`` identical modes.

    Args:
        kind: ``"vacuum"``, ``"coherent"``, ``"thermal"`` or ``"squeezed"``.
        n_modes: register size.
        alpha: coherent amplitude, a complex scalar or one per mode.
        nbar: mean thermal photon number.
        r, angle: squeezing magnitude and phase (``angle=0`` squeezes X).

    Returns:
        GaussianState
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if kind == "vacuum":
        return GaussianState(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))
    if kind == "coherent":
        alphas = np.broadcast_to(np.asarray(0 if alpha is None else alpha, complex), (n_modes,))
        mean = np.concatenate([_alpha_mean(a) for a in alphas])
        return GaussianState(mean, 0.5 * np.eye(2 * n_modes))
    if kind == "thermal":
        if nbar < 0:
            raise ValueError("thermal photon number must be non-negative")
        return GaussianState(np.zeros(2 * n_modes), (nbar + 0.5) * np.eye(2 * n_modes))
    if kind == "squeezed":
        cov = np.kron(np.eye(n_modes), _squeezed_cov(r, angle))
        return GaussianState(np.zeros(2 * n_modes), cov)
    raise ValueError(f"unknown state kind {kind!r}")


def product_state(states):
    """Tensor product of Gaussian states in the given mode order."""
    mean = np.concatenate([s.mean for s in states])
    n2 = mean.shape[0]
    cov = np.zeros((n2, n2))
    i = 0
    for s in states:
        k = s.mean.shape[0]
        cov[i:i + k, i:i + k] = s.cov
        i += k
    return GaussianState(mean, cov)


def gaussian_fidelity(mean1, cov1, mean2, cov2):
    """Uhlmann fidelity of two single-mode Gaussian states.

    Closed form for one mode, valid for mixed states; reduces to the overlap
    ``<psi|rho|psi>`` when either state is pure.
    """
    mean1, mean2 = np.asarray(mean1, float), np.asarray(mean2, float)
    cov1, cov2 = np.asarray(cov1, float), np.asarray(cov2, float)
    vsum = cov1 + cov2
    delta = 4.0 * np.linalg.det(vsum)
    extra = max((4.0 * np.linalg.det(cov1) - 1.0) * (4.0 * np.linalg.det(cov2) - 1.0), 0.0)
    u = mean1 - mean2
    expo = np.exp(-0.5 * u @ np.linalg.solve(vsum, u))
    return float(2.0 / (np.sqrt(delta + extra) - np.sqrt(extra)) * expo)


def fidelity_to_coherent(state, mode, alpha):
    """Overlap ``<alpha| rho_mode |alpha>`` of one mode's marginal."""
    marg = state.marginal(mode)
    if np.any(np.linalg.eigvalsh(marg.cov) < -1e-12):
        raise ValueError("invalid covariance: negative eigenvalue")
    return gaussian_fidelity(marg.mean, marg.cov, _alpha_mean(alpha), 0.5 * np.eye(2))


def chaotic_photons(form, signal, atol=1e-10):
    """Mean number of chaotic photons added to a unity-gain signal.

    The noise ``N = form - A_signal`` (vacuum in every non-signal input) adds
    ``(<N N^dag> + <N^dag N>)/2`` to each quadrature variance; with this the
    fidelity to a coherent input is ``1/(1 + n_ch)``.
    """
    a = form.a_coeffs
    b = form.adag_coeffs
    if abs(a[signal] - 1) > atol or abs(b[signal]) > atol:
        raise NotUnityGain(
            f"signal coefficients (a={a[signal]:.6g}, adag={b[signal]:.6g}) are not (1, 0)"
        )
    others = np.delete(np.abs(a) ** 2, signal)
    return float(0.5 * (others.sum() + np.sum(np.abs(b) ** 2)))


def fidelity_from_photons(n_ch):
    return 1.0 / (1.0 + n_ch)


def form_quadrature_matrix(forms):
    """Real matrix mapping input quadratures to output quadratures of ``forms``.

    Row ``2j`` is ``X'_j`` and row ``2j+1`` is ``P'_j``, each read off the
    operator form ``A'_j``; the constant parts are returned separately.
    """
    n_out = len(forms)
    n_in = forms[0].n_modes
    T = np.empty((2 * n_out, 2 * n_in))
    shift = np.empty(2 * n_out)
    for j, f in enumerate(forms):
        xf, pf = hermitian_parts(f)
        # X' = sqrt(2) Re(A'), P' = sqrt(2) Im(A')
        T[2 * j] = SQRT2 * xf.quadrature_coeffs().real
        T[2 * j + 1] = SQRT2 * pf.quadrature_coeffs().real
        shift[2 * j] = SQRT2 * f.scalar.real
        shift[2 * j + 1] = SQRT2 * f.scalar.imag
    return T, shift


def form_moments(forms, state):
    """Output moments computed from operator forms instead of a symplectic map."""
    T, shift = form_quadrature_matrix(forms)
    cov = T @ state.cov @ T.T
    return T @ state.mean + shift, 0.5 * (cov + cov.T)
