"""Optical components and the cloning / reversal circuits built from them.

Every :class:`Component` knows two independent descriptions of itself: a
real symplectic matrix on quadratures and a complex Bogoliubov triple
``A' = alpha A + beta A^dag + c``. A :class:`Network` compiles both and the
tests cross-check them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quad_algebra import (
    SQRT2,
    GaussianMap,
    OperatorLinearForm,
    compose,
)

_QUADRATURES = ("X", "P")


def _rot(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class Component:
    kind: str
    modes: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"{self.kind}: mode indices must be distinct, got {modes}")
        if any(m < 0 for m in modes):
            raise ValueError(f"{self.kind}: negative mode index")
        object.__setattr__(self, "modes", modes)

    # -- real picture --------------------------------------------------------
    def gaussian_map(self, n):
        if max(self.modes) >= n:
            raise ValueError(f"{self.kind} acts on mode {max(self.modes)} outside register of {n}")
        S = np.eye(2 * n)
        d = np.zeros(2 * n)
        k = self.kind
        m = self.modes
        p = self.params
        if k == "beam_splitter":
            _embed_modewise(S, _rot(p["theta"]), m)
        elif k == "coupler":
            _embed_modewise(S, p["matrix"], m)
        elif k == "phase_rotation":
            i = 2 * m[0]
            S[i:i + 2, i:i + 2] = _rot(p["phi"])
        elif k == "displace":
            beta = complex(p["beta"])
            d[2 * m[0]] = SQRT2 * beta.real
            d[2 * m[0] + 1] = SQRT2 * beta.imag
        elif k == "amplifier":
            G = p["gain"]
            h = np.sqrt(G * G - 1.0)
            s, i = m
            S[2 * s, 2 * s] = S[2 * i, 2 * i] = G
            S[2 * s + 1, 2 * s + 1] = S[2 * i + 1, 2 * i + 1] = G
            S[2 * s, 2 * i] = S[2 * i, 2 * s] = h
            S[2 * s + 1, 2 * i + 1] = S[2 * i + 1, 2 * s + 1] = -h
        elif k == "qnd":
            c, t = m
            kappa = p["kappa"]
            if p["quadrature"] == "X":
                S[2 * t, 2 * c] = kappa
                S[2 * c + 1, 2 * t + 1] = -kappa
            else:
                # P-type coupling = X-type conjugated by quarter-turn rotations
                xq = Component("qnd", m, {"kappa": kappa, "quadrature": "X"}).gaussian_map(n)
                fwd = phase_rotation(np.pi / 2, c).gaussian_map(n)
                fwd = compose(phase_rotation(np.pi / 2, t).gaussian_map(n), fwd)
                back = phase_rotation(-np.pi / 2, c).gaussian_map(n)
                back = compose(phase_rotation(-np.pi / 2, t).gaussian_map(n), back)
                return compose(back, compose(xq, fwd))
        else:
            raise ValueError(f"unknown component kind {k!r}")
        return GaussianMap(S, d)

    # -- complex picture -----------------------------------------------------
    def bogoliubov(self, n):
        """``(alpha, beta, c)`` with ``A'_j = sum_k alpha_jk A_k + beta_jk A_k^dag + c_j``."""
        if max(self.modes) >= n:
            raise ValueError(f"{self.kind} acts on mode {max(self.modes)} outside register of {n}")
        al = np.eye(n, dtype=complex)
        be = np.zeros((n, n), complex)
        c = np.zeros(n, complex)
        k = self.kind
        m = self.modes
        p = self.params
        if k in ("beam_splitter", "coupler"):
            u = _rot(p["theta"]) if k == "beam_splitter" else np.asarray(p["matrix"])
            al[np.ix_(m, m)] = u
        elif k == "phase_rotation":
            al[m[0], m[0]] = np.exp(1j * p["phi"])
        elif k == "displace":
            c[m[0]] = complex(p["beta"])
        elif k == "amplifier":
            G = p["gain"]
            h = np.sqrt(G * G - 1.0)
            s, i = m
            al[s, s] = al[i, i] = G
            be[s, i] = be[i, s] = h
        elif k == "qnd":
            ctl, tgt = m
            half = 0.5 * p["kappa"]
            if p["quadrature"] == "X":
                # A_t += kappa X_c / sqrt2 ;  A_c -= i kappa P_t / sqrt2
                al[tgt, ctl] += half
                be[tgt, ctl] += half
                al[ctl, tgt] -= half
                be[ctl, tgt] += half
            else:
                # A_t += i kappa P_c / sqrt2 ;  A_c -= kappa X_t / sqrt2
                al[tgt, ctl] += half
                be[tgt, ctl] -= half
                al[ctl, tgt] -= half
                be[ctl, tgt] -= half
        else:
            raise ValueError(f"unknown component kind {k!r}")
        return al, be, c


def _embed_modewise(S, u, modes):
    """Apply the real mode matrix ``u`` identically to the X and P blocks."""
    u = np.asarray(u, float)
    xs = [2 * m for m in modes]
    ps = [2 * m + 1 for m in modes]
    S[np.ix_(xs, xs)] = u
    S[np.ix_(ps, ps)] = u


# ---------------------------------------------------------------------------
# component constructors
# ---------------------------------------------------------------------------


def beam_splitter(theta, m1, m2):
    """Real two-mode rotation: ``A1' = cos A1 - sin A2``, ``A2' = sin A1 + cos A2``."""
    return Component("beam_splitter", (m1, m2), {"theta": float(theta)})


def amplifier(G, signal, idler):
    """Phase-insensitive amplifier ``A_s' = G A_s + sqrt(G^2-1) A_i^dag``."""
    if G < 1:
        raise ValueError(f"amplifier gain must be >= 1, got {G}")
    return Component("amplifier", (signal, idler), {"gain": float(G)})


def phase_rotation(phi, m):
    return Component("phase_rotation", (m,), {"phi": float(phi)})


def displace(beta, m):
    return Component("displace", (m,), {"beta": complex(beta)})


def qnd_coupling(kappa, control, target, quadrature="X"):
    """QND coupling writing the control's ``quadrature`` onto the target.

    X-type: ``X_t += kappa X_c`` and ``P_c -= kappa P_t``. P-type:
    ``P_t += kappa P_c`` and ``X_c -= kappa X_t``. Flip the sign of ``kappa``
    for the inverse.
    """
    if control == target:
        raise ValueError("QND control and target must differ")
    if quadrature not in _QUADRATURES:
        raise ValueError(f"quadrature must be 'X' or 'P', got {quadrature!r}")
    return Component("qnd", (control, target), {"kappa": float(kappa), "quadrature": quadrature})


def coupler_matrix(M, completion=None):
    """Real orthogonal ``M x M`` matrix whose last column is ``1/sqrt(M)``.

    Without ``completion`` the other columns come from Gram-Schmidt on the unit
    vectors ``e_1..e_{M-1}`` after the fixed column. ``completion`` may instead
    supply any ``M x (M-1)`` block (it is orthonormalised against the fixed
    column the same way).
    """
    if M < 2:
        raise ValueError("coupler needs M >= 2")
    fixed = np.full((M, 1), 1.0 / np.sqrt(M))
    rest = np.eye(M)[:, : M - 1] if completion is None else np.asarray(completion, float)
    q, r = np.linalg.qr(np.hstack([fixed, rest]))
    q = q * np.sign(np.diag(r))
    return np.hstack([q[:, 1:], q[:, :1]])


def balanced_coupler(M, modes, matrix=None):
    """``M x M`` balanced coupler; the last listed mode is the port with the fixed column."""
    modes = tuple(modes)
    if M < 2:
        raise ValueError("coupler needs M >= 2")
    if len(modes) != M:
        raise ValueError(f"coupler({M}) needs {M} modes, got {len(modes)}")
    u = coupler_matrix(M) if matrix is None else np.asarray(matrix, float)
    if u.shape != (M, M) or np.linalg.norm(u @ u.T - np.eye(M)) > 1e-12:
        raise ValueError("coupler matrix must be real orthogonal")
    if not np.allclose(u[:, -1], 1 / np.sqrt(M), atol=1e-12):
        raise ValueError("coupler matrix must have last column 1/sqrt(M)")
    return Component("coupler", modes, {"matrix": u})


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Network:
    register_size: int
    components: tuple
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for comp in self.components:
            if max(comp.modes) >= self.register_size:
                raise ValueError(
                    f"{comp.kind} on modes {comp.modes} exceeds register size {self.register_size}"
                )

    def __getitem__(self, label):
        return self.labels[label]

    def then(self, *components, labels=None):
        """Network extended by further components (applied after the current ones)."""
        new_labels = dict(self.labels)
        new_labels.update(labels or {})
        return Network(self.register_size, self.components + tuple(components), new_labels)

    def compile(self):
        gmap = GaussianMap.identity(self.register_size)
        for comp in self.components:
            gmap = compose(comp.gaussian_map(self.register_size), gmap)
        return gmap

    def bogoliubov(self):
        n = self.register_size
        al = np.eye(n, dtype=complex)
        be = np.zeros((n, n), complex)
        c = np.zeros(n, complex)
        for comp in self.components:
            a2, b2, c2 = comp.bogoliubov(n)
            al, be, c = (
                a2 @ al + b2 @ be.conj(),
                a2 @ be + b2 @ al.conj(),
                a2 @ c + b2 @ c.conj() + c2,
            )
        return al, be, c

    def forms(self):
        """Heisenberg output operators of every mode, from the complex picture."""
        al, be, c = self.bogoliubov()
        return [OperatorLinearForm(al[j], be[j], c[j]) for j in range(self.register_size)]

    def form(self, label):
        return self.forms()[self.labels[label]]


def cloner_angles(gamma):
    """Wave-plate angles and amplifier gain of the asymmetric cloner."""
    theta1 = np.arctan(SQRT2 * np.sinh(gamma))
    theta2 = np.arctan(-np.exp(2 * gamma))
    G = SQRT2 * np.cosh(gamma)
    return theta1, theta2, G


def build_asymmetric_cloner(gamma, extra=()):
    """Optimal Gaussian 1->2 asymmetric cloner on modes ``S=0, S'=1, I=2``.

    ``extra`` names additional (untouched) ancilla modes appended after ``I``.
    The trailing pi rotation on ``S'`` removes the global sign the
    wave-plate/amplifier decomposition leaves on that clone.
    """
    theta1, theta2, G = cloner_angles(gamma)
    labels = {"S": 0, "S'": 1, "I": 2}
    for i, name in enumerate(extra):
        labels[name] = 3 + i
    comps = (
        beam_splitter(theta1, 0, 1),
        amplifier(G, 0, 2),
        beam_splitter(theta2, 0, 1),
        phase_rotation(np.pi, 1),
    )
    return Network(3 + len(extra), comps, labels)


def distributed_layout(M):
    """Mode indices of the 1->(M, M-1) cloner.

    Returns ``(labels, signal_ports, idler_ports)``; the port lists are in
    coupler input order, fixed-column port last.
    """
    labels = {f"A{k}": k - 1 for k in range(1, M)}
    labels["S"] = M - 1
    labels["I"] = M
    for k in range(2, M):
        labels[f"B{k}"] = M + k - 1
    signal_ports = [labels[f"A{k}"] for k in range(1, M)] + [labels["S"]]
    idler_ports = [labels[f"B{k}"] for k in range(2, M)] + [labels["I"]]
    for j, m in enumerate(signal_ports, start=1):
        labels[f"S{j}"] = m
    for l, m in enumerate(idler_ports, start=1):
        labels[f"I{l}"] = m
    return labels, signal_ports, idler_ports


def build_distributed_cloner(M, u=None, v=None):
    """Symmetric 1->(M, M-1) cloner: amplifier with gain sqrt(M) then two couplers.

    ``u`` (M x M) and ``v`` ((M-1) x (M-1)) override the default Gram-Schmidt
    coupler matrices; both need their last column uniform.
    """
    if M < 2:
        raise ValueError("distributed cloner needs M >= 2")
    labels, sig, idl = distributed_layout(M)
    comps = [amplifier(np.sqrt(M), labels["S"], labels["I"]), balanced_coupler(M, sig, u)]
    if M > 2:
        comps.append(balanced_coupler(M - 1, idl, v))
    return Network(2 * M - 1, comps, labels)


def build_partial_reversal_network(gamma, kappa, variant="two_qnd"):
    """Cloner followed by Eve's partial Bell measurement coupling.

    Modes: ``S, S', I, A, B``. Afterwards ``X_A`` carries
    ``X_A + kappa e^-gamma (X_S' + X_I)/sqrt2`` and ``P_B`` carries
    ``P_B + kappa e^-gamma (P_I - P_S')/sqrt2`` (initial operators).

    ``variant="two_qnd"`` mixes ``S'`` and ``I`` on a balanced beam splitter,
    applies one X-type and one P-type QND, and recombines. ``"four_qnd"``
    couples each of ``S'``, ``I`` to both meters directly.
    """
    net = build_asymmetric_cloner(gamma, extra=("A", "B"))
    sp, i, a, b = net["S'"], net["I"], net["A"], net["B"]
    if variant == "two_qnd":
        k2 = SQRT2 * kappa
        comps = (
            beam_splitter(np.pi / 4, i, sp),  # i <- (I - S')/sqrt2, sp <- (I + S')/sqrt2
            qnd_coupling(k2, i, a, "X"),
            qnd_coupling(k2, sp, b, "P"),
            beam_splitter(-np.pi / 4, i, sp),
        )
    elif variant == "four_qnd":
        comps = (
            qnd_coupling(-kappa, sp, a, "X"),
            qnd_coupling(kappa, i, a, "X"),
            qnd_coupling(kappa, sp, b, "P"),
            qnd_coupling(kappa, i, b, "P"),
        )
    else:
        raise ValueError(f"unknown partial-reversal variant {variant!r}")
    return net.then(*comps)
