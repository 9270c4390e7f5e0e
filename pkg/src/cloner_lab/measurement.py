"""Homodyne and Bell measurements, Gaussian conditioning and feedforward."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .quad_algebra import (
    SQRT2,
    GaussianState,
    NonCommutingMeasurement,
    OperatorLinearForm,
    apply,
    commutator,
    gaussian_fidelity,
)

COMMUTE_TOL = 1e-10
BLOCK_TRIALS = 4096


@dataclass(frozen=True, eq=False)
class QuadratureForm:
    """Real combination ``sum_q c_q R_q`` of the quadratures ``(X_0, P_0, ...)``."""

    coefficients: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.shape[0] % 2:
            raise ValueError("coefficients must be a vector over 2N quadratures")
        if not np.any(c):
            raise ValueError("quadrature form must be nonzero")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n_modes(self):
        return self.coefficients.shape[0] // 2

    @property
    def support(self):
        nz = np.flatnonzero(self.coefficients)
        return frozenset(int(q) // 2 for q in nz)

    @classmethod
    def quad(cls, which, mode, n):
        c = np.zeros(2 * n)
        c[2 * mode + (which == "P")] = 1.0
        return cls(c, f"{which}{mode}")

    @classmethod
    def x_minus(cls, a, b, n):
        """``(X_a - X_b)/sqrt2``."""
        c = np.zeros(2 * n)
        c[2 * a], c[2 * b] = 1 / SQRT2, -1 / SQRT2
        return cls(c, f"X-({a},{b})")

    @classmethod
    def p_plus(cls, a, b, n):
        """``(P_a + P_b)/sqrt2``."""
        c = np.zeros(2 * n)
        c[2 * a + 1] = c[2 * b + 1] = 1 / SQRT2
        return cls(c, f"P+({a},{b})")

    def operator(self, output_forms):
        """The measured observable expressed in the network's initial operators."""
        if len(output_forms) != self.n_modes:
            raise ValueError("register size mismatch")
        n = output_forms[0].n_modes
        res = OperatorLinearForm(np.zeros(n), np.zeros(n))
        for j, f in enumerate(output_forms):
            cx, cp = self.coefficients[2 * j], self.coefficients[2 * j + 1]
            if cx:
                res = res + (f + f.dagger()) * (cx / SQRT2)
            if cp:
                res = res + (f - f.dagger()) * (cp / (1j * SQRT2))
        return res


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outcomes: np.ndarray
    forms: tuple
    seed_path: tuple = ()


def condition(state, form, outcome):
    """Gaussian state conditioned on ``form`` having returned ``outcome``.

    Returns the post-measurement state; the measured direction keeps zero
    variance and the modes it touches are flagged as collapsed.
    """
    c = form.coefficients
    V = state.cov
    var = float(c @ V @ c)
    if var <= 1e-300:
        return state
    Vc = V @ c
    mean = state.mean + Vc * (outcome - c @ state.mean) / var
    cov = V - np.outer(Vc, Vc) / var
    cov = 0.5 * (cov + cov.T)
    w, U = np.linalg.eigh(cov)
    if w.min() < 0:
        cov = (U * np.clip(w, 0.0, None)) @ U.T
        cov = 0.5 * (cov + cov.T)
    return GaussianState(mean, cov, state.collapsed | form.support)


def homodyne(state, form, rng=None, *, normal=None, outcome=None):
    """Sample (or force) the outcome of measuring ``form`` and condition on it.

    Exactly one source for the outcome is used, in order of precedence:
    ``outcome`` (forced value), ``normal`` (a standard normal draw), ``rng``.
    """
    if form.n_modes != state.n_modes:
        raise ValueError("register size mismatch between form and state")
    c = form.coefficients
    mu = float(c @ state.mean)
    var = float(c @ state.cov @ c)
    if outcome is None:
        if var <= 1e-300:
            outcome = mu
        else:
            if normal is None:
                if rng is None:
                    raise ValueError("homodyne needs rng, normal or outcome")
                normal = rng.standard_normal()
            outcome = mu + np.sqrt(var) * float(normal)
    return float(outcome), condition(state, form, outcome)


def bell_measure(state, mode_a, mode_b, rng=None, *, order="xp", normals=None):
    """Eight-port homodyne on ``(mode_a, mode_b)``: ``X_-`` and ``P_+``.

    ``order="px"`` measures ``P_+`` first. ``normals`` (two standard normal
    draws, consumed in measurement order) replaces ``rng``.
    """
    if mode_a == mode_b:
        raise ValueError("Bell measurement needs two distinct modes")
    n = state.n_modes
    xm = QuadratureForm.x_minus(mode_a, mode_b, n)
    pp = QuadratureForm.p_plus(mode_a, mode_b, n)
    seq = (xm, pp) if order == "xp" else (pp, xm)
    vals = {}
    post = state
    for i, f in enumerate(seq):
        vals[f.label], post = homodyne(post, f, rng, normal=None if normals is None else normals[i])
    return vals[xm.label], vals[pp.label], post


def _as_operator(m, output_forms):
    return m if isinstance(m, OperatorLinearForm) else m.operator(output_forms)


def check_commuting(ops, tol=COMMUTE_TOL):
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            c = commutator(ops[i], ops[j])
            if abs(c) > tol:
                raise NonCommutingMeasurement(
                    f"measured observables {i} and {j} have commutator {c:.6g}"
                )


def effective_output_map(network, measured, gains, target):
    """Heisenberg operator of ``target`` after measurement-conditioned displacement.

    ``A''_target = A'_target + sum_j gains[j] * M_j`` where ``M_j`` is measured
    observable ``j``. Entries of ``measured`` are :class:`QuadratureForm` over
    the network's outputs or :class:`OperatorLinearForm` over its inputs.

    Raises:
        NonCommutingMeasurement: the observables cannot be measured jointly, so
            substituting their outcomes into an operator identity is invalid.
    """
    forms = network.forms()
    ops = [_as_operator(m, forms) for m in measured]
    check_commuting(ops)
    gains = np.broadcast_to(np.asarray(gains, complex), (len(ops),))
    res = forms[target]
    for g, op in zip(gains, ops):
        if g != 0:
            res = res + op * g
    return res


def _displacement_rows(gains):
    g = np.asarray(gains, complex)
    return np.stack([SQRT2 * g.real, SQRT2 * g.imag], axis=1)


def displace_mode(state, mode, shift):
    mean = state.mean.copy()
    mean[2 * mode] += shift[0]
    mean[2 * mode + 1] += shift[1]
    return GaussianState(mean, state.cov, state.collapsed)


def run_conditional_trajectory(network, measured, gains, input_state, rng=None, *,
                               target, normals=None, seed_path=()):
    """One trial: evolve, measure every form in order, displace ``target``.

    The displacement of ``A_target`` is ``sum_j gains[j] * outcome_j``.

    Returns:
        (post_state, MeasurementRecord)
    """
    check_commuting([m.operator(network.forms()) for m in measured])
    state = apply(network.compile(), input_state)
    outcomes = []
    for i, f in enumerate(measured):
        val, state = homodyne(state, f, rng, normal=None if normals is None else normals[i])
        outcomes.append(val)
    outcomes = np.array(outcomes)
    shift = outcomes @ _displacement_rows(gains) if len(measured) else np.zeros(2)
    post = displace_mode(state, target, shift)
    return post, MeasurementRecord(outcomes, tuple(measured), tuple(seed_path))


# ---------------------------------------------------------------------------
# batched Monte Carlo
# ---------------------------------------------------------------------------


def block_normals(seed, block, n_meas, size=BLOCK_TRIALS):
    """Standard normals for one fixed block of trials, from its own stream."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))
    return rng.standard_normal((size, n_meas))


def trial_normals(seed, trials, n_meas):
    """Normals for trials ``0..trials-1``; independent of how trials are scheduled."""
    n_blocks = -(-trials // BLOCK_TRIALS)
    z = np.concatenate([block_normals(seed, b, n_meas) for b in range(n_blocks)]) if n_blocks else np.empty((0, n_meas))
    return z[:trials]


@dataclass(frozen=True, eq=False)
class TrajectoryPlan:
    """Outcome-independent part of repeated conditioning, precomputed once.

    Conditioning a Gaussian state changes the covariance in a way that does not
    depend on the outcome, so only the mean has to be tracked per trial.
    """

    mu0: np.ndarray
    C: np.ndarray
    K: np.ndarray
    sd: np.ndarray
    disp: np.ndarray
    target: int
    target_cov: np.ndarray

    @classmethod
    def build(cls, network, measured, gains, input_state, target):
        check_commuting([m.operator(network.forms()) for m in measured])
        state = apply(network.compile(), input_state)
        V = state.cov.copy()
        m = len(measured)
        n2 = V.shape[0]
        C = np.zeros((m, n2))
        K = np.zeros((m, n2))
        sd = np.zeros(m)
        for j, f in enumerate(measured):
            c = f.coefficients
            var = float(c @ V @ c)
            C[j] = c
            if var > 1e-300:
                Vc = V @ c
                K[j] = Vc / var
                sd[j] = np.sqrt(var)
                V = V - np.outer(Vc, Vc) / var
                V = 0.5 * (V + V.T)
        t = slice(2 * target, 2 * target + 2)
        disp = _displacement_rows(gains) if m else np.zeros((0, 2))
        return cls(state.mean.copy(), C, K, sd, disp, int(target), V[t, t].copy())

    def run(self, z, kernel=None):
        kernel = kernel or _kernels.trajectory
        return kernel(self.mu0, self.C, self.K, self.sd, self.disp, 2 * self.target, z)


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    outcomes: np.ndarray
    target_means: np.ndarray
    target_cov: np.ndarray
    fidelities: np.ndarray

    @property
    def mean_fidelity(self):
        return float(self.fidelities.mean())

    @property
    def stderr(self):
        n = self.fidelities.shape[0]
        return float(self.fidelities.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def _threads():
    try:
        return max(1, int(os.environ.get("CLONER_LAB_THREADS", "1")))
    except ValueError:
        return 1


def sample_trajectories(network, measured, gains, input_state, *, target, reference,
                        trials, seed, workers=None):
    """Monte Carlo over measurement outcomes; per-trial fidelity of ``target``.

    ``reference`` is the single-mode :class:`GaussianState` the target is
    compared against. Trials are cut into fixed blocks, each with its own random
    stream, so the result is the same for any ``workers`` count.
    """
    plan = TrajectoryPlan.build(network, measured, gains, input_state, target)
    m = len(measured)
    Vsum = plan.target_cov + reference.cov
    W = np.linalg.inv(Vsum)
    f0 = gaussian_fidelity(reference.mean, plan.target_cov, reference.mean, reference.cov)
    n_blocks = -(-trials // BLOCK_TRIALS)

    def one(b):
        size = min(BLOCK_TRIALS, trials - b * BLOCK_TRIALS)
        z = block_normals(seed, b, max(m, 1))[:size, :m]
        out, tm = plan.run(z)
        fid = _kernels.trajectory_fidelity(tm, reference.mean, W, f0)
        return out, tm, fid

    workers = workers or _threads()
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(one, range(n_blocks)))
    else:
        parts = [one(b) for b in range(n_blocks)]
    return TrajectoryEnsemble(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        plan.target_cov,
        np.concatenate([p[2] for p in parts]),
    )
