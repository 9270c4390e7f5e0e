"""Self-check suites run by ``cloner-lab verify``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .fock import oracle_clone_run
from .measurement import effective_output_map
from .network import (
    build_asymmetric_cloner,
    build_distributed_cloner,
    build_partial_reversal_network,
)
from .protocols import (
    ProtocolConfig,
    closed_form_asymmetric,
    closed_form_distributed,
    numeric_distributed_gain,
    numeric_partial_gain,
    optimal_partial_gain,
    total_reversal,
)
from .quad_algebra import (
    NonCommutingMeasurement,
    OperatorLinearForm,
    apply,
    commutator,
    form_moments,
    hermitian_parts,
    make_state,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def all_networks():
    """Every network family the package builds, on representative parameters."""
    nets = [build_asymmetric_cloner(g) for g in np.linspace(-2, 2, 9)]
    for g in (-1.0, 0.0, 1.0):
        for k in (0.0, 0.5, 2.0):
            for variant in ("two_qnd", "four_qnd"):
                nets.append(build_partial_reversal_network(g, k, variant))
    nets += [build_distributed_cloner(M) for M in range(2, 7)]
    return nets


def commutation_residual(forms):
    """Largest deviation from ``[A_i, A_j^dag] = delta_ij`` and ``[A_i, A_j] = 0``."""
    worst = 0.0
    for i, fi in enumerate(forms):
        for j, fj in enumerate(forms):
            worst = max(worst, abs(commutator(fi, fj.dagger()) - (i == j)), abs(commutator(fi, fj)))
    return worst


def dual_moment_residual(net, rng):
    n = net.register_size
    alphas = rng.normal(size=n) + 1j * rng.normal(size=n)
    state = make_state("coherent", n, alpha=alphas)
    # a non-trivial covariance so second moments are really tested
    state = apply(build_asymmetric_cloner(0.3).compile(), make_state("thermal", 3, nbar=0.7)) if n == 3 else state
    out = apply(net.compile(), state)
    mean, cov = form_moments(net.forms(), state)
    return max(np.abs(mean - out.mean).max(), np.abs(cov - out.cov).max())


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crashing suite is a failing suite
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def check_structure():
    nets = all_networks()
    sym = max(n.compile().residual() for n in nets)
    com = max(commutation_residual(n.forms()) for n in nets)
    rng = np.random.default_rng(0)
    dual = max(dual_moment_residual(n, rng) for n in nets)
    ok = sym < 1e-12 and com < 1e-12 and dual < 1e-10
    return ok, f"symplectic {sym:.2e}, commutation {com:.2e}, dual moments {dual:.2e} over {len(nets)} networks"


def check_oracle():
    r0 = oracle_clone_run(0.5, 0.0, 24)
    g = 0.5 * math.log(2)
    rs = oracle_clone_run(0.5, g, 24, "S")
    rp = oracle_clone_run(0.5, g, 24, "S'")
    fs, fp = closed_form_asymmetric(g)
    errs = (abs(r0.fidelity - 2 / 3), abs(rs.fidelity - fs), abs(rp.fidelity - fp))
    return max(errs) < 1e-3, "oracle-vs-closed-form errors " + ", ".join(f"{e:.2e}" for e in errs)


def check_gains():
    worst = 0.0
    for g in (-1.0, 0.0, 1.0):
        for k in (0.5, 1.0, 2.0):
            _, cal = numeric_partial_gain(g, k)
            worst = max(worst, abs(abs(cal) - optimal_partial_gain(g, k)))
    for M in range(2, 7):
        for L in range(1, M):
            worst = max(worst, abs(numeric_distributed_gain(M, L) - closed_form_distributed(M, L)[1]))
    return worst < 1e-6, f"max |numeric - closed-form gain| = {worst:.2e}"


def check_total_reversal(y_sign=1.0):
    worst = 0.0
    coherent = []
    for gamma in (0.0, 0.7):
        for inp in ("coherent:1,0.5", "squeezed:1,0", "thermal:2"):
            rep = total_reversal(ProtocolConfig("total_reversal", gamma=gamma, input=inp, trials=2000),
                                 y_sign=y_sign)
            worst = max(worst, abs(rep.fidelities["S"] - 1), abs(rep.extra["mc_min"] - 1),
                        abs(rep.extra["mc_max"] - 1))
            if inp.startswith("coherent"):
                coherent.append(f"F(gamma={gamma:g})={rep.fidelities['S']:.9f}")
    return worst < 1e-9, f"max |F - 1| = {worst:.3g}; coherent input {', '.join(coherent)}"


def check_non_measurable():
    net = build_asymmetric_cloner(0.5)
    n = 3
    sq2 = math.sqrt(2)
    g = 0.5
    Z = (OperatorLinearForm.annihilation(2, n) * (sq2 * math.cosh(g))
         - OperatorLinearForm.creation(1, n) * (sq2 * math.sinh(g))
         + OperatorLinearForm.creation(0, n) - OperatorLinearForm.annihilation(0, n))
    xz, pz = hermitian_parts(Z)
    try:
        effective_output_map(net, [xz, pz], [-1, -1j], 2)
    except NonCommutingMeasurement:
        return True, f"NonCommutingMeasurement raised; [X_Z, P_Z] = {commutator(xz, pz):.3g}"
    return False, "idler restoration was (wrongly) accepted"


def run_verification(y_sign=1.0):
    return [
        _timed("structural invariants", check_structure),
        _timed("Fock oracle", check_oracle),
        _timed("gain optimizer", check_gains),
        _timed("total reversal", lambda: check_total_reversal(y_sign)),
        _timed("non-measurability of Z", check_non_measurable),
    ]
