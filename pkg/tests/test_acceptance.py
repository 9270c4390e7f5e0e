"""The eight acceptance criteria, at their stated tolerances and time budgets.

Run under pytest (a PASS/FAIL line per criterion is printed in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from cloner_lab.fock import oracle_clone_run
from cloner_lab.measurement import effective_output_map
from cloner_lab.network import build_asymmetric_cloner
from cloner_lab.protocols import (
    ProtocolConfig,
    clone_only,
    closed_form_asymmetric,
    closed_form_distributed,
    closed_form_partial,
    distributed_reversal,
    effective_gamma,
    numeric_distributed_gain,
    numeric_partial_gain,
    optimal_partial_gain,
    partial_reversal,
    total_reversal,
)
from cloner_lab.quad_algebra import (
    NonCommutingMeasurement,
    OperatorLinearForm,
    commutator,
    hermitian_parts,
)
from cloner_lab.verify import all_networks, commutation_residual, dual_moment_residual

RESULTS = {}


def record(number, title, passed, detail, seconds, budget=None):
    within = budget is None or seconds < budget
    ok = bool(passed and within)
    timing = f"{seconds:.2f}s" + (f" < {budget:g}s" if budget else "")
    if not within:
        timing += " OVER BUDGET"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} ({title}): {detail}; {timing}"
    RESULTS[number] = line
    print(line)
    return ok


def criterion_1():
    t0 = time.perf_counter()
    rep = clone_only(ProtocolConfig(gamma=0.0, trials=100_000, seed=1))
    d_s = abs(rep.fidelities["S"] - 2 / 3)
    d_sp = abs(rep.fidelities["S'"] - 2 / 3)
    z_s = abs(rep.mc_fidelity - 2 / 3) / rep.mc_stderr
    z_sp = abs(rep.extra["mc_fidelity_S'"] - 2 / 3) / rep.extra["mc_stderr_S'"]
    ok = max(d_s, d_sp) < 1e-10 and max(z_s, z_sp) < 3
    mc_sp = rep.extra["mc_fidelity_S'"]
    detail = (f"analytic |dF| = {max(d_s, d_sp):.1e}; MC F_S = {rep.mc_fidelity:.5f} ({z_s:.2f} se), "
              f"F_S' = {mc_sp:.5f} ({z_sp:.2f} se)")
    return record(1, "symmetric cloning baseline", ok, detail, time.perf_counter() - t0, 5)


def criterion_2():
    t0 = time.perf_counter()
    worst = 0.0
    for gamma in np.linspace(-1, 1, 21):
        rep = clone_only(ProtocolConfig(gamma=float(gamma)), monte_carlo=False)
        fs, fsp = closed_form_asymmetric(gamma)
        worst = max(worst, abs(rep.fidelities["S"] - fs), abs(rep.fidelities["S'"] - fsp))
    return record(2, "asymmetric fidelity curve", worst < 1e-9, f"max |dF| = {worst:.1e} over 21 gammas",
                  time.perf_counter() - t0, 5)


def criterion_3():
    t0 = time.perf_counter()
    worst_f = worst_r = 0.0
    for inp in ("coherent:1,0.5", "squeezed:1,0", "thermal:2"):
        for gamma in (0.0, 0.7):
            rep = total_reversal(ProtocolConfig("total_reversal", gamma=gamma, input=inp, trials=5000, seed=3))
            worst_f = max(worst_f, abs(rep.fidelities["S"] - 1),
                          abs(rep.extra["mc_min"] - 1), abs(rep.extra["mc_max"] - 1))
            worst_r = max(worst_r, rep.extra["operator_residual"])
    ok = worst_f < 1e-9 and worst_r < 1e-12
    return record(3, "total reversal", ok, f"max per-trial |F - 1| = {worst_f:.1e}, operator residual {worst_r:.1e}",
                  time.perf_counter() - t0, 10)


def criterion_4():
    t0 = time.perf_counter()
    worst_f = worst_g = worst_gain = 0.0
    for gamma in (-1.0, 0.0, 1.0):
        for kappa in (0.0, 0.5, 1.0, 2.0):
            rep = partial_reversal(ProtocolConfig("partial_reversal", gamma=gamma, kappa=kappa), monte_carlo=False)
            fs, fsp = closed_form_partial(gamma, kappa)
            worst_f = max(worst_f, abs(rep.fidelities["S"] - fs), abs(rep.fidelities["S'"] - fsp))
            # effective asymmetry read back from the simulated fidelity of Bob's clone
            g_sim = -0.5 * math.log(2 / rep.fidelities["S"] - 2)
            worst_g = max(worst_g, abs(g_sim - effective_gamma(gamma, kappa)))
            _, g_num = numeric_partial_gain(gamma, kappa)
            worst_gain = max(worst_gain, abs(abs(g_num) - optimal_partial_gain(gamma, kappa)))
    ok = worst_f < 1e-9 and worst_g < 1e-9 and worst_gain < 1e-6
    detail = f"max |dF| = {worst_f:.1e}, |d gamma'| = {worst_g:.1e}, |d gain| = {worst_gain:.1e}"
    return record(4, "partial reversal", ok, detail, time.perf_counter() - t0, 30)


def criterion_5():
    t0 = time.perf_counter()
    worst_f = worst_gain = worst_full = 0.0
    for M in range(2, 7):
        for L in range(M):
            rep = distributed_reversal(ProtocolConfig("distributed", M=M, L=L), monte_carlo=False)
            F = rep.fidelities[f"S{M}"]
            worst_f = max(worst_f, abs(F - closed_form_distributed(M, L)[0]))
            if L == M - 1:
                worst_full = max(worst_full, abs(F - 1))
            if L > 0:  # with nobody measuring there is no gain to optimise
                worst_gain = max(worst_gain, abs(numeric_distributed_gain(M, L) - 1 / (M - L)))
    ok = worst_f < 1e-9 and worst_gain < 1e-6 and worst_full < 1e-9
    detail = f"max |dF| = {worst_f:.1e}, |d gain| = {worst_gain:.1e}, L=M-1 |F - 1| = {worst_full:.1e}"
    return record(5, "distributed reversal", ok, detail, time.perf_counter() - t0, 60)


def criterion_6():
    t0 = time.perf_counter()
    raised, worst = True, 0.0
    n = 3
    a, ad = OperatorLinearForm.annihilation, OperatorLinearForm.creation
    for gamma in (0.0, 1.0):
        Z = (a(2, n) * (math.sqrt(2) * math.cosh(gamma)) - ad(1, n) * (math.sqrt(2) * math.sinh(gamma))
             + ad(0, n) - a(0, n))
        xz, pz = hermitian_parts(Z)
        worst = max(worst, abs(commutator(xz, pz) - 1j))
        try:
            effective_output_map(build_asymmetric_cloner(gamma), [xz, pz], [-1, -1j], 2)
            raised = False
        except NonCommutingMeasurement:
            pass
    ok = raised and worst < 1e-12
    detail = f"NonCommutingMeasurement raised: {raised}; |[X_Z, P_Z] - i| = {worst:.1e}"
    return record(6, "non-measurability of Z", ok, detail, time.perf_counter() - t0)


def criterion_7():
    t0 = time.perf_counter()
    r0 = oracle_clone_run(0.5, 0.0, 24)
    g = 0.5 * math.log(2)
    fs, fsp = closed_form_asymmetric(g)
    rs = oracle_clone_run(0.5, g, 24, "S")
    rp = oracle_clone_run(0.5, g, 24, "S'")
    errs = (abs(r0.fidelity - 2 / 3), abs(rs.fidelity - fs), abs(rp.fidelity - fsp))
    detail = f"|F - 2/3| = {errs[0]:.1e}; at gamma=ln2/2 |dF_S| = {errs[1]:.1e}, |dF_S'| = {errs[2]:.1e}"
    return record(7, "oracle equivalence", max(errs) < 1e-3, detail, time.perf_counter() - t0, 60)


def criterion_8():
    t0 = time.perf_counter()
    nets = all_networks()
    sym = max(n.compile().residual() for n in nets)
    com = max(commutation_residual(n.forms()) for n in nets)
    rng = np.random.default_rng(8)
    dual = max(dual_moment_residual(n, rng) for n in nets)
    ok = sym < 1e-12 and com < 1e-12 and dual < 1e-10
    detail = f"{len(nets)} networks: symplectic {sym:.1e}, commutation {com:.1e}, dual moments {dual:.1e}"
    return record(8, "structural invariants", ok, detail, time.perf_counter() - t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion):
    assert criterion(), RESULTS[int(criterion.__name__.rsplit("_", 1)[1])]


if __name__ == "__main__":
    outcomes = [c() for c in CRITERIA]
    raise SystemExit(0 if all(outcomes) else 1)
