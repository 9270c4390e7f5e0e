"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--trials N] [--repeat R]
"""
import argparse
import time

import numpy as np

from cloner_lab import _kernels
from cloner_lab.measurement import TrajectoryPlan, trial_normals
from cloner_lab.network import build_distributed_cloner
from cloner_lab.protocols import distributed_measurements
from cloner_lab.quad_algebra import make_state, product_state


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--M", type=int, default=6)
    args = ap.parse_args()
    if _kernels.trajectory_numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    # distributed reversal with every eavesdropper measuring: the largest plan we build
    net = build_distributed_cloner(args.M)
    measured = distributed_measurements(net, range(1, args.M))
    gains = np.tile([0.5, 0.5j], args.M - 1)
    states = [make_state("vacuum")] * net.register_size
    states[net["S"]] = make_state("coherent", alpha=0.7 + 0.2j)
    plan = TrajectoryPlan.build(net, measured, gains, product_state(states), net[f"S{args.M}"])
    z = trial_normals(0, args.trials, len(measured))
    ref = np.zeros(2)
    W = np.eye(2)

    cases = {
        "trajectory": (lambda: plan.run(z, _kernels.trajectory_numpy),
                       lambda: plan.run(z, _kernels.trajectory_numba)),
        "fidelity": (lambda: _kernels.fidelity_numpy(z[:, :2], ref, W, 0.5),
                     lambda: _kernels.fidelity_numba(z[:, :2], ref, W, 0.5)),
        "displacement(dim=33)": (lambda: [_kernels.displacement_matrix_numpy(0.5 + 0.1j, 33) for _ in range(200)],
                                 lambda: [_kernels.displacement_matrix_numba(0.5 + 0.1j, 33) for _ in range(200)]),
    }
    # warm up the JIT so compilation is not timed
    for _, fast in cases.values():
        fast()
    o1, t1 = plan.run(z, _kernels.trajectory_numpy)
    o2, t2 = plan.run(z, _kernels.trajectory_numba)
    print(f"trajectory backends agree to {max(np.abs(o1 - o2).max(), np.abs(t1 - t2).max()):.1e}")
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, (slow, fast) in cases.items():
        ts, tf = best_of(slow, args.repeat), best_of(fast, args.repeat)
        print(f"{name:<22}{ts:>12.4f}{tf:>12.4f}{ts / tf:>10.1f}x")
    print(f"({args.trials} trials, {len(measured)} measurements, {net.register_size} modes)")


if __name__ == "__main__":
    main()
