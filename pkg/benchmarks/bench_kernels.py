"""Time the jit kernels against their pure-numpy twins.

Run as a script:  python3 benchmarks/bench_kernels.py [--repeats 5]

Each row reports the median wall time of both implementations on identical
inputs plus the worst entrywise deviation between their outputs, so the
table doubles as an agreement check.  With numba missing (or QDYNLAB_NO_JIT
set) only the numpy column is timed.
"""
import argparse
import time

import numpy as np

from qdynlab.kernels import (HAS_NUMBA, jit_disabled, rk4_propagate_nb,
                             rk4_propagate_numpy, trajectory_step_block_nb,
                             trajectory_step_block_numpy)

JIT_AVAILABLE = HAS_NUMBA and not jit_disabled()


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _dephasing_matrices(rng, dim, n_jumps):
    h = np.zeros((dim, dim), dtype=np.complex128)
    bs = np.empty((n_jumps, dim, dim), dtype=np.complex128)
    for j in range(n_jumps):
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        bs[j] = 0.5 * (m + m.conj().T)
    bds = bs.conj().transpose(0, 2, 1).copy()
    bdbs = np.einsum("jab,jbc->jac", bds, bs)
    alphas = rng.uniform(0.05, 0.2, size=n_jumps)
    return h, bs, bds, bdbs, alphas


def bench_rk4(rng, dim, n_steps, repeats):
    h, bs, bds, bdbs, alphas = _dephasing_matrices(rng, dim, 2)
    rho0 = np.eye(dim, dtype=np.complex128) / dim
    args = (h, bs, bds, bdbs, alphas, rho0, 1e-3, n_steps, True)
    out_np = rk4_propagate_numpy(*args)
    t_np = _median_time(lambda: rk4_propagate_numpy(*args), repeats)
    if not JIT_AVAILABLE:
        return t_np, None, 0.0
    out_nb = rk4_propagate_nb(*args)  # first call compiles
    t_nb = _median_time(lambda: rk4_propagate_nb(*args), repeats)
    return t_np, t_nb, float(np.abs(out_np - out_nb).max())


def bench_trajectories(rng, n_particles, n_steps, repeats):
    dim, n_chan = 2, 1
    ls = np.empty((n_chan, dim, dim), dtype=np.complex128)
    ls[0] = np.sqrt(0.2) * np.diag([1.0, -1.0])
    cs = np.einsum("jab,jbc->jac", ls.conj().transpose(0, 2, 1), ls)
    m_drift = np.eye(dim, dtype=np.complex128) - 0.5 * 1e-2 * cs.sum(axis=0)
    psis0 = np.ones((n_particles, dim), dtype=np.complex128) / np.sqrt(dim)
    u = rng.random((n_steps, 2, n_particles))

    def run(block):
        psis = psis0
        for k in range(n_steps):
            psis = block(psis, m_drift, ls, cs, 1e-2, u[k, 0], u[k, 1])[0]
        return psis

    out_np = run(trajectory_step_block_numpy)
    t_np = _median_time(lambda: run(trajectory_step_block_numpy), repeats)
    if not JIT_AVAILABLE:
        return t_np, None, 0.0
    out_nb = run(trajectory_step_block_nb)  # first call compiles
    t_nb = _median_time(lambda: run(trajectory_step_block_nb), repeats)
    return t_np, t_nb, float(np.abs(out_np - out_nb).max())


def _row(label, t_np, t_nb, diff):
    if t_nb is None:
        return f"{label:34s} {t_np * 1e3:9.2f}        --      --        --"
    return (f"{label:34s} {t_np * 1e3:9.2f} {t_nb * 1e3:9.2f} "
            f"{t_np / t_nb:7.1f}x {diff:9.1e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats per case (median is reported)")
    ns = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"jit backend available: {JIT_AVAILABLE}")
    print(f"{'case':34s} {'numpy ms':>9s} {'numba ms':>9s} {'speedup':>8s} {'max diff':>9s}")
    for dim, n_steps in ((4, 2000), (16, 1000), (32, 400)):
        print(_row(f"rk4 dim={dim} steps={n_steps}",
                   *bench_rk4(rng, dim, n_steps, ns.repeats)))
    for n_particles, n_steps in ((512, 200), (4096, 200)):
        print(_row(f"trajectories n={n_particles} steps={n_steps}",
                   *bench_trajectories(rng, n_particles, n_steps, ns.repeats)))


if __name__ == "__main__":
    main()
