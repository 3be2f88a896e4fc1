import os
import subprocess
import sys

import numpy as np
import pytest

from qdynlab import kernels
from qdynlab.errors import ConfigError
from qdynlab.lindblad import LindbladGenerator
from qdynlab.rand import random_density, random_hermitian
from qdynlab.states import Observable


def _stacked_dephasing(alpha=0.1):
    g = LindbladGenerator(Observable(np.zeros((2, 2))), ((alpha, np.diag([1.0, -1.0])),))
    return g.stacked()


def test_active_backend_reports_a_known_name():
    assert kernels.active_backend() in ("numba", "numpy")


def test_rk4_backends_agree():
    h, bs, bds, bdbs, alphas = _stacked_dephasing()
    rng = np.random.default_rng(0)
    rho0 = random_density(rng, 2).entries.copy()
    a = kernels.rk4_propagate(h, bs, bds, bdbs, alphas, rho0.copy(), 1e-2, 200)
    b = kernels.rk4_propagate_numpy(h, bs, bds, bdbs, alphas, rho0.copy(), 1e-2, 200)
    assert np.abs(a - b).max() < 1e-13


def test_rk4_backends_agree_random_generators():
    rng = np.random.default_rng(4)
    for dim in (2, 3, 4):
        h = random_hermitian(rng, dim).entries
        n_jump = 2
        bs = (rng.normal(size=(n_jump, dim, dim)) + 1j * rng.normal(size=(n_jump, dim, dim))) / 2
        bds = np.conj(np.transpose(bs, (0, 2, 1)))
        bdbs = np.einsum("nij,njk->nik", bds, bs)
        alphas = np.array([0.2, 0.05])
        rho0 = random_density(rng, dim).entries.copy()
        a = kernels.rk4_propagate(h, bs, bds, bdbs, alphas, rho0.copy(), 1e-2, 100)
        b = kernels.rk4_propagate_numpy(h, bs, bds, bdbs, alphas, rho0.copy(), 1e-2, 100)
        assert np.abs(a - b).max() < 1e-12


def test_trajectory_step_backends_agree():
    # both backends consume the same pre-drawn uniforms, so results are bitwise comparable
    rng = np.random.default_rng(7)
    n, dim = 64, 2
    psis = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    psis /= np.linalg.norm(psis, axis=1)[:, None]
    h, bs, bds, bdbs, alphas = _stacked_dephasing()
    from scipy.linalg import expm

    ls = np.sqrt(2.0 * alphas)[:, None, None] * bs
    cs = np.einsum("nij,njk->nik", np.conj(np.transpose(ls, (0, 2, 1))), ls)
    h_eff = h - 0.5j * cs.sum(axis=0)
    m_drift = expm(-1j * h_eff * 1e-2)
    u_jump = rng.random(n)
    u_chan = rng.random(n)
    a = kernels.trajectory_step_block(psis.copy(), m_drift, ls, cs, 1e-2, u_jump, u_chan)
    b = kernels.trajectory_step_block_numpy(psis.copy(), m_drift, ls, cs, 1e-2, u_jump, u_chan)
    out_a, jumped_a, single_a, total_a, bad_a = a
    out_b, jumped_b, single_b, total_b, bad_b = b
    assert np.abs(np.asarray(out_a) - np.asarray(out_b)).max() < 1e-13
    assert np.array_equal(np.asarray(jumped_a), np.asarray(jumped_b))
    assert abs(single_a - single_b) < 1e-15
    assert abs(total_a - total_b) < 1e-15
    assert bad_a == bad_b


def test_no_jit_env_selects_numpy_backend():
    code = "import qdynlab.kernels as k; print(k.jit_disabled(), k.active_backend())"
    env = dict(os.environ, QDYNLAB_NO_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    assert out.stdout.split() == ["True", "numpy"]


def test_apply_thread_env():
    saved = os.environ.pop("QDYNLAB_THREADS", None)
    try:
        assert kernels.apply_thread_env() is None
        os.environ["QDYNLAB_THREADS"] = "1"
        applied = kernels.apply_thread_env()
        assert applied is None or applied == 1
        os.environ["QDYNLAB_THREADS"] = "zero"
        with pytest.raises(ConfigError):
            kernels.apply_thread_env()
        os.environ["QDYNLAB_THREADS"] = "0"
        with pytest.raises(ConfigError):
            kernels.apply_thread_env()
    finally:
        os.environ.pop("QDYNLAB_THREADS", None)
        if saved is not None:
            os.environ["QDYNLAB_THREADS"] = saved
