"""Hot numeric kernels: jit-compiled with numba, with a pure-numpy fallback.

Backend selection: the env flag ``QDYNLAB_NO_JIT=1`` forces the numpy path;
otherwise the numba path is used when numba imports and compiles.  Both
implementations of each kernel are exported so the benchmark and the
equivalence tests can call them directly.

Kernels deliberately take plain pre-stacked arrays (no package value types):
  * ``rk4_propagate``   - fixed-step RK4 for the dissipative generator
  * ``trajectory_step_block`` - one jump/no-jump step for a block of particles
"""
from __future__ import annotations

import os
import warnings

import numpy as np

from .errors import ConfigError

try:  # pragma: no cover - exercised implicitly on import
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return wrap


def jit_disabled() -> bool:
    return os.environ.get("QDYNLAB_NO_JIT", "").strip().lower() in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy reference implementations

def _rhs_numpy(h, bs, bds, bdbs, alphas, rho):
    """-i[h,rho] + sum_n alpha_n (2 B rho B^+ - B^+B rho - rho B^+B)."""
    out = -1j * (h @ rho - rho @ h)
    if len(alphas):
        brho = np.matmul(bs, rho)                    # [n,d,d]
        sandwich = np.matmul(brho, bds)              # B rho B^+
        left = np.matmul(bdbs, rho)
        right = np.matmul(rho, bdbs)
        out += np.einsum("n,nij->ij", alphas, 2.0 * sandwich - left - right)
    return out


def rk4_propagate_numpy(h, bs, bds, bdbs, alphas, rho0, dt, n_steps, rehermitize=True):
    """Advance rho0 by n_steps fixed RK4 steps; returns the final matrix."""
    rho = rho0.copy()
    for _ in range(n_steps):
        k1 = _rhs_numpy(h, bs, bds, bdbs, alphas, rho)
        k2 = _rhs_numpy(h, bs, bds, bdbs, alphas, rho + (0.5 * dt) * k1)
        k3 = _rhs_numpy(h, bs, bds, bdbs, alphas, rho + (0.5 * dt) * k2)
        k4 = _rhs_numpy(h, bs, bds, bdbs, alphas, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if rehermitize:
            rho = 0.5 * (rho + np.conj(rho.T))
    return rho


def trajectory_step_block_numpy(psis, m_drift, ls, cs, dt, u_jump, u_chan):
    """One unraveling step for a block of normalized pure states.

    psis    : [N, d] complex, updated out of place (returned)
    m_drift : [d, d] no-jump propagator exp(-i H_eff dt)
    ls      : [n, d, d] jump operators L_n
    cs      : [n, d, d] rate matrices L_n^+ L_n (= 2 alpha_n B_n^+ B_n)
    u_jump, u_chan : [N] uniforms deciding jump occurrence / channel choice

    Returns (new_psis, jumped_mask, max_single_prob, max_total_prob).
    """
    n_jump = ls.shape[0]
    probs = dt * np.einsum("ir,nrc,ic->ni", np.conj(psis), cs, psis).real  # [n, N]
    ptot = probs.sum(axis=0)
    max_single = float(probs.max()) if probs.size else 0.0
    max_total = float(ptot.max()) if ptot.size else 0.0
    jumped = u_jump < ptot

    out = psis @ m_drift.T  # drift applied to every particle
    if jumped.any():
        # channel selection: u_chan * ptot against the cumulative rates
        cum = np.cumsum(probs, axis=0)
        target = u_chan * ptot
        idx = np.where(jumped)[0]
        chan = np.empty(idx.size, dtype=np.int64)
        for k, i in enumerate(idx):
            c = int(np.searchsorted(cum[:, i], target[i], side="right"))
            chan[k] = min(c, n_jump - 1)
        for n in range(n_jump):
            sel = idx[chan == n]
            if sel.size:
                out[sel] = psis[sel] @ ls[n].T
    norms = np.linalg.norm(out, axis=1)
    bad = norms < 1e-150
    if bad.any():
        norms = np.where(bad, 1.0, norms)
    out = out / norms[:, None]
    return out, jumped, max_single, max_total, bool(bad.any())


# ---------------------------------------------------------------------------
# numba kernels (same semantics, explicit loops)

@njit(cache=True)
def _mm(a, b, out):  # pragma: no cover - compiled
    n = a.shape[0]
    if n >= 32:
        out[:, :] = np.dot(a, b)
    else:
        for i in range(n):
            for j in range(n):
                acc = 0.0 + 0.0j
                for k in range(n):
                    acc += a[i, k] * b[k, j]
                out[i, j] = acc


@njit(cache=True)
def _rhs_nb(h, bs, bds, bdbs, alphas, rho, out, t1, t2):  # pragma: no cover - compiled
    d = rho.shape[0]
    _mm(h, rho, t1)
    _mm(rho, h, t2)
    for i in range(d):
        for j in range(d):
            out[i, j] = -1j * (t1[i, j] - t2[i, j])
    for n in range(alphas.shape[0]):
        a = alphas[n]
        _mm(bs[n], rho, t1)
        _mm(t1, bds[n], t2)          # B rho B^+
        for i in range(d):
            for j in range(d):
                out[i, j] += 2.0 * a * t2[i, j]
        _mm(bdbs[n], rho, t1)
        _mm(rho, bdbs[n], t2)
        for i in range(d):
            for j in range(d):
                out[i, j] -= a * (t1[i, j] + t2[i, j])


@njit(cache=True)
def rk4_propagate_nb(h, bs, bds, bdbs, alphas, rho0, dt, n_steps, rehermitize):  # pragma: no cover
    d = rho0.shape[0]
    rho = rho0.copy()
    y = np.empty((d, d), np.complex128)
    k1 = np.empty((d, d), np.complex128)
    k2 = np.empty((d, d), np.complex128)
    k3 = np.empty((d, d), np.complex128)
    k4 = np.empty((d, d), np.complex128)
    t1 = np.empty((d, d), np.complex128)
    t2 = np.empty((d, d), np.complex128)
    for _ in range(n_steps):
        _rhs_nb(h, bs, bds, bdbs, alphas, rho, k1, t1, t2)
        for i in range(d):
            for j in range(d):
                y[i, j] = rho[i, j] + 0.5 * dt * k1[i, j]
        _rhs_nb(h, bs, bds, bdbs, alphas, y, k2, t1, t2)
        for i in range(d):
            for j in range(d):
                y[i, j] = rho[i, j] + 0.5 * dt * k2[i, j]
        _rhs_nb(h, bs, bds, bdbs, alphas, y, k3, t1, t2)
        for i in range(d):
            for j in range(d):
                y[i, j] = rho[i, j] + dt * k3[i, j]
        _rhs_nb(h, bs, bds, bdbs, alphas, y, k4, t1, t2)
        for i in range(d):
            for j in range(d):
                rho[i, j] = rho[i, j] + (dt / 6.0) * (
                    k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        if rehermitize:
            for i in range(d):
                rho[i, i] = complex(rho[i, i].real, 0.0)
                for j in range(i + 1, d):
                    v = 0.5 * (rho[i, j] + np.conj(rho[j, i]))
                    rho[i, j] = v
                    rho[j, i] = np.conj(v)
    return rho


@njit(cache=True)
def trajectory_step_block_nb(psis, m_drift, ls, cs, dt, u_jump, u_chan):  # pragma: no cover
    n_part, d = psis.shape
    n_jump = ls.shape[0]
    out = np.empty_like(psis)
    jumped = np.zeros(n_part, np.bool_)
    probs = np.empty(n_jump, np.float64)
    max_single = 0.0
    max_total = 0.0
    any_bad = False
    for p in range(n_part):
        ptot = 0.0
        for n in range(n_jump):
            acc = 0.0
            for r in range(d):
                row = 0.0 + 0.0j
                for c in range(d):
                    row += cs[n, r, c] * psis[p, c]
                acc += (np.conj(psis[p, r]) * row).real
            pr = dt * acc
            probs[n] = pr
            ptot += pr
            if pr > max_single:
                max_single = pr
        if ptot > max_total:
            max_total = ptot
        if u_jump[p] < ptot:
            jumped[p] = True
            target = u_chan[p] * ptot
            chan = n_jump - 1
            cum = 0.0
            for n in range(n_jump):
                cum += probs[n]
                if target < cum:
                    chan = n
                    break
            for r in range(d):
                acc2 = 0.0 + 0.0j
                for c in range(d):
                    acc2 += ls[chan, r, c] * psis[p, c]
                out[p, r] = acc2
        else:
            for r in range(d):
                acc2 = 0.0 + 0.0j
                for c in range(d):
                    acc2 += m_drift[r, c] * psis[p, c]
                out[p, r] = acc2
        nrm = 0.0
        for r in range(d):
            nrm += out[p, r].real ** 2 + out[p, r].imag ** 2
        nrm = np.sqrt(nrm)
        if nrm < 1e-150:
            any_bad = True
            nrm = 1.0
        for r in range(d):
            out[p, r] = out[p, r] / nrm
    return out, jumped, max_single, max_total, any_bad


# ---------------------------------------------------------------------------
# dispatch

_active = None


def active_backend() -> str:
    """Resolve and cache the backend name: 'numba' or 'numpy'."""
    global _active
    if _active is None:
        if jit_disabled() or not HAS_NUMBA:
            _active = "numpy"
        else:
            try:
                _warmup_numba()
                _active = "numba"
            except Exception as exc:  # pragma: no cover - defensive
                warnings.warn(f"numba kernels unavailable ({exc!r}); using numpy fallback")
                _active = "numpy"
    return _active


def _warmup_numba():
    d = 2
    eye = np.eye(d, dtype=np.complex128)
    z = np.zeros((1, d, d), dtype=np.complex128)
    a = np.ones(1)
    rk4_propagate_nb(eye, z, z, z, a, eye / d, 0.01, 1, True)
    trajectory_step_block_nb(np.ones((1, d), np.complex128) / np.sqrt(d), eye,
                             z, z, 0.01, np.zeros(1), np.zeros(1))


def apply_thread_env() -> int | None:
    """Honor QDYNLAB_THREADS for the jit backend; returns the applied count."""
    raw = os.environ.get("QDYNLAB_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QDYNLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"QDYNLAB_THREADS must be >= 1, got {n}")
    if HAS_NUMBA and not jit_disabled():
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n


def rk4_propagate(h, bs, bds, bdbs, alphas, rho0, dt, n_steps, rehermitize=True):
    if active_backend() == "numba":
        return rk4_propagate_nb(np.ascontiguousarray(h), np.ascontiguousarray(bs),
                                np.ascontiguousarray(bds), np.ascontiguousarray(bdbs),
                                np.ascontiguousarray(alphas, dtype=np.float64),
                                np.ascontiguousarray(rho0), float(dt), int(n_steps),
                                bool(rehermitize))
    return rk4_propagate_numpy(h, bs, bds, bdbs, alphas, rho0, dt, n_steps, rehermitize)


def trajectory_step_block(psis, m_drift, ls, cs, dt, u_jump, u_chan):
    if active_backend() == "numba":
        return trajectory_step_block_nb(np.ascontiguousarray(psis),
                                        np.ascontiguousarray(m_drift),
                                        np.ascontiguousarray(ls), np.ascontiguousarray(cs),
                                        float(dt), np.ascontiguousarray(u_jump),
                                        np.ascontiguousarray(u_chan))
    return trajectory_step_block_numpy(psis, m_drift, ls, cs, dt, u_jump, u_chan)
