"""Local-hidden-variable fitting against spin-pair coincidence weights.

The target data are coincidence weights for pairs of analyzer directions on
the unit sphere.  Two conventions ship: ``"paper"`` uses sin^2(theta/2)
directly (the four outcome weights of a pair then sum to 2), ``"singlet"``
(alias ``"standard-singlet"``) halves it so the four outcomes form a
probability distribution.

A stochastic hidden-variable model carries a finite ensemble of hidden
states, each with a response probability per direction; its pair moments are

    m(i, j) = sum_alpha rho_alpha P(alpha, i) P(alpha, j)

and the fit error is the worst absolute deviation from the targets.  Note
that with equal-direction pairs in the grid the stochastic class is strictly
larger than mixtures of deterministic strategies, because the diagonal
moment sum rho P^2 is nonlinear in the response.  The deterministic oracle
below is therefore a certified bound only for targets where mixing is
enough: distinct-pair grids, realizable data, and any grid (such as the
default coplanar 0/45/90-degree fan) whose diagonal targets vanish while
some distinct pair demands weight 1/2 -- there Cauchy-Schwarz forces every
stochastic model above deviation 1/4, which plain mixing attains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .errors import ValidationError

WEIGHT_TOL = 1e-12
RESPONSE_TOL = 1e-9


def as_direction(v: Sequence[float]) -> np.ndarray:
    """Normalize to a unit 3-vector."""
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValidationError(f"direction must be a 3-vector, got shape {a.shape}")
    norm = float(np.linalg.norm(a))
    if norm < 1e-300:
        raise ValidationError("zero vector is not a direction")
    return a / norm


def angle_between(a: Sequence[float], b: Sequence[float]) -> float:
    ua, ub = as_direction(a), as_direction(b)
    return float(np.arccos(np.clip(ua @ ub, -1.0, 1.0)))


def quantum_weight(a: Sequence[float], b: Sequence[float],
                   convention: str = "paper") -> float:
    """Coincidence weight for a pair of analyzer directions."""
    theta = angle_between(a, b)
    w = math.sin(theta / 2.0) ** 2
    if convention == "paper":
        return w
    if convention in ("singlet", "standard-singlet"):
        return 0.5 * w
    raise ValidationError(f"unknown convention {convention!r}")


def orthogonal_directions() -> np.ndarray:
    """The three coordinate axes as a (3, 3) direction array."""
    return np.eye(3)


def coplanar_directions(angles_deg: Sequence[float] = (0.0, 45.0, 90.0)) -> np.ndarray:
    """Unit vectors in the x-y plane at the given angles from the x-axis.

    The default is the three-analyzer fan used throughout: 0, 45 and 90
    degrees, whose pair weights sin^2(theta/2) no local model can match.
    """
    angs = np.radians(np.asarray(angles_deg, dtype=float))
    if angs.ndim != 1 or angs.size < 1:
        raise ValidationError("need a flat, nonempty list of angles")
    return np.column_stack([np.cos(angs), np.sin(angs), np.zeros_like(angs)])


def pair_grid(n_dirs: int, include_diagonal: bool = True) -> Tuple[Tuple[int, int], ...]:
    """Index pairs (i, j) with i <= j (or i < j without the diagonal)."""
    if n_dirs < 1:
        raise ValidationError(f"need at least one direction, got {n_dirs}")
    lo = 0 if include_diagonal else 1
    return tuple((i, j) for i in range(n_dirs) for j in range(i + lo, n_dirs))


def quantum_targets(directions: np.ndarray, pairs: Sequence[Tuple[int, int]],
                    convention: str = "paper") -> np.ndarray:
    dirs = np.asarray(directions, dtype=float)
    return np.array([quantum_weight(dirs[i], dirs[j], convention) for i, j in pairs])


@dataclass(frozen=True)
class StochasticModel:
    """Finite hidden-state ensemble with per-direction response probabilities."""

    weights: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        r = np.array(self.responses, dtype=float)
        if w.ndim != 1 or r.ndim != 2 or r.shape[0] != w.shape[0]:
            raise ValidationError(
                f"weights {w.shape} and responses {r.shape} must be (H,) and (H, D)")
        if w.min() < -WEIGHT_TOL or abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("hidden-state weights must be a probability vector")
        if r.min() < -RESPONSE_TOL or r.max() > 1.0 + RESPONSE_TOL:
            raise ValidationError("responses must lie in [0, 1]")
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        r = np.clip(r, 0.0, 1.0)
        w.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "responses", r)

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[0]

    @property
    def n_dirs(self) -> int:
        return self.responses.shape[1]

    def moments(self, pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
        """Pair moments sum_alpha rho_alpha P(alpha, i) P(alpha, j)."""
        r = self.responses
        return np.array([float(self.weights @ (r[:, i] * r[:, j])) for i, j in pairs])

    def fit_error(self, pairs: Sequence[Tuple[int, int]], targets: np.ndarray) -> float:
        return float(np.abs(self.moments(pairs) - np.asarray(targets, dtype=float)).max())


def deterministic_model(strategies: np.ndarray, weights: np.ndarray) -> StochasticModel:
    """Mixture of 0/1 response rows as a stochastic model."""
    return StochasticModel(np.asarray(weights, float), np.asarray(strategies, float))


def hemispheric_overlap(theta: float) -> float:
    """Closed-form pair moment of the hemisphere model at angle theta."""
    if not 0.0 <= theta <= math.pi + 1e-12:
        raise ValidationError(f"angle must lie in [0, pi], got {theta}")
    return (math.pi - min(theta, math.pi)) / (2.0 * math.pi)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n near-uniform points on the unit sphere (golden-angle spiral)."""
    if n < 1:
        raise ValidationError(f"need at least one point, got {n}")
    k = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, 1.0))
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def hemispheric_model(directions: np.ndarray, n_samples: int = 4000,
                      seed: int = 0) -> StochasticModel:
    """Hidden unit vector alpha, response 1 exactly when alpha . A > 0.

    Hidden states are a golden-spiral sphere covering with uniform weights;
    ``seed`` randomizes the covering's orientation so axis-aligned artifacts
    average out.
    """
    dirs = np.asarray(directions, dtype=float)
    pts = fibonacci_sphere(n_samples)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    pts = pts @ q.T
    responses = (pts @ dirs.T > 0.0).astype(float)
    weights = np.full(n_samples, 1.0 / n_samples)
    return StochasticModel(weights, responses)


def _weight_lp(moment_rows: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, float]:
    """Best mixing weights for fixed per-state moments: min-max deviation LP."""
    n_states, n_pairs = moment_rows.shape
    c = np.zeros(n_states + 1)
    c[-1] = 1.0
    a_ub = np.zeros((2 * n_pairs, n_states + 1))
    b_ub = np.zeros(2 * n_pairs)
    for p in range(n_pairs):
        a_ub[2 * p, :n_states] = moment_rows[:, p]
        a_ub[2 * p, -1] = -1.0
        b_ub[2 * p] = targets[p]
        a_ub[2 * p + 1, :n_states] = -moment_rows[:, p]
        a_ub[2 * p + 1, -1] = -1.0
        b_ub[2 * p + 1] = -targets[p]
    a_eq = np.zeros((1, n_states + 1))
    a_eq[0, :n_states] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0.0, None)] * n_states + [(0.0, None)], method="highs")
    if not res.success:
        raise ValidationError(f"weight LP failed: {res.message}")
    w = np.clip(res.x[:n_states], 0.0, None)
    return w / w.sum(), float(res.x[-1])


class OracleResult(NamedTuple):
    error: float
    weights: np.ndarray
    strategies: np.ndarray


def deterministic_strategy_oracle(pairs: Sequence[Tuple[int, int]],
                                  targets: np.ndarray,
                                  n_dirs: int) -> OracleResult:
    """Exact best mixture of all 2^n deterministic strategies (via an LP).

    For targets whose optimum is attained by deterministic mixing this is the
    true best local model; see the module notes for when diagonal pairs can
    open a gap to the wider stochastic class.
    """
    if n_dirs > 20:
        raise ValidationError(f"2^{n_dirs} strategies is too many to enumerate")
    targets = np.asarray(targets, dtype=float)
    strategies = np.array([[float((s >> d) & 1) for d in range(n_dirs)]
                           for s in range(2 ** n_dirs)])
    moment_rows = np.array([[row[i] * row[j] for i, j in pairs] for row in strategies])
    weights, err = _weight_lp(moment_rows, targets)
    return OracleResult(err, weights, strategies)


def _line_minimize(fun: Callable[[float], float], lo: float = 0.0,
                   hi: float = 1.0, coarse: int = 17, iters: int = 40) -> float:
    """Grid-bracketed ternary search for a piecewise-convex objective."""
    xs = np.linspace(lo, hi, coarse)
    vals = [fun(x) for x in xs]
    k = int(np.argmin(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, coarse - 1)]
    for _ in range(iters):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if fun(m1) <= fun(m2):
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


class FitResult(NamedTuple):
    error: float
    model: StochasticModel
    restart_errors: Tuple[float, ...]


def fit_lhv(pairs: Sequence[Tuple[int, int]], targets: np.ndarray, n_dirs: int,
            n_hidden: int = 8, n_restarts: int = 6, n_sweeps: int = 30,
            seed: int = 0, warm_start: bool = True) -> FitResult:
    """Best-found stochastic model by alternating sweeps from random starts.

    Each restart draws random responses, then alternates (a) an exact LP for
    the hidden-state weights and (b) coordinate sweeps that re-optimize one
    response entry at a time by bracketed ternary search.  Restart streams are
    spawned from one seed, so the best error over the first k restarts is
    reproducible and non-increasing in k.  With ``warm_start`` the first
    restart seeds its responses from the best-weighted deterministic
    strategies instead of random draws, which pins the fit at the mixing
    optimum whenever that optimum is attained on the deterministic hull.
    """
    targets = np.asarray(targets, dtype=float)
    if len(targets) != len(pairs):
        raise ValidationError(f"{len(pairs)} pairs but {len(targets)} targets")
    streams = np.random.SeedSequence(seed).spawn(n_restarts)
    warm: np.ndarray | None = None
    if warm_start and n_dirs <= 12:
        oracle = deterministic_strategy_oracle(pairs, targets, n_dirs)
        order = np.argsort(oracle.weights)[::-1][:n_hidden]
        warm = oracle.strategies[order]
        if warm.shape[0] < n_hidden:
            pad = np.zeros((n_hidden - warm.shape[0], n_dirs))
            warm = np.vstack([warm, pad])
    best: StochasticModel | None = None
    best_err = math.inf
    restart_errors: List[float] = []
    for r, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        if r == 0 and warm is not None:
            responses = warm.copy()
        else:
            responses = rng.random((n_hidden, n_dirs))
        weights = np.full(n_hidden, 1.0 / n_hidden)
        err = math.inf
        for _ in range(n_sweeps):
            rows = np.array([[responses[h, i] * responses[h, j] for i, j in pairs]
                             for h in range(n_hidden)])
            weights, err_lp = _weight_lp(rows, targets)
            for h in range(n_hidden):
                for d in range(n_dirs):
                    def entry_err(x: float, h=h, d=d) -> float:
                        old = responses[h, d]
                        responses[h, d] = x
                        m = np.array([weights @ (responses[:, i] * responses[:, j])
                                      for i, j in pairs])
                        responses[h, d] = old
                        return float(np.abs(m - targets).max())

                    responses[h, d] = _line_minimize(entry_err)
            model = StochasticModel(weights, responses)
            new_err = model.fit_error(pairs, targets)
            if err - new_err < 1e-12 and err_lp <= new_err + 1e-12:
                err = min(err, new_err)
                break
            err = new_err
        model = StochasticModel(weights, responses)
        err = model.fit_error(pairs, targets)
        restart_errors.append(err)
        if err < best_err:
            best_err = err
            best = model
    assert best is not None
    return FitResult(best_err, best, tuple(restart_errors))
