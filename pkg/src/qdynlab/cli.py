"""Command-line front end.

Every subcommand reads a flat key=value config file (``--config``), lets
individual ``--key value`` flags override it, and writes one result table
(CSV with a ``#`` metadata line, or JSON) to ``--out``.  The metadata embeds
the effective config and its sha256, so identical configs produce
byte-identical outputs and outputs can be traced back to their inputs.

Exit codes: 0 success, 1 invalid configuration, 2 numerical violation
detected while running.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .bell import (deterministic_strategy_oracle, fit_lhv, hemispheric_model,
                   pair_grid, quantum_targets)
from .channels import (choi_matrix, conjugation_map, is_completely_positive,
                       is_positive_on_pure, mixed_sign_map,
                       qubit_dephasing_channel, qubit_depolarizing_channel,
                       random_kraus_channel)
from .errors import (ConfigError, IntegrationError, QdynlabError,
                     StepSizeError, ValidationError)
from .fock import (fit_decay_rate, ordinary_field_demo, tachyonic_field_demo,
                   vacuum_generator_norm, vacuum_survival)
from .histories import (all_branch_probabilities, basis_family,
                        commutation_residual, hopping_hamiltonian)
from .kernels import active_backend, apply_thread_env
from .lindblad import (IntegrationSpec, LindbladGenerator, dephasing_analytic,
                       integrate)
from .states import (Observable, PureEnsemble, StateVector, normalized_state,
                     pure_density)
from .tableio import config_hash, emit_table
from .tachyon import (boundary_scan, cut_self_consistency, demo_density,
                      holomorphy_residual, reflection_defect)
from .trajectories import ensemble_density_with_se, evolve_ensemble


# ----------------------------------------------------------------- config --

def _as_int(s: str) -> int:
    return int(s)


def _as_float(s: str) -> float:
    return float(s)


def _as_str(s: str) -> str:
    return s


def _as_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _as_floats(s: str) -> List[float]:
    parts = [p for p in s.replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return [float(p) for p in parts]


def _choice(*options: str) -> Callable[[str], str]:
    def coerce(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {options}, got {s!r}")
        return s
    return coerce


@dataclass(frozen=True)
class Key:
    name: str
    coerce: Callable[[str], object]
    default: object = None
    help: str = ""
    required: bool = False


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    keys: Tuple[Key, ...]
    prepare: Callable[[Dict[str, object]], Callable[[], Tuple[dict, List[str], list]]]


def load_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def effective_config(cmd: Command, ns: argparse.Namespace) -> Dict[str, object]:
    """defaults < config file < explicit flags, all coerced and checked."""
    raw: Dict[str, str] = {}
    if ns.config:
        raw = load_config_file(ns.config)
    known = {k.name for k in cmd.keys}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {cmd.name}: {', '.join(unknown)}")
    cfg: Dict[str, object] = {}
    for key in cmd.keys:
        flag = getattr(ns, "k_" + key.name)
        source = flag if flag is not None else raw.get(key.name)
        if source is None:
            if key.required:
                raise ConfigError(f"{cmd.name} requires {key.name} "
                                  f"(flag --{key.name.replace('_', '-')} or config)")
            cfg[key.name] = key.default
            continue
        try:
            cfg[key.name] = key.coerce(source)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key.name}: {exc}") from None
    return cfg


def _meta(cmd: str, cfg: Dict[str, object], extra: Optional[Dict[str, object]] = None) -> dict:
    meta = {
        "command": cmd,
        "version": __version__,
        "config": dict(sorted(cfg.items())),
        "config_sha256": config_hash(cfg),
    }
    if extra:
        meta.update(extra)
    return meta


def _uniform_superposition(dim: int) -> StateVector:
    return normalized_state(np.ones(dim, dtype=np.complex128))


def _dephasing_generator(pointer: Sequence[float], alpha: float) -> Tuple[LindbladGenerator, Observable]:
    b = np.asarray(pointer, dtype=float)
    if b.size < 2:
        raise ConfigError(f"pointer needs at least two values, got {b.size}")
    b_matrix = np.diag(b).astype(np.complex128)
    zero = Observable(np.zeros_like(b_matrix))
    gen = LindbladGenerator(zero, ((float(alpha), b_matrix),))
    return gen, Observable(b_matrix)


# ------------------------------------------------------------- subcommands --

def _prep_decohere(cfg: Dict[str, object]):
    gen, b_obs = _dephasing_generator(cfg["pointer"], cfg["alpha"])
    spec = IntegrationSpec(t_final=cfg["t_final"], dt=cfg["dt"])
    psi = _uniform_superposition(len(cfg["pointer"]))
    rho0 = pure_density(psi)
    alpha = float(cfg["alpha"])

    def run():
        hist = integrate(gen, rho0, spec, store_every=int(cfg["store_every"]))
        rows = []
        for t, rho in hist:
            analytic = dephasing_analytic(b_obs, alpha, rho0, t)
            worst = float(np.abs(rho.entries - analytic.entries).max())
            rows.append([t, float(abs(rho.entries[0, 1])),
                         float(abs(analytic.entries[0, 1])), worst])
        meta = _meta("decohere", cfg)
        return meta, ["t", "coh01_abs", "coh01_analytic", "max_abs_error"], rows

    return run


def _prep_channel_check(cfg: Dict[str, object]):
    kind = cfg["channel"]
    dim = int(cfg["dim"])
    if kind == "random" and cfg["seed"] is None:
        raise ConfigError("channel=random requires a seed")
    if kind == "dephasing":
        mapping = qubit_dephasing_channel()
    elif kind == "depolarizing":
        mapping = qubit_depolarizing_channel()
    elif kind == "conjugation":
        mapping = conjugation_map(dim)
    elif kind == "mixed-sign":
        mapping = mixed_sign_map()
    elif kind == "random":
        rng = np.random.default_rng(int(cfg["seed"]))
        mapping = random_kraus_channel(rng, dim, int(cfg["n_terms"]))
    else:  # pragma: no cover - guarded by the coercer
        raise ConfigError(f"unknown channel {kind!r}")

    def run():
        choi = choi_matrix(mapping)
        cp, min_eig = is_completely_positive(mapping)
        scan = is_positive_on_pure(mapping, samples=int(cfg["samples"]),
                                   seed=int(cfg["seed"] or 0),
                                   qubit_grid=32 if choi.dim == 2 else 0)
        rows = [
            ["choi_dim", float(choi.dim)],
            ["choi_min_eigenvalue", float(min_eig)],
            ["completely_positive", 1.0 if cp else 0.0],
            ["positive_on_pure_states", 1.0 if scan.positive else 0.0],
            ["positivity_worst_value", float(scan.worst_value)],
        ]
        meta = _meta("channel-check", cfg, {"channel": kind})
        return meta, ["metric", "value"], rows

    return run


def _prep_unravel(cfg: Dict[str, object]):
    gen, _ = _dephasing_generator(cfg["pointer"], cfg["alpha"])
    spec = IntegrationSpec(t_final=cfg["t_final"], dt=cfg["dt"])
    n_steps = spec.n_steps()
    n_check = int(cfg["n_checkpoints"])
    if not 1 <= n_check <= n_steps:
        raise ConfigError(f"n_checkpoints must lie in [1, {n_steps}]")
    stride = n_steps // n_check
    times = [k * stride * spec.dt for k in range(1, n_check + 1)]
    psi = _uniform_superposition(len(cfg["pointer"]))
    source = PureEnsemble(((1.0, psi),))

    def run():
        history = evolve_ensemble(source, gen, cfg["t_final"], cfg["dt"],
                                  int(cfg["n_particles"]), int(cfg["seed"]),
                                  checkpoints=times)
        reference = dict(integrate(gen, pure_density(psi), spec, store_every=stride))
        ref_times = sorted(reference)
        rows = []
        for t, ens in history:
            mean, se_re, se_im = ensemble_density_with_se(ens)
            t_ref = min(ref_times, key=lambda s: abs(s - t))
            diff = np.abs(mean - reference[t_ref].entries)
            band = 3.0 * np.hypot(se_re, se_im)
            within = bool(np.all(diff <= band + 1e-12))
            rows.append([t, float(diff.max()), float(band.max()), within])
        meta = _meta("unravel", cfg, {"backend": active_backend()})
        return meta, ["t", "max_abs_diff", "max_three_se", "within_bound"], rows

    return run


def _prep_histories(cfg: Dict[str, object]):
    dim = int(cfg["dim"])
    if dim < 2:
        raise ConfigError(f"dim must be >= 2, got {dim}")
    times = [float(t) for t in cfg["times"]]
    family = basis_family(times, dim)
    h = hopping_hamiltonian(dim, float(cfg["coupling"]))
    if cfg["initial"] == "superposition":
        psi = _uniform_superposition(dim)
    else:
        psi = StateVector(np.eye(dim, dtype=np.complex128)[0])

    def run():
        probs = all_branch_probabilities(psi, h, family)
        residual = commutation_residual(family, h)
        total = float(sum(probs.values()))
        rows = [[",".join(map(str, key)), float(p)] for key, p in sorted(probs.items())]
        meta = _meta("histories", cfg, {
            "commutation_residual": residual,
            "total_probability": total,
        })
        return meta, ["branch", "probability"], rows

    return run


def _prep_bell_fit(cfg: Dict[str, object]):
    flat = cfg["directions"]
    if len(flat) % 3 != 0:
        raise ConfigError("directions must be a flat list of 3-vectors")
    dirs = np.asarray(flat, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(norms < 1e-300):
        raise ConfigError("directions must be nonzero")
    dirs = dirs / norms[:, None]
    n_dirs = dirs.shape[0]
    pairs = pair_grid(n_dirs, include_diagonal=bool(cfg["include_diagonal"]))
    targets = quantum_targets(dirs, pairs, cfg["convention"])

    def run():
        fit = fit_lhv(pairs, targets, n_dirs, n_hidden=int(cfg["n_hidden"]),
                      n_restarts=int(cfg["n_restarts"]),
                      n_sweeps=int(cfg["n_sweeps"]), seed=int(cfg["seed"]))
        oracle = deterministic_strategy_oracle(pairs, targets, n_dirs)
        hemi = hemispheric_model(dirs, n_samples=int(cfg["n_sphere"]),
                                 seed=int(cfg["seed"]))
        moments = fit.model.moments(pairs)
        rows = [[int(i), int(j), float(t), float(m), float(abs(m - t))]
                for (i, j), t, m in zip(pairs, targets, moments)]
        meta = _meta("bell-fit", cfg, {
            "fit_error": fit.error,
            "oracle_error": oracle.error,
            "hemispheric_error": hemi.fit_error(pairs, targets),
        })
        return meta, ["i", "j", "target", "model_moment", "abs_error"], rows

    return run


def _prep_tachyon_f(cfg: Dict[str, object]):
    density = demo_density(float(cfg["s_max"]), float(cfg["tail_exponent"]))
    s_lo, s_hi = float(cfg["s_lo"]), float(cfg["s_hi"])
    limit = 0.9 * density.s_max
    if not s_lo < s_hi:
        raise ConfigError(f"need s_lo < s_hi, got {s_lo} >= {s_hi}")
    if max(abs(s_lo), abs(s_hi)) >= limit:
        raise ConfigError(f"scan bounds must stay inside |s| < {limit:.4g}")
    probe_s0 = float(cfg["probe_s0"])
    if not 0.0 < probe_s0 < limit:
        raise ConfigError(f"probe_s0 must lie in (0, {limit:.4g})")
    probe = complex(float(cfg["probe_re"]), float(cfg["probe_im"]))
    h = 1e-2 * (1.0 + abs(probe))
    if abs(probe.imag) <= 2.0 * h + 1e-15 and probe.real + 2.0 * h >= 0.0:
        raise ConfigError(f"holomorphy probe {probe} sits too close to the cut")
    grid = [s for s in np.linspace(s_lo, s_hi, int(cfg["n_points"])) if s != 0.0]

    def run():
        rows_dicts = boundary_scan(density, grid)
        rows = [[r["s"], r["re_upper"], r["im_upper"], r["re_lower"], r["im_lower"]]
                for r in rows_dicts]
        consistency = cut_self_consistency(density, probe_s0)
        meta = _meta("tachyon-f", cfg, {
            "cut_residual": consistency.residual,
            "holomorphy_residual": holomorphy_residual(density, probe),
            "reflection_defect": reflection_defect(density, probe),
        })
        return meta, ["s", "re_upper", "im_upper", "re_lower", "im_lower"], rows

    return run


def _prep_field_demo(cfg: Dict[str, object]):
    kind = cfg["kind"]
    n_modes = int(cfg["n_modes"])
    alpha = float(cfg["alpha"])
    cap = int(cfg["total_cap"])
    if kind == "ordinary":
        model = ordinary_field_demo(n_modes, alpha, total_cap=cap,
                                    mass=float(cfg["mass"]))
        t_final = float(cfg["depth"]) / model.vacuum_decay_rate
    else:
        dampings = list(cfg["dampings"])
        if len(dampings) == 1:
            dampings = dampings * n_modes
        model = tachyonic_field_demo(n_modes, alpha, dampings, total_cap=cap)
        t_final = float(cfg["depth"]) / alpha
    n_steps = int(cfg["n_steps"])
    dt = t_final / n_steps

    def run():
        samples = vacuum_survival(model, t_final, dt,
                                  store_every=int(cfg["store_every"]))
        rows = [[t, s] for t, s in samples]
        extra: Dict[str, object] = {"dim": model.space.dim,
                                    "backend": active_backend()}
        if kind == "ordinary":
            decay = fit_decay_rate(samples)
            extra.update({
                "gamma_theory": model.vacuum_decay_rate,
                "gamma_fit": decay.rate,
                "gamma_rel_error": abs(decay.rate - model.vacuum_decay_rate)
                                   / model.vacuum_decay_rate,
            })
        else:
            norm = vacuum_generator_norm(model)
            extra.update({
                "vacuum_generator_norm": norm,
                "vacuum_stationary": bool(norm < 1e-12),
            })
        meta = _meta("field-demo", cfg, extra)
        return meta, ["t", "survival"], rows

    return run


COMMANDS: Tuple[Command, ...] = (
    Command("decohere", "pointer-basis dephasing vs the closed form", (
        Key("pointer", _as_floats, [1.0, -1.0], "pointer eigenvalues"),
        Key("alpha", _as_float, 0.5, "dephasing rate"),
        Key("t_final", _as_float, 2.0, "evolution time"),
        Key("dt", _as_float, 0.01, "integrator step"),
        Key("store_every", _as_int, 10, "keep every k-th step"),
    ), _prep_decohere),
    Command("channel-check", "complete-positivity diagnostics for a map", (
        Key("channel", _choice("dephasing", "depolarizing", "conjugation",
                               "mixed-sign", "random"), "dephasing", "which map"),
        Key("dim", _as_int, 2, "Hilbert-space dimension"),
        Key("n_terms", _as_int, 3, "terms for channel=random"),
        Key("samples", _as_int, 500, "pure states scanned for positivity"),
        Key("seed", _as_int, None, "rng seed (required for channel=random)"),
    ), _prep_channel_check),
    Command("unravel", "jump unraveling vs the direct master equation", (
        Key("pointer", _as_floats, [1.0, -1.0], "pointer eigenvalues"),
        Key("alpha", _as_float, 0.5, "dephasing rate"),
        Key("t_final", _as_float, 1.0, "evolution time"),
        Key("dt", _as_float, 0.005, "trajectory step"),
        Key("n_particles", _as_int, 1000, "ensemble size"),
        Key("n_checkpoints", _as_int, 5, "comparison times"),
        Key("seed", _as_int, None, "rng seed", required=True),
    ), _prep_unravel),
    Command("histories", "branch probabilities of a projector family", (
        Key("dim", _as_int, 2, "Hilbert-space dimension"),
        Key("times", _as_floats, [0.5, 1.0], "projection times"),
        Key("coupling", _as_float, 1.0, "hopping amplitude"),
        Key("initial", _choice("superposition", "basis0"), "superposition",
            "initial state"),
    ), _prep_histories),
    Command("bell-fit", "best local model for pair coincidence weights", (
        Key("directions", _as_floats,
            [1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0],
            "flat list of analyzer 3-vectors (default: coplanar 0/45/90 fan)"),
        Key("convention", _choice("paper", "singlet", "standard-singlet"),
            "paper", "weight convention"),
        Key("include_diagonal", _as_bool, True, "include equal-direction pairs"),
        Key("n_hidden", _as_int, 8, "hidden states in the fit"),
        Key("n_restarts", _as_int, 4, "random restarts"),
        Key("n_sweeps", _as_int, 25, "coordinate sweeps per restart"),
        Key("n_sphere", _as_int, 4000, "sphere covering for the hemisphere model"),
        Key("seed", _as_int, None, "rng seed", required=True),
    ), _prep_bell_fit),
    Command("tachyon-f", "boundary values of the spectral representation", (
        Key("s_max", _as_float, 10.0, "end of the tabulated support"),
        Key("tail_exponent", _as_float, 1.0, "power-law tail exponent"),
        Key("s_lo", _as_float, -8.0, "scan start"),
        Key("s_hi", _as_float, 8.0, "scan end"),
        Key("n_points", _as_int, 101, "scan points"),
        Key("probe_s0", _as_float, 2.0, "cut-consistency probe"),
        Key("probe_re", _as_float, -2.0, "holomorphy probe, real part"),
        Key("probe_im", _as_float, 1.5, "holomorphy probe, imaginary part"),
    ), _prep_tachyon_f),
    Command("field-demo", "vacuum decay of ordinary vs damped field modes", (
        Key("kind", _choice("ordinary", "tachyonic"), "ordinary", "which field"),
        Key("n_modes", _as_int, 2, "modes per species"),
        Key("alpha", _as_float, 0.25, "bath coupling rate"),
        Key("total_cap", _as_int, 2, "total occupation cap"),
        Key("mass", _as_float, 1.0, "mass for the mode frequencies"),
        Key("dampings", _as_floats, [1.0], "per-mode damping weights (tachyonic)"),
        Key("depth", _as_float, 0.12, "target -ln survival at t_final"),
        Key("n_steps", _as_int, 200, "integration steps"),
        Key("store_every", _as_int, 10, "keep every k-th step"),
    ), _prep_field_demo),
)

COMMAND_MAP = {c.name: c for c in COMMANDS}


# ------------------------------------------------------------------ driver --

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdynlab",
        description="open-system dynamics, local-model fits and spectral boundary values")
    parser.add_argument("--version", action="version", version=f"qdynlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd.name, help=cmd.help)
        sp.add_argument("--config", default=None, metavar="FILE",
                        help="key=value config file")
        sp.add_argument("--out", default="-", metavar="PATH",
                        help="output path ('-' for stdout)")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"),
                        default="csv", help="output format")
        for key in cmd.keys:
            sp.add_argument("--" + key.name.replace("_", "-"),
                            dest="k_" + key.name, default=None, metavar="V",
                            help=key.help)
    return parser


def _write_output(ns: argparse.Namespace, meta: dict, columns: List[str],
                  rows: list) -> None:
    if ns.out == "-":
        emit_table(sys.stdout, meta, columns, rows, fmt=ns.fmt)
        return
    with open(ns.out, "w", encoding="utf-8", newline="") as fh:
        emit_table(fh, meta, columns, rows, fmt=ns.fmt)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        apply_thread_env()
        cmd = COMMAND_MAP[ns.command]
        cfg = effective_config(cmd, ns)
        runner = cmd.prepare(cfg)
    except (ConfigError, ValidationError) as exc:
        print(f"qdynlab: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        meta, columns, rows = runner()
        _write_output(ns, meta, columns, rows)
    except (StepSizeError, IntegrationError, ValidationError) as exc:
        print(f"qdynlab: numerical violation: {exc}", file=sys.stderr)
        return 2
    except QdynlabError as exc:
        print(f"qdynlab: {exc}", file=sys.stderr)
        return 2
    return 0


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
