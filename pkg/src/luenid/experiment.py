"""Configuration-driven experiment runner.

Experiments are declared in a JSON file (schema documented in the README;
physical quantities carry their units in the field names).  A config plus a
seed fully determines every run.  Identification sweeps execute one pilot
(noise-free) run per gain to calibrate the noise amplitude and the inversion
threshold, then the requested (k, snr, seed) combinations, possibly in
parallel; report rows are written once, in deterministic order, after all
runs complete.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, NotObservable
from .excitation import (Multisine, derivative_series, diff_exciting_order,
                         generate_exciting_input, hankel, persistency_gram,
                         HANKEL_REL_TOL)
from .ltisys import CanonicalTheta, StateSpace, canonical_matrices, to_canonical
from .metrics import eigen_error_series, summarize_run
from .observer import (ObserverSpec, apply_estimate_mode, build_observer,
                       estimate_injectivity_modulus, mcshane_inverse, t_jacobian_min,
                       t_map, t_star_explicit)
from .simulate import (SimConfig, Trajectory, calibrate_p_min,
                       default_discard_before, integrate)
from . import report

REPORT_HEADER = ["k", "seed", "snr_db", "final_eigen_error", "final_markov_error",
                 "fitted_decay_rate", "validity_fraction",
                 "steady_state_eigen_error", "steady_state_markov_error"]


def _get(section: dict, key: str, path: str, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    return section[key]


def _section(cfg: dict, key: str, required=True) -> dict:
    value = cfg.get(key)
    if value is None:
        if required:
            raise ConfigError(f"missing required section '{key}'")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"section '{key}' must be an object")
    return value


def _vector(value, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path} must be a numeric array: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{path} must be finite")
    return arr


def load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def parse_system(section: dict) -> tuple:
    """Returns (theta_true, source_system or None)."""
    if "theta_a" in section:
        theta = CanonicalTheta(_vector(section["theta_a"], "system.theta_a"),
                               _vector(_get(section, "theta_b", "system"), "system.theta_b"))
        return theta, None
    if "A" in section:
        try:
            sys_ = StateSpace(np.asarray(section["A"], dtype=float),
                              _vector(_get(section, "B", "system"), "system.B"),
                              _vector(_get(section, "C", "system"), "system.C"))
        except Exception as exc:
            raise ConfigError(f"system.(A,B,C) invalid: {exc}") from None
        try:
            theta, _ = to_canonical(sys_)
        except NotObservable as exc:
            raise ConfigError(f"system.(A,C) is not observable: {exc}") from None
        return theta, sys_
    raise ConfigError("section 'system' needs either theta_a/theta_b or A/B/C")


def parse_input(section: dict) -> Multisine:
    if "terms" in section:
        terms = []
        for i, term in enumerate(section["terms"]):
            if not isinstance(term, dict):
                raise ConfigError(f"input.terms[{i}] must be an object")
            terms.append((
                float(_get(term, "amplitude", f"input.terms[{i}]")),
                float(_get(term, "freq_rad_s", f"input.terms[{i}]")),
                float(term.get("phase_rad", 0.0)),
            ))
        try:
            return Multisine(tuple(terms))
        except ValueError as exc:
            raise ConfigError(f"input.terms invalid: {exc}") from None
    if "generate" in section:
        gen = section["generate"]
        try:
            return generate_exciting_input(int(_get(gen, "order", "input.generate")),
                                           num_terms=gen.get("num_terms"))
        except ValueError as exc:
            raise ConfigError(f"input.generate invalid: {exc}") from None
    raise ConfigError("section 'input' needs either 'terms' or 'generate'")


@dataclass(eq=False)
class IdentifyConfig:
    theta_true: CanonicalTheta
    source_system: StateSpace
    input: Multisine
    lambda_tilde: np.ndarray
    p_min: float            # None -> calibrated from the pilot run
    spectrum_margin: float  # None -> default margin
    theta_box: tuple
    estimate_mode: str
    step: float
    horizon: float
    x0: np.ndarray
    z0: np.ndarray
    w0: np.ndarray
    discard_before: float   # None -> 5 / (k min |lambda_tilde|)
    steady_window: float
    k_values: list
    snr_values: list
    seeds: list
    figures: bool


def parse_identify_config(cfg: dict) -> IdentifyConfig:
    theta, source = parse_system(_section(cfg, "system"))
    obs = _section(cfg, "observer")
    lam = _vector(_get(obs, "lambda_tilde", "observer"), "observer.lambda_tilde")
    if np.any(lam >= 0) or np.unique(lam).size != lam.size:
        raise ConfigError("observer.lambda_tilde must be distinct and strictly negative")
    r_declared = obs.get("r")
    if r_declared is not None and int(r_declared) != lam.size:
        raise ConfigError(f"observer.r = {r_declared} does not match "
                          f"len(observer.lambda_tilde) = {lam.size}")
    if lam.size < 3 * theta.n:
        raise ConfigError(f"observer.lambda_tilde needs at least 3n = {3 * theta.n} "
                          f"entries for the explicit left inverse, got {lam.size}")
    mode = obs.get("estimate_mode", "zero")
    if mode not in ("zero", "hold"):
        raise ConfigError(f"observer.estimate_mode must be 'zero' or 'hold', got {mode!r}")
    box_sec = obs.get("theta_box")
    if box_sec is None:
        box = (theta.vector.copy(), theta.vector.copy())
    else:
        box = (_vector(_get(box_sec, "lower", "observer.theta_box"), "observer.theta_box.lower"),
               _vector(_get(box_sec, "upper", "observer.theta_box"), "observer.theta_box.upper"))
        if box[0].size != 2 * theta.n or box[1].size != 2 * theta.n:
            raise ConfigError(f"observer.theta_box bounds must have length {2 * theta.n}")

    sim = _section(cfg, "simulation")
    step = float(_get(sim, "step_s", "simulation"))
    horizon = float(_get(sim, "horizon_s", "simulation"))
    if step <= 0 or horizon < step:
        raise ConfigError("simulation.step_s must be positive and <= simulation.horizon_s")

    sweep = _section(cfg, "sweep")
    k_values = [float(k) for k in _get(sweep, "k_values", "sweep")]
    if not k_values or any(k <= 0 for k in k_values):
        raise ConfigError("sweep.k_values must be a nonempty list of positive gains")
    snr_raw = sweep.get("noise_snr_db_values", [None])
    snr_values = [None if v is None else float(v) for v in snr_raw]
    seeds = [int(s) for s in sweep.get("seeds", [0])]
    if not seeds:
        raise ConfigError("sweep.seeds must be nonempty when present")

    def opt_vec(key, size, what):
        raw = sim.get(key)
        if raw is None:
            return None
        vec = _vector(raw, f"simulation.{key}")
        if vec.size != size:
            raise ConfigError(f"simulation.{key} must have length {size} ({what})")
        return vec

    return IdentifyConfig(
        theta_true=theta,
        source_system=source,
        input=parse_input(_section(cfg, "input")),
        lambda_tilde=lam,
        p_min=None if obs.get("p_min") is None else float(obs["p_min"]),
        spectrum_margin=None if obs.get("spectrum_margin") is None
                        else float(obs["spectrum_margin"]),
        theta_box=box,
        estimate_mode=mode,
        step=step,
        horizon=horizon,
        x0=opt_vec("x0", theta.n, "state dimension"),
        z0=opt_vec("z0", lam.size, "filter order"),
        w0=opt_vec("w0", lam.size, "filter order"),
        discard_before=None if sim.get("discard_before_s") is None
                       else float(sim["discard_before_s"]),
        steady_window=None if sim.get("steady_window_s") is None
                      else float(sim["steady_window_s"]),
        k_values=k_values,
        snr_values=snr_values,
        seeds=seeds,
        figures=bool(_section(cfg, "output", required=False).get("figures", True)),
    )


def sweep_workers(n_jobs: int) -> int:
    cap = os.environ.get("LUENID_THREADS")
    workers = min(n_jobs, os.cpu_count() or 1)
    if cap:
        try:
            workers = max(1, min(workers, int(cap)))
        except ValueError:
            raise ConfigError(f"LUENID_THREADS must be an integer, got {cap!r}")
    return workers


def _run_label(k, snr, seed) -> str:
    snr_part = "" if snr is None else f", snr={snr:g} dB"
    return f"k={k:g}, seed={seed}{snr_part}"


def _trajectory_filename(k, seed, snr, multiple_snr: bool) -> str:
    base = f"trajectory_{k:g}_{seed}"
    if multiple_snr:
        base += "_snrinf" if snr is None else f"_snr{snr:g}"
    return base + ".csv"


def run_identify(cfg: IdentifyConfig, out_dir, seed_override: int = None,
                 figures: bool = None) -> dict:
    """Execute an identification sweep and emit all artifacts.

    Per gain k: a noise-free pilot fixes the clean-output RMS (the 'x dB of
    noise' reference) and, when observer.p_min is null, the inversion
    threshold.  Each (k, snr, seed) run then writes its trajectory CSV;
    report.csv and manifest.json follow once every run has finished.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = [seed_override] if seed_override is not None else cfg.seeds
    reference = (cfg.source_system if cfg.source_system is not None
                 else canonical_matrices(cfg.theta_true))
    n = cfg.theta_true.n

    def base_sim(seed, snr, rms):
        return SimConfig(step=cfg.step, horizon=cfg.horizon, theta_true=cfg.theta_true,
                         input=cfg.input, x0=cfg.x0, z0=cfg.z0, w0=cfg.w0,
                         noise_snr_db=snr, noise_reference_rms=rms, rng_seed=seed)

    def pilot_for(k):
        spec = ObserverSpec(cfg.lambda_tilde, k, n, p_min=0.0)
        build_observer(spec, cfg.theta_box, margin=cfg.spectrum_margin)
        traj = integrate(base_sim(seeds[0], None, None), spec, cfg.estimate_mode)
        discard = cfg.discard_before if cfg.discard_before is not None \
            else default_discard_before(spec)
        if discard >= cfg.horizon:
            raise ConfigError(
                f"discard window {discard:g}s exceeds the horizon {cfg.horizon:g}s "
                f"at k={k:g}; lengthen simulation.horizon_s or set "
                "simulation.discard_before_s")
        rms = float(np.sqrt(np.mean(traj.y_clean ** 2)))
        p_min = cfg.p_min if cfg.p_min is not None else calibrate_p_min(traj, discard)
        return spec.with_p_min(p_min), traj, discard, rms

    pilots = {}
    with ThreadPoolExecutor(max_workers=sweep_workers(len(cfg.k_values))) as pool:
        for k, result in zip(cfg.k_values,
                             pool.map(pilot_for, cfg.k_values)):
            pilots[k] = result

    combos = list(itertools.product(cfg.k_values, cfg.snr_values, seeds))
    multiple_snr = len(cfg.snr_values) > 1

    def run_one(combo):
        k, snr, seed = combo
        spec, pilot_traj, discard, rms = pilots[k]
        if snr is None:
            # reuse the pilot dynamics; re-gate the estimates with the
            # calibrated threshold (the raw least-squares solutions are
            # threshold independent)
            raw = np.hstack([pilot_traj.x_hat, pilot_traj.theta_hat])
            valid = pilot_traj.sigma_min_sq >= spec.p_min
            sol = apply_estimate_mode(raw, valid, cfg.estimate_mode)
            traj = replace(pilot_traj, x_hat=sol[:, :n], theta_hat=sol[:, n:],
                           valid=valid,
                           metadata=dict(pilot_traj.metadata,
                                         p_min=spec.p_min, rng_seed=seed))
        else:
            traj = integrate(base_sim(seed, snr, rms), spec, cfg.estimate_mode)
        summary = summarize_run(traj, cfg.theta_true, reference, discard,
                                cfg.steady_window)
        name = _trajectory_filename(k, seed, snr, multiple_snr)
        report.write_trajectory_csv(out_dir / name, traj)
        return combo, traj, summary, discard, name

    results = []
    with ThreadPoolExecutor(max_workers=sweep_workers(len(combos))) as pool:
        results = list(pool.map(run_one, combos))

    rows = []
    run_payload = []
    for (k, snr, seed), traj, summary, discard, name in results:
        rows.append([report.fmt(k), str(seed), report.fmt(snr),
                     report.fmt(summary.final_eigen_error),
                     report.fmt(summary.final_markov_error),
                     report.fmt(summary.fitted_decay_rate),
                     report.fmt(summary.validity_fraction),
                     report.fmt(summary.steady_state_eigen_error),
                     report.fmt(summary.steady_state_markov_error)])
        run_payload.append({
            "k": k, "snr_db": snr, "seed": seed, "trajectory_file": name,
            "p_min": pilots[k][0].p_min,
            "discard_before_s": discard,
            "noise_reference_rms": traj.metadata.get("noise_reference_rms"),
        })
    report.write_csv(out_dir / "report.csv", REPORT_HEADER, rows)

    manifest = {
        "design": {
            "integrator": "classical RK4, fixed step",
            "step_s": cfg.step,
            "horizon_s": cfg.horizon,
            "noise_interpretation":
                "snr_db relative to the RMS of the noise-free output over the horizon",
            "estimate_mode": cfg.estimate_mode,
            "estimate_fallback": "zero vector when sigma_min(P)^2 < p_min"
                                 if cfg.estimate_mode == "zero"
                                 else "hold last valid estimate",
            "p_min_rule": ("configured" if cfg.p_min is not None
                           else "0.5 x min sigma_min(P)^2 over the post-transient pilot"),
            "discard_before_rule": ("configured" if cfg.discard_before is not None
                                    else "5 / (k min |lambda_tilde|)"),
            "spectrum_margin": cfg.spectrum_margin,
            "steady_window_s": cfg.steady_window,
        },
        "input": {
            "freq_rad_s": cfg.input.frequencies.tolist(),
            "amplitude": cfg.input.amplitudes.tolist(),
            "phase_rad": cfg.input.phases.tolist(),
        },
        "observer": {"lambda_tilde": cfg.lambda_tilde.tolist(),
                     "r": int(cfg.lambda_tilde.size)},
        "system": {"theta_a": cfg.theta_true.theta_a.tolist(),
                   "theta_b": cfg.theta_true.theta_b.tolist()},
        "sweep": {"k_values": cfg.k_values,
                  "noise_snr_db_values": cfg.snr_values, "seeds": seeds},
        "runs": run_payload,
    }
    report.write_manifest(out_dir / "manifest.json", manifest)

    do_figures = cfg.figures if figures is None else figures
    if do_figures:
        panels = []
        for (k, snr, seed), traj, summary, discard, _ in results:
            wmask = traj.t >= discard
            t_w = traj.t[wmask][::10]
            panels.append({
                "label": _run_label(k, snr, seed),
                "trajectory": traj,
                "eig_series": (t_w, eigen_error_series(traj.theta_hat[wmask][::10],
                                                       cfg.theta_true)),
                "err_series": (traj.t, summary.err_series),
            })
        report.render_identify_figures(out_dir, panels, cfg.theta_true)

    return {"rows": rows, "results": results, "out_dir": out_dir}


# ---------------------------------------------------------------------------
# excitation check


@dataclass(eq=False)
class ExcitationConfig:
    input: Multisine
    order: int
    t_start: float
    t_stop: float
    t_points: int
    rel_tol: float
    gram_order: int
    gram_epsilon: float
    gram_quad_step: float
    figures: bool


def parse_excitation_config(cfg: dict) -> ExcitationConfig:
    inp_sec = _section(cfg, "input")
    if "terms" in inp_sec and not inp_sec["terms"]:
        sig = Multisine(())   # explicit zero signal is allowed for the check
    else:
        sig = parse_input(inp_sec)
    order = int(_get(cfg, "order", "<root>"))
    if order < 0:
        raise ConfigError(f"order must be >= 0, got {order}")
    grid = _section(cfg, "time_grid_s")
    start = float(_get(grid, "start", "time_grid_s"))
    stop = float(_get(grid, "stop", "time_grid_s"))
    points = int(_get(grid, "points", "time_grid_s"))
    if stop <= start or points < 2:
        raise ConfigError("time_grid_s must satisfy stop > start and points >= 2")
    gram = _section(cfg, "gram", required=False)
    eps = float(gram.get("epsilon_s", 1.0))
    if eps <= 0:
        raise ConfigError("gram.epsilon_s must be positive")
    return ExcitationConfig(
        input=sig, order=order, t_start=start, t_stop=stop, t_points=points,
        rel_tol=float(cfg.get("rel_tol", HANKEL_REL_TOL)),
        gram_order=int(gram.get("order", order)),
        gram_epsilon=eps,
        gram_quad_step=float(gram["quad_step_s"]) if "quad_step_s" in gram else None,
        figures=bool(_section(cfg, "output", required=False).get("figures", True)),
    )


def run_excitation_check(cfg: ExcitationConfig, out_dir, figures: bool = None) -> dict:
    """Tabulate Hankel smallest singular values and persistency levels.

    Emits excitation.csv (t, sigma_min_hankel, rho_gram); the check passes
    when sigma_min exceeds rel_tol times sigma_max at every grid time.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t_grid = np.linspace(cfg.t_start, cfg.t_stop, cfg.t_points)

    stacks = derivative_series(cfg.input, t_grid, 2 * cfg.order)
    sigma_min = np.empty(cfg.t_points)
    sigma_max = np.empty(cfg.t_points)
    for i in range(cfg.t_points):
        svals = np.linalg.svd(hankel(stacks[i]), compute_uv=False)
        sigma_min[i], sigma_max[i] = svals[-1], svals[0]

    rho = np.empty(cfg.t_points)
    for i, t in enumerate(t_grid):
        _, rho[i] = persistency_gram(cfg.input, t, cfg.gram_epsilon,
                                     cfg.gram_order, cfg.gram_quad_step)

    ok = bool(np.all(sigma_min > cfg.rel_tol * sigma_max))
    rows = [[report.fmt(t_grid[i]), report.fmt(sigma_min[i]), report.fmt(rho[i])]
            for i in range(cfg.t_points)]
    report.write_csv(out_dir / "excitation.csv",
                     ["t", "sigma_min_hankel", "rho_gram"], rows)
    report.write_manifest(out_dir / "manifest.json", {
        "order": cfg.order,
        "rel_tol": cfg.rel_tol,
        "exciting_everywhere": ok,
        "gram": {"order": cfg.gram_order, "epsilon_s": cfg.gram_epsilon},
        "input": {"freq_rad_s": cfg.input.frequencies.tolist(),
                  "amplitude": cfg.input.amplitudes.tolist(),
                  "phase_rad": cfg.input.phases.tolist()},
    })
    if cfg.figures if figures is None else figures:
        threshold = float((cfg.rel_tol * sigma_max).max()) if cfg.t_points else 0.0
        report.render_excitation_figure(out_dir, t_grid, sigma_min, rho, threshold)
    return {"ok": ok, "sigma_min": sigma_min, "rho": rho, "t": t_grid}


# ---------------------------------------------------------------------------
# McShane / explicit inverse comparison


@dataclass(eq=False)
class McShaneConfig:
    theta_true: CanonicalTheta
    lambda_tilde: np.ndarray
    k: float
    box: tuple
    w_range: tuple
    grid_points: int
    l_t: float              # None -> estimated from sampled pairs
    samples: int
    budget: int
    seed: int
    figures: bool


def parse_mcshane_config(cfg: dict) -> McShaneConfig:
    theta, _ = parse_system(_section(cfg, "system"))
    if theta.n != 1:
        raise ConfigError(f"mcshane-compare supports n = 1 only, got n = {theta.n}")
    obs = _section(cfg, "observer")
    lam = _vector(_get(obs, "lambda_tilde", "observer"), "observer.lambda_tilde")
    if np.any(lam >= 0) or np.unique(lam).size != lam.size:
        raise ConfigError("observer.lambda_tilde must be distinct and strictly negative")
    box_sec = _section(cfg, "box")
    ranges = []
    for key, count in (("x", theta.n), ("theta_a", theta.n), ("theta_b", theta.n)):
        entries = _get(box_sec, key, "box")
        if len(entries) != count:
            raise ConfigError(f"box.{key} must list {count} [lo, hi] pairs")
        for pair in entries:
            lo, hi = float(pair[0]), float(pair[1])
            if hi <= lo:
                raise ConfigError(f"box.{key} ranges must have hi > lo")
            ranges.append((lo, hi))
    lower = np.array([r[0] for r in ranges])
    upper = np.array([r[1] for r in ranges])
    samples = int(_get(cfg, "samples", "<root>"))
    if samples < 1:
        raise ConfigError(f"samples must be >= 1, got {samples}")
    w_range = cfg.get("w_range", [-0.6, 0.6])
    return McShaneConfig(
        theta_true=theta,
        lambda_tilde=lam,
        k=float(obs.get("k", 1.0)),
        box=(lower, upper),
        w_range=(float(w_range[0]), float(w_range[1])),
        grid_points=int(cfg.get("grid_points_per_dim", 41)),
        l_t=None if cfg.get("l_t") is None else float(cfg["l_t"]),
        samples=samples,
        budget=int(cfg.get("budget", 2_000_000)),
        seed=int(cfg.get("seed", 0)),
        figures=bool(_section(cfg, "output", required=False).get("figures", True)),
    )


def run_mcshane_compare(cfg: McShaneConfig, out_dir, seed_override: int = None,
                        figures: bool = None) -> dict:
    """Compare the gridded McShane inverse against the explicit least squares.

    Draws exact-data samples (x, theta) on the search grid with random filter
    states, inverts each z = T(x, theta, w) both ways and reports the
    discrepancies; the check passes when the largest one does not exceed the
    grid cell diagonal.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if seed_override is None else seed_override
    spec = ObserverSpec(cfg.lambda_tilde, cfg.k, cfg.theta_true.n, p_min=0.0)
    n = spec.n
    rng = np.random.default_rng(seed)
    lower, upper = cfg.box
    g = cfg.grid_points
    diag = float(np.linalg.norm((upper - lower) / (g - 1)))

    def draw_well_posed_w():
        # the McShane premise needs T uniformly injective on the box for the
        # drawn filter state; reject w's whose Jacobian degenerates somewhere
        for _ in range(200):
            w = rng.uniform(cfg.w_range[0], cfg.w_range[1], size=spec.r)
            if t_jacobian_min(cfg.box, w, spec) >= 5e-3:
                return w
        raise ConfigError(
            "could not draw a filter state keeping the target map injective "
            "on the box; widen w_range or shrink the box")

    rows = []
    discrepancies = []
    for s in range(cfg.samples):
        # snap the truth to the search grid so the exact-data infimum is attained
        idx = rng.integers(0, g, size=3 * n)
        truth = lower + idx * (upper - lower) / (g - 1)
        w = draw_well_posed_w()
        theta = CanonicalTheta(truth[n:2 * n], truth[2 * n:])
        z = t_map(truth[:n], theta, w, spec)

        l_t = cfg.l_t if cfg.l_t is not None else \
            estimate_injectivity_modulus(cfg.box, w, spec, num_pairs=1500,
                                         seed=seed + 7 * s)
        x_ms, th_ms = mcshane_inverse(z, w, cfg.box, l_t, g, spec, cfg.budget)
        x_ex, th_ex, _ = t_star_explicit(z, w, spec)
        est_ms = np.concatenate([x_ms, th_ms.vector])
        est_ex = np.concatenate([x_ex, th_ex.vector])
        disc = float(np.linalg.norm(est_ms - est_ex))
        discrepancies.append(disc)
        row = [str(s), report.fmt(l_t)]
        row += [report.fmt(v) for v in truth]
        row += [report.fmt(v) for v in est_ex]
        row += [report.fmt(v) for v in est_ms]
        row.append(report.fmt(disc))
        rows.append(row)

    header = ["sample", "l_t"]
    for tag in ("true", "explicit", "mcshane"):
        header += [f"x1_{tag}", f"theta_a1_{tag}", f"theta_b1_{tag}"]
    header.append("discrepancy")
    report.write_csv(out_dir / "mcshane.csv", header, rows)

    ok = bool(max(discrepancies) <= diag)
    report.write_manifest(out_dir / "manifest.json", {
        "grid_points_per_dim": g,
        "grid_cell_diagonal": diag,
        "max_discrepancy": max(discrepancies),
        "within_one_cell": ok,
        "l_t_rule": "configured" if cfg.l_t is not None
                    else "sampled min |T(p)-T(q)|/|p-q| per draw",
        "samples": cfg.samples,
        "seed": seed,
    })
    if cfg.figures if figures is None else figures:
        report.render_mcshane_figure(out_dir, discrepancies, diag)
    return {"ok": ok, "discrepancies": np.array(discrepancies), "grid_diagonal": diag}
