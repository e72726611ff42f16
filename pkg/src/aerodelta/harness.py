"""Closed-loop simulation harness: runs scenarios, computes metrics,
reads and writes traces.

One control tick is: measure the rig, evaluate the envelope and preset
trajectory, form the end-effector velocity command (preset tracking law
or the proportional closed-loop baseline), build and solve the
allocation QP warm-started from the previous tick, integrate the solved
rates into base/arm references, and let the lagged plant chase them.
Truth-side quantities (true error, envelope margin, realized
command-following gap) are recorded at full control rate; the CSV trace
is decimated to the scenario's trace_dt.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels, allocation, preset, tracking
from .delta_arm import JointLimitError, UnreachableError, delta_ik
from .envelope import make_envelope, rho_at
from .geometry import yaw_rotation
from .plant import NoiseStream, _apply_noise, derive_seed, pack_state
from .scenario import Scenario, scenario_to_dict
from .tracking import delta_z_bound, fresh_state

TERMINAL_WINDOW = 5.0

CSV_COLUMNS = (
    ["t"]
    + [f"p_E.{a}" for a in "xyz"]
    + [f"p_O.{a}" for a in "xyz"]
    + [f"e_E.{a}" for a in "xyz"]
    + [f"rho.{a}" for a in "xyz"]
    + [f"alpha.{a}" for a in "xyz"]
    + [f"cmd.{a}" for a in "xyz"]
    + [f"xstar.{i}" for i in range(1, 7)]
    + [f"p_B.{a}" for a in "xyz"]
    + [f"q.{i}" for i in range(1, 4)]
)


class RunError(RuntimeError):
    """A module error occurred mid-run; message carries the tick context."""


class TerminalWindowError(RuntimeError):
    """Trace ends before the post-convergence averaging window closes."""


@dataclass
class Trace:
    """Decimated closed-loop time series (one row per trace_dt)."""

    t: np.ndarray
    p_e: np.ndarray
    p_o: np.ndarray
    e_e: np.ndarray
    rho: np.ndarray
    alpha: np.ndarray
    cmd: np.ndarray
    xstar: np.ndarray
    p_b: np.ndarray
    q: np.ndarray


@dataclass
class Diagnostics:
    """Full-control-rate health signals kept out of the CSV."""

    t: np.ndarray
    s_norm: np.ndarray
    delta_norm: np.ndarray
    qp_iterations: np.ndarray
    min_margin: float


@dataclass
class RunMetrics:
    avg_error: float
    convergence_time: float
    terminal_error: float
    terminal_error_std: float
    envelope_violations: int
    qp_nonconverged: int
    delta_cap_exceedances: int
    terminal_window_complete: bool


@dataclass
class RunResult:
    scenario_name: str
    method: str
    seed: int
    trace: Trace
    metrics: RunMetrics
    diagnostics: Diagnostics


def convergence_time(t: np.ndarray, e_norm: np.ndarray, rho_inf_norm: float) -> float:
    """First time after which the error norm stays at or below the floor.

    Returns 0.0 when the error never exceeds the floor and +inf when it
    never settles under it.
    """
    if len(t) == 0:
        raise ValueError("empty trace")
    above = e_norm > rho_inf_norm
    if not above.any():
        return 0.0
    last = int(np.nonzero(above)[0][-1])
    if last == len(t) - 1:
        return math.inf
    return float(t[last + 1])


def terminal_error(
    t: np.ndarray, e_norm: np.ndarray, t_conv: float, window: float = TERMINAL_WINDOW
) -> tuple[float, float]:
    """Mean and std of the error norm over [t_conv, t_conv + window]."""
    if not math.isfinite(t_conv):
        raise TerminalWindowError("run never converged; no terminal window")
    end = t_conv + window
    if t[-1] < end - 1e-9:
        raise TerminalWindowError(
            f"trace ends at {t[-1]:.3f}s, before the window closing at {end:.3f}s"
        )
    mask = (t >= t_conv - 1e-12) & (t <= end + 1e-12)
    vals = e_norm[mask]
    return float(vals.mean()), float(vals.std())


def run_scenario(sc: Scenario, seed: int = 0, method: str | None = None) -> RunResult:
    """Simulate one scenario run and compute its metrics.

    ``seed`` selects the sensors' noise stream; ``method`` overrides the
    scenario's configured method when given.

    The tick loop calls the module cores directly on preshaped arrays
    (the validated wrappers re-check fixed-size inputs every call, which
    dominates the per-tick cost); the loop is checked step-for-step
    against the public wrappers in the test suite.
    """
    method = sc.method if method is None else method
    if method not in ("preset", "clik"):
        raise ValueError(f"method must be 'preset' or 'clik', got {method!r}")
    geom, mount, bounds, gains = sc.geometry, sc.mounting, sc.bounds, sc.gains
    e0 = sc.initial_error()
    e0_dot = -sc.target_velocity
    env = make_envelope(sc.rho0, sc.rho_inf, sc.t_p, e0, eps_scale=sc.eps_scale)
    traj = _build_preset(sc, env, e0, e0_dot, required=method == "preset")

    q_home = delta_ik(geom, sc.plat_home)
    r_start = yaw_rotation(sc.start_yaw)
    p_b0 = sc.start_p_e - r_start @ (mount.r_arm @ sc.plat_home + mount.offset)
    state = pack_state(p_b0, sc.start_yaw, q_home)
    p_plat_true = sc.plat_home.copy()
    s_ref = np.concatenate([p_b0, sc.plat_home])
    x_prev = np.zeros(6)
    yaw_rate_true = 0.0
    track_state = fresh_state()

    dt_c = sc.control_dt
    n_ticks = round(sc.duration / dt_c)
    n_sub = sc.n_sub
    decim = sc.decimation
    n_rows = n_ticks // decim + 1
    noise = sc.plant.noise
    noise_key = derive_seed(noise.seed, seed)
    noisy = noise.sigma_pos != 0.0 or noise.sigma_gyro != 0.0
    stream = NoiseStream(noise_key) if noisy else None

    # Everything that depends on tick time alone is evaluated up front.
    t_full = np.arange(n_ticks + 1) * dt_c
    rho_all = rho_at(env, t_full)
    if traj is not None:
        alpha_all, alpha_dot_all, _ = preset.alpha_at(traj, t_full)
    else:
        alpha_all = np.zeros((n_ticks + 1, 3))
        alpha_dot_all = np.zeros((n_ticks + 1, 3))
    p_o_all = sc.target_p_o + np.outer(t_full, sc.target_velocity)

    lam, k_gain = gains.lam, gains.k
    v_target = sc.target_velocity
    k_clik = sc.k_clik
    weights = allocation._as_vec6(sc.weights, "weights")
    r_arm, offset = mount.r_arm, mount.offset
    arm_aligned = bool(np.array_equal(r_arm, np.eye(3)))
    r_eff, l_a, l_f = geom.r_eff, geom.upper_arm, geom.forearm
    j_lo, j_hi = geom.joint_min, geom.joint_max
    plant_p = sc.plant
    yaw_target = sc.yaw_target
    is_preset = method == "preset"
    refs = np.empty(7)
    j_mat = np.zeros((3, 6))
    j_mat[0, 0] = j_mat[1, 1] = j_mat[2, 2] = 1.0

    trace = Trace(
        t=np.zeros(n_rows),
        p_e=np.zeros((n_rows, 3)),
        p_o=np.zeros((n_rows, 3)),
        e_e=np.zeros((n_rows, 3)),
        rho=np.zeros((n_rows, 3)),
        alpha=np.zeros((n_rows, 3)),
        cmd=np.zeros((n_rows, 3)),
        xstar=np.zeros((n_rows, 6)),
        p_b=np.zeros((n_rows, 3)),
        q=np.zeros((n_rows, 3)),
    )
    e_full = np.zeros((n_ticks + 1, 3))
    s_norm = np.full(n_ticks + 1, math.nan)
    delta_norm = np.zeros(n_ticks)
    qp_iters = np.zeros(n_ticks + 1, dtype=int)
    qp_bad = 0
    delta_exceed = 0
    row = 0

    r_true = yaw_rotation(state[3])
    p_e_true = state[:3] + r_true @ (r_arm @ p_plat_true + offset)

    for k in range(n_ticks + 1):
        t = k * dt_c
        try:
            p_base = state[:3]
            p_o = p_o_all[k]
            e_true = p_e_true - p_o
            e_full[k] = e_true

            if noisy:
                meas = _apply_noise(
                    noise, p_base, r_true, p_plat_true, yaw_rate_true,
                    dt_c, stream.draws(k),
                )
                p_b_m, r_m, p_p_m = meas.p_base, meas.r_base, meas.p_plat
                ox, oy, oz = meas.omega
            else:
                p_b_m, r_m, p_p_m = p_base, r_true, p_plat_true
                ox = 0.0
                oy = 0.0
                oz = yaw_rate_true
            lever = r_m @ (r_arm @ p_p_m + offset)
            e_meas = p_b_m + lever - p_o

            if is_preset:
                cmd, s_vec, track_state = tracking._step(
                    lam, k_gain, track_state, e_meas, v_target,
                    alpha_all[k], alpha_dot_all[k], dt_c,
                )
                s_norm[k] = math.sqrt(s_vec @ s_vec)
            else:
                cmd = v_target - k_clik * e_meas

            j_mat[:, 3:] = r_m if arm_aligned else r_m @ r_arm
            drift = np.array([
                oy * lever[2] - oz * lever[1],
                oz * lever[0] - ox * lever[2],
                ox * lever[1] - oy * lever[0],
            ])
            prob = allocation._assemble(
                bounds, j_mat, drift, cmd, s_ref, x_prev, dt_c, weights
            )
            sol = allocation.solve(prob, x0=x_prev)
            qp_iters[k] = sol.iterations
            if not sol.converged:
                qp_bad += 1

            if k % decim == 0:
                trace.t[row] = t
                trace.p_e[row] = p_e_true
                trace.p_o[row] = p_o
                trace.e_e[row] = e_true
                trace.rho[row] = rho_all[k]
                trace.alpha[row] = alpha_all[k]
                trace.cmd[row] = cmd
                trace.xstar[row] = sol.x
                trace.p_b[row] = p_base
                trace.q[row] = state[4:]
                row += 1
            if k == n_ticks:
                break

            s_ref = s_ref + sol.x * dt_c
            status, q_ref = _kernels.delta_ik(r_eff, l_a, l_f, s_ref[3:])
            if status != 0:
                raise UnreachableError(
                    f"platform reference {s_ref[3:]} outside workspace"
                )
            if q_ref.min() < j_lo or q_ref.max() > j_hi:
                raise JointLimitError(
                    f"reference solution {q_ref} outside [{j_lo}, {j_hi}]"
                )
            refs[:3] = s_ref[:3]
            refs[3] = yaw_target
            refs[4:] = q_ref
            status, state, p_plat_true, yaw_rate_true = _kernels.plant_advance(
                state, refs, plant_p.tau_base, plant_p.tau_arm,
                plant_p.yaw_rate_limit, r_eff, l_a, l_f, plant_p.dt, n_sub,
            )
            if status != 0:
                raise UnreachableError(
                    f"joint state {state[4:]} has no platform solution"
                )
            x_prev = sol.x
            r_true = yaw_rotation(state[3])
            p_e_next = state[:3] + r_true @ (r_arm @ p_plat_true + offset)
            gap = (p_e_next - p_e_true) / dt_c - cmd
            dval = math.sqrt(gap @ gap)
            delta_norm[k] = dval
            if dval > plant_p.delta_cap:
                delta_exceed += 1
            p_e_true = p_e_next
        except (RunError, TerminalWindowError):
            raise
        except Exception as exc:
            raise RunError(f"{sc.name}[{method}] seed {seed}, tick {k} (t={t:.3f}s): {exc}") from exc

    margins = (rho_all - np.abs(e_full)).min(axis=1)
    min_margin = float(margins.min())
    violations = int(np.count_nonzero(margins <= 0.0))

    e_rows = np.linalg.norm(trace.e_e, axis=1)
    rho_inf_norm = float(np.linalg.norm(sc.rho_inf))
    t_conv = convergence_time(trace.t, e_rows, rho_inf_norm)
    try:
        term_mean, term_std = terminal_error(trace.t, e_rows, t_conv)
        window_ok = True
    except TerminalWindowError:
        term_mean, term_std = math.nan, math.nan
        window_ok = False
    metrics = RunMetrics(
        avg_error=float(e_rows.mean()),
        convergence_time=t_conv,
        terminal_error=term_mean,
        terminal_error_std=term_std,
        envelope_violations=violations,
        qp_nonconverged=qp_bad,
        delta_cap_exceedances=delta_exceed,
        terminal_window_complete=window_ok,
    )
    diags = Diagnostics(
        t=t_full,
        s_norm=s_norm,
        delta_norm=delta_norm,
        qp_iterations=qp_iters,
        min_margin=min_margin,
    )
    return RunResult(
        scenario_name=sc.name,
        method=method,
        seed=seed,
        trace=trace,
        metrics=metrics,
        diagnostics=diags,
    )


def composite_fk_raw(p_base, yaw, p_plat, mount) -> np.ndarray:
    """Composite forward kinematics on raw arrays (hot path, no checks)."""
    return p_base + yaw_rotation(yaw) @ (mount.r_arm @ p_plat + mount.offset)


def _build_preset(sc: Scenario, env, e0, e0_dot, required: bool):
    """Preset trajectory for the run; optional for the baseline method."""
    try:
        if sc.c is not None:
            return preset.PresetTrajectory(e0=e0, e0_dot=e0_dot, c=sc.c, l_e=env.l_e)
        margin = delta_z_bound(sc.gains)
        c = preset.choose_c(env, e0, e0_dot, margin, safety=sc.safety)
        return preset.PresetTrajectory(
            e0=e0, e0_dot=e0_dot, c=c, l_e=env.l_e, margin=margin, rho0=env.rho0
        )
    except ValueError:
        if required:
            raise
        return None


def write_trace_csv(trace: Trace, path) -> None:
    """Write a trace with a fixed column layout; floats use repr so the
    file is byte-stable for identical runs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i in range(len(trace.t)):
            rowvals = (
                [trace.t[i]]
                + list(trace.p_e[i]) + list(trace.p_o[i]) + list(trace.e_e[i])
                + list(trace.rho[i]) + list(trace.alpha[i]) + list(trace.cmd[i])
                + list(trace.xstar[i]) + list(trace.p_b[i]) + list(trace.q[i])
            )
            writer.writerow([repr(float(v)) for v in rowvals])


def read_trace_csv(path) -> Trace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header")
        data = np.array([[float(v) for v in line] for line in reader])
    if data.size == 0:
        raise ValueError(f"{path}: empty trace")
    return Trace(
        t=data[:, 0],
        p_e=data[:, 1:4],
        p_o=data[:, 4:7],
        e_e=data[:, 7:10],
        rho=data[:, 10:13],
        alpha=data[:, 13:16],
        cmd=data[:, 16:19],
        xstar=data[:, 19:25],
        p_b=data[:, 25:28],
        q=data[:, 28:31],
    )


def metrics_from_trace(trace: Trace, rho_inf) -> dict:
    """Recompute the trace-derivable metrics (used for CSV fidelity and
    the report command). Envelope violations here are per emitted row."""
    e_rows = np.linalg.norm(trace.e_e, axis=1)
    rho_inf_norm = float(np.linalg.norm(np.asarray(rho_inf, dtype=float)))
    t_conv = convergence_time(trace.t, e_rows, rho_inf_norm)
    try:
        term_mean, term_std = terminal_error(trace.t, e_rows, t_conv)
    except TerminalWindowError:
        term_mean, term_std = math.nan, math.nan
    row_viol = int(np.sum(np.any(np.abs(trace.e_e) >= trace.rho, axis=1)))
    return {
        "avg_error": float(e_rows.mean()),
        "convergence_time": t_conv,
        "terminal_error": term_mean,
        "terminal_error_std": term_std,
        "row_violations": row_viol,
    }


def csv_name(scenario_name: str, method: str, seed: int) -> str:
    return f"{scenario_name}__{method}__seed{seed}.csv"


def _run_for_batch(args) -> RunResult:
    sc, seed, method = args
    return run_scenario(sc, seed=seed, method=method)


@dataclass
class BatchReport:
    scenario_name: str
    method: str
    seeds: tuple
    runs: list
    aggregates: dict
    out_dir: str | None


def _aggregate(metrics_list: list[RunMetrics]) -> dict:
    conv = np.array([m.convergence_time for m in metrics_list])
    avg = np.array([m.avg_error for m in metrics_list])
    term = np.array([m.terminal_error for m in metrics_list])
    return {
        "runs": len(metrics_list),
        "median_convergence_time": float(np.median(conv)),
        "std_convergence_time": float(np.std(conv)) if np.all(np.isfinite(conv)) else math.inf,
        "median_avg_error": float(np.median(avg)),
        "std_avg_error": float(np.std(avg)),
        "median_terminal_error": float(np.nanmedian(term)) if np.any(np.isfinite(term)) else math.nan,
        "std_terminal_error": float(np.nanstd(term)) if np.any(np.isfinite(term)) else math.nan,
        "total_envelope_violations": int(sum(m.envelope_violations for m in metrics_list)),
        "total_qp_nonconverged": int(sum(m.qp_nonconverged for m in metrics_list)),
        "total_delta_cap_exceedances": int(sum(m.delta_cap_exceedances for m in metrics_list)),
    }


def batch(
    sc: Scenario,
    seeds=None,
    method: str | None = None,
    out_dir=None,
    jobs: int = 1,
) -> BatchReport:
    """Run a scenario across seeds, optionally writing traces and a report.

    With ``jobs`` > 1 seeds run in separate processes; results are
    identical either way since every run is a pure function of
    (scenario, seed).
    """
    seeds = tuple(sc.seeds if seeds is None else [int(s) for s in seeds])
    method = sc.method if method is None else method
    work = [(sc, s, method) for s in seeds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_for_batch, work))
    else:
        results = [_run_for_batch(w) for w in work]

    aggregates = _aggregate([r.metrics for r in results])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for r in results:
            fname = csv_name(r.scenario_name, r.method, r.seed)
            write_trace_csv(r.trace, out / fname)
            files.append(fname)
        report = {
            "scenario": scenario_to_dict(replace(sc, method=method)),
            "method": method,
            "seeds": list(seeds),
            "runs": [
                {"seed": r.seed, "csv": f, **asdict(r.metrics)}
                for r, f in zip(results, files)
            ],
            "aggregates": aggregates,
        }
        with open(out / "report.json", "w") as fh:
            json.dump(report, fh, indent=2)
    return BatchReport(
        scenario_name=sc.name,
        method=method,
        seeds=seeds,
        runs=results,
        aggregates=aggregates,
        out_dir=None if out_dir is None else str(out_dir),
    )


def sweep(
    sc: Scenario,
    tp_values,
    seeds=None,
    out_dir=None,
    jobs: int = 1,
) -> dict:
    """Rerun a scenario over several preset horizons t_p.

    Durations stretch to keep the post-convergence window inside the
    trace; the preset rate c is re-chosen per horizon.
    """
    summary = {}
    for tp in tp_values:
        tp = float(tp)
        sc_tp = replace(sc, t_p=tp, duration=max(sc.duration, tp + 8.0))
        sub_dir = None if out_dir is None else Path(out_dir) / f"tp{tp:g}"
        rep = batch(sc_tp, seeds=seeds, out_dir=sub_dir, jobs=jobs)
        summary[tp] = {
            "aggregates": rep.aggregates,
            "terminal_errors": [r.metrics.terminal_error for r in rep.runs],
            "terminal_error_stds": [r.metrics.terminal_error_std for r in rep.runs],
        }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.json", "w") as fh:
            json.dump({str(k): v for k, v in summary.items()}, fh, indent=2)
    return summary


def reaggregate(out_dir) -> dict:
    """Recompute metrics from the CSVs in a batch output directory.

    Reads report.json for the scenario echo, recomputes every run's
    trace metrics from its CSV, and returns both for comparison.
    """
    out = Path(out_dir)
    report_path = out / "report.json"
    if not report_path.is_file():
        raise FileNotFoundError(f"no report.json in {out}")
    with open(report_path) as fh:
        report = json.load(fh)
    rho_inf = report["scenario"]["rho_inf"]
    rows = []
    for entry in report["runs"]:
        trace = read_trace_csv(out / entry["csv"])
        recomputed = metrics_from_trace(trace, rho_inf)
        rows.append({"seed": entry["seed"], "csv": entry["csv"],
                     "stored": entry, "recomputed": recomputed})
    return {"report": report, "runs": rows}
