"""The four pipeline commands: benchmark curves, echo histogram, tomography, mu sweep.

Each command writes CSV (the contract) plus optional SVG figures into the
configured output directory, and returns a dict of the files it wrote.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import logging
import math
from pathlib import Path

import numpy as np

from . import io
from .benchmark import SINGLE_PHOTON_BOUND, benchmark_curve, f_class_unit_efficiency
from .config import RunConfig, dump_config
from .detection import build_histogram, cell_rng, run_counts
from .memory import gaussian_pulse, grid_size, propagate_pulse
from .polarization import (LABELS, analyzer_setting, canonical_state, hwp_scan_setting,
                           prepared_state)
from .tomography import fit_fringe, reconstruct

log = logging.getLogger(__name__)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def benchmark_grid(cfg: RunConfig) -> np.ndarray:
    return np.geomspace(cfg.benchmark_mu_min, cfg.benchmark_mu_max, cfg.benchmark_points)


def benchmark_columns(mu_grid, etas) -> dict[str, np.ndarray]:
    """f_class for each efficiency on ``mu_grid``, keyed 'f_class_eta_<eta>'."""
    return {f"f_class_eta_{io.fmt(eta)}": np.array([p.f_class for p in benchmark_curve(mu_grid, eta)])
            for eta in etas}


def cmd_benchmark(cfg: RunConfig, plot: bool = True) -> dict:
    out = _outdir(cfg)
    grid = benchmark_grid(cfg)
    points = []
    curves = {}
    for eta in cfg.eta_lines:
        curve = benchmark_curve(grid, eta)
        points.extend(curve)
        curves[eta] = np.array([p.f_class for p in curve])
    files = {"benchmark": io.write_benchmark_csv(out / "benchmark.csv", points)}
    unit = np.array([f_class_unit_efficiency(m) for m in grid])
    files["reference"] = io.write_rows(
        out / "benchmark_reference.csv", ["mu", "f_single_photon", "f_class_unit"],
        zip(grid, np.full_like(grid, SINGLE_PHOTON_BOUND), unit))
    if plot:
        from .plotting import plot_benchmark
        files["plot"] = plot_benchmark(out / "benchmark.svg", grid, curves, unit)
    return files


def cmd_echo(cfg: RunConfig, plot: bool = True) -> dict:
    out = _outdir(cfg)
    mem = cfg.memory
    n = grid_size(mem, cfg.pulse.dt_s)
    pulse = gaussian_pulse(cfg.pulse.fwhm_s, cfg.pulse.dt_s, n)
    afc = propagate_pulse(pulse, mem)
    pit = propagate_pulse(pulse, mem.with_(peak_od=0.0))
    energy = pulse.energy()
    t_range = (cfg.echo.t_min_s, cfg.echo.t_max_s)
    h_afc = build_histogram(afc.output, cfg.echo.mu, cfg.channel, cfg.seed, cfg.echo.bin_s, energy, t_range)
    h_pit = build_histogram(pit.output, cfg.echo.mu, cfg.channel, cfg.seed + 1, cfg.echo.bin_s, energy, t_range)

    files = {"histogram": io.write_rows(
        out / "echo_histogram.csv", ["t_ns", "counts_afc", "counts_empty_pit"],
        zip(h_afc.bin_centers * 1e9, h_afc.counts.astype(int), h_pit.counts.astype(int)))}
    t_rel = pulse.times - pulse.center_s
    keep = (t_rel >= t_range[0]) & (t_rel <= t_range[1])
    files["intensity"] = io.write_rows(
        out / "echo_intensity.csv", ["time_s", "intensity_afc", "intensity_empty_pit"],
        zip(t_rel[keep], afc.output.intensity[keep], pit.output.intensity[keep]))

    t_s = mem.storage_time_s
    echo_window = (t_s - cfg.pulse.fwhm_s, t_s + cfg.pulse.fwhm_s)
    input_window = (-cfg.pulse.fwhm_s, cfg.pulse.fwhm_s)
    ref_in = h_pit.window_sum(*input_window)
    summary = [
        ("storage_time_ns", t_s * 1e9),
        ("echo_delay_ns", afc.echo_delay_s * 1e9),
        ("echo_efficiency", afc.echo_efficiency),
        ("grid_dt_ns", cfg.pulse.dt_s * 1e9),
        ("echo_window_counts", h_afc.window_sum(*echo_window)),
        ("reference_input_counts", ref_in),
        ("echo_to_reference_ratio", h_afc.window_sum(*echo_window) / ref_in if ref_in else float("nan")),
        ("empty_pit_echo_window_counts", h_pit.window_sum(*echo_window)),
    ]
    files["summary"] = io.write_rows(out / "echo_summary.csv", ["quantity", "value"], summary)
    if plot:
        from .plotting import plot_echo
        files["plot"] = plot_echo(out / "echo.svg", h_afc, h_pit, echo_window)
    return files


def read_summary(path) -> dict[str, float]:
    return {r["quantity"]: float(r["value"]) for r in io.read_rows(path)}


def _inputs(labels, cfg: RunConfig):
    return [(l, prepared_state(l, cfg.prep_qwp_error_rad)) for l in labels]


def tomography_run(cfg: RunConfig, mu: float, labels, seed: int, analytic: bool = False,
                   resamples: int | None = None):
    """Simulate and reconstruct each input; returns (records, results) per label."""
    settings = [analyzer_setting(s) for s in cfg.settings]
    records = run_counts(_inputs(labels, cfg), settings, mu, cfg.memory, cfg.channel, seed, analytic)
    resamples = cfg.resamples if resamples is None else resamples
    results = []
    k = len(settings)
    for i, label in enumerate(labels):
        recs = records[i * k:(i + 1) * k]
        results.append(reconstruct(recs, label, resamples, seed=int(seed) * 1000 + i,
                                   sigma_tech=cfg.sigma_tech))
    return records, results


def fringe_scan(cfg: RunConfig, label: str, qwp: float | None, seed: int, mu: float | None = None):
    """HWP sweep over [0, pi/2] for one input; returns (angles, records, FringeFit)."""
    mu = cfg.tomo_mu if mu is None else mu
    angles = np.linspace(0, math.pi / 2, cfg.fringe_points)
    settings = [hwp_scan_setting(a, qwp) for a in angles]
    records = run_counts(_inputs([label], cfg), settings, mu, cfg.memory, cfg.channel, seed)
    return angles, records, fit_fringe(angles, records, seed=seed)


FRINGE_SCANS = (("V", None), ("D", None), ("R", None), ("R", math.pi / 4))


def cmd_tomo(cfg: RunConfig, plot: bool = True) -> dict:
    out = _outdir(cfg)
    labels = list(cfg.input_states)
    records, results = tomography_run(cfg, cfg.tomo_mu, labels, cfg.seed)
    files = {"counts": io.write_counts_csv(out / "tomo_counts.csv", records)}
    rows = [[r.target_label, r.method, r.fidelity_raw, r.fidelity_err, r.fidelity_dark_subtracted]
            for r in results]
    mean = float(np.mean([r.fidelity_raw for r in results]))
    files["table"] = io.write_rows(
        out / "tomo_fidelities.csv",
        ["input", "method", "fidelity", "fidelity_err", "fidelity_dark_subtracted"], rows)
    files["matrices"] = io.write_json(out / "tomo_results.json", {
        "mu": cfg.tomo_mu,
        "mean_fidelity": mean,
        "results": [r.to_dict() for r in results],
    })

    fringe_rows = []
    fringe_data = []
    for j, (label, qwp) in enumerate(FRINGE_SCANS):
        angles, recs, fit = fringe_scan(cfg, label, qwp, cfg.seed + 7919 * (j + 1))
        name = f"fringe_{label}" + ("_qwp" if qwp is not None else "")
        p = np.array([r.rate for r in recs])
        io.write_fringe_csv(out / f"{name}.csv", angles, p, fit.model(angles))
        fringe_rows.append([name, label, "" if qwp is None else io.fmt(math.degrees(qwp)),
                            fit.visibility, fit.visibility_err, fit.amplitude, fit.phase_rad])
        fringe_data.append((name, angles, p, fit))
    files["fringes"] = io.write_rows(
        out / "fringe_summary.csv",
        ["scan", "input", "qwp_deg", "visibility", "visibility_err", "amplitude", "phase_rad"], fringe_rows)
    if plot:
        from .plotting import plot_density_matrices, plot_fringes
        files["plot_rho"] = plot_density_matrices(out / "tomo_density_matrices.svg", results)
        files["plot_fringes"] = plot_fringes(out / "fringes.svg", fringe_data)
    log.info("mean raw conditional fidelity %.4f at mu=%g", mean, cfg.tomo_mu)
    return files


def _combine(errors) -> float:
    """Standard error of a mean of independent estimates with the given errors."""
    errors = np.asarray(errors, dtype=float)
    return float(np.sqrt(np.sum(errors**2)) / len(errors))


def sweep_point(cfg: RunConfig, index: int, mu: float) -> list[float]:
    """Raw and dark-subtracted mean fidelity (with errors) over the sweep inputs at one mu."""
    from .tomography import fidelity_with_error, max_likelihood
    labels = list(cfg.sweep_states)
    seed = int(cell_rng(cfg.seed, 104729, index).integers(2**31))
    records, results = tomography_run(cfg, mu, labels, seed)
    raw = [r.fidelity_raw for r in results]
    raw_err = [r.fidelity_err for r in results]
    sub, sub_err = [], []
    for i, (label, r) in enumerate(zip(labels, results)):
        sub.append(r.fidelity_dark_subtracted)
        if cfg.resamples:
            ds = max_likelihood(r.records, dark_subtracted=True)
            sub_err.append(fidelity_with_error(ds, canonical_state(label), cfg.resamples,
                                               seed * 1000 + 500 + i, cfg.sigma_tech)[1])
        else:
            sub_err.append(float("nan"))
    return [mu, float(np.mean(raw)), _combine(raw_err), float(np.mean(sub)), _combine(sub_err)]


SWEEP_HEADER = ["mu", "fidelity_raw", "fidelity_raw_err", "fidelity_dark_subtracted",
                "fidelity_dark_subtracted_err"]


def cmd_sweep(cfg: RunConfig, plot: bool = True) -> dict:
    out = _outdir(cfg)
    mus = sorted(float(m) for m in cfg.mu_list)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(sweep_point, [cfg] * len(mus), range(len(mus)), mus))
    else:
        rows = [sweep_point(cfg, i, m) for i, m in enumerate(mus)]
    bench = benchmark_columns(mus, cfg.sweep_eta_lines)
    unit = [f_class_unit_efficiency(m) for m in mus]
    header = SWEEP_HEADER + list(bench) + ["f_class_unit", "f_single_photon"]
    table = [row + [bench[k][i] for k in bench] + [unit[i], SINGLE_PHOTON_BOUND]
             for i, row in enumerate(rows)]
    files = {"sweep": io.write_rows(out / "sweep.csv", header, table)}
    if plot:
        from .plotting import plot_sweep
        files["plot"] = plot_sweep(out / "sweep.svg", io.read_table(files["sweep"]), cfg)
    return files


def write_config_snapshot(cfg: RunConfig) -> Path:
    out = _outdir(cfg)
    path = out / "config_used.toml"
    path.write_text(dump_config(cfg))
    return path
