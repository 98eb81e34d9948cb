"""Command-line entry point.

Commands:
  run <config.json>   execute a scenario, write CSV/JSON artifacts
  print-defaults      canonical listing of all config defaults
  export-tables       transition-strength, Lande and overlap tables

Exit codes: 0 success, 2 config error, 3 solver error.  The output
directory from the config can be overridden with --out-dir or the
WGMCQED_OUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import atom, fields, spectra, transit
from .config import DEFAULTS, MHZ, config_hash, load_config, model_kwargs
from .errors import ConfigError, FitError, SolverError
from .spectra import GDistribution, SpectrumResult

ENV_OUT_DIR = "WGMCQED_OUT_DIR"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def write_csv(path: Path, columns: dict[str, np.ndarray], cfg_hash: str, title: str):
    lines = [f"# wgmcqed {title}", f"# config_hash: {cfg_hash}", ",".join(columns)]
    arrays = list(columns.values())
    for row in zip(*arrays):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict, cfg_hash: str):
    payload = {"config_hash": cfg_hash, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _detunings(cfg) -> np.ndarray:
    return np.linspace(cfg["detuning_min_mhz"], cfg["detuning_max_mhz"], cfg["n_detunings"]) * MHZ


def _spectrum_columns(result: SpectrumResult, extra: dict | None = None) -> dict:
    cols = {
        "detuning_MHz": result.detunings / MHZ,
        "transmission": result.transmission,
    }
    if extra:
        cols.update(extra)
    return cols


def run_fields(cfg, out: Path, h: str) -> str:
    n = 1.0 / cfg["refractive_index"]
    theta = np.linspace(math.asin(n) + 1e-9, math.pi / 2 - 1e-9, 200)
    comp = [fields.evanescent_components(t, n) for t in theta]
    write_csv(
        out / "fields_profile.csv",
        {
            "theta_deg": np.degrees(theta),
            "e_r": np.array([c.e_r for c in comp]),
            "e_phi": np.array([c.e_phi for c in comp]),
            "ratio": np.array([c.ratio for c in comp]),
        },
        h,
        "evanescent field profile",
    )
    d = np.linspace(50e-9, 500e-9, 100)
    write_csv(
        out / "coupling_profile.csv",
        {
            "distance_nm": d * 1e9,
            "g_MHz": np.array([fields.coupling_vs_distance(x) for x in d]) / MHZ,
        },
        h,
        "coupling vs distance",
    )
    ratio = fields.longitudinal_ratio(n)
    return f"ratio={ratio:.4f} sigma+_overlap={fields.circular_overlap(fields.mode_amplitude_vector(fields.tm_mode('+', ratio)), 1):.4f}"


def run_spectrum(cfg, out: Path, h: str) -> str:
    res = spectra.sweep_spectrum(
        cfg["geometry"], _detunings(cfg), cfg["g_mhz"] * MHZ, **model_kwargs(cfg)
    )
    write_csv(out / "spectrum.csv", _spectrum_columns(res), h, f"cw spectrum {res.meta}")
    k = int(np.argmin(res.transmission))
    return f"geometry={res.meta} min_T={res.transmission[k]:.4f} at {res.detunings[k] / MHZ:+.2f} MHz"


def _dist(cfg) -> GDistribution:
    return GDistribution(
        g_mean=cfg["g_mean_mhz"] * MHZ,
        g_sigma=cfg["g_sigma_mhz"] * MHZ,
        g_min=cfg["g_min_mhz"] * MHZ,
        g_max=cfg["g_max_mhz"] * MHZ,
        n_nodes=cfg["n_nodes"],
    )


def run_averaged(cfg, out: Path, h: str) -> str:
    res = spectra.averaged_spectrum(cfg["geometry"], _detunings(cfg), _dist(cfg), **model_kwargs(cfg))
    write_csv(out / "averaged_spectrum.csv", _spectrum_columns(res), h, f"averaged spectrum {res.meta}")
    return f"geometry={res.meta} g_mean={cfg['g_mean_mhz']} MHz g_sigma={cfg['g_sigma_mhz']} MHz"


def run_legacy(cfg, out: Path, h: str) -> str:
    dets = _detunings(cfg)
    kw = model_kwargs(cfg)
    res = spectra.legacy_standing_wave_spectrum(
        dets, cfg["g_mhz"] * MHZ, kappa0=kw["kappa0"], kappa_ext=kw["kappa_ext"], gamma=kw["atom"].gamma
    )
    write_csv(out / "legacy_spectrum.csv", _spectrum_columns(res), h, "legacy standing-wave spectrum")
    t0 = res.transmission[int(np.argmin(np.abs(dets)))]
    return f"legacy T(0)={t0:.4f} (bounded by 0.25)"


def run_pulsed(cfg, out: Path, h: str) -> str:
    t_start = None if cfg["t_start_ns"] is None else cfg["t_start_ns"] * 1e-9
    res = spectra.pulsed_probe_spectrum(
        cfg["geometry"],
        _detunings(cfg),
        cfg["g_mhz"] * MHZ,
        t_len=cfg["window_ns"] * 1e-9,
        t_start=t_start,
        **model_kwargs(cfg),
    )
    write_csv(out / "pulsed_spectrum.csv", _spectrum_columns(res), h, f"pulsed spectrum {res.meta}")
    return f"geometry={res.meta} window={cfg['window_ns']} ns"


def _read_spectrum_csv(path: str) -> SpectrumResult:
    dets, trans = [], []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("detuning"):
            continue
        parts = line.split(",")
        dets.append(float(parts[0]) * MHZ)
        trans.append(float(parts[1]))
    return SpectrumResult(detunings=np.array(dets), transmission=np.array(trans), meta="data")


def run_fit(cfg, out: Path, h: str) -> str:
    dist = _dist(cfg)
    kw = model_kwargs(cfg)
    if cfg["data_path"]:
        data = _read_spectrum_csv(cfg["data_path"])
    else:
        # synthetic round-trip dataset at the configured distribution
        clean = spectra.averaged_spectrum(cfg["geometry"], _detunings(cfg), dist, **kw)
        rng = np.random.default_rng(cfg["seed"])
        noisy = clean.transmission + cfg["noise_level"] * rng.standard_normal(len(clean.transmission))
        data = SpectrumResult(detunings=clean.detunings, transmission=noisy, meta="synthetic")
    fit = spectra.fit_spectrum(data, cfg["geometry"], dist, **kw)
    model = spectra.averaged_spectrum(
        cfg["geometry"],
        data.detunings,
        GDistribution(fit.g_mean_fit, fit.g_sigma_fit, dist.g_min, dist.g_max, dist.n_nodes),
        **kw,
    )
    write_csv(
        out / "fit_spectrum.csv",
        _spectrum_columns(data, {"model_transmission": model.transmission}),
        h,
        "fit data and model",
    )
    write_json(
        out / "fit_result.json",
        {
            "g_mean_fit_MHz": fit.g_mean_fit / MHZ,
            "g_sigma_fit_MHz": fit.g_sigma_fit / MHZ,
            "residual_norm": fit.residual_norm,
            "covariance_MHz2": (fit.covariance / MHZ**2).tolist(),
            "data_source": cfg["data_path"] or "synthetic",
        },
        h,
    )
    return f"g_mean={fit.g_mean_fit / MHZ:.2f} MHz g_sigma={fit.g_sigma_fit / MHZ:.2f} MHz residual={fit.residual_norm:.3g}"


def run_transit(cfg, out: Path, h: str) -> str:
    tcfg = transit.TriggerConfig(
        dt1=cfg["dt1_us"] * 1e-6,
        eta1=cfg["eta1"],
        dt2=cfg["dt2_us"] * 1e-6,
        eta2=cfg["eta2"],
        detector_efficiency=cfg["detector_efficiency"],
        probe_flux=cfg["flux_photons_per_s"],
        spectroscopy_gap=cfg["spectroscopy_gap_us"] * 1e-6,
    )
    g_peak = cfg["g_peak_mhz"] * MHZ
    t_of_g = transit.transmission_interpolator(g_peak, **model_kwargs(cfg))
    records = []
    for k in range(cfg["n_transits"]):
        outcome = transit.simulate_transit(
            g_peak,
            tcfg,
            rng_seed=cfg["seed"] + k,
            sigma_t=cfg["sigma_t_us"] * 1e-6,
            duration=cfg["transit_duration_us"] * 1e-6,
            dt=cfg["transit_dt_ns"] * 1e-9,
            t_of_g=t_of_g,
            residual_transmission=cfg["residual_transmission"],
        )
        records.append(
            {
                "seed": cfg["seed"] + k,
                "triggered": outcome.triggered,
                "trigger_time_us": None if not outcome.triggered else outcome.trigger_time * 1e6,
                "survived": outcome.survived,
                "n_photons": len(outcome.photon_record),
            }
        )
    (out / "transits.jsonl").write_text(
        "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
    )
    n_trig = sum(r["triggered"] for r in records)
    n_surv = sum(r["survived"] for r in records)
    write_csv(
        out / "transit_summary.csv",
        {
            "n_transits": np.array([cfg["n_transits"]]),
            "n_triggered": np.array([n_trig]),
            "n_survived": np.array([n_surv]),
            "detector_efficiency": np.array([cfg["detector_efficiency"]]),
        },
        h,
        "transit ensemble summary",
    )
    return f"triggered {n_trig}/{cfg['n_transits']}, survived {n_surv}"


_RUNNERS = {
    "fields": run_fields,
    "spectrum": run_spectrum,
    "averaged": run_averaged,
    "fit": run_fit,
    "legacy": run_legacy,
    "pulsed": run_pulsed,
    "transit": run_transit,
}


def export_tables(out: Path):
    """Reference tables for documentation and test fixtures."""
    table = atom.transition_table()
    lines = ["m_g,m_e,q,amplitude,strength"]
    for m_g, m_e, q, amp in table.entries:
        lines.append(f"{m_g},{m_e},{q},{_fmt(amp)},{_fmt(amp * amp)}")
    (out / "transitions.csv").write_text("\n".join(lines) + "\n")

    lines = ["manifold,F,gF"]
    lines.append(f"ground,{atom.F_GROUND},{_fmt(atom.GF_GROUND)}")
    lines.append(f"excited,{atom.F_EXCITED},{_fmt(atom.GF_EXCITED)}")
    (out / "lande.csv").write_text("\n".join(lines) + "\n")

    lines = ["mode,overlap_sigma_plus,overlap_sigma_minus,overlap_pi"]
    for label, pol in (
        ("TM+", fields.tm_mode("+")),
        ("TM-", fields.tm_mode("-")),
        ("TE", fields.te_mode("+")),
    ):
        vec = fields.mode_amplitude_vector(pol)
        o = [fields.circular_overlap(vec, q) for q in (1, -1, 0)]
        lines.append(f"{label},{_fmt(o[0])},{_fmt(o[1])},{_fmt(o[2])}")
    (out / "overlaps.csv").write_text("\n".join(lines) + "\n")


def defaults_listing() -> str:
    return json.dumps(DEFAULTS, indent=2, sort_keys=True)


def _resolve_out_dir(cfg_out: str, cli_out: str | None) -> Path:
    out = cli_out or os.environ.get(ENV_OUT_DIR) or cfg_out
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wgmcqed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out-dir", default=None)
    sub.add_parser("print-defaults", help="list all config defaults")
    p_exp = sub.add_parser("export-tables", help="write reference tables as CSV")
    p_exp.add_argument("--out-dir", default=None)
    args = parser.parse_args(argv)

    if args.command == "print-defaults":
        print(defaults_listing())
        return 0
    if args.command == "export-tables":
        out = _resolve_out_dir(DEFAULTS["out_dir"], args.out_dir)
        export_tables(out)
        print(f"tables written to {out}")
        return 0

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _resolve_out_dir(cfg["out_dir"], args.out_dir)
    try:
        summary = _RUNNERS[cfg["scenario"]](cfg, out, config_hash(cfg))
    except (SolverError, FitError) as exc:
        print(f"solver error in scenario {cfg['scenario']}: {exc}", file=sys.stderr)
        return 3
    print(f"{cfg['scenario']}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
