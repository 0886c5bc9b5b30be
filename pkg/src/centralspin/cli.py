"""Batch command-line front end: odmr, eseem, psd, dd, robust, sense.

Each command reads a TOML config (sections [sensor], [field], [hyperfine],
[sequence], [psd], [fit], [mc]; physical keys carry explicit unit suffixes),
writes plot-ready CSV/JSON into --out, and records a manifest with the config
hash, seed and package version.  Any config key can be overridden with an
environment variable CENTRALSPIN_<SECTION>__<KEY>.

Exit codes: 0 success, 2 config/data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tomllib
from pathlib import Path

import numpy as np

from . import __version__, constants
from .eseem import EchoEnvelopeParams, echo_coherence
from .fit_engine import (DEConfig, HyperfineFitFixed, fit_hyperfine,
                         pooled_mse_fixed_hyperfine)
from .io_utils import (read_trace_csv, write_barcode_csv, write_fit_report,
                       write_manifest, write_psd_csv, write_sweep_csv,
                       write_trace_csv)
from .noise_spec import (CoherenceTrace, CompositePsd, PowerLawPsd,
                         PulseSequence, coherence_from_psd, fit_composite_psd,
                         fit_piecewise_psd, reliable_window)
from .pulse_sim import (GaussianDisorder, ac_sensing_scan,
                        control_error_fidelity, disorder_averaged_fidelity,
                        monte_carlo_decoherence)
from .sensitivity import detection_threshold, sensitivity_report
from .spin_core import (Branch, FieldConfig, SensorParams,
                        hyperfine_set_from_site1, odmr_spectrum)

ENV_PREFIX = "CENTRALSPIN_"

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


class NumericalError(Exception):
    pass


# ---------------------------------------------------------------------------
# Config schema and loading
# ---------------------------------------------------------------------------

SCHEMA: dict[str, dict[str, type]] = {
    "sensor": {
        "d_ghz": float, "gamma_z_ghz_per_t": float, "gamma_perp_ghz_per_t": float,
        "strain1_mhz": float, "strain2_mhz": float,
    },
    "field": {
        "magnitude_mt": float, "theta_deg": float, "phi_deg": float,
        "theta_start_deg": float, "theta_stop_deg": float, "theta_points": int,
        "bz_start_mt": float, "bz_stop_mt": float, "bz_points": int,
    },
    "hyperfine": {
        "axx_mhz": float, "ayy_mhz": float, "axy_mhz": float, "azz_mhz": float,
        "gamma_n_mhz_per_t": float, "enabled": bool,
    },
    "sequence": {
        "kind": str, "n_pulses": int, "t_pi_ns": float, "tau_ns": float,
        "n_list": list,
    },
    "psd": {
        "model": str, "s0": float, "alpha": float, "beta": float,
        "crossover_mhz": float,
    },
    "fit": {
        "seed": int, "pop": int, "generations": int, "azz_mhz": float,
        "eps_total_mhz": float, "b_mag_mt": float, "phi_init_deg": float,
        "rank_benchmarks": bool,
        "contrast": float, "t_1e_us": float, "stretch_beta": float,
    },
    "mc": {
        "trials": int, "dt_ns": float, "t_max_us": float, "n_times": int,
        "w_over_rabi": list, "epsilon_over_pi": list, "ac_amp_max_khz": float,
        "ac_points": int,
    },
}

DEFAULT_CONFIG = {
    "sensor": {
        "d_ghz": constants.ZERO_FIELD_SPLITTING / 1e9,
        "gamma_z_ghz_per_t": constants.GAMMA_Z / 1e9,
        "gamma_perp_ghz_per_t": constants.GAMMA_PERP / 1e9,
        "strain1_mhz": constants.STRAIN_TOTAL / 1e6,
        "strain2_mhz": 0.0,
    },
    "field": {"magnitude_mt": 0.0, "theta_deg": 0.0, "phi_deg": 0.0},
    "hyperfine": {
        "axx_mhz": constants.HYPERFINE_BENCHMARKS["echo"][0] / 1e6,
        "ayy_mhz": constants.HYPERFINE_BENCHMARKS["echo"][1] / 1e6,
        "axy_mhz": 0.0,
        "azz_mhz": constants.AZZ_N15 / 1e6,
        "gamma_n_mhz_per_t": constants.GAMMA_N15 / 1e6,
        "enabled": True,
    },
    "sequence": {"kind": "xy8", "n_pulses": 8,
                 "t_pi_ns": constants.T_PI_DEFAULT * 1e9, "tau_ns": 476.0,
                 "n_list": [8, 128, 512]},
    "psd": {"model": "composite",
            "s0": constants.PSD_COMPOSITE_S0 * constants.PSD_S0_UNIT_SCALE,
            "alpha": constants.PSD_COMPOSITE_ALPHA,
            "beta": constants.PSD_COMPOSITE_BETA,
            "crossover_mhz": constants.PSD_COMPOSITE_FC / 1e6},
    "fit": {"seed": 1, "pop": 60, "generations": 120,
            "azz_mhz": constants.AZZ_N15 / 1e6,
            "eps_total_mhz": constants.STRAIN_TOTAL / 1e6,
            "b_mag_mt": 20.0, "phi_init_deg": constants.FIELD_AZIMUTH_DEG,
            "rank_benchmarks": False,
            "contrast": 0.5, "t_1e_us": 3.0, "stretch_beta": 1.2},
    "mc": {"trials": 100, "dt_ns": 1.0, "t_max_us": 50.0, "n_times": 16,
           "w_over_rabi": [0.1, 0.3, 0.5], "epsilon_over_pi": [0.0, 0.05, 0.1],
           "ac_amp_max_khz": 30.0, "ac_points": 21},
}


def _key_location(text: str, section: str, key: str) -> str:
    in_section = False
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == f"[{section}]"
        elif in_section and stripped.split("=")[0].strip() == key:
            return f"line {ln}, column {line.index(key) + 1}"
    return "location unknown"


def load_config(path: str | None) -> dict:
    """Parse, validate against the schema, and apply env-var overrides."""
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))     # deep copy
    text = ""
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        text = p.read_text()
        try:
            user = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML parse error: {exc}") from exc
        for section, entries in user.items():
            if section not in SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            if not isinstance(entries, dict):
                raise ConfigError(f"{path}: section [{section}] must be a table")
            for key, value in entries.items():
                if key not in SCHEMA[section]:
                    raise ConfigError(
                        f"{path}: unknown key '{key}' in [{section}] "
                        f"({_key_location(text, section, key)})")
                want = SCHEMA[section][key]
                if want is float and isinstance(value, int):
                    value = float(value)
                if not isinstance(value, want):
                    raise ConfigError(
                        f"{path}: key '{section}.{key}' expects {want.__name__} "
                        f"({_key_location(text, section, key)})")
                cfg[section][key] = value
    for env, value in sorted(os.environ.items()):
        if not env.startswith(ENV_PREFIX):
            continue
        body = env[len(ENV_PREFIX):].lower()
        if "__" not in body:
            continue
        section, key = body.split("__", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"environment override {env} names no config key")
        want = SCHEMA[section][key]
        try:
            if want is bool:
                parsed = value.lower() in ("1", "true", "yes", "on")
            elif want is list:
                parsed = json.loads(value)
            else:
                parsed = want(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse override {env}={value!r}") from exc
        cfg[section][key] = parsed
    return cfg


def _sensor(cfg) -> SensorParams:
    s = cfg["sensor"]
    return SensorParams(s["d_ghz"] * 1e9, s["gamma_z_ghz_per_t"] * 1e9,
                        s["gamma_perp_ghz_per_t"] * 1e9,
                        s["strain1_mhz"] * 1e6, s["strain2_mhz"] * 1e6)


def _hyperfine(cfg):
    h = cfg["hyperfine"]
    return hyperfine_set_from_site1(h["axx_mhz"] * 1e6, h["ayy_mhz"] * 1e6,
                                    h["axy_mhz"] * 1e6, h["azz_mhz"] * 1e6,
                                    h["gamma_n_mhz_per_t"] * 1e6)


def _psd(cfg):
    p = cfg["psd"]
    if p["model"] == "powerlaw":
        return PowerLawPsd(p["s0"], p["alpha"])
    if p["model"] == "composite":
        return CompositePsd(p["s0"], p["alpha"], p["beta"],
                            2 * np.pi * p["crossover_mhz"] * 1e6)
    if p["model"] == "zero":
        return PowerLawPsd(0.0, 0.0)
    raise ConfigError(f"unknown psd model {p['model']!r}")


def _sequence(cfg, n=None) -> PulseSequence:
    s = cfg["sequence"]
    return PulseSequence(s["kind"], int(n if n is not None else s["n_pulses"]),
                         s["tau_ns"] * 1e-9, s["t_pi_ns"] * 1e-9)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_odmr(cfg, out: Path, seed: int) -> None:
    sensor = _sensor(cfg)
    hs = _hyperfine(cfg)
    f = cfg["field"]
    written = []
    if "theta_points" in f:
        thetas = np.linspace(f["theta_start_deg"], f["theta_stop_deg"],
                             f["theta_points"])
        for th in thetas:
            fld = FieldConfig(f["magnitude_mt"] * 1e-3, np.deg2rad(th),
                              np.deg2rad(f["phi_deg"]))
            lines = odmr_spectrum(sensor, fld, hs, Branch.BOTH)
            name = f"barcode_theta_{th:.3f}.csv"
            write_barcode_csv(out / name, lines)
            written.append(name)
    elif "bz_points" in f:
        for bz in np.linspace(f["bz_start_mt"], f["bz_stop_mt"], f["bz_points"]):
            fld = FieldConfig(abs(bz) * 1e-3, 0.0 if bz >= 0 else np.pi, 0.0)
            lines = odmr_spectrum(sensor, fld, hs, Branch.BOTH)
            name = f"barcode_bz_{bz:.3f}.csv"
            write_barcode_csv(out / name, lines)
            written.append(name)
    else:
        fld = FieldConfig(f["magnitude_mt"] * 1e-3, np.deg2rad(f["theta_deg"]),
                          np.deg2rad(f["phi_deg"]))
        lines = odmr_spectrum(sensor, fld, hs, Branch.BOTH)
        write_barcode_csv(out / "barcode.csv", lines)
        written.append("barcode.csv")
    write_manifest(out / "manifest.json", cfg, seed, __version__,
                   {"command": "odmr", "outputs": written})


def _load_eseem_datasets(data_dir: Path):
    datasets = []
    files = sorted(data_dir.glob("*.csv"))
    if not files:
        raise ConfigError(f"no trace CSVs found in {data_dir}")
    for fp in files:
        text = fp.read_text().strip()
        if not text:
            raise ConfigError(f"empty data file: {fp}")
        theta = None
        for line in text.splitlines():
            if line.startswith("#") and "theta_deg" in line:
                theta = float(line.split("=")[1])
        if theta is None:
            raise ConfigError(f"{fp}: missing '# theta_deg = ...' metadata")
        datasets.append((np.deg2rad(theta), read_trace_csv(fp)))
    return datasets


def cmd_eseem(cfg, out: Path, seed: int, data: str | None) -> None:
    sensor = _sensor(cfg)
    fit_cfg = cfg["fit"]
    fixed = HyperfineFitFixed(
        azz=fit_cfg["azz_mhz"] * 1e6, eps_total=fit_cfg["eps_total_mhz"] * 1e6,
        b_mag=fit_cfg["b_mag_mt"] * 1e-3,
        phi_init=np.deg2rad(fit_cfg["phi_init_deg"]),
        nuclear_gamma=cfg["hyperfine"]["gamma_n_mhz_per_t"] * 1e6)
    if data is None:
        # forward model: angle-resolved traces from the configured tensors
        f = cfg["field"]
        hs = _hyperfine(cfg)
        env = EchoEnvelopeParams(fit_cfg["contrast"], fit_cfg["t_1e_us"] * 1e-6,
                                 fit_cfg["stretch_beta"])
        times = np.linspace(1e-8, cfg["mc"]["t_max_us"] * 1e-6, 240)
        thetas = np.linspace(f.get("theta_start_deg", f["theta_deg"]),
                             f.get("theta_stop_deg", f["theta_deg"]),
                             f.get("theta_points", 1))
        rows = []
        for th in thetas:
            fld = FieldConfig(f["magnitude_mt"] * 1e-3, np.deg2rad(th),
                              np.deg2rad(f["phi_deg"]))
            rows.append(echo_coherence(sensor, fld, hs, env, times))
        write_sweep_csv(out / "eseem_model.csv", thetas, times, np.array(rows))
        write_manifest(out / "manifest.json", cfg, seed, __version__,
                       {"command": "eseem", "outputs": ["eseem_model.csv"]})
        return
    datasets = _load_eseem_datasets(Path(data))
    outputs = []
    if fit_cfg["rank_benchmarks"]:
        ranking = {}
        for name, (axx, ayy) in constants.HYPERFINE_BENCHMARKS.items():
            vec = np.array([axx, ayy, np.deg2rad(fit_cfg["phi_init_deg"]), 0.0])
            ranking[name] = pooled_mse_fixed_hyperfine(datasets, vec, fixed, sensor)
        (out / "mse_ranking.json").write_text(json.dumps(ranking, indent=1))
        outputs.append("mse_ranking.json")
    config = DEConfig(pop=fit_cfg["pop"], generations=fit_cfg["generations"],
                      seed=seed if seed is not None else fit_cfg["seed"])
    result = fit_hyperfine(datasets, fixed, sensor, config)
    write_fit_report(out / "hyperfine_fit.json", result)
    outputs.append("hyperfine_fit.json")
    write_manifest(out / "manifest.json", cfg, config.seed, __version__,
                   {"command": "eseem", "outputs": outputs})


def cmd_psd(cfg, out: Path, seed: int, traces_dir: str) -> None:
    tdir = Path(traces_dir)
    traces: dict[int, CoherenceTrace] = {}
    for fp in sorted(tdir.glob("*_N*.csv")):
        n = int(fp.stem.rsplit("_N", 1)[1])
        traces[n] = read_trace_csv(fp)
    if not traces:
        raise ConfigError(f"no '*_N<k>.csv' traces found in {traces_dir}")
    t_pi = cfg["sequence"]["t_pi_ns"] * 1e-9
    kind = cfg["sequence"]["kind"]
    piecewise = fit_piecewise_psd(traces, t_pi, kind=kind)
    report = {"piecewise": {
        str(n): {"s0": fit.psd.s0, "alpha": fit.psd.alpha, "mse": fit.mse,
                 "reliable_window_s": [float(fit.window_times[0]),
                                       float(fit.window_times[-1])]}
        for n, fit in piecewise.items()}}
    outputs = ["psd_fit.json"]
    if len(traces) >= 2:
        composite = fit_composite_psd(traces, t_pi, kind=kind)
        report["composite"] = {"s0": composite.s0, "alpha": composite.alpha,
                               "beta": composite.beta,
                               "crossover_hz": composite.omega_c / (2 * np.pi)}
        freqs = np.geomspace(1e3, 1e8, 400)
        write_psd_csv(out / "psd_composite.csv", composite, freqs)
        outputs.append("psd_composite.csv")
    else:
        print("warning: single N supplied; composite fit skipped", file=sys.stderr)
    (out / "psd_fit.json").write_text(json.dumps(report, indent=1))
    write_manifest(out / "manifest.json", cfg, seed, __version__,
                   {"command": "psd", "outputs": outputs})


def cmd_dd(cfg, out: Path, seed: int) -> None:
    psd = _psd(cfg)
    mc = cfg["mc"]
    t_pi = cfg["sequence"]["t_pi_ns"] * 1e-9
    rows = ["n_pulses,t2_s,beta"]
    for n in cfg["sequence"]["n_list"]:
        seq = PulseSequence(cfg["sequence"]["kind"], int(n), 1e-6, t_pi)
        t_lo = n * t_pi * 1.2 + 1e-7
        times = np.linspace(t_lo, mc["t_max_us"] * 1e-6, mc["n_times"])
        result = monte_carlo_decoherence(psd, seq, times, mc["trials"], seed,
                                         dt=mc["dt_ns"] * 1e-9)
        t2 = result.fit.t2
        beta = result.fit.beta
        rows.append(f"{n},{'inf' if math.isinf(t2) else repr(t2)},"
                    f"{'nan' if math.isnan(beta) else repr(beta)}")
        write_trace_csv(out / f"dd_trace_N{n}.csv", result.trace,
                        {"n_pulses": n, "seed": seed})
    (out / "t2_vs_n.csv").write_text("\n".join(rows) + "\n")
    write_manifest(out / "manifest.json", cfg, seed, __version__,
                   {"command": "dd", "outputs": ["t2_vs_n.csv"]})


def cmd_robust(cfg, out: Path, seed: int) -> None:
    mc = cfg["mc"]
    t_pi = cfg["sequence"]["t_pi_ns"] * 1e-9
    rabi = 1.0 / (2 * t_pi)
    n_pulses = int(cfg["sequence"]["n_pulses"])
    rows = ["epsilon_over_pi,f_cpmg,f_xy8"]
    for e in mc["epsilon_over_pi"]:
        f_c = control_error_fidelity("cpmg", e * np.pi, n_pulses, pulse_axis="y")
        f_x = control_error_fidelity("xy8", e * np.pi, n_pulses)
        rows.append(f"{repr(float(e))},{repr(f_c)},{repr(f_x)}")
    (out / "fidelity_vs_epsilon.csv").write_text("\n".join(rows) + "\n")

    rows = ["w_over_rabi,fbar_xy8"]
    for w in mc["w_over_rabi"]:
        fbar = disorder_averaged_fidelity("xy8", w * rabi, rabi, n_pulses)
        rows.append(f"{repr(float(w))},{repr(fbar)}")
    (out / "disorder_fidelity.csv").write_text("\n".join(rows) + "\n")

    tau = cfg["sequence"]["tau_ns"] * 1e-9
    amps = np.linspace(0.0, mc["ac_amp_max_khz"] * 1e3, mc["ac_points"])
    rows = ["amplitude_hz,xy8_w0,xy8_w,cpmg_w"]
    curves = []
    for kind, w in (("xy8", 0.0), ("xy8", 0.3), ("cpmg", 0.3)):
        seq = PulseSequence(kind, n_pulses, tau, t_pi)
        disorder = GaussianDisorder(w * rabi, 21) if w else 0.0
        curves.append(ac_sensing_scan(seq, amps, disorder).coherence)
    for k, amp in enumerate(amps):
        rows.append(",".join([repr(float(amp))] + [repr(float(c[k])) for c in curves]))
    (out / "ac_contrast.csv").write_text("\n".join(rows) + "\n")
    write_manifest(out / "manifest.json", cfg, seed, __version__,
                   {"command": "robust",
                    "outputs": ["fidelity_vs_epsilon.csv", "disorder_fidelity.csv",
                                "ac_contrast.csv"]})


def cmd_sense(cfg, out: Path, seed: int) -> None:
    report = sensitivity_report(
        t2=constants.T2_XY8_512, beta=constants.STRETCH_BETA,
        efficiency_current=constants.ENSEMBLE_EFFICIENCY_SPCM,
        efficiency_projected=constants.ENSEMBLE_EFFICIENCY_APD,
        gamma=_sensor(cfg).gamma_z,
        t_init=constants.READOUT_T_INIT, t_read=constants.READOUT_T_READ)
    payload = report.to_dict()
    payload["threshold_table"] = {
        f"{d}nm": {"electron": detection_threshold(d, "electron"),
                   "proton": detection_threshold(d, "proton")}
        for d in (5.0, 10.0, 20.0)}
    (out / "sensitivity.json").write_text(json.dumps(payload, indent=1))
    write_manifest(out / "manifest.json", cfg, seed, __version__,
                   {"command": "sense", "outputs": ["sensitivity.json"]})


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="centralspin",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("odmr", "barcode spectra over field sweeps"),
                            ("eseem", "echo-modulation model traces or fits"),
                            ("psd", "noise PSD reconstruction from traces"),
                            ("dd", "Monte Carlo T2 versus pulse number"),
                            ("robust", "pulse-error and disorder robustness"),
                            ("sense", "AC sensitivity report")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="TOML config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; computations are vectorized")
        if name == "eseem":
            p.add_argument("--data", default=None,
                           help="directory of measured trace CSVs")
        if name == "psd":
            p.add_argument("--traces", required=True,
                           help="directory of '*_N<k>.csv' coherence traces")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "odmr":
            cmd_odmr(cfg, out, args.seed)
        elif args.command == "eseem":
            cmd_eseem(cfg, out, args.seed, args.data)
        elif args.command == "psd":
            cmd_psd(cfg, out, args.seed, args.traces)
        elif args.command == "dd":
            cmd_dd(cfg, out, args.seed)
        elif args.command == "robust":
            cmd_robust(cfg, out, args.seed)
        elif args.command == "sense":
            cmd_sense(cfg, out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
