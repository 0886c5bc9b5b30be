"""CSV / JSON interchange in the formats the pipelines emit.

All numeric CSV output uses 17 significant digits so every float round-trips
exactly.  PSD exports use the linear-frequency convention: the stored column
is S(f) = 2 pi S(omega) at f = omega / 2 pi, and imports invert the same map.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .noise_spec import CoherenceTrace

_FMT = "%.17g"


def _fmt(x) -> str:
    return _FMT % float(x)


# ---------------------------------------------------------------------------
# Barcode and eigensystem
# ---------------------------------------------------------------------------

def write_barcode_csv(path, lines) -> None:
    rows = ["frequency_hz,weight"]
    rows += [f"{_fmt(ln.frequency)},{_fmt(ln.weight)}" for ln in lines]
    Path(path).write_text("\n".join(rows) + "\n")


def read_barcode_csv(path) -> tuple[np.ndarray, np.ndarray]:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return raw[:, 0], raw[:, 1]


def write_eigensystem_json(path, eigensystem) -> None:
    states = eigensystem.states
    payload = {
        "energies_hz": [float(e) for e in eigensystem.energies],
        "states": [[[float(z.real), float(z.imag)] for z in states[:, i]]
                   for i in range(states.shape[1])],
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def read_eigensystem_json(path) -> tuple[np.ndarray, np.ndarray]:
    payload = json.loads(Path(path).read_text())
    energies = np.array(payload["energies_hz"])
    cols = [np.array([complex(re, im) for re, im in col])
            for col in payload["states"]]
    return energies, np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# Angle sweep matrix
# ---------------------------------------------------------------------------

def write_sweep_csv(path, thetas_deg, times, matrix) -> None:
    """Matrix CSV: first row holds times (s), first column theta (deg)."""
    rows = ["," + ",".join(_fmt(t) for t in times)]
    for th, row in zip(thetas_deg, np.asarray(matrix)):
        rows.append(_fmt(th) + "," + ",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(rows) + "\n")


def read_sweep_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    text = Path(path).read_text().strip().splitlines()
    times = np.array([float(v) for v in text[0].split(",")[1:]])
    thetas, rows = [], []
    for line in text[1:]:
        cells = line.split(",")
        thetas.append(float(cells[0]))
        rows.append([float(v) for v in cells[1:]])
    return np.array(thetas), times, np.array(rows)


# ---------------------------------------------------------------------------
# Coherence traces
# ---------------------------------------------------------------------------

def write_trace_csv(path, trace: CoherenceTrace, comments: dict | None = None) -> None:
    rows = [f"# {k} = {v}" for k, v in (comments or {}).items()]
    rows.append("time_s,coherence,sigma")
    for t, v, s in zip(trace.times, trace.values, trace.sigma):
        rows.append(f"{_fmt(t)},{_fmt(v)},{_fmt(s)}")
    Path(path).write_text("\n".join(rows) + "\n")


def read_trace_csv(path) -> CoherenceTrace:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, comments="#", ndmin=2)
    if raw.shape[1] < 2:
        raise ValueError(f"{path}: expected columns time_s,coherence[,sigma]")
    sigma = raw[:, 2] if raw.shape[1] > 2 else None
    return CoherenceTrace(raw[:, 0], raw[:, 1], sigma)


# ---------------------------------------------------------------------------
# PSD export (linear-frequency units)
# ---------------------------------------------------------------------------

def write_psd_csv(path, psd, freqs_hz) -> None:
    """Sampled export of S(f) = 2 pi S(omega) on the given linear-frequency grid."""
    freqs_hz = np.asarray(freqs_hz, dtype=float)
    values = 2 * np.pi * np.asarray(psd(2 * np.pi * freqs_hz), dtype=float)
    rows = ["frequency_hz,psd_rad2_per_s2_per_hz"]
    rows += [f"{_fmt(f)},{_fmt(v)}" for f, v in zip(freqs_hz, values)]
    Path(path).write_text("\n".join(rows) + "\n")


def read_psd_csv(path):
    """Inverse of write_psd_csv; returns a TabulatedPsd in angular units."""
    from .noise_spec import TabulatedPsd
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return TabulatedPsd(2 * np.pi * raw[:, 0], raw[:, 1] / (2 * np.pi))


# ---------------------------------------------------------------------------
# Fit reports and manifests
# ---------------------------------------------------------------------------

def fit_report_dict(result) -> dict:
    return {
        "params": {k: float(v) for k, v in result.params.items()},
        "uncertainty": {k: float(v) for k, v in result.uncertainty.items()},
        "mse": float(result.mse),
        "seed": result.seed,
        "n_evals": int(result.n_evals),
        "per_dataset_locals": {str(k): {kk: float(vv) for kk, vv in d.items()}
                               for k, d in result.per_dataset_locals.items()},
    }


def write_fit_report(path, result) -> None:
    Path(path).write_text(json.dumps(fit_report_dict(result), indent=1))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path, config: dict, seed, version: str,
                   extra: dict | None = None) -> None:
    payload = {"config_sha256": config_hash(config), "seed": seed,
               "version": version, "config": config}
    payload.update(extra or {})
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True,
                                     default=str))
