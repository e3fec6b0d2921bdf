"""CSV and manifest writers.

Floats are written with ``repr`` so identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from config import MANIFEST_NAME
from rcp.entities import PacketTrace, RunManifest, Spectrum, Trajectory

TRAJECTORY_HEADER = ("t", "R", "q")
PHASE_HEADER = ("R", "R_delayed")
SPECTRUM_HEADER = ("re", "im", "residual")
CHART_HEADER = ("a", "beta_boundary")
ROC_HEADER = ("a", "beta", "sigma", "branch", "regime")
HOPF_SWEEP_HEADER = ("theta", "mu2", "beta2", "classification")
AMPLITUDE_HEADER = ("kappa", "offset", "predicted", "measured")
PACKET_HEADER = ("t", "queue", "rate", "utilization")


def _cell(value: object) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return str(value)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return path


def write_trajectory(path: Path, traj: Trajectory) -> Path:
    return write_rows(path, TRAJECTORY_HEADER, zip(traj.times, traj.R_values, traj.q_values))


def write_phase_portrait(path: Path, pairs: np.ndarray) -> Path:
    return write_rows(path, PHASE_HEADER, ((row[0], row[1]) for row in pairs))


def write_spectrum(path: Path, spectrum: Spectrum) -> Path:
    return write_rows(
        path,
        SPECTRUM_HEADER,
        ((lam.real, lam.imag, res) for lam, res in zip(spectrum.roots, spectrum.residuals)),
    )


def write_packet_trace(path: Path, trace: PacketTrace) -> Path:
    return write_rows(
        path,
        PACKET_HEADER,
        zip(trace.times, trace.queue_lengths, trace.fair_rates, trace.utilization),
    )


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


def read_rows(path: Path) -> List[List[str]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))
