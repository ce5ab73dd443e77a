"""CSV and manifest writers.

CSV conventions: comma separated, ``\\n`` line endings, floats written with 17
significant digits (``format(x, '.17g')``), independent of locale.

Schemas:

* trajectory: ``t_ns,step,fidelity,obs,s_vn,s_renyi2``
* spectrum: ``quasienergy,unwound_energy,s_vn_over_page,scar_overlap``
  (energies as f/2pi in MHz)
* noise summary: ``r,state,n_samples,fidelity_mean,fidelity_std,obs_mean,obs_std,s_ratio_mean,s_ratio_std``
* noise samples: ``r,sample,seed,state,fidelity,obs,s_ratio``
* scan: ``T_ns,steps,state,obs``
* coefficients: ``variant,site_class,name,eq6_value_MHz,table1_value_MHz,rel_dev,verdict``
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .cr_engine import ReportRow
from .experiments import QUANTITIES, STATES, EnsembleResult, ScanResult, SpectrumScatter
from .floquet import Trajectory
from .spin_ops import to_mhz

TRAJECTORY_HEADER = ["t_ns", "step", "fidelity", "obs", "s_vn", "s_renyi2"]
SPECTRUM_HEADER = ["quasienergy", "unwound_energy", "s_vn_over_page", "scar_overlap"]
NOISE_SUMMARY_HEADER = [
    "r", "state", "n_samples",
    "fidelity_mean", "fidelity_std", "obs_mean", "obs_std", "s_ratio_mean", "s_ratio_std",
]
NOISE_SAMPLES_HEADER = ["r", "sample", "seed", "state", "fidelity", "obs", "s_ratio"]
SCAN_HEADER = ["T_ns", "steps", "state", "obs"]
COEFF_HEADER = ["variant", "site_class", "name", "eq6_value_MHz", "table1_value_MHz", "rel_dev", "verdict"]


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_trajectory(path: Path, traj: Trajectory) -> Path:
    obs = traj.obs.get("obs", np.full(len(traj.step), np.nan))
    rows = zip(traj.t_ns, traj.step, traj.fidelity, obs, traj.s_vn, traj.s_renyi2)
    return write_csv(path, TRAJECTORY_HEADER, rows)


def write_spectrum(path: Path, spec: SpectrumScatter) -> Path:
    rows = zip(
        to_mhz(spec.quasienergy), to_mhz(spec.unwound_energy), spec.s_vn_over_page, spec.scar_overlap
    )
    return write_csv(path, SPECTRUM_HEADER, rows)


def write_noise(summary_path: Path, samples_path: Path, res: EnsembleResult) -> tuple[Path, Path]:
    mean, std = res.mean, res.std
    summary = []
    for ri, r in enumerate(res.r_values):
        for si, state in enumerate(STATES):
            row: list[Any] = [r, state, res.sample_counts[ri]]
            for qi in range(len(QUANTITIES)):
                row += [mean[ri, qi, si], std[ri, qi, si]]
            summary.append(row)
    write_csv(summary_path, NOISE_SUMMARY_HEADER, summary)

    def sample_rows():
        for ri, r in enumerate(res.r_values):
            for k, seed in enumerate(res.seeds[ri]):
                for si, state in enumerate(STATES):
                    yield [r, k, seed, state, *res.samples[ri][k, :, si]]

    write_csv(samples_path, NOISE_SAMPLES_HEADER, sample_rows())
    return summary_path, samples_path


def write_scan(path: Path, scar: ScanResult, deformed: ScanResult) -> Path:
    rows = []
    for res in (scar, deformed):
        rows += [[T, n, res.state, v] for T, n, v in zip(res.T_grid, res.steps, res.obs)]
    return write_csv(path, SCAN_HEADER, rows)


def write_coefficients(path: Path, rows: Sequence[ReportRow]) -> Path:
    return write_csv(
        path,
        COEFF_HEADER,
        ([r.variant, r.site_class, r.name, r.eq6_value_MHz, r.table1_value_MHz, r.rel_dev, r.verdict] for r in rows),
    )


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(
    path: Path,
    command: str,
    config: dict[str, Any],
    outputs: Sequence[Path],
    extra: dict[str, Any] | None = None,
) -> Path:
    """JSON manifest sufficient to regenerate every listed output."""
    path = Path(path)
    manifest = {
        "command": command,
        "code_version": __version__,
        "numpy_version": np.__version__,
        "python": platform.python_version(),
        "config": config,
        "coefficient_source": config.get("coefficient_source"),
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path: Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
