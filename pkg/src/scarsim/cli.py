"""Command line entry point.

Exit codes: 0 success, 1 validation failure (bad configuration, failed
verification, replay mismatch), 2 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import checks, cr_engine, experiments, serialize
from .config import ConfigError, RunConfig, config_from_dict, parse_config
from .experiments import default_scan_grid
from .spin_ops import to_mhz
from .svgplot import Figure

log = logging.getLogger("scarsim")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2
DEVIATION_NOTE = (
    "noise ensembles propagate the exact Trotter sequence with perturbed coefficients by default; "
    "noise.propagator=effective_order1_dense uses the first-order effective Hamiltonian (L <= 10)"
)


# ---------------------------------------------------------------------------
# experiment runners (shared by the subcommands and by replay)
# ---------------------------------------------------------------------------


def run_coeffs(cfg: RunConfig, out: Path) -> tuple[list[Path], dict[str, Any]]:
    rows = cr_engine.coefficient_report(cfg.device_params())
    print(cr_engine.format_report(rows))
    return [serialize.write_coefficients(out / "coefficients.csv", rows)], {}


def run_spectrum(cfg: RunConfig, out: Path) -> tuple[list[Path], dict[str, Any]]:
    spec = experiments.run_spectrum(
        cfg.variant, cfg.L, cfg.T_ns, cfg.device_params(), cfg.coefficient_source
    )
    k = spec.scar_index
    print(
        f"{cfg.variant} L={cfg.L} T={cfg.T_ns} ns: scar-candidate overlap {spec.scar_candidate_overlap:.6f}, "
        f"S/S_Page {spec.scar_candidate_ratio:.4f}, median S/S_Page {spec.median_ratio:.4f}, "
        f"unwound energy {to_mhz(spec.unwound_energy[k]):.6g} MHz"
    )
    # alternate energy unit: divide the MHz columns by the mean |c_zx|
    params = cfg.device_params()
    czx = [abs(cr_engine.block_coeffs(cfg.variant, i, params, cfg.coefficient_source).c_zx) for i in (1, 2, 3)]
    extra = {"energy_unit": "MHz (f/2pi)", "czx_scale_MHz": to_mhz(float(np.mean(czx))), "scar_index": k}
    return [serialize.write_spectrum(out / "spectrum.csv", spec)], extra


def run_quench(cfg: RunConfig, out: Path) -> tuple[list[Path], dict[str, Any]]:
    res = experiments.run_quench(
        cfg.variant, cfg.L, cfg.T_ns, cfg.n_steps, cfg.cadence, cfg.device_params(), cfg.coefficient_source
    )
    paths = [
        serialize.write_trajectory(out / "quench_scar.csv", res.scar),
        serialize.write_trajectory(out / "quench_deformed.csv", res.deformed),
    ]
    extra: dict[str, Any] = {"observable": res.observable, "page_entropy": res.page}
    if cfg.shots > 0:
        rng = np.random.default_rng(cfg.master_seed)
        op = experiments.observable(res.observable, cfg.L)
        extra["shot_estimates_final"] = {
            name: experiments.shot_noise_estimate(getattr(res, name).final, op, cfg.shots, rng)
            for name in ("scar", "deformed")
        }
    for name in ("scar", "deformed"):
        tr = getattr(res, name)
        print(
            f"{name:>8}: fidelity {tr.fidelity[-1]:.4f}  obs {tr.obs['obs'][-1]:+.4f}  "
            f"S/S_Page {tr.s_vn[-1] / res.page:.4f}  (t = {tr.step[-1]} T)"
        )
    return paths, extra


def run_noise(cfg: RunConfig, out: Path) -> tuple[list[Path], dict[str, Any]]:
    res = experiments.run_noise_ensemble(
        cfg.variant,
        cfg.L,
        cfg.T_ns,
        cfg.noise.r_list,
        cfg.noise.samples,
        cfg.noise.t_meas_steps,
        cfg.noise.propagator,
        cfg.master_seed,
        cfg.device_params(),
        cfg.coefficient_source,
        cfg.threads,
    )
    paths = list(serialize.write_noise(out / "noise_summary.csv", out / "noise_samples.csv", res))
    for ri, r in enumerate(res.r_values):
        m, s = res.mean[ri], res.std[ri]
        print(
            f"r={r:<5} n={res.sample_counts[ri]:<4} scar S/S_Page {m[2, 0]:.3f}+-{s[2, 0]:.3f}  "
            f"deformed {m[2, 1]:.3f}+-{s[2, 1]:.3f}  obs std scar {s[1, 0]:.4f} deformed {s[1, 1]:.4f}"
        )
    extra = {
        "seeds": {str(r): sd for r, sd in zip(res.r_values, res.seeds)},
        "measure_steps": res.measure_steps,
        "trajectories": int(sum(res.sample_counts)),
        "deviation": DEVIATION_NOTE,
    }
    return paths, extra


def run_scan(cfg: RunConfig, out: Path) -> tuple[list[Path], dict[str, Any]]:
    grid = default_scan_grid(cfg.scan.T_min_ns, cfg.scan.T_max_ns, cfg.scan.points)
    scar, deformed = experiments.run_trotter_scan(
        cfg.variant, cfg.L, cfg.scan.t_total_ns, grid, cfg.device_params(), cfg.coefficient_source
    )
    for T, a, b in zip(grid, scar.obs, deformed.obs):
        print(f"T = {T:9.3f} ns  scar {a:+.4f}  deformed {b:+.4f}")
    return [serialize.write_scan(out / "trotter_scan.csv", scar, deformed)], {}


RUNNERS = {
    "coeffs": run_coeffs,
    "spectrum": run_spectrum,
    "quench": run_quench,
    "noise": run_noise,
    "trotter-scan": run_scan,
}


def execute(command: str, cfg: RunConfig, out: Path | None = None) -> Path:
    out = Path(out or cfg.resolved_output_dir())
    out.mkdir(parents=True, exist_ok=True)
    paths, extra = RUNNERS[command](cfg, out)
    return serialize.write_manifest(out / f"manifest_{command}.json", command, cfg.to_dict(), paths, extra)


def replay(manifest_path: Path, out: Path | None = None) -> tuple[bool, dict[str, tuple[str, str]]]:
    """Re-run the experiment described by a manifest and compare output hashes."""
    manifest = serialize.load_manifest(manifest_path)
    cfg = config_from_dict(manifest["config"])
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(out or tmp)
        new = serialize.load_manifest(execute(manifest["command"], cfg, target))
    diffs = {
        name: (digest, new["outputs"].get(name, ""))
        for name, digest in manifest["outputs"].items()
        if new["outputs"].get(name) != digest
    }
    return not diffs, diffs


# ---------------------------------------------------------------------------
# plotting
# ---------------------------------------------------------------------------


NOT_PLOTTED = (serialize.COEFF_HEADER, serialize.NOISE_SAMPLES_HEADER)


def plot_csv(path: Path, out_dir: Path | None = None) -> Path | None:
    """Render one CSV output as SVG; returns None for tabular-only schemas."""
    header, rows = serialize.read_csv(path)
    if header in NOT_PLOTTED:
        return None
    data = {h: [r[i] for r in rows] for i, h in enumerate(header)}
    target = (out_dir or path.parent) / (path.stem + ".svg")

    def col(name, mask=None):
        vals = data[name] if mask is None else [v for v, m in zip(data[name], mask) if m]
        return np.array([float(v) if v != "" else np.nan for v in vals])

    if header == serialize.SPECTRUM_HEADER:
        fig = Figure("Floquet modes", "unwound energy [MHz]", "S_vN / S_Page")
        fig.scatter(col("unwound_energy"), col("s_vn_over_page"), "modes")
        k = int(np.argmax(col("scar_overlap")))
        fig.scatter([col("unwound_energy")[k]], [col("s_vn_over_page")[k]], "scar candidate", "#d62728")
    elif header == serialize.TRAJECTORY_HEADER:
        steps = col("step")
        fig = Figure(path.stem, "t / T", "value")
        fig.line(steps, col("fidelity"), "fidelity")
        fig.line(steps, col("obs"), "observable")
        fig.line(steps, col("s_vn"), "S_vN")
    elif header == serialize.NOISE_SUMMARY_HEADER:
        fig = Figure("noise ensemble", "r", "ensemble mean +- std")
        for state in ("scar", "deformed"):
            m = [s == state for s in data["state"]]
            fig.errorbar(col("r", m), col("s_ratio_mean", m), col("s_ratio_std", m), f"S/S_Page {state}")
            fig.errorbar(col("r", m), col("obs_mean", m), col("obs_std", m), f"obs {state}")
    elif header == serialize.SCAN_HEADER:
        fig = Figure("Trotter-step scan", "T [ns]", "observable", logx=True)
        for state in ("scar", "deformed"):
            m = [s == state for s in data["state"]]
            fig.line(col("T_ns", m), col("obs", m), state)
    else:
        raise ConfigError(f"{path}: unrecognized CSV header {header}")
    return fig.save(target)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML/JSON configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (dotted for sections), repeatable")
    common.add_argument("--threads", type=int, help="worker processes for ensembles")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--coeff-source", choices=("table", "eq6"), help="coupling source for dynamics")
    common.add_argument("--variant", help="x-polarized | cluster")
    common.add_argument("-o", "--output-dir", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="scarsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coeffs", parents=[common], help="compare perturbative couplings with the reference table")
    p = sub.add_parser("verify", parents=[common], help="run annihilation and numerical oracle checks")
    p.add_argument("--k", type=lambda v: [float(x) for x in v.split(",")], metavar="K1,K2,...",
                   help="per-site parent-Hamiltonian weights (chain length = number of values)")
    p.add_argument("--random-k", type=int, default=10, metavar="N",
                   help="seeded random weight draws for the parent-Hamiltonian check (default 10)")
    sub.add_parser("spectrum", parents=[common], help="Floquet spectrum scatter")
    sub.add_parser("quench", parents=[common], help="scar vs deformed scar time evolution")
    sub.add_parser("noise", parents=[common], help="controlled-noise ensembles")
    sub.add_parser("trotter-scan", parents=[common], help="observable vs Trotter period")
    p = sub.add_parser("plot", parents=[common], help="render CSV outputs as SVG")
    p.add_argument("csv", nargs="+", type=Path)
    p = sub.add_parser("replay", parents=[common], help="regenerate outputs from a manifest and compare")
    p.add_argument("manifest", type=Path)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.overrides)
    for flag, key in (("threads", "threads"), ("seed", "master_seed"), ("coeff_source", "coefficient_source"),
                      ("variant", "variant"), ("output_dir", "output_dir")):
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{key}={value}")
    return parse_config(args.config, overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            out = Path(args.output_dir) if args.output_dir else None
            for path in args.csv:
                svg = plot_csv(path, out)
                print(svg if svg else f"{path}: tabular output, not plotted")
            return EXIT_OK
        if args.command == "replay":
            ok, diffs = replay(args.manifest, Path(args.output_dir) if args.output_dir else None)
            for name, (old, new) in diffs.items():
                print(f"MISMATCH {name}: {old[:12]} != {new[:12]}")
            print("replay identical" if ok else "replay differs")
            return EXIT_OK if ok else EXIT_VALIDATION
        cfg = _resolve_config(args)
        if args.command == "verify":
            results = checks.run_all(args.k, args.random_k, cfg.master_seed)
            for c in results:
                print(c.line())
            return EXIT_OK if all(c.passed for c in results) else EXIT_VALIDATION
        manifest = execute(args.command, cfg)
        print(f"manifest: {manifest}")
        return EXIT_OK
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
