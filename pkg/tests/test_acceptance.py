"""Acceptance criteria, one test and one PASS/FAIL line per criterion.

Lines are echoed in the terminal summary by ``conftest.py``. The L = 12
Floquet spectra are computed once per module and shared by criteria 3 and 4.
"""

import json
import os
import time

import numpy as np
import pytest

from scarsim import cli, cr_engine
from scarsim.cr_engine import DeviceParams
from scarsim.experiments import (
    default_scan_grid,
    run_noise_ensemble,
    run_quench,
    run_spectrum,
    run_trotter_scan,
)
from scarsim.floquet import dense_period_unitary, effective_hamiltonian, floquet_log, make_plan, step_array
from scarsim.checks import entropies_oracle
from scarsim.scar_models import Variant, annihilators, scar_state, verify_annihilation
from scarsim.spin_ops import entropies, random_state

pytestmark = pytest.mark.slow

VARIANTS = ("x-polarized", "cluster")
ACCEPTANCE_LINES: list[str] = []


def report(n, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def spectra12():
    out = {}
    for v in VARIANTS:
        t0 = time.perf_counter()
        spec = run_spectrum(v, 12, 16.0)
        out[v] = (spec, time.perf_counter() - t0)
    return out


def test_criterion_1_annihilation():
    t0 = time.perf_counter()
    worst = max(
        verify_annihilation(annihilators(v, L), scar_state(v, L)) for v in Variant for L in (3, 6, 9, 12)
    )
    dt = time.perf_counter() - t0
    report(1, worst < 1e-12 and dt < 10, f"max residual {worst:.2e} (< 1e-12) over 3 variants x L in 3..12, {dt:.2f} s")


def test_criterion_2_coefficients():
    t0 = time.perf_counter()
    rows = cr_engine.coefficient_report()
    checked = [r for r in rows if r.name != "c_zx"]
    ok = all(r.rel_dev <= cr_engine.REPORT_TOLERANCES[r.name] for r in checked)
    flagged = [r for r in rows if r.name == "c_zx"]
    emitted = all(r.verdict in ("pass", "flag") for r in flagged)
    # table-sourced dynamics path: every block carries the tabulated couplings
    params = DeviceParams(num_sites=6)
    table_ok = True
    for v in VARIANTS:
        for i in (1, 2, 3):
            c = cr_engine.block_coeffs(v, i, params, "table").in_mhz()
            key = cr_engine.TABLE1_COLUMNS[Variant(v)]
            table_ok &= any(
                all(abs(c[k] - cr_engine.TABLE1_MHZ[Variant(v)][col][k]) < 1e-12 for k in c) for col in key
            )
    plan = make_plan("x-polarized", params)
    table_ok &= np.isfinite(step_array(scar_state("x-polarized", 6).amplitudes, plan)).all()
    dt = time.perf_counter() - t0
    worst = {n: max(r.rel_dev for r in checked if r.name == n) for n in ("c_z", "c_x", "c_zz")}
    zx = max(r.rel_dev for r in flagged)
    report(
        2,
        ok and emitted and table_ok and dt < 1,
        f"max dev c_z {worst['c_z']:.4f} c_x {worst['c_x']:.4f} c_zz {worst['c_zz']:.4f}; "
        f"c_zx flagged (max dev {zx:.3f}); table path ok={table_ok}; {dt:.2f} s",
    )


def test_criterion_3_floquet_overlap(spectra12):
    parts, ok = [], True
    for v in VARIANTS:
        spec, dt = spectra12[v]
        ov = spec.scar_candidate_overlap
        ok &= ov >= 0.995 and dt < 1800
        parts.append(f"{v} L=12 {ov:.5f} ({dt:.0f} s)")
    for v in VARIANTS:
        t0 = time.perf_counter()
        spec = run_spectrum(v, 9, 16.0)
        dt = time.perf_counter() - t0
        ok &= spec.scar_candidate_overlap >= 0.99 and dt < 60
        parts.append(f"{v} L=9 {spec.scar_candidate_overlap:.5f} ({dt:.1f} s)")
    report(3, ok, "; ".join(parts))


def test_criterion_4_spectrum_shape(spectra12):
    parts, ok = [], True
    for v in VARIANTS:
        spec, _ = spectra12[v]
        ok &= spec.scar_candidate_ratio < 0.15 and spec.median_ratio > 0.8
        parts.append(f"{v} scar S/S_Page {spec.scar_candidate_ratio:.4f} (< 0.15), median {spec.median_ratio:.4f} (> 0.8)")
    report(4, ok, "; ".join(parts))


def test_criterion_5_quench():
    parts, ok = [], True
    for v in VARIANTS:
        t0 = time.perf_counter()
        res = run_quench(v, 12, 16.0, n_steps=60)
        dt = time.perf_counter() - t0
        s, d = res.scar, res.deformed
        o = s.obs["obs"]
        t_meas = 30 if v == "x-polarized" else 40
        k = int(np.flatnonzero(d.step == t_meas)[0])
        scar_ok = s.fidelity.min() >= 0.95 and np.abs(o - o[0]).max() <= 0.05 and res.ratio("scar").max() <= 0.1
        def_ok = res.ratio("deformed")[k] >= 0.8 and abs(d.obs["obs"][k]) <= 0.2
        ok &= scar_ok and def_ok and dt < 60
        parts.append(
            f"{v}: scar min F {s.fidelity.min():.4f}, max|dobs| {np.abs(o - o[0]).max():.4f}, "
            f"max S/S_Page {res.ratio('scar').max():.4f} (<= 0.1); deformed at {t_meas}T "
            f"S/S_Page {res.ratio('deformed')[k]:.4f} (>= 0.8), |obs| {abs(d.obs['obs'][k]):.4f}; {dt:.1f} s"
        )
    report(5, ok, " | ".join(parts))


def test_criterion_6_noise():
    workers = max(1, min(8, os.cpu_count() or 1))
    parts, ok = [], True
    t0 = time.perf_counter()
    for v in VARIANTS:
        ens = run_noise_ensemble(v, 12, 16.0, r_list=(0.02, 0.05, 0.07, 0.1), samples=500,
                                 master_seed=2024, workers=workers)
        gap = ens.stat("s_ratio", "deformed") - ens.stat("s_ratio", "scar")
        sd_s, sd_d = ens.stat("obs", "scar", "std"), ens.stat("obs", "deformed", "std")
        ok &= bool(np.all(gap[:2] >= 0.2)) and bool(np.all(sd_s > sd_d))
        parts.append(
            f"{v}: entropy gap r=0.02 {gap[0]:.3f}, r=0.05 {gap[1]:.3f} (>= 0.2); obs std scar/deformed "
            + ", ".join(f"{a:.3f}/{b:.3f}" for a, b in zip(sd_s, sd_d))
        )
    dt = time.perf_counter() - t0
    ok &= dt < 900
    report(6, ok, " | ".join(parts) + f"; {dt:.0f} s with {workers} worker(s)")


def test_criterion_7_trotter_scan():
    grid = default_scan_grid()
    parts, ok = [], True
    t0 = time.perf_counter()
    for v in VARIANTS:
        scar, deformed = run_trotter_scan(v, 12, 5000.0, grid)
        w = scar.window(4.0, 250.0)
        rng_ = float(w.max() - w.min())
        tv = float(np.abs(np.diff(w)).sum())
        late = grid >= 60.0
        dev = float(np.abs(deformed.obs[late] - deformed.obs[0]).max())
        ok &= rng_ < 0.1 and dev > 0.3
        parts.append(f"{v}: scar range {rng_:.4f} (< 0.1; sum|d| {tv:.4f}), deformed max dev {dev:.3f} (> 0.3)")
    dt = time.perf_counter() - t0
    ok &= dt < 600
    report(7, ok, " | ".join(parts) + f"; {dt:.0f} s")


def test_criterion_8_bch_slope():
    parts, ok = [], True
    Ts = 16.0 / 2.0 ** np.arange(5)
    for v in VARIANTS:
        errs = []
        for T in Ts:
            plan = make_plan(v, DeviceParams(num_sites=6, T_ns=T))
            H1 = effective_hamiltonian(plan, 1).to_dense()
            HF = floquet_log(dense_period_unitary(plan), T, H1)
            errs.append(np.linalg.norm(HF - H1))
        slope = float(np.polyfit(np.log(Ts), np.log(errs), 1)[0])
        ok &= abs(slope - 2.0) <= 0.3
        parts.append(f"{v} slope {slope:.3f}")
    report(8, ok, "; ".join(parts) + " (2.0 +- 0.3)")


def test_criterion_9_numeric_substrate(tmp_path, capsys):
    rng = np.random.default_rng(9)
    s = random_state(8, rng)
    ent_err = max(
        float(np.max(np.abs(np.subtract(entropies(s, c), entropies_oracle(s.amplitudes, c, 8))))) for c in range(1, 8)
    )
    drift = 0.0
    for v in VARIANTS:
        psi = scar_state(v, 12).amplitudes
        drift = max(drift, abs(np.linalg.norm(step_array(psi, make_plan(v, DeviceParams()), 1000)) - 1))
    renyi_ok = True
    for _ in range(100):
        st = random_state(int(rng.integers(2, 10)), rng)
        a, b = entropies(st, int(rng.integers(1, st.num_sites)))
        renyi_ok &= b <= a + 1e-12
    out = tmp_path / "ens"
    argv = ["noise", "--set", "L=6", "--set", "noise.samples=500", "--variant", "cluster", "-o", str(out)]
    assert cli.main(argv) == 0
    manifest = out / "manifest_noise.json"
    identical, diffs = cli.replay(manifest, tmp_path / "replay")
    n_traj = json.loads(manifest.read_text())["trajectories"]
    capsys.readouterr()
    ok = ent_err < 1e-10 and drift < 1e-8 and renyi_ok and identical
    report(
        9,
        ok,
        f"entropy oracle {ent_err:.1e} (< 1e-10); norm drift over 1000 T {drift:.1e} (< 1e-8); "
        f"Renyi <= vN on 100 states: {renyi_ok}; {n_traj}-trajectory ensemble replay bit-exact: {identical}",
    )
