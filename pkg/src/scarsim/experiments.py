"""Detection protocols: spectrum scatter, quench, noise ensembles, Trotter scan."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .cr_engine import DeviceParams
from .floquet import (
    NoiseSpec,
    Trajectory,
    evolve_array,
    floquet_modes,
    make_plan,
    mode_entropies,
)
from .scar_models import Variant, deform, scar_state
from .seeding import derive_seed
from .spin_ops import LocalOperator, OperatorSum, QubitState, apply_matrix, half_chain_page, wrap_site

log = logging.getLogger(__name__)

DEFAULT_R_LIST = (0.0, 0.02, 0.05, 0.07, 0.1)
DEFAULT_SAMPLES = 500
DENSE_EFFECTIVE_MAX_SITES = 10
QUANTITIES = ("fidelity", "obs", "s_ratio")
STATES = ("scar", "deformed")


def observable(kind: str, num_sites: int) -> OperatorSum:
    """``x_mean`` = (1/L) sum sigma^x_i, ``zxz_mean`` = (1/L) sum sigma^z_i sigma^x_{i+1} sigma^z_{i+2}."""
    L = num_sites
    op = OperatorSum(L)
    if kind == "x_mean":
        for i in range(1, L + 1):
            op.add(1.0 / L, LocalOperator.pauli("X", (i,)))
    elif kind == "zxz_mean":
        if L < 3:
            raise ValueError("zxz_mean needs L >= 3")
        for i in range(1, L + 1):
            op.add(1.0 / L, LocalOperator.pauli("ZXZ", (i, wrap_site(i + 1, L), wrap_site(i + 2, L))))
    else:
        raise ValueError(f"unknown observable kind {kind!r}")
    return op


def observable_kind(variant: Variant | str) -> str:
    return "x_mean" if Variant.parse(variant) is Variant.XPOLARIZED else "zxz_mean"


def default_measure_steps(variant: Variant | str) -> int:
    """Sampling time in periods: 30 for the x-polarized chain, 40 for the cluster."""
    return 30 if Variant.parse(variant) is Variant.XPOLARIZED else 40


def paired_states(variant: Variant | str, num_sites: int, site: int = 1) -> tuple[QubitState, QubitState]:
    s = scar_state(variant, num_sites)
    return s, deform(s, site)


def shot_noise_estimate(
    psi: np.ndarray, op: OperatorSum, shots: int, rng: np.random.Generator
) -> float:
    """Finite-shot estimate of a sum of Pauli strings (each term measured separately)."""
    total = 0.0
    for c, term in op.terms:
        mean = float(np.vdot(psi, apply_matrix(psi, term.matrix, term.sites, op.num_sites)).real)
        p_plus = min(1.0, max(0.0, 0.5 * (1.0 + mean)))
        k = rng.binomial(shots, p_plus)
        total += c * (2.0 * k / shots - 1.0)
    return total


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


@dataclass
class SpectrumScatter:
    variant: Variant
    num_sites: int
    T: float
    quasienergy: np.ndarray  # rad/ns
    unwound_energy: np.ndarray  # rad/ns
    s_vn_over_page: np.ndarray
    scar_overlap: np.ndarray

    @property
    def scar_index(self) -> int:
        return int(np.argmax(self.scar_overlap))

    @property
    def scar_candidate_overlap(self) -> float:
        return float(self.scar_overlap[self.scar_index])

    @property
    def scar_candidate_ratio(self) -> float:
        return float(self.s_vn_over_page[self.scar_index])

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.s_vn_over_page))


def run_spectrum(
    variant: Variant | str,
    num_sites: int = 12,
    T: float = 16.0,
    device: DeviceParams | None = None,
    coefficient_source: str = "table",
) -> SpectrumScatter:
    variant = Variant.parse(variant)
    if num_sites > 12:
        raise ValueError("spectrum is limited to L <= 12")
    device = _device(device, num_sites, T)
    plan = make_plan(variant, device, coefficient_source=coefficient_source)
    modes = floquet_modes(plan)
    s_vn, _ = mode_entropies(modes)
    overlaps = modes.overlaps(scar_state(variant, num_sites))
    return SpectrumScatter(
        variant,
        num_sites,
        T,
        modes.quasienergy,
        modes.unwound_energy,
        s_vn / half_chain_page(num_sites),
        overlaps,
    )


def _device(device: DeviceParams | None, num_sites: int, T: float) -> DeviceParams:
    if device is None:
        return DeviceParams(num_sites=num_sites, T_ns=T)
    if device.num_sites != num_sites or device.T_ns != T:
        return replace(device, num_sites=num_sites, T_ns=T)
    return device


# ---------------------------------------------------------------------------
# quench
# ---------------------------------------------------------------------------


@dataclass
class QuenchResult:
    variant: Variant
    scar: Trajectory
    deformed: Trajectory
    page: float
    observable: str

    def ratio(self, which: str) -> np.ndarray:
        return getattr(self, which).s_vn / self.page


def run_quench(
    variant: Variant | str,
    num_sites: int = 12,
    T: float = 16.0,
    n_steps: int = 60,
    cadence: int = 1,
    device: DeviceParams | None = None,
    coefficient_source: str = "table",
    mode: str = "trotter",
) -> QuenchResult:
    """Scar and deformed scar under the same noise-free plan."""
    variant = Variant.parse(variant)
    device = _device(device, num_sites, T)
    plan = make_plan(variant, device, coefficient_source=coefficient_source)
    kind = observable_kind(variant)
    scar, deformed = paired_states(variant, num_sites)
    psi = np.stack([scar.amplitudes, deformed.amplitudes], axis=1)
    tr = evolve_array(psi, plan, n_steps, {"obs": observable(kind, num_sites)}, cadence, mode)
    return QuenchResult(variant, tr.column(0), tr.column(1), half_chain_page(num_sites), kind)


# ---------------------------------------------------------------------------
# noise ensembles
# ---------------------------------------------------------------------------


@dataclass
class EnsembleResult:
    """Endpoint statistics per noise strength.

    ``samples[r_index]`` has shape (n_samples, 3 quantities, 2 states) with
    quantities ordered as :data:`QUANTITIES` and states as :data:`STATES`.
    """

    variant: Variant
    r_values: list[float]
    samples: list[np.ndarray]
    seeds: list[list[int | None]]
    measure_steps: int
    T: float
    mode: str
    master_seed: int

    @property
    def sample_counts(self) -> list[int]:
        return [s.shape[0] for s in self.samples]

    @property
    def mean(self) -> np.ndarray:
        """(n_r, 3, 2) means with a fixed, sample-index summation order."""
        return np.stack([s.mean(axis=0) for s in self.samples])

    @property
    def std(self) -> np.ndarray:
        return np.stack([s.std(axis=0) for s in self.samples])

    def stat(self, quantity: str, state: str, which: str = "mean") -> np.ndarray:
        arr = self.mean if which == "mean" else self.std
        return arr[:, QUANTITIES.index(quantity), STATES.index(state)]


def _endpoint(
    variant: Variant,
    device: DeviceParams,
    noise: NoiseSpec | None,
    n_steps: int,
    mode: str,
    coefficient_source: str,
) -> np.ndarray:
    plan = make_plan(variant, device, noise, coefficient_source)
    L = device.num_sites
    scar, deformed = paired_states(variant, L)
    psi = np.stack([scar.amplitudes, deformed.amplitudes], axis=1)
    obs = {"obs": observable(observable_kind(variant), L)}
    tr = evolve_array(psi, plan, n_steps, obs, cadence=max(n_steps, 1), mode=mode)
    page = half_chain_page(L)
    return np.stack([tr.fidelity[-1], tr.obs["obs"][-1], tr.s_vn[-1] / page])


def _endpoint_task(args) -> np.ndarray:
    return _endpoint(*args)


def run_noise_ensemble(
    variant: Variant | str,
    num_sites: int = 12,
    T: float = 16.0,
    r_list: Sequence[float] = DEFAULT_R_LIST,
    samples: int = DEFAULT_SAMPLES,
    measure_steps: int | None = None,
    mode: str = "trotter",
    master_seed: int = 0,
    device: DeviceParams | None = None,
    coefficient_source: str = "table",
    workers: int = 1,
) -> EnsembleResult:
    """Random relative coefficient errors, ``samples`` draws per nonzero r.

    r = 0 is evaluated once with the noise-free plan. Sample seeds come from
    :func:`scarsim.seeding.derive_seed` and do not depend on ``workers``.
    """
    variant = Variant.parse(variant)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if mode == "effective_order1_dense" and num_sites > DENSE_EFFECTIVE_MAX_SITES:
        raise ValueError(
            f"effective_order1_dense is limited to L <= {DENSE_EFFECTIVE_MAX_SITES}; use 'trotter'"
        )
    if mode not in ("trotter", "effective_order1_dense"):
        raise ValueError(f"unknown propagator mode {mode!r}")
    device = _device(device, num_sites, T)
    n_steps = default_measure_steps(variant) if measure_steps is None else int(measure_steps)
    tag = f"noise:{variant.value}"

    tasks, seeds = [], []
    for ri, r in enumerate(r_list):
        if r == 0:
            seeds.append([None])
            tasks.append([(variant, device, None, n_steps, mode, coefficient_source)])
            continue
        rs = [derive_seed(master_seed, tag, ri, s) for s in range(samples)]
        seeds.append(rs)
        tasks.append(
            [(variant, device, NoiseSpec(float(r), sd), n_steps, mode, coefficient_source) for sd in rs]
        )

    flat = [t for group in tasks for t in group]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_endpoint_task, flat, chunksize=8))
    else:
        results = [_endpoint_task(t) for t in flat]

    out, pos = [], 0
    for group in tasks:
        out.append(np.stack(results[pos:pos + len(group)]))
        pos += len(group)
    return EnsembleResult(variant, [float(r) for r in r_list], out, seeds, n_steps, T, mode, master_seed)


# ---------------------------------------------------------------------------
# Trotter-resolution scan
# ---------------------------------------------------------------------------


def default_scan_grid(t_min: float = 4.0, t_max: float = 1000.0, points: int = 24) -> np.ndarray:
    return np.geomspace(t_min, t_max, points)


@dataclass
class ScanResult:
    state: str
    T_grid: np.ndarray
    steps: np.ndarray
    obs: np.ndarray
    t_total: float

    def window(self, t_min: float, t_max: float) -> np.ndarray:
        m = (self.T_grid >= t_min) & (self.T_grid <= t_max)
        return self.obs[m]


def scan_steps(t_total: float, T: float) -> int:
    return int(round(t_total / T))


def run_trotter_scan(
    variant: Variant | str,
    num_sites: int = 12,
    t_total: float = 5000.0,
    T_grid: Sequence[float] | None = None,
    device: DeviceParams | None = None,
    coefficient_source: str = "table",
) -> tuple[ScanResult, ScanResult]:
    variant = Variant.parse(variant)
    grid = default_scan_grid() if T_grid is None else np.asarray(T_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("T grid must be strictly increasing")
    obs = {"obs": observable(observable_kind(variant), num_sites)}
    scar, deformed = paired_states(variant, num_sites)
    psi = np.stack([scar.amplitudes, deformed.amplitudes], axis=1)
    steps, vals = [], []
    for T in grid:
        dev = _device(device, num_sites, float(T))
        plan = make_plan(variant, dev, coefficient_source=coefficient_source)
        n = scan_steps(t_total, T)
        tr = evolve_array(psi, plan, n, obs, cadence=max(n, 1))
        steps.append(n)
        vals.append(tr.obs["obs"][-1])
    vals = np.asarray(vals)
    steps = np.asarray(steps)
    return (
        ScanResult("scar", grid, steps, vals[:, 0], t_total),
        ScanResult("deformed", grid, steps, vals[:, 1], t_total),
    )


# ---------------------------------------------------------------------------
# energy bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class EnergyCheck:
    scar_energy: float
    deformed_energy: float
    spectral_range: float

    @property
    def relative_shift(self) -> float:
        return abs(self.deformed_energy - self.scar_energy) / self.spectral_range


def deformation_energy(variant: Variant | str, num_sites: int, device: DeviceParams | None = None) -> EnergyCheck:
    """<H_avg> of scar and deformed scar relative to the H_avg spectral range."""
    device = _device(device, num_sites, 16.0 if device is None else device.T_ns)
    plan = make_plan(variant, device)
    H = plan.average_hamiltonian()
    scar, deformed = paired_states(variant, num_sites)
    e_s = float(np.vdot(scar.amplitudes, H.apply(scar.amplitudes)).real)
    e_d = float(np.vdot(deformed.amplitudes, H.apply(deformed.amplitudes)).real)
    span = _spectral_range(H)
    return EnergyCheck(e_s, e_d, span)


def _spectral_range(H: OperatorSum) -> float:
    if H.num_sites <= 10:
        w = np.linalg.eigvalsh(H.to_dense())
        return float(w[-1] - w[0])

    dim = 2**H.num_sites
    lin = LinearOperator((dim, dim), matvec=lambda v: H.apply(np.asarray(v, dtype=complex).reshape(-1)),
                         dtype=complex)
    hi = eigsh(lin, k=1, which="LA", return_eigenvectors=False)[0]
    lo = eigsh(lin, k=1, which="SA", return_eigenvectors=False)[0]
    return float(hi - lo)


__all__ = [
    "DEFAULT_R_LIST",
    "EnsembleResult",
    "QuenchResult",
    "ScanResult",
    "SpectrumScatter",
    "deformation_energy",
    "observable",
    "observable_kind",
    "run_noise_ensemble",
    "run_quench",
    "run_spectrum",
    "run_trotter_scan",
    "shot_noise_estimate",
]
