"""Trotter cycle, stroboscopic propagation and Floquet analysis."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from . import cr_engine
from .cr_engine import DeviceParams
from .scar_models import Variant
from .spin_ops import (
    LocalOperator,
    OperatorSum,
    QubitState,
    apply_matrix,
    entropies_from_probs,
    expectations_batch,
    hermitian_exp,
    schmidt_probabilities,
    sites_disjoint,
)

log = logging.getLogger(__name__)

DENSE_MAX_SITES = 12
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    """Relative coefficient noise c -> (1 + r u) c with u ~ U[-1, 1] i.i.d."""

    r: float
    seed: int

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("noise strength r must be non-negative")


@dataclass(frozen=True)
class TrotterPlan:
    variant: Variant
    num_sites: int
    T: float
    blocks: tuple[tuple[LocalOperator, ...], ...]
    coefficient_source: str = "table"
    noise: NoiseSpec | None = None
    block_terms: tuple[tuple[Mapping[str, float], ...], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.num_sites % 3 != 0:
            raise ValueError(f"L mod 3 = 0 required, got L = {self.num_sites}")
        if len(self.blocks) != 3:
            raise ValueError("a Trotter cycle has exactly three substeps")
        for n, sub in enumerate(self.blocks, start=1):
            if not sites_disjoint(op.sites for op in sub):
                raise ValueError(f"substep {n} has overlapping block supports")

    @cached_property
    def gates(self) -> tuple[tuple[tuple[tuple[int, ...], np.ndarray], ...], ...]:
        """Per-substep local propagators exp(-i H_b T/3)."""
        return tuple(
            tuple((op.sites, hermitian_exp(op.matrix, self.T / 3)) for op in sub) for sub in self.blocks
        )

    def substep_hamiltonian(self, n: int) -> OperatorSum:
        return OperatorSum(self.num_sites, [(1.0, op) for op in self.blocks[n - 1]])

    def average_hamiltonian(self) -> OperatorSum:
        H = OperatorSum(self.num_sites)
        for sub in self.blocks:
            for op in sub:
                H.add(1.0 / 3.0, op)
        return H

    def with_period(self, T: float) -> "TrotterPlan":
        return replace(self, T=float(T))


def _draw_noise(rng: np.random.Generator, terms: dict[str, float], r: float) -> dict[str, float]:
    u = rng.uniform(-1.0, 1.0, size=len(terms))
    return {k: (1.0 + r * uk) * v for (k, v), uk in zip(terms.items(), u)}


def make_plan(
    variant: Variant | str,
    device: DeviceParams,
    noise: NoiseSpec | None = None,
    coefficient_source: str = "table",
) -> TrotterPlan:
    """Three-substep cycle; substep n drives blocks i = n, n+3, ...

    Noise draws are taken in a fixed order (substep, block, coefficient name)
    from a generator seeded with ``noise.seed``.
    """
    variant = Variant.parse(variant)
    L = device.num_sites
    rng = np.random.default_rng(noise.seed) if noise is not None else None
    blocks, terms_all = [], []
    for n in (1, 2, 3):
        sub, sub_terms = [], []
        for i in range(n, L + 1, 3):
            coeffs = cr_engine.block_coeffs(variant, i, device, coefficient_source)
            corr = cr_engine.corrections_for(variant, i, coeffs, L)
            terms = cr_engine.block_terms(variant, i, coeffs, corr, L)
            if rng is not None:
                terms = _draw_noise(rng, terms, noise.r)
            sub.append(cr_engine.block_from_terms(variant, i, terms, L))
            sub_terms.append(terms)
        blocks.append(tuple(sub))
        terms_all.append(tuple(sub_terms))
    return TrotterPlan(
        variant, L, float(device.T_ns), tuple(blocks), coefficient_source, noise, tuple(terms_all)
    )


def zero_plan(variant: Variant | str, num_sites: int, T: float) -> TrotterPlan:
    """Plan whose blocks are all zero matrices (identity propagator)."""
    variant = Variant.parse(variant)
    blocks = []
    for n in (1, 2, 3):
        sub = []
        for i in range(n, num_sites + 1, 3):
            sites = cr_engine.block_sites(variant, i, num_sites)
            sub.append(LocalOperator(sites, np.zeros((2 ** len(sites),) * 2)))
        blocks.append(tuple(sub))
    return TrotterPlan(variant, num_sites, T, tuple(blocks))


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


def step_array(psi: np.ndarray, plan: TrotterPlan, n_steps: int = 1) -> np.ndarray:
    """Apply ``n_steps`` periods to a flat vector or (dim, batch) array."""
    L = plan.num_sites
    for _ in range(n_steps):
        for sub in plan.gates:
            for sites, U in sub:
                psi = apply_matrix(psi, U, sites, L)
    return psi


def step(state: QubitState, plan: TrotterPlan) -> QubitState:
    if state.num_sites != plan.num_sites:
        raise ValueError("state and plan have different chain lengths")
    psi = step_array(state.amplitudes, plan)
    return QubitState(state.num_sites, psi / np.linalg.norm(psi))


def dense_period_unitary(plan: TrotterPlan) -> np.ndarray:
    if plan.num_sites > DENSE_MAX_SITES:
        raise ValueError(
            f"dense propagator refused for L = {plan.num_sites}; limit is L <= {DENSE_MAX_SITES}"
        )
    eye = np.eye(2**plan.num_sites, dtype=complex)
    return step_array(eye, plan)


def dense_substep_unitary(plan: TrotterPlan, n: int) -> np.ndarray:
    eye = np.eye(2**plan.num_sites, dtype=complex)
    for sites, U in plan.gates[n - 1]:
        eye = apply_matrix(eye, U, sites, plan.num_sites)
    return eye


# ---------------------------------------------------------------------------
# Floquet modes
# ---------------------------------------------------------------------------


@dataclass
class FloquetModes:
    """All Floquet modes of one plan, stored column-wise."""

    vectors: np.ndarray  # (dim, dim), column k is mode k
    quasienergy: np.ndarray
    unwound_energy: np.ndarray
    avg_energy: np.ndarray  # <phi|H_avg|phi>
    T: float

    def __len__(self) -> int:
        return self.vectors.shape[1]

    def overlaps(self, state: QubitState) -> np.ndarray:
        return np.abs(self.vectors.conj().T @ state.amplitudes) ** 2

    def mode(self, k: int) -> "FloquetMode":
        vec = self.vectors[:, k]
        L = int(round(np.log2(vec.size)))
        return FloquetMode(
            QubitState(L, vec / np.linalg.norm(vec)),
            float(self.quasienergy[k]),
            float(self.unwound_energy[k]),
        )


@dataclass(frozen=True)
class FloquetMode:
    state: QubitState
    quasienergy: float
    unwound_energy: float
    scar_overlap: float = float("nan")


def wrap_quasienergy(q: np.ndarray, T: float) -> np.ndarray:
    """Map onto the zone (-pi/T, pi/T]."""
    w = 2 * np.pi / T
    q = np.asarray(q, dtype=float)
    out = q - w * np.ceil((q - np.pi / T) / w)
    return out


def unwind(quasi: np.ndarray, reference: np.ndarray, T: float) -> np.ndarray:
    """Shift each quasienergy by 2 pi m / T to land nearest to ``reference``."""
    w = 2 * np.pi / T
    m = np.round((np.asarray(reference) - np.asarray(quasi)) / w)
    return quasi + m * w


def _degenerate_clusters(phases: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices whose eigenvalue phases agree within ``tol`` (circularly)."""
    order = np.argsort(phases)
    p = phases[order]
    gaps = np.diff(np.concatenate([p, [p[0] + 2 * np.pi]]))
    clusters, current = [], [order[0]]
    for k in range(1, len(p)):
        if gaps[k - 1] < tol:
            current.append(order[k])
        else:
            clusters.append(current)
            current = [order[k]]
    clusters.append(current)
    if len(clusters) > 1 and gaps[-1] < tol:
        clusters[0] = clusters.pop() + clusters[0]
    return [np.asarray(c) for c in clusters]


def eigh_unitary(U: np.ndarray, reference: OperatorSum | np.ndarray | None = None,
                 tol: float = DEGENERACY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal eigendecomposition of a unitary matrix.

    Uses the complex Schur form (diagonal for normal matrices). Inside each
    (near-)degenerate eigenvalue cluster the basis is rotated to diagonalize
    ``reference`` so that mode labels and branch choices are well defined.
    Returns (eigenvalues, eigenvectors).
    """
    try:
        Tm, Z = scipy.linalg.schur(U, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ArithmeticError(f"Schur decomposition of the period propagator failed: {exc}") from exc
    lam = np.diag(Tm).copy()
    offdiag = np.max(np.abs(np.triu(Tm, 1))) if Tm.shape[0] > 1 else 0.0
    if offdiag > 1e-8:
        log.warning("propagator Schur form not diagonal (max off-diagonal %.2e)", offdiag)
    lam /= np.abs(lam)
    if reference is not None:
        phases = np.angle(lam)
        for idx in _degenerate_clusters(phases, tol):
            if idx.size < 2:
                continue
            sub = Z[:, idx]
            R = reference.apply(sub) if isinstance(reference, OperatorSum) else reference @ sub
            h = sub.conj().T @ R
            _, w = np.linalg.eigh(0.5 * (h + h.conj().T))
            Z[:, idx] = sub @ w
    return lam, Z


def floquet_modes(plan: TrotterPlan, U: np.ndarray | None = None,
                  reference_plan: TrotterPlan | None = None) -> FloquetModes:
    """Floquet modes with quasienergies unwound against the time-averaged Hamiltonian.

    ``reference_plan`` supplies H_avg for unwinding; pass the noise-free plan
    when ``plan`` carries noise.
    """
    if U is None:
        U = dense_period_unitary(plan)
    H_avg = (reference_plan or plan).average_hamiltonian()
    lam, Z = eigh_unitary(U, H_avg)
    quasi = wrap_quasienergy(-np.angle(lam) / plan.T, plan.T)
    avg = expectations_batch(Z, H_avg)
    return FloquetModes(Z, quasi, unwind(quasi, avg, plan.T), avg, plan.T)


def mode_entropies(modes: FloquetModes, cut: int | None = None, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    L = int(round(np.log2(modes.vectors.shape[0])))
    cut = L // 2 if cut is None else cut
    s_vn, s_r2 = [], []
    for start in range(0, len(modes), chunk):
        probs = schmidt_probabilities(modes.vectors[:, start:start + chunk], cut, L)
        a, b = entropies_from_probs(probs)
        s_vn.append(a)
        s_r2.append(b)
    return np.concatenate(s_vn), np.concatenate(s_r2)


# ---------------------------------------------------------------------------
# effective Hamiltonian
# ---------------------------------------------------------------------------


def _local_commutator(a: LocalOperator, b: LocalOperator, num_sites: int) -> LocalOperator | None:
    if not set(a.sites) & set(b.sites):
        return None
    sites = tuple(sorted(set(a.sites) | set(b.sites)))
    k = len(sites)
    eye = np.eye(2**k, dtype=complex)
    # embed both factors on the union support (positions relative to ``sites``)
    pos = {s: j + 1 for j, s in enumerate(sites)}
    A = apply_matrix(eye, a.matrix, [pos[s] for s in a.sites], k)
    B = apply_matrix(eye, b.matrix, [pos[s] for s in b.sites], k)
    comm = A @ B - B @ A
    if not np.any(np.abs(comm) > 0):
        return None
    return LocalOperator(sites, comm, hermitian=False)


def effective_hamiltonian(plan: TrotterPlan, order: int = 1) -> OperatorSum:
    """Leading terms of the Floquet Hamiltonian of the three-substep cycle.

    For U = e^{A3} e^{A2} e^{A1} with A_n = -i H_n T/3, the first BCH
    correction to (H_1 + H_2 + H_3)/3 is
    -(i T/18) ([H_3, H_2] + [H_3, H_1] + [H_2, H_1]).
    Commutator terms act on the union of the two block supports.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    H = plan.average_hamiltonian()
    if order == 0:
        return H
    L = plan.num_sites
    pref = -1j * plan.T / 18.0
    for later, earlier in ((2, 1), (2, 0), (1, 0)):
        for a in plan.blocks[later]:
            for b in plan.blocks[earlier]:
                c = _local_commutator(a, b, L)
                if c is not None:
                    H.add(1.0, LocalOperator(c.sites, pref * c.matrix))
    return H


def floquet_log(U: np.ndarray, T: float, reference: np.ndarray) -> np.ndarray:
    """(i/T) log U with every eigenphase branch chosen nearest ``reference``."""
    lam, Z = eigh_unitary(U, reference)
    quasi = -np.angle(lam) / T
    ref = np.einsum("ik,ij,jk->k", Z.conj(), reference, Z).real
    e = unwind(quasi, ref, T)
    return (Z * e) @ Z.conj().T


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Stroboscopic samples for a batch of initial states.

    Array fields have shape (n_samples, batch); ``obs`` maps observable name
    to such an array.
    """

    t_ns: np.ndarray
    step: np.ndarray
    fidelity: np.ndarray
    s_vn: np.ndarray
    s_renyi2: np.ndarray
    obs: dict[str, np.ndarray]
    final: np.ndarray  # (dim, batch) state at the last step

    def column(self, b: int) -> "Trajectory":
        return Trajectory(
            self.t_ns, self.step, self.fidelity[:, b], self.s_vn[:, b], self.s_renyi2[:, b],
            {k: v[:, b] for k, v in self.obs.items()}, self.final[:, b],
        )


class DensePropagator:
    """One-period propagator exp(-i H_eff T) from the order-1 effective Hamiltonian."""

    def __init__(self, plan: TrotterPlan, order: int = 1):
        H = effective_hamiltonian(plan, order).to_dense()
        H = 0.5 * (H + H.conj().T)
        self.U = hermitian_exp(H, plan.T)

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        return self.U @ psi


def evolve_array(
    psi0: np.ndarray,
    plan: TrotterPlan,
    n_steps: int,
    observables: Mapping[str, OperatorSum] | None = None,
    cadence: int = 1,
    mode: str = "trotter",
    cut: int | None = None,
    propagator: DensePropagator | None = None,
) -> Trajectory:
    """Propagate a (dim,) or (dim, batch) array and sample every ``cadence`` periods.

    The final period is always sampled.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    observables = observables or {}
    L = plan.num_sites
    cut = L // 2 if cut is None else cut
    psi = np.asarray(psi0, dtype=complex)
    if psi.ndim == 1:
        psi = psi[:, None]
    psi = psi.copy()
    ref = psi.copy()

    if mode == "trotter":
        advance = lambda x: step_array(x, plan)  # noqa: E731
    elif mode == "effective_order1_dense":
        prop = propagator or DensePropagator(plan, 1)
        advance = prop
    else:
        raise ValueError(f"unknown propagator mode {mode!r}")

    steps = sorted(set(range(0, n_steps + 1, cadence)) | {n_steps})
    rec_step, fid, svn, sr2 = [], [], [], []
    obs_vals: dict[str, list[np.ndarray]] = {k: [] for k in observables}

    def record(k: int) -> None:
        rec_step.append(k)
        fid.append(np.abs(np.einsum("ib,ib->b", ref.conj(), psi)) ** 2)
        a, b = entropies_from_probs(schmidt_probabilities(psi, cut, L))
        svn.append(np.atleast_1d(a))
        sr2.append(np.atleast_1d(b))
        for name, op in observables.items():
            obs_vals[name].append(expectations_batch(psi, op))

    current = 0
    for k in steps:
        while current < k:
            psi = advance(psi)
            current += 1
        record(k)

    steps_arr = np.asarray(rec_step)
    return Trajectory(
        t_ns=steps_arr * plan.T,
        step=steps_arr,
        fidelity=np.asarray(fid),
        s_vn=np.asarray(svn),
        s_renyi2=np.asarray(sr2),
        obs={k: np.asarray(v) for k, v in obs_vals.items()},
        final=psi,
    )


def evolve(
    state: QubitState,
    plan: TrotterPlan,
    n_steps: int,
    observables: Mapping[str, OperatorSum] | None = None,
    cadence: int = 1,
    mode: str = "trotter",
) -> Trajectory:
    """Single-state convenience wrapper around :func:`evolve_array`."""
    return evolve_array(state.amplitudes, plan, n_steps, observables, cadence, mode).column(0)


def stack_states(states: Sequence[QubitState]) -> np.ndarray:
    return np.stack([s.amplitudes for s in states], axis=1)
