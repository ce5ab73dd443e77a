"""Self-checks run by ``scarsim verify``: annihilation residuals and numerical oracles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import cr_engine
from .cr_engine import DeviceParams
from .floquet import dense_substep_unitary, make_plan
from .scar_models import (
    ParentHamiltonianSpec,
    ScarModelSpec,
    Variant,
    annihilator_general,
    annihilators,
    parent_hamiltonian,
    scar_state,
    verify_annihilation,
)
from .spin_ops import LocalOperator, QubitState, entropies, local_matrix_exp


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.threshold)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name:<48} {self.value:.3e} < {self.threshold:.0e}"


def taylor_exp(H: np.ndarray, t: float, terms: int = 50) -> np.ndarray:
    """exp(-i H t) by scaling and squaring of a truncated Taylor series."""
    A = -1j * t * np.asarray(H, dtype=complex)
    norm = np.linalg.norm(A, 1)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    A = A / 2**s
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def partial_trace_spectrum(psi: np.ndarray, cut: int, num_sites: int) -> np.ndarray:
    """Eigenvalues of the left reduced density matrix built explicitly."""
    rho = np.outer(psi, psi.conj()).reshape(2**cut, 2 ** (num_sites - cut), 2**cut, 2 ** (num_sites - cut))
    rho_a = np.einsum("ajbj->ab", rho)
    return np.linalg.eigvalsh(rho_a)


def entropies_oracle(psi: np.ndarray, cut: int, num_sites: int) -> tuple[float, float]:
    lam = np.clip(partial_trace_spectrum(psi, cut, num_sites), 0, None)
    nz = lam[lam > 1e-300]
    return float(-(nz * np.log(nz)).sum()), float(-np.log((lam**2).sum()))


def annihilation_checks(sizes=(3, 6, 9, 12)) -> list[Check]:
    out = []
    for variant in Variant:
        for L in sizes:
            res = verify_annihilation(annihilators(variant, L), scar_state(variant, L))
            out.append(Check(f"annihilation {variant.value} L={L}", res, 1e-12))
    for variant in (Variant.XPOLARIZED, Variant.CLUSTER):
        L = 6
        ops = [annihilator_general(variant.g, 1.0, i, L) for i in range(1, L + 1)]
        res = verify_annihilation(ops, scar_state(variant, L))
        out.append(Check(f"general annihilator g={variant.g:+.0f} L={L}", res, 1e-12))
    return out


def parent_checks(
    num_sites: int = 6, k: Sequence[float] | None = None, random_draws: int = 10, seed: int = 0
) -> list[Check]:
    """Parent Hamiltonian kernel for given per-site weights and for seeded random weights."""
    rng = np.random.default_rng(seed)
    out = []
    for variant in Variant:
        draws = [None if k is None else tuple(k)]
        for _ in range(random_draws):
            # magnitudes in [0.1, 2] with random signs keep every k_i nonzero
            draws.append(tuple(rng.uniform(0.1, 2.0, num_sites) * rng.choice([-1, 1], num_sites)))
        state = scar_state(variant, num_sites).amplitudes
        worst = 0.0
        for weights in draws:
            H = parent_hamiltonian(ParentHamiltonianSpec(ScarModelSpec(variant, num_sites), weights))
            worst = max(worst, float(np.linalg.norm(H.apply(state))))
        label = "given k" if k is not None else "unit k"
        out.append(Check(f"parent H {variant.value} L={num_sites} {label} + {random_draws} random k", worst, 1e-12))
    return out


def coefficient_checks() -> list[Check]:
    out = []
    for row in cr_engine.coefficient_report():
        if row.name == "c_zx":
            continue
        out.append(
            Check(
                f"eq6 vs table {row.variant} class {row.site_class} {row.name}",
                row.rel_dev,
                cr_engine.REPORT_TOLERANCES[row.name],
            )
        )
    return out


def oracle_checks(seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    H = LocalOperator((1, 2, 3), A + A.conj().T)
    err = np.max(np.abs(local_matrix_exp(H, 0.3) - taylor_exp(H.matrix, 0.3)))
    out.append(Check("spectral exp vs Taylor oracle (8x8)", float(err), 1e-10))

    L = 8
    vec = rng.normal(size=2**L) + 1j * rng.normal(size=2**L)
    state = QubitState.from_vector(vec)
    got = entropies(state, L // 2)
    ref = entropies_oracle(state.amplitudes, L // 2, L)
    out.append(Check("SVD entropies vs partial trace (L=8)", float(np.max(np.abs(np.subtract(got, ref)))), 1e-10))

    for variant in (Variant.XPOLARIZED, Variant.CLUSTER):
        plan = make_plan(variant, DeviceParams(num_sites=6))
        worst = 0.0
        for n in (1, 2, 3):
            Hn = plan.substep_hamiltonian(n).to_dense()
            w, v = np.linalg.eigh(Hn)
            dense = (v * np.exp(-1j * w * plan.T / 3)) @ v.conj().T
            worst = max(worst, float(np.max(np.abs(dense - dense_substep_unitary(plan, n)))))
        out.append(Check(f"substep factorization {variant.value} L=6", worst, 1e-10))
    return out


def run_all(
    k: Sequence[float] | None = None, random_k: int = 10, seed: int = 0
) -> list[Check]:
    num_sites = len(k) if k is not None else 6
    return (
        annihilation_checks()
        + parent_checks(num_sites, k, random_k, seed)
        + coefficient_checks()
        + oracle_checks()
    )
