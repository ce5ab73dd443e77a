"""Single-scar model family: annihilators, parent Hamiltonians and scar states."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spin_ops import (
    SY,
    LocalOperator,
    OperatorSum,
    QubitState,
    apply_local_unitary,
    apply_matrix,
    pauli_string,
    wrap_site,
)


class Variant(str, enum.Enum):
    XPOLARIZED = "x-polarized"
    CLUSTER = "cluster"
    GHZ = "ghz"

    @classmethod
    def parse(cls, value: "str | Variant") -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"x": cls.XPOLARIZED, "xpolarized": cls.XPOLARIZED, "x-pol": cls.XPOLARIZED}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown variant {value!r}; expected one of {choices}") from None

    @property
    def g(self) -> float:
        return {Variant.XPOLARIZED: 1.0, Variant.CLUSTER: -1.0, Variant.GHZ: 0.0}[self]


@dataclass(frozen=True)
class ScarModelSpec:
    variant: Variant
    num_sites: int
    g: float | None = None
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        g = self.variant.g if self.g is None else float(self.g)
        object.__setattr__(self, "g", g)
        if not -1.0 <= g <= 1.0 or not 0.0 <= self.a <= 1.0:
            raise ValueError(f"(g, a) = ({g}, {self.a}) outside [-1, 1] x [0, 1]")
        if self.variant is not Variant.GHZ and (g, self.a) != (self.variant.g, 1.0):
            raise ValueError(f"{self.variant.value} requires (g, a) = ({self.variant.g}, 1)")
        if self.variant is Variant.GHZ and g != 0.0:
            raise ValueError("ghz requires g = 0")
        if self.num_sites < min_sites(self.variant):
            raise ValueError(f"{self.variant.value} needs L >= {min_sites(self.variant)}")


@dataclass(frozen=True)
class ParentHamiltonianSpec:
    model: ScarModelSpec
    k: tuple[float, ...] | None = None

    def __post_init__(self):
        L = self.model.num_sites
        k = (1.0,) * L if self.k is None else tuple(float(x) for x in self.k)
        if len(k) != L:
            raise ValueError(f"need {L} coefficients k_i, got {len(k)}")
        zero = [i + 1 for i, x in enumerate(k) if x == 0.0]
        if zero:
            raise ValueError(f"k_i must be nonzero; zero at sites {zero}")
        object.__setattr__(self, "k", k)


def min_sites(variant: Variant) -> int:
    return 2 if Variant.parse(variant) is Variant.XPOLARIZED else 3


# ---------------------------------------------------------------------------
# general (g, a) annihilator
# ---------------------------------------------------------------------------


def psi_states(g: float, a: float) -> list[np.ndarray]:
    """The four normalized three-site vectors defining the general annihilator.

    Basis order is |uuu>, |uud>, |udu>, |udd>, |duu>, |dud>, |ddu>, |ddd>.
    """
    if not -1.0 <= g <= 1.0 or not 0.0 <= a <= 1.0:
        raise ValueError(f"(g, a) = ({g}, {a}) outside [-1, 1] x [0, 1]")
    q = 0.5 * (1.0 + g * g)
    b = 1.0 - a
    raw = [
        [-g, -1, 1, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, -1, -1, 1, g],
        [-g * a, a * q, a, -a * q, -b * q, b, b * q, -g * b],
        [-g * b, b * q, b, -b * q, a * q, -a, -a * q, g * a],
    ]
    out = []
    for n, vec in enumerate(raw, start=1):
        v = np.asarray(vec, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise ValueError(f"psi_{n} vanishes at (g, a) = ({g}, {a})")
        out.append(v / nrm)
    return out


def annihilator_general(g: float, a: float, i: int = 1, num_sites: int | None = None) -> LocalOperator:
    """Signed projector sum on sites (i, i+1, i+2); no re-orthogonalization."""
    h = np.zeros((8, 8), dtype=complex)
    for n, v in enumerate(psi_states(g, a), start=1):
        h += (-1) ** n * np.outer(v, v.conj())
    sites = _triple(i, num_sites)
    return LocalOperator(sites, h)


def _triple(i: int, num_sites: int | None) -> tuple[int, int, int]:
    if num_sites is None:
        return (i, i + 1, i + 2)
    return tuple(wrap_site(i + d, num_sites) for d in range(3))  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# simplified annihilators
# ---------------------------------------------------------------------------

_XPOL_LOCAL = -pauli_string("ZI") + pauli_string("ZX")
_CLUSTER_LOCAL = -pauli_string("ZII") - pauli_string("IXZ")
_GHZ_LOCAL = (
    -2 * pauli_string("ZII")
    + pauli_string("IZI")
    + pauli_string("ZXI")
    - pauli_string("IXZ")
    + pauli_string("ZZZ")
)


def simplified_annihilator(variant: Variant | str, i: int, num_sites: int) -> LocalOperator:
    """h_i for the chosen variant with periodic wrapping of site labels."""
    variant = Variant.parse(variant)
    if num_sites < min_sites(variant):
        raise ValueError(f"{variant.value} needs L >= {min_sites(variant)}")
    if not 1 <= i <= num_sites:
        raise ValueError(f"site {i} out of range 1..{num_sites}")
    if variant is Variant.XPOLARIZED:
        return LocalOperator((i, wrap_site(i + 1, num_sites)), _XPOL_LOCAL)
    mat = _CLUSTER_LOCAL if variant is Variant.CLUSTER else _GHZ_LOCAL
    return LocalOperator(_triple(i, num_sites), mat)


def annihilators(variant: Variant | str, num_sites: int) -> list[LocalOperator]:
    return [simplified_annihilator(variant, i, num_sites) for i in range(1, num_sites + 1)]


def parent_hamiltonian(spec: ParentHamiltonianSpec) -> OperatorSum:
    L = spec.model.num_sites
    H = OperatorSum(L)
    for i, k in enumerate(spec.k, start=1):
        H.add(k, simplified_annihilator(spec.model.variant, i, L))
    return H


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def scar_state(variant: Variant | str, num_sites: int) -> QubitState:
    variant = Variant.parse(variant)
    if num_sites < min_sites(variant):
        raise ValueError(f"{variant.value} needs L >= {min_sites(variant)}")
    if variant is Variant.XPOLARIZED:
        return QubitState.product([_PLUS] * num_sites)
    if variant is Variant.GHZ:
        vec = np.zeros(2**num_sites, dtype=complex)
        vec[0] = vec[-1] = 1 / np.sqrt(2)
        return QubitState(num_sites, vec)
    # CZ on every periodic bond applied to the all-minus product state. This
    # fixes the stabilizer sign to zxz = -1 required by the cluster annihilator.
    psi = QubitState.product([_MINUS] * num_sites).amplitudes.copy()
    bits = (np.arange(2**num_sites)[:, None] >> np.arange(num_sites - 1, -1, -1)) & 1
    n_bonds = (bits & np.roll(bits, -1, axis=1)).sum(axis=1)
    psi *= (-1.0) ** n_bonds
    return QubitState(num_sites, psi)


def deform(state: QubitState, site: int = 1) -> QubitState:
    """Apply sigma^y on one site."""
    return apply_local_unitary(state, (site,), SY)


def verify_annihilation(ops: Sequence[LocalOperator], state: QubitState) -> float:
    """max_i ||h_i |psi>|| over the given operators."""
    worst = 0.0
    for op in ops:
        op.check_range(state.num_sites)
        r = np.linalg.norm(apply_matrix(state.amplitudes, op.matrix, op.sites, state.num_sites))
        worst = max(worst, float(r))
    return worst
