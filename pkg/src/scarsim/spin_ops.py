"""State vectors, local operators and entanglement for small qubit chains.

Basis convention (used by every module in the package):

* sites are labelled ``1..L``; site 1 is the most significant bit of the
  basis index, so reshaping an amplitude vector to ``(2,) * L`` puts site
  ``k`` on axis ``k - 1``;
* bit 0 is ``|up>`` (sigma^z = +1), bit 1 is ``|down>`` (sigma^z = -1).

Kernels operate on raw arrays whose leading ``L`` axes are the sites and which
may carry one trailing batch axis, so that many states (or the columns of a
propagator) can be pushed through the same gates at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12

# angular frequency of 1 MHz expressed in rad/ns
MHZ = 2.0 * math.pi * 1e-3

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def mhz(value: float) -> float:
    """Convert a frequency f/2pi in MHz to angular frequency in rad/ns."""
    return value * MHZ


def to_mhz(value: float) -> float:
    """Inverse of :func:`mhz`."""
    return value / MHZ


def pauli_string(label: str) -> np.ndarray:
    """Kronecker product of Pauli factors, e.g. ``"ZX"`` -> sigma^z (x) sigma^x."""
    out = np.ones((1, 1), dtype=complex)
    for ch in label.upper():
        out = np.kron(out, PAULI[ch])
    return out


def wrap_site(i: int, num_sites: int) -> int:
    """Map an arbitrary integer site label onto ``1..L`` periodically."""
    return (i - 1) % num_sites + 1


@dataclass(frozen=True)
class QubitState:
    num_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_sites < 2:
            raise ValueError(f"need at least 2 sites, got {self.num_sites}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_sites:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected 2**{self.num_sites}"
            )
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec: np.ndarray, normalize: bool = True) -> "QubitState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        num_sites = int(round(math.log2(vec.size)))
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(num_sites, vec)

    @classmethod
    def product(cls, local_states: Sequence[np.ndarray]) -> "QubitState":
        vec = np.ones(1, dtype=complex)
        for s in local_states:
            s = np.asarray(s, dtype=complex)
            vec = np.kron(vec, s / np.linalg.norm(s))
        return cls(len(local_states), vec)

    @classmethod
    def basis(cls, bits: str) -> "QubitState":
        """Computational basis state from a bit string, ``"0"`` = up."""
        vec = np.zeros(2 ** len(bits), dtype=complex)
        vec[int(bits, 2)] = 1.0
        return cls(len(bits), vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_sites)


@dataclass(frozen=True)
class LocalOperator:
    """A matrix acting on a handful of named sites.

    The site order defines the tensor order of ``matrix``: ``sites[0]`` is the
    most significant factor.
    """

    sites: tuple[int, ...]
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in {sites}")
        mat = np.asarray(self.matrix, dtype=complex)
        d = 2 ** len(sites)
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match {len(sites)} sites")
        if self.hermitian:
            dev = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
            if dev > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(mat)))):
                raise ValueError(f"matrix flagged hermitian deviates by {dev:.3e}")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def pauli(cls, label: str, sites: Sequence[int]) -> "LocalOperator":
        return cls(tuple(sites), pauli_string(label))

    def check_range(self, num_sites: int) -> None:
        for s in self.sites:
            if not 1 <= s <= num_sites:
                raise ValueError(f"site {s} out of range 1..{num_sites}")

    def scaled(self, factor: float) -> "LocalOperator":
        return LocalOperator(self.sites, factor * self.matrix, self.hermitian)

    def to_dense(self, num_sites: int) -> np.ndarray:
        return _dense_from_local(self.matrix, self.sites, num_sites)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass
class OperatorSum:
    """Real linear combination of local operators on an ``L``-site chain."""

    num_sites: int
    terms: list[tuple[float, LocalOperator]] = field(default_factory=list)

    def __post_init__(self):
        for _, op in self.terms:
            op.check_range(self.num_sites)

    def add(self, coeff: float, op: LocalOperator) -> "OperatorSum":
        op.check_range(self.num_sites)
        self.terms.append((float(coeff), op))
        return self

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if other.num_sites != self.num_sites:
            raise ValueError("cannot add operators on different chain lengths")
        return OperatorSum(self.num_sites, list(self.terms) + list(other.terms))

    def scaled(self, factor: float) -> "OperatorSum":
        return OperatorSum(self.num_sites, [(c * factor, op) for c, op in self.terms])

    @property
    def hermitian(self) -> bool:
        return all(op.hermitian for _, op in self.terms)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Action on a flat vector or on a ``(2**L, batch)`` array."""
        return apply_operator_sum(self, psi)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((2**self.num_sites,) * 2, dtype=complex)
        for c, op in self.terms:
            out += c * op.to_dense(self.num_sites)
        return out


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


def _as_site_tensor(psi: np.ndarray, num_sites: int) -> tuple[np.ndarray, bool]:
    """Reshape a flat vector or (dim, batch) array to site-tensor form."""
    batched = psi.ndim == 2
    shape = (2,) * num_sites + ((psi.shape[1],) if batched else ())
    return psi.reshape(shape), batched


def apply_matrix(
    psi: np.ndarray, matrix: np.ndarray, sites: Sequence[int], num_sites: int
) -> np.ndarray:
    """Apply a ``2**k`` square matrix on ``sites`` (1-based) without checks.

    ``psi`` is a flat ``2**L`` vector or a ``(2**L, batch)`` array; a new
    array of the same shape is returned.
    """
    k = len(sites)
    axes = [s - 1 for s in sites]
    tens, _ = _as_site_tensor(psi, num_sites)
    gate = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate, tens, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return np.ascontiguousarray(out).reshape(psi.shape)


def _dense_from_local(matrix: np.ndarray, sites: Sequence[int], num_sites: int) -> np.ndarray:
    eye = np.eye(2**num_sites, dtype=complex)
    return apply_matrix(eye, matrix, sites, num_sites)


def apply_operator_sum(op: OperatorSum, psi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(psi, dtype=complex)
    for c, term in op.terms:
        out += c * apply_matrix(psi, term.matrix, term.sites, op.num_sites)
    return out


def unitarity_error(U: np.ndarray) -> float:
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def _check_sites(sites: Sequence[int], num_sites: int) -> None:
    if len(set(sites)) != len(sites):
        raise ValueError(f"sites must be distinct, got {tuple(sites)}")
    for s in sites:
        if not 1 <= s <= num_sites:
            raise ValueError(f"site {s} out of range 1..{num_sites}")


def apply_local_unitary(state: QubitState, sites: Sequence[int], U: np.ndarray) -> QubitState:
    """Return a new state with the small unitary ``U`` applied on ``sites``."""
    sites = tuple(int(s) for s in sites)
    _check_sites(sites, state.num_sites)
    U = np.asarray(U, dtype=complex)
    if U.shape != (2 ** len(sites),) * 2:
        raise ValueError(f"unitary shape {U.shape} does not match {len(sites)} sites")
    err = unitarity_error(U)
    if err > UNITARY_TOL:
        raise ValueError(f"matrix is not unitary: ||U^dag U - I|| = {err:.3e}")
    vec = apply_matrix(state.amplitudes, U, sites, state.num_sites)
    # strip accumulated rounding so the normalization invariant holds exactly
    vec /= np.linalg.norm(vec)
    return QubitState(state.num_sites, vec)


def hermitian_exp(matrix: np.ndarray, t: float) -> np.ndarray:
    """exp(-i * matrix * t) of a Hermitian matrix by spectral decomposition."""
    w, v = np.linalg.eigh(matrix)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def local_matrix_exp(H: LocalOperator, t: float) -> np.ndarray:
    if not H.hermitian:
        raise ValueError("local_matrix_exp requires a Hermitian operator")
    return hermitian_exp(H.matrix, t)


def expectation(state: QubitState, obs: OperatorSum) -> float:
    if obs.num_sites != state.num_sites:
        raise ValueError(
            f"observable defined on {obs.num_sites} sites, state has {state.num_sites}"
        )
    if not obs.hermitian:
        raise ValueError("expectation requires Hermitian terms")
    val = np.vdot(state.amplitudes, obs.apply(state.amplitudes))
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def expectations_batch(psi: np.ndarray, obs: OperatorSum) -> np.ndarray:
    """Real expectation values for every column of a ``(2**L, batch)`` array."""
    vals = np.einsum("ib,ib->b", psi.conj(), obs.apply(psi))
    return vals.real


def fidelity(a: QubitState, b: QubitState) -> float:
    if a.num_sites != b.num_sites:
        raise ValueError(f"dimension mismatch: {a.num_sites} vs {b.num_sites} sites")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


# ---------------------------------------------------------------------------
# entanglement
# ---------------------------------------------------------------------------


def schmidt_probabilities(psi: np.ndarray, cut: int, num_sites: int) -> np.ndarray:
    """Squared Schmidt coefficients across ``cut``.

    ``psi`` may be a flat vector or a ``(2**L, batch)`` array; in the batched
    case the result has shape ``(batch, min(2**cut, 2**(L-cut)))``.
    """
    m, n = 2**cut, 2 ** (num_sites - cut)
    if psi.ndim == 1:
        s = np.linalg.svd(psi.reshape(m, n), compute_uv=False)
    else:
        s = np.linalg.svd(psi.T.reshape(-1, m, n), compute_uv=False)
    return s**2


def entropies_from_probs(lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = np.clip(lam, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(lam > 0, lam * np.log(np.where(lam > 0, lam, 1.0)), 0.0)
    s_vn = np.clip(-plogp.sum(axis=-1), 0.0, None)
    s_r2 = np.clip(-np.log((lam**2).sum(axis=-1)), 0.0, None)
    return s_vn, s_r2


def entropies(state: QubitState, cut: int | None = None) -> tuple[float, float]:
    """Von Neumann and second Renyi entropy of the left ``cut`` sites."""
    L = state.num_sites
    if cut is None:
        cut = L // 2
    if not 1 <= cut < L:
        raise ValueError(f"cut must satisfy 1 <= cut < {L}, got {cut}")
    s_vn, s_r2 = entropies_from_probs(schmidt_probabilities(state.amplitudes, cut, L))
    return float(s_vn), float(s_r2)


def page_entropy(m: int, n: int) -> float:
    """Mean entanglement entropy of a random pure state in C^m (x) C^n."""
    if m > n:
        raise ValueError(f"page_entropy requires m <= n, got m={m}, n={n}")
    if m < 2:
        raise ValueError(f"page_entropy requires m > 1, got m={m}")
    return math.log(m) - m / (2.0 * n)


def half_chain_page(num_sites: int, cut: int | None = None) -> float:
    if cut is None:
        cut = num_sites // 2
    a, b = 2**cut, 2 ** (num_sites - cut)
    return page_entropy(min(a, b), max(a, b))


def random_state(num_sites: int, rng: np.random.Generator) -> QubitState:
    vec = rng.normal(size=2**num_sites) + 1j * rng.normal(size=2**num_sites)
    return QubitState.from_vector(vec)


def sites_disjoint(groups: Iterable[Sequence[int]]) -> bool:
    seen: set[int] = set()
    for g in groups:
        if seen.intersection(g):
            return False
        seen.update(g)
    return True
