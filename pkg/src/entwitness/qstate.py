"""Density matrices, Pauli/Stokes decomposition and single-qubit marginals.

Conventions
-----------
- ``|0> = |H>`` and ``|1> = |V>``; ``sigma_z |H> = +|H>``.
- Qubit 1 ("arm 1") is the most significant tensor factor.
- States are plain ``numpy`` complex arrays. A state with trace below one is an
  *unnormalized* state whose trace is a success probability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-12

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# sigma_mu (x) sigma_nu, indexed [mu, nu]
SIGMA2 = np.einsum("aij,bkl->abikjl", SIGMA, SIGMA).reshape(4, 4, 4, 4)

ALLOWED_DIMS = (2, 4, 8)


class InvalidStateError(ValueError):
    """Raised when a matrix violates the density-matrix invariants."""


class NonPhysicalStateWarning(UserWarning):
    """Emitted when a linear reconstruction leaves the positive cone."""


def n_qubits(rho) -> int:
    dim = np.shape(rho)[0]
    if dim not in ALLOWED_DIMS:
        raise InvalidStateError(f"unsupported dimension {dim}; expected one of {ALLOWED_DIMS}")
    return int(np.log2(dim))


def check_density(rho, normalized: bool | None = True) -> np.ndarray:
    """Validate ``rho`` and return it as a complex array.

    ``normalized=True`` demands unit trace, ``False`` accepts any trace in
    ``(0, 1]`` and ``None`` skips the trace check.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {rho.shape}")
    n_qubits(rho)
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise InvalidStateError("matrix is not Hermitian")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise InvalidStateError("matrix is not positive semidefinite")
    tr = np.trace(rho).real
    if normalized is True and abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace {tr!r} is not 1")
    if normalized is False and not (0.0 < tr <= 1.0 + TRACE_TOL):
        raise InvalidStateError(f"trace {tr!r} outside (0, 1]")
    return rho


def is_psd(rho, tol: float = PSD_TOL) -> bool:
    return bool(np.linalg.eigvalsh(np.asarray(rho))[0] >= -tol)


def normalize(rho) -> np.ndarray:
    tr = np.trace(rho).real
    if tr <= 0:
        raise InvalidStateError("cannot normalize a state with non-positive trace")
    return np.asarray(rho) / tr


def reduced_state(rho, keep: int) -> np.ndarray:
    """Single-qubit marginal of an N-qubit state; ``keep`` is the 1-based arm index."""
    rho = np.asarray(rho)
    n = n_qubits(rho)
    if not 1 <= keep <= n:
        raise InvalidStateError(f"arm {keep} out of range for {n} qubits")
    t = rho.reshape((2,) * (2 * n))
    j = keep - 1
    # bring the kept row/column axes to the front, then trace the rest pairwise
    t = np.moveaxis(t, (j, n + j), (0, 1)).reshape(2, 2, 2 ** (n - 1), 2 ** (n - 1))
    return np.einsum("abkk->ab", t)


def partial_trace(rho, keep: int) -> np.ndarray:
    """Marginal of a two-qubit state on arm ``keep`` (1 or 2)."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"partial_trace expects a 4x4 matrix, got {rho.shape}")
    if keep not in (1, 2):
        raise InvalidStateError("keep must be 1 or 2")
    return reduced_state(rho, keep)


def bloch_vector(rho1) -> np.ndarray:
    """Bloch vector ``r_i = Tr(rho sigma_i) / Tr(rho)`` of a single-qubit state."""
    rho1 = np.asarray(rho1)
    if rho1.shape != (2, 2):
        raise InvalidStateError(f"bloch_vector expects a 2x2 matrix, got {rho1.shape}")
    tr = np.trace(rho1).real
    if tr <= 0:
        raise InvalidStateError("marginal has vanishing trace (filtered to extinction)")
    return np.einsum("kij,ji->k", SIGMA[1:], rho1).real / tr


def dop(rho1) -> float:
    """Degree of polarization: norm of the Bloch vector."""
    return float(np.linalg.norm(bloch_vector(rho1)))


@dataclass(frozen=True)
class StokesTensor:
    """Two-photon Stokes parameters ``S[mu, nu] = Tr(rho sigma_mu (x) sigma_nu)``."""

    S: np.ndarray

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.shape != (4, 4):
            raise ValueError(f"Stokes tensor must be 4x4, got {S.shape}")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @property
    def T(self) -> np.ndarray:
        """3x3 correlation block, normalized by ``S[0, 0]``."""
        return self.S[1:, 1:] / self.S[0, 0]

    @property
    def r1(self) -> np.ndarray:
        return self.S[1:, 0] / self.S[0, 0]

    @property
    def r2(self) -> np.ndarray:
        return self.S[0, 1:] / self.S[0, 0]


def stokes_tensor(rho) -> StokesTensor:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"stokes_tensor expects a 4x4 matrix, got {rho.shape}")
    return StokesTensor(np.einsum("abij,ji->ab", SIGMA2, rho).real)


def from_stokes(S) -> np.ndarray:
    """Inverse of :func:`stokes_tensor`.

    Noisy tensors may map outside the positive cone; that is reported with a
    :class:`NonPhysicalStateWarning`, never repaired here.
    """
    if isinstance(S, StokesTensor):
        S = S.S
    S = np.asarray(S, dtype=float)
    rho = np.einsum("ab,abij->ij", S, SIGMA2) / 4.0
    if not is_psd(rho):
        warnings.warn("reconstructed matrix is not positive semidefinite", NonPhysicalStateWarning, stacklevel=2)
    return rho


def kron(*ops) -> np.ndarray:
    return reduce(np.kron, ops)


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def singlet() -> np.ndarray:
    return ket_to_dm([0, 1, -1, 0])


def werner(w: float) -> np.ndarray:
    """``w |psi-><psi-| + (1 - w) I/4``."""
    return w * singlet() + (1 - w) * np.eye(4) / 4


def pure_state(alpha: float) -> np.ndarray:
    """``cos(alpha)|00> + sin(alpha)|11>``."""
    return ket_to_dm([np.cos(alpha), 0, 0, np.sin(alpha)])


def decohered(alpha: float, gamma: float, eps: float) -> np.ndarray:
    """Dephased asymmetric pair state mixed with white noise.

    Starts from ``cos(alpha)|HH> + sin(alpha)|VV>``, scales the ``HH/VV``
    coherence by ``gamma`` and mixes in ``eps * I/4``.
    """
    if not (0 <= gamma <= 1 and 0 <= eps <= 1):
        raise ValueError("gamma and eps must lie in [0, 1]")
    rho = pure_state(alpha)
    rho[0, 3] *= gamma
    rho[3, 0] *= gamma
    return (1 - eps) * rho + eps * np.eye(4) / 4


def ghz(n: int = 3) -> np.ndarray:
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = rho[0, -1] = rho[-1, 0] = rho[-1, -1] = 0.5  # exact, no sqrt(2) rounding
    return rho


def random_density(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Ginibre) measure; full rank by default."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    w, v = np.linalg.eigh(rho)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    ev = np.linalg.eigvalsh(sq @ sigma @ sq)
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)


# calibrated so that the concurrence is 0.18 with marginal DOPs of about 0.8
DEMO_STATE = {"alpha": 0.30, "gamma": 0.34, "eps": 0.0173}


def parse_state(literal: str) -> np.ndarray:
    """Build a state from a config literal.

    Accepted forms: ``singlet``, ``werner:W``, ``pure:ALPHA``,
    ``decohered:ALPHA,GAMMA,EPS``, ``decohered-demo``, ``ghz``, or
    ``raw:<32 reals>`` / ``raw:@path`` holding a row-major 4x4 complex matrix
    as interleaved real/imaginary parts.
    """
    name, _, arg = literal.strip().partition(":")
    name = name.strip().lower()
    try:
        if name == "singlet":
            return singlet()
        if name == "werner":
            return werner(float(arg))
        if name == "pure":
            return pure_state(float(arg))
        if name == "decohered":
            alpha, gamma, eps = (float(x) for x in arg.split(","))
            return decohered(alpha, gamma, eps)
        if name == "decohered-demo":
            return decohered(**DEMO_STATE)
        if name == "ghz":
            return ghz(3)
        if name == "raw":
            text = open(arg[1:]).read() if arg.startswith("@") else arg
            vals = np.array(text.split(), dtype=float)
            if vals.size != 32:
                raise ValueError(f"raw state needs 32 reals, got {vals.size}")
            return check_density((vals[0::2] + 1j * vals[1::2]).reshape(4, 4))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad state literal {literal!r}: {exc}") from exc
    raise ValueError(f"unknown state literal {literal!r}")
