"""Local filters, waveplates and SLOCC application."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar
from scipy.spatial.transform import Rotation

from .qstate import SIGMA, kron, n_qubits

EXTINCTION_TOL = 1e-12


class ExtinctionError(RuntimeError):
    """A local filter (or filter sequence) transmits essentially nothing."""


def _unit(f) -> np.ndarray:
    f = np.asarray(f, dtype=complex).reshape(2)
    if abs(np.linalg.norm(f) - 1.0) > 1e-12:
        raise ValueError("filtering direction must be a unit vector")
    return f


def orthogonal(f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    return np.array([-f[1].conj(), f[0].conj()])


def filter_kraus(f, p: float, phase: float = 0.0) -> np.ndarray:
    """Kraus operator of a partial polarizer.

    Light polarized along ``f`` is transmitted with probability ``p``; the
    orthogonal polarization always passes. ``phase`` is a spurious retardance
    picked up by the attenuated component (zero for an ideal filter).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"transmission probability must lie in (0, 1], got {p}")
    f = _unit(f)
    proj = np.outer(f, f.conj())
    k = np.eye(2) - (1 - np.sqrt(p)) * proj
    if phase:
        k = k @ (np.eye(2) + (np.exp(1j * phase) - 1) * proj)
    return k


@dataclass(frozen=True)
class LocalFilter:
    arm: int
    f: np.ndarray
    p: float
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "f", _unit(self.f))
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"transmission probability must lie in (0, 1], got {self.p}")

    @property
    def kraus(self) -> np.ndarray:
        return filter_kraus(self.f, self.p, self.phase)

    @classmethod
    def identity(cls, arm: int) -> "LocalFilter":
        return cls(arm, np.array([1.0, 0.0]), 1.0)


@dataclass(frozen=True)
class CompositeArmOperator:
    """Accumulated local operation on one arm, rescaled so ``s_max = 1``."""

    arm: int
    A: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= 0 or s[-1] / s[0] < 1e-12:
            raise ExtinctionError(f"composite operator on arm {self.arm} is singular")
        A = A / s[0]
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def p_eff(self) -> float:
        s = np.linalg.svd(self.A, compute_uv=False)
        return float((s[-1] / s[0]) ** 2)

    def then(self, op) -> "CompositeArmOperator":
        """Compose ``op`` after the operations already applied."""
        return CompositeArmOperator(self.arm, np.asarray(op) @ self.A)

    def polar(self) -> tuple[np.ndarray, LocalFilter]:
        """Split ``A = U F`` into a unitary and a single physical filter."""
        u, h = polar(self.A, side="right")
        h = (h + h.conj().T) / 2
        w, v = np.linalg.eigh(h)
        # smaller eigenvalue carries the loss
        return u, LocalFilter(self.arm, v[:, 0], float(min(1.0, w[0] ** 2 / w[1] ** 2)))


def identity_composites(n: int = 2) -> tuple[CompositeArmOperator, ...]:
    return tuple(CompositeArmOperator(j + 1) for j in range(n))


def apply_local(rho, ops) -> np.ndarray:
    """``(A1 (x) ... (x) An) rho (...)^dagger`` without normalization."""
    rho = np.asarray(rho)
    n = n_qubits(rho)
    if len(ops) != n:
        raise ValueError(f"need {n} local operators, got {len(ops)}")
    big = kron(*[getattr(a, "A", a) for a in ops])
    out = big @ rho @ big.conj().T
    if np.trace(out).real < EXTINCTION_TOL:
        raise ExtinctionError("local operation leaves a vanishing pass probability")
    return out


def apply_slocc(rho, A1, A2) -> np.ndarray:
    """Apply local operators to a two-qubit state; the output trace is the pass probability."""
    A1, A2 = (np.asarray(getattr(a, "A", a)) for a in (A1, A2))
    for a in (A1, A2):
        if np.linalg.norm(a, 2) > 1 + 1e-12:
            raise ValueError("local operator amplifies; spectral norm must not exceed 1")
    if np.shape(rho) != (4, 4):
        raise ValueError("apply_slocc expects a two-qubit state")
    return apply_local(rho, (A1, A2))


def waveplate(kind: str, theta: float) -> np.ndarray:
    """Jones matrix of a quarter- (``"QWP"``) or half-wave (``"HWP"``) plate with fast axis at ``theta``."""
    k = {"QWP": 1, "HWP": 2}[kind.upper()]
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([1, 1j**k]) @ rot.T


def rotation_of(U) -> np.ndarray:
    """SO(3) matrix ``O_ij = Tr(sigma_i U sigma_j U^dagger) / 2`` of a 2x2 unitary."""
    U = np.asarray(U)
    return 0.5 * np.einsum("aij,jk,bkl,li->ab", SIGMA[1:], U, SIGMA[1:], U.conj().T).real


def so3_to_su2(O) -> np.ndarray:
    """Lift a proper rotation to the SU(2) element inducing it on Bloch vectors.

    The global sign is fixed by making the first non-negligible entry have a
    positive real part (positive imaginary part if the real part vanishes).
    """
    O = np.asarray(O, dtype=float)
    if np.max(np.abs(O.T @ O - np.eye(3))) > 1e-9:
        raise ValueError("matrix is not orthogonal")
    if np.linalg.det(O) < 0:
        raise ValueError("improper rotation (det = -1) has no SU(2) lift")
    x, y, z, w = Rotation.from_matrix(O).as_quat()
    U = w * SIGMA[0] - 1j * (x * SIGMA[1] + y * SIGMA[2] + z * SIGMA[3])
    lead = U.flat[np.argmax(np.abs(U.ravel()) > 1e-12)]
    key = lead.real if abs(lead.real) > 1e-12 else lead.imag
    return -U if key < 0 else U


def analyzer_direction(theta_qwp: float, theta_hwp: float) -> np.ndarray:
    """Bloch direction projected onto by QWP, then HWP, then a PBS transmitting H."""
    U = waveplate("HWP", theta_hwp) @ waveplate("QWP", theta_qwp)
    psi = U.conj().T @ np.array([1, 0])
    return np.real([psi.conj() @ s @ psi for s in SIGMA[1:]])


def waveplate_angles(a) -> tuple[float, float]:
    """Waveplate angles ``(theta_qwp, theta_hwp)`` analyzing along Bloch direction ``a``."""
    a = np.asarray(a, dtype=float)
    a = a / np.linalg.norm(a)
    # polarization ellipse: orientation psi and ellipticity chi, with H/V on z and D/A on x
    psi = 0.5 * np.arctan2(a[0], a[2])
    chi = 0.5 * np.arcsin(np.clip(a[1], -1, 1))
    best = None
    for tq, th in ((psi, (psi + chi) / 2), (psi, (psi - chi) / 2)):
        err = np.linalg.norm(analyzer_direction(tq, th) - a)
        if best is None or err < best[0]:
            best = (err, float(tq), float(th))
    return best[1], best[2]
