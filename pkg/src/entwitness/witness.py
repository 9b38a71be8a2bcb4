"""Correlation extrema, the optimal witness and its concurrence bound.

A state whose marginals are maximally mixed is locally equivalent to a
Bell-diagonal state; the singular values ``lambda_1 >= lambda_2 >= lambda_3``
of its correlation matrix then fix the optimal Bell-type witness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distill import DistillationResult, normal_form
from .qstate import (
    InvalidStateError,
    bloch_vector,
    check_density,
    ghz,
    kron,
    partial_trace,
    singlet,
    stokes_tensor,
)
from .slocc import CompositeArmOperator, so3_to_su2

DET_TOL = 1e-12
FLIP_XY = np.diag([-1.0, -1.0, 1.0])


@dataclass(frozen=True)
class LambdaTriple:
    """Singular values of ``T`` with proper rotations: ``T = O1 diag(l1, l2, q l3) O2^T``."""

    lambdas: np.ndarray
    q: int
    O1: np.ndarray
    O2: np.ndarray

    @property
    def signed(self) -> np.ndarray:
        return self.lambdas * np.array([1, 1, self.q])

    def directions(self, l: int) -> tuple[np.ndarray, np.ndarray]:
        """Bloch directions ``(u_l, v_l)`` with ``u_l^T T v_l = +lambda_l`` (``l`` is 1-based)."""
        i = l - 1
        sign = self.q if i == 2 else 1
        return self.O1[:, i], sign * self.O2[:, i]


def lambda_svd(T) -> LambdaTriple:
    T = np.asarray(T, dtype=float)
    if T.shape != (3, 3):
        raise ValueError("correlation matrix must be 3x3")
    U, s, Vt = np.linalg.svd(T)
    V = Vt.T
    signed3 = s[2]
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        signed3 = -signed3
    if np.linalg.det(V) < 0:
        V[:, 2] *= -1
        signed3 = -signed3
    det = np.linalg.det(T)
    q = -1 if abs(det) < DET_TOL else int(np.sign(det))
    return LambdaTriple(s, q, U, V)


def bell_witness() -> np.ndarray:
    """``I/2 - |psi-><psi-|``."""
    return np.eye(4) / 2 - singlet()


@dataclass(frozen=True)
class WitnessReport:
    trW: float
    trW_dis: float
    c_bound: float
    c_bound_dis: float
    s0: float
    lambdas: LambdaTriple
    optimal: bool = False

    def to_dict(self) -> dict:
        l1, l2, l3 = (float(x) for x in self.lambdas.lambdas)
        return {
            "lambda1": l1,
            "lambda2": l2,
            "lambda3": l3,
            "q": int(self.lambdas.q),
            "s0": float(self.s0),
            "trW": float(self.trW),
            "trW_dis": float(self.trW_dis),
            "c_bound": float(self.c_bound),
            "c_bound_dis": float(self.c_bound_dis),
            "optimal": bool(self.optimal),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def witness_value(lam: LambdaTriple, s0: float, optimal: bool = False) -> WitnessReport:
    """Witness expectation ``s0 (1 - l1 - l2 + q l3) / 4`` and the implied concurrence bounds."""
    if not s0 > 0:
        raise ValueError(f"s0 must be positive, got {s0}")
    l1, l2, l3 = lam.lambdas
    trW_dis = (1 - l1 - l2 + lam.q * l3) / 4
    trW = s0 * trW_dis
    c_bound = max(0.0, -2 * trW)
    return WitnessReport(float(trW), float(trW_dis), c_bound, c_bound / s0, float(s0), lam, optimal)


def best_witness_bound(rho_k, s0_k: float = 1.0, dop_tol: float = 1e-8) -> WitnessReport:
    """Best Bell-orbit witness for the filtered state ``rho_k`` (normalized).

    Gives a lower bound on the concurrence of the unfiltered state at every
    step; flagged ``optimal`` once both marginals are mixed within ``dop_tol``.
    """
    rho_k = check_density(rho_k)
    lam = lambda_svd(stokes_tensor(rho_k).T)
    optimal = max(np.linalg.norm(bloch_vector(partial_trace(rho_k, j))) for j in (1, 2)) <= dop_tol
    return witness_value(lam, s0_k, optimal)


def alignment_unitaries(lam: LambdaTriple) -> tuple[np.ndarray, np.ndarray]:
    """Local unitaries taking the correlation matrix to ``-diag(l1, l2, -q l3)``."""
    return so3_to_su2(FLIP_XY @ lam.O1.T), so3_to_su2(lam.O2.T)


def materialize_witness(lam: LambdaTriple, composite: tuple[CompositeArmOperator, CompositeArmOperator]) -> np.ndarray:
    """Explicit 4x4 witness ``W_rho`` for the unfiltered state.

    ``lam`` must describe the state behind the filters in ``composite``.
    """
    U1, U2 = alignment_unitaries(lam)
    U = np.kron(U1, U2)
    w_dis = U.conj().T @ bell_witness() @ U
    A = np.kron(composite[0].A, composite[1].A)
    scale = np.sqrt(composite[0].p_eff * composite[1].p_eff)
    W = A.conj().T @ w_dis @ A / scale
    return (W + W.conj().T) / 2


def ghz_witness(n: int = 3) -> np.ndarray:
    """``3I/4 - |GHZ><GHZ|``."""
    return 0.75 * np.eye(2**n) - ghz(n)


def ghz_witness_value(rho3) -> float:
    rho3 = np.asarray(rho3)
    if rho3.shape != (8, 8):
        raise InvalidStateError("GHZ witness needs a three-qubit state")
    overlap = (rho3[0, 0] + rho3[7, 7] + 2 * rho3[0, 7].real).real / 2  # <GHZ|rho|GHZ>
    return float(0.75 * np.trace(rho3).real - overlap)


def nqubit_normal_form(rho, tol: float = 1e-8, max_steps: int = 200) -> DistillationResult:
    """Normal form of a 2- or 3-qubit state by cyclic marginal erasure."""
    return normal_form(rho, tol, max_steps)


def product_state(kets) -> np.ndarray:
    psi = kron(*[np.asarray(k, dtype=complex) for k in kets])
    return np.outer(psi, psi.conj())
