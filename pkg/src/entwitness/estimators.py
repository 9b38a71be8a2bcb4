"""scikit-learn style front ends for distillation and the optimal witness.

Samples are density matrices: a single ``(d, d)`` array or a stack of shape
``(n, d, d)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .distill import distill_iterate
from .oracle import wootters_concurrence
from .qstate import InvalidStateError, check_density, stokes_tensor
from .slocc import apply_local
from .witness import lambda_svd, materialize_witness, witness_value


def check_states(X, dim: int | None = None, normalized: bool | None = True) -> np.ndarray:
    """Validate one state or a stack of states and return a ``(n, d, d)`` complex array."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[0] == 0:
        raise InvalidStateError(f"expected (d, d) or (n, d, d) input, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise InvalidStateError(f"expected {dim}x{dim} states, got {X.shape[1]}x{X.shape[2]}")
    for rho in X:
        check_density(rho, normalized)
    return X


def _single(X) -> np.ndarray:
    X = check_states(X, dim=4)
    if X.shape[0] != 1:
        raise InvalidStateError("fit takes exactly one two-qubit state")
    return X[0]


class ProcrusteanDistiller(TransformerMixin, BaseEstimator):
    """Learns the local filters that erase both marginals of a two-qubit state.

    ``transform`` applies the learned filters to any states and renormalizes.
    """

    def __init__(self, tol_dop: float = 1e-8, max_steps: int = 1000):
        self.tol_dop = tol_dop
        self.max_steps = max_steps

    def fit(self, X, y=None):
        rho = _single(X)
        res = distill_iterate(rho, self.tol_dop, self.max_steps)
        self.result_ = res
        self.composite_ = res.composite
        self.s0_ = res.s0
        self.pass_prob_ = res.pass_prob
        self.n_steps_ = res.steps_taken
        self.converged_ = res.converged
        return self

    def transform(self, X):
        check_is_fitted(self, "composite_")
        out = []
        for rho in check_states(X, dim=4):
            f = apply_local(rho, self.composite_)
            out.append(f / np.trace(f).real)
        return np.array(out)

    def pass_probability(self, X) -> np.ndarray:
        check_is_fitted(self, "composite_")
        return np.array([np.trace(apply_local(r, self.composite_)).real for r in check_states(X, dim=4)])


class OptimalWitness(BaseEstimator):
    """Builds the optimal Bell-orbit witness of one state.

    After ``fit``: ``lambdas_``, ``s0_``, ``witness_`` (the 4x4 operator),
    ``trW_`` and ``concurrence_`` (the bound ``max(0, -2 Tr(W rho))``).
    """

    def __init__(self, tol_dop: float = 1e-8, max_steps: int = 1000):
        self.tol_dop = tol_dop
        self.max_steps = max_steps

    def fit(self, X, y=None):
        rho = _single(X)
        dist = ProcrusteanDistiller(self.tol_dop, self.max_steps).fit(rho)
        lam = lambda_svd(stokes_tensor(dist.result_.rho_dis).T)
        rep = witness_value(lam, dist.s0_, dist.converged_)
        self.distiller_ = dist
        self.lambdas_ = lam.lambdas
        self.q_ = lam.q
        self.s0_ = rep.s0
        self.trW_ = rep.trW
        self.concurrence_ = rep.c_bound
        self.optimal_ = rep.optimal
        self.witness_ = materialize_witness(lam, dist.composite_)
        return self

    def decision_function(self, X) -> np.ndarray:
        """``Tr(W sigma)`` per state; negative values certify entanglement."""
        check_is_fitted(self, "witness_")
        return np.einsum("ij,nji->n", self.witness_, check_states(X, dim=4)).real

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) < 0

    def score(self, X, y=None) -> float:
        """Mean concurrence bound over ``X``; ``y`` is ignored."""
        return float(np.mean(np.maximum(0.0, -2 * self.decision_function(X))))


def concurrence(X) -> np.ndarray:
    """Wootters concurrence of each state in ``X``."""
    return np.array([wootters_concurrence(r) for r in check_states(X, dim=4)])
