"""Iterative Procrustean distillation towards the SLOCC normal form.

Each step erases the degree of polarization of one photon with a partial
polarizer whose lossy axis is the majority eigenvector of that photon's
marginal; arms are visited cyclically starting from arm 1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .qstate import SIGMA, InvalidStateError, check_density, n_qubits, reduced_state, bloch_vector
from .slocc import CompositeArmOperator, ExtinctionError, LocalFilter, apply_local, identity_composites

DEGENERACY_TOL = 1e-12


def erasing_filter(rho1, arm: int = 1, phase: float = 0.0) -> LocalFilter:
    """Filter mapping the single-qubit marginal ``rho1`` to a multiple of the identity."""
    rho1 = np.asarray(rho1)
    tr = np.trace(rho1).real
    if tr <= 0:
        raise InvalidStateError("marginal has vanishing trace")
    mu, vecs = np.linalg.eigh(rho1 / tr)
    if mu[1] - mu[0] <= DEGENERACY_TOL:
        return LocalFilter.identity(arm)
    if mu[0] < 1e-12:
        raise ExtinctionError(f"marginal of arm {arm} is pure; erasing it needs p -> 0")
    return LocalFilter(arm, vecs[:, 1], float(mu[0] / mu[1]), phase)


def erasing_filter_from_bloch(r, arm: int = 1, phase: float = 0.0) -> LocalFilter:
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) >= 1 - 1e-12:
        raise ExtinctionError(f"estimated DOP of arm {arm} is >= 1; erasing it needs p -> 0")
    return erasing_filter((SIGMA[0] + np.einsum("k,kij->ij", r, SIGMA[1:])) / 2, arm, phase)


def scale_factor(pass_prob: float, p_effs: Sequence[float]) -> float:
    """SLOCC scale ``s0 = N / (M sqrt(p1 p2 ...))``."""
    return pass_prob / math.sqrt(math.prod(p_effs))


@dataclass(frozen=True)
class TraceStep:
    k: int
    arm: int  # 0 for the unfiltered k=0 row
    filter: LocalFilter
    dops: tuple[float, ...]
    pass_prob: float
    p_effs: tuple[float, ...]
    s0: float
    dop_sigma: tuple[float, ...] | None = None

    @property
    def dop1(self) -> float:
        return self.dops[0]

    @property
    def dop2(self) -> float:
        return self.dops[1]

    @property
    def p1_eff(self) -> float:
        return self.p_effs[0]

    @property
    def p2_eff(self) -> float:
        return self.p_effs[1]


def trace_header(n_arms: int = 2) -> list[str]:
    return (
        ["k", "arm", "f_re0", "f_im0", "f_re1", "f_im1", "p"]
        + [f"dop{j + 1}" for j in range(n_arms)]
        + ["pass_prob"]
        + [f"p{j + 1}_eff" for j in range(n_arms)]
        + ["s0"]
    )


@dataclass(frozen=True)
class DistillationTrace:
    steps: tuple[TraceStep, ...]

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def __iter__(self):
        return iter(self.steps)

    @property
    def n_arms(self) -> int:
        return len(self.steps[0].dops)

    def rows(self) -> list[list]:
        out = []
        for st in self.steps:
            f = st.filter.f
            out.append(
                [st.k, st.arm, f[0].real, f[0].imag, f[1].real, f[1].imag, st.filter.p]
                + list(st.dops)
                + [st.pass_prob]
                + list(st.p_effs)
                + [st.s0]
            )
        return out

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(trace_header(self.n_arms))
        for row in self.rows():
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k in ("k", "arm") else float(v)) for k, v in r.items()} for r in rows]


@dataclass(frozen=True)
class DistillationResult:
    rho_dis: np.ndarray | None
    composite: tuple[CompositeArmOperator, ...]
    trace: DistillationTrace
    converged: bool
    noise_limited: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def s0(self) -> float:
        return self.trace.steps[-1].s0

    @property
    def pass_prob(self) -> float:
        return self.trace.steps[-1].pass_prob

    @property
    def steps_taken(self) -> int:
        return self.trace.steps[-1].k


# observe(composites) -> (bloch vectors, per-arm DOP uncertainty or None, pass probability)
Observation = tuple[Sequence[np.ndarray], Sequence[float] | None, float]


def _run(
    n_arms: int,
    observe: Callable[[tuple[CompositeArmOperator, ...]], Observation],
    tol_dop: float,
    max_steps: int,
    phase: float = 0.0,
) -> tuple[tuple[CompositeArmOperator, ...], DistillationTrace, bool, bool]:
    if tol_dop <= 0:
        raise ValueError("tol_dop must be positive")
    composites = list(identity_composites(n_arms))

    def record(k, arm, filt, obs):
        blochs, sigmas, pp = obs
        p_effs = tuple(c.p_eff for c in composites)
        return TraceStep(
            k=k,
            arm=arm,
            filter=filt,
            dops=tuple(float(np.linalg.norm(r)) for r in blochs),
            pass_prob=float(pp),
            p_effs=p_effs,
            s0=scale_factor(pp, p_effs),
            dop_sigma=None if sigmas is None else tuple(float(s) for s in sigmas),
        )

    obs = observe(tuple(composites))
    steps = [record(0, 0, LocalFilter.identity(1), obs)]
    k = 0
    while max(steps[-1].dops) > tol_dop and k < max_steps:
        k += 1
        arm = (k - 1) % n_arms + 1
        filt = erasing_filter_from_bloch(obs[0][arm - 1], arm, phase)
        composites[arm - 1] = composites[arm - 1].then(filt.kraus)
        obs = observe(tuple(composites))
        steps.append(record(k, arm, filt, obs))
    last = steps[-1]
    converged = max(last.dops) <= tol_dop
    noise_limited = last.dop_sigma is not None and max(last.dop_sigma) > tol_dop
    return tuple(composites), DistillationTrace(tuple(steps)), converged, noise_limited


def exact_observer(rho) -> Callable[[tuple[CompositeArmOperator, ...]], Observation]:
    rho = np.asarray(rho)
    n = n_qubits(rho)

    def observe(composites):
        out = apply_local(rho, composites)
        pp = np.trace(out).real
        out = out / pp
        return [bloch_vector(reduced_state(out, j + 1)) for j in range(n)], None, pp

    return observe


def normal_form(rho, tol_dop: float = 1e-8, max_steps: int = 50) -> DistillationResult:
    """Cyclic erasing-filter sweep over all arms of an N-qubit state (N = 2 or 3)."""
    rho = check_density(rho)
    n = n_qubits(rho)
    if n not in (2, 3):
        raise InvalidStateError("normal-form iteration supports 2 or 3 qubits")
    composites, trace, converged, _ = _run(n, exact_observer(rho), tol_dop, max_steps)
    out = apply_local(rho, composites)
    return DistillationResult(out / np.trace(out).real, composites, trace, converged)


def distill_iterate(rho, tol_dop: float = 1e-8, max_steps: int = 50) -> DistillationResult:
    """Alternate erasing filters on arms 1 and 2 until both DOPs are below ``tol_dop``."""
    if np.shape(rho) != (4, 4):
        raise InvalidStateError("distill_iterate expects a two-qubit state")
    return normal_form(rho, tol_dop, max_steps)


@dataclass(frozen=True)
class BlochEstimate:
    r: np.ndarray
    sigma: np.ndarray
    pass_prob: float

    @property
    def dop(self) -> float:
        return float(np.linalg.norm(self.r))

    @property
    def dop_sigma(self) -> float:
        return float(np.linalg.norm(self.sigma))


def distill_iterate_sampled(
    estimator: Callable[[tuple[CompositeArmOperator, ...], int], BlochEstimate],
    tol_dop: float = 0.1,
    max_steps: int = 50,
    n_arms: int = 2,
    phase: float = 0.0,
    true_state=None,
) -> DistillationResult:
    """Distillation driven by estimated marginals.

    ``estimator(composites, arm)`` measures one arm behind the current filters.
    If ``true_state`` is given, the (simulation-only) distilled state is
    attached to the result for oracle comparisons.
    """

    def observe(composites):
        ests = [estimator(composites, j + 1) for j in range(n_arms)]
        pp = float(np.mean([e.pass_prob for e in ests]))
        return [e.r for e in ests], [e.dop_sigma for e in ests], pp

    composites, trace, converged, noisy = _run(n_arms, observe, tol_dop, max_steps, phase)
    rho_dis = None
    if true_state is not None:
        out = apply_local(true_state, composites)
        rho_dis = out / np.trace(out).real
    return DistillationResult(rho_dis, composites, trace, converged, noisy)


def composites_at(trace: DistillationTrace, k: int) -> tuple[CompositeArmOperator, ...]:
    """Replay the filters of ``trace`` up to and including step ``k``."""
    composites = list(identity_composites(trace.n_arms))
    for st in trace.steps[1 : k + 1]:
        composites[st.arm - 1] = composites[st.arm - 1].then(st.filter.kraus)
    return tuple(composites)
