"""Ground truth and the tomography baseline.

``wootters_concurrence`` is the reference the witness estimates are checked
against; ``qst_reconstruct`` is the linear-inversion tomography baseline used
in the efficiency comparison.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .qstate import SIGMA, InvalidStateError, from_stokes, kron

YY = kron(SIGMA[2], SIGMA[2])


def _sqrtm_psd(rho) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if w[0] < -1e-10:
        raise InvalidStateError(f"state has negative eigenvalue {w[0]:.3e}")
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def wootters_concurrence(rho) -> float:
    """Concurrence ``max(0, s1 - s2 - s3 - s4)`` of a two-qubit state.

    The ``s_i`` are the square roots of the eigenvalues of
    ``rho (Y(x)Y) rho* (Y(x)Y)``, obtained here as the singular values of
    ``sqrt(rho) (Y(x)Y) sqrt(rho)*``, which avoids square roots of tiny
    eigenvalues.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError("concurrence needs a two-qubit state")
    rho = rho / np.trace(rho).real
    sq = _sqrtm_psd((rho + rho.conj().T) / 2)
    s = np.linalg.svd(sq @ YY @ sq.conj(), compute_uv=False)
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def wootters_concurrence_eig(rho) -> float:
    """Same quantity straight from the eigenvalues of ``rho rho~`` (cross-check)."""
    rho = np.asarray(rho, dtype=complex)
    rho = rho / np.trace(rho).real
    ev = np.linalg.eigvals(rho @ YY @ rho.conj() @ YY).real
    if ev.min() < -1e-10:
        raise InvalidStateError("spin-flip product has a negative eigenvalue")
    s = np.sort(np.sqrt(np.clip(ev, 0, None)))[::-1]
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def psd_project(rho) -> np.ndarray:
    """Clip negative eigenvalues and renormalize to unit trace."""
    rho = (np.asarray(rho) + np.asarray(rho).conj().T) / 2
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        raise InvalidStateError("reconstruction has no positive part")
    return (v * (w / w.sum())) @ v.conj().T


def qst_reconstruct(records) -> np.ndarray:
    """Linear-inversion tomography from the 16-setting records, projected onto the state space."""
    import warnings

    from .photonsim import invert_stokes16
    from .qstate import NonPhysicalStateWarning

    S, _ = invert_stokes16(records)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonPhysicalStateWarning)
        rho = from_stokes(S)
    return psd_project(rho)


MIN_BUDGET = 16_000


@dataclass(frozen=True)
class EfficiencyReport:
    """Spread of the two C(rho_dis) estimators at a matched pair budget.

    Errors are taken against each trial's own oracle C(rho_dis), since the
    distilled state itself depends on the sampled filters.
    """

    trials: int
    budget: int | None  # None: matched per trial
    c_witness: np.ndarray
    c_qst: np.ndarray
    c_true: np.ndarray
    pairs_witness: np.ndarray
    pairs_qst: np.ndarray
    header: str = (
        "QST baseline: PSD-projected linear inversion from 16 settings on the distilled "
        "state (no maximum-likelihood step); witness scheme: distillation settings + 16 + 12."
    )

    @property
    def err_witness(self) -> np.ndarray:
        return self.c_witness - self.c_true

    @property
    def err_qst(self) -> np.ndarray:
        return self.c_qst - self.c_true

    @property
    def std_witness(self) -> float:
        return float(np.std(self.err_witness, ddof=1)) if self.trials > 1 else 0.0

    @property
    def std_qst(self) -> float:
        return float(np.std(self.err_qst, ddof=1)) if self.trials > 1 else 0.0

    @property
    def ratio(self) -> float | None:
        return self.std_qst / self.std_witness if self.std_witness > 0 else None

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "trials": self.trials,
            "budget_pairs": self.budget,
            "target": "C(rho_dis)",
            "shots_witness": float(np.mean(self.pairs_witness)),
            "shots_qst": float(np.mean(self.pairs_qst)),
            "mean_c_true": float(np.mean(self.c_true)),
            "mean_c_witness": float(np.mean(self.c_witness)),
            "mean_c_qst": float(np.mean(self.c_qst)),
            "bias_witness": float(np.mean(self.err_witness)),
            "bias_qst": float(np.mean(self.err_qst)),
            "std_witness": self.std_witness,
            "std_qst": self.std_qst,
            "std_ratio_qst_over_witness": self.ratio,
            "witness_more_efficient": bool(self.std_witness < self.std_qst or self.std_qst == self.std_witness == 0),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "c_witness", "c_qst"])
        for i, (a, b) in enumerate(zip(self.c_witness, self.c_qst)):
            w.writerow([i, repr(float(a)), repr(float(b))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def efficiency_compare(config, trials: int = 100, budget: int | None = None) -> EfficiencyReport:
    """Witness scheme against QST on the distilled state at equal total pairs.

    Distillation runs at ``config.pairs_per_setting``. With an explicit
    ``budget`` the remainder is split evenly over the 28 witness settings;
    without one, the witness settings also use ``pairs_per_setting`` and QST
    gets whatever total the witness scheme consumed in that trial. QST always
    spreads its pairs evenly over its 16 settings.
    """
    from .photonsim import full_stokes_16
    from .pipeline import SETTINGS_PER_WITNESS, distillation_settings, measure_witness, run_distillation

    if trials < 1:
        raise ValueError("trials must be >= 1")
    if budget is not None and budget < MIN_BUDGET:
        raise ValueError(f"budget must be at least {MIN_BUDGET} pairs")
    rho = config.rho()
    cw, cq, ct, pw, pq = [], [], [], [], []
    for t in range(trials):
        root = config.root_rng(t)
        streams = [None] * 3 if root is None else root.spawn(3)
        dist = run_distillation(config, rho, streams[0])
        spent = distillation_settings(dist) * config.pairs_per_setting
        if budget is None:
            m_w = config.pairs_per_setting
            total = spent + SETTINGS_PER_WITNESS * m_w
        else:
            m_w = (budget - spent) // SETTINGS_PER_WITNESS
            total = budget
        if m_w < 1:
            raise ValueError("budget is exhausted by the distillation stage")
        meas = measure_witness(rho, dist.composite, m_w, streams[1], optimal=True)
        qst = full_stokes_16(rho, dist.composite, total // 16, streams[2])
        cw.append(meas.report.c_bound_dis)
        cq.append(wootters_concurrence(qst_reconstruct(qst.records)))
        ct.append(wootters_concurrence(dist.rho_dis))
        pw.append(spent + SETTINGS_PER_WITNESS * m_w)
        pq.append(16 * (total // 16))
    return EfficiencyReport(trials, budget, *(np.array(v) for v in (cw, cq, ct, pw, pq)))
