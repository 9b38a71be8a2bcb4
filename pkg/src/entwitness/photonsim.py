"""Monte Carlo model of the two-photon polarization bench.

Each detector is a waveplate pair followed by a PBS with a single counter on
the transmitted port, so one physical setting ``(a, b)`` projects photon 1 on
the Bloch direction ``a`` and photon 2 on ``b``. Per setting, ``M`` pairs are
injected and their fates drawn from one multinomial over five classes:
``(+,+), (+,-), (-,+), (-,-)`` behind both filters, or lost in a filter.

Correlation protocols use only the ``(+,+)`` coincidences, which is what a
single-output analyzer observes; flipping ``a -> -a`` and ``b -> -b`` costs
separate settings. Passing ``rng=None`` anywhere switches to exact expected
counts (the infinite-statistics limit).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .distill import BlochEstimate
from .qstate import SIGMA, StokesTensor, kron
from .slocc import CompositeArmOperator, ExtinctionError, identity_composites, waveplate_angles, analyzer_direction
from .witness import LambdaTriple, lambda_svd

PAIRS_PER_10S = 50_000
EXTINCTION_PASS = 1e-9

X, Y, Z = np.eye(3)
# analyzer directions of the 16-setting stage: D, R, H, V on each arm
STOKES16_DIRECTIONS = np.array([X, Y, Z, -Z])


def _unit3(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(3)
    n = np.linalg.norm(a)
    if abs(n - 1) > 1e-12:
        if n == 0:
            raise ValueError("analyzer direction must be nonzero")
        a = a / n
    return a


@dataclass(frozen=True)
class DetectorSetting:
    """Analyzer Bloch directions for the two arms."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _unit3(self.a))
        object.__setattr__(self, "b", _unit3(self.b))

    @classmethod
    def from_waveplates(cls, qwp1: float, hwp1: float, qwp2: float, hwp2: float) -> "DetectorSetting":
        return cls(analyzer_direction(qwp1, hwp1), analyzer_direction(qwp2, hwp2))

    def waveplates(self) -> tuple[float, float, float, float]:
        return (*waveplate_angles(self.a), *waveplate_angles(self.b))


@dataclass(frozen=True)
class CountRecord:
    setting: DetectorSetting
    M: float
    N: float
    n1: float
    n2: float
    n12: float

    def __post_init__(self):
        tol = 1e-9 * max(1.0, self.M)
        ok = (
            self.n12 >= -tol
            and self.n12 <= min(self.n1, self.n2) + tol
            and max(self.n1, self.n2) <= self.N + tol
            and self.N <= self.M + tol
        )
        if not ok:
            raise ValueError(f"inconsistent counts: M={self.M} N={self.N} n1={self.n1} n2={self.n2} n12={self.n12}")

    @property
    def duration_s(self) -> float:
        return 10.0 * self.M / PAIRS_PER_10S

    def row(self, setting_id: int) -> list:
        return [setting_id, *self.setting.a, *self.setting.b, self.M, self.N, self.n1, self.n2, self.n12]


RECORD_HEADER = ["setting_id", "a_x", "a_y", "a_z", "b_x", "b_y", "b_z", "M", "N", "n1", "n2", "n12"]


def records_to_csv(records, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for i, rec in enumerate(records):
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in rec.row(i)])
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    return buf.getvalue()


def _projector(a) -> np.ndarray:
    return (SIGMA[0] + np.einsum("k,kij->ij", a, SIGMA[1:])) / 2


def outcome_probabilities(rho, composite, a, b) -> np.ndarray:
    """Probabilities of ``(+,+), (+,-), (-,+), (-,-)`` and "filtered out"."""
    A = kron(*[c.A for c in composite])
    out = A @ np.asarray(rho) @ A.conj().T
    pa, pb = _projector(a), _projector(b)
    ma, mb = SIGMA[0] - pa, SIGMA[0] - pb
    probs = np.array([np.trace(kron(x, y) @ out).real for x in (pa, ma) for y in (pb, mb)])
    probs = np.clip(probs, 0, None)
    passed = probs.sum()
    if passed < EXTINCTION_PASS:
        raise ExtinctionError(f"pass probability {passed:.3e} below {EXTINCTION_PASS}")
    return np.append(probs, max(0.0, 1 - passed))


def measure_setting(rho, composite, setting: DetectorSetting, M: int, rng: np.random.Generator | None = None) -> CountRecord:
    probs = outcome_probabilities(rho, composite, setting.a, setting.b)
    if rng is None:
        counts = M * probs
    else:
        counts = rng.multinomial(int(M), probs / probs.sum())
    pp, pm, mp, mm, _ = counts
    N = pp + pm + mp + mm
    return CountRecord(setting, M, N, pp + pm, pp + mp, pp)


def estimate_correlation(rec: CountRecord) -> float:
    """``(4 n12 - 2 n1 - 2 n2 + N) / N``."""
    if rec.N <= 0:
        raise ValueError("no transmitted pairs")
    return float((4 * rec.n12 - 2 * rec.n1 - 2 * rec.n2 + rec.N) / rec.N)


def _children(rng, n):
    return [None] * n if rng is None else rng.spawn(n)


def estimate_local_bloch(rho, composite, arm: int, M: int, rng: np.random.Generator | None = None) -> BlochEstimate:
    """Bloch vector of one photon from three analyzer settings on that arm.

    The partner analyzer stays on H and is ignored; each component is
    ``(2 n_j - N) / N`` with a binomial standard error.
    """
    if arm not in (1, 2):
        raise ValueError("arm must be 1 or 2")
    r, sig, passed = np.zeros(3), np.zeros(3), 0.0
    for i, (axis, sub) in enumerate(zip(np.eye(3), _children(rng, 3))):
        setting = DetectorSetting(axis, Z) if arm == 1 else DetectorSetting(Z, axis)
        rec = measure_setting(rho, composite, setting, M, sub)
        if rec.N <= 0:
            raise ExtinctionError("no transmitted pairs while estimating a marginal")
        n = rec.n1 if arm == 1 else rec.n2
        r[i] = (2 * n - rec.N) / rec.N
        if rng is not None:
            sig[i] = np.sqrt(max(1 - r[i] ** 2, 1 / rec.N) / rec.N)
        passed += rec.N / rec.M
    return BlochEstimate(r, sig, passed / 3)


@dataclass(frozen=True)
class StokesEstimate:
    stokes: StokesTensor
    pass_prob: float
    records: tuple[CountRecord, ...]


def stokes16_settings() -> list[DetectorSetting]:
    return [DetectorSetting(a, b) for a in STOKES16_DIRECTIONS for b in STOKES16_DIRECTIONS]


def invert_stokes16(records) -> tuple[np.ndarray, float]:
    """Linear inversion of 16 coincidence counts on the ``{D,R,H,V}^2`` grid.

    Returns the normalized Stokes tensor and the estimated pass probability.
    """
    records = list(records)
    if len(records) != 16:
        raise ValueError(f"need 16 records, got {len(records)}")
    alpha = np.hstack([np.ones((4, 1)), STOKES16_DIRECTIONS])
    counts = np.full((4, 4), np.nan)
    for rec in records:
        i = _direction_index(rec.setting.a)
        j = _direction_index(rec.setting.b)
        if not np.isnan(counts[i, j]):
            raise ValueError("duplicate setting in the 16-setting data")
        counts[i, j] = rec.n12 / rec.M
    inv = np.linalg.inv(alpha)
    P = 4 * inv @ counts @ inv.T
    if P[0, 0] <= 0:
        raise ExtinctionError("no coincidences in the 16-setting data")
    return P / P[0, 0], float(P[0, 0])


def _direction_index(a) -> int:
    d = np.linalg.norm(STOKES16_DIRECTIONS - a, axis=1)
    i = int(np.argmin(d))
    if d[i] > 1e-9:
        raise ValueError(f"direction {a} is not in the 16-setting grid")
    return i


def full_stokes_16(rho, composite, M: int, rng: np.random.Generator | None = None) -> StokesEstimate:
    records = tuple(
        measure_setting(rho, composite, s, M, sub) for s, sub in zip(stokes16_settings(), _children(rng, 16))
    )
    S, pp = invert_stokes16(records)
    return StokesEstimate(StokesTensor(S), pp, records)


def _perturb(u, delta, rng) -> np.ndarray:
    e = rng.normal(size=3)
    e -= (e @ u) * u
    e /= np.linalg.norm(e)
    return np.cos(delta) * u + np.sin(delta) * e


def correlation_4(rho, composite, a, b, M: int, rng: np.random.Generator | None = None) -> CountRecord:
    """Correlation along ``(a, b)`` assembled from the four settings ``(+-a, +-b)``."""
    c = {}
    for (s, t), sub in zip(((1, 1), (1, -1), (-1, 1), (-1, -1)), _children(rng, 4)):
        c[s, t] = measure_setting(rho, composite, DetectorSetting(s * a, t * b), M, sub).n12
    N = sum(c.values())
    return CountRecord(DetectorSetting(a, b), 4 * M, N, c[1, 1] + c[1, -1], c[1, 1] + c[-1, 1], c[1, 1])


@dataclass(frozen=True)
class LambdaMeasurement:
    lambdas: LambdaTriple
    correlations: np.ndarray  # signed E along the three planned directions, in SVD order
    pass_prob: float
    records: tuple[CountRecord, ...]


def lambda_12(
    rho,
    composite,
    S_hat: StokesTensor,
    M: int,
    rng: np.random.Generator | None = None,
    direction_error: float = 0.0,
    error_rng: np.random.Generator | None = None,
) -> LambdaMeasurement:
    """Measure the three correlation extrema along directions planned from ``S_hat``.

    ``direction_error`` tilts each planned direction by that angle towards a
    random perpendicular axis drawn from ``error_rng``.
    """
    plan = lambda_svd(S_hat.T)
    if direction_error and error_rng is None:
        raise ValueError("direction_error needs error_rng")
    recs, E = [], np.zeros(3)
    for l, sub in zip((1, 2, 3), _children(rng, 3)):
        u, v = plan.directions(l)
        if direction_error:
            u, v = _perturb(u, direction_error, error_rng), _perturb(v, direction_error, error_rng)
        rec = correlation_4(rho, composite, u, v, M, sub)
        recs.append(rec)
        E[l - 1] = estimate_correlation(rec)
    lam = np.abs(E)
    order = np.argsort(-lam, kind="stable")
    O1 = plan.O1[:, order]
    O2 = plan.O2[:, order] * np.array([1, 1, plan.q])[order]
    # put any reflection back on the third axis so both rotations stay proper
    if np.linalg.det(O1) < 0:
        O1[:, 2] *= -1
    if np.linalg.det(O2) < 0:
        O2[:, 2] *= -1
    passed = float(np.mean([r.N / (r.M / 4) for r in recs]))
    return LambdaMeasurement(LambdaTriple(lam[order], plan.q, O1, O2), E, passed, tuple(recs))


@dataclass(frozen=True)
class ScanResult:
    l: int
    lp: int
    theta1: np.ndarray
    theta2: np.ndarray
    records: tuple[tuple[CountRecord, ...], ...]

    @property
    def n12(self) -> np.ndarray:
        return np.array([[r.n12 for r in row] for row in self.records], dtype=float)

    @property
    def E(self) -> np.ndarray:
        return np.array([[estimate_correlation(r) for r in row] for row in self.records])

    @property
    def coincidence_rate(self) -> np.ndarray:
        """``4 n12 / N - 1``: equals the correlation only when both marginals are mixed."""
        return np.array([[4 * r.n12 / r.N - 1 for r in row] for row in self.records])

    def fit(self) -> tuple[np.ndarray, float]:
        """Least-squares fit of ``c1 cos t1 cos t2 + c2 sin t1 sin t2`` to the coincidence rate.

        Returns the amplitudes and the coefficient of determination.
        """
        t1, t2 = np.meshgrid(self.theta1, self.theta2, indexing="ij")
        y = self.coincidence_rate.ravel()
        X = np.column_stack([(np.cos(t1) * np.cos(t2)).ravel(), (np.sin(t1) * np.sin(t2)).ravel()])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        ss_tot = np.sum((y - y.mean()) ** 2)
        return coef, float(1 - resid @ resid / ss_tot)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta1", "theta2", "n12", "n1", "n2", "N", "E"])
        for i, row in enumerate(self.records):
            for j, r in enumerate(row):
                vals = [self.theta1[i], self.theta2[j], r.n12, r.n1, r.n2, r.N, estimate_correlation(r)]
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in vals])
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def coincidence_scan(
    rho,
    composite,
    lam: LambdaTriple,
    l: int,
    lp: int,
    n_grid: int = 13,
    M: int = PAIRS_PER_10S,
    rng: np.random.Generator | None = None,
    theta_max: float = 2 * np.pi,
) -> ScanResult:
    """Coincidences over ``a = cos t1 u_l + sin t1 u_l'``, ``b = cos t2 v_l + sin t2 v_l'``.

    With ``u, v`` the singular directions in ``lam``, the correlation is
    ``lambda_l cos t1 cos t2 + lambda_l' sin t1 sin t2``.
    """
    if l == lp or {l, lp} - {1, 2, 3}:
        raise ValueError("l and l' must be distinct indices in {1, 2, 3}")
    ul, vl = lam.directions(l)
    ulp, vlp = lam.directions(lp)
    thetas = np.linspace(0, theta_max, n_grid)
    subs = _children(rng, n_grid * n_grid)
    rows = []
    for i, t1 in enumerate(thetas):
        a = np.cos(t1) * ul + np.sin(t1) * ulp
        row = []
        for j, t2 in enumerate(thetas):
            b = np.cos(t2) * vl + np.sin(t2) * vlp
            row.append(measure_setting(rho, composite, DetectorSetting(a, b), M, subs[i * n_grid + j]))
        rows.append(tuple(row))
    return ScanResult(l, lp, thetas, thetas.copy(), tuple(rows))


def default_composites() -> tuple[CompositeArmOperator, CompositeArmOperator]:
    return identity_composites(2)
