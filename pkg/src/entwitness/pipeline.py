"""End-to-end simulated experiment: distill, plan settings, measure lambdas, report.

Every random draw comes from a child stream of one ``SeedSequence`` built from
the configured seed, spawned in a fixed order, so identical configurations
reproduce identical counts.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .distill import DistillationResult, composites_at, distill_iterate_sampled
from .oracle import qst_reconstruct, wootters_concurrence
from .photonsim import (
    PAIRS_PER_10S,
    LambdaMeasurement,
    ScanResult,
    StokesEstimate,
    coincidence_scan,
    estimate_local_bloch,
    full_stokes_16,
    lambda_12,
)
from .qstate import parse_state
from .slocc import apply_local, identity_composites
from .witness import WitnessReport, witness_value

SETTINGS_PER_MARGINAL = 3
SETTINGS_PER_WITNESS = 16 + 12


@dataclass(frozen=True)
class ExperimentConfig:
    state: str = "decohered-demo"
    pairs_per_setting: int = PAIRS_PER_10S
    seed: int = 7
    filter_phase_imperfection: float = 0.0
    tol_dop: float | None = None  # None: 0.1 with shot noise, 1e-8 noiseless
    max_steps: int = 50
    noiseless: bool = False

    def __post_init__(self):
        if self.pairs_per_setting < 1:
            raise ValueError("pairs_per_setting must be >= 1")
        if self.tol_dop is not None and self.tol_dop <= 0:
            raise ValueError("tol_dop must be positive")
        parse_state(self.state)

    @property
    def stopping_tol(self) -> float:
        if self.tol_dop is not None:
            return self.tol_dop
        return 1e-8 if self.noiseless else 0.1

    def rho(self) -> np.ndarray:
        return parse_state(self.state)

    def root_rng(self, *keys: int) -> np.random.Generator | None:
        if self.noiseless:
            return None
        return np.random.default_rng(np.random.SeedSequence([self.seed, *keys]))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        """Build a config from string key/value pairs (config files, CLI overrides)."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        out = {}
        for key, raw in data.items():
            key = key.strip().replace("-", "_")
            if key not in kinds:
                raise ValueError(f"unknown config key {key!r}")
            if raw is None:
                continue
            kind = kinds[key]
            if isinstance(raw, str):
                raw = raw.strip()
            if "bool" in kind:
                val = raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes", "on")
            elif "int" in kind:
                val = int(float(raw))
            elif "float" in kind:
                val = None if str(raw).lower() == "none" else float(raw)
            else:
                val = str(raw)
            out[key] = val
        return cls(**out)


def _child(rng):
    return None if rng is None else rng.spawn(1)[0]


@dataclass(frozen=True)
class WitnessMeasurement:
    report: WitnessReport
    stokes: StokesEstimate
    lambdas: LambdaMeasurement

    @property
    def settings(self) -> int:
        return SETTINGS_PER_WITNESS


def measure_witness(rho, composite, M: int, rng=None, optimal: bool = False, direction_error: float = 0.0, error_rng=None):
    """16 settings to plan, 12 to measure the lambdas, then the witness value."""
    s_est = full_stokes_16(rho, composite, M, _child(rng))
    lm = lambda_12(rho, composite, s_est.stokes, M, _child(rng), direction_error, error_rng)
    # the zz block of the 16 settings and each lambda block are complete +-/+- sets of M pairs
    pass_prob = (s_est.pass_prob + 3 * lm.pass_prob) / 4
    s0 = pass_prob / math.sqrt(composite[0].p_eff * composite[1].p_eff)
    return WitnessMeasurement(witness_value(lm.lambdas, s0, optimal), s_est, lm)


@dataclass(frozen=True)
class StepReport:
    k: int
    measurement: WitnessMeasurement
    c_oracle: float  # concurrence of the source state
    c_dis_oracle: float  # concurrence of the filtered state at step k
    c_dis_qst: float  # tomographic estimate from the same 16 settings

    def to_dict(self) -> dict:
        rep = self.measurement.report
        return {
            "k": self.k,
            "neg2trW": -2 * rep.trW,
            "neg2trW_dis": -2 * rep.trW_dis,
            "c_oracle": self.c_oracle,
            "c_dis_oracle": self.c_dis_oracle,
            "c_dis_qst": self.c_dis_qst,
            **rep.to_dict(),
        }


@dataclass(frozen=True)
class PipelineResult:
    config: ExperimentConfig
    distillation: DistillationResult
    steps: tuple[StepReport, ...]
    c_oracle: float
    settings_used: int
    notes: tuple[str, ...] = field(default=())

    @property
    def final(self) -> StepReport:
        return self.steps[-1]

    @property
    def pairs_used(self) -> int:
        return self.settings_used * self.config.pairs_per_setting

    def witness_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "c_oracle": self.c_oracle,
            "converged": self.distillation.converged,
            "noise_limited": self.distillation.noise_limited,
            "stop_step": self.distillation.steps_taken,
            "settings_used": self.settings_used,
            "steps": [s.to_dict() for s in self.steps],
            "final": self.final.to_dict(),
        }


def run_distillation(config: ExperimentConfig, rho=None, rng=None) -> DistillationResult:
    rho = config.rho() if rho is None else rho
    M = config.pairs_per_setting

    def estimator(composites, arm):
        return estimate_local_bloch(rho, composites, arm, M, _child(rng))

    return distill_iterate_sampled(
        estimator,
        tol_dop=config.stopping_tol,
        max_steps=config.max_steps,
        phase=config.filter_phase_imperfection,
        true_state=rho,
    )


def distillation_settings(result: DistillationResult) -> int:
    return 2 * SETTINGS_PER_MARGINAL * len(result.trace)


def run_experiment(config: ExperimentConfig, every_step: bool = True) -> PipelineResult:
    """Full simulated run; with ``every_step`` the witness is measured after each filter step."""
    rho = config.rho()
    root = config.root_rng()
    dist = run_distillation(config, rho, _child(root))
    settings = distillation_settings(dist)
    c_true = wootters_concurrence(rho)
    ks = range(len(dist.trace)) if every_step else [len(dist.trace) - 1]
    steps = []
    for k in ks:
        comp = composites_at(dist.trace, k)
        step = dist.trace[k]
        optimal = max(step.dops) <= config.stopping_tol
        meas = measure_witness(rho, comp, config.pairs_per_setting, _child(root), optimal)
        settings += SETTINGS_PER_WITNESS
        filtered = apply_local(rho, comp)
        steps.append(
            StepReport(
                k=k,
                measurement=meas,
                c_oracle=c_true,
                c_dis_oracle=wootters_concurrence(filtered / np.trace(filtered).real),
                c_dis_qst=wootters_concurrence(qst_reconstruct(meas.stokes.records)),
            )
        )
    return PipelineResult(config, dist, tuple(steps), c_true, settings)


def run_scans(config: ExperimentConfig, l: int = 1, lp: int = 2, n_grid: int = 13) -> dict[str, ScanResult]:
    """Coincidence scans of the unfiltered (``"k0"``) and distilled (``"dis"``) source.

    Each scan runs along singular directions planned from its own measured
    16-setting data, as on the bench.
    """
    rho = config.rho()
    root = config.root_rng()
    streams = [None] * 3 if root is None else root.spawn(3)
    dist = run_distillation(config, rho, streams[0])
    M = config.pairs_per_setting
    out = {}
    for tag, comp, rng in (("k0", identity_composites(2), streams[1]), ("dis", dist.composite, streams[2])):
        s_plan, s_lam, s_scan = [None] * 3 if rng is None else rng.spawn(3)
        stokes = full_stokes_16(rho, comp, M, s_plan)
        lam = lambda_12(rho, comp, stokes.stokes, M, s_lam).lambdas
        out[tag] = coincidence_scan(rho, comp, lam, l, lp, n_grid, M, s_scan)
    return out
