"""Command-line driver that writes plot-ready CSV/JSON artifacts.

Exit codes: 0 success, 2 configuration error, 3 extinction or non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .distill import DistillationResult
from .oracle import efficiency_compare, qst_reconstruct, wootters_concurrence
from .photonsim import full_stokes_16
from .pipeline import ExperimentConfig, run_distillation, run_experiment, run_scans
from .qstate import InvalidStateError, fidelity, n_qubits
from .slocc import ExtinctionError, identity_composites

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EXTINCTION = 3


class NotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunManifest:
    config: ExperimentConfig
    outputs: tuple[tuple[str, str], ...]  # (file name, sha256)
    version: str = __version__
    extra: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "version": self.version,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "outputs": [{"path": p, "sha256": h} for p, h in self.outputs],
        }
        if self.extra:
            d["extra"] = self.extra
        return d

    def verify(self, out_dir) -> bool:
        return all(sha256(Path(out_dir) / p) == h for p, h in self.outputs)


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _finish(config, out_dir: Path, files, extra=None) -> RunManifest:
    man = RunManifest(config, tuple((f, sha256(out_dir / f)) for f in files), extra=extra)
    _dump_json(man.to_dict(), out_dir / "manifest.json")
    return man


def _check_convergence(dist: DistillationResult):
    if not dist.converged:
        raise NotConvergedError(
            f"DOP still {max(dist.trace[-1].dops):.3g} after {dist.steps_taken} steps"
            + (" (shot-noise limited)" if dist.noise_limited else "")
        )


def cmd_distill(config: ExperimentConfig, out_dir: Path, args=None) -> None:
    dist = run_distillation(config, rng=config.root_rng())
    dist.trace.to_csv(out_dir / "trace.csv")
    _finish(config, out_dir, ["trace.csv"])
    _check_convergence(dist)


def _run_and_write(config, out_dir, every_step):
    res = run_experiment(config, every_step=every_step)
    res.distillation.trace.to_csv(out_dir / "trace.csv")
    _dump_json(res.witness_dict(), out_dir / "witness.json")
    _finish(config, out_dir, ["trace.csv", "witness.json"])
    _check_convergence(res.distillation)
    return res


def cmd_demo(config: ExperimentConfig, out_dir: Path, args=None):
    return _run_and_write(config, out_dir, every_step=True)


def cmd_witness(config: ExperimentConfig, out_dir: Path, args=None):
    return _run_and_write(config, out_dir, every_step=False)


def cmd_scan(config: ExperimentConfig, out_dir: Path, args) -> None:
    """Scans before filtering (k = 0) and after distillation, each along its own singular axes."""
    files, fits = [], {}
    for tag, scan in run_scans(config, args.l, args.lp, args.grid).items():
        name = f"scan_{tag}_l{args.l}{args.lp}.csv"
        scan.to_csv(out_dir / name)
        coef, r2 = scan.fit()
        fits[tag] = {"amplitudes": [float(c) for c in coef], "r2": r2}
        files.append(name)
    _dump_json(fits, out_dir / "scan_fit.json")
    _finish(config, out_dir, files + ["scan_fit.json"])


def cmd_compare(config: ExperimentConfig, out_dir: Path, args) -> None:
    rep = efficiency_compare(config, trials=args.trials, budget=args.budget)
    rep.to_json(out_dir / "efficiency.json")
    rep.to_csv(out_dir / "efficiency_trials.csv")
    _finish(config, out_dir, ["efficiency.json", "efficiency_trials.csv"])


def cmd_oracle(config: ExperimentConfig, out_dir: Path, args=None) -> None:
    """Ground truth for the configured state next to a 16-setting tomography estimate."""
    rho = config.rho()
    st = full_stokes_16(rho, identity_composites(2), config.pairs_per_setting, config.root_rng())
    rec = qst_reconstruct(st.records)
    out = {
        "concurrence": wootters_concurrence(rho),
        "concurrence_qst": wootters_concurrence(rec),
        "fidelity_qst": fidelity(rho, rec),
        "rho_real": np.real(rho).tolist(),
        "rho_imag": np.imag(rho).tolist(),
    }
    _dump_json(out, out_dir / "oracle.json")
    _finish(config, out_dir, ["oracle.json"])


COMMANDS = {
    "demo": cmd_demo,
    "distill": cmd_distill,
    "witness": cmd_witness,
    "scan": cmd_scan,
    "compare": cmd_compare,
    "oracle": cmd_oracle,
}


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string("[run]\n" + Path(path).read_text())
    return dict(parser["run"])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--state", help="state literal, e.g. decohered-demo, werner:0.8, singlet")
    common.add_argument("--seed", type=int)
    common.add_argument("--pairs-per-setting", type=int)
    common.add_argument("--noiseless", action="store_true", default=None, help="exact expected counts")
    common.add_argument("--tol-dop", type=float)
    common.add_argument("--max-steps", type=int)
    common.add_argument("--filter-phase-imperfection", type=float)
    common.add_argument("--out-dir", default=".", help="directory for outputs (created if missing)")

    p = argparse.ArgumentParser(prog="entwitness", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("demo", "distill", "witness", "oracle"):
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__ and COMMANDS[name].__doc__.splitlines()[0])
    s = sub.add_parser("scan", parents=[common])
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--lp", type=int, default=2)
    s.add_argument("--grid", type=int, default=13)
    c = sub.add_parser("compare", parents=[common])
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--budget", type=int, default=None, help="total pairs per scheme (default: matched per trial)")
    return p


def config_from_args(args) -> ExperimentConfig:
    data = read_config_file(args.config) if args.config else {}
    for key in ("state", "seed", "pairs_per_setting", "noiseless", "tol_dop", "max_steps", "filter_phase_imperfection"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_mapping(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if n_qubits(config.rho()) != 2:
            raise ValueError(f"{args.command} needs a two-qubit state")
        if args.command == "scan" and (args.grid < 2 or {args.l, args.lp} - {1, 2, 3} or args.l == args.lp):
            raise ValueError("scan needs distinct l, l' in {1, 2, 3} and grid >= 2")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](config, out_dir, args)
    except (ExtinctionError, NotConvergedError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXTINCTION
    except InvalidStateError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
