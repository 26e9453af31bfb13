"""Experiment runner: JSON config in, JSON/CSV artifacts out.

Subcommands: run, sweep, correlate, effective, validate.  Exit codes:
0 success, 1 configuration problem, 2 numerical breakdown.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import AnsatzSpec, ansatz_from_json, builtin_ansatz
from .driver import VagtConfig, VagtResult, run as run_vagt
from .effective import (LowEnergyProjector, correlation, default_correlation_times,
                        default_fidelity_times, extract_heff, fidelities)
from .errors import ConfigError, NumericalBreakdownError, VagtError
from .estimator import EstimatorStrategy
from .models import HamiltonianPair, build_model, magnetization_sectors
from .oracle import eig
from .pauli import PauliString
from .validation import run_validation

_KNOWN_OUTPUTS = ("htilde-matrix", "energy-levels", "heff", "fidelities",
                  "correlations", "step-dumps")


@dataclass
class RunConfig:
    model_name: str
    model_params: dict
    lam: float
    n_steps: int
    ansatz: str | dict
    strategy: str
    outputs: list[str] = field(default_factory=list)
    seed: int = 0
    out_dir: str = "out"
    threads: int = 1
    sweep_points: int = 51
    projector: dict | None = None
    fidelity_states: int = 20

    _REQUIRED = ("model", "lambda", "T", "ansatz", "strategy")

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as err:
            raise ConfigError(f"malformed JSON in {path} at line {err.lineno}, column {err.colno}: {err.msg}")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {"model", "lambda", "T", "ansatz", "strategy", "outputs", "seed",
                 "out_dir", "threads", "sweep_points", "projector", "fidelity_states"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        missing = [key for key in cls._REQUIRED if key not in raw]
        if missing:
            raise ConfigError(f"missing config fields: {missing}")
        model = dict(raw["model"])
        name = model.pop("name", None)
        if name is None:
            raise ConfigError("model.name is required")
        outputs = list(raw.get("outputs", []))
        bad = [o for o in outputs if o not in _KNOWN_OUTPUTS]
        if bad:
            raise ConfigError(f"unknown outputs {bad}; choose from {_KNOWN_OUTPUTS}")
        return cls(
            model_name=name,
            model_params=model,
            lam=float(raw["lambda"]),
            n_steps=int(raw["T"]),
            ansatz=raw["ansatz"],
            strategy=raw["strategy"],
            outputs=outputs,
            seed=int(raw.get("seed", 0)),
            out_dir=raw.get("out_dir", "out"),
            threads=int(raw.get("threads", 0) or 0),
            sweep_points=int(raw.get("sweep_points", 51)),
            projector=raw.get("projector"),
            fidelity_states=int(raw.get("fidelity_states", 20)),
        )

    def resolved(self) -> dict:
        """Full configuration with defaults materialized, echoed into results."""
        return {
            "model": {"name": self.model_name, **self.model_params},
            "lambda": self.lam,
            "T": self.n_steps,
            "ansatz": self.ansatz if isinstance(self.ansatz, str) else "inline",
            "strategy": self.strategy,
            "outputs": self.outputs,
            "seed": self.seed,
            "threads": self.threads,
            "sweep_points": self.sweep_points,
            "projector": self.projector,
            "fidelity_states": self.fidelity_states,
        }


def _build_pair(cfg: RunConfig) -> HamiltonianPair:
    return build_model(cfg.model_name, cfg.model_params, cfg.lam)


def _build_spec(cfg: RunConfig, pair: HamiltonianPair) -> AnsatzSpec:
    if isinstance(cfg.ansatz, str):
        spec = builtin_ansatz(cfg.ansatz)
    else:
        spec = ansatz_from_json(cfg.ansatz)
    if spec.n_qubits != pair.n_qubits:
        raise ConfigError(f"ansatz acts on {spec.n_qubits} qubits, model on {pair.n_qubits}")
    if not spec.has_u0 and pair.u0_dense is not None:
        spec = spec.with_u0_dense(pair.u0_dense)
    return spec


def _default_projector(cfg: RunConfig, pair: HamiltonianPair) -> LowEnergyProjector:
    if cfg.projector is not None:
        return LowEnergyProjector(pair.n_qubits, tuple(cfg.projector["effective"]),
                                  int(cfg.projector.get("pinned", 0)))
    if cfg.model_name == "low_energy":
        return LowEnergyProjector(pair.n_qubits, (0, 1), 0)
    raise ConfigError("this model needs an explicit 'projector' config entry")


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _emit_energy_levels(cfg: RunConfig, pair: HamiltonianPair, out: Path):
    grid = np.linspace(0.0, cfg.lam, cfg.sweep_points)
    rows = []
    for mu in grid:
        values, _ = eig(pair.dense(float(mu)))
        rows.append([f"{mu!r}"] + [f"{v!r}" for v in values])
    dim = 2 ** pair.n_qubits
    _write_csv(out / "energy_levels.csv", ["mu"] + [f"e_{i + 1}" for i in range(dim)], rows)


def _emit_htilde(result: VagtResult, pair: HamiltonianPair, out: Path):
    h_abs = np.abs(result.h_tilde_dense)
    dim = h_abs.shape[0]
    header = ["row"] + [f"c{j}" for j in range(dim)]
    _write_csv(out / "htilde_abs.csv", header,
               [[i] + [f"{v!r}" for v in h_abs[i]] for i in range(dim)])
    if pair.u0_dense is not None:
        mag = pair.u0_dense @ result.h_tilde_dense @ pair.u0_dense.conj().T
        _write_csv(out / "htilde_mag_abs.csv", header,
                   [[i] + [f"{v!r}" for v in np.abs(mag[i])] for i in range(dim)])


def _emit_heff(cfg, result, pair, out: Path):
    projector = _default_projector(cfg, pair)
    heff = extract_heff(result, projector, "analytic")
    payload = {
        "n_effective": heff.n_qubits,
        "effective_qubits": list(projector.effective),
        "pinned_state": projector.pinned,
        "coefficients": {s.label: c.real for s, c in heff.terms.items()},
        "pauli": heff.terms.to_text(),
    }
    _write_json(out / "heff.json", payload)
    return heff, projector


def _emit_fidelities(cfg, pair, heff, projector, out: Path):
    series = fidelities(pair, heff, projector, times=default_fidelity_times(),
                        n_states=cfg.fidelity_states, seed=cfg.seed)
    summary = series.summary()
    for name in ("f1", "f2"):
        mean, lo, hi = summary[name]
        _write_csv(out / f"fidelity_{name}.csv", ["t", "mean", "ci_low", "ci_high"],
                   [[f"{t!r}", f"{m!r}", f"{a!r}", f"{b!r}"]
                    for t, m, a, b in zip(series.times, mean, lo, hi)])


def _emit_correlations(pair, result, out: Path):
    times = default_correlation_times()
    _, c_x, info = correlation(pair, result, "x", times)
    _, c_z, _ = correlation(pair, result, "z", times)
    _write_csv(out / "correlations.csv", ["t", "C_x", "C_z"],
               [[f"{t!r}", f"{x!r}", f"{z!r}"] for t, x, z in zip(times, c_x, c_z)])
    _write_json(out / "correlations_meta.json", info)


def _resolve_threads(cfg: RunConfig, args) -> int:
    if args.threads:
        return args.threads
    if cfg.threads:
        return cfg.threads
    return int(os.environ.get("VAGT_THREADS", "1"))


def _prepare(args) -> tuple[RunConfig, HamiltonianPair, AnsatzSpec, VagtConfig, Path]:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.strategy is not None:
        cfg.strategy = args.strategy
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.threads = _resolve_threads(cfg, args)
    pair = _build_pair(cfg)
    spec = _build_spec(cfg, pair)
    strategy = EstimatorStrategy.parse(cfg.strategy)
    vagt_cfg = VagtConfig(pair, spec, cfg.n_steps, strategy=strategy, lam=cfg.lam,
                          seed=cfg.seed, threads=cfg.threads,
                          keep_steps="step-dumps" in cfg.outputs)
    return cfg, pair, spec, vagt_cfg, Path(cfg.out_dir)


def cmd_run(args) -> int:
    cfg, pair, spec, vagt_cfg, out = _prepare(args)
    result = run_vagt(vagt_cfg)
    payload = result.to_json()
    payload["config"] = cfg.resolved()
    _write_json(out / "result.json", payload)
    if "step-dumps" in cfg.outputs:
        with open(out / "steps.jsonl", "w") as fh:
            for step in result.steps:
                fh.write(json.dumps(step.to_json(), sort_keys=True) + "\n")
    if "htilde-matrix" in cfg.outputs:
        _emit_htilde(result, pair, out)
    if "energy-levels" in cfg.outputs:
        _emit_energy_levels(cfg, pair, out)
    heff = projector = None
    if "heff" in cfg.outputs or "fidelities" in cfg.outputs:
        heff, projector = _emit_heff(cfg, result, pair, out)
    if "fidelities" in cfg.outputs:
        _emit_fidelities(cfg, pair, heff, projector, out)
    if "correlations" in cfg.outputs:
        _emit_correlations(pair, result, out)
    print(f"run complete: {out / 'result.json'} (wall {result.wall_clock:.2f}s, "
          f"backend {_backend()})", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg, pair, _, _, out = _prepare(args)
    grid = np.linspace(0.0, cfg.lam, cfg.sweep_points)
    if not np.all(np.diff(grid) > 0):
        raise ConfigError("sweep grid must be strictly increasing")
    _emit_energy_levels(cfg, pair, out)
    print(f"sweep complete: {out / 'energy_levels.csv'}", file=sys.stderr)
    return 0


def cmd_correlate(args) -> int:
    cfg, pair, spec, vagt_cfg, out = _prepare(args)
    result = run_vagt(vagt_cfg)
    _emit_correlations(pair, result, out)
    print(f"correlations written under {out}", file=sys.stderr)
    return 0


def cmd_effective(args) -> int:
    cfg, pair, spec, vagt_cfg, out = _prepare(args)
    result = run_vagt(vagt_cfg)
    heff, projector = _emit_heff(cfg, result, pair, out)
    if "fidelities" in cfg.outputs:
        _emit_fidelities(cfg, pair, heff, projector, out)
    print(f"effective Hamiltonian written to {out / 'heff.json'}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    results = run_validation(seed=args.seed if args.seed is not None else 0)
    failed = 0
    for name, worst, passed in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name:32s} worst error {worst:.3e}")
        failed += 0 if passed else 1
    return 0 if failed == 0 else 1


def _backend() -> str:
    from . import kernels
    return kernels.backend_name()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vagt",
                                     description="variational adiabatic gauge transformation runner")
    parser.add_argument("--version", action="version", version=f"vagt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (
        ("run", cmd_run, True),
        ("sweep", cmd_sweep, True),
        ("correlate", cmd_correlate, True),
        ("effective", cmd_effective, True),
        ("validate", cmd_validate, False),
    ):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="path to a JSON run configuration")
            p.add_argument("--out", default=None, help="output directory (overrides config)")
            p.add_argument("--strategy", default=None,
                           help="estimator strategy override, e.g. analytic or circuit-shots:100:7")
            p.add_argument("--threads", type=int, default=0,
                           help="worker cap for circuit evaluation (VAGT_THREADS as fallback)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except NumericalBreakdownError as err:
        print(f"numerical breakdown: {err}", file=sys.stderr)
        return 2
    except VagtError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
