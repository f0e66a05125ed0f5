"""Command-line entry point.

Subcommands: run (integrate one problem), certify (descent and
projected-system identity sweeps), counterexample (mode-switch
discontinuity witness on the built-in 1-d problem), continuity
(initial-condition perturbation sweep).  Exit codes: 0 pass, 1 fail,
2 usage or parse error.

All scenario pass thresholds live in SCENARIO_THRESHOLDS; randomness is
always seeded and the seed is recorded in every result.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from pdflow import analysis, problems
from pdflow.dynamics import GainMatrices
from pdflow.exceptions import (
    DimensionMismatchError,
    DomainError,
    IntegrationError,
    PdflowError,
    ValidationError,
    WitnessSearchError,
)
from pdflow.integrator import IntegratorConfig, integrate, write_trajectory_csv
from pdflow.problem_model import (
    ConcaveProgram,
    PrimalDualPoint,
    SaddlePoint,
    load_problem,
)

SCENARIO_THRESHOLDS = {
    # run passes when the final KKT residual certifies an approximate optimizer
    "run.kkt_pass_tol": 1e-6,
    # certify: max Lie derivative allowed over the sweep (float roundoff slack)
    # and the sublevel-set size sampled around the saddle
    "certify.lie_tol": 1e-12,
    "certify.v_max": 100.0,
    # counterexample: witness pair must be this close while its continuous
    # trajectories stay within the sup bound; switch counts must be 0 vs 2
    "counterexample.max_pair_distance": 1e-2,
    "counterexample.max_sup_distance": 0.1,
    # continuity: sup distances nonincreasing, final below factor * delta
    "continuity.factor": 10.0,
}


@dataclass
class ScenarioResult:
    scenario_name: str
    passed: bool
    metrics: dict
    artifact_paths: list = field(default_factory=list)
    seed: Optional[int] = None
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "scenario_name": self.scenario_name,
            "pass": self.passed,
            "metrics": self.metrics,
            "artifact_paths": [str(p) for p in self.artifact_paths],
            "seed": self.seed,
            "note": self.note,
        }


def _write_json(data: dict, path: Path):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_floats(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as exc:
        raise ValidationError(f"cannot parse --{name} {text!r}: {exc}") from exc


def _parse_gains(text: str, n: int, m: int) -> GainMatrices:
    vals = _parse_floats(text, "gains")
    if vals.shape[0] != n + m:
        raise ValidationError(
            f"--gains needs n + m = {n + m} values (K1 diagonal then K2 "
            f"diagonal), got {vals.shape[0]}"
        )
    return GainMatrices(vals[:n], vals[n:])


def _initial_point(prog: ConcaveProgram, x0: str, lambda0: str) -> PrimalDualPoint:
    x = _parse_floats(x0, "x0")
    lam = _parse_floats(lambda0, "lambda0") if lambda0 else np.zeros(prog.m)
    if x.shape[0] != prog.n:
        raise DimensionMismatchError("x0", f"length {prog.n}", f"length {x.shape[0]}")
    if lam.shape[0] != prog.m:
        raise DimensionMismatchError(
            "lambda0", f"length {prog.m}", f"length {lam.shape[0]}"
        )
    p = PrimalDualPoint(x, lam)
    p.require_in_domain()
    return p


def cmd_run(
    prog: ConcaveProgram,
    p0: PrimalDualPoint,
    cfg: IntegratorConfig,
    gains: Optional[GainMatrices],
    out_dir: Path,
    seed: int,
) -> ScenarioResult:
    traj = integrate(prog, p0, cfg, gains=gains)
    report = analysis.kkt_residual(prog, traj.final_point())

    metrics = {f"final_kkt_{k}": v for k, v in report.as_dict().items()}
    metrics["n_recorded"] = len(traj)
    metrics["t_final"] = float(traj.times[-1])
    final = traj.final_point()
    for i, v in enumerate(final.x):
        metrics[f"final_x_{i}"] = float(v)
    for j, v in enumerate(final.lam):
        metrics[f"final_lambda_{j}"] = float(v)
    note = f"terminated_by={traj.terminated_by}"
    try:
        omega = analysis.estimate_omega_limit(traj)
        metrics["tail_radius"] = omega.tail_radius
        for i, v in enumerate(omega.point.x):
            metrics[f"omega_x_{i}"] = float(v)
        for j, v in enumerate(omega.point.lam):
            metrics[f"omega_lambda_{j}"] = float(v)
    except ValidationError:
        note += "; trajectory too short for an omega-limit estimate"

    passed = report.total <= SCENARIO_THRESHOLDS["run.kkt_pass_tol"]
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trajectory.csv"
    write_trajectory_csv(traj, csv_path)
    result = ScenarioResult(
        scenario_name="run",
        passed=bool(passed),
        metrics=metrics,
        artifact_paths=[csv_path],
        seed=seed,
        note=note,
    )
    summary_path = out_dir / "summary.json"
    _write_json(result.as_dict(), summary_path)
    result.artifact_paths.append(summary_path)
    return result


def cmd_certify(
    prog: ConcaveProgram,
    saddle: SaddlePoint,
    samples: int,
    seed: int,
    out_dir: Optional[Path] = None,
) -> ScenarioResult:
    if samples <= 0:
        raise ValidationError(
            f"--samples must be positive (a sweep over {samples} points would "
            "pass vacuously)"
        )
    lie_tol = SCENARIO_THRESHOLDS["certify.lie_tol"]
    rng = np.random.default_rng(seed)
    lie_values = analysis.lie_derivative_sweep(
        prog, saddle, rng, n_samples=samples,
        v_max=SCENARIO_THRESHOLDS["certify.v_max"],
    )
    identity_violations = analysis.projection_identity_sweep(
        prog, rng, n_samples=samples
    )
    lie_max = float(lie_values.max())
    lie_violations = int(np.sum(lie_values > lie_tol))
    passed = lie_max <= lie_tol and identity_violations == 0
    result = ScenarioResult(
        scenario_name="certify",
        passed=bool(passed),
        metrics={
            "samples": samples,
            "lie_max": lie_max,
            "lie_violations": lie_violations,
            "identity_violations": identity_violations,
        },
        seed=seed,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        summary_path = out_dir / "summary.json"
        _write_json(result.as_dict(), summary_path)
        result.artifact_paths.append(summary_path)
    return result


def cmd_counterexample(
    T: float, out_dir: Path, cfg: IntegratorConfig, seed: int
) -> ScenarioResult:
    prog, _ = problems.interval_qp()
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        witness = analysis.counterexample_witness(prog, T=T, cfg=cfg)
    except WitnessSearchError as exc:
        result = ScenarioResult(
            scenario_name="counterexample",
            passed=False,
            metrics={"T": T},
            seed=seed,
            note=str(exc),
        )
        summary_path = out_dir / "summary.json"
        _write_json(result.as_dict(), summary_path)
        result.artifact_paths.append(summary_path)
        return result

    pair_distance = float(
        np.linalg.norm(witness.p_base.as_vector() - witness.p_pert.as_vector())
    )
    passed = (
        witness.trace_base.n_switches == 0
        and witness.trace_pert.n_switches == 2
        and witness.sup_distance < SCENARIO_THRESHOLDS["counterexample.max_sup_distance"]
        and pair_distance <= SCENARIO_THRESHOLDS["counterexample.max_pair_distance"]
    )
    base_csv = out_dir / "base_trajectory.csv"
    pert_csv = out_dir / "perturbed_trajectory.csv"
    write_trajectory_csv(witness.traj_base, base_csv)
    write_trajectory_csv(witness.traj_pert, pert_csv)
    traces_path = out_dir / "mode_traces.json"
    _write_json(
        {
            "base": witness.trace_base.as_dict(),
            "perturbed": witness.trace_pert.as_dict(),
        },
        traces_path,
    )
    result = ScenarioResult(
        scenario_name="counterexample",
        passed=bool(passed),
        metrics={
            "T": T,
            "pair_distance": pair_distance,
            "sup_distance": witness.sup_distance,
            "base_switches": witness.trace_base.n_switches,
            "pert_switches": witness.trace_pert.n_switches,
            "base_x0": float(witness.p_base.x[0]),
            "base_lambda0": float(witness.p_base.lam[0]),
            "pert_x0": float(witness.p_pert.x[0]),
            "pert_lambda0": float(witness.p_pert.lam[0]),
        },
        artifact_paths=[base_csv, pert_csv, traces_path],
        seed=seed,
    )
    summary_path = out_dir / "summary.json"
    _write_json(result.as_dict(), summary_path)
    result.artifact_paths.append(summary_path)
    return result


def cmd_continuity(
    prog: ConcaveProgram,
    p0: PrimalDualPoint,
    direction: np.ndarray,
    k_max: int,
    T: float,
    cfg: IntegratorConfig,
    out_dir: Path,
    seed: int,
) -> ScenarioResult:
    rows = analysis.continuity_experiment(prog, p0, direction, k_max, T, cfg)
    if not rows:
        raise ValidationError("every perturbation left the domain; nothing to test")
    sups = [s for (_, s) in rows]
    deltas = [dlt for (dlt, _) in rows]
    nonincreasing = all(sups[i + 1] <= sups[i] for i in range(len(sups) - 1))
    factor = SCENARIO_THRESHOLDS["continuity.factor"]
    final_ok = sups[-1] < factor * deltas[-1] or sups[-1] == 0.0
    passed = nonincreasing and final_ok
    note = ""
    if k_max == 1:
        note = "insufficient depth: a single perturbation level cannot show decay"

    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "continuity_table.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "sup_distance"])
        for dlt, sup in rows:
            writer.writerow([repr(dlt), repr(sup)])
    result = ScenarioResult(
        scenario_name="continuity",
        passed=bool(passed),
        metrics={
            "k_max": k_max,
            "T": T,
            "levels_run": len(rows),
            "final_delta": deltas[-1],
            "final_sup_distance": sups[-1],
            "nonincreasing": int(nonincreasing),
        },
        artifact_paths=[table_path],
        seed=seed,
        note=note,
    )
    summary_path = out_dir / "summary.json"
    _write_json(result.as_dict(), summary_path)
    result.artifact_paths.append(summary_path)
    return result


def _add_common_flags(sub):
    sub.add_argument("--scheme", choices=["euler", "rk4"], default="euler")
    sub.add_argument("--h", type=float, default=1e-3, help="step size")
    sub.add_argument("--T", type=float, default=None, help="horizon")
    sub.add_argument("--kkt-tol", type=float, default=1e-8,
                     help="early-stop KKT tolerance (0 disables)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default="pdflow-out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdflow",
        description="Projected primal-dual gradient flow: integrate, certify, "
        "and reproduce the mode-switch discontinuity experiment.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="integrate a problem from a start point")
    run.add_argument("--problem", required=True, help="problem JSON file")
    run.add_argument("--x0", required=True, help="comma-separated primal start")
    run.add_argument("--lambda0", default="", help="comma-separated multiplier start")
    run.add_argument("--gains", default="", help="K1 then K2 diagonals, n+m values")
    _add_common_flags(run)

    cert = subs.add_parser("certify", help="descent and identity sweeps")
    cert.add_argument("--problem", required=True)
    cert.add_argument("--saddle", default="",
                      help="reference optimizer, n+m comma-separated values")
    cert.add_argument("--samples", type=int, default=10_000)
    _add_common_flags(cert)

    ce = subs.add_parser("counterexample",
                         help="mode-switch discontinuity witness (built-in problem)")
    _add_common_flags(ce)

    cont = subs.add_parser("continuity", help="initial-condition continuity sweep")
    cont.add_argument("--problem", required=True)
    cont.add_argument("--x0", required=True)
    cont.add_argument("--lambda0", default="")
    cont.add_argument("--direction", required=True,
                      help="perturbation direction, n+m comma-separated values")
    cont.add_argument("--k-max", type=int, default=8)
    _add_common_flags(cont)

    return parser


def _make_cfg(args, default_T: float) -> IntegratorConfig:
    T = args.T if args.T is not None else default_T
    return IntegratorConfig(
        scheme=args.scheme, step_h=args.h, horizon_T=T, stop_kkt_tol=args.kkt_tol
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out)
    try:
        if args.command == "run":
            prog = load_problem(args.problem)
            p0 = _initial_point(prog, args.x0, args.lambda0)
            gains = _parse_gains(args.gains, prog.n, prog.m) if args.gains else None
            cfg = _make_cfg(args, default_T=50.0)
            result = cmd_run(prog, p0, cfg, gains, out_dir, args.seed)
        elif args.command == "certify":
            prog = load_problem(args.problem)
            if not args.saddle:
                raise ValidationError(
                    "certification needs a reference optimizer: run "
                    "`pdflow run` first to locate one, then pass it as "
                    "--saddle x...,lambda..."
                )
            vals = _parse_floats(args.saddle, "saddle")
            if vals.shape[0] != prog.n + prog.m:
                raise ValidationError(
                    f"--saddle needs n + m = {prog.n + prog.m} values, got "
                    f"{vals.shape[0]}"
                )
            saddle = SaddlePoint(vals[: prog.n], vals[prog.n :])
            result = cmd_certify(prog, saddle, args.samples, args.seed, out_dir)
        elif args.command == "counterexample":
            cfg = _make_cfg(args, default_T=10.0)
            result = cmd_counterexample(cfg.horizon_T, out_dir, cfg, args.seed)
        else:
            prog = load_problem(args.problem)
            p0 = _initial_point(prog, args.x0, args.lambda0)
            direction = _parse_floats(args.direction, "direction")
            cfg = _make_cfg(args, default_T=10.0)
            result = cmd_continuity(
                prog, p0, direction, args.k_max, cfg.horizon_T, cfg, out_dir,
                args.seed,
            )
    except (ValidationError, DimensionMismatchError, DomainError, OSError) as exc:
        print(f"pdflow: error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"pdflow: integration failed: {exc}", file=sys.stderr)
        return 1
    except PdflowError as exc:
        print(f"pdflow: {exc}", file=sys.stderr)
        return 1

    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] {result.scenario_name}: "
          + ", ".join(f"{k}={v}" for k, v in sorted(result.metrics.items())))
    if result.note:
        print(f"  note: {result.note}")
    for p in result.artifact_paths:
        print(f"  wrote {p}")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
