"""Command-line entry point: verification suites, tensor dumps, trajectory runs.

Exit codes: 0 success, 1 check failure (or singular tensor point),
2 configuration error, 3 domain exit mid-trajectory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
import tempfile
from pathlib import Path

import numpy as np

from . import dynamics, suite, systems, tensors
from .errors import DomainExitError, NambuLabError, SingularLocusError
from .report import SKIPPED_SINGULAR

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


class ConfigError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get("NAMBU_LAB_SEED", "42"))


def _parse_params(text: str | None) -> dict:
    out: dict = {}
    if not text:
        return out
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        if "=" not in chunk:
            raise ConfigError(f"malformed --params entry '{chunk}' (expected k=v)")
        key, value = chunk.split("=", 1)
        key = key.strip()
        value = value.strip()
        try:
            out[key] = float(value)
        except ValueError:
            out[key] = value  # string options such as gauge=q1*q2, variant=aprime
    return out


def _parse_tols(text: str | None) -> dict:
    out: dict = {}
    if not text:
        return out
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        if "=" not in chunk:
            raise ConfigError(f"malformed --tol entry '{chunk}' (expected CHECK=VALUE)")
        key, value = chunk.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError as e:
            raise ConfigError(f"--tol value for '{key}' is not a number") from e
    if unknown := set(out) - set(suite.DEFAULT_TOLERANCES):
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    return out


def _parse_point(text: str, dim: int | None = None) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"malformed point '{text}'") from e
    if dim is not None and len(values) != dim:
        raise ConfigError(f"point needs {dim} components, got {len(values)}")
    return np.array(values)


def _resolve_system(args) -> systems.SystemSpec:
    if bool(args.system) == bool(args.file):
        raise ConfigError("exactly one of --system or --file is required")
    if args.file:
        return systems.load(args.file)
    return systems.builtin(args.system, _parse_params(args.params))


def _atomic_write(path: Path, payload: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_verify(args) -> int:
    if args.samples <= 0:
        raise ConfigError("--samples must be positive")
    sys_spec = _resolve_system(args)
    report = suite.run_suite(
        sys_spec,
        seed=args.seed,
        samples=args.samples,
        tolerances=_parse_tols(args.tol),
    )
    payload = report.to_json() + "\n"
    if args.output:
        _atomic_write(Path(args.output), payload)
    else:
        _sys.stdout.write(payload)
    for rec in report.checks:
        line = (
            f"[{rec.verdict:>16}] {rec.check_id}: rel {rec.max_rel_residual:.3e}"
            f" (tol {rec.tolerance:.1e})"
        )
        print(line, file=_sys.stderr)
    return EXIT_OK if report.passed() else EXIT_CHECK_FAILURE


def cmd_tensor(args) -> int:
    sys_spec = _resolve_system(args)
    if args.k is None:
        raise ConfigError("--k is required for the tensor command")
    if not 0 <= args.k <= 2 * sys_spec.n - 2:
        raise ConfigError(f"--k must be in 0..{2 * sys_spec.n - 2}")
    point = _parse_point(args.point, 2 * sys_spec.n)
    try:
        t = tensors.lambda_k(sys_spec, args.k, point)
    except SingularLocusError as e:
        doc = {
            "system": sys_spec.name,
            "k": args.k,
            "point": list(point),
            "verdict": SKIPPED_SINGULAR,
            "detail": str(e),
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_CHECK_FAILURE
    det, rank = tensors.degeneracy_check(t)
    jac = tensors.jacobi_tensor_residual(sys_spec, args.k, point)
    doc = {
        "system": sys_spec.name,
        "k": args.k,
        "point": list(point),
        "entries": [list(row) for row in t.entries],
        "det": det,
        "rank": rank,
        "residuals": {
            "jacobi_tensor_abs": jac.absolute,
            "jacobi_tensor_rel": jac.relative,
        },
    }
    if args.oracle:
        if sys_spec.n > 3:
            raise ConfigError("--oracle supports n <= 3 only")
        oracle = tensors.lambda_oracle(sys_spec, args.k, point)
        doc["oracle_entries"] = [list(row) for row in oracle.entries]
        doc["oracle_max_gap"] = float(np.max(np.abs(oracle.entries - t.entries)))
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _write_trajectory(path: Path, sys_spec, traj) -> None:
    n = sys_spec.n
    header = "t," + ",".join(sys_spec.coords[:n]) + "," + ",".join(sys_spec.coords[n:])
    lines = [header]
    for t, state in zip(traj.times, traj.states):
        lines.append(",".join(repr(v) for v in (t, *state)))
    _atomic_write(path, "\n".join(lines) + "\n")
    drift = dynamics.conservation_drift(sys_spec, traj)
    sidecar = {
        "system": sys_spec.name,
        "method": traj.method,
        "dt": traj.dt,
        "t_final": float(traj.times[-1]),
        "drift": dict(sorted(drift.items())),
    }
    _atomic_write(Path(str(path) + ".drift.json"), json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def cmd_evolve(args) -> int:
    sys_spec = _resolve_system(args)
    if not args.output:
        raise ConfigError("--output is required for the evolve command")
    if args.dt <= 0 or args.t_final <= 0:
        raise ConfigError("--dt and --t-final must be positive")
    x0 = _parse_point(args.x0, 2 * sys_spec.n)
    try:
        traj = dynamics.integrate(
            sys_spec, x0, t_final=args.t_final, dt=args.dt, k=args.k
        )
    except DomainExitError as e:
        if e.trajectory is not None and len(e.trajectory):
            _write_trajectory(Path(args.output), sys_spec, e.trajectory)
        print(f"domain exit: {e}", file=_sys.stderr)
        return EXIT_DOMAIN
    _write_trajectory(Path(args.output), sys_spec, traj)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nambu-lab",
        description=(
            "Numerical verification of Nambu brackets, functional independence"
            " and multi-Hamiltonian structures of maximally superintegrable"
            " systems."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--system", help=f"registry system: {systems.BUILTIN_NAMES}")
        p.add_argument("--file", help="path to a system-definition JSON file")
        p.add_argument("--params", help="comma-separated k=v parameter overrides")

    p_verify = sub.add_parser("verify", help="run the identity-check suite")
    common(p_verify)
    p_verify.add_argument("--seed", type=int, default=_default_seed())
    p_verify.add_argument("--samples", type=int, default=100)
    p_verify.add_argument("--tol", help="comma-separated CHECK=VALUE overrides")
    p_verify.add_argument("--output", help="report path (default: stdout)")
    p_verify.set_defaults(func=cmd_verify)

    p_tensor = sub.add_parser("tensor", help="dump one Poisson tensor at a point")
    common(p_tensor)
    p_tensor.add_argument("--k", type=int, default=None, help="structure index")
    p_tensor.add_argument("--point", required=True, help="comma-separated phase point")
    p_tensor.add_argument(
        "--oracle", action="store_true", help="cross-print the permutation-sum tensor"
    )
    p_tensor.set_defaults(func=cmd_tensor)

    p_evolve = sub.add_parser("evolve", help="integrate a trajectory (RK4)")
    common(p_evolve)
    p_evolve.add_argument("--k", type=int, default=None,
                          help="multi-Hamiltonian index (default: canonical flow)")
    p_evolve.add_argument("--x0", required=True, help="comma-separated initial point")
    p_evolve.add_argument("--t-final", type=float, default=10.0)
    p_evolve.add_argument("--dt", type=float, default=1e-3)
    p_evolve.add_argument("--output", help="trajectory CSV path")
    p_evolve.set_defaults(func=cmd_evolve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=_sys.stderr)
        return EXIT_CONFIG
    except (NambuLabError, OSError) as e:
        print(f"error: {e}", file=_sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
