"""Trajectory integration under the canonical flow and under each
multi-Hamiltonian structure, plus conservation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brackets import as_array, hamiltonian_vector_field
from .errors import DomainExitError
from .systems import SystemSpec
from .tensors import lambda_k


@dataclass(frozen=True)
class Trajectory:
    """Uniform-step trajectory; states[i] is the phase point at times[i]."""

    times: np.ndarray
    states: np.ndarray
    method: str
    dt: float

    def __len__(self) -> int:
        return len(self.times)


def canonical_rhs(sys: SystemSpec, x) -> np.ndarray:
    """Hamiltonian vector field of H: (dH/dp, -dH/dq)."""
    return hamiltonian_vector_field(sys.hamiltonian, as_array(x, 2 * sys.n))


def multihamiltonian_rhs(sys: SystemSpec, k: int, x) -> np.ndarray:
    """Lambda_(k) applied to the gradient of the k-th Hamiltonian H_k."""
    arr = as_array(x, 2 * sys.n)
    fields = [sys.hamiltonian, *sys.involutive, *sys.additional]
    grad = fields[k].eval_grad(arr).gradient
    return lambda_k(sys, k, arr).apply(grad)


def _exit_guard(sys: SystemSpec, exit_margin: float | None) -> float:
    return sys.margin / 4.0 if exit_margin is None else exit_margin


def integrate(
    sys: SystemSpec,
    x0,
    t_final: float,
    dt: float = 1e-3,
    k: int | None = None,
    exit_margin: float | None = None,
) -> Trajectory:
    """Classical fixed-step RK4; k selects a multi-Hamiltonian right-hand side,
    None the canonical one.

    Aborts with DomainExitError (carrying the partial trajectory) as soon as
    a state crosses an exclusion margin.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_final <= 0.0:
        raise ValueError("t_final must be positive")
    arr = as_array(x0, 2 * sys.n)
    steps = int(round(t_final / dt))
    method = "rk4-canonical" if k is None else f"rk4-multihamiltonian-k{k}"

    if k is None:
        rhs = lambda y: canonical_rhs(sys, y)  # noqa: E731
    else:
        rhs = lambda y: multihamiltonian_rhs(sys, k, y)  # noqa: E731

    guard = _exit_guard(sys, exit_margin)
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, arr.size))
    times[0] = 0.0
    states[0] = arr
    y = arr
    for i in range(1, steps + 1):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for excl in sys.exclusions:
            if abs(excl.eval(y)) < guard:
                partial = Trajectory(times[:i].copy(), states[:i].copy(), method, dt)
                raise DomainExitError(
                    times[i - 1],
                    trajectory=partial,
                    reason=f"|{excl!r}| fell below {guard:.3g}",
                )
        times[i] = i * dt
        states[i] = y
    return Trajectory(times, states, method, dt)


def conservation_drift(sys: SystemSpec, traj: Trajectory) -> dict:
    """Per-constant max over the trajectory of |F(x(t)) - F(x0)| / (|F(x0)| + 1)."""
    out = {}
    for name, f in sys.core_constants().items():
        f0 = f.eval(traj.states[0])
        worst = 0.0
        for state in traj.states[1:]:
            worst = max(worst, abs(f.eval(state) - f0))
        out[name] = worst / (abs(f0) + 1.0)
    return out
