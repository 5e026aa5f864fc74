"""The 2n-1 singular Poisson tensors of a maximally superintegrable system.

Entries are signed (2n-2)-minors of the gradient matrix of the retained
constants of motion, scaled by (-1)^{n+k+1}/detB.  The factorial-cost
Levi-Civita sum survives as ``lambda_oracle`` for cross-checking the
minor-sign convention, which is the most error-prone piece of the build.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .ad import ADScalar
from .brackets import (
    ResidualSample,
    lu_det,
    _checked_det_b,
    _retained,
    as_array,
    det_and_grad,
    det_b_grad,
    perm_parity,
)
from .errors import DimensionMismatchError


@dataclass(frozen=True, eq=False)
class SkewTensor:
    """Antisymmetric 2n x 2n Poisson tensor evaluated at one phase point."""

    n: int
    k: int
    point: tuple[float, ...]
    entries: np.ndarray

    def __post_init__(self):
        m = 2 * self.n
        if self.entries.shape != (m, m):
            raise DimensionMismatchError(
                f"entries shape {self.entries.shape}, expected {(m, m)}"
            )

    def apply(self, grad: np.ndarray) -> np.ndarray:
        return self.entries @ grad

    def contract(self, grad_f: np.ndarray, grad_h: np.ndarray) -> float:
        return float(grad_f @ self.entries @ grad_h)


def _pair_sign(a: int, b: int) -> float:
    # parity of the permutation (a, b, rest ascending), 0-indexed with a < b
    return (-1.0) ** (a + b + 1)


def _complement(m: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(m)
    return idx[(idx != a) & (idx != b)]


def lambda_k(sys, k: int, x) -> SkewTensor:
    """Poisson tensor for structure index k; raises SingularLocusError on detB~0."""
    arr = as_array(x, 2 * sys.n)
    m = arr.size
    det = _checked_det_b(sys, arr)
    coeff = (-1.0) ** (sys.n + k + 1) / det
    retained = _retained(sys, k)
    g = np.array([f.eval_grad(arr).gradient for f in retained]).reshape(m - 2, m)
    entries = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            cols = _complement(m, a, b)
            minor = lu_det(g[:, cols])
            val = coeff * _pair_sign(a, b) * minor
            entries[a, b] = val
            entries[b, a] = -val
    return SkewTensor(sys.n, k, tuple(arr), entries)


def lambda_with_gradients(sys, k: int, x) -> tuple[np.ndarray, np.ndarray]:
    """(entries, d_entries) where d_entries[a, b, :] is the phase gradient.

    Needs second derivatives of the retained constants; the determinant
    derivative goes through Jacobi's formula on each minor.
    """
    arr = as_array(x, 2 * sys.n)
    m = arr.size
    det = _checked_det_b(sys, arr)
    det_ad = det_b_grad(sys, arr)
    sign = (-1.0) ** (sys.n + k + 1)
    coeff = sign / det
    coeff_grad = -coeff * det_ad.gradient / det

    retained = _retained(sys, k)
    jets = [f.eval_hess(arr) for f in retained]
    vals = np.array([j.gradient for j in jets]).reshape(m - 2, m)
    grads = np.array([j.hessian for j in jets]).reshape(m - 2, m, m)

    entries = np.zeros((m, m))
    d_entries = np.zeros((m, m, m))
    for a in range(m):
        for b in range(a + 1, m):
            cols = _complement(m, a, b)
            minor = det_and_grad(vals[:, cols], grads[:, cols, :])
            s = _pair_sign(a, b)
            val = s * (coeff * minor.value)
            dval = s * (coeff * minor.gradient + minor.value * coeff_grad)
            entries[a, b] = val
            entries[b, a] = -val
            d_entries[a, b] = dval
            d_entries[b, a] = -dval
    return entries, d_entries


def lambda_oracle(sys, k: int, x) -> SkewTensor:
    """Direct Levi-Civita sum over all (2n-2)! index assignments; n <= 3."""
    if sys.n > 3:
        raise ValueError("oracle restricted to n <= 3 (factorial cost)")
    arr = as_array(x, 2 * sys.n)
    m = arr.size
    det = _checked_det_b(sys, arr)
    coeff = (-1.0) ** (sys.n + k + 1) / det
    retained = _retained(sys, k)
    g = np.array([f.eval_grad(arr).gradient for f in retained]).reshape(m - 2, m)
    entries = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            if a == b:
                continue
            total = 0.0
            rest = [i for i in range(m) if i != a and i != b]
            for sigma in permutations(rest):
                eps = perm_parity([a, b, *sigma])
                term = float(eps)
                for row, col in enumerate(sigma):
                    term *= g[row, col]
                total += term
            entries[a, b] = coeff * total
    return SkewTensor(sys.n, k, tuple(arr), entries)


def landau_closed_form(k: int, x, params, gauge: str | None = None) -> SkewTensor:
    """Literal assembly of the three closed-form 4x4 Landau tensors.

    Blocks are built from Y, Z, S_1, S_2 and the scalars l, l_1, l_2 of the
    magnetic-field/velocity data; valid in any gauge chi(q1, q2).
    """
    from .systems import landau_fields  # local import to keep modules acyclic

    if k not in (0, 1, 2):
        raise ValueError(f"Landau structure index must be 0, 1 or 2, got {k}")
    arr = as_array(x, 4)
    data = landau_fields(params, gauge)
    qc = data["charge"] / data["c"]  # q/c
    bf = data["B"]

    da1 = data["a1"].eval_grad(arr).gradient[:2]
    da2 = data["a2"].eval_grad(arr).gradient[:2]
    v1 = data["v1"].eval(arr)
    v2 = data["v2"].eval(arr)

    y = np.array([[0.0, 1.0], [-1.0, 0.0]])
    z = np.array([[da1[1], da2[1]], [-da1[0], -da2[0]]])
    s1 = np.array([[0.0, v1], [0.0, v2]])
    s2 = np.array([[-v1, 0.0], [-v2, 0.0]])
    ell = lu_det(z)
    l1 = v1 * da1[0] + v2 * da2[0]
    l2 = v1 * da1[1] + v2 * da2[1]
    j0 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

    lam0 = j0 + np.block([[y / qc, z], [-z.T, qc * ell * y]]) / bf
    if k == 0:
        entries = lam0
    elif k == 1:
        entries = -v2 * lam0 + np.block([[np.zeros((2, 2)), s1], [-s1.T, qc * l1 * y]])
    else:
        entries = v1 * lam0 + np.block([[np.zeros((2, 2)), s2], [-s2.T, qc * l2 * y]])
    return SkewTensor(2, k, tuple(arr), entries)


def _cyclic_residual(entries: np.ndarray, d_entries: np.ndarray) -> ResidualSample:
    """max over (eta, alpha, beta) of |L^{eta g} d_g L^{ab} + cyclic|."""
    r1 = np.einsum("hg,abg->hab", entries, d_entries)
    c1 = np.transpose(r1, (2, 0, 1))  # [h,a,b] <- r1[a,b,h]
    c2 = np.transpose(r1, (1, 2, 0))  # [h,a,b] <- r1[b,h,a]
    total = r1 + c1 + c2
    scales = np.abs(r1) + np.abs(c1) + np.abs(c2) + 1.0
    abs_peak = float(np.max(np.abs(total)))
    rel_peak = float(np.max(np.abs(total) / scales))
    if rel_peak == 0.0:
        return ResidualSample(abs_peak, 1.0)
    return ResidualSample(abs_peak, abs_peak / rel_peak if abs_peak else 1.0)


def jacobi_tensor_residual(sys, k: int, x) -> ResidualSample:
    """Tensor form of the Jacobi identity for Lambda_(k) at x."""
    entries, d_entries = lambda_with_gradients(sys, k, x)
    return _cyclic_residual(entries, d_entries)


def compatibility_residual(sys, k1: int, k2: int, a: float, b: float, x) -> ResidualSample:
    """Jacobi residual of the pencil a*Lambda_(k1) + b*Lambda_(k2) at x."""
    e1, d1 = lambda_with_gradients(sys, k1, x)
    e2, d2 = lambda_with_gradients(sys, k2, x)
    return _cyclic_residual(a * e1 + b * e2, a * d1 + b * d2)


def degeneracy_check(t: SkewTensor, tol: float = 1e-9) -> tuple[float, int]:
    """(determinant, numerical rank) of the tensor.

    Rank counts singular values above tol x largest singular value.
    """
    det = lu_det(t.entries)
    svals = np.linalg.svd(t.entries, compute_uv=False)
    top = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tol * top)) if top > 0.0 else 0
    return det, rank


def orthogonality_residual(sys, k: int, x) -> ResidualSample:
    """Rows of Lambda_(k) against gradients of every retained constant.

    Each row is a tangent direction annihilating all retained constants, so
    row . grad(H_retained) vanishes identically.
    """
    arr = as_array(x, 2 * sys.n)
    t = lambda_k(sys, k, x)
    retained = _retained(sys, k)
    g = np.array([f.eval_grad(arr).gradient for f in retained]).reshape(
        len(retained), arr.size
    )
    prod = t.entries @ g.T  # (2n, 2n-2)
    scale = (
        np.linalg.norm(t.entries, axis=1)[:, None] * np.linalg.norm(g, axis=1)[None, :]
        + 1.0
    )
    abs_peak = float(np.max(np.abs(prod)))
    rel_peak = float(np.max(np.abs(prod) / scale))
    if rel_peak == 0.0:
        return ResidualSample(abs_peak, 1.0)
    return ResidualSample(abs_peak, abs_peak / rel_peak if abs_peak else 1.0)
