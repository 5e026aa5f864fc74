"""Canonical Poisson brackets, Jacobian-determinant Nambu brackets, the
B-matrix / det B independence machinery, and residuals for every bracket
identity the engine verifies.

All operations are pure functions of immutable inputs.  Determinants of
float matrices go through LAPACK's LU with partial pivoting
(``numpy.linalg.det``); derivative information is propagated through
determinants with the cofactor form of Jacobi's formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .ad import ADScalar
from .errors import DimensionMismatchError, SingularLocusError
from .expr import Mul, ScalarField

EPS_B_FLOOR = 1e-10


def lu_det(m: np.ndarray) -> float:
    """Determinant by unblocked LU with partial pivoting.

    Unlike the blocked LAPACK route this keeps bitwise-identical rows
    bitwise identical through elimination, so duplicate-row determinants
    are exactly 0.0 and a row swap flips the sign exactly.
    """
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(a[0, 0])
    if n == 2:
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    det = 1.0
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if a[piv, col] == 0.0:
            return 0.0
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            det = -det
        det *= a[col, col]
        for row in range(col + 1, n):
            mult = a[row, col] / a[col, col]
            if mult != 0.0:
                a[row, col:] -= mult * a[col, col:]
    return float(det)


@dataclass(frozen=True)
class PhasePoint:
    """A point of a 2n-dimensional phase space, ordered (q^1..q^n, p_1..p_n)."""

    x: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) % 2 != 0 or len(self.x) == 0:
            raise DimensionMismatchError(
                f"phase point must have even positive length, got {len(self.x)}"
            )

    @property
    def n(self) -> int:
        return len(self.x) // 2

    def array(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)


def as_array(x, dim: int | None = None) -> np.ndarray:
    """Coerce a PhasePoint or sequence to a float vector, checking length."""
    arr = x.array() if isinstance(x, PhasePoint) else np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class BracketResult:
    """A normalized bracket value together with its normalization data."""

    value: float
    det_b: float | None = None
    normalization: float | None = None


@dataclass(frozen=True)
class ResidualSample:
    """Absolute residual plus the scale (sum of constituent magnitudes + 1)."""

    absolute: float
    scale: float

    @property
    def relative(self) -> float:
        return self.absolute / self.scale

    def __float__(self) -> float:
        return self.absolute


def _same_frame(fields: Sequence[ScalarField]):
    coords = fields[0].coords
    for f in fields[1:]:
        if f.coords != coords:
            raise DimensionMismatchError(
                f"fields use different coordinate frames: {coords} vs {f.coords}"
            )
    return coords


def poisson_bracket(f: ScalarField, g, x) -> float:
    """{f, g} = sum_j (df/dq^j dg/dp_j - df/dp_j dg/dq^j)."""
    arr = as_array(x, f.dim)
    if arr.size % 2 != 0:
        raise DimensionMismatchError("phase dimension must be even")
    n = arr.size // 2
    a = f.eval_grad(arr).gradient
    b = g.eval_grad(arr).gradient
    if b.size != a.size:
        raise DimensionMismatchError("bracket operands live in different dimensions")
    return float(a[:n] @ b[n:] - a[n:] @ b[:n])


def poisson_bracket_grad(f, g, x) -> ADScalar:
    """Value and phase-space gradient of {f, g}; needs second derivatives."""
    arr = as_array(x, f.dim)
    n = arr.size // 2
    fa = f.eval_hess(arr)
    gb = g.eval_hess(arr)
    value = float(fa.gradient[:n] @ gb.gradient[n:] - fa.gradient[n:] @ gb.gradient[:n])
    grad = (
        fa.hessian[:, :n] @ gb.gradient[n:]
        + gb.hessian[:, n:] @ fa.gradient[:n]
        - fa.hessian[:, n:] @ gb.gradient[:n]
        - gb.hessian[:, :n] @ fa.gradient[n:]
    )
    return ADScalar(value, grad)


class PoissonBracketFunction:
    """{f, g} as an evaluable phase function (e.g. the derived constant B11).

    Provides the same eval/eval_grad surface as ScalarField, one derivative
    order deeper on each call.
    """

    __slots__ = ("f", "g", "coords")

    def __init__(self, f, g):
        self.f = f
        self.g = g
        self.coords = f.coords

    @property
    def dim(self) -> int:
        return len(self.coords)

    def eval(self, x) -> float:
        return poisson_bracket(self.f, self.g, x)

    def eval_grad(self, x) -> ADScalar:
        return poisson_bracket_grad(self.f, self.g, x)

    def __call__(self, x) -> float:
        return self.eval(x)


def hamiltonian_vector_field(f: ScalarField, x) -> np.ndarray:
    """(df/dp_1..df/dp_n, -df/dq^1..-df/dq^n) in the global ordering."""
    arr = as_array(x, f.dim)
    n = arr.size // 2
    g = f.eval_grad(arr).gradient
    return np.concatenate([g[n:], -g[:n]])


def _grad_matrix(fields: Sequence, arr: np.ndarray) -> np.ndarray:
    return np.array([f.eval_grad(arr).gradient for f in fields])


def nambu_bracket(fields: Sequence[ScalarField], x) -> float:
    """Order-N canonical bracket: det of the Jacobian of N functions on R^N."""
    if not fields:
        raise DimensionMismatchError("need at least one field")
    _same_frame(fields)
    arr = as_array(x, fields[0].dim)
    if len(fields) != arr.size:
        raise DimensionMismatchError(
            f"{len(fields)} fields on a {arr.size}-dimensional space"
        )
    return lu_det(_grad_matrix(fields, arr))


def perm_parity(perm: Sequence[int]) -> int:
    """+1 for even permutations, -1 for odd."""
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def nambu_bracket_oracle(fields: Sequence[ScalarField], x) -> float:
    """Levi-Civita permutation sum; independent O(N!) cross-check, N <= 6."""
    n = len(fields)
    if n > 6:
        raise ValueError("oracle restricted to N <= 6 (factorial cost)")
    _same_frame(fields)
    arr = as_array(x, fields[0].dim)
    if n != arr.size:
        raise DimensionMismatchError(f"{n} fields on a {arr.size}-dimensional space")
    grads = [f.eval_grad(arr).gradient for f in fields]
    total = 0.0
    for perm in permutations(range(n)):
        term = float(perm_parity(perm))
        for i, j in enumerate(perm):
            term *= grads[i][j]
        total += term
    return total


def cofactor_matrix(m: np.ndarray) -> np.ndarray:
    """Matrix of signed minors; columns/rows removed one at a time."""
    n = m.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if n == 1:
        return np.array([[1.0]])
    if n == 2:
        return np.array([[m[1, 1], -m[1, 0]], [-m[0, 1], m[0, 0]]])
    cof = np.empty((n, n))
    idx = np.arange(n)
    for i in range(n):
        rows = idx[idx != i]
        sub = m[np.ix_(rows, idx)]
        for j in range(n):
            cols = idx[idx != j]
            cof[i, j] = (-1.0) ** (i + j) * np.linalg.det(sub[:, cols])
    return cof


def det_and_grad(values: np.ndarray, grads: np.ndarray) -> ADScalar:
    """det(values) and its gradient via Jacobi's formula.

    grads[i, j, :] is the gradient of entry (i, j) with respect to the
    phase point.
    """
    n = values.shape[0]
    if n == 0:
        return ADScalar(1.0, np.zeros(grads.shape[-1] if grads.size else 0))
    det = lu_det(values)
    cof = cofactor_matrix(values)
    return ADScalar(det, np.einsum("ij,ijd->d", cof, grads))


# --- system-level machinery -------------------------------------------------


def _system_fields(sys) -> list:
    """[H, H_1..H_{n-1}, A_1..A_{n-1}] in the relabeled order H_0..H_{2n-2}."""
    return [sys.hamiltonian, *sys.involutive, *sys.additional]


def b_matrix(sys, x) -> np.ndarray:
    """(n-1)x(n-1) matrix with entries {H_i, A_j}."""
    arr = as_array(x, 2 * sys.n)
    m = sys.n - 1
    out = np.empty((m, m))
    for i, hi in enumerate(sys.involutive):
        for j, aj in enumerate(sys.additional):
            out[i, j] = poisson_bracket(hi, aj, arr)
    return out


def _b_matrix_grads(sys, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = sys.n - 1
    vals = np.empty((m, m))
    grads = np.empty((m, m, arr.size))
    for i, hi in enumerate(sys.involutive):
        for j, aj in enumerate(sys.additional):
            s = poisson_bracket_grad(hi, aj, arr)
            vals[i, j] = s.value
            grads[i, j] = s.gradient
    return vals, grads


def det_b(sys, x) -> float:
    """det B via LU; defined as 1 for n = 1 (empty matrix)."""
    if sys.n == 1:
        return 1.0
    return lu_det(b_matrix(sys, x))


def det_b_grad(sys, x) -> ADScalar:
    arr = as_array(x, 2 * sys.n)
    if sys.n == 1:
        return ADScalar(1.0, np.zeros(arr.size))
    vals, grads = _b_matrix_grads(sys, arr)
    return det_and_grad(vals, grads)


def eps_b(b: np.ndarray) -> float:
    """Singular-locus guard: 1e-10 * (1 + max |B_ij|)."""
    peak = float(np.max(np.abs(b))) if b.size else 0.0
    return EPS_B_FLOOR * (1.0 + peak)


def _checked_det_b(sys, arr: np.ndarray) -> float:
    b = b_matrix(sys, arr)
    det = lu_det(b) if b.size else 1.0
    guard = eps_b(b)
    if abs(det) <= guard:
        raise SingularLocusError(det, guard, where=arr)
    return det


def independence_identity_residual(f: ScalarField, sys, x) -> ResidualSample:
    """Jacobian determinant of (f, H, H_i.., A_j..) minus (-1)^{n+1} detB {f, H}."""
    arr = as_array(x, 2 * sys.n)
    rows = [f, *_system_fields(sys)]
    jac = lu_det(_grad_matrix(rows, arr))
    rhs = (-1.0) ** (sys.n + 1) * det_b(sys, arr) * poisson_bracket(
        f, sys.hamiltonian, arr
    )
    return ResidualSample(abs(jac - rhs), abs(jac) + abs(rhs) + 1.0)


def normalized_evolution_bracket(f: ScalarField, sys, x) -> BracketResult:
    """[(-1)^{n+1}/detB] x Jacobian determinant with f in the first row.

    Equals {f, H} wherever the constants of motion are functionally
    independent; raises SingularLocusError on the det B ~ 0 locus.
    """
    arr = as_array(x, 2 * sys.n)
    det = _checked_det_b(sys, arr)
    norm = (-1.0) ** (sys.n + 1) / det
    rows = [f, *_system_fields(sys)]
    jac = lu_det(_grad_matrix(rows, arr))
    return BracketResult(norm * jac, det_b=det, normalization=norm)


def _retained(sys, k: int) -> list:
    fields = _system_fields(sys)
    if not 0 <= k <= 2 * sys.n - 2:
        raise ValueError(f"k must be in 0..{2 * sys.n - 2}, got {k}")
    return [f for i, f in enumerate(fields) if i != k]


def bracket_k(f: ScalarField, g, sys, k: int, x) -> float:
    """k-th normalized bracket: (-1)^{n+k+1}/detB x det(f, g, retained)."""
    arr = as_array(x, 2 * sys.n)
    det = _checked_det_b(sys, arr)
    coeff = (-1.0) ** (sys.n + k + 1) / det
    rows = [f, g, *_retained(sys, k)]
    return coeff * lu_det(_grad_matrix(rows, arr))


def bracket_k_grad(f, g, sys, k: int, x) -> ADScalar:
    """Value and gradient of the k-th normalized bracket at x."""
    arr = as_array(x, 2 * sys.n)
    det = _checked_det_b(sys, arr)
    det_ad = det_b_grad(sys, arr)
    rows = [f, g, *_retained(sys, k)]
    jets = [r.eval_hess(arr) for r in rows]
    vals = np.array([j.gradient for j in jets])
    grads = np.array([j.hessian for j in jets])
    jac = det_and_grad(vals, grads)
    sign = (-1.0) ** (sys.n + k + 1)
    coeff = sign / det
    coeff_grad = -coeff * det_ad.gradient / det
    return ADScalar(coeff * jac.value, coeff * jac.gradient + jac.value * coeff_grad)


class NormalizedBracket:
    """One of the 2n-1 normalized binary brackets of a system (fixed k)."""

    def __init__(self, sys, k: int):
        if not 0 <= k <= 2 * sys.n - 2:
            raise ValueError(f"k must be in 0..{2 * sys.n - 2}, got {k}")
        self.sys = sys
        self.k = k

    def value(self, f, g, x) -> float:
        return bracket_k(f, g, self.sys, self.k, x)

    def value_grad(self, f, g, x) -> ADScalar:
        return bracket_k_grad(f, g, self.sys, self.k, x)


def product_field(f: ScalarField, g: ScalarField) -> ScalarField:
    """Pointwise product f*g as a new field on the shared frame."""
    _same_frame([f, g])
    params = dict(f.params)
    for name, value in g.params.items():
        if name in params and params[name] != value:
            raise ValueError(f"conflicting bindings for parameter '{name}'")
        params[name] = value
    return ScalarField(Mul(f.expr, g.expr), f.coords, params)


def leibniz_residual(fields: Sequence[ScalarField], x) -> ResidualSample:
    """{f1 f2, f3..} - f1 {f2, f3..} - f2 {f1, f3..}; identically zero."""
    if len(fields) < 3:
        raise DimensionMismatchError("need at least three fields (N >= 2)")
    f1, f2, *rest = fields
    arr = as_array(x, f1.dim)
    lhs = nambu_bracket([product_field(f1, f2), *rest], arr)
    t1 = f1.eval(arr) * nambu_bracket([f2, *rest], arr)
    t2 = f2.eval(arr) * nambu_bracket([f1, *rest], arr)
    return ResidualSample(abs(lhs - t1 - t2), abs(lhs) + abs(t1) + abs(t2) + 1.0)


def nambu_bracket_grad(fields: Sequence[ScalarField], x) -> ADScalar:
    """Value and gradient of the order-N bracket; needs second derivatives."""
    _same_frame(fields)
    arr = as_array(x, fields[0].dim)
    jets = [f.eval_hess(arr) for f in fields]
    vals = np.array([j.gradient for j in jets])
    grads = np.array([j.hessian for j in jets])
    return det_and_grad(vals, grads)


def fundamental_identity_residual(
    fs: Sequence[ScalarField], gs: Sequence[ScalarField], x
) -> ResidualSample:
    """LHS - RHS of the generalized Jacobi identity for the order-N bracket.

    {f_1..f_{N-1}, {g_1..g_N}} = sum_k {g_1, .., {f_1..f_{N-1}, g_k}, .., g_N}.
    """
    n = len(gs)
    if len(fs) != n - 1:
        raise DimensionMismatchError(f"need {n - 1} outer fields, got {len(fs)}")
    _same_frame([*fs, *gs])
    arr = as_array(x, gs[0].dim)
    if n != arr.size:
        raise DimensionMismatchError(f"{n} fields on a {arr.size}-dimensional space")

    f_jets = [f.eval_hess(arr) for f in fs]
    g_jets = [g.eval_hess(arr) for g in gs]
    f_vals = np.array([j.gradient for j in f_jets]).reshape(n - 1, n)
    f_grads = np.array([j.hessian for j in f_jets]).reshape(n - 1, n, n)
    g_rows = np.array([j.gradient for j in g_jets])

    inner_all = det_and_grad(
        np.vstack([g_rows[i] for i in range(n)]).reshape(n, n),
        np.array([j.hessian for j in g_jets]),
    )
    lhs_rows = np.vstack([f_vals, inner_all.gradient[None, :]])
    lhs = lu_det(lhs_rows)

    rhs_terms = []
    for kk in range(n):
        vals = np.vstack([f_vals, g_rows[kk][None, :]])
        grads = np.concatenate([f_grads, g_jets[kk].hessian[None, :, :]])
        inner_k = det_and_grad(vals, grads)
        rows = g_rows.copy()
        rows[kk] = inner_k.gradient
        rhs_terms.append(lu_det(rows))
    rhs = math.fsum(rhs_terms)
    scale = abs(lhs) + sum(abs(t) for t in rhs_terms) + 1.0
    return ResidualSample(abs(lhs - rhs), scale)


def jacobi_residual_bracket(f, g, h, bracket: NormalizedBracket, x) -> ResidualSample:
    """{f,{g,h}} + {g,{h,f}} + {h,{f,g}} under one normalized bracket."""
    sys, k = bracket.sys, bracket.k
    arr = as_array(x, 2 * sys.n)
    det = _checked_det_b(sys, arr)
    det_ad = det_b_grad(sys, arr)
    sign = (-1.0) ** (sys.n + k + 1)
    coeff = sign / det
    coeff_grad = -coeff * det_ad.gradient / det

    retained = _retained(sys, k)
    r_jets = [r.eval_hess(arr) for r in retained]
    r_vals = np.array([j.gradient for j in r_jets]).reshape(len(retained), arr.size)
    r_grads = np.array([j.hessian for j in r_jets]).reshape(
        len(retained), arr.size, arr.size
    )

    jets = {fld: fld.eval_hess(arr) for fld in (f, g, h)}

    def inner(a, b) -> ADScalar:
        vals = np.vstack([jets[a].gradient, jets[b].gradient, r_vals])
        grads = np.concatenate(
            [jets[a].hessian[None], jets[b].hessian[None], r_grads]
        )
        d = det_and_grad(vals, grads)
        return ADScalar(coeff * d.value, coeff * d.gradient + d.value * coeff_grad)

    def outer(a, inner_ad: ADScalar) -> float:
        rows = np.vstack([jets[a].gradient, inner_ad.gradient, r_vals])
        return coeff * lu_det(rows)

    t1 = outer(f, inner(g, h))
    t2 = outer(g, inner(h, f))
    t3 = outer(h, inner(f, g))
    return ResidualSample(abs(t1 + t2 + t3), abs(t1) + abs(t2) + abs(t3) + 1.0)
