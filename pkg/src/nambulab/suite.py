"""Assembly of the full per-system verification suite.

Each check sweeps sampled phase points, tracks the worst absolute and
relative residual, and lands in one VerificationReport record with a
self-contained description of the identity it certifies.
"""

from __future__ import annotations

import time

import numpy as np

from . import brackets as br
from . import systems as sy
from . import tensors as tn
from .errors import SingularLocusError
from .expr import Add, Mul, Num, ScalarField, parse_field
from .report import CheckRecord, ResidualTracker, VerificationReport, verdict_for

DEFAULT_TOLERANCES = {
    "defining": 1e-9,
    "skew-symmetry": 1e-12,
    "multilinearity": 1e-12,
    "leibniz": 1e-10,
    "fundamental-identity": 1e-7,
    "oracle-equivalence": 1e-10,
    "main-identity": 1e-8,
    "evolution-bracket": 1e-9,
    "bracket-k-evolution": 1e-9,
    "casimir": 0.0,
    "jacobi-bracket": 1e-7,
    "lambda-oracle": 1e-10,
    "lambda-contraction": 1e-10,
    "tensor-det": 1e-12,
    "tensor-rank": 0.0,
    "jacobi-tensor": 1e-8,
    "compatibility": 1e-8,
    "orthogonality": 1e-10,
    "evolution-equivalence": 1e-9,
    "relation": 1e-8,
    "landau-golden": 1e-10,
    "landau-detb-constant": 1e-12,
    "cm-dependence": 1e-10,
    "cm-trivialized": 1e-8,
}

# caps for the second-derivative-heavy sweeps; identities are pointwise, so a
# subsample certifies the same structure at lower cost
_JACOBI_BRACKET_POINTS = 20
_AXIOM_POINTS = 40


def monomial_basis(coords) -> list[ScalarField]:
    """The probe family {q_i, p_i, q_i p_j, q_i^2, p_i^2} on a 2n frame."""
    n = len(coords) // 2
    qs, ps = coords[:n], coords[n:]
    texts = list(qs) + list(ps)
    texts += [f"{q}*{p}" for q in qs for p in ps]
    texts += [f"{q}^2" for q in qs] + [f"{p}^2" for p in ps]
    return [parse_field(t, coords) for t in texts]


def random_polynomial_field(coords, rng, terms: int = 4, degree: int = 2) -> ScalarField:
    """Random small polynomial over the frame; smooth everywhere."""
    expr = Num(float(np.round(rng.uniform(-1, 1), 3)))
    for _ in range(terms):
        coeff = float(np.round(rng.uniform(-2, 2), 3))
        mono: object = Num(coeff)
        for _ in range(int(rng.integers(1, degree + 1))):
            name = coords[int(rng.integers(0, len(coords)))]
            mono = Mul(mono, parse_field(name, coords).expr)
        expr = Add(expr, mono)
    return ScalarField(expr, coords)


def linear_combination(a: float, f: ScalarField, b: float, g: ScalarField) -> ScalarField:
    return ScalarField(
        Add(Mul(Num(float(a)), f.expr), Mul(Num(float(b)), g.expr)), f.coords, f.params
    )


def _tol(tolerances: dict, key: str) -> float:
    return tolerances[key]


def run_suite(
    sys: sy.SystemSpec,
    seed: int = 42,
    samples: int = 100,
    tolerances: dict | None = None,
) -> VerificationReport:
    """Run every structural check against one system; deterministic per seed."""
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(tolerances or {})
    t_start = time.perf_counter()

    points = sy.sample_points(sys, samples, seed)
    rng = np.random.default_rng(seed)
    report = VerificationReport(
        system=sys.name,
        parameters=dict(sys.parameters),
        seed=seed,
        samples=samples,
        tolerances=tols,
    )
    coords = sys.coords
    m = 2 * sys.n
    ks = range(2 * sys.n - 1)
    basis = monomial_basis(coords)
    few = points[: min(len(points), _AXIOM_POINTS)]

    # ---- bracket axioms on random polynomial fields ----
    tracker = ResidualTracker()
    for x in few:
        fields = [random_polynomial_field(coords, rng) for _ in range(m)]
        base = br.nambu_bracket(fields, x)
        for _ in range(4):
            i, j = rng.choice(m, size=2, replace=False)
            swapped = list(fields)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            val = br.nambu_bracket(swapped, x)
            tracker.add(abs(val + base), abs(base) + 1.0)
    report.add(
        tracker.record(
            "skew-symmetry",
            "order-2n bracket flips sign under slot transpositions",
            _tol(tols, "skew-symmetry"),
        )
    )

    tracker = ResidualTracker()
    for x in few:
        rest = [random_polynomial_field(coords, rng) for _ in range(m - 1)]
        f = random_polynomial_field(coords, rng)
        g = random_polynomial_field(coords, rng)
        a, b = rng.uniform(-2, 2, size=2)
        lhs = br.nambu_bracket([linear_combination(a, f, b, g), *rest], x)
        t1 = a * br.nambu_bracket([f, *rest], x)
        t2 = b * br.nambu_bracket([g, *rest], x)
        tracker.add(abs(lhs - t1 - t2), abs(t1) + abs(t2) + 1.0)
    report.add(
        tracker.record(
            "multilinearity",
            "bracket is linear in each slot",
            _tol(tols, "multilinearity"),
        )
    )

    tracker = ResidualTracker()
    for x in few:
        fields = [random_polynomial_field(coords, rng) for _ in range(m + 1)]
        tracker.add_sample(br.leibniz_residual(fields, x))
    report.add(
        tracker.record(
            "leibniz",
            "bracket acts as a derivation on products in the first slot",
            _tol(tols, "leibniz"),
        )
    )

    tracker = ResidualTracker()
    for x in few:
        fs = [random_polynomial_field(coords, rng) for _ in range(m - 1)]
        gs = [random_polynomial_field(coords, rng) for _ in range(m)]
        tracker.add_sample(br.fundamental_identity_residual(fs, gs, x))
    report.add(
        tracker.record(
            "fundamental-identity",
            "generalized Jacobi identity of the order-2n bracket",
            _tol(tols, "fundamental-identity"),
        )
    )

    tracker = ResidualTracker()
    for x in few:
        fields = [random_polynomial_field(coords, rng) for _ in range(m)]
        fast = br.nambu_bracket(fields, x)
        slow = br.nambu_bracket_oracle(fields, x)
        tracker.add(abs(fast - slow), abs(fast) + abs(slow) + 1.0)
    report.add(
        tracker.record(
            "oracle-equivalence",
            "LU-determinant bracket matches the Levi-Civita permutation sum",
            _tol(tols, "oracle-equivalence"),
        )
    )

    # ---- independence identity and normalized evolution ----
    tracker = ResidualTracker()
    for x in points:
        for f in basis:
            tracker.add_sample(br.independence_identity_residual(f, sys, x))
    report.add(
        tracker.record(
            "main-identity",
            "2n x 2n Jacobian of (f, H, constants) equals (-1)^(n+1) detB {f,H}",
            _tol(tols, "main-identity"),
        )
    )

    tracker = ResidualTracker()
    for x in points:
        for f in basis:
            try:
                res = br.normalized_evolution_bracket(f, sys, x)
            except SingularLocusError:
                tracker.skip()
                continue
            ref = br.poisson_bracket(f, sys.hamiltonian, x)
            tracker.add(abs(res.value - ref), abs(res.value) + abs(ref) + 1.0)
    report.add(
        tracker.record(
            "evolution-bracket",
            "normalized bracket with H reproduces the canonical {f,H}",
            _tol(tols, "evolution-bracket"),
        )
    )

    fields_k = [sys.hamiltonian, *sys.involutive, *sys.additional]
    tracker = ResidualTracker()
    for x in points:
        for k in ks:
            for f in basis[: 2 * sys.n]:
                try:
                    val = br.bracket_k(f, fields_k[k], sys, k, x)
                except SingularLocusError:
                    tracker.skip()
                    continue
                ref = br.poisson_bracket(f, sys.hamiltonian, x)
                tracker.add(abs(val - ref), abs(val) + abs(ref) + 1.0)
    report.add(
        tracker.record(
            "bracket-k-evolution",
            "every normalized bracket k gives the original time evolution"
            " with Hamiltonian H_k",
            _tol(tols, "bracket-k-evolution"),
        )
    )

    tracker = ResidualTracker()
    for x in points[:_AXIOM_POINTS]:
        for k in ks:
            retained = [f for i, f in enumerate(fields_k) if i != k]
            for hj in retained:
                for f in basis[: 2 * sys.n]:
                    try:
                        val = br.bracket_k(hj, f, sys, k, x)
                    except SingularLocusError:
                        tracker.skip()
                        continue
                    tracker.add(abs(val), 1.0)
    report.add(
        tracker.record(
            "casimir",
            "retained constants are Casimirs of bracket k (duplicate-row determinant)",
            _tol(tols, "casimir"),
        )
    )

    tracker = ResidualTracker()
    for x in points[:_JACOBI_BRACKET_POINTS]:
        for k in ks:
            nb = br.NormalizedBracket(sys, k)
            f, g, h = (random_polynomial_field(coords, rng) for _ in range(3))
            try:
                tracker.add_sample(br.jacobi_residual_bracket(f, g, h, nb, x))
            except SingularLocusError:
                tracker.skip()
    report.add(
        tracker.record(
            "jacobi-bracket",
            "each normalized bracket satisfies the Jacobi identity",
            _tol(tols, "jacobi-bracket"),
        )
    )

    # ---- Poisson tensors ----
    if sys.n <= 3:
        tracker = ResidualTracker()
        for x in points[:_AXIOM_POINTS]:
            for k in ks:
                try:
                    fast = tn.lambda_k(sys, k, x).entries
                    slow = tn.lambda_oracle(sys, k, x).entries
                except SingularLocusError:
                    tracker.skip()
                    continue
                scale = float(np.max(np.abs(fast))) + 1.0
                tracker.add(float(np.max(np.abs(fast - slow))), scale)
        report.add(
            tracker.record(
                "lambda-oracle",
                "minor-expansion tensor entries match the Levi-Civita sum",
                _tol(tols, "lambda-oracle"),
            )
        )

    tracker = ResidualTracker()
    for x in points[:_AXIOM_POINTS]:
        for k in ks:
            try:
                t = tn.lambda_k(sys, k, x)
            except SingularLocusError:
                tracker.skip()
                continue
            for f, h in ((basis[0], basis[m - 1]), (basis[1], basis[m])):
                gf = f.eval_grad(x).gradient
                gh = h.eval_grad(x).gradient
                via_tensor = t.contract(gf, gh)
                via_det = br.bracket_k(f, h, sys, k, x)
                tracker.add(
                    abs(via_tensor - via_det), abs(via_tensor) + abs(via_det) + 1.0
                )
    report.add(
        tracker.record(
            "lambda-contraction",
            "grad(f) . Lambda_(k) . grad(h) equals the determinant-form bracket k",
            _tol(tols, "lambda-contraction"),
        )
    )

    det_tracker = ResidualTracker()
    rank_tracker = ResidualTracker()
    for x in points:
        for k in ks:
            try:
                t = tn.lambda_k(sys, k, x)
            except SingularLocusError:
                det_tracker.skip()
                rank_tracker.skip()
                continue
            det, rank = tn.degeneracy_check(t, tol=1e-9)
            top = float(np.linalg.norm(t.entries, 2))
            det_tracker.add(abs(det), top ** (2 * sys.n))
            rank_tracker.add(float(abs(rank - 2)), 1.0)
    report.add(
        det_tracker.record(
            "tensor-det",
            "every Poisson tensor is singular (vanishing determinant)",
            _tol(tols, "tensor-det"),
        )
    )
    report.add(
        rank_tracker.record(
            "tensor-rank",
            "every Poisson tensor has rank exactly two",
            _tol(tols, "tensor-rank"),
        )
    )

    tracker = ResidualTracker()
    for x in points:
        for k in ks:
            try:
                tracker.add_sample(tn.jacobi_tensor_residual(sys, k, x))
            except SingularLocusError:
                tracker.skip()
    report.add(
        tracker.record(
            "jacobi-tensor",
            "Lambda^(eta gamma) d_gamma Lambda^(alpha beta) + cyclic = 0",
            _tol(tols, "jacobi-tensor"),
        )
    )

    tracker = ResidualTracker()
    coeffs = rng.uniform(-2, 2, size=(10, 2))
    for x in points[:_AXIOM_POINTS]:
        grads = {}
        try:
            for k in ks:
                grads[k] = tn.lambda_with_gradients(sys, k, x)
        except SingularLocusError:
            tracker.skip()
            continue
        for k1 in ks:
            for k2 in range(k1 + 1, 2 * sys.n - 1):
                e1, d1 = grads[k1]
                e2, d2 = grads[k2]
                for a, b in coeffs:
                    tracker.add_sample(
                        tn._cyclic_residual(a * e1 + b * e2, a * d1 + b * d2)
                    )
    report.add(
        tracker.record(
            "compatibility",
            "pencils a Lambda_(k1) + b Lambda_(k2) keep the Jacobi identity",
            _tol(tols, "compatibility"),
        )
    )

    tracker = ResidualTracker()
    for x in points[:_AXIOM_POINTS]:
        for k in ks:
            try:
                tracker.add_sample(tn.orthogonality_residual(sys, k, x))
            except SingularLocusError:
                tracker.skip()
    report.add(
        tracker.record(
            "orthogonality",
            "tensor rows annihilate the gradients of all retained constants",
            _tol(tols, "orthogonality"),
        )
    )

    tracker = ResidualTracker()
    for x in points:
        xi = br.hamiltonian_vector_field(sys.hamiltonian, x)
        scale = float(np.linalg.norm(xi)) + 1.0
        for k in ks:
            try:
                t = tn.lambda_k(sys, k, x)
            except SingularLocusError:
                tracker.skip()
                continue
            rhs = t.apply(fields_k[k].eval_grad(np.asarray(x)).gradient)
            tracker.add(float(np.linalg.norm(rhs - xi)), scale)
    report.add(
        tracker.record(
            "evolution-equivalence",
            "Lambda_(k) grad(H_k) equals the canonical Hamiltonian vector field",
            _tol(tols, "evolution-equivalence"),
        )
    )

    # ---- symmetry algebra ----
    algebra = sy.verify_algebra(sys, points, tol=_tol(tols, "relation"))
    for rec in algebra.checks:
        if rec.check_id.startswith("pointwise:") and sys.name == "landau":
            rec.tolerance = _tol(tols, "landau-detb-constant")
            rec.verdict = verdict_for(rec.max_rel_residual, rec.tolerance)
        elif rec.check_id.startswith("pointwise:") and sys.name == "calogero-moser":
            rec.tolerance = _tol(tols, "cm-dependence")
            rec.verdict = verdict_for(rec.max_rel_residual, rec.tolerance)
        report.add(rec)

    # ---- system-specific golden checks ----
    if sys.name == "landau":
        gauge = sys.parameters.get("gauge") or None
        tracker = ResidualTracker()
        for x in points:
            for k in ks:
                lam = tn.lambda_k(sys, k, x).entries
                gold = tn.landau_closed_form(k, x, sys.parameters, gauge).entries
                tracker.add(float(np.max(np.abs(lam - gold))), 1.0)
        report.add(
            tracker.record(
                "landau-golden",
                "generic tensor construction matches the closed-form 4x4 matrices",
                _tol(tols, "landau-golden"),
            )
        )

    if sys.name == "calogero-moser":
        app = sy.cm_trivializing_constant(sys.parameters)
        h1 = sys.involutive[0]
        tracker = ResidualTracker()
        for x in points:
            val = br.poisson_bracket(h1, app, x)
            tracker.add(abs(val + 1.0), 2.0)
        report.add(
            tracker.record(
                "cm-trivialized",
                "redefined third constant satisfies {H1, A''} = -1",
                _tol(tols, "cm-trivialized"),
            )
        )
        tracker = ResidualTracker()
        rows_tail = [sys.hamiltonian, h1, app]
        for x in points[:_AXIOM_POINTS]:
            for f in basis[: 2 * sys.n]:
                raw = br.nambu_bracket([f, *rows_tail], x)
                ref = br.poisson_bracket(f, sys.hamiltonian, x)
                tracker.add(abs(raw - ref), abs(raw) + abs(ref) + 1.0)
        report.add(
            tracker.record(
                "cm-trivialized-flow",
                "unnormalized bracket with (H, H1, A'') reproduces {f, H}",
                _tol(tols, "cm-trivialized"),
            )
        )

    report.wall_time_s = time.perf_counter() - t_start
    return report
