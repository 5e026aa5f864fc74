"""Registry of built-in maximally superintegrable systems, a JSON loader for
user-defined ones, and the symmetry-algebra verification harness.

Built-ins: the two-particle rational Calogero-Moser system, a charged
particle in a uniform perpendicular magnetic field (in an arbitrary gauge),
and the four Smorodinsky-Winternitz potentials.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .brackets import (
    PoissonBracketFunction,
    ResidualSample,
    poisson_bracket,
    as_array,
)
from .errors import (
    DefiningRelationError,
    DomainEvalError,
    SchemaError,
)
from .expr import ScalarField, parse_field
from .report import CheckRecord, ResidualTracker, VerificationReport, verdict_for

DEFAULT_MARGIN = 0.2
RELATION_TOL = 1e-8
DEFINING_TOL = 1e-9


@dataclass(frozen=True)
class AlgebraRelation:
    """One symmetry-algebra relation: a bracket of two named constants against
    a closed-form expression in the constants of motion and parameters.

    kind "eq" compares the bracket itself, "sq" compares its square.
    Relations flagged ``suspect`` downgrade a failed comparison to
    ERRATUM-SUSPECT instead of FAIL (misprint candidates in the source
    formulas; the measured residual is still reported).
    """

    label: str
    lhs: tuple[str, str]
    rhs: str
    kind: str = "eq"
    suspect: bool = False


@dataclass(frozen=True)
class PointwiseCheck:
    """|constant - expression(constants)| checked point by point."""

    label: str
    lhs: str
    rhs: str
    tol: float
    mode: str = "rel"  # "rel" -> residual/scale, "abs" -> raw residual


@dataclass(frozen=True)
class SystemSpec:
    """A maximally superintegrable system: H plus n-1 involutive constants
    plus n-1 additional constants, with sampling metadata."""

    name: str
    n: int
    parameters: dict
    hamiltonian: ScalarField
    involutive: tuple
    additional: tuple
    sample_box: tuple
    exclusions: tuple = ()
    margin: float = DEFAULT_MARGIN
    gauge: ScalarField | None = None
    aux: dict = dc_field(default_factory=dict)
    relations: tuple = ()
    pointwise_checks: tuple = ()

    def __post_init__(self):
        if len(self.involutive) != self.n - 1 or len(self.additional) != self.n - 1:
            raise SchemaError(
                f"system '{self.name}' needs {self.n - 1} involutive and "
                f"{self.n - 1} additional constants"
            )
        if len(self.sample_box) != 2 * self.n:
            raise SchemaError(
                f"sample box must list {2 * self.n} intervals, got {len(self.sample_box)}"
            )

    @property
    def coords(self) -> tuple:
        return self.hamiltonian.coords

    def constants(self) -> dict:
        """Named map of every constant of motion plus registered aux functions."""
        out = {"H": self.hamiltonian}
        for i, f in enumerate(self.involutive, start=1):
            out[f"H{i}"] = f
        for i, f in enumerate(self.additional, start=1):
            out[f"A{i}"] = f
        out.update(self.aux)
        return out

    def core_constants(self) -> dict:
        """The 2n-1 defining constants only, in relabeling order H_0..H_{2n-2}."""
        out = {"H": self.hamiltonian}
        for i, f in enumerate(self.involutive, start=1):
            out[f"H{i}"] = f
        for i, f in enumerate(self.additional, start=1):
            out[f"A{i}"] = f
        return out

    def defining_pairs(self):
        """Bracket pairs that must vanish: {H,H_i}, {H_i,H_j}, {H,A_i}."""
        pairs = []
        for i, hi in enumerate(self.involutive, start=1):
            pairs.append((f"{{H,H{i}}}", self.hamiltonian, hi))
        for i in range(len(self.involutive)):
            for j in range(i + 1, len(self.involutive)):
                pairs.append(
                    (f"{{H{i + 1},H{j + 1}}}", self.involutive[i], self.involutive[j])
                )
        for i, ai in enumerate(self.additional, start=1):
            pairs.append((f"{{H,A{i}}}", self.hamiltonian, ai))
        return pairs


# --- sampling ----------------------------------------------------------------


def sample_points(sys: SystemSpec, count: int, seed: int = 42) -> np.ndarray:
    """Uniform draws from the sample box, rejecting points inside exclusion
    margins.  Deterministic for a given seed."""
    if count <= 0:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in sys.sample_box])
    hi = np.array([b[1] for b in sys.sample_box])
    out = np.empty((count, 2 * sys.n))
    have = 0
    attempts = 0
    while have < count:
        attempts += 1
        if attempts > 10000 * count:
            raise RuntimeError(
                f"rejection sampling for '{sys.name}' failed: exclusions too tight"
            )
        x = lo + (hi - lo) * rng.random(2 * sys.n)
        ok = True
        for guard in sys.exclusions:
            if abs(guard.eval(x)) < sys.margin:
                ok = False
                break
        if ok:
            out[have] = x
            have += 1
    return out


# --- defining-relation scale -------------------------------------------------


def defining_relation_residual(f, g, x) -> ResidualSample:
    """|{f, g}| scaled by the product of gradient norms (bracket magnitude scale)."""
    arr = as_array(x)
    val = poisson_bracket(f, g, arr)
    na = float(np.linalg.norm(f.eval_grad(arr).gradient))
    nb = float(np.linalg.norm(g.eval_grad(arr).gradient))
    return ResidualSample(abs(val), na * nb + 1.0)


# --- symbolic partial derivatives (internal, gauge plumbing only) ------------


def _n(v: float) -> ex.Expr:
    return ex.Num(float(v))


def _is_zero(e) -> bool:
    return isinstance(e, ex.Num) and e.value == 0.0


def _is_one(e) -> bool:
    return isinstance(e, ex.Num) and e.value == 1.0


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return ex.Add(a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return ex.Neg(b)
    return ex.Sub(a, b)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return _n(0.0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return ex.Mul(a, b)


def _div(a, b):
    if _is_zero(a):
        return _n(0.0)
    if _is_one(b):
        return a
    return ex.Div(a, b)


def _diff(e: ex.Expr, var: str) -> ex.Expr:
    """Exact partial derivative of an AST; used to expand gauge gradients."""
    if isinstance(e, ex.Num) or isinstance(e, ex.Param):
        return _n(0.0)
    if isinstance(e, ex.Var):
        return _n(1.0 if e.name == var else 0.0)
    if isinstance(e, ex.Neg):
        return _sub(_n(0.0), _diff(e.child, var))
    if isinstance(e, ex.Add):
        return _add(_diff(e.left, var), _diff(e.right, var))
    if isinstance(e, ex.Sub):
        return _sub(_diff(e.left, var), _diff(e.right, var))
    if isinstance(e, ex.Mul):
        return _add(
            _mul(_diff(e.left, var), e.right), _mul(e.left, _diff(e.right, var))
        )
    if isinstance(e, ex.Div):
        num = _sub(
            _mul(_diff(e.left, var), e.right), _mul(e.left, _diff(e.right, var))
        )
        return _div(num, ex.Mul(e.right, e.right))
    if isinstance(e, ex.Pow):
        db = _diff(e.base, var)
        de = _diff(e.exponent, var)
        if _is_zero(de):
            if isinstance(e.exponent, ex.Num):
                c = e.exponent.value
                return _mul(_mul(_n(c), ex.Pow(e.base, _n(c - 1.0))), db)
            down = ex.Sub(e.exponent, _n(1.0))
            return _mul(_mul(e.exponent, ex.Pow(e.base, down)), db)
        # general u^w, assumes u > 0 where evaluated
        bracket = _add(
            _mul(de, ex.Call("ln", e.base)), _mul(e.exponent, _div(db, e.base))
        )
        return _mul(e, bracket)
    if isinstance(e, ex.Call):
        da = _diff(e.arg, var)
        if _is_zero(da):
            return _n(0.0)
        if e.fn == "sqrt":
            return _div(da, _mul(_n(2.0), ex.Call("sqrt", e.arg)))
        if e.fn == "ln":
            return _div(da, e.arg)
        if e.fn == "exp":
            return _mul(ex.Call("exp", e.arg), da)
        if e.fn == "sin":
            return _mul(ex.Call("cos", e.arg), da)
        if e.fn == "cos":
            return _sub(_n(0.0), _mul(ex.Call("sin", e.arg), da))
    raise TypeError(f"cannot differentiate {e!r}")


# --- built-in systems ---------------------------------------------------------

COORDS2 = ("q1", "q2", "p1", "p2")
_BOX2 = ((-2.0, 2.0),) * 4

DEFAULT_PARAMS = {
    "calogero-moser": {"m": 1.0, "g": 1.0},
    "landau": {"m": 1.0, "q": 1.0, "c": 1.0, "B": 1.0},
    "sw1": {"m": 1.0, "k": 1.0, "alpha1": 0.8, "beta1": 0.5},
    "sw2": {"m": 1.0, "omega": 1.0, "alpha2": 0.8, "beta2": 0.5},
    "sw3": {"m": 1.0, "kappa": 1.0, "alpha3": 0.8, "beta3": 0.5},
    "sw4": {"m": 1.0, "sigma": 1.0, "alpha4": 0.8, "beta4": 0.5},
}

_ALIASES = {
    "cm": "calogero-moser",
    "calogero_moser": "calogero-moser",
}


def _merge_params(name: str, params: Mapping | None) -> dict:
    out = dict(DEFAULT_PARAMS[name])
    for key, value in (params or {}).items():
        out[key] = value
    return out


def _require(params: dict, name: str, keys: Sequence[str]):
    missing = [k for k in keys if k not in params]
    if missing:
        raise SchemaError(f"system '{name}' missing parameters: {missing}")


def _cm(params: dict, variant: str) -> SystemSpec:
    _require(params, "calogero-moser", ("m", "g"))
    p = {k: float(params[k]) for k in ("m", "g")}
    h_text = "(p1^2 + p2^2)/(2*m) + g^2/(2*(q1 - q2)^2)"
    h = parse_field(h_text, COORDS2, p)
    h1 = parse_field(
        f"2*(q1 + q2)*({h_text}) - (q1*p1 + q2*p2)*(p1 + p2)/m", COORDS2, p
    )
    a1 = parse_field("(p1 + p2)/m", COORDS2, p)
    a1p = parse_field("(p1 - p2)^2/(2*m^2) + g^2/(m*(q1 - q2)^2)", COORDS2, p)
    if variant not in ("a1", "aprime"):
        raise SchemaError(f"unknown Calogero-Moser variant '{variant}'")
    active = a1 if variant == "a1" else a1p
    aux = {
        "A1p": a1p,
        "A1tot": a1,
        "B11": PoissonBracketFunction(h1, active),
        "B11p": PoissonBracketFunction(h1, a1p),
    }
    relations = (
        AlgebraRelation("{H1,A1tot} = 2 A1p", ("H1", "A1tot"), "2*A1p"),
        AlgebraRelation("{H1,A1p} = -2 A1tot A1p", ("H1", "A1p"), "-2*A1tot*A1p"),
        AlgebraRelation("{A1tot,A1p} = 0", ("A1tot", "A1p"), "0"),
        AlgebraRelation(
            "{H1,A1tot} = -A1tot^2 + 4H/m (quadratic algebra)",
            ("H1", "A1tot"),
            "-A1tot^2 + 4*H/m",
        ),
        AlgebraRelation(
            "{H1,B11p} = -12 A1p^2 + 16 A1p H/m", ("H1", "B11p"), "-12*A1p^2 + (16/m)*A1p*H"
        ),
        AlgebraRelation("{A1p,B11p} = 0", ("A1p", "B11p"), "0"),
        AlgebraRelation(
            "B11p^2 = -8 A1p^3 + 16 A1p^2 H/m",
            ("H1", "A1p"),
            "-8*A1p^3 + (16/m)*A1p^2*H",
            kind="sq",
        ),
    )
    pointwise = (
        PointwiseCheck(
            "third-constant dependence A1p = (4H - m A1tot^2)/(2m)",
            "A1p",
            "(4*H - m*A1tot^2)/(2*m)",
            1e-10,
        ),
    )
    return SystemSpec(
        name="calogero-moser",
        n=2,
        parameters=dict(p, variant=variant),
        hamiltonian=h,
        involutive=(h1,),
        additional=(active,),
        sample_box=_BOX2,
        exclusions=(parse_field("q1 - q2", COORDS2, {}),),
        aux=aux,
        relations=relations,
        pointwise_checks=pointwise,
    )


def landau_fields(params: Mapping, gauge: str | None = None) -> dict:
    """Vector potential, velocity components and derived data for the
    magnetic-field system; gauge is an expression chi(q1, q2) or None."""
    p = {k: float(params[k]) for k in ("m", "q", "c", "B")}
    omega = p["q"] * p["B"] / (p["m"] * p["c"])
    bind = dict(p, omega=omega)

    a1_expr = ex.parse("-(B/2)*q2", COORDS2, tuple(bind))
    a2_expr = ex.parse("(B/2)*q1", COORDS2, tuple(bind))
    chi_field = None
    if gauge:
        chi_expr = ex.parse(gauge, ("q1", "q2"), tuple(bind))
        chi_on_phase = ex.parse(gauge, COORDS2, tuple(bind))
        a1_expr = _add(a1_expr, _diff(chi_expr, "q1"))
        a2_expr = _add(a2_expr, _diff(chi_expr, "q2"))
        chi_field = ScalarField(chi_on_phase, COORDS2, bind)
    a1 = ScalarField(a1_expr, COORDS2, bind)
    a2 = ScalarField(a2_expr, COORDS2, bind)
    v1_text = f"(p1 - (q/c)*({ex.to_string(a1_expr)}))/m"
    v2_text = f"(p2 - (q/c)*({ex.to_string(a2_expr)}))/m"
    return {
        "a1": a1,
        "a2": a2,
        "v1": parse_field(v1_text, COORDS2, bind),
        "v2": parse_field(v2_text, COORDS2, bind),
        "v1_text": v1_text,
        "v2_text": v2_text,
        "chi": chi_field,
        "omega": omega,
        "charge": p["q"],
        "c": p["c"],
        "B": p["B"],
        "m": p["m"],
        "bind": bind,
    }


def _landau(params: dict, gauge: str | None) -> SystemSpec:
    _require(params, "landau", ("m", "q", "c", "B"))
    data = landau_fields(params, gauge)
    bind = data["bind"]
    h = parse_field(
        f"m*(({data['v1_text']})^2 + ({data['v2_text']})^2)/2", COORDS2, bind
    )
    h1 = parse_field(f"m*(({data['v2_text']}) + omega*q1)", COORDS2, bind)
    a1 = parse_field(f"-m*(({data['v1_text']}) - omega*q2)", COORDS2, bind)
    aux = {
        "v1": data["v1"],
        "v2": data["v2"],
        "B11": PoissonBracketFunction(h1, a1),
    }
    relations = (
        AlgebraRelation("{H1,A1} = -m omega", ("H1", "A1"), "-m*omega"),
        AlgebraRelation("{v1,H1} = 0", ("v1", "H1"), "0"),
        AlgebraRelation("{v2,H1} = 0", ("v2", "H1"), "0"),
        AlgebraRelation("{v1,A1} = 0", ("v1", "A1"), "0"),
        AlgebraRelation("{v2,A1} = 0", ("v2", "A1"), "0"),
        AlgebraRelation("{v1,v2} = qB/(m^2 c)", ("v1", "v2"), "q*B/(m^2*c)"),
    )
    pointwise = (
        PointwiseCheck(
            "detB is the nonzero constant -m omega", "B11", "-m*omega", 1e-12, "abs"
        ),
    )
    parameters = dict(
        {k: float(params[k]) for k in ("m", "q", "c", "B")},
        omega=data["omega"],
        gauge=gauge or "",
    )
    return SystemSpec(
        name="landau",
        n=2,
        parameters=parameters,
        hamiltonian=h,
        involutive=(h1,),
        additional=(a1,),
        sample_box=_BOX2,
        gauge=data["chi"],
        aux=aux,
        relations=relations,
        pointwise_checks=pointwise,
    )


_R = "sqrt(q1^2 + q2^2)"
_L = "(p2*q1 - p1*q2)"


def _sw(index: int, params: dict) -> SystemSpec:
    name = f"sw{index}"
    kin = "(p1^2 + p2^2)/(2*m)"
    if index == 1:
        _require(params, name, ("m", "k", "alpha1", "beta1"))
        p = {k: float(params[k]) for k in ("m", "k", "alpha1", "beta1")}
        h = parse_field(
            f"{kin} + (k/2)*(q1^2 + q2^2) + (alpha1/q1^2 + beta1/q2^2)/2", COORDS2, p
        )
        h1 = parse_field("p1^2/m + k*q1^2 + alpha1/q1^2", COORDS2, p)
        a1 = parse_field(
            f"{_L}^2/m + (q1^2 + q2^2)*(alpha1/q1^2 + beta1/q2^2)", COORDS2, p
        )
        b11_closed = parse_field(
            f"-(4/m)*({_L}*(p1*p2/m + k*q1*q2) - alpha1*q2*p2/q1^2 + beta1*q1*p1/q2^2)",
            COORDS2,
            p,
        )
        relations = (
            AlgebraRelation(
                "{H1,B11} = -(8/m)(H1(H1 - 2H) + 2k(A1 - alpha - beta))",
                ("H1", "B11"),
                "-(8/m)*(H1*(H1 - 2*H) + 2*k*(A1 - (alpha1 + beta1)))",
            ),
            AlgebraRelation(
                "{A1,B11} = (16/m)(H1 A1 - H A1 - (alpha - beta) H)",
                ("A1", "B11"),
                "(16/m)*(H1*A1 - H*A1 - (alpha1 - beta1)*H)",
            ),
            AlgebraRelation(
                "B11^2 polynomial in (H, H1, A1)",
                ("H1", "A1"),
                "-(16/m)*(A1*(H1^2 - 2*H1*H + k*A1 - 2*(alpha1 + beta1)*k) + 4*alpha1*H^2)"
                " + (16/m)*(alpha1 - beta1)*(2*H1*H - (alpha1 - beta1)*k)",
                kind="sq",
                suspect=True,
            ),
        )
        exclusions = ("q1", "q2")
        box = _BOX2
    elif index == 2:
        _require(params, name, ("m", "omega", "alpha2", "beta2"))
        p = {k: float(params[k]) for k in ("m", "omega", "alpha2", "beta2")}
        h = parse_field(
            f"{kin} + omega*(4*q1^2 + q2^2) + alpha2*q1 + beta2/q2^2", COORDS2, p
        )
        h1 = parse_field("p1^2/(2*m) + 4*omega*q1^2 + alpha2*q1", COORDS2, p)
        a1 = parse_field(
            f"2*{_L}*p2/m - q2^2*(4*omega*q1 + alpha2) + 4*beta2*q1/q2^2", COORDS2, p
        )
        b11_closed = parse_field(
            "-(2/m)*q2*p2*(8*omega*q1 + alpha2)"
            " - (2*p1/m)*(p2^2/m - 2*omega*q2^2 + 2*beta2/q2^2)",
            COORDS2,
            p,
        )
        relations = (
            AlgebraRelation(
                "{H1,B11} = (4/m)(alpha H1 - 2 omega A1 - alpha H)",
                ("H1", "B11"),
                "(4/m)*(alpha2*H1 - 2*omega*A1 - alpha2*H)",
            ),
            AlgebraRelation(
                "{A1,B11} = -(16/m)(3H1^2 - 4HH1 + H^2 + alpha A1/4 - 4 omega beta)",
                ("A1", "B11"),
                "-(16/m)*(3*H1^2 - 4*H*H1 + H^2 + (alpha2/4)*A1 - 4*omega*beta2)",
            ),
            AlgebraRelation(
                "B11^2 polynomial in (H, H1, A1)",
                ("H1", "A1"),
                "(8/m)*(4*H1*(H1 - H)^2 + alpha2*A1*(H1 - H) - omega*A1^2"
                " - beta2*(16*omega*H1 + alpha2^2))",
                kind="sq",
                suspect=True,
            ),
        )
        exclusions = ("q2",)
        box = _BOX2
    elif index == 3:
        _require(params, name, ("m", "kappa", "alpha3", "beta3"))
        p = {k: float(params[k]) for k in ("m", "kappa", "alpha3", "beta3")}
        h = parse_field(
            f"{kin} + (kappa + alpha3/({_R} + q1) + beta3/({_R} - q1))/(2*{_R})",
            COORDS2,
            p,
        )
        h1 = parse_field(
            f"{_L}^2/m + {_R}*(alpha3/({_R} + q1) + beta3/({_R} - q1))", COORDS2, p
        )
        a1 = parse_field(
            f"{_L}*p2/m - (alpha3*({_R} - q1)/({_R} + q1)"
            f" - beta3*({_R} + q1)/({_R} - q1) - kappa*q1)/(2*{_R})",
            COORDS2,
            p,
        )
        b11_closed = parse_field(
            f"-2*p1*{_L}^2/m^2"
            f" + (2*q2*{_L}/(m*{_R}))*(kappa/2 + alpha3/({_R} + q1) + beta3/({_R} - q1))"
            f" + (q2^2/(m*{_R}))*(q1*p1 + q2*p2)"
            f"*(alpha3/({_R} + q1)^2 - beta3/({_R} - q1)^2)",
            COORDS2,
            p,
        )
        relations = (
            AlgebraRelation(
                "{H1,B11} = -(1/m)(4 H1 A1 - kappa (alpha - beta))",
                ("H1", "B11"),
                "-(1/m)*(4*H1*A1 - kappa*(alpha3 - beta3))",
            ),
            AlgebraRelation(
                "{A1,B11} = (2/m)(A1^2 - 2H(2H1 - alpha - beta) - kappa^2/4)",
                ("A1", "B11"),
                "(2/m)*(A1^2 - 2*H*(2*H1 - (alpha3 + beta3)) - kappa^2/4)",
            ),
            AlgebraRelation(
                "B11^2 polynomial in (H, H1, A1)",
                ("H1", "A1"),
                "-(1/m)*(H1*(4*A1^2 - 8*H1*H + 8*(alpha3 + beta3)*H - kappa^2)"
                " - 2*(alpha3 - beta3)*(kappa*A1 + (alpha3 - beta3)*H)"
                " + kappa^2*(alpha3 + beta3))",
                kind="sq",
                suspect=True,
            ),
        )
        exclusions = (_R, f"{_R} - sqrt(q1^2)")
        box = _BOX2
    elif index == 4:
        _require(params, name, ("m", "sigma", "alpha4", "beta4"))
        p = {k: float(params[k]) for k in ("m", "sigma", "alpha4", "beta4")}
        h = parse_field(
            f"{kin} + (sigma + alpha4*sqrt({_R} + q1) + beta4*sqrt({_R} - q1))/(2*{_R})",
            COORDS2,
            p,
        )
        h1 = parse_field(
            f"(sigma*q1 - alpha4*({_R} - q1)*sqrt({_R} + q1))/(2*{_R})"
            f" + {_L}*p2/m + beta4*({_R} + q1)*sqrt({_R} - q1)/(2*{_R})",
            COORDS2,
            p,
        )
        a1 = parse_field(
            f"-(q1/(2*{_R}))*(alpha4*sqrt({_R} - q1) - beta4*sqrt({_R} + q1))"
            f" + {_L}*p1/m - sigma*q2/(2*{_R})",
            COORDS2,
            p,
        )
        b11_closed = None  # no printed closed form; B11 is computed numerically
        relations = (
            AlgebraRelation(
                "{H1,B11} = (2/m)(H A1 - alpha beta/4)",
                ("H1", "B11"),
                "(2/m)*(H*A1 - alpha4*beta4/4)",
            ),
            AlgebraRelation(
                "{A1,B11} = -(2/m)(H1 H - (alpha^2 - beta^2)/8)",
                ("A1", "B11"),
                "-(2/m)*(H1*H - (alpha4^2 - beta4^2)/8)",
                suspect=True,
            ),
            AlgebraRelation(
                "B11^2 polynomial in (H, H1, A1)",
                ("H1", "A1"),
                "(1/m)*(H1*(2*H*H1 - (alpha4^2 - beta4^2)/2)"
                " + A1*(2*H*A1 - alpha4*beta4)"
                " - (sigma/2)*(H + (alpha4^2 + beta4^2)/2))",
                kind="sq",
                suspect=True,
            ),
        )
        # the radicals sqrt(r -+ q1) are smooth only off the q1-axis; sample the
        # upper half plane
        exclusions = (f"{_R} - sqrt(q1^2)",)
        box = ((-2.0, 2.0), (0.0, 2.0), (-2.0, 2.0), (-2.0, 2.0))
    else:
        raise SchemaError(f"unknown potential index {index}")

    aux = {"B11": PoissonBracketFunction(h1, a1)}
    pointwise = ()
    if b11_closed is not None:
        aux["B11closed"] = b11_closed
        pointwise = (
            PointwiseCheck(
                "B11 matches its printed closed form", "B11", "B11closed", RELATION_TOL
            ),
        )
    relations = relations + (
        AlgebraRelation("{B11,H} = 0", ("B11", "H"), "0"),
    )
    return SystemSpec(
        name=name,
        n=2,
        parameters=p,
        hamiltonian=h,
        involutive=(h1,),
        additional=(a1,),
        sample_box=box,
        exclusions=tuple(parse_field(t, COORDS2, p) for t in exclusions),
        aux=aux,
        relations=relations,
        pointwise_checks=pointwise,
    )


BUILTIN_NAMES = ("calogero-moser", "landau", "sw1", "sw2", "sw3", "sw4")


def builtin(name: str, params: Mapping | None = None) -> SystemSpec:
    """Construct a registry system; ``params`` may carry the string-valued
    options ``gauge`` (landau) and ``variant`` (calogero-moser)."""
    key = _ALIASES.get(name, name)
    if key not in BUILTIN_NAMES:
        raise SchemaError(f"unknown system '{name}' (expected one of {BUILTIN_NAMES})")
    params = dict(params or {})
    gauge = params.pop("gauge", None) or None
    variant = str(params.pop("variant", "a1"))
    merged = _merge_params(key, params)
    if key == "calogero-moser":
        return _cm(merged, variant)
    if key == "landau":
        return _landau(merged, gauge)
    return _sw(int(key[2]), merged)


# --- JSON loader --------------------------------------------------------------


def _default_coords(n: int) -> tuple:
    return tuple(f"q{i}" for i in range(1, n + 1)) + tuple(
        f"p{i}" for i in range(1, n + 1)
    )


def load(path) -> SystemSpec:
    """Load a user-defined system, compile its expressions, and spot-check the
    defining relations at 10 sample points before accepting it."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from e

    def need(key, typ):
        if key not in raw:
            raise SchemaError(f"missing required key '{key}'")
        if not isinstance(raw[key], typ):
            raise SchemaError(f"key '{key}' has wrong type (expected {typ.__name__})")
        return raw[key]

    name = need("name", str)
    n = need("n", int)
    if n < 1:
        raise SchemaError("n must be a positive integer")
    params = {k: float(v) for k, v in need("parameters", dict).items()}
    coords = tuple(raw.get("coordinates", _default_coords(n)))
    if len(coords) != 2 * n:
        raise SchemaError(f"expected {2 * n} coordinates, got {len(coords)}")

    def compile_one(text: str) -> ScalarField:
        if not isinstance(text, str):
            raise SchemaError(f"expression entries must be strings, got {text!r}")
        return parse_field(text, coords, params)

    h = compile_one(need("hamiltonian", str))
    involutive = tuple(compile_one(t) for t in need("involutive", list))
    additional = tuple(compile_one(t) for t in need("additional", list))
    if len(involutive) != n - 1 or len(additional) != n - 1:
        raise SchemaError(
            f"expected {n - 1} involutive and {n - 1} additional constants,"
            f" got {len(involutive)} and {len(additional)}"
        )
    box_raw = raw.get("sample_box", [[-2.0, 2.0]] * (2 * n))
    if len(box_raw) != 2 * n:
        raise SchemaError(f"sample_box must list {2 * n} intervals")
    box = tuple((float(lo), float(hi)) for lo, hi in box_raw)
    exclusions = tuple(compile_one(t) for t in raw.get("exclusions", []))
    relations = []
    for i, rel in enumerate(raw.get("relations", [])):
        lhs = rel.get("lhs")
        if not (isinstance(lhs, list) and len(lhs) == 2):
            raise SchemaError(f"relation #{i}: lhs must name two constants")
        kind = rel.get("kind", "eq")
        if kind not in ("eq", "sq"):
            raise SchemaError(f"relation #{i}: kind must be 'eq' or 'sq'")
        relations.append(
            AlgebraRelation(
                rel.get("label", f"relation #{i}"),
                (lhs[0], lhs[1]),
                rel["rhs"],
                kind=kind,
            )
        )

    spec = SystemSpec(
        name=name,
        n=n,
        parameters=params,
        hamiltonian=h,
        involutive=involutive,
        additional=additional,
        sample_box=box,
        exclusions=exclusions,
        aux={
            f"B{i + 1}{j + 1}": PoissonBracketFunction(hi, aj)
            for i, hi in enumerate(involutive)
            for j, aj in enumerate(additional)
        },
        relations=tuple(relations),
    )

    for x in sample_points(spec, 10, seed=0):
        for label, f, g in spec.defining_pairs():
            r = defining_relation_residual(f, g, x)
            if r.relative > 1e-8:
                raise DefiningRelationError(
                    f"system '{name}': {label} = {poisson_bracket(f, g, x):.3e}"
                    f" (relative residual {r.relative:.3e}) at {list(x)}"
                )
    return spec


# --- verification -------------------------------------------------------------


def _pseudo_field(rhs: str, names: Sequence[str], params: Mapping) -> ScalarField:
    return parse_field(rhs, tuple(names), params)


def verify_algebra(
    sys: SystemSpec, points: np.ndarray, tol: float = RELATION_TOL
) -> VerificationReport:
    """Check the defining relations, every registered algebra relation, and
    every pointwise identity of the system over the given points."""
    report = VerificationReport(
        system=sys.name,
        parameters={k: v for k, v in sys.parameters.items()},
        seed=-1,
        samples=len(points),
        tolerances={"relation": tol, "defining": DEFINING_TOL},
    )
    constants = sys.constants()
    names = sorted(constants)

    for label, f, g in sys.defining_pairs():
        tracker = ResidualTracker()
        for x in points:
            tracker.add_sample(defining_relation_residual(f, g, x))
        report.add(
            tracker.record(
                f"defining:{label}",
                f"defining relation {label} = 0",
                DEFINING_TOL,
            )
        )

    for rel in sys.relations:
        a, b = (constants[nm] for nm in rel.lhs)
        rhs = _pseudo_field(rel.rhs, names, sys.parameters)
        tracker = ResidualTracker()
        for x in points:
            try:
                lhs_val = poisson_bracket(a, b, x)
                if rel.kind == "sq":
                    lhs_val = lhs_val * lhs_val
                pseudo = np.array([constants[nm].eval(x) for nm in names])
                rhs_val = rhs.eval(pseudo)
            except DomainEvalError as e:
                raise DomainEvalError(
                    f"{e} while checking '{rel.label}' at {list(x)}", e.subexpression
                ) from e
            tracker.add(abs(lhs_val - rhs_val), abs(lhs_val) + abs(rhs_val) + 1.0)
        kind = "squared-relation" if rel.kind == "sq" else "relation"
        report.add(
            tracker.record(
                f"{kind}:{{{rel.lhs[0]},{rel.lhs[1]}}}",
                rel.label,
                tol,
                suspect=rel.suspect,
            )
        )

    for chk in sys.pointwise_checks:
        lhs_f = constants[chk.lhs]
        rhs = _pseudo_field(chk.rhs, names, sys.parameters)
        tracker = ResidualTracker()
        for x in points:
            lhs_val = lhs_f.eval(x)
            pseudo = np.array([constants[nm].eval(x) for nm in names])
            rhs_val = rhs.eval(pseudo)
            scale = 1.0 if chk.mode == "abs" else abs(lhs_val) + abs(rhs_val) + 1.0
            tracker.add(abs(lhs_val - rhs_val), scale)
        report.add(
            tracker.record(f"pointwise:{chk.lhs}", chk.label, chk.tol)
        )
    return report


def structure_relation_residual(
    sys: SystemSpec, r_field, x_expr: str, x
) -> ResidualSample:
    """{R, X(H, H_i, A_j)} against its chain-rule expansion through the
    generator brackets: {R,X} = sum_c {R, c} dX/dc."""
    core = sys.core_constants()
    names = list(core)
    params = dict(sys.parameters)
    pseudo_expr = ex.parse(x_expr, names, tuple(params))
    composite = ex.substitute(
        pseudo_expr, {nm: core[nm].expr for nm in names}
    )
    composite_field = ScalarField(composite, sys.coords, params)
    arr = as_array(x, 2 * sys.n)
    lhs = poisson_bracket(r_field, composite_field, arr)

    pseudo_field = ScalarField(pseudo_expr, tuple(names), params)
    c_vals = np.array([core[nm].eval(arr) for nm in names])
    dx = pseudo_field.eval_grad(c_vals).gradient
    terms = [
        poisson_bracket(r_field, core[nm], arr) * dx[i] for i, nm in enumerate(names)
    ]
    rhs = float(np.sum(terms))
    scale = abs(lhs) + float(np.sum(np.abs(terms))) + 1.0
    return ResidualSample(abs(lhs - rhs), scale)


def cm_trivializing_constant(params: Mapping) -> ScalarField:
    """A third Calogero-Moser constant with unit bracket against H_1.

    Built as ln((h - A1)/(h + A1))/(2h) with h = 2 sqrt(H/m); on real phase
    points h > |A1| always holds (detB = h^2 - A1^2 > 0), so this ratio is
    the positive branch of the defining logarithm.  Outside it (h <= |A1|,
    only reachable in an extended parameter domain) evaluation raises a
    domain error.
    """
    p = {k: float(params[k]) for k in ("m", "g")}
    h_text = "(p1^2 + p2^2)/(2*m) + g^2/(2*(q1 - q2)^2)"
    a1_text = "(p1 + p2)/m"
    hh = f"(2*sqrt(({h_text})/m))"
    return parse_field(
        f"ln(({hh} - ({a1_text}))/({hh} + ({a1_text})))/(2*{hh})", COORDS2, p
    )
