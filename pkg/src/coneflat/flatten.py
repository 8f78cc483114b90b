"""Flatness certification for cone structures given by adapted coframes.

Pipeline: pointwise characteristic membership, exact conformal
closedness of the coframe, integration of the trace covector to a
potential h, the conformal factor f = e^{-h}, and flat coordinates with
d zeta = f omega.  Everything stays in exact arithmetic while the
potential is a rational-log combination; identities that are theorems
at that point are still re-verified, and a violation raises
InternalIdentityError instead of producing a wrong certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from coneflat import xi
from coneflat._antideriv import (
    AntiderivativeError,
    GridPotential,
    LogCombination,
    QuadratureError,
    integrate_closed_form,
)
from coneflat.coframe import (
    Coframe,
    exterior_derivative,
    float_points,
    sample_points,
    structure_function,
)
from coneflat.cone import ConeStructure, characteristic_check, sample_cone
from coneflat.funcfield import PoleError, RatFunc


class FlattenError(ValueError):
    """Bad input to a pipeline stage."""


class InternalIdentityError(RuntimeError):
    """An identity that is a theorem at this point of the pipeline
    failed to verify; this signals a bug, not a property of the input."""


# ---------------------------------------------------------------------------
# closedness
# ---------------------------------------------------------------------------

@dataclass
class ClosednessVerdict:
    """Outcome of the conformal-closedness test.

    status is one of "closed", "conformally_closed",
    "not_conformally_closed".  xi holds the recovered covector in frame
    components, one_form its coordinate expression s with
    s_i = sum_a xi_a A[a][i], so that d omega^k = s wedge omega^k.
    """

    status: str
    xi: tuple[RatFunc, ...] | None = None
    one_form: tuple[RatFunc, ...] | None = None
    witness: tuple | None = None
    residual: float | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.status != "not_conformally_closed"


def _sharp(cf: Coframe, xi_row: Sequence[RatFunc]) -> list[RatFunc]:
    """Coordinate components of the 1-form sum_a xi_a omega^a."""
    n = cf.n
    return [sum((xi_row[a] * cf.a[a][i] for a in range(n)),
                RatFunc.const(n, 0)) for i in range(n)]


def conformal_closedness_test(cf: Coframe, witness_samples: int = 8,
                              seed=0) -> ClosednessVerdict:
    """Decide whether some rescaling f*omega is closed, exactly.

    The candidate covector is read off the structure function by the
    trace formula; the verdict rests on the exact rational-function
    identity d omega^k = (xi sharp omega) wedge omega^k.  On failure a
    sampled witness carries the Euclidean distance from the evaluated
    structure tensor to the contraction image.
    """
    n = cf.n
    zero = RatFunc.const(n, 0)
    w = exterior_derivative(cf)
    if not w.components:
        return ClosednessVerdict("closed", xi=tuple([zero] * n),
                                 one_form=tuple([zero] * n))
    struct = structure_function(cf)
    xi_row = struct.trace_covector()
    s = _sharp(cf, xi_row)
    identity_holds = True
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                lhs = w.components.get((k, i, j), zero)
                if lhs != s[i] * cf.a[k][j] - s[j] * cf.a[k][i]:
                    identity_holds = False
                    break
            if not identity_holds:
                break
        if not identity_holds:
            break

    if identity_holds:
        # d(xi sharp omega) = 0 is implied; a failure here is a bug
        for i in range(n):
            for j in range(i + 1, n):
                if s[j].diff(i) != s[i].diff(j):
                    raise InternalIdentityError(
                        "d omega = s wedge omega holds but ds != 0")
        if all(c.is_zero() for c in xi_row):
            raise InternalIdentityError(
                "zero trace covector with nonzero d omega")
        return ClosednessVerdict("conformally_closed", xi=tuple(xi_row),
                                 one_form=tuple(s))

    xiv = xi.xi_V(n)
    points = sample_points(cf.chart, witness_samples, f"{seed}:cw",
                           avoid=cf.pole_polynomials())
    for x in points:
        tensor = xi.HomTensor(n, struct.evaluate_at(x))
        res = xi.membership(tensor, xiv)
        if not res.member:
            return ClosednessVerdict(
                "not_conformally_closed", witness=x,
                residual=math.sqrt(float(res.residual)),
                details={"residual_metric":
                         "euclidean distance to the contraction image"})
    raise InternalIdentityError(
        "structure function escapes the contraction image as a rational "
        "function but at no sampled point")


# ---------------------------------------------------------------------------
# the potential h
# ---------------------------------------------------------------------------

@dataclass
class HPotential:
    """Potential with dh = xi sharp omega, symbolic when the residue
    scan succeeds, quadrature-backed otherwise."""

    mode: str                         # "symbolic" | "grid"
    one_form: tuple[RatFunc, ...]
    symbolic: LogCombination | None = None
    grid: GridPotential | None = None

    def evaluate(self, point) -> float:
        if self.symbolic is not None:
            return self.symbolic.evaluate(point)
        return self.grid.evaluate(point)

    def terms(self) -> list[str]:
        names = None
        if self.symbolic is not None:
            out = []
            if not self.symbolic.rational_part.is_zero():
                out.append("rational " + self.symbolic.rational_part.to_string(names))
            for m, arg, arg_base in self.symbolic.logs:
                out.append(f"{m}*log(({arg.to_string(names)})/({arg_base}))")
            return out or ["0"]
        return [f"quadrature grid, tol {self.grid.tol}"]


def integrate_h(cf: Coframe, xi_row: Sequence[RatFunc], mode: str = "auto",
                quad_tol: float = 1e-10) -> HPotential:
    """Solve dh = xi sharp omega with h(base) = 0.

    The one-form must be exactly closed; that is re-verified here since
    integration relies on it.  mode "auto" prefers the symbolic
    antiderivative and falls back to path quadrature, "symbolic" and
    "grid" force the respective representation.
    """
    n = cf.n
    s = _sharp(cf, xi_row)
    for i in range(n):
        for j in range(i + 1, n):
            if s[j].diff(i) != s[i].diff(j):
                raise FlattenError("xi sharp omega is not closed")
    base = cf.chart.base_point
    if mode not in ("auto", "symbolic", "grid"):
        raise FlattenError(f"unknown integration mode {mode!r}")
    if mode in ("auto", "symbolic"):
        combo = integrate_closed_form(s, base)
        if combo is not None:
            return HPotential("symbolic", tuple(s), symbolic=combo)
        if mode == "symbolic":
            raise FlattenError("no rational-log antiderivative found; "
                               "use grid mode")
    return HPotential("grid", tuple(s),
                      grid=GridPotential(s, base, tol=quad_tol))


# ---------------------------------------------------------------------------
# the conformal factor
# ---------------------------------------------------------------------------

@dataclass
class ConformalFactor:
    """f = e^{-h}, rational when h collapses; f(base) = 1."""

    kind: str                         # "rational" | "numeric"
    rational: RatFunc | None
    h: HPotential
    max_residual: float = 0.0
    samples: int = 0
    details: dict = field(default_factory=dict)

    def evaluate(self, point) -> float:
        if self.rational is not None:
            return float(self.rational.evaluate([float(v) for v in point]))
        return math.exp(-self.h.evaluate(point))


def conformal_factor(cf: Coframe, h: HPotential, validation_samples: int = 20,
                     seed=0, tol: float = 1e-9) -> ConformalFactor:
    """The factor making f*omega closed.

    Rational f: d(f omega) = 0 is verified exactly, residual 0.  Other
    representations: the residual of d(f omega), written through
    df = -f dh, is evaluated in floating point at pole-free samples;
    exceeding the tolerance means the pipeline itself is broken.
    """
    n = cf.n
    base = cf.chart.base_point
    f_rat = h.symbolic.exp_neg_rational() if h.symbolic is not None else None
    if f_rat is not None:
        for k in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    if (f_rat * cf.a[k][j]).diff(i) != (f_rat * cf.a[k][i]).diff(j):
                        raise InternalIdentityError(
                            "rational factor does not close f*omega")
        if f_rat.evaluate(base) != 1:
            raise InternalIdentityError("factor not normalized at base point")
        return ConformalFactor("rational", f_rat, h,
                               details={"verification": "exact"})

    s = h.one_form
    # bounded box: quadrature paths from the base must not cross poles
    points = float_points(cf.chart, validation_samples, f"{seed}:cf",
                          avoid=cf.pole_polynomials())
    worst = 0.0
    for x in points:
        xf = list(x)
        fval = math.exp(-h.evaluate(xf))
        aval = [[float(cf.a[k][j].evaluate(xf)) for j in range(n)]
                for k in range(n)]
        da = [[[float(cf.a[k][j].diff(i).evaluate(xf)) for j in range(n)]
               for k in range(n)] for i in range(n)]
        sval = [float(s[i].evaluate(xf)) for i in range(n)]
        for k in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    # d_i(f a_kj) - d_j(f a_ki) with df = -f s
                    r = fval * (da[i][k][j] - sval[i] * aval[k][j]
                                - da[j][k][i] + sval[j] * aval[k][i])
                    worst = max(worst, abs(r))
    if worst > tol:
        raise InternalIdentityError(
            f"d(f omega) residual {worst:.3e} above tolerance {tol:.1e}")
    return ConformalFactor("numeric", None, h, max_residual=worst,
                           samples=len(points),
                           details={"verification":
                                    "float residual via df = -f dh"})


# ---------------------------------------------------------------------------
# flat coordinates
# ---------------------------------------------------------------------------

class _ScaledFormComponent:
    """Evaluates f(x) * a_kj(x) for quadrature when f is non-rational."""

    def __init__(self, factor: ConformalFactor, entry: RatFunc):
        self.factor = factor
        self.entry = entry

    def evaluate(self, point):
        return self.factor.evaluate(point) * float(self.entry.evaluate(
            [float(v) for v in point]))


@dataclass
class FlatChart:
    """zeta with d zeta = f omega and zeta(base) = 0."""

    mode: str                          # "symbolic" | "grid" | "mixed"
    components: tuple
    jacobian_base: list
    cone_product_residual: float | None = None
    max_path_residual: float = 0.0
    samples: int = 0
    details: dict = field(default_factory=dict)

    def evaluate(self, point) -> list[float]:
        return [c.evaluate(point) for c in self.components]

    def component_terms(self) -> list[list[str]]:
        out = []
        for c in self.components:
            if isinstance(c, LogCombination):
                terms = []
                if not c.rational_part.is_zero():
                    terms.append("rational " + c.rational_part.to_string())
                for m, arg, arg_base in c.logs:
                    terms.append(f"{m}*log(({arg.to_string()})/({arg_base}))")
                out.append(terms or ["0"])
            else:
                out.append([f"quadrature grid, tol {c.tol}"])
        return out


def _differential_at(cf: Coframe, factor: ConformalFactor, xf: list[float]):
    n = cf.n
    fval = factor.evaluate(xf)
    return [[fval * float(cf.a[k][j].evaluate(xf)) for j in range(n)]
            for k in range(n)]


def flat_coordinates(cf: Coframe, factor: ConformalFactor,
                     cs: ConeStructure | None = None,
                     validation_samples: int = 100, seed=0,
                     tol: float = 1e-9,
                     quad_tol: float = 1e-10) -> FlatChart:
    """Integrate f*omega to the flat chart map.

    The Jacobian at the base point is f(base)*A(base) = A(base) and must
    be invertible.  When a cone structure is supplied, sampled cone
    points (x, y) are pushed through the differential and the cone
    equation is evaluated at f(x)*A(x)y; the normalized deviation is the
    product-structure residual.
    """
    n = cf.n
    base = cf.chart.base_point
    try:
        jac = [[cf.a[k][j].evaluate(base) for j in range(n)] for k in range(n)]
    except PoleError as exc:
        raise FlattenError("coframe has a pole at the base point") from exc
    if _det_fractions(jac) == 0:
        raise InternalIdentityError("Jacobian of zeta degenerates at the "
                                    "base point")

    components = []
    modes = []
    if factor.rational is not None:
        for k in range(n):
            row = [factor.rational * cf.a[k][j] for j in range(n)]
            combo = integrate_closed_form(row, base)
            if combo is not None:
                components.append(combo)
                modes.append("symbolic")
            else:
                components.append(GridPotential(row, base, tol=quad_tol))
                modes.append("grid")
    else:
        for k in range(n):
            row = [_ScaledFormComponent(factor, cf.a[k][j]) for j in range(n)]
            components.append(GridPotential(row, base, tol=quad_tol))
            modes.append("grid")
    if all(m == "symbolic" for m in modes):
        mode = "symbolic"
    elif all(m == "grid" for m in modes):
        mode = "grid"
    else:
        mode = "mixed"

    chart = FlatChart(mode, tuple(components), jac)
    chart.details["jacobian"] = "f(base) * A(base), f(base) = 1"

    if cs is not None:
        pts = sample_cone(cs, validation_samples, f"{seed}:zeta", field="float")
        worst = 0.0
        deg = cs.z.degree
        for x, y in pts:
            xf = [float(v) for v in x]
            dz = _differential_at(cf, factor, xf)
            w = [sum(dz[k][j] * y[j] for j in range(n)) for k in range(n)]
            val = abs(cs.z.f.evaluate(list(w)))
            scale = max(1.0, max(abs(c) for c in w) ** deg)
            worst = max(worst, val / scale)
        chart.cone_product_residual = worst
        chart.samples = len(pts)
        if worst > tol:
            raise InternalIdentityError(
                f"cone-product deviation {worst:.3e} above tolerance {tol:.1e}")
    for c in components:
        if isinstance(c, GridPotential):
            chart.max_path_residual = max(chart.max_path_residual,
                                          c.max_path_residual())
    return chart


def _det_fractions(mat) -> Fraction:
    n = len(mat)
    m = [list(map(Fraction, row)) for row in mat]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = Fraction(1) / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] * inv
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return det


# ---------------------------------------------------------------------------
# the certificate
# ---------------------------------------------------------------------------

@dataclass
class CertifyConfig:
    membership_samples: int = 25
    validation_samples: int = 100
    witness_samples: int = 8
    seed: object = 0
    tol_membership: float = 1e-8
    quad_tol: float = 1e-10
    validation_tol: float = 1e-9
    integration_mode: str = "auto"

    def echo(self) -> dict:
        return {
            "membership_samples": self.membership_samples,
            "validation_samples": self.validation_samples,
            "witness_samples": self.witness_samples,
            "seed": str(self.seed),
            "tol_membership": self.tol_membership,
            "quad_tol": self.quad_tol,
            "validation_tol": self.validation_tol,
            "integration_mode": self.integration_mode,
        }


@dataclass
class FlattenCertificate:
    status: str                        # flat | conformally_flat | rejected | error
    stage: str
    config: CertifyConfig
    verdict: ClosednessVerdict | None = None
    characteristic: object = None
    h: HPotential | None = None
    factor: ConformalFactor | None = None
    zeta: FlatChart | None = None
    residuals: dict = field(default_factory=dict)
    witness: dict | None = None
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.status in ("flat", "conformally_flat")

    def to_json(self) -> dict:
        xi_strings = None
        if self.verdict is not None and self.verdict.xi is not None:
            xi_strings = [c.to_string() for c in self.verdict.xi]
        h_terms = self.h.terms() if self.h is not None else None
        if self.factor is None:
            f_string = None
        elif self.factor.rational is not None:
            f_string = self.factor.rational.to_string()
        else:
            f_string = "numeric: exp(-h)"
        zeta_out = None
        if self.zeta is not None:
            zeta_out = {"mode": self.zeta.mode,
                        "components": self.zeta.component_terms()}
        return {
            "status": self.status,
            "stage": self.stage,
            "xi": xi_strings,
            "h_terms": h_terms,
            "f": f_string,
            "zeta": zeta_out,
            "residuals": dict(self.residuals),
            "witness": self.witness,
            "config_echo": self.config.echo(),
            "notes": list(self.notes),
        }


def certify(cs: ConeStructure, xiZ: xi.TensorSubspace,
            config: CertifyConfig | None = None) -> FlattenCertificate:
    """Run the full pipeline and emit a certificate.

    Rejection (a mathematically meaningful negative) is reported with a
    witness; an InternalIdentityError anywhere is reported as status
    "error" with the failing stage.
    """
    cfg = config or CertifyConfig()
    cert = FlattenCertificate(status="error", stage="characteristic_check",
                              config=cfg)
    try:
        char = characteristic_check(cs, xiZ, samples=cfg.membership_samples,
                                    seed=cfg.seed, tol=cfg.tol_membership)
        cert.characteristic = char
        cert.residuals["membership_max"] = (
            max((r for _, r in char.failures), default=0.0)
            if char.failures else 0.0)
        if xiZ.dim == cs.n:
            cert.notes.append("dim xi_Z equals dim xi_V; membership in "
                              "xi_Z certifies membership in xi_V")
        else:
            cert.notes.append(f"dim xi_Z = {xiZ.dim} differs from "
                              f"dim xi_V = {cs.n}; the pointwise check is "
                              "necessary only")
        if not char.verdict:
            cert.status = "rejected"
            cert.witness = {"stage": "characteristic_check",
                            "point": [str(v) for v in char.witness],
                            "residual": char.witness_residual}
            return cert

        cert.stage = "conformal_closedness_test"
        verdict = conformal_closedness_test(
            cs.coframe, witness_samples=cfg.witness_samples, seed=cfg.seed)
        cert.verdict = verdict
        cert.residuals["closedness"] = (verdict.residual
                                        if verdict.residual is not None
                                        else 0.0)
        if not verdict:
            cert.status = "rejected"
            cert.witness = {"stage": "conformal_closedness_test",
                            "point": [str(v) for v in verdict.witness],
                            "residual": verdict.residual}
            return cert

        cert.stage = "integrate_h"
        h = integrate_h(cs.coframe, verdict.xi, mode=cfg.integration_mode,
                        quad_tol=cfg.quad_tol)
        cert.h = h

        cert.stage = "conformal_factor"
        factor = conformal_factor(cs.coframe, h,
                                  validation_samples=min(
                                      cfg.validation_samples, 25),
                                  seed=cfg.seed, tol=cfg.validation_tol)
        cert.factor = factor
        cert.residuals["d_f_omega"] = factor.max_residual

        cert.stage = "flat_coordinates"
        zeta = flat_coordinates(cs.coframe, factor, cs=cs,
                                validation_samples=cfg.validation_samples,
                                seed=cfg.seed, tol=cfg.validation_tol,
                                quad_tol=cfg.quad_tol)
        cert.zeta = zeta
        cert.residuals["cone_product"] = zeta.cone_product_residual
        cert.residuals["quadrature_paths"] = zeta.max_path_residual

        trivially_one = (factor.rational is not None
                         and factor.rational == RatFunc.const(cs.n, 1))
        if verdict.status == "closed" or trivially_one:
            cert.status = "flat"
        else:
            cert.status = "conformally_flat"
        return cert
    except InternalIdentityError as exc:
        cert.status = "error"
        cert.notes.append(f"{cert.stage}: {exc}")
        return cert
    except (AntiderivativeError, QuadratureError) as exc:
        cert.status = "error"
        cert.notes.append(f"{cert.stage}: {type(exc).__name__}: {exc}")
        return cert
