"""Projective hypersurfaces and the cone structures they induce.

An adapted coframe omega on a chart M turns a hypersurface Z in P(V)
into the field of cones C_x = {[y] : f(A(x) y) = 0} inside P T(M).
This module builds that presentation, samples points of the cones
exactly over prime fields or numerically over the complex numbers, and
runs the two dynamical checks relating the geodesic flow to the
structure tensor: flow tangency and the double-bracket identity.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from coneflat import _modp, xi
from coneflat.coframe import Chart, Coframe, dual_frame, float_points, \
    geodesic_flow, induced_coframe, sample_points, structure_function, \
    tangent_dual_frame
from coneflat.funcfield import MultiPoly, PoleError, RatFunc, parse_poly


class ConeError(ValueError):
    """Dimension mismatch or structurally invalid cone data."""


class ConeSamplingError(RuntimeError):
    """Could not produce the requested cone samples."""


# ---------------------------------------------------------------------------
# hypersurfaces
# ---------------------------------------------------------------------------

class Hypersurface:
    """Projective hypersurface {f = 0} with homogeneous f of degree >= 2.

    Degree 1 is excluded: a hyperplane has no tangent-cone content and
    the downstream theory assumes non-linearity.  The smoothness field
    starts as None and is filled in by smooth_check.
    """

    def __init__(self, f: MultiPoly, degree: int | None = None):
        if f.is_zero():
            raise ConeError("defining polynomial must be nonzero")
        if f.nvars < 3:
            raise ConeError("hypersurfaces live in at least 3 homogeneous "
                            "variables here")
        d = f.total_degree()
        if degree is not None and degree != d:
            raise ConeError(f"declared degree {degree} but polynomial has "
                            f"degree {d}")
        if not f.is_homogeneous(d):
            raise ConeError("defining polynomial must be homogeneous")
        if d < 2:
            raise ConeError("degree must be at least 2")
        self.f = f
        self.n = f.nvars
        self.degree = d
        self.smoothness: SmoothnessReport | None = None

    def gradient(self) -> list[MultiPoly]:
        return [self.f.diff(i) for i in range(self.n)]

    def __repr__(self):
        return f"Hypersurface(n={self.n}, degree={self.degree})"


def hypersurface_from_json(data: dict) -> Hypersurface:
    try:
        n = int(data["n"])
        text = str(data["f"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConeError(f"malformed variety data: {exc}") from None
    names = [f"x{i + 1}" for i in range(n)]
    f = parse_poly(text, names)
    degree = int(data["degree"]) if "degree" in data else None
    return Hypersurface(f, degree)


def hypersurface_to_json(z: Hypersurface) -> dict:
    names = [f"x{i + 1}" for i in range(z.n)]
    return {"n": z.n, "degree": z.degree, "f": z.f.to_string(names)}


# ---------------------------------------------------------------------------
# smoothness
# ---------------------------------------------------------------------------

@dataclass
class SmoothnessReport:
    verdict: str                       # "smooth" | "singular" | "inconclusive"
    method: str
    witness: tuple | None = None       # exact rational witness when verified
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict == "smooth"


def _diagonal_coefficients(f: MultiPoly) -> list[Fraction] | None:
    """Coefficients a_i if f = sum a_i x_i^d (missing variables get 0),
    else None."""
    n = f.nvars
    d = f.total_degree()
    coeffs = [Fraction(0)] * n
    for exp, c in f.terms.items():
        live = [i for i, e in enumerate(exp) if e]
        if len(live) != 1 or exp[live[0]] != d:
            return None
        coeffs[live[0]] = c
    return coeffs


def _search_primes(n: int) -> tuple[int, int]:
    """Largest prime pair keeping the projective enumeration near 3e4
    points per prime."""
    for p, q in ((101, 103), (29, 31), (13, 17), (7, 11), (5, 7), (3, 5)):
        if sum(p ** m for m in range(n)) <= 35000:
            return (p, q)
    return (3, 5)


def _projective_reps(n: int, p: int):
    """One representative per point of P^{n-1}(GF(p)): the last nonzero
    coordinate is 1."""
    for m in range(n):
        tail = (1,) + (0,) * (n - 1 - m)
        for head in itertools.product(range(p), repeat=m):
            yield head + tail


def smooth_check(z: Hypersurface, primes: tuple[int, int] | None = None) -> SmoothnessReport:
    """Is {f = 0} smooth away from the origin of the cone?

    Diagonal forms get an exact verdict (the gradient d a_i x_i^{d-1}
    vanishes off the origin iff some a_i is zero).  Otherwise the full
    projective space over two small primes is searched for common zeros
    of the partials: a hit that lifts to an exact rational singular
    point gives "singular"; a hit that does not lift gives
    "inconclusive"; no hit over either prime gives "smooth" (a modular
    certificate, wrong only if both primes are primes of bad reduction).
    The report is cached on the hypersurface.
    """
    diag = _diagonal_coefficients(z.f)
    if diag is not None:
        missing = [i for i, c in enumerate(diag) if c == 0]
        if not missing:
            report = SmoothnessReport("smooth", "diagonal")
        else:
            witness = tuple(Fraction(1) if i == missing[0] else Fraction(0)
                            for i in range(z.n))
            report = SmoothnessReport("singular", "diagonal", witness,
                                      {"missing_variables": missing})
        z.smoothness = report
        return report

    primes = primes or _search_primes(z.n)
    grads = z.gradient()
    modular_hits: dict[int, list[tuple[int, ...]]] = {}
    for p in primes:
        tables = [g.reduce_mod_prime(p) for g in grads]
        f_table = z.f.reduce_mod_prime(p)
        hits = []
        for u in _projective_reps(z.n, p):
            if any(_eval_table(t, u, p) for t in tables):
                continue
            if _eval_table(f_table, u, p):
                continue
            hits.append(u)
        modular_hits[p] = hits
        for u in hits:
            candidate = tuple(Fraction(v if v <= p // 2 else v - p) for v in u)
            if any(candidate) and all(g.evaluate(candidate) == 0 for g in grads) \
                    and z.f.evaluate(candidate) == 0:
                report = SmoothnessReport("singular", "prime_search", candidate,
                                          {"primes": list(primes)})
                z.smoothness = report
                return report
    if any(modular_hits.values()):
        report = SmoothnessReport(
            "inconclusive", "prime_search", None,
            {"primes": list(primes),
             "modular_witnesses": {str(p): h[:3] for p, h in modular_hits.items() if h}})
    else:
        report = SmoothnessReport("smooth", "prime_search", None,
                                  {"primes": list(primes)})
    z.smoothness = report
    return report


def _eval_table(table: dict, point: Sequence[int], p: int) -> int:
    total = 0
    for exp, coeff in table.items():
        term = coeff
        for v, k in zip(point, exp):
            if k:
                if v == 0:
                    term = 0
                    break
                term = term * pow(v, k, p) % p
        total = (total + term) % p
    return total


# ---------------------------------------------------------------------------
# cone structures
# ---------------------------------------------------------------------------

class ConeStructure:
    """A coframe plus a hypersurface; the cone equation is F = f(A(x) y)."""

    def __init__(self, coframe: Coframe, z: Hypersurface):
        if coframe.n != z.n:
            raise ConeError(f"coframe dimension {coframe.n} does not match "
                            f"hypersurface dimension {z.n}")
        self.coframe = coframe
        self.z = z
        self.induced = induced_coframe(coframe)
        self.mu = self.induced.mu
        self.F = z.f.subst(list(self.mu))
        self._structure = None

    @property
    def n(self) -> int:
        return self.coframe.n

    @property
    def chart(self) -> Chart:
        return self.induced.chart

    def structure(self):
        if self._structure is None:
            self._structure = structure_function(self.coframe)
        return self._structure

    def __repr__(self):
        return f"ConeStructure(n={self.n}, degree={self.z.degree})"


def adapted_cone(cf: Coframe, z: Hypersurface) -> ConeStructure:
    """Build the cone structure presented by an adapted coframe.

    Runs smooth_check if it has not been run; a singular hypersurface is
    rejected, an inconclusive one is allowed but stays flagged.
    """
    if z.smoothness is None:
        smooth_check(z)
    if z.smoothness.verdict == "singular":
        raise ConeError(f"hypersurface is singular at {z.smoothness.witness}")
    return ConeStructure(cf, z)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_cone(cs: ConeStructure, count: int, seed, field=None) -> list[tuple[tuple, tuple]]:
    """Points (x, y) with F(x, y) = 0: exact over a prime field, or
    complex with |F| < 1e-12 after a Newton polish.

    field is a prime (default the first standard sampling prime) or the
    string "float".  The y fiber point is B(x) u for a sampled cone
    point u of Z, so the prime-field samples satisfy the cone equation
    identically.
    """
    if field is None:
        field = xi.DEFAULT_PRIMES[0]
    n = cs.n
    frame = dual_frame(cs.coframe)
    if field == "float":
        return _sample_cone_float(cs, frame, count, seed)
    p = int(field)
    upoints = xi.sample_variety_points_modp(cs.z.f, p, count, f"{seed}:u")
    out = []
    for idx, (u, grad) in enumerate(upoints):
        placed = False
        for attempt in range(200):
            rng = random.Random(f"{seed}:x{idx}:{attempt}")
            x = [rng.randrange(p) for _ in range(n)]
            try:
                bvals = [[frame.matrix[j][a].evaluate_mod(x, p) for a in range(n)]
                         for j in range(n)]
                avals = [[cs.coframe.a[k][j].evaluate_mod(x, p) for j in range(n)]
                         for k in range(n)]
            except PoleError:
                continue
            y = [sum(bvals[j][a] * u[a] for a in range(n)) % p for j in range(n)]
            mu = [sum(avals[k][j] * y[j] for j in range(n)) % p for k in range(n)]
            if tuple(mu) != tuple(u):
                raise ConeError("dual frame failed to invert the coframe "
                                "at a sample point")
            grad_y = [sum(grad[k] * avals[k][j] for k in range(n)) % p
                      for j in range(n)]
            if not any(grad_y):
                continue
            out.append((tuple(x), tuple(y)))
            placed = True
            break
        if not placed:
            raise ConeSamplingError(f"no pole-free chart point for sample {idx}")
    return out


def _sample_cone_float(cs: ConeStructure, frame, count: int, seed):
    n = cs.n
    upoints = xi.sample_variety_points_complex(cs.z.f, count, f"{seed}:u")
    xs = float_points(cs.coframe.chart, count, f"{seed}:x",
                      avoid=cs.coframe.pole_polynomials())
    grads = cs.z.gradient()
    out = []
    for idx, ((u, _), x) in enumerate(zip(upoints, xs)):
        xlist = list(x)
        bvals = np.array([[complex(frame.matrix[j][a].evaluate(xlist))
                           for a in range(n)] for j in range(n)])
        avals = np.array([[complex(cs.coframe.a[k][j].evaluate(xlist))
                           for j in range(n)] for k in range(n)])
        y = bvals @ np.array(u)
        # one Newton step for the fiber equation f(A(x) y) = 0
        for _ in range(2):
            mu = avals @ y
            fval = cs.z.f.evaluate(list(mu))
            if abs(fval) < 1e-13:
                break
            gradf = np.array([g.evaluate(list(mu)) for g in grads])
            gy = gradf @ avals
            denom = float(np.sum(np.abs(gy) ** 2))
            if denom < 1e-20:
                break
            y = y - fval / denom * np.conj(gy)
        mu = avals @ y
        if abs(cs.z.f.evaluate(list(mu))) > 1e-12:
            raise ConeSamplingError(f"Newton polish failed at sample {idx}")
        out.append((tuple(xlist), tuple(complex(v) for v in y)))
    return out


# ---------------------------------------------------------------------------
# dynamical checks
# ---------------------------------------------------------------------------

@dataclass
class TangencyReport:
    verdict: bool
    mode: str
    samples: int = 0
    residuals: list = field(default_factory=list)
    max_residual: object = 0
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict


@dataclass
class BracketReport:
    verdict: bool
    mode: str
    identity_exact: bool
    samples: int = 0
    residuals: list = field(default_factory=list)
    max_residual: object = 0
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict


@dataclass
class CharacteristicReport:
    verdict: bool
    backend: object
    samples: int = 0
    witness: tuple | None = None
    witness_residual: float | None = None
    failures: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict


def geodesic_tangency_check(cs: ConeStructure) -> TangencyReport:
    """gamma(F) must be the identically-zero rational function.

    This is exact and coframe-independent: the flow differentiates F =
    f(mu) only through mu, and mu is constant along the horizontal
    frame.  A nonzero result would mean a broken induced coframe, so the
    offending function is included in the report.
    """
    gamma = geodesic_flow(cs.induced)
    gamma_f = gamma.apply(cs.F)
    ok = gamma_f.is_zero()
    details = {}
    if not ok:
        details["gamma_F"] = gamma_f.to_string(cs.chart.variables)
    return TangencyReport(verdict=ok, mode="exact", details=details)


def _double_bracket_fields(cs: ConeStructure):
    """The n vector fields [[(D_lambda)_a, gamma], gamma] and gamma itself."""
    frames = tangent_dual_frame(cs.induced)
    gamma = geodesic_flow(cs.induced, frames)
    d_theta, d_lambda = frames
    fields = []
    for a in range(cs.n):
        first = d_lambda.vector(a).bracket(gamma)
        # Without a full multivariate gcd the bracket components come out
        # unreduced, and the second bracket drags those numerators along
        # at ~10x the cost.  The field equals (D_theta)_a, whose stored
        # form is small; swap representations only after checking the
        # equality exactly, so a broken bracket still fails downstream.
        hint = d_theta.vector(a)
        if all(f == h for f, h in zip(first.components, hint.components)):
            first = hint
        fields.append(first.bracket(gamma))
    return fields, gamma


def _bracket_identity_symbolic(cs: ConeStructure, db_fields) -> bool:
    """omega(d pi([[(D_lambda)_a, gamma], gamma])) + sum_b c^k_{ab} mu^b = 0
    as rational functions, for every a and k."""
    n = cs.n
    lift_map = list(range(n))
    struct = cs.structure()
    for a in range(n):
        comp = db_fields[a].components
        for k in range(n):
            acc = RatFunc.const(2 * n, 0)
            for j in range(n):
                if not comp[j].is_zero():
                    acc = acc + cs.induced.matrix[k][j] * comp[j]
            for b in range(n):
                cval = struct.get(k, a, b)
                if not cval.is_zero():
                    acc = acc + cval.lift(2 * n, lift_map) * cs.mu[b]
            if not acc.is_zero():
                return False
    return True


def double_bracket_check(cs: ConeStructure, samples: int = 50, seed=0,
                         mode: str = "exact", tol: float = 1e-8,
                         prime: int | None = None) -> BracketReport:
    """Check omega(d pi([[v-tilde, gamma], gamma])) = sigma(u, v) at cone
    samples, where u = A(x) y and v is fiber-tangent at u.

    v-tilde is the vertical lift of the constant extension of v through
    the lambda-frame; since the coefficients are constant, the double
    bracket is the matching constant combination of the per-axis fields
    [[(D_lambda)_a, gamma], gamma], which are computed once symbolically.
    The same identity is also verified once as rational functions
    (identity_exact).  Exact mode evaluates over a prime field on exact
    cone points; float mode uses complex samples and a relative
    tolerance.
    """
    n = cs.n
    db_fields, _ = _double_bracket_fields(cs)
    identity_exact = _bracket_identity_symbolic(cs, db_fields)
    struct = cs.structure()
    report = BracketReport(verdict=identity_exact, mode=mode,
                           identity_exact=identity_exact)

    if mode == "exact":
        p = prime or xi.DEFAULT_PRIMES[0]
        pts = sample_cone(cs, samples, f"{seed}:db", p)
        residuals = []
        for idx, (x, y) in enumerate(pts):
            point = list(x) + list(y)
            try:
                u = [m.evaluate_mod(point, p) for m in cs.mu]
                gradu = [g.evaluate_mod(list(u), p) for g in cs.z.gradient()]
                kernel = _modp.kernel_mod([gradu], n, p)
                v = kernel[idx % len(kernel)]
                lhs = _bracket_lhs_mod(cs, db_fields, point, v, p)
                cvals = {key: val.evaluate_mod(list(x), p)
                         for key, val in struct.components.items()}
                tensor = xi.HomTensor(n, cvals, p)
                rhs = tensor.apply(u, v)
            except PoleError:
                continue
            res = max((a - b) % p for a, b in zip(lhs, rhs)) if lhs != rhs else 0
            residuals.append(0 if lhs == rhs else 1)
            if lhs != rhs and "first_mismatch" not in report.details:
                report.details["first_mismatch"] = {"x": x, "lhs": lhs, "rhs": rhs,
                                                    "diff": res}
        report.samples = len(residuals)
        report.residuals = residuals
        report.max_residual = max(residuals, default=0)
        report.verdict = identity_exact and all(r == 0 for r in residuals)
        return report

    if mode != "float":
        raise ConeError(f"unknown bracket-check mode {mode!r}")
    pts = sample_cone(cs, samples, f"{seed}:db", "float")
    residuals = []
    for idx, (x, y) in enumerate(pts):
        point = [complex(v) for v in x] + list(y)
        u = np.array([m.evaluate(point) for m in cs.mu])
        gradu = np.array([g.evaluate(list(u)) for g in cs.z.gradient()])
        pivot = int(np.argmax(np.abs(gradu)))
        choices = [i for i in range(n) if i != pivot]
        i = choices[idx % len(choices)]
        v = np.zeros(n, dtype=complex)
        v[i] = 1.0
        v[pivot] = -gradu[i] / gradu[pivot]
        lhs = np.zeros(n, dtype=complex)
        for a in range(n):
            if v[a] == 0:
                continue
            comp = [c.evaluate(point) for c in db_fields[a].components[:n]]
            for k in range(n):
                row = sum(complex(cs.induced.matrix[k][j].evaluate(point)) * comp[j]
                          for j in range(n))
                lhs[k] += v[a] * row
        cvals = {key: complex(val.evaluate(list(x)))
                 for key, val in struct.components.items()}
        tensor = xi.HomTensor(n, cvals, "float")
        rhs = np.array(tensor.apply(list(u), list(v)))
        scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
        res = float(np.max(np.abs(lhs - rhs))) / scale
        residuals.append(res)
    report.samples = len(residuals)
    report.residuals = residuals
    report.max_residual = max(residuals, default=0.0)
    report.verdict = identity_exact and all(r < tol for r in residuals)
    return report


def _bracket_lhs_mod(cs: ConeStructure, db_fields, point, v, p: int) -> list[int]:
    n = cs.n
    out = [0] * n
    for a in range(n):
        if v[a] % p == 0:
            continue
        comp = [c.evaluate_mod(point, p) for c in db_fields[a].components[:n]]
        for k in range(n):
            row = sum(cs.induced.matrix[k][j].evaluate_mod(point, p) * comp[j]
                      for j in range(n)) % p
            out[k] = (out[k] + v[a] * row) % p
    return out


def characteristic_check(cs: ConeStructure, xiZ: xi.TensorSubspace,
                         samples: int = 25, seed=0,
                         tol: float = 1e-8) -> CharacteristicReport:
    """Evaluate the structure tensor at chart samples and test membership
    in Xi_Z; the necessary pointwise condition for the geodesic flow to
    define a characteristic connection.

    The witness residual for a failing sample is the exact Euclidean
    distance from the evaluated tensor to the contraction image Xi_V
    (converted to float).  When dim Xi_Z = dim Xi_V and Xi_V is
    contained in Xi_Z, that distance equals the distance to Xi_Z itself;
    otherwise it is reported under the same label but is only an upper
    bound certificate of nonmembership in Xi_V.
    """
    if xiZ.n != cs.n:
        raise ConeError("Xi_Z subspace has wrong dimension")
    struct = cs.structure()
    xs = sample_points(cs.coframe.chart, samples, f"{seed}:chi",
                       avoid=cs.coframe.pole_polynomials())
    xiv = xi.xi_V(cs.n)
    report = CharacteristicReport(verdict=True, backend=xiZ.field)
    for x in xs:
        tensor = xi.HomTensor(cs.n, struct.evaluate_at(x))
        if isinstance(xiZ.field, int):
            member = xi.membership(tensor.reduce_mod(xiZ.field), xiZ).member
        elif xiZ.field == "float":
            member = xi.membership(tensor.to_float(), xiZ, tol=tol).member
        else:
            member = xi.membership(tensor, xiZ).member
        report.samples += 1
        if not member:
            dist_sq = xi.membership(tensor, xiv).residual
            residual = math.sqrt(float(dist_sq))
            report.failures.append((x, residual))
            if report.witness is None:
                report.witness = x
                report.witness_residual = residual
    report.verdict = not report.failures
    report.details["residual_metric"] = \
        "euclidean distance to the contraction image"
    return report
