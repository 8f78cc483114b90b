"""Coframe calculus on a chart and on its tangent bundle.

A coframe is an invertible n-by-n matrix A of rational functions over a
chart, read as the vector-valued 1-form with components
omega^k = sum_j A[k][j] dx_j.  This module computes dual frames,
exterior derivatives, structure functions, the induced coframe
(theta, lambda) on the tangent chart, the geodesic flow, and exact
verification of the bracket identities tying them together.

Sign convention: with c defined by d omega^k = sum_{a<b} c^k_{ab}
omega^a wedge omega^b, the dual-frame fields satisfy
[D_a, D_b] = - sum_k c^k_{ab} D_k.  The minus sign is forced by the
concrete formulas and is asserted, not assumed, by the bracket checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from coneflat.funcfield import FuncFieldError, MultiPoly, PoleError, RatFunc, \
    parse_ratfunc


class ChartError(ValueError):
    """Malformed chart data."""


class SingularCoframeError(ValueError):
    """The coefficient matrix is not invertible where it must be."""


class SamplingError(RuntimeError):
    """Could not draw enough pole-free sample points."""


# ---------------------------------------------------------------------------
# charts and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """Rational-coordinate chart: dimension, variable names, base point.

    The dimension floor of 3 matches the range where the conformal
    closedness criterion is valid; nothing in this package targets
    surfaces.
    """

    n: int
    variables: tuple[str, ...]
    base_point: tuple[Fraction, ...]

    def __post_init__(self):
        if self.n < 3:
            raise ChartError(f"chart dimension must be at least 3, got {self.n}")
        if len(self.variables) != self.n:
            raise ChartError("variable list length does not match dimension")
        if len(set(self.variables)) != self.n:
            raise ChartError("variable names must be distinct")
        for name in self.variables:
            if not name.isidentifier():
                raise ChartError(f"variable name {name!r} is not an identifier")
        if len(self.base_point) != self.n:
            raise ChartError("base point length does not match dimension")
        object.__setattr__(self, "base_point",
                           tuple(Fraction(v) for v in self.base_point))

    @staticmethod
    def standard(n: int) -> Chart:
        return Chart(n, tuple(f"x{i + 1}" for i in range(n)), (Fraction(0),) * n)


def sample_points(chart: Chart, count: int, seed, avoid: Sequence[MultiPoly] = (),
                  max_tries_factor: int = 80) -> list[tuple[Fraction, ...]]:
    """Deterministic small-rational sample points avoiding given pole loci.

    Each candidate index gets its own generator seeded with
    f"{seed}:{index}", so accepted points do not depend on how many
    earlier candidates were rejected.
    """
    points: list[tuple[Fraction, ...]] = []
    index = 0
    limit = max(count * max_tries_factor, 32)
    while len(points) < count and index < limit:
        rng = random.Random(f"{seed}:{index}")
        index += 1
        candidate = tuple(Fraction(rng.randint(-10, 10), rng.randint(1, 10))
                          for _ in range(chart.n))
        if any(p.evaluate(candidate) == 0 for p in avoid):
            continue
        points.append(candidate)
    if len(points) < count:
        raise SamplingError(
            f"only {len(points)} of {count} sample points found after {limit} tries")
    return points


def float_points(chart: Chart, count: int, seed,
                 avoid: Sequence[MultiPoly] = (), box: float = 0.8,
                 min_abs: float = 1e-6) -> list[tuple[float, ...]]:
    """Float sample points in a box around the base point, poles rejected."""
    base = [float(v) for v in chart.base_point]
    points: list[tuple[float, ...]] = []
    index = 0
    limit = max(count * 80, 32)
    while len(points) < count and index < limit:
        rng = random.Random(f"{seed}:f{index}")
        index += 1
        candidate = tuple(b + rng.uniform(-box, box) for b in base)
        if any(abs(p.evaluate(candidate)) < min_abs for p in avoid):
            continue
        points.append(candidate)
    if len(points) < count:
        raise SamplingError(
            f"only {len(points)} of {count} float samples found after {limit} tries")
    return points


# ---------------------------------------------------------------------------
# matrices of rational functions
# ---------------------------------------------------------------------------

Matrix = tuple[tuple[RatFunc, ...], ...]


def _as_matrix(rows: Sequence[Sequence[RatFunc]]) -> Matrix:
    return tuple(tuple(row) for row in rows)


def mat_mul(a: Sequence[Sequence[RatFunc]], b: Sequence[Sequence[RatFunc]]) -> Matrix:
    inner = len(b)
    out = []
    for row in a:
        new_row = []
        for j in range(len(b[0])):
            acc = None
            for t in range(inner):
                if row[t].is_zero() or b[t][j].is_zero():
                    continue
                term = row[t] * b[t][j]
                acc = term if acc is None else acc + term
            if acc is None:
                acc = RatFunc.const(row[0].nvars, 0)
            new_row.append(acc)
        out.append(tuple(new_row))
    return tuple(out)


def mat_identity(n: int, nvars: int) -> Matrix:
    return tuple(tuple(RatFunc.const(nvars, 1 if i == j else 0)
                       for j in range(n)) for i in range(n))


def mat_det(a: Sequence[Sequence[RatFunc]]) -> RatFunc:
    n = len(a)
    nvars = a[0][0].nvars
    rows = [list(row) for row in a]
    det = RatFunc.const(nvars, 1)
    for col in range(n):
        pivot = None
        for i in range(col, n):
            if not rows[i][col].is_zero():
                # prefer constant pivots: cheaper eliminations
                if pivot is None or (rows[i][col].is_constant()
                                     and not rows[pivot][col].is_constant()):
                    pivot = i
                    if rows[i][col].is_constant():
                        break
        if pivot is None:
            return RatFunc.const(nvars, 0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        lead = rows[col][col]
        det = det * lead
        for i in range(col + 1, n):
            if rows[i][col].is_zero():
                continue
            factor = rows[i][col] / lead
            rows[i] = [rows[i][j] - factor * rows[col][j] for j in range(n)]
    return det


def mat_inverse(a: Sequence[Sequence[RatFunc]]) -> Matrix:
    """Exact inverse by Gauss-Jordan elimination over the function field."""
    n = len(a)
    nvars = a[0][0].nvars
    rows = [list(row) + [RatFunc.const(nvars, 1 if i == j else 0) for j in range(n)]
            for i, row in enumerate(a)]
    for col in range(n):
        pivot = None
        for i in range(col, n):
            if not rows[i][col].is_zero():
                if pivot is None or (rows[i][col].is_constant()
                                     and not rows[pivot][col].is_constant()):
                    pivot = i
                    if rows[i][col].is_constant():
                        break
        if pivot is None:
            raise SingularCoframeError("matrix of rational functions is singular")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [entry / lead for entry in rows[col]]
        for i in range(n):
            if i == col or rows[i][col].is_zero():
                continue
            factor = rows[i][col]
            rows[i] = [rows[i][j] - factor * rows[col][j] for j in range(2 * n)]
    return tuple(tuple(row[n:]) for row in rows)


def evaluate_matrix(a: Sequence[Sequence[RatFunc]], point):
    return [[entry.evaluate(point) for entry in row] for row in a]


def _fraction_mat_inverse(a: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(a)
    rows = [[Fraction(v) for v in row] + [Fraction(1 if i == j else 0) for j in range(n)]
            for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if rows[i][col] != 0), None)
        if pivot is None:
            raise SingularCoframeError("constant matrix is singular")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for i in range(n):
            if i != col and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[col])]
    return [row[n:] for row in rows]


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------

class Coframe:
    """Invertible matrix of rational functions over a chart.

    Row k holds the dx-coefficients of the k-th component 1-form.
    """

    def __init__(self, chart: Chart, a: Sequence[Sequence[RatFunc]]):
        if len(a) != chart.n or any(len(row) != chart.n for row in a):
            raise SingularCoframeError("coefficient matrix must be n by n")
        for row in a:
            for entry in row:
                if entry.nvars != chart.n:
                    raise SingularCoframeError(
                        "matrix entry variable count does not match the chart")
        self.chart = chart
        self.a = _as_matrix(a)
        self._det = mat_det(self.a)
        if self._det.is_zero():
            raise SingularCoframeError("coframe determinant vanishes identically")
        try:
            det_at_base = self._det.evaluate(chart.base_point)
        except PoleError:
            raise SingularCoframeError("coframe has a pole at the base point") from None
        if det_at_base == 0:
            raise SingularCoframeError("coframe determinant vanishes at the base point")

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def det(self) -> RatFunc:
        return self._det

    def pole_polynomials(self) -> list[MultiPoly]:
        """Polynomials whose zero loci must be avoided when evaluating
        the coframe, its dual, and everything derived from them."""
        seen: list[MultiPoly] = []

        def push(p: MultiPoly):
            if p.is_constant():
                return
            if all(p != q for q in seen):
                seen.append(p)

        for row in self.a:
            for entry in row:
                push(entry.den)
        push(self._det.num)
        push(self._det.den)
        return seen

    def scale(self, s: RatFunc) -> Coframe:
        """Coframe with every row multiplied by the scalar function s."""
        return Coframe(self.chart, [[s * entry for entry in row] for row in self.a])

    @staticmethod
    def identity(chart: Chart) -> Coframe:
        return Coframe(chart, mat_identity(chart.n, chart.n))

    def __repr__(self):
        return f"Coframe(n={self.n})"


@dataclass(frozen=True)
class FrameField:
    """Tuple of vector fields: column a holds the coefficients of the
    a-th field against the coordinate derivations."""

    chart: Chart
    matrix: Matrix   # matrix[j][a]: d/dx_j coefficient of vector a

    @property
    def nvec(self) -> int:
        return len(self.matrix[0])

    def vector(self, a: int) -> VectorField:
        return VectorField(self.chart, tuple(row[a] for row in self.matrix))

    def apply(self, a: int, f: RatFunc) -> RatFunc:
        """Directional derivative of f along the a-th frame vector."""
        acc = RatFunc.const(self.chart.n, 0)
        for j, row in enumerate(self.matrix):
            if not row[a].is_zero():
                acc = acc + row[a] * f.diff(j)
        return acc


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[RatFunc, ...]

    def apply(self, f: RatFunc) -> RatFunc:
        acc = RatFunc.const(self.chart.n, 0)
        for j, comp in enumerate(self.components):
            if not comp.is_zero():
                acc = acc + comp * f.diff(j)
        return acc

    def bracket(self, other: VectorField) -> VectorField:
        """Lie bracket [self, other], exactly."""
        n = self.chart.n
        comps = []
        for j in range(n):
            acc = RatFunc.const(n, 0)
            for i in range(n):
                if not self.components[i].is_zero():
                    acc = acc + self.components[i] * other.components[j].diff(i)
                if not other.components[i].is_zero():
                    acc = acc - other.components[i] * self.components[j].diff(i)
            comps.append(acc)
        return VectorField(self.chart, tuple(comps))

    def evaluate(self, point):
        return [comp.evaluate(point) for comp in self.components]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)


class VValuedForm2:
    """Vector-valued 2-form: component k is sum_{i<j} w[k,i,j] dx_i ^ dx_j."""

    def __init__(self, chart: Chart, components: dict[tuple[int, int, int], RatFunc]):
        self.chart = chart
        self.components = {key: val for key, val in components.items()
                           if not val.is_zero()}
        for (k, i, j) in self.components:
            if not i < j:
                raise FuncFieldError("2-form components must be stored with i < j")

    def get(self, k: int, i: int, j: int) -> RatFunc:
        if i == j:
            return RatFunc.const(self.chart.n, 0)
        if i < j:
            return self.components.get((k, i, j), RatFunc.const(self.chart.n, 0))
        return -self.components.get((k, j, i), RatFunc.const(self.chart.n, 0))

    def is_zero(self) -> bool:
        return not self.components

    def d_components(self) -> dict[tuple[int, int, int, int], RatFunc]:
        """Components of the exterior derivative, a vector-valued 3-form."""
        n = self.chart.n
        out = {}
        for k in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    for l in range(j + 1, n):
                        val = (self.get(k, j, l).diff(i)
                               - self.get(k, i, l).diff(j)
                               + self.get(k, i, j).diff(l))
                        if not val.is_zero():
                            out[(k, i, j, l)] = val
        return out


class StructureFunction:
    """The tensor c with d omega^k = sum_{a<b} c^k_{ab} omega^a ^ omega^b."""

    def __init__(self, chart: Chart, components: dict[tuple[int, int, int], RatFunc]):
        self.chart = chart
        self.components = {key: val for key, val in components.items()
                           if not val.is_zero()}
        for (k, a, b) in self.components:
            if not a < b:
                raise FuncFieldError("structure components must be stored with a < b")

    def get(self, k: int, a: int, b: int) -> RatFunc:
        if a == b:
            return RatFunc.const(self.chart.n, 0)
        if a < b:
            return self.components.get((k, a, b), RatFunc.const(self.chart.n, 0))
        return -self.components.get((k, b, a), RatFunc.const(self.chart.n, 0))

    def is_zero(self) -> bool:
        return not self.components

    def evaluate_at(self, point) -> dict[tuple[int, int, int], Fraction]:
        return {key: val.evaluate(point) for key, val in self.components.items()}

    def trace_covector(self) -> list[RatFunc]:
        """The covector xi with xi_j = (1/(1-n)) sum_k c^k_{kj}.

        When c lies in the image of the contraction map this inverts it
        symbolically; callers must verify c = iota(xi) afterwards.
        """
        n = self.chart.n
        scale = Fraction(1, 1 - n)
        out = []
        for j in range(n):
            acc = RatFunc.const(n, 0)
            for k in range(n):
                acc = acc + self.get(k, k, j)
            out.append(acc * scale)
        return out


# ---------------------------------------------------------------------------
# the basic operations
# ---------------------------------------------------------------------------

def dual_frame(cf: Coframe) -> FrameField:
    """Frame field B = A^{-1}: vector a is sum_j B[j][a] d/dx_j, with
    B A = A B = I exactly."""
    b = mat_inverse(cf.a)
    return FrameField(cf.chart, b)


def exterior_derivative(cf: Coframe) -> VValuedForm2:
    """d omega, componentwise: w^k_{ij} = d_i A[k][j] - d_j A[k][i]."""
    n = cf.n
    comps = {}
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                val = cf.a[k][j].diff(i) - cf.a[k][i].diff(j)
                if not val.is_zero():
                    comps[(k, i, j)] = val
    return VValuedForm2(cf.chart, comps)


def structure_function(cf: Coframe, dual: FrameField | None = None,
                       verify: bool = True) -> StructureFunction:
    """The unique c with d omega^k = sum_{a<b} c^k_{ab} omega^a ^ omega^b.

    Computed by contracting d omega with the dual frame; when verify is
    set (the default) the reconstruction through A is checked to be an
    exact identity, so a returned value is a proof.
    """
    n = cf.n
    w = exterior_derivative(cf)
    b = (dual or dual_frame(cf)).matrix
    comps: dict[tuple[int, int, int], RatFunc] = {}
    for (k, i, j), wk in w.components.items():
        for a in range(n):
            bia, bja = b[i][a], b[j][a]
            for bb in range(a + 1, n):
                wedge = bia * b[j][bb] - bja * b[i][bb]
                if wedge.is_zero():
                    continue
                key = (k, a, bb)
                term = wk * wedge
                if key in comps:
                    comps[key] = comps[key] + term
                else:
                    comps[key] = term
    sf = StructureFunction(cf.chart, comps)
    if verify:
        for k in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    acc = RatFunc.const(n, 0)
                    for (kk, a, bb), c in sf.components.items():
                        if kk != k:
                            continue
                        wedge = cf.a[a][i] * cf.a[bb][j] - cf.a[bb][i] * cf.a[a][j]
                        if not wedge.is_zero():
                            acc = acc + c * wedge
                    if acc != w.get(k, i, j):
                        raise FuncFieldError(
                            "structure function reconstruction failed; "
                            "the coframe data is inconsistent")
    return sf


@dataclass
class CheckReport:
    """Outcome of an identity check: exact verdict plus sampled residuals."""

    name: str
    passed: bool
    mode: str = "exact"
    max_residual: object = 0
    samples: int = 0
    seed: object = None
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "mode": self.mode,
            "max_residual": str(self.max_residual),
            "samples": self.samples,
            "seed": self.seed,
            "details": {k: (v if isinstance(v, (bool, int, str)) else str(v))
                        for k, v in self.details.items()},
        }


def frame_bracket_check(cf: Coframe, count: int = 10, seed=0,
                        mode: str = "exact", tol: float = 1e-8) -> CheckReport:
    """Verify [D_a, D_b] = - sum_k c^k_{ab} D_k for the dual frame.

    Exact mode proves the identity as rational functions and then
    evaluates the residual at sample points (all zero); float mode
    compares both sides numerically within tol.
    """
    n = cf.n
    frame = dual_frame(cf)
    sf = structure_function(cf, dual=frame)
    diffs = []
    for a in range(n):
        va = frame.vector(a)
        for b_idx in range(a + 1, n):
            bracket = va.bracket(frame.vector(b_idx))
            expected = []
            for j in range(n):
                acc = RatFunc.const(n, 0)
                for k in range(n):
                    c = sf.get(k, a, b_idx)
                    if not c.is_zero():
                        acc = acc - c * frame.matrix[j][k]
                expected.append(acc)
            diffs.append([bracket.components[j] - expected[j] for j in range(n)])
    exact_ok = all(d.is_zero() for row in diffs for d in row)

    avoid = cf.pole_polynomials()
    if mode == "exact":
        points = sample_points(cf.chart, count, seed, avoid)
        max_res = Fraction(0)
        for pt in points:
            for row in diffs:
                for d in row:
                    max_res = max(max_res, abs(d.evaluate(pt)))
        passed = exact_ok and max_res == 0
    else:
        points = float_points(cf.chart, count, seed, avoid)
        max_res = 0.0
        for pt in points:
            for row in diffs:
                for d in row:
                    max_res = max(max_res, abs(d.evaluate(pt)))
        passed = max_res < tol
    return CheckReport(name="frame_bracket", passed=passed, mode=mode,
                       max_residual=max_res, samples=len(points), seed=seed,
                       details={"exact_identity": exact_ok})


def check_d_lemma(cf: Coframe, f: RatFunc, dual: FrameField | None = None) -> bool:
    """df = (D f)-sharp omega: d_j f = sum_a (D_a f) A[a][j], exactly."""
    frame = dual or dual_frame(cf)
    n = cf.n
    directional = [frame.apply(a, f) for a in range(n)]
    for j in range(n):
        acc = RatFunc.const(n, 0)
        for a in range(n):
            if not directional[a].is_zero():
                acc = acc + directional[a] * cf.a[a][j]
        if acc != f.diff(j):
            return False
    return True


def scalar_one_form_d(chart: Chart, coeffs: Sequence[RatFunc]) -> dict[tuple[int, int], RatFunc]:
    """Exterior derivative of the scalar 1-form sum_j coeffs[j] dx_j."""
    n = chart.n
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            val = coeffs[j].diff(i) - coeffs[i].diff(j)
            if not val.is_zero():
                out[(i, j)] = val
    return out


def pullback_linear(cf: Coframe, lmat: Sequence[Sequence[Fraction]]) -> Coframe:
    """Pull the coframe back along the linear chart map x -> L x.

    The new base point is L^{-1} (old base), so the old base stays in
    the image; the structure function of the result at x equals the
    original structure function at L x.
    """
    n = cf.n
    linv = _fraction_mat_inverse(lmat)
    substituted = [RatFunc(MultiPoly(n, {
        tuple(1 if t == m else 0 for t in range(n)): Fraction(lmat[j][m])
        for m in range(n) if lmat[j][m] != 0})) if any(lmat[j]) else RatFunc.const(n, 0)
        for j in range(n)]
    new_rows = []
    for k in range(n):
        composed = [cf.a[k][j].subst(substituted) for j in range(n)]
        row = []
        for m in range(n):
            acc = RatFunc.const(n, 0)
            for j in range(n):
                if lmat[j][m] != 0 and not composed[j].is_zero():
                    acc = acc + composed[j] * Fraction(lmat[j][m])
            row.append(acc)
        new_rows.append(row)
    new_base = tuple(sum((Fraction(linv[i][j]) * cf.chart.base_point[j]
                          for j in range(n)), Fraction(0)) for i in range(n))
    chart = Chart(n, cf.chart.variables, new_base)
    return Coframe(chart, new_rows)


# ---------------------------------------------------------------------------
# induced coframe on the tangent chart
# ---------------------------------------------------------------------------

def _tangent_variable_names(chart: Chart) -> tuple[str, ...]:
    names = []
    for i in range(chart.n):
        candidate = f"y{i + 1}"
        while candidate in chart.variables or candidate in names:
            candidate = "_" + candidate
        names.append(candidate)
    return tuple(names)


@dataclass(frozen=True)
class InducedCoframe:
    """The pair (theta, lambda) on the tangent chart, as one 2n-matrix.

    Row k (k < n) is theta^k; row n+k is lambda^k = d mu^k where
    mu = A(x) y.  Columns run over (dx_1..dx_n, dy_1..dy_n).
    """

    base: Coframe
    chart: Chart
    matrix: Matrix
    mu: tuple[RatFunc, ...]

    @property
    def n(self) -> int:
        return self.base.n

    def as_coframe(self) -> Coframe:
        return Coframe(self.chart, self.matrix)

    def lift(self, h: RatFunc) -> RatFunc:
        """Pull a function on the base chart up to the tangent chart."""
        return h.lift(2 * self.n, list(range(self.n)))


def induced_coframe(cf: Coframe) -> InducedCoframe:
    n = cf.n
    ynames = _tangent_variable_names(cf.chart)
    chart = Chart(2 * n, cf.chart.variables + ynames,
                  cf.chart.base_point + (Fraction(0),) * n)
    lift_map = list(range(n))
    a2 = [[cf.a[k][j].lift(2 * n, lift_map) for j in range(n)] for k in range(n)]
    yvars = [RatFunc.var(2 * n, n + j) for j in range(n)]
    mu = []
    for k in range(n):
        acc = RatFunc.const(2 * n, 0)
        for j in range(n):
            if not a2[k][j].is_zero():
                acc = acc + a2[k][j] * yvars[j]
        mu.append(acc)
    zero = RatFunc.const(2 * n, 0)
    rows = []
    for k in range(n):
        rows.append(tuple(a2[k]) + tuple(zero for _ in range(n)))
    for k in range(n):
        # lambda^k = sum_l E[k][l] dx_l + sum_j A[k][j] dy_j,
        # E[k][l] = sum_j (d_l A[k][j]) y_j
        e_row = []
        for l in range(n):
            acc = RatFunc.const(2 * n, 0)
            for j in range(n):
                d = cf.a[k][j].diff(l)
                if not d.is_zero():
                    acc = acc + d.lift(2 * n, lift_map) * yvars[j]
            e_row.append(acc)
        rows.append(tuple(e_row) + tuple(a2[k]))
    return InducedCoframe(base=cf, chart=chart, matrix=tuple(rows), mu=tuple(mu))


def tangent_dual_frame(ic: InducedCoframe) -> tuple[FrameField, FrameField]:
    """Dual frames (D_theta, D_lambda) of the induced coframe.

    Assembled from the block inverse [[B, 0], [-B E B, B]] and verified
    against the combined matrix by exact multiplication.
    """
    n = ic.n
    lift_map = list(range(n))
    b_base = mat_inverse(ic.base.a)
    b2 = [[b_base[i][j].lift(2 * n, lift_map) for j in range(n)] for i in range(n)]
    e = [[ic.matrix[n + k][l] for l in range(n)] for k in range(n)]
    minus_beb = mat_mul(b2, mat_mul(e, b2))
    minus_beb = [[-entry for entry in row] for row in minus_beb]
    zero = RatFunc.const(2 * n, 0)

    d_theta = tuple(tuple(b2[j][a] for a in range(n)) for j in range(n)) + \
        tuple(tuple(minus_beb[j][a] for a in range(n)) for j in range(n))
    d_lambda = tuple(tuple(zero for _ in range(n)) for _ in range(n)) + \
        tuple(tuple(b2[j][a] for a in range(n)) for j in range(n))

    # the six pairing relations amount to M . [d_theta | d_lambda] = I_2n
    combined = tuple(tuple(d_theta[s] + d_lambda[s]) for s in range(2 * n))
    product = mat_mul(ic.matrix, combined)
    for i in range(2 * n):
        for j in range(2 * n):
            want = 1 if i == j else 0
            if product[i][j] != want:
                raise SingularCoframeError(
                    "induced dual frame failed the pairing identity")
    return (FrameField(ic.chart, d_theta), FrameField(ic.chart, d_lambda))


def check_dual_relations(ic: InducedCoframe,
                         frames: tuple[FrameField, FrameField] | None = None) -> dict[str, bool]:
    """The pairing relations of the induced pair, each checked exactly.

    The mu relations are recomputed by direct differentiation of mu,
    independently of the matrix identity used to build the frames.
    """
    n = ic.n
    d_theta, d_lambda = frames or tangent_dual_frame(ic)
    results: dict[str, bool] = {}

    def pairing(rows_offset: int, frame: FrameField) -> list[list[RatFunc]]:
        return [[sum((ic.matrix[rows_offset + k][s] * frame.matrix[s][a]
                      for s in range(2 * n) if not ic.matrix[rows_offset + k][s].is_zero()),
                     RatFunc.const(2 * n, 0))
                 for a in range(n)] for k in range(n)]

    theta_theta = pairing(0, d_theta)
    theta_lambda = pairing(0, d_lambda)
    lambda_theta = pairing(n, d_theta)
    lambda_lambda = pairing(n, d_lambda)
    results["theta_of_dtheta_is_identity"] = all(
        theta_theta[k][a] == (1 if k == a else 0) for k in range(n) for a in range(n))
    results["theta_of_dlambda_is_zero"] = all(
        theta_lambda[k][a].is_zero() for k in range(n) for a in range(n))
    results["lambda_of_dtheta_is_zero"] = all(
        lambda_theta[k][a].is_zero() for k in range(n) for a in range(n))
    results["lambda_of_dlambda_is_identity"] = all(
        lambda_lambda[k][a] == (1 if k == a else 0) for k in range(n) for a in range(n))

    # mu relations by direct differentiation
    results["dtheta_mu_is_zero"] = all(
        d_theta.apply(a, ic.mu[k]).is_zero() for k in range(n) for a in range(n))
    results["dlambda_mu_is_identity"] = all(
        d_lambda.apply(a, ic.mu[k]) == (1 if k == a else 0)
        for k in range(n) for a in range(n))

    # projection: the x-components of D_theta form the base dual frame
    b_base = mat_inverse(ic.base.a)
    lift_map = list(range(n))
    results["dpi_dtheta_is_dual_frame"] = all(
        d_theta.matrix[j][a] == b_base[j][a].lift(2 * n, lift_map)
        for j in range(n) for a in range(n))
    results["dpi_dlambda_is_zero"] = all(
        d_lambda.matrix[j][a].is_zero() for j in range(n) for a in range(n))
    return results


def geodesic_flow(cf_or_ic, frames=None) -> VectorField:
    """The vector field gamma = sum_a mu^a (D_theta)_a on the tangent chart.

    Its dx-components are exactly the fiber coordinates y, which is the
    statement that gamma projects to the tautological vector.
    """
    ic = cf_or_ic if isinstance(cf_or_ic, InducedCoframe) else induced_coframe(cf_or_ic)
    d_theta = (frames or tangent_dual_frame(ic))[0]
    n = ic.n
    comps = []
    for s in range(2 * n):
        acc = RatFunc.const(2 * n, 0)
        for a in range(n):
            if not d_theta.matrix[s][a].is_zero() and not ic.mu[a].is_zero():
                acc = acc + ic.mu[a] * d_theta.matrix[s][a]
        comps.append(acc)
    return VectorField(ic.chart, tuple(comps))


def check_geodesic_identities(ic: InducedCoframe,
                              frames: tuple[FrameField, FrameField] | None = None) -> dict[str, bool]:
    """Exact checks: gamma projects to the tautological vector and
    [D_lambda, gamma] = D_theta."""
    n = ic.n
    d_theta, d_lambda = frames or tangent_dual_frame(ic)
    gamma = geodesic_flow(ic, frames=(d_theta, d_lambda))
    results: dict[str, bool] = {}
    results["dpi_gamma_is_tautological"] = all(
        gamma.components[j] == RatFunc.var(2 * n, n + j) for j in range(n))
    ok = True
    for a in range(n):
        br = d_lambda.vector(a).bracket(gamma)
        for s in range(2 * n):
            if br.components[s] != d_theta.matrix[s][a]:
                ok = False
    results["bracket_dlambda_gamma_is_dtheta"] = ok
    return results


def check_tangent_frame_brackets(ic: InducedCoframe,
                                 frames: tuple[FrameField, FrameField] | None = None,
                                 base_sf: StructureFunction | None = None) -> dict[str, bool]:
    """Bracket table of the induced frames: the lambda-lambda and
    theta-lambda brackets vanish and the theta-theta brackets reproduce
    the pulled-back structure function (with the bracket sign)."""
    n = ic.n
    d_theta, d_lambda = frames or tangent_dual_frame(ic)
    sf = base_sf or structure_function(ic.base)
    lift_map = list(range(n))
    results = {"lambda_lambda_brackets_vanish": True,
               "theta_lambda_brackets_vanish": True,
               "theta_theta_brackets_match_structure": True}
    for a in range(n):
        for b in range(a + 1, n):
            if not d_lambda.vector(a).bracket(d_lambda.vector(b)).is_zero():
                results["lambda_lambda_brackets_vanish"] = False
    for a in range(n):
        for b in range(n):
            if not d_theta.vector(a).bracket(d_lambda.vector(b)).is_zero():
                results["theta_lambda_brackets_vanish"] = False
    for a in range(n):
        for b in range(a + 1, n):
            br = d_theta.vector(a).bracket(d_theta.vector(b))
            for s in range(2 * n):
                acc = RatFunc.const(2 * n, 0)
                for k in range(n):
                    c = sf.get(k, a, b)
                    if not c.is_zero():
                        acc = acc - c.lift(2 * n, lift_map) * d_theta.matrix[s][k]
                if br.components[s] != acc:
                    results["theta_theta_brackets_match_structure"] = False
    return results


def verify_induced_structure(cf: Coframe) -> CheckReport:
    """Structure function of the induced pair: vanishes outside the
    theta-theta block and that block is the pullback of the base one."""
    n = cf.n
    ic = induced_coframe(cf)
    frames = tangent_dual_frame(ic)
    combined_dual = FrameField(ic.chart, tuple(
        tuple(frames[0].matrix[s] + frames[1].matrix[s]) for s in range(2 * n)))
    big = structure_function(ic.as_coframe(), dual=combined_dual)
    base_sf = structure_function(cf)
    lift_map = list(range(n))
    block_ok = True
    for (k, a, b) in big.components:
        if k >= n or a >= n or b >= n:
            block_ok = False
    pullback_ok = True
    for k in range(n):
        for a in range(n):
            for b in range(a + 1, n):
                if big.get(k, a, b) != base_sf.get(k, a, b).lift(2 * n, lift_map):
                    pullback_ok = False
    return CheckReport(name="induced_structure", passed=block_ok and pullback_ok,
                       details={"vanishes_off_theta_block": block_ok,
                                "theta_block_is_pullback": pullback_ok})


# ---------------------------------------------------------------------------
# random coframes for property tests
# ---------------------------------------------------------------------------

def _random_linear(nvars: int, rng: random.Random, constant=None) -> MultiPoly:
    terms: dict[tuple[int, ...], Fraction] = {}
    c0 = Fraction(rng.randint(-2, 2)) if constant is None else Fraction(constant)
    if c0:
        terms[(0,) * nvars] = c0
    for i in range(nvars):
        c = rng.randint(-1, 1)
        if c:
            exp = tuple(1 if t == i else 0 for t in range(nvars))
            terms[exp] = Fraction(c)
    return MultiPoly(nvars, terms)


def random_polynomial_coframe(chart: Chart, rng: random.Random,
                              unimodular: bool = True) -> Coframe:
    """Random coframe with polynomial entries of degree at most 2.

    Built as L U with unit-triangular linear factors; in the unimodular
    case the determinant is 1, otherwise the U diagonal carries linear
    factors that are nonzero at the base point, so the dual frame has
    honest denominators.
    """
    n = chart.n
    zero = MultiPoly.zero(n)
    lmat = [[zero for _ in range(n)] for _ in range(n)]
    umat = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        lmat[i][i] = MultiPoly.one(n)
        for j in range(i):
            lmat[i][j] = _random_linear(n, rng)
        for j in range(i + 1, n):
            umat[i][j] = _random_linear(n, rng)
        if unimodular:
            umat[i][i] = MultiPoly.one(n)
        else:
            while True:
                candidate = _random_linear(n, rng, constant=1)
                if candidate.evaluate(chart.base_point) != 0:
                    umat[i][i] = candidate
                    break
    rows = []
    for k in range(n):
        row = []
        for j in range(n):
            acc = MultiPoly.zero(n)
            for m in range(n):
                if not lmat[k][m].is_zero() and not umat[m][j].is_zero():
                    acc = acc + lmat[k][m] * umat[m][j]
            row.append(RatFunc(acc))
        rows.append(row)
    return Coframe(chart, rows)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def coframe_to_json(cf: Coframe) -> dict:
    """Plain-dict form: {"n", "variables", "A" (strings), "base_point"}."""
    names = cf.chart.variables
    return {"n": cf.n,
            "variables": list(names),
            "A": [[entry.to_string(names) for entry in row] for row in cf.a],
            "base_point": [str(v) for v in cf.chart.base_point]}


def coframe_from_json(data: dict) -> Coframe:
    try:
        n = int(data["n"])
        variables = [str(v) for v in data["variables"]]
        base = tuple(Fraction(str(v)) for v in data["base_point"])
        rows_text = data["A"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ChartError(f"malformed coframe data: {exc}") from None
    chart = Chart(n, tuple(variables), base)
    if len(rows_text) != n or any(len(row) != n for row in rows_text):
        raise ChartError("coefficient matrix must be n by n")
    rows = [[parse_ratfunc(str(entry), variables) for entry in row]
            for row in rows_text]
    return Coframe(chart, rows)
